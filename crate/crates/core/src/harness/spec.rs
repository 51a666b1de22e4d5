use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::SystemConfig;
use crate::error::{Error, Result};

/// Largest joint-cell budget; the codebook is stored explicitly.
pub const MAX_JOINT_BITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "gcsi")]
    Gcsi,
    #[serde(rename = "percell-exhaustive")]
    PerCellExhaustive,
    #[serde(rename = "percell-isa")]
    PerCellIsa,
    #[serde(rename = "jointcell")]
    JointCell,
    #[serde(rename = "givens-4")]
    Givens4,
    #[serde(rename = "givens-8")]
    Givens8,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Gcsi,
        Scheme::PerCellExhaustive,
        Scheme::PerCellIsa,
        Scheme::JointCell,
        Scheme::Givens4,
        Scheme::Givens8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gcsi => "gcsi",
            Scheme::PerCellExhaustive => "percell-exhaustive",
            Scheme::PerCellIsa => "percell-isa",
            Scheme::JointCell => "jointcell",
            Scheme::Givens4 => "givens-4",
            Scheme::Givens8 => "givens-8",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|s| s.name() == name)
    }
}

fn default_cap_bits() -> u32 {
    24
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BitMode {
    /// Budgets from `base.bits_per_cell`.
    #[default]
    Fixed,
    /// Per-user budget from the loss-targeting bit rule at each SNR point,
    /// capped at `cap_bits` in total.
    Scaled {
        epsilon: f64,
        #[serde(default = "default_cap_bits")]
        cap_bits: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub base: SystemConfig,
    /// Cell-edge interference-free SNR points in dB.
    pub snr_grid_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    /// Sub-codebook radii to sweep for `percell-isa`; `base.delta` otherwise.
    #[serde(default)]
    pub delta_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub bit_mode: BitMode,
    pub output_path: String,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: ExperimentSpec = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises")
    }

    /// Default SNR grid: 0 to 35 dB in 5 dB steps.
    pub fn default_snr_grid() -> Vec<f64> {
        (0..8).map(|i| 5.0 * f64::from(i)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        self.base.validate()?;
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_grid_db must be a non-empty list of finite values".into());
        }
        if self.schemes.is_empty() {
            return bad("schemes must not be empty".into());
        }
        let mut sorted = self.schemes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.schemes.len() {
            return bad("schemes contains duplicates".into());
        }
        if let Some(grid) = &self.delta_grid {
            let max = (self.base.n_r as f64).sqrt();
            if grid.is_empty() || grid.iter().any(|&d| !(d > 0.0) || d > max + 1e-12) {
                return bad(format!("delta_grid entries must lie in (0, {max:.4}]"));
            }
        }
        if let BitMode::Scaled { epsilon, cap_bits } = self.bit_mode {
            if !(epsilon > 0.0) || !epsilon.is_finite() {
                return bad("epsilon must be positive".into());
            }
            if cap_bits == 0 || cap_bits > 24 {
                return bad("cap_bits must lie in 1..=24".into());
            }
        }
        if self.schemes.contains(&Scheme::JointCell) && self.max_joint_bits() > MAX_JOINT_BITS {
            return bad(format!("jointcell budgets above {MAX_JOINT_BITS} bits are not supported"));
        }
        Ok(())
    }

    fn max_joint_bits(&self) -> u32 {
        match self.bit_mode {
            BitMode::Fixed => self.base.total_bits(),
            BitMode::Scaled { cap_bits, .. } => cap_bits,
        }
    }
}
