//! Pass/fail checks of the scheme against its closed-form predictions and
//! stated performance targets.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::{distortion_approx, predicted_loss, bit_rule_bits, Dims, ScalingInputs};
use crate::channel::{drop_users, realize_channel, SystemConfig};
use crate::codebook::build_percell_codebooks;
use crate::error::{Error, Result};
use crate::feedback::{normalize_and_decompose, reconstruct, search_exhaustive, search_isa};
use crate::metrics::concentration_check;
use crate::numerics::{haar_orthonormal, RngStream};
use crate::precoding::{bd_precoders, relative_leakage, zero_forcing_residual};

use super::csv::format_sig;
use super::run::{run_experiment, ExperimentResult};
use super::spec::{BitMode, ExperimentSpec, Scheme};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub criterion: String,
    pub pass: bool,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, value: f64, criterion: impl Into<String>, pass: bool) -> Self {
        Check {
            suite,
            name: name.into(),
            value,
            criterion: criterion.into(),
            pass,
        }
    }

    /// `PASS suite/name value=... (criterion)`.
    pub fn line(&self) -> String {
        format!(
            "{} {}/{} value={} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            format_sig(self.value),
            self.criterion
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    IsaEquivalence,
    ZeroForcing,
    Distortion,
    Concentration,
    Baselines,
    Tradeoff,
    Scaling,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::IsaEquivalence,
        Suite::ZeroForcing,
        Suite::Distortion,
        Suite::Concentration,
        Suite::Baselines,
        Suite::Tradeoff,
        Suite::Scaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::IsaEquivalence => "isa-equivalence",
            Suite::ZeroForcing => "zero-forcing",
            Suite::Distortion => "distortion",
            Suite::Concentration => "concentration",
            Suite::Baselines => "baselines",
            Suite::Tradeoff => "tradeoff",
            Suite::Scaling => "scaling",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Sample sizes for the Monte Carlo suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub isa_instances: usize,
    pub bd_instances: usize,
    pub distortion_sources: usize,
    pub concentration_samples: usize,
    pub baseline_trials: usize,
    pub tradeoff_trials: usize,
    pub scaled_trials: usize,
    pub linear_trials: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            isa_instances: 500,
            bd_instances: 1000,
            distortion_sources: 2000,
            concentration_samples: 10_000,
            baseline_trials: 1000,
            tradeoff_trials: 1000,
            scaled_trials: 500,
            linear_trials: 500,
        }
    }
}

impl Budget {
    /// Every Monte Carlo size replaced by `n`.
    pub fn uniform(n: usize) -> Self {
        Budget {
            isa_instances: n,
            bd_instances: n,
            distortion_sources: n,
            concentration_samples: n.max(1000),
            baseline_trials: n,
            tradeoff_trials: n,
            scaled_trials: n,
            linear_trials: n,
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64, budget: &Budget, workers: usize) -> Result<Vec<Check>> {
    match suite {
        Suite::IsaEquivalence => isa_equivalence(seed, budget.isa_instances),
        Suite::ZeroForcing => zero_forcing(seed, budget.bd_instances),
        Suite::Distortion => distortion_slope(seed, budget.distortion_sources),
        Suite::Concentration => Ok(concentration(seed, budget.concentration_samples)),
        Suite::Baselines => baselines(seed, budget.baseline_trials, workers),
        Suite::Tradeoff => tradeoff(seed, budget.tradeoff_trials, workers),
        Suite::Scaling => {
            let mut checks = bit_rule_inversion();
            checks.extend(scaled_feedback_gap(seed, budget.scaled_trials, workers)?);
            checks.extend(linear_in_bits(seed, budget.linear_trials, workers)?);
            Ok(checks)
        }
    }
}

pub fn render_checks(checks: &[Check]) -> String {
    let mut out = String::from("suite,check,value,criterion,pass\n");
    for c in checks {
        let _ = writeln!(
            out,
            "{},{},{},\"{}\",{}",
            c.suite,
            c.name,
            format_sig(c.value),
            c.criterion.replace('"', "'"),
            c.pass
        );
    }
    out
}

pub fn write_checks_csv(checks: &[Check], path: &Path) -> Result<()> {
    fs::write(path, render_checks(checks)).map_err(|e| Error::io(path, e))
}

/// Full-radius ISA must reproduce the exhaustive tuple on every instance.
pub fn isa_equivalence(seed: u64, instances: usize) -> Result<Vec<Check>> {
    let cfg = SystemConfig::new(4, 3, 2, 1).with_bits_per_cell(4);
    let full = vec![(cfg.n_r as f64).sqrt(); cfg.n_bs];
    let mut matches = 0;
    for i in 0..instances {
        let mut rng = RngStream::new(seed, 10, i as u64);
        let cbs = build_percell_codebooks(&cfg, &mut rng);
        let pos = drop_users(&cfg, &mut rng)?;
        let real = realize_channel(&cfg, &pos, &mut rng)?;
        let norm = normalize_and_decompose(&real.users[0], 0, cfg.n_t)?;
        let ex = search_exhaustive(&norm.v_w, &cbs)?;
        let isa = search_isa(&norm.v_w, &norm.centroids, &cbs, &full)?;
        matches += usize::from(ex.indices == isa.indices);
    }
    let frac = matches as f64 / instances.max(1) as f64;
    Ok(vec![Check::new(
        "isa-equivalence",
        "full-radius-tuple-match",
        frac,
        format!("all {instances} tuples identical"),
        matches == instances,
    )])
}

/// Precoders built from quantised CSI null every other user's estimate.
pub fn zero_forcing(seed: u64, instances: usize) -> Result<Vec<Check>> {
    let cfg = SystemConfig::new(4, 3, 2, 6).with_bits_per_cell(4);
    let (mut worst_abs, mut worst_rel) = (0.0f64, 0.0f64);
    for i in 0..instances {
        let mut rng = RngStream::new(seed, 11, i as u64);
        let cbs = build_percell_codebooks(&cfg, &mut rng);
        let pos = drop_users(&cfg, &mut rng)?;
        let real = realize_channel(&cfg, &pos, &mut rng)?;
        let mut h_hat = Vec::with_capacity(cfg.n_users);
        for (k, u) in real.users.iter().enumerate() {
            let norm = normalize_and_decompose(u, k, cfg.n_t)?;
            let report = search_exhaustive(&norm.v_w, &cbs)?;
            h_hat.push(reconstruct(&report, &cbs, u)?.h_hat);
        }
        let set = bd_precoders(&h_hat, 1.0)?;
        worst_abs = worst_abs.max(zero_forcing_residual(&h_hat, &set.w));
        worst_rel = worst_rel.max(relative_leakage(&h_hat, &set.w));
    }
    Ok(vec![
        Check::new(
            "zero-forcing",
            "max-residual",
            worst_abs,
            "max ||H_j W_k|| / max(1, ||H_j||) <= 1e-8",
            worst_abs <= 1e-8,
        ),
        Check::new(
            "zero-forcing",
            "max-relative-leakage",
            worst_rel,
            "max ||H_j W_k|| / ||H_j|| <= 1e-8",
            worst_rel <= 1e-8,
        ),
    ])
}

/// Least-squares slope, intercept and R² of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Mean per-cell exhaustive distortion of isotropic sources with fresh codebooks.
pub fn mean_product_distortion(dims: Dims, bits: u32, sources: usize, seed: u64) -> Result<f64> {
    let cfg = SystemConfig::new(dims.n_t, dims.n_bs, dims.n_r, 1).with_total_bits(bits);
    let mut sum = 0.0;
    for i in 0..sources {
        let mut rng = RngStream::new(seed, 12 + (u64::from(bits) << 8), i as u64);
        let cbs = build_percell_codebooks(&cfg, &mut rng);
        let v = haar_orthonormal(cfg.total_tx(), cfg.n_r, &mut rng);
        sum += search_exhaustive(&v, &cbs)?.distortion;
    }
    Ok(sum / sources as f64)
}

pub fn distortion_slope(seed: u64, sources: usize) -> Result<Vec<Check>> {
    let dims = Dims::new(4, 3, 2, 1);
    let bits = [8u32, 12, 16, 20];
    let means = bits
        .iter()
        .map(|&b| mean_product_distortion(dims, b, sources, seed))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
    let y: Vec<f64> = means.iter().map(|m| m.log2()).collect();
    let (slope, _, _) = linear_fit(&x, &y);
    let target = -1.0 / dims.alpha();
    let monotone = means.windows(2).all(|w| w[1] < w[0]);
    let at12 = means[1];
    let closed = distortion_approx(12.0, dims)?.simplified;
    Ok(vec![
        Check::new(
            "distortion",
            "log2-slope",
            slope,
            format!("within 30% of {}", format_sig(target)),
            (slope - target).abs() <= 0.3 * target.abs(),
        ),
        Check::new(
            "distortion",
            "monotone-means",
            f64::from(u8::from(monotone)),
            format!("means {:?} strictly decreasing", means.iter().map(|m| format_sig(*m)).collect::<Vec<_>>()),
            monotone,
        ),
        Check::new(
            "distortion",
            "mean-at-12-bits",
            at12,
            format!("in [0.9, 1.7] around {}", format_sig(closed)),
            (0.9..=1.7).contains(&at12),
        ),
    ])
}

pub fn concentration(seed: u64, samples: usize) -> Vec<Check> {
    let eps = 0.05;
    let mut checks = Vec::new();
    let mut prev = f64::INFINITY;
    let mut decreasing = true;
    for (i, n_t) in [16usize, 64, 256].into_iter().enumerate() {
        let mut rng = RngStream::new(seed, 13, i as u64);
        let c = concentration_check(n_t, 3, samples, eps, &mut rng);
        let limit = c.chebyshev_bound + 3.0 * c.std_error;
        checks.push(Check::new(
            "concentration",
            format!("exceedance-nt{n_t}"),
            c.exceedance,
            format!("<= Chebyshev {} + 3 SE", format_sig(c.chebyshev_bound)),
            c.exceedance <= limit,
        ));
        decreasing &= c.exceedance < prev;
        prev = c.exceedance;
    }
    checks.push(Check::new(
        "concentration",
        "decreasing-in-nt",
        f64::from(u8::from(decreasing)),
        "exceedance strictly decreasing over n_t = 16, 64, 256",
        decreasing,
    ));
    checks
}

fn spec(name: &str, base: SystemConfig, snr: Vec<f64>, schemes: Vec<Scheme>) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        base,
        snr_grid_db: snr,
        schemes,
        delta_grid: None,
        bit_mode: BitMode::Fixed,
        output_path: String::new(),
    }
}

fn rate(r: &ExperimentResult, snr: f64, scheme: &str) -> Result<f64> {
    r.row(snr, scheme)
        .map(|row| row.rate_mean)
        .ok_or_else(|| Error::Aborted(format!("missing row {scheme} at {snr} dB")))
}

/// Per-cell feedback against the joint-cell codebook and both Givens baselines.
pub fn baselines_spec(seed: u64, trials: usize) -> ExperimentSpec {
    let mut base = SystemConfig::new(4, 3, 2, 6).with_bits_per_cell(4);
    base.trials = trials;
    base.seed = seed;
    spec(
        "baselines",
        base,
        vec![10.0, 20.0, 30.0],
        vec![Scheme::PerCellExhaustive, Scheme::JointCell, Scheme::Givens4, Scheme::Givens8],
    )
}

pub fn baselines(seed: u64, trials: usize, workers: usize) -> Result<Vec<Check>> {
    let s = baselines_spec(seed, trials);
    let r = run_experiment(&s, workers)?;
    let mut checks = Vec::new();
    for &snr in &s.snr_grid_db {
        let pc = rate(&r, snr, "percell-exhaustive")?;
        let ratio = pc / rate(&r, snr, "jointcell")?;
        checks.push(Check::new(
            "baselines",
            format!("percell-over-jointcell@{snr}dB"),
            ratio,
            "in [0.90, 1.02]",
            (0.90..=1.02).contains(&ratio),
        ));
        for g in ["givens-4", "givens-8"] {
            let gr = rate(&r, snr, g)?;
            checks.push(Check::new(
                "baselines",
                format!("percell-minus-{g}@{snr}dB"),
                pc - gr,
                "> 0",
                pc > gr,
            ));
        }
    }
    Ok(checks)
}

pub fn tradeoff_spec(seed: u64, trials: usize) -> ExperimentSpec {
    let mut s = baselines_spec(seed, trials);
    s.name = "tradeoff".into();
    s.schemes = vec![Scheme::PerCellExhaustive, Scheme::PerCellIsa];
    s.delta_grid = Some(vec![0.8, 0.9, 1.0]);
    s
}

/// ISA rate relative to exhaustive search and its relative complexity, pooled over the SNR grid.
pub fn tradeoff(seed: u64, trials: usize, workers: usize) -> Result<Vec<Check>> {
    let s = tradeoff_spec(seed, trials);
    let r = run_experiment(&s, workers)?;
    let ex: f64 = s.snr_grid_db.iter().map(|&snr| rate(&r, snr, "percell-exhaustive")).sum::<Result<f64>>()?;
    let mut checks = Vec::new();
    for (delta, min_ratio, max_cplx) in [(0.9, 0.85, 0.05), (1.0, 0.92, 0.2)] {
        let label = format!("percell-isa@{delta}");
        let isa: f64 = s.snr_grid_db.iter().map(|&snr| rate(&r, snr, &label)).sum::<Result<f64>>()?;
        let rows = r.series(&label);
        let cplx = rows.iter().map(|row| row.rel_complexity).sum::<f64>() / rows.len() as f64;
        checks.push(Check::new(
            "tradeoff",
            format!("rate-fraction@delta{delta}"),
            isa / ex,
            format!(">= {min_ratio}"),
            isa / ex >= min_ratio,
        ));
        checks.push(Check::new(
            "tradeoff",
            format!("relative-complexity@delta{delta}"),
            cplx,
            format!("<= {max_cplx}"),
            cplx <= max_cplx,
        ));
    }
    Ok(checks)
}

/// The bit rule composed with the loss predictor keeps the predicted loss within ε.
pub fn bit_rule_inversion() -> Vec<Check> {
    let dims = Dims::new(8, 3, 2, 12);
    let mut worst = 0.0f64;
    for i in 0..=50 {
        let rho_g = 10f64.powf(1.0 + 5.0 * f64::from(i) / 50.0);
        let si = ScalingInputs { rho: rho_g, g_sum: 1.0, b_k: 0.0, epsilon: 1.0, dims };
        let b = bit_rule_bits(&si).expect("valid inputs");
        let loss = predicted_loss(&ScalingInputs { b_k: f64::from(b), ..si }).expect("valid inputs");
        worst = worst.max(loss);
    }
    vec![Check::new(
        "scaling",
        "bit-rule-predicted-loss",
        worst,
        "<= epsilon + 0.01 for rho*g_sum in [1e1, 1e6]",
        worst <= 1.01,
    )]
}

pub fn scaled_spec(seed: u64, trials: usize) -> ExperimentSpec {
    let mut base = SystemConfig::new(8, 3, 2, 12).with_bits_per_cell(8);
    base.trials = trials;
    base.seed = seed;
    let mut s = spec(
        "scaled-feedback",
        base,
        ExperimentSpec::default_snr_grid(),
        vec![Scheme::Gcsi, Scheme::PerCellExhaustive],
    );
    s.bit_mode = BitMode::Scaled { epsilon: 1.0, cap_bits: 24 };
    s
}

/// Gap between perfect-CSI and scaled-feedback rates across the SNR grid.
pub fn scaled_feedback_gap(seed: u64, trials: usize, workers: usize) -> Result<Vec<Check>> {
    let s = scaled_spec(seed, trials);
    let r = run_experiment(&s, workers)?;
    let rows = r.series("percell-exhaustive");
    let gaps: Vec<f64> = rows.iter().map(|row| row.loss_mean).collect();
    let n = gaps.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    let std = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let bits: Vec<String> = rows.iter().map(|row| format_sig(row.bits)).collect();
    Ok(vec![
        Check::new(
            "scaling",
            "gap-std-across-snr",
            std,
            format!("< 0.5 (mean bits per point {})", bits.join(" ")),
            std < 0.5,
        ),
        Check::new("scaling", "gap-mean", mean, "in [0.1, 1.5]", (0.1..=1.5).contains(&mean)),
    ])
}

pub fn linear_spec(seed: u64, trials: usize, dims: Dims, bits_per_bs: u32) -> ExperimentSpec {
    let mut base = SystemConfig::new(dims.n_t, dims.n_bs, dims.n_r, dims.n_users).with_bits_per_cell(bits_per_bs);
    base.trials = trials;
    base.seed = seed;
    spec(
        &format!("linear-{}-{}-{}-{}-b{bits_per_bs}", dims.n_t, dims.n_bs, dims.n_r, dims.n_users),
        base,
        vec![40.0],
        vec![Scheme::PerCellExhaustive],
    )
}

/// Interference-limited rate against bits per BS at 40 dB.
pub fn linear_in_bits(seed: u64, trials: usize, workers: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for dims in [Dims::new(4, 3, 2, 6), Dims::new(8, 3, 2, 12)] {
        let x = [2.0, 4.0, 6.0, 8.0];
        let y = x
            .iter()
            .map(|&b| {
                let r = run_experiment(&linear_spec(seed, trials, dims, b as u32), workers)?;
                rate(&r, 40.0, "percell-exhaustive")
            })
            .collect::<Result<Vec<_>>>()?;
        let (slope, _, r2) = linear_fit(&x, &y);
        let tag = format!("({},{},{},{})", dims.n_t, dims.n_bs, dims.n_r, dims.n_users);
        checks.push(Check::new("scaling", format!("linear-r2{tag}"), r2, ">= 0.9", r2 >= 0.9));
        checks.push(Check::new("scaling", format!("linear-slope{tag}"), slope, "> 0", slope > 0.0));
    }
    Ok(checks)
}
