//! Network MIMO channel generation: hexagonal BS layout, user drops, path
//! loss, lognormal shadowing and Rayleigh fading.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{complex_gaussian_matrix, ComplexMatrix};

const MAX_DROP_ATTEMPTS: usize = 100_000;

/// Whether codebooks are drawn once per experiment or afresh for each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookRedraw {
    #[default]
    PerExperiment,
    PerTrial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Antennas per BS.
    pub n_t: usize,
    /// Number of cooperating BSs.
    pub n_bs: usize,
    /// Antennas per MS.
    pub n_r: usize,
    /// Active users.
    pub n_users: usize,
    /// Maximum transmit power of one BS (W).
    pub p_max: f64,
    /// Noise power σ² (W).
    pub noise_power: f64,
    pub cell_radius_m: f64,
    pub min_bs_distance_m: f64,
    pub shadowing_std_db: f64,
    pub pathloss_intercept_db: f64,
    /// dB per decade of distance in km.
    pub pathloss_slope: f64,
    /// Feedback bits per cell, one entry per BS.
    pub bits_per_cell: Vec<u32>,
    /// Sub-codebook radius per cell.
    pub delta: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Force one codebook to be reused by every cell.
    #[serde(default)]
    pub shared_codebook: bool,
    #[serde(default)]
    pub codebook_redraw: CodebookRedraw,
}

impl SystemConfig {
    /// Defaults for the hexagonal 2 GHz macro scenario: 300 m cells, 8 dB
    /// shadowing, `130.19 + 37.6 log10(d_km)` path loss, 4 bits per cell.
    pub fn new(n_t: usize, n_bs: usize, n_r: usize, n_users: usize) -> Self {
        SystemConfig {
            n_t,
            n_bs,
            n_r,
            n_users,
            p_max: 1.0,
            noise_power: 1.0,
            cell_radius_m: 300.0,
            min_bs_distance_m: 35.0,
            shadowing_std_db: 8.0,
            pathloss_intercept_db: 130.19,
            pathloss_slope: 37.6,
            bits_per_cell: vec![4; n_bs],
            delta: vec![(n_r as f64).sqrt(); n_bs],
            trials: 1000,
            seed: 1,
            shared_codebook: false,
            codebook_redraw: CodebookRedraw::PerExperiment,
        }
    }

    pub fn with_bits_per_cell(mut self, bits: u32) -> Self {
        self.bits_per_cell = vec![bits; self.n_bs];
        self
    }

    /// Splits a total budget across cells, the remainder going to the first cells.
    pub fn with_total_bits(mut self, total: u32) -> Self {
        self.bits_per_cell = split_bits(total, self.n_bs);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = vec![delta; self.n_bs];
        self
    }

    /// Aggregate transmit dimension `N·n_T`.
    pub fn total_tx(&self) -> usize {
        self.n_bs * self.n_t
    }

    /// Per-user feedback budget `B_k = Σ_n B_{k,n}`.
    pub fn total_bits(&self) -> u32 {
        self.bits_per_cell.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_t == 0 || self.n_bs == 0 || self.n_r == 0 || self.n_users == 0 {
            return bad("antenna, BS and user counts must be positive".into());
        }
        if self.n_r > self.n_t {
            return bad(format!("n_r ({}) must not exceed n_t ({})", self.n_r, self.n_t));
        }
        if self.n_users * self.n_r > self.total_tx() {
            return bad(format!(
                "K*n_r = {} exceeds N*n_t = {}",
                self.n_users * self.n_r,
                self.total_tx()
            ));
        }
        for (name, v) in [
            ("p_max", self.p_max),
            ("noise_power", self.noise_power),
            ("cell_radius_m", self.cell_radius_m),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite"));
            }
        }
        if !(self.min_bs_distance_m >= 0.0) || self.min_bs_distance_m >= self.cell_radius_m {
            return bad("need 0 <= min_bs_distance_m < cell_radius_m".into());
        }
        if !(self.shadowing_std_db >= 0.0) {
            return bad("shadowing_std_db must be non-negative".into());
        }
        if self.bits_per_cell.len() != self.n_bs {
            return bad(format!("bits_per_cell needs {} entries", self.n_bs));
        }
        if self.bits_per_cell.iter().any(|&b| b > 24) {
            return bad("per-cell budgets above 24 bits are not supported".into());
        }
        if self.delta.len() != self.n_bs {
            return bad(format!("delta needs {} entries", self.n_bs));
        }
        let max_delta = (self.n_r as f64).sqrt();
        if self.delta.iter().any(|&d| !(d > 0.0) || d > max_delta + 1e-12) {
            return bad(format!("delta entries must lie in (0, {max_delta:.4}]"));
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        Ok(())
    }
}

/// Even split of `total` bits over `cells`, remainder to the earliest cells.
pub fn split_bits(total: u32, cells: usize) -> Vec<u32> {
    let cells_u = cells as u32;
    let base = total / cells_u;
    let extra = (total % cells_u) as usize;
    (0..cells).map(|n| base + u32::from(n < extra)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// BS sites at the centres of adjacent pointy-top hexagons of circumradius
/// `radius`, in spiral order: the origin, then ring 1 counter-clockwise from
/// the east neighbour, then ring 2, ... Any three consecutive sites from the
/// start are mutually adjacent.
pub fn bs_sites(n_bs: usize, radius: f64) -> Vec<Position> {
    // Axial directions for pointy-top hexes, starting east and turning 60°.
    const DIRS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    let mut axial = vec![(0i64, 0i64)];
    let mut ring = 1i64;
    while axial.len() < n_bs {
        // Each ring starts due east and walks counter-clockwise.
        let (mut q, mut r) = (ring, 0i64);
        for side in 0..6 {
            let dir = DIRS[(side + 2) % 6];
            for _ in 0..ring {
                axial.push((q, r));
                q += dir.0;
                r += dir.1;
            }
        }
        ring += 1;
    }
    axial.truncate(n_bs);
    let w = 3f64.sqrt() * radius;
    axial
        .into_iter()
        .map(|(q, r)| Position {
            x: w * (q as f64 + r as f64 / 2.0),
            y: 1.5 * radius * r as f64,
        })
        .collect()
}

/// Whether `p` lies in the pointy-top hexagon of circumradius `radius` centred at `c`.
pub fn in_hexagon(p: &Position, c: &Position, radius: f64) -> bool {
    let dx = (p.x - c.x).abs();
    let dy = (p.y - c.y).abs();
    let half_w = 3f64.sqrt() / 2.0 * radius;
    dx <= half_w && dy <= radius - dx / 3f64.sqrt()
}

/// Drops `n_users` positions uniformly over the union of the cooperating
/// cells, rejecting points closer than `min_bs_distance_m` to any BS.
pub fn drop_users<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Vec<Position>> {
    let r = cfg.cell_radius_m;
    if !(r > cfg.min_bs_distance_m) || cfg.min_bs_distance_m < 0.0 {
        return Err(Error::InvalidConfig(
            "need cell_radius_m > min_bs_distance_m >= 0".into(),
        ));
    }
    let sites = bs_sites(cfg.n_bs, r);
    let half_w = 3f64.sqrt() / 2.0 * r;
    let mut out = Vec::with_capacity(cfg.n_users);
    for _ in 0..cfg.n_users {
        let mut placed = None;
        for _ in 0..MAX_DROP_ATTEMPTS {
            // Cells have equal area, so a uniform cell then a uniform point
            // inside it is uniform over the union.
            let site = sites[rng.random_range(0..sites.len())];
            let p = Position {
                x: site.x + rng.random_range(-half_w..half_w),
                y: site.y + rng.random_range(-r..r),
            };
            if !in_hexagon(&p, &site, r) {
                continue;
            }
            if sites.iter().any(|s| s.distance(&p) < cfg.min_bs_distance_m) {
                continue;
            }
            placed = Some(p);
            break;
        }
        out.push(placed.ok_or(Error::Geometry {
            attempts: MAX_DROP_ATTEMPTS,
        })?);
    }
    Ok(out)
}

/// Path loss in dB at distance `d_km`.
pub fn path_loss_db(d_km: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(d_km > 0.0) || !d_km.is_finite() {
        return Err(Error::InvalidConfig(format!("distance must be positive, got {d_km}")));
    }
    Ok(cfg.pathloss_intercept_db + cfg.pathloss_slope * d_km.log10())
}

/// Linear path gain `10^(-PL/10)`.
pub fn path_gain(d_km: f64, cfg: &SystemConfig) -> Result<f64> {
    Ok(10f64.powf(-path_loss_db(d_km, cfg)? / 10.0))
}

/// `P_max` giving the requested interference-free SNR at the cell edge
/// (single cell, single user, no shadowing).
pub fn snr_calibration(cfg: &SystemConfig, target_edge_snr_db: f64) -> Result<f64> {
    let g_edge = path_gain(cfg.cell_radius_m / 1000.0, cfg)?;
    Ok(10f64.powf(target_edge_snr_db / 10.0) * cfg.noise_power / g_edge)
}

/// One user's aggregate CSI `H_k = H_k^(w) G_k` and its large-scale terms.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannel {
    /// `n_R x N·n_T` aggregate channel.
    pub h: ComplexMatrix,
    /// Diagonal of `G_k`, constant over each block of `n_T`.
    pub g_diag: Vec<f64>,
    /// Path gain `g_{k,n}` per BS.
    pub pathloss_lin: Vec<f64>,
    /// Shadowing `s_{k,n}` per BS.
    pub shadow_lin: Vec<f64>,
    pub position: Position,
}

impl UserChannel {
    /// Builds the user channel from its small-scale part and large-scale gains.
    pub fn from_parts(
        h_w: &ComplexMatrix,
        pathloss_lin: Vec<f64>,
        shadow_lin: Vec<f64>,
        n_t: usize,
        position: Position,
    ) -> Self {
        let g_diag: Vec<f64> = pathloss_lin
            .iter()
            .zip(&shadow_lin)
            .flat_map(|(g, s)| std::iter::repeat_n((g * s).sqrt(), n_t))
            .collect();
        UserChannel {
            h: h_w.scale_columns(&g_diag),
            g_diag,
            pathloss_lin,
            shadow_lin,
            position,
        }
    }

    /// `H_k G_k⁻¹`.
    pub fn normalized(&self, user: usize, n_t: usize) -> Result<ComplexMatrix> {
        let mut inv = Vec::with_capacity(self.g_diag.len());
        for (i, &g) in self.g_diag.iter().enumerate() {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::SingularLargeScale { user, bs: i / n_t });
            }
            inv.push(1.0 / g);
        }
        Ok(self.h.scale_columns(&inv))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub users: Vec<UserChannel>,
}

impl ChannelRealization {
    /// FNV-1a hash over every number in the realization.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for u in &self.users {
            for z in u.h.as_slice() {
                eat(z.re);
                eat(z.im);
            }
            u.g_diag.iter().copied().for_each(&mut eat);
            u.pathloss_lin.iter().copied().for_each(&mut eat);
            u.shadow_lin.iter().copied().for_each(&mut eat);
            eat(u.position.x);
            eat(u.position.y);
        }
        h
    }
}

/// Draws shadowing and Rayleigh fading for every user at `positions`.
pub fn realize_channel<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    positions: &[Position],
    rng: &mut R,
) -> Result<ChannelRealization> {
    let sites = bs_sites(cfg.n_bs, cfg.cell_radius_m);
    let shadow = Normal::new(0.0, cfg.shadowing_std_db)
        .map_err(|e| Error::InvalidConfig(format!("shadowing: {e}")))?;
    let mut users = Vec::with_capacity(positions.len());
    for pos in positions {
        let mut pathloss = Vec::with_capacity(cfg.n_bs);
        let mut shadowing = Vec::with_capacity(cfg.n_bs);
        for site in &sites {
            let d_km = site.distance(pos) / 1000.0;
            pathloss.push(path_gain(d_km, cfg)?);
            let x_db: f64 = shadow.sample(rng);
            shadowing.push(10f64.powf(x_db / 10.0));
        }
        let h_w = complex_gaussian_matrix(cfg.n_r, cfg.total_tx(), rng);
        users.push(UserChannel::from_parts(&h_w, pathloss, shadowing, cfg.n_t, *pos));
    }
    Ok(ChannelRealization { users })
}
