//! Closed-form distortion, throughput-loss and bit-scaling predictions.
//!
//! The loss and rate expressions are order-wise predictors with unit
//! constants. They are meant for trend and slope comparisons only.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

/// Dimensions `(n_T, N, n_R, K)` of a cooperative system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n_t: usize,
    pub n_bs: usize,
    pub n_r: usize,
    pub n_users: usize,
}

impl Dims {
    pub fn new(n_t: usize, n_bs: usize, n_r: usize, n_users: usize) -> Self {
        Dims { n_t, n_bs, n_r, n_users }
    }

    /// Real dimension of the Grassmannian, `α = n_R(N·n_T − n_R)`.
    pub fn alpha(&self) -> f64 {
        (self.n_r * (self.n_bs * self.n_t - self.n_r)) as f64
    }

    fn check(&self) -> Result<()> {
        if self.n_r == 0 || self.n_r >= self.n_bs * self.n_t {
            return Err(Error::InvalidConfig(format!(
                "need 0 < n_r < N*n_t, got n_r={} N*n_t={}",
                self.n_r,
                self.n_bs * self.n_t
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingInputs {
    /// System SNR `P_max/σ²`, relative to the weakest link.
    pub rho: f64,
    /// `Σ_n g_{k,n}` normalised so the weakest gain is 1.
    pub g_sum: f64,
    pub b_k: f64,
    /// Target loss in bits per channel use.
    pub epsilon: f64,
    pub dims: Dims,
}

/// Both forms of the random-codebook distortion approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionApprox {
    /// `n_R · 2^{−B/α}`.
    pub simplified: f64,
    /// `(Γ(1/α)/α) · β^{−1/α} · 2^{−B/α}` before Stirling's approximation.
    pub pre_stirling: f64,
}

pub fn distortion_approx(b_k: f64, dims: Dims) -> Result<DistortionApprox> {
    dims.check()?;
    let alpha = dims.alpha();
    let m = (dims.n_bs * dims.n_t) as f64;
    let mut ln_beta = -ln_gamma(alpha + 1.0);
    for i in 1..=dims.n_r {
        let i = i as f64;
        ln_beta += ln_gamma(m - i + 1.0) - ln_gamma(dims.n_r as f64 - i + 1.0);
    }
    let decay = (-b_k / alpha).exp2();
    Ok(DistortionApprox {
        simplified: dims.n_r as f64 * decay,
        pre_stirling: gamma(1.0 / alpha) / alpha * (-ln_beta / alpha).exp() * decay,
    })
}

/// `n_R log₂(1 + ρ·D̄·(K−1)·g_sum / (K·n_R))`, which equals
/// `n_R log₂(1 + p·D̄·(K−1)·g_sum / (N·σ²))` with `p = N·P_max/(K·n_R)`.
pub fn predicted_loss(si: &ScalingInputs) -> Result<f64> {
    let d = distortion_approx(si.b_k, si.dims)?.simplified;
    let (k, n_r) = (si.dims.n_users as f64, si.dims.n_r as f64);
    Ok(n_r * (1.0 + si.rho * d * (k - 1.0) * si.g_sum / (k * n_r)).log2())
}

/// `c(ε) = α log₂(2^{ε/n_R} − 1)`.
pub fn bit_rule_offset(epsilon: f64, dims: Dims) -> f64 {
    dims.alpha() * ((epsilon / dims.n_r as f64).exp2() - 1.0).log2()
}

/// Unrounded `α log₂(ρ g_sum) − c(ε)`.
pub fn bit_rule_raw(si: &ScalingInputs) -> Result<f64> {
    si.dims.check()?;
    if !(si.epsilon > 0.0) || !(si.rho * si.g_sum > 0.0) {
        return Err(Error::InvalidConfig("need epsilon > 0 and rho*g_sum > 0".into()));
    }
    Ok(si.dims.alpha() * (si.rho * si.g_sum).log2() - bit_rule_offset(si.epsilon, si.dims))
}

/// Bits keeping the predicted loss within ε, clamped at zero and rounded up
/// to a multiple of `N`.
pub fn bit_rule_bits(si: &ScalingInputs) -> Result<u32> {
    let raw = bit_rule_raw(si)?.max(0.0);
    let n = si.dims.n_bs as f64;
    let bits = (raw / n).ceil() * n;
    if bits > f64::from(u32::MAX) {
        return Err(Error::InvalidConfig(format!("bit budget {bits} out of range")));
    }
    Ok(bits as u32)
}

/// The two order expressions for the interference-limited rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOrder {
    /// `n_R B ln2 / ((N n_T − n_R) N n_T)`.
    pub main: f64,
    /// `B ln2 / ((N n_T − n_R)(K − 1))`.
    pub alternate: f64,
}

pub fn interference_limited_rate(b_k: f64, dims: Dims) -> Result<RateOrder> {
    dims.check()?;
    if dims.n_users < 2 {
        return Err(Error::InvalidConfig("interference-limited rate needs K >= 2".into()));
    }
    let m = (dims.n_bs * dims.n_t) as f64;
    let free = m - dims.n_r as f64;
    let ln2 = std::f64::consts::LN_2;
    Ok(RateOrder {
        main: dims.n_r as f64 * b_k * ln2 / (free * m),
        alternate: b_k * ln2 / (free * (dims.n_users as f64 - 1.0)),
    })
}

/// Searched tuples over the full product size `2^{B_k}`.
pub fn relative_complexity(searched_count: u64, b_k: u32) -> f64 {
    searched_count as f64 / (b_k as f64).exp2()
}

/// `Σ_n g_n / min_n g_n`.
pub fn normalized_g_sum(gains: &[f64]) -> Result<f64> {
    let min = gains.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !min.is_finite() {
        return Err(Error::InvalidConfig("path gains must be positive".into()));
    }
    Ok(gains.iter().map(|g| g / min).sum())
}
