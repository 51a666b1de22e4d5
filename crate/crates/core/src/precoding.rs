//! Block-diagonalisation precoders and equal per-stream power.

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::numerics::{null_space_basis, ComplexMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    /// One `N·n_T x n_R` orthonormal precoder per user.
    pub w: Vec<ComplexMatrix>,
    /// Power per stream.
    pub power_scalar: f64,
}

/// `p = N·P_max / (K·n_R)`.
pub fn power_allocation(cfg: &SystemConfig) -> f64 {
    power_per_stream(cfg.n_bs, cfg.p_max, cfg.n_users, cfg.n_r)
}

pub fn power_per_stream(n_bs: usize, p_max: f64, n_users: usize, n_r: usize) -> f64 {
    n_bs as f64 * p_max / (n_users * n_r) as f64
}

/// Precoder for each user spanning the null space of every other user's
/// channel estimate. Each estimate is scaled to unit Frobenius norm before
/// stacking, which leaves the null space unchanged.
pub fn bd_precoders(csi: &[ComplexMatrix], power_scalar: f64) -> Result<PrecoderSet> {
    let first = csi.first().ok_or(Error::InvalidConfig("no users".into()))?;
    let (n_r, cols) = first.shape();
    if let Some(bad) = csi.iter().find(|h| h.shape() != first.shape()) {
        return Err(Error::DimensionMismatch {
            op: "bd_precoders",
            left: first.shape(),
            right: bad.shape(),
        });
    }
    if !csi.iter().all(ComplexMatrix::is_finite) {
        return Err(Error::NonFinite);
    }
    let unit: Vec<ComplexMatrix> = csi
        .iter()
        .map(|h| {
            let f = h.frobenius();
            if f > 0.0 {
                h.scale(1.0 / f)
            } else {
                h.clone()
            }
        })
        .collect();
    let mut w = Vec::with_capacity(csi.len());
    for k in 0..csi.len() {
        if csi.len() == 1 {
            w.push(ComplexMatrix::eye(cols, n_r));
            continue;
        }
        let others: Vec<&ComplexMatrix> = unit.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, h)| h).collect();
        let stacked = ComplexMatrix::vstack(&others)?;
        let basis = null_space_basis(&stacked, n_r).map_err(|e| match e {
            Error::InsufficientNullSpace { .. } => Error::BdInfeasible { user: k },
            other => other,
        })?;
        w.push(basis);
    }
    Ok(PrecoderSet { w, power_scalar })
}

/// Largest `‖H_j W_k‖_F / max(1, ‖H_j‖_F)` over `j ≠ k`.
pub fn zero_forcing_residual(csi: &[ComplexMatrix], w: &[ComplexMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, wk) in w.iter().enumerate() {
        for (j, hj) in csi.iter().enumerate() {
            if j != k {
                worst = worst.max((hj * wk).frobenius() / hj.frobenius().max(1.0));
            }
        }
    }
    worst
}

/// Like [`zero_forcing_residual`] but relative to `‖H_j‖_F` alone, which is
/// the meaningful scale for channels that include path loss.
pub fn relative_leakage(csi: &[ComplexMatrix], w: &[ComplexMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, wk) in w.iter().enumerate() {
        for (j, hj) in csi.iter().enumerate() {
            let f = hj.frobenius();
            if j != k && f > 0.0 {
                worst = worst.max((hj * wk).frobenius() / f);
            }
        }
    }
    worst
}
