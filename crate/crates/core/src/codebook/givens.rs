//! Givens-rotation parameterisation of orthonormal matrices with uniform
//! scalar quantisation of each rotation's `(θ, φ)` pair.
//!
//! Encoding zeroes column `j` below the diagonal by rotating rows `(i−1, i)`
//! for `i = m−1, …, j+1`. Each rotation is
//!
//! ```text
//! R(θ, φ) = [  cos θ          sin θ·e^{−iφ} ]
//!           [ −sin θ·e^{iφ}   cos θ         ]
//! ```
//!
//! with `θ ∈ [0, π/2]` and `φ ∈ [0, 2π)`. The phase left on each diagonal
//! entry is discarded, so decoding recovers the column span only.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// One quantised rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GivensPair {
    pub theta_bits: u32,
    pub phi_bits: u32,
    pub theta_index: u32,
    pub phi_index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GivensCode {
    pub m: usize,
    pub n_r: usize,
    /// Column-major: column `j`, then rows `j+1..m`.
    pub pairs: Vec<GivensPair>,
}

impl GivensCode {
    pub fn parameter_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn total_bits(&self) -> u32 {
        self.pairs.iter().map(|p| p.theta_bits + p.phi_bits).sum()
    }
}

/// Number of rotations needed for an `m x n` matrix.
pub fn pair_count(m: usize, n: usize) -> usize {
    (0..n).map(|j| m - 1 - j).sum()
}

/// Bit allocation for a fixed shape and budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GivensQuantizer {
    m: usize,
    n_r: usize,
    /// `(theta_bits, phi_bits)` for each pair.
    bits: Vec<(u32, u32)>,
}

impl GivensQuantizer {
    /// Spreads `total_bits` evenly over the rotations (remainder to the
    /// earliest), then splits each rotation's share with θ taking the odd bit.
    pub fn new(m: usize, n_r: usize, total_bits: u32) -> Result<Self> {
        if n_r == 0 || n_r > m {
            return Err(Error::InvalidConfig(format!("givens shape {m}x{n_r}")));
        }
        let pairs = pair_count(m, n_r);
        let bits = if pairs == 0 {
            Vec::new()
        } else {
            let base = total_bits / pairs as u32;
            let extra = (total_bits % pairs as u32) as usize;
            (0..pairs)
                .map(|p| {
                    let b = base + u32::from(p < extra);
                    (b - b / 2, b / 2)
                })
                .collect()
        };
        if bits.iter().any(|&(t, p)| t > 31 || p > 31) {
            return Err(Error::InvalidConfig("givens budget exceeds 31 bits per angle".into()));
        }
        Ok(GivensQuantizer { m, n_r, bits })
    }

    pub fn pair_bits(&self) -> &[(u32, u32)] {
        &self.bits
    }

    pub fn encode(&self, source: &ComplexMatrix) -> Result<GivensCode> {
        if source.shape() != (self.m, self.n_r) {
            return Err(Error::DimensionMismatch {
                op: "givens_encode",
                left: (self.m, self.n_r),
                right: source.shape(),
            });
        }
        let params = givens_parameters(source)?;
        let pairs = params
            .iter()
            .zip(&self.bits)
            .map(|(&(theta, phi), &(tb, pb))| GivensPair {
                theta_bits: tb,
                phi_bits: pb,
                theta_index: quantize(theta, FRAC_PI_2, tb, false),
                phi_index: quantize(phi, TAU, pb, true),
            })
            .collect();
        Ok(GivensCode {
            m: self.m,
            n_r: self.n_r,
            pairs,
        })
    }
}

/// Encodes with a fresh [`GivensQuantizer`] for the source shape.
pub fn givens_encode(source: &ComplexMatrix, total_bits: u32) -> Result<GivensCode> {
    GivensQuantizer::new(source.rows(), source.cols(), total_bits)?.encode(source)
}

/// Rebuilds the orthonormal matrix at the cell midpoints of the code.
pub fn givens_decode(code: &GivensCode) -> Result<ComplexMatrix> {
    if code.pairs.len() != pair_count(code.m, code.n_r) {
        return Err(Error::InvalidConfig(format!(
            "{} givens pairs for a {}x{} matrix",
            code.pairs.len(),
            code.m,
            code.n_r
        )));
    }
    let params: Vec<(f64, f64)> = code
        .pairs
        .iter()
        .map(|p| {
            if p.theta_index >= 1u32.checked_shl(p.theta_bits).unwrap_or(u32::MAX)
                || p.phi_index >= 1u32.checked_shl(p.phi_bits).unwrap_or(u32::MAX)
            {
                return Err(Error::InvalidConfig("givens index exceeds its grid".into()));
            }
            Ok((
                reconstruct(p.theta_index, FRAC_PI_2, p.theta_bits),
                reconstruct(p.phi_index, TAU, p.phi_bits),
            ))
        })
        .collect::<Result<_>>()?;
    givens_rebuild(&params, code.m, code.n_r)
}

/// Unquantised `(θ, φ)` for each rotation, column-major.
pub fn givens_parameters(source: &ComplexMatrix) -> Result<Vec<(f64, f64)>> {
    let residual = source.orthonormality_residual();
    if !source.is_finite() || residual > super::ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { residual });
    }
    let (m, n) = source.shape();
    let mut x = source.clone();
    let mut params = Vec::with_capacity(pair_count(m, n));
    for j in 0..n {
        let mut col = vec![(0.0, 0.0); m - 1 - j];
        for i in (j + 1..m).rev() {
            let a = x[(i - 1, j)];
            let b = x[(i, j)];
            let theta = b.norm().atan2(a.norm());
            let arg_a = if a.norm() > 0.0 { a.arg() } else { 0.0 };
            let phi = if b.norm() > 0.0 {
                (b.arg() - arg_a).rem_euclid(TAU)
            } else {
                0.0
            };
            rotate_rows(&mut x, i - 1, theta, phi, false);
            col[i - (j + 1)] = (theta, phi);
        }
        params.extend(col);
    }
    Ok(params)
}

/// Inverse of [`givens_parameters`] up to a right diagonal phase.
pub fn givens_rebuild(params: &[(f64, f64)], m: usize, n: usize) -> Result<ComplexMatrix> {
    if n == 0 || n > m || params.len() != pair_count(m, n) {
        return Err(Error::InvalidConfig(format!(
            "{} givens parameters for a {m}x{n} matrix",
            params.len()
        )));
    }
    let mut x = ComplexMatrix::eye(m, n);
    // Column j's parameters start at offset Σ_{l<j} (m−1−l).
    let offsets: Vec<usize> = (0..n).map(|j| pair_count(m, j)).collect();
    for j in (0..n).rev() {
        for i in j + 1..m {
            let (theta, phi) = params[offsets[j] + i - (j + 1)];
            rotate_rows(&mut x, i - 1, theta, phi, true);
        }
    }
    Ok(x)
}

/// Applies `R(θ, φ)` (or its adjoint) to rows `(top, top+1)`.
fn rotate_rows(x: &mut ComplexMatrix, top: usize, theta: f64, phi: f64, adjoint: bool) {
    let (s, c) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    // R = [[c, s·e*], [−s·e, c]],  R† = [[c, −s·e*], [s·e, c]].
    let sign = if adjoint { -1.0 } else { 1.0 };
    for col in 0..x.cols() {
        let a = x[(top, col)];
        let b = x[(top + 1, col)];
        x[(top, col)] = a * c + b * e.conj() * (sign * s);
        x[(top + 1, col)] = -a * e * (sign * s) + b * c;
    }
}

fn quantize(value: f64, range: f64, bits: u32, wrap: bool) -> u32 {
    let levels = 1u64 << bits;
    let idx = (value / range * levels as f64).floor() as i64;
    let idx = if wrap {
        idx.rem_euclid(levels as i64)
    } else {
        idx.clamp(0, levels as i64 - 1)
    };
    idx as u32
}

fn reconstruct(index: u32, range: f64, bits: u32) -> f64 {
    (f64::from(index) + 0.5) * range / (1u64 << bits) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::chordal_distance;
    use crate::numerics::{haar_orthonormal, RngStream};

    #[test]
    fn identity_has_zero_angles() {
        let v = ComplexMatrix::eye(5, 2);
        let params = givens_parameters(&v).unwrap();
        assert_eq!(params.len(), 7);
        assert!(params.iter().all(|&(t, _)| t == 0.0));
        assert_eq!(givens_rebuild(&params, 5, 2).unwrap(), v);
    }

    #[test]
    fn unquantised_round_trip_is_exact() {
        let mut rng = RngStream::new(7, 0, 0);
        for &(m, n) in &[(2, 1), (4, 2), (12, 2), (6, 3)] {
            for _ in 0..20 {
                let v = haar_orthonormal(m, n, &mut rng);
                let params = givens_parameters(&v).unwrap();
                assert!(params.iter().all(|&(t, p)| (0.0..=FRAC_PI_2).contains(&t) && (0.0..TAU).contains(&p)));
                let back = givens_rebuild(&params, m, n).unwrap();
                assert!(back.orthonormality_residual() < 1e-12);
                let d = chordal_distance(&v, &back).unwrap();
                assert!(d <= 1e-8, "{m}x{n}: {d}");
            }
        }
    }

    #[test]
    fn bit_split_front_loads_and_favours_theta() {
        let q = GivensQuantizer::new(12, 2, 12).unwrap();
        assert_eq!(q.pair_bits().len(), 21);
        assert!(q.pair_bits()[..12].iter().all(|&b| b == (1, 0)));
        assert!(q.pair_bits()[12..].iter().all(|&b| b == (0, 0)));
        let q = GivensQuantizer::new(4, 2, 13).unwrap();
        // 5 pairs: 3,3,3,2,2 bits.
        assert_eq!(q.pair_bits(), &[(2, 1), (2, 1), (2, 1), (1, 1), (1, 1)]);
    }

    #[test]
    fn zero_bit_angles_decode_to_midpoints() {
        let mut rng = RngStream::new(8, 0, 0);
        let v = haar_orthonormal(3, 1, &mut rng);
        let code = givens_encode(&v, 0).unwrap();
        assert!(code.pairs.iter().all(|p| p.theta_index == 0 && p.phi_index == 0));
        let expected = givens_rebuild(&[(FRAC_PI_2 / 2.0, TAU / 2.0); 2], 3, 1).unwrap();
        assert_eq!(givens_decode(&code).unwrap(), expected);
    }

    #[test]
    fn finer_grids_shrink_the_error() {
        let mut rng = RngStream::new(9, 0, 0);
        let mut prev = f64::INFINITY;
        let sources: Vec<_> = (0..50).map(|_| haar_orthonormal(4, 2, &mut rng)).collect();
        for bits in [10, 30, 60, 100] {
            let mean: f64 = sources
                .iter()
                .map(|v| {
                    let back = givens_decode(&givens_encode(v, bits).unwrap()).unwrap();
                    chordal_distance(v, &back).unwrap()
                })
                .sum::<f64>()
                / sources.len() as f64;
            assert!(mean < prev);
            prev = mean;
        }
        assert!(prev < 0.01);
    }

    #[test]
    fn code_indices_within_grid() {
        let mut rng = RngStream::new(10, 0, 0);
        let v = haar_orthonormal(12, 2, &mut rng);
        let code = givens_encode(&v, 24).unwrap();
        assert_eq!(code.total_bits(), 24);
        for p in &code.pairs {
            assert!(p.theta_index < 1 << p.theta_bits);
            assert!(p.phi_index < 1 << p.phi_bits);
        }
    }
}
