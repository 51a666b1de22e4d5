//! Monte Carlo estimators: per-user rates under perfect and quantised
//! precoding, quantisation distortion and the block-norm concentration check.

use rand::Rng;

use crate::codebook::chordal_distance;
use crate::error::{Error, Result};
use crate::numerics::{complex_gaussian, condition_number, log_det_hermitian_psd, ComplexMatrix};

/// Interference-plus-noise matrices above this condition number are excluded.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub r_csit: f64,
    pub r_lf: f64,
    pub r_loss: f64,
    pub distortion: f64,
    pub user: usize,
    pub trial: usize,
}

/// The `n_R x n_R` products `C_j = (H W_j)(H W_j)†` for one receiver, from
/// which its rate at any transmit power follows without further products.
#[derive(Debug, Clone)]
pub struct RateKernel {
    c: Vec<ComplexMatrix>,
}

impl RateKernel {
    pub fn new(h: &ComplexMatrix, precoders: &[ComplexMatrix]) -> Result<Self> {
        let c = precoders
            .iter()
            .map(|w| {
                let hw = h.try_matmul(w)?;
                hw.try_matmul(&hw.hermitian())
            })
            .collect::<Result<_>>()?;
        Ok(RateKernel { c })
    }

    /// `log₂det(I + (p/σ²) C_k)`, the interference-free rate.
    pub fn rate_csit(&self, k: usize, p: f64, noise: f64) -> Result<f64> {
        let n = self.c[k].rows();
        let m = ComplexMatrix::identity(n).try_add(&self.c[k].scale(p / noise))?;
        log_det_hermitian_psd(&m)
    }

    /// `log₂det(I + N⁻¹ S)` with `S = p C_k` and `N = σ²I + p Σ_{j≠k} C_j`,
    /// computed as `log₂det(N + S) − log₂det(N)`.
    pub fn rate_lf(&self, k: usize, p: f64, noise: f64) -> Result<f64> {
        let n_r = self.c[k].rows();
        let mut interference = ComplexMatrix::identity(n_r).scale(noise);
        for (j, c) in self.c.iter().enumerate() {
            if j != k {
                interference = interference.try_add(&c.scale(p))?;
            }
        }
        let condition = condition_number(&interference)?;
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let total = interference.try_add(&self.c[k].scale(p))?;
        Ok((log_det_hermitian_psd(&total)? - log_det_hermitian_psd(&interference)?).max(0.0))
    }
}

/// Rate of user `k` with perfect-CSI precoders, power `p` per stream and noise `σ²`.
pub fn rate_csit(h_k: &ComplexMatrix, w_k: &ComplexMatrix, p: f64, noise: f64) -> Result<f64> {
    RateKernel::new(h_k, std::slice::from_ref(w_k))?.rate_csit(0, p, noise)
}

/// Rate of user `k` when every user is precoded with `w` built from quantised CSI.
pub fn rate_lf(h_k: &ComplexMatrix, w: &[ComplexMatrix], k: usize, p: f64, noise: f64) -> Result<f64> {
    RateKernel::new(h_k, w)?.rate_lf(k, p, noise)
}

/// Squared chordal distance of an achieved quantisation.
pub fn distortion_sample(v_w: &ComplexMatrix, v_hat_w: &ComplexMatrix) -> Result<f64> {
    Ok(chordal_distance(v_w, v_hat_w)?.powi(2))
}

/// Sample mean and the half-width of its normal-approximation 95% interval.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    /// Fraction of draws where some block's squared norm is off `1/N` by more than ε.
    pub exceedance: f64,
    /// Chebyshev bound `(N−1)/(N²(N·n_T+1)ε²)` on a single block.
    pub chebyshev_bound: f64,
    /// Binomial standard error of `exceedance`.
    pub std_error: f64,
}

/// Draws isotropic unit vectors in `C^{N·n_T}` and measures how often any
/// length-`n_T` block departs from its expected squared norm `1/N`.
pub fn concentration_check<R: Rng + ?Sized>(n_t: usize, n_bs: usize, samples: usize, epsilon: f64, rng: &mut R) -> Concentration {
    let total = n_t * n_bs;
    let target = 1.0 / n_bs as f64;
    let mut hits = 0usize;
    let mut block = vec![0.0; n_bs];
    for _ in 0..samples {
        block.iter_mut().for_each(|b| *b = 0.0);
        for i in 0..total {
            block[i / n_t] += complex_gaussian(rng).norm_sqr();
        }
        let norm: f64 = block.iter().sum();
        if block.iter().any(|b| (b / norm - target).abs() > epsilon) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let n = n_bs as f64;
    Concentration {
        exceedance: p,
        chebyshev_bound: (n - 1.0) / (n * n * (n * n_t as f64 + 1.0) * epsilon * epsilon),
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{complex_gaussian_matrix, haar_orthonormal, RngStream};
    use crate::precoding::bd_precoders;
    use num_complex::Complex64;

    #[test]
    fn zero_channel_has_zero_rate() {
        let h = ComplexMatrix::zeros(2, 8);
        let w = ComplexMatrix::eye(8, 2);
        assert_eq!(rate_csit(&h, &w, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn unit_snr_scalar_gives_one_bit() {
        let h = ComplexMatrix::from_row_major(1, 1, vec![Complex64::new(0.6, 0.8)]).unwrap();
        let w = ComplexMatrix::identity(1);
        assert!((rate_csit(&h, &w, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn csit_rate_matches_eigenvalue_sum() {
        // For n_R = 2 the eigenvalues of a Hermitian matrix follow from trace and determinant.
        let mut rng = RngStream::new(50, 0, 0);
        for _ in 0..20 {
            let h = complex_gaussian_matrix(2, 8, &mut rng);
            let w = haar_orthonormal(8, 2, &mut rng);
            let hw = &h * &w;
            let g = &hw * &hw.hermitian();
            let tr = g[(0, 0)].re + g[(1, 1)].re;
            let det = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
            let (p, s2) = (0.7, 0.3);
            let oracle = (1.0 + p * l1 / s2).log2() + (1.0 + p * l2 / s2).log2();
            assert!((rate_csit(&h, &w, p, s2).unwrap() - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn perfect_precoders_remove_interference() {
        let mut rng = RngStream::new(51, 0, 0);
        let hs: Vec<_> = (0..6).map(|_| complex_gaussian_matrix(2, 12, &mut rng)).collect();
        let set = bd_precoders(&hs, 0.25).unwrap();
        for (k, h) in hs.iter().enumerate() {
            let lf = rate_lf(h, &set.w, k, 0.25, 1.0).unwrap();
            let csit = rate_csit(h, &set.w[k], 0.25, 1.0).unwrap();
            assert!((lf - csit).abs() < 1e-9);
        }
    }

    #[test]
    fn lf_rate_matches_explicit_inverse() {
        let mut rng = RngStream::new(52, 0, 0);
        let h = complex_gaussian_matrix(2, 8, &mut rng);
        let w = vec![haar_orthonormal(8, 2, &mut rng), haar_orthonormal(8, 2, &mut rng)];
        let (p, s2) = (2.0, 0.5);
        let c = |wj: &ComplexMatrix| {
            let hw = &h * wj;
            &hw * &hw.hermitian()
        };
        let noise = ComplexMatrix::identity(2).scale(s2).try_add(&c(&w[1]).scale(p)).unwrap();
        let det = noise[(0, 0)] * noise[(1, 1)] - noise[(0, 1)] * noise[(1, 0)];
        let inv = ComplexMatrix::from_row_major(
            2,
            2,
            vec![noise[(1, 1)] / det, -noise[(0, 1)] / det, -noise[(1, 0)] / det, noise[(0, 0)] / det],
        )
        .unwrap();
        let m = ComplexMatrix::identity(2).try_add(&(&inv * &c(&w[0]).scale(p))).unwrap();
        let oracle = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm().log2();
        assert!((rate_lf(&h, &w, 0, p, s2).unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn noise_dominance_drives_rate_to_zero() {
        let mut rng = RngStream::new(53, 0, 0);
        let h = complex_gaussian_matrix(2, 8, &mut rng);
        let w = vec![haar_orthonormal(8, 2, &mut rng), haar_orthonormal(8, 2, &mut rng)];
        assert!(rate_lf(&h, &w, 0, 1.0, 1e12).unwrap() < 1e-9);
    }

    #[test]
    fn distortion_extremes() {
        let mut rng = RngStream::new(54, 0, 0);
        let v = haar_orthonormal(4, 2, &mut rng);
        assert!(distortion_sample(&v, &v).unwrap() < 1e-20);
        let a = ComplexMatrix::eye(4, 2);
        let b = ComplexMatrix::from_fn(4, 2, |i, j| Complex64::new(f64::from(u8::from(i == j + 2)), 0.0));
        assert!((distortion_sample(&a, &b).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_block_never_deviates() {
        let mut rng = RngStream::new(55, 0, 0);
        let c = concentration_check(8, 1, 1000, 1e-9, &mut rng);
        assert_eq!(c.exceedance, 0.0);
        assert_eq!(c.chebyshev_bound, 0.0);
    }

    #[test]
    fn ci_of_constant_is_zero() {
        assert_eq!(mean_ci(&[2.0; 10]), (2.0, 0.0));
        let (m, h) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((h - 1.96).abs() < 1e-12);
    }
}
