//! Dense complex linear algebra and seeded sampling.

mod matrix;
mod svd;

pub use matrix::ComplexMatrix;
pub use svd::{condition_number, log_det_hermitian_psd, null_space_basis, svd, SvdResult};

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A reproducible random stream addressed by `(seed, domain, index)`.
///
/// `domain` separates independent uses of one experiment seed (user drops,
/// codebooks, ...) and `index` selects a ChaCha stream, so the stream for a
/// given trial is the same no matter which thread draws it.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, domain: u64, index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&domain.to_le_bytes());
        key[16..24].copy_from_slice(b"netmimo\0");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        RngStream(rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// One CN(0, 1) sample: independent real and imaginary parts of variance 1/2.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0, 1) entries, drawn in row-major order.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed `m x n` matrix with orthonormal columns.
///
/// Gram-Schmidt on a Gaussian matrix yields the QR factor whose triangular
/// part has a positive real diagonal, which is exactly Haar.
pub fn haar_orthonormal<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> ComplexMatrix {
    assert!(n >= 1 && n <= m, "haar_orthonormal needs 1 <= n <= m (got {m}x{n})");
    loop {
        let g = complex_gaussian_matrix(m, n, rng);
        if let Some(q) = gram_schmidt(&g) {
            return q;
        }
    }
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass. `None` if the
/// columns are numerically dependent.
fn gram_schmidt(a: &ComplexMatrix) -> Option<ComplexMatrix> {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut x = a.column(j);
        let original: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex64 = q.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi -= proj * qi;
                }
            }
        }
        let nrm: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(nrm > 1e-10 * original.max(f64::MIN_POSITIVE)) {
            return None;
        }
        x.iter_mut().for_each(|z| *z /= nrm);
        cols.push(x);
    }
    let mut q = ComplexMatrix::zeros(m, n);
    for (j, c) in cols.iter().enumerate() {
        q.set_column(j, c);
    }
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_reproducible_and_index_separated() {
        let a: Vec<u64> = (0..4).map({
            let mut r = RngStream::new(1, 2, 3);
            move |_| r.next_u64()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut r = RngStream::new(1, 2, 3);
            move |_| r.next_u64()
        }).collect();
        let mut other = RngStream::new(1, 2, 4);
        assert_eq!(a, b);
        assert_ne!(a[0], other.next_u64());
    }

    #[test]
    fn haar_scalar_is_unit_modulus() {
        let mut rng = RngStream::new(0, 0, 0);
        let v = haar_orthonormal(1, 1, &mut rng);
        assert!((v[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn haar_columns_orthonormal() {
        let mut rng = RngStream::new(0, 0, 1);
        for _ in 0..100 {
            let v = haar_orthonormal(4, 2, &mut rng);
            assert!(v.orthonormality_residual() <= 1e-10);
        }
    }

    #[test]
    fn haar_projector_is_isotropic() {
        // E{V V†} = (n/m) I for an isotropic subspace.
        let (m, n, draws) = (4, 2, 10_000);
        let mut rng = RngStream::new(11, 0, 0);
        let mut acc = ComplexMatrix::zeros(m, m);
        for _ in 0..draws {
            let v = haar_orthonormal(m, n, &mut rng);
            acc = acc.try_add(&(&v * &v.hermitian())).unwrap();
        }
        let mean = acc.scale(1.0 / draws as f64);
        let target = ComplexMatrix::identity(m).scale(n as f64 / m as f64);
        let diff = mean.try_sub(&target).unwrap();
        let worst = diff.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 0.01, "max entry deviation {worst}");
    }

    #[test]
    fn complex_gaussian_has_unit_variance() {
        let mut rng = RngStream::new(5, 0, 0);
        let n = 50_000;
        let var: f64 = (0..n).map(|_| complex_gaussian(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.02);
    }
}
