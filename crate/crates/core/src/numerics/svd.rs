//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Rotations act on the columns of `A`, so the accumulated right factor is
//! always the full `cols x cols` unitary. That gives the row space and the
//! right null space in one pass, which is all the feedback and precoding
//! stages need.

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const ORTHO_TOL: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors, `rows x min(rows, cols)`.
    pub u: ComplexMatrix,
    /// Singular values in descending order, length `min(rows, cols)`.
    pub s: Vec<f64>,
    /// Right singular vectors, full `cols x cols`.
    pub v: ComplexMatrix,
    /// Number of singular values above the numerical rank threshold.
    pub rank_hint: usize,
}

impl SvdResult {
    /// Orthonormal basis of the row space of rank `k` (first `k` columns of `v`).
    pub fn row_space(&self, k: usize) -> ComplexMatrix {
        self.v.columns(0, k)
    }
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let (m, n) = a.shape();

    // Work column-major: w[j] is column j of A·V, v[j] is column j of V.
    let mut w: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    let mut norms: Vec<f64> = w.iter().map(|c| norm_sq(c)).collect();
    // Columns below this squared norm are numerically zero; rotating them
    // against each other only shuffles rounding noise.
    let zero_floor = {
        let total: f64 = norms.iter().sum();
        total * (n as f64) * f64::EPSILON * f64::EPSILON
    };

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                let gamma = inner(&w[p], &w[q]);
                let g = gamma.norm();
                if g == 0.0
                    || alpha.min(beta) <= zero_floor
                    || g <= ORTHO_TOL * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let pc = phase.conj();
                rotate(&mut w, p, q, c, s, pc);
                rotate(&mut v, p, q, c, s, pc);
                norms[p] = norm_sq(&w[p]);
                norms[q] = norm_sq(&w[q]);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { rows: m, cols: n });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let sing: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&i, &j| sing[j].total_cmp(&sing[i]).then(i.cmp(&j)));

    let mut v_mat = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v[src].clone();
        normalize_phase(&mut col);
        v_mat.set_column(dst, &col);
    }

    let k = m.min(n);
    let s: Vec<f64> = order.iter().take(k).map(|&i| sing[i]).collect();
    let s_max = s.first().copied().unwrap_or(0.0);
    let threshold = s_max * (m.max(n) as f64) * f64::EPSILON;
    let rank_hint = s.iter().filter(|&&x| x > threshold && x > 0.0).count();

    // Left vectors from A·v_j / s_j using the phase-normalised v, completed
    // to an orthonormal set where the singular value vanishes.
    let mut u_cols: Vec<Option<Vec<Complex64>>> = Vec::with_capacity(k);
    for j in 0..k {
        if j < rank_hint {
            let vj = v_mat.column(j);
            let mut col = vec![Complex64::new(0.0, 0.0); m];
            for (i, out) in col.iter_mut().enumerate() {
                *out = a.row(i).iter().zip(&vj).map(|(x, y)| x * y).sum::<Complex64>() / s[j];
            }
            u_cols.push(Some(col));
        } else {
            u_cols.push(None);
        }
    }
    let u = complete_orthonormal(m, u_cols);

    Ok(SvdResult {
        u,
        s,
        v: v_mat,
        rank_hint,
    })
}

/// Orthonormal `cols x dim` basis of the right null space of `a`.
///
/// Uses the trailing `dim` right singular vectors, so when the null space is
/// larger than `dim` the selection is still deterministic.
pub fn null_space_basis(a: &ComplexMatrix, dim: usize) -> Result<ComplexMatrix> {
    let (rows, cols) = a.shape();
    let svd = svd(a)?;
    if dim == 0 || cols < svd.rank_hint + dim {
        return Err(Error::InsufficientNullSpace {
            rows,
            cols,
            rank: svd.rank_hint,
            needed: dim,
        });
    }
    Ok(svd.v.columns(cols - dim, dim))
}

/// `log₂ det(a)` for a Hermitian positive definite matrix, via Cholesky.
pub fn log_det_hermitian_psd(a: &ComplexMatrix) -> Result<f64> {
    let (n, c) = a.shape();
    if n != c {
        return Err(Error::DimensionMismatch {
            op: "log_det",
            left: a.shape(),
            right: a.shape(),
        });
    }
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = d.sqrt();
        l[j * n + j] = Complex64::new(ljj, 0.0);
        log_det += 2.0 * ljj.log2();
        for i in (j + 1)..n {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = sum / ljj;
        }
    }
    Ok(log_det)
}

/// Ratio of extreme singular values; infinite when the smallest is zero.
pub fn condition_number(a: &ComplexMatrix) -> Result<f64> {
    let svd = svd(a)?;
    let max = svd.s.first().copied().unwrap_or(0.0);
    let min = svd.s.last().copied().unwrap_or(0.0);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

fn norm_sq(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn rotate(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, s: f64, pc: Complex64) {
    let (lo, hi) = cols.split_at_mut(q);
    let xp = &mut lo[p];
    let xq = &mut hi[0];
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let bq = *b * pc;
        let new_p = *a * c - bq * s;
        let new_q = *a * s + bq * c;
        *a = new_p;
        *b = new_q;
    }
}

/// Rotates a vector so its first non-negligible entry is real and positive.
pub(crate) fn normalize_phase(col: &mut [Complex64]) {
    let scale = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    if let Some(pivot) = col.iter().find(|z| z.norm() > 1e-12 * scale) {
        let rot = pivot.conj() / pivot.norm();
        for z in col.iter_mut() {
            *z *= rot;
        }
    }
}

fn complete_orthonormal(m: usize, cols: Vec<Option<Vec<Complex64>>>) -> ComplexMatrix {
    let known: Vec<Vec<Complex64>> = cols.iter().flatten().cloned().collect();
    let mut basis = known;
    let mut filled: Vec<Vec<Complex64>> = Vec::with_capacity(cols.len());
    let mut candidate = 0usize;
    for col in cols {
        match col {
            Some(c) => filled.push(c),
            None => loop {
                assert!(candidate < m, "ran out of completion candidates");
                let mut e = vec![Complex64::new(0.0, 0.0); m];
                e[candidate] = Complex64::new(1.0, 0.0);
                candidate += 1;
                for _ in 0..2 {
                    for b in &basis {
                        let proj = inner(b, &e);
                        for (x, y) in e.iter_mut().zip(b) {
                            *x -= proj * y;
                        }
                    }
                }
                let nrm = norm_sq(&e).sqrt();
                if nrm > 1e-8 {
                    for x in e.iter_mut() {
                        *x /= nrm;
                    }
                    basis.push(e.clone());
                    filled.push(e);
                    break;
                }
            },
        }
    }
    let mut u = ComplexMatrix::zeros(m, filled.len());
    for (j, c) in filled.iter().enumerate() {
        u.set_column(j, c);
    }
    u
}
