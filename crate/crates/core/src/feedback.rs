//! Mobile-side quantisation of the normalised channel subspace and
//! base-station-side reconstruction.

use num_complex::Complex64;

use crate::channel::UserChannel;
use crate::codebook::{aggregate_codeword, chordal_distance_unchecked, joint_quantize, Codebook, GivensQuantizer};
use crate::error::{Error, Result};
use crate::numerics::{svd, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeTag {
    PerCellExhaustive,
    PerCellIsa,
    JointCell,
    Givens,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackReport {
    /// One codeword index per cell (a single index for the joint-cell
    /// codebook, none for Givens).
    pub indices: Vec<usize>,
    /// Codewords (or tuples) examined by the search.
    pub searched_count: u64,
    pub scheme: SchemeTag,
    /// Squared chordal distance between the reconstruction and the source.
    pub distortion: f64,
}

/// What the BS holds after feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCsi {
    /// Reconstructed normalised subspace, `N·n_T x n_R`.
    pub v_hat_w: ComplexMatrix,
    /// Denormalised channel estimate `V̂† G`, `n_R x N·n_T`.
    pub h_hat: ComplexMatrix,
}

impl QuantizedCsi {
    pub fn new(v_hat_w: ComplexMatrix, g_diag: &[f64]) -> Result<Self> {
        if g_diag.len() != v_hat_w.rows() {
            return Err(Error::DimensionMismatch {
                op: "denormalize",
                left: v_hat_w.shape(),
                right: (g_diag.len(), 1),
            });
        }
        let h_hat = v_hat_w.hermitian().scale_columns(g_diag);
        Ok(QuantizedCsi { v_hat_w, h_hat })
    }
}

/// Quantisation source and per-cell centroids for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    /// Row-space basis of `H G⁻¹`, `N·n_T x n_R`.
    pub v_w: ComplexMatrix,
    /// Row-space basis of each `n_R x n_T` block of `H G⁻¹`.
    pub centroids: Vec<ComplexMatrix>,
}

/// Removes large-scale fading and extracts the row-space bases.
pub fn normalize_and_decompose(user: &UserChannel, user_index: usize, n_t: usize) -> Result<Normalized> {
    let h_w = user.normalized(user_index, n_t)?;
    let (n_r, total) = h_w.shape();
    if total % n_t != 0 || n_r > n_t {
        return Err(Error::DimensionMismatch {
            op: "normalize_and_decompose",
            left: h_w.shape(),
            right: (n_r, n_t),
        });
    }
    let v_w = svd(&h_w)?.v.columns(0, n_r);
    let centroids = (0..total / n_t)
        .map(|n| Ok(svd(&h_w.block(0, n_r, n * n_t, n_t))?.v.columns(0, n_r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Normalized { v_w, centroids })
}

/// Precomputed `M_n(J) = V_J† V_n / √N` for every cell and codeword, where
/// `V_n` is block `n` of the source. The product-codebook distortion of a
/// tuple is `n_R − ‖Σ_n M_n(J_n)‖²_F`.
#[derive(Debug, Clone)]
pub struct ProductObjective {
    n_r: usize,
    /// `cells[n][j*n_r² ..]` holds `M_n(j)` row-major.
    cells: Vec<Vec<Complex64>>,
}

impl ProductObjective {
    pub fn new(v_w: &ComplexMatrix, codebooks: &[Codebook]) -> Result<Self> {
        let n_cells = codebooks.len();
        let first = codebooks.first().ok_or(Error::EmptyCodebook)?;
        let (n_t, n_r) = first.shape();
        if v_w.shape() != (n_cells * n_t, n_r) || codebooks.iter().any(|cb| cb.shape() != (n_t, n_r)) {
            return Err(Error::DimensionMismatch {
                op: "product objective",
                left: v_w.shape(),
                right: (n_cells * n_t, n_r),
            });
        }
        let scale = 1.0 / (n_cells as f64).sqrt();
        let mut cells = Vec::with_capacity(n_cells);
        for (n, cb) in codebooks.iter().enumerate() {
            let block = v_w.block(n * n_t, n_t, 0, n_r);
            let mut flat = Vec::with_capacity(cb.len() * n_r * n_r);
            for cw in cb.codewords() {
                flat.extend(cw.adjoint_mul(&block)?.as_slice().iter().map(|z| z * scale));
            }
            cells.push(flat);
        }
        Ok(ProductObjective { n_r, cells })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    fn block(&self, cell: usize, j: usize) -> &[Complex64] {
        let sz = self.n_r * self.n_r;
        &self.cells[cell][j * sz..(j + 1) * sz]
    }

    fn cell_len(&self, cell: usize) -> usize {
        self.cells[cell].len() / (self.n_r * self.n_r)
    }

    /// `‖Σ_n M_n(J_n)‖²_F`, summed left to right over cells. Every search
    /// goes through this accumulation order so scores compare exactly.
    pub fn score(&self, tuple: &[usize]) -> f64 {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.n_r * self.n_r];
        for (n, &j) in tuple.iter().enumerate() {
            accumulate(&mut acc, self.block(n, j));
        }
        norm_sqr(&acc)
    }

    pub fn distortion(&self, tuple: &[usize]) -> f64 {
        (self.n_r as f64 - self.score(tuple)).max(0.0)
    }
}

fn accumulate(acc: &mut [Complex64], m: &[Complex64]) {
    for (a, b) in acc.iter_mut().zip(m) {
        *a += b;
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Whether `(score, tuple)` beats the incumbent: higher score, or equal
/// score with a lexicographically smaller tuple.
fn improves(score: f64, tuple: &[usize], best_score: f64, best: &[usize]) -> bool {
    score > best_score || (score == best_score && tuple < best)
}

/// Globally optimal product-codebook indices.
///
/// Branch and bound over cells in order: a partial sum `P` can reach at
/// most `‖P‖ + Σ_{m≥n} max_J ‖M_m(J)‖`, and within each cell candidates are
/// visited by decreasing `‖M_n(J)‖` so the loop stops at the first hopeless
/// one. Ties resolve to the lexicographically smallest tuple, exactly as a
/// plain nested loop would.
pub fn search_exhaustive(v_w: &ComplexMatrix, codebooks: &[Codebook]) -> Result<FeedbackReport> {
    let obj = ProductObjective::new(v_w, codebooks)?;
    let n_cells = obj.n_cells();
    let norms: Vec<Vec<f64>> = (0..n_cells)
        .map(|n| (0..obj.cell_len(n)).map(|j| norm_sqr(obj.block(n, j)).sqrt()).collect())
        .collect();
    let order: Vec<Vec<usize>> = norms
        .iter()
        .map(|nv| {
            let mut idx: Vec<usize> = (0..nv.len()).collect();
            idx.sort_by(|&a, &b| nv[b].total_cmp(&nv[a]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut tail = vec![0.0; n_cells + 1];
    for n in (0..n_cells).rev() {
        tail[n] = tail[n + 1] + norms[n][order[n][0]];
    }

    let greedy: Vec<usize> = order.iter().map(|o| o[0]).collect();
    let mut state = BnbState {
        obj: &obj,
        norms: &norms,
        order: &order,
        tail: &tail,
        best_score: obj.score(&greedy),
        best: greedy,
        tuple: vec![0; n_cells],
    };
    let zero = vec![Complex64::new(0.0, 0.0); obj.n_r * obj.n_r];
    state.descend(0, &zero);

    let searched_count = codebooks.iter().map(|cb| cb.len() as u64).product();
    Ok(FeedbackReport {
        distortion: obj.distortion(&state.best),
        indices: state.best,
        searched_count,
        scheme: SchemeTag::PerCellExhaustive,
    })
}

struct BnbState<'a> {
    obj: &'a ProductObjective,
    norms: &'a [Vec<f64>],
    order: &'a [Vec<usize>],
    tail: &'a [f64],
    best_score: f64,
    best: Vec<usize>,
    tuple: Vec<usize>,
}

impl BnbState<'_> {
    // Rounding in the bound is far below this; it only has to keep ties alive.
    const SLACK: f64 = 1e-9;

    fn descend(&mut self, cell: usize, partial: &[Complex64]) {
        let last = cell + 1 == self.obj.n_cells();
        let partial_norm = norm_sqr(partial).sqrt();
        let mut next = partial.to_vec();
        for &j in &self.order[cell] {
            let bound = partial_norm + self.norms[cell][j] + self.tail[cell + 1];
            if bound + Self::SLACK < self.best_score.sqrt() {
                break;
            }
            next.copy_from_slice(partial);
            accumulate(&mut next, self.obj.block(cell, j));
            self.tuple[cell] = j;
            if last {
                let score = norm_sqr(&next);
                if improves(score, &self.tuple, self.best_score, &self.best) {
                    self.best_score = score;
                    self.best.copy_from_slice(&self.tuple);
                }
            } else {
                let snapshot = next.clone();
                self.descend(cell + 1, &snapshot);
            }
        }
    }
}

/// Codeword indices of each cell within chordal distance `δ_n` of the
/// cell's centroid. An empty neighbourhood falls back to the single
/// nearest codeword.
pub fn build_subcodebooks(centroids: &[ComplexMatrix], codebooks: &[Codebook], delta: &[f64]) -> Result<Vec<Vec<usize>>> {
    if centroids.len() != codebooks.len() || delta.len() != codebooks.len() {
        return Err(Error::DimensionMismatch {
            op: "build_subcodebooks",
            left: (centroids.len(), delta.len()),
            right: (codebooks.len(), codebooks.len()),
        });
    }
    let mut out = Vec::with_capacity(codebooks.len());
    for ((c, cb), &d) in centroids.iter().zip(codebooks).zip(delta) {
        if c.shape() != cb.shape() {
            return Err(Error::DimensionMismatch {
                op: "build_subcodebooks",
                left: c.shape(),
                right: cb.shape(),
            });
        }
        let dist: Vec<f64> = cb.codewords().iter().map(|v| chordal_distance_unchecked(v, c)).collect();
        let mut members: Vec<usize> = (0..dist.len()).filter(|&j| dist[j] < d).collect();
        if members.is_empty() {
            let nearest = (0..dist.len())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
                .ok_or(Error::EmptyCodebook)?;
            members.push(nearest);
        }
        out.push(members);
    }
    Ok(out)
}

/// Exhaustive search restricted to the product of sub-codebooks.
pub fn search_isa(
    v_w: &ComplexMatrix,
    centroids: &[ComplexMatrix],
    codebooks: &[Codebook],
    delta: &[f64],
) -> Result<FeedbackReport> {
    let subs = build_subcodebooks(centroids, codebooks, delta)?;
    search_subcodebooks(v_w, codebooks, &subs)
}

/// Plain nested loop over every tuple of `subs`, visited in lexicographic order.
pub fn search_subcodebooks(v_w: &ComplexMatrix, codebooks: &[Codebook], subs: &[Vec<usize>]) -> Result<FeedbackReport> {
    let obj = ProductObjective::new(v_w, codebooks)?;
    if subs.len() != obj.n_cells() || subs.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyCodebook);
    }
    for (n, s) in subs.iter().enumerate() {
        if let Some(&bad) = s.iter().find(|&&j| j >= obj.cell_len(n)) {
            return Err(Error::IndexOutOfRange {
                cell: n,
                index: bad,
                size: obj.cell_len(n),
            });
        }
    }
    let n_cells = subs.len();
    let mut pos = vec![0usize; n_cells];
    let mut tuple: Vec<usize> = subs.iter().map(|s| s[0]).collect();
    let mut best = tuple.clone();
    let mut best_score = f64::NEG_INFINITY;
    let mut searched: u64 = 0;
    loop {
        let score = obj.score(&tuple);
        searched += 1;
        if improves(score, &tuple, best_score, &best) {
            best_score = score;
            best.copy_from_slice(&tuple);
        }
        // Odometer step, last cell fastest.
        let mut n = n_cells;
        loop {
            if n == 0 {
                return Ok(FeedbackReport {
                    distortion: obj.distortion(&best),
                    indices: best,
                    searched_count: searched,
                    scheme: SchemeTag::PerCellIsa,
                });
            }
            n -= 1;
            pos[n] += 1;
            if pos[n] < subs[n].len() {
                tuple[n] = subs[n][pos[n]];
                break;
            }
            pos[n] = 0;
            tuple[n] = subs[n][0];
        }
    }
}

/// Rebuilds `V̂ = (1/√N)[V_{J_1}; …; V_{J_N}]` and denormalises it.
pub fn reconstruct(report: &FeedbackReport, codebooks: &[Codebook], user: &UserChannel) -> Result<QuantizedCsi> {
    if report.indices.len() != codebooks.len() {
        return Err(Error::DimensionMismatch {
            op: "reconstruct",
            left: (report.indices.len(), 1),
            right: (codebooks.len(), 1),
        });
    }
    let parts = report
        .indices
        .iter()
        .zip(codebooks)
        .enumerate()
        .map(|(cell, (&index, cb))| {
            cb.get(index).ok_or(Error::IndexOutOfRange {
                cell,
                index,
                size: cb.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    QuantizedCsi::new(aggregate_codeword(&parts)?, &user.g_diag)
}

/// Quantises the full source with a composite-transmitter codebook.
pub fn quantize_jointcell(v_w: &ComplexMatrix, cb: &Codebook, user: &UserChannel) -> Result<(FeedbackReport, QuantizedCsi)> {
    let j = joint_quantize(v_w, cb)?;
    let v_hat = cb.codewords()[j].clone();
    let report = FeedbackReport {
        indices: vec![j],
        searched_count: cb.len() as u64,
        scheme: SchemeTag::JointCell,
        distortion: chordal_distance_unchecked(&v_hat, v_w).powi(2),
    };
    Ok((report, QuantizedCsi::new(v_hat, &user.g_diag)?))
}

/// Quantises the full source with the Givens baseline.
pub fn quantize_givens(v_w: &ComplexMatrix, q: &GivensQuantizer, user: &UserChannel) -> Result<(FeedbackReport, QuantizedCsi)> {
    let code = q.encode(v_w)?;
    let v_hat = crate::codebook::givens_decode(&code)?;
    let report = FeedbackReport {
        indices: Vec::new(),
        searched_count: 1,
        scheme: SchemeTag::Givens,
        distortion: chordal_distance_unchecked(&v_hat, v_w).powi(2),
    };
    Ok((report, QuantizedCsi::new(v_hat, &user.g_diag)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{drop_users, realize_channel, Position, SystemConfig};
    use crate::codebook::{chordal_distance, CodebookKind};
    use crate::numerics::{complex_gaussian_matrix, haar_orthonormal, RngStream};

    fn books(rng: &mut RngStream, n_cells: usize, n_t: usize, n_r: usize, bits: u32) -> Vec<Codebook> {
        (0..n_cells)
            .map(|_| Codebook::random(CodebookKind::PerCell, n_t, n_r, bits, rng))
            .collect()
    }

    fn brute_force(v_w: &ComplexMatrix, cbs: &[Codebook]) -> (Vec<usize>, f64) {
        // Direct projector-form distances over every tuple.
        let sizes: Vec<usize> = cbs.iter().map(|c| c.len()).collect();
        let total: usize = sizes.iter().product();
        let mut best = (Vec::new(), f64::INFINITY);
        for flat in 0..total {
            let mut rem = flat;
            let mut tuple = vec![0; sizes.len()];
            for n in (0..sizes.len()).rev() {
                tuple[n] = rem % sizes[n];
                rem /= sizes[n];
            }
            let parts: Vec<&ComplexMatrix> = tuple.iter().zip(cbs).map(|(&j, c)| &c.codewords()[j]).collect();
            let agg = aggregate_codeword(&parts).unwrap();
            let p1 = &agg * &agg.hermitian();
            let p2 = v_w * &v_w.hermitian();
            let d2 = p1.try_sub(&p2).unwrap().frobenius_sq() / 2.0;
            if d2 < best.1 - 1e-12 {
                best = (tuple, d2);
            }
        }
        best
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        let mut rng = RngStream::new(20, 0, 0);
        for _ in 0..20 {
            let cbs = books(&mut rng, 2, 4, 2, 2);
            let v_w = haar_orthonormal(8, 2, &mut rng);
            let report = search_exhaustive(&v_w, &cbs).unwrap();
            let (tuple, d2) = brute_force(&v_w, &cbs);
            assert_eq!(report.indices, tuple);
            assert!((report.distortion - d2).abs() < 1e-10);
            assert_eq!(report.searched_count, 16);
        }
    }

    #[test]
    fn planted_tuple_is_recovered() {
        let mut rng = RngStream::new(21, 0, 0);
        let cbs = books(&mut rng, 3, 4, 2, 3);
        let parts = [&cbs[0].codewords()[5], &cbs[1].codewords()[0], &cbs[2].codewords()[7]];
        let v_w = aggregate_codeword(&parts).unwrap();
        let report = search_exhaustive(&v_w, &cbs).unwrap();
        assert_eq!(report.indices, vec![5, 0, 7]);
        assert!(report.distortion < 1e-12);
    }

    #[test]
    fn single_cell_reduces_to_joint_quantize() {
        let mut rng = RngStream::new(22, 0, 0);
        let cbs = books(&mut rng, 1, 4, 2, 5);
        for _ in 0..20 {
            let v = haar_orthonormal(4, 2, &mut rng);
            let r = search_exhaustive(&v, &cbs).unwrap();
            assert_eq!(r.indices, vec![joint_quantize(&v, &cbs[0]).unwrap()]);
        }
    }

    #[test]
    fn exhaustive_prefers_lexicographically_smaller_ties() {
        let mut rng = RngStream::new(23, 0, 0);
        let base = books(&mut rng, 1, 4, 2, 1);
        let cw = base[0].codewords().to_vec();
        // Cell 1 holds the same subspace twice, so tuples (a, 0) and (a, 1) tie.
        let dup = Codebook::from_codewords(CodebookKind::PerCell, vec![cw[1].clone(), cw[1].clone()]).unwrap();
        let cbs = vec![base[0].clone(), dup];
        let v_w = haar_orthonormal(8, 2, &mut rng);
        let r = search_exhaustive(&v_w, &cbs).unwrap();
        assert_eq!(r.indices[1], 0);
    }

    #[test]
    fn full_radius_isa_equals_exhaustive() {
        let mut rng = RngStream::new(24, 0, 0);
        let cfg = SystemConfig::new(4, 3, 2, 1);
        for _ in 0..30 {
            let cbs = books(&mut rng, 3, 4, 2, 4);
            let pos = drop_users(&cfg, &mut rng).unwrap();
            let real = realize_channel(&cfg, &pos, &mut rng).unwrap();
            let norm = normalize_and_decompose(&real.users[0], 0, 4).unwrap();
            let ex = search_exhaustive(&norm.v_w, &cbs).unwrap();
            let isa = search_isa(&norm.v_w, &norm.centroids, &cbs, &[2f64.sqrt(); 3]).unwrap();
            assert_eq!(ex.indices, isa.indices);
            assert_eq!(ex.distortion, isa.distortion);
            assert_eq!(isa.searched_count, 4096);
        }
    }

    #[test]
    fn tiny_radius_keeps_nearest_codeword_only() {
        let mut rng = RngStream::new(25, 0, 0);
        let cbs = books(&mut rng, 3, 4, 2, 4);
        let v_w = haar_orthonormal(12, 2, &mut rng);
        let centroids: Vec<_> = (0..3).map(|_| haar_orthonormal(4, 2, &mut rng)).collect();
        let subs = build_subcodebooks(&centroids, &cbs, &[1e-9; 3]).unwrap();
        for (s, (c, cb)) in subs.iter().zip(centroids.iter().zip(&cbs)) {
            assert_eq!(s, &vec![joint_quantize(c, cb).unwrap()]);
        }
        let r = search_isa(&v_w, &centroids, &cbs, &[1e-9; 3]).unwrap();
        assert_eq!(r.searched_count, 1);
    }

    #[test]
    fn larger_radius_never_hurts() {
        let mut rng = RngStream::new(26, 0, 0);
        let cfg = SystemConfig::new(4, 3, 2, 1);
        for _ in 0..20 {
            let cbs = books(&mut rng, 3, 4, 2, 4);
            let pos = drop_users(&cfg, &mut rng).unwrap();
            let real = realize_channel(&cfg, &pos, &mut rng).unwrap();
            let norm = normalize_and_decompose(&real.users[0], 0, 4).unwrap();
            let mut prev = f64::INFINITY;
            let mut prev_count = 0;
            for d in [0.3, 0.6, 0.9, 1.0, 1.2, 2f64.sqrt()] {
                let r = search_isa(&norm.v_w, &norm.centroids, &cbs, &[d; 3]).unwrap();
                assert!(r.distortion <= prev);
                assert!(r.searched_count >= prev_count);
                prev = r.distortion;
                prev_count = r.searched_count;
            }
        }
    }

    #[test]
    fn normalization_spans_the_row_space() {
        let mut rng = RngStream::new(27, 0, 0);
        let h_w = complex_gaussian_matrix(2, 12, &mut rng);
        let user = UserChannel::from_parts(&h_w, vec![1.0; 3], vec![1.0; 3], 4, Position { x: 0.0, y: 0.0 });
        let norm = normalize_and_decompose(&user, 0, 4).unwrap();
        assert!(norm.v_w.orthonormality_residual() < 1e-10);
        let proj = &norm.v_w * &norm.v_w.hermitian();
        let resid = h_w.try_sub(&(&h_w * &proj)).unwrap().frobenius();
        assert!(resid <= 1e-9 * h_w.frobenius());
        assert_eq!(norm.centroids.len(), 3);
        assert!(norm.centroids.iter().all(|c| c.shape() == (4, 2)));
    }

    #[test]
    fn vector_channel_source_is_conjugate_direction() {
        let mut rng = RngStream::new(28, 0, 0);
        let h_w = complex_gaussian_matrix(1, 8, &mut rng);
        let user = UserChannel::from_parts(&h_w, vec![1.0; 2], vec![1.0; 2], 4, Position { x: 0.0, y: 0.0 });
        let v = normalize_and_decompose(&user, 0, 4).unwrap().v_w;
        let dir = h_w.hermitian().scale(1.0 / h_w.frobenius());
        assert!(chordal_distance(&v, &dir).unwrap() < 1e-10);
    }

    #[test]
    fn reconstruction_matches_reported_distortion() {
        let mut rng = RngStream::new(29, 0, 0);
        let cfg = SystemConfig::new(4, 3, 2, 1);
        let cbs = books(&mut rng, 3, 4, 2, 3);
        let pos = drop_users(&cfg, &mut rng).unwrap();
        let real = realize_channel(&cfg, &pos, &mut rng).unwrap();
        let user = &real.users[0];
        let norm = normalize_and_decompose(user, 0, 4).unwrap();
        let r = search_exhaustive(&norm.v_w, &cbs).unwrap();
        let q = reconstruct(&r, &cbs, user).unwrap();
        assert!(q.v_hat_w.orthonormality_residual() < 1e-10);
        let d = chordal_distance(&q.v_hat_w, &norm.v_w).unwrap();
        assert!((d * d - r.distortion).abs() < 1e-10);
        assert_eq!(q.h_hat, q.v_hat_w.hermitian().scale_columns(&user.g_diag));
    }

    #[test]
    fn reconstruct_rejects_bad_index() {
        let mut rng = RngStream::new(30, 0, 0);
        let cbs = books(&mut rng, 2, 4, 2, 2);
        let h_w = complex_gaussian_matrix(2, 8, &mut rng);
        let user = UserChannel::from_parts(&h_w, vec![1.0; 2], vec![1.0; 2], 4, Position { x: 0.0, y: 0.0 });
        let report = FeedbackReport {
            indices: vec![0, 4],
            searched_count: 16,
            scheme: SchemeTag::PerCellExhaustive,
            distortion: 0.0,
        };
        assert!(matches!(
            reconstruct(&report, &cbs, &user),
            Err(Error::IndexOutOfRange { cell: 1, index: 4, size: 4 })
        ));
    }
}
