//! Random subspace codebooks, chordal distance and the Givens baseline.

mod givens;

pub use givens::{
    givens_decode, givens_encode, givens_parameters, givens_rebuild, pair_count, GivensCode, GivensPair,
    GivensQuantizer,
};

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::numerics::{haar_orthonormal, ComplexMatrix};

/// Orthonormality tolerance for inputs to distance computations.
pub const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookKind {
    /// `n_T x n_R` codewords for one BS.
    PerCell,
    /// `N·n_T x n_R` codewords for the composite transmitter.
    JointCell,
}

impl CodebookKind {
    fn tag(self) -> u32 {
        match self {
            CodebookKind::PerCell => 0,
            CodebookKind::JointCell => 1,
        }
    }

    fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            0 => Ok(CodebookKind::PerCell),
            1 => Ok(CodebookKind::JointCell),
            t => Err(Error::Container(format!("unknown codebook kind {t}"))),
        }
    }
}

/// `2^bits` orthonormal codewords of one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    kind: CodebookKind,
    bits: u32,
    codewords: Vec<ComplexMatrix>,
}

impl Codebook {
    /// Draws `2^bits` Haar codewords of size `m x n_r`.
    pub fn random<R: Rng + ?Sized>(kind: CodebookKind, m: usize, n_r: usize, bits: u32, rng: &mut R) -> Self {
        let codewords = (0..1usize << bits).map(|_| haar_orthonormal(m, n_r, rng)).collect();
        Codebook { kind, bits, codewords }
    }

    /// Wraps explicit codewords; the count must be a power of two and every
    /// codeword orthonormal with a common shape.
    pub fn from_codewords(kind: CodebookKind, codewords: Vec<ComplexMatrix>) -> Result<Self> {
        let first = codewords.first().ok_or(Error::EmptyCodebook)?;
        if !codewords.len().is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "codebook size {} is not a power of two",
                codewords.len()
            )));
        }
        let shape = first.shape();
        for cw in &codewords {
            if cw.shape() != shape {
                return Err(Error::DimensionMismatch {
                    op: "codebook",
                    left: shape,
                    right: cw.shape(),
                });
            }
            let residual = cw.orthonormality_residual();
            if residual > 1e-10 {
                return Err(Error::NotOrthonormal { residual });
            }
        }
        Ok(Codebook {
            kind,
            bits: codewords.len().trailing_zeros(),
            codewords,
        })
    }

    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codewords(&self) -> &[ComplexMatrix] {
        &self.codewords
    }

    pub fn get(&self, index: usize) -> Option<&ComplexMatrix> {
        self.codewords.get(index)
    }

    /// Codeword shape `(m, n_r)`.
    pub fn shape(&self) -> (usize, usize) {
        self.codewords[0].shape()
    }

    /// The first `2^bits` codewords as a smaller codebook.
    pub fn prefix(&self, bits: u32) -> Result<Codebook> {
        if bits > self.bits {
            return Err(Error::InvalidConfig(format!(
                "cannot take a {bits}-bit prefix of a {}-bit codebook",
                self.bits
            )));
        }
        Ok(Codebook {
            kind: self.kind,
            bits,
            codewords: self.codewords[..1usize << bits].to_vec(),
        })
    }

    /// Writes the codebook as a little-endian container: four `u32` header
    /// words (kind, m, n_r, bits) followed by every codeword in row-major
    /// order as `(re, im)` pairs of `f64`.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (m, n) = self.shape();
        for word in [self.kind.tag(), m as u32, n as u32, self.bits] {
            w.write_all(&word.to_le_bytes())?;
        }
        for cw in &self.codewords {
            for z in cw.as_slice() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Codebook> {
        let mut buf4 = [0u8; 4];
        let mut header = [0u32; 4];
        for h in &mut header {
            r.read_exact(&mut buf4)
                .map_err(|e| Error::Container(format!("truncated header: {e}")))?;
            *h = u32::from_le_bytes(buf4);
        }
        let [kind, m, n, bits] = header;
        let kind = CodebookKind::from_tag(kind)?;
        if m == 0 || n == 0 || n > m || bits > 24 {
            return Err(Error::Container(format!("bad header m={m} n_r={n} bits={bits}")));
        }
        let (m, n) = (m as usize, n as usize);
        let mut buf8 = [0u8; 8];
        let mut next = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut buf8)
                .map_err(|e| Error::Container(format!("truncated payload: {e}")))?;
            Ok(f64::from_le_bytes(buf8))
        };
        let mut codewords = Vec::with_capacity(1 << bits);
        for _ in 0..1usize << bits {
            let mut data = Vec::with_capacity(m * n);
            for _ in 0..m * n {
                let re = next(&mut r)?;
                let im = next(&mut r)?;
                data.push(Complex64::new(re, im));
            }
            let cw = ComplexMatrix::from_row_major(m, n, data)?;
            if !cw.is_finite() {
                return Err(Error::NonFinite);
            }
            codewords.push(cw);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(|e| Error::Container(e.to_string()))? != 0 {
            return Err(Error::Container("trailing bytes after payload".into()));
        }
        Codebook::from_codewords(kind, codewords)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Codebook> {
        Codebook::read_from(bytes)
    }
}

/// One per-cell codebook per BS with `2^{B_n}` codewords each. With
/// `cfg.shared_codebook` every cell uses a prefix of a single draw.
pub fn build_percell_codebooks<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Vec<Codebook> {
    if cfg.shared_codebook {
        let max_bits = cfg.bits_per_cell.iter().copied().max().unwrap_or(0);
        let master = Codebook::random(CodebookKind::PerCell, cfg.n_t, cfg.n_r, max_bits, rng);
        cfg.bits_per_cell
            .iter()
            .map(|&b| master.prefix(b).expect("prefix within master size"))
            .collect()
    } else {
        cfg.bits_per_cell
            .iter()
            .map(|&b| Codebook::random(CodebookKind::PerCell, cfg.n_t, cfg.n_r, b, rng))
            .collect()
    }
}

/// A codebook over the composite `N·n_T` transmitter using the full budget `B_k`.
pub fn build_jointcell_codebook<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Codebook {
    Codebook::random(CodebookKind::JointCell, cfg.total_tx(), cfg.n_r, cfg.total_bits(), rng)
}

fn check_orthonormal(v: &ComplexMatrix) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite);
    }
    let residual = v.orthonormality_residual();
    if residual > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { residual });
    }
    Ok(())
}

/// Chordal distance `(1/√2)‖V₁V₁† − V₂V₂†‖_F` between the column spans of two
/// orthonormal matrices of equal shape.
pub fn chordal_distance(v1: &ComplexMatrix, v2: &ComplexMatrix) -> Result<f64> {
    if v1.shape() != v2.shape() {
        return Err(Error::DimensionMismatch {
            op: "chordal_distance",
            left: v1.shape(),
            right: v2.shape(),
        });
    }
    check_orthonormal(v1)?;
    check_orthonormal(v2)?;
    Ok(chordal_distance_unchecked(v1, v2))
}

/// Chordal distance for inputs already known to be orthonormal, as
/// `‖(I − V₁V₁†)V₂‖_F`. Equal to `√(n_R − ‖V₁†V₂‖²_F)` but without the
/// cancellation that form suffers for nearby subspaces.
pub(crate) fn chordal_distance_unchecked(v1: &ComplexMatrix, v2: &ComplexMatrix) -> f64 {
    let coeff = v1.adjoint_mul(v2).expect("equal shapes");
    v2.try_sub(&(v1 * &coeff)).expect("equal shapes").frobenius()
}

/// `(1/√N)` times the vertical stack of the per-cell codewords.
pub fn aggregate_codeword(parts: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    if let Some(first) = parts.first() {
        if let Some(bad) = parts.iter().find(|p| p.shape() != first.shape()) {
            return Err(Error::DimensionMismatch {
                op: "aggregate_codeword",
                left: first.shape(),
                right: bad.shape(),
            });
        }
    }
    let stacked = ComplexMatrix::vstack(parts)?;
    Ok(stacked.scale(1.0 / (parts.len() as f64).sqrt()))
}

/// Index of the codeword nearest to `source` in chordal distance, lowest index on ties.
pub fn joint_quantize(source: &ComplexMatrix, cb: &Codebook) -> Result<usize> {
    if cb.is_empty() {
        return Err(Error::EmptyCodebook);
    }
    if source.shape() != cb.shape() {
        return Err(Error::DimensionMismatch {
            op: "joint_quantize",
            left: source.shape(),
            right: cb.shape(),
        });
    }
    check_orthonormal(source)?;
    // Minimising distance is maximising ‖V_J† V‖²_F.
    let mut best = (0, f64::NEG_INFINITY);
    for (j, cw) in cb.codewords().iter().enumerate() {
        let score = cw.adjoint_mul(source)?.frobenius_sq();
        if score > best.1 {
            best = (j, score);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn e(m: usize, cols: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(m, cols.len(), |i, j| Complex64::new(f64::from(u8::from(i == cols[j])), 0.0))
    }

    #[test]
    fn distance_reference_values() {
        let v = e(2, &[0]);
        assert_eq!(chordal_distance(&v, &v).unwrap(), 0.0);
        assert!((chordal_distance(&e(2, &[0]), &e(2, &[1])).unwrap() - 1.0).abs() < 1e-15);
        let d = chordal_distance(&e(4, &[0, 1]), &e(4, &[2, 3])).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn distance_rejects_bad_inputs() {
        let a = e(4, &[0, 1]);
        assert!(matches!(chordal_distance(&a, &e(4, &[0])), Err(Error::DimensionMismatch { .. })));
        let skewed = a.scale(1.1);
        assert!(matches!(chordal_distance(&skewed, &a), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn codebook_sizes() {
        let mut rng = RngStream::new(1, 0, 0);
        let cfg = SystemConfig::new(4, 3, 2, 6);
        let cbs = build_percell_codebooks(&cfg, &mut rng);
        assert_eq!(cbs.len(), 3);
        for cb in &cbs {
            assert_eq!(cb.len(), 16);
            assert_eq!(cb.shape(), (4, 2));
        }
        assert_ne!(cbs[0], cbs[1]);
        let zero = Codebook::random(CodebookKind::PerCell, 4, 2, 0, &mut rng);
        assert_eq!(zero.len(), 1);
        let joint = build_jointcell_codebook(&cfg, &mut rng);
        assert_eq!((joint.len(), joint.shape()), (4096, (12, 2)));
    }

    #[test]
    fn shared_codebooks_are_prefixes() {
        let mut rng = RngStream::new(2, 0, 0);
        let mut cfg = SystemConfig::new(4, 3, 2, 6).with_total_bits(8);
        cfg.shared_codebook = true;
        let cbs = build_percell_codebooks(&cfg, &mut rng);
        assert_eq!(cbs[0], cbs[1]);
        assert_eq!(cbs[2].codewords(), &cbs[0].codewords()[..4]);
    }

    #[test]
    fn planted_codeword_is_found() {
        let mut rng = RngStream::new(3, 0, 0);
        let cb = Codebook::random(CodebookKind::PerCell, 4, 2, 4, &mut rng);
        assert_eq!(joint_quantize(&cb.codewords()[5], &cb).unwrap(), 5);
        let single = cb.prefix(0).unwrap();
        let src = haar_orthonormal(4, 2, &mut rng);
        assert_eq!(joint_quantize(&src, &single).unwrap(), 0);
    }

    #[test]
    fn aggregate_of_one_part_is_identity() {
        let mut rng = RngStream::new(4, 0, 0);
        let v = haar_orthonormal(4, 2, &mut rng);
        assert_eq!(aggregate_codeword(&[&v]).unwrap(), v);
        let w = haar_orthonormal(4, 1, &mut rng);
        assert!(aggregate_codeword(&[&v, &w]).is_err());
    }

    #[test]
    fn container_round_trip() {
        let mut rng = RngStream::new(5, 0, 0);
        let cb = Codebook::random(CodebookKind::JointCell, 6, 2, 3, &mut rng);
        let bytes = cb.to_bytes();
        assert_eq!(bytes.len(), 16 + 8 * 6 * 2 * 16);
        assert_eq!(&bytes[..4], &1u32.to_le_bytes());
        assert_eq!(Codebook::from_bytes(&bytes).unwrap(), cb);
        assert!(Codebook::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(Codebook::from_bytes(&longer).is_err());
    }
}
