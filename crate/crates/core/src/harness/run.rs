use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use crate::analysis::{bit_rule_bits, normalized_g_sum, relative_complexity, Dims, ScalingInputs};
use crate::channel::{drop_users, realize_channel, snr_calibration, split_bits, CodebookRedraw, SystemConfig};
use crate::codebook::{build_percell_codebooks, Codebook, CodebookKind, GivensQuantizer};
use crate::error::{Error, Result};
use crate::feedback::{
    normalize_and_decompose, quantize_givens, quantize_jointcell, reconstruct, search_exhaustive, search_isa,
    FeedbackReport, Normalized, QuantizedCsi,
};
use crate::metrics::{mean_ci, RateKernel};
use crate::numerics::{ComplexMatrix, RngStream};
use crate::precoding::{bd_precoders, power_per_stream};

use super::spec::{BitMode, ExperimentSpec, Scheme};

const DOMAIN_TRIAL: u64 = 1;
const DOMAIN_CODEBOOK: u64 = 2;
/// Per-trial codebook domains start here and are offset by the trial index.
const DOMAIN_CODEBOOK_TRIAL: u64 = 1 << 32;

/// Largest tolerated fraction of infeasible BD instances.
pub const MAX_INFEASIBLE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub snr_db: f64,
    pub scheme: String,
    /// Mean over trials of the user-averaged rate.
    pub rate_mean: f64,
    pub rate_ci: f64,
    pub distortion_mean: f64,
    pub rel_complexity: f64,
    /// Samples dropped for an ill-conditioned interference covariance.
    pub excluded: usize,
    /// Mean per-user feedback budget `B_k`.
    pub bits: f64,
    /// Mean of the paired loss against perfect-CSI precoding.
    pub loss_mean: f64,
    pub loss_ci: f64,
    pub trials_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    /// Sorted by `(snr_db, scheme)`.
    pub rows: Vec<ResultRow>,
    /// Fingerprint of the channel realization of each trial.
    pub fingerprints: Vec<u64>,
    pub bd_instances: usize,
    pub bd_infeasible: usize,
    pub codebook_redraw: CodebookRedraw,
}

impl ExperimentResult {
    pub fn row(&self, snr_db: f64, scheme: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.snr_db == snr_db && r.scheme == scheme)
    }

    pub fn series(&self, scheme: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.scheme == scheme).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Gcsi,
    Exhaustive,
    Isa(Vec<f64>),
    Joint,
    /// Bits per BS.
    Givens(u32),
}

#[derive(Debug, Clone)]
struct Series {
    label: String,
    kind: Kind,
}

fn series_of(spec: &ExperimentSpec) -> Vec<Series> {
    let n = spec.base.n_bs;
    let mut out = Vec::new();
    for &s in &spec.schemes {
        let kind = match s {
            Scheme::Gcsi => Kind::Gcsi,
            Scheme::PerCellExhaustive => Kind::Exhaustive,
            Scheme::PerCellIsa => match &spec.delta_grid {
                Some(grid) => {
                    for &d in grid {
                        out.push(Series {
                            label: format!("percell-isa@{d}"),
                            kind: Kind::Isa(vec![d; n]),
                        });
                    }
                    continue;
                }
                None => Kind::Isa(spec.base.delta.clone()),
            },
            Scheme::JointCell => Kind::Joint,
            Scheme::Givens4 => Kind::Givens(4),
            Scheme::Givens8 => Kind::Givens(8),
        };
        out.push(Series {
            label: s.name().to_string(),
            kind,
        });
    }
    out
}

#[derive(Debug, Default)]
struct Books {
    percell: BTreeMap<Vec<u32>, Vec<Codebook>>,
    joint: BTreeMap<u32, Codebook>,
}

fn stream_index(tag: u64, bits: &[u32]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ tag;
    for &b in bits {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn build_books(cfg: &SystemConfig, percell: &BTreeSet<Vec<u32>>, joint: &BTreeSet<u32>, domain: u64) -> Books {
    let mut books = Books::default();
    for bits in percell {
        let mut rng = RngStream::new(cfg.seed, domain, stream_index(0, bits));
        let mut c = cfg.clone();
        c.bits_per_cell = bits.clone();
        books.percell.insert(bits.clone(), build_percell_codebooks(&c, &mut rng));
    }
    for &b in joint {
        let mut rng = RngStream::new(cfg.seed, domain, stream_index(1, &[b]));
        books.joint
            .insert(b, Codebook::random(CodebookKind::JointCell, cfg.total_tx(), cfg.n_r, b, &mut rng));
    }
    books
}

struct Ctx<'a> {
    cfg: &'a SystemConfig,
    bit_mode: BitMode,
    series: Vec<Series>,
    p_max: Vec<f64>,
    p_stream: Vec<f64>,
    percell_needs: BTreeSet<Vec<u32>>,
    joint_needs: BTreeSet<u32>,
    shared: Option<Books>,
    givens: HashMap<u32, GivensQuantizer>,
}

/// Per-trial, per-cell statistics averaged over users.
#[derive(Debug, Clone, Default)]
struct Cell {
    rate: Option<f64>,
    loss: Option<f64>,
    distortion: f64,
    complexity: f64,
    bits: f64,
    excluded: usize,
}

struct TrialOut {
    fingerprint: u64,
    /// `[snr][series]`
    cells: Vec<Vec<Cell>>,
    bd_instances: usize,
    bd_infeasible: usize,
}

impl Ctx<'_> {
    fn dims(&self) -> Dims {
        Dims::new(self.cfg.n_t, self.cfg.n_bs, self.cfg.n_r, self.cfg.n_users)
    }

    /// Per-user total budget under the scaled bit rule at SNR point `s`.
    fn scaled_bits(&self, pathloss: &[f64], s: usize, epsilon: f64, cap: u32) -> Result<u32> {
        let g_min = pathloss.iter().copied().fold(f64::INFINITY, f64::min);
        let si = ScalingInputs {
            rho: self.p_max[s] * g_min / self.cfg.noise_power,
            g_sum: normalized_g_sum(pathloss)?,
            b_k: 0.0,
            epsilon,
            dims: self.dims(),
        };
        Ok(bit_rule_bits(&si)?.min(cap))
    }

    /// Per-cell budgets of one user for `kind` at SNR point `s`.
    fn budget(&self, kind: &Kind, pathloss: &[f64], s: usize) -> Result<Vec<u32>> {
        let n = self.cfg.n_bs;
        Ok(match (kind, self.bit_mode) {
            (Kind::Gcsi, _) => Vec::new(),
            (Kind::Givens(per_bs), _) => vec![*per_bs; n],
            (_, BitMode::Fixed) => self.cfg.bits_per_cell.clone(),
            (_, BitMode::Scaled { epsilon, cap_bits }) => {
                split_bits(self.scaled_bits(pathloss, s, epsilon, cap_bits)?, n)
            }
        })
    }

    fn quantize(&self, kind: &Kind, books: &Books, norm: &Normalized, user: &crate::channel::UserChannel, bits: &[u32]) -> Result<(FeedbackReport, QuantizedCsi, f64)> {
        let total: u32 = bits.iter().sum();
        match kind {
            Kind::Gcsi => unreachable!("perfect CSI is not quantised"),
            Kind::Exhaustive | Kind::Isa(_) => {
                let cbs = &books.percell[bits];
                let report = match kind {
                    Kind::Isa(delta) => search_isa(&norm.v_w, &norm.centroids, cbs, delta)?,
                    _ => search_exhaustive(&norm.v_w, cbs)?,
                };
                let q = reconstruct(&report, cbs, user)?;
                let c = relative_complexity(report.searched_count, total);
                Ok((report, q, c))
            }
            Kind::Joint => {
                let (r, q) = quantize_jointcell(&norm.v_w, &books.joint[&total], user)?;
                Ok((r, q, 1.0))
            }
            Kind::Givens(per_bs) => {
                let (r, q) = quantize_givens(&norm.v_w, &self.givens[per_bs], user)?;
                Ok((r, q, 0.0))
            }
        }
    }

    fn run_trial(&self, trial: usize) -> Result<TrialOut> {
        let cfg = self.cfg;
        let mut rng = RngStream::new(cfg.seed, DOMAIN_TRIAL, trial as u64);
        let positions = drop_users(cfg, &mut rng)?;
        let real = realize_channel(cfg, &positions, &mut rng)?;
        let n_snr = self.p_stream.len();
        let mut out = TrialOut {
            fingerprint: real.fingerprint(),
            cells: vec![vec![Cell::default(); self.series.len()]; n_snr],
            bd_instances: 1,
            bd_infeasible: 0,
        };
        let h: Vec<ComplexMatrix> = real.users.iter().map(|u| u.h.clone()).collect();
        let gcsi = match bd_precoders(&h, 0.0) {
            Ok(set) => set,
            Err(Error::BdInfeasible { .. }) => {
                out.bd_infeasible = 1;
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        let csit: Vec<Vec<f64>> = {
            let kernels = h
                .iter()
                .map(|hk| RateKernel::new(hk, &gcsi.w))
                .collect::<Result<Vec<_>>>()?;
            (0..n_snr)
                .map(|s| {
                    kernels
                        .iter()
                        .enumerate()
                        .map(|(k, kern)| kern.rate_csit(k, self.p_stream[s], cfg.noise_power))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?
        };

        let owned;
        let books = match &self.shared {
            Some(b) => b,
            None => {
                owned = build_books(cfg, &self.percell_needs, &self.joint_needs, DOMAIN_CODEBOOK_TRIAL + trial as u64);
                &owned
            }
        };
        let needs_norm = self.series.iter().any(|s| s.kind != Kind::Gcsi);
        let norms = if needs_norm {
            real.users
                .iter()
                .enumerate()
                .map(|(k, u)| normalize_and_decompose(u, k, cfg.n_t))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let k_users = real.users.len() as f64;

        for (si, series) in self.series.iter().enumerate() {
            if series.kind == Kind::Gcsi {
                for s in 0..n_snr {
                    out.cells[s][si] = Cell {
                        rate: Some(csit[s].iter().sum::<f64>() / k_users),
                        loss: Some(0.0),
                        ..Cell::default()
                    };
                }
                continue;
            }
            // SNR points sharing every user's budget share quantisation and precoders.
            let mut groups: BTreeMap<Vec<Vec<u32>>, Vec<usize>> = BTreeMap::new();
            for s in 0..n_snr {
                let key = real
                    .users
                    .iter()
                    .map(|u| self.budget(&series.kind, &u.pathloss_lin, s))
                    .collect::<Result<Vec<_>>>()?;
                groups.entry(key).or_default().push(s);
            }
            let mut cache: HashMap<(usize, Vec<u32>), (FeedbackReport, QuantizedCsi, f64)> = HashMap::new();
            for (budgets, snrs) in groups {
                let mut h_hat = Vec::with_capacity(budgets.len());
                let (mut dist, mut cplx) = (0.0, 0.0);
                for (k, bits) in budgets.iter().enumerate() {
                    let key = (k, bits.clone());
                    if !cache.contains_key(&key) {
                        let q = self.quantize(&series.kind, books, &norms[k], &real.users[k], bits)?;
                        cache.insert(key.clone(), q);
                    }
                    let (report, q, c) = &cache[&key];
                    dist += report.distortion;
                    cplx += c;
                    h_hat.push(q.h_hat.clone());
                }
                let bits_mean = budgets.iter().map(|b| f64::from(b.iter().sum::<u32>())).sum::<f64>() / k_users;
                out.bd_instances += 1;
                let lf = match bd_precoders(&h_hat, 0.0) {
                    Ok(set) => set,
                    Err(Error::BdInfeasible { .. }) => {
                        out.bd_infeasible += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let kernels = h
                    .iter()
                    .map(|hk| RateKernel::new(hk, &lf.w))
                    .collect::<Result<Vec<_>>>()?;
                for s in snrs {
                    let (mut rate, mut loss, mut used, mut excluded) = (0.0, 0.0, 0usize, 0usize);
                    for (k, kern) in kernels.iter().enumerate() {
                        match kern.rate_lf(k, self.p_stream[s], cfg.noise_power) {
                            Ok(r) => {
                                rate += r;
                                loss += csit[s][k] - r;
                                used += 1;
                            }
                            Err(Error::IllConditioned { .. }) => excluded += 1,
                            Err(e) => return Err(e),
                        }
                    }
                    out.cells[s][si] = Cell {
                        rate: (used > 0).then(|| rate / used as f64),
                        loss: (used > 0).then(|| loss / used as f64),
                        distortion: dist / k_users,
                        complexity: cplx / k_users,
                        bits: bits_mean,
                        excluded,
                    };
                }
            }
        }
        Ok(out)
    }
}

/// Runs every trial of `spec` on `workers` threads (0 picks the rayon
/// default). Results do not depend on the worker count.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<ExperimentResult> {
    spec.validate()?;
    let cfg = &spec.base;
    let series = series_of(spec);
    let p_max = spec
        .snr_grid_db
        .iter()
        .map(|&s| snr_calibration(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let p_stream = p_max
        .iter()
        .map(|&p| power_per_stream(cfg.n_bs, p, cfg.n_users, cfg.n_r))
        .collect();

    let totals: Vec<u32> = match spec.bit_mode {
        BitMode::Fixed => vec![cfg.total_bits()],
        BitMode::Scaled { cap_bits, .. } => {
            let n = cfg.n_bs as u32;
            (0..=cap_bits / n).map(|i| i * n).chain([cap_bits]).collect()
        }
    };
    let mut percell_needs = BTreeSet::new();
    let mut joint_needs = BTreeSet::new();
    let mut givens = HashMap::new();
    for s in &series {
        match s.kind {
            Kind::Exhaustive | Kind::Isa(_) => match spec.bit_mode {
                BitMode::Fixed => {
                    percell_needs.insert(cfg.bits_per_cell.clone());
                }
                BitMode::Scaled { .. } => {
                    percell_needs.extend(totals.iter().map(|&b| split_bits(b, cfg.n_bs)));
                }
            },
            Kind::Joint => joint_needs.extend(totals.iter().copied()),
            Kind::Givens(per_bs) => {
                givens.insert(per_bs, GivensQuantizer::new(cfg.total_tx(), cfg.n_r, per_bs * cfg.n_bs as u32)?);
            }
            Kind::Gcsi => {}
        }
    }
    let shared = match cfg.codebook_redraw {
        CodebookRedraw::PerExperiment => Some(build_books(cfg, &percell_needs, &joint_needs, DOMAIN_CODEBOOK)),
        CodebookRedraw::PerTrial => None,
    };
    let ctx = Ctx {
        cfg,
        bit_mode: spec.bit_mode,
        series,
        p_max,
        p_stream,
        percell_needs,
        joint_needs,
        shared,
        givens,
    };

    let run = || -> Vec<Result<TrialOut>> { (0..cfg.trials).into_par_iter().map(|t| ctx.run_trial(t)).collect() };
    let outs = if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run)
    } else {
        run()
    };
    let outs = outs.into_iter().collect::<Result<Vec<_>>>()?;
    reduce(spec, &ctx.series, outs, cfg.codebook_redraw)
}

fn reduce(spec: &ExperimentSpec, series: &[Series], outs: Vec<TrialOut>, redraw: CodebookRedraw) -> Result<ExperimentResult> {
    let bd_instances: usize = outs.iter().map(|o| o.bd_instances).sum();
    let bd_infeasible: usize = outs.iter().map(|o| o.bd_infeasible).sum();
    if bd_infeasible as f64 > MAX_INFEASIBLE_FRACTION * bd_instances as f64 {
        return Err(Error::Aborted(format!(
            "{bd_infeasible} of {bd_instances} block-diagonalization instances were infeasible"
        )));
    }
    let mut rows = Vec::new();
    for (s, &snr_db) in spec.snr_grid_db.iter().enumerate() {
        for (si, ser) in series.iter().enumerate() {
            let cells: Vec<&Cell> = outs.iter().map(|o| &o.cells[s][si]).filter(|c| c.rate.is_some()).collect();
            let rates: Vec<f64> = cells.iter().filter_map(|c| c.rate).collect();
            let losses: Vec<f64> = cells.iter().filter_map(|c| c.loss).collect();
            let avg = |f: fn(&Cell) -> f64| {
                if cells.is_empty() {
                    f64::NAN
                } else {
                    cells.iter().map(|c| f(c)).sum::<f64>() / cells.len() as f64
                }
            };
            let (rate_mean, rate_ci) = mean_ci(&rates);
            let (loss_mean, loss_ci) = mean_ci(&losses);
            rows.push(ResultRow {
                snr_db,
                scheme: ser.label.clone(),
                rate_mean,
                rate_ci,
                distortion_mean: avg(|c| c.distortion),
                rel_complexity: avg(|c| c.complexity),
                excluded: outs.iter().map(|o| o.cells[s][si].excluded).sum(),
                bits: avg(|c| c.bits),
                loss_mean,
                loss_ci,
                trials_used: rates.len(),
            });
        }
    }
    rows.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db).then_with(|| a.scheme.cmp(&b.scheme)));
    Ok(ExperimentResult {
        name: spec.name.clone(),
        rows,
        fingerprints: outs.iter().map(|o| o.fingerprint).collect(),
        bd_instances,
        bd_infeasible,
        codebook_redraw: redraw,
    })
}
