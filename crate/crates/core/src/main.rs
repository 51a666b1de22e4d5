use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netmimo::analysis::{distortion_approx, Dims};
use netmimo::harness::verify::{self, Budget, Check, Suite};
use netmimo::harness::{emit_csv, format_sig, render_csv, run_experiment, ExperimentSpec, Scheme};
use netmimo::Error;

/// Environment variable that overrides the experiment seed (the `--seed` flag wins).
const SEED_ENV: &str = "NETMIMO_SEED";

#[derive(Parser)]
#[command(name = "netmimo", version, about = "Network MIMO limited feedback with per-cell product codebooks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON spec and write its CSV.
    Simulate {
        /// Experiment spec (JSON, unknown keys rejected).
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Output CSV; defaults to the spec's `output_path`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite and report one PASS/FAIL line per check.
    Verify {
        /// One of isa-equivalence, zero-forcing, distortion, concentration,
        /// baselines, tradeoff, scaling, or `all`.
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        run: RunArgs,
        /// Replace every Monte Carlo sample size with this value.
        #[arg(long)]
        trials: Option<usize>,
        /// Write the checks as CSV (suite,check,value,criterion,pass).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate Monte Carlo mean product-codebook distortion against the closed form.
    Distortion {
        #[arg(long, default_value_t = 4)]
        n_t: usize,
        #[arg(long, default_value_t = 3)]
        n_bs: usize,
        #[arg(long, default_value_t = 2)]
        n_r: usize,
        /// Total bits per user, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [8u32, 12, 16, 20])]
        bits: Vec<u32>,
        /// Isotropic sources per budget, each with fresh codebooks.
        #[arg(long, default_value_t = 2000)]
        sources: usize,
        #[command(flatten)]
        run: RunArgs,
        /// Output CSV (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the ISA sub-codebook radius against exhaustive search.
    SweepDelta {
        /// Radii to sweep, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.2, std::f64::consts::SQRT_2])]
        deltas: Vec<f64>,
        /// Spec to start from; its schemes and delta grid are replaced.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Trials when no spec is given.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        run: RunArgs,
        /// Output CSV (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment seed; overrides NETMIMO_SEED and the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 uses every core). Output does not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl RunArgs {
    fn seed(&self, fallback: u64) -> Result<u64, Error> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(fallback),
        }
    }
}

enum Failure {
    Verification,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            let config = matches!(e, Error::InvalidConfig(_) | Error::Json { .. })
                || matches!(&e, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound);
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
            }
            std::fs::write(p, text).map_err(|e| Error::Io { path: p.into(), source: e })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, run, out } => {
            let mut spec = ExperimentSpec::load(&config)?;
            spec.base.seed = run.seed(spec.base.seed)?;
            let result = run_experiment(&spec, run.workers)?;
            let path = out.unwrap_or_else(|| PathBuf::from(&spec.output_path));
            emit_csv(&result, &path)?;
            let excluded: usize = result.rows.iter().map(|r| r.excluded).sum();
            eprintln!(
                "{}: {} rows, {} excluded samples, {}/{} infeasible BD instances -> {}",
                result.name,
                result.rows.len(),
                excluded,
                result.bd_infeasible,
                result.bd_instances,
                path.display()
            );
            Ok(())
        }
        Command::Verify { suite, run, trials, out } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![Suite::from_name(&suite)
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown suite {suite:?}")))?]
            };
            let budget = trials.map(Budget::uniform).unwrap_or_default();
            let seed = run.seed(1)?;
            let mut checks: Vec<Check> = Vec::new();
            for s in suites {
                let got = verify::run_suite(s, seed, &budget, run.workers)?;
                for c in &got {
                    println!("{}", c.line());
                }
                checks.extend(got);
            }
            if let Some(p) = out {
                write_or_print(&verify::render_checks(&checks), Some(&p))?;
            }
            if checks.iter().all(|c| c.pass) {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        Command::Distortion { n_t, n_bs, n_r, bits, sources, run, out } => {
            if n_t == 0 || n_bs == 0 || n_r == 0 || n_r > n_t || sources == 0 {
                return Err(Error::InvalidConfig("need 1 <= n_r <= n_t, n_bs >= 1, sources >= 1".into()).into());
            }
            let dims = Dims::new(n_t, n_bs, n_r, 1);
            let seed = run.seed(1)?;
            let mut text = String::from("bits,mc_mean,closed_form,closed_form_pre_stirling\n");
            for b in bits {
                if b == 0 || b.div_ceil(n_bs as u32) > 24 {
                    return Err(Error::InvalidConfig(format!("{b} bits is outside 1..={}", 24 * n_bs)).into());
                }
                let mc = verify::mean_product_distortion(dims, b, sources, seed)?;
                let cf = distortion_approx(f64::from(b), dims)?;
                text.push_str(&format!(
                    "{b},{},{},{}\n",
                    format_sig(mc),
                    format_sig(cf.simplified),
                    format_sig(cf.pre_stirling)
                ));
            }
            write_or_print(&text, out.as_deref())?;
            Ok(())
        }
        Command::SweepDelta { deltas, config, trials, run, out } => {
            let mut spec = match config {
                Some(p) => ExperimentSpec::load(&p)?,
                None => verify::tradeoff_spec(1, trials),
            };
            spec.name = format!("{}-delta-sweep", spec.name);
            spec.schemes = vec![Scheme::PerCellExhaustive, Scheme::PerCellIsa];
            spec.delta_grid = Some(deltas);
            spec.base.seed = run.seed(spec.base.seed)?;
            let result = run_experiment(&spec, run.workers)?;
            match out {
                Some(p) => emit_csv(&result, &p)?,
                None => print!("{}", render_csv(&result)),
            }
            Ok(())
        }
    }
}
