mod bench;
mod source;
mod verify;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use htmax::maxnorm::Truncation;
use htmax::oracle::{dense_maxnorm_argmax, densify_with_cap, DEFAULT_DENSE_CAP};
use htmax::{
    binary_search_argmax, io, search_iteration_bound, Algorithm, HtError, IterationConfig,
    RankTarget,
};
use thiserror::Error;

use source::{Family, Source};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ht(#[from] HtError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0} oracle check(s) failed")]
    Mismatch(usize),
}

impl CliError {
    /// 2 validation, 3 estimator failure, 4 oracle mismatch.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Mismatch(_) => 4,
            CliError::Ht(e) => match e {
                HtError::ZeroTensor
                | HtError::TruncationDestroyedIterate
                | HtError::NonFinite(_)
                | HtError::EmptyMode(_)
                | HtError::SearchFailed { .. } => 3,
                _ => 2,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "htmax",
    version,
    about = "Maximum norm and argmax of hierarchical Tucker tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated tensor as a JSON container.
    Gen {
        #[command(flatten)]
        source: Source,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Estimate the maximum norm.
    Maxnorm {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value_t = Alg::Adaptive)]
        alg: Alg,
        #[command(flatten)]
        tuning: Tuning,
        /// Write the convergence trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Compare against a reference value.
        #[arg(long, value_enum)]
        truth: Option<Truth>,
    },
    /// Search for an index of maximal absolute value.
    Argmax {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Check every tensor operation against the dense oracle.
    Verify {
        #[command(flatten)]
        source: Source,
    },
    /// Time the adaptive estimator and the argmax search on cheb(d, n).
    Bench {
        /// Parameter to sweep.
        #[arg(long, value_enum, default_value_t = Sweep::D)]
        sweep: Sweep,
        /// Comma-separated values of the swept parameter.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        values: Vec<usize>,
        /// The parameter held fixed (n for a d sweep, d for an n sweep).
        #[arg(long, default_value_t = 50)]
        fixed: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[command(flatten)]
        tuning: Tuning,
        /// Output CSV; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Alg {
    /// Power iteration with the Rayleigh quotient estimate.
    Rayleigh,
    /// Power iteration with the improved estimate.
    Pi,
    Ritz,
    Squaring,
    Adaptive,
}

impl From<Alg> for Algorithm {
    fn from(a: Alg) -> Self {
        match a {
            Alg::Rayleigh => Algorithm::Rayleigh,
            Alg::Pi => Algorithm::PowerIteration,
            Alg::Ritz => Algorithm::Ritz,
            Alg::Squaring => Algorithm::Squaring,
            Alg::Adaptive => Algorithm::Adaptive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Truth {
    /// Densify and take the largest absolute entry.
    Dense,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sweep {
    D,
    N,
}

#[derive(Debug, Clone, Args)]
struct Tuning {
    /// Working rank; without it or --eps products are only recompressed.
    #[arg(long, conflicts_with = "eps")]
    rank: Option<usize>,
    /// Relative truncation accuracy.
    #[arg(long)]
    eps: Option<f64>,
    /// Step budget.
    #[arg(long, default_value_t = 40)]
    iters: usize,
    /// Rayleigh-Ritz window size.
    #[arg(long, default_value_t = 5)]
    subspace: usize,
    /// Rayleigh-Ritz steps per adaptive cycle.
    #[arg(long, default_value_t = 10)]
    ritz_steps: usize,
    /// Largest trusted truncation error.
    #[arg(long, default_value_t = 1e-8)]
    cap: f64,
    #[arg(long, default_value_t = 50)]
    max_cycles: usize,
}

impl Tuning {
    fn config(&self) -> Result<IterationConfig, CliError> {
        let truncation = match (self.rank, self.eps) {
            (Some(r), _) => Truncation::Ranks(RankTarget::Uniform(r)),
            (None, Some(eps)) => Truncation::Tolerance(eps),
            (None, None) => Truncation::Exact,
        };
        let cfg = IterationConfig {
            max_iters: self.iters,
            truncation,
            subspace: self.subspace,
            ritz_steps: self.ritz_steps,
            trunc_cap: self.cap,
            max_cycles: self.max_cycles,
            ..IterationConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn dense_cap() -> Result<u128, CliError> {
    match std::env::var("HTMAX_DENSE_CAP") {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|c| c.is_finite() && *c >= 1.0)
            .map(|c| c as u128)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "HTMAX_DENSE_CAP must be a positive number, got {v:?}"
                ))
            }),
        Err(_) => Ok(DEFAULT_DENSE_CAP),
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { source, output } => {
            let a = source.load()?;
            match output {
                Some(p) => io::save(&a, p)?,
                None => println!("{}", io::to_json(&a)),
            }
        }
        Command::Maxnorm {
            source,
            alg,
            tuning,
            trace,
            truth,
        } => {
            let a = source.load()?;
            let mut cfg = tuning.config()?;
            cfg.ritz_every_step = trace.is_some();
            let est = Algorithm::from(alg).run(&a, &cfg)?;
            println!("estimate {:.17e}", est.value);
            println!("status {}", est.trace.status.as_str());
            println!("records {}", est.trace.records.len());
            let reference = match truth {
                Some(Truth::Dense) => {
                    Some(dense_maxnorm_argmax(&densify_with_cap(&a, dense_cap()?)?)?.0)
                }
                None => None,
            };
            if let Some(t) = reference {
                println!("truth {t:.17e}");
                println!("rel_err {:.3e}", (est.value - t).abs() / t);
                if let Some(rate) = est.trace.convergence_rate(t) {
                    println!("rate {rate:.4}");
                }
            }
            if let Some(path) = trace {
                let csv = match reference {
                    Some(t) => est.trace.to_csv_with_truth(t),
                    None => est.trace.to_csv(),
                };
                fs::write(path, csv)?;
            }
        }
        Command::Argmax { source, tuning } => {
            let a = source.load()?;
            let r = binary_search_argmax(&a, &tuning.config()?)?;
            println!("index {}", r.index);
            println!("value {:.17e}", r.value);
            println!("estimated_maxnorm {:.17e}", r.estimated_maxnorm);
            println!(
                "iterations {} of at most {}",
                r.iterations_used,
                search_iteration_bound(a.mode_sizes())
            );
            println!("evaluations {}", r.evaluations);
            println!("rank_one_shortcut {}", r.shortcuts.rank_one);
            println!("zero_rows_removed {}", r.shortcuts.zero_rows_removed);
        }
        Command::Verify { source } => {
            let a = source.load()?;
            let mut checks = verify::run(&a, dense_cap()?)?;
            if source.family() == Some(Family::Counterexample) {
                checks.push(verify::counterexample(&a, source.sigma1, source.sigma2)?);
            }
            let mut failed = 0;
            for c in &checks {
                let verdict = if c.passed() { "pass" } else { "FAIL" };
                failed += usize::from(!c.passed());
                println!(
                    "{verdict} {} (error {:.2e}, tol {:.0e})",
                    c.name, c.error, c.tol
                );
            }
            if failed > 0 {
                return Err(CliError::Mismatch(failed));
            }
        }
        Command::Bench {
            sweep,
            values,
            fixed,
            reps,
            tuning,
            output,
        } => {
            let cfg = tuning.config()?;
            let mut rows = vec![bench::HEADER.to_string()];
            for v in values {
                let (d, n) = match sweep {
                    Sweep::D => (v, fixed),
                    Sweep::N => (fixed, v),
                };
                rows.extend(bench::point(d, n, reps, &cfg)?);
            }
            write_out(output.as_ref(), &(rows.join("\n") + "\n"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
