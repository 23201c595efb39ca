//! Command line pipeline for orbit-closure degree computations.
//!
//! Verbs: `sample`, `solve`, `certify`, `trace`, `degree`, `oracle`.
//! Exit codes: 0 success; 2 incomplete (trace failed); 3 certification
//! failure; 4 configuration or schema error; 5 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use orbitdeg_core::error::Error;
use orbitdeg_core::pipeline::{
    cmd_certify, cmd_degree, cmd_oracle, cmd_sample, cmd_solve, cmd_trace, ProblemSpec, RunConfig,
};
use orbitdeg_core::solver::Formulation;

#[derive(Parser)]
#[command(name = "orbitdeg", version, about = "Degrees of group-orbit closures of hypersurfaces by numerical homotopy continuation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Run seed; every stage derives its own seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = all cores). ORBITDEG_WORKERS overrides the default.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Decimal digits for refinement and the trace test.
    #[arg(long, global = true, default_value_t = 30)]
    digits: u32,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Path budget for total-degree solving.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    budget: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a problem file with Gaussian coefficients.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Where to write the problem file (default: <out>/problem.json).
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Solve a problem and persist the solution set.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Solve strategy, by registry name.
        #[arg(long, default_value = "monodromy")]
        method: String,
    },
    /// Re-certify a persisted solution set.
    Certify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solutions: PathBuf,
    },
    /// Re-run the trace test on a persisted solution set.
    Trace {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solutions: PathBuf,
    },
    /// Full pipeline: solve, certify, trace, report the degree.
    Degree {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "monodromy")]
        method: String,
    },
    /// Total-degree oracle count for small instances.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Formulation to solve: "points" or "slice".
        #[arg(long, default_value = "points")]
        formulation: String,
    },
}

fn load_problem(path: &PathBuf) -> Result<ProblemSpec, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("problem file: {e}")))
}

fn run(cli: Cli) -> Result<i32, Error> {
    let workers = cli
        .workers
        .or_else(|| {
            std::env::var("ORBITDEG_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }

    let make_config = |problem: ProblemSpec, method: String| {
        let mut config = RunConfig::new(problem, cli.seed);
        config.digits = cli.digits;
        config.budget = cli.budget;
        config.workers = workers;
        config.method = method;
        config
    };

    match cli.cmd {
        Cmd::Sample { n, d, path } => {
            let out_path = path.unwrap_or_else(|| cli.out.join("problem.json"));
            if let Some(dir) = out_path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            let spec = cmd_sample(n, d, cli.seed, &out_path)?;
            println!(
                "sampled problem n={} d={} seed={} -> {}",
                spec.n,
                spec.d,
                cli.seed,
                out_path.display()
            );
            Ok(0)
        }
        Cmd::Solve { config, method } => {
            let problem = load_problem(&config)?;
            let rc = make_config(problem, method);
            let count = cmd_solve(&rc, &cli.out)?;
            println!("solved: {count} solutions -> {}", cli.out.display());
            Ok(0)
        }
        Cmd::Certify {
            instance,
            solutions,
        } => {
            let summary = cmd_certify(&instance, &solutions, cli.digits, &cli.out)?;
            println!(
                "certified {}/{} points, all_distinct = {}",
                summary.certified,
                summary.certified + summary.uncertified,
                summary.all_distinct
            );
            Ok(if summary.uncertified == 0 && summary.all_distinct {
                0
            } else {
                3
            })
        }
        Cmd::Trace {
            instance,
            solutions,
        } => {
            let report = cmd_trace(&instance, &solutions, cli.digits, &cli.out)?;
            println!(
                "trace norm {:.3e} vs threshold {:.3e}: {}",
                report.trace_norm,
                report.threshold,
                if report.pass { "pass" } else { "fail" }
            );
            Ok(if report.pass { 0 } else { 2 })
        }
        Cmd::Degree { config, method } => {
            let problem = load_problem(&config)?;
            let rc = make_config(problem, method);
            let run = cmd_degree(&rc, &cli.out)?;
            let r = &run.report;
            println!(
                "count {} / stabilizer {} -> degree {} [certified {}/{}, trace {}] status {:?}",
                r.terminal_count,
                r.stabilizer_order,
                r.degree,
                r.certify.certified,
                r.terminal_count,
                if r.trace.pass { "pass" } else { "fail" },
                r.status
            );
            Ok(r.status.exit_code())
        }
        Cmd::Oracle {
            config,
            formulation,
        } => {
            let problem = load_problem(&config)?;
            let rc = make_config(problem, "total-degree".into());
            let form = match formulation.as_str() {
                "points" => Formulation::Points,
                "slice" => Formulation::Slice,
                other => {
                    return Err(Error::Config(format!(
                        "unknown formulation '{other}' (points|slice)"
                    )))
                }
            };
            let report = cmd_oracle(&rc, form, &cli.out)?;
            println!("oracle count: {}", report.count);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::Schema(_) | Error::Json(_) => 4,
                _ => 5,
            };
            ExitCode::from(code)
        }
    }
}
