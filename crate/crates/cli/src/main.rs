use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use polychain::geometry::{
    gen_arc_chain, gen_bent, gen_packed_block, gen_straight, validate_chain, ChainArray, Dim, DEFAULT_MU_GRID,
    DEFAULT_OMEGA,
};
use polychain::greens::KAPPA_MAX;
use polychain::lattice::{band_edges, threshold_kappa};
use polychain::solver::{bound_states_csv, bound_states_json, branch_sweep, find_bound_states_with, sweep_csv, SolveOptions};
use polychain::verify::{run_suite, suite_json};
use polychain::{Execution, UNITS_NOTE};
use serde_json::json;

/// Bound states of point-interaction polymer chains.
#[derive(Parser)]
#[command(name = "polychain", version)]
struct Cli {
    /// Disable data-parallel execution.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a chain and write it as geometry JSON.
    Geometry {
        #[command(subcommand)]
        kind: GeometryKind,
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Report the geometric assumption constants of a geometry file.
    Validate {
        geometry: PathBuf,
        #[arg(long, default_value_t = DEFAULT_OMEGA)]
        omega: f64,
        /// Comma-separated decay exponents to try.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_MU_GRID)]
        mu_grid: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Band edges of the straight chain.
    Bands {
        #[arg(long, value_parser = parse_dim)]
        dim: Dim,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Bound states of a geometry truncated to a symmetric index window.
    Solve {
        geometry: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        /// Half-width N of the window [-N, N]; defaults to the largest one the chain covers.
        #[arg(long)]
        window: Option<usize>,
        /// Upper end of the kappa bracket; defaults to min(4 kappa_thr, 50).
        #[arg(long)]
        kappa_max: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Lowest eigenvalue branches of Gamma(i kappa) on a kappa grid (CSV).
    Sweep {
        geometry: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        kappa_min: f64,
        #[arg(long)]
        kappa_max: f64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        branches: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the numerical verification suite; exit status 1 if any check fails.
    Verify {
        /// `all` or a check-name prefix such as `dkern_negativity`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GeometryKind {
    Straight {
        #[arg(long)]
        n_half: usize,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, value_parser = parse_dim, default_value = "3")]
        dim: Dim,
    },
    Bent {
        /// Interior angle in radians, in (0, pi].
        #[arg(long)]
        angle: f64,
        #[arg(long)]
        n_half: usize,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, value_parser = parse_dim, default_value = "3")]
        dim: Dim,
    },
    Arc {
        #[arg(long)]
        n_half: usize,
        /// Number of edges over which the turn is spread.
        #[arg(long)]
        arc_edges: usize,
        /// Total turning angle in radians, |turn| < pi.
        #[arg(long, allow_hyphen_values = true)]
        turn: f64,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, value_parser = parse_dim, default_value = "3")]
        dim: Dim,
    },
    Packed {
        #[arg(long = "M")]
        m: usize,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, value_parser = parse_dim, default_value = "3")]
        dim: Dim,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_dim(s: &str) -> Result<Dim, String> {
    match s {
        "2" => Ok(Dim::Two),
        "3" => Ok(Dim::Three),
        _ => Err(format!("dimension must be 2 or 3, got {s}")),
    }
}

fn emit(output: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn load(path: &Path) -> anyhow::Result<ChainArray> {
    ChainArray::read_json(path).with_context(|| format!("cannot load geometry {}", path.display()))
}

fn pretty(value: &serde_json::Value) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Outcome of a command that ran to completion.
enum Status {
    Ok,
    ChecksFailed,
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Geometry { kind, output } => {
            let chain = match kind {
                GeometryKind::Straight { n_half, ell, dim } => gen_straight(n_half, ell, dim),
                GeometryKind::Bent { angle, n_half, ell, dim } => gen_bent(n_half, ell, dim, angle),
                GeometryKind::Arc { n_half, arc_edges, turn, ell, dim } => {
                    gen_arc_chain(n_half, ell, dim, arc_edges, turn)
                }
                GeometryKind::Packed { m, n, ell, dim } => gen_packed_block(m, n, ell, dim),
            }?;
            emit(output.as_deref(), &(chain.to_json()? + "\n"))?;
        }
        Command::Validate { geometry, omega, mu_grid, output } => {
            let report = validate_chain(&load(&geometry)?, omega, &mu_grid)?;
            emit(output.as_deref(), &pretty(&json!({"units": UNITS_NOTE, "report": report}))?)?;
        }
        Command::Bands { dim, alpha, ell, output } => {
            let bands = band_edges(dim, alpha, ell)?;
            emit(output.as_deref(), &pretty(&json!({"units": UNITS_NOTE, "bands": bands}))?)?;
        }
        Command::Solve { geometry, alpha, window, kappa_max, format, output } => {
            let chain = load(&geometry)?;
            let covered = (-chain.j_min()).min(chain.j_max());
            if covered < 0 {
                bail!(polychain::Error::Parameter("geometry does not contain index 0".into()));
            }
            let window = window.unwrap_or(covered as usize);
            let kappa_max = match kappa_max {
                Some(k) => k,
                None => (4.0 * threshold_kappa(chain.dim(), alpha, chain.ell())?).min(KAPPA_MAX),
            };
            let opts = SolveOptions { exec, ..SolveOptions::default() };
            let states = find_bound_states_with(&chain, alpha, window, kappa_max, &opts)?;
            let text = match format {
                Format::Csv => bound_states_csv(&states),
                Format::Json => bound_states_json(&states)? + "\n",
            };
            emit(output.as_deref(), &text)?;
        }
        Command::Sweep { geometry, alpha, kappa_min, kappa_max, samples, branches, output } => {
            let chain = load(&geometry)?;
            let rows = branch_sweep(&chain, alpha, kappa_min, kappa_max, samples, branches, exec)?;
            emit(output.as_deref(), &sweep_csv(&rows))?;
        }
        Command::Verify { suite, output } => {
            let mut results = run_suite()?;
            if suite != "all" {
                results.retain(|r| r.name.starts_with(&suite));
                if results.is_empty() {
                    bail!(polychain::Error::Parameter(format!("no check named {suite}")));
                }
            }
            emit(output.as_deref(), &(suite_json(&results)? + "\n"))?;
            if !results.iter().all(|r| r.passed) {
                return Ok(Status::ChecksFailed);
            }
        }
    }
    Ok(Status::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ChecksFailed) => {
            eprintln!("error: verification checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.chain().any(|c| c.downcast_ref::<polychain::Error>().is_some_and(|p| p.is_numerical()));
            ExitCode::from(if numerical { 1 } else { 2 })
        }
    }
}
