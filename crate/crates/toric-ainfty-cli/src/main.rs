//! `toric-ainfty`: build, check and export the toric A∞ structures.
//!
//! Exit codes: 0 all checks pass, 1 some check fails, 2 some check is
//! inconclusive and none fails, 3 the input could not be used.

mod checks;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use toric_ainfty::novikov::parse_rational_str;
use toric_ainfty::toric::{parse_polytope, ToricData};

use report::{Report, Status};

#[derive(Parser)]
#[command(name = "toric-ainfty", version, about = "Curved A∞ algebras of toric fibers, their potentials and matrix factorizations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Potential in closed form, sample values, holomorphicity and descent.
    Potential(Common),
    /// Run every verification suite and report a verdict per check.
    Check {
        #[command(flatten)]
        common: Common,
        /// Negative control: drop the ε signs from the structure.
        #[arg(long, hide = true)]
        inject_sign_fault: bool,
    },
    /// Export the matrix factorization of the brane at `(p, α)`.
    Mf {
        #[command(flatten)]
        common: Common,
        /// Center `p`, comma separated (defaults to the basepoint).
        #[arg(long)]
        point: Option<String>,
        /// Holonomy `α`, comma separated (defaults to zero).
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Floer ranks of the zero brane at the given points, and critical points.
    Hf {
        #[command(flatten)]
        common: Common,
        /// Points separated by `;`, coordinates by `,`.
        #[arg(long, default_value = "")]
        points: String,
    },
    /// Complete the divisor core to an A∞ structure and report the solve.
    Complete(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Clone)]
struct Common {
    /// Polytope JSON file.
    polytope: PathBuf,
    #[arg(long, default_value = "3.0")]
    cutoff_energy: String,
    #[arg(long, default_value_t = 6)]
    arity: usize,
    /// Series degree `D` for the matrix factorization and Koszul checks.
    #[arg(long, default_value_t = 10)]
    degree: u32,
    /// Base degree `D_x` for the Gauss–Manin checks.
    #[arg(long, default_value_t = 4)]
    base_degree: u32,
    /// Value of `T` for numeric output.
    #[arg(long)]
    eval_t: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

/// Everything a run needs, validated.
pub struct RunConfig {
    pub toric: ToricData,
    pub cutoff: BigRational,
    pub arity: usize,
    pub degree: u32,
    pub base_degree: u32,
    pub t: f64,
    pub mode: Mode,
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(3)
}

fn load(c: &Common) -> Result<RunConfig, String> {
    let doc = std::fs::read_to_string(&c.polytope).map_err(|e| format!("{}: {e}", c.polytope.display()))?;
    let toric = parse_polytope(&doc).map_err(|e| e.to_string())?;
    let cutoff = parse_rational_str(&c.cutoff_energy).map_err(|e| e.to_string())?;
    if cutoff <= BigRational::from_integer(0.into()) {
        return Err("--cutoff-energy must be positive".into());
    }
    if c.arity < 2 {
        return Err("--arity must be at least 2".into());
    }
    if c.degree < 2 {
        return Err("--degree must be at least 2".into());
    }
    let t = c.eval_t.unwrap_or((-1f64).exp());
    if !(t > 0.0 && t < 1.0) {
        return Err("--eval-t must lie in (0, 1)".into());
    }
    Ok(RunConfig { toric, cutoff, arity: c.arity, degree: c.degree, base_degree: c.base_degree, t, mode: c.mode })
}

pub fn parse_point(s: &str, n: usize) -> Result<Vec<BigRational>, String> {
    let v = s.split(',').map(|x| parse_rational_str(x).map_err(|e| e.to_string())).collect::<Result<Vec<_>, _>>()?;
    if v.len() != n {
        return Err(format!("point {s:?} has {} coordinates, expected {n}", v.len()));
    }
    Ok(v)
}

fn emit(report: &Report, c: &Common) -> Result<(), String> {
    let text = match c.format {
        Format::Json => serde_json::to_string_pretty(&report.to_json()).map_err(|e| e.to_string())? + "\n",
        Format::Text => report.to_text(),
    };
    match &c.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // Usage errors are input errors; clap's own code 2 means inconclusive here.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let common = match &cli.command {
        Command::Potential(c) | Command::Complete(c) => c,
        Command::Check { common, .. } | Command::Mf { common, .. } | Command::Hf { common, .. } => common,
    };
    let cfg = match load(common) {
        Ok(cfg) => cfg,
        Err(e) => return input_error(e),
    };
    let report = match &cli.command {
        Command::Potential(_) => checks::potential_report(&cfg),
        Command::Check { inject_sign_fault, .. } => checks::check_report(&cfg, *inject_sign_fault),
        Command::Mf { point, alpha, .. } => {
            let n = cfg.toric.dim;
            let p = match point {
                Some(s) => parse_point(s, n),
                None => Ok(cfg.toric.basepoint.clone()),
            };
            let a = match alpha {
                Some(s) => parse_point(s, n),
                None => Ok(vec![BigRational::from_integer(0.into()); n]),
            };
            match (p, a) {
                (Ok(p), Ok(a)) => checks::mf_report(&cfg, &p, &a),
                (Err(e), _) | (_, Err(e)) => return input_error(e),
            }
        }
        Command::Hf { points, .. } => {
            let pts = points
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_point(s, cfg.toric.dim))
                .collect::<Result<Vec<_>, _>>();
            match pts {
                Ok(pts) => checks::hf_report(&cfg, &pts),
                Err(e) => return input_error(e),
            }
        }
        Command::Complete(_) => checks::complete_report(&cfg),
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    if let Err(e) = emit(&report, common) {
        return input_error(e);
    }
    match report.status() {
        Status::Pass => ExitCode::SUCCESS,
        Status::Fail => ExitCode::from(1),
        Status::Inconclusive => ExitCode::from(2),
    }
}
