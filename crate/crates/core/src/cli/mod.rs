//! Command-line front end: `kgs <command> [key=value ...]`.
//!
//! Exit status: 0 success, 1 invalid input or failed precondition, 2 solver
//! non-convergence, 3 property-suite violation.

pub mod config;
pub mod verify;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::concentration::epsilon_sweep;
use crate::error::{KgsError, Result};
use crate::groundstate::{solve_constant, solve_truncated, solve_variable, GroundStateReport};
use crate::model::dump::write_field;
use crate::model::Field;
use crate::potentials::{check_conditions, ConditionReport};
use crate::thresholds::{critical_level, solve_ts_system};

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Constant-coefficient ground state on a radial grid.
    SolveConst,
    /// Variable-coefficient ground state at one epsilon on the rescaled box.
    Solve,
    /// Concentration sweep over a decreasing epsilon list.
    Sweep,
    /// Closed-form (t0, s0) and the critical level c*.
    Thresholds,
    /// Standing-condition report for a potential triple.
    CheckPotentials,
    /// Seeded property suites.
    Verify,
}

#[derive(Debug, Parser)]
#[command(
    name = "kgs",
    version,
    about = "Ground states of the critical Kirchhoff equation with competing potentials"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Settings as key=value, applied after --config.
    pub settings: Vec<String>,
    /// Flat key=value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Property suite for `verify` (thresholds, sobolev, fibering, gradient, all).
    #[arg(long)]
    pub suite: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Cli {
    pub fn config(&self) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        c.apply_args(&self.settings)?;
        if let Some(s) = self.seed {
            c.set("seed", &s.to_string(), config::Origin::Flag)?;
        }
        if let Some(s) = &self.suite {
            c.set("suite", s, config::Origin::Flag)?;
        }
        if let Some(o) = &self.out {
            c.set("out", &o.to_string_lossy(), config::Origin::Flag)?;
        }
        Ok(c)
    }
}

pub fn exit_code(e: &KgsError) -> i32 {
    match e {
        KgsError::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_INPUT,
    }
}

/// Parses, runs and reports; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match cli.config().and_then(|c| run(cli.command, &c)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

fn dump(dir: &Path, name: &str, field: &Field) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join(name))?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub const SOLVE_CSV_HEADER: &str =
    "level,nehari_residual,norm_sq,grad_sup,pde_residual_sup,x1,x2,x3,iterations,converged";

pub fn solve_csv(r: &GroundStateReport) -> String {
    let [x1, x2, x3] = r.max_point;
    format!(
        "{SOLVE_CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{}\n",
        r.level,
        r.nehari_residual,
        r.norm_sq,
        r.grad_sup,
        r.pde_residual_sup,
        x1,
        x2,
        x3,
        r.iterations,
        r.converged
    )
}

pub const THRESHOLDS_CSV_HEADER: &str = "a,b,S,q,t0,s0,c_star,consistency_residual";

fn finish_solve(name: &str, r: &GroundStateReport, c: &RunConfig) -> Result<i32> {
    let dir = c.out_dir();
    let path = write_text(&dir, &format!("{name}.csv"), &solve_csv(r))?;
    if c.dump()? {
        dump(&dir, &format!("{name}.kgs"), &r.field)?;
    }
    println!(
        "{name}: level={} nehari_residual={} iterations={} converged={} -> {}",
        r.level,
        r.nehari_residual,
        r.iterations,
        r.converged,
        path.display()
    );
    Ok(if r.converged {
        EXIT_OK
    } else {
        EXIT_NONCONVERGENCE
    })
}

pub fn run(command: Command, c: &RunConfig) -> Result<i32> {
    let dir = c.out_dir();
    match command {
        Command::Thresholds => {
            let (a, b) = (c.params()?.a(), c.params()?.b());
            let q = c.q()?;
            let s = c
                .sobolev()?
                .unwrap_or(3.0 * (std::f64::consts::PI / 2.0).powf(4.0 / 3.0));
            let sol = solve_ts_system(a, b, s, q)?;
            let c_star = critical_level(a, b, s, q)?.c_star;
            let residual = (sol.t0 / 3.0 + sol.s0 / 12.0 - c_star).abs() / c_star;
            let row = format!("{a},{b},{s},{q},{},{},{c_star},{residual}", sol.t0, sol.s0);
            write_text(
                &dir,
                "thresholds.csv",
                &format!("{THRESHOLDS_CSV_HEADER}\n{row}\n"),
            )?;
            println!("{THRESHOLDS_CSV_HEADER}\n{row}");
            Ok(EXIT_OK)
        }
        Command::SolveConst => {
            let r = solve_constant(
                c.coefficients()?,
                c.params()?,
                c.radial_grid()?,
                &c.solver()?,
            )?;
            finish_solve("solve_const", &r, c)
        }
        Command::Solve => {
            let spec = c.potential()?;
            let (params, eps, grid, opts) =
                (c.params()?, c.epsilon()?, c.cartesian_grid()?, c.solver()?);
            let r = match c.truncation(&spec)? {
                Some(levels) => solve_truncated(levels, params, &spec, eps, grid, &opts)?,
                None => solve_variable(params, &spec, eps, grid, &opts)?,
            };
            finish_solve("solve", &r, c)
        }
        Command::Sweep => {
            let spec = c.potential()?;
            let report = epsilon_sweep(
                c.params()?,
                &spec,
                &c.sweep_eps()?,
                c.sweep_grid()?,
                &c.solver()?,
            )?;
            let path = write_text(&dir, "sweep.csv", &report.to_csv())?;
            if c.dump()? {
                for r in &report.records {
                    dump(&dir, &format!("sweep_eps_{}.kgs", r.epsilon), &r.field)?;
                }
            }
            for f in &report.failures {
                eprintln!("epsilon {} failed: {}", f.epsilon, f.message);
            }
            println!(
                "sweep: {} records, {} failures, limit level {} -> {}",
                report.records.len(),
                report.failures.len(),
                report.limit_level,
                path.display()
            );
            let all_converged = report.records.iter().all(|r| r.converged);
            Ok(if report.failures.is_empty() && all_converged {
                EXIT_OK
            } else {
                EXIT_NONCONVERGENCE
            })
        }
        Command::CheckPotentials => {
            let spec = c.potential()?;
            let report: ConditionReport =
                check_conditions(&spec, &crate::groundstate::check_grid(&spec)?)?;
            let csv = report.to_csv();
            let path = write_text(&dir, "conditions.csv", &csv)?;
            print!("{csv}");
            println!(
                "check-potentials: PQ pair {}, VQ pair {} -> {}",
                if report.pq_holds() { "holds" } else { "fails" },
                if report.vq_holds() { "holds" } else { "fails" },
                path.display()
            );
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let checks = verify::run_suite(c.suite(), c.seed()?)?;
            let path = write_text(&dir, "verify.csv", &verify::to_csv(&checks))?;
            let failed = checks.iter().filter(|x| !x.passed()).count();
            for x in checks.iter().filter(|x| !x.passed()) {
                eprintln!(
                    "violation: {} case {} {} = {} > {}",
                    x.suite, x.case, x.quantity, x.value, x.bound
                );
            }
            println!(
                "verify {}: {} checks, {failed} violations -> {}",
                c.suite(),
                checks.len(),
                path.display()
            );
            Ok(if failed == 0 { EXIT_OK } else { EXIT_VIOLATION })
        }
    }
}

/// Caps the global rayon pool from `KGS_WORKERS` when set.
pub fn configure_workers() -> Result<()> {
    let Ok(raw) = std::env::var("KGS_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|e| KgsError::Parse {
        line: 0,
        message: format!("KGS_WORKERS=`{raw}`: {e}"),
    })?;
    if n == 0 {
        return Err(KgsError::Domain("KGS_WORKERS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| KgsError::Precondition(format!("worker pool already configured: {e}")))
}
