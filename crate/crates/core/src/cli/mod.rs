//! Command-line surface: `gen`, `run`, `verify`, `table`, `bench`.
//!
//! Exit codes: 0 success, 2 usage, 3 certificate failure, 4 line-search
//! failure, 5 I/O or schema.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{certify_rows, CertificateReport};
use crate::engines::{read_rows, Row};
use crate::error::{Error, Result};
use crate::problems::io::{save, Instance};
use crate::problems::{LassoInstance, NnlsInstance, QuadraticInstance};
use crate::schedules::rates::{rate_constants, UNIFIED_CONSTANT};
use crate::schedules::{ocgmg_schedule, t_sequence, theta_table, TFamily};

mod bench;
mod run;

pub use bench::{run_bench, BenchArgs, BenchmarkReport, MethodSummary, GCAR_NOTE};
pub use run::{execute, Resolved, RunConfig, RunOutcome, Sidecar, DEFAULT_BUDGET, DEFAULT_EPS_REL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CERTIFICATE: i32 = 3;
pub const EXIT_LINE_SEARCH: i32 = 4;
pub const EXIT_IO: i32 = 5;

/// Default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "GMNORM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "gmnorm", version, about = "Gradient-mapping-norm solvers with runtime certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a problem instance (manifest + data files).
    Gen(GenArgs),
    /// Run one method and write its trace CSV and JSON sidecar.
    Run(RunArgs),
    /// Check the certificates of a trace CSV.
    Verify(VerifyArgs),
    /// Print a constant table as CSV.
    Table(TableArgs),
    /// Compare ACGM and both meta-schemes on one problem.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Lasso,
    Nnls,
    Quadratic,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory (default: `$GMNORM_OUT_DIR` or `.`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File stem (default: the kind).
    #[arg(long)]
    pub stem: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub flags: RunConfig,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Trace CSV written by `run`.
    pub trace: PathBuf,
    /// Sidecar JSON (default: the trace path with a `.json` extension).
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableKind {
    Theta,
    T,
    RateConstants,
    UnifiedSweep,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(value_enum)]
    pub which: TableKind,
    /// Run length for `theta` and `t`.
    #[arg(long = "T", default_value_t = 10)]
    pub t: usize,
    /// Sweep range for `unified-sweep`.
    #[arg(long, default_value_t = 2)]
    pub from: usize,
    #[arg(long, default_value_t = 999)]
    pub to: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Schema(_) => EXIT_IO,
        Error::LineSearchCap(_) => EXIT_LINE_SEARCH,
        _ => EXIT_USAGE,
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Gen(a) => cmd_gen(&a).map(|_| EXIT_OK),
        Command::Run(a) => run::cmd_run(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Table(a) => cmd_table(&a).map(|_| EXIT_OK),
        Command::Bench(a) => bench::cmd_bench(&a).map(|_| EXIT_OK),
    }
}

pub(crate) fn out_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required for --kind {kind}")))
}

pub fn cmd_gen(a: &GenArgs) -> Result<PathBuf> {
    let inst = match a.kind {
        Kind::Lasso => Instance::Lasso(LassoInstance::generate(
            need(a.m, "m", "lasso")?,
            a.n,
            need(a.lambda, "lambda", "lasso")?,
            a.seed,
        )?),
        Kind::Nnls => Instance::Nnls(NnlsInstance::generate(
            need(a.m, "m", "nnls")?,
            a.n,
            need(a.density, "density", "nnls")?,
            a.seed,
        )?),
        Kind::Quadratic => Instance::Quadratic(QuadraticInstance::generate(
            a.n,
            need(a.mu, "mu", "quadratic")?,
            a.l.unwrap_or(1.0),
            a.seed,
        )?),
    };
    let stem = a.stem.clone().unwrap_or_else(|| {
        match a.kind {
            Kind::Lasso => "lasso",
            Kind::Nnls => "nnls",
            Kind::Quadratic => "quadratic",
        }
        .to_string()
    });
    let path = save(&inst, &out_dir(a.out.as_deref()), &stem)?;
    println!("{}", path.display());
    Ok(path)
}

/// Verify report: certificates plus trace-level sanity checks.
#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub trace: String,
    pub method: String,
    pub pass: bool,
    pub note: Option<String>,
    pub report: CertificateReport,
}

fn basic_checks(rows: &[Row]) -> CertificateReport {
    let mut rep = CertificateReport::default();
    for w in rows.windows(2) {
        rep.push(
            "trace.calls-monotone",
            Some(w[1].k),
            "oracle_calls_{k-1} <= oracle_calls_k",
            w[0].oracle_calls as f64,
            w[1].oracle_calls as f64,
            true,
        );
    }
    rep
}

pub fn verify_files(trace: &Path, sidecar: &Path) -> Result<VerifyReport> {
    let rows = read_rows(fs::File::open(trace)?)?;
    let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar)?)?;
    if side.oracle_calls != rows.last().map_or(0, |r| r.oracle_calls) {
        return Err(Error::Schema(format!(
            "sidecar records {} oracle calls, trace ends at {}",
            side.oracle_calls,
            rows.last().map_or(0, |r| r.oracle_calls)
        )));
    }
    let mut report = basic_checks(&rows);
    let mut note = None;
    match side.schedule_ref() {
        Some(sref) => report.extend(certify_rows(&rows, &sref, side.verdict)?),
        None => note = Some(format!("no schedule certificates for method {}", side.method)),
    }
    Ok(VerifyReport {
        trace: trace.display().to_string(),
        method: side.method.to_string(),
        pass: report.pass(),
        note,
        report,
    })
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let sidecar = a.sidecar.clone().unwrap_or_else(|| a.trace.with_extension("json"));
    let rep = verify_files(&a.trace, &sidecar)?;
    let text = serde_json::to_string_pretty(&rep)?;
    match &a.out {
        Some(p) => fs::write(p, text)?,
        None => println!("{text}"),
    }
    for c in rep.report.failures() {
        eprintln!("failed: {} (k = {:?}): {} slack {:e}", c.name, c.k, c.anchor, c.slack);
    }
    Ok(if rep.pass { EXIT_OK } else { EXIT_CERTIFICATE })
}

/// Rows of a constant table; the first entry is the header.
pub fn table_rows(a: &TableArgs) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    match a.which {
        TableKind::Theta => {
            out.push(vec!["k".into(), "theta".into()]);
            for (k, v) in theta_table(a.t)?.iter().enumerate() {
                out.push(vec![k.to_string(), v.to_string()]);
            }
        }
        TableKind::T => {
            out.push(vec!["k".into(), "t".into()]);
            for (k, v) in t_sequence(a.t, TFamily::Ocgmg)?.iter().enumerate() {
                out.push(vec![k.to_string(), v.to_string()]);
            }
        }
        TableKind::RateConstants => {
            out.push(vec!["l".into(), "G_l".into(), "T_l".into()]);
            for l in crate::analysis::certificates::LADDER_LAGS {
                let rc = rate_constants(l)?;
                out.push(vec![l.to_string(), rc.g.to_string(), rc.t.to_string()]);
            }
        }
        TableKind::UnifiedSweep => {
            if a.from < 2 || a.to < a.from {
                return Err(Error::InvalidParameter(format!("bad sweep range {}..={}", a.from, a.to)));
            }
            out.push(vec!["T".into(), "factor_times_T_plus_4_sq".into(), "within_unified".into()]);
            for t in a.from..=a.to {
                let s = ocgmg_schedule(t, 1.0)?;
                let v = 2.0 * s.a0() / s.acc(t - 1) * (t as f64 + 4.0).powi(2);
                out.push(vec![t.to_string(), v.to_string(), (v <= UNIFIED_CONSTANT).to_string()]);
            }
        }
    }
    Ok(out)
}

fn cmd_table(a: &TableArgs) -> Result<()> {
    let rows = table_rows(a)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    match &a.out {
        Some(p) => fs::write(p, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}
