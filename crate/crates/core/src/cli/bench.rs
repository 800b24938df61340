//! `bench`: ACGM, the FISTA meta-scheme and the ACGM+OCGM-G meta-scheme on
//! one problem under a common oracle-call budget.
//!
//! GCAR (accumulative regularization) is not part of the suite;
//! the report carries a note saying so.

use std::fs;
use std::path::PathBuf;
use std::thread;

use clap::Args;
use serde::Serialize;

use crate::engines::{Method, RunTrace, Verdict};
use crate::error::{Error, Result};
use crate::problems::io::load;

use super::out_dir;
use super::run::{execute, write_trace, Resolved, RunConfig, Sidecar, DEFAULT_EPS_REL};

/// Decades reported for `||g||` and `F - F_best`.
pub const DECADES: usize = 12;

pub const SUITE: [Method; 3] = [Method::Acgm, Method::MetaFista, Method::Meta];

pub const GCAR_NOTE: &str = "GCAR is not included: no faithful implementation is available here";

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 50_000)]
    pub budget: usize,
    #[arg(long, default_value_t = DEFAULT_EPS_REL)]
    pub eps_rel: f64,
    /// Initial estimate for all methods (default: the manifest value).
    #[arg(long = "L0")]
    pub l0: Option<f64>,
    #[arg(long)]
    pub gamma_d: Option<f64>,
    #[arg(long)]
    pub gamma_u: Option<f64>,
    /// Directory for the traces and the report (default: `$GMNORM_OUT_DIR` or `.`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub trace_file: String,
    pub oracle_calls: usize,
    pub verdict: Verdict,
    pub reached_eps: bool,
    pub f_final: Option<f64>,
    pub gmap_final: Option<f64>,
    pub failures: Option<usize>,
    /// Entry `d - 1`: first oracle count with `||g||_* <= 10^-d ||g_ref||_*`.
    pub calls_to_gmap_decade: Vec<Option<usize>>,
    /// Entry `d - 1`: first oracle count with `F - F_best <= 10^-d (F_0 - F_best)`.
    pub calls_to_gap_decade: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkReport {
    pub problem: String,
    pub budget: usize,
    pub eps: f64,
    pub g_ref: f64,
    pub f_best: f64,
    pub methods: Vec<MethodSummary>,
    /// Smallest decade `d` from which the ACGM+OCGM-G meta-scheme needs fewer
    /// calls than ACGM at every deeper decade both reached.
    pub meta_ahead_of_acgm_from_decade: Option<usize>,
    pub note: &'static str,
    pub environment: Environment,
}

fn first_below(rows: &[(usize, f64)], level: f64) -> Option<usize> {
    rows.iter().find(|(_, v)| *v <= level).map(|(c, _)| *c)
}

fn summarize(tr: &RunTrace, f_best: f64, g_ref: f64, eps: f64) -> (Vec<Option<usize>>, Vec<Option<usize>>, bool) {
    let gm: Vec<(usize, f64)> = tr
        .rows
        .iter()
        .filter_map(|r| Some((r.oracle_calls, r.gmap_dualnorm?)))
        .collect();
    let fs: Vec<(usize, f64)> = tr
        .rows
        .iter()
        .filter_map(|r| Some((r.oracle_calls, r.f_x? - f_best)))
        .collect();
    let f0 = fs.first().map_or(0.0, |v| v.1);
    let g = (1..=DECADES)
        .map(|d| first_below(&gm, g_ref * 10f64.powi(-(d as i32))))
        .collect();
    let f = (1..=DECADES)
        .map(|d| first_below(&fs, f0 * 10f64.powi(-(d as i32))))
        .collect();
    let reached = gm.iter().any(|(_, v)| *v <= eps);
    (g, f, reached)
}

fn ahead_from(meta: &[Option<usize>], acgm: &[Option<usize>]) -> Option<usize> {
    let both: Vec<(usize, bool)> = meta
        .iter()
        .zip(acgm)
        .enumerate()
        .filter_map(|(i, (m, a))| Some((i + 1, m.as_ref()? < a.as_ref()?)))
        .collect();
    let mut start = None;
    for (d, ahead) in both.iter().rev() {
        if !ahead {
            break;
        }
        start = Some(*d);
    }
    start
}

pub fn run_bench(a: &BenchArgs) -> Result<BenchmarkReport> {
    let (_, inst) = load(&a.problem)?;
    let p = inst.problem();
    let x0 = inst.start();
    let dir = out_dir(a.out.as_deref());
    fs::create_dir_all(&dir)?;
    let l0 = a.l0.unwrap_or(inst.lipschitz());
    let g_ref = p.metric.dual_norm_sq(&p.gradient_mapping(l0, &x0)?).sqrt();
    let resolved: Vec<Resolved> = SUITE
        .iter()
        .map(|m| {
            let cfg = RunConfig {
                method: Some(m.as_str().into()),
                budget: Some(a.budget),
                eps: Some(a.eps_rel * g_ref),
                l0: Some(l0),
                gamma_d: a.gamma_d,
                gamma_u: a.gamma_u,
                ..Default::default()
            };
            Resolved::new(&cfg, inst.lipschitz(), |_| Ok(g_ref))
        })
        .collect::<Result<_>>()?;
    if !(a.eps_rel > 0.0) {
        return Err(Error::InvalidParameter("eps_rel must be positive".into()));
    }
    let outcomes = thread::scope(|s| {
        let handles: Vec<_> = resolved
            .iter()
            .map(|r| {
                let (p, x0) = (&p, &x0);
                s.spawn(move || execute(r, p, x0))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let f_best = outcomes
        .iter()
        .flat_map(|o| o.trace.rows.iter().filter_map(|r| r.f_x))
        .fold(f64::INFINITY, f64::min);
    let problem = a.problem.display().to_string();
    let mut methods = Vec::new();
    for (r, o) in resolved.iter().zip(&outcomes) {
        let path = dir.join(format!("{}.csv", r.method));
        let side = Sidecar::from_trace(&o.trace, r, o.failures, Some(problem.clone()));
        write_trace(&o.trace, &side, &path, a.timing)?;
        let (g, f, reached) = summarize(&o.trace, f_best, g_ref, r.eps);
        methods.push(MethodSummary {
            method: r.method,
            trace_file: path.display().to_string(),
            oracle_calls: o.trace.oracle_calls,
            verdict: o.trace.verdict,
            reached_eps: reached,
            f_final: o.trace.rows.iter().rev().find_map(|r| r.f_x),
            gmap_final: o.trace.last_gmap(),
            failures: o.failures,
            calls_to_gmap_decade: g,
            calls_to_gap_decade: f,
        });
    }
    let ahead = ahead_from(&methods[2].calls_to_gmap_decade, &methods[0].calls_to_gmap_decade);
    let report = BenchmarkReport {
        problem,
        budget: a.budget,
        eps: a.eps_rel * g_ref,
        g_ref,
        f_best,
        methods,
        meta_ahead_of_acgm_from_decade: ahead,
        note: GCAR_NOTE,
        environment: Environment {
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: SUITE.len(),
        },
    };
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    write_summary(&report, &dir.join("summary.csv"))?;
    Ok(report)
}

fn write_summary(rep: &BenchmarkReport, path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "decade", "calls_gmap", "calls_gap"])?;
    let cell = |v: Option<usize>| v.map_or(String::new(), |c| c.to_string());
    for m in &rep.methods {
        for d in 0..DECADES {
            w.write_record([
                m.method.as_str().to_string(),
                (d + 1).to_string(),
                cell(m.calls_to_gmap_decade[d]),
                cell(m.calls_to_gap_decade[d]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(super) fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let rep = run_bench(a)?;
    for m in &rep.methods {
        println!(
            "{:<11} calls={:<6} reached_eps={} gmap={:.3e} failures={:?}",
            m.method.as_str(),
            m.oracle_calls,
            m.reached_eps,
            m.gmap_final.unwrap_or(f64::NAN),
            m.failures
        );
    }
    println!("{}", rep.note);
    Ok(())
}
