//! `run`: configuration, dispatch to the engines, trace and sidecar output.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::engines::{
    run_acgm, run_gm, run_meta, run_ocgmg, run_ogmg, run_racgm, run_reduced, AcgmStop, Form, LineSearch,
    MetaInner, MetaParams, Method, RacgmParams, Reduced, RunTrace, ScheduleRef, Verdict,
};
use crate::error::{Error, Result};
use crate::problems::io::load;
use crate::problems::CompositeProblem;
use crate::schedules::Family;
use crate::space::Vector;

use super::{out_dir, RunArgs, EXIT_LINE_SEARCH, EXIT_OK};

/// Oracle-call budget of the adaptive methods when none is given.
pub const DEFAULT_BUDGET: usize = 100_000;
pub const DEFAULT_EPS_REL: f64 = 1e-8;

fn is_false(b: &bool) -> bool {
    !*b
}

/// Run configuration; the same keys are accepted as flags and in a JSON file.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Problem manifest written by `gen`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<PathBuf>,
    /// gm, acgm, racgm, ogmg, ocgmg, fista, fistag, meta, meta-resume, meta-fista
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// canonical, extrapolated, one-aux, two-aux (ogmg and ocgmg only)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    /// Run length of the fixed-length methods; iteration cap for gm and acgm.
    #[arg(long = "T")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    /// Oracle-call budget of the adaptive methods.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Target `||g||_* <= eps_rel * ||g_1||_*` (default 1e-8).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_rel: Option<f64>,
    /// Absolute target; overrides `eps_rel`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Lipschitz estimate `L` or `L_0` (default: the manifest value).
    #[arg(long = "L0")]
    #[serde(rename = "L0", skip_serializing_if = "Option::is_none")]
    pub l0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_d: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_u: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_mult: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_cycles: Option<usize>,
    /// Trace CSV path (default: `<out dir>/<method>.csv`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Keep wall-clock times in the CSV (otherwise zeroed).
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub timing: bool,
}

impl RunConfig {
    /// Overlay `flags` on `base`: a flag that was given wins.
    pub fn merged(base: &RunConfig, flags: &RunConfig) -> Result<RunConfig> {
        let mut v = serde_json::to_value(base)?;
        let over = serde_json::to_value(flags)?;
        if let (Some(b), serde_json::Value::Object(o)) = (v.as_object_mut(), over) {
            b.extend(o);
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }
}

/// Validated settings for one engine call.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub method: Method,
    pub form: Option<Form>,
    pub t: Option<usize>,
    pub budget: usize,
    pub eps: f64,
    pub l0: f64,
    pub ls: LineSearch,
    pub sigma: Option<f64>,
    pub s_mult: Option<f64>,
    pub max_cycles: Option<usize>,
}

fn fixed_length(m: Method) -> bool {
    matches!(m, Method::Ogmg | Method::Ocgmg | Method::Fista | Method::Fistag)
}

impl Resolved {
    /// `lipschitz` is the problem's constant, `g1` the dual norm of the first
    /// mapping at the start point.
    pub fn new(cfg: &RunConfig, lipschitz: f64, g1: impl FnOnce(f64) -> Result<f64>) -> Result<Resolved> {
        let usage = |m: String| Err(Error::InvalidParameter(m));
        let method: Method = cfg
            .method
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("--method is required".into()))?
            .parse()?;
        if method == Method::Template {
            return usage("the template needs explicit weights; use the library".into());
        }
        let form = match (&cfg.form, method.has_forms()) {
            (Some(f), true) => Some(f.parse()?),
            (None, true) => Some(Form::Canonical),
            (Some(_), false) => return usage(format!("method {method} takes no --form")),
            (None, false) => None,
        };
        if fixed_length(method) && cfg.t.is_none() {
            return usage(format!("method {method} needs --T"));
        }
        if !fixed_length(method) && cfg.t.is_some() && !matches!(method, Method::Gm | Method::Acgm) {
            return usage(format!("method {method} takes --budget, not --T"));
        }
        if (cfg.sigma.is_some() || cfg.s_mult.is_some()) && method != Method::Racgm {
            return usage("--sigma and --s-mult apply to racgm only".into());
        }
        let l0 = cfg.l0.unwrap_or(lipschitz);
        if !(l0 > 0.0 && l0.is_finite()) {
            return usage(format!("L0 = {l0} must be positive"));
        }
        let ls = LineSearch {
            gamma_d: cfg.gamma_d.unwrap_or(LineSearch::default().gamma_d),
            gamma_u: cfg.gamma_u.unwrap_or(LineSearch::default().gamma_u),
        };
        ls.validate()?;
        if cfg.eps.is_some_and(|e| !(e > 0.0)) || cfg.eps_rel.is_some_and(|e| !(e > 0.0)) {
            return usage("eps and eps_rel must be positive".into());
        }
        // a stationary start gives eps = 0, which the first mapping already meets
        let eps = match cfg.eps {
            Some(e) => e,
            None => cfg.eps_rel.unwrap_or(DEFAULT_EPS_REL) * g1(l0)?,
        };
        Ok(Resolved {
            method,
            form,
            t: cfg.t,
            budget: cfg.budget.unwrap_or(DEFAULT_BUDGET),
            eps,
            l0,
            ls,
            sigma: cfg.sigma,
            s_mult: cfg.s_mult,
            max_cycles: cfg.max_cycles,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: RunTrace,
    /// OCGM-G line-search failures inside a meta-scheme.
    pub failures: Option<usize>,
}

/// Run the configured engine.
pub fn execute(r: &Resolved, p: &CompositeProblem, x0: &Vector) -> Result<RunOutcome> {
    let stop = AcgmStop {
        threshold: None,
        max_iters: r.t,
        budget: Some(r.budget),
        eps: Some(r.eps),
    };
    let meta = |inner, resume| MetaParams {
        l0: r.l0,
        ls: r.ls,
        eps: Some(r.eps),
        budget: Some(r.budget),
        max_cycles: r.max_cycles,
        resume,
        inner,
        ..MetaParams::default()
    };
    let t = r.t.unwrap_or(0);
    let (trace, failures) = match r.method {
        Method::Gm => (run_gm(p, x0, r.l0, r.ls, stop)?, None),
        Method::Acgm => (run_acgm(p, x0, r.l0, r.ls, stop, false)?.trace, None),
        Method::Racgm => {
            let d = RacgmParams::default();
            let params = RacgmParams {
                l0: r.l0,
                ls: r.ls,
                sigma: r.sigma.unwrap_or(d.sigma),
                s_mult: r.s_mult.unwrap_or(d.s_mult),
                budget: r.budget,
                eps: Some(r.eps),
            };
            (run_racgm(p, x0, &params)?.trace, None)
        }
        Method::Ogmg => (run_ogmg(p, x0, r.l0, t, r.form.unwrap_or(Form::Canonical))?, None),
        Method::Ocgmg => (run_ocgmg(p, x0, r.l0, t, r.form.unwrap_or(Form::Canonical))?, None),
        Method::Fista => (run_reduced(p, x0, r.l0, t, Reduced::Fista)?, None),
        Method::Fistag => (run_reduced(p, x0, r.l0, t, Reduced::FistaG)?, None),
        Method::Meta | Method::MetaResume | Method::MetaFista => {
            let params = match r.method {
                Method::Meta => meta(MetaInner::AcgmOcgmg, false),
                Method::MetaResume => meta(MetaInner::AcgmOcgmg, true),
                _ => meta(MetaInner::Fista, false),
            };
            let res = run_meta(p, x0, &params)?;
            (res.trace, Some(res.failures))
        }
        Method::Template => unreachable!("rejected by Resolved::new"),
    };
    Ok(RunOutcome { trace, failures })
}

/// JSON written next to a trace CSV; enough to verify it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub method: Method,
    pub form: Option<Form>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    #[serde(rename = "L")]
    pub l: f64,
    pub family: Option<Family>,
    pub verdict: Verdict,
    pub oracle_calls: usize,
    pub eps: Option<f64>,
    #[serde(default)]
    pub failures: Option<usize>,
    #[serde(default)]
    pub problem: Option<String>,
}

impl Sidecar {
    pub fn from_trace(tr: &RunTrace, r: &Resolved, failures: Option<usize>, problem: Option<String>) -> Sidecar {
        Sidecar {
            method: tr.method,
            form: tr.form,
            t: tr.schedule.map(|s| s.t).or(r.t),
            l: tr.schedule.map_or(r.l0, |s| s.l),
            family: tr.schedule.map(|s| s.family),
            verdict: tr.verdict,
            oracle_calls: tr.oracle_calls,
            eps: (!fixed_length(r.method)).then_some(r.eps),
            failures,
            problem,
        }
    }

    pub fn schedule_ref(&self) -> Option<ScheduleRef> {
        Some(ScheduleRef {
            family: self.family.filter(|f| *f != Family::Custom)?,
            t: self.t?,
            l: self.l,
        })
    }
}

pub(crate) fn write_trace(tr: &RunTrace, side: &Sidecar, csv_path: &Path, timing: bool) -> Result<PathBuf> {
    if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    tr.write_csv(BufWriter::new(fs::File::create(csv_path)?), timing)?;
    let side_path = csv_path.with_extension("json");
    fs::write(&side_path, serde_json::to_string_pretty(side)?)?;
    Ok(side_path)
}

pub(super) fn cmd_run(a: &RunArgs) -> Result<i32> {
    let cfg = match &a.config {
        Some(p) => RunConfig::merged(&RunConfig::from_file(p)?, &a.flags)?,
        None => a.flags.clone(),
    };
    let manifest = cfg
        .problem
        .clone()
        .ok_or_else(|| Error::InvalidParameter("--problem is required".into()))?;
    let (_, inst) = load(&manifest)?;
    let p = inst.problem();
    let x0 = inst.start();
    let r = Resolved::new(&cfg, inst.lipschitz(), |l| {
        Ok(p.metric.dual_norm_sq(&p.gradient_mapping(l, &x0)?).sqrt())
    })?;
    let out = execute(&r, &p, &x0)?;
    let csv_path = cfg
        .out
        .clone()
        .unwrap_or_else(|| out_dir(None).join(format!("{}.csv", r.method)));
    let side = Sidecar::from_trace(&out.trace, &r, out.failures, Some(manifest.display().to_string()));
    write_trace(&out.trace, &side, &csv_path, cfg.timing)?;
    println!(
        "{} verdict={:?} oracle_calls={} final_gmap={:?} trace={}",
        r.method,
        out.trace.verdict,
        out.trace.oracle_calls,
        out.trace.last_gmap(),
        csv_path.display()
    );
    Ok(match out.trace.verdict {
        Verdict::LineSearchFailure { .. } => EXIT_LINE_SEARCH,
        _ => EXIT_OK,
    })
}
