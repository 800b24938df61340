//! Quasi-online meta-scheme: cycles of ACGM followed by OCGM-G instances of
//! doubling length `T_j = 2^{j+1}`, each successful OCGM-G instance
//! certifying its output mapping. Also the resume variant and the
//! FISTA + FISTA-G pairing with a known `L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::CompositeProblem;
use crate::space::Vector;

use super::acgm::{Acgm, LineSearch, StepOutcome};
use super::ocgmg::run_ocgmg_with;
use super::reduced::{run_reduced_with, Reduced};
use super::template::FixedOptions;
use super::trace::{Form, Method, RunTrace, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetaInner {
    AcgmOcgmg,
    /// FISTA then FISTA-G, both with `L = l0`.
    Fista,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaParams {
    pub l0: f64,
    pub ls: LineSearch,
    /// Stop once a certified mapping has dual norm `<= eps`.
    pub eps: Option<f64>,
    /// Oracle-call budget.
    pub budget: Option<usize>,
    pub max_cycles: Option<usize>,
    pub resume: bool,
    pub inner: MetaInner,
    pub form: Form,
}

impl Default for MetaParams {
    fn default() -> Self {
        MetaParams {
            l0: 1.0,
            ls: LineSearch::default(),
            eps: None,
            budget: None,
            max_cycles: None,
            resume: false,
            inner: MetaInner::AcgmOcgmg,
            form: Form::Extrapolated,
        }
    }
}

/// One OCGM-G (or FISTA-G) instance inside a cycle.
#[derive(Debug, Clone, Serialize)]
pub struct Instance {
    pub i: usize,
    pub l: f64,
    pub f_in: f64,
    pub f_out: f64,
    pub gmap_out: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cycle {
    pub j: usize,
    pub t_j: usize,
    /// `F(r_j)`
    pub f_start: f64,
    /// `F` at the ACGM (or FISTA) output `r̄_{j+1,0}`.
    pub f_inner_start: f64,
    pub acgm_iters: usize,
    pub acgm_calls: usize,
    /// Warm-start estimate handed to the next cycle.
    pub l_bar: f64,
    /// `L_max` after the cycle.
    pub l_max: f64,
    pub instances: Vec<Instance>,
    /// Certified `||g_bar_{j+1}||_*`.
    pub gbar: f64,
    /// `F(r_{j+1})`
    pub f_end: f64,
    /// Iterations (accepted steps of both methods) at the end of the cycle.
    pub iters_end: usize,
    pub calls_end: usize,
}

impl Cycle {
    pub fn failures(&self) -> usize {
        self.instances.iter().filter(|x| x.verdict.is_failure()).count()
    }

    /// `F` at the input of the successful instance, `F(r̄_{j+1, n-1})`.
    pub fn f_last_input(&self) -> f64 {
        self.instances.last().map_or(self.f_inner_start, |x| x.f_in)
    }
}

#[derive(Debug, Clone)]
pub struct MetaResult {
    pub cycles: Vec<Cycle>,
    /// Last certified point and mapping norm.
    pub r: Vector,
    pub gbar: Option<f64>,
    pub failures: usize,
    pub trace: RunTrace,
}

pub fn run_meta(p: &CompositeProblem, x0: &Vector, params: &MetaParams) -> Result<MetaResult> {
    let MetaParams {
        l0,
        ls,
        eps,
        budget,
        max_cycles,
        resume,
        inner,
        form,
    } = *params;
    if eps.is_none() && budget.is_none() && max_cycles.is_none() {
        return Err(Error::invalid("meta-scheme needs eps, a budget or a cycle cap"));
    }
    if eps.is_some_and(|e| !(e > 0.0)) {
        return Err(Error::invalid("eps must be positive"));
    }
    if inner == MetaInner::Fista && resume {
        return Err(Error::Unsupported("resume applies to the ACGM + OCGM-G pairing only".into()));
    }
    ls.validate()?;
    if !(l0 > 0.0 && l0.is_finite()) {
        return Err(Error::invalid(format!("L_0 = {l0} must be positive")));
    }
    let method = match (inner, resume) {
        (MetaInner::Fista, _) => Method::MetaFista,
        (_, true) => Method::MetaResume,
        _ => Method::Meta,
    };
    let cap = budget.unwrap_or(usize::MAX);
    let opts = FixedOptions { keep_states: false };
    let mut trace = RunTrace::new(method, Some(form), x0.clone());
    let mut cycles: Vec<Cycle> = Vec::new();
    let mut r = x0.clone();
    let mut f_r = p.value(x0)?;
    let mut certified: Option<(Vector, f64)> = None;
    let mut l_max = l0;
    let mut l_bar = l0;
    let mut iters = 0usize;
    let mut failures = 0usize;
    // persistent ACGM state for the resume variant
    let mut resumed: Option<Acgm> = None;

    let mut j = 0usize;
    let verdict = 'cycles: loop {
        if max_cycles.is_some_and(|c| j >= c) {
            break Verdict::IterationCap;
        }
        let t_j = 2usize << j;
        let f_start = f_r;
        let calls0 = trace.oracle_calls;

        // first stage: ACGM (or FISTA) from r_j
        let (r_bar, f_bar, stage_iters) = match inner {
            MetaInner::AcgmOcgmg => {
                let steps = if j == 0 { t_j } else { t_j / 2 };
                let mut m = match resumed.take() {
                    Some(m) if resume => m,
                    _ => Acgm::new(p, &r, l_bar, ls, false)?,
                };
                m.set_phase(format!("acgm:{j}"));
                let k0 = m.k;
                let calls_before = m.trace.oracle_calls;
                let want = if resume { steps } else { t_j };
                let mut out = StepOutcome::Accepted;
                while m.k - k0 < want {
                    let room = cap - trace.oracle_calls;
                    out = m.step(calls_before + room)?;
                    if out != StepOutcome::Accepted {
                        break;
                    }
                }
                l_max = l_max.max(m.l_max);
                l_bar = m.l();
                let done = m.k - k0;
                let (xr, fr) = (m.x().clone(), m.f());
                let sub = if resume {
                    // hand the new rows to the merged trace, keep the state
                    let mut sub = RunTrace::new(Method::Acgm, None, xr.clone());
                    sub.rows = m.trace.rows.drain(..).filter(|row| j == 0 || row.k > k0).collect();
                    sub.events = std::mem::take(&mut m.trace.events);
                    sub.oracle_calls = m.trace.oracle_calls - calls_before;
                    resumed = Some(m);
                    sub
                } else {
                    m.finish()
                };
                trace.append(sub);
                iters += done;
                match out {
                    StepOutcome::Accepted => {}
                    StepOutcome::Budget => break 'cycles Verdict::BudgetExhausted,
                    StepOutcome::NonFinite => break 'cycles Verdict::NonFinite { k: iters },
                }
                (xr, fr, done)
            }
            MetaInner::Fista => {
                if trace.oracle_calls + t_j > cap {
                    break 'cycles Verdict::BudgetExhausted;
                }
                let sub = run_reduced_with(p, &r, l0, t_j, Reduced::Fista, &opts, Some(format!("fista:{j}")))?;
                let last = sub.rows.last().and_then(|x| x.f_x).unwrap_or(f64::NAN);
                let xr = sub.output.as_ref().map(|o| o.x.clone()).unwrap_or_else(|| r.clone());
                let done = sub.rows.len() - 1;
                let bad = sub.verdict.is_failure();
                trace.append(sub);
                iters += done;
                if bad {
                    break 'cycles Verdict::NonFinite { k: iters };
                }
                (xr, last, done)
            }
        };
        let mut cycle = Cycle {
            j,
            t_j,
            f_start,
            f_inner_start: f_bar,
            acgm_iters: stage_iters,
            acgm_calls: trace.oracle_calls - calls0,
            l_bar,
            l_max,
            instances: Vec::new(),
            gbar: f64::NAN,
            f_end: f64::NAN,
            iters_end: 0,
            calls_end: 0,
        };

        // second stage: OCGM-G instances until the line search passes
        let mut input = r_bar.clone();
        let mut f_in = f_bar;
        for i in 0usize.. {
            if trace.oracle_calls + t_j > cap {
                cycles.push(cycle);
                break 'cycles Verdict::BudgetExhausted;
            }
            let phase = Some(format!("{}:{j}:{i}", if inner == MetaInner::Fista { "fistag" } else { "ocgmg" }));
            let (sub, l_used) = match inner {
                MetaInner::AcgmOcgmg => (run_ocgmg_with(p, &input, l_max, t_j, form, &opts, phase)?, l_max),
                MetaInner::Fista => (run_reduced_with(p, &input, l0, t_j, Reduced::FistaG, &opts, phase)?, l0),
            };
            let verdict = sub.verdict;
            let Some(out) = sub.output.clone() else {
                trace.append(sub);
                cycles.push(cycle);
                break 'cycles Verdict::NonFinite { k: iters };
            };
            let f_out = p.value(&out.x)?;
            let gmap_out = p.metric.dual_norm_sq(&out.g).max(0.0).sqrt();
            iters += sub.rows.len() - 1;
            trace.append(sub);
            cycle.instances.push(Instance {
                i,
                l: l_used,
                f_in,
                f_out,
                gmap_out,
                verdict,
            });
            if verdict.is_failure() {
                if let Verdict::NonFinite { .. } = verdict {
                    cycles.push(cycle);
                    break 'cycles verdict;
                }
                failures += 1;
                l_max *= ls.gamma_u;
                if !resume {
                    input = out.x;
                    f_in = f_out;
                }
                continue;
            }
            cycle.gbar = gmap_out;
            if resume {
                // the OCGM-G branch is discarded
                r = r_bar.clone();
                f_r = f_bar;
            } else {
                r = out.x.clone();
                f_r = f_out;
            }
            certified = Some((out.x, gmap_out));
            break;
        }
        cycle.l_max = l_max;
        cycle.f_end = f_r;
        cycle.iters_end = iters;
        cycle.calls_end = trace.oracle_calls;
        cycles.push(cycle);
        if eps.is_some_and(|e| certified.as_ref().is_some_and(|c| c.1 <= e)) {
            break Verdict::Converged;
        }
        j += 1;
    };
    trace.verdict = verdict;
    let (r, gbar) = match certified {
        Some((x, g)) => (x, Some(g)),
        None => (x0.clone(), None),
    };
    Ok(MetaResult {
        cycles,
        r,
        gbar,
        failures,
        trace,
    })
}
