//! ACGM with the fully adaptive backtracking line search, as a resumable
//! state machine, plus the plain gradient method with the same line search.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::CompositeProblem;
use crate::space::Vector;

use super::trace::{IterateState, LineSearchEvent, Method, Row, RunTrace, Verdict};

/// Consecutive increases of the estimate allowed inside one line search.
pub const LINE_SEARCH_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearch {
    pub gamma_d: f64,
    pub gamma_u: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            gamma_d: 0.9,
            gamma_u: 2.0,
        }
    }
}

impl LineSearch {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_d > 0.0 && self.gamma_d <= 1.0 && self.gamma_u > 1.0 && self.gamma_u.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < gamma_d <= 1 < gamma_u, got {} and {}",
                self.gamma_d, self.gamma_u
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    /// The call cap was reached before a trial passed.
    Budget,
    NonFinite,
}

/// One ACGM instance started at `x_0` with `A_0 = 0`.
#[derive(Debug)]
pub struct Acgm<'p> {
    p: &'p CompositeProblem,
    ls: LineSearch,
    keep: bool,
    phase: String,
    start: Instant,
    pub k: usize,
    x: Vector,
    v: Vector,
    acc: f64,
    l: f64,
    fx: f64,
    x1: Option<(Vector, f64)>,
    /// `A_k` for `k = 0..`
    pub acc_hist: Vec<f64>,
    /// `F(x_k)` for `k = 0..`
    pub f_hist: Vec<f64>,
    /// Largest accepted estimate.
    pub l_max: f64,
    /// Dual norm of the mapping at `y_1 = x_0`.
    pub first_gmap: Option<f64>,
    pub trace: RunTrace,
}

impl<'p> Acgm<'p> {
    pub fn new(p: &'p CompositeProblem, x0: &Vector, l0: f64, ls: LineSearch, keep_states: bool) -> Result<Self> {
        ls.validate()?;
        if !(l0 > 0.0 && l0.is_finite()) {
            return Err(Error::invalid(format!("L_0 = {l0} must be positive")));
        }
        p.metric.check(x0)?;
        let fx = p.value(x0)?;
        let mut trace = RunTrace::new(Method::Acgm, None, x0.clone());
        trace.rows.push(Row {
            k: 0,
            oracle_calls: 0,
            phase: Method::Acgm.as_str().to_string(),
            l_k: l0,
            f_x: Some(fx),
            gmap_dualnorm: None,
            savg_dualnorm: None,
            wall_s: 0.0,
        });
        Ok(Acgm {
            p,
            ls,
            keep: keep_states,
            phase: Method::Acgm.as_str().to_string(),
            start: Instant::now(),
            k: 0,
            x: x0.clone(),
            v: x0.clone(),
            acc: 0.0,
            l: l0,
            fx,
            x1: None,
            acc_hist: vec![0.0],
            f_hist: vec![fx],
            l_max: 0.0,
            first_gmap: None,
            trace,
        })
    }

    pub fn set_phase(&mut self, phase: String) {
        if let Some(r) = self.trace.rows.first_mut() {
            r.phase = phase.clone();
        }
        self.phase = phase;
    }

    /// `A_k`
    pub fn acc(&self) -> f64 {
        self.acc
    }

    /// Last accepted estimate `L_k` (`L_0` before the first step).
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn x(&self) -> &Vector {
        &self.x
    }

    pub fn f(&self) -> f64 {
        self.fx
    }

    /// `argmin{F(x_k), F(x_1)}`, preferring `x_k` on ties.
    pub fn output(&self) -> (Vector, f64) {
        match &self.x1 {
            Some((x1, f1)) if *f1 < self.fx => (x1.clone(), *f1),
            _ => (self.x.clone(), self.fx),
        }
    }

    /// One ACGM iteration; trials stop once `trace.oracle_calls` reaches `max_calls`.
    pub fn step(&mut self, max_calls: usize) -> Result<StepOutcome> {
        let mut l = self.ls.gamma_d * self.l;
        let mut increases = 0usize;
        loop {
            if self.trace.oracle_calls >= max_calls {
                return Ok(StepOutcome::Budget);
            }
            let a = (1.0 + (1.0 + 4.0 * l * self.acc).sqrt()) / (2.0 * l);
            let y = (&self.x * self.acc + &self.v * a) / (self.acc + a);
            if y.iter().any(|c| !c.is_finite()) {
                self.trace.verdict = Verdict::NonFinite { k: self.k + 1 };
                return Ok(StepOutcome::NonFinite);
            }
            let st = self.p.step(l, &y)?;
            self.trace.oracle_calls += 1;
            let ok = self.p.descent_ok(l, &y, &st);
            self.trace.events.push(LineSearchEvent {
                k: self.k + 1,
                phase: self.phase.clone(),
                trial: l,
                accepted: ok,
            });
            if !ok {
                increases += 1;
                if increases > LINE_SEARCH_CAP {
                    return Err(Error::LineSearchCap(LINE_SEARCH_CAP));
                }
                l *= self.ls.gamma_u;
                continue;
            }
            let fx = self.p.value(&st.point)?;
            if !fx.is_finite() || st.mapping.iter().any(|c| !c.is_finite()) {
                self.trace.verdict = Verdict::NonFinite { k: self.k + 1 };
                return Ok(StepOutcome::NonFinite);
            }
            let gnorm = self.p.metric.dual_norm_sq(&st.mapping).max(0.0).sqrt();
            if self.keep {
                self.trace.states.push(IterateState {
                    k: self.k + 1,
                    y: y.clone(),
                    x: st.point.clone(),
                    g: st.mapping.clone(),
                    s: None,
                    v: Some(self.v.clone()),
                    l,
                });
            }
            self.acc += a;
            self.v += (&st.point - &y) * (a * l);
            self.k += 1;
            self.l = l;
            self.l_max = self.l_max.max(l);
            self.x = st.point;
            self.fx = fx;
            if self.k == 1 {
                self.x1 = Some((self.x.clone(), fx));
                self.first_gmap = Some(gnorm);
            }
            self.acc_hist.push(self.acc);
            self.f_hist.push(fx);
            self.trace.rows.push(Row {
                k: self.k,
                oracle_calls: self.trace.oracle_calls,
                phase: self.phase.clone(),
                l_k: l,
                f_x: Some(fx),
                gmap_dualnorm: Some(gnorm),
                savg_dualnorm: None,
                wall_s: self.start.elapsed().as_secs_f64(),
            });
            return Ok(StepOutcome::Accepted);
        }
    }

    pub fn finish(mut self) -> RunTrace {
        self.trace.wall_s = self.start.elapsed().as_secs_f64();
        self.trace
    }
}

/// Stopping rules for [`run_acgm`]; the run ends when any of them fires.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AcgmStop {
    /// Stop once `A_k >= threshold`.
    pub threshold: Option<f64>,
    pub max_iters: Option<usize>,
    /// Oracle-call budget.
    pub budget: Option<usize>,
    /// Stop once the mapping at the last oracle point has dual norm `<= eps`.
    pub eps: Option<f64>,
}

impl AcgmStop {
    fn validate(&self) -> Result<()> {
        if self.threshold.is_none() && self.max_iters.is_none() && self.budget.is_none() && self.eps.is_none() {
            return Err(Error::invalid("ACGM needs a stopping rule"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AcgmResult {
    pub r: Vector,
    pub f_r: f64,
    pub acc: f64,
    pub n: usize,
    pub l_max: f64,
    pub l_last: f64,
    pub acc_hist: Vec<f64>,
    pub trace: RunTrace,
}

pub fn run_acgm(
    p: &CompositeProblem,
    x0: &Vector,
    l0: f64,
    ls: LineSearch,
    stop: AcgmStop,
    keep_states: bool,
) -> Result<AcgmResult> {
    stop.validate()?;
    let mut m = Acgm::new(p, x0, l0, ls, keep_states)?;
    let cap = stop.budget.unwrap_or(usize::MAX);
    loop {
        match m.step(cap)? {
            StepOutcome::Accepted => {}
            StepOutcome::Budget => {
                m.trace.verdict = Verdict::BudgetExhausted;
                break;
            }
            StepOutcome::NonFinite => break,
        }
        if stop.eps.is_some_and(|e| m.trace.last_gmap().is_some_and(|g| g <= e)) {
            m.trace.verdict = Verdict::Converged;
            break;
        }
        if stop.threshold.is_some_and(|u| m.acc >= u) || stop.max_iters.is_some_and(|n| m.k >= n) {
            m.trace.verdict = Verdict::Completed;
            break;
        }
    }
    let (r, f_r) = m.output();
    let (acc, n, l_max, l_last) = (m.acc, m.k, m.l_max, m.l);
    let acc_hist = m.acc_hist.clone();
    let mut trace = m.finish();
    trace.output = None;
    Ok(AcgmResult {
        r,
        f_r,
        acc,
        n,
        l_max,
        l_last,
        acc_hist,
        trace,
    })
}

/// Gradient method `x_{k+1} = T_{L_{k+1}}(x_k)` with the same line search.
pub fn run_gm(
    p: &CompositeProblem,
    x0: &Vector,
    l0: f64,
    ls: LineSearch,
    stop: AcgmStop,
) -> Result<RunTrace> {
    ls.validate()?;
    stop.validate()?;
    if !(l0 > 0.0 && l0.is_finite()) {
        return Err(Error::invalid(format!("L_0 = {l0} must be positive")));
    }
    let start = Instant::now();
    let mut tr = RunTrace::new(Method::Gm, None, x0.clone());
    let mut x = x0.clone();
    tr.rows.push(Row {
        k: 0,
        oracle_calls: 0,
        phase: Method::Gm.as_str().to_string(),
        l_k: l0,
        f_x: Some(p.value(x0)?),
        gmap_dualnorm: None,
        savg_dualnorm: None,
        wall_s: 0.0,
    });
    let mut l = l0;
    let cap = stop.budget.unwrap_or(usize::MAX);
    let mut k = 0usize;
    tr.verdict = 'outer: loop {
        let mut trial = ls.gamma_d * l;
        let mut increases = 0usize;
        let st = loop {
            if tr.oracle_calls >= cap {
                break 'outer Verdict::BudgetExhausted;
            }
            let st = p.step(trial, &x)?;
            tr.oracle_calls += 1;
            let ok = p.descent_ok(trial, &x, &st);
            tr.events.push(LineSearchEvent {
                k: k + 1,
                phase: Method::Gm.as_str().to_string(),
                trial,
                accepted: ok,
            });
            if ok {
                break st;
            }
            increases += 1;
            if increases > LINE_SEARCH_CAP {
                return Err(Error::LineSearchCap(LINE_SEARCH_CAP));
            }
            trial *= ls.gamma_u;
        };
        l = trial;
        k += 1;
        let gnorm = p.metric.dual_norm_sq(&st.mapping).max(0.0).sqrt();
        x = st.point;
        let fx = p.value(&x)?;
        if !fx.is_finite() {
            break Verdict::NonFinite { k };
        }
        tr.rows.push(Row {
            k,
            oracle_calls: tr.oracle_calls,
            phase: Method::Gm.as_str().to_string(),
            l_k: l,
            f_x: Some(fx),
            gmap_dualnorm: Some(gnorm),
            savg_dualnorm: None,
            wall_s: start.elapsed().as_secs_f64(),
        });
        if stop.eps.is_some_and(|e| gnorm <= e) {
            break Verdict::Converged;
        }
        if stop.max_iters.is_some_and(|n| k >= n) {
            break Verdict::Completed;
        }
    };
    tr.wall_s = start.elapsed().as_secs_f64();
    Ok(tr)
}
