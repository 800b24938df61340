//! Fixed-length template for minimizing the last gradient mapping, in its
//! four equivalent forms, plus the shared per-oracle-call bookkeeping.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::problems::CompositeProblem;
use crate::schedules::Schedule;
use crate::space::Vector;

use super::trace::{
    Form, IterateState, LineSearchEvent, Method, Output, Row, RunTrace, ScheduleRef, Verdict,
};

#[derive(Debug, Clone, Copy)]
pub struct FixedOptions {
    /// Keep `y, x, g, s, v` for every iteration.
    pub keep_states: bool,
}

impl Default for FixedOptions {
    fn default() -> Self {
        FixedOptions { keep_states: true }
    }
}

pub(crate) struct Eval {
    pub x: Vector,
    pub g: Vector,
}

/// Evaluates oracle points for a run of length `T` with a fixed `L`, and
/// records rows, snapshots and the monitoring sum `s_k = sum a_i g_i`.
pub(crate) struct Driver<'p> {
    p: &'p CompositeProblem,
    l: f64,
    t: usize,
    check: bool,
    keep: bool,
    a: Vec<f64>,
    acc: Vec<f64>,
    s: Vector,
    phase: String,
    start: Instant,
    pub trace: RunTrace,
}

impl<'p> Driver<'p> {
    /// `a[k]` for `k = 1..T-1` and `acc[k]` for `k = 0..T-1` feed `s_k` and
    /// `s_bar_k`; empty arrays switch the monitor off.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: &'p CompositeProblem,
        x0: &Vector,
        l: f64,
        t: usize,
        a: Vec<f64>,
        acc: Vec<f64>,
        check: bool,
        opts: &FixedOptions,
        method: Method,
        form: Option<Form>,
    ) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::invalid(format!("Lipschitz value {l} must be positive")));
        }
        if t == 0 {
            return Err(Error::invalid("T must be at least 1"));
        }
        p.metric.check(x0)?;
        crate::space::ensure_finite(x0, "starting point")?;
        let mut trace = RunTrace::new(method, form, x0.clone());
        trace.rows.push(Row {
            k: 0,
            oracle_calls: 0,
            phase: method.as_str().to_string(),
            l_k: l,
            f_x: p.objective(x0).finite(),
            gmap_dualnorm: None,
            savg_dualnorm: None,
            wall_s: 0.0,
        });
        Ok(Driver {
            p,
            l,
            t,
            check,
            keep: opts.keep_states,
            a,
            acc,
            s: Vector::zeros(x0.len()),
            phase: method.as_str().to_string(),
            start: Instant::now(),
            trace,
        })
    }

    /// Label written to the `phase` column of subsequent rows.
    pub fn set_phase(&mut self, phase: String) {
        if let Some(r) = self.trace.rows.first_mut() {
            r.phase = phase.clone();
        }
        self.phase = phase;
    }

    /// `s_k` after the last evaluation.
    pub fn s(&self) -> &Vector {
        &self.s
    }

    pub fn metric(&self) -> &crate::space::Metric {
        &self.p.metric
    }

    /// Evaluate `y_k`, `k = 1..=T`. `None` ends the run (line-search failure
    /// or a non-finite value); the verdict says which.
    pub fn eval(&mut self, k: usize, y: Vector, v: Option<&Vector>) -> Result<Option<Eval>> {
        if y.iter().any(|c| !c.is_finite()) {
            self.trace.verdict = Verdict::NonFinite { k };
            return Ok(None);
        }
        let step = self.p.step(self.l, &y)?;
        self.trace.oracle_calls += 1;
        if step.point.iter().chain(step.mapping.iter()).any(|c| !c.is_finite()) {
            self.trace.verdict = Verdict::NonFinite { k };
            return Ok(None);
        }
        let ok = !self.check || self.p.descent_ok(self.l, &y, &step);
        if self.check {
            self.trace.events.push(LineSearchEvent {
                k,
                phase: self.phase.clone(),
                trial: self.l,
                accepted: ok,
            });
        }
        let mut savg = None;
        let tracked = k < self.t && !self.a.is_empty();
        if tracked {
            self.s.axpy(self.a[k], &step.mapping, 1.0);
            let w = self.acc[k] - self.acc[0];
            savg = Some(self.p.metric.dual_norm_sq(&self.s).max(0.0).sqrt() / w);
        }
        self.trace.rows.push(Row {
            k,
            oracle_calls: self.trace.oracle_calls,
            phase: self.phase.clone(),
            l_k: self.l,
            f_x: self.p.objective(&step.point).finite(),
            gmap_dualnorm: Some(self.p.metric.dual_norm_sq(&step.mapping).max(0.0).sqrt()),
            savg_dualnorm: savg,
            wall_s: self.start.elapsed().as_secs_f64(),
        });
        if self.keep {
            self.trace.states.push(IterateState {
                k,
                y: y.clone(),
                x: step.point.clone(),
                g: step.mapping.clone(),
                s: tracked.then(|| self.s.clone()),
                v: v.cloned(),
                l: self.l,
            });
        }
        if k == self.t || !ok {
            self.trace.output = Some(Output {
                y,
                x: step.point.clone(),
                g: step.mapping.clone(),
                l: self.l,
            });
        }
        if !ok {
            self.trace.verdict = Verdict::LineSearchFailure { k };
            return Ok(None);
        }
        Ok(Some(Eval {
            x: step.point,
            g: step.mapping,
        }))
    }

    pub fn finish(mut self) -> RunTrace {
        self.trace.wall_s = self.start.elapsed().as_secs_f64();
        if self.trace.verdict == Verdict::Running {
            self.trace.verdict = Verdict::Completed;
        }
        self.trace
    }
}

/// Weight arrays for the driver: `a[k]`, `k = 1..T-1`, and `A_k`, `k = 0..T-1`.
pub(crate) fn weight_arrays(s: &Schedule) -> (Vec<f64>, Vec<f64>) {
    let t = s.len();
    let a = (0..=t).map(|k| if (1..t).contains(&k) { s.a(k) } else { f64::NAN }).collect();
    let acc = (0..=t).map(|k| if k < t { s.acc(k) } else { f64::NAN }).collect();
    (a, acc)
}

/// Run the template with the weights of `s` and the fixed estimate `l`
/// (`L_k = l` for every `k`).
pub fn run_template(
    p: &CompositeProblem,
    x0: &Vector,
    s: &Schedule,
    l: f64,
    form: Form,
) -> Result<RunTrace> {
    run_template_with(p, x0, s, l, form, false, &FixedOptions::default())
}

/// As [`run_template`]; `check_descent` turns on the per-iteration descent
/// test that stops the run at the first failure.
pub fn run_template_with(
    p: &CompositeProblem,
    x0: &Vector,
    s: &Schedule,
    l: f64,
    form: Form,
    check_descent: bool,
    opts: &FixedOptions,
) -> Result<RunTrace> {
    let t = s.len();
    let (a, acc) = weight_arrays(s);
    let mut d = Driver::new(p, x0, l, t, a, acc, check_descent, opts, Method::Template, Some(form))?;
    d.trace.schedule = Some(ScheduleRef {
        family: s.family(),
        t,
        l,
    });
    match form {
        Form::Canonical => canonical(&mut d, x0, s, t)?,
        Form::Extrapolated => extrapolated(&mut d, x0, s, l, t)?,
        Form::OneAux => one_aux(&mut d, x0, s, l, t)?,
        Form::TwoAux => two_aux(&mut d, x0, s, l, t)?,
    }
    Ok(d.finish())
}

fn canonical(d: &mut Driver, x0: &Vector, s: &Schedule, t: usize) -> Result<()> {
    let mut x = x0.clone();
    for k in 0..t {
        let y = if k == 0 {
            x0.clone()
        } else {
            &x - d.metric().apply_inv(d.s()) * s.b(k)
        };
        match d.eval(k + 1, y, None)? {
            Some(e) => x = e.x,
            None => return Ok(()),
        }
    }
    Ok(())
}

fn extrapolated(d: &mut Driver, x0: &Vector, s: &Schedule, l: f64, t: usize) -> Result<()> {
    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    let mut y_prev = x0.clone();
    let mut g1 = None;
    for k in 0..t {
        let y = match k {
            0 => x0.clone(),
            1 => {
                let g: &Vector = g1.as_ref().expect("g_1 recorded");
                &x - d.metric().apply_inv(g) * (s.b(1) * s.a(1))
            }
            _ => {
                let e = s.b(k) / s.b(k - 1);
                let c = s.b(k) * (l * s.a(k) - 1.0 / s.b(k - 1));
                &x + (&x - &x_prev) * e + (&x - &y_prev) * c
            }
        };
        match d.eval(k + 1, y.clone(), None)? {
            Some(ev) => {
                if k == 0 {
                    g1 = Some(ev.g);
                }
                x_prev = std::mem::replace(&mut x, ev.x);
                y_prev = y;
            }
            None => return Ok(()),
        }
    }
    Ok(())
}

fn one_aux(d: &mut Driver, x0: &Vector, s: &Schedule, l: f64, t: usize) -> Result<()> {
    let mut v = x0.clone();
    let mut x = x0.clone();
    for k in 0..t.saturating_sub(1) {
        let y = if k == 0 {
            x0.clone()
        } else {
            (&x * s.b_to_t(k + 1) + &v * s.b(k)) / s.b_to_t(k)
        };
        let Some(e) = d.eval(k + 1, y, Some(&v))? else {
            return Ok(());
        };
        let c = 1.0 / l + s.a(k + 1) * s.b_to_t(k + 1);
        v -= d.metric().apply_inv(&e.g) * c;
        x = e.x;
    }
    // y_T = v_{T-1}
    d.eval(t, v.clone(), Some(&v))?;
    Ok(())
}

fn two_aux(d: &mut Driver, x0: &Vector, s: &Schedule, l: f64, t: usize) -> Result<()> {
    let mut v = x0.clone();
    let mut x = x0.clone();
    for k in 0..t.saturating_sub(1) {
        let y = if k == 0 {
            x0.clone()
        } else {
            let cbar = s.acc(k) * s.b(k) - s.a(k + 1) * s.b_to_t(k + 1);
            (&x * s.acc(k) + &v * s.a(k + 1) - d.metric().apply_inv(d.s()) * cbar) / s.acc(k + 1)
        };
        let Some(e) = d.eval(k + 1, y, Some(&v))? else {
            return Ok(());
        };
        let c = 1.0 / l + s.a(k + 1) * s.b_to_t(k + 1);
        v -= d.metric().apply_inv(&e.g) * c;
        x = e.x;
    }
    d.eval(t, v.clone(), Some(&v))?;
    Ok(())
}
