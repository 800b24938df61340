//! OCGM-G: fixed-length composite method with a single estimate `L_0` and a
//! descent check after every step. A failed check ends the run and reports
//! the last oracle point.

use crate::error::Result;
use crate::problems::CompositeProblem;
use crate::schedules::{ocgmg_schedule, Family, Schedule};
use crate::space::Vector;

use super::template::{weight_arrays, Driver, FixedOptions};
use super::trace::{Form, Method, RunTrace, ScheduleRef};

/// Run OCGM-G. A line-search failure is not an error; see `trace.verdict`.
pub fn run_ocgmg(p: &CompositeProblem, x0: &Vector, l0: f64, t: usize, form: Form) -> Result<RunTrace> {
    run_ocgmg_with(p, x0, l0, t, form, &FixedOptions::default(), None)
}

pub fn run_ocgmg_with(
    p: &CompositeProblem,
    x0: &Vector,
    l0: f64,
    t: usize,
    form: Form,
    opts: &FixedOptions,
    phase: Option<String>,
) -> Result<RunTrace> {
    let s = ocgmg_schedule(t, 1.0)?;
    let (a, acc) = weight_arrays(&s);
    let mut d = Driver::new(p, x0, l0, t, a, acc, true, opts, Method::Ocgmg, Some(form))?;
    if let Some(ph) = phase {
        d.set_phase(ph);
    }
    d.trace.schedule = Some(ScheduleRef {
        family: Family::OcgmG,
        t,
        l: l0,
    });
    match form {
        Form::Canonical => canonical(&mut d, x0, &s, l0, t)?,
        Form::Extrapolated => extrapolated(&mut d, x0, &s, t)?,
        Form::OneAux => one_aux(&mut d, x0, &s, l0, t)?,
        Form::TwoAux => two_aux(&mut d, x0, &s, l0, t)?,
    }
    Ok(d.finish())
}

fn canonical(d: &mut Driver, x0: &Vector, s: &Schedule, l0: f64, t: usize) -> Result<()> {
    let mut x = x0.clone();
    for k in 0..t {
        let y = if k == 0 {
            x0.clone()
        } else {
            &x - d.metric().apply_inv(d.s()) / (l0 * s.a(k + 1))
        };
        match d.eval(k + 1, y, None)? {
            Some(e) => x = e.x,
            None => return Ok(()),
        }
    }
    Ok(())
}

fn extrapolated(d: &mut Driver, x0: &Vector, s: &Schedule, t: usize) -> Result<()> {
    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    for k in 0..t {
        let y = if k == 0 {
            x0.clone()
        } else {
            &x + (&x - &x_prev) * (s.a(k) / s.a(k + 1))
        };
        let Some(e) = d.eval(k + 1, y, None)? else {
            return Ok(());
        };
        x_prev = std::mem::replace(&mut x, e.x);
    }
    Ok(())
}

fn one_aux(d: &mut Driver, x0: &Vector, s: &Schedule, l0: f64, t: usize) -> Result<()> {
    let mut v = x0.clone();
    let mut x = x0.clone();
    for k in 0..t - 1 {
        let w = 2.0 * s.a(k + 1) / s.acc(k + 1);
        let y = &x * (1.0 - w) + &v * w;
        let Some(e) = d.eval(k + 1, y, Some(&v))? else {
            return Ok(());
        };
        v -= d.metric().apply_inv(&e.g) * (s.acc(k + 1) / (2.0 * l0 * s.a(k + 1)));
        x = e.x;
    }
    d.eval(t, v.clone(), Some(&v))?;
    Ok(())
}

fn two_aux(d: &mut Driver, x0: &Vector, s: &Schedule, l0: f64, t: usize) -> Result<()> {
    let mut v = x0.clone();
    let mut x = x0.clone();
    for k in 0..t - 1 {
        let (a, next) = (s.a(k + 1), s.acc(k + 1));
        let y = (&x * s.acc(k) + &v * a) / next - d.metric().apply_inv(d.s()) / (2.0 * l0 * a);
        let Some(e) = d.eval(k + 1, y, Some(&v))? else {
            return Ok(());
        };
        v -= d.metric().apply_inv(&e.g) * (next / (2.0 * l0 * a));
        x = e.x;
    }
    d.eval(t, v.clone(), Some(&v))?;
    Ok(())
}
