//! OGM-G: the optimal fixed-length method for the last gradient norm of a
//! smooth convex function, written directly in terms of `theta_{k,T}`.

use crate::error::{Error, Result};
use crate::problems::CompositeProblem;
use crate::schedules::{ogmg_schedule, theta_table, Family};
use crate::space::Vector;

use super::template::{weight_arrays, Driver, FixedOptions};
use super::trace::{Form, Method, RunTrace, ScheduleRef};

pub fn run_ogmg(p: &CompositeProblem, x0: &Vector, l: f64, t: usize, form: Form) -> Result<RunTrace> {
    run_ogmg_with(p, x0, l, t, form, &FixedOptions::default())
}

pub fn run_ogmg_with(
    p: &CompositeProblem,
    x0: &Vector,
    l: f64,
    t: usize,
    form: Form,
    opts: &FixedOptions,
) -> Result<RunTrace> {
    if !p.is_smooth() {
        return Err(Error::Unsupported("OGM-G requires a smooth objective (no regularizer)".into()));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid(format!("Lipschitz value {l} must be positive")));
    }
    let sched = ogmg_schedule(t, l, 1.0)?;
    let th = theta_table(t)?;
    let (a, acc) = weight_arrays(&sched);
    let mut d = Driver::new(p, x0, l, t, a, acc, false, opts, Method::Ogmg, Some(form))?;
    d.trace.schedule = Some(ScheduleRef {
        family: Family::OgmG,
        t,
        l,
    });
    match form {
        Form::Canonical => canonical(&mut d, x0, &th, l, t)?,
        Form::Extrapolated => extrapolated(&mut d, x0, &th, t)?,
        Form::OneAux => one_aux(&mut d, x0, &th, l, t)?,
        Form::TwoAux => two_aux(&mut d, x0, &th, l, t)?,
    }
    Ok(d.finish())
}

fn canonical(d: &mut Driver, x0: &Vector, th: &[f64], l: f64, t: usize) -> Result<()> {
    let mut x = x0.clone();
    for k in 0..t {
        let y = if k == 0 {
            x0.clone()
        } else {
            let c = th[k] * th[k] * (2.0 * th[k] - 1.0) / l;
            &x - d.metric().apply_inv(d.s()) * c
        };
        match d.eval(k + 1, y, None)? {
            Some(e) => x = e.x,
            None => return Ok(()),
        }
    }
    Ok(())
}

fn extrapolated(d: &mut Driver, x0: &Vector, th: &[f64], t: usize) -> Result<()> {
    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    let mut y_prev = x0.clone();
    for k in 0..t {
        let y = if k == 0 {
            x0.clone()
        } else {
            let (p, c) = (th[k - 1], th[k]);
            let mom = (p - 1.0) * (2.0 * c - 1.0) / (p * (2.0 * p - 1.0));
            let cor = (2.0 * c - 1.0) / (2.0 * p - 1.0);
            &x + (&x - &x_prev) * mom + (&x - &y_prev) * cor
        };
        let Some(e) = d.eval(k + 1, y.clone(), None)? else {
            return Ok(());
        };
        x_prev = std::mem::replace(&mut x, e.x);
        y_prev = y;
    }
    Ok(())
}

fn one_aux(d: &mut Driver, x0: &Vector, th: &[f64], l: f64, t: usize) -> Result<()> {
    let mut v = x0.clone();
    let mut x = x0.clone();
    for k in 0..t - 1 {
        let w = (th[k + 1] / th[k]).powi(4);
        let y = &x * w + &v * (1.0 - w);
        let Some(e) = d.eval(k + 1, y, Some(&v))? else {
            return Ok(());
        };
        let c = if k == 0 { (th[0] + 1.0) / (2.0 * l) } else { th[k] / l };
        v -= d.metric().apply_inv(&e.g) * c;
        x = e.x;
    }
    d.eval(t, v.clone(), Some(&v))?;
    Ok(())
}

fn two_aux(d: &mut Driver, x0: &Vector, th: &[f64], l: f64, t: usize) -> Result<()> {
    let mut v = x0.clone();
    let mut x = x0.clone();
    let mut acc = 2.0 / (th[0] * th[0]);
    for k in 0..t - 1 {
        let a = 1.0 / (th[k] * th[k + 1] * th[k + 1]);
        let next = acc + a;
        let y = (&x * acc + &v * a) / next - d.metric().apply_inv(d.s()) / (l * a);
        let Some(e) = d.eval(k + 1, y, Some(&v))? else {
            return Ok(());
        };
        let c = if k == 0 { (next + a) / (2.0 * l * a) } else { next / (l * a) };
        v -= d.metric().apply_inv(&e.g) * c;
        x = e.x;
        acc = next;
    }
    d.eval(t, v.clone(), Some(&v))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::{DMatrix, DVector};

    use super::*;
    use crate::engines::trace::iterate_gap;
    use crate::problems::{make_lasso, Quadratic, QuadraticInstance, Regularizer};

    #[test]
    fn two_step_example_meets_bound_with_equality() {
        let q = Quadratic::new(DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        let p = CompositeProblem::new(Arc::new(q), Regularizer::Zero);
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        for form in Form::ALL {
            let tr = run_ogmg(&p, &x0, 1.0, 2, form).unwrap();
            let f = tr.f_values();
            let g = tr.last_gmap().unwrap();
            assert!((g * g - 0.25).abs() < 1e-15, "{form}");
            assert!(g * g <= 0.5 * (f[0] - f[2]) * (1.0 + 1e-12));
            assert_eq!(tr.oracle_calls, 2);
        }
    }

    #[test]
    fn forms_agree_on_random_quadratics() {
        for seed in 0..4u64 {
            let inst = QuadraticInstance::generate(20, 0.0 + 1e-3, 2.0, seed).unwrap();
            let p = inst.problem();
            for t in [2usize, 5, 32] {
                let base = run_ogmg(&p, &inst.start, 2.0, t, Form::Canonical).unwrap();
                for form in &Form::ALL[1..] {
                    let other = run_ogmg(&p, &inst.start, 2.0, t, *form).unwrap();
                    let gap = iterate_gap(&base.states, &other.states);
                    assert!(gap <= 1e-9, "seed {seed} T={t} {form}: {gap}");
                }
            }
        }
    }

    #[test]
    fn matches_template_with_ogmg_weights() {
        let inst = QuadraticInstance::generate(12, 0.01, 1.0, 9).unwrap();
        let p = inst.problem();
        let s = ogmg_schedule(10, 1.0, 1.0).unwrap();
        let a = crate::engines::run_template(&p, &inst.start, &s, 1.0, Form::Canonical).unwrap();
        let b = run_ogmg(&p, &inst.start, 1.0, 10, Form::TwoAux).unwrap();
        assert!(iterate_gap(&a.states, &b.states) <= 1e-10);
    }

    #[test]
    fn last_gradient_bound_holds() {
        let inst = QuadraticInstance::generate(30, 1e-4, 5.0, 1).unwrap();
        let p = inst.problem();
        for t in [3usize, 10, 40] {
            let tr = run_ogmg(&p, &inst.start, 5.0, t, Form::OneAux).unwrap();
            let f = tr.f_values();
            let g = tr.last_gmap().unwrap();
            let drop = f[0] - f[t];
            let th0 = theta_table(t).unwrap()[0];
            assert!(g * g <= 2.0 * 5.0 / (th0 * th0) * drop * (1.0 + 1e-9));
            assert!(g * g <= 4.0 * 5.0 / (t * t) as f64 * drop);
        }
    }

    #[test]
    fn stationary_start() {
        let inst = QuadraticInstance::generate(6, 0.1, 1.0, 3).unwrap();
        let p = inst.problem();
        for form in Form::ALL {
            let tr = run_ogmg(&p, &inst.minimizer, 1.0, 7, form).unwrap();
            assert!(tr.states.iter().all(|s| s.g.amax() <= 1e-12));
        }
    }

    #[test]
    fn rejects_composite_problems() {
        let p = make_lasso(5, 3, 1.0, 0).unwrap();
        let x0 = DVector::zeros(3);
        assert!(matches!(
            run_ogmg(&p, &x0, 1.0, 4, Form::Canonical),
            Err(Error::Unsupported(_))
        ));
        let q = QuadraticInstance::generate(3, 0.1, 1.0, 0).unwrap().problem();
        assert!(run_ogmg(&q, &x0, 1.0, 1, Form::Canonical).is_err());
    }
}
