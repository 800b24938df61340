//! Reduced variants with a known `L`: FISTA-G (the extrapolated form of
//! OCGM-G written with `t_k`) and FISTA.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::CompositeProblem;
use crate::schedules::{fistag_accumulators, ocgmg_schedule, t_sequence, Family, TFamily};
use crate::space::Vector;

use super::template::{weight_arrays, Driver, FixedOptions};
use super::trace::{Method, RunTrace, ScheduleRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reduced {
    Fista,
    /// Momentum `(t_{k+1} - 1) / t_k`.
    FistaG,
    /// Momentum `(B_k - B_{k+1}) / (B_{k-1} - B_k)` from the accumulator recursion.
    FistaGAccumulators,
}

impl FromStr for Reduced {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fista" => Ok(Reduced::Fista),
            "fista-g" | "fistag" => Ok(Reduced::FistaG),
            "fista-g-acc" => Ok(Reduced::FistaGAccumulators),
            _ => Err(Error::invalid(format!("unknown reduced method '{s}'"))),
        }
    }
}

pub fn run_reduced(p: &CompositeProblem, x0: &Vector, l: f64, t: usize, which: Reduced) -> Result<RunTrace> {
    run_reduced_with(p, x0, l, t, which, &FixedOptions::default(), None)
}

pub fn run_reduced_with(
    p: &CompositeProblem,
    x0: &Vector,
    l: f64,
    t: usize,
    which: Reduced,
    opts: &FixedOptions,
    phase: Option<String>,
) -> Result<RunTrace> {
    if t < 2 {
        return Err(Error::invalid(format!("T = {t}; need T >= 2")));
    }
    // momentum[k] multiplies (x_k - x_{k-1}) in y_{k+1}
    let (momentum, method) = match which {
        Reduced::Fista => {
            let ts = t_sequence(t, TFamily::Fgm)?;
            ((0..t).map(|k| (ts[k] - 1.0) / ts[k + 1]).collect::<Vec<_>>(), Method::Fista)
        }
        Reduced::FistaG => {
            let ts = t_sequence(t, TFamily::Ocgmg)?;
            ((0..t).map(|k| (ts[k + 1] - 1.0) / ts[k]).collect(), Method::Fistag)
        }
        Reduced::FistaGAccumulators => {
            let bt = fistag_accumulators(t, l)?;
            let m = (0..t)
                .map(|k| if k == 0 { 0.0 } else { (bt[k] - bt[k + 1]) / (bt[k - 1] - bt[k]) })
                .collect();
            (m, Method::Fistag)
        }
    };
    let (a, acc) = if which == Reduced::Fista {
        (Vec::new(), Vec::new())
    } else {
        weight_arrays(&ocgmg_schedule(t, 1.0)?)
    };
    let mut d = Driver::new(p, x0, l, t, a, acc, false, opts, method, None)?;
    if let Some(ph) = phase {
        d.set_phase(ph);
    }
    if which != Reduced::Fista {
        d.trace.schedule = Some(ScheduleRef {
            family: Family::OcgmG,
            t,
            l,
        });
    }
    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    for (k, m) in momentum.iter().enumerate() {
        let y = &x + (&x - &x_prev) * *m;
        let Some(e) = d.eval(k + 1, y, None)? else {
            break;
        };
        x_prev = std::mem::replace(&mut x, e.x);
    }
    Ok(d.finish())
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;

    use super::*;
    use crate::engines::ocgmg::run_ocgmg;
    use crate::engines::trace::{iterate_gap, Form};
    use crate::problems::{LassoInstance, QuadraticInstance};

    #[test]
    fn two_step_momentum() {
        let inst = QuadraticInstance::generate(4, 0.2, 1.0, 5).unwrap();
        let p = inst.problem();
        let tr = run_reduced(&p, &inst.start, 1.0, 2, Reduced::FistaG).unwrap();
        let (s1, s2) = (&tr.states[0], &tr.states[1]);
        let t1 = 1.0 + 3f64.sqrt();
        let want = &s1.x + (&s1.x - &inst.start) * ((2.0 - 1.0) / t1);
        assert!((&s2.y - want).amax() <= 1e-14);
    }

    #[test]
    fn fistag_equals_ocgmg() {
        let inst = LassoInstance::generate(20, 20, 1.0, 3).unwrap();
        let p = inst.problem();
        for t in [2usize, 16, 100] {
            let oc = run_ocgmg(&p, &inst.start, inst.lipschitz, t, Form::Extrapolated).unwrap();
            for which in [Reduced::FistaG, Reduced::FistaGAccumulators] {
                let fg = run_reduced(&p, &inst.start, inst.lipschitz, t, which).unwrap();
                let gap = iterate_gap(&oc.states, &fg.states);
                assert!(gap <= 1e-10, "T={t} {which:?}: {gap}");
            }
        }
    }

    #[test]
    fn fista_counts_and_output() {
        let inst = QuadraticInstance::generate(10, 0.05, 1.0, 1).unwrap();
        let p = inst.problem();
        let tr = run_reduced(&p, &inst.start, 1.0, 25, Reduced::Fista).unwrap();
        assert_eq!(tr.oracle_calls, 25);
        assert!(tr.rows.iter().all(|r| r.savg_dualnorm.is_none()));
        // first two steps are plain gradient steps
        let s = &tr.states;
        assert!((&s[1].y - &s[0].x).amax() == 0.0);
        assert!(tr.f_values()[25] < tr.f_values()[0]);
        let zero = DVector::zeros(10);
        assert!(run_reduced(&p, &zero, 1.0, 1, Reduced::Fista).is_err());
        assert!("fista-g".parse::<Reduced>().is_ok());
    }
}
