//! Gradient aggregators of a template run and the identity tying them to the
//! weighted mapping norms.

use serde::Serialize;

use crate::engines::RunTrace;
use crate::error::{Error, Result};
use crate::schedules::Schedule;
use crate::space::{Metric, Vector};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AggregatorValues {
    /// `sum_{k=0}^{T-1} A_k <g_{k+1}, x_k - y_{k+1}>`
    pub g1: f64,
    /// `sum_{k=1}^{T-1} a_k <g_k, x_T - y_k>`
    pub g2: f64,
    /// `-sum_{k=1}^{T-1} a_k (1/L_k + a_k B_{k,T}) ||g_k||_*^2`
    pub norms: f64,
    pub d_t: f64,
    /// `|G1 + G2 - (norms + D_T)| / max(|G1 + G2|, |norms + D_T|, 1)`
    pub residual: f64,
}

/// Evaluate both sides of the aggregator identity on a fixed-length run whose
/// weights are `s`. `s_k` is rebuilt from the recorded `g_k`.
pub fn aggregator_identity(tr: &RunTrace, s: &Schedule, metric: &Metric) -> Result<AggregatorValues> {
    let t = s.len();
    if t < 2 {
        return Err(Error::invalid("aggregator identity needs T >= 2"));
    }
    if tr.states.len() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: tr.states.len(),
        });
    }
    // 1-based views
    let y = |k: usize| &tr.states[k - 1].y;
    let g = |k: usize| &tr.states[k - 1].g;
    let l = |k: usize| tr.states[k - 1].l;
    let x = |k: usize| if k == 0 { &tr.x0 } else { &tr.states[k - 1].x };

    let mut g1 = 0.0;
    for k in 0..t {
        g1 += s.acc(k) * g(k + 1).dot(&(x(k) - y(k + 1)));
    }
    let mut g2 = 0.0;
    let mut norms = 0.0;
    for k in 1..t {
        g2 += s.a(k) * g(k).dot(&(x(t) - y(k)));
        norms -= s.a(k) * (1.0 / l(k) + s.a(k) * s.b_to_t(k)) * metric.dual_norm_sq(g(k));
    }
    let mut acc_s = Vector::zeros(tr.x0.len());
    let mut d_t = 0.0;
    for k in 1..t {
        acc_s.axpy(s.a(k), g(k), 1.0);
        let coef = if k + 1 < t {
            s.acc(k) * s.b(k) - 1.0 / l(k + 1) - 2.0 * s.a(k + 1) * s.b_to_t(k + 1)
        } else {
            s.acc(k) * s.b(k) - 1.0 / l(t)
        };
        d_t += coef * metric.dual_inner(&acc_s, g(k + 1));
    }
    let lhs = g1 + g2;
    let rhs = norms + d_t;
    let residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
    Ok(AggregatorValues {
        g1,
        g2,
        norms,
        d_t,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::engines::{run_ocgmg, run_template, Form};
    use crate::problems::{LassoInstance, QuadraticInstance};
    use crate::schedules::ocgmg_schedule;

    fn random_schedule(t: usize, rng: &mut ChaCha8Rng) -> Schedule {
        let a: Vec<f64> = (1..t).map(|_| rng.random_range(0.1..3.0)).collect();
        let b: Vec<f64> = (1..t).map(|_| rng.random_range(0.01..1.0)).collect();
        Schedule::custom(rng.random_range(0.05..2.0), &a, &b, 1.0).unwrap()
    }

    #[test]
    fn identity_on_random_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inst = QuadraticInstance::generate(10, 0.01, 1.0, 0).unwrap();
        let p = inst.problem();
        let s = random_schedule(5, &mut rng);
        let tr = run_template(&p, &inst.start, &s, 1.0, Form::Canonical).unwrap();
        let v = aggregator_identity(&tr, &s, &p.metric).unwrap();
        assert!(v.residual <= 1e-10, "{v:?}");
    }

    #[test]
    fn two_step_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = QuadraticInstance::generate(3, 0.5, 2.0, 4).unwrap();
        let p = inst.problem();
        let s = random_schedule(2, &mut rng);
        let tr = run_template(&p, &inst.start, &s, 2.0, Form::Canonical).unwrap();
        assert!(aggregator_identity(&tr, &s, &p.metric).unwrap().residual <= 1e-12);
    }

    #[test]
    fn zero_gradients_give_zero_sides() {
        let inst = QuadraticInstance::generate(4, 0.5, 1.0, 2).unwrap();
        let p = inst.problem();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_schedule(6, &mut rng);
        let tr = run_template(&p, &inst.minimizer, &s, 1.0, Form::Canonical).unwrap();
        let v = aggregator_identity(&tr, &s, &p.metric).unwrap();
        assert!(v.g1.abs() + v.g2.abs() + v.norms.abs() + v.d_t.abs() <= 1e-20);
    }

    #[test]
    fn composite_run_and_length_mismatch() {
        let inst = LassoInstance::generate(12, 8, 0.5, 3).unwrap();
        let p = inst.problem();
        let l0 = inst.lipschitz;
        let tr = run_ocgmg(&p, &inst.start, l0, 9, Form::OneAux).unwrap();
        let s = ocgmg_schedule(9, 1.0).unwrap().rescaled(l0);
        assert!(aggregator_identity(&tr, &s, &p.metric).unwrap().residual <= 1e-10);
        let short = ocgmg_schedule(8, 1.0).unwrap();
        assert!(aggregator_identity(&tr, &short, &p.metric).is_err());
        let _ = DVector::<f64>::zeros(1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn identity_holds_for_any_weights(seed in 0u64..10_000, t in 2usize..=16, l in 0.5f64..4.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = QuadraticInstance::generate(6, 0.05, l, seed).unwrap();
            let p = inst.problem();
            let s = random_schedule(t, &mut rng);
            let tr = run_template(&p, &inst.start, &s, l, Form::Canonical).unwrap();
            let v = aggregator_identity(&tr, &s, &p.metric).unwrap();
            prop_assert!(v.residual <= 1e-10, "{:?}", v);
        }
    }
}
