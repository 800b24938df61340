//! Weight schedules `a_k`, `A_k`, `b_k`, `B_{k,T}` for fixed-length runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod rates;
pub mod sequences;

pub use rates::{rate_constants, unified_factor_sweep, RateConstants, REFERENCE_RATE_TABLE};
pub use sequences::{fistag_accumulators, t_sequence, theta_table, TFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    OgmG,
    OcgmG,
    Custom,
}

/// Weights for a run of length `T`. Entries outside a family's index range
/// are `NaN`; use the accessors, which document the valid ranges.
#[derive(Debug, Clone)]
pub struct Schedule {
    t: usize,
    family: Family,
    l_ref: f64,
    a_last: f64,
    a: Vec<f64>,
    acc: Vec<f64>,
    b: Vec<f64>,
    bt: Vec<f64>,
}

fn ranged_sums(b: &[f64], t: usize) -> Vec<f64> {
    let mut bt = vec![f64::NAN; t + 1];
    bt[t] = 0.0;
    for k in (0..t).rev() {
        bt[k] = bt[k + 1] + b[k];
    }
    bt
}

impl Schedule {
    /// Template weights from arrays: `a[i]` is `a_{i+1}` and `b[i]` is `b_{i+1}`
    /// for `i = 0..T-1`.
    pub fn custom(a0: f64, a: &[f64], b: &[f64], l_ref: f64) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        if !(a0 > 0.0) || a.iter().chain(b).any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("template weights must be positive"));
        }
        let t = a.len() + 1;
        let mut av = vec![f64::NAN; t + 1];
        let mut acc = vec![f64::NAN; t + 1];
        let mut bv = vec![f64::NAN; t];
        acc[0] = a0;
        for k in 1..t {
            av[k] = a[k - 1];
            acc[k] = acc[k - 1] + av[k];
            bv[k] = b[k - 1];
        }
        let mut bt = vec![f64::NAN; t + 1];
        bt[t] = 0.0;
        for k in (1..t).rev() {
            bt[k] = bt[k + 1] + bv[k];
        }
        Ok(Schedule {
            t,
            family: Family::Custom,
            l_ref,
            a_last: acc[t - 1],
            a: av,
            acc,
            b: bv,
            bt,
        })
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn l_ref(&self) -> f64 {
        self.l_ref
    }

    pub fn a_last(&self) -> f64 {
        self.a_last
    }

    /// `a_k`, `k = 1..T-1` (and `k = T` for OCGM-G).
    pub fn a(&self, k: usize) -> f64 {
        self.a[k]
    }

    /// `A_k`, `k = 0..T-1` (and `k = T` for OCGM-G).
    pub fn acc(&self, k: usize) -> f64 {
        self.acc[k]
    }

    pub fn a0(&self) -> f64 {
        self.acc[0]
    }

    /// `b_k`, `k = 1..T-1` (and `k = 0` for OCGM-G).
    pub fn b(&self, k: usize) -> f64 {
        self.b[k]
    }

    /// `B_{k,T}`, `k = 1..T` (and `k = 0` for OCGM-G).
    pub fn b_to_t(&self, k: usize) -> f64 {
        self.bt[k]
    }

    pub fn has_final_weight(&self) -> bool {
        self.a[self.t].is_finite()
    }

    /// Same weights with `b` and `B` expressed against a new Lipschitz value.
    pub fn rescaled(&self, l: f64) -> Schedule {
        let f = self.l_ref / l;
        let mut s = self.clone();
        s.b.iter_mut().for_each(|v| *v *= f);
        s.bt.iter_mut().for_each(|v| *v *= f);
        s.l_ref = l;
        s
    }

    /// Copy with `b_k` multiplied by `factor` and `B` recomputed; the family
    /// becomes `Custom`.
    pub fn with_b_scaled(&self, k: usize, factor: f64) -> Schedule {
        let mut s = self.clone();
        s.b[k] *= factor;
        let first = if s.b[0].is_finite() { 0 } else { 1 };
        for i in (first..s.t).rev() {
            s.bt[i] = s.bt[i + 1] + s.b[i];
        }
        s.family = Family::Custom;
        s
    }

    pub fn a_slice(&self) -> Vec<f64> {
        (1..self.t).map(|k| self.a[k]).collect()
    }

    pub fn b_slice(&self) -> Vec<f64> {
        (1..self.t).map(|k| self.b[k]).collect()
    }
}

fn check_common(t: usize, a_last: f64) -> Result<()> {
    if t < 2 {
        return Err(Error::invalid(format!("T = {t}; need T >= 2")));
    }
    if !(a_last > 0.0 && a_last.is_finite()) {
        return Err(Error::invalid("A_{T-1} must be positive"));
    }
    Ok(())
}

/// OGM-G weights from the theta table. `a_T` is not materialized.
pub fn ogmg_schedule(t: usize, l: f64, a_last: f64) -> Result<Schedule> {
    check_common(t, a_last)?;
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid("L must be positive"));
    }
    let th = theta_table(t)?;
    let mut a = vec![f64::NAN; t + 1];
    let mut acc = vec![f64::NAN; t + 1];
    let mut b = vec![f64::NAN; t];
    acc[0] = 2.0 * a_last / (th[0] * th[0]);
    for k in 1..t {
        acc[k] = a_last / (th[k] * th[k]);
        a[k] = a_last / (th[k - 1] * th[k] * th[k]);
        b[k] = th[k] * th[k] * (2.0 * th[k] - 1.0) / (l * a_last);
    }
    let mut bt = vec![f64::NAN; t + 1];
    bt[t] = 0.0;
    for k in (1..t).rev() {
        bt[k] = bt[k + 1] + b[k];
    }
    Ok(Schedule {
        t,
        family: Family::OgmG,
        l_ref: l,
        a_last,
        a,
        acc,
        b,
        bt,
    })
}

/// OCGM-G weights from the reverse recursion, with `b` against `L_0 = 1`;
/// call [`Schedule::rescaled`] for another `L_0`.
pub fn ocgmg_schedule(t: usize, a_last: f64) -> Result<Schedule> {
    check_common(t, a_last)?;
    let mut a = vec![f64::NAN; t + 1];
    let mut acc = vec![f64::NAN; t + 1];
    acc[t - 1] = a_last;
    a[t] = a_last;
    acc[t] = 2.0 * a_last;
    for k in (1..t).rev() {
        let (an, accn) = (a[k + 1], acc[k + 1]);
        a[k] = an / accn * ((an * an + acc[k] * accn).sqrt() - an);
        acc[k - 1] = acc[k] - a[k];
    }
    let b: Vec<f64> = (0..t).map(|k| 1.0 / a[k + 1]).collect();
    let bt = ranged_sums(&b, t);
    Ok(Schedule {
        t,
        family: Family::OcgmG,
        l_ref: 1.0,
        a_last,
        a,
        acc,
        b,
        bt,
    })
}

/// Per-index derived factors of the equivalent forms.
#[derive(Debug, Clone, Copy)]
pub struct Factors {
    pub k: usize,
    /// `1/L + a_k B_{k,T}`
    pub c: f64,
    /// `B_{k,T}`
    pub c_tilde: f64,
    /// `A_{k-1} b_{k-1} - a_k B_{k,T}`, when `b_{k-1}` exists.
    pub c_bar: Option<f64>,
    /// `b_k / B_{k,T}`
    pub d: f64,
    /// `b_k / b_{k-1}`, `k >= 2`.
    pub extrapolation: Option<f64>,
    /// `b_k (L a_k - 1/b_{k-1})`, `k >= 2`.
    pub correction: Option<f64>,
}

pub fn derived_factors(s: &Schedule, l_eff: f64) -> Vec<Factors> {
    (1..s.len())
        .map(|k| {
            let prev_b = s.b(k - 1);
            let has_prev = prev_b.is_finite();
            Factors {
                k,
                c: 1.0 / l_eff + s.a(k) * s.b_to_t(k),
                c_tilde: s.b_to_t(k),
                c_bar: has_prev.then(|| s.acc(k - 1) * prev_b - s.a(k) * s.b_to_t(k)),
                d: s.b(k) / s.b_to_t(k),
                extrapolation: (k >= 2).then(|| s.b(k) / prev_b),
                correction: (k >= 2).then(|| s.b(k) * (l_eff * s.a(k) - 1.0 / prev_b)),
            }
        })
        .collect()
}
