//! Last-iterate rate constants and the averaged-mapping rate.

use serde::Serialize;

use super::{ocgmg_schedule, t_sequence, Schedule, TFamily};
use crate::analysis::scalar::r as r_fn;
use crate::error::{Error, Result};

/// Reference `(l, G_l, T_l)` rows.
pub const REFERENCE_RATE_TABLE: [(usize, f64, f64); 8] = [
    (1, 75.7128129, 3.4641016),
    (2, 65.0097678, 3.7883403),
    (5, 59.1019986, 4.4316284),
    (10, 57.5220421, 5.0803315),
    (100, 56.6821551, 7.9500002),
    (1000, 56.6675000, 11.2936222),
    (10000, 56.6673352, 14.7315296),
    (100000, 56.6673335, 18.1833371),
];

/// Constant of the unified last-iterate bound `56.67 L_0 / (T + 4)^2`.
pub const UNIFIED_CONSTANT: f64 = 56.67;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateConstants {
    pub l: usize,
    pub g: f64,
    pub t: f64,
}

impl RateConstants {
    /// `G_l / (T + T_l)^2`
    pub fn factor(&self, t: usize) -> f64 {
        self.g / (t as f64 + self.t).powi(2)
    }
}

/// `G_l` and `T_l` from the tail of the reverse `t` recursion, `u_j = t_{T-j}`.
pub fn rate_constants(l: usize) -> Result<RateConstants> {
    if l == 0 {
        return Err(Error::invalid("lag l must be >= 1"));
    }
    let mut us = Vec::with_capacity(l + 1);
    us.push(2.0f64);
    for j in 1..=l {
        let p = us[j - 1];
        us.push(1.0 + (p * p - p + 1.0).sqrt());
    }
    // A_{T-l+1} / A_{T-1}, using A_k / A_{k+1} = (t_{k+1} - 1) / t_{k+1}
    let ratio = if l == 1 {
        2.0
    } else {
        (1..=l - 2).map(|j| (us[j] - 1.0) / us[j]).product()
    };
    let u = us[l];
    Ok(RateConstants {
        l,
        g: 8.0 * u * (u - 1.0) * ratio,
        t: 2.0 * u - (l as f64 + 1.0),
    })
}

/// `G_l`, `T_l` read off an explicit schedule of length `t >= l + 2`.
pub fn rate_constants_at(t: usize, l: usize) -> Result<RateConstants> {
    if l == 0 || t < l + 2 {
        return Err(Error::invalid(format!("need 1 <= l <= T - 2, got T={t}, l={l}")));
    }
    let s = ocgmg_schedule(t, 1.0)?;
    let tl = s.acc(t - l) / s.a(t - l);
    Ok(RateConstants {
        l,
        g: 8.0 * tl * (tl - 1.0) * s.acc(t - l + 1) / s.acc(t - 1),
        t: 2.0 * tl - (l as f64 + 1.0),
    })
}

/// Exact OCGM-G final factor `2 A_0 / A_{T-1}` (multiply by `L_0`).
pub fn ocgmg_final_factor(t: usize) -> Result<f64> {
    let s = ocgmg_schedule(t, 1.0)?;
    Ok(2.0 * s.a0() / s.acc(t - 1))
}

/// Maximum of `2 A_0 (T + 4)^2 / A_{T-1}` over `T` in `range`, with its argmax.
pub fn unified_factor_sweep(range: std::ops::RangeInclusive<usize>) -> Result<(f64, usize)> {
    let mut best = (f64::NEG_INFINITY, 0);
    for t in range {
        let v = ocgmg_final_factor(t)? * (t as f64 + 4.0).powi(2);
        if v > best.0 {
            best = (v, t);
        }
    }
    Ok(best)
}

/// `S_k = B_{k,T} (A_k - A_0)^2 / A_0`.
pub fn averaged_weight(s: &Schedule, k: usize) -> f64 {
    s.b_to_t(k) * (s.acc(k) - s.a0()).powi(2) / s.a0()
}

/// `R_k = t_k (t_k - 2) / 2 * r(t_{k-1}, k)`, `k = 2..T-1`.
pub fn averaged_rate(t: usize, k: usize) -> Result<f64> {
    if k < 2 || k + 1 > t {
        return Err(Error::invalid(format!("need 2 <= k <= T - 1, got T={t}, k={k}")));
    }
    let ts = t_sequence(t, TFamily::Ocgmg)?;
    Ok(ts[k] * (ts[k] - 2.0) / 2.0 * r_fn(ts[k - 1], k as f64)?)
}
