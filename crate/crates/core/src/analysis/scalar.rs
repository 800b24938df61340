//! Scalar helper functions: `q`, `r`, `r_bar`, the restart efficiency `eta`
//! and the meta-scheme bounds.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// `q(x) = (x - 1)^2 / x`, `x > 1`.
pub fn q(x: f64) -> Result<f64> {
    if !(x > 1.0) {
        return Err(Error::invalid(format!("q needs x > 1, got {x}")));
    }
    Ok((x - 1.0).powi(2) / x)
}

fn check_rk(x: f64, kappa: f64) -> Result<()> {
    if !(x > 1.0) || !(kappa >= 2.0) {
        return Err(Error::invalid(format!("r needs x > 1, kappa >= 2; got ({x}, {kappa})")));
    }
    Ok(())
}

/// `r(x, kappa) = q((kappa/2 + x - 1)^2 / (x (x - 1))) / kappa^2`.
pub fn r(x: f64, kappa: f64) -> Result<f64> {
    check_rk(x, kappa)?;
    let arg = (kappa / 2.0 + x - 1.0).powi(2) / (x * (x - 1.0));
    Ok(q(arg)? / (kappa * kappa))
}

/// `r_bar(x, kappa) = (x - 1)(x - 3) r(x, kappa)`.
pub fn r_bar(x: f64, kappa: f64) -> Result<f64> {
    Ok((x - 1.0) * (x - 3.0) * r(x, kappa)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarValues {
    pub q: f64,
    pub r: f64,
    pub r_bar: f64,
}

pub fn scalar_functions(x: f64, kappa: f64) -> Result<ScalarValues> {
    Ok(ScalarValues {
        q: q(x)?,
        r: r(x, kappa)?,
        r_bar: r_bar(x, kappa)?,
    })
}

/// `eta(sigma) = -(e/2) sqrt(sigma) ln(sigma / (1 - sigma))`, `sigma in (0, 1/2)`.
pub fn eta(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(Error::invalid(format!("eta needs sigma in (0, 1/2), got {sigma}")));
    }
    Ok(eta_unchecked(sigma))
}

fn eta_unchecked(sigma: f64) -> f64 {
    -0.5 * E * sigma.sqrt() * (sigma / (1.0 - sigma)).ln()
}

/// Maximizer of `eta` on `(0, 1/2)`: a `1e-6` grid scan refined by golden section.
pub fn sigma_star() -> (f64, f64) {
    let h = 1e-6;
    let n = (0.5 / h) as usize;
    let mut best = (h, eta_unchecked(h));
    for i in 2..n {
        let s = i as f64 * h;
        let v = eta_unchecked(s);
        if v > best.1 {
            best = (s, v);
        }
    }
    let (mut lo, mut hi) = (best.0 - h, best.0 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    while hi - lo > 1e-13 {
        if eta_unchecked(c) > eta_unchecked(d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - g * (hi - lo);
        d = lo + g * (hi - lo);
    }
    let s = 0.5 * (lo + hi);
    (s, eta_unchecked(s))
}

/// Gradient-mapping bound after `n` oracle calls of the meta-scheme with `b`
/// line-search failures: `10.65 (4 + b)^2 L_u d / N^2`, or `(3 + b)^2` when
/// resuming.
pub fn meta_bound(n: usize, b: usize, l_u: f64, d: f64, resume: bool) -> Result<f64> {
    if n == 0 || !(l_u > 0.0) || !(d >= 0.0) {
        return Err(Error::invalid("meta bound needs N >= 1, L_u > 0, d >= 0"));
    }
    let off = if resume { 3.0 } else { 4.0 };
    Ok(10.65 * (off + b as f64).powi(2) * l_u / (n as f64).powi(2) * d)
}

/// Per-cycle bound `113.34 L_u^2 d^2 / T_j^4` on the squared mapping norm.
pub fn cycle_bound(t_j: usize, l_u: f64, d: f64) -> f64 {
    113.34 * l_u * l_u / (t_j as f64).powi(4) * d * d
}
