//! Scalar recursions behind the weight schedules.

use crate::error::{Error, Result};

fn need_t(t: usize) -> Result<()> {
    if t < 2 {
        return Err(Error::invalid(format!("T = {t}; need T >= 2")));
    }
    Ok(())
}

/// `theta[k]` for `k = 0..=T`, built in reverse from `theta[T] = 0`, `theta[T-1] = 1`.
pub fn theta_table(t: usize) -> Result<Vec<f64>> {
    need_t(t)?;
    let mut th = vec![0.0f64; t + 1];
    th[t - 1] = 1.0;
    for k in (1..t - 1).rev() {
        th[k] = (1.0 + (1.0 + 4.0 * th[k + 1] * th[k + 1]).sqrt()) / 2.0;
    }
    th[0] = (1.0 + (1.0 + 8.0 * th[1] * th[1]).sqrt()) / 2.0;
    Ok(th)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TFamily {
    /// Decreasing sequence ending at `t_T = 2`.
    Ocgmg,
    /// Increasing sequence starting at `t_0 = 0`.
    Fgm,
}

/// `t[k]` for `k = 0..=T`.
pub fn t_sequence(t: usize, family: TFamily) -> Result<Vec<f64>> {
    need_t(t)?;
    let mut ts = vec![0.0f64; t + 1];
    match family {
        TFamily::Ocgmg => {
            ts[t] = 2.0;
            for k in (0..t).rev() {
                let u = ts[k + 1];
                ts[k] = 1.0 + (u * u - u + 1.0).sqrt();
            }
        }
        TFamily::Fgm => {
            // t_{k+1} (t_{k+1} - 1) = t_k^2
            for k in 0..t {
                let u = ts[k];
                ts[k + 1] = (1.0 + (1.0 + 4.0 * u * u).sqrt()) / 2.0;
            }
        }
    }
    Ok(ts)
}

/// Reverse accumulators `B_{k,T}` for `k = 0..=T` from the closed-form
/// quadratic recursion, with `A_{T-1} = 1`.
pub fn fistag_accumulators(t: usize, l: f64) -> Result<Vec<f64>> {
    need_t(t)?;
    if !(l > 0.0) {
        return Err(Error::invalid("L must be positive"));
    }
    let mut bt = vec![0.0f64; t + 1];
    bt[t - 1] = 1.0 / l;
    for k in (1..t).rev() {
        let (bk, bn) = (bt[k], bt[k + 1]);
        bt[k - 1] =
            (2.0 * bk * bk - bk * bn + bn * bn + (bk - bn) * (3.0 * bk * bk + bn * bn).sqrt())
                / (bk + bn);
    }
    Ok(bt)
}
