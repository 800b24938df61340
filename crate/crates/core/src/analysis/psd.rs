//! The certificate matrix `C` of a weight schedule, its PSD verdict and the
//! last-iterate bound it implies.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::engines::IterateState;
use crate::error::{Error, Result};
use crate::schedules::Schedule;
use crate::space::Metric;

/// Relative threshold for the zero and eigenvalue tests.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CertificateMatrix {
    /// `T x T` upper triangular, entry `(i-1, j-1)` is `C_ij`.
    pub c: DMatrix<f64>,
    /// Largest magnitude of any term entering an entry.
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PsdVerdict {
    /// Every entry is below `PSD_TOL * scale`.
    Zero,
    Psd { min_eig: f64 },
    Indefinite { min_eig: f64 },
}

impl PsdVerdict {
    pub fn is_psd(self) -> bool {
        !matches!(self, PsdVerdict::Indefinite { .. })
    }
}

fn check_ls(s: &Schedule, ls: &[f64]) -> Result<()> {
    if ls.len() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            found: ls.len(),
        });
    }
    if ls.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::invalid("per-step Lipschitz values must be positive"));
    }
    Ok(())
}

/// Build `C` for weights `s` and per-step estimates `ls[k-1] = L_k`. Only
/// `C_TT` is free.
pub fn certificate_matrix(s: &Schedule, ls: &[f64], c_tt: f64) -> Result<CertificateMatrix> {
    check_ls(s, ls)?;
    let t = s.len();
    let l = |k: usize| ls[k - 1];
    let mut c = DMatrix::zeros(t, t);
    let mut scale = c_tt.abs();
    // common factor of column j
    let mut col = vec![0.0; t + 1];
    for j in 2..=t {
        let terms = if j < t {
            [s.acc(j - 1) * s.b(j - 1), 1.0 / l(j), 2.0 * s.a(j) * s.b_to_t(j)]
        } else {
            [s.acc(t - 1) * s.b(t - 1), 1.0 / l(t), 0.0]
        };
        col[j] = terms[0] - terms[1] - terms[2];
        for i in 1..j {
            scale = scale.max(s.a(i) * terms.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }
    for i in 1..t {
        let terms = [s.acc(i) / (2.0 * l(i)), s.a(i) / l(i), s.a(i) * s.a(i) * s.b_to_t(i)];
        c[(i - 1, i - 1)] = terms[0] - terms[1] - terms[2];
        scale = scale.max(terms.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        for j in i + 1..=t {
            c[(i - 1, j - 1)] = s.a(i) * col[j];
        }
    }
    c[(t - 1, t - 1)] = c_tt;
    Ok(CertificateMatrix { c, scale })
}

impl CertificateMatrix {
    /// Wrap an explicit matrix, e.g. to classify a hand-built `C`.
    pub fn from_matrix(c: DMatrix<f64>, scale: f64) -> Result<Self> {
        if !c.is_square() {
            return Err(Error::DimensionMismatch {
                expected: c.nrows(),
                found: c.ncols(),
            });
        }
        Ok(CertificateMatrix { c, scale })
    }

    pub fn max_abs(&self) -> f64 {
        self.c.amax()
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() <= PSD_TOL * self.scale
    }

    pub fn verdict(&self) -> PsdVerdict {
        if self.is_zero() {
            return PsdVerdict::Zero;
        }
        let sym = (&self.c + self.c.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
        if min_eig >= -PSD_TOL * self.c.norm() {
            PsdVerdict::Psd { min_eig }
        } else {
            PsdVerdict::Indefinite { min_eig }
        }
    }
}

/// `A_0 / (A_{T-1} / (2 L_T) - C_TT)`: with `C` PSD,
/// `||g_T||_*^2 <= factor (F(x_0) - F(x_T))`. `None` when the denominator is
/// not positive, in which case no guarantee is derivable.
pub fn implied_factor(s: &Schedule, ls: &[f64], c_tt: f64) -> Result<Option<f64>> {
    check_ls(s, ls)?;
    let t = s.len();
    let den = s.acc(t - 1) / (2.0 * ls[t - 1]) - c_tt;
    Ok((den > 0.0).then(|| s.a0() / den))
}

/// Gram matrix `Q_ij = <g_i, B^{-1} g_j>` of the recorded mappings.
pub fn gram(states: &[IterateState], metric: &Metric) -> DMatrix<f64> {
    let t = states.len();
    DMatrix::from_fn(t, t, |i, j| metric.dual_inner(&states[i].g, &states[j].g))
}

/// `Tr(C Q)` for symmetric `Q`.
pub fn trace_product(c: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    if c.shape() != q.shape() {
        return Err(Error::DimensionMismatch {
            expected: c.nrows(),
            found: q.nrows(),
        });
    }
    Ok(c.component_mul(q).sum())
}
