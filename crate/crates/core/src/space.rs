//! Vector space with an SPD metric `B`.
//!
//! Primal points live in `E` with norm `sqrt(<Bx, x>)`; dual vectors live in
//! `E*` with norm `sqrt(<s, B^-1 s>)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

/// Element of `E`.
pub type PrimalPoint = Vector;
/// Element of `E*`.
pub type DualVector = Vector;

#[derive(Debug, Clone)]
pub enum MetricKind {
    Identity,
    Diagonal(Vector),
    Dense {
        matrix: DMatrix<f64>,
        factor: Cholesky<f64, Dyn>,
    },
}

#[derive(Debug, Clone)]
pub struct Metric {
    n: usize,
    kind: MetricKind,
}

impl Metric {
    pub fn identity(n: usize) -> Self {
        Metric {
            n,
            kind: MetricKind::Identity,
        }
    }

    pub fn diagonal(d: Vector) -> Result<Self> {
        if let Some(bad) = d.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NotPositiveDefinite(format!(
                "diagonal entry {bad} is not strictly positive"
            )));
        }
        Ok(Metric {
            n: d.len(),
            kind: MetricKind::Diagonal(d),
        })
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        let (r, c) = matrix.shape();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        for i in 0..r {
            for j in (i + 1)..r {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NotPositiveDefinite(format!(
                        "asymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let factor = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("cholesky pivot not positive".into()))?;
        Ok(Metric {
            n: r,
            kind: MetricKind::Dense { matrix, factor },
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, MetricKind::Identity)
    }

    pub fn check(&self, v: &Vector) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `B x`
    pub fn apply(&self, x: &Vector) -> Vector {
        match &self.kind {
            MetricKind::Identity => x.clone(),
            MetricKind::Diagonal(d) => x.component_mul(d),
            MetricKind::Dense { matrix, .. } => matrix * x,
        }
    }

    /// `B^-1 s`
    pub fn apply_inv(&self, s: &Vector) -> Vector {
        match &self.kind {
            MetricKind::Identity => s.clone(),
            MetricKind::Diagonal(d) => s.component_div(d),
            MetricKind::Dense { factor, .. } => factor.solve(s),
        }
    }

    pub fn primal_norm(&self, x: &Vector) -> Result<f64> {
        self.check(x)?;
        Ok(self.primal_norm_sq(x).max(0.0).sqrt())
    }

    pub fn dual_norm(&self, s: &Vector) -> Result<f64> {
        self.check(s)?;
        Ok(self.dual_norm_sq(s).max(0.0).sqrt())
    }

    pub fn primal_norm_sq(&self, x: &Vector) -> f64 {
        match &self.kind {
            MetricKind::Identity => x.norm_squared(),
            MetricKind::Diagonal(d) => x.iter().zip(d.iter()).map(|(a, w)| w * a * a).sum(),
            MetricKind::Dense { matrix, .. } => x.dot(&(matrix * x)),
        }
    }

    pub fn dual_norm_sq(&self, s: &Vector) -> f64 {
        match &self.kind {
            MetricKind::Identity => s.norm_squared(),
            MetricKind::Diagonal(d) => s.iter().zip(d.iter()).map(|(a, w)| a * a / w).sum(),
            MetricKind::Dense { factor, .. } => s.dot(&factor.solve(s)),
        }
    }

    /// `<s, B^-1 t>`
    pub fn dual_inner(&self, s: &Vector, t: &Vector) -> f64 {
        match &self.kind {
            MetricKind::Identity => s.dot(t),
            _ => s.dot(&self.apply_inv(t)),
        }
    }
}

pub fn primal_norm(x: &PrimalPoint, m: &Metric) -> Result<f64> {
    m.primal_norm(x)
}

pub fn dual_norm(s: &DualVector, m: &Metric) -> Result<f64> {
    m.dual_norm(s)
}

pub(crate) fn ensure_finite(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn primal_examples() {
        assert_eq!(Metric::identity(2).primal_norm(&v(&[3.0, 4.0])).unwrap(), 5.0);
        let m = Metric::diagonal(v(&[4.0, 9.0])).unwrap();
        assert_eq!(m.primal_norm(&v(&[0.0, 0.0])).unwrap(), 0.0);
        let got = m.primal_norm(&v(&[1.0, 1.0])).unwrap();
        assert!((got - 13f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dual_examples() {
        assert_eq!(Metric::identity(2).dual_norm(&v(&[3.0, 4.0])).unwrap(), 5.0);
        let m = Metric::diagonal(v(&[4.0, 1.0])).unwrap();
        assert_eq!(m.dual_norm(&v(&[2.0, 0.0])).unwrap(), 1.0);
        assert_eq!(m.dual_norm(&v(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let m = Metric::identity(3);
        assert!(matches!(
            m.primal_norm(&v(&[1.0])),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
        assert!(m.dual_norm(&v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn rejects_bad_metrics() {
        assert!(Metric::diagonal(v(&[1.0, 0.0])).is_err());
        assert!(Metric::diagonal(v(&[1.0, -2.0])).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(Metric::dense(asym).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Metric::dense(indef).is_err());
    }

    #[test]
    fn dense_matches_diagonal() {
        let d = v(&[2.0, 5.0, 0.5]);
        let md = Metric::diagonal(d.clone()).unwrap();
        let mm = Metric::dense(DMatrix::from_diagonal(&d)).unwrap();
        let x = v(&[1.0, -2.0, 3.0]);
        assert!((md.primal_norm(&x).unwrap() - mm.primal_norm(&x).unwrap()).abs() < 1e-14);
        assert!((md.dual_norm(&x).unwrap() - mm.dual_norm(&x).unwrap()).abs() < 1e-14);
    }

    fn spd(n: usize, seed: &[f64]) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
        &g * g.transpose() + DMatrix::identity(n, n)
    }

    proptest! {
        #[test]
        fn cauchy_schwarz(xs in prop::collection::vec(-10.0f64..10.0, 4),
                          ss in prop::collection::vec(-10.0f64..10.0, 4),
                          seed in prop::collection::vec(-1.0f64..1.0, 16)) {
            let m = Metric::dense(spd(4, &seed)).unwrap();
            let x = v(&xs);
            let s = v(&ss);
            let lhs = s.dot(&x).abs();
            let rhs = m.dual_norm(&s).unwrap() * m.primal_norm(&x).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn dual_of_bx_is_primal(xs in prop::collection::vec(-10.0f64..10.0, 4),
                                seed in prop::collection::vec(-1.0f64..1.0, 16)) {
            let m = Metric::dense(spd(4, &seed)).unwrap();
            let x = v(&xs);
            let a = m.dual_norm(&m.apply(&x)).unwrap();
            let b = m.primal_norm(&x).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }

        #[test]
        fn identity_self_dual(xs in prop::collection::vec(-1e3f64..1e3, 1..8)) {
            let m = Metric::identity(xs.len());
            let x = v(&xs);
            prop_assert_eq!(m.primal_norm(&x).unwrap(), m.dual_norm(&x).unwrap());
        }
    }
}
