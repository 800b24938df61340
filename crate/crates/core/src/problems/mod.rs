//! Composite problems `F = f + Psi` and their step operators.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use sprs::CsMat;

use crate::error::{Error, Result};
use crate::space::{ensure_finite, Metric, Vector};

pub mod generate;
pub mod io;

pub use generate::{
    make_lasso, make_nnls, make_quadratic, LassoInstance, NnlsInstance, QuadraticInstance,
};

/// Relative slack granted to the descent test to absorb rounding when `L_hat`
/// equals the true constant.
pub const DESCENT_RTOL: f64 = 1e-12;

/// Value of a proper closed convex function that may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infeasible,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infeasible => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }
}

/// Smooth convex part `f`.
pub trait Smooth: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;

    /// `f(x) - f(y) - <f'(y), x - y>`.
    fn divergence(&self, y: &Vector, x: &Vector) -> f64 {
        self.value(x) - self.value(y) - self.gradient(y).dot(&(x - y))
    }
}

/// `f(x) = 1/2 x'Hx + q'x + c`
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub h: DMatrix<f64>,
    pub q: Vector,
    pub c: f64,
}

impl Quadratic {
    pub fn new(h: DMatrix<f64>, q: Vector, c: f64) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::DimensionMismatch {
                expected: h.nrows(),
                found: h.ncols(),
            });
        }
        if q.len() != h.nrows() {
            return Err(Error::DimensionMismatch {
                expected: h.nrows(),
                found: q.len(),
            });
        }
        Ok(Quadratic { h, q, c })
    }
}

impl Smooth for Quadratic {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.q.dot(x) + self.c
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.h * x + &self.q
    }

    fn divergence(&self, y: &Vector, x: &Vector) -> f64 {
        let d = x - y;
        0.5 * d.dot(&(&self.h * &d))
    }
}

#[derive(Debug, Clone)]
pub enum Design {
    Dense(DMatrix<f64>),
    Sparse(CsMat<f64>),
}

impl Design {
    pub fn rows(&self) -> usize {
        match self {
            Design::Dense(a) => a.nrows(),
            Design::Sparse(a) => a.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Design::Dense(a) => a.ncols(),
            Design::Sparse(a) => a.cols(),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Design::Dense(a) => a.iter().filter(|v| **v != 0.0).count(),
            Design::Sparse(a) => a.nnz(),
        }
    }

    /// `A x`
    pub fn mul(&self, x: &Vector) -> Vector {
        match self {
            Design::Dense(a) => a * x,
            Design::Sparse(a) => {
                let mut out = DVector::zeros(a.rows());
                for (i, row) in a.outer_iterator().enumerate() {
                    let mut acc = 0.0;
                    for (j, v) in row.iter() {
                        acc += v * x[j];
                    }
                    out[i] = acc;
                }
                out
            }
        }
    }

    /// `A' r`
    pub fn mul_t(&self, r: &Vector) -> Vector {
        match self {
            Design::Dense(a) => a.tr_mul(r),
            Design::Sparse(a) => {
                let mut out = DVector::zeros(a.cols());
                for (i, row) in a.outer_iterator().enumerate() {
                    let ri = r[i];
                    if ri == 0.0 {
                        continue;
                    }
                    for (j, v) in row.iter() {
                        out[j] += v * ri;
                    }
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Design::Dense(a) => a.clone(),
            Design::Sparse(a) => {
                let mut d = DMatrix::zeros(a.rows(), a.cols());
                for (i, row) in a.outer_iterator().enumerate() {
                    for (j, v) in row.iter() {
                        d[(i, j)] = *v;
                    }
                }
                d
            }
        }
    }
}

/// `f(x) = 1/2 ||Ax - b||^2`
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub a: Design,
    pub b: Vector,
}

impl LeastSquares {
    pub fn new(a: Design, b: Vector) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: b.len(),
            });
        }
        Ok(LeastSquares { a, b })
    }

    pub fn residual(&self, x: &Vector) -> Vector {
        self.a.mul(x) - &self.b
    }
}

impl Smooth for LeastSquares {
    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * self.residual(x).norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.a.mul_t(&self.residual(x))
    }

    fn divergence(&self, y: &Vector, x: &Vector) -> f64 {
        0.5 * self.a.mul(&(x - y)).norm_squared()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    Zero,
    L1 { weight: f64 },
    NonNegative,
}

impl Regularizer {
    pub fn value(&self, x: &Vector) -> Extended {
        match *self {
            Regularizer::Zero => Extended::Finite(0.0),
            Regularizer::L1 { weight } => Extended::Finite(weight * x.iter().map(|v| v.abs()).sum::<f64>()),
            Regularizer::NonNegative => {
                if x.iter().all(|v| *v >= 0.0) {
                    Extended::Finite(0.0)
                } else {
                    Extended::Infeasible
                }
            }
        }
    }

    /// `argmin_z Psi(z) + 1/(2 tau) ||z - x||^2` in the metric norm.
    pub fn prox(&self, tau: f64, x: &Vector, metric: &Metric) -> Result<Vector> {
        use crate::space::MetricKind;
        match (*self, metric.kind()) {
            (Regularizer::Zero, _) => Ok(x.clone()),
            (Regularizer::NonNegative, MetricKind::Identity | MetricKind::Diagonal(_)) => {
                Ok(x.map(|v| v.max(0.0)))
            }
            (Regularizer::L1 { weight }, MetricKind::Identity) => {
                let t = tau * weight;
                Ok(x.map(|v| shrink(v, t)))
            }
            (Regularizer::L1 { weight }, MetricKind::Diagonal(d)) => Ok(DVector::from_iterator(
                x.len(),
                x.iter().zip(d.iter()).map(|(v, w)| shrink(*v, tau * weight / w)),
            )),
            (_, MetricKind::Dense { .. }) => Err(Error::Unsupported(
                "closed-form prox of a nonzero regularizer under a dense metric".into(),
            )),
        }
    }
}

pub fn shrink(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct Optimum {
    pub x: Vector,
    pub value: f64,
}

/// Oracle bundle for `min f(x) + Psi(x)`.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub metric: Metric,
    pub smooth: Arc<dyn Smooth>,
    pub reg: Regularizer,
    pub lipschitz: Option<f64>,
    pub growth: Option<f64>,
    pub optimum: Option<Optimum>,
}

/// Result of one proximal step at `y`.
#[derive(Debug, Clone)]
pub struct Step {
    /// `T_L(y)`
    pub point: Vector,
    /// `g_L(y)`
    pub mapping: Vector,
    /// `f'(y)`
    pub gradient: Vector,
}

#[derive(Debug, Clone, Copy)]
pub struct Descent {
    pub holds: bool,
    /// `f(T(y))`
    pub lhs: f64,
    /// `f(y) + <f'(y), T(y) - y> + L/2 ||T(y) - y||^2`
    pub rhs: f64,
}

impl CompositeProblem {
    pub fn new(smooth: Arc<dyn Smooth>, reg: Regularizer) -> Self {
        let n = smooth.dim();
        CompositeProblem {
            metric: Metric::identity(n),
            smooth,
            reg,
            lipschitz: None,
            growth: None,
            optimum: None,
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Result<Self> {
        if metric.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: metric.dim(),
            });
        }
        self.metric = metric;
        Ok(self)
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_growth(mut self, mu: f64) -> Self {
        self.growth = Some(mu);
        self
    }

    pub fn with_optimum(mut self, x: Vector) -> Self {
        let value = self.smooth.value(&x) + self.reg.value(&x).finite().unwrap_or(f64::NAN);
        self.optimum = Some(Optimum { x, value });
        self
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn is_smooth(&self) -> bool {
        self.reg == Regularizer::Zero
    }

    pub fn smooth_value(&self, x: &Vector) -> f64 {
        self.smooth.value(x)
    }

    pub fn smooth_grad(&self, x: &Vector) -> Vector {
        self.smooth.gradient(x)
    }

    pub fn reg_value(&self, x: &Vector) -> Extended {
        self.reg.value(x)
    }

    pub fn prox(&self, tau: f64, x: &Vector) -> Result<Vector> {
        self.reg.prox(tau, x, &self.metric)
    }

    pub fn objective(&self, x: &Vector) -> Extended {
        match self.reg.value(x) {
            Extended::Finite(p) => Extended::Finite(self.smooth.value(x) + p),
            Extended::Infeasible => Extended::Infeasible,
        }
    }

    /// `F(x)`, failing on points outside `dom Psi`.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        self.objective(x).finite().ok_or(Error::Infeasible)
    }

    /// One prox-gradient step from `y` with estimate `lhat`.
    pub fn step(&self, lhat: f64, y: &Vector) -> Result<Step> {
        if !(lhat > 0.0 && lhat.is_finite()) {
            return Err(Error::invalid(format!("step estimate {lhat} must be positive")));
        }
        self.metric.check(y)?;
        let gradient = self.smooth.gradient(y);
        ensure_finite(&gradient, "gradient")?;
        let z = y - self.metric.apply_inv(&gradient) / lhat;
        if self.is_smooth() {
            return Ok(Step {
                point: z,
                mapping: gradient.clone(),
                gradient,
            });
        }
        let point = self.prox(1.0 / lhat, &z)?;
        let mapping = self.metric.apply(&(y - &point)) * lhat;
        Ok(Step {
            point,
            mapping,
            gradient,
        })
    }

    pub fn prox_step(&self, lhat: f64, x: &Vector) -> Result<Vector> {
        Ok(self.step(lhat, x)?.point)
    }

    pub fn gradient_mapping(&self, lhat: f64, x: &Vector) -> Result<Vector> {
        Ok(self.step(lhat, x)?.mapping)
    }

    /// Descent test for an already computed step, decided on the Bregman gap
    /// `f(T) - f(y) - <f'(y), T - y>` so that cancellation does not flip it.
    pub fn descent_ok(&self, lhat: f64, y: &Vector, step: &Step) -> bool {
        let d = &step.point - y;
        let quad = 0.5 * lhat * self.metric.primal_norm_sq(&d);
        let gap = self.smooth.divergence(y, &step.point);
        gap <= quad * (1.0 + DESCENT_RTOL)
    }

    pub fn descent_holds(&self, lhat: f64, y: &Vector) -> Result<Descent> {
        let step = self.step(lhat, y)?;
        let d = &step.point - y;
        let lhs = self.smooth.value(&step.point);
        let rhs = self.smooth.value(y)
            + step.gradient.dot(&d)
            + 0.5 * lhat * self.metric.primal_norm_sq(&d);
        Ok(Descent {
            holds: self.descent_ok(lhat, y, &step),
            lhs,
            rhs,
        })
    }

    pub fn distance_to_optimum(&self, x: &Vector) -> Result<f64> {
        let opt = self.optimum.as_ref().ok_or(Error::OptimumUnavailable)?;
        self.metric.primal_norm(&(x - &opt.x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        DVector::from_row_slice(xs)
    }

    fn scalar_quad(h: f64, q: f64, c: f64) -> Arc<dyn Smooth> {
        Arc::new(Quadratic::new(DMatrix::from_element(1, 1, h), v(&[q]), c).unwrap())
    }

    fn zero_smooth(n: usize) -> Arc<dyn Smooth> {
        Arc::new(Quadratic::new(DMatrix::zeros(n, n), DVector::zeros(n), 0.0).unwrap())
    }

    #[test]
    fn prox_step_examples() {
        let p = CompositeProblem::new(zero_smooth(1), Regularizer::L1 { weight: 1.0 });
        assert_eq!(p.prox_step(1.0, &v(&[3.0])).unwrap()[0], 2.0);

        let p = CompositeProblem::new(
            Arc::new(Quadratic::new(DMatrix::identity(3, 3), DVector::zeros(3), 0.0).unwrap()),
            Regularizer::Zero,
        );
        let x = p.prox_step(1.0, &v(&[1.5, -2.0, 7.0])).unwrap();
        assert_eq!(x, DVector::zeros(3));

        let p = CompositeProblem::new(zero_smooth(1), Regularizer::NonNegative);
        assert_eq!(p.prox_step(1.0, &v(&[-2.0])).unwrap()[0], 0.0);
    }

    #[test]
    fn prox_step_rejects_bad_estimate() {
        let p = CompositeProblem::new(zero_smooth(1), Regularizer::Zero);
        assert!(p.step(0.0, &v(&[1.0])).is_err());
        assert!(p.step(-1.0, &v(&[1.0])).is_err());
    }

    #[test]
    fn nonfinite_gradient_is_an_error() {
        let p = CompositeProblem::new(scalar_quad(1.0, 0.0, 0.0), Regularizer::Zero);
        assert!(matches!(p.step(1.0, &v(&[f64::NAN])), Err(Error::NonFinite(_))));
    }

    #[test]
    fn gradient_mapping_examples() {
        let p = CompositeProblem::new(scalar_quad(1.0, 0.0, 0.0), Regularizer::Zero);
        assert_eq!(p.gradient_mapping(1.0, &v(&[3.0])).unwrap()[0], 3.0);

        let p = CompositeProblem::new(zero_smooth(1), Regularizer::L1 { weight: 1.0 });
        assert_eq!(p.gradient_mapping(1.0, &v(&[3.0])).unwrap()[0], 1.0);
    }

    #[test]
    fn one_dimensional_lasso_minimizer_is_fixed() {
        // f = 1/2 (a x - b)^2, Psi = lam |x|; x* = (a b - lam) / a^2 when a b > lam.
        let (a, b, lam) = (2.0, 5.0, 3.0);
        let ls = LeastSquares::new(Design::Dense(DMatrix::from_element(1, 1, a)), v(&[b])).unwrap();
        let p = CompositeProblem::new(Arc::new(ls), Regularizer::L1 { weight: lam });
        let xstar = (a * b - lam) / (a * a);
        let g = p.gradient_mapping(a * a, &v(&[xstar])).unwrap();
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn descent_examples() {
        let p = CompositeProblem::new(scalar_quad(1.0, 0.0, 0.0), Regularizer::Zero);
        for y in [-3.0, 0.0, 0.7, 1e3] {
            assert!(p.descent_holds(1.0, &v(&[y])).unwrap().holds);
        }
        let d = p.descent_holds(0.5, &v(&[1.0])).unwrap();
        assert!(!d.holds);
        assert_eq!(d.lhs, 0.5);
        assert_eq!(d.rhs, -0.5);
        assert!(p.descent_holds(2.0, &v(&[1.0])).unwrap().holds);
    }

    #[test]
    fn distance_examples() {
        let p = CompositeProblem::new(
            Arc::new(Quadratic::new(DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap()),
            Regularizer::Zero,
        );
        assert!(matches!(
            p.distance_to_optimum(&v(&[1.0, 1.0])),
            Err(Error::OptimumUnavailable)
        ));
        let p = p.with_optimum(DVector::zeros(2));
        assert_eq!(p.distance_to_optimum(&v(&[3.0, 4.0])).unwrap(), 5.0);
        assert_eq!(p.distance_to_optimum(&v(&[0.0, 0.0])).unwrap(), 0.0);

        // 1/2 (x - 2)^2 = 1/2 x^2 - 2x + 2
        let p = CompositeProblem::new(scalar_quad(1.0, -2.0, 2.0), Regularizer::Zero)
            .with_optimum(v(&[2.0]));
        assert_eq!(p.distance_to_optimum(&v(&[5.0])).unwrap(), 3.0);
        assert_eq!(p.optimum.as_ref().unwrap().value, 0.0);
    }

    #[test]
    fn nonnegative_marks_infeasible() {
        let r = Regularizer::NonNegative;
        assert_eq!(r.value(&v(&[0.0, 1.0])), Extended::Finite(0.0));
        assert_eq!(r.value(&v(&[-1e-300, 1.0])), Extended::Infeasible);
    }

    #[test]
    fn diagonal_metric_prox() {
        let m = Metric::diagonal(v(&[2.0, 0.5])).unwrap();
        let r = Regularizer::L1 { weight: 1.0 };
        let z = r.prox(1.0, &v(&[3.0, 3.0]), &m).unwrap();
        assert_eq!(z, v(&[2.5, 1.0]));
        let dense = Metric::dense(DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(r.prox(1.0, &v(&[1.0, 1.0]), &dense), Err(Error::Unsupported(_))));
        assert!(Regularizer::Zero.prox(1.0, &v(&[1.0, 1.0]), &dense).is_ok());
    }

    proptest! {
        // Optimality of the shrinkage prox: (x - z)/tau lies in lam * d|z|.
        #[test]
        fn shrink_subgradient(x in -50.0f64..50.0, tau in 1e-3f64..10.0, lam in 0.0f64..5.0) {
            let z = shrink(x, tau * lam);
            let u = (x - z) / tau;
            if z > 0.0 {
                prop_assert!((u - lam).abs() <= 1e-12 * lam.max(1.0) * (1.0 + x.abs() / tau));
            } else if z < 0.0 {
                prop_assert!((u + lam).abs() <= 1e-12 * lam.max(1.0) * (1.0 + x.abs() / tau));
            } else {
                prop_assert!(u.abs() <= lam * (1.0 + 1e-12));
            }
        }

        // Projection onto the orthant: z >= 0, x - z <= 0, (x - z) z = 0.
        #[test]
        fn projection_normal_cone(x in -50.0f64..50.0) {
            let z = Regularizer::NonNegative.prox(1.0, &v(&[x]), &Metric::identity(1)).unwrap()[0];
            prop_assert!(z >= 0.0);
            prop_assert!(x - z <= 0.0);
            prop_assert_eq!((x - z) * z, 0.0);
        }
    }
}
