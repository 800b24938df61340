//! Seeded generators for LASSO, NNLS and synthetic quadratic instances.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprs::{CsMat, TriMat};

use super::{CompositeProblem, Design, LeastSquares, Quadratic, Regularizer};
use crate::error::{Error, Result};
use crate::space::Vector;

const POWER_RTOL: f64 = 1e-10;
const POWER_CAP: usize = 100_000;

/// Standard normal draws via Box-Muller on a ChaCha stream.
pub struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(seed: u64) -> Self {
        Gaussian {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        let rad = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(rad * s);
        rad * c
    }

    pub fn vector(&mut self, n: usize, std: f64) -> Vector {
        DVector::from_fn(n, |_, _| std * self.sample())
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Largest eigenvalue of `A'A` by power iteration from the normalized ones vector.
pub fn lambda_max(a: &Design) -> f64 {
    let n = a.cols();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut est = 0.0f64;
    for _ in 0..POWER_CAP {
        let w = a.mul_t(&a.mul(&v));
        let rq = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
        if (rq - est).abs() <= POWER_RTOL * rq.abs() {
            return rq.max(nw);
        }
        est = rq;
    }
    est
}

#[derive(Debug, Clone)]
pub struct LassoInstance {
    pub a: DMatrix<f64>,
    pub b: Vector,
    pub lambda: f64,
    pub seed: u64,
    pub start: Vector,
    pub lipschitz: f64,
}

impl LassoInstance {
    pub fn generate(m: usize, n: usize, lambda: f64, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("lasso needs m, n >= 1"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lasso needs lambda > 0"));
        }
        let mut g = Gaussian::new(seed);
        let a = DMatrix::from_fn(m, n, |_, _| g.sample());
        let b = g.vector(m, 3.0);
        let start = g.vector(n, 1.0);
        let lipschitz = lambda_max(&Design::Dense(a.clone()));
        Ok(LassoInstance {
            a,
            b,
            lambda,
            seed,
            start,
            lipschitz,
        })
    }

    pub fn problem(&self) -> CompositeProblem {
        let ls = LeastSquares {
            a: Design::Dense(self.a.clone()),
            b: self.b.clone(),
        };
        CompositeProblem::new(Arc::new(ls), Regularizer::L1 { weight: self.lambda })
            .with_lipschitz(self.lipschitz)
    }
}

pub fn make_lasso(m: usize, n: usize, lambda: f64, seed: u64) -> Result<CompositeProblem> {
    Ok(LassoInstance::generate(m, n, lambda, seed)?.problem())
}

#[derive(Debug, Clone)]
pub struct NnlsInstance {
    pub a: CsMat<f64>,
    pub b: Vector,
    pub density: f64,
    pub seed: u64,
    /// Planted point used to build `b`; solvers start here.
    pub planted: Vector,
    pub noise: Vector,
    pub lipschitz: f64,
}

impl NnlsInstance {
    pub fn generate(m: usize, n: usize, density: f64, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("nnls needs m, n >= 1"));
        }
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::invalid(format!("density {density} outside (0, 1]")));
        }
        let mut g = Gaussian::new(seed);
        let total = m * n;
        let nnz = ((density * total as f64).round() as usize).clamp(1, total);
        let mut support = rand::seq::index::sample(g.rng(), total, nnz).into_vec();
        support.sort_unstable();
        let mut tri = TriMat::with_capacity((m, n), nnz);
        for idx in support {
            tri.add_triplet(idx / n, idx % n, g.sample());
        }
        let a: CsMat<f64> = tri.to_csr();

        let k = ((0.1 * n as f64).round() as usize).max(1).min(n);
        let mut planted = DVector::zeros(n);
        for j in rand::seq::index::sample(g.rng(), n, k) {
            planted[j] = 4.0;
        }
        let noise = g.vector(m, 1.0);
        let design = Design::Sparse(a.clone());
        let b = design.mul(&planted) + &noise;
        let lipschitz = lambda_max(&design);
        Ok(NnlsInstance {
            a,
            b,
            density,
            seed,
            planted,
            noise,
            lipschitz,
        })
    }

    pub fn problem(&self) -> CompositeProblem {
        self.problem_with(Design::Sparse(self.a.clone()))
    }

    pub fn problem_dense(&self) -> CompositeProblem {
        self.problem_with(Design::Dense(Design::Sparse(self.a.clone()).to_dense()))
    }

    fn problem_with(&self, a: Design) -> CompositeProblem {
        let ls = LeastSquares {
            a,
            b: self.b.clone(),
        };
        CompositeProblem::new(Arc::new(ls), Regularizer::NonNegative).with_lipschitz(self.lipschitz)
    }

    pub fn start(&self) -> Vector {
        self.planted.clone()
    }
}

pub fn make_nnls(m: usize, n: usize, density: f64, seed: u64) -> Result<CompositeProblem> {
    Ok(NnlsInstance::generate(m, n, density, seed)?.problem())
}

/// Strongly convex quadratic with spectrum spread linearly over `[mu, L]`.
#[derive(Debug, Clone)]
pub struct QuadraticInstance {
    pub h: DMatrix<f64>,
    pub q: Vector,
    pub c: f64,
    pub mu: f64,
    pub lipschitz: f64,
    pub minimizer: Vector,
    pub seed: u64,
    pub start: Vector,
}

impl QuadraticInstance {
    pub fn generate(n: usize, mu: f64, l: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("quadratic needs n >= 1"));
        }
        if !(mu > 0.0 && l >= mu && l.is_finite()) {
            return Err(Error::invalid("quadratic needs 0 < mu <= L"));
        }
        let mut g = Gaussian::new(seed);
        let raw = DMatrix::from_fn(n, n, |_, _| g.sample());
        let qmat = raw.qr().q();
        let spectrum = DVector::from_fn(n, |i, _| {
            if n == 1 {
                l
            } else {
                mu + (l - mu) * i as f64 / (n - 1) as f64
            }
        });
        let h = &qmat * DMatrix::from_diagonal(&spectrum) * qmat.transpose();
        let h = (&h + h.transpose()) * 0.5;
        let minimizer = g.vector(n, 1.0);
        let q = -(&h * &minimizer);
        let c = 0.5 * minimizer.dot(&(&h * &minimizer));
        let start = g.vector(n, 1.0);
        Ok(QuadraticInstance {
            h,
            q,
            c,
            mu,
            lipschitz: l,
            minimizer,
            seed,
            start,
        })
    }

    pub fn problem(&self) -> CompositeProblem {
        let f = Quadratic {
            h: self.h.clone(),
            q: self.q.clone(),
            c: self.c,
        };
        CompositeProblem::new(Arc::new(f), Regularizer::Zero)
            .with_lipschitz(self.lipschitz)
            .with_growth(self.mu)
            .with_optimum(self.minimizer.clone())
    }
}

pub fn make_quadratic(n: usize, mu: f64, l: f64, seed: u64) -> Result<CompositeProblem> {
    Ok(QuadraticInstance::generate(n, mu, l, seed)?.problem())
}
