//! Problem files: JSON manifest, Matrix Market matrices, plain-text vectors.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use super::generate::{LassoInstance, NnlsInstance, QuadraticInstance};
use super::CompositeProblem;
use crate::error::{Error, Result};
use crate::space::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Lasso,
    Nnls,
    Quadratic,
}

/// How solvers pick their starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartRule {
    /// Independent N(0, 1) entries drawn after the data.
    Gaussian,
    /// The planted vector that generated `b`.
    Planted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub constant: Option<f64>,
    pub lipschitz: f64,
    pub start: StartRule,
    pub files: Files,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Files {
    /// Design matrix, or Hessian for quadratics.
    pub matrix: String,
    /// Observation, or linear term for quadratics.
    pub vector: String,
    pub start: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub minimizer: Option<String>,
}

#[derive(Debug, Clone)]
pub enum Instance {
    Lasso(LassoInstance),
    Nnls(NnlsInstance),
    Quadratic(QuadraticInstance),
}

impl Instance {
    pub fn problem(&self) -> CompositeProblem {
        match self {
            Instance::Lasso(i) => i.problem(),
            Instance::Nnls(i) => i.problem(),
            Instance::Quadratic(i) => i.problem(),
        }
    }

    pub fn start(&self) -> Vector {
        match self {
            Instance::Lasso(i) => i.start.clone(),
            Instance::Nnls(i) => i.start(),
            Instance::Quadratic(i) => i.start.clone(),
        }
    }

    pub fn kind(&self) -> ProblemKind {
        match self {
            Instance::Lasso(_) => ProblemKind::Lasso,
            Instance::Nnls(_) => ProblemKind::Nnls,
            Instance::Quadratic(_) => ProblemKind::Quadratic,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Instance::Lasso(i) => i.lipschitz,
            Instance::Nnls(i) => i.lipschitz,
            Instance::Quadratic(i) => i.lipschitz,
        }
    }
}

pub fn write_vector(path: &Path, v: &Vector) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for x in v.iter() {
        writeln!(w, "{x:?}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_vector(path: &Path) -> Result<Vector> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let x: f64 = t
            .parse()
            .map_err(|_| Error::Schema(format!("{}:{}: bad float {t:?}", path.display(), i + 1)))?;
        out.push(x);
    }
    Ok(DVector::from_vec(out))
}

fn write_csr(path: &Path, a: &CsMat<f64>) -> Result<()> {
    sprs::io::write_matrix_market(path, a)?;
    Ok(())
}

fn read_csr(path: &Path) -> Result<CsMat<f64>> {
    let tri: TriMat<f64> = sprs::io::read_matrix_market(path)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    Ok(tri.to_csr())
}

fn dense_to_csr(a: &DMatrix<f64>) -> CsMat<f64> {
    let mut tri = TriMat::new(a.shape());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let v = a[(i, j)];
            if v != 0.0 {
                tri.add_triplet(i, j, v);
            }
        }
    }
    tri.to_csr()
}

fn csr_to_dense(a: &CsMat<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.rows(), a.cols());
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, v) in row.iter() {
            d[(i, j)] = *v;
        }
    }
    d
}

/// Writes `<stem>.json` plus data files into `dir`; returns the manifest path.
pub fn save(inst: &Instance, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let name = |suffix: &str| format!("{stem}.{suffix}");
    let mut files = Files {
        matrix: name("A.mtx"),
        vector: name("b.txt"),
        start: name("x0.txt"),
        noise: None,
        minimizer: None,
    };
    let manifest = match inst {
        Instance::Lasso(i) => {
            write_csr(&dir.join(&files.matrix), &dense_to_csr(&i.a))?;
            write_vector(&dir.join(&files.vector), &i.b)?;
            write_vector(&dir.join(&files.start), &i.start)?;
            Manifest {
                kind: ProblemKind::Lasso,
                m: i.a.nrows(),
                n: i.a.ncols(),
                seed: i.seed,
                lambda: Some(i.lambda),
                density: None,
                mu: None,
                constant: None,
                lipschitz: i.lipschitz,
                start: StartRule::Gaussian,
                files,
            }
        }
        Instance::Nnls(i) => {
            files.noise = Some(name("e.txt"));
            write_csr(&dir.join(&files.matrix), &i.a)?;
            write_vector(&dir.join(&files.vector), &i.b)?;
            write_vector(&dir.join(&files.start), &i.planted)?;
            write_vector(&dir.join(files.noise.as_ref().unwrap()), &i.noise)?;
            Manifest {
                kind: ProblemKind::Nnls,
                m: i.a.rows(),
                n: i.a.cols(),
                seed: i.seed,
                lambda: None,
                density: Some(i.density),
                mu: None,
                constant: None,
                lipschitz: i.lipschitz,
                start: StartRule::Planted,
                files,
            }
        }
        Instance::Quadratic(i) => {
            files.vector = name("q.txt");
            files.matrix = name("H.mtx");
            files.minimizer = Some(name("xstar.txt"));
            write_csr(&dir.join(&files.matrix), &dense_to_csr(&i.h))?;
            write_vector(&dir.join(&files.vector), &i.q)?;
            write_vector(&dir.join(&files.start), &i.start)?;
            write_vector(&dir.join(files.minimizer.as_ref().unwrap()), &i.minimizer)?;
            Manifest {
                kind: ProblemKind::Quadratic,
                m: i.h.nrows(),
                n: i.h.ncols(),
                seed: i.seed,
                lambda: None,
                density: None,
                mu: Some(i.mu),
                constant: Some(i.c),
                lipschitz: i.lipschitz,
                start: StartRule::Gaussian,
                files,
            }
        }
    };
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

fn require<T>(v: Option<T>, field: &str) -> Result<T> {
    v.ok_or_else(|| Error::Schema(format!("manifest is missing `{field}`")))
}

fn check_len(v: &Vector, n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::Schema(format!("{what} has length {}, expected {n}", v.len())));
    }
    Ok(())
}

pub fn load(manifest_path: &Path) -> Result<(Manifest, Instance)> {
    let text = fs::read_to_string(manifest_path)?;
    let m: Manifest = serde_json::from_str(&text)?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mat = read_csr(&dir.join(&m.files.matrix))?;
    if mat.shape() != (m.m, m.n) {
        return Err(Error::Schema(format!(
            "matrix is {:?}, manifest says ({}, {})",
            mat.shape(),
            m.m,
            m.n
        )));
    }
    let vector = read_vector(&dir.join(&m.files.vector))?;
    let start = read_vector(&dir.join(&m.files.start))?;
    check_len(&start, m.n, "start")?;
    let inst = match m.kind {
        ProblemKind::Lasso => {
            check_len(&vector, m.m, "b")?;
            Instance::Lasso(LassoInstance {
                a: csr_to_dense(&mat),
                b: vector,
                lambda: require(m.lambda, "lambda")?,
                seed: m.seed,
                start,
                lipschitz: m.lipschitz,
            })
        }
        ProblemKind::Nnls => {
            check_len(&vector, m.m, "b")?;
            let noise = read_vector(&dir.join(require(m.files.noise.as_ref(), "files.noise")?))?;
            check_len(&noise, m.m, "noise")?;
            Instance::Nnls(NnlsInstance {
                a: mat,
                b: vector,
                density: require(m.density, "density")?,
                seed: m.seed,
                planted: start,
                noise,
                lipschitz: m.lipschitz,
            })
        }
        ProblemKind::Quadratic => {
            check_len(&vector, m.n, "q")?;
            let minimizer =
                read_vector(&dir.join(require(m.files.minimizer.as_ref(), "files.minimizer")?))?;
            check_len(&minimizer, m.n, "minimizer")?;
            Instance::Quadratic(QuadraticInstance {
                h: csr_to_dense(&mat),
                q: vector,
                c: require(m.constant, "constant")?,
                mu: require(m.mu, "mu")?,
                lipschitz: m.lipschitz,
                minimizer,
                seed: m.seed,
                start,
            })
        }
    };
    Ok((m, inst))
}
