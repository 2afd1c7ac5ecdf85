//! Conjugate gradients, preconditioned CG and preconditioned Richardson on
//! abstract operators.
//!
//! All methods start from `x = 0` and stop once `||b - A x|| <= tol ||b||`
//! (Euclidean norm of the true residual). A zero right-hand side returns
//! immediately with zero iterations.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{check_len, Error, Result};
use crate::sparse::CsrMatrix;
use crate::weights::WeightPair;

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn name(&self) -> String {
        "operator".into()
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ncols(), x.len())?;
        Ok(self.mul_vec(x))
    }
    fn name(&self) -> String {
        "dense matrix".into()
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ncols(), x.len())?;
        Ok(self.mul_vec(x))
    }
    fn name(&self) -> String {
        "sparse matrix".into()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
    fn name(&self) -> String {
        "identity".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Keep every iterate in the report (memory heavy).
    pub record_iterates: bool,
    /// Richardson step length.
    pub relaxation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 500, record_iterates: false, relaxation: 1.0 }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    Pcg,
    Richardson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Always `"zero"`.
    pub initial_guess: String,
    /// Preconditioner weights, filled in by callers that know them.
    pub weights: Option<WeightPair>,
    /// Free-form description of the configuration (case, level, ...).
    pub context: Option<String>,
    pub wall_time_secs: f64,
    /// `||r_k|| / ||b||` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iterates: Option<Vec<Vec<f64>>>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub report: SolveReport,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

pub(crate) fn finite(v: &[f64], iter: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(iter))
    }
}

pub(crate) struct Recorder {
    method: Method,
    opts: SolverOptions,
    start: Instant,
    history: Vec<f64>,
    iterates: Option<Vec<Vec<f64>>>,
}

impl Recorder {
    pub(crate) fn new(method: Method, opts: &SolverOptions, n: usize) -> Self {
        Self {
            method,
            opts: *opts,
            start: Instant::now(),
            history: vec![1.0],
            iterates: opts.record_iterates.then(|| vec![vec![0.0; n]]),
        }
    }

    pub(crate) fn push(&mut self, rel: f64, x: &[f64]) {
        self.history.push(rel);
        if let Some(it) = &mut self.iterates {
            it.push(x.to_vec());
        }
    }

    pub(crate) fn finish(self, x: Vec<f64>, converged: bool) -> Solution {
        let report = SolveReport {
            method: self.method,
            iterations: self.history.len() - 1,
            converged,
            tolerance: self.opts.tol,
            max_iter: self.opts.max_iter,
            initial_guess: "zero".into(),
            weights: None,
            context: None,
            wall_time_secs: self.start.elapsed().as_secs_f64(),
            residual_history: self.history,
            iterates: self.iterates,
        };
        Solution { x, report }
    }
}

pub(crate) fn trivial(method: Method, n: usize, opts: &SolverOptions) -> Solution {
    Recorder::new(method, opts, n).finish(vec![0.0; n], true)
}

/// Unpreconditioned conjugate gradients.
pub fn cg(a: &dyn LinearOperator, b: &[f64], opts: &SolverOptions) -> Result<Solution> {
    pcg_impl(Method::Cg, a, None, b, opts)
}

/// Conjugate gradients preconditioned by the SPD operator `m` (an
/// approximate inverse of `a`).
pub fn pcg(a: &dyn LinearOperator, m: &dyn LinearOperator, b: &[f64], opts: &SolverOptions) -> Result<Solution> {
    pcg_impl(Method::Pcg, a, Some(m), b, opts)
}

fn pcg_impl(
    method: Method,
    a: &dyn LinearOperator,
    m: Option<&dyn LinearOperator>,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<Solution> {
    let n = a.dim();
    check_len(n, b.len())?;
    if let Some(m) = m {
        check_len(n, m.dim())?;
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(trivial(method, n, opts));
    }
    let precondition = |r: &[f64]| match m {
        Some(m) => m.apply(r),
        None => Ok(r.to_vec()),
    };
    let mut rec = Recorder::new(method, opts, n);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precondition(&r)?;
    let mut rz = dot(&r, &z);
    if rz <= 0.0 {
        return Err(Error::Indefinite { operator: m.map_or_else(|| a.name(), |m| m.name()), curvature: rz });
    }
    let mut p = z.clone();
    for k in 1..=opts.max_iter {
        let ap = a.apply(&p)?;
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Indefinite { operator: a.name(), curvature: pap });
        }
        let step = rz / pap;
        axpy(&mut x, step, &p);
        axpy(&mut r, -step, &ap);
        finite(&x, k)?;
        let rel = norm(&r) / bnorm;
        rec.push(rel, &x);
        if rel <= opts.tol {
            return Ok(rec.finish(x, true));
        }
        z = precondition(&r)?;
        let rz_new = dot(&r, &z);
        if rz_new <= 0.0 {
            return Err(Error::Indefinite { operator: m.map_or_else(|| a.name(), |m| m.name()), curvature: rz_new });
        }
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Ok(rec.finish(x, false))
}

/// Preconditioned Richardson: `x_{k+1} = x_k + omega M (b - A x_k)` with
/// `omega = opts.relaxation`.
pub fn richardson(a: &dyn LinearOperator, m: &dyn LinearOperator, b: &[f64], opts: &SolverOptions) -> Result<Solution> {
    let n = a.dim();
    check_len(n, b.len())?;
    check_len(n, m.dim())?;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(trivial(Method::Richardson, n, opts));
    }
    let mut rec = Recorder::new(Method::Richardson, opts, n);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    for k in 1..=opts.max_iter {
        let z = m.apply(&r)?;
        axpy(&mut x, opts.relaxation, &z);
        finite(&x, k)?;
        r = b.to_vec();
        axpy(&mut r, -1.0, &a.apply(&x)?);
        let rel = norm(&r) / bnorm;
        rec.push(rel, &x);
        if rel <= opts.tol {
            return Ok(rec.finish(x, true));
        }
    }
    Ok(rec.finish(x, false))
}
