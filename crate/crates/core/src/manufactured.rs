//! Benchmark cases and the analytic test solution
//!
//! ```text
//! u_f = (sqrt(eta_p), alpha_BJ x)
//! p_f = 2 mu_f (x + y - 1) + 1 / (3 eta_p)
//! p_p = (-alpha_BJ x (y - 1) + y^3 / 3 - y^2 + y) / eta_p + 2 mu_f x
//! ```
//!
//! Every piece of problem data (forces, boundary values, the slip defect) is
//! computed from the derivatives of these fields, so data and solution can
//! never drift apart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::fem::basis::{gauss_1d, q1_eval, q2_eval};
use crate::fem::{BoundarySetup, CoupledSystem, Discretization, ProblemData, ProblemParams};
use crate::schur::{FullSolution, InterfaceProblem};
use crate::weights::{frequency_band, optimal_weights, AnalysisParams, FrequencyBand, KmaxConvention, WeightPair};

/// Interface length of the benchmark geometry.
pub const INTERFACE_LENGTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseLabel {
    A,
    B,
    C,
    D,
}

impl CaseLabel {
    pub const ALL: [CaseLabel; 4] = [CaseLabel::A, CaseLabel::B, CaseLabel::C, CaseLabel::D];

    /// `(mu_f, eta_p)`.
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            CaseLabel::A => (10.0, 4e-10),
            CaseLabel::B => (1.0, 4e-7),
            CaseLabel::C => (10.0, 4e-9),
            CaseLabel::D => (0.2, 2e-7),
        }
    }

    pub fn letter(self) -> char {
        match self {
            CaseLabel::A => 'a',
            CaseLabel::B => 'b',
            CaseLabel::C => 'c',
            CaseLabel::D => 'd',
        }
    }
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl std::str::FromStr for CaseLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(CaseLabel::A),
            "b" => Ok(CaseLabel::B),
            "c" => Ok(CaseLabel::C),
            "d" => Ok(CaseLabel::D),
            _ => Err(Error::Parameter(format!("unknown case '{s}' (expected a, b, c or d)"))),
        }
    }
}

/// A fully resolved benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseConfig {
    pub label: CaseLabel,
    pub level: u32,
    pub alpha_bj: f64,
    pub boundary: BoundarySetup,
    pub kmax_convention: KmaxConvention,
}

impl CaseConfig {
    pub fn new(label: CaseLabel, level: u32) -> Result<Self> {
        if !(1..=6).contains(&level) {
            return Err(Error::Parameter(format!("mesh level {level} outside 1..=6")));
        }
        Ok(Self {
            label,
            level,
            alpha_bj: 1.0,
            boundary: BoundarySetup::default(),
            kmax_convention: KmaxConvention::default(),
        })
    }

    pub fn params(&self) -> ProblemParams {
        let (mu, eta) = self.label.coefficients();
        ProblemParams::isotropic(mu, eta, self.alpha_bj).expect("preset coefficients are valid")
    }

    pub fn h(&self) -> f64 {
        0.1 * 2f64.powi(1 - self.level as i32)
    }

    pub fn analysis(&self) -> AnalysisParams {
        AnalysisParams::from(&self.params())
    }

    pub fn band(&self) -> FrequencyBand {
        frequency_band(INTERFACE_LENGTH, self.h(), self.kmax_convention).expect("positive sizes")
    }

    pub fn optimal_weights(&self) -> WeightPair {
        optimal_weights(self.analysis(), self.band())
    }

    pub fn discretization(&self) -> Result<Discretization> {
        self.boundary.validate()?;
        Discretization::benchmark(self.level, self.params(), self.boundary)
    }

    pub fn exact(&self) -> ExactSolution {
        ExactSolution::new(self.params())
    }

    /// Assembled interface problem with the analytic solution's data.
    pub fn interface_problem(&self, exec: Execution) -> Result<InterfaceProblem> {
        InterfaceProblem::assemble(&self.discretization()?, &self.exact(), exec)
    }
}

/// The analytic solution and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactSolution {
    pub params: ProblemParams,
}

impl ExactSolution {
    pub fn new(params: ProblemParams) -> Self {
        Self { params }
    }

    fn eta(&self) -> f64 {
        self.params.eta_p()
    }

    pub fn velocity(&self, [x, _]: [f64; 2]) -> [f64; 2] {
        [self.eta().sqrt(), self.params.alpha_bj * x]
    }

    /// `g[i][j] = d u_i / d x_j`.
    pub fn velocity_gradient(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
        [[0.0, 0.0], [self.params.alpha_bj, 0.0]]
    }

    /// `h[i][j][k] = d^2 u_i / d x_j d x_k`.
    pub fn velocity_hessian(&self, _: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        [[[0.0; 2]; 2]; 2]
    }

    pub fn divergence(&self, x: [f64; 2]) -> f64 {
        let g = self.velocity_gradient(x);
        g[0][0] + g[1][1]
    }

    pub fn fluid_pressure(&self, [x, y]: [f64; 2]) -> f64 {
        2.0 * self.params.mu_f * (x + y - 1.0) + 1.0 / (3.0 * self.eta())
    }

    pub fn fluid_pressure_gradient(&self, _: [f64; 2]) -> [f64; 2] {
        [2.0 * self.params.mu_f, 2.0 * self.params.mu_f]
    }

    pub fn porous_pressure_value(&self, [x, y]: [f64; 2]) -> f64 {
        let a = self.params.alpha_bj;
        (-a * x * (y - 1.0) + y * y * y / 3.0 - y * y + y) / self.eta() + 2.0 * self.params.mu_f * x
    }

    pub fn porous_pressure_gradient(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        let a = self.params.alpha_bj;
        let e = self.eta();
        [-a * (y - 1.0) / e + 2.0 * self.params.mu_f, (-a * x + y * y - 2.0 * y + 1.0) / e]
    }

    /// `(d_xx p_p, d_yy p_p)`.
    pub fn porous_pressure_second(&self, [_, y]: [f64; 2]) -> [f64; 2] {
        [0.0, (2.0 * y - 2.0) / self.eta()]
    }

    /// Cauchy stress `2 mu grad^s u - p I`.
    pub fn stress(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let g = self.velocity_gradient(x);
        let p = self.fluid_pressure(x);
        let mu = self.params.mu_f;
        let mut t = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                t[i][j] = mu * (g[i][j] + g[j][i]) - if i == j { p } else { 0.0 };
            }
        }
        t
    }

    /// Residuals of the interface laws along the interface, outward fluid
    /// normal `n = (0, -1)`, tangent `(1, 0)`:
    /// `(u . n - (eta grad p_p) . n_p, -n . T n - p_p, -(T n) . tau - xi u . tau)`.
    /// The first two vanish; the third is the slip defect fed to assembly.
    pub fn interface_residuals(&self, x: f64) -> [f64; 3] {
        let pt = [x, 1.0];
        let n = [0.0, -1.0];
        let t = self.stress(pt);
        let tn = [t[0][0] * n[0] + t[0][1] * n[1], t[1][0] * n[0] + t[1][1] * n[1]];
        let u = self.velocity(pt);
        let gp = self.porous_pressure_gradient(pt);
        let flux = self.params.eta2 * gp[1];
        [
            u[0] * n[0] + u[1] * n[1] - flux,
            -(tn[0] * n[0] + tn[1] * n[1]) - self.porous_pressure_value(pt),
            -tn[0] - self.params.xi_f() * u[0],
        ]
    }
}

impl ProblemData for ExactSolution {
    /// `-div(2 mu grad^s u) + grad p = -mu (lap u + grad div u) + grad p`.
    fn fluid_force(&self, x: [f64; 2]) -> [f64; 2] {
        let h = self.velocity_hessian(x);
        let gp = self.fluid_pressure_gradient(x);
        let mu = self.params.mu_f;
        let mut f = [0.0; 2];
        for i in 0..2 {
            let lap = h[i][0][0] + h[i][1][1];
            let grad_div = h[0][0][i] + h[1][1][i];
            f[i] = -mu * (lap + grad_div) + gp[i];
        }
        f
    }

    fn fluid_velocity(&self, x: [f64; 2]) -> [f64; 2] {
        self.velocity(x)
    }

    fn fluid_traction(&self, x: [f64; 2], n: [f64; 2]) -> [f64; 2] {
        let t = self.stress(x);
        [t[0][0] * n[0] + t[0][1] * n[1], t[1][0] * n[0] + t[1][1] * n[1]]
    }

    fn slip_defect(&self, x: [f64; 2]) -> f64 {
        self.interface_residuals(x[0])[2]
    }

    fn porous_source(&self, x: [f64; 2]) -> f64 {
        let d = self.porous_pressure_second(x);
        -(self.params.eta1 * d[0] + self.params.eta2 * d[1])
    }

    fn porous_pressure(&self, x: [f64; 2]) -> f64 {
        self.porous_pressure_value(x)
    }

    fn porous_flux(&self, x: [f64; 2], n: [f64; 2]) -> f64 {
        let g = self.porous_pressure_gradient(x);
        self.params.eta1 * g[0] * n[0] + self.params.eta2 * g[1] * n[1]
    }
}

/// Errors of a discrete solution against the analytic one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub velocity_l2: f64,
    pub velocity_h1: f64,
    pub fluid_pressure_l2: f64,
    pub porous_pressure_l2: f64,
    pub porous_pressure_h1: f64,
}

/// L2 norms and H1 seminorms of the error, tensor Gauss rule of the
/// discretization.
pub fn error_norms(
    disc: &Discretization,
    system: &CoupledSystem,
    solution: &FullSolution,
    exact: &ExactSolution,
) -> ErrorNorms {
    let fluid = system.fluid_dofs.expand(&solution.fluid);
    let porous = system.porous_dofs.expand(&solution.porous);
    let (pts, wts) = gauss_1d(disc.quadrature);
    let mut e = [0.0f64; 5];

    let mesh = &disc.fluid_mesh;
    let h = mesh.h();
    let nq2 = mesh.q2_node_count();
    for (ex, ey) in mesh.elements() {
        let q2 = mesh.q2_element(ex, ey);
        let q1 = mesh.q1_element(ex, ey);
        let o = mesh.element_origin(ex, ey);
        for (&t, &wt) in pts.iter().zip(&wts) {
            for (&s, &ws) in pts.iter().zip(&wts) {
                let w = ws * wt * h * h;
                let x = [o[0] + s * h, o[1] + t * h];
                let (phi, g) = q2_eval(s, t, h);
                let (psi, _) = q1_eval(s, t, h);
                let mut u = [0.0; 2];
                let mut du = [[0.0; 2]; 2];
                for a in 0..9 {
                    for c in 0..2 {
                        let v = fluid[2 * q2[a] + c];
                        u[c] += v * phi[a];
                        du[c][0] += v * g[a][0];
                        du[c][1] += v * g[a][1];
                    }
                }
                let p: f64 = (0..4).map(|b| fluid[2 * nq2 + q1[b]] * psi[b]).sum();
                let ue = exact.velocity(x);
                let ge = exact.velocity_gradient(x);
                for c in 0..2 {
                    e[0] += w * (u[c] - ue[c]).powi(2);
                    e[1] += w * ((du[c][0] - ge[c][0]).powi(2) + (du[c][1] - ge[c][1]).powi(2));
                }
                e[2] += w * (p - exact.fluid_pressure(x)).powi(2);
            }
        }
    }

    let mesh = &disc.porous_mesh;
    for (ex, ey) in mesh.elements() {
        let q2 = mesh.q2_element(ex, ey);
        let o = mesh.element_origin(ex, ey);
        for (&t, &wt) in pts.iter().zip(&wts) {
            for (&s, &ws) in pts.iter().zip(&wts) {
                let w = ws * wt * h * h;
                let x = [o[0] + s * h, o[1] + t * h];
                let (phi, g) = q2_eval(s, t, h);
                let mut p = 0.0;
                let mut dp = [0.0; 2];
                for a in 0..9 {
                    let v = porous[q2[a]];
                    p += v * phi[a];
                    dp[0] += v * g[a][0];
                    dp[1] += v * g[a][1];
                }
                let ge = exact.porous_pressure_gradient(x);
                e[3] += w * (p - exact.porous_pressure_value(x)).powi(2);
                e[4] += w * ((dp[0] - ge[0]).powi(2) + (dp[1] - ge[1]).powi(2));
            }
        }
    }
    let e = e.map(f64::sqrt);
    ErrorNorms {
        velocity_l2: e[0],
        velocity_h1: e[1],
        fluid_pressure_l2: e[2],
        porous_pressure_l2: e[3],
        porous_pressure_h1: e[4],
    }
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn log_log_slope(h: &[f64], err: &[f64]) -> f64 {
    let n = h.len() as f64;
    let lx: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub h: f64,
    pub errors: ErrorNorms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub case: CaseLabel,
    pub rows: Vec<ConvergenceRow>,
    /// Fitted orders, same field layout as the errors.
    pub orders: ErrorNorms,
}

impl ConvergenceStudy {
    /// Porous pressure errors (L2 and H1) never increase under refinement.
    pub fn porous_decay_is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| {
            let (c, f) = (&w[0].errors, &w[1].errors);
            f.porous_pressure_l2 <= c.porous_pressure_l2 && f.porous_pressure_h1 <= c.porous_pressure_h1
        })
    }
}

/// Monolithic solves of the analytic case on each level, with fitted orders.
pub fn convergence_study(label: CaseLabel, levels: &[u32], exec: Execution) -> Result<ConvergenceStudy> {
    if levels.len() < 3 {
        return Err(Error::Parameter("a convergence study needs at least three levels".into()));
    }
    let rows = map_slice(exec, levels, |&level| -> Result<ConvergenceRow> {
        let cfg = CaseConfig::new(label, level)?;
        let disc = cfg.discretization()?;
        let exact = cfg.exact();
        let ip = InterfaceProblem::assemble(&disc, &exact, Execution::Sequential)?;
        let sol = ip.monolithic_solve()?;
        Ok(ConvergenceRow { level, h: cfg.h(), errors: error_norms(&disc, ip.system(), &sol, &exact) })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let slope = |f: fn(&ErrorNorms) -> f64| {
        let e: Vec<f64> = rows.iter().map(|r| f(&r.errors)).collect();
        if e.iter().all(|&v| v > 0.0) {
            log_log_slope(&h, &e)
        } else {
            f64::NAN
        }
    };
    let orders = ErrorNorms {
        velocity_l2: slope(|e| e.velocity_l2),
        velocity_h1: slope(|e| e.velocity_h1),
        fluid_pressure_l2: slope(|e| e.fluid_pressure_l2),
        porous_pressure_l2: slope(|e| e.porous_pressure_l2),
        porous_pressure_h1: slope(|e| e.porous_pressure_h1),
    };
    Ok(ConvergenceStudy { case: label, rows, orders })
}
