//! The interface problem `Sigma lambda = b` with `Sigma = Sigma_f + Sigma_p`
//! and the weighted Neumann-Neumann preconditioner
//! `P = alpha_f Sigma_f^{-1} + alpha_p Sigma_p^{-1}`.
//!
//! The unknown `lambda` is the normal fluid velocity `u . n` at the interface
//! nodes. `Sigma_f lambda` is the discrete normal stress functional of the
//! fluid extension of `lambda`; `Sigma_p lambda = C A_S^{-1} C^T lambda` where
//! `A_S` is the discrete Steklov-Poincare operator of the porous problem and
//! `C` the interface mass matrix.
//!
//! All operators here are matrix free and apply one or two subdomain solves.

use serde::Serialize;

use crate::dense::DenseMatrix;
use crate::error::{check_len, Error, Result};
use crate::exec::{join, map_range, Execution};
use crate::fem::{CoupledSystem, Discretization, ProblemData};
use crate::krylov::{finite, norm, trivial, LinearOperator, Method, Recorder, Solution, SolverOptions};
use crate::sparse::SparseLu;
use crate::subdomain::{Loads, Subdomains};
use crate::weights::WeightPair;

/// Largest interface size accepted by [`dense_oracle`].
pub const ORACLE_LIMIT: usize = 21;

#[derive(Debug)]
pub struct InterfaceProblem {
    subdomains: Subdomains,
    exec: Execution,
}

/// A solution of the coupled system in free-unknown ordering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullSolution {
    /// `[u_I | lambda | p_f]`.
    pub fluid: Vec<f64>,
    /// `[p_I | p_G]`.
    pub porous: Vec<f64>,
}

/// Relative max-norm differences between two solutions, field by field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldDifference {
    pub velocity: f64,
    pub fluid_pressure: f64,
    pub porous_pressure: f64,
}

impl FieldDifference {
    pub fn max(&self) -> f64 {
        self.velocity.max(self.fluid_pressure).max(self.porous_pressure)
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}

/// One nodal value with its coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodalValue {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

/// A solution expanded to mesh nodes, Dirichlet values included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalFields {
    pub velocity_x: Vec<NodalValue>,
    pub velocity_y: Vec<NodalValue>,
    pub fluid_pressure: Vec<NodalValue>,
    pub porous_pressure: Vec<NodalValue>,
}

impl FullSolution {
    pub fn nodal(&self, disc: &Discretization, system: &CoupledSystem) -> NodalFields {
        let (fm, pm) = (&disc.fluid_mesh, &disc.porous_mesh);
        let f = system.fluid_dofs.expand(&self.fluid);
        let p = system.porous_dofs.expand(&self.porous);
        let at = |[x, y]: [f64; 2], value: f64| NodalValue { x, y, value };
        let nq2 = fm.q2_node_count();
        NodalFields {
            velocity_x: (0..nq2).map(|n| at(fm.q2_coord(n), f[2 * n])).collect(),
            velocity_y: (0..nq2).map(|n| at(fm.q2_coord(n), f[2 * n + 1])).collect(),
            fluid_pressure: (0..fm.q1_node_count()).map(|n| at(fm.q1_coord(n), f[2 * nq2 + n])).collect(),
            porous_pressure: (0..pm.q2_node_count()).map(|n| at(pm.q2_coord(n), p[n])).collect(),
        }
    }

    pub fn relative_difference(&self, reference: &FullSolution, system: &CoupledSystem) -> FieldDifference {
        let split = system.fluid_dofs.tail().start;
        FieldDifference {
            velocity: rel_diff(&self.fluid[..split], &reference.fluid[..split]),
            fluid_pressure: rel_diff(&self.fluid[split..], &reference.fluid[split..]),
            porous_pressure: rel_diff(&self.porous, &reference.porous),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl InterfaceProblem {
    pub fn new(system: CoupledSystem, exec: Execution) -> Result<Self> {
        Ok(Self { subdomains: Subdomains::new(system, exec)?, exec })
    }

    pub fn assemble(disc: &Discretization, data: &dyn ProblemData, exec: Execution) -> Result<Self> {
        disc.boundary.validate()?;
        Self::new(CoupledSystem::assemble(disc, data, exec)?, exec)
    }

    pub fn subdomains(&self) -> &Subdomains {
        &self.subdomains
    }

    pub fn system(&self) -> &CoupledSystem {
        self.subdomains.system()
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn dim(&self) -> usize {
        self.subdomains.n_interface()
    }

    pub fn apply_sigma_f(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let s = self.subdomains.stokes_solve_essential(lambda, Loads::Homogeneous)?;
        Ok(self.subdomains.stokes_interface_residual(&s, Loads::Homogeneous))
    }

    pub fn apply_sigma_p(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), lambda.len())?;
        let c = self.subdomains.interface_mass();
        let mut load = vec![0.0; self.dim()];
        c.mul_transpose_add(lambda, 1.0, &mut load);
        let s = self.subdomains.darcy_solve_natural(&load, Loads::Homogeneous)?;
        Ok(c.mul_vec(&s.p_interface))
    }

    pub fn apply_sigma(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let (f, p) = join(self.exec, || self.apply_sigma_f(lambda), || self.apply_sigma_p(lambda));
        let (mut f, p) = (f?, p?);
        f.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
        Ok(f)
    }

    /// `Sigma_f^{-1} sigma`: a fluid solve with interface stress load `sigma`.
    pub fn apply_sigma_f_inv(&self, sigma: &[f64]) -> Result<Vec<f64>> {
        Ok(self.subdomains.stokes_solve_natural(sigma, Loads::Homogeneous)?.u_interface)
    }

    /// `Sigma_p^{-1} sigma = C^{-1} A_S C^{-1} sigma`: a porous solve with
    /// interface pressure `C^{-1} sigma`.
    pub fn apply_sigma_p_inv(&self, sigma: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), sigma.len())?;
        let q = self.subdomains.mass_solve(sigma);
        let s = self.subdomains.darcy_solve_essential(&q, Loads::Homogeneous)?;
        Ok(self.subdomains.mass_solve(&self.subdomains.darcy_interface_residual(&s, Loads::Homogeneous)))
    }

    /// `P r = alpha_f Sigma_f^{-1} r + alpha_p Sigma_p^{-1} r`; the two
    /// subdomain solves are independent and run concurrently.
    pub fn apply_precond(&self, w: WeightPair, r: &[f64]) -> Result<Vec<f64>> {
        let (f, p) = join(self.exec, || self.apply_sigma_f_inv(r), || self.apply_sigma_p_inv(r));
        let (f, p) = (f?, p?);
        Ok(f.iter().zip(&p).map(|(a, b)| w.alpha_f * a + w.alpha_p * b).collect())
    }

    /// Right-hand side of the interface problem: minus the interface residual
    /// of the subdomain solutions with `lambda = 0`.
    pub fn reduced_rhs(&self) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.dim()];
        self.interface_residual(&zero).map(|r| r.into_iter().map(|v| -v).collect())
    }

    /// `Sigma lambda - b`, computed directly from data-carrying subdomain solves.
    pub fn interface_residual(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let sd = &self.subdomains;
        let c = sd.interface_mass();
        let (fluid, porous) = join(
            self.exec,
            || -> Result<Vec<f64>> {
                let s = sd.stokes_solve_essential(lambda, Loads::Data)?;
                Ok(sd.stokes_interface_residual(&s, Loads::Data))
            },
            || -> Result<Vec<f64>> {
                let mut load = vec![0.0; lambda.len()];
                c.mul_transpose_add(lambda, 1.0, &mut load);
                Ok(sd.darcy_solve_natural(&load, Loads::Data)?.p_interface)
            },
        );
        let mut r = fluid?;
        c.mul_add(&porous?, 1.0, &mut r);
        Ok(r)
    }

    /// One Neumann-Neumann sweep written in terms of subdomain problems:
    ///
    /// 1. fluid solve with `u . n = lambda` and porous solve with interface
    ///    flux matching `lambda`; their interface stress mismatch is `s`;
    /// 2. fluid correction with interface stress `-s`, porous correction with
    ///    interface pressure `-C^{-1} s`;
    /// 3. `lambda += alpha_f (fluid correction normal velocity)
    ///    + alpha_p (porous correction normal flux)`.
    pub fn nn_step(&self, lambda: &[f64], w: WeightPair) -> Result<Vec<f64>> {
        let sd = &self.subdomains;
        let minus_s: Vec<f64> = self.interface_residual(lambda)?.into_iter().map(|v| -v).collect();
        let (v, flux) = join(
            self.exec,
            || -> Result<Vec<f64>> { Ok(sd.stokes_solve_natural(&minus_s, Loads::Homogeneous)?.u_interface) },
            || -> Result<Vec<f64>> {
                let q = sd.darcy_solve_essential(&sd.mass_solve(&minus_s), Loads::Homogeneous)?;
                Ok(sd.mass_solve(&sd.darcy_interface_residual(&q, Loads::Homogeneous)))
            },
        );
        let (v, flux) = (v?, flux?);
        Ok(lambda.iter().zip(v.iter().zip(&flux)).map(|(l, (a, b))| l + w.alpha_f * a + w.alpha_p * b).collect())
    }

    /// Repeated [`nn_step`](Self::nn_step) from `lambda = 0`, stopped on the
    /// relative interface residual. Reported as Richardson, which it equals;
    /// `opts.relaxation` is ignored.
    pub fn nn_iterate(&self, w: WeightPair, opts: &SolverOptions) -> Result<Solution> {
        let n = self.dim();
        let bnorm = norm(&self.reduced_rhs()?);
        if bnorm == 0.0 {
            return Ok(trivial(Method::Richardson, n, opts));
        }
        let mut rec = Recorder::new(Method::Richardson, opts, n);
        let mut lambda = vec![0.0; n];
        for k in 1..=opts.max_iter {
            lambda = self.nn_step(&lambda, w)?;
            finite(&lambda, k)?;
            let rel = norm(&self.interface_residual(&lambda)?) / bnorm;
            rec.push(rel, &lambda);
            if rel <= opts.tol {
                return Ok(rec.finish(lambda, true));
            }
        }
        Ok(rec.finish(lambda, false))
    }

    /// Fluid and porous fields belonging to the interface value `lambda`.
    pub fn recover_full_solution(&self, lambda: &[f64]) -> Result<FullSolution> {
        let sd = &self.subdomains;
        let c = sd.interface_mass();
        let (fluid, porous) = join(
            self.exec,
            || sd.stokes_solve_essential(lambda, Loads::Data),
            || {
                let mut load = vec![0.0; lambda.len()];
                c.mul_transpose_add(lambda, 1.0, &mut load);
                sd.darcy_solve_natural(&load, Loads::Data)
            },
        );
        let (f, p) = (fluid?, porous?);
        Ok(FullSolution {
            fluid: [f.u_interior, f.u_interface, f.pressure].concat(),
            porous: [p.p_interior, p.p_interface].concat(),
        })
    }

    /// Direct sparse LU solve of the whole coupled system.
    pub fn monolithic_solve(&self) -> Result<FullSolution> {
        let sys = self.system();
        let x = SparseLu::new(&sys.monolithic_matrix())?.solve(&sys.monolithic_rhs());
        let nf = sys.fluid_dofs.n_free();
        Ok(FullSolution { fluid: x[..nf].to_vec(), porous: x[nf..].to_vec() })
    }

    /// Matrix of a linear interface map, one application per column.
    pub fn assemble_operator(&self, apply: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync) -> Result<DenseMatrix> {
        let n = self.dim();
        let cols = map_range(self.exec, n, |j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            apply(&e)
        });
        let cols = cols.into_iter().collect::<Result<Vec<_>>>()?;
        let mut it = cols.into_iter();
        Ok(DenseMatrix::from_columns(n, n, |_| it.next().unwrap()))
    }

    pub fn sigma_operator(&self) -> SigmaOperator<'_> {
        SigmaOperator(self)
    }

    pub fn preconditioner(&self, weights: WeightPair) -> Preconditioner<'_> {
        Preconditioner { problem: self, weights }
    }

    /// Energy `<Sigma x, x>`, handy for definiteness probes.
    pub fn sigma_energy(&self, x: &[f64]) -> Result<f64> {
        Ok(dot(&self.apply_sigma(x)?, x))
    }
}

/// `Sigma` as a [`LinearOperator`].
#[derive(Debug, Clone, Copy)]
pub struct SigmaOperator<'a>(&'a InterfaceProblem);

impl LinearOperator for SigmaOperator<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.apply_sigma(x)
    }
    fn name(&self) -> String {
        "interface Schur complement".into()
    }
}

/// The weighted Neumann-Neumann preconditioner as a [`LinearOperator`].
#[derive(Debug, Clone, Copy)]
pub struct Preconditioner<'a> {
    problem: &'a InterfaceProblem,
    weights: WeightPair,
}

impl LinearOperator for Preconditioner<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.problem.apply_precond(self.weights, x)
    }
    fn name(&self) -> String {
        "Neumann-Neumann preconditioner".into()
    }
}

/// `Sigma_f` and `Sigma_p` formed explicitly from the blocks with dense
/// factorizations. Independent of the sparse solvers; only for small
/// interfaces.
pub fn dense_oracle(system: &CoupledSystem) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = system.n_interface();
    if n > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge { limit: ORACLE_LIMIT, got: n });
    }
    let f = &system.fluid;
    // Sigma_f = A_GG - [A_GI G_G] K^{-1} [A_IG; G_G^T], K = [[A_II, G_I], [G_I^T, 0]]
    let k = DenseMatrix::from_sparse(&system.fluid_interior_matrix()).lu()?;
    let ni = f.a_ii.nrows();
    let a_ig = DenseMatrix::from_sparse(&f.a_ig);
    let g_gt = DenseMatrix::from_sparse(&f.g_g.transpose());
    let a_gi = DenseMatrix::from_sparse(&f.a_gi);
    let g_g = DenseMatrix::from_sparse(&f.g_g);
    let mut sigma_f = DenseMatrix::from_sparse(&f.a_gg);
    for j in 0..n {
        let rhs: Vec<f64> = (0..ni).map(|i| a_ig[(i, j)]).chain((0..g_gt.nrows()).map(|i| g_gt[(i, j)])).collect();
        let y = k.solve(&rhs);
        let cu = a_gi.mul_vec(&y[..ni]);
        let cp = g_g.mul_vec(&y[ni..]);
        for i in 0..n {
            sigma_f[(i, j)] -= cu[i] + cp[i];
        }
    }

    // Sigma_p = C S^{-1} C^T, S = Ap_GG - Ap_GI Ap_II^{-1} Ap_IG
    let p = &system.porous;
    let a_ii = DenseMatrix::from_sparse(&p.a_ii).lu()?;
    let pa_ig = DenseMatrix::from_sparse(&p.a_ig);
    let pa_gi = DenseMatrix::from_sparse(&p.a_gi);
    let mut s = DenseMatrix::from_sparse(&p.a_gg);
    for j in 0..n {
        let col: Vec<f64> = (0..pa_ig.nrows()).map(|i| pa_ig[(i, j)]).collect();
        let y = pa_gi.mul_vec(&a_ii.solve(&col));
        for i in 0..n {
            s[(i, j)] -= y[i];
        }
    }
    let s_lu = s.lu()?;
    let c = DenseMatrix::from_sparse(&system.c_fp);
    let ct = c.transpose();
    let s_inv_ct = DenseMatrix::from_columns(n, n, |j| s_lu.solve(&(0..n).map(|i| ct[(i, j)]).collect::<Vec<_>>()));
    Ok((sigma_f, c.matmul(&s_inv_ct)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{BoundarySetup, ProblemParams, ZeroData};

    fn problem(level: u32, mu: f64, eta: f64) -> InterfaceProblem {
        let p = ProblemParams::isotropic(mu, eta, 1.0).unwrap();
        let d = Discretization::benchmark(level, p, BoundarySetup::default()).unwrap();
        InterfaceProblem::assemble(&d, &ZeroData, Execution::Parallel).unwrap()
    }

    fn close(a: &DenseMatrix, b: &DenseMatrix, tol: f64) -> bool {
        let scale = b.max_abs();
        a.add_scaled(b, -1.0).max_abs() <= tol * scale
    }

    #[test]
    fn matrix_free_operators_match_oracle() {
        let ip = problem(1, 1.0, 1.0);
        let (sf, sp) = dense_oracle(ip.system()).unwrap();
        assert!(close(&ip.assemble_operator(|x| ip.apply_sigma_f(x)).unwrap(), &sf, 1e-10));
        assert!(close(&ip.assemble_operator(|x| ip.apply_sigma_p(x)).unwrap(), &sp, 1e-10));
    }

    #[test]
    fn inverses_are_inverses() {
        let ip = problem(1, 10.0, 4e-9);
        let x: Vec<f64> = (0..ip.dim()).map(|i| (0.3 * i as f64).cos()).collect();
        let y = ip.apply_sigma_f_inv(&ip.apply_sigma_f(&x).unwrap()).unwrap();
        let z = ip.apply_sigma_p_inv(&ip.apply_sigma_p(&x).unwrap()).unwrap();
        for i in 0..ip.dim() {
            assert!((y[i] - x[i]).abs() < 1e-8, "fluid {i}");
            assert!((z[i] - x[i]).abs() < 1e-8, "porous {i}");
        }
    }

    #[test]
    fn sigma_is_spd() {
        let ip = problem(1, 1.0, 4e-7);
        let s = ip.assemble_operator(|x| ip.apply_sigma(x)).unwrap();
        assert!(s.symmetry_defect() < 1e-10);
        assert!(s.symmetric_eigenvalues().unwrap()[0] > 0.0);
    }

    #[test]
    fn oracle_refuses_large_interfaces() {
        let p = ProblemParams::isotropic(1.0, 1.0, 1.0).unwrap();
        let d = Discretization::benchmark(3, p, BoundarySetup::default()).unwrap();
        let sys = CoupledSystem::assemble(&d, &ZeroData, Execution::Sequential).unwrap();
        assert!(matches!(dense_oracle(&sys), Err(Error::OracleTooLarge { limit: 21, got: 41 })));
    }

    #[test]
    fn homogeneous_problem_has_zero_rhs() {
        let ip = problem(1, 1.0, 1.0);
        assert!(ip.reduced_rhs().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn monolithic_solution_of_zero_data_is_zero() {
        let ip = problem(1, 1.0, 1.0);
        let s = ip.monolithic_solve().unwrap();
        assert!(s.fluid.iter().chain(&s.porous).all(|&v| v == 0.0));
    }

    #[test]
    fn nn_iteration_reports_like_richardson() {
        use crate::manufactured::{CaseConfig, CaseLabel};
        let cfg = CaseConfig::new(CaseLabel::B, 1).unwrap();
        let ip = cfg.interface_problem(Execution::Sequential).unwrap();
        let w = cfg.optimal_weights();
        let opts = SolverOptions::default();
        let nn = ip.nn_iterate(w, &opts).unwrap();
        let b = ip.reduced_rhs().unwrap();
        let rich = crate::krylov::richardson(&ip.sigma_operator(), &ip.preconditioner(w), &b, &opts).unwrap();
        assert!(nn.report.converged);
        assert_eq!(nn.report.iterations, rich.report.iterations);
        for (a, b) in nn.report.residual_history.iter().zip(&rich.report.residual_history) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn nodal_fields_cover_all_nodes() {
        use crate::manufactured::{CaseConfig, CaseLabel};
        let cfg = CaseConfig::new(CaseLabel::A, 1).unwrap();
        let disc = cfg.discretization().unwrap();
        let ip = cfg.interface_problem(Execution::Sequential).unwrap();
        let nodal = ip.monolithic_solve().unwrap().nodal(&disc, ip.system());
        assert_eq!(nodal.velocity_x.len(), 121);
        assert_eq!(nodal.fluid_pressure.len(), 36);
        assert_eq!(nodal.porous_pressure.len(), 121);
        let exact = cfg.exact();
        for v in &nodal.velocity_y {
            assert!((v.value - exact.velocity([v.x, v.y])[1]).abs() < 1e-9);
        }
    }
}
