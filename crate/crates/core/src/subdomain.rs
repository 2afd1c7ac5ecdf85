//! Subdomain solves with prescribed interface values (essential) or
//! prescribed interface loads (natural).
//!
//! All four subdomain operators are factored once when [`Subdomains`] is
//! built; every later solve is a pair of triangular sweeps.

use crate::dense::{DenseCholesky, DenseMatrix};
use crate::error::{check_len, Result};
use crate::exec::{join, Execution};
use crate::fem::CoupledSystem;
use crate::sparse::{CsrMatrix, SparseLu};

/// Whether the volume and boundary data of the system enter a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loads {
    /// Use the assembled right-hand sides.
    Data,
    /// All data set to zero; the solve depends on the interface input only.
    Homogeneous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StokesState {
    pub u_interior: Vec<f64>,
    /// Interface normal velocity `u . n`.
    pub u_interface: Vec<f64>,
    pub pressure: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DarcyState {
    pub p_interior: Vec<f64>,
    pub p_interface: Vec<f64>,
}

/// Factored subdomain operators for one coupled system.
#[derive(Debug)]
pub struct Subdomains {
    system: CoupledSystem,
    stokes_essential: SparseLu,
    stokes_natural: SparseLu,
    darcy_essential: SparseLu,
    darcy_natural: SparseLu,
    mass: DenseCholesky,
}

fn pick(loads: Loads, v: &[f64]) -> Vec<f64> {
    match loads {
        Loads::Data => v.to_vec(),
        Loads::Homogeneous => vec![0.0; v.len()],
    }
}

impl Subdomains {
    pub fn new(system: CoupledSystem, exec: Execution) -> Result<Self> {
        let ((se, sn), (de, dn)) = join(
            exec,
            || join(exec, || SparseLu::new(&system.fluid_interior_matrix()), || SparseLu::new(&system.fluid_matrix())),
            || join(exec, || SparseLu::new(&system.porous.a_ii), || SparseLu::new(&system.porous_matrix())),
        );
        let mass = DenseMatrix::from_sparse(&system.c_fp).cholesky()?;
        Ok(Self {
            stokes_essential: se?,
            stokes_natural: sn?,
            darcy_essential: de?,
            darcy_natural: dn?,
            mass,
            system,
        })
    }

    pub fn system(&self) -> &CoupledSystem {
        &self.system
    }

    pub fn n_interface(&self) -> usize {
        self.system.n_interface()
    }

    /// The interface mass matrix `C` (symmetric positive definite).
    pub fn interface_mass(&self) -> &CsrMatrix {
        &self.system.c_fp
    }

    /// `C^{-1} v`.
    pub fn mass_solve(&self, v: &[f64]) -> Vec<f64> {
        self.mass.solve(v)
    }

    /// Fluid solve with the interface normal velocity fixed to `lambda`.
    pub fn stokes_solve_essential(&self, lambda: &[f64], loads: Loads) -> Result<StokesState> {
        let f = &self.system.fluid;
        check_len(self.n_interface(), lambda.len())?;
        let mut rhs_i = pick(loads, &f.rhs_i);
        let mut rhs_p = pick(loads, &f.rhs_div);
        f.a_ig.mul_add(lambda, -1.0, &mut rhs_i);
        f.g_g.mul_transpose_add(lambda, -1.0, &mut rhs_p);
        let ni = rhs_i.len();
        rhs_i.extend(rhs_p);
        let mut x = self.stokes_essential.solve(&rhs_i);
        let pressure = x.split_off(ni);
        Ok(StokesState { u_interior: x, u_interface: lambda.to_vec(), pressure })
    }

    /// Fluid solve with the extra interface load `sigma` added to the
    /// interface rows.
    pub fn stokes_solve_natural(&self, sigma: &[f64], loads: Loads) -> Result<StokesState> {
        let f = &self.system.fluid;
        let d = &self.system.fluid_dofs;
        check_len(self.n_interface(), sigma.len())?;
        let mut rhs_g = pick(loads, &f.rhs_g);
        rhs_g.iter_mut().zip(sigma).for_each(|(r, s)| *r += s);
        let rhs = [pick(loads, &f.rhs_i), rhs_g, pick(loads, &f.rhs_div)].concat();
        let x = self.stokes_natural.solve(&rhs);
        Ok(StokesState {
            u_interior: x[d.interior()].to_vec(),
            u_interface: x[d.interface()].to_vec(),
            pressure: x[d.tail()].to_vec(),
        })
    }

    /// Interface-row residual of the fluid equations, `A_GI u_I + A_GG u_G +
    /// G_G p - f_G`. For a state from an essential solve this is the discrete
    /// normal stress functional acting on the interface test functions.
    pub fn stokes_interface_residual(&self, s: &StokesState, loads: Loads) -> Vec<f64> {
        let f = &self.system.fluid;
        let mut r: Vec<f64> = pick(loads, &f.rhs_g).iter().map(|v| -v).collect();
        f.a_gi.mul_add(&s.u_interior, 1.0, &mut r);
        f.a_gg.mul_add(&s.u_interface, 1.0, &mut r);
        f.g_g.mul_add(&s.pressure, 1.0, &mut r);
        r
    }

    /// Porous solve with the interface pressure fixed to `p_gamma`.
    pub fn darcy_solve_essential(&self, p_gamma: &[f64], loads: Loads) -> Result<DarcyState> {
        let p = &self.system.porous;
        check_len(self.n_interface(), p_gamma.len())?;
        let mut rhs = pick(loads, &p.rhs_i);
        p.a_ig.mul_add(p_gamma, -1.0, &mut rhs);
        let p_interior = self.darcy_essential.solve(&rhs);
        Ok(DarcyState { p_interior, p_interface: p_gamma.to_vec() })
    }

    /// Porous solve with the extra interface load `load` added to the
    /// interface rows.
    pub fn darcy_solve_natural(&self, load: &[f64], loads: Loads) -> Result<DarcyState> {
        let p = &self.system.porous;
        let d = &self.system.porous_dofs;
        check_len(self.n_interface(), load.len())?;
        let mut rhs_g = pick(loads, &p.rhs_g);
        rhs_g.iter_mut().zip(load).for_each(|(r, s)| *r += s);
        let x = self.darcy_natural.solve(&[pick(loads, &p.rhs_i), rhs_g].concat());
        Ok(DarcyState { p_interior: x[d.interior()].to_vec(), p_interface: x[d.interface()].to_vec() })
    }

    /// `A_GI p_I + A_GG p_G - f_G`: the discrete flux functional
    /// `-((eta grad p) . n_p, q)` on the interface.
    pub fn darcy_interface_residual(&self, s: &DarcyState, loads: Loads) -> Vec<f64> {
        let p = &self.system.porous;
        let mut r: Vec<f64> = pick(loads, &p.rhs_g).iter().map(|v| -v).collect();
        p.a_gi.mul_add(&s.p_interior, 1.0, &mut r);
        p.a_gg.mul_add(&s.p_interface, 1.0, &mut r);
        r
    }
}
