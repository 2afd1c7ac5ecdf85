//! Finite-element discretization of the coupled problem.
//!
//! The fluid uses Q2-Q1 Taylor-Hood elements, the porous medium Q2 elements.
//! Assembly happens in two stages: [`assemble_stokes`] / [`assemble_darcy`]
//! produce unconstrained matrices over raw node-based unknowns, then
//! [`apply_boundary_conditions`] eliminates Dirichlet unknowns, adds boundary
//! loads and splits everything into the interior / interface / pressure blocks
//! of [`CoupledSystem`].

pub mod assembly;
pub mod basis;
pub mod system;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{build_mesh, extract_interface, InterfaceTrace, RectDomain, Side, StructuredMesh};

pub use assembly::{assemble_coupling, assemble_darcy, assemble_stokes, RawSubsystem};
pub use system::{apply_boundary_conditions, CoupledSystem, DofMap, FluidBlocks, PorousBlocks, Slot};

/// Physical coefficients of the dimensionless coupled problem.
///
/// The permeability is `diag(eta1, eta2)`. `xi_f` and `eta_p` are derived on
/// demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub mu_f: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub alpha_bj: f64,
}

impl ProblemParams {
    pub fn new(mu_f: f64, eta1: f64, eta2: f64, alpha_bj: f64) -> Result<Self> {
        let finite = [mu_f, eta1, eta2, alpha_bj].iter().all(|v| v.is_finite());
        if !finite || mu_f <= 0.0 || eta1 <= 0.0 || eta2 <= 0.0 || alpha_bj < 0.0 {
            return Err(Error::Parameter(format!(
                "need mu_f > 0, eta1 > 0, eta2 > 0, alpha_BJ >= 0; got {mu_f}, {eta1}, {eta2}, {alpha_bj}"
            )));
        }
        Ok(Self { mu_f, eta1, eta2, alpha_bj })
    }

    pub fn isotropic(mu_f: f64, eta_p: f64, alpha_bj: f64) -> Result<Self> {
        Self::new(mu_f, eta_p, eta_p, alpha_bj)
    }

    /// Scalar permeability `sqrt(eta1 * eta2)`.
    pub fn eta_p(&self) -> f64 {
        (self.eta1 * self.eta2).sqrt()
    }

    /// Slip friction `alpha_BJ * sqrt(mu_f / (tau . eta . tau))` for the
    /// horizontal interface, tangent `(1, 0)`.
    pub fn xi_f(&self) -> f64 {
        self.alpha_bj * (self.mu_f / self.eta1).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeCondition {
    Dirichlet,
    Neumann,
}

/// Boundary condition type on each outer edge (the interface is handled
/// separately).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySetup {
    pub fluid_left: EdgeCondition,
    pub fluid_right: EdgeCondition,
    pub fluid_top: EdgeCondition,
    pub porous_left: EdgeCondition,
    pub porous_right: EdgeCondition,
    pub porous_bottom: EdgeCondition,
}

impl Default for BoundarySetup {
    /// Fluid: velocity on left/right, stress on top. Porous: pressure on
    /// bottom, flux on left/right.
    fn default() -> Self {
        use EdgeCondition::*;
        Self {
            fluid_left: Dirichlet,
            fluid_right: Dirichlet,
            fluid_top: Neumann,
            porous_left: Neumann,
            porous_right: Neumann,
            porous_bottom: Dirichlet,
        }
    }
}

impl BoundarySetup {
    pub fn all_dirichlet() -> Self {
        use EdgeCondition::*;
        Self {
            fluid_left: Dirichlet,
            fluid_right: Dirichlet,
            fluid_top: Dirichlet,
            porous_left: Dirichlet,
            porous_right: Dirichlet,
            porous_bottom: Dirichlet,
        }
    }

    pub fn fluid(&self, side: Side) -> Option<EdgeCondition> {
        match side {
            Side::Left => Some(self.fluid_left),
            Side::Right => Some(self.fluid_right),
            Side::Top => Some(self.fluid_top),
            Side::Bottom => None,
        }
    }

    pub fn porous(&self, side: Side) -> Option<EdgeCondition> {
        match side {
            Side::Left => Some(self.porous_left),
            Side::Right => Some(self.porous_right),
            Side::Bottom => Some(self.porous_bottom),
            Side::Top => None,
        }
    }

    /// Rejects splits that make one of the four interface subproblems
    /// singular.
    ///
    /// With the interface normal velocity prescribed, a fluid boundary
    /// without any stress edge leaves the pressure determined only up to a
    /// constant. Without any velocity edge the stress-driven fluid problem
    /// admits rigid motions. The porous problem needs a pressure edge once
    /// the interface carries a flux condition.
    pub fn validate(&self) -> Result<()> {
        let fluid: Vec<_> = [Side::Left, Side::Right, Side::Top].iter().filter_map(|&s| self.fluid(s)).collect();
        if !fluid.contains(&EdgeCondition::Neumann) {
            return Err(Error::Configuration(
                "fluid boundary has no stress edge: pressure is undetermined when the interface velocity is prescribed"
                    .into(),
            ));
        }
        if !fluid.contains(&EdgeCondition::Dirichlet) {
            return Err(Error::Configuration(
                "fluid boundary has no velocity edge: the stress-driven fluid problem is singular".into(),
            ));
        }
        let porous = [Side::Left, Side::Right, Side::Bottom].iter().filter_map(|&s| self.porous(s));
        if !porous.into_iter().any(|c| c == EdgeCondition::Dirichlet) {
            return Err(Error::Configuration(
                "porous boundary has no pressure edge: the flux-driven porous problem is singular".into(),
            ));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let tag = |c: EdgeCondition| match c {
            EdgeCondition::Dirichlet => "D",
            EdgeCondition::Neumann => "N",
        };
        format!(
            "fluid[left={},right={},top={}] porous[left={},right={},bottom={}]",
            tag(self.fluid_left),
            tag(self.fluid_right),
            tag(self.fluid_top),
            tag(self.porous_left),
            tag(self.porous_right),
            tag(self.porous_bottom)
        )
    }
}

/// Volume, boundary and interface data entering the discrete problem.
///
/// Normals passed in are outward unit normals of the subdomain that owns the
/// boundary.
pub trait ProblemData: Sync {
    fn fluid_force(&self, x: [f64; 2]) -> [f64; 2];
    /// Dirichlet velocity.
    fn fluid_velocity(&self, x: [f64; 2]) -> [f64; 2];
    /// Cauchy traction `(2 mu grad^s u - p I) n` on a stress edge.
    fn fluid_traction(&self, x: [f64; 2], normal: [f64; 2]) -> [f64; 2];
    /// Right-hand side `g` of the slip law `-(T n)_tau = xi u_tau + g` on the interface.
    fn slip_defect(&self, x: [f64; 2]) -> f64;
    fn porous_source(&self, x: [f64; 2]) -> f64;
    /// Dirichlet pressure.
    fn porous_pressure(&self, x: [f64; 2]) -> f64;
    /// Flux `(eta grad p) . n` on a flux edge.
    fn porous_flux(&self, x: [f64; 2], normal: [f64; 2]) -> f64;
}

/// Homogeneous data everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroData;

impl ProblemData for ZeroData {
    fn fluid_force(&self, _: [f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
    fn fluid_velocity(&self, _: [f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
    fn fluid_traction(&self, _: [f64; 2], _: [f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
    fn slip_defect(&self, _: [f64; 2]) -> f64 {
        0.0
    }
    fn porous_source(&self, _: [f64; 2]) -> f64 {
        0.0
    }
    fn porous_pressure(&self, _: [f64; 2]) -> f64 {
        0.0
    }
    fn porous_flux(&self, _: [f64; 2], _: [f64; 2]) -> f64 {
        0.0
    }
}

/// Meshes, interface trace and coefficients for one configuration.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub fluid_mesh: StructuredMesh,
    pub porous_mesh: StructuredMesh,
    pub trace: InterfaceTrace,
    pub params: ProblemParams,
    pub boundary: BoundarySetup,
    /// Points per direction of the tensor Gauss rule used in assembly.
    pub quadrature: usize,
}

impl Discretization {
    pub fn new(
        fluid: RectDomain,
        porous: RectDomain,
        n: usize,
        params: ProblemParams,
        boundary: BoundarySetup,
    ) -> Result<Self> {
        let ny_f = (fluid.height() / fluid.width() * n as f64).round() as usize;
        let ny_p = (porous.height() / porous.width() * n as f64).round() as usize;
        let fluid_mesh = build_mesh(fluid, n, ny_f.max(1))?;
        let porous_mesh = build_mesh(porous, n, ny_p.max(1))?;
        let trace = extract_interface(&fluid_mesh, &porous_mesh)?;
        Ok(Self { fluid_mesh, porous_mesh, trace, params, boundary, quadrature: 3 })
    }

    /// The benchmark geometry: fluid on `(0, 0.5) x (1, 1.5)`, porous medium on
    /// `(0, 0.5) x (0.5, 1)`, `h = 0.1 * 2^(1 - level)`.
    pub fn benchmark(level: u32, params: ProblemParams, boundary: BoundarySetup) -> Result<Self> {
        if level == 0 {
            return Err(Error::Parameter("mesh level starts at 1".into()));
        }
        let n = 5usize << (level - 1);
        Self::new(
            RectDomain::new(0.0, 0.5, 1.0, 1.5)?,
            RectDomain::new(0.0, 0.5, 0.5, 1.0)?,
            n,
            params,
            boundary,
        )
    }

    pub fn with_quadrature(mut self, points: usize) -> Self {
        self.quadrature = points;
        self
    }

    pub fn h(&self) -> f64 {
        self.fluid_mesh.h()
    }
}
