//! Degree-of-freedom bookkeeping, Dirichlet elimination and the block form of
//! the coupled system.
//!
//! Free fluid unknowns are ordered `[interior velocity | interface normal
//! velocity | pressure]`, free porous unknowns `[interior | interface]`.
//!
//! On the interface the outward fluid normal is `(0, -1)`, so the interface
//! unknown is `lambda = u . n = -u_2`. This is the single place where that sign
//! enters: the raw `u_2` unknown of an interface node maps to free unknown
//! `lambda` with sign `-1`.

use serde::Serialize;

use super::assembly::{assemble_coupling, assemble_darcy, assemble_stokes, side_load, velocity_dof, RawSubsystem};
use super::{Discretization, EdgeCondition, ProblemData};
use crate::error::Result;
use crate::exec::{join, Execution};
use crate::mesh::Side;
use crate::sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Slot {
    /// Free unknown `index`; raw value = `sign * free value`.
    Free { index: usize, sign: f64 },
    /// Eliminated Dirichlet unknown with its prescribed value.
    Fixed(f64),
}

/// Map from raw node-based unknowns to free unknowns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofMap {
    pub slots: Vec<Slot>,
    pub n_interior: usize,
    pub n_interface: usize,
    /// Trailing block after the interface (fluid pressure; empty for porous).
    pub n_tail: usize,
}

impl DofMap {
    pub fn n_free(&self) -> usize {
        self.n_interior + self.n_interface + self.n_tail
    }

    pub fn fixed_count(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, Slot::Fixed(_))).count()
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        0..self.n_interior
    }

    pub fn interface(&self) -> std::ops::Range<usize> {
        self.n_interior..self.n_interior + self.n_interface
    }

    pub fn tail(&self) -> std::ops::Range<usize> {
        self.n_interior + self.n_interface..self.n_free()
    }

    /// Raw values from free values (Dirichlet data filled in).
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        self.slots
            .iter()
            .map(|s| match *s {
                Slot::Free { index, sign } => sign * free[index],
                Slot::Fixed(g) => g,
            })
            .collect()
    }

    /// Free values from raw values.
    pub fn restrict(&self, raw: &[f64]) -> Vec<f64> {
        let mut free = vec![0.0; self.n_free()];
        for (r, s) in self.slots.iter().enumerate() {
            if let Slot::Free { index, sign } = *s {
                free[index] = sign * raw[r];
            }
        }
        free
    }
}

/// Fluid blocks. `g_*` couple velocity rows to pressure columns; the
/// pressure-pressure block is zero and the pressure rows are `g^T`.
#[derive(Debug, Clone)]
pub struct FluidBlocks {
    pub a_ii: CsrMatrix,
    pub a_ig: CsrMatrix,
    pub a_gi: CsrMatrix,
    pub a_gg: CsrMatrix,
    pub g_i: CsrMatrix,
    pub g_g: CsrMatrix,
    pub rhs_i: Vec<f64>,
    pub rhs_g: Vec<f64>,
    /// Continuity right-hand side; nonzero only through Dirichlet lifting.
    pub rhs_div: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PorousBlocks {
    pub a_ii: CsrMatrix,
    pub a_ig: CsrMatrix,
    pub a_gi: CsrMatrix,
    pub a_gg: CsrMatrix,
    pub rhs_i: Vec<f64>,
    pub rhs_g: Vec<f64>,
}

/// The constrained coupled system
///
/// ```text
/// [ A_II   A_IG   G_I   0      0     ] [u_I ]   [f_I ]
/// [ A_GI   A_GG   G_G   0      C     ] [u_G ]   [f_G ]
/// [ G_I^T  G_G^T  0     0      0     ] [p_f ] = [f_d ]
/// [ 0      0      0     Ap_II  Ap_IG ] [p_I ]   [fp_I]
/// [ 0     -C^T    0     Ap_GI  Ap_GG ] [p_G ]   [fp_G]
/// ```
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub fluid: FluidBlocks,
    pub porous: PorousBlocks,
    pub c_fp: CsrMatrix,
    pub fluid_dofs: DofMap,
    pub porous_dofs: DofMap,
}

impl CoupledSystem {
    /// Assemble both subdomains (concurrently when enabled) and apply
    /// boundary conditions.
    pub fn assemble(disc: &Discretization, data: &dyn ProblemData, exec: Execution) -> Result<Self> {
        let q = disc.quadrature;
        let (fluid, porous) = join(
            exec,
            || assemble_stokes(&disc.fluid_mesh, &disc.params, &disc.trace, data, q),
            || assemble_darcy(&disc.porous_mesh, &disc.params, data, q),
        );
        let c_fp = assemble_coupling(&disc.trace)?;
        Ok(apply_boundary_conditions(disc, data, fluid, porous, c_fp))
    }

    pub fn n_interface(&self) -> usize {
        self.fluid_dofs.n_interface
    }

    /// Fluid matrix over all free unknowns, `[I | G | P]` ordering.
    pub fn fluid_matrix(&self) -> CsrMatrix {
        let f = &self.fluid;
        let (ni, ng, np) = (self.fluid_dofs.n_interior, self.fluid_dofs.n_interface, self.fluid_dofs.n_tail);
        let n = ni + ng + np;
        let mut b = TripletBuilder::with_capacity(n, n, f.a_ii.nnz() + 4 * f.g_i.nnz());
        b.push_block(&f.a_ii, 0, 0, 1.0);
        b.push_block(&f.a_ig, 0, ni, 1.0);
        b.push_block(&f.a_gi, ni, 0, 1.0);
        b.push_block(&f.a_gg, ni, ni, 1.0);
        b.push_block(&f.g_i, 0, ni + ng, 1.0);
        b.push_block(&f.g_g, ni, ni + ng, 1.0);
        b.push_block_transposed(&f.g_i, ni + ng, 0, 1.0);
        b.push_block_transposed(&f.g_g, ni + ng, ni, 1.0);
        b.build()
    }

    /// Fluid saddle-point matrix with the interface velocity removed,
    /// `[I | P]` ordering.
    pub fn fluid_interior_matrix(&self) -> CsrMatrix {
        let f = &self.fluid;
        let (ni, np) = (self.fluid_dofs.n_interior, self.fluid_dofs.n_tail);
        let mut b = TripletBuilder::with_capacity(ni + np, ni + np, f.a_ii.nnz() + 2 * f.g_i.nnz());
        b.push_block(&f.a_ii, 0, 0, 1.0);
        b.push_block(&f.g_i, 0, ni, 1.0);
        b.push_block_transposed(&f.g_i, ni, 0, 1.0);
        b.build()
    }

    pub fn porous_matrix(&self) -> CsrMatrix {
        let p = &self.porous;
        let (ni, ng) = (self.porous_dofs.n_interior, self.porous_dofs.n_interface);
        let mut b = TripletBuilder::new(ni + ng, ni + ng);
        b.push_block(&p.a_ii, 0, 0, 1.0);
        b.push_block(&p.a_ig, 0, ni, 1.0);
        b.push_block(&p.a_gi, ni, 0, 1.0);
        b.push_block(&p.a_gg, ni, ni, 1.0);
        b.build()
    }

    /// The full coupled matrix: free fluid unknowns followed by free porous
    /// unknowns.
    pub fn monolithic_matrix(&self) -> CsrMatrix {
        let nf = self.fluid_dofs.n_free();
        let np = self.porous_dofs.n_free();
        let (gf, gp) = (self.fluid_dofs.interface().start, self.porous_dofs.interface().start);
        let fluid = self.fluid_matrix();
        let porous = self.porous_matrix();
        let mut b = TripletBuilder::with_capacity(nf + np, nf + np, fluid.nnz() + porous.nnz() + 2 * self.c_fp.nnz());
        b.push_block(&fluid, 0, 0, 1.0);
        b.push_block(&porous, nf, nf, 1.0);
        b.push_block(&self.c_fp, gf, nf + gp, 1.0);
        b.push_block_transposed(&self.c_fp, nf + gp, gf, -1.0);
        b.build()
    }

    pub fn monolithic_rhs(&self) -> Vec<f64> {
        let f = &self.fluid;
        let p = &self.porous;
        [&f.rhs_i[..], &f.rhs_g, &f.rhs_div, &p.rhs_i, &p.rhs_g].concat()
    }
}

fn fluid_dofs(disc: &Discretization, data: &dyn ProblemData) -> DofMap {
    let mesh = &disc.fluid_mesh;
    let nq2 = mesh.q2_node_count();
    let nq1 = mesh.q1_node_count();
    let dirichlet: Vec<Side> = [Side::Left, Side::Right, Side::Top]
        .into_iter()
        .filter(|&s| disc.boundary.fluid(s) == Some(EdgeCondition::Dirichlet))
        .collect();
    let mut slots = vec![Slot::Fixed(0.0); 2 * nq2 + nq1];
    let mut next = 0;
    let mut free = || {
        next += 1;
        Slot::Free { index: next - 1, sign: 1.0 }
    };
    for node in 0..nq2 {
        let on_gamma = mesh.q2_on_side(node, Side::Bottom);
        let on_dirichlet = dirichlet.iter().any(|&s| mesh.q2_on_side(node, s));
        let g = if on_dirichlet { data.fluid_velocity(mesh.q2_coord(node)) } else { [0.0; 2] };
        slots[velocity_dof(node, 0)] = if on_dirichlet { Slot::Fixed(g[0]) } else { free() };
        if !on_gamma {
            slots[velocity_dof(node, 1)] = if on_dirichlet { Slot::Fixed(g[1]) } else { free() };
        }
    }
    let n_interior = next;
    let n_interface = disc.trace.len();
    for (i, &node) in disc.trace.fluid_side_nodes.iter().enumerate() {
        slots[velocity_dof(node, 1)] = Slot::Free { index: n_interior + i, sign: -1.0 };
    }
    for m in 0..nq1 {
        slots[2 * nq2 + m] = Slot::Free { index: n_interior + n_interface + m, sign: 1.0 };
    }
    DofMap { slots, n_interior, n_interface, n_tail: nq1 }
}

fn porous_dofs(disc: &Discretization, data: &dyn ProblemData) -> DofMap {
    let mesh = &disc.porous_mesh;
    let dirichlet: Vec<Side> = [Side::Left, Side::Right, Side::Bottom]
        .into_iter()
        .filter(|&s| disc.boundary.porous(s) == Some(EdgeCondition::Dirichlet))
        .collect();
    let mut slots = vec![Slot::Fixed(0.0); mesh.q2_node_count()];
    let mut next = 0;
    for (node, slot) in slots.iter_mut().enumerate() {
        if mesh.q2_on_side(node, Side::Top) {
            continue;
        }
        if dirichlet.iter().any(|&s| mesh.q2_on_side(node, s)) {
            *slot = Slot::Fixed(data.porous_pressure(mesh.q2_coord(node)));
        } else {
            *slot = Slot::Free { index: next, sign: 1.0 };
            next += 1;
        }
    }
    for (i, &node) in disc.trace.porous_side_nodes.iter().enumerate() {
        slots[node] = Slot::Free { index: next + i, sign: 1.0 };
    }
    DofMap { slots, n_interior: next, n_interface: disc.trace.len(), n_tail: 0 }
}

/// Symmetric elimination: rows and columns of fixed unknowns are dropped and
/// their contribution moves to the right-hand side.
fn eliminate(raw: &RawSubsystem, dofs: &DofMap) -> (CsrMatrix, Vec<f64>) {
    let n = dofs.n_free();
    let mut b = TripletBuilder::with_capacity(n, n, raw.matrix.nnz());
    let mut rhs = vec![0.0; n];
    for (r, slot) in dofs.slots.iter().enumerate() {
        let Slot::Free { index: i, sign: si } = *slot else { continue };
        rhs[i] += si * raw.load[r];
        for (c, v) in raw.matrix.row(r) {
            match dofs.slots[c] {
                Slot::Free { index: j, sign: sj } => b.push(i, j, si * sj * v),
                Slot::Fixed(g) => rhs[i] -= si * v * g,
            }
        }
    }
    (b.build(), rhs)
}

/// Eliminate Dirichlet unknowns, add stress/flux loads on Neumann edges and
/// split into blocks. Interface normal velocities and interface porous
/// pressures are never eliminated.
pub fn apply_boundary_conditions(
    disc: &Discretization,
    data: &dyn ProblemData,
    mut fluid: RawSubsystem,
    mut porous: RawSubsystem,
    c_fp: CsrMatrix,
) -> CoupledSystem {
    let q = disc.quadrature;
    for side in [Side::Left, Side::Right, Side::Top] {
        if disc.boundary.fluid(side) == Some(EdgeCondition::Neumann) {
            side_load(
                &disc.fluid_mesh,
                side,
                q,
                |x| data.fluid_traction(x, side.normal()),
                |node, c, v| fluid.load[velocity_dof(node, c)] += v,
            );
        } else if side != Side::Top {
            // The interface corner keeps its normal velocity free, so its test
            // function still sees the wall traction.
            let mesh = &disc.fluid_mesh;
            side_load(
                mesh,
                side,
                q,
                |x| data.fluid_traction(x, side.normal()),
                |node, c, v| {
                    if c == 1 && mesh.q2_on_side(node, Side::Bottom) {
                        fluid.load[velocity_dof(node, c)] += v;
                    }
                },
            );
        }
    }
    for side in [Side::Left, Side::Right, Side::Bottom] {
        if disc.boundary.porous(side) == Some(EdgeCondition::Neumann) {
            side_load(
                &disc.porous_mesh,
                side,
                q,
                |x| [data.porous_flux(x, side.normal())],
                |node, _, v| porous.load[node] += v,
            );
        } else if side != Side::Bottom {
            let mesh = &disc.porous_mesh;
            side_load(
                mesh,
                side,
                q,
                |x| [data.porous_flux(x, side.normal())],
                |node, _, v| {
                    if mesh.q2_on_side(node, Side::Top) {
                        porous.load[node] += v;
                    }
                },
            );
        }
    }

    let fdofs = fluid_dofs(disc, data);
    let pdofs = porous_dofs(disc, data);
    let (kf, rf) = eliminate(&fluid, &fdofs);
    let (kp, rp) = eliminate(&porous, &pdofs);
    let (fi, fg, fp) = (fdofs.interior(), fdofs.interface(), fdofs.tail());
    let (pi, pg) = (pdofs.interior(), pdofs.interface());

    let fluid = FluidBlocks {
        a_ii: kf.block(fi.clone(), fi.clone()),
        a_ig: kf.block(fi.clone(), fg.clone()),
        a_gi: kf.block(fg.clone(), fi.clone()),
        a_gg: kf.block(fg.clone(), fg.clone()),
        g_i: kf.block(fi.clone(), fp.clone()),
        g_g: kf.block(fg.clone(), fp.clone()),
        rhs_i: rf[fi].to_vec(),
        rhs_g: rf[fg].to_vec(),
        rhs_div: rf[fp].to_vec(),
    };
    let porous = PorousBlocks {
        a_ii: kp.block(pi.clone(), pi.clone()),
        a_ig: kp.block(pi.clone(), pg.clone()),
        a_gi: kp.block(pg.clone(), pi.clone()),
        a_gg: kp.block(pg.clone(), pg.clone()),
        rhs_i: rp[pi].to_vec(),
        rhs_g: rp[pg].to_vec(),
    };
    CoupledSystem { fluid, porous, c_fp, fluid_dofs: fdofs, porous_dofs: pdofs }
}
