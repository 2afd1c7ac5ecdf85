//! Element loops for the fluid, porous and coupling matrices.
//!
//! Raw fluid unknowns: velocity component `c` at Q2 node `n` is `2 n + c`,
//! pressure at Q1 node `m` is `2 N + m` with `N` the Q2 node count. Raw porous
//! unknowns are the Q2 nodes.

use super::basis::{edge_mass, gauss_1d, q1_eval, q2_eval, quad_1d};
use super::{ProblemData, ProblemParams};
use crate::error::{Error, Result};
use crate::mesh::{InterfaceTrace, Side, StructuredMesh};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Unconstrained matrix and volume/interface load over raw unknowns.
#[derive(Debug, Clone)]
pub struct RawSubsystem {
    pub matrix: CsrMatrix,
    pub load: Vec<f64>,
}

#[inline]
pub(crate) fn velocity_dof(node: usize, comp: usize) -> usize {
    2 * node + comp
}

/// Fluid operator: viscous form `2 mu (grad^s u, grad^s v)`, pressure coupling
/// `-(p, div v)` in both off-diagonal positions, and the slip friction
/// `xi (u_tau, v_tau)` on the interface. Loads: body force and the slip
/// defect `-(g, v_tau)` on the interface.
pub fn assemble_stokes(
    mesh: &StructuredMesh,
    params: &ProblemParams,
    interface: &InterfaceTrace,
    data: &dyn ProblemData,
    quadrature: usize,
) -> RawSubsystem {
    let nq2 = mesh.q2_node_count();
    let n = 2 * nq2 + mesh.q1_node_count();
    let h = mesh.h();
    let mu = params.mu_f;
    let (pts, wts) = gauss_1d(quadrature);
    let mut builder = TripletBuilder::with_capacity(n, n, mesh.element_count() * (18 * 18 + 2 * 18 * 4));
    let mut load = vec![0.0; n];

    for (ex, ey) in mesh.elements() {
        let q2 = mesh.q2_element(ex, ey);
        let q1 = mesh.q1_element(ex, ey);
        let origin = mesh.element_origin(ex, ey);
        let mut k_uu = [[0.0; 18]; 18];
        let mut k_up = [[0.0; 4]; 18];
        let mut f_u = [0.0; 18];
        for (&t, &wt) in pts.iter().zip(&wts) {
            for (&s, &ws) in pts.iter().zip(&wts) {
                let w = ws * wt * h * h;
                let (phi, g) = q2_eval(s, t, h);
                let (psi, _) = q1_eval(s, t, h);
                let force = data.fluid_force([origin[0] + s * h, origin[1] + t * h]);
                for a in 0..9 {
                    for c in 0..2 {
                        let row = 2 * a + c;
                        f_u[row] += w * force[c] * phi[a];
                        for b in 0..9 {
                            let dot = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                            for d in 0..2 {
                                let mut v = g[a][d] * g[b][c];
                                if c == d {
                                    v += dot;
                                }
                                k_uu[row][2 * b + d] += w * mu * v;
                            }
                        }
                        for m in 0..4 {
                            k_up[row][m] -= w * psi[m] * g[a][c];
                        }
                    }
                }
            }
        }
        for a in 0..9 {
            for c in 0..2 {
                let row = velocity_dof(q2[a], c);
                load[row] += f_u[2 * a + c];
                for b in 0..9 {
                    for d in 0..2 {
                        builder.push(row, velocity_dof(q2[b], d), k_uu[2 * a + c][2 * b + d]);
                    }
                }
                for m in 0..4 {
                    let col = 2 * nq2 + q1[m];
                    builder.push(row, col, k_up[2 * a + c][m]);
                    builder.push(col, row, k_up[2 * a + c][m]);
                }
            }
        }
    }

    // Slip friction and slip defect on the interface (tangential component).
    let xi = params.xi_f();
    let mass = edge_mass(h);
    for e in 0..interface.edges {
        let nodes = [0, 1, 2].map(|k| interface.fluid_side_nodes[2 * e + k]);
        for a in 0..3 {
            for b in 0..3 {
                builder.push(velocity_dof(nodes[a], 0), velocity_dof(nodes[b], 0), xi * mass[a][b]);
            }
        }
        let x0 = mesh.q2_coord(nodes[0]);
        for (&t, &wt) in pts.iter().zip(&wts) {
            let g = data.slip_defect([x0[0] + t * h, x0[1]]);
            let phi = quad_1d(t);
            for a in 0..3 {
                load[velocity_dof(nodes[a], 0)] -= wt * h * g * phi[a];
            }
        }
    }

    RawSubsystem { matrix: builder.build(), load }
}

/// Porous operator `(diag(eta1, eta2) grad p, grad q)` and source load.
pub fn assemble_darcy(
    mesh: &StructuredMesh,
    params: &ProblemParams,
    data: &dyn ProblemData,
    quadrature: usize,
) -> RawSubsystem {
    let n = mesh.q2_node_count();
    let h = mesh.h();
    let (pts, wts) = gauss_1d(quadrature);
    let mut builder = TripletBuilder::with_capacity(n, n, mesh.element_count() * 81);
    let mut load = vec![0.0; n];
    for (ex, ey) in mesh.elements() {
        let q2 = mesh.q2_element(ex, ey);
        let origin = mesh.element_origin(ex, ey);
        let mut k = [[0.0; 9]; 9];
        let mut f = [0.0; 9];
        for (&t, &wt) in pts.iter().zip(&wts) {
            for (&s, &ws) in pts.iter().zip(&wts) {
                let w = ws * wt * h * h;
                let (phi, g) = q2_eval(s, t, h);
                let src = data.porous_source([origin[0] + s * h, origin[1] + t * h]);
                for a in 0..9 {
                    f[a] += w * src * phi[a];
                    for b in 0..9 {
                        k[a][b] += w * (params.eta1 * g[a][0] * g[b][0] + params.eta2 * g[a][1] * g[b][1]);
                    }
                }
            }
        }
        for a in 0..9 {
            load[q2[a]] += f[a];
            for b in 0..9 {
                builder.push(q2[a], q2[b], k[a][b]);
            }
        }
    }
    RawSubsystem { matrix: builder.build(), load }
}

/// Interface mass matrix pairing porous pressure traces with fluid normal
/// velocity test functions: `C[i][j] = (psi_j, phi_i)_Gamma`.
pub fn assemble_coupling(interface: &InterfaceTrace) -> Result<CsrMatrix> {
    let n = interface.fluid_side_nodes.len();
    if interface.porous_side_nodes.len() != n {
        return Err(Error::Interface(format!(
            "trace sizes differ: fluid {n}, porous {}",
            interface.porous_side_nodes.len()
        )));
    }
    if n != 2 * interface.edges + 1 {
        return Err(Error::Interface(format!("{n} trace nodes inconsistent with {} edges", interface.edges)));
    }
    let edge_len = interface.length / interface.edges as f64;
    let mass = edge_mass(edge_len);
    let mut b = TripletBuilder::new(n, n);
    for e in 0..interface.edges {
        for a in 0..3 {
            for c in 0..3 {
                b.push(2 * e + a, 2 * e + c, mass[a][c]);
            }
        }
    }
    Ok(b.build())
}

/// Integrate `f(x) * phi_a` over the Q2 edges of `side`, calling
/// `sink(node, component, value)` for every node and value component.
pub(crate) fn side_load<const C: usize>(
    mesh: &StructuredMesh,
    side: Side,
    quadrature: usize,
    f: impl Fn([f64; 2]) -> [f64; C],
    mut sink: impl FnMut(usize, usize, f64),
) {
    let (pts, wts) = gauss_1d(quadrature);
    let h = mesh.h();
    for (_, nodes) in mesh.side_edges(side) {
        let x0 = mesh.q2_coord(nodes[0]);
        for (&t, &wt) in pts.iter().zip(&wts) {
            let x = match side {
                Side::Bottom | Side::Top => [x0[0] + t * h, x0[1]],
                Side::Left | Side::Right => [x0[0], x0[1] + t * h],
            };
            let val = f(x);
            let phi = quad_1d(t);
            for a in 0..3 {
                for (c, v) in val.iter().enumerate() {
                    sink(nodes[a], c, wt * h * v * phi[a]);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::ZeroData;
    use crate::mesh::{build_mesh, extract_interface, RectDomain};

    fn meshes(n: usize) -> (StructuredMesh, StructuredMesh, InterfaceTrace) {
        let f = build_mesh(RectDomain::new(0.0, 0.5, 1.0, 1.5).unwrap(), n, n).unwrap();
        let p = build_mesh(RectDomain::new(0.0, 0.5, 0.5, 1.0).unwrap(), n, n).unwrap();
        let t = extract_interface(&f, &p).unwrap();
        (f, p, t)
    }

    fn energy(m: &CsrMatrix, x: &[f64]) -> f64 {
        x.iter().zip(m.mul_vec(x)).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn translation_is_strain_free() {
        let (f, _, t) = meshes(1);
        let params = ProblemParams::isotropic(1.0, 1.0, 0.0).unwrap();
        let raw = assemble_stokes(&f, &params, &t, &ZeroData, 3);
        let nq2 = f.q2_node_count();
        let mut u = vec![0.0; raw.matrix.nrows()];
        for node in 0..nq2 {
            u[velocity_dof(node, 0)] = 0.7;
            u[velocity_dof(node, 1)] = -1.3;
        }
        let r = raw.matrix.mul_vec(&u);
        for node in 0..nq2 {
            for c in 0..2 {
                assert!(r[velocity_dof(node, c)].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn constant_pressure_against_divergence_free_velocity() {
        // u = (y - 1, 0) is divergence free, so (1, div u) = 0.
        let (f, _, t) = meshes(3);
        let params = ProblemParams::isotropic(1.0, 1.0, 1.0).unwrap();
        let raw = assemble_stokes(&f, &params, &t, &ZeroData, 3);
        let nq2 = f.q2_node_count();
        let mut p = vec![0.0; raw.matrix.nrows()];
        for m in 0..f.q1_node_count() {
            p[2 * nq2 + m] = 1.0;
        }
        let gp = raw.matrix.mul_vec(&p);
        let mut u = vec![0.0; raw.matrix.nrows()];
        for node in 0..nq2 {
            let x = f.q2_coord(node);
            u[velocity_dof(node, 0)] = x[1] - 1.0;
        }
        let pairing: f64 = gp.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!(pairing.abs() < 1e-13, "{pairing}");
    }

    #[test]
    fn constant_is_in_darcy_kernel() {
        let (_, p, _) = meshes(4);
        let params = ProblemParams::isotropic(1.0, 3.0, 1.0).unwrap();
        let raw = assemble_darcy(&p, &params, &ZeroData, 3);
        let r = raw.matrix.mul_vec(&vec![1.0; p.q2_node_count()]);
        assert!(r.iter().all(|v| v.abs() < 1e-13));
        assert!(raw.matrix.symmetry_defect() < 1e-15);
    }

    #[test]
    fn darcy_energy_of_linear_fields() {
        let unit = build_mesh(RectDomain::new(0.0, 1.0, 0.0, 1.0).unwrap(), 4, 4).unwrap();
        let iso = ProblemParams::isotropic(1.0, 1.0, 1.0).unwrap();
        let raw = assemble_darcy(&unit, &iso, &ZeroData, 3);
        let px: Vec<f64> = (0..unit.q2_node_count()).map(|n| unit.q2_coord(n)[0]).collect();
        assert!((energy(&raw.matrix, &px) - 1.0).abs() < 1e-13);

        let (_, p, _) = meshes(5);
        let aniso = ProblemParams::new(1.0, 2.0, 0.5, 1.0).unwrap();
        let raw = assemble_darcy(&p, &aniso, &ZeroData, 3);
        let pxy: Vec<f64> = (0..p.q2_node_count()).map(|n| p.q2_coord(n)[0] + p.q2_coord(n)[1]).collect();
        assert!((energy(&raw.matrix, &pxy) - 2.5 * p.domain.area()).abs() < 1e-13);
    }

    #[test]
    fn coupling_totals_interface_length() {
        let (_, _, t) = meshes(5);
        let c = assemble_coupling(&t).unwrap();
        let ones = vec![1.0; t.len()];
        let rows = c.mul_vec(&ones);
        assert!((rows.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        // Simpson weights h/6, 4h/6, h/6 per edge
        assert!((rows[0] - 0.1 / 6.0).abs() < 1e-16);
        assert!((rows[1] - 0.4 / 6.0).abs() < 1e-16);
        assert!((rows[2] - 0.2 / 6.0).abs() < 1e-16);
        assert!(c.symmetry_defect() == 0.0);
    }

    #[test]
    fn coupling_rejects_mismatched_traces() {
        let (_, _, mut t) = meshes(5);
        t.porous_side_nodes.pop();
        assert!(matches!(assemble_coupling(&t), Err(Error::Interface(_))));
    }

    #[test]
    fn quadrature_order_does_not_change_entries() {
        let (f, p, t) = meshes(2);
        let params = ProblemParams::new(3.0, 2.0, 0.7, 1.2).unwrap();
        for (a, b) in [
            (
                assemble_stokes(&f, &params, &t, &ZeroData, 3).matrix,
                assemble_stokes(&f, &params, &t, &ZeroData, 5).matrix,
            ),
            (assemble_darcy(&p, &params, &ZeroData, 3).matrix, assemble_darcy(&p, &params, &ZeroData, 4).matrix),
        ] {
            let scale = a.iter().fold(0.0f64, |m, (_, _, v)| m.max(v.abs()));
            for (r, c, v) in a.iter() {
                assert!((v - b.get(r, c)).abs() <= 1e-14 * scale);
            }
        }
    }

    #[test]
    fn fluid_operator_is_symmetric() {
        let (f, _, t) = meshes(3);
        let params = ProblemParams::isotropic(10.0, 4e-10, 1.0).unwrap();
        let raw = assemble_stokes(&f, &params, &t, &ZeroData, 3);
        assert!(raw.matrix.symmetry_defect() < 1e-14);
    }
}
