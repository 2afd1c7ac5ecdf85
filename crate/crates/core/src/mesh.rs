//! Structured quadrilateral meshes on axis-aligned rectangles.
//!
//! A mesh stores only its rectangle and element counts; every node coordinate
//! is an affine function of integer indices, so regenerating a mesh is bitwise
//! deterministic. Two node grids live on each mesh:
//!
//! * the biquadratic (Q2) grid, `(2nx+1) x (2ny+1)` nodes, spacing `h/2`;
//! * the bilinear (Q1) grid, `(nx+1) x (ny+1)` nodes, spacing `h`.
//!
//! Node `(i, j)` of a grid with `m` columns has index `j * m + i`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RectDomain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl RectDomain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let ok = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !ok || x_min >= x_max || y_min >= y_max {
            return Err(Error::Mesh(format!(
                "degenerate rectangle ({x_min}, {x_max}) x ({y_min}, {y_max})"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// One side of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuredMesh {
    pub domain: RectDomain,
    pub nx: usize,
    pub ny: usize,
    h: f64,
}

/// Relative tolerance for deciding that two element sizes agree.
const SIZE_TOL: f64 = 1e-12;

pub fn build_mesh(domain: RectDomain, nx: usize, ny: usize) -> Result<StructuredMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Mesh(format!("element counts must be positive, got {nx} x {ny}")));
    }
    let hx = domain.width() / nx as f64;
    let hy = domain.height() / ny as f64;
    if (hx - hy).abs() > SIZE_TOL * hx.max(hy) {
        return Err(Error::Mesh(format!("non-square elements: hx = {hx}, hy = {hy}")));
    }
    Ok(StructuredMesh { domain, nx, ny, h: hx })
}

impl StructuredMesh {
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn element_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn q2_dims(&self) -> (usize, usize) {
        (2 * self.nx + 1, 2 * self.ny + 1)
    }

    pub fn q1_dims(&self) -> (usize, usize) {
        (self.nx + 1, self.ny + 1)
    }

    pub fn q2_node_count(&self) -> usize {
        let (m, n) = self.q2_dims();
        m * n
    }

    pub fn q1_node_count(&self) -> usize {
        let (m, n) = self.q1_dims();
        m * n
    }

    pub fn q2_index(&self, i: usize, j: usize) -> usize {
        j * (2 * self.nx + 1) + i
    }

    pub fn q1_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn q2_ij(&self, node: usize) -> (usize, usize) {
        let m = 2 * self.nx + 1;
        (node % m, node / m)
    }

    pub fn q1_ij(&self, node: usize) -> (usize, usize) {
        let m = self.nx + 1;
        (node % m, node / m)
    }

    fn x_at(&self, i: usize, divisions: usize) -> f64 {
        let d = &self.domain;
        d.x_min + d.width() * (i as f64) / (divisions as f64)
    }

    fn y_at(&self, j: usize, divisions: usize) -> f64 {
        let d = &self.domain;
        d.y_min + d.height() * (j as f64) / (divisions as f64)
    }

    pub fn q2_coord(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.q2_ij(node);
        [self.x_at(i, 2 * self.nx), self.y_at(j, 2 * self.ny)]
    }

    pub fn q1_coord(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.q1_ij(node);
        [self.x_at(i, self.nx), self.y_at(j, self.ny)]
    }

    /// Lower-left corner of element `(ex, ey)`.
    pub fn element_origin(&self, ex: usize, ey: usize) -> [f64; 2] {
        [self.x_at(ex, self.nx), self.y_at(ey, self.ny)]
    }

    /// The nine Q2 nodes of an element; local index `3 * b + a` for local
    /// tensor position `(a, b)`.
    pub fn q2_element(&self, ex: usize, ey: usize) -> [usize; 9] {
        let mut nodes = [0; 9];
        for b in 0..3 {
            for a in 0..3 {
                nodes[3 * b + a] = self.q2_index(2 * ex + a, 2 * ey + b);
            }
        }
        nodes
    }

    /// The four Q1 nodes of an element; local index `2 * b + a`.
    pub fn q1_element(&self, ex: usize, ey: usize) -> [usize; 4] {
        let mut nodes = [0; 4];
        for b in 0..2 {
            for a in 0..2 {
                nodes[2 * b + a] = self.q1_index(ex + a, ey + b);
            }
        }
        nodes
    }

    /// Elements in row-major order.
    pub fn elements(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |ey| (0..self.nx).map(move |ex| (ex, ey)))
    }

    /// Q2 nodes on a side, ordered by increasing free coordinate.
    pub fn q2_side_nodes(&self, side: Side) -> Vec<usize> {
        let (m, n) = self.q2_dims();
        match side {
            Side::Bottom => (0..m).map(|i| self.q2_index(i, 0)).collect(),
            Side::Top => (0..m).map(|i| self.q2_index(i, n - 1)).collect(),
            Side::Left => (0..n).map(|j| self.q2_index(0, j)).collect(),
            Side::Right => (0..n).map(|j| self.q2_index(m - 1, j)).collect(),
        }
    }

    pub fn q2_on_side(&self, node: usize, side: Side) -> bool {
        let (i, j) = self.q2_ij(node);
        let (m, n) = self.q2_dims();
        match side {
            Side::Bottom => j == 0,
            Side::Top => j == n - 1,
            Side::Left => i == 0,
            Side::Right => i == m - 1,
        }
    }

    /// Boundary edges on a side as `(element, [3 Q2 nodes in increasing order])`.
    pub fn side_edges(&self, side: Side) -> Vec<((usize, usize), [usize; 3])> {
        match side {
            Side::Bottom | Side::Top => {
                let ey = if side == Side::Bottom { 0 } else { self.ny - 1 };
                let j = if side == Side::Bottom { 0 } else { 2 * self.ny };
                (0..self.nx)
                    .map(|ex| {
                        let n = [0, 1, 2].map(|a| self.q2_index(2 * ex + a, j));
                        ((ex, ey), n)
                    })
                    .collect()
            }
            Side::Left | Side::Right => {
                let ex = if side == Side::Left { 0 } else { self.nx - 1 };
                let i = if side == Side::Left { 0 } else { 2 * self.nx };
                (0..self.ny)
                    .map(|ey| {
                        let n = [0, 1, 2].map(|b| self.q2_index(i, 2 * ey + b));
                        ((ex, ey), n)
                    })
                    .collect()
            }
        }
    }
}

/// Matched Q2 nodes on the shared horizontal segment between a fluid mesh
/// (above) and a porous mesh (below).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterfaceTrace {
    pub fluid_side_nodes: Vec<usize>,
    pub porous_side_nodes: Vec<usize>,
    /// Distance between neighbouring interface unknowns (`h / 2`).
    pub spacing: f64,
    pub length: f64,
    pub y: f64,
    pub x_min: f64,
    /// Number of interface edges (elements along the interface).
    pub edges: usize,
}

impl InterfaceTrace {
    pub fn len(&self) -> usize {
        self.fluid_side_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fluid_side_nodes.is_empty()
    }

    /// x-coordinate of interface unknown `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.length * (i as f64) / ((self.len() - 1) as f64)
    }
}

pub fn extract_interface(fluid: &StructuredMesh, porous: &StructuredMesh) -> Result<InterfaceTrace> {
    let (f, p) = (&fluid.domain, &porous.domain);
    if fluid.nx != porous.nx {
        return Err(Error::Interface(format!(
            "element counts along the interface differ: fluid {} vs porous {}",
            fluid.nx, porous.nx
        )));
    }
    if f.x_min != p.x_min || f.x_max != p.x_max {
        return Err(Error::Interface("meshes span different x-ranges".into()));
    }
    if f.y_min != p.y_max {
        return Err(Error::Interface(format!(
            "fluid bottom y = {} does not meet porous top y = {}",
            f.y_min, p.y_max
        )));
    }
    if (fluid.h() - porous.h()).abs() > SIZE_TOL * fluid.h() {
        return Err(Error::Interface("element sizes differ".into()));
    }
    let fluid_side_nodes = fluid.q2_side_nodes(Side::Bottom);
    let porous_side_nodes = porous.q2_side_nodes(Side::Top);
    for (&a, &b) in fluid_side_nodes.iter().zip(&porous_side_nodes) {
        let (xa, xb) = (fluid.q2_coord(a), porous.q2_coord(b));
        if xa != xb {
            return Err(Error::Interface(format!("node mismatch {xa:?} vs {xb:?}")));
        }
    }
    Ok(InterfaceTrace {
        fluid_side_nodes,
        porous_side_nodes,
        spacing: fluid.h() / 2.0,
        length: f.width(),
        y: f.y_min,
        x_min: f.x_min,
        edges: fluid.nx,
    })
}
