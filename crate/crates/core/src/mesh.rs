//! Structured simplicial meshes of the unit square, unit cube and an
//! L-shaped domain.
//!
//! Fine and coarse meshes live on dyadic lattices (mesh sizes are powers of
//! 1/2, the fine lattice refines the coarse one), so containment and
//! boundary questions are answered in exact integer arithmetic. Squares are
//! split into two triangles along the (+1,+1) diagonal and cubes into six
//! tetrahedra sharing the (+1,+1,+1) diagonal; under dyadic refinement both
//! patterns nest, which keeps the coarse P1 space a subspace of the fine one.
//!
//! The L-shaped domain is the standard benchmark (-1,1)^2 minus the closed
//! upper-right quadrant, with the reentrant corner at the origin.

use std::collections::HashMap;
use std::io::Write;

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    UnitSquare,
    UnitCube,
    LShape2D,
}

impl Shape {
    pub fn dim(self) -> usize {
        match self {
            Shape::UnitSquare | Shape::LShape2D => 2,
            Shape::UnitCube => 3,
        }
    }

    /// Analytic volume of the domain.
    pub fn volume(self) -> f64 {
        match self {
            Shape::UnitSquare | Shape::UnitCube => 1.0,
            Shape::LShape2D => 3.0,
        }
    }

    /// Side length of the bounding box ((-1,1)^2 for the L-shape, the unit
    /// box otherwise).
    pub fn extent(self) -> f64 {
        match self {
            Shape::UnitSquare | Shape::UnitCube => 1.0,
            Shape::LShape2D => 2.0,
        }
    }

    /// Coordinate of the lattice origin.
    pub fn origin(self) -> f64 {
        match self {
            Shape::UnitSquare | Shape::UnitCube => 0.0,
            Shape::LShape2D => -1.0,
        }
    }

    /// Lattice intervals per axis at mesh size `s`.
    pub fn axis_intervals(self, s: MeshSize) -> usize {
        match self {
            Shape::UnitSquare | Shape::UnitCube => s.intervals(),
            Shape::LShape2D => 2 * s.intervals(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DomainSpec {
    pub shape: Shape,
    pub dim: usize,
}

impl DomainSpec {
    pub fn new(shape: Shape) -> Self {
        DomainSpec {
            shape,
            dim: shape.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim != self.shape.dim() {
            return Err(Error::Config(format!(
                "shape {:?} requires dim {}, got {}",
                self.shape,
                self.shape.dim(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// A mesh size of the form 2^-j, j >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MeshSize {
    /// j in h = 2^-j.
    exponent: u32,
}

impl MeshSize {
    pub fn new(exponent: u32) -> Result<Self> {
        if exponent == 0 || exponent > 40 {
            return Err(Error::Config(format!(
                "mesh size 2^-{exponent} outside the supported range"
            )));
        }
        Ok(MeshSize { exponent })
    }

    /// Accepts only exact powers of 1/2 in (0, 1).
    pub fn from_f64(v: f64) -> Result<Self> {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Config(format!("mesh size {v} not in (0,1)")));
        }
        let j = (-v.log2()).round() as u32;
        let m = MeshSize::new(j)?;
        if m.value() != v {
            return Err(Error::Config(format!("mesh size {v} is not a power of 1/2")));
        }
        Ok(m)
    }

    pub fn value(self) -> f64 {
        0.5f64.powi(self.exponent as i32)
    }

    pub fn exponent(self) -> u32 {
        self.exponent
    }

    /// Number of intervals along one axis of the unit domain.
    pub fn intervals(self) -> usize {
        1usize << self.exponent
    }
}

impl std::fmt::Display for MeshSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "2^-{}", self.exponent)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub spec: DomainSpec,
    /// Node coordinates; only the first `dim` entries are meaningful.
    pub nodes: Vec<[f64; 3]>,
    /// Integer lattice coordinates of each node (coordinate / h).
    pub lattice: Vec<[i64; 3]>,
    /// Flat element connectivity, `dim + 1` node indices per element.
    elems: Vec<usize>,
    pub boundary_node: Vec<bool>,
    pub coarse_cell_of_element: Vec<usize>,
    pub h: MeshSize,
    pub coarse_h: MeshSize,
    n_coarse_cells: usize,
    node_of_lattice: HashMap<[i64; 3], usize>,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elems.len() / (self.dim() + 1)
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim() + 1;
        &self.elems[e * k..(e + 1) * k]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.elems.chunks_exact(self.dim() + 1)
    }

    pub fn n_coarse_cells(&self) -> usize {
        self.n_coarse_cells
    }

    /// Coarse-to-fine refinement ratio H/h (a power of two).
    pub fn refinement_ratio(&self) -> usize {
        1usize << (self.h.exponent() - self.coarse_h.exponent())
    }

    pub fn node_at_lattice(&self, p: [i64; 3]) -> Option<usize> {
        self.node_of_lattice.get(&p).copied()
    }

    /// Signed volume of element `e` (positive for all generated meshes).
    pub fn element_volume(&self, e: usize) -> f64 {
        let nodes = self.element(e);
        let d = self.dim();
        let a = self.nodes[nodes[0]];
        match d {
            2 => {
                let b = self.nodes[nodes[1]];
                let c = self.nodes[nodes[2]];
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
            }
            3 => {
                let b = self.nodes[nodes[1]];
                let c = self.nodes[nodes[2]];
                let d3 = self.nodes[nodes[3]];
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let w = [d3[0] - a[0], d3[1] - a[1], d3[2] - a[2]];
                (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
                    + u[2] * (v[0] * w[1] - v[1] * w[0]))
                    / 6.0
            }
            _ => unreachable!(),
        }
    }

    pub fn element_diameter(&self, e: usize) -> f64 {
        let nodes = self.element(e);
        let mut best = 0.0f64;
        for (i, &p) in nodes.iter().enumerate() {
            for &q in &nodes[i + 1..] {
                let a = self.nodes[p];
                let b = self.nodes[q];
                let d2 = (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum::<f64>();
                best = best.max(d2.sqrt());
            }
        }
        best
    }

    /// Builds a mesh from raw pieces; intended for tests that need meshes the
    /// generators refuse to produce (e.g. degenerate elements).
    #[allow(clippy::too_many_arguments)]
    pub fn from_raw(
        spec: DomainSpec,
        nodes: Vec<[f64; 3]>,
        lattice: Vec<[i64; 3]>,
        elems: Vec<usize>,
        boundary_node: Vec<bool>,
        coarse_cell_of_element: Vec<usize>,
        h: MeshSize,
        coarse_h: MeshSize,
        n_coarse_cells: usize,
    ) -> Self {
        let node_of_lattice = lattice
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();
        Mesh {
            spec,
            nodes,
            lattice,
            elems,
            boundary_node,
            coarse_cell_of_element,
            h,
            coarse_h,
            n_coarse_cells,
            node_of_lattice,
        }
    }

    /// Plain-text dump: one node per line (`x y [z]`), then one element per
    /// line (0-based node indices). Lines starting with `#` are headers.
    pub fn write_text(&self, w: &mut impl Write) -> Result<()> {
        writeln!(
            w,
            "# mesh {:?} dim {} h {} H {} nodes {} elements {}",
            self.spec.shape,
            self.dim(),
            self.h,
            self.coarse_h,
            self.n_nodes(),
            self.n_elements()
        )?;
        for p in &self.nodes {
            if self.dim() == 2 {
                writeln!(w, "{:.17e} {:.17e}", p[0], p[1])?;
            } else {
                writeln!(w, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2])?;
            }
        }
        writeln!(w, "# elements")?;
        for e in 0..self.n_elements() {
            let ids: Vec<String> = self.element(e).iter().map(|i| i.to_string()).collect();
            writeln!(w, "{}", ids.join(" "))?;
        }
        Ok(())
    }
}

/// Is the lattice node (i, j) outside the L-shaped domain (strictly inside
/// the removed quarter)?
fn lshape_node_removed(i: i64, j: i64, n: i64) -> bool {
    i > n / 2 && j > n / 2
}

/// Is the cell with lower corner (i, j) part of the removed quarter?
fn lshape_cell_removed(i: i64, j: i64, n: i64) -> bool {
    i >= n / 2 && j >= n / 2
}

fn boundary_flag(shape: Shape, p: [i64; 3], n: i64) -> bool {
    match shape {
        Shape::UnitSquare => p[0] == 0 || p[0] == n || p[1] == 0 || p[1] == n,
        Shape::UnitCube => (0..3).any(|k| p[k] == 0 || p[k] == n),
        Shape::LShape2D => {
            let (i, j) = (p[0], p[1]);
            let outer = i == 0 || i == n || j == 0 || j == n;
            // reentrant edges x = 0 (y >= 0) and y = 0 (x >= 0)
            let reentrant = (i == n / 2 && j >= n / 2) || (j == n / 2 && i >= n / 2);
            outer || reentrant
        }
    }
}

/// Builds the fine mesh of size `h` aligned with the coarse grid of size `H`.
pub fn build_mesh(spec: DomainSpec, coarse: MeshSize, fine: MeshSize) -> Result<Mesh> {
    spec.validate()?;
    if fine.exponent() < coarse.exponent() {
        return Err(Error::Config(format!(
            "fine mesh size {fine} must not exceed coarse mesh size {coarse}"
        )));
    }
    if spec.shape == Shape::LShape2D && coarse.value() > 0.25 {
        return Err(Error::Config(format!(
            "L-shaped domain needs H <= 1/4 to resolve the reentrant corner, got {coarse}"
        )));
    }
    let n = spec.shape.axis_intervals(fine) as i64;
    let d = spec.dim;
    let h = fine.value();
    let origin = spec.shape.origin();

    // Nodes in lexicographic coordinate order.
    let mut nodes = Vec::new();
    let mut lattice = Vec::new();
    let mut boundary = Vec::new();
    let kmax = if d == 3 { n } else { 0 };
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=kmax {
                let p = [i, j, k];
                if spec.shape == Shape::LShape2D && lshape_node_removed(i, j, n) {
                    continue;
                }
                lattice.push(p);
                nodes.push([
                    origin + i as f64 * h,
                    origin + j as f64 * h,
                    if d == 3 { k as f64 * h } else { 0.0 },
                ]);
                boundary.push(boundary_flag(spec.shape, p, n));
            }
        }
    }
    let node_of_lattice: HashMap<[i64; 3], usize> = lattice
        .iter()
        .enumerate()
        .map(|(idx, &p)| (p, idx))
        .collect();

    // Coarse cells in the same lexicographic order define subdomain indices.
    let ratio = 1i64 << (fine.exponent() - coarse.exponent());
    let m = spec.shape.axis_intervals(coarse) as i64;
    let mut coarse_index = HashMap::new();
    for ci in 0..m {
        for cj in 0..m {
            for ck in 0..if d == 3 { m } else { 1 } {
                if spec.shape == Shape::LShape2D && lshape_cell_removed(ci, cj, m) {
                    continue;
                }
                let next = coarse_index.len();
                coarse_index.insert([ci, cj, ck], next);
            }
        }
    }

    let mut elems = Vec::new();
    let mut coarse_of = Vec::new();
    let node = |p: [i64; 3]| -> usize { node_of_lattice[&p] };
    for i in 0..n {
        for j in 0..n {
            if d == 2 {
                if spec.shape == Shape::LShape2D && lshape_cell_removed(i, j, n) {
                    continue;
                }
                let cc = coarse_index[&[i / ratio, j / ratio, 0]];
                let a = node([i, j, 0]);
                let b = node([i + 1, j, 0]);
                let c = node([i + 1, j + 1, 0]);
                let dd = node([i, j + 1, 0]);
                elems.extend_from_slice(&[a, b, c]);
                coarse_of.push(cc);
                elems.extend_from_slice(&[a, c, dd]);
                coarse_of.push(cc);
            } else {
                for k in 0..n {
                    let cc = coarse_index[&[i / ratio, j / ratio, k / ratio]];
                    kuhn_tets([i, j, k], &mut |tet| {
                        elems.extend(tet.iter().map(|&p| node(p)));
                        coarse_of.push(cc);
                    });
                }
            }
        }
    }

    let mesh = Mesh {
        spec,
        nodes,
        lattice,
        elems,
        boundary_node: boundary,
        coarse_cell_of_element: coarse_of,
        h: fine,
        coarse_h: coarse,
        n_coarse_cells: coarse_index.len(),
        node_of_lattice,
    };
    debug_assert!((0..mesh.n_elements()).all(|e| mesh.element_volume(e) > 0.0));
    Ok(mesh)
}

/// Coarse mesh: the fine mesh with h = H, each element assigned to its own
/// cell.
pub fn coarse_mesh(spec: DomainSpec, coarse: MeshSize) -> Result<Mesh> {
    build_mesh(spec, coarse, coarse)
}

/// Six-tetrahedra split of the unit lattice cell at `base`, all sharing the
/// main diagonal. Odd permutations have their last two vertices swapped to
/// keep orientations positive.
fn kuhn_tets(base: [i64; 3], emit: &mut impl FnMut([[i64; 3]; 4])) {
    const PERMS: [([usize; 3], bool); 6] = [
        ([0, 1, 2], true),
        ([0, 2, 1], false),
        ([1, 0, 2], false),
        ([1, 2, 0], true),
        ([2, 0, 1], true),
        ([2, 1, 0], false),
    ];
    for (perm, even) in PERMS {
        let mut p = base;
        let mut tet = [base; 4];
        for (step, &axis) in perm.iter().enumerate() {
            p[axis] += 1;
            tet[step + 1] = p;
        }
        if !even {
            tet.swap(2, 3);
        }
        emit(tet);
    }
}
