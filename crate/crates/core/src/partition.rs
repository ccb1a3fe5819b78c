//! Interior/interface classification of the free nodes and block views.
//!
//! Subdomains are the coarse cells. A free node is an interface node exactly
//! when it lies on a coarse-cell facet, which on the dyadic lattice means
//! some coordinate index is a multiple of the refinement ratio H/h. The
//! classification is therefore exact integer arithmetic; no geometric
//! tolerances are involved.

use std::collections::HashMap;

use crate::assembly::SparseSymMatrix;
use crate::error::Error;
use crate::mesh::Mesh;
use crate::Result;

/// Classification of the free nodes into per-subdomain interiors and the
/// interface.
#[derive(Debug, Clone)]
pub struct Partition {
    pub n_subdomains: usize,
    /// Free-node indices interior to each subdomain, ascending within each.
    pub interior_of: Vec<Vec<usize>>,
    /// Free-node indices on the interface, ascending.
    pub interface: Vec<usize>,
    /// Maps an original free index to its position in
    /// `[interiors of subdomain 0, 1, ..., interface]` order.
    pub perm: Vec<usize>,
    /// Mesh node index of each free node.
    pub free_nodes: Vec<usize>,
    pub dim: usize,
    /// Fine mesh size.
    pub h: f64,
}

impl Partition {
    pub fn n_free(&self) -> usize {
        self.perm.len()
    }

    pub fn n_interface(&self) -> usize {
        self.interface.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_free() - self.n_interface()
    }

    /// Reorders a free-node vector into `[interiors..., interface]` order.
    pub fn to_permuted(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_free());
        let mut y = vec![0.0; x.len()];
        for (f, &p) in self.perm.iter().enumerate() {
            y[p] = x[f];
        }
        y
    }

    /// Inverse of [`Partition::to_permuted`].
    pub fn to_original(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n_free());
        let mut x = vec![0.0; y.len()];
        for (f, &p) in self.perm.iter().enumerate() {
            x[f] = y[p];
        }
        x
    }

    /// One-line summary used by the CLI.
    pub fn stats_string(&self) -> String {
        let sizes: Vec<usize> = self.interior_of.iter().map(|s| s.len()).collect();
        let min = sizes.iter().min().copied().unwrap_or(0);
        let max = sizes.iter().max().copied().unwrap_or(0);
        format!(
            "N={} |free|={} |interface|={} interior sizes {}..{}",
            self.n_subdomains,
            self.n_free(),
            self.n_interface(),
            min,
            max
        )
    }
}

/// Classifies the free nodes of `mesh` by subdomain (= coarse cell).
pub fn partition(mesh: &Mesh) -> Result<Partition> {
    let dim = mesh.dim();
    let r = mesh.refinement_ratio() as i64;

    // Coarse-cell lattice coordinates -> subdomain index, recovered from the
    // element assignment so both stay consistent by construction.
    let mut cell_index: HashMap<[i64; 3], usize> = HashMap::new();
    for e in 0..mesh.n_elements() {
        let mut corner = mesh.lattice[mesh.element(e)[0]];
        for &nd in mesh.element(e) {
            let p = mesh.lattice[nd];
            for a in 0..3 {
                corner[a] = corner[a].min(p[a]);
            }
        }
        let cell = [corner[0] / r, corner[1] / r, corner[2] / r];
        cell_index.insert(cell, mesh.coarse_cell_of_element[e]);
    }
    let n_subdomains = mesh.n_coarse_cells();
    if cell_index.len() != n_subdomains {
        return Err(Error::Internal(format!(
            "recovered {} coarse cells, mesh declares {}",
            cell_index.len(),
            n_subdomains
        )));
    }

    let free_nodes: Vec<usize> = (0..mesh.n_nodes())
        .filter(|&i| !mesh.boundary_node[i])
        .collect();

    let mut interior_of = vec![Vec::new(); n_subdomains];
    let mut interface = Vec::new();
    for (f, &nd) in free_nodes.iter().enumerate() {
        let p = mesh.lattice[nd];
        let on_facet = (0..dim).any(|a| p[a] % r == 0);
        if on_facet {
            interface.push(f);
        } else {
            let cell = [p[0] / r, p[1] / r, if dim == 3 { p[2] / r } else { 0 }];
            let k = *cell_index.get(&cell).ok_or_else(|| {
                Error::Internal(format!("free node {nd} at {p:?} has no coarse cell"))
            })?;
            interior_of[k].push(f);
        }
    }

    let mut perm = vec![usize::MAX; free_nodes.len()];
    let mut pos = 0;
    for set in &interior_of {
        for &f in set {
            perm[f] = pos;
            pos += 1;
        }
    }
    for &f in &interface {
        perm[f] = pos;
        pos += 1;
    }

    Ok(Partition {
        n_subdomains,
        interior_of,
        interface,
        perm,
        free_nodes,
        dim,
        h: mesh.h.value(),
    })
}

/// Rectangular sparse block in compressed-row layout.
#[derive(Debug, Clone)]
pub struct SparseRect {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRect {
    fn from_triplets(n_rows: usize, n_cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        for (i, j, v) in t {
            col_indices.push(j);
            values.push(v);
            row_offsets[i + 1] = col_indices.len();
        }
        for i in 0..n_rows {
            if row_offsets[i + 1] < row_offsets[i] {
                row_offsets[i + 1] = row_offsets[i];
            }
        }
        SparseRect {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// y = B x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let mut s = 0.0;
            for (j, v) in self.row(i) {
                s += v * x[j];
            }
            y[i] = s;
        }
    }

    /// y += alpha * B^T x.
    pub fn matvec_transpose_add(&self, x: &[f64], alpha: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows);
        assert_eq!(y.len(), self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                y[j] += alpha * v * x[i];
            }
        }
    }
}

/// Blocks of (A, M) in the `[interiors..., interface]` ordering.
///
/// Interior blocks are stored per subdomain in local indexing; coupling
/// blocks map local interior rows to global interface columns. The original
/// free-node matrices are kept for whole-volume quadratic forms.
#[derive(Debug)]
pub struct BlockView<'a> {
    pub a: &'a SparseSymMatrix,
    pub m: &'a SparseSymMatrix,
    pub part: &'a Partition,
    pub a_ii: Vec<SparseSymMatrix>,
    pub m_ii: Vec<SparseSymMatrix>,
    pub a_ib: Vec<SparseRect>,
    pub m_ib: Vec<SparseRect>,
    pub a_bb: SparseSymMatrix,
    pub m_bb: SparseSymMatrix,
}

#[derive(Clone, Copy)]
enum NodeClass {
    Interior { subdomain: usize, local: usize },
    Interface { global: usize },
}

/// Extracts the block views of `a` and `m` induced by the partition.
pub fn blocks<'a>(
    a: &'a SparseSymMatrix,
    m: &'a SparseSymMatrix,
    part: &'a Partition,
) -> Result<BlockView<'a>> {
    let n = part.n_free();
    if a.n != n || m.n != n {
        return Err(Error::Argument(format!(
            "matrix dimensions {}/{} do not match partition with {} free nodes",
            a.n, m.n, n
        )));
    }
    let mut class = vec![
        NodeClass::Interface { global: usize::MAX };
        n
    ];
    for (k, set) in part.interior_of.iter().enumerate() {
        for (local, &f) in set.iter().enumerate() {
            class[f] = NodeClass::Interior { subdomain: k, local };
        }
    }
    for (g, &f) in part.interface.iter().enumerate() {
        class[f] = NodeClass::Interface { global: g };
    }

    let nb = part.interface.len();
    let extract = |mat: &SparseSymMatrix| -> Result<(Vec<SparseSymMatrix>, Vec<SparseRect>, SparseSymMatrix)> {
        let mut ii: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); part.n_subdomains];
        let mut ib: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); part.n_subdomains];
        let mut bb: Vec<(usize, usize, f64)> = Vec::new();
        for f in 0..n {
            match class[f] {
                NodeClass::Interior { subdomain: k, local: li } => {
                    for (c, v) in mat.row(f) {
                        match class[c] {
                            NodeClass::Interior { subdomain: k2, local: lj } => {
                                if k2 != k {
                                    return Err(Error::Internal(format!(
                                        "coupling between interiors of subdomains {k} and {k2}"
                                    )));
                                }
                                ii[k].push((li, lj, v));
                            }
                            NodeClass::Interface { global: g } => ib[k].push((li, g, v)),
                        }
                    }
                }
                NodeClass::Interface { global: gi } => {
                    for (c, v) in mat.row(f) {
                        if let NodeClass::Interface { global: gj } = class[c] {
                            bb.push((gi, gj, v));
                        }
                    }
                }
            }
        }
        let ii_mats = ii
            .into_iter()
            .enumerate()
            .map(|(k, t)| SparseSymMatrix::from_triplets(part.interior_of[k].len(), t))
            .collect();
        let ib_mats = ib
            .into_iter()
            .enumerate()
            .map(|(k, t)| SparseRect::from_triplets(part.interior_of[k].len(), nb, t))
            .collect();
        Ok((ii_mats, ib_mats, SparseSymMatrix::from_triplets(nb, bb)))
    };

    let (a_ii, a_ib, a_bb) = extract(a)?;
    let (m_ii, m_ib, m_bb) = extract(m)?;
    Ok(BlockView {
        a,
        m,
        part,
        a_ii,
        m_ii,
        a_ib,
        m_ib,
        a_bb,
        m_bb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Coefficient};
    use crate::mesh::{build_mesh, DomainSpec, MeshSize, Shape};

    fn square_quarters() -> (crate::mesh::Mesh, SparseSymMatrix, SparseSymMatrix) {
        let mesh = build_mesh(
            DomainSpec::new(Shape::UnitSquare),
            MeshSize::new(1).unwrap(),
            MeshSize::new(2).unwrap(),
        )
        .unwrap();
        let (a, m, _) = assemble(&mesh, &Coefficient::laplace()).unwrap();
        (mesh, a, m)
    }

    #[test]
    fn square_cross_classification() {
        let (mesh, _, _) = square_quarters();
        let p = partition(&mesh).unwrap();
        assert_eq!(p.n_subdomains, 4);
        assert_eq!(p.n_free(), 9);
        // Brute-force coordinate classification of the 9 interior lattice
        // nodes: interface iff x = 1/2 or y = 1/2.
        let mut expect_interface = Vec::new();
        for (f, &nd) in p.free_nodes.iter().enumerate() {
            let c = mesh.nodes[nd];
            if c[0] == 0.5 || c[1] == 0.5 {
                expect_interface.push(f);
            }
        }
        assert_eq!(expect_interface.len(), 5);
        assert_eq!(p.interface, expect_interface);
        for set in &p.interior_of {
            assert_eq!(set.len(), 1);
        }
    }

    #[test]
    fn degenerate_single_free_node_is_interface() {
        let mesh = build_mesh(
            DomainSpec::new(Shape::UnitCube),
            MeshSize::new(1).unwrap(),
            MeshSize::new(1).unwrap(),
        )
        .unwrap();
        let p = partition(&mesh).unwrap();
        assert_eq!(p.n_free(), 1);
        assert_eq!(p.n_interface(), 1);
        assert!(p.interior_of.iter().all(|s| s.is_empty()));
    }

    #[test]
    fn classes_partition_the_free_nodes() {
        let mesh = build_mesh(
            DomainSpec::new(Shape::LShape2D),
            MeshSize::new(2).unwrap(),
            MeshSize::new(4).unwrap(),
        )
        .unwrap();
        let p = partition(&mesh).unwrap();
        let mut seen = vec![false; p.n_free()];
        for set in &p.interior_of {
            for &f in set {
                assert!(!seen[f]);
                seen[f] = true;
            }
        }
        for &f in &p.interface {
            assert!(!seen[f]);
            seen[f] = true;
        }
        assert!(seen.iter().all(|&s| s));
        // permutation is a bijection
        let mut hit = vec![false; p.n_free()];
        for &q in &p.perm {
            assert!(!hit[q]);
            hit[q] = true;
        }
    }

    #[test]
    fn block_reassembly_reproduces_the_matrix() {
        let (mesh, a, m) = square_quarters();
        let p = partition(&mesh).unwrap();
        let bv = blocks(&a, &m, &p).unwrap();
        // rebuild the permuted matrix from the blocks and compare entrywise
        let n = p.n_free();
        let nb = p.n_interface();
        let ni = n - nb;
        let mut dense = vec![vec![0.0; n]; n];
        let mut offset = 0;
        for k in 0..p.n_subdomains {
            let sz = p.interior_of[k].len();
            for li in 0..sz {
                for (lj, v) in bv.a_ii[k].row(li) {
                    dense[offset + li][offset + lj] = v;
                }
                for (g, v) in bv.a_ib[k].row(li) {
                    dense[offset + li][ni + g] = v;
                    dense[ni + g][offset + li] = v;
                }
            }
            offset += sz;
        }
        for gi in 0..nb {
            for (gj, v) in bv.a_bb.row(gi) {
                dense[ni + gi][ni + gj] = v;
            }
        }
        for f1 in 0..n {
            for f2 in 0..n {
                let expect = a.get(f1, f2);
                let got = dense[p.perm[f1]][p.perm[f2]];
                assert!(
                    (expect - got).abs() <= 1e-15,
                    "mismatch at ({f1},{f2}): {expect} vs {got}"
                );
            }
        }
        // A_II is block-diagonal with 4 one-by-one blocks here
        assert!(bv.a_ii.iter().all(|b| b.n == 1));
    }

    #[test]
    fn mass_coupling_pattern_matches_stiffness() {
        let (mesh, a, m) = square_quarters();
        let p = partition(&mesh).unwrap();
        let bv = blocks(&a, &m, &p).unwrap();
        for k in 0..p.n_subdomains {
            assert_eq!(bv.a_ib[k].col_indices, bv.m_ib[k].col_indices);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (mesh, a, _) = square_quarters();
        let p = partition(&mesh).unwrap();
        let wrong = SparseSymMatrix::from_triplets(3, vec![(0, 0, 1.0)]);
        assert!(blocks(&a, &wrong, &p).is_err());
    }
}
