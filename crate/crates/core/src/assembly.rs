//! P1 stiffness and mass assembly with homogeneous Dirichlet conditions.
//!
//! The bilinear form is `a(u,v) = sum_ij int a_ij d_i u d_j v` with the
//! coefficient sampled at element centroids (exact for the identity
//! coefficient, second-order accurate for Lipschitz coefficients). The mass
//! matrix is the consistent P1 mass matrix. Dirichlet conditions are imposed
//! by restricting both matrices to the free (non-boundary) nodes.

use std::io::Write;
use std::sync::Arc;

use crate::error::Error;
use crate::mesh::Mesh;
use crate::Result;

/// Pointwise d x d coefficient matrix of the elliptic operator.
#[derive(Clone)]
pub struct Coefficient {
    name: String,
    f: Option<Arc<dyn Fn(&[f64]) -> [[f64; 3]; 3] + Send + Sync>>,
}

impl Coefficient {
    /// Identity coefficient (the Laplacian).
    pub fn laplace() -> Self {
        Coefficient {
            name: "laplace".into(),
            f: None,
        }
    }

    /// Arbitrary coefficient; must return a symmetric positive definite
    /// matrix (upper-left d x d block is used).
    pub fn from_fn(
        name: impl Into<String>,
        f: impl Fn(&[f64]) -> [[f64; 3]; 3] + Send + Sync + 'static,
    ) -> Self {
        Coefficient {
            name: name.into(),
            f: Some(Arc::new(f)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, x: &[f64]) -> [[f64; 3]; 3] {
        match &self.f {
            None => {
                let mut m = [[0.0; 3]; 3];
                for (k, row) in m.iter_mut().enumerate() {
                    row[k] = 1.0;
                }
                m
            }
            Some(f) => f(x),
        }
    }
}

impl std::fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Coefficient({})", self.name)
    }
}

/// Symmetric sparse matrix in compressed-row layout (both triangles stored).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    pub n: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
    pub symmetric: bool,
}

impl SparseSymMatrix {
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut last = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                last = Some((i, j));
            }
            row_offsets[i + 1] = col_indices.len();
        }
        // rows with no entries inherit the previous offset
        for i in 0..n {
            if row_offsets[i + 1] < row_offsets[i] {
                row_offsets[i + 1] = row_offsets[i];
            }
        }
        SparseSymMatrix {
            n,
            row_offsets,
            col_indices,
            values,
            symmetric: true,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for (j, v) in self.row(i) {
                s += v * x[j];
            }
            y[i] = s;
        }
    }

    /// x^T A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let mut s = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for (j, v) in self.row(i) {
                row += v * y[j];
            }
            s += x[i] * row;
        }
        s
    }

    /// Largest absolute row sum; cheap operator-norm estimate.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum relative symmetry defect, for validation.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs() / scale);
            }
        }
        worst
    }

    /// Submatrix on `keep` (indices must be strictly increasing).
    pub fn restrict(&self, keep: &[usize]) -> SparseSymMatrix {
        debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        let mut new_index = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            new_index[old] = new;
        }
        let mut triplets = Vec::new();
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (old_j, v) in self.row(old_i) {
                let new_j = new_index[old_j];
                if new_j != usize::MAX {
                    triplets.push((new_i, new_j, v));
                }
            }
        }
        SparseSymMatrix::from_triplets(keep.len(), triplets)
    }

    /// Coordinate-format dump of the lower triangle, one `i j value` per
    /// line, 0-based.
    pub fn write_coo_lower(&self, w: &mut impl Write) -> Result<()> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j <= i {
                    writeln!(w, "{} {} {:.17e}", i, j, v)?;
                }
            }
        }
        Ok(())
    }
}

fn check_spd_coeff(a: &[[f64; 3]; 3], d: usize, x: &[f64]) -> Result<()> {
    for i in 0..d {
        for j in 0..d {
            if (a[i][j] - a[j][i]).abs() > 1e-12 * (1.0 + a[i][j].abs()) {
                return Err(Error::Assembly(format!(
                    "coefficient matrix not symmetric at {x:?}"
                )));
            }
        }
    }
    // leading principal minors
    let m1 = a[0][0];
    let m2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let spd = match d {
        2 => m1 > 0.0 && m2 > 0.0,
        3 => {
            let m3 = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
            m1 > 0.0 && m2 > 0.0 && m3 > 0.0
        }
        _ => unreachable!(),
    };
    if !spd {
        return Err(Error::Assembly(format!(
            "coefficient matrix not positive definite at {x:?}"
        )));
    }
    Ok(())
}

/// Gradients of the barycentric basis functions of element `e`; also returns
/// the signed element volume.
fn p1_gradients(mesh: &Mesh, e: usize) -> Result<(Vec<[f64; 3]>, f64)> {
    let d = mesh.dim();
    let nodes = mesh.element(e);
    let vol = mesh.element_volume(e);
    if vol <= 0.0 {
        return Err(Error::Assembly(format!(
            "element {e} has non-positive volume {vol:.3e}"
        )));
    }
    let a = mesh.nodes[nodes[0]];
    let mut grads = vec![[0.0f64; 3]; d + 1];
    if d == 2 {
        let b = mesh.nodes[nodes[1]];
        let c = mesh.nodes[nodes[2]];
        let det = 2.0 * vol;
        // rows of the inverse edge matrix
        grads[1] = [(c[1] - a[1]) / det, -(c[0] - a[0]) / det, 0.0];
        grads[2] = [-(b[1] - a[1]) / det, (b[0] - a[0]) / det, 0.0];
    } else {
        let b = mesh.nodes[nodes[1]];
        let c = mesh.nodes[nodes[2]];
        let dd = mesh.nodes[nodes[3]];
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let w = [dd[0] - a[0], dd[1] - a[1], dd[2] - a[2]];
        let det = 6.0 * vol;
        let cross = |p: [f64; 3], q: [f64; 3]| {
            [
                p[1] * q[2] - p[2] * q[1],
                p[2] * q[0] - p[0] * q[2],
                p[0] * q[1] - p[1] * q[0],
            ]
        };
        let vw = cross(v, w);
        let wu = cross(w, u);
        let uv = cross(u, v);
        grads[1] = [vw[0] / det, vw[1] / det, vw[2] / det];
        grads[2] = [wu[0] / det, wu[1] / det, wu[2] / det];
        grads[3] = [uv[0] / det, uv[1] / det, uv[2] / det];
    }
    for k in 0..3 {
        grads[0][k] = -(1..=d).map(|i| grads[i][k]).sum::<f64>();
    }
    Ok((grads, vol))
}

/// Assembles stiffness and mass over all mesh nodes, without boundary
/// elimination. Used for whole-domain checks such as the mass total.
pub fn assemble_unconstrained(
    mesh: &Mesh,
    coeff: &Coefficient,
) -> Result<(SparseSymMatrix, SparseSymMatrix)> {
    let d = mesh.dim();
    let nv = d + 1;
    let mut a_trip = Vec::with_capacity(mesh.n_elements() * nv * nv);
    let mut m_trip = Vec::with_capacity(mesh.n_elements() * nv * nv);
    let mass_scale = 1.0 / ((d + 1) as f64 * (d + 2) as f64);
    for e in 0..mesh.n_elements() {
        let (grads, vol) = p1_gradients(mesh, e)?;
        let nodes = mesh.element(e);
        let mut centroid = [0.0f64; 3];
        for &p in nodes {
            for k in 0..d {
                centroid[k] += mesh.nodes[p][k] / nv as f64;
            }
        }
        let am = coeff.eval(&centroid[..d]);
        check_spd_coeff(&am, d, &centroid[..d])?;
        for p in 0..nv {
            // a * grad(phi_p)
            let mut ag = [0.0f64; 3];
            for i in 0..d {
                for j in 0..d {
                    ag[i] += am[i][j] * grads[p][j];
                }
            }
            for q in 0..nv {
                let mut k = 0.0;
                for i in 0..d {
                    k += ag[i] * grads[q][i];
                }
                a_trip.push((nodes[p], nodes[q], vol * k));
                let mass = vol * mass_scale * if p == q { 2.0 } else { 1.0 };
                m_trip.push((nodes[p], nodes[q], mass));
            }
        }
    }
    let a = SparseSymMatrix::from_triplets(mesh.n_nodes(), a_trip);
    let m = SparseSymMatrix::from_triplets(mesh.n_nodes(), m_trip);
    Ok((a, m))
}

/// Assembles the free-node stiffness and mass matrices (Dirichlet rows and
/// columns eliminated) and returns the free-node index list.
pub fn assemble(
    mesh: &Mesh,
    coeff: &Coefficient,
) -> Result<(SparseSymMatrix, SparseSymMatrix, Vec<usize>)> {
    let (a_all, m_all) = assemble_unconstrained(mesh, coeff)?;
    let free: Vec<usize> = (0..mesh.n_nodes())
        .filter(|&i| !mesh.boundary_node[i])
        .collect();
    Ok((a_all.restrict(&free), m_all.restrict(&free), free))
}

/// (v^T A v) / (v^T M v).
pub fn rayleigh_quotient(a: &SparseSymMatrix, m: &SparseSymMatrix, v: &[f64]) -> Result<f64> {
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::Argument("Rayleigh quotient of the zero vector".into()));
    }
    Ok(a.bilinear(v, v) / m.bilinear(v, v))
}
