//! The shifted Schur complement S_rho and the discrete harmonic extension.
//!
//! With the free nodes split into subdomain interiors (I) and the interface
//! (B),
//!
//! ```text
//! S_rho = (A_BB - rho M_BB) - (A_BI - rho M_BI)(A_II - rho M_II)^-1 (A_IB - rho M_IB)
//! ```
//!
//! is applied matrix-free: the interior solve splits into independent
//! per-subdomain solves backed by banded LDL^T factorizations computed once
//! per shift. The harmonic extension shares the same factorizations and
//! returns the volume vector whose shifted residual vanishes at every
//! interior node.
//!
//! Validity of a context is exactly positive definiteness of every shifted
//! interior block; a failed factorization therefore signals that the shift
//! reached the interior coercivity threshold.

use crate::banded::{BandedLdlt, BandedSym};
use crate::error::Error;
use crate::partition::BlockView;
use crate::Result;

/// Relative pivot floor distinguishing genuine indefiniteness from roundoff.
const PIVOT_TOL_REL: f64 = 1e-13;

/// The interface mass matrix h^{d-1} I.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceMass {
    pub scale: f64,
}

impl InterfaceMass {
    pub fn new(dim: usize, h: f64) -> Self {
        InterfaceMass {
            scale: h.powi(dim as i32 - 1),
        }
    }

    pub fn inner(&self, u: &[f64], w: &[f64]) -> f64 {
        self.scale * u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }
}

/// Per-shift state: factorizations of every (A_II - rho M_II) block.
///
/// Immutable after construction; applications are read-only.
pub struct SchurContext<'a> {
    pub rho: f64,
    pub blocks: &'a BlockView<'a>,
    pub interface_mass: InterfaceMass,
    factors: Vec<Option<BandedLdlt>>,
}

impl std::fmt::Debug for SchurContext<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SchurContext(rho={}, subdomains={})",
            self.rho,
            self.factors.len()
        )
    }
}

impl<'a> SchurContext<'a> {
    pub fn n_interface(&self) -> usize {
        self.blocks.part.n_interface()
    }

    fn check_dim(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n_interface() {
            return Err(Error::Argument(format!(
                "interface vector length {} does not match |interface| = {}",
                u.len(),
                self.n_interface()
            )));
        }
        Ok(())
    }

    /// Solves (A_II - rho M_II) s = t on subdomain `k`.
    fn solve_interior(&self, k: usize, t: &mut [f64]) {
        if let Some(f) = &self.factors[k] {
            f.solve_in_place(t);
        }
    }

    /// t = (A_IB - rho M_IB) u on subdomain `k`.
    fn coupling_apply(&self, k: usize, u: &[f64]) -> Vec<f64> {
        let bv = self.blocks;
        let ni = bv.part.interior_of[k].len();
        let mut t = vec![0.0; ni];
        for i in 0..ni {
            let mut s = 0.0;
            for (j, v) in bv.a_ib[k].row(i) {
                s += v * u[j];
            }
            for (j, v) in bv.m_ib[k].row(i) {
                s -= self.rho * v * u[j];
            }
            t[i] = s;
        }
        t
    }
}

/// Factors every shifted interior block at `rho`.
///
/// Fails with [`Error::ShiftTooLarge`] when some block is no longer positive
/// definite, i.e. when `rho` reached the smallest interior eigenvalue.
pub fn make_context<'a>(blocks: &'a BlockView<'a>, rho: f64) -> Result<SchurContext<'a>> {
    let part = blocks.part;
    let mut factors = Vec::with_capacity(part.n_subdomains);
    for k in 0..part.n_subdomains {
        let ni = part.interior_of[k].len();
        if ni == 0 {
            factors.push(None);
            continue;
        }
        let aii = &blocks.a_ii[k];
        let mii = &blocks.m_ii[k];
        let mut bw = 0usize;
        for i in 0..ni {
            for (j, _) in aii.row(i) {
                bw = bw.max(i.abs_diff(j));
            }
        }
        let mut band = BandedSym::zeros(ni, bw);
        for i in 0..ni {
            for (j, v) in aii.row(i) {
                if j <= i {
                    band.add(i, j, v);
                }
            }
            for (j, v) in mii.row(i) {
                if j <= i {
                    band.add(i, j, -rho * v);
                }
            }
        }
        let f = band.factor_ldlt(PIVOT_TOL_REL).map_err(|e| match e {
            Error::ShiftTooLarge(msg) => Error::ShiftTooLarge(format!(
                "shift {rho} reaches the coercivity threshold of subdomain {k}: {msg}"
            )),
            other => other,
        })?;
        factors.push(Some(f));
    }
    Ok(SchurContext {
        rho,
        blocks,
        interface_mass: InterfaceMass::new(part.dim, part.h),
        factors,
    })
}

/// y = S_rho u, matrix-free.
pub fn apply_schur(ctx: &SchurContext, u: &[f64]) -> Result<Vec<f64>> {
    ctx.check_dim(u)?;
    let bv = ctx.blocks;
    let nb = ctx.n_interface();
    let mut y = vec![0.0; nb];
    for i in 0..nb {
        let mut s = 0.0;
        for (j, v) in bv.a_bb.row(i) {
            s += v * u[j];
        }
        for (j, v) in bv.m_bb.row(i) {
            s -= ctx.rho * v * u[j];
        }
        y[i] = s;
    }
    for k in 0..bv.part.n_subdomains {
        if bv.part.interior_of[k].is_empty() {
            continue;
        }
        let mut t = ctx.coupling_apply(k, u);
        ctx.solve_interior(k, &mut t);
        // y -= (A_IB - rho M_IB)^T t
        bv.a_ib[k].matvec_transpose_add(&t, -1.0, &mut y);
        bv.m_ib[k].matvec_transpose_add(&t, ctx.rho, &mut y);
    }
    Ok(y)
}

/// u^T S_rho u.
pub fn schur_quadratic_form(ctx: &SchurContext, u: &[f64]) -> Result<f64> {
    let y = apply_schur(ctx, u)?;
    Ok(u.iter().zip(&y).map(|(a, b)| a * b).sum())
}

/// Discrete harmonic extension of interface values `u` into the volume, in
/// the original free-node ordering: interface part `u`, interior part
/// `-(A_II - rho M_II)^-1 (A_IB - rho M_IB) u`.
pub fn extend(ctx: &SchurContext, u: &[f64]) -> Result<Vec<f64>> {
    ctx.check_dim(u)?;
    let bv = ctx.blocks;
    let part = bv.part;
    let mut v = vec![0.0; part.n_free()];
    for (g, &f) in part.interface.iter().enumerate() {
        v[f] = u[g];
    }
    for k in 0..part.n_subdomains {
        if part.interior_of[k].is_empty() {
            continue;
        }
        let mut t = ctx.coupling_apply(k, u);
        ctx.solve_interior(k, &mut t);
        for (li, &f) in part.interior_of[k].iter().enumerate() {
            v[f] = -t[li];
        }
    }
    Ok(v)
}

/// ||H_rho u||_M / ||u||_{M_Gamma}: volume L2 norm of the extension over the
/// interface norm of its trace.
pub fn extension_norm_ratio(ctx: &SchurContext, u: &[f64]) -> Result<f64> {
    let gamma_norm = ctx.interface_mass.norm(u);
    if gamma_norm == 0.0 {
        return Err(Error::Argument("extension ratio of the zero vector".into()));
    }
    let v = extend(ctx, u)?;
    let m_norm = ctx.blocks.m.bilinear(&v, &v).sqrt();
    Ok(m_norm / gamma_norm)
}

/// a_rho(v, w) = v^T (A - rho M) w over the volume.
pub fn shifted_energy(ctx: &SchurContext, v: &[f64], w: &[f64]) -> f64 {
    ctx.blocks.a.bilinear(v, w) - ctx.rho * ctx.blocks.m.bilinear(v, w)
}

/// Densifies S_rho by probing with unit vectors; meant for the dense
/// eigensolver path and debug dumps on small interfaces.
pub fn dense_schur(ctx: &SchurContext) -> Result<nalgebra::DMatrix<f64>> {
    let nb = ctx.n_interface();
    let mut s = nalgebra::DMatrix::zeros(nb, nb);
    let mut e = vec![0.0; nb];
    for j in 0..nb {
        e[j] = 1.0;
        let col = apply_schur(ctx, &e)?;
        e[j] = 0.0;
        for i in 0..nb {
            s[(i, j)] = col[i];
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Coefficient};
    use crate::mesh::{build_mesh, DomainSpec, MeshSize, Shape};
    use crate::partition::{blocks, partition};
    use nalgebra::{DMatrix, DVector};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        mesh: crate::mesh::Mesh,
        a: crate::assembly::SparseSymMatrix,
        m: crate::assembly::SparseSymMatrix,
        part: crate::partition::Partition,
    }

    fn fixture(shape: Shape, jc: u32, jh: u32) -> Fixture {
        let mesh = build_mesh(
            DomainSpec::new(shape),
            MeshSize::new(jc).unwrap(),
            MeshSize::new(jh).unwrap(),
        )
        .unwrap();
        let (a, m, _) = assemble(&mesh, &Coefficient::laplace()).unwrap();
        let part = partition(&mesh).unwrap();
        Fixture { mesh, a, m, part }
    }

    fn random_vec(n: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Independent dense route: permute (A - rho M) to block order and
    /// eliminate the interior with dense linear algebra.
    fn dense_schur_oracle(fx: &Fixture, rho: f64) -> DMatrix<f64> {
        let n = fx.part.n_free();
        let nb = fx.part.n_interface();
        let ni = n - nb;
        let mut c: DMatrix<f64> = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in fx.a.row(i) {
                c[(fx.part.perm[i], fx.part.perm[j])] += v;
            }
            for (j, v) in fx.m.row(i) {
                c[(fx.part.perm[i], fx.part.perm[j])] -= rho * v;
            }
        }
        let cii = c.view((0, 0), (ni, ni)).into_owned();
        let cib = c.view((0, ni), (ni, nb)).into_owned();
        let cbb = c.view((ni, ni), (nb, nb)).into_owned();
        let x = cii.lu().solve(&cib).unwrap();
        cbb - cib.transpose() * x
    }

    #[test]
    fn matches_dense_oracle_on_small_meshes() {
        let fx = fixture(Shape::UnitSquare, 1, 2);
        let bv = blocks(&fx.a, &fx.m, &fx.part).unwrap();
        for rho in [0.0, 10.0, 31.0] {
            let ctx = make_context(&bv, rho).unwrap();
            let probe = dense_schur(&ctx).unwrap();
            let oracle = dense_schur_oracle(&fx, rho);
            let scale = oracle.abs().max();
            for i in 0..probe.nrows() {
                for j in 0..probe.ncols() {
                    assert!(
                        (probe[(i, j)] - oracle[(i, j)]).abs() <= 1e-11 * scale,
                        "rho={rho} entry ({i},{j}): {} vs {}",
                        probe[(i, j)],
                        oracle[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn zero_maps_to_zero_and_dims_are_checked() {
        let fx = fixture(Shape::UnitSquare, 1, 2);
        let bv = blocks(&fx.a, &fx.m, &fx.part).unwrap();
        let ctx = make_context(&bv, 0.0).unwrap();
        let y = apply_schur(&ctx, &vec![0.0; ctx.n_interface()]).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
        assert!(apply_schur(&ctx, &[1.0]).is_err());
    }

    #[test]
    fn schur_application_is_symmetric() {
        let fx = fixture(Shape::LShape2D, 2, 4);
        let bv = blocks(&fx.a, &fx.m, &fx.part).unwrap();
        let ctx = make_context(&bv, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let u = random_vec(ctx.n_interface(), &mut rng);
            let w = random_vec(ctx.n_interface(), &mut rng);
            let su = apply_schur(&ctx, &u).unwrap();
            let sw = apply_schur(&ctx, &w).unwrap();
            let a: f64 = su.iter().zip(&w).map(|(x, y)| x * y).sum();
            let b: f64 = sw.iter().zip(&u).map(|(x, y)| x * y).sum();
            let scale = a.abs().max(b.abs()).max(1e-300);
            assert!((a - b).abs() / scale <= 1e-12);
        }
    }

    #[test]
    fn classical_schur_complement_is_spd() {
        let fx = fixture(Shape::UnitCube, 1, 2);
        let bv = blocks(&fx.a, &fx.m, &fx.part).unwrap();
        let ctx = make_context(&bv, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let u = random_vec(ctx.n_interface(), &mut rng);
            assert!(schur_quadratic_form(&ctx, &u).unwrap() > 0.0);
        }
    }

    #[test]
    fn shift_beyond_coercivity_fails() {
        // each subdomain interior block is the 1x1 matrix [4 - rho/32]
        let fx = fixture(Shape::UnitSquare, 1, 2);
        let bv = blocks(&fx.a, &fx.m, &fx.part).unwrap();
        assert!(make_context(&bv, 127.0).is_ok());
        assert!(matches!(
            make_context(&bv, 129.0),
            Err(Error::ShiftTooLarge(_))
        ));
    }

    #[test]
    fn extension_interior_residual_vanishes() {
        for (shape, jc, jh) in [(Shape::UnitSquare, 1u32, 3u32), (Shape::UnitCube, 1, 2)] {
            let fx = fixture(shape, jc, jh);
            let bv = blocks(&fx.a, &fx.m, &fx.part).unwrap();
            let ctx = make_context(&bv, 7.5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            let u = random_vec(ctx.n_interface(), &mut rng);
            let v = extend(&ctx, &u).unwrap();
            // residual (A - rho M) v at interior free nodes
            let n = fx.part.n_free();
            let mut av = vec![0.0; n];
            let mut mv = vec![0.0; n];
            fx.a.matvec(&v, &mut av);
            fx.m.matvec(&v, &mut mv);
            let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            for set in &fx.part.interior_of {
                for &f in set {
                    let r = av[f] - ctx.rho * mv[f];
                    assert!(
                        r.abs() <= 1e-10 * unorm,
                        "{shape:?}: interior residual {r:.3e}"
                    );
                }
            }
            // trace is preserved exactly
            for (g, &f) in fx.part.interface.iter().enumerate() {
                assert_eq!(v[f], u[g]);
            }
        }
    }

    #[test]
    fn extension_minimizes_shifted_energy() {
        let fx = fixture(Shape::UnitSquare, 1, 3);
        let bv = blocks(&fx.a, &fx.m, &fx.part).unwrap();
        let ctx = make_context(&bv, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let u = random_vec(ctx.n_interface(), &mut rng);
        let v = extend(&ctx, &u).unwrap();
        let base = shifted_energy(&ctx, &v, &v);
        for _ in 0..20 {
            let mut w = v.clone();
            for set in &fx.part.interior_of {
                for &f in set {
                    w[f] += rng.gen_range(-0.5..0.5);
                }
            }
            let competitor = shifted_energy(&ctx, &w, &w);
            assert!(base <= competitor + 1e-12 * competitor.abs());
        }
    }

    #[test]
    fn quadratic_form_decreases_in_rho() {
        let fx = fixture(Shape::LShape2D, 2, 3);
        let bv = blocks(&fx.a, &fx.m, &fx.part).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let n = fx.part.n_interface();
        let us: Vec<Vec<f64>> = (0..5).map(|_| random_vec(n, &mut rng)).collect();
        let mut prev: Option<Vec<f64>> = None;
        for rho in [0.0, 4.0, 8.0, 12.0] {
            let ctx = make_context(&bv, rho).unwrap();
            let vals: Vec<f64> = us
                .iter()
                .map(|u| schur_quadratic_form(&ctx, u).unwrap())
                .collect();
            if let Some(p) = prev {
                for (hi, lo) in p.iter().zip(&vals) {
                    assert!(lo <= hi);
                }
            }
            prev = Some(vals);
        }
    }

    #[test]
    fn interface_mass_is_a_scalar_matrix() {
        let fx = fixture(Shape::UnitCube, 1, 2);
        let bv = blocks(&fx.a, &fx.m, &fx.part).unwrap();
        let ctx = make_context(&bv, 0.0).unwrap();
        let h = fx.mesh.h.value();
        assert_eq!(ctx.interface_mass.scale, h * h);
        let u = vec![1.0; ctx.n_interface()];
        let expect = h * h * ctx.n_interface() as f64;
        assert!((ctx.interface_mass.inner(&u, &u) - expect).abs() <= 1e-15 * expect);
    }
}
