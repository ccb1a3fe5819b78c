//! Eigenvalue solvers: the interface problem, the volume reference problem
//! and the coarse initializer.
//!
//! The interface problem `S_rho u = theta M_Gamma u` reduces to a standard
//! symmetric problem because `M_Gamma` is a scalar matrix. The primary
//! solver is Lanczos iteration with full reorthogonalization on the
//! matrix-free operator; small interfaces fall back to densifying `S_rho`
//! and calling the dense symmetric eigensolver if the iteration stalls.
//!
//! The volume problem `A v = lambda M v` is solved by Lanczos on the inverse
//! operator `A^{-1} M`, which is self-adjoint in the M inner product; the
//! factorization is the banded LDL^T also used by the Schur module. This
//! route never touches the partition or Schur machinery, so it serves as the
//! oracle for the Newton-Schur iteration.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::assembly::{Coefficient, SparseSymMatrix};
use crate::banded::BandedSym;
use crate::error::Error;
use crate::mesh::{coarse_mesh, DomainSpec, MeshSize};
use crate::schur::{apply_schur, dense_schur, SchurContext};
use crate::Result;

/// Largest interface for which the dense fallback path is available.
pub const DENSE_INTERFACE_LIMIT: usize = 2000;

const PIVOT_TOL_REL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    SmallestOne,
    SmallestK(usize),
}

impl Which {
    pub fn k(self) -> usize {
        match self {
            Which::SmallestOne => 1,
            Which::SmallestK(k) => k,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigRequest {
    pub which: Which,
    /// Residual tolerance relative to the operator scale.
    pub tol: f64,
    /// Cap on operator applications.
    pub max_iters: usize,
    /// Seed for the deterministic pseudo-random start vector.
    pub seed: u64,
}

impl Default for EigRequest {
    fn default() -> Self {
        EigRequest {
            which: Which::SmallestOne,
            tol: 1e-12,
            max_iters: 20_000,
            seed: 0x5eed,
        }
    }
}

impl EigRequest {
    /// Request for the volume reference problem (tighter tolerance).
    pub fn reference() -> Self {
        EigRequest {
            tol: 1e-13,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Argument(format!("tolerance {} must be > 0", self.tol)));
        }
        if self.which.k() == 0 {
            return Err(Error::Argument("requested k = 0 eigenpairs".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Matching vectors, unit norm in the problem's inner product.
    pub vectors: Vec<Vec<f64>>,
    /// Verified residual norms, relative to the operator scale.
    pub residuals: Vec<f64>,
    /// Operator applications performed.
    pub iterations: usize,
}

impl EigResult {
    /// Largest deviation of the vectors from B-orthonormality under `inner`.
    pub fn orthonormality_defect(&self, inner: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
        let mut worst = 0.0f64;
        for (i, vi) in self.vectors.iter().enumerate() {
            for (j, vj) in self.vectors.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(vi, vj) - expect).abs());
            }
        }
        worst
    }
}

fn seeded_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Fixes the sign so the largest-magnitude component is positive; keeps
/// outputs deterministic across solver paths.
fn normalize_sign(v: &mut [f64]) {
    let mut idx = 0;
    let mut best = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Symmetric Lanczos with full reorthogonalization in a caller-supplied
/// inner product.
///
/// `apply` is the self-adjoint operator; `verify` computes the true relative
/// residual of a candidate pair in the original problem (so the reported
/// residuals are honest, not tridiagonal estimates). `largest` selects the
/// end of the Ritz spectrum to extract. Restarts from the best Ritz subspace
/// when the basis cap is reached without convergence.
struct Lanczos<'f> {
    n: usize,
    apply: &'f mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    inner: &'f dyn Fn(&[f64], &[f64]) -> f64,
    verify: &'f mut dyn FnMut(f64, &[f64], f64) -> Result<f64>,
    largest: bool,
    k: usize,
    tol: f64,
    max_basis: usize,
    max_applies: usize,
}

struct LanczosOutput {
    /// Ritz values at the requested end, best end first (descending for
    /// `largest`, ascending otherwise).
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    applies: usize,
}

impl Lanczos<'_> {
    fn ritz(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        crate::dense_eig::sym_tridiag_eig(alpha, &beta[..alpha.len() - 1])
    }

    fn run(&mut self, mut start: Vec<f64>) -> Result<LanczosOutput> {
        let n = self.n;
        let k = self.k;
        if k > n {
            return Err(Error::Argument(format!(
                "requested {k} eigenpairs from a problem of size {n}"
            )));
        }
        let limit = self.max_basis.min(n);
        let mut applies = 0usize;
        let mut best_residual = f64::INFINITY;
        let mut seed_bump = 1u64;
        loop {
            let mut basis: Vec<Vec<f64>> = Vec::new();
            let mut alpha: Vec<f64> = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            let nrm = (self.inner)(&start, &start).sqrt();
            if !(nrm > 0.0) {
                return Err(Error::Argument("zero start vector".into()));
            }
            let mut v0 = start.clone();
            for x in v0.iter_mut() {
                *x /= nrm;
            }
            basis.push(v0);
            let mut scale_est = 0.0f64;
            loop {
                if applies >= self.max_applies {
                    return Err(Error::NoConvergence {
                        iterations: applies,
                        best_residual,
                    });
                }
                let vj = basis.last().unwrap().clone();
                let mut w = (self.apply)(&vj)?;
                applies += 1;
                let a = (self.inner)(&w, &vj);
                alpha.push(a);
                // full reorthogonalization, two sweeps
                for _ in 0..2 {
                    for q in &basis {
                        let c = (self.inner)(&w, q);
                        for (wi, qi) in w.iter_mut().zip(q) {
                            *wi -= c * qi;
                        }
                    }
                }
                let b = (self.inner)(&w, &w).sqrt();
                scale_est = scale_est.max(a.abs()).max(b);
                let m = alpha.len();
                let breakdown = b <= 1e-14 * scale_est.max(1.0);
                let exhausted = m == limit || breakdown;
                if m >= k && (m % 5 == 0 || exhausted) {
                    let (vals, vecs) = Self::ritz(&alpha, &beta)?;
                    let idx: Vec<usize> = if self.largest {
                        (m - k..m).rev().collect()
                    } else {
                        (0..k).collect()
                    };
                    let spread = vals
                        .iter()
                        .fold(0.0f64, |acc, x| acc.max(x.abs()))
                        .max(1e-300);
                    // b * |bottom of Ritz vector| is the exact residual of the
                    // pair within the Krylov space
                    let est_ok = idx
                        .iter()
                        .all(|&c| b * vecs[(m - 1, c)].abs() <= 0.5 * self.tol * spread);
                    if est_ok || exhausted {
                        let mut values = Vec::new();
                        let mut vectors = Vec::new();
                        let mut residuals = Vec::new();
                        let mut all_ok = true;
                        for &c in &idx {
                            let mut y = vec![0.0; n];
                            for (j, q) in basis.iter().take(m).enumerate() {
                                let s = vecs[(j, c)];
                                for (yi, qi) in y.iter_mut().zip(q) {
                                    *yi += s * qi;
                                }
                            }
                            let r = (self.verify)(vals[c], &y, spread)?;
                            best_residual = best_residual.min(r);
                            if !(r <= self.tol) {
                                all_ok = false;
                            }
                            values.push(vals[c]);
                            vectors.push(y);
                            residuals.push(r);
                        }
                        if all_ok {
                            return Ok(LanczosOutput {
                                values,
                                vectors,
                                residuals,
                                applies,
                            });
                        }
                        if exhausted {
                            // restart from the span of the current candidates
                            start = vectors.iter().fold(vec![0.0; n], |mut acc, y| {
                                for (ai, yi) in acc.iter_mut().zip(y) {
                                    *ai += yi;
                                }
                                acc
                            });
                            break;
                        }
                    } else if exhausted {
                        break;
                    }
                }
                if breakdown {
                    if m >= limit {
                        break;
                    }
                    // invariant subspace smaller than requested: inject a
                    // fresh direction orthogonal to the current basis
                    let mut fresh = seeded_vector(n, 0xfee1 + seed_bump);
                    seed_bump += 1;
                    for _ in 0..2 {
                        for q in &basis {
                            let c = (self.inner)(&fresh, q);
                            for (wi, qi) in fresh.iter_mut().zip(q) {
                                *wi -= c * qi;
                            }
                        }
                    }
                    let fb = (self.inner)(&fresh, &fresh).sqrt();
                    if !(fb > 1e-14) {
                        break;
                    }
                    for x in fresh.iter_mut() {
                        *x /= fb;
                    }
                    beta.push(0.0);
                    basis.push(fresh);
                } else if alpha.len() < limit {
                    beta.push(b);
                    let mut next = w;
                    for x in next.iter_mut() {
                        *x /= b;
                    }
                    basis.push(next);
                }
            }
        }
    }
}

/// Smallest eigenpair(s) of the interface problem.
pub fn smallest_interface_eig(ctx: &SchurContext, req: &EigRequest) -> Result<EigResult> {
    smallest_interface_eig_with_start(ctx, req, None)
}

/// Same, but warm-startable with an approximate eigenvector (used by the
/// Newton loop, where the eigenvector changes little between shifts).
pub fn smallest_interface_eig_with_start(
    ctx: &SchurContext,
    req: &EigRequest,
    start: Option<&[f64]>,
) -> Result<EigResult> {
    req.validate()?;
    let n = ctx.n_interface();
    let k = req.which.k();
    if k > n {
        return Err(Error::Argument(format!(
            "requested {k} interface eigenpairs but |interface| = {n}"
        )));
    }
    match lanczos_interface_eig(ctx, req, start) {
        Ok(res) => Ok(res),
        Err(Error::NoConvergence { .. }) if n <= DENSE_INTERFACE_LIMIT => {
            dense_interface_eig(ctx, req)
        }
        Err(e) => Err(e),
    }
}

/// Dense path: densify S_rho by probing and solve the symmetric problem.
pub fn dense_interface_eig(ctx: &SchurContext, req: &EigRequest) -> Result<EigResult> {
    req.validate()?;
    let n = ctx.n_interface();
    let k = req.which.k();
    let scale = ctx.interface_mass.scale;
    let s = dense_schur(ctx)?;
    let mut c: DMatrix<f64> = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            c[(i, j)] = 0.5 * (s[(i, j)] + s[(j, i)]) / scale;
        }
    }
    let (eigenvalues, eigenvectors) = crate::dense_eig::sym_eig(&c)?;
    let spectral_radius = eigenvalues
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        .max(1e-300);
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    let mut residuals = Vec::new();
    for i in 0..k {
        let theta = eigenvalues[i];
        let mut u: Vec<f64> = eigenvectors.column(i).iter().copied().collect();
        normalize_sign(&mut u);
        let r = interface_residual(ctx, theta, &u, spectral_radius)?;
        if !(r <= req.tol) {
            return Err(Error::NoConvergence {
                iterations: n,
                best_residual: r,
            });
        }
        let g = ctx.interface_mass.norm(&u);
        for x in u.iter_mut() {
            *x /= g;
        }
        values.push(theta);
        vectors.push(u);
        residuals.push(r);
    }
    Ok(EigResult {
        values,
        vectors,
        residuals,
        iterations: n,
    })
}

fn interface_residual(
    ctx: &SchurContext,
    theta: f64,
    u: &[f64],
    spectral_radius: f64,
) -> Result<f64> {
    let scale = ctx.interface_mass.scale;
    let su = apply_schur(ctx, u)?;
    let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut r2 = 0.0;
    for (si, ui) in su.iter().zip(u) {
        let d = si / scale - theta * ui;
        r2 += d * d;
    }
    Ok(r2.sqrt() / (spectral_radius * unorm))
}

/// Lanczos path on the matrix-free operator S_rho / h^{d-1}.
pub fn lanczos_interface_eig(
    ctx: &SchurContext,
    req: &EigRequest,
    start: Option<&[f64]>,
) -> Result<EigResult> {
    req.validate()?;
    let n = ctx.n_interface();
    let scale = ctx.interface_mass.scale;
    let mut apply = |u: &[f64]| -> Result<Vec<f64>> {
        let mut y = apply_schur(ctx, u)?;
        for x in y.iter_mut() {
            *x /= scale;
        }
        Ok(y)
    };
    let inner = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let mut verify = |theta: f64, u: &[f64], op_scale: f64| -> Result<f64> {
        interface_residual(ctx, theta, u, op_scale.max(theta.abs()).max(1e-300))
    };
    let start_vec = match start {
        Some(s) if s.len() == n => s.to_vec(),
        _ => seeded_vector(n, req.seed),
    };
    let mut solver = Lanczos {
        n,
        apply: &mut apply,
        inner: &inner,
        verify: &mut verify,
        largest: false,
        k: req.which.k(),
        tol: req.tol,
        max_basis: 600,
        max_applies: req.max_iters,
    };
    let out = solver.run(start_vec)?;
    // Ritz values already ascend for the smallest end; fix norms and signs.
    let mut vectors = out.vectors;
    let vectors: Vec<Vec<f64>> = vectors
        .iter_mut()
        .map(|u| {
            normalize_sign(u);
            let g = ctx.interface_mass.norm(u);
            for x in u.iter_mut() {
                *x /= g;
            }
            std::mem::take(u)
        })
        .collect();
    Ok(EigResult {
        values: out.values,
        vectors,
        residuals: out.residuals,
        iterations: out.applies,
    })
}

/// Smallest eigenpair(s) of (A, M) by Lanczos on A^{-1} M in the M inner
/// product. Serves as the reference lambda^h for error reporting.
pub fn reference_volume_eig(
    a: &SparseSymMatrix,
    m: &SparseSymMatrix,
    req: &EigRequest,
) -> Result<EigResult> {
    req.validate()?;
    let n = a.n;
    if m.n != n {
        return Err(Error::Argument(format!(
            "A is {0}x{0} but M is {1}x{1}",
            a.n, m.n
        )));
    }
    let k = req.which.k();
    if k > n {
        return Err(Error::Argument(format!(
            "requested {k} eigenpairs from an {n}-dimensional problem"
        )));
    }
    let mut bw = 0usize;
    for i in 0..n {
        for (j, _) in a.row(i) {
            bw = bw.max(i.abs_diff(j));
        }
    }
    let mut band = BandedSym::zeros(n, bw);
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j <= i {
                band.add(i, j, v);
            }
        }
    }
    let factor = band.factor_ldlt(PIVOT_TOL_REL)?;
    let norm_a = a.norm_inf();
    let norm_m = m.norm_inf();

    let mut apply = |v: &[f64]| -> Result<Vec<f64>> {
        let mut y = vec![0.0; n];
        m.matvec(v, &mut y);
        factor.solve_in_place(&mut y);
        Ok(y)
    };
    let inner = |x: &[f64], y: &[f64]| -> f64 { m.bilinear(x, y) };
    let mut verify = |nu: f64, v: &[f64], _op_scale: f64| -> Result<f64> {
        if nu == 0.0 {
            return Ok(f64::INFINITY);
        }
        let lambda = 1.0 / nu;
        let mut av = vec![0.0; n];
        let mut mv = vec![0.0; n];
        a.matvec(v, &mut av);
        m.matvec(v, &mut mv);
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut r2 = 0.0;
        for (x, y) in av.iter().zip(&mv) {
            let d = x - lambda * y;
            r2 += d * d;
        }
        Ok(r2.sqrt() / ((norm_a + lambda.abs() * norm_m) * vnorm))
    };
    let mut solver = Lanczos {
        n,
        apply: &mut apply,
        inner: &inner,
        verify: &mut verify,
        largest: true,
        k,
        tol: req.tol,
        max_basis: 300,
        max_applies: req.max_iters,
    };
    let out = solver.run(seeded_vector(n, req.seed))?;
    // nu arrives descending, so lambda = 1/nu ascends
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for (nu, mut v) in out.values.iter().zip(out.vectors) {
        normalize_sign(&mut v);
        let nm = m.bilinear(&v, &v).sqrt();
        for x in v.iter_mut() {
            *x /= nm;
        }
        values.push(1.0 / nu);
        vectors.push(v);
    }
    Ok(EigResult {
        values,
        vectors,
        residuals: out.residuals,
        iterations: out.applies,
    })
}

/// Smallest coarse eigenvalue lambda^H, the Newton initializer.
pub fn coarse_rho0(spec: DomainSpec, coarse: MeshSize, coeff: &Coefficient) -> Result<f64> {
    let mesh = coarse_mesh(spec, coarse)?;
    let (a, m, free) = crate::assembly::assemble(&mesh, coeff)?;
    if free.is_empty() {
        return Err(Error::Config(format!(
            "coarse mesh {coarse} has no free nodes"
        )));
    }
    let res = reference_volume_eig(&a, &m, &EigRequest::reference())?;
    Ok(res.values[0])
}

/// Smallest three interface eigenvalues (theta^(1), theta^(2), theta^(3));
/// exposes the spectral gap and the c_s ratio.
pub fn interface_gap(ctx: &SchurContext, req: &EigRequest) -> Result<(f64, f64, f64)> {
    if ctx.n_interface() < 3 {
        return Err(Error::Argument(format!(
            "interface gap needs |interface| >= 3, got {}",
            ctx.n_interface()
        )));
    }
    let r = EigRequest {
        which: Which::SmallestK(3),
        ..*req
    };
    let res = smallest_interface_eig(ctx, &r)?;
    Ok((res.values[0], res.values[1], res.values[2]))
}

/// Smallest eigenvalue of the interior problem (A_II, M_II): the coercivity
/// threshold alpha. Infinite when every subdomain interior is empty.
pub fn coercivity_alpha(blocks: &crate::partition::BlockView) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for k in 0..blocks.part.n_subdomains {
        if blocks.part.interior_of[k].is_empty() {
            continue;
        }
        let res = reference_volume_eig(&blocks.a_ii[k], &blocks.m_ii[k], &EigRequest::reference())?;
        alpha = alpha.min(res.values[0]);
    }
    Ok(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Coefficient};
    use crate::mesh::{build_mesh, DomainSpec, Shape};
    use crate::partition::{blocks, partition};
    use crate::schur::make_context;

    fn setup(
        shape: Shape,
        jc: u32,
        jh: u32,
    ) -> (
        SparseSymMatrix,
        SparseSymMatrix,
        crate::partition::Partition,
    ) {
        let mesh = build_mesh(
            DomainSpec::new(shape),
            MeshSize::new(jc).unwrap(),
            MeshSize::new(jh).unwrap(),
        )
        .unwrap();
        let (a, m, _) = assemble(&mesh, &Coefficient::laplace()).unwrap();
        let part = partition(&mesh).unwrap();
        (a, m, part)
    }

    #[test]
    fn one_by_one_volume_problem() {
        let (a, m, _) = setup(Shape::UnitSquare, 1, 1);
        let res = reference_volume_eig(&a, &m, &EigRequest::reference()).unwrap();
        assert_eq!(res.values.len(), 1);
        assert!((res.values[0] - 32.0).abs() <= 1e-12);
    }

    #[test]
    fn square_eigenvalue_approaches_two_pi_squared_from_above() {
        let exact = 2.0 * std::f64::consts::PI.powi(2);
        let mut prev = f64::INFINITY;
        for jh in [2u32, 3, 4] {
            let (a, m, _) = setup(Shape::UnitSquare, 1, jh);
            let res = reference_volume_eig(&a, &m, &EigRequest::reference()).unwrap();
            let lam = res.values[0];
            assert!(lam > exact, "lambda^h = {lam} should exceed {exact}");
            assert!(lam < prev);
            prev = lam;
        }
        assert!(prev - exact < 0.35);
    }

    #[test]
    fn volume_pairs_are_m_orthonormal_with_small_residuals() {
        let (a, m, _) = setup(Shape::UnitSquare, 1, 4);
        let req = EigRequest {
            which: Which::SmallestK(3),
            ..EigRequest::reference()
        };
        let res = reference_volume_eig(&a, &m, &req).unwrap();
        assert_eq!(res.values.len(), 3);
        assert!(res.values.windows(2).all(|w| w[0] < w[1]));
        assert!(res.residuals.iter().all(|&r| r <= req.tol));
        let defect = res.orthonormality_defect(|x, y| m.bilinear(x, y));
        assert!(defect <= 1e-10, "orthonormality defect {defect:.3e}");
    }

    #[test]
    fn interface_dense_and_lanczos_paths_agree() {
        let (a, m, part) = setup(Shape::UnitSquare, 1, 4);
        let bv = blocks(&a, &m, &part).unwrap();
        let ctx = make_context(&bv, 21.0).unwrap();
        let req = EigRequest {
            which: Which::SmallestK(2),
            ..Default::default()
        };
        let dense = dense_interface_eig(&ctx, &req).unwrap();
        let lan = lanczos_interface_eig(&ctx, &req, None).unwrap();
        let scale = dense.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for i in 0..2 {
            assert!(
                (dense.values[i] - lan.values[i]).abs() <= 1e-10 * scale,
                "pair {i}: dense {} vs lanczos {}",
                dense.values[i],
                lan.values[i]
            );
        }
    }

    #[test]
    fn lanczos_is_deterministic_for_fixed_seed() {
        let (a, m, part) = setup(Shape::UnitSquare, 1, 4);
        let bv = blocks(&a, &m, &part).unwrap();
        let ctx = make_context(&bv, 20.0).unwrap();
        let req = EigRequest::default();
        let r1 = lanczos_interface_eig(&ctx, &req, None).unwrap();
        let r2 = lanczos_interface_eig(&ctx, &req, None).unwrap();
        assert_eq!(r1.values[0].to_bits(), r2.values[0].to_bits());
        assert_eq!(r1.iterations, r2.iterations);
    }

    #[test]
    fn theta_is_negative_above_lambda_and_decreasing() {
        let (a, m, part) = setup(Shape::UnitSquare, 1, 3);
        let bv = blocks(&a, &m, &part).unwrap();
        let lam = reference_volume_eig(&a, &m, &EigRequest::reference())
            .unwrap()
            .values[0];
        let rho0 = 32.0; // coarse eigenvalue for H = 1/2
        let mut prev = f64::INFINITY;
        for step in 0..5 {
            let rho = lam + (rho0 - lam) * step as f64 / 4.0;
            let ctx = make_context(&bv, rho).unwrap();
            let res = smallest_interface_eig(&ctx, &EigRequest::default()).unwrap();
            let theta = res.values[0];
            assert!(theta < prev, "theta not strictly decreasing at rho = {rho}");
            if step > 0 {
                assert!(theta <= 1e-10);
            }
            prev = theta;
        }
    }

    #[test]
    fn coarse_rho0_dominates_fine_eigenvalue() {
        for (shape, jc, jh) in [
            (Shape::UnitSquare, 1u32, 3u32),
            (Shape::UnitCube, 1, 2),
            (Shape::LShape2D, 2, 4),
        ] {
            let spec = DomainSpec::new(shape);
            let rho0 =
                coarse_rho0(spec, MeshSize::new(jc).unwrap(), &Coefficient::laplace()).unwrap();
            let (a, m, _) = setup(shape, jc, jh);
            let lam = reference_volume_eig(&a, &m, &EigRequest::reference())
                .unwrap()
                .values[0];
            assert!(rho0 >= lam, "{shape:?}: coarse {rho0} below fine {lam}");
        }
    }

    #[test]
    fn gap_requires_three_interface_nodes() {
        let (a, m, part) = setup(Shape::UnitCube, 1, 1);
        let bv = blocks(&a, &m, &part).unwrap();
        let ctx = make_context(&bv, 0.0).unwrap();
        assert!(interface_gap(&ctx, &EigRequest::default()).is_err());
    }
}
