//! The Newton loop on the interface eigenvalue curve.
//!
//! Starting from a shift above the target eigenvalue (in practice the coarse
//! eigenvalue lambda^H), each step solves the interface problem at the
//! current shift, harmonically extends the eigenvector into the volume and
//! replaces the shift by the Rayleigh quotient of the extension. That update
//! equals the Newton step `rho - theta/theta'` exactly, and the recorded
//! per-step deviation between the two forms is a cheap self-check of the
//! whole pipeline.
//!
//! Iterates decrease monotonically and stay above the discrete eigenvalue,
//! so the loop needs no safeguarding.

use std::time::Instant;

use crate::assembly::rayleigh_quotient;
use crate::eigensolvers::{
    interface_gap, smallest_interface_eig_with_start, EigRequest, Which,
};
use crate::error::Error;
use crate::partition::BlockView;
use crate::schur::{extend, extension_norm_ratio, make_context};
use crate::Result;

/// Optional per-step measurements; they multiply runtime, so they are off by
/// default.
#[derive(Debug, Clone, Copy, Default)]
pub struct Diagnostics {
    /// Record the smallest three interface eigenvalues at every step.
    pub gap: bool,
    /// Record ||H_rho u|| / ||u||_Gamma at every step.
    pub extension_ratio: bool,
}

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Initial shift; must lie in [lambda^h, alpha).
    pub rho0: f64,
    /// Relative step threshold used when no oracle is supplied.
    pub tol_rel_step: f64,
    /// Relative-error threshold used when an oracle is supplied.
    pub tol_eps: f64,
    pub max_steps: usize,
    /// Reference eigenvalue lambda^h for error reporting (experiment mode).
    pub oracle_lambda: Option<f64>,
    /// Interface eigensolver settings.
    pub eig: EigRequest,
    pub diagnostics: Diagnostics,
}

impl NewtonConfig {
    pub fn new(rho0: f64) -> Self {
        NewtonConfig {
            rho0,
            tol_rel_step: 1e-13,
            tol_eps: 1e-12,
            max_steps: 12,
            oracle_lambda: None,
            eig: EigRequest::default(),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn with_oracle(mut self, lambda: f64) -> Self {
        self.oracle_lambda = Some(lambda);
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.rho0.is_finite() {
            return Err(Error::Config(format!("initial shift {} not finite", self.rho0)));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        if let Some(lam) = self.oracle_lambda {
            if self.rho0 < lam * (1.0 - 1e-12) {
                return Err(Error::Config(format!(
                    "initial shift {} below the reference eigenvalue {lam}",
                    self.rho0
                )));
            }
        }
        Ok(())
    }
}

/// One Newton step: the state at the pre-update shift plus the self-check
/// and optional diagnostics.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub rho: f64,
    pub theta: f64,
    /// theta'(rho) from the derivative formula -||H u||_M^2 / ||u||_Gamma^2.
    pub theta_prime: f64,
    /// Interface norm of the eigenvector as returned by the solver.
    pub u_gamma_norm: f64,
    /// Relative error (rho - lambda^h)/lambda^h when the oracle is present.
    pub eps: Option<f64>,
    /// |RQ(v) - (rho - theta/theta')| / |rho|.
    pub identity_deviation: f64,
    pub eig_iterations: usize,
    pub wall_ms: f64,
    pub gap: Option<(f64, f64, f64)>,
    pub extension_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NewtonTrace {
    pub steps: Vec<NewtonStep>,
    pub final_rho: f64,
    pub final_eps: Option<f64>,
    pub converged: bool,
}

impl NewtonTrace {
    /// rho_0, ..., rho_K (pre-update iterates plus the final value).
    pub fn rho_sequence(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.steps.iter().map(|s| s.rho).collect();
        v.push(self.final_rho);
        v
    }

    /// eps_0, ..., eps_K when an oracle was supplied.
    pub fn eps_sequence(&self) -> Option<Vec<f64>> {
        let mut v = Vec::new();
        for s in &self.steps {
            v.push(s.eps?);
        }
        v.push(self.final_eps?);
        Some(v)
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }
}

/// Runs the Newton iteration on the blocks' interface problem.
pub fn run_newton(blocks: &BlockView, cfg: &NewtonConfig) -> Result<NewtonTrace> {
    cfg.validate()?;
    let rel_err = |rho: f64| cfg.oracle_lambda.map(|lam| (rho - lam) / lam);
    let mut rho = cfg.rho0;
    let mut warm: Option<Vec<f64>> = None;
    let mut steps = Vec::new();
    let mut converged = false;

    for k in 0..cfg.max_steps {
        let t0 = Instant::now();
        let ctx = make_context(blocks, rho).map_err(|e| match e {
            // the first factorization failing means the caller's rho0 was bad;
            // later ones cannot happen while the monotonicity invariant holds
            Error::ShiftTooLarge(msg) if k > 0 => {
                Error::Internal(format!("shift drifted past the coercivity threshold: {msg}"))
            }
            other => other,
        })?;
        let req = EigRequest {
            which: Which::SmallestOne,
            ..cfg.eig
        };
        let res = smallest_interface_eig_with_start(&ctx, &req, warm.as_deref())?;
        let theta = res.values[0];
        let u = &res.vectors[0];
        let v = extend(&ctx, u)?;

        let u_gamma_sq = ctx.interface_mass.inner(u, u);
        let v_m_sq = blocks.m.bilinear(&v, &v);
        let theta_prime = -v_m_sq / u_gamma_sq;
        let rho_next = rayleigh_quotient(blocks.a, blocks.m, &v)?;
        let newton_form = rho - theta / theta_prime;
        let identity_deviation = (rho_next - newton_form).abs() / rho.abs().max(f64::MIN_POSITIVE);

        let gap = if cfg.diagnostics.gap && ctx.n_interface() >= 3 {
            Some(interface_gap(&ctx, &req)?)
        } else {
            None
        };
        let ext_ratio = if cfg.diagnostics.extension_ratio {
            Some(extension_norm_ratio(&ctx, u)?)
        } else {
            None
        };

        steps.push(NewtonStep {
            rho,
            theta,
            theta_prime,
            u_gamma_norm: u_gamma_sq.sqrt(),
            eps: rel_err(rho),
            identity_deviation,
            eig_iterations: res.iterations,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
            gap,
            extension_ratio: ext_ratio,
        });
        warm = Some(res.vectors.into_iter().next().unwrap());

        let rho_prev = rho;
        rho = rho_next;
        converged = match cfg.oracle_lambda {
            Some(_) => rel_err(rho).unwrap() < cfg.tol_eps,
            None => (rho - rho_prev).abs() <= cfg.tol_rel_step * rho_prev.abs(),
        };
        if converged {
            break;
        }
    }

    Ok(NewtonTrace {
        steps,
        final_rho: rho,
        final_eps: rel_err(rho),
        converged,
    })
}

/// Solves the interface problem at `rho` and evaluates theta together with
/// its derivative from the formula -||H_rho u||_M^2 / ||u||_Gamma^2.
///
/// This is the measurement behind the derivative and concavity diagnostics;
/// central differences of the returned theta values cross-check the formula.
pub fn theta_and_derivative(
    blocks: &BlockView,
    rho: f64,
    eig: &EigRequest,
) -> Result<(f64, f64, Vec<f64>)> {
    let ctx = make_context(blocks, rho)?;
    let res = smallest_interface_eig_with_start(&ctx, eig, None)?;
    let theta = res.values[0];
    let u = &res.vectors[0];
    let v = extend(&ctx, u)?;
    let theta_prime = -blocks.m.bilinear(&v, &v) / ctx.interface_mass.inner(u, u);
    Ok((theta, theta_prime, res.vectors.into_iter().next().unwrap()))
}

/// Largest per-step deviation between the Rayleigh-quotient update and the
/// `rho - theta/theta'` form; an algebraic identity, so anything above
/// roundoff indicates an inconsistent pipeline.
pub fn newton_identity_check(trace: &NewtonTrace) -> f64 {
    trace
        .steps
        .iter()
        .map(|s| s.identity_deviation)
        .fold(0.0, f64::max)
}

/// Threshold below which eps is too close to the oracle accuracy for the
/// quotient eps_{k+1}/eps_k^2 to mean anything.
pub const ETA_RELIABLE_EPS_FLOOR: f64 = 1e-11;

/// Convergence factors eta_k = eps_{k+1}/eps_k^2; entries are None where
/// eps_k is unreliable (at or below 100x the oracle tolerance) or
/// non-positive.
pub fn convergence_factor(trace: &NewtonTrace) -> Result<Vec<Option<f64>>> {
    let eps = trace
        .eps_sequence()
        .ok_or_else(|| Error::Argument("convergence factor needs an oracle lambda".into()))?;
    Ok(eps
        .windows(2)
        .map(|w| {
            if w[0] >= ETA_RELIABLE_EPS_FLOOR {
                Some(w[1] / (w[0] * w[0]))
            } else {
                None
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Coefficient};
    use crate::eigensolvers::{reference_volume_eig, EigRequest};
    use crate::mesh::{build_mesh, DomainSpec, MeshSize, Shape};
    use crate::partition::{blocks, partition};
    use crate::schur::make_context;

    fn square_fixture(
        jc: u32,
        jh: u32,
    ) -> (
        crate::assembly::SparseSymMatrix,
        crate::assembly::SparseSymMatrix,
        crate::partition::Partition,
    ) {
        let mesh = build_mesh(
            DomainSpec::new(Shape::UnitSquare),
            MeshSize::new(jc).unwrap(),
            MeshSize::new(jh).unwrap(),
        )
        .unwrap();
        let (a, m, _) = assemble(&mesh, &Coefficient::laplace()).unwrap();
        let part = partition(&mesh).unwrap();
        (a, m, part)
    }

    #[test]
    fn converges_monotonically_with_tiny_identity_deviation() {
        let (a, m, part) = square_fixture(1, 3);
        let bv = blocks(&a, &m, &part).unwrap();
        let lam = reference_volume_eig(&a, &m, &EigRequest::reference())
            .unwrap()
            .values[0];
        // coarse eigenvalue for H = 1/2 on the square is 32
        let cfg = NewtonConfig::new(32.0).with_oracle(lam);
        let trace = run_newton(&bv, &cfg).unwrap();
        assert!(trace.converged);
        let rhos = trace.rho_sequence();
        for w in rhos.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-14));
        }
        for &r in &rhos {
            assert!(r >= lam - 1e-12 * lam);
        }
        assert!(newton_identity_check(&trace) <= 1e-11);
        assert!(trace.steps.iter().all(|s| s.theta <= 1e-10));
    }

    #[test]
    fn oracle_start_converges_in_one_step() {
        let (a, m, part) = square_fixture(1, 3);
        let bv = blocks(&a, &m, &part).unwrap();
        let lam = reference_volume_eig(&a, &m, &EigRequest::reference())
            .unwrap()
            .values[0];
        let cfg = NewtonConfig::new(lam).with_oracle(lam);
        let trace = run_newton(&bv, &cfg).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.n_steps(), 1);
        assert!(trace.steps[0].eps.unwrap().abs() <= 1e-14);
    }

    #[test]
    fn initial_shift_below_oracle_is_rejected() {
        let (a, m, part) = square_fixture(1, 3);
        let bv = blocks(&a, &m, &part).unwrap();
        let cfg = NewtonConfig::new(10.0).with_oracle(19.0);
        assert!(run_newton(&bv, &cfg).is_err());
    }

    #[test]
    fn wrong_shift_extension_breaks_the_identity() {
        // extending the eigenvector with a context at the wrong shift must
        // produce a visible deviation from the Newton form
        let (a, m, part) = square_fixture(1, 3);
        let bv = blocks(&a, &m, &part).unwrap();
        let rho = 25.0;
        let ctx = make_context(&bv, rho).unwrap();
        let res =
            crate::eigensolvers::smallest_interface_eig(&ctx, &EigRequest::default()).unwrap();
        let theta = res.values[0];
        let u = &res.vectors[0];

        let wrong_ctx = make_context(&bv, rho + 4.0).unwrap();
        let v_wrong = extend(&wrong_ctx, u).unwrap();
        let u_gamma_sq = ctx.interface_mass.inner(u, u);
        let theta_prime = -m.bilinear(&v_wrong, &v_wrong) / u_gamma_sq;
        let rq = rayleigh_quotient(&a, &m, &v_wrong).unwrap();
        let dev = (rq - (rho - theta / theta_prime)).abs() / rho;
        assert!(dev >= 1e-6, "deviation {dev:.3e} unexpectedly small");
    }

    #[test]
    fn convergence_factor_arithmetic() {
        // cascade with the shape reported for the 3D problem at h = 1/4,
        // padded with one roundoff-floor entry
        let eps = [0.6000, 0.0220, 2.5235e-05, 3.2885e-11, 3.7896e-16, 2.1e-16];
        let steps: Vec<NewtonStep> = eps[..5]
            .iter()
            .map(|&e| NewtonStep {
                rho: 0.0,
                theta: 0.0,
                theta_prime: -1.0,
                u_gamma_norm: 1.0,
                eps: Some(e),
                identity_deviation: 0.0,
                eig_iterations: 0,
                wall_ms: 0.0,
                gap: None,
                extension_ratio: None,
            })
            .collect();
        let trace = NewtonTrace {
            steps,
            final_rho: 0.0,
            final_eps: Some(eps[5]),
            converged: true,
        };
        let eta = convergence_factor(&trace).unwrap();
        assert_eq!(eta.len(), 5);
        assert!((eta[0].unwrap() - 0.0220 / 0.36).abs() <= 1e-12);
        assert!((eta[0].unwrap() - 0.0611).abs() <= 1e-3);
        // eps_4 sits below the reliability floor, so eta_4 is excluded
        assert!(eta[4].is_none());
        assert!(eta[3].is_some());
        // all defined factors are positive
        assert!(eta.iter().flatten().all(|&e| e > 0.0));
    }
}
