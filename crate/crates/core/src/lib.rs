//! Smallest-eigenvalue solver for symmetric elliptic operators based on
//! non-overlapping domain decomposition.
//!
//! The volume eigenproblem `A v = lambda M v` is reduced to a nonlinear
//! eigenproblem for the shifted Schur complement (Steklov-Poincare operator)
//! on the subdomain interface, and the smallest root of its bottom eigenvalue
//! curve is found by Newton's method. Each Newton update is a Rayleigh
//! quotient of the harmonically extended interface eigenvector, so the
//! iterates decrease monotonically to the discrete eigenvalue.
//!
//! The crate is organized along the pipeline:
//!
//! * [`mesh`] -- structured simplicial meshes of the unit square, unit cube
//!   and an L-shaped domain, with nested coarse/fine lattices;
//! * [`assembly`] -- P1 stiffness and mass matrices with Dirichlet
//!   elimination;
//! * [`partition`] -- interior/interface classification of the free nodes
//!   and the block views used by the Schur complement;
//! * [`schur`] -- the shifted Schur complement and the discrete harmonic
//!   extension, matrix-free over per-subdomain factorizations;
//! * [`eigensolvers`] -- Lanczos/dense solvers for the interface problem and
//!   a shift-invert reference solver for the volume problem;
//! * [`newton`] -- the Newton loop with its convergence trace and
//!   diagnostics.

pub mod assembly;
pub mod banded;
pub mod dense_eig;
pub mod eigensolvers;
pub mod error;
pub mod mesh;
pub mod newton;
pub mod partition;
pub mod schur;

pub use assembly::{assemble, rayleigh_quotient, Coefficient, SparseSymMatrix};
pub use eigensolvers::{
    coarse_rho0, coercivity_alpha, interface_gap, reference_volume_eig, smallest_interface_eig,
    EigRequest, EigResult, Which,
};
pub use error::Error;
pub use mesh::{build_mesh, coarse_mesh, DomainSpec, Mesh, MeshSize, Shape};
pub use newton::{
    convergence_factor, newton_identity_check, run_newton, Diagnostics, NewtonConfig, NewtonTrace,
};
pub use partition::{blocks, partition, BlockView, Partition};
pub use schur::{
    apply_schur, extend, extension_norm_ratio, make_context, InterfaceMass, SchurContext,
};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
