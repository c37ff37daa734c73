//! Numerical laboratory for multistate Schrödinger operators.
//!
//! The crate discretizes operators of the form `P = diag(P_1, …, P_m) + R(x, D_x)`
//! on finite-difference Dirichlet boxes, where each channel is a Schrödinger
//! operator `P_j = -Δ + V_j` and `R` couples channels through first-order terms.
//! On top of the discretization it provides
//!
//! * the intersection-closed subspace lattices behind generalized many-body
//!   structure ([`lattice`]),
//! * model data: channel potentials, couplings, crossing sets, direction
//!   cutoffs and the adapted dilation weight ([`model`]),
//! * operator assembly, discrete commutators, subsystem restriction and a
//!   Graf-type convex interpolation function ([`discretize`]),
//! * spectral windows, Mourre-estimate certification, threshold sets and
//!   essential-spectrum probes ([`spectral`]),
//! * Chebyshev time evolution and the propagation-estimate experiments
//!   (minimal/maximal velocity, channel decay) ([`dynamics`]).

// Force linking of the system BLAS/LAPACK backend.
extern crate openblas_src as _;

pub mod chebyshev;
pub mod discretize;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod grid;
pub mod graf;
pub mod jsonio;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod spectral;

pub use error::Error;
pub use grid::{DiscreteState, Grid};
pub use lattice::{ProjectorPair, Subspace, SubspaceLattice};
pub use model::{ChannelPotential, CouplingTerm, CrossingSet, Mode, ProblemSpec};
pub use operator::DiscreteOperator;
