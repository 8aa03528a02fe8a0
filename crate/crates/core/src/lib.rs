//! Numerical core for correlating pairs of thermal qubits or qudits with
//! unitaries, and for the work cost statistics of doing so.
//!
//! The crate is split bottom-up:
//!
//! - [`linalg`]: dense complex matrices, Kronecker products, partial traces
//!   and a Jacobi eigensolver for Hermitian matrices.
//! - [`thermal`]: Hamiltonians, Gibbs states, entropies, mutual information
//!   and local inverse-temperature extraction.
//! - [`qubit`]: the four-angle two-qubit correlating unitary and every closed
//!   form for its final state, work cost and created correlations.
//! - [`work`]: two-time-measurement work distributions, work-operator
//!   moments, energy covariance decomposition and fluctuation closed forms.
//! - [`qudit`]: generalized Bell subspaces, circulant subspace rotations and
//!   temperature targeting for two qudits with `d <= 4`.
//!
//! Sign convention: `σz|0⟩ = +|0⟩`, so `|0⟩` is the excited level and the
//! doubly-excited `|00⟩` has energy `+ω`. Flipping this convention silently
//! negates every reported output temperature.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod qubit;
pub mod qudit;
pub mod thermal;
pub mod work;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, HermitianEigenResult, Subsystem, C64};
pub use thermal::{DensityMatrix, Hamiltonian, InverseTemperature, LogBase};
