//! Renormalized-frame analysis of the quantum dissipative driven Duffing
//! oscillator: attractor solvers, displaced/squeezed-frame Hamiltonians,
//! double perturbation theory, Lindblad superoperators and observables.
//!
//! Energies are measured in units where the detuning `delta_omega` sets the
//! scale; frequencies of spectra are rotating-frame frequencies.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fock;
pub mod frame;
pub mod linalg;
pub mod liouville;
pub mod model;
pub mod observables;
pub mod perturb;
pub mod renorm;

pub use error::{Error, Result};
pub use fock::{FockOperator, SqueezePair};
pub use frame::{DephasingModel, RenormalizedFrame};
pub use linalg::{CMat, CVec, C64};
pub use model::{AttractorSolution, Branch, ModelParams, SteadyForm};
