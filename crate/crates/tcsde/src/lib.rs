//! Simulation and pathwise verification toolkit for stochastic differential
//! equations driven simultaneously by clock time, a continuous time-change,
//! and a time-changed Brownian motion.
//!
//! The crate covers:
//! - stable subordinators, their generalized inverses, and synchronization
//!   predicates ([`timechange`]);
//! - discrete forward (Ito) sums, quadratic variation, path composition,
//!   and executable verifiers for the change-of-variable and time-changed
//!   Ito formulas ([`calculus`]);
//! - Euler-Maruyama solvers on the triple driver and the duality route
//!   through a classical solver plus composition ([`sde`]);
//! - exact solution evaluators for the linear class and the
//!   integrating-factor reduction ([`closed_form`]);
//! - Gamma, Mittag-Leffler, and fractional-integral special functions
//!   ([`special`]);
//! - a time-fractional Fokker-Planck solver cross-validated against Monte
//!   Carlo densities ([`fracpde`]);
//! - moment checks and convergence studies ([`experiments`]).

pub mod calculus;
pub mod closed_form;
pub mod error;
pub mod experiments;
pub mod fracpde;
pub mod path;
pub mod rng;
pub mod sde;
pub mod special;
pub mod timechange;

pub use error::{Error, Result};
pub use path::{uniform_grid, CadlagPath, Interp, JumpRecord, MonotonePath};
pub use timechange::{Bracket, StableSubordinatorConfig, TimeChangePair};
