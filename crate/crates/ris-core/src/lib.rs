//! Repeated interaction systems on finite-dimensional quantum systems.
//!
//! The crate builds the one-step reduced dynamics of a system repeatedly
//! coupled to thermal probes, analyses its spectrum, constructs the discrete
//! adiabatic propagator along slowly varying schedules and keeps an exact
//! entropy/energy ledger of every interaction step.

pub mod adiabatic;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod models;
pub mod par;
pub mod perturbation;
pub mod quantum;
pub mod scenario;
pub mod sim;
pub mod tolerances;

pub use error::{Error, Result};
pub use linalg::{Operator, C64};
pub use par::Execution;
pub use tolerances::Tolerances;
