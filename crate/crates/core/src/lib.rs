//! Secrecy outage probability of a downlink wiretap link under Rayleigh
//! fading with co-channel interferers.
//!
//! Three independent engines compute the same quantity:
//!
//! - [`analytic`]: closed form built from exponential integrals,
//! - [`quadrature`]: adaptive quadrature over the SINR distributions,
//! - [`montecarlo`]: seeded simulation of the signal model.
//!
//! [`sweep`] reproduces parameter sweeps and writes CSV tables; [`config`]
//! parses the TOML scenario and sweep files used by the `sop` binary.

// negated comparisons double as NaN checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod error;
pub mod exec;
pub mod integrate;
pub mod montecarlo;
pub mod quadrature;
pub mod scenario;
pub mod special;
pub mod sweep;
pub mod validate;

pub use analytic::{sop_closed_form, sop_no_interference, Method, SopResult};
pub use error::{Result, SopError};
pub use exec::Execution;
pub use montecarlo::{estimate_sop, McEstimate};
pub use quadrature::sop_quadrature;
pub use scenario::{Geometry, Interferer, InterfererLink, Scenario, SecrecyTarget, Side};
