//! DC optimal power flow with a CVaR penalty on wind shortfall cost.
//!
//! Wind commitments are priced against sampled wind realizations; the sample
//! CVaR of the shortfall cost enters the objective through an epigraph and
//! the whole dispatch is solved as one convex QP by the interior-point
//! solver in [`solver`]. Nodal prices come from the balance duals.

pub mod cli;
pub mod cvar;
pub mod error;
pub mod evaluate;
pub mod grid_model;
pub mod io;
pub mod opf;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
