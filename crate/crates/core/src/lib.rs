//! Bounded solutions of linear-plus-Lipschitz systems with piecewise constant
//! arguments, forced by orbits of the logistic map, and numerical
//! certificates that homoclinic and heteroclinic structure of the forcing
//! carries over to the solutions.

// `!(x > 0.0)` style checks must also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod driver;
pub mod error;
pub mod exec;
pub mod io;
pub mod linear;
pub mod run;
pub mod scenario;
pub mod schedule;
pub mod system;

pub use error::{Error, Result};
pub use exec::Exec;
