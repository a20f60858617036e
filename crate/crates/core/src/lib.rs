//! Moment-SOS hierarchies with `θ = 1 + ‖x‖²` multipliers for polynomial optimization.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bernstein;
pub mod bounds;
mod clock;
pub mod construct;
pub mod contopt;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod ipm;
pub mod momentsdp;
pub mod polyalg;

pub use error::{Error, Result};
pub use polyalg::{Monomial, Polynomial, PopProblem};
