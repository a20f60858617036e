//! Sparse multivariate polynomials, graded-lex monomial indexing, and the
//! `θ = 1 + ‖x‖₂²` multiplier.

pub mod json;
mod monomial;
mod polynomial;
mod problem;

pub use monomial::{basis_len, monomials_of_degree, monomials_up_to, Monomial};
pub use polynomial::{binomial, norm_sq_pow, Polynomial, ZERO_THRESHOLD};
pub use problem::{ball_value, PopProblem};
