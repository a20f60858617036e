//! Moment vectors, moment and localizing matrices, and assembly of the SOS
//! and moment forms of the hierarchy as standard-form SDPs.

mod assemble;
mod matrix;
mod moments;
mod sdp;

pub use assemble::{
    assemble_moment_dual, assemble_moment_form, assemble_reznick_gap, assemble_sos_form, assemble_sos_gap,
    hierarchy_polynomials, GramTerm, RelaxationLayout,
};
pub use matrix::{min_eigenvalue, SymMatrix};
pub use moments::MomentVector;
pub use sdp::{BlockEntry, Constraint, LinearForm, SdpProblem, Sense};
