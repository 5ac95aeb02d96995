//! Finite-propagation operators on windows and the explicit constructions built from them.
//!
//! Identities inherited from infinite spaces are asserted on rows and columns of
//! an interior of the window, where truncation cannot interfere.

mod af;
mod constructions;
mod norm;
mod omega;
mod operator;

pub use af::{af_approximate, block, AfApproximation, BlockColoring};
pub use constructions::{
    build_uf, cancellation_witness, char_projection, from_partial_translation, level_window, segment_shift,
    segment_shift_targets, CancellationWitness,
};
pub use norm::{
    is_psd_on, op_norm, quasi_check, verify_properly_infinite, NormEstimate, ProperlyInfiniteReport, QuasiKind,
    QuasiReport, DENSE_LIMIT, FLOAT_TOLERANCE, QUASI_EPS,
};
pub use omega::{mv_split, omega_membership, MembershipReport, OmegaDecomposition, OmegaPart};
pub use operator::{random_operator, BandedOperator};
