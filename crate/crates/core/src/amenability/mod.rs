//! Følner sets, isoperimetric profiles, paradoxical decompositions and growth.

mod folner;
mod growth;
mod matching;
mod paradox;

pub use folner::{
    folner_search, isoperimetric_profile, neighborhood_size, subset_minimum, FolnerBudget, FolnerCertificate,
    IsoMode, SubsetMinimum, EXHAUSTIVE_WINDOW_CAP,
};
pub use growth::{growth_profile, GrowthProfile, GrowthTag, EXPONENTIAL_SLOPE};
pub use matching::{
    matching_certificate, neighborhood_in_window, verify_cut, verify_doubling, DoublingReport, MatchingOutcome,
    WindowedDoubling,
};
pub use paradox::{
    paradox_free_group, rule_minus, rule_plus, transport_paradox, verify_paradox, ExplicitParadox,
    ParadoxReport, ParadoxicalDecomposition, Part, PartialTranslation,
};
