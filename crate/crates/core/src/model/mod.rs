//! Charges, interactions, decay profiles and the builtin model zoo.

mod charges;
mod decay;
mod ffunction;
mod interaction;
pub mod zoo;

pub use charges::{verify_charge_family, ChargeFamily, ChargeReport, ChargeSpec, ChargeViolation};
pub use decay::{
    check_decay_gamma, check_decay_k, check_simple_decay, decay_k_at, DecayGammaReport, DecayKReport, SimpleDecayReport,
};
pub use ffunction::{check_f_function, f_norm, FFunction, FFunctionReport, FNormReport, CF_MAX_SITES};
pub use interaction::{
    surface_energy, surface_terms, BuiltinSpec, Interaction, InteractionSpec, SymmetryClaim, Term, TermSpec,
};
pub use zoo::builtin_interaction;
