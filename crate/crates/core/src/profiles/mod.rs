//! Whole-chain profiles and their lower and upper envelopes.

mod conductance;
mod enumerate;
mod functional;
mod growth;
mod spectral;
mod step;

pub use conductance::{
    cheeger_envelopes, conductance_lower_envelope, conductance_profile, ConductanceMode,
    ConductanceProfiles,
};
pub use enumerate::{enumerate_sets, mask_members, EnumerationMode, MaskedSet, MASK_BITS};
pub use functional::{
    entropy_of_square, estimate_logsob, log_ratio, logsob_envelope_value, logsob_profile_bound,
    nash_envelope_value, nash_profile_bound, LogSobolevEstimate, LogSobolevOptions,
};
pub use growth::{
    bfs_hops, growth_data, min_moderate_growth_constant, moderate_growth_check,
    poincare_profile_bound, volume_profile_bound, GrowthData, ModerateGrowthCheck,
};
pub use spectral::{
    spectral_gap, spectral_profile_exhaustive, ArgminSet, ProfileOptions, SpectralProfileBand,
};
pub use step::{
    geometric_points, lower_steps, ProfileKind, ProfileRecord, ProfileSource, StepProfile,
};
