//! Falsification tests, hypothesis families, twirls, average-state
//! witnesses and the alternating-projection falsifier search.

mod family;
mod search;
mod test;
mod twirl;
mod witness;

pub use family::{
    canonical_vectors, choi_state, local_unitary, permutation_operator, symmetric_projector, FamilySummary,
    HypothesisFamily,
};
pub use search::{
    coords_to_hermitian, falsifier_search, family_span, hermitian_to_coords, project_simplex, project_spectraplex,
    RealSpan, SearchConfig, SearchOutcome, SpanReport, DEFAULT_MAX_ITER, DEFAULT_SEARCH_TOL, VERIFY_SAMPLES,
};
pub use test::{
    coarse_grain, falsification_chance, modus_tollens_transfer, simulate_trials, support_falsifier,
    FalsificationTest, TrialCounts,
};
pub use twirl::{twirl_analytic, twirl_monte_carlo, twirl_monte_carlo_parallel};
pub use witness::{family_average, witness_unfalsifiable, AverageMethod, WitnessVerdict};
