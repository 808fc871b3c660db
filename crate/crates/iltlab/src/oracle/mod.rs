//! Ground-truth oracles: the Feller exit-time law, reflection probabilities,
//! exact random-walk distributions, and quadrature for expected intersection
//! local times. Exhaustive enumeration is the final arbiter for small-n
//! discrete probabilities.

pub mod exit_time;
pub mod quad;
pub mod walk;

pub use exit_time::{tau1_cdf, tau1_moments, tau1_quantile, tau1_survival};
pub use quad::{
    expected_local_time_origin, expected_mutual_ilt, expected_mutual_ilt_closed_form,
    expected_self_ilt, reflection_probability,
};
pub use walk::{
    f_event_probability_bruteforce, hitting_pmf_exact, hitting_pmf_mu, hitting_survival_mu,
    min_at_least, min_law, no_intersection_enum, no_intersection_exact, range_law,
    range_law_enum, RangeLawTable, DP_CAP, MU_CORNERS,
};
