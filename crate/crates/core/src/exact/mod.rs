//! Exact distributions on small state spaces.

pub mod correlation;
pub mod dist;
pub mod dominance;
pub mod erasure;
pub mod evolve;
pub mod extremal;
pub mod poisson;
pub mod space;
pub mod theta;

pub use correlation::{
    fkg_check, holley_check, increasing_witness, indicator, principal_up_set,
    random_increasing_event, threshold_event, CorrelationCheck, Rational,
};
pub use dist::{push_to_exclusion, separation, total_variation, tv_to_uniform, Distribution};
pub use dominance::{dominance_check, dominance_check_capped, DominanceCheck, DOMINANCE_CAP};
pub use erasure::{label_erased, tv_decomposition, TvDecomposition};
pub use evolve::{
    chebyshev_weights, discrete_profile, discrete_step, evolve, evolve_many, evolve_with,
    poisson_weights, Method, TRUNCATION,
};
pub use extremal::{separation_via_extremal, SeparationCheck};
pub use poisson::{poisson_sandwich, PoissonSandwich};
pub use space::{enumerate, Model, StateSpace, DEFAULT_STATE_CAP};
pub use theta::{
    censoring_comparison, censoring_comparison_exact, is_increasing_density,
    is_increasing_density_tol, update_operator, CensorComparison, IncreasingCheck,
    DENSITY_TOLERANCE,
};
