//! Click-counting statistics of multiplexed on-off detectors.
//!
//! The crate computes the exact distribution of the number of clicks an array
//! of `N` on-off detectors records for a given light state, evaluates the
//! binomial-referenced parameter
//!
//! ```text
//! Q_B = N Var(c) / (<c> (N - <c>)) - 1
//! ```
//!
//! next to Mandel's `Q_M = Var(n) / <n> - 1`, simulates the detector array by
//! Monte Carlo and estimates both parameters from recorded clicks. `Q_B < 0`
//! (sub-binomial clicks) is only reachable by nonclassical light, whereas
//! `Q_M` applied to clicks is negative even for coherent light.

pub mod error;
pub mod estimators;
pub mod kernel;
pub mod numeric;
pub mod simulator;
pub mod states;
pub mod sweep;

pub use error::{Error, Result};
pub use estimators::{
    bootstrap_ci, empirical_frequencies, mandel_q_estimate, qb_estimate, BootstrapInterval, EstimateReport, Statistic,
};
pub use kernel::{
    binomial_reference, click_distribution, click_moments, inclusion_exclusion_probs, mandel_q, nonclassicality,
    occupancy_distribution, occupancy_probs, qb_parameter, ClickDistribution, DetectorConfig, Method,
    NonclassicalityReport,
};
pub use simulator::{sample_photon_number, simulate, ClickSampleSet, PhotonSampler};
pub use states::{
    generating_function, make_distribution, photon_moments, MixtureComponent, PhotonNumberDistribution, StateSpec,
};
pub use sweep::{sweep, Grid, SweepAxis, SweepRow};
