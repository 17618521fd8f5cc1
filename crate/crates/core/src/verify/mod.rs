//! Statistical and analytic verification harness.

mod assumptions;
mod experiments;
mod inequalities;
mod stats;

pub use assumptions::{check_assumptions, rho_schedule, AssumptionInputs, AssumptionReport, RhoSchedule};
pub use experiments::{
    cover_samples, g_failure_trend, gumbel_experiment, singular_law, tightness_experiment, uncovered_mean, Band,
    Drift, Family, GFailureRow, GumbelReport, GumbelRow, TightnessReport, TightnessRow, UncoveredMean,
};
pub use inequalities::{
    inequality_suite, logexp_gap, pair_sum, CheckResult, FarDecay, InequalityReport, PairSum, SuiteGrids, TOLERANCE,
};
pub use stats::{gumbel_cdf, ks_distance, ks_two_sample, Ecdf};
