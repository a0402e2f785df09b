//! Statistics for testing whether vaccine protection wanes between two
//! trial periods.
//!
//! Under the sharp null of no waning, the vaccine-vs-placebo incidence ratio
//! is the same in both periods, so `IR1/IR2 = 1` is testable from four event
//! counts. This crate provides:
//!
//! - the trial data model ([`TrialSummary`], [`IndividualRecord`]) with JSON
//!   and CSV ingestion;
//! - the ratio test with direct and conservative delta-method intervals and
//!   a nonparametric bootstrap ([`ir_ratio_test`], [`bootstrap_ir_test`]);
//! - the hazard-ratio comparison ([`hr_ratio_test`]), included because it is
//!   popular and *biased* for this purpose;
//! - partial-identification bounds on second-period efficacy under a
//!   controlled-exposure interpretation ([`ve2_upper_bound`]);
//! - a principal-strata trial simulator with closed-form oracles
//!   ([`simulate_trial`], [`challenge_ir`]);
//! - power/level grids ([`run_power_grid`]) and stratified analyses with
//!   multiple-testing control ([`per_stratum_tests`], [`adjust_pvalues`]).
//!
//! All randomized routines are deterministic given a seed, independently of
//! thread count.

pub mod bounds;
pub mod chart;
pub mod error;
pub mod power_study;
pub mod rng;
pub mod stats;
pub mod strata_sim;
pub mod stratified;
pub mod trial_data;

/// Seed used by randomized entry points when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 42;

pub use bounds::{
    curve_to_csv, curve_to_svg, ve1_challenge, ve2_bound_curve, ve2_upper_bound, BoundOptions,
    BoundResult,
};
pub use error::{Error, Result};
pub use power_study::{
    emit_plot, emit_table, run_hr_power_grid, run_power_grid, PowerCell, PowerGrid,
};
pub use strata_sim::{
    challenge_ir, hr2_bias_factor, simulate_trial, simulate_trial_detailed, transition_rates,
    Confounding, Scenario, SimConfig, StratumDist, TransitionRates,
};
pub use stratified::{
    adjust_pvalues, per_stratum_tests, pooled_test, stratified_report, AdjustMethod,
    StratifiedSummary, StratumTest,
};
pub use trial_data::{
    aggregate, read_records_csv, write_records_csv, Arm, IndividualRecord, Mode, Outcome, Period,
    TrialSummary,
};
pub use waning_test::{
    bootstrap_ir_test, conservative_variance, direct_delta_variance, hr_ratio_test,
    incidence_ratio, ir_ratio_test, ir_ratio_test_opts, katz_variance, BootstrapOptions,
    DeltaMethod, Method, TestResult,
};
