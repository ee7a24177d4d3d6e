//! tailsum: deterministic multiplicative approximation of
//! `Pr[X_1 + ... + X_n <= C]` for independent integer-valued random
//! variables.
//!
//! The exact probability is #P-hard and plain Monte Carlo needs sample
//! counts growing like `1/F(C)`, which is hopeless for rare events. The
//! estimator here is a dynamic program over probability quantiles: it
//! returns a value certified to lie within a factor `1 +- epsilon` of the
//! truth, for any `epsilon in (0, 1]`, in time polynomial in `n`,
//! `1/epsilon`, `log C` and `log(1/delta)` where
//! `delta = prod_i Pr[X_i = 0]` after normalization.
//!
//! Three engines share the code base:
//!
//! * [`engine::run_fptas`] — exact rational arithmetic, unconditional
//!   certificate;
//! * [`engine::run_fptas_bit_mode`] — finite-precision oracle model
//!   (truncated answers), certified through widened parameters;
//! * [`engine::run_fptas_float`] — best-effort magnitude arithmetic,
//!   uncertified.
//!
//! [`baselines`] holds the exact convolution ground truth and the
//! Monte-Carlo estimator used for verification and comparison.

pub mod baselines;
pub mod bench;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod instance;
mod magnitude;
pub mod rational;
pub mod report;

pub use distributions::{
    estimate_log_delta, explicit_oracle, normalize, sample, truncated_oracle,
    DiscreteDistribution, DistributionOracle, NormalizedInstance, TrivialAnswer,
};
pub use engine::{
    base_case_tau, choose_jstar, criterion, extended_lookup, recursion_cell,
    run_fptas, run_fptas_bit_mode, run_fptas_float, segment_probabilities, ArithmeticMode,
    BitModeOverrides, BitModeParams, DpTable, EstimateReport, ExtIndex, ExtValue, FptasParams,
    FptasTrace, SegmentWeights,
};
pub use error::{Error, Result};
