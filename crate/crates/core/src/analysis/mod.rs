//! Mutation coverage, representativeness metrics and sampling-rate sweeps.

mod correlation;
mod coverage;
mod sweep;

use thiserror::Error;

use crate::sampler::SampleError;

pub use correlation::{kendall_p_value, kendall_tau_b, pearson_p_value, pearson_rho, CorrelationError};
pub use coverage::{
    class_coverage, coverage_vector, distance, project_coverage, project_tally, ClassCoverage, CoverageOptions,
    CoverageVector, Tally,
};
pub use sweep::{
    acceptable_rate, class_stats, representativeness, sweep, write_curve_csv, write_pvalue_csv, write_summary_csv,
    AcceptableRate, AnalysisOptions, ClassStats, Metric, RepresentativenessPoint, SweepReport, CURVE_HEADER,
    DEFAULT_CRITICAL, DEFAULT_REPETITIONS, PVALUE_HEADER, SUMMARY_HEADER,
};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no considered mutants (all build errors, overridden, or unsampled)")]
    NoConsideredMutants,
    #[error("result set is empty")]
    EmptyResultSet,
    #[error("need at least two classes with mutants to correlate, found {0}")]
    TooFewClasses(usize),
    #[error("every class has the same full-set coverage; correlations are undefined at every rate")]
    ConstantFullCoverage,
    #[error("every repetition at rate {rate} produced an undefined correlation")]
    AllUndefined { rate: f64 },
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error(transparent)]
    Sample(#[from] SampleError),
}
