use serde::Serialize;

use crate::runner::MutantResult;
use crate::sampler::SampleSet;
use crate::store::ResultSet;

use super::AnalysisError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoverageOptions {
    /// Drop results manually marked equivalent. Off by default: equivalent
    /// mutants are never filtered unless asked.
    pub honor_overrides: bool,
}

/// Killed and considered counts for one group of results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub killed: usize,
    pub considered: usize,
}

impl Tally {
    pub fn add(&mut self, r: &MutantResult, options: CoverageOptions) {
        if !r.status.is_considered() || (options.honor_overrides && r.equivalent_override) {
            return;
        }
        self.considered += 1;
        if r.status.counts_as_killed() {
            self.killed += 1;
        }
    }

    pub fn is_zero_denominator(&self) -> bool {
        self.considered == 0
    }

    /// killed / considered, or 0 when nothing was considered.
    pub fn coverage(&self) -> f64 {
        if self.considered == 0 {
            0.0
        } else {
            self.killed as f64 / self.considered as f64
        }
    }
}

/// Coverage of one class. Build errors are excluded and timeouts count as
/// killed.
pub fn class_coverage<'a>(results: impl IntoIterator<Item = &'a MutantResult>, options: CoverageOptions) -> Tally {
    let mut tally = Tally::default();
    for r in results {
        tally.add(r, options);
    }
    tally
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassCoverage {
    pub class_name: String,
    pub coverage: f64,
    /// Considered mutants behind `coverage`.
    pub mutant_count: usize,
    pub killed: usize,
    pub zero_denominator: bool,
}

/// Per-class coverages ordered by class name.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CoverageVector {
    pub entries: Vec<ClassCoverage>,
}

impl CoverageVector {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.coverage).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One entry per class that has at least one mutant in the full set. With a
/// sample, classes the sample misses stay in the vector at 0 with the
/// zero-denominator flag.
pub fn coverage_vector(result_set: &ResultSet, sample: Option<&SampleSet>, options: CoverageOptions) -> CoverageVector {
    let entries = result_set
        .records
        .iter()
        .filter(|(_, rs)| !rs.is_empty())
        .map(|(class, rs)| {
            let tally = class_coverage(rs.iter().filter(|r| sample.is_none_or(|s| s.contains(r.mutant_id))), options);
            ClassCoverage {
                class_name: class.clone(),
                coverage: tally.coverage(),
                mutant_count: tally.considered,
                killed: tally.killed,
                zero_denominator: tally.is_zero_denominator(),
            }
        })
        .collect();
    CoverageVector { entries }
}

/// Pooled killed / considered over the whole project (not a mean of class
/// coverages).
pub fn project_tally(result_set: &ResultSet, sample: Option<&SampleSet>, options: CoverageOptions) -> Tally {
    class_coverage(
        result_set.results().filter(|r| sample.is_none_or(|s| s.contains(r.mutant_id))),
        options,
    )
}

pub fn project_coverage(
    result_set: &ResultSet,
    sample: Option<&SampleSet>,
    options: CoverageOptions,
) -> Result<f64, AnalysisError> {
    let tally = project_tally(result_set, sample, options);
    if tally.is_zero_denominator() {
        return Err(AnalysisError::NoConsideredMutants);
    }
    Ok(tally.coverage())
}

pub fn distance(full_coverage: f64, sample_coverage: f64) -> f64 {
    (full_coverage - sample_coverage).abs()
}
