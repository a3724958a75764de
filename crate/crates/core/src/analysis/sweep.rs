//! Representativeness of sampled sets and sweeps over sampling rates.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::sampler::{sample, Approach, SampleConfig, WeightBasis};
use crate::store::ResultSet;

use super::correlation::{kendall_p_value, kendall_tau_b, pearson_p_value, pearson_rho};
use super::coverage::{coverage_vector, distance, project_tally, CoverageOptions, CoverageVector};
use super::AnalysisError;

pub const DEFAULT_CRITICAL: f64 = 0.75;
pub const DEFAULT_REPETITIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub coverage: CoverageOptions,
    /// Drop classes the sample missed from both vectors instead of scoring
    /// them at 0.
    pub exclude_unsampled: bool,
    pub weight_basis: WeightBasis,
    pub critical: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            coverage: CoverageOptions::default(),
            exclude_unsampled: false,
            weight_basis: WeightBasis::Mutants,
            critical: DEFAULT_CRITICAL,
        }
    }
}

/// Mean representativeness at one sampling rate. `None` means every
/// repetition was undefined for that metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentativenessPoint {
    pub rate: f64,
    pub pearson_rho: Option<f64>,
    pub kendall_tau_b: Option<f64>,
    pub distance: Option<f64>,
    pub repetitions: usize,
    /// Repetitions whose correlation was undefined (constant vector).
    pub undefined_count: usize,
    /// Vector length and p-values of the last repetition.
    pub vector_len: usize,
    pub pearson_p: Option<f64>,
    pub kendall_p: Option<f64>,
}

impl RepresentativenessPoint {
    pub fn percent(&self) -> u32 {
        (self.rate * 100.0).round() as u32
    }

    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Rho => self.pearson_rho,
            Metric::Tau => self.kendall_tau_b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Rho,
    Tau,
}

/// Full-set quantities shared by every repetition.
struct Reference {
    vector: CoverageVector,
    values: Vec<f64>,
    coverage: Option<f64>,
}

impl Reference {
    fn new(result_set: &ResultSet, options: &AnalysisOptions) -> Self {
        let vector = coverage_vector(result_set, None, options.coverage);
        let values = vector.values();
        let tally = project_tally(result_set, None, options.coverage);
        Reference {
            vector,
            values,
            coverage: (!tally.is_zero_denominator()).then(|| tally.coverage()),
        }
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn evaluate(
    result_set: &ResultSet,
    reference: &Reference,
    config: &SampleConfig,
    repetitions: usize,
    options: &AnalysisOptions,
) -> Result<RepresentativenessPoint, AnalysisError> {
    if repetitions == 0 {
        return Err(AnalysisError::NoRepetitions);
    }
    let mut rhos = Vec::with_capacity(repetitions);
    let mut taus = Vec::with_capacity(repetitions);
    let mut distances = Vec::with_capacity(repetitions);
    let mut undefined = 0;
    let mut last = (0, None, None);

    for rep in 0..repetitions {
        let cfg = SampleConfig {
            seed: config.seed.wrapping_add(rep as u64),
            ..*config
        };
        let sampled = sample(result_set, &cfg)?;
        let vector = coverage_vector(result_set, Some(&sampled), options.coverage);

        let (full, part): (Vec<f64>, Vec<f64>) = if options.exclude_unsampled {
            reference
                .vector
                .entries
                .iter()
                .zip(&vector.entries)
                .filter(|(_, s)| !s.zero_denominator)
                .map(|(f, s)| (f.coverage, s.coverage))
                .unzip()
        } else {
            (reference.values.clone(), vector.values())
        };

        let rho = pearson_rho(&full, &part).ok().flatten();
        let tau = kendall_tau_b(&full, &part).ok().flatten();
        if rho.is_none() || tau.is_none() {
            undefined += 1;
        }
        rhos.extend(rho);
        taus.extend(tau);

        let sample_tally = project_tally(result_set, Some(&sampled), options.coverage);
        if let (Some(full_cov), false) = (reference.coverage, sample_tally.is_zero_denominator()) {
            distances.push(distance(full_cov, sample_tally.coverage()));
        }
        last = (full.len(), rho, tau);
    }

    let (vector_len, last_rho, last_tau) = last;
    Ok(RepresentativenessPoint {
        rate: config.rate,
        pearson_rho: mean(&rhos),
        kendall_tau_b: mean(&taus),
        distance: mean(&distances),
        repetitions,
        undefined_count: undefined,
        vector_len,
        pearson_p: last_rho.and_then(|r| pearson_p_value(r, vector_len)),
        kendall_p: last_tau.and_then(|t| kendall_p_value(t, vector_len)),
    })
}

/// Draw `repetitions` samples with seeds `seed, seed+1, …` and average ρ, τ_b
/// and project-level distance against the full set. Undefined coefficients
/// are left out of the means and counted.
pub fn representativeness(
    result_set: &ResultSet,
    config: &SampleConfig,
    repetitions: usize,
    options: &AnalysisOptions,
) -> Result<RepresentativenessPoint, AnalysisError> {
    let reference = Reference::new(result_set, options);
    let point = evaluate(result_set, &reference, config, repetitions, options)?;
    if point.pearson_rho.is_none() && point.kendall_tau_b.is_none() {
        return Err(AnalysisError::AllUndefined { rate: config.rate });
    }
    if point.undefined_count > 0 {
        log::debug!(
            "rate {}: {} of {} repetitions had undefined correlations",
            config.rate,
            point.undefined_count,
            repetitions
        );
    }
    Ok(point)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AcceptableRate {
    Percent(u32),
    Never,
}

impl AcceptableRate {
    pub fn percent(self) -> Option<u32> {
        match self {
            AcceptableRate::Percent(p) => Some(p),
            AcceptableRate::Never => None,
        }
    }
}

impl fmt::Display for AcceptableRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcceptableRate::Percent(p) => write!(f, "{p}"),
            AcceptableRate::Never => f.write_str("never"),
        }
    }
}

/// Smallest rate from which the metric stays strictly above `critical` at
/// every higher rate. Undefined means count as not acceptable.
pub fn acceptable_rate(points: &[RepresentativenessPoint], metric: Metric, critical: f64) -> AcceptableRate {
    let mut ordered: Vec<&RepresentativenessPoint> = points.iter().collect();
    ordered.sort_by_key(|p| p.percent());
    let mut found = AcceptableRate::Never;
    for p in ordered.iter().rev() {
        match p.metric(metric) {
            Some(v) if v > critical => found = AcceptableRate::Percent(p.percent()),
            _ => break,
        }
    }
    found
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassStats {
    pub class_count: usize,
    pub mu: f64,
    /// Population standard deviation.
    pub sigma: f64,
}

/// Count, mean and population standard deviation of per-class mutant counts.
pub fn class_stats(result_set: &ResultSet) -> ClassStats {
    let sizes: Vec<f64> = result_set.class_sizes().values().map(|&n| n as f64).collect();
    let class_count = sizes.len();
    if class_count == 0 {
        return ClassStats {
            class_count,
            mu: 0.0,
            sigma: 0.0,
        };
    }
    let mu = sizes.iter().sum::<f64>() / class_count as f64;
    let var = sizes.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / class_count as f64;
    ClassStats {
        class_count,
        mu,
        sigma: var.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub approach: Approach,
    pub seed: u64,
    pub repetitions: usize,
    pub critical: f64,
    /// Rates 1%..=100%, ascending.
    pub points: Vec<RepresentativenessPoint>,
    pub acceptable_rate_rho: AcceptableRate,
    pub acceptable_rate_tau: AcceptableRate,
    pub class_stats: ClassStats,
}

impl SweepReport {
    /// Re-derive the acceptable rates under another threshold. The curves do
    /// not depend on it.
    pub fn with_critical(mut self, critical: f64) -> Self {
        self.critical = critical;
        self.acceptable_rate_rho = acceptable_rate(&self.points, Metric::Rho, critical);
        self.acceptable_rate_tau = acceptable_rate(&self.points, Metric::Tau, critical);
        self
    }

    pub fn point(&self, percent: u32) -> Option<&RepresentativenessPoint> {
        self.points.iter().find(|p| p.percent() == percent)
    }
}

/// Representativeness at every integer rate from 1% to 100%.
///
/// Every rate uses the same repetition seeds, so parallel and serial
/// evaluation give bit-identical reports.
pub fn sweep(
    result_set: &ResultSet,
    approach: Approach,
    seed: u64,
    repetitions: usize,
    options: &AnalysisOptions,
) -> Result<SweepReport, AnalysisError> {
    if result_set.is_empty() {
        return Err(AnalysisError::EmptyResultSet);
    }
    let reference = Reference::new(result_set, options);
    if reference.values.len() < 2 {
        return Err(AnalysisError::TooFewClasses(reference.values.len()));
    }
    if reference.values.iter().all(|&v| v == reference.values[0]) {
        return Err(AnalysisError::ConstantFullCoverage);
    }
    let points = (1..=100u32)
        .into_par_iter()
        .map(|percent| {
            let config = SampleConfig {
                approach,
                rate: f64::from(percent) / 100.0,
                seed,
                weight_basis: options.weight_basis,
            };
            evaluate(result_set, &reference, &config, repetitions, options)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let undefined: usize = points.iter().map(|p| p.undefined_count).sum();
    if undefined > 0 {
        log::info!("{approach} sweep: {undefined} undefined correlations excluded from averages");
    }
    Ok(SweepReport {
        approach,
        seed,
        repetitions,
        critical: options.critical,
        acceptable_rate_rho: acceptable_rate(&points, Metric::Rho, options.critical),
        acceptable_rate_tau: acceptable_rate(&points, Metric::Tau, options.critical),
        points,
        class_stats: class_stats(result_set),
    })
}

pub const CURVE_HEADER: &str = "rate,pearson_mean,kendall_mean,distance_mean,undefined_count";
pub const SUMMARY_HEADER: &str = "approach,acceptable_rate_rho,acceptable_rate_tau,class_count,mu,sigma";
pub const PVALUE_HEADER: &str = "rate,vector_len,pearson_p,kendall_p";

fn cell(v: Option<f64>) -> String {
    // `{:?}` keeps a trailing `.0` and round-trips exactly.
    v.map_or_else(|| "NaN".to_string(), |v| format!("{v:?}"))
}

/// Curves do not depend on the critical point, so it is left out here.
fn provenance(report: &SweepReport) -> String {
    format!(
        "# approach={} seed={} repetitions={}",
        report.approach, report.seed, report.repetitions
    )
}

pub fn write_curve_csv<W: Write>(report: &SweepReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", provenance(report))?;
    writeln!(out, "{CURVE_HEADER}")?;
    for p in &report.points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.percent(),
            cell(p.pearson_rho),
            cell(p.kendall_tau_b),
            cell(p.distance),
            p.undefined_count
        )?;
    }
    Ok(())
}

pub fn write_pvalue_csv<W: Write>(report: &SweepReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", provenance(report))?;
    writeln!(out, "{PVALUE_HEADER}")?;
    for p in &report.points {
        writeln!(out, "{},{},{},{}", p.percent(), p.vector_len, cell(p.pearson_p), cell(p.kendall_p))?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(reports: &[SweepReport], mut out: W) -> io::Result<()> {
    if let Some(first) = reports.first() {
        writeln!(
            out,
            "# seed={} repetitions={} critical={:?}",
            first.seed, first.repetitions, first.critical
        )?;
    }
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{:?},{:?}",
            r.approach,
            r.acceptable_rate_rho,
            r.acceptable_rate_tau,
            r.class_stats.class_count,
            r.class_stats.mu,
            r.class_stats.sigma
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::Status::*;
    use crate::testutil::{result_set, result_set_with_sizes};

    fn point(percent: u32, rho: Option<f64>) -> RepresentativenessPoint {
        RepresentativenessPoint {
            rate: f64::from(percent) / 100.0,
            pearson_rho: rho,
            kendall_tau_b: rho,
            distance: Some(0.0),
            repetitions: 10,
            undefined_count: 0,
            vector_len: 0,
            pearson_p: None,
            kendall_p: None,
        }
    }

    fn curve(f: impl Fn(u32) -> f64) -> Vec<RepresentativenessPoint> {
        (1..=100).map(|p| point(p, Some(f(p)))).collect()
    }

    #[test]
    fn acceptable_rate_first_crossing() {
        let pts = curve(|p| match p {
            ..=40 => 0.74,
            41 => 0.76,
            _ => 0.80,
        });
        assert_eq!(acceptable_rate(&pts, Metric::Rho, 0.75), AcceptableRate::Percent(41));
    }

    #[test]
    fn acceptable_rate_must_remain_acceptable() {
        let pts = curve(|p| match p {
            ..=29 => 0.5,
            35 => 0.73,
            _ => 0.9,
        });
        assert_eq!(acceptable_rate(&pts, Metric::Rho, DEFAULT_CRITICAL), AcceptableRate::Percent(36));
    }

    #[test]
    fn acceptable_rate_is_strict_and_skips_undefined() {
        let mut pts = curve(|_| 0.75);
        assert_eq!(acceptable_rate(&pts, Metric::Rho, 0.75), AcceptableRate::Never);
        pts = curve(|_| 0.9);
        pts[59].pearson_rho = None;
        assert_eq!(acceptable_rate(&pts, Metric::Rho, 0.75), AcceptableRate::Percent(61));
    }

    #[test]
    fn class_stats_examples() {
        let s = class_stats(&result_set_with_sizes(&[10, 10, 10]));
        assert_eq!((s.class_count, s.mu, s.sigma), (3, 10.0, 0.0));
        let s = class_stats(&result_set_with_sizes(&[1, 3]));
        assert_eq!((s.class_count, s.mu, s.sigma), (2, 2.0, 1.0));
    }

    fn mixed() -> ResultSet {
        result_set(&[
            &[Killed, Killed, Killed, Survived],
            &[Killed, Survived, Survived],
            &[Survived, Survived, Survived, Survived, Killed],
            &[Killed],
            &[Killed, Killed, Timeout, BuildError, Survived, Survived],
        ])
    }

    #[test]
    fn full_rate_is_perfect() {
        let rs = mixed();
        for approach in [Approach::Uniform, Approach::Weighted] {
            let cfg = SampleConfig::new(approach, 1.0, 5).unwrap();
            let p = representativeness(&rs, &cfg, 10, &AnalysisOptions::default()).unwrap();
            assert_eq!((p.pearson_rho, p.kendall_tau_b, p.distance), (Some(1.0), Some(1.0), Some(0.0)));
        }
    }

    #[test]
    fn single_repetition_is_reproducible() {
        let rs = mixed();
        let cfg = SampleConfig::new(Approach::Weighted, 0.4, 11).unwrap();
        let a = representativeness(&rs, &cfg, 1, &AnalysisOptions::default()).unwrap();
        let b = representativeness(&rs, &cfg, 1, &AnalysisOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_repetitions_is_an_error() {
        let cfg = SampleConfig::new(Approach::Uniform, 0.4, 11).unwrap();
        assert!(matches!(
            representativeness(&mixed(), &cfg, 0, &AnalysisOptions::default()),
            Err(AnalysisError::NoRepetitions)
        ));
    }

    #[test]
    fn all_undefined_is_an_error() {
        // Every class fully killed: the full vector is constant.
        let rs = result_set(&[&[Killed, Killed], &[Killed]]);
        let cfg = SampleConfig::new(Approach::Uniform, 0.5, 0).unwrap();
        assert!(matches!(
            representativeness(&rs, &cfg, 3, &AnalysisOptions::default()),
            Err(AnalysisError::AllUndefined { .. })
        ));
        assert!(matches!(
            sweep(&rs, Approach::Uniform, 0, 3, &AnalysisOptions::default()),
            Err(AnalysisError::ConstantFullCoverage)
        ));
    }

    #[test]
    fn sweep_shape_and_endpoint() {
        let rs = mixed();
        let report = sweep(&rs, Approach::Uniform, 3, 5, &AnalysisOptions::default()).unwrap();
        assert_eq!(report.points.len(), 100);
        assert!(report.points.iter().enumerate().all(|(i, p)| p.percent() == i as u32 + 1));
        let end = report.point(100).unwrap();
        assert_eq!((end.pearson_rho, end.kendall_tau_b, end.distance), (Some(1.0), Some(1.0), Some(0.0)));
        assert_eq!(report.class_stats.class_count, 5);
        let again = sweep(&rs, Approach::Uniform, 3, 5, &AnalysisOptions::default()).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn exclude_unsampled_changes_only_the_pairing() {
        let rs = result_set_with_sizes(&[20, 1, 1, 1, 15, 2]);
        let cfg = SampleConfig::new(Approach::Uniform, 0.1, 2).unwrap();
        let opts = AnalysisOptions {
            exclude_unsampled: true,
            ..AnalysisOptions::default()
        };
        let included = representativeness(&rs, &cfg, 20, &AnalysisOptions::default()).unwrap();
        let excluded = representativeness(&rs, &cfg, 20, &opts).unwrap();
        assert_eq!(included.distance, excluded.distance);
        assert!(excluded.vector_len < included.vector_len);
    }

    #[test]
    fn curve_csv_format() {
        let rs = mixed();
        let report = sweep(&rs, Approach::Weighted, 9, 2, &AnalysisOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# approach=weighted seed=9 repetitions=2");
        assert_eq!(lines[1], CURVE_HEADER);
        assert_eq!(lines.len(), 102);
        assert_eq!(lines[101], "100,1.0,1.0,0.0,0");
    }
}
