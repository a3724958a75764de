//! Synthetic result sets with controlled class sizes and test adequacy.
//!
//! Kills are independent Bernoulli draws. Real suites kill mutants in
//! correlated clusters, so synthetic stores exercise the sampling and
//! statistics machinery, not the constants of any real project.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use thiserror::Error;

use crate::mutator::{Mutant, MutationPoint, Operator};
use crate::runner::{MutantResult, Status};
use crate::sampler::seeded_rng;
use crate::store::{ProjectHeader, ResultSet, Store, StoreError};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid size distribution {0:?}: expected constant:K, uniform:LO,HI or lognormal:MU,SIGMA")]
    Parse(String),
    #[error("invalid size distribution: {0}")]
    Distribution(String),
    #[error("class count must be at least 1")]
    NoClasses,
    #[error("adequacy {0} is outside [0, 1]")]
    Adequacy(f64),
    #[error("adequacy list has {got} entries for {expected} classes")]
    AdequacyLength { expected: usize, got: usize },
    #[error("specification produced zero mutants")]
    NoMutants,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeDistribution {
    Constant(u64),
    /// Inclusive integer range.
    Uniform { lo: u64, hi: u64 },
    /// Sizes are `round(exp(N(mu, sigma)))`, at least 1.
    LogNormal { mu: f64, sigma: f64 },
}

impl SizeDistribution {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Distribution(m.to_string()));
        match *self {
            SizeDistribution::Constant(0) => bad("constant size must be positive"),
            SizeDistribution::Uniform { lo, hi } if lo == 0 || lo > hi => bad("uniform needs 1 <= lo <= hi"),
            SizeDistribution::LogNormal { mu, sigma } if !mu.is_finite() || !(sigma.is_finite() && sigma > 0.0) => {
                bad("lognormal needs finite mu and sigma > 0")
            }
            _ => Ok(()),
        }
    }

    /// Mean of the continuous distribution before rounding.
    pub fn mean(&self) -> f64 {
        match *self {
            SizeDistribution::Constant(k) => k as f64,
            SizeDistribution::Uniform { lo, hi } => (lo + hi) as f64 / 2.0,
            SizeDistribution::LogNormal { mu, sigma } => (mu + sigma * sigma / 2.0).exp(),
        }
    }

    /// Variance of the continuous distribution before rounding. The uniform
    /// case is the discrete uniform on `lo..=hi`.
    pub fn variance(&self) -> f64 {
        match *self {
            SizeDistribution::Constant(_) => 0.0,
            SizeDistribution::Uniform { lo, hi } => {
                let n = (hi - lo + 1) as f64;
                (n * n - 1.0) / 12.0
            }
            SizeDistribution::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                (s2.exp() - 1.0) * (2.0 * mu + s2).exp()
            }
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            SizeDistribution::Constant(k) => k,
            SizeDistribution::Uniform { lo, hi } => rng.random_range(lo..=hi),
            SizeDistribution::LogNormal { mu, sigma } => {
                let d = LogNormal::new(mu, sigma).expect("validated parameters");
                (d.sample(rng).round() as u64).max(1)
            }
        }
    }
}

impl FromStr for SizeDistribution {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || SynthError::Parse(s.to_string());
        let (kind, args) = s.split_once(':').ok_or_else(err)?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let dist = match (kind.trim().to_ascii_lowercase().as_str(), args.as_slice()) {
            ("constant", [k]) => SizeDistribution::Constant(k.parse().map_err(|_| err())?),
            ("uniform", [lo, hi]) => SizeDistribution::Uniform {
                lo: lo.parse().map_err(|_| err())?,
                hi: hi.parse().map_err(|_| err())?,
            },
            ("lognormal", [mu, sigma]) => SizeDistribution::LogNormal {
                mu: mu.parse().map_err(|_| err())?,
                sigma: sigma.parse().map_err(|_| err())?,
            },
            _ => return Err(err()),
        };
        dist.validate()?;
        Ok(dist)
    }
}

impl fmt::Display for SizeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeDistribution::Constant(k) => write!(f, "constant:{k}"),
            SizeDistribution::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            SizeDistribution::LogNormal { mu, sigma } => write!(f, "lognormal:{mu},{sigma}"),
        }
    }
}

/// Per-class kill probability.
#[derive(Debug, Clone, PartialEq)]
pub enum Adequacy {
    Uniform(f64),
    PerClass(Vec<f64>),
}

impl Adequacy {
    fn of(&self, class: usize) -> f64 {
        match self {
            Adequacy::Uniform(p) => *p,
            Adequacy::PerClass(ps) => ps[class],
        }
    }
}

impl FromStr for Adequacy {
    type Err = SynthError;

    /// `0.8` for every class or `0.2,0.5,0.9` per class.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| SynthError::Parse(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        match values.as_slice() {
            [p] => Ok(Adequacy::Uniform(*p)),
            _ => Ok(Adequacy::PerClass(values)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub class_count: usize,
    pub size_distribution: SizeDistribution,
    pub adequacy: Adequacy,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.class_count == 0 {
            return Err(SynthError::NoClasses);
        }
        self.size_distribution.validate()?;
        let ps: &[f64] = match &self.adequacy {
            Adequacy::Uniform(p) => std::slice::from_ref(p),
            Adequacy::PerClass(ps) if ps.len() != self.class_count => {
                return Err(SynthError::AdequacyLength {
                    expected: self.class_count,
                    got: ps.len(),
                })
            }
            Adequacy::PerClass(ps) => ps,
        };
        match ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            Some(&p) => Err(SynthError::Adequacy(p)),
            None => Ok(()),
        }
    }

    pub fn project_id(&self) -> String {
        format!("synth-{}-{}-seed{}", self.class_count, self.size_distribution, self.seed)
    }
}

pub fn class_name(index: usize) -> String {
    format!("synth/Class{index:03}.java")
}

/// Draw class sizes first, then one kill per mutant, all from a single
/// stream seeded by `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<ResultSet, SynthError> {
    let (catalog, results) = generate_parts(spec)?;
    Ok(ResultSet::from_parts(spec.project_id(), catalog, results).expect("generated ids are unique"))
}

fn generate_parts(spec: &SynthSpec) -> Result<(Vec<Mutant>, Vec<MutantResult>), SynthError> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed);
    let sizes: Vec<u64> = (0..spec.class_count)
        .map(|_| spec.size_distribution.draw(&mut rng))
        .collect();
    if sizes.iter().all(|&n| n == 0) {
        return Err(SynthError::NoMutants);
    }

    let total: u64 = sizes.iter().sum();
    let mut catalog = Vec::with_capacity(total as usize);
    let mut results = Vec::with_capacity(total as usize);
    let mut id = 0u64;
    for (c, &n) in sizes.iter().enumerate() {
        let class = class_name(c);
        let p = spec.adequacy.of(c);
        for k in 0..n {
            id += 1;
            let operator = Operator::ALL[(id as usize - 1) % Operator::ALL.len()];
            let original = operator.domain()[0];
            catalog.push(Mutant {
                id,
                class_name: class.clone(),
                file_path: class.clone(),
                point: MutationPoint {
                    operator,
                    token_index: k as usize,
                    replacement_text: operator.replacement(original).unwrap_or("").to_string(),
                    line: k as usize + 1,
                },
                original_text: original.to_string(),
            });
            let status = if rng.random_bool(p) {
                Status::Killed
            } else {
                Status::Survived
            };
            results.push(MutantResult {
                mutant_id: id,
                class_name: class.clone(),
                status,
                duration_ms: 0,
                equivalent_override: false,
            });
        }
    }
    Ok((catalog, results))
}

#[derive(Debug, Error)]
pub enum SynthStoreError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Write a synthetic project as an ordinary store file. The header records
/// the seed.
pub fn write_store(spec: &SynthSpec, path: &Path) -> Result<ResultSet, SynthStoreError> {
    let (catalog, results) = generate_parts(spec)?;
    let mut header = ProjectHeader::new(spec.project_id());
    header.seed = Some(spec.seed);
    if path.exists() {
        std::fs::remove_file(path).map_err(|e| StoreError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    let mut store = Store::create(path, &header, &catalog)?;
    store.append_results(&results)?;
    Ok(ResultSet::from_parts(spec.project_id(), catalog, results)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{coverage_vector, project_coverage, CoverageOptions};

    fn spec(dist: SizeDistribution, adequacy: f64, classes: usize, seed: u64) -> SynthSpec {
        SynthSpec {
            class_count: classes,
            size_distribution: dist,
            adequacy: Adequacy::Uniform(adequacy),
            seed,
        }
    }

    #[test]
    fn constant_fully_adequate() {
        let rs = generate(&spec(SizeDistribution::Constant(10), 1.0, 5, 1)).unwrap();
        assert_eq!(rs.total_results(), 50);
        assert!(rs.results().all(|r| r.status == Status::Killed));
        let v = coverage_vector(&rs, None, CoverageOptions::default());
        assert_eq!(v.values(), vec![1.0; 5]);
    }

    #[test]
    fn zero_adequacy() {
        let rs = generate(&spec(SizeDistribution::Uniform { lo: 1, hi: 9 }, 0.0, 7, 2)).unwrap();
        assert!(rs.results().all(|r| r.status == Status::Survived));
        let v = coverage_vector(&rs, None, CoverageOptions::default());
        assert!(v.values().iter().all(|&c| c == 0.0));
        assert_eq!(v.len(), 7);
    }

    #[test]
    fn deterministic_per_seed() {
        let s = spec(SizeDistribution::LogNormal { mu: 2.0, sigma: 1.0 }, 0.6, 20, 44);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let other = SynthSpec { seed: 45, ..s.clone() };
        assert_ne!(generate(&s).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn parse_distributions() {
        assert_eq!("constant:10".parse(), Ok(SizeDistribution::Constant(10)));
        assert_eq!("uniform:1,20".parse(), Ok(SizeDistribution::Uniform { lo: 1, hi: 20 }));
        assert_eq!(
            "lognormal:2.0,1.0".parse(),
            Ok(SizeDistribution::LogNormal { mu: 2.0, sigma: 1.0 })
        );
        for bad in ["constant:0", "uniform:5,2", "lognormal:2,0", "normal:1,2", "constant", "uniform:1"] {
            assert!(bad.parse::<SizeDistribution>().is_err(), "{bad}");
        }
        let d: SizeDistribution = "lognormal:2.5,1.25".parse().unwrap();
        assert_eq!(d.to_string().parse::<SizeDistribution>().unwrap(), d);
    }

    #[test]
    fn invalid_specs() {
        let base = spec(SizeDistribution::Constant(3), 0.5, 2, 0);
        assert_eq!(SynthSpec { class_count: 0, ..base.clone() }.validate(), Err(SynthError::NoClasses));
        assert_eq!(
            SynthSpec { adequacy: Adequacy::Uniform(1.5), ..base.clone() }.validate(),
            Err(SynthError::Adequacy(1.5))
        );
        assert_eq!(
            SynthSpec { adequacy: Adequacy::PerClass(vec![0.1]), ..base }.validate(),
            Err(SynthError::AdequacyLength { expected: 2, got: 1 })
        );
    }

    #[test]
    fn per_class_adequacy() {
        let s = SynthSpec {
            class_count: 3,
            size_distribution: SizeDistribution::Constant(4),
            adequacy: "0,1,0".parse().unwrap(),
            seed: 3,
        };
        let v = coverage_vector(&generate(&s).unwrap(), None, CoverageOptions::default());
        assert_eq!(v.values(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn pooled_coverage_converges_to_adequacy() {
        // 100 classes of 100 mutants: SE of the pooled rate is ~0.004.
        let mut mean = 0.0;
        let seeds = 20;
        for seed in 0..seeds {
            let rs = generate(&spec(SizeDistribution::Constant(100), 0.7, 100, seed)).unwrap();
            mean += project_coverage(&rs, None, CoverageOptions::default()).unwrap();
        }
        mean /= seeds as f64;
        assert!((mean - 0.7).abs() < 0.01, "{mean}");
    }

    #[test]
    fn pooled_coverage_is_size_weighted_mean_adequacy() {
        let adequacy: Vec<f64> = (0..40).map(|c| if c % 2 == 0 { 0.2 } else { 0.9 }).collect();
        let s = SynthSpec {
            class_count: 40,
            size_distribution: SizeDistribution::Uniform { lo: 200, hi: 300 },
            adequacy: Adequacy::PerClass(adequacy.clone()),
            seed: 8,
        };
        let rs = generate(&s).unwrap();
        let sizes: Vec<usize> = rs.class_sizes().values().copied().collect();
        let total: usize = sizes.iter().sum();
        assert!(total >= 10_000);
        let expected: f64 = sizes.iter().zip(&adequacy).map(|(&n, p)| n as f64 * p).sum::<f64>() / total as f64;
        let got = project_coverage(&rs, None, CoverageOptions::default()).unwrap();
        assert!((got - expected).abs() < 0.01, "{got} vs {expected}");
    }

    #[test]
    fn lognormal_moments_match_closed_form() {
        // Rounding shifts the variance by about 1/12, far inside tolerance.
        let d = SizeDistribution::LogNormal { mu: 2.0, sigma: 0.5 };
        let mut sizes = Vec::new();
        for seed in 0..50 {
            let rs = generate(&spec(d, 0.5, 30, seed)).unwrap();
            sizes.extend(rs.class_sizes().values().map(|&n| n as f64));
        }
        let n = sizes.len() as f64;
        let mean = sizes.iter().sum::<f64>() / n;
        let sd = (sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!((mean / d.mean() - 1.0).abs() < 0.10, "mean {mean} vs {}", d.mean());
        assert!((sd / d.variance().sqrt() - 1.0).abs() < 0.10, "sd {sd} vs {}", d.variance().sqrt());
    }

    #[test]
    fn store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("synth.jsonl");
        let s = spec(SizeDistribution::Uniform { lo: 1, hi: 6 }, 0.5, 8, 12);
        let written = write_store(&s, &path).unwrap();
        let loaded = crate::store::load_result_set(&path).unwrap();
        assert_eq!(loaded.header.unwrap().seed, Some(12));
        assert_eq!(loaded.result_set, written);
        assert_eq!(written, generate(&s).unwrap());
    }
}
