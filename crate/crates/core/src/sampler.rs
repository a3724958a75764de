//! Random mutant selection: uniform, and weighted by inverse class size via
//! roulette-wheel spins.
//!
//! All randomness comes from [`seeded_rng`], a ChaCha8 stream seeded from a
//! 64-bit integer, so a `(store, config)` pair selects the same ids on every
//! platform.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::ResultSet;

pub type SampleRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Uniform,
    Weighted,
}

impl Approach {
    pub fn name(self) -> &'static str {
        match self {
            Approach::Uniform => "uniform",
            Approach::Weighted => "weighted",
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Approach {
    type Err = SampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Approach::Uniform),
            "weighted" => Ok(Approach::Weighted),
            other => Err(SampleError::UnknownApproach(other.to_string())),
        }
    }
}

/// What "size of the class" means when weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightBasis {
    #[default]
    Mutants,
    Loc,
}

impl FromStr for WeightBasis {
    type Err = SampleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mutants" => Ok(WeightBasis::Mutants),
            "loc" => Ok(WeightBasis::Loc),
            other => Err(SampleError::UnknownWeightBasis(other.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("sampling rate must be in (0, 1], got {0}")]
    Rate(f64),
    #[error("cannot sample from an empty result set")]
    Empty,
    #[error("unknown sampling approach `{0}` (expected uniform or weighted)")]
    UnknownApproach(String),
    #[error("unknown weight basis `{0}` (expected mutants or loc)")]
    UnknownWeightBasis(String),
    #[error("config asks for the {0} approach")]
    WrongApproach(Approach),
    #[error("class `{0}` has no recorded line count; LoC weighting needs a store produced by `generate`")]
    MissingLoc(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub approach: Approach,
    pub rate: f64,
    pub seed: u64,
    #[serde(default)]
    pub weight_basis: WeightBasis,
}

impl SampleConfig {
    pub fn new(approach: Approach, rate: f64, seed: u64) -> Result<Self, SampleError> {
        let cfg = SampleConfig {
            approach,
            rate,
            seed,
            weight_basis: WeightBasis::Mutants,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_weight_basis(self, weight_basis: WeightBasis) -> Self {
        SampleConfig { weight_basis, ..self }
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        if self.rate > 0.0 && self.rate <= 1.0 {
            Ok(())
        } else {
            Err(SampleError::Rate(self.rate))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub config: SampleConfig,
    pub mutant_ids: BTreeSet<u64>,
    pub target_size: usize,
}

impl SampleSet {
    pub fn contains(&self, id: u64) -> bool {
        self.mutant_ids.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.mutant_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mutant_ids.is_empty()
    }
}

/// `round(rate × total)`, but at least one mutant when there is any.
pub fn target_size(rate: f64, total: usize) -> usize {
    if total == 0 {
        return 0;
    }
    ((rate * total as f64).round() as usize).clamp(1, total)
}

/// Equiprobable selection of N ids without replacement.
pub fn uniform_sample(result_set: &ResultSet, config: &SampleConfig) -> Result<SampleSet, SampleError> {
    if config.approach != Approach::Uniform {
        return Err(SampleError::WrongApproach(config.approach));
    }
    config.validate()?;
    let ids = result_set.result_ids();
    if ids.is_empty() {
        return Err(SampleError::Empty);
    }
    let n = target_size(config.rate, ids.len());
    let mut rng = seeded_rng(config.seed);
    let mutant_ids = index::sample(&mut rng, ids.len(), n).into_iter().map(|i| ids[i]).collect();
    Ok(SampleSet {
        config: *config,
        mutant_ids,
        target_size: n,
    })
}

/// `weight(m) = 1 / |mutants in class(m)|`, so every class weighs exactly 1.
pub fn class_weights(result_set: &ResultSet) -> BTreeMap<u64, f64> {
    result_set
        .records
        .values()
        .filter(|rs| !rs.is_empty())
        .flat_map(|rs| {
            let w = 1.0 / rs.len() as f64;
            rs.iter().map(move |r| (r.mutant_id, w))
        })
        .collect()
}

/// `weight(m) = 1 / LoC(class(m))`.
pub fn loc_weights(result_set: &ResultSet) -> Result<BTreeMap<u64, f64>, SampleError> {
    let mut weights = BTreeMap::new();
    for (class, rs) in &result_set.records {
        let loc = result_set
            .class_loc
            .get(class)
            .copied()
            .filter(|&l| l > 0)
            .ok_or_else(|| SampleError::MissingLoc(class.clone()))?;
        for r in rs {
            weights.insert(r.mutant_id, 1.0 / loc as f64);
        }
    }
    Ok(weights)
}

/// Cumulative-weight selection without replacement.
///
/// A spin draws `r` uniformly from `[0, total)` and walks the remaining
/// entries, adding weights until the running sum exceeds `r`. The chosen
/// entry leaves the wheel; the other weights are unchanged and the total is
/// recomputed from what remains.
#[derive(Debug, Clone)]
pub struct RouletteWheel {
    entries: Vec<(u64, f64)>,
}

impl RouletteWheel {
    pub fn new(entries: impl IntoIterator<Item = (u64, f64)>) -> Self {
        RouletteWheel {
            entries: entries.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w).sum()
    }

    pub fn spin<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<u64> {
        if self.entries.is_empty() {
            return None;
        }
        let r = rng.random::<f64>() * self.total();
        let mut acc = 0.0;
        // Rounding can leave the final running sum a hair below `r`; the
        // last entry then owns the remainder of the wheel.
        let mut chosen = self.entries.len() - 1;
        for (i, (_, w)) in self.entries.iter().enumerate() {
            acc += w;
            if acc > r {
                chosen = i;
                break;
            }
        }
        Some(self.entries.remove(chosen).0)
    }
}

pub fn weighted_sample(result_set: &ResultSet, config: &SampleConfig) -> Result<SampleSet, SampleError> {
    if config.approach != Approach::Weighted {
        return Err(SampleError::WrongApproach(config.approach));
    }
    config.validate()?;
    let weights = match config.weight_basis {
        WeightBasis::Mutants => class_weights(result_set),
        WeightBasis::Loc => loc_weights(result_set)?,
    };
    if weights.is_empty() {
        return Err(SampleError::Empty);
    }
    let n = target_size(config.rate, weights.len());
    let mut rng = seeded_rng(config.seed);
    let mut wheel = RouletteWheel::new(weights);
    let mut mutant_ids = BTreeSet::new();
    while mutant_ids.len() < n {
        let id = wheel.spin(&mut rng).expect("wheel holds at least n entries");
        mutant_ids.insert(id);
    }
    Ok(SampleSet {
        config: *config,
        mutant_ids,
        target_size: n,
    })
}

pub fn sample(result_set: &ResultSet, config: &SampleConfig) -> Result<SampleSet, SampleError> {
    match config.approach {
        Approach::Uniform => uniform_sample(result_set, config),
        Approach::Weighted => weighted_sample(result_set, config),
    }
}
