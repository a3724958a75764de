//! Mutation testing with sampled mutant sets.
//!
//! The pipeline is: [`mutator`] generates first-order mutants from Java-style
//! sources, [`runner`] executes the project's tests against each one and
//! appends verdicts to a [`store`], [`sampler`] draws uniform or
//! class-weighted subsets, and [`analysis`] measures how well a sampled set
//! represents the full one. [`synth`] fabricates stores for experiments.

pub mod analysis;
pub mod lexer;
pub mod mutator;
pub mod runner;
pub mod sampler;
pub mod store;
pub mod synth;

#[cfg(test)]
mod testutil;

pub use analysis::{AnalysisError, AnalysisOptions, CoverageOptions, SweepReport};
pub use mutator::{Mutant, MutationPoint, Operator};
pub use runner::{MutantResult, Status};
pub use sampler::{Approach, SampleConfig, SampleSet, WeightBasis};
pub use store::{ResultSet, Store, StoreError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/store.md")]
    mod store {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/representativeness.md")]
    mod representativeness {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
