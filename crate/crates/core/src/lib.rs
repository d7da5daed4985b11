//! Aggregation of multi-coder categorical annotations.
//!
//! The crate estimates the true label of every coded item together with its
//! uncertainty, using three models:
//!
//! * [`bace`]: the biased-annotator competence model, which gives each coder a
//!   competence β and a bias distribution γ and fits them by Gibbs sampling;
//! * [`dawid_skene`]: per-coder confusion matrices fitted by EM;
//! * [`majority`]: plurality vote with dataset-frequency tie-breaking.
//!
//! [`reliability`] computes the usual intercoder statistics (percent agreement,
//! Cohen's and Fleiss' kappa, Krippendorff's alpha), [`evaluation`] scores
//! models against an expert gold set split into clear and ambiguous items,
//! and [`simulation`] generates data from known coder parameters.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common result types to one precision.

pub mod bace;
pub mod data;
pub mod dawid_skene;
pub mod error;
pub mod evaluation;
pub mod majority;
pub mod reliability;
pub mod scalar;
pub mod simulation;

pub use bace::{bace_exact_posterior_small, bace_fit, BacePriors, BaceResult, CoderProfile, GibbsConfig, PosteriorLabel};
pub use data::{
    build_matrix, parse_annotations, parse_gold, AnnotationMatrix, AnnotationTable, GoldSet, LabelCode, LabelSet,
    Record,
};
pub use dawid_skene::{ds_fit, ConfusionMatrix, DawidSkeneResult, DsConfig};
pub use error::{Error, Result};
pub use evaluation::{accuracy, model_comparison, partition_gold, AccuracyTable, ComparisonConfig, GoldPartition, Model};
pub use majority::{majority_vote, MajorityResult, TieMode};
pub use reliability::{reliability_report, ReliabilityReport};
pub use scalar::Scalar;
pub use simulation::{bayes_oracle_accuracy, simulate_dataset, SimCoder, SimConfig, SimDataset};

pub type BaceResult64 = BaceResult<f64>;
pub type BaceResult32 = BaceResult<f32>;
pub type GibbsConfig64 = GibbsConfig<f64>;
pub type GibbsConfig32 = GibbsConfig<f32>;
pub type BacePriors64 = BacePriors<f64>;
pub type CoderProfile64 = CoderProfile<f64>;
pub type PosteriorLabel64 = PosteriorLabel<f64>;
pub type DawidSkeneResult64 = DawidSkeneResult<f64>;
pub type DawidSkeneResult32 = DawidSkeneResult<f32>;
pub type DsConfig64 = DsConfig<f64>;
pub type DsConfig32 = DsConfig<f32>;
pub type ReliabilityReport64 = ReliabilityReport<f64>;
pub type ReliabilityReport32 = ReliabilityReport<f32>;
pub type AccuracyTable64 = AccuracyTable<f64>;
pub type ComparisonConfig64 = ComparisonConfig<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type SimConfig32 = SimConfig<f32>;
