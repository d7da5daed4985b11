use thiserror::Error;

/// Errors raised while ingesting annotations or fitting models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed CSV: {0}")]
    Malformed(String),
    #[error("duplicate annotation for item `{item}` by coder `{coder}`")]
    DuplicatePair { item: String, coder: String },
    #[error("duplicate gold entry for item `{0}`")]
    DuplicateGold(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("label code {code} outside label set of size {k}")]
    LabelOutOfRange { code: usize, k: usize },
    #[error("invalid label set: {0}")]
    InvalidLabelSet(String),
    #[error("fewer than 2 coders ({0} found)")]
    TooFewCoders(usize),
    #[error("annotation data is empty")]
    Empty,
    #[error("item `{0}` has no annotations")]
    UnannotatedItem(String),
    #[error("coders `{0}` and `{1}` share no jointly annotated items")]
    NoJointItems(String, String),
    #[error("Cohen's kappa undefined for coders `{0}` and `{1}`: expected agreement is 1")]
    UndefinedKappa(String, String),
    #[error("Fleiss' kappa needs at least 2 items annotated by every coder ({0} found)")]
    TooFewCompleteItems(usize),
    #[error("Fleiss' kappa undefined: expected agreement is 1")]
    UndefinedFleiss,
    #[error("no pairable values: every item has fewer than 2 annotations")]
    NoPairableValues,
    #[error("non-finite log-likelihood at iteration {0}; increase smoothing")]
    NonFiniteLikelihood(usize),
    #[error("gold item `{0}` is absent from the annotation data")]
    GoldItemMissing(String),
    #[error("no prediction for item `{0}`")]
    MissingPrediction(String),
    #[error("evaluation subset is empty")]
    EmptySubset,
    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("inputs do not match: {0}")]
    Mismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
