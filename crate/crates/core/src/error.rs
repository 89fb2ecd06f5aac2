use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature `{0}` is not part of the schema")]
    MissingFeature(String),

    #[error("operator {op} cannot be applied to {kind} feature `{feature}`")]
    KindMismatch {
        feature: String,
        op: String,
        kind: &'static str,
    },

    #[error("conjunction has two predicates on `{feature}` with operator {op}")]
    DuplicatePredicate { feature: String, op: String },

    #[error("rule set contains the rule `{0}` twice")]
    DuplicateRule(String),

    #[error("label `{0}` is not in the label set")]
    UnknownLabel(String),

    #[error("invalid label set: {0}")]
    InvalidLabelSet(String),

    #[error("model is malformed: {0}")]
    MalformedModel(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset has no `{0}` column")]
    MissingColumn(&'static str),

    #[error("{path}: line {line}: {message}")]
    Csv { path: PathBuf, line: u64, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("no conjunction reaches min_support = {min_support}; lower the threshold")]
    EmptyPool { min_support: f64 },

    #[error("rule `{0}` is not expressible from the candidate pools")]
    RuleNotInPools(String),

    #[error("objective term f{term} is negative ({value}); the rule set exceeds the normalizing bounds")]
    NegativeTerm { term: usize, value: i128 },

    #[error("no candidate rules remain after applying the policy (prohibited: {prohibited:?})")]
    Infeasible { prohibited: Vec<String> },

    #[error("no acceptable model found; desired features never covered: {uncovered:?}")]
    Unacceptable { uncovered: Vec<String> },

    #[error("prohibited feature `{0}` appears in a generated model")]
    PolicyViolation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
