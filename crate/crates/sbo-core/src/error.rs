use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input contains no interactions")]
    EmptyInput,
    #[error("{count} dataset user(s) missing from attribute file (e.g. '{first}')")]
    AttributeCoverage { count: usize, first: String },
    #[error("attribute file has {found} distinct labels, expected exactly 2")]
    LabelCardinality { found: usize },
    #[error("user group '{label}' is empty")]
    EmptyGroup { label: String },
    #[error("the {k}-core of the dataset is empty")]
    EmptyCore { k: u32 },
    #[error("user '{user}' has a single interaction and cannot be split")]
    SplitInfeasible { user: String },
    #[error("cannot build {folds} folds from {users} users")]
    FoldInfeasible { folds: usize, users: usize },
    #[error("item index {index} outside the item universe of size {universe}")]
    ItemOutOfRange { index: u32, universe: usize },
    #[error("user profile is empty, stereotypicality undefined")]
    EmptyProfile,
    #[error("cannot aggregate an empty score list")]
    EmptyScores,
    #[error("unknown group label '{label}'")]
    UnknownGroup { label: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("all cross-validation folds were skipped")]
    AllFoldsSkipped,
    #[error("vector has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
