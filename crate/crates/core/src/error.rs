use thiserror::Error;

use crate::jets::JetError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("orbifold point: potential is singular at u = {0}")]
    OrbifoldPoint(f64),
    #[error("out of region: {0}")]
    OutOfRegion(String),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("not a hyperkähler chart: det g varies ({0})")]
    NotHyperkahler(String),
    #[error("normalization error: {0}")]
    Normalization(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("wrong patch: |ζ| = {0} > 1")]
    WrongPatch(f64),
    #[error("orbifold proximity: u = {0} fell below the floor")]
    Proximity(f64),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
