use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("singularity: {0}")]
    Singularity(String),
    #[error("jet truncation: need order {needed}, have {available}")]
    Truncation { needed: usize, available: usize },
    #[error("variance mismatch: {0}")]
    Variance(String),
    #[error("point outside chart domain: {0}")]
    Domain(String),
    #[error("unsupported dimension: {0}")]
    Dimension(String),
    #[error("scale mismatch: {0} vs {1}")]
    Scale(String, String),
    #[error("not an almost Einstein structure (parallel residual {0:e})")]
    NotAlmostEinstein(f64),
    #[error("point too close to the scale singularity set (|sigma| = {0:e})")]
    SingularityProximity(f64),
    #[error("degenerate level set: |d phi| = {0:e}")]
    DegenerateLevelSet(f64),
    #[error("point is not on the hypersurface (|phi| = {0:e})")]
    NotOnSurface(f64),
    #[error("tractor is not orthogonal to the normal tractor (h(N, t) = {0:e})")]
    NotOrthogonal(f64),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("configuration: {0}")]
    Config(String),
}
