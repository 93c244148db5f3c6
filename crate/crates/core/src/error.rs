use thiserror::Error;

use crate::modmat::Modulus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: Modulus, right: Modulus },
    #[error("{matrix} is not invertible mod {modulus}")]
    NonInvertible { matrix: String, modulus: Modulus },
    #[error("{divisor} does not divide {modulus}")]
    NotADivisor { divisor: Modulus, modulus: Modulus },
    #[error("group order exceeds the cap of {cap} elements")]
    OrderCap { cap: usize },
    #[error("group must contain -I and have full determinant")]
    Hypothesis,
    #[error("genus formula gave a non-integral value ({twelve_g} / 12)")]
    NonIntegralGenus { twelve_g: i64 },
    #[error("line {line} is not stable under the group")]
    UnstableLine { line: String },
    #[error("transform produced a lower-left entry not divisible by 3")]
    TransformDivisibility,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("catalog entry {label}: {reason}")]
    Catalog { label: String, reason: String },
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("group matches several catalog labels: {0:?}")]
    AmbiguousIdentification(Vec<String>),
    #[error("unknown graph type {0}")]
    UnknownGraph(String),
    #[error("torsion configuration not admissible: {0}")]
    Torsion(String),
    #[error("fact base: {0}")]
    Facts(String),
    #[error("no fixture for class {0}")]
    MissingFixture(String),
    #[error("network: {0}")]
    Network(String),
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("isogeny class {0} has CM; only non-CM classes are supported")]
    CmClass(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<std::num::TryFromIntError> for Error {
    fn from(e: std::num::TryFromIntError) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
