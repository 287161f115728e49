use thiserror::Error;

use crate::rational::Q;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("generator set is not symmetric under negation")]
    NotSymmetric,
    #[error("map is not an isometric embedding: {0}")]
    NotIsometric(Witness),
    #[error("map is not {epsilon}-isometric: {witness}")]
    NotEpsilonIsometric { epsilon: String, witness: Witness },
    #[error("epsilon {0} outside the open interval (0, 1)")]
    EpsilonOutOfRange(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("triangle inequality fails: {0}")]
    TriangleViolation(TriangleWitness),
    #[error("embedding is not distance preserving: {0}")]
    DistortedPair(PairWitness),
    #[error("invalid Katetov function: {0}")]
    InvalidKatetov(String),
    #[error("space is not a member of class {class}: {detail}")]
    ClassViolation { class: String, detail: String },
    #[error("dimension cap {cap} exceeded by a stage of dimension {dim}")]
    DimensionCap { cap: usize, dim: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Rejected(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// A vector on which a norm comparison fails, with both exact sides.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Witness {
    #[serde(with = "crate::rational::serde_qvec")]
    pub vector: Vec<Q>,
    #[serde(with = "crate::rational::serde_q")]
    pub source_norm: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub image_norm: Q,
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v: Vec<String> = self.vector.iter().map(crate::rational::to_string).collect();
        write!(
            f,
            "x = ({}) with |x| = {} but |Tx| = {}",
            v.join(", "),
            crate::rational::to_string(&self.source_norm),
            crate::rational::to_string(&self.image_norm)
        )
    }
}

/// Points `x, y, z` with `d(x,z) > d(x,y) + d(y,z)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TriangleWitness {
    pub points: [String; 3],
    #[serde(with = "crate::rational::serde_q")]
    pub d_xz: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub d_xy: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub d_yz: Q,
}

impl std::fmt::Display for TriangleWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [x, y, z] = &self.points;
        let s = crate::rational::to_string;
        write!(f, "d({x},{z}) = {} > d({x},{y}) + d({y},{z}) = {} + {}", s(&self.d_xz), s(&self.d_xy), s(&self.d_yz))
    }
}

/// A pair of source points whose distance changes under a map.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PairWitness {
    pub points: [String; 2],
    #[serde(with = "crate::rational::serde_q")]
    pub source_distance: Q,
    #[serde(with = "crate::rational::serde_q")]
    pub target_distance: Q,
}

impl std::fmt::Display for PairWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [a, b] = &self.points;
        let s = crate::rational::to_string;
        write!(f, "d({a},{b}) = {} but the images are {} apart", s(&self.source_distance), s(&self.target_distance))
    }
}
