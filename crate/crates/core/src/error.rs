use alloc::string::String;

use crate::logic::ParseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid boolean algebra: {0}")]
    InvalidAlgebra(String),
    #[error("elements of different boolean algebras cannot be combined")]
    AlgebraMismatch,
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("invalid homomorphism: {0}")]
    InvalidHom(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("subset {0:#x} is not contained in the point set")]
    NotASubset(u64),
    #[error("invalid poset: {0}")]
    InvalidPoset(String),
    #[error("map is not continuous: the preimage of open set {0} is not open")]
    NotContinuous(String),
    #[error("map is not open: the image of open set {0} is not open")]
    NotOpen(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("formula is not closed: variable `{0}` is free")]
    FreeVariable(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),
    #[error("invalid presheaf: {0}")]
    InvalidPresheaf(String),
    #[error("presheaf is not separated at level {0}")]
    NotSeparated(String),
    #[error("bundle is not extremally disconnected: {0}")]
    NotExtremallyDisconnected(String),
    #[error("naturality fails on {lower} <= {upper}")]
    Naturality { lower: String, upper: String },
    #[error("instance too large: {0}")]
    TooLarge(String),
}
