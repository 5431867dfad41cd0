use thiserror::Error;

use crate::sphere::SphericalCoords;

/// Errors produced by the core algorithms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("frame index {0} out of range 1..=7")]
    FrameIndex(usize),

    #[error("quaternion is not a unit quaternion (|q| = {norm})")]
    NonUnitQuaternion { norm: f64 },

    #[error("matrix is not in Sp(2,H): column residual {column}, orthogonality residual {orthogonality}")]
    NotSymplectic { column: f64, orthogonality: f64 },

    #[error("no fiber-coinciding quaternion found (residual {residual})")]
    FiberMismatch { residual: f64 },

    #[error("point is not on the unit sphere (|z| = {norm})")]
    NotOnSphere { norm: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("angle phi_{index} = {value} outside its range")]
    AngleRange { index: usize, value: f64 },

    #[error("point lies on the coordinate-singular set; nearest chart point {suggestion:?}")]
    SingularChart { suggestion: SphericalCoords },

    #[error("finite-difference step {0} outside [1e-7, 1e-3]")]
    StepSize(f64),

    #[error("non-finite value encountered while evaluating {0}")]
    NonFinite(&'static str),

    #[error("vector field is not tangent at the evaluation point (<z, V(z)> = {0})")]
    NotTangent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("noise path has {got} channels, problem expects {expected}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("exact rotation scheme requires constant-coefficient fields")]
    NonConstantCoefficients,

    #[error("flow interval mismatch: first ends at {first_end}, second starts at {second_start}")]
    IntervalMismatch { first_end: f64, second_start: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("scaling function is nonpositive ({0}) at the evaluation point")]
    NonPositiveScaling(f64),

    #[error("deformation vanishes at the evaluation point")]
    DegenerateDeformation,

    #[error("scaling function is only continuous; the pushforward field needs a C1 scaling (dβ/dz may not exist)")]
    ScalingNotC1,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
