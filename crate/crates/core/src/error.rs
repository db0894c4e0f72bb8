use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("point ({z1}, {z2}) lies outside the cross-section of radius {radius}")]
    OutOfSection { z1: f64, z2: f64, radius: f64 },
    #[error("curve is not closed (position gap {position}, tangent gap {tangent})")]
    NotClosed { position: f64, tangent: f64 },
    #[error("curves touch (minimum distance {0})")]
    CurvesTouch(f64),
    #[error("no generic projection direction found after {0} retries")]
    DegenerateProjection(usize),
    #[error("push-off at offset {offset} comes within {distance} of the midline")]
    OffsetTooLarge { offset: f64, distance: f64 },
    #[error("cannot build probe loop: {0}")]
    ProbeConstructionFailed(&'static str),
    #[error("voxel size {voxel} is coarser than a quarter of the section radius {radius}")]
    ResolutionError { voxel: f64, radius: f64 },
    #[error("energy is not finite at gradient stencil point for parameter {0}")]
    GradientUndefined(usize),
    #[error("initial film construction failed: {0}")]
    InitFailed(&'static str),
    #[error("film mesh degenerated (worst triangle quality {0})")]
    DegenerateMesh(f64),
    #[error("initial configuration is not admissible: {0}")]
    InitInadmissible(&'static str),
    #[error("topological invariant could not be preserved: {0}")]
    InvariantBroken(&'static str),
}
