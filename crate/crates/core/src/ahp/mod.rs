//! Analytic Hierarchy Process: reciprocal judgment matrices, principal
//! eigenvector priorities, consistency diagnostics and hierarchy aggregation.

mod eigen;
mod hierarchy;
mod matrix;
mod scale;

pub use eigen::{
    aci, consistency, consistency_with, principal_eigenpair, ConsistencyOptions, ConsistencyReport,
    Eigenpair, MAX_ITERATIONS, RESIDUAL_TOLERANCE,
};
pub use hierarchy::{aggregate, Aggregation, Hierarchy, Judgment};
pub use matrix::{normalize_measurements, ComparisonMatrix, PriorityVector};
pub use scale::{judgment_from_scale, Scale};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AhpError {
    #[error("matrix must have order >= 1")]
    Empty,
    #[error("matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("entry ({i},{j}) = {value} is not a positive finite number")]
    NonPositive { i: usize, j: usize, value: f64 },
    #[error("diagonal entry ({i},{i}) = {value}, expected 1")]
    Diagonal { i: usize, value: f64 },
    #[error("reciprocity violated at ({i},{j}): {a_ij} * {a_ji} != 1")]
    NotReciprocal {
        i: usize,
        j: usize,
        a_ij: f64,
        a_ji: f64,
    },
    #[error("power iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no random consistency index for n = {0} (table covers n <= {1})")]
    AciUnavailable(usize, usize),
    #[error("measurement {index} = {value} must be > 0")]
    NonPositiveMeasurement { index: usize, value: f64 },
    #[error("degree {degree} outside the {scale} scale")]
    DegreeOutOfRange { degree: i64, scale: &'static str },
    #[error("hierarchy node `{0}` has no judgment")]
    MissingJudgment(String),
    #[error("hierarchy node `{node}` judges {got} children, level has {expected}")]
    OrderMismatch {
        node: String,
        got: usize,
        expected: usize,
    },
    #[error("hierarchy has no levels")]
    EmptyHierarchy,
    #[error("cannot parse judgment file: {0}")]
    Parse(String),
}
