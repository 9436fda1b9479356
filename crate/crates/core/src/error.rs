use alloc::string::String;

use crate::atlas::ChartId;
use crate::expr::EvalError;
use crate::jet::JetError;
use crate::linalg::LinalgError;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("metric of chart {chart} is not positive definite at {at:?}")]
    NotPositiveDefinite { chart: ChartId, at: alloc::vec::Vec<f64> },
    #[error("unknown chart {0}")]
    UnknownChart(ChartId),
    #[error("charts {from} and {to} are not neighbours")]
    NotNeighbors { from: ChartId, to: ChartId },
    #[error("point {at:?} of chart {from} lies outside the overlap with chart {to}")]
    OutsideOverlap { from: ChartId, to: ChartId, at: alloc::vec::Vec<f64> },
    #[error("point {at:?} is outside the unit ball of chart {chart}")]
    OutsideChart { chart: ChartId, at: alloc::vec::Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("jet order {got} is too low, {needed} required")]
    InsufficientOrder { needed: usize, got: usize },
    #[error("degenerate plane: Gram determinant {0:e}")]
    DegeneratePlane(f64),
    #[error("valence mismatch: {0}")]
    Valence(&'static str),
    #[error("singular transition Jacobian from chart {from} to chart {to}")]
    SingularJacobian { from: ChartId, to: ChartId },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl From<EvalError> for Error {
    fn from(e: EvalError) -> Self {
        Error::Jet(e.into())
    }
}

pub type Result<T> = core::result::Result<T, Error>;
