//! Dataset ingestion, pair scoring, evaluation and sweeps.

mod dataset;
mod scoring;

pub use dataset::*;
pub use scoring::*;

use thiserror::Error;

use crate::eventgraph::GraphError;
use crate::model::ModelError;
use crate::train::TrainError;

#[derive(Debug, Error)]
pub enum CloneError {
    #[error("vector norm below 1e-12; cosine similarity undefined")]
    DegenerateVector,
    #[error("no verdicts to evaluate")]
    EmptyEval,
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
