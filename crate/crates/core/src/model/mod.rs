//! The event dependency execution engine: Event Cell, Event Transformer,
//! graph-order embedding, restore layer and convolution layer.

mod checkpoint;
mod engine;
mod params;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use engine::*;
pub use params::*;

use thiserror::Error;

use crate::eventgraph::GraphError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("node reference ref:{0} has no entity vector")]
    Ref(usize),
    #[error("entity {0} has no rank; rank the graph first")]
    Unranked(String),
    #[error("node {0} was used before it was computed")]
    Order(usize),
    #[error("fragment has {count} statements, more than the padded length {pad_len}")]
    TooManyStatements { count: usize, pad_len: usize },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
