//! Event dependency graphs: one node per `(entity, operator, entity)` event,
//! intra-statement edges from the embedding tree of each statement and
//! inter-statement edges from variable def-use.

mod builder;
mod format;
mod rank;
mod types;

pub use builder::build_event_graph;
pub use format::{deserialize_graph, entity_token, serialize_graph};
pub use rank::{rank_entities, topo_order, topo_schedule};
pub use types::*;

use thiserror::Error;

use crate::cparse::{parse_source, CParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("dependency cycle detected")]
    Cycle,
    #[error("unsupported construct `{construct}` at line {line}")]
    Unsupported { line: u32, construct: String },
    #[error("graph format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Parse(#[from] CParseError),
}

/// Source text to a ranked graph: parse, lower, rank.
pub fn graph_from_source(source: &str) -> Result<EventDependencyGraph, GraphError> {
    let tu = parse_source(source)?;
    Ok(rank_entities(build_event_graph(&tu)?))
}
