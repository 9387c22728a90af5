use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::GraphError;

pub const OPERATOR_NAMES: [&str; 38] = [
    "assign", "return", "param", "parammix", "invoke", "sizeof", "member", "arrow", "index",
    "addr-of", "deref", "neg", "not", "bitnot", "add", "sub", "mul", "div", "mod", "lt", "gt", "le",
    "ge", "eq", "ne", "and", "or", "bitand", "bitor", "bitxor", "shl", "shr", "cond-guard",
    "loop-body", "branch-else", "decl-init", "cast", "comma",
];

/// Relation symbol `P` of an event triple. Wraps an index into [`OPERATOR_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Operator(u8);

impl Operator {
    pub const COUNT: usize = OPERATOR_NAMES.len();

    pub fn from_id(id: usize) -> Option<Operator> {
        (id < Self::COUNT).then_some(Operator(id as u8))
    }

    pub fn from_name(name: &str) -> Option<Operator> {
        OPERATOR_NAMES.iter().position(|n| *n == name).map(|i| Operator(i as u8))
    }

    /// Lookup for names that are known to be in the table.
    pub(crate) fn named(name: &str) -> Operator {
        Self::from_name(name).unwrap_or_else(|| panic!("operator `{name}` missing from table"))
    }

    pub fn id(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        OPERATOR_NAMES[self.0 as usize]
    }

    pub fn all() -> impl Iterator<Item = Operator> {
        (0..Self::COUNT).map(|i| Operator(i as u8))
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LeafKind {
    Variable,
    Function,
    ConstInt,
    ConstFloat,
    ConstStr,
    ConstChar,
}

impl LeafKind {
    /// Name used for tie-breaking in the frequency ranking.
    pub fn name(self) -> &'static str {
        match self {
            LeafKind::Variable => "variable",
            LeafKind::Function => "function",
            LeafKind::ConstInt => "constant-int",
            LeafKind::ConstFloat => "constant-float",
            LeafKind::ConstStr => "constant-str",
            LeafKind::ConstChar => "constant-char",
        }
    }
}

/// Key identifying one entity within a fragment.
pub type EntityKey = (LeafKind, String);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Entity {
    /// A variable, function or constant occurrence. `rank` is its `Top_i`
    /// index once the graph has been ranked.
    Leaf { kind: LeafKind, value: String, rank: Option<u32> },
    /// The result of an earlier event.
    NodeRef(usize),
}

impl Entity {
    pub fn leaf(kind: LeafKind, value: impl Into<String>) -> Entity {
        Entity::Leaf { kind, value: value.into(), rank: None }
    }

    pub fn var(name: impl Into<String>) -> Entity {
        Entity::leaf(LeafKind::Variable, name)
    }

    pub fn func(name: impl Into<String>) -> Entity {
        Entity::leaf(LeafKind::Function, name)
    }

    pub fn node_ref(&self) -> Option<usize> {
        match self {
            Entity::NodeRef(id) => Some(*id),
            Entity::Leaf { .. } => None,
        }
    }

    pub fn key(&self) -> Option<EntityKey> {
        match self {
            Entity::Leaf { kind, value, .. } => Some((*kind, value.clone())),
            Entity::NodeRef(_) => None,
        }
    }

    pub fn rank(&self) -> Option<u32> {
        match self {
            Entity::Leaf { rank, .. } => *rank,
            Entity::NodeRef(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventNode {
    pub id: usize,
    pub entity1: Entity,
    pub op: Operator,
    pub entity2: Entity,
    pub stmt: usize,
    pub is_final: bool,
}

impl EventNode {
    pub fn refs(&self) -> impl Iterator<Item = usize> + '_ {
        self.entity1.node_ref().into_iter().chain(self.entity2.node_ref())
    }
}

/// DAG of event triples. Edges are implied by node references: `(a, b)` is
/// an edge exactly when node `b` has an entity pointing at node `a`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventDependencyGraph {
    nodes: Vec<EventNode>,
    stmt_count: usize,
    rank_table: BTreeMap<EntityKey, u32>,
}

impl EventDependencyGraph {
    /// Assembles a graph and checks its structural invariants.
    pub fn from_parts(nodes: Vec<EventNode>, stmt_count: usize) -> Result<Self, GraphError> {
        let mut finals = vec![0usize; stmt_count];
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i {
                return Err(GraphError::Invalid(format!("node at position {i} has id {}", node.id)));
            }
            for r in node.refs() {
                if r >= node.id {
                    return Err(GraphError::Invalid(format!(
                        "edge ({r}, {}) does not point forward",
                        node.id
                    )));
                }
            }
            if node.stmt >= stmt_count {
                return Err(GraphError::Invalid(format!(
                    "node {i} has statement {} but the graph has {stmt_count}",
                    node.stmt
                )));
            }
            if node.is_final {
                finals[node.stmt] += 1;
            }
        }
        if let Some(s) = finals.iter().position(|&n| n != 1) {
            return Err(GraphError::Invalid(format!(
                "statement {s} has {} final nodes, expected exactly one",
                finals[s]
            )));
        }
        Ok(EventDependencyGraph { nodes, stmt_count, rank_table: BTreeMap::new() })
    }

    pub fn nodes(&self) -> &[EventNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn stmt_count(&self) -> usize {
        self.stmt_count
    }

    pub fn rank_table(&self) -> &BTreeMap<EntityKey, u32> {
        &self.rank_table
    }

    pub(crate) fn set_ranks(&mut self, table: BTreeMap<EntityKey, u32>) {
        for node in &mut self.nodes {
            for e in [&mut node.entity1, &mut node.entity2] {
                if let Entity::Leaf { kind, value, rank } = e {
                    *rank = table.get(&(*kind, value.clone())).copied();
                }
            }
        }
        self.rank_table = table;
    }

    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        self.nodes.iter().flat_map(|n| n.refs().map(move |r| (r, n.id))).collect()
    }

    /// Statement-final node id for each statement, in statement order.
    pub fn final_nodes(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.stmt_count];
        for n in self.nodes.iter().filter(|n| n.is_final) {
            out[n.stmt] = n.id;
        }
        out
    }

    pub fn operators(&self) -> BTreeSet<Operator> {
        self.nodes.iter().map(|n| n.op).collect()
    }
}
