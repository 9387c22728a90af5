//! Line-oriented text format for event dependency graphs.
//!
//! ```text
//! EDG v1 nodes=3 stmts=1
//! N 0 0 0 parammix cs:aGVsbG8= v:p
//! N 1 0 0 param ref:0 f:printf
//! N 2 0 1 invoke ref:1 v:this
//! R 1 v:p
//! ```

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;

use super::types::*;
use super::GraphError;

pub fn serialize_graph(graph: &EventDependencyGraph) -> String {
    let mut out = format!("EDG v1 nodes={} stmts={}\n", graph.len(), graph.stmt_count());
    for n in graph.nodes() {
        out.push_str(&format!(
            "N {} {} {} {} {} {}\n",
            n.id,
            n.stmt,
            u8::from(n.is_final),
            n.op.name(),
            entity_token(&n.entity1),
            entity_token(&n.entity2)
        ));
    }
    let mut ranks: Vec<_> = graph.rank_table().iter().collect();
    ranks.sort_by_key(|(_, r)| **r);
    for ((kind, value), rank) in ranks {
        out.push_str(&format!("R {} {}\n", rank, key_token(*kind, value)));
    }
    out
}

fn key_token(kind: LeafKind, value: &str) -> String {
    match kind {
        LeafKind::Variable => format!("v:{value}"),
        LeafKind::Function => format!("f:{value}"),
        LeafKind::ConstInt => format!("ci:{value}"),
        LeafKind::ConstFloat => format!("cf:{value}"),
        LeafKind::ConstStr => format!("cs:{}", B64.encode(value)),
        LeafKind::ConstChar => format!("cc:{value}"),
    }
}

pub fn entity_token(e: &Entity) -> String {
    match e {
        Entity::Leaf { kind, value, .. } => key_token(*kind, value),
        Entity::NodeRef(id) => format!("ref:{id}"),
    }
}

fn format_err(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Format { line, message: message.into() }
}

fn parse_entity(tok: &str, line: usize) -> Result<Entity, GraphError> {
    let (tag, value) = tok.split_once(':').ok_or_else(|| format_err(line, format!("malformed entity `{tok}`")))?;
    let kind = match tag {
        "ref" => {
            let id = value.parse().map_err(|_| format_err(line, format!("bad node reference `{tok}`")))?;
            return Ok(Entity::NodeRef(id));
        }
        "v" => LeafKind::Variable,
        "f" => LeafKind::Function,
        "ci" => LeafKind::ConstInt,
        "cf" => LeafKind::ConstFloat,
        "cs" => {
            let bytes = B64.decode(value).map_err(|e| format_err(line, format!("bad base64 in `{tok}`: {e}")))?;
            let s = String::from_utf8(bytes).map_err(|_| format_err(line, "string constant is not UTF-8"))?;
            return Ok(Entity::leaf(LeafKind::ConstStr, s));
        }
        "cc" => LeafKind::ConstChar,
        _ => return Err(format_err(line, format!("unknown entity tag `{tag}`"))),
    };
    if value.is_empty() && kind != LeafKind::ConstChar {
        return Err(format_err(line, format!("empty entity `{tok}`")));
    }
    Ok(Entity::leaf(kind, value))
}

fn parse_count(field: Option<&str>, key: &str, line: usize) -> Result<usize, GraphError> {
    field
        .and_then(|f| f.strip_prefix(key))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format_err(line, format!("header is missing `{key}<count>`")))
}

pub fn deserialize_graph(text: &str) -> Result<EventDependencyGraph, GraphError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| format_err(1, "empty document"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("EDG") || fields.next() != Some("v1") {
        return Err(format_err(hline, "expected header `EDG v1`"));
    }
    let node_count = parse_count(fields.next(), "nodes=", hline)?;
    let stmt_count = parse_count(fields.next(), "stmts=", hline)?;

    let mut nodes = Vec::with_capacity(node_count);
    let mut table = BTreeMap::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first().copied() {
            Some("N") => {
                if fields.len() != 7 {
                    return Err(format_err(lineno, "node line needs 7 fields"));
                }
                let num = |s: &str| s.parse::<usize>().map_err(|_| format_err(lineno, format!("bad number `{s}`")));
                let id = num(fields[1])?;
                if id != nodes.len() {
                    return Err(format_err(lineno, format!("expected node id {}, found {id}", nodes.len())));
                }
                let stmt = num(fields[2])?;
                if stmt >= stmt_count {
                    return Err(format_err(lineno, format!("statement {stmt} out of range")));
                }
                let is_final = match fields[3] {
                    "0" => false,
                    "1" => true,
                    other => return Err(format_err(lineno, format!("bad final flag `{other}`"))),
                };
                let op = Operator::from_name(fields[4])
                    .ok_or_else(|| format_err(lineno, format!("unknown operator `{}`", fields[4])))?;
                let entity1 = parse_entity(fields[5], lineno)?;
                let entity2 = parse_entity(fields[6], lineno)?;
                for r in [&entity1, &entity2].into_iter().filter_map(|e| e.node_ref()) {
                    if r >= id {
                        return Err(format_err(lineno, format!("dangling node reference ref:{r}")));
                    }
                }
                nodes.push(EventNode { id, entity1, op, entity2, stmt, is_final });
            }
            Some("R") => {
                if fields.len() != 3 {
                    return Err(format_err(lineno, "rank line needs 3 fields"));
                }
                let rank: u32 = fields[1].parse().map_err(|_| format_err(lineno, "bad rank"))?;
                let key = parse_entity(fields[2], lineno)?
                    .key()
                    .ok_or_else(|| format_err(lineno, "node references have no rank"))?;
                table.insert(key, rank);
            }
            _ => return Err(format_err(lineno, "expected `N` or `R` line")),
        }
    }
    if nodes.len() != node_count {
        return Err(format_err(hline, format!("header declares {node_count} nodes, found {}", nodes.len())));
    }
    let mut graph = EventDependencyGraph::from_parts(nodes, stmt_count).map_err(|e| format_err(hline, e.to_string()))?;
    if !table.is_empty() {
        graph.set_ranks(table);
    }
    Ok(graph)
}
