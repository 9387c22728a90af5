//! Random graphs, brute-force enumerators and straight-line programs with
//! their expected def-use links.

use std::collections::BTreeMap;

use eventclone::eventgraph::{rank_entities, Entity, EventDependencyGraph, EventNode, LeafKind, Operator};
use eventclone::numkernel::Rng;

const LEAVES: &[&str] = &["a", "b", "c", "n", "i"];
const OPS: &[&str] = &["assign", "add", "sub", "mul", "lt", "param", "invoke", "index", "cond-guard", "decl-init"];

/// A ranked DAG with `nodes` nodes split into contiguous statements. Each
/// entity refers to an earlier node with probability `ref_p`, otherwise to
/// a variable or constant leaf.
pub fn random_graph(rng: &mut Rng, nodes: usize, ref_p: f64) -> EventDependencyGraph {
    let mut stmt_of = Vec::with_capacity(nodes);
    let mut stmt = 0;
    for i in 0..nodes {
        if i > 0 && rng.uniform(0.0, 1.0) < 0.4 {
            stmt += 1;
        }
        stmt_of.push(stmt);
    }
    let entity = |rng: &mut Rng, id: usize| -> Entity {
        if id > 0 && rng.uniform(0.0, 1.0) < ref_p {
            Entity::NodeRef(rng.below(id))
        } else if rng.uniform(0.0, 1.0) < 0.2 {
            Entity::leaf(LeafKind::ConstInt, rng.below(3).to_string())
        } else {
            Entity::var(LEAVES[rng.below(LEAVES.len())])
        }
    };
    let list: Vec<EventNode> = (0..nodes)
        .map(|id| EventNode {
            id,
            entity1: entity(rng, id),
            op: Operator::from_name(OPS[rng.below(OPS.len())]).unwrap(),
            entity2: entity(rng, id),
            stmt: stmt_of[id],
            is_final: id + 1 == nodes || stmt_of[id + 1] != stmt_of[id],
        })
        .collect();
    rank_entities(EventDependencyGraph::from_parts(list, stmt + 1).unwrap())
}

/// Every ordering of `0..n` that respects `edges`.
pub fn all_topo_orders(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    fn extend(n: usize, preds: &[Vec<usize>], placed: &mut Vec<usize>, done: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if placed.len() == n {
            out.push(placed.clone());
            return;
        }
        for v in 0..n {
            if !done[v] && preds[v].iter().all(|&p| done[p]) {
                done[v] = true;
                placed.push(v);
                extend(n, preds, placed, done, out);
                placed.pop();
                done[v] = false;
            }
        }
    }
    let mut preds = vec![Vec::new(); n];
    for &(a, b) in edges {
        preds[b].push(a);
    }
    let mut out = Vec::new();
    extend(n, &preds, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// All graphs with `stmts` statements of 1 to 3 nodes each, chained within
/// each statement, for every choice of which node is the statement's final one.
pub fn statement_layouts(stmts: usize) -> Vec<EventDependencyGraph> {
    // (size, final position) per statement.
    let shapes: Vec<(usize, usize)> = (1..=3).flat_map(|s| (0..s).map(move |f| (s, f))).collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; stmts];
    loop {
        let mut nodes = Vec::new();
        for (s, &c) in choice.iter().enumerate() {
            let (size, fin) = shapes[c];
            let start = nodes.len();
            for p in 0..size {
                let id = start + p;
                let entity1 = if p == 0 { Entity::var(LEAVES[s % LEAVES.len()]) } else { Entity::NodeRef(id - 1) };
                nodes.push(EventNode {
                    id,
                    entity1,
                    op: Operator::from_name("add").unwrap(),
                    entity2: Entity::leaf(LeafKind::ConstInt, p.to_string()),
                    stmt: s,
                    is_final: p == fin,
                });
            }
        }
        out.push(rank_entities(EventDependencyGraph::from_parts(nodes, stmts).unwrap()));
        let mut k = 0;
        while k < stmts {
            choice[k] += 1;
            if choice[k] < shapes.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == stmts {
            return out;
        }
    }
}

/// One generated statement: its source text, the variable it writes and
/// every variable occurrence it reads.
#[derive(Debug, Clone)]
pub struct Line {
    pub text: String,
    pub writes: Option<String>,
    pub reads: Vec<String>,
}

const VARS: &[&str] = &["a", "b", "c", "d", "e", "f", "g"];
const BIN: &[&str] = &["+", "-", "*", "/", "%", "<", "==", "&&", "|", "<<"];

fn expr(rng: &mut Rng, depth: usize, reads: &mut Vec<String>) -> String {
    if depth == 0 || rng.uniform(0.0, 1.0) < 0.3 {
        if rng.uniform(0.0, 1.0) < 0.3 {
            return rng.below(100).to_string();
        }
        let v = VARS[rng.below(VARS.len())];
        reads.push(v.to_string());
        return v.to_string();
    }
    let l = expr(rng, depth - 1, reads);
    let r = expr(rng, depth - 1, reads);
    format!("({l} {} {r})", BIN[rng.below(BIN.len())])
}

/// A straight-line function body of `count` statements.
pub fn straight_line(rng: &mut Rng, count: usize) -> Vec<Line> {
    let mut declared = Vec::<String>::new();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut reads = Vec::new();
        let target = VARS[rng.below(VARS.len())].to_string();
        let (text, writes) = match rng.below(6) {
            0 | 1 => {
                let e = expr(rng, 3, &mut reads);
                if declared.contains(&target) {
                    (format!("{target} = {e};"), Some(target))
                } else {
                    declared.push(target.clone());
                    (format!("int {target} = {e};"), Some(target))
                }
            }
            2 => {
                let e = expr(rng, 2, &mut reads);
                reads.push(target.clone());
                (format!("{target} += {e};"), Some(target))
            }
            3 => {
                reads.push(target.clone());
                (format!("{target}++;"), Some(target))
            }
            4 => {
                let i = expr(rng, 1, &mut reads);
                let e = expr(rng, 2, &mut reads);
                (format!("{target}[{i}] = {e};"), Some(target))
            }
            _ => {
                let args: Vec<String> = (0..1 + rng.below(3)).map(|_| expr(rng, 2, &mut reads)).collect();
                (format!("printf(\"%d\", {});", args.join(", ")), None)
            }
        };
        out.push(Line { text, writes, reads });
    }
    out
}

pub fn wrap(lines: &[Line]) -> String {
    let body: Vec<&str> = lines.iter().map(|l| l.text.as_str()).collect();
    format!("void f() {{\n{}\n}}\n", body.join("\n"))
}

/// For each statement pair `(def, use)`, how many reads in `use` see `def`
/// as the latest earlier write of the variable.
pub fn expected_links(lines: &[Line]) -> BTreeMap<(usize, usize), usize> {
    let mut out = BTreeMap::new();
    for (j, line) in lines.iter().enumerate() {
        for v in &line.reads {
            if let Some(i) = (0..j).rev().find(|&i| lines[i].writes.as_deref() == Some(v.as_str())) {
                *out.entry((i, j)).or_default() += 1;
            }
        }
    }
    out
}

/// The same count read off a built graph: every node-ref slot that points
/// into another statement. Panics if such a ref does not target a
/// statement-final node.
pub fn graph_links(g: &EventDependencyGraph) -> BTreeMap<(usize, usize), usize> {
    let nodes = g.nodes();
    let mut out = BTreeMap::new();
    for n in nodes {
        for r in [&n.entity1, &n.entity2].into_iter().filter_map(|e| e.node_ref()) {
            let src = &nodes[r];
            if src.stmt != n.stmt {
                assert!(src.is_final, "cross-statement ref to non-final node {r}");
                *out.entry((src.stmt, n.stmt)).or_default() += 1;
            }
        }
    }
    out
}
