//! Forward computation of the execution engine and the per-layer backward
//! functions the trainer composes.

use crate::eventgraph::{topo_schedule, Entity, EventDependencyGraph, Operator};
use crate::numkernel::{matvec_raw, sigmoid_scalar, vecmat_raw};

use super::params::*;
use super::ModelError;

/// One d-vector per graph node; row `i` belongs to node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventEmbeddingMatrix {
    pub rows: Vec<Vec<f64>>,
}

/// One d-vector per statement, in statement order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramEmbeddingMatrix {
    pub rows: Vec<Vec<f64>>,
}

/// The `n_k`-long embedding of a whole fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramVector {
    pub values: Vec<f64>,
}

fn check_len(v: &[f64], d: usize, what: &str) -> Result<(), ModelError> {
    if v.len() != d {
        return Err(ModelError::Shape(format!("{what} has length {}, expected {d}", v.len())));
    }
    Ok(())
}

/// Entity-table row for a ranked leaf. Ranks past the vocabulary share the last row.
pub fn entity_row(entity: &Entity, cfg: &ModelConfig) -> Result<usize, ModelError> {
    match entity {
        Entity::NodeRef(id) => Err(ModelError::Ref(*id)),
        Entity::Leaf { rank: Some(r), .. } => Ok((*r as usize).clamp(1, cfg.top_vocab) - 1),
        Entity::Leaf { kind, value, rank: None } => Err(ModelError::Unranked(format!("{}:{value}", kind.name()))),
    }
}

pub fn lookup_entity<'p>(entity: &Entity, params: &'p ModelParams) -> Result<&'p [f64], ModelError> {
    let row = entity_row(entity, params.config())?;
    Ok(params.entity_table().slab(row))
}

/// `a = concat(A·T1[1], O·T2[1], ..., A·T1[K], O·T2[K])`.
fn cell_concat(params: &ModelParams, op: Operator, a: &[f64], o: &[f64]) -> Vec<f64> {
    let ModelConfig { d, k, .. } = *params.config();
    let (t1, t2) = (params.t1(op), params.t2(op));
    let mut out = vec![0.0; 2 * k * d];
    for slice in 0..k {
        let base = 2 * slice * d;
        vecmat_raw(a, t1.slab(slice), d, d, &mut out[base..base + d]);
        vecmat_raw(o, t2.slab(slice), d, d, &mut out[base + d..base + 2 * d]);
    }
    out
}

/// `tanh(dense · a + bias)`.
fn cell_output(params: &ModelParams, a: &[f64]) -> Vec<f64> {
    let ModelConfig { d, .. } = *params.config();
    let mut h = vec![0.0; d];
    matvec_raw(params.dense().data(), d, a.len(), a, &mut h);
    h.iter().zip(params.bias().data()).map(|(x, b)| (x + b).tanh()).collect()
}

/// Event Cell: bilinear maps through the operator tensors, then a dense layer.
pub fn event_cell(a: &[f64], op: Operator, o: &[f64], params: &ModelParams) -> Result<Vec<f64>, ModelError> {
    let d = params.config().d;
    check_len(a, d, "entity 1 vector")?;
    check_len(o, d, "entity 2 vector")?;
    Ok(cell_output(params, &cell_concat(params, op, a, o)))
}

/// Intermediate values of one gated step, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    pub op: Operator,
    /// `[A_prev, O]`.
    pub joint: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    /// `r ⊙ A_prev`, the cell's first operand.
    pub reset_state: Vec<f64>,
    pub cell_in: Vec<f64>,
    pub cell_out: Vec<f64>,
    pub out: Vec<f64>,
}

impl StepCache {
    pub fn state(&self) -> &[f64] {
        &self.joint[..self.r.len()]
    }

    pub fn other(&self) -> &[f64] {
        &self.joint[self.r.len()..]
    }
}

pub fn step_forward(params: &ModelParams, op: Operator, state: &[f64], other: &[f64]) -> StepCache {
    let d = params.config().d;
    let mut joint = Vec::with_capacity(2 * d);
    joint.extend_from_slice(state);
    joint.extend_from_slice(other);
    let mut r = vec![0.0; d];
    let mut z = vec![0.0; d];
    matvec_raw(params.w_r().data(), d, 2 * d, &joint, &mut r);
    matvec_raw(params.w_z().data(), d, 2 * d, &joint, &mut z);
    r.iter_mut().for_each(|x| *x = sigmoid_scalar(*x));
    z.iter_mut().for_each(|x| *x = sigmoid_scalar(*x));
    let reset_state: Vec<f64> = r.iter().zip(state).map(|(a, b)| a * b).collect();
    let cell_in = cell_concat(params, op, &reset_state, other);
    let cell_out = cell_output(params, &cell_in);
    let out = (0..d).map(|i| (1.0 - z[i]) * state[i] + z[i] * cell_out[i]).collect();
    StepCache { op, joint, r, z, reset_state, cell_in, cell_out, out }
}

/// Event Transformer: the Event Cell behind a reset and an update gate.
pub fn event_transformer_step(
    prev: &[f64],
    op: Operator,
    o: &[f64],
    params: &ModelParams,
) -> Result<Vec<f64>, ModelError> {
    let d = params.config().d;
    check_len(prev, d, "state vector")?;
    check_len(o, d, "entity 2 vector")?;
    Ok(step_forward(params, op, prev, o).out)
}

/// Backward through one gated step. Accumulates parameter gradients into
/// `grads` and returns `(∂/∂A_prev, ∂/∂O)`.
pub fn step_backward(params: &ModelParams, cache: &StepCache, d_out: &[f64], grads: &mut Gradients) -> (Vec<f64>, Vec<f64>) {
    let ModelConfig { d, k, .. } = *params.config();
    let width = 2 * k * d;
    let state = cache.state();
    let other = cache.other();

    let mut d_state: Vec<f64> = (0..d).map(|i| d_out[i] * (1.0 - cache.z[i])).collect();
    let mut d_other = vec![0.0; d];
    let d_z: Vec<f64> = (0..d).map(|i| d_out[i] * (cache.cell_out[i] - state[i])).collect();
    let d_h: Vec<f64> = (0..d)
        .map(|i| d_out[i] * cache.z[i] * (1.0 - cache.cell_out[i] * cache.cell_out[i]))
        .collect();

    // Dense layer.
    for (g, dh) in grads.slot(BIAS).data_mut().iter_mut().zip(&d_h) {
        *g += dh;
    }
    let gd = grads.slot(DENSE).data_mut();
    for (i, &dh) in d_h.iter().enumerate() {
        if dh != 0.0 {
            for (g, a) in gd[i * width..(i + 1) * width].iter_mut().zip(&cache.cell_in) {
                *g += dh * a;
            }
        }
    }
    let mut d_a = vec![0.0; width];
    vecmat_raw(&d_h, params.dense().data(), d, width, &mut d_a);

    // Operator tensors.
    let mut d_reset = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for slice in 0..k {
        let base = 2 * slice * d;
        let (dp, dq) = (&d_a[base..base + d], &d_a[base + d..base + 2 * d]);
        for (tensor, input, upstream, sink) in [
            (t1_index(cache.op), &cache.reset_state[..], dp, &mut d_reset),
            (t2_index(cache.op), other, dq, &mut d_other),
        ] {
            let g = grads.slot(tensor).slab_mut(slice);
            for (i, &x) in input.iter().enumerate() {
                if x != 0.0 {
                    for (gij, u) in g[i * d..(i + 1) * d].iter_mut().zip(upstream) {
                        *gij += x * u;
                    }
                }
            }
            let w = params.tensor(tensor).slab(slice);
            matvec_raw(w, d, d, upstream, &mut tmp);
            for (s, t) in sink.iter_mut().zip(&tmp) {
                *s += t;
            }
        }
    }

    // Gates.
    let mut d_pre_r = vec![0.0; d];
    let mut d_pre_z = vec![0.0; d];
    for i in 0..d {
        d_state[i] += d_reset[i] * cache.r[i];
        d_pre_r[i] = d_reset[i] * state[i] * cache.r[i] * (1.0 - cache.r[i]);
        d_pre_z[i] = d_z[i] * cache.z[i] * (1.0 - cache.z[i]);
    }
    let mut d_joint = vec![0.0; 2 * d];
    let mut scratch = vec![0.0; 2 * d];
    for (slot, pre) in [(W_R, &d_pre_r), (W_Z, &d_pre_z)] {
        let g = grads.slot(slot).data_mut();
        for (i, &p) in pre.iter().enumerate() {
            if p != 0.0 {
                for (gij, x) in g[i * 2 * d..(i + 1) * 2 * d].iter_mut().zip(&cache.joint) {
                    *gij += p * x;
                }
            }
        }
        vecmat_raw(pre, params.tensor(slot).data(), d, 2 * d, &mut scratch);
        for (t, s) in d_joint.iter_mut().zip(&scratch) {
            *t += s;
        }
    }
    for i in 0..d {
        d_state[i] += d_joint[i];
        d_other[i] += d_joint[d + i];
    }
    (d_state, d_other)
}

/// Where a step's state or second operand comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Node(usize),
    EntityRow(usize),
}

/// The state side is whichever entity is a node reference, preferring
/// entity 1; the other entity plays the operand role.
pub fn step_sources(node: &crate::eventgraph::EventNode, cfg: &ModelConfig) -> Result<(Source, Source), ModelError> {
    let src = |e: &Entity| -> Result<Source, ModelError> {
        match e {
            Entity::NodeRef(id) => Ok(Source::Node(*id)),
            leaf => Ok(Source::EntityRow(entity_row(leaf, cfg)?)),
        }
    };
    let (a, o) = (src(&node.entity1)?, src(&node.entity2)?);
    Ok(match (a, o) {
        (Source::EntityRow(_), Source::Node(_)) => (o, a),
        _ => (a, o),
    })
}

/// Forward pass with every intermediate kept.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub order: Vec<usize>,
    pub sources: Vec<(Source, Source)>,
    pub steps: Vec<StepCache>,
    pub finals: Vec<usize>,
    /// Per-tap, per-channel window sums, `l_k × d`.
    pub window_sums: Vec<f64>,
    pub vector: ProgramVector,
}

impl ForwardTrace {
    pub fn embeddings(&self) -> EventEmbeddingMatrix {
        EventEmbeddingMatrix { rows: self.steps.iter().map(|s| s.out.clone()).collect() }
    }
}

fn fetch<'a>(src: Source, rows: &'a [Option<Vec<f64>>], params: &'a ModelParams) -> Result<&'a [f64], ModelError> {
    match src {
        Source::Node(id) => rows[id].as_deref().ok_or(ModelError::Order(id)),
        Source::EntityRow(r) => Ok(params.entity_table().slab(r)),
    }
}

fn run_steps(
    graph: &EventDependencyGraph,
    params: &ModelParams,
    order: &[usize],
) -> Result<(Vec<(Source, Source)>, Vec<StepCache>), ModelError> {
    let n = graph.len();
    if order.len() != n {
        return Err(ModelError::Shape(format!("order has {} entries for {n} nodes", order.len())));
    }
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut caches: Vec<Option<StepCache>> = vec![None; n];
    let mut sources = vec![(Source::Node(0), Source::Node(0)); n];
    for &id in order {
        let node = graph.nodes().get(id).ok_or_else(|| ModelError::Shape(format!("no node {id}")))?;
        let (s, o) = step_sources(node, params.config())?;
        let cache = step_forward(params, node.op, fetch(s, &rows, params)?, fetch(o, &rows, params)?);
        rows[id] = Some(cache.out.clone());
        caches[id] = Some(cache);
        sources[id] = (s, o);
    }
    let steps = caches.into_iter().enumerate().map(|(i, c)| c.ok_or(ModelError::Order(i))).collect::<Result<_, _>>()?;
    Ok((sources, steps))
}

/// Event embedding matrix, processing nodes in topological order.
pub fn embed_graph(graph: &EventDependencyGraph, params: &ModelParams) -> Result<EventEmbeddingMatrix, ModelError> {
    let order = topo_schedule(graph)?;
    embed_graph_in_order(graph, params, &order)
}

/// Same as [`embed_graph`] with a caller-chosen processing order, which
/// must be topological.
pub fn embed_graph_in_order(
    graph: &EventDependencyGraph,
    params: &ModelParams,
    order: &[usize],
) -> Result<EventEmbeddingMatrix, ModelError> {
    let (_, steps) = run_steps(graph, params, order)?;
    Ok(EventEmbeddingMatrix { rows: steps.into_iter().map(|s| s.out).collect() })
}

/// Keeps the rows of statement-final nodes, scanning node ids upward.
pub fn restore(e: &EventEmbeddingMatrix, graph: &EventDependencyGraph) -> Result<ProgramEmbeddingMatrix, ModelError> {
    if e.rows.len() != graph.len() {
        return Err(ModelError::Shape(format!("{} embedding rows for {} nodes", e.rows.len(), graph.len())));
    }
    let rows = graph.nodes().iter().filter(|n| n.is_final).map(|n| e.rows[n.id].clone()).collect();
    Ok(ProgramEmbeddingMatrix { rows })
}

/// Entry `i * d + c` sums channel `c` over every real row that sits under
/// kernel tap `i` in some valid window. Padding rows are zero and drop out.
fn window_sums(x: &ProgramEmbeddingMatrix, cfg: &ModelConfig) -> Result<Vec<f64>, ModelError> {
    let s = x.rows.len();
    if s == 0 {
        return Err(ModelError::Shape("program embedding matrix is empty".into()));
    }
    if s > cfg.pad_len {
        return Err(ModelError::TooManyStatements { count: s, pad_len: cfg.pad_len });
    }
    let (d, len) = (cfg.d, cfg.conv_len());
    let mut out = vec![0.0; cfg.l_k * d];
    for (row, r) in x.rows.iter().enumerate() {
        check_len(r, d, "program row")?;
        for tap in (0..cfg.l_k).filter(|&i| row >= i && row - i < len) {
            for (o, v) in out[tap * d..(tap + 1) * d].iter_mut().zip(r) {
                *o += v;
            }
        }
    }
    Ok(out)
}

/// Kernel weight `(j, c, i)` as seen by channel `c`, plus the pooling scale.
fn tap_weight(params: &ModelParams, j: usize, c: usize, i: usize) -> f64 {
    let cfg = params.config();
    match cfg.conv_span {
        ConvSpan::Shared => params.conv().slab(j)[i],
        ConvSpan::Channels => params.conv().slab(j)[c * cfg.l_k + i],
    }
}

fn pool_scale(cfg: &ModelConfig) -> f64 {
    match cfg.conv_span {
        ConvSpan::Shared => 1.0 / (cfg.d * cfg.conv_len()) as f64,
        ConvSpan::Channels => 1.0 / cfg.conv_len() as f64,
    }
}

fn pooled(window: &[f64], params: &ModelParams) -> ProgramVector {
    let cfg = params.config();
    let scale = pool_scale(cfg);
    let values = (0..cfg.n_k)
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..cfg.l_k {
                for c in 0..cfg.d {
                    acc += tap_weight(params, j, c, i) * window[i * cfg.d + c];
                }
            }
            acc * scale
        })
        .collect();
    ProgramVector { values }
}

/// Pads to `pad_len` rows, runs every kernel along the statement axis of
/// each channel (valid mode) and average-pools each kernel's response.
pub fn convolve(x: &ProgramEmbeddingMatrix, params: &ModelParams) -> Result<ProgramVector, ModelError> {
    Ok(pooled(&window_sums(x, params.config())?, params))
}

pub fn embed_program(graph: &EventDependencyGraph, params: &ModelParams) -> Result<ProgramVector, ModelError> {
    Ok(forward_trace(graph, params)?.vector)
}

pub fn forward_trace(graph: &EventDependencyGraph, params: &ModelParams) -> Result<ForwardTrace, ModelError> {
    let order = topo_schedule(graph)?;
    let (sources, steps) = run_steps(graph, params, &order)?;
    let e = EventEmbeddingMatrix { rows: steps.iter().map(|s| s.out.clone()).collect() };
    let x = restore(&e, graph)?;
    let window_sums = window_sums(&x, params.config())?;
    let vector = pooled(&window_sums, params);
    Ok(ForwardTrace { order, sources, steps, finals: graph.final_nodes(), window_sums, vector })
}

/// Backward through the convolution: accumulates the kernel gradient and
/// returns `∂/∂X` per statement row and channel.
pub fn convolve_backward(trace: &ForwardTrace, params: &ModelParams, d_q: &[f64], grads: &mut Gradients) -> Vec<Vec<f64>> {
    let cfg = *params.config();
    let (d, l_k) = (cfg.d, cfg.l_k);
    let scale = pool_scale(&cfg);
    let g = grads.slot(CONV).data_mut();
    for (j, &dq) in d_q.iter().enumerate() {
        for i in 0..l_k {
            for c in 0..d {
                let at = match cfg.conv_span {
                    ConvSpan::Shared => j * l_k + i,
                    ConvSpan::Channels => (j * d + c) * l_k + i,
                };
                g[at] += dq * trace.window_sums[i * d + c] * scale;
            }
        }
    }
    let mut per_tap = vec![0.0; l_k * d];
    for (j, &dq) in d_q.iter().enumerate() {
        for i in 0..l_k {
            for c in 0..d {
                per_tap[i * d + c] += dq * tap_weight(params, j, c, i) * scale;
            }
        }
    }
    // Row r sits under tap i in window t = r - i, valid when 0 <= t < conv_len.
    (0..trace.finals.len())
        .map(|row| {
            let mut out = vec![0.0; d];
            for i in (0..l_k).filter(|&i| row >= i && row - i < cfg.conv_len()) {
                for (o, w) in out.iter_mut().zip(&per_tap[i * d..(i + 1) * d]) {
                    *o += w;
                }
            }
            out
        })
        .collect()
}
