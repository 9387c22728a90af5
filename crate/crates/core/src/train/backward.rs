//! Reverse-mode composition over one fragment and over triplet batches.

use rayon::prelude::*;

use crate::eventgraph::EventDependencyGraph;
use crate::model::{
    convolve_backward, forward_trace, step_backward, ForwardTrace, Gradients, ModelParams, Source, ENTITY,
};
use crate::numkernel::cosine;

use super::TrainError;

/// `cos(u, v)` with its gradients with respect to `u` and `v`.
pub fn cosine_with_grad(u: &[f64], v: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>), TrainError> {
    let c = cosine(u, v).ok_or(TrainError::DegenerateVector)?;
    let (uu, vv): (f64, f64) = (u.iter().map(|x| x * x).sum(), v.iter().map(|x| x * x).sum());
    let inv = 1.0 / (uu * vv).sqrt();
    let du = u.iter().zip(v).map(|(a, b)| b * inv - c * a / uu).collect();
    let dv = u.iter().zip(v).map(|(a, b)| a * inv - c * b / vv).collect();
    Ok((c, du, dv))
}

/// `max(0, margin − cos(a, p) + cos(a, n))`.
pub fn hinge_loss(anchor: &[f64], positive: &[f64], negative: &[f64]) -> Result<f64, TrainError> {
    let sp = cosine(anchor, positive).ok_or(TrainError::DegenerateVector)?;
    let sn = cosine(anchor, negative).ok_or(TrainError::DegenerateVector)?;
    cosine(positive, negative).ok_or(TrainError::DegenerateVector)?;
    Ok((super::MARGIN - sp + sn).max(0.0))
}

/// Hinge loss and its gradients with respect to the three vectors.
pub fn hinge_with_grad(a: &[f64], p: &[f64], n: &[f64]) -> Result<(f64, [Vec<f64>; 3]), TrainError> {
    let loss = hinge_loss(a, p, n)?;
    if loss <= 0.0 {
        let z = vec![0.0; a.len()];
        return Ok((0.0, [z.clone(), z.clone(), z]));
    }
    let (_, dap, dp) = cosine_with_grad(a, p)?;
    let (_, dan, dn) = cosine_with_grad(a, n)?;
    let da = dap.iter().zip(&dan).map(|(x, y)| y - x).collect();
    let dp = dp.iter().map(|x| -x).collect();
    Ok((loss, [da, dp, dn]))
}

/// Backpropagates `∂L/∂Q` through the convolution and every gated step in
/// reverse topological order. Operator tensors collect one contribution per
/// node that uses them. Returns the upstream gradient `∂L/∂out` of each node.
pub fn graph_backward(
    trace: &ForwardTrace,
    params: &ModelParams,
    d_vector: &[f64],
    grads: &mut Gradients,
) -> Vec<Vec<f64>> {
    let d = params.config().d;
    let n = trace.steps.len();
    let mut upstream = vec![vec![0.0; d]; n];
    let d_rows = convolve_backward(trace, params, d_vector, grads);
    for (&node, g) in trace.finals.iter().zip(&d_rows) {
        upstream[node].iter_mut().zip(g).for_each(|(x, y)| *x += y);
    }
    for &id in trace.order.iter().rev() {
        if upstream[id].iter().all(|&x| x == 0.0) {
            continue;
        }
        let (d_state, d_other) = step_backward(params, &trace.steps[id], &upstream[id], grads);
        let (s, o) = trace.sources[id];
        for (src, g) in [(s, d_state), (o, d_other)] {
            let sink = match src {
                Source::Node(j) => &mut upstream[j],
                Source::EntityRow(r) => grads.slot(ENTITY).slab_mut(r),
            };
            for (a, b) in sink.iter_mut().zip(&g) {
                *a += b;
            }
        }
    }
    upstream
}

/// Loss and parameter gradients of one triplet `(anchor, positive, negative)`.
pub fn backward(triplet: [&EventDependencyGraph; 3], params: &ModelParams) -> Result<(f64, Gradients), TrainError> {
    batch_backward(&triplet, &[(0, 1, 2)], params)
}

/// Summed loss and gradients over `triplets`, which index into `graphs`.
/// Each distinct graph is run forward and backward once; per-graph work is
/// parallel and the reduction runs in graph order, so results are bitwise
/// reproducible.
pub fn batch_backward(
    graphs: &[&EventDependencyGraph],
    triplets: &[(usize, usize, usize)],
    params: &ModelParams,
) -> Result<(f64, Gradients), TrainError> {
    let mut used: Vec<usize> = triplets.iter().flat_map(|&(a, p, n)| [a, p, n]).collect();
    used.sort_unstable();
    used.dedup();
    let mut slot_of = vec![usize::MAX; graphs.len()];
    for (k, &g) in used.iter().enumerate() {
        slot_of[g] = k;
    }
    let traces: Vec<ForwardTrace> =
        used.par_iter().map(|&g| forward_trace(graphs[g], params)).collect::<Result<_, _>>()?;

    let n_k = params.config().n_k;
    let mut d_vectors = vec![vec![0.0; n_k]; used.len()];
    let mut loss = 0.0;
    for &(a, p, n) in triplets {
        let (a, p, n) = (slot_of[a], slot_of[p], slot_of[n]);
        let (l, [da, dp, dn]) =
            hinge_with_grad(&traces[a].vector.values, &traces[p].vector.values, &traces[n].vector.values)?;
        loss += l;
        for (slot, g) in [(a, da), (p, dp), (n, dn)] {
            for (x, y) in d_vectors[slot].iter_mut().zip(&g) {
                *x += y;
            }
        }
    }

    let cfg = *params.config();
    let parts: Vec<Option<Gradients>> = traces
        .par_iter()
        .zip(&d_vectors)
        .map(|(trace, dv)| {
            if dv.iter().all(|&x| x == 0.0) {
                return None;
            }
            let mut g = Gradients::new(&cfg);
            graph_backward(trace, params, dv, &mut g);
            Some(g)
        })
        .collect();
    let mut total = Gradients::new(&cfg);
    for g in parts.iter().flatten() {
        total.add_assign(g);
    }
    Ok((loss, total))
}

/// Batch loss alone, for finite-difference checks.
pub fn batch_loss(
    graphs: &[&EventDependencyGraph],
    triplets: &[(usize, usize, usize)],
    params: &ModelParams,
) -> Result<f64, TrainError> {
    let vectors: Vec<Vec<f64>> = graphs
        .iter()
        .map(|g| crate::model::embed_program(g, params).map(|v| v.values))
        .collect::<Result<_, _>>()?;
    triplets.iter().map(|&(a, p, n)| hinge_loss(&vectors[a], &vectors[p], &vectors[n])).sum()
}
