//! Direct re-implementations of the engine's forward formulas, written
//! against raw tensor storage with explicit index arithmetic. Generic over
//! the scalar so the same code runs in `f64` and in double-double.

use std::ops::{Add, Div, Mul, Neg, Sub};

use eventclone::eventgraph::{Entity, EventDependencyGraph, Operator};
use eventclone::model::{
    t1_index, t2_index, ConvSpan, ModelConfig, ModelParams, BIAS, CONV, DENSE, ENTITY, TENSOR_COUNT, W_R, W_Z,
};
use eventclone::numkernel::Rng;

use super::dd::Dd;

pub trait Real:
    Copy
    + From<f64>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn exp(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    fn exp(self) -> f64 {
        f64::exp(self)
    }
    fn tanh(self) -> f64 {
        f64::tanh(self)
    }
    fn sqrt(self) -> f64 {
        f64::sqrt(self)
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for Dd {
    fn exp(self) -> Dd {
        Dd::exp(self)
    }
    fn tanh(self) -> Dd {
        Dd::tanh(self)
    }
    fn sqrt(self) -> Dd {
        Dd::sqrt(self)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
}

/// Flat copies of every parameter tensor.
#[derive(Clone)]
pub struct Weights<R> {
    pub cfg: ModelConfig,
    pub t: Vec<Vec<R>>,
}

impl<R: Real> Weights<R> {
    pub fn new(params: &ModelParams) -> Self {
        let t = (0..TENSOR_COUNT).map(|i| params.tensor(i).data().iter().map(|&x| R::from(x)).collect()).collect();
        Weights { cfg: *params.config(), t }
    }
}

/// Fills every tensor, biases included, with uniform draws from `[-scale, scale]`.
pub fn random_params(cfg: ModelConfig, seed: u64, scale: f64) -> ModelParams {
    let mut params = ModelParams::zeros(cfg).unwrap();
    let mut rng = Rng::new(seed);
    for t in 0..TENSOR_COUNT {
        for x in params.tensor_mut(t).data_mut() {
            *x = rng.uniform(-scale, scale);
        }
    }
    params
}

pub fn random_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect()
}

fn sigma<R: Real>(x: R) -> R {
    R::from(1.0) / (R::from(1.0) + (-x).exp())
}

/// `tanh(dense · concat_k(A·T1[k], O·T2[k]) + bias)`.
pub fn cell<R: Real>(w: &Weights<R>, op: Operator, a: &[R], o: &[R]) -> Vec<R> {
    let ModelConfig { d, k, .. } = w.cfg;
    let t1 = &w.t[t1_index(op)];
    let t2 = &w.t[t2_index(op)];
    let mut cat = Vec::with_capacity(2 * k * d);
    for s in 0..k {
        for (x, t) in [(a, t1), (o, t2)] {
            for j in 0..d {
                let mut acc = R::from(0.0);
                for i in 0..d {
                    acc = acc + x[i] * t[s * d * d + i * d + j];
                }
                cat.push(acc);
            }
        }
    }
    let width = 2 * k * d;
    let (dense, b) = (&w.t[DENSE], &w.t[BIAS]);
    (0..d)
        .map(|row| {
            let mut h = b[row];
            for c in 0..width {
                h = h + dense[row * width + c] * cat[c];
            }
            h.tanh()
        })
        .collect()
}

/// Reset gate, update gate, cell on the reset state, convex mix.
pub fn transformer<R: Real>(w: &Weights<R>, op: Operator, prev: &[R], o: &[R]) -> Vec<R> {
    let d = w.cfg.d;
    let joint: Vec<R> = prev.iter().chain(o).copied().collect();
    let gate = |m: &[R]| -> Vec<R> {
        (0..d)
            .map(|i| sigma((0..2 * d).fold(R::from(0.0), |acc, c| acc + m[i * 2 * d + c] * joint[c])))
            .collect()
    };
    let r = gate(&w.t[W_R]);
    let z = gate(&w.t[W_Z]);
    let reset: Vec<R> = (0..d).map(|i| r[i] * prev[i]).collect();
    let cand = cell(w, op, &reset, o);
    (0..d).map(|i| (R::from(1.0) - z[i]) * prev[i] + z[i] * cand[i]).collect()
}

/// Zero-pads `rows` to `pad_len`, runs a valid 1-D convolution along the
/// statement axis and averages each kernel's response.
pub fn convolve<R: Real>(w: &Weights<R>, rows: &[Vec<R>]) -> Vec<R> {
    let ModelConfig { d, n_k, l_k, pad_len, conv_span, .. } = w.cfg;
    let zero = R::from(0.0);
    let mut padded = vec![vec![zero; d]; pad_len];
    for (dst, src) in padded.iter_mut().zip(rows) {
        dst.copy_from_slice(src);
    }
    let kern = &w.t[CONV];
    let positions = pad_len - l_k + 1;
    let mean = |z: Vec<R>| {
        let n = z.len() as f64;
        z.into_iter().fold(zero, |a, b| a + b) / R::from(n)
    };
    (0..n_k)
        .map(|j| match conv_span {
            ConvSpan::Shared => {
                let mut z = Vec::new();
                for c in 0..d {
                    for t in 0..positions {
                        z.push((0..l_k).fold(zero, |acc, i| acc + kern[j * l_k + i] * padded[t + i][c]));
                    }
                }
                mean(z)
            }
            ConvSpan::Channels => mean(
                (0..positions)
                    .map(|t| {
                        let mut acc = zero;
                        for c in 0..d {
                            for i in 0..l_k {
                                acc = acc + kern[(j * d + c) * l_k + i] * padded[t + i][c];
                            }
                        }
                        acc
                    })
                    .collect(),
            ),
        })
        .collect()
}

fn entity_row<R: Real>(w: &Weights<R>, e: &Entity) -> Vec<R> {
    let Entity::Leaf { rank: Some(rank), .. } = e else { panic!("unranked leaf {e:?}") };
    let row = (*rank as usize).clamp(1, w.cfg.top_vocab) - 1;
    w.t[ENTITY][row * w.cfg.d..(row + 1) * w.cfg.d].to_vec()
}

/// Program vector: nodes in id order (every ref points backwards), state
/// from the first node-ref entity, then statement-final rows, then the
/// convolution.
pub fn program_vector<R: Real>(w: &Weights<R>, g: &EventDependencyGraph) -> Vec<R> {
    let mut rows: Vec<Vec<R>> = Vec::with_capacity(g.len());
    for n in g.nodes() {
        let fetch = |e: &Entity| match e.node_ref() {
            Some(id) => rows[id].clone(),
            None => entity_row(w, e),
        };
        let (state, other) = if n.entity1.node_ref().is_none() && n.entity2.node_ref().is_some() {
            (fetch(&n.entity2), fetch(&n.entity1))
        } else {
            (fetch(&n.entity1), fetch(&n.entity2))
        };
        let out = transformer(w, n.op, &state, &other);
        rows.push(out);
    }
    let finals: Vec<Vec<R>> = g.nodes().iter().filter(|n| n.is_final).map(|n| rows[n.id].clone()).collect();
    convolve(w, &finals)
}

pub fn cosine<R: Real>(u: &[R], v: &[R]) -> R {
    let dot = |x: &[R], y: &[R]| x.iter().zip(y).fold(R::from(0.0), |a, (p, q)| a + *p * *q);
    dot(u, v) / (dot(u, u) * dot(v, v)).sqrt()
}

/// `max(0, 1 − cos(a, p) + cos(a, n))` for one triplet of graphs.
pub fn triplet_loss<R: Real>(w: &Weights<R>, graphs: [&EventDependencyGraph; 3]) -> R {
    let [a, p, n] = graphs.map(|g| program_vector(w, g));
    let l = R::from(1.0) - cosine(&a, &p) + cosine(&a, &n);
    if l.to_f64() > 0.0 {
        l
    } else {
        R::from(0.0)
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
