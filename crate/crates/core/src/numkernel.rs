//! Dense f64 tensors and the handful of operations the execution engine needs.
//!
//! Everything here is deterministic: sums run left to right and all randomness
//! flows through an explicitly seeded [`Rng`].

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    Shape { left: Vec<usize>, right: Vec<usize> },
    #[error("invalid tensor shape {0:?}")]
    BadShape(Vec<usize>),
    #[error("non-finite value in tensor")]
    NonFinite,
}

/// Row-major tensor of rank 1 to 3.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, NumError> {
        if shape.is_empty() || shape.len() > 3 || shape.contains(&0) {
            return Err(NumError::BadShape(shape));
        }
        if shape.iter().product::<usize>() != data.len() {
            return Err(NumError::Shape { left: shape, right: vec![data.len()] });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(NumError::NonFinite);
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        assert!(!shape.is_empty() && shape.len() <= 3 && !shape.contains(&0), "bad shape {shape:?}");
        DenseTensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn vector(data: Vec<f64>) -> Result<Self, NumError> {
        Self::new(vec![data.len()], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumError> {
        Self::new(vec![rows, cols], data)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row `i` of a matrix, or matrix `i` of a rank-3 tensor, as a flat slice.
    pub fn slab(&self, i: usize) -> &[f64] {
        let stride: usize = self.shape[1..].iter().product();
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn slab_mut(&mut self, i: usize) -> &mut [f64] {
        let stride: usize = self.shape[1..].iter().product();
        &mut self.data[i * stride..(i + 1) * stride]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

fn check_finite(v: &[f64]) {
    debug_assert!(v.iter().all(|x| x.is_finite()), "non-finite value produced");
}

fn same_len(u: &[f64], v: &[f64]) -> Result<(), NumError> {
    if u.len() != v.len() {
        return Err(NumError::Shape { left: vec![u.len()], right: vec![v.len()] });
    }
    Ok(())
}

/// `m · v` for an `(rows × cols)` matrix stored row-major.
pub fn matvec_raw(m: &[f64], rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.len(), rows * cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        let row = &m[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(v) {
            acc += a * b;
        }
        *o = acc;
    }
}

/// `mᵀ · v`, i.e. the row vector `v` times `m`.
pub fn vecmat_raw(v: &[f64], m: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    debug_assert_eq!(m.len(), rows * cols);
    out[..cols].iter_mut().for_each(|o| *o = 0.0);
    for (r, &vr) in v.iter().enumerate().take(rows) {
        let row = &m[r * cols..(r + 1) * cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += vr * a;
        }
    }
}

pub fn matvec(m: &DenseTensor, v: &[f64]) -> Result<Vec<f64>, NumError> {
    if m.shape.len() != 2 || m.shape[1] != v.len() {
        return Err(NumError::Shape { left: m.shape.clone(), right: vec![v.len()] });
    }
    let mut out = vec![0.0; m.shape[0]];
    matvec_raw(&m.data, m.shape[0], m.shape[1], v, &mut out);
    check_finite(&out);
    Ok(out)
}

pub fn matmul(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor, NumError> {
    if a.shape.len() != 2 || b.shape.len() != 2 || a.shape[1] != b.shape[0] {
        return Err(NumError::Shape { left: a.shape.clone(), right: b.shape.clone() });
    }
    let (m, n, p) = (a.shape[0], a.shape[1], b.shape[1]);
    let mut out = vec![0.0; m * p];
    for i in 0..m {
        for j in 0..p {
            let mut acc = 0.0;
            for k in 0..n {
                acc += a.data[i * n + k] * b.data[k * p + j];
            }
            out[i * p + j] = acc;
        }
    }
    check_finite(&out);
    Ok(DenseTensor { shape: vec![m, p], data: out })
}

pub fn sigmoid_scalar(x: f64) -> f64 {
    // Split on sign so exp never overflows.
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| sigmoid_scalar(x)).collect()
}

pub fn tanh(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.tanh()).collect()
}

pub fn hadamard(u: &[f64], v: &[f64]) -> Result<Vec<f64>, NumError> {
    same_len(u, v)?;
    Ok(u.iter().zip(v).map(|(a, b)| a * b).collect())
}

pub fn concat(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len() + v.len());
    out.extend_from_slice(u);
    out.extend_from_slice(v);
    out
}

/// `a·u + b·v`.
pub fn scale_add(a: f64, u: &[f64], b: f64, v: &[f64]) -> Result<Vec<f64>, NumError> {
    same_len(u, v)?;
    let out: Vec<f64> = u.iter().zip(v).map(|(x, y)| a * x + b * y).collect();
    check_finite(&out);
    Ok(out)
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Vectors shorter than this have no direction.
pub const MIN_NORM: f64 = 1e-12;

/// `u·v / sqrt(‖u‖²‖v‖²)`, unclamped. `None` if either norm is below [`MIN_NORM`].
/// Taking one square root makes `cosine(v, v)` exactly 1.
pub fn cosine(u: &[f64], v: &[f64]) -> Option<f64> {
    let (uu, vv) = (dot(u, u), dot(v, v));
    if uu.sqrt() < MIN_NORM || vv.sqrt() < MIN_NORM {
        return None;
    }
    Some(dot(u, v) / (uu * vv).sqrt())
}

/// Seeded ChaCha8 stream; same seed, same draws on every platform.
#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { inner: ChaCha8Rng::seed_from_u64(seed), seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream derived from this generator's seed.
    pub fn fork(&self, stream: u64) -> Rng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream);
        Rng { inner, seed: self.seed }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.gen_range(lo..=hi)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        Normal::new(mean, std).expect("valid normal parameters").sample(&mut self.inner)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    /// Uniform on `[-a, a]` with `a = sqrt(6 / (fan_in + fan_out))`.
    XavierUniform { fan_in: usize, fan_out: usize },
    Normal { std: f64 },
    Zeros,
}

impl InitScheme {
    pub const SMALL_NORMAL: InitScheme = InitScheme::Normal { std: 0.02 };

    pub fn bound(&self) -> Option<f64> {
        match *self {
            InitScheme::XavierUniform { fan_in, fan_out } => Some((6.0 / (fan_in + fan_out) as f64).sqrt()),
            InitScheme::Zeros => Some(0.0),
            InitScheme::Normal { .. } => None,
        }
    }
}

pub fn init_params(shape: &[usize], rng: &mut Rng, scheme: InitScheme) -> DenseTensor {
    let mut t = DenseTensor::zeros(shape);
    match scheme {
        InitScheme::XavierUniform { .. } => {
            let a = scheme.bound().unwrap();
            t.data.iter_mut().for_each(|x| *x = rng.uniform(-a, a));
        }
        InitScheme::Normal { std } => t.data.iter_mut().for_each(|x| *x = rng.normal(0.0, std)),
        InitScheme::Zeros => {}
    }
    t
}

/// Anything that exposes its trainable state as a list of tensors.
pub trait ParamSet {
    fn tensors(&self) -> &[DenseTensor];
    fn tensors_mut(&mut self) -> &mut [DenseTensor];
}

impl ParamSet for Vec<DenseTensor> {
    fn tensors(&self) -> &[DenseTensor] {
        self
    }
    fn tensors_mut(&mut self) -> &mut [DenseTensor] {
        self
    }
}

pub const DEFAULT_FD_EPSILON: f64 = 1e-5;

/// Central differences `(f(p+ε) - f(p-ε)) / 2ε` for every scalar parameter.
/// Each parameter is restored bit-for-bit after it is probed.
pub fn finite_diff_grad<P, F>(params: &mut P, epsilon: f64, mut f: F) -> Vec<DenseTensor>
where
    P: ParamSet + ?Sized,
    F: FnMut(&P) -> f64,
{
    let shapes: Vec<Vec<usize>> = params.tensors().iter().map(|t| t.shape().to_vec()).collect();
    let mut grads: Vec<DenseTensor> = shapes.iter().map(|s| DenseTensor::zeros(s)).collect();
    for (t, grad) in grads.iter_mut().enumerate() {
        for i in 0..grad.len() {
            let orig = params.tensors()[t].data[i];
            params.tensors_mut()[t].data[i] = orig + epsilon;
            let plus = f(params);
            params.tensors_mut()[t].data[i] = orig - epsilon;
            let minus = f(params);
            params.tensors_mut()[t].data[i] = orig;
            grad.data[i] = (plus - minus) / (2.0 * epsilon);
        }
    }
    grads
}
