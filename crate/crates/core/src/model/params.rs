use crate::eventgraph::Operator;
use crate::numkernel::{init_params, DenseTensor, InitScheme, ParamSet, Rng};

use super::ModelError;

/// What one convolution kernel covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvSpan {
    /// One `l_k` kernel slid along statements and shared by every embedding
    /// channel; responses are averaged over channels and positions.
    Shared,
    /// A `d × l_k` kernel over all channels at once, averaged over positions.
    #[default]
    Channels,
}

impl ConvSpan {
    pub fn name(self) -> &'static str {
        match self {
            ConvSpan::Shared => "shared",
            ConvSpan::Channels => "channels",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "shared" => Some(ConvSpan::Shared),
            "channels" => Some(ConvSpan::Channels),
            _ => None,
        }
    }
}

/// Shape hyperparameters of the execution engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    /// Entity and event vector length.
    pub d: usize,
    /// Number of matrices in each operator tensor.
    pub k: usize,
    /// Number of convolution kernels, i.e. the program vector length.
    pub n_k: usize,
    /// Convolution kernel length.
    pub l_k: usize,
    /// Statement rows after zero padding.
    pub pad_len: usize,
    /// Number of `Top_i` ranks with their own entity vector.
    pub top_vocab: usize,
    pub conv_span: ConvSpan,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { d: 64, k: 2, n_k: 128, l_k: 3, pad_len: 256, top_vocab: 512, conv_span: ConvSpan::default() }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ModelConfig { d, k, n_k, l_k, pad_len, top_vocab, .. } = *self;
        if [d, k, n_k, l_k, pad_len, top_vocab].contains(&0) {
            return Err(ModelError::Config("all dimensions must be positive".into()));
        }
        if l_k > pad_len {
            return Err(ModelError::Config(format!("kernel length {l_k} exceeds padded length {pad_len}")));
        }
        Ok(())
    }

    /// Length of the event-cell concatenation `a`.
    pub fn cell_width(&self) -> usize {
        2 * self.k * self.d
    }

    /// Shape of the convolution weight tensor.
    pub fn conv_shape(&self) -> Vec<usize> {
        match self.conv_span {
            ConvSpan::Shared => vec![self.n_k, self.l_k],
            ConvSpan::Channels => vec![self.n_k, self.d, self.l_k],
        }
    }

    /// Valid convolution output length over the padded statement axis.
    pub fn conv_len(&self) -> usize {
        self.pad_len - self.l_k + 1
    }
}

pub const OPS: usize = Operator::COUNT;
pub const W_R: usize = 2 * OPS;
pub const W_Z: usize = W_R + 1;
pub const DENSE: usize = W_Z + 1;
pub const BIAS: usize = DENSE + 1;
pub const ENTITY: usize = BIAS + 1;
pub const CONV: usize = ENTITY + 1;
pub const TENSOR_COUNT: usize = CONV + 1;

pub fn t1_index(op: Operator) -> usize {
    op.id()
}

pub fn t2_index(op: Operator) -> usize {
    OPS + op.id()
}

/// Name and shape of every parameter tensor, in storage order.
pub fn tensor_layout(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let ModelConfig { d, k, top_vocab, .. } = *cfg;
    let mut out = Vec::with_capacity(TENSOR_COUNT);
    for which in ["t1", "t2"] {
        for op in Operator::all() {
            out.push((format!("op.{}.{which}", op.name()), vec![k, d, d]));
        }
    }
    out.push(("gate.w_r".into(), vec![d, 2 * d]));
    out.push(("gate.w_z".into(), vec![d, 2 * d]));
    out.push(("dense.w".into(), vec![d, cfg.cell_width()]));
    out.push(("dense.b".into(), vec![d]));
    out.push(("entity".into(), vec![top_vocab, d]));
    out.push(("conv.w".into(), cfg.conv_shape()));
    out
}

/// All trainable tensors of the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    config: ModelConfig,
    tensors: Vec<DenseTensor>,
}

impl ModelParams {
    pub fn zeros(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let tensors = tensor_layout(&config).iter().map(|(_, s)| DenseTensor::zeros(s)).collect();
        Ok(ModelParams { config, tensors })
    }

    /// Random initialization: Xavier-uniform weights, zero bias.
    pub fn init(config: ModelConfig, rng: &mut Rng) -> Result<Self, ModelError> {
        config.validate()?;
        let ModelConfig { d, n_k, l_k, top_vocab, .. } = config;
        let tensors = tensor_layout(&config)
            .into_iter()
            .enumerate()
            .map(|(i, (_, shape))| {
                let scheme = match i {
                    _ if i < W_R => InitScheme::XavierUniform { fan_in: d, fan_out: d },
                    W_R | W_Z => InitScheme::XavierUniform { fan_in: 2 * d, fan_out: d },
                    DENSE => InitScheme::XavierUniform { fan_in: config.cell_width(), fan_out: d },
                    BIAS => InitScheme::Zeros,
                    ENTITY => InitScheme::XavierUniform { fan_in: top_vocab.min(d), fan_out: d },
                    _ => {
                        let fan_in = if config.conv_span == ConvSpan::Shared { l_k } else { d * l_k };
                        InitScheme::XavierUniform { fan_in, fan_out: n_k }
                    }
                };
                init_params(&shape, rng, scheme)
            })
            .collect();
        Ok(ModelParams { config, tensors })
    }

    /// Wraps tensors, checking names and shapes against the config.
    pub fn from_tensors(config: ModelConfig, tensors: Vec<DenseTensor>) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = tensor_layout(&config);
        if tensors.len() != layout.len() {
            return Err(ModelError::Shape(format!("expected {} tensors, got {}", layout.len(), tensors.len())));
        }
        for ((name, shape), t) in layout.iter().zip(&tensors) {
            if t.shape() != shape.as_slice() {
                return Err(ModelError::Shape(format!("{name}: expected {shape:?}, got {:?}", t.shape())));
            }
            if !t.is_finite() {
                return Err(ModelError::Shape(format!("{name}: non-finite values")));
            }
        }
        Ok(ModelParams { config, tensors })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tensor(&self, index: usize) -> &DenseTensor {
        &self.tensors[index]
    }

    pub fn tensor_mut(&mut self, index: usize) -> &mut DenseTensor {
        &mut self.tensors[index]
    }

    pub fn into_tensors(self) -> Vec<DenseTensor> {
        self.tensors
    }

    pub fn t1(&self, op: Operator) -> &DenseTensor {
        &self.tensors[t1_index(op)]
    }

    pub fn t2(&self, op: Operator) -> &DenseTensor {
        &self.tensors[t2_index(op)]
    }

    pub fn w_r(&self) -> &DenseTensor {
        &self.tensors[W_R]
    }

    pub fn w_z(&self) -> &DenseTensor {
        &self.tensors[W_Z]
    }

    pub fn dense(&self) -> &DenseTensor {
        &self.tensors[DENSE]
    }

    pub fn bias(&self) -> &DenseTensor {
        &self.tensors[BIAS]
    }

    pub fn entity_table(&self) -> &DenseTensor {
        &self.tensors[ENTITY]
    }

    pub fn conv(&self) -> &DenseTensor {
        &self.tensors[CONV]
    }
}

impl ParamSet for ModelParams {
    fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }
    fn tensors_mut(&mut self) -> &mut [DenseTensor] {
        &mut self.tensors
    }
}

/// Gradient accumulator shaped like [`ModelParams`]. Tensors are allocated
/// on first touch, so an operator that never fires keeps an exactly zero
/// (absent) gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    shapes: Vec<Vec<usize>>,
    slots: Vec<Option<DenseTensor>>,
}

impl Gradients {
    pub fn new(config: &ModelConfig) -> Self {
        let shapes: Vec<Vec<usize>> = tensor_layout(config).into_iter().map(|(_, s)| s).collect();
        let slots = vec![None; shapes.len()];
        Gradients { shapes, slots }
    }

    pub fn get(&self, index: usize) -> Option<&DenseTensor> {
        self.slots[index].as_ref()
    }

    pub fn slot(&mut self, index: usize) -> &mut DenseTensor {
        let shape = &self.shapes[index];
        self.slots[index].get_or_insert_with(|| DenseTensor::zeros(shape))
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (i, theirs) in other.slots.iter().enumerate() {
            if let Some(theirs) = theirs {
                let mine = self.slot(i);
                for (a, b) in mine.data_mut().iter_mut().zip(theirs.data()) {
                    *a += b;
                }
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.slots.iter_mut().flatten() {
            t.data_mut().iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// True when no tensor holds a nonzero entry.
    pub fn is_zero(&self) -> bool {
        self.slots.iter().flatten().all(|t| t.data().iter().all(|&x| x == 0.0))
    }

    /// Dense copy with zeros for untouched tensors.
    pub fn to_dense(&self) -> Vec<DenseTensor> {
        self.slots
            .iter()
            .zip(&self.shapes)
            .map(|(slot, shape)| slot.clone().unwrap_or_else(|| DenseTensor::zeros(shape)))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &DenseTensor)> {
        self.slots.iter().enumerate().filter_map(|(i, s)| s.as_ref().map(|t| (i, t)))
    }
}
