use crate::model::{Gradients, ModelParams};
use crate::numkernel::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Sgd,
    /// Adam with β1 = 0.9, β2 = 0.999, ε = 1e-8.
    Adaptive,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
    steps: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &ModelParams) -> Self {
        let moments = match kind {
            OptimizerKind::Sgd => Vec::new(),
            OptimizerKind::Adaptive => {
                params.tensors().iter().map(|t| (vec![0.0; t.len()], vec![0.0; t.len()])).collect()
            }
        };
        Optimizer { kind, lr, moments, steps: 0 }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) {
        self.steps += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (i, g) in grads.iter() {
                    for (p, g) in params.tensors_mut()[i].data_mut().iter_mut().zip(g.data()) {
                        *p -= self.lr * g;
                    }
                }
            }
            OptimizerKind::Adaptive => {
                let c1 = 1.0 - BETA1.powi(self.steps);
                let c2 = 1.0 - BETA2.powi(self.steps);
                let dense = grads.to_dense();
                for ((t, g), (m, v)) in params.tensors_mut().iter_mut().zip(&dense).zip(&mut self.moments) {
                    for (k, p) in t.data_mut().iter_mut().enumerate() {
                        let g = g.data()[k];
                        m[k] = BETA1 * m[k] + (1.0 - BETA1) * g;
                        v[k] = BETA2 * v[k] + (1.0 - BETA2) * g * g;
                        *p -= self.lr * (m[k] / c1) / ((v[k] / c2).sqrt() + EPS);
                    }
                }
            }
        }
    }
}
