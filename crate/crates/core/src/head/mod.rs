//! Fusion regression head trained on frozen inputs.
//!
//! The head is a plain multilayer perceptron: each hidden layer is
//! linear -> ReLU -> dropout, and a final linear layer produces one unclamped
//! scalar. Parameters live in a single flat `Vec<f64>`, layer by layer, each
//! layer's weights row-major `[fan_out][fan_in]` followed by its biases. The
//! optimizer and the checkpoint format both use that order.
//!
//! The encoder that produced the input vectors is never updated; only the head
//! trains.

mod checkpoint;
mod optim;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use optim::{adamw_step, OptState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use train::{predict_batch, train, write_loss_trace, Inputs, TrainConfig, TrainOutcome};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub dropout: f64,
}

impl HeadConfig {
    /// Two 512-unit hidden layers with dropout 0.1.
    pub fn new(input_dim: usize) -> Self {
        HeadConfig {
            input_dim,
            hidden_dims: vec![512, 512],
            dropout: 0.1,
        }
    }

    pub fn with_hidden(mut self, hidden_dims: Vec<usize>) -> Self {
        self.hidden_dims = hidden_dims;
        self
    }

    pub fn with_dropout(mut self, dropout: f64) -> Self {
        self.dropout = dropout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::invalid("head input_dim must be positive"));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout {} outside [0,1)", self.dropout)));
        }
        Ok(())
    }

    /// Total number of weights and biases.
    pub fn n_params(&self) -> usize {
        self.layer_dims()
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend(&self.hidden_dims);
        dims.push(1);
        dims
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    /// Offset of the weight block in the flat parameter vector.
    w: usize,
    /// Offset of the bias block.
    b: usize,
}

fn layout(config: &HeadConfig) -> Vec<Layer> {
    let dims = config.layer_dims();
    let mut off = 0;
    dims.windows(2)
        .map(|w| {
            let layer = Layer {
                fan_in: w[0],
                fan_out: w[1],
                w: off,
                b: off + w[0] * w[1],
            };
            off = layer.b + w[1];
            layer
        })
        .collect()
}

/// How dropout behaves for a forward or backward call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dropout {
    /// Evaluation mode: no units dropped.
    Off,
    /// Training mode with masks drawn from this seed. For batch calls the masks
    /// are drawn sample by sample, layer by layer, from one stream.
    Seeded(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpHead {
    config: HeadConfig,
    seed: u64,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

/// He-uniform weights (bound `sqrt(6 / fan_in)`), zero biases.
pub fn init_head(config: &HeadConfig, seed: u64) -> Result<MlpHead> {
    config.validate()?;
    let layers = layout(config);
    let mut params = vec![0.0; config.n_params()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in &layers {
        let bound = (6.0 / l.fan_in as f64).sqrt();
        for p in &mut params[l.w..l.b] {
            *p = rng.gen_range(-bound..bound);
        }
    }
    Ok(MlpHead {
        config: config.clone(),
        seed,
        layers,
        params,
    })
}

impl MlpHead {
    /// Wraps an explicit parameter vector (layout as in the module docs).
    pub fn from_params(config: &HeadConfig, seed: u64, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if params.len() != config.n_params() {
            return Err(Error::invalid(format!(
                "{} parameters given, architecture needs {}",
                params.len(),
                config.n_params()
            )));
        }
        Ok(MlpHead {
            config: config.clone(),
            seed,
            layers: layout(config),
            params,
        })
    }

    pub fn config(&self) -> &HeadConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weight block of layer `l`, row-major `[fan_out][fan_in]`.
    pub fn weights(&self, l: usize) -> &[f64] {
        let layer = self.layers[l];
        &self.params[layer.w..layer.b]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let layer = self.layers[l];
        &self.params[layer.b..layer.b + layer.fan_out]
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.input_dim {
            return Err(Error::invalid(format!(
                "head input has length {}, expected {}",
                x.len(),
                self.config.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("head input contains a non-finite value"));
        }
        Ok(())
    }

    fn draw_masks(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let p = self.config.dropout;
        let keep = 1.0 / (1.0 - p);
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| {
                (0..l.fan_out)
                    .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
                    .collect()
            })
            .collect()
    }

    /// Runs the network, returning every layer's input plus the hidden
    /// pre-activations; the last element of `inputs` is the scalar output.
    fn run(&self, x: &[f64], masks: Option<&[Vec<f64>]>) -> Trace {
        let mut inputs = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        for (li, l) in self.layers.iter().enumerate() {
            let a = inputs.last().expect("non-empty");
            let w = &self.params[l.w..l.b];
            let b = &self.params[l.b..l.b + l.fan_out];
            let z: Vec<f64> = (0..l.fan_out)
                .map(|o| {
                    let row = &w[o * l.fan_in..(o + 1) * l.fan_in];
                    b[o] + row.iter().zip(a).map(|(wi, ai)| wi * ai).sum::<f64>()
                })
                .collect();
            if li + 1 == self.layers.len() {
                inputs.push(z);
            } else {
                let mut h: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
                if let Some(m) = masks {
                    h.iter_mut().zip(&m[li]).for_each(|(v, k)| *v *= k);
                }
                pre.push(z);
                inputs.push(h);
            }
        }
        Trace { inputs, pre }
    }

    /// Prediction for one input.
    pub fn forward(&self, x: &[f64], dropout: Dropout) -> Result<f64> {
        self.check_input(x)?;
        let masks = match dropout {
            Dropout::Off => None,
            Dropout::Seeded(seed) => Some(self.draw_masks(&mut ChaCha8Rng::seed_from_u64(seed))),
        };
        Ok(self.run(x, masks.as_deref()).output())
    }

    /// Mean Huber loss over a batch, masks drawn as in [`MlpHead::backward`].
    pub fn batch_loss(&self, inputs: &[&[f64]], targets: &[f64], beta: f64, dropout: Dropout) -> Result<f64> {
        check_batch(inputs, targets)?;
        let mut rng = mask_rng(dropout);
        let mut total = 0.0;
        for (x, &y) in inputs.iter().zip(targets) {
            self.check_input(x)?;
            let masks = rng.as_mut().map(|r| self.draw_masks(r));
            total += huber_loss(self.run(x, masks.as_deref()).output(), y, beta);
        }
        Ok(total / inputs.len() as f64)
    }

    /// Mean Huber loss over the batch and its exact gradient with respect to
    /// every parameter (same layout as [`MlpHead::params`]).
    pub fn backward(
        &self,
        inputs: &[&[f64]],
        targets: &[f64],
        beta: f64,
        dropout: Dropout,
    ) -> Result<(f64, Vec<f64>)> {
        check_batch(inputs, targets)?;
        let n = inputs.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut rng = mask_rng(dropout);
        let mut total = 0.0;
        for (x, &y) in inputs.iter().zip(targets) {
            self.check_input(x)?;
            let masks = rng.as_mut().map(|r| self.draw_masks(r));
            let trace = self.run(x, masks.as_deref());
            let pred = trace.output();
            total += huber_loss(pred, y, beta);

            let mut delta = vec![huber_grad(pred, y, beta) / n];
            for li in (0..self.layers.len()).rev() {
                let l = self.layers[li];
                if li + 1 < self.layers.len() {
                    // back through dropout and ReLU of this hidden layer
                    let z = &trace.pre[li];
                    for (o, d) in delta.iter_mut().enumerate() {
                        let m = masks.as_ref().map_or(1.0, |m| m[li][o]);
                        *d *= if z[o] > 0.0 { m } else { 0.0 };
                    }
                }
                let a = &trace.inputs[li];
                let w = &self.params[l.w..l.b];
                let mut prev = vec![0.0; l.fan_in];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grad[l.b + o] += d;
                    let gw = &mut grad[l.w + o * l.fan_in..l.w + (o + 1) * l.fan_in];
                    gw.iter_mut().zip(a).for_each(|(g, ai)| *g += d * ai);
                    let row = &w[o * l.fan_in..(o + 1) * l.fan_in];
                    prev.iter_mut().zip(row).for_each(|(p, wi)| *p += d * wi);
                }
                delta = prev;
            }
        }
        Ok((total / n, grad))
    }
}

struct Trace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Trace {
    fn output(&self) -> f64 {
        self.inputs.last().expect("non-empty")[0]
    }
}

fn mask_rng(dropout: Dropout) -> Option<ChaCha8Rng> {
    match dropout {
        Dropout::Off => None,
        Dropout::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    }
}

fn check_batch(inputs: &[&[f64]], targets: &[f64]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if inputs.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    Ok(())
}

/// Smooth-L1 (Huber) loss: quadratic inside `|e| < beta`, linear outside.
pub fn huber_loss(pred: f64, target: f64, beta: f64) -> f64 {
    let e = (pred - target).abs();
    if e < beta {
        0.5 * e * e / beta
    } else {
        e - 0.5 * beta
    }
}

/// d(huber_loss)/d(pred).
pub fn huber_grad(pred: f64, target: f64, beta: f64) -> f64 {
    let e = pred - target;
    if e.abs() < beta {
        e / beta
    } else {
        e.signum()
    }
}
