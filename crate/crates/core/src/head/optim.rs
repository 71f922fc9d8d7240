use super::{MlpHead, TrainConfig};
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// AdamW moment accumulators, one slot per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl OptState {
    pub fn new(n_params: usize) -> Self {
        OptState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn for_head(head: &MlpHead) -> Self {
        OptState::new(head.n_params())
    }
}

/// One AdamW update with decoupled weight decay:
/// `θ ← θ − lr·m̂/(√v̂ + ε) − lr·wd·θ`, with bias-corrected moments.
pub fn adamw_step(head: &mut MlpHead, grads: &[f64], state: &mut OptState, cfg: &TrainConfig) -> Result<()> {
    let n = head.n_params();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::invalid(format!(
            "shape mismatch: {n} parameters, {} gradients, {}/{} moments",
            grads.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - ADAM_BETA1.powi(t);
    let bc2 = 1.0 - ADAM_BETA2.powi(t);
    let lr = cfg.learning_rate;
    let decay = lr * cfg.weight_decay;
    for (((p, &g), m), v) in head
        .params_mut()
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS) + decay * *p;
    }
    Ok(())
}
