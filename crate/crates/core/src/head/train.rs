use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adamw_step, init_head, Dropout, HeadConfig, MlpHead, OptState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// 1e-3 suits a freshly initialized head on frozen inputs; 1e-5 is the
    /// usual value when the encoder is fine-tuned too.
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub huber_beta: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            weight_decay: 0.01,
            batch_size: 16,
            epochs: 2,
            huber_beta: 1.0,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::invalid("weight_decay must be non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.huber_beta > 0.0) {
            return Err(Error::invalid("huber_beta must be positive"));
        }
        Ok(())
    }
}

/// Lookup of an input vector by context id.
pub trait Inputs {
    fn input(&self, id: &str) -> Option<&[f64]>;
}

impl Inputs for HashMap<String, Vec<f64>> {
    fn input(&self, id: &str) -> Option<&[f64]> {
        self.get(id).map(Vec::as_slice)
    }
}

impl Inputs for BTreeMap<String, Vec<f64>> {
    fn input(&self, id: &str) -> Option<&[f64]> {
        self.get(id).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub head: MlpHead,
    /// Mean training loss of each epoch, in order.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch AdamW training on `train_ids`.
///
/// The ids are sorted before use, so the result depends only on the id set,
/// the data and `cfg.seed`.
pub fn train<I, L>(
    head_config: &HeadConfig,
    inputs: &I,
    labels: &L,
    train_ids: &[&str],
    cfg: &TrainConfig,
) -> Result<TrainOutcome>
where
    I: Inputs + ?Sized,
    L: Fn(&str) -> Option<f64>,
{
    cfg.validate()?;
    let mut ids: Vec<&str> = train_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut rows: Vec<(&[f64], f64)> = Vec::with_capacity(ids.len());
    for id in &ids {
        let x = inputs
            .input(id)
            .ok_or_else(|| Error::invalid(format!("no input vector for training id '{id}'")))?;
        let y = labels(id).ok_or_else(|| Error::invalid(format!("no label for training id '{id}'")))?;
        rows.push((x, y));
    }

    let mut head = init_head(head_config, cfg.seed)?;
    let mut state = OptState::for_head(&head);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed_5eed_5eed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    if rows.is_empty() && cfg.epochs > 0 {
        return Err(Error::invalid("no training rows"));
    }

    for _ in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| rows[i].0).collect();
            let ys: Vec<f64> = chunk.iter().map(|&i| rows[i].1).collect();
            let dropout = Dropout::Seeded(rng.next_u64());
            let (loss, grads) = head.backward(&xs, &ys, cfg.huber_beta, dropout)?;
            adamw_step(&mut head, &grads, &mut state, cfg)?;
            total += loss * chunk.len() as f64;
        }
        epoch_losses.push(total / rows.len() as f64);
    }
    Ok(TrainOutcome { head, epoch_losses })
}

/// Evaluation-mode predictions, unclamped.
pub fn predict_batch<'a>(
    head: &MlpHead,
    inputs: impl IntoIterator<Item = (&'a str, &'a [f64])>,
) -> Result<BTreeMap<String, f64>> {
    inputs
        .into_iter()
        .map(|(id, x)| Ok((id.to_string(), head.forward(x, Dropout::Off)?)))
        .collect()
}

/// Loss trace as CSV `epoch,mean_loss`, epochs counted from 1.
pub fn write_loss_trace<W: Write>(losses: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "epoch,mean_loss")?;
    for (i, l) in losses.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, l)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (HashMap<String, Vec<f64>>, HashMap<String, f64>) {
        let mut xs = HashMap::new();
        let mut ys = HashMap::new();
        for i in 0..40 {
            let a = (i as f64 * 0.37).sin();
            let b = (i as f64 * 0.11).cos();
            xs.insert(format!("c{i}"), vec![a, b]);
            ys.insert(format!("c{i}"), 0.8 * a - 0.3 * b + 0.2);
        }
        (xs, ys)
    }

    #[test]
    fn zero_epochs_returns_initial_head() {
        let (xs, ys) = toy();
        let cfg = TrainConfig {
            epochs: 0,
            seed: 4,
            ..TrainConfig::default()
        };
        let hc = HeadConfig::new(2).with_hidden(vec![8]);
        let ids: Vec<&str> = xs.keys().map(String::as_str).collect();
        let out = train(&hc, &xs, &|id: &str| ys.get(id).copied(), &ids, &cfg).unwrap();
        assert_eq!(out.head, init_head(&hc, 4).unwrap());
        assert!(out.epoch_losses.is_empty());
    }

    #[test]
    fn training_is_seed_deterministic_and_order_free() {
        let (xs, ys) = toy();
        let cfg = TrainConfig {
            epochs: 5,
            seed: 1,
            ..TrainConfig::default()
        };
        let hc = HeadConfig::new(2).with_hidden(vec![8, 4]);
        let mut ids: Vec<&str> = xs.keys().map(String::as_str).collect();
        let label = |id: &str| ys.get(id).copied();
        let a = train(&hc, &xs, &label, &ids, &cfg).unwrap();
        ids.reverse();
        let b = train(&hc, &xs, &label, &ids, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.epoch_losses.len(), 5);
        let c = train(&hc, &xs, &label, &ids, &TrainConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(a.head, c.head);
    }

    #[test]
    fn loss_goes_down_on_an_easy_task() {
        let (xs, ys) = toy();
        let cfg = TrainConfig {
            epochs: 60,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let hc = HeadConfig::new(2).with_hidden(vec![16]).with_dropout(0.0);
        let ids: Vec<&str> = xs.keys().map(String::as_str).collect();
        let out = train(&hc, &xs, &|id: &str| ys.get(id).copied(), &ids, &cfg).unwrap();
        assert!(out.epoch_losses.last().unwrap() < &(out.epoch_losses[0] * 0.2));
    }

    #[test]
    fn missing_rows_are_errors() {
        let (xs, ys) = toy();
        let hc = HeadConfig::new(2).with_hidden(vec![4]);
        let cfg = TrainConfig::default();
        let label = |id: &str| ys.get(id).copied();
        assert!(train(&hc, &xs, &label, &["c1", "nope"], &cfg).is_err());
        assert!(train(&hc, &xs, &|_: &str| None, &["c1"], &cfg).is_err());
    }

    #[test]
    fn predict_batch_examples() {
        let hc = HeadConfig::new(2).with_hidden(vec![4]);
        let head = init_head(&hc, 0).unwrap();
        let none: Vec<(&str, &[f64])> = vec![];
        assert!(predict_batch(&head, none).unwrap().is_empty());
        let x = [0.5, -0.25];
        let one = predict_batch(&head, [("a", x.as_slice())]).unwrap();
        assert_eq!(one["a"], head.forward(&x, Dropout::Off).unwrap());
    }

    #[test]
    fn loss_trace_csv() {
        let mut buf = Vec::new();
        write_loss_trace(&[0.5, 0.25], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,mean_loss\n1,0.5\n2,0.25\n");
    }
}
