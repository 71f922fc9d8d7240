//! Trains the regression head on end-of-sequence vectors, saves a
//! checkpoint and scores with the reloaded head.

use std::collections::BTreeMap;

use contextcurate::demo::{learnable_bundles, toy_corpus, ToyCorpusSpec};
use contextcurate::eval::{r2, ModelSpec, model_input};
use contextcurate::head::{load_checkpoint, predict_batch, save_checkpoint, train, HeadConfig, TrainConfig};

fn main() -> contextcurate::Result<()> {
    let spec = ToyCorpusSpec {
        words_per_band: 20,
        ..ToyCorpusSpec::default()
    };
    let corpus = toy_corpus(spec, 3)?;
    let bundles = learnable_bundles(&corpus, 12, 0.05, 3)?;

    let mut xs = BTreeMap::new();
    for rec in corpus.records() {
        let b = bundles.get(rec.id()).expect("bundle");
        xs.insert(rec.id().to_string(), model_input(ModelSpec::Supervised, b, None)?);
    }
    let ids: Vec<&str> = corpus.ids().collect();
    let (train_ids, test_ids) = ids.split_at(ids.len() * 4 / 5);

    let head_cfg = HeadConfig::new(12).with_hidden(vec![32, 16]).with_dropout(0.1);
    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 16,
        seed: 3,
        ..TrainConfig::default()
    };
    let gold = |id: &str| corpus.get(id).map(|r| r.gold());
    let out = train(&head_cfg, &xs, &gold, train_ids, &cfg)?;
    for (e, loss) in out.epoch_losses.iter().enumerate().step_by(10) {
        println!("epoch {:>3}  loss {:.5}", e + 1, loss);
    }

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("head.ckpt");
    save_checkpoint(&out.head, None, &path)?;
    let (head, _) = load_checkpoint(&path)?;
    println!("{} parameters, checkpoint {} bytes", head.n_params(), std::fs::metadata(&path).expect("ckpt").len());

    let preds = predict_batch(&head, test_ids.iter().map(|id| (*id, xs[*id].as_slice())))?;
    let p: Vec<f64> = test_ids.iter().map(|id| preds[*id]).collect();
    let g: Vec<f64> = test_ids.iter().map(|id| corpus.get(id).expect("id").gold()).collect();
    println!("held-out R² on {} contexts: {:.3}", p.len(), r2(&p, &g)?);
    Ok(())
}
