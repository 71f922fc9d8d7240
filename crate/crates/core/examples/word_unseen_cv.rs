//! Word-unseen cross-validation: every context of a target word lands in
//! the same fold, and each band is spread evenly across folds.

use std::collections::BTreeMap;

use contextcurate::demo::{learnable_bundles, toy_corpus, ToyCorpusSpec};
use contextcurate::eval::{
    check_plan, cross_validate, fold_counts, make_word_unseen_folds, CvInputs, CvSettings, HeadSettings, MetricReport,
    ModelSpec,
};
use contextcurate::head::TrainConfig;

fn main() -> contextcurate::Result<()> {
    let corpus = toy_corpus(
        ToyCorpusSpec {
            words_per_band: 7,
            bands: 4,
            contexts_per_word: 6,
            ..ToyCorpusSpec::default()
        },
        2,
    )?;
    let plan = make_word_unseen_folds(&corpus, 5, 2)?;
    check_plan(&corpus, &plan)?;
    for w in &plan.warnings {
        println!("warning: {w}");
    }

    let mut per_band: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for w in corpus.words() {
        let id = corpus.records().iter().find(|r| r.word() == w).expect("word has contexts").id();
        let fold = plan.assignment[id].expect("every context is in a fold");
        per_band.entry(w.band()).or_insert_with(|| vec![0; plan.n_folds()])[fold] += 1;
    }
    println!("words per fold, by band:");
    for (band, counts) in &per_band {
        println!("  band {band:>2}: {counts:?}");
    }
    for c in fold_counts(&plan) {
        println!("fold {}: train {:>3}, test {:>3}", c.fold, c.n_train, c.n_test);
    }

    let bundles = learnable_bundles(&corpus, 8, 0.1, 2)?;
    let outcome = cross_validate(
        &CvInputs {
            corpus: &corpus,
            features: None,
            bundles: &bundles,
        },
        &plan,
        &CvSettings {
            spec: ModelSpec::Supervised,
            head: HeadSettings {
                hidden_dims: vec![16],
                dropout: 0.0,
            },
            train: TrainConfig {
                epochs: 50,
                seed: 2,
                ..TrainConfig::default()
            },
            jobs: 4,
        },
    )?;
    let m = MetricReport::compute(&outcome.scored)?;
    let n = MetricReport::compute(&outcome.null_scored)?;
    println!("\npooled over {} contexts: R² {:.3}, rmse {:.3} (null R² {:.3})", m.n, m.r2, m.rmse, n.r2);
    Ok(())
}
