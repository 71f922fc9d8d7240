//! Hybrid model: the end-of-sequence embedding concatenated with
//! standardized tabular features, cross-validated against the
//! embedding-only model.

use contextcurate::demo::{learnable_bundles, toy_corpus, ToyCorpusSpec};
use contextcurate::eval::{cross_validate, make_word_unseen_folds, CvInputs, CvSettings, HeadSettings, MetricReport, ModelSpec};
use contextcurate::features::demo_features;
use contextcurate::head::TrainConfig;
use contextcurate::report::render_metrics_md;

fn main() -> contextcurate::Result<()> {
    let corpus = toy_corpus(
        ToyCorpusSpec {
            words_per_band: 10,
            bands: 3,
            ..ToyCorpusSpec::default()
        },
        5,
    )?;
    let bundles = learnable_bundles(&corpus, 8, 0.4, 5)?;
    let features = demo_features(&corpus);
    println!("features: {}", features.names().join(", "));

    let plan = make_word_unseen_folds(&corpus, 5, 5)?;
    let inputs = CvInputs {
        corpus: &corpus,
        features: Some(&features),
        bundles: &bundles,
    };
    let mut rows = Vec::new();
    for spec in [ModelSpec::Supervised, ModelSpec::Hybrid] {
        let outcome = cross_validate(
            &inputs,
            &plan,
            &CvSettings {
                spec,
                head: HeadSettings {
                    hidden_dims: vec![32],
                    dropout: 0.1,
                },
                train: TrainConfig {
                    epochs: 40,
                    seed: 5,
                    ..TrainConfig::default()
                },
                jobs: 2,
            },
        )?;
        if spec == ModelSpec::Hybrid {
            let norm = outcome.folds[0].norm.as_ref().expect("hybrid folds fit a normalizer");
            println!("fold 0 feature means: {:?}", norm.mean.iter().map(|m| (m * 100.0).round() / 100.0).collect::<Vec<_>>());
            rows.push(("null model", MetricReport::compute(&outcome.null_scored)?));
        }
        rows.push((if spec == ModelSpec::Hybrid { "hybrid" } else { "supervised" }, MetricReport::compute(&outcome.scored)?));
    }
    println!("\n{}", render_metrics_md(&rows));
    Ok(())
}
