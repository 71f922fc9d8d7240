//! Unsupervised scoring: cosine between the pooled target-word tokens and
//! the pooled rest of the context.

use contextcurate::demo::{learnable_bundles, toy_corpus, ToyCorpusSpec};
use contextcurate::embed::{pool_pair, proximity, word_token_indices};
use contextcurate::eval::spearman;

fn main() -> contextcurate::Result<()> {
    let corpus = toy_corpus(ToyCorpusSpec::default(), 7)?;
    let bundles = learnable_bundles(&corpus, 16, 0.1, 7)?;

    println!("{:<10} {:>6} {:>10} {:>6}", "context", "gold", "proximity", "word");
    let mut scores = Vec::new();
    let mut golds = Vec::new();
    for (i, rec) in corpus.records().iter().enumerate() {
        let bundle = bundles.get(rec.id()).expect("one bundle per context");
        let score = proximity(rec, bundle)?;
        scores.push(score);
        golds.push(rec.gold());
        if i < 8 {
            let word = word_token_indices(rec, bundle)?;
            let pair = pool_pair(bundle, &word)?;
            println!(
                "{:<10} {:>6.2} {:>10.4} {:>6}",
                rec.id(),
                rec.gold(),
                score,
                format!("{}/{}", word.len(), bundle.n_tokens()),
            );
            debug_assert_eq!(pair.word_vec.len(), bundle.dim());
        }
    }
    // the synthetic encoder carries no signal about quality, so expect ~0
    println!("\nspearman(proximity, gold) over {} contexts: {:.3}", scores.len(), spearman(&scores, &golds)?);
    Ok(())
}
