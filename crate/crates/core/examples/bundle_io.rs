//! Writes token-level embedding bundles to disk and reads them back.

use std::fs;

use contextcurate::demo::{learnable_bundles, toy_corpus, ToyCorpusSpec};
use contextcurate::embed::BundleSet;

fn main() -> contextcurate::Result<()> {
    let corpus = toy_corpus(ToyCorpusSpec::default(), 1)?;
    let bundles = learnable_bundles(&corpus, 8, 0.05, 1)?;

    let dir = tempfile::tempdir().expect("temp dir");
    let index = dir.path().join("toy.index.jsonl");
    let payload = BundleSet::payload_path(&index);
    bundles.save(&index, &payload)?;

    let text = fs::read_to_string(&index).expect("index written");
    let first = text.lines().next().unwrap_or_default();
    println!("{} bundles, payload {} bytes", bundles.len(), fs::metadata(&payload).expect("payload").len());
    println!("first index line:\n{}...", &first[..first.len().min(160)]);

    let back = BundleSet::load(&index, &payload)?;
    let same = bundles.iter().all(|b| back.get(b.context_id()) == Some(b));
    println!("reloaded {} bundles, identical: {same}", back.len());

    let b = back.get("w1x0-0").expect("known id");
    println!(
        "w1x0-0: {} tokens x {} dims, eos {:?}, variant {:?}",
        b.n_tokens(),
        b.dim(),
        b.eos().map(|e| &e[..3]),
        b.prompt_variant()
    );
    Ok(())
}
