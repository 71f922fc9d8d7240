//! End to end through the command-line entry point: writes toy inputs,
//! runs `cv` into a run directory and prints the report.

use std::fs::{self, File};

use contextcurate::cli::main_with_args;
use contextcurate::corpus::write_corpus_jsonl;
use contextcurate::demo::{learnable_bundles, toy_corpus, ToyCorpusSpec};
use contextcurate::features::{demo_features, write_features_csv};

fn main() -> contextcurate::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let corpus = toy_corpus(ToyCorpusSpec::default(), 42)?;
    write_corpus_jsonl(&corpus, File::create(p("corpus.jsonl")).expect("create")).expect("write corpus");
    write_features_csv(&demo_features(&corpus), File::create(p("features.csv")).expect("create"))?;
    learnable_bundles(&corpus, 8, 0.1, 42)?.save(p("emb.index.jsonl"), p("emb.bin"))?;

    let run = p("run");
    let code = main_with_args([
        "contextcurate",
        "--jobs",
        "2",
        "cv",
        "--corpus",
        &p("corpus.jsonl"),
        "--features",
        &p("features.csv"),
        "--bundles",
        &p("emb.index.jsonl"),
        "--model",
        "hybrid",
        "--k",
        "4",
        "--hidden",
        "16",
        "--epochs",
        "20",
        "--seed",
        "42",
        "--out",
        &run,
    ]);
    assert_eq!(code, 0, "cv failed");

    let mut names: Vec<String> = fs::read_dir(&run)
        .expect("run dir")
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    println!("run directory: {}\n", names.join(", "));
    println!("{}", fs::read_to_string(format!("{run}/report.md")).expect("report"));

    // the report is reproducible from the run directory alone
    let before = fs::read(format!("{run}/report.md")).expect("report");
    assert_eq!(main_with_args(["contextcurate", "report", "--run", &run]), 0);
    assert_eq!(before, fs::read(format!("{run}/report.md")).expect("report"));
    Ok(())
}
