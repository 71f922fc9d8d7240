#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};

use contextcurate::corpus::{write_corpus_jsonl, Corpus};
use contextcurate::demo::{learnable_bundles, toy_corpus, ToyCorpusSpec};
use contextcurate::features::{demo_features, write_features_csv};

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub corpus: Corpus,
    pub corpus_path: PathBuf,
    pub features_path: PathBuf,
    pub index_path: PathBuf,
}

impl Fixture {
    pub fn new(seed: u64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let corpus = toy_corpus(ToyCorpusSpec::default(), seed).unwrap();
        let corpus_path = dir.path().join("corpus.jsonl");
        write_corpus_jsonl(&corpus, File::create(&corpus_path).unwrap()).unwrap();
        let features_path = dir.path().join("features.csv");
        write_features_csv(&demo_features(&corpus), File::create(&features_path).unwrap()).unwrap();
        let index_path = dir.path().join("emb.index.jsonl");
        learnable_bundles(&corpus, 8, 0.1, seed)
            .unwrap()
            .save(&index_path, dir.path().join("emb.bin"))
            .unwrap();
        Fixture {
            dir,
            corpus,
            corpus_path,
            features_path,
            index_path,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
