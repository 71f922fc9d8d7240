//! Validation splits, cross-validation, and regression metrics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::curate::{Scored, ScoredSet};
use crate::embed::{proximity, BundleSet, EmbeddingBundle};
use crate::error::{Error, LineError, Result};
use crate::features::{fit_normalizer, FeatureTable, NormStats};
use crate::head::{predict_batch, train, HeadConfig, MlpHead, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Test words never appear in training.
    WordUnseen,
    /// Held-out contexts of words that do appear in training.
    WordSeen,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::WordUnseen => "word_unseen",
            Regime::WordSeen => "word_seen",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    /// Proximity between the pooled word and context vectors, no training.
    Unsupervised,
    /// Head over the end-of-sequence vector.
    Supervised,
    /// Head over the end-of-sequence vector plus normalized features.
    Hybrid,
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelSpec::Unsupervised => "unsupervised",
            ModelSpec::Supervised => "supervised",
            ModelSpec::Hybrid => "hybrid",
        })
    }
}

impl FromStr for ModelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unsupervised" => Ok(ModelSpec::Unsupervised),
            "supervised" => Ok(ModelSpec::Supervised),
            "hybrid" => Ok(ModelSpec::Hybrid),
            other => Err(Error::invalid(format!("unknown model spec '{other}'"))),
        }
    }
}

/// Assignment of contexts to test folds. `None` means the context is only
/// ever used for training (word-seen remainder).
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub regime: Regime,
    pub k: usize,
    pub holdout_fraction: Option<f64>,
    pub assignment: BTreeMap<String, Option<usize>>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl FoldPlan {
    pub fn n_folds(&self) -> usize {
        self.k
    }

    pub fn test_ids(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, f)| **f == Some(fold))
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn train_ids(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, f)| **f != Some(fold))
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// All ids that land in some test fold.
    pub fn holdout_ids(&self) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, f)| f.is_some())
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// `context_id,fold`, with -1 for train-only contexts.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| Error::invalid(format!("writing fold plan: {e}"));
        w.write_record(["context_id", "fold"]).map_err(to_err)?;
        for (id, f) in &self.assignment {
            let fold = f.map_or_else(|| "-1".to_string(), |f| f.to_string());
            w.write_record([id.as_str(), fold.as_str()]).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::invalid(format!("writing fold plan: {e}")))
    }

    /// Rebuilds a plan from its CSV form. `k` is taken as one more than the
    /// largest fold index.
    pub fn read_csv<R: Read>(reader: R, path: &Path, regime: Regime, seed: u64) -> Result<FoldPlan> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut errors = Vec::new();
        match rdr.headers() {
            Ok(h) if h.iter().eq(["context_id", "fold"]) => {}
            Ok(h) => errors.push(LineError {
                line: 1,
                message: format!("expected header context_id,fold, got {}", h.iter().collect::<Vec<_>>().join(",")),
            }),
            Err(e) => errors.push(LineError {
                line: 1,
                message: e.to_string(),
            }),
        }
        let mut assignment = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = match rec {
                Ok(r) => r,
                Err(e) => {
                    errors.push(LineError {
                        line,
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            let fold = match rec.get(1).map(str::trim).map(str::parse::<i64>) {
                Some(Ok(-1)) => None,
                Some(Ok(f)) if f >= 0 => Some(f as usize),
                _ => {
                    errors.push(LineError {
                        line,
                        message: "fold must be an integer >= -1".into(),
                    });
                    continue;
                }
            };
            let id = rec.get(0).unwrap_or_default().to_string();
            if assignment.insert(id.clone(), fold).is_some() {
                errors.push(LineError {
                    line,
                    message: format!("duplicate context id '{id}'"),
                });
            }
        }
        if !errors.is_empty() {
            return Err(Error::Input {
                path: path.to_path_buf(),
                errors,
            });
        }
        let k = assignment.values().flatten().max().map_or(0, |m| m + 1);
        Ok(FoldPlan {
            regime,
            k,
            holdout_fraction: None,
            assignment,
            seed,
            warnings: Vec::new(),
        })
    }
}

fn words_by_band(corpus: &Corpus) -> BTreeMap<u8, Vec<&str>> {
    let mut bands: BTreeMap<u8, Vec<&str>> = BTreeMap::new();
    for w in corpus.words() {
        bands.entry(w.band()).or_default().push(w.lemma());
    }
    for words in bands.values_mut() {
        words.sort_unstable();
    }
    bands
}

/// Band-stratified grouped folds: within each band the words are shuffled
/// and dealt round-robin into `k` groups. The dealing position carries over
/// from one band to the next so fold sizes stay balanced overall.
pub fn make_word_unseen_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2, got {k}")));
    }
    let n_words = corpus.words().len();
    if n_words < k {
        return Err(Error::invalid(format!("k = {k} exceeds the number of words ({n_words})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let mut word_fold: BTreeMap<&str, usize> = BTreeMap::new();
    let mut offset = 0;
    for (band, mut words) in words_by_band(corpus) {
        if words.len() < k {
            let msg = format!("band {band} has {} word(s), fewer than k = {k}; some folds get none", words.len());
            warn!("{msg}");
            warnings.push(msg);
        }
        words.shuffle(&mut rng);
        for (i, w) in words.iter().enumerate() {
            word_fold.insert(w, (offset + i) % k);
        }
        offset = (offset + words.len()) % k;
    }
    let assignment = corpus
        .records()
        .iter()
        .map(|r| (r.id().to_string(), Some(word_fold[r.word().lemma()])))
        .collect();
    Ok(FoldPlan {
        regime: Regime::WordUnseen,
        k,
        holdout_fraction: None,
        assignment,
        seed,
        warnings,
    })
}

/// Number of held-out contexts for a word with `n` contexts.
pub fn holdout_count(n: usize, fraction: f64) -> usize {
    if n < 2 {
        return 0;
    }
    ((fraction * n as f64).round() as usize).clamp(1, n - 1)
}

/// Per-word random holdout of `fraction` of each word's contexts, as a single
/// fold 0; the rest are train-only.
pub fn make_word_seen_split(corpus: &Corpus, fraction: f64, seed: u64) -> Result<FoldPlan> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("holdout fraction must be in (0, 1), got {fraction}")));
    }
    let mut by_word: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in corpus.records() {
        by_word.entry(r.word().lemma()).or_default().push(r.id());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let mut assignment = BTreeMap::new();
    for (word, mut ids) in by_word {
        ids.sort_unstable();
        if ids.len() < 2 {
            let msg = format!("word '{word}' has a single context; it stays in training");
            warn!("{msg}");
            warnings.push(msg);
        }
        ids.shuffle(&mut rng);
        let h = holdout_count(ids.len(), fraction);
        for (i, id) in ids.iter().enumerate() {
            assignment.insert(id.to_string(), if i < h { Some(0) } else { None });
        }
    }
    Ok(FoldPlan {
        regime: Regime::WordSeen,
        k: 1,
        holdout_fraction: Some(fraction),
        assignment,
        seed,
        warnings,
    })
}

/// Checks that the plan covers exactly the corpus and, for word-unseen
/// plans, that no word has contexts in more than one fold.
pub fn check_plan(corpus: &Corpus, plan: &FoldPlan) -> Result<()> {
    let corpus_ids: BTreeSet<&str> = corpus.ids().collect();
    let plan_ids: BTreeSet<&str> = plan.assignment.keys().map(String::as_str).collect();
    if let Some(id) = corpus_ids.difference(&plan_ids).next() {
        return Err(Error::invalid(format!("fold plan does not cover context '{id}'")));
    }
    if let Some(id) = plan_ids.difference(&corpus_ids).next() {
        return Err(Error::invalid(format!("fold plan names unknown context '{id}'")));
    }
    if let Some(f) = plan.assignment.values().flatten().find(|&&f| f >= plan.k) {
        return Err(Error::invalid(format!("fold index {f} out of range for k = {}", plan.k)));
    }
    if plan.regime == Regime::WordUnseen {
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for r in corpus.records() {
            let Some(f) = plan.assignment[r.id()] else {
                return Err(Error::invalid(format!("word-unseen plan leaves '{}' unassigned", r.id())));
            };
            let w = r.word().lemma();
            if let Some(&prev) = seen.get(w) {
                if prev != f {
                    return Err(Error::Leakage(format!(
                        "word '{w}' has contexts in folds {prev} and {f}"
                    )));
                }
            }
            seen.insert(w, f);
        }
    }
    Ok(())
}

/// Refuses to fit when any holdout id, or for word-unseen any holdout word,
/// is among the fitting ids.
fn leakage_guard(corpus: &Corpus, regime: Regime, train_ids: &[&str], test_ids: &[&str], fold: usize) -> Result<()> {
    let train: HashSet<&str> = train_ids.iter().copied().collect();
    if let Some(id) = test_ids.iter().find(|id| train.contains(*id)) {
        return Err(Error::Leakage(format!("fold {fold}: holdout context '{id}' is in the training set")));
    }
    if regime == Regime::WordUnseen {
        let lemma = |id: &str| corpus.get(id).map(|r| r.word().lemma());
        let train_words: HashSet<&str> = train_ids.iter().filter_map(|id| lemma(id)).collect();
        for id in test_ids {
            if let Some(w) = lemma(id).filter(|w| train_words.contains(w)) {
                return Err(Error::Leakage(format!(
                    "fold {fold}: holdout word '{w}' also appears in training"
                )));
            }
        }
    }
    Ok(())
}

/// Head architecture apart from the input width, which follows from the
/// model spec and the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadSettings {
    pub hidden_dims: Vec<usize>,
    pub dropout: f64,
}

impl Default for HeadSettings {
    fn default() -> Self {
        let c = HeadConfig::new(1);
        HeadSettings {
            hidden_dims: c.hidden_dims,
            dropout: c.dropout,
        }
    }
}

impl HeadSettings {
    pub fn config(&self, input_dim: usize) -> HeadConfig {
        HeadConfig::new(input_dim)
            .with_hidden(self.hidden_dims.clone())
            .with_dropout(self.dropout)
    }
}

fn eos_of(bundle: &EmbeddingBundle) -> Result<&[f64]> {
    bundle.eos().ok_or_else(|| {
        Error::Embedding(format!(
            "bundle '{}' has no end-of-sequence vector",
            bundle.context_id()
        ))
    })
}

fn bundle_for<'a>(bundles: &'a BundleSet, id: &str) -> Result<&'a EmbeddingBundle> {
    bundles
        .get(id)
        .ok_or_else(|| Error::Embedding(format!("no embedding bundle for context '{id}'")))
}

/// Head input for one context: the end-of-sequence vector, followed for the
/// hybrid spec by the normalized feature row.
pub fn model_input(
    spec: ModelSpec,
    bundle: &EmbeddingBundle,
    features: Option<(&FeatureTable, &NormStats)>,
) -> Result<Vec<f64>> {
    let mut x = eos_of(bundle)?.to_vec();
    if spec == ModelSpec::Hybrid {
        let (table, stats) = features.ok_or_else(|| Error::invalid("features required for the hybrid spec"))?;
        x.extend(table.normalized(stats, bundle.context_id())?);
    }
    Ok(x)
}

/// Scores contexts with an already-trained head (or with proximity for the
/// unsupervised spec).
pub fn score_contexts(
    corpus: &Corpus,
    bundles: &BundleSet,
    spec: ModelSpec,
    head: Option<&MlpHead>,
    features: Option<(&FeatureTable, &NormStats)>,
    ids: &[&str],
) -> Result<BTreeMap<String, f64>> {
    match spec {
        ModelSpec::Unsupervised => ids
            .iter()
            .map(|&id| {
                let r = corpus
                    .get(id)
                    .ok_or_else(|| Error::invalid(format!("unknown context '{id}'")))?;
                Ok((id.to_string(), proximity(r, bundle_for(bundles, id)?)?))
            })
            .collect(),
        ModelSpec::Supervised | ModelSpec::Hybrid => {
            let head = head.ok_or_else(|| Error::invalid("a trained head is required"))?;
            let inputs = ids
                .iter()
                .map(|&id| Ok((id, model_input(spec, bundle_for(bundles, id)?, features)?)))
                .collect::<Result<Vec<_>>>()?;
            predict_batch(head, inputs.iter().map(|(id, x)| (*id, x.as_slice())))
        }
    }
}

pub struct CvInputs<'a> {
    pub corpus: &'a Corpus,
    pub features: Option<&'a FeatureTable>,
    pub bundles: &'a BundleSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSettings {
    pub spec: ModelSpec,
    pub head: HeadSettings,
    pub train: TrainConfig,
    /// Worker threads for running folds; 1 runs them in order on the caller.
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub norm: Option<NormStats>,
    pub epoch_losses: Vec<f64>,
    /// Mean training gold, i.e. the null model's constant prediction.
    pub train_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// Pooled out-of-sample predictions, ordered by context id.
    pub scored: ScoredSet,
    /// The per-fold training-mean predictor on the same ids.
    pub null_scored: ScoredSet,
    pub folds: Vec<FoldResult>,
}

/// Seed for fold `fold`'s head, derived from the run seed.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

struct FoldOutput {
    result: FoldResult,
    predictions: BTreeMap<String, f64>,
}

fn run_fold(inputs: &CvInputs<'_>, plan: &FoldPlan, settings: &CvSettings, fold: usize) -> Result<FoldOutput> {
    let corpus = inputs.corpus;
    let test_ids = plan.test_ids(fold);
    let train_ids = plan.train_ids(fold);
    leakage_guard(corpus, plan.regime, &train_ids, &test_ids, fold)?;
    if train_ids.is_empty() {
        return Err(Error::invalid(format!("fold {fold} has no training contexts")));
    }
    let gold = |id: &str| corpus.get(id).map(|r| r.gold());
    let train_mean = train_ids.iter().filter_map(|id| gold(id)).sum::<f64>() / train_ids.len() as f64;

    let mut norm = None;
    let mut epoch_losses = Vec::new();
    let predictions = match settings.spec {
        ModelSpec::Unsupervised => score_contexts(corpus, inputs.bundles, settings.spec, None, None, &test_ids)?,
        ModelSpec::Supervised | ModelSpec::Hybrid => {
            let features = if settings.spec == ModelSpec::Hybrid {
                let table = inputs
                    .features
                    .ok_or_else(|| Error::invalid("features required for the hybrid spec"))?;
                norm = Some(fit_normalizer(table, train_ids.iter().copied())?);
                Some(table)
            } else {
                None
            };
            let feat = features.zip(norm.as_ref());
            let train_inputs: BTreeMap<String, Vec<f64>> = train_ids
                .iter()
                .map(|&id| Ok((id.to_string(), model_input(settings.spec, bundle_for(inputs.bundles, id)?, feat)?)))
                .collect::<Result<_>>()?;
            let input_dim = train_inputs.values().next().map_or(0, Vec::len);
            let cfg = TrainConfig {
                seed: fold_seed(settings.train.seed, fold),
                ..settings.train.clone()
            };
            let outcome = train(&settings.head.config(input_dim), &train_inputs, &gold, &train_ids, &cfg)?;
            epoch_losses = outcome.epoch_losses;
            score_contexts(corpus, inputs.bundles, settings.spec, Some(&outcome.head), feat, &test_ids)?
        }
    };
    Ok(FoldOutput {
        result: FoldResult {
            fold,
            n_train: train_ids.len(),
            n_test: test_ids.len(),
            norm,
            epoch_losses,
            train_mean,
        },
        predictions,
    })
}

/// Runs every fold of `plan` and pools the out-of-sample predictions.
/// Normalizer and head are refit on each fold's training ids.
pub fn cross_validate(inputs: &CvInputs<'_>, plan: &FoldPlan, settings: &CvSettings) -> Result<CvOutcome> {
    check_plan(inputs.corpus, plan)?;
    if settings.spec == ModelSpec::Hybrid && inputs.features.is_none() {
        return Err(Error::invalid("features required for the hybrid spec"));
    }
    let folds: Vec<usize> = (0..plan.n_folds()).filter(|&f| !plan.test_ids(f).is_empty()).collect();
    let outputs: Vec<FoldOutput> = if settings.jobs <= 1 {
        folds
            .iter()
            .map(|&f| run_fold(inputs, plan, settings, f))
            .collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.jobs)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start {} workers: {e}", settings.jobs)))?;
        pool.install(|| {
            folds
                .par_iter()
                .map(|&f| run_fold(inputs, plan, settings, f))
                .collect::<Result<_>>()
        })?
    };

    let mut pooled = Vec::new();
    for out in &outputs {
        for (id, &score) in &out.predictions {
            let gold = inputs.corpus.get(id).map(|r| r.gold()).expect("plan checked against corpus");
            pooled.push(Scored {
                id: id.clone(),
                score,
                gold,
            });
        }
    }
    let scored = ScoredSet::new(pooled)
        .map_err(|e| Error::Invariant(format!("pooling predictions: {e}")))?
        .sorted_by_id();
    let null_scored = null_predictions(inputs.corpus, plan)?;
    if scored.len() != plan.holdout_ids().len() {
        return Err(Error::Invariant(format!(
            "{} predictions pooled for {} holdout contexts",
            scored.len(),
            plan.holdout_ids().len()
        )));
    }
    Ok(CvOutcome {
        scored,
        null_scored,
        folds: outputs.into_iter().map(|o| o.result).collect(),
    })
}

/// Out-of-sample predictions of the null model: each holdout context gets
/// the mean gold label of its fold's training contexts.
pub fn null_predictions(corpus: &Corpus, plan: &FoldPlan) -> Result<ScoredSet> {
    check_plan(corpus, plan)?;
    let mut out = Vec::new();
    for fold in 0..plan.n_folds() {
        let test = plan.test_ids(fold);
        if test.is_empty() {
            continue;
        }
        let train: Vec<f64> = plan
            .train_ids(fold)
            .iter()
            .filter_map(|id| corpus.get(id).map(|r| r.gold()))
            .collect();
        let nm = null_model(&train)?;
        for id in test {
            out.push(Scored {
                id: id.to_string(),
                score: nm.mean,
                gold: corpus.get(id).map(|r| r.gold()).expect("plan checked against corpus"),
            });
        }
    }
    Ok(ScoredSet::new(out)?.sorted_by_id())
}

/// Train and test sizes of one fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldCounts {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
}

pub fn fold_counts(plan: &FoldPlan) -> Vec<FoldCounts> {
    (0..plan.n_folds())
        .map(|fold| FoldCounts {
            fold,
            n_train: plan.train_ids(fold).len(),
            n_test: plan.test_ids(fold).len(),
        })
        .collect()
}

fn check_pairs(pred: &[f64], gold: &[f64]) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::invalid(format!("{} predictions for {} gold labels", pred.len(), gold.len())));
    }
    if pred.len() < 2 {
        return Err(Error::invalid("need at least 2 pairs"));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn rmse(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check_pairs(pred, gold)?;
    let sse: f64 = pred.iter().zip(gold).map(|(p, y)| (p - y).powi(2)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Coefficient of determination against the evaluated set's own gold mean.
pub fn r2(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check_pairs(pred, gold)?;
    let m = mean(gold);
    let sst: f64 = gold.iter().map(|y| (y - m).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::invalid("r2 is undefined for constant gold labels"));
    }
    let sse: f64 = pred.iter().zip(gold).map(|(p, y)| (p - y).powi(2)).sum();
    Ok(1.0 - sse / sst)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pairs(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("correlation is undefined for a constant input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties sharing the average of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pairs(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Constant predictor at the training mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullModel {
    pub mean: f64,
}

impl NullModel {
    pub fn predict(&self, n: usize) -> Vec<f64> {
        vec![self.mean; n]
    }
}

pub fn null_model(train_golds: &[f64]) -> Result<NullModel> {
    if train_golds.is_empty() {
        return Err(Error::invalid("null model needs at least one training label"));
    }
    Ok(NullModel { mean: mean(train_golds) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub n: usize,
    pub rmse: f64,
    pub r2: f64,
    /// NaN when either side is constant.
    pub pearson_r: f64,
    pub spearman_rho: f64,
}

impl MetricReport {
    pub fn compute(scored: &ScoredSet) -> Result<Self> {
        let (p, g) = (scored.scores(), scored.golds());
        Ok(MetricReport {
            n: p.len(),
            rmse: rmse(&p, &g)?,
            r2: r2(&p, &g)?,
            pearson_r: pearson(&p, &g).unwrap_or(f64::NAN),
            spearman_rho: spearman(&p, &g).unwrap_or(f64::NAN),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ContextRecord, Span, TargetWord};
    use crate::demo::{learnable_bundles, toy_corpus, ToyCorpusSpec};
    use proptest::prelude::*;

    fn corpus_with(words: &[(&str, u8, usize)]) -> Corpus {
        let mut recs = Vec::new();
        for &(w, band, n) in words {
            for j in 0..n {
                let snippet = format!("a {w} b");
                recs.push(
                    ContextRecord::new(
                        format!("{w}-{j:02}"),
                        TargetWord::new(w, band).unwrap(),
                        snippet,
                        vec![Span::new(2, 2 + w.len())],
                        vec![(j % 4) as i8 - 1],
                    )
                    .unwrap(),
                );
            }
        }
        Corpus::new(recs).unwrap()
    }

    fn words_in_fold(corpus: &Corpus, plan: &FoldPlan, f: usize) -> BTreeSet<String> {
        plan.test_ids(f)
            .iter()
            .map(|id| corpus.get(id).unwrap().word().lemma().to_string())
            .collect()
    }

    #[test]
    fn twenty_words_ten_folds() {
        let words: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let spec: Vec<(&str, u8, usize)> = words.iter().map(|w| (w.as_str(), 3, 2)).collect();
        let c = corpus_with(&spec);
        let plan = make_word_unseen_folds(&c, 10, 7).unwrap();
        for f in 0..10 {
            assert_eq!(words_in_fold(&c, &plan, f).len(), 2);
        }
        check_plan(&c, &plan).unwrap();
        assert!(plan.warnings.is_empty());
    }

    #[test]
    fn unseen_fold_preconditions() {
        let c = corpus_with(&[("a", 1, 2), ("b", 1, 2)]);
        assert!(make_word_unseen_folds(&c, 1, 0).is_err());
        assert!(make_word_unseen_folds(&c, 3, 0).is_err());
        let plan = make_word_unseen_folds(&c, 2, 0).unwrap();
        assert!(plan.warnings.is_empty());
        let c2 = corpus_with(&[("a", 1, 2), ("b", 1, 2), ("c", 2, 2)]);
        assert_eq!(make_word_unseen_folds(&c2, 2, 0).unwrap().warnings.len(), 1);
    }

    #[test]
    fn word_seen_rounding() {
        assert_eq!(holdout_count(13, 0.1), 1);
        assert_eq!(holdout_count(4, 0.5), 2);
        assert_eq!(holdout_count(2, 0.1), 1);
        assert_eq!(holdout_count(1, 0.5), 0);
        assert_eq!(holdout_count(3, 0.9), 2);
        assert_eq!(holdout_count(100, 0.1), 10);
    }

    #[test]
    fn word_seen_split() {
        let c = corpus_with(&[("a", 1, 13), ("b", 1, 4), ("c", 2, 1)]);
        let plan = make_word_seen_split(&c, 0.1, 5).unwrap();
        let held = |w: &str| plan.holdout_ids().iter().filter(|id| id.starts_with(&format!("{w}-"))).count();
        assert_eq!((held("a"), held("b"), held("c")), (1, 1, 0));
        assert_eq!(plan.warnings.len(), 1);
        assert_eq!(make_word_seen_split(&c, 0.1, 5).unwrap(), plan);
        let half = make_word_seen_split(&c, 0.5, 5).unwrap();
        let b_held = half.holdout_ids().iter().filter(|id| id.starts_with("b-")).count();
        assert_eq!(b_held, 2);
        check_plan(&c, &plan).unwrap();
        assert!(make_word_seen_split(&c, 1.0, 0).is_err());
        assert!(make_word_seen_split(&c, 0.0, 0).is_err());
    }

    #[test]
    fn fold_plan_csv_round_trip() {
        let c = corpus_with(&[("a", 1, 3), ("b", 1, 2)]);
        let plan = make_word_seen_split(&c, 0.4, 1).unwrap();
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("context_id,fold\n"));
        assert!(text.contains(",-1\n"));
        let back = FoldPlan::read_csv(buf.as_slice(), Path::new("folds.csv"), Regime::WordSeen, 1).unwrap();
        assert_eq!(back.assignment, plan.assignment);
        assert_eq!(back.k, 1);
        let bad = "context_id,fold\nx,zero\n";
        let err = FoldPlan::read_csv(bad.as_bytes(), Path::new("f.csv"), Regime::WordSeen, 0).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn corrupted_plan_trips_leakage_guard() {
        let c = corpus_with(&[("a", 1, 3), ("b", 1, 3), ("c", 1, 3), ("d", 1, 3)]);
        let mut plan = make_word_unseen_folds(&c, 2, 3).unwrap();
        let id = plan.test_ids(0)[0].to_string();
        plan.assignment.insert(id, Some(1));
        assert!(matches!(check_plan(&c, &plan), Err(Error::Leakage(_))));
        let train = plan.train_ids(0);
        let test = plan.test_ids(0);
        assert!(matches!(
            leakage_guard(&c, Regime::WordUnseen, &train, &test, 0),
            Err(Error::Leakage(_))
        ));
        assert!(matches!(
            leakage_guard(&c, Regime::WordSeen, &["a-00", "a-01"], &["a-01"], 0),
            Err(Error::Leakage(_))
        ));
    }

    #[test]
    fn metric_examples() {
        assert_eq!(rmse(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(r2(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(r2(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), -3.0);
        assert_eq!(r2(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(r2(&[0.5, 0.5], &[1.0, 1.0]).is_err());
        assert!(rmse(&[0.5], &[1.0]).is_err());

        let y = [0.1, -0.5, 1.2, 2.0, 0.7];
        assert_eq!(pearson(&y, &y).unwrap(), 1.0);
        assert_eq!(spearman(&y, &y).unwrap(), 1.0);
        let e: Vec<f64> = y.iter().map(|v: &f64| v.exp()).collect();
        assert!((spearman(&e, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!(pearson(&e, &y).unwrap() < 1.0);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        assert!((pearson(&neg, &y).unwrap() + 1.0).abs() < 1e-15);
        assert!((spearman(&neg, &y).unwrap() + 1.0).abs() < 1e-15);
        assert!(pearson(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn null_model_examples() {
        let nm = null_model(&[0.0, 1.0]).unwrap();
        assert_eq!(nm.mean, 0.5);
        let train = [0.2, 1.4, -0.3, 0.9];
        let nm = null_model(&train).unwrap();
        assert_eq!(r2(&nm.predict(4), &train).unwrap(), 0.0);
        let shifted: Vec<f64> = train.iter().map(|v| v + 0.7).collect();
        assert!(r2(&nm.predict(4), &shifted).unwrap() <= 0.0);
        assert!(null_model(&[]).is_err());
        // rmse of the in-sample null model is the population sd
        let m = train.iter().sum::<f64>() / 4.0;
        let sd = (train.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!((rmse(&nm.predict(4), &train).unwrap() - sd).abs() < 1e-12);
    }

    fn toy() -> (Corpus, BundleSet) {
        let spec = ToyCorpusSpec {
            words_per_band: 2,
            bands: 2,
            contexts_per_word: 4,
            snippet_len: 8,
        };
        let c = toy_corpus(spec, 11).unwrap();
        let b = learnable_bundles(&c, 6, 0.05, 11).unwrap();
        (c, b)
    }

    fn settings(spec: ModelSpec) -> CvSettings {
        CvSettings {
            spec,
            head: HeadSettings {
                hidden_dims: vec![8],
                dropout: 0.0,
            },
            train: TrainConfig {
                epochs: 3,
                ..TrainConfig::default()
            },
            jobs: 1,
        }
    }

    #[test]
    fn unsupervised_cv_matches_proximity() {
        let (c, b) = toy();
        let plan = make_word_unseen_folds(&c, 2, 0).unwrap();
        let inputs = CvInputs {
            corpus: &c,
            features: None,
            bundles: &b,
        };
        let out = cross_validate(&inputs, &plan, &settings(ModelSpec::Unsupervised)).unwrap();
        assert_eq!(out.scored.len(), c.len());
        for e in out.scored.entries() {
            let r = c.get(&e.id).unwrap();
            assert_eq!(e.score, proximity(r, b.get(&e.id).unwrap()).unwrap());
            assert_eq!(e.gold, r.gold());
        }
    }

    #[test]
    fn hybrid_cv_refits_per_fold() {
        let (c, b) = toy();
        let table = crate::features::demo_features(&c);
        let plan = make_word_unseen_folds(&c, 2, 0).unwrap();
        let inputs = CvInputs {
            corpus: &c,
            features: Some(&table),
            bundles: &b,
        };
        let out = cross_validate(&inputs, &plan, &settings(ModelSpec::Hybrid)).unwrap();
        assert_eq!(out.scored.len(), c.len());
        assert_eq!(out.folds.len(), 2);
        assert_ne!(out.folds[0].norm, out.folds[1].norm);
        let no_feat = CvInputs { features: None, ..inputs };
        let err = cross_validate(&no_feat, &plan, &settings(ModelSpec::Hybrid)).unwrap_err();
        assert!(err.to_string().contains("features required"));
    }

    #[test]
    fn parallel_folds_match_sequential() {
        let (c, b) = toy();
        let plan = make_word_unseen_folds(&c, 2, 9).unwrap();
        let inputs = CvInputs {
            corpus: &c,
            features: None,
            bundles: &b,
        };
        let seq = cross_validate(&inputs, &plan, &settings(ModelSpec::Supervised)).unwrap();
        let par = cross_validate(&inputs, &plan, &CvSettings { jobs: 3, ..settings(ModelSpec::Supervised) }).unwrap();
        assert_eq!(seq, par);
    }

    proptest! {
        #[test]
        fn spearman_ignores_monotone_transforms(
            xs in prop::collection::vec(-5.0f64..5.0, 3..40),
            ys in prop::collection::vec(-5.0f64..5.0, 3..40),
            a in 0.1f64..3.0,
        ) {
            let n = xs.len().min(ys.len());
            let (x, y) = (&xs[..n], &ys[..n]);
            if let Ok(base) = spearman(x, y) {
                let tx: Vec<f64> = x.iter().map(|v| (a * v).exp()).collect();
                let ty: Vec<f64> = y.iter().map(|v| v.powi(3) + a * v).collect();
                let t = spearman(&tx, &ty).unwrap();
                prop_assert!((t - base).abs() < 1e-12);
            }
        }

        #[test]
        fn word_unseen_partition(seed in 0u64..1000, k in 2usize..6) {
            let c = toy_corpus(ToyCorpusSpec { words_per_band: 7, bands: 3, contexts_per_word: 2, snippet_len: 4 }, seed).unwrap();
            let plan = make_word_unseen_folds(&c, k, seed).unwrap();
            check_plan(&c, &plan).unwrap();
            let total: usize = (0..k).map(|f| plan.test_ids(f).len()).sum();
            prop_assert_eq!(total, c.len());
        }
    }
}
