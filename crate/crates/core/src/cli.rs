//! Run configuration and the subcommands behind the `contextcurate` binary.
//!
//! Settings resolve in this order, later winning: built-in defaults, the
//! `--config` TOML file, the `CONTEXTCURATE_SEED` environment variable (seed
//! only), command-line flags. The resolved configuration is echoed into every
//! run directory as `config.toml`. The output directory and `--jobs` are left
//! out of the echo because they do not affect any result.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus_with_warnings, Corpus};
use crate::curate::{default_threshold_grid, parse_grid, rcc, reference_point, sweep, ScoredSet, SweepOptions, REFERENCE_THROWOUT};
use crate::embed::BundleSet;
use crate::error::{Error, Result};
use crate::eval::{
    cross_validate, fold_counts, make_word_seen_split, make_word_unseen_folds, null_predictions, score_contexts,
    CvInputs, CvSettings, FoldPlan, HeadSettings, MetricReport, ModelSpec, Regime,
};
use crate::features::{fit_normalizer, load_features, FeatureTable};
use crate::head::{load_checkpoint, save_checkpoint, train, write_loss_trace, TrainConfig};
use crate::report::{
    read_predictions_csv, render_metrics_csv, render_predictions_csv, render_rcc_csv, render_rcc_svg,
    render_report_md, render_sweep_csv, write_artifact, RunReport,
};

pub const SEED_ENV: &str = "CONTEXTCURATE_SEED";
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub features: Option<PathBuf>,
    /// Bundle index file; the payload sits beside it.
    pub bundles: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub model_spec: ModelSpec,
    pub regime: Regime,
    pub k: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
    pub good_strict: bool,
    /// `lo:hi:step`; the default grid follows the score range.
    pub grid: Option<String>,
    pub reference_throwout: f64,
    pub head: HeadSettings,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            features: None,
            bundles: None,
            checkpoint: None,
            model_spec: ModelSpec::Unsupervised,
            regime: Regime::WordUnseen,
            k: 10,
            holdout_fraction: 0.1,
            seed: 0,
            good_strict: false,
            grid: None,
            reference_throwout: REFERENCE_THROWOUT,
            head: HeadSettings::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always serializable")
    }

    /// Applies an env-var seed (if set) and then the command-line overrides.
    pub fn resolve(mut self, env_seed: Option<&str>, o: &Overrides) -> Result<Self> {
        if let Some(s) = env_seed {
            self.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{SEED_ENV}='{s}' is not an unsigned integer")))?;
        }
        macro_rules! set {
            ($($src:ident => $($dst:ident).+),* $(,)?) => {
                $(if let Some(v) = &o.$src { self.$($dst).+ = v.clone().into(); })*
            };
        }
        set!(
            corpus => corpus,
            features => features,
            bundles => bundles,
            checkpoint => checkpoint,
            model => model_spec,
            regime => regime,
            k => k,
            fraction => holdout_fraction,
            seed => seed,
            grid => grid,
            reference_throwout => reference_throwout,
            hidden => head.hidden_dims,
            dropout => head.dropout,
            epochs => train.epochs,
            learning_rate => train.learning_rate,
            weight_decay => train.weight_decay,
            batch_size => train.batch_size,
        );
        if o.good_strict {
            self.good_strict = true;
        }
        self.train.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.head.config(1).validate()?;
        if let Some(g) = &self.grid {
            parse_grid(g)?;
        }
        if !(0.0..=1.0).contains(&self.reference_throwout) {
            return Err(Error::invalid("reference_throwout must be in [0, 1]"));
        }
        Ok(())
    }

    fn required(&self, path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        let p = path
            .clone()
            .ok_or_else(|| Error::invalid(format!("{what} required (--{what} or config)")))?;
        if !p.exists() {
            return Err(Error::invalid(format!("{what} file {} does not exist", p.display())));
        }
        Ok(p)
    }

    fn check_features_for_spec(&self) -> Result<()> {
        if self.model_spec == ModelSpec::Hybrid && self.features.is_none() {
            return Err(Error::invalid("features required for the hybrid spec (--features)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Corpus file (.jsonl or .csv).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Feature table CSV.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Embedding bundle index (.index.jsonl).
    #[arg(long)]
    pub bundles: Option<PathBuf>,
    /// Head checkpoint to write (train) or read (score).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelSpec>,
    #[arg(long, value_enum)]
    pub regime: Option<Regime>,
    /// Folds for the word-unseen regime.
    #[arg(long)]
    pub k: Option<usize>,
    /// Per-word holdout fraction for the word-seen regime.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threshold grid as lo:hi:step.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub reference_throwout: Option<f64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Count only gold > 1 as good in the ratio.
    #[arg(long)]
    pub good_strict: bool,
}

#[derive(Debug, Parser)]
#[command(name = "contextcurate", version, about = "Score, train and curate vocabulary-teaching contexts")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for cross-validation folds.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and check all inputs, print the corpus summary.
    Validate {
        #[command(flatten)]
        o: Overrides,
    },
    /// Score every context; writes OUT/predictions.csv.
    Score {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a head on every context; writes the checkpoint and OUT/loss.csv.
    Train {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate and write a complete run directory.
    Cv {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep thresholds over a predictions file; writes sweep.csv, rcc.csv, rcc.svg.
    Sweep {
        #[command(flatten)]
        o: Overrides,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render the derived artifacts of an existing run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn base_config(cli: &Cli) -> Result<RunConfig> {
    match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

struct Inputs {
    corpus: Corpus,
    features: Option<FeatureTable>,
    bundles: Option<BundleSet>,
    warnings: Vec<String>,
}

fn load_inputs(cfg: &RunConfig, need_bundles: bool) -> Result<Inputs> {
    let corpus_path = cfg.required(&cfg.corpus, "corpus")?;
    let loaded = load_corpus_with_warnings(&corpus_path)?;
    let corpus = loaded.corpus;
    let mut warnings = loaded.warnings;

    let features = match &cfg.features {
        Some(_) => {
            let lf = load_features(cfg.required(&cfg.features, "features")?)?;
            warnings.extend(lf.warnings);
            let missing: Vec<&str> = corpus.ids().filter(|id| !lf.table.contains(id)).collect();
            if !missing.is_empty() {
                warnings.push(format!(
                    "feature table has no row for {} context(s): {}",
                    missing.len(),
                    missing.join(", ")
                ));
            }
            Some(lf.table)
        }
        None => None,
    };

    let bundles = match (&cfg.bundles, need_bundles) {
        (None, false) => None,
        _ => {
            let index = cfg.required(&cfg.bundles, "bundles")?;
            let set = BundleSet::load(&index, BundleSet::payload_path(&index))?;
            let missing: Vec<&str> = corpus.ids().filter(|id| set.get(id).is_none()).collect();
            if !missing.is_empty() {
                warnings.push(format!(
                    "no embedding bundle for {} context(s): {}",
                    missing.len(),
                    missing.join(", ")
                ));
            }
            Some(set)
        }
    };
    for w in &warnings {
        warn!("{w}");
    }
    Ok(Inputs {
        corpus,
        features,
        bundles,
        warnings,
    })
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<String> {
    let inputs = load_inputs(cfg, false)?;
    let mut out = inputs.corpus.summarize()?.render();
    out.push('\n');
    if let Some(t) = &inputs.features {
        out.push_str(&format!("features: {} rows x {} columns\n", t.len(), t.width()));
    }
    if let Some(b) = &inputs.bundles {
        out.push_str(&format!("bundles: {}\n", b.len()));
    }
    for w in &inputs.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    Ok(out)
}

pub fn cmd_score(cfg: &RunConfig, out: &Path) -> Result<String> {
    cfg.check_features_for_spec()?;
    let inputs = load_inputs(cfg, true)?;
    let bundles = inputs.bundles.as_ref().expect("bundles loaded");
    let ids: Vec<&str> = inputs.corpus.ids().collect();
    let scores = match cfg.model_spec {
        ModelSpec::Unsupervised => score_contexts(&inputs.corpus, bundles, cfg.model_spec, None, None, &ids)?,
        spec => {
            let ckpt = cfg.required(&cfg.checkpoint, "checkpoint")?;
            let (head, norm) = load_checkpoint(&ckpt)?;
            let features = match spec {
                ModelSpec::Hybrid => {
                    let norm = norm.ok_or_else(|| {
                        Error::invalid(format!("checkpoint {} carries no feature normalizer", ckpt.display()))
                    })?;
                    Some((inputs.features.expect("checked above"), norm))
                }
                _ => None,
            };
            let feat = features.as_ref().map(|(t, n)| (t, n));
            score_contexts(&inputs.corpus, bundles, spec, Some(&head), feat, &ids)?
        }
    };
    let scored = ScoredSet::new(
        scores
            .into_iter()
            .map(|(id, score)| {
                let gold = inputs.corpus.get(&id).map(|r| r.gold()).expect("scored ids come from the corpus");
                crate::curate::Scored { id, score, gold }
            })
            .collect(),
    )?;
    create_dir(out)?;
    write_artifact(out, "predictions.csv", &render_predictions_csv(&scored)?)?;
    Ok(format!("scored {} contexts -> {}\n", scored.len(), out.join("predictions.csv").display()))
}

pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<String> {
    if cfg.model_spec == ModelSpec::Unsupervised {
        return Err(Error::invalid("the unsupervised spec has nothing to train"));
    }
    cfg.check_features_for_spec()?;
    let inputs = load_inputs(cfg, true)?;
    let bundles = inputs.bundles.as_ref().expect("bundles loaded");
    let corpus = &inputs.corpus;
    let ids: Vec<&str> = corpus.ids().collect();
    let norm = match (&inputs.features, cfg.model_spec) {
        (Some(t), ModelSpec::Hybrid) => Some(fit_normalizer(t, ids.iter().copied())?),
        _ => None,
    };
    let feat = inputs.features.as_ref().zip(norm.as_ref());
    let mut xs = std::collections::BTreeMap::new();
    for &id in &ids {
        let b = bundles
            .get(id)
            .ok_or_else(|| Error::Embedding(format!("no embedding bundle for context '{id}'")))?;
        xs.insert(id.to_string(), crate::eval::model_input(cfg.model_spec, b, feat)?);
    }
    let dim = xs.values().next().map_or(0, Vec::len);
    let gold = |id: &str| corpus.get(id).map(|r| r.gold());
    let outcome = train(&cfg.head.config(dim), &xs, &gold, &ids, &cfg.train)?;
    create_dir(out)?;
    let ckpt = cfg.checkpoint.clone().unwrap_or_else(|| out.join("head.ckpt"));
    save_checkpoint(&outcome.head, norm.as_ref(), &ckpt)?;
    let mut trace = Vec::new();
    write_loss_trace(&outcome.epoch_losses, &mut trace).map_err(|e| Error::io(out.join("loss.csv"), e))?;
    write_artifact(out, "loss.csv", &String::from_utf8(trace).expect("ascii"))?;
    Ok(format!(
        "trained {} parameters on {} contexts -> {}\n",
        outcome.head.n_params(),
        ids.len(),
        ckpt.display()
    ))
}

fn grid_for(cfg: &RunConfig, scored: &ScoredSet) -> Result<Vec<f64>> {
    match &cfg.grid {
        Some(g) => parse_grid(g),
        None => default_threshold_grid(&scored.scores()),
    }
}

/// sweep.csv, rcc.csv, rcc.svg for one scored set.
fn write_curation(cfg: &RunConfig, scored: &ScoredSet, dir: &Path) -> Result<(Vec<crate::curate::SweepRow>, crate::curate::RcCurve)> {
    let rows = sweep(
        scored,
        &grid_for(cfg, scored)?,
        SweepOptions {
            good_strict: cfg.good_strict,
        },
    )?;
    write_artifact(dir, "sweep.csv", &render_sweep_csv(&rows)?)?;
    let curve = rcc(&rows)?;
    write_artifact(dir, "rcc.csv", &render_rcc_csv(&curve))?;
    let label = cfg.model_spec.to_string();
    write_artifact(dir, "rcc.svg", &render_rcc_svg(&[(&label, &curve)], cfg.reference_throwout)?)?;
    Ok((rows, curve))
}

/// Everything in a run directory that follows from the config, the corpus,
/// the fold plan and the pooled predictions.
fn write_derived(
    cfg: &RunConfig,
    corpus: &Corpus,
    plan: &FoldPlan,
    scored: &ScoredSet,
    warnings: &[String],
    dir: &Path,
) -> Result<()> {
    let (rows, curve) = write_curation(cfg, scored, dir)?;
    let null = null_predictions(corpus, plan)?;
    let label = cfg.model_spec.to_string();
    let metrics = [
        (label.as_str(), MetricReport::compute(scored)?),
        ("null model", MetricReport::compute(&null)?),
    ];
    write_artifact(dir, "metrics.csv", &render_metrics_csv(&metrics))?;
    let summary = corpus.summarize()?;
    let config_toml = cfg.to_toml();
    let folds = fold_counts(plan);
    let report = RunReport {
        model_spec: label.clone(),
        summary: &summary,
        config_toml: &config_toml,
        seed: cfg.seed,
        sweep: &rows,
        curve: Some(&curve),
        reference: Some(reference_point(&rows, cfg.reference_throwout)?),
        reference_throwout: cfg.reference_throwout,
        metrics: &metrics,
        folds: &folds,
        warnings,
    };
    write_artifact(dir, "report.md", &render_report_md(&report))
}

fn make_plan(cfg: &RunConfig, corpus: &Corpus) -> Result<FoldPlan> {
    match cfg.regime {
        Regime::WordUnseen => make_word_unseen_folds(corpus, cfg.k, cfg.seed),
        Regime::WordSeen => make_word_seen_split(corpus, cfg.holdout_fraction, cfg.seed),
    }
}

/// Runs `body` against `dir`, leaving a `FAILED` marker with the error text
/// if it fails after the directory exists.
fn with_failure_marker<T>(dir: &Path, body: impl FnOnce() -> Result<T>) -> Result<T> {
    create_dir(dir)?;
    let marker = dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    let result = body();
    if let Err(e) = &result {
        let _ = fs::write(&marker, format!("{e}\n"));
    }
    result
}

pub fn cmd_cv(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<String> {
    cfg.check_features_for_spec()?;
    with_failure_marker(out, || {
        write_artifact(out, "config.toml", &cfg.to_toml())?;
        let inputs = load_inputs(cfg, true)?;
        let bundles = inputs.bundles.as_ref().expect("bundles loaded");
        let plan = make_plan(cfg, &inputs.corpus)?;
        let mut warnings = inputs.warnings.clone();
        warnings.extend(plan.warnings.iter().cloned());
        let mut folds_csv = Vec::new();
        plan.write_csv(&mut folds_csv)?;
        write_artifact(out, "folds.csv", &String::from_utf8(folds_csv).expect("csv is utf-8"))?;
        info!("running {} fold(s) with {} job(s)", plan.n_folds(), jobs.max(1));
        let outcome = cross_validate(
            &CvInputs {
                corpus: &inputs.corpus,
                features: inputs.features.as_ref(),
                bundles,
            },
            &plan,
            &CvSettings {
                spec: cfg.model_spec,
                head: cfg.head.clone(),
                train: cfg.train.clone(),
                jobs,
            },
        )?;
        write_artifact(out, "predictions.csv", &render_predictions_csv(&outcome.scored)?)?;
        write_derived(cfg, &inputs.corpus, &plan, &outcome.scored, &warnings, out)?;
        Ok(format!(
            "cv {} over {} fold(s), {} predictions -> {}\n",
            cfg.model_spec,
            plan.n_folds(),
            outcome.scored.len(),
            out.display()
        ))
    })
}

pub fn cmd_sweep(cfg: &RunConfig, predictions: &Path, out: &Path) -> Result<String> {
    let file = fs::File::open(predictions).map_err(|e| Error::io(predictions, e))?;
    let scored = read_predictions_csv(std::io::BufReader::new(file), predictions)?;
    if scored.is_empty() {
        return Err(Error::invalid(format!("{} has no predictions", predictions.display())));
    }
    create_dir(out)?;
    let (rows, curve) = write_curation(cfg, &scored, out)?;
    Ok(format!(
        "{} thresholds, AUC {:.4} -> {}\n",
        rows.len(),
        curve.auc,
        out.display()
    ))
}

/// Rebuilds sweep, curve, metrics and report from the run directory's
/// config.toml, folds.csv and predictions.csv.
pub fn cmd_report(run: &Path) -> Result<String> {
    let cfg = RunConfig::load(&run.join("config.toml"))?;
    let inputs = load_inputs(&cfg, false)?;
    let folds_path = run.join("folds.csv");
    let f = fs::File::open(&folds_path).map_err(|e| Error::io(&folds_path, e))?;
    let mut plan = FoldPlan::read_csv(f, &folds_path, cfg.regime, cfg.seed)?;
    if cfg.regime == Regime::WordUnseen {
        plan.k = plan.k.max(cfg.k);
    }
    let pred_path = run.join("predictions.csv");
    let f = fs::File::open(&pred_path).map_err(|e| Error::io(&pred_path, e))?;
    let scored = read_predictions_csv(f, &pred_path)?;
    let holdout: BTreeSet<&str> = plan.holdout_ids().into_iter().collect();
    let predicted: BTreeSet<&str> = scored.entries().iter().map(|e| e.id.as_str()).collect();
    if holdout != predicted {
        return Err(Error::invalid("predictions.csv does not match the holdout contexts in folds.csv"));
    }
    // plan warnings depend only on corpus, config and seed, so rebuild them
    let mut warnings = inputs.warnings.clone();
    warnings.extend(make_plan(&cfg, &inputs.corpus)?.warnings);
    write_derived(&cfg, &inputs.corpus, &plan, &scored, &warnings, run)?;
    Ok(format!("re-rendered {}\n", run.display()))
}

/// Executes a parsed command line. `env_seed` is the value of
/// `CONTEXTCURATE_SEED`, if set.
pub fn execute(cli: &Cli, env_seed: Option<&str>) -> Result<String> {
    let resolve = |o: &Overrides| base_config(cli)?.resolve(env_seed, o);
    match &cli.command {
        Command::Validate { o } => cmd_validate(&resolve(o)?),
        Command::Score { o, out } => cmd_score(&resolve(o)?, out),
        Command::Train { o, out } => cmd_train(&resolve(o)?, out),
        Command::Cv { o, out } => cmd_cv(&resolve(o)?, out, cli.jobs),
        Command::Sweep { o, predictions, out } => cmd_sweep(&resolve(o)?, predictions, out),
        Command::Report { run } => cmd_report(run),
    }
}

/// Parses `args`, runs the command, prints its output, and returns the
/// process exit code: 0 success, 1 input or usage error, 2 internal
/// invariant violation.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let env_seed = std::env::var(SEED_ENV).ok();
    match execute(&cli, env_seed.as_deref()) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = RunConfig {
            corpus: Some("data/c.jsonl".into()),
            grid: Some("0:1:0.1".into()),
            ..RunConfig::default()
        };
        let text = cfg.to_toml();
        assert!(text.contains("seed = 0"));
        assert!(!text.contains("features"));
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn resolution_order() {
        let base = RunConfig::from_toml("seed = 3\nk = 4\n").unwrap();
        let none = Overrides::default();
        assert_eq!(base.clone().resolve(None, &none).unwrap().seed, 3);
        let env = base.clone().resolve(Some("17"), &none).unwrap();
        assert_eq!((env.seed, env.train.seed), (17, 17));
        let flag = Overrides {
            seed: Some(5),
            hidden: Some(vec![8, 4]),
            epochs: Some(7),
            ..Overrides::default()
        };
        let r = base.clone().resolve(Some("17"), &flag).unwrap();
        assert_eq!((r.seed, r.k, r.head.hidden_dims.clone(), r.train.epochs), (5, 4, vec![8, 4], 7));
        assert!(base.clone().resolve(Some("x"), &none).is_err());
        let bad_grid = Overrides {
            grid: Some("1:0:0.1".into()),
            ..Overrides::default()
        };
        assert!(base.resolve(None, &bad_grid).is_err());
    }

    #[test]
    fn cli_parses_subcommands() {
        let cli = Cli::try_parse_from([
            "contextcurate",
            "--jobs",
            "4",
            "cv",
            "--corpus",
            "c.jsonl",
            "--model",
            "hybrid",
            "--regime",
            "word-seen",
            "--hidden",
            "16,16",
            "--out",
            "run",
        ])
        .unwrap();
        assert_eq!(cli.jobs, 4);
        let Command::Cv { o, out } = cli.command else {
            panic!("expected cv");
        };
        assert_eq!(o.model, Some(ModelSpec::Hybrid));
        assert_eq!(o.regime, Some(Regime::WordSeen));
        assert_eq!(o.hidden, Some(vec![16, 16]));
        assert_eq!(out, PathBuf::from("run"));
    }

    #[test]
    fn hybrid_without_features_is_rejected_early() {
        let cfg = RunConfig {
            model_spec: ModelSpec::Hybrid,
            ..RunConfig::default()
        };
        let err = cmd_score(&cfg, Path::new("unused")).unwrap_err();
        assert!(err.to_string().contains("features required"));
    }
}
