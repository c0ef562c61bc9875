//! `scope3` command line: prepare, train, evaluate, classify, estimate, report.
//!
//! Every command reads an optional TOML config, lets flags override it, and
//! writes under one run directory (`--out`, default `run`). Each command also
//! leaves `manifests/<command>.json` listing its resolved config, inputs and
//! outputs with SHA-256 digests.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{
    finetune, load_model, save_model, write_epoch_log, AnyModel, ClassicalConfig, ClassicalModel, Classifier, Family,
    FeatureSource, ForestConfig, TrainingConfig, TOP_K,
};
use crate::corpus::{
    load_labeled, load_labeled_with_ids, load_ledger, split, subsample, synth_generate, write_labeled, DatasetSplit,
    LabeledExample, Ratios, TransactionRecord,
};
use crate::emission::{aggregate, estimate_ledger, write_lines_csv, write_report_csv, write_unmapped_csv, EmissionReport};
use crate::encoder::DEFAULT_ENCODER;
use crate::error::{Error, Result};
use crate::evaluation::{compare, comparison_table, evaluate, flag_low_performance, ComparisonRow, EvalReport};
use crate::features::sentence_provider;
use crate::plot;
use crate::taxonomy::{canonical_naics, load_naics_descriptions, Taxonomy, TextMode, DEFAULT_FACTOR_KIND};

pub const RUN_MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "scope3", version, about = "Ledger text to EEIO commodity classes and Scope 3 estimates")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Commodity class table (`code,title,naics_codes,description`). Bundled table if omitted.
    #[arg(long, global = true)]
    pub taxonomy: Option<PathBuf>,
    /// Emission factor table. Required with --taxonomy.
    #[arg(long, global = true)]
    pub factors: Option<PathBuf>,
    /// NAICS description table used to compose class descriptions.
    #[arg(long, global = true)]
    pub naics: Option<PathBuf>,
    #[arg(long, global = true)]
    pub factor_kind: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load or synthesize a labeled corpus and write a stratified split.
    Prepare {
        /// Labeled `text,label` CSV. Synthetic corpus if omitted.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        synth_per_class: Option<usize>,
        /// Train, validation and test ratios, e.g. `0.7,0.2,0.1`.
        #[arg(long)]
        ratios: Option<String>,
        /// Fraction of train and validation kept per class.
        #[arg(long)]
        subsample: Option<f64>,
    },
    /// Train one classifier family and save it under `models/<family>`.
    Train {
        #[arg(long)]
        family: Option<String>,
        /// Split directory written by `prepare` (default `<out>/data`).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model_dir: Option<PathBuf>,
        /// Classical features: `tfidf`, `vectors:<path>` or `encoder:<id>`.
        #[arg(long)]
        features: Option<String>,
        #[arg(long)]
        trees: Option<usize>,
        /// Zero-shot sentence provider, e.g. `hashing:512` or `encoder:<id>`.
        #[arg(long)]
        provider: Option<String>,
        /// Zero-shot class text: `title` or `description`.
        #[arg(long)]
        text_mode: Option<String>,
        /// Encoder id or checkpoint directory for fine-tuning.
        #[arg(long)]
        encoder: Option<String>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        max_length: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
    },
    /// Score one or more saved models on the test split.
    Evaluate {
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        low_f1_threshold: Option<f64>,
    },
    /// Predict classes for ledger lines or literal texts.
    Classify {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Ledger CSV (`id,text,amount,currency`).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        text: Vec<String>,
    },
    /// Classify a ledger and estimate emissions per line and per class.
    Estimate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        ledger: Option<PathBuf>,
        #[arg(long)]
        review_threshold: Option<f64>,
    },
    /// Summarize evaluation and estimation outputs found in the run directory.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Prepare { .. } => "prepare",
            Command::Train { .. } => "train",
            Command::Evaluate { .. } => "evaluate",
            Command::Classify { .. } => "classify",
            Command::Estimate { .. } => "estimate",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub taxonomy: Option<PathBuf>,
    pub factors: Option<PathBuf>,
    pub naics: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub ledger: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub synth_per_class: usize,
    pub ratios: [f64; 3],
    pub subsample: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            synth_per_class: 40,
            ratios: Ratios::PAPER_DEFAULT.as_array(),
            subsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub family: String,
    pub features: String,
    pub trees: usize,
    pub max_depth: Option<usize>,
    pub provider: String,
    pub text_mode: String,
    pub encoder: String,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub max_length: usize,
    pub patience: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let t = TrainingConfig::default();
        Self {
            family: Family::Classical.to_string(),
            features: "tfidf".into(),
            trees: ForestConfig::default().n_trees,
            max_depth: None,
            provider: DEFAULT_ZEROSHOT_PROVIDER.into(),
            text_mode: TextMode::Description.to_string(),
            encoder: DEFAULT_ENCODER.into(),
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            batch_size: t.batch_size,
            max_length: t.max_length,
            patience: t.early_stopping_patience,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub review: f64,
    pub low_f1: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            review: crate::emission::DEFAULT_REVIEW_THRESHOLD,
            low_f1: crate::evaluation::DEFAULT_LOW_F1_THRESHOLD,
        }
    }
}

pub const DEFAULT_ZEROSHOT_PROVIDER: &str = "hashing:512";

/// Resolved configuration: file values with flag overrides applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub factor_kind: String,
    pub paths: PathsConfig,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub thresholds: ThresholdConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out: PathBuf::from("run"),
            factor_kind: DEFAULT_FACTOR_KIND.into(),
            paths: PathsConfig::default(),
            data: DataConfig::default(),
            model: ModelConfig::default(),
            thresholds: ThresholdConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, source: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::parse(source, line, e.message())
        })
    }
}

/// Where a path setting came from, for error messages.
fn origin(flag: &str, from_flag: bool) -> String {
    if from_flag {
        format!("--{flag}")
    } else {
        format!("config key paths.{}", flag.replace('-', "_"))
    }
}

struct Ctx {
    cfg: RunConfig,
    command: &'static str,
    inputs: BTreeMap<String, PathBuf>,
}

impl Ctx {
    fn input(&mut self, name: &str, flag: Option<PathBuf>, config: Option<PathBuf>) -> Result<Option<PathBuf>> {
        let from_flag = flag.is_some();
        let Some(p) = flag.or(config) else {
            return Ok(None);
        };
        let source = origin(name, from_flag);
        if !p.exists() {
            return Err(Error::Input(format!("{source}: {} does not exist", p.display())));
        }
        self.inputs.insert(name.to_string(), p.clone());
        Ok(Some(p))
    }

    fn out(&self, rel: &str) -> PathBuf {
        self.cfg.out.join(rel)
    }

    fn taxonomy(&mut self, common: &CommonArgs) -> Result<Taxonomy> {
        let classes = self.input("taxonomy", common.taxonomy.clone(), self.cfg.paths.taxonomy.clone())?;
        let factors = self.input("factors", common.factors.clone(), self.cfg.paths.factors.clone())?;
        let naics = self.input("naics", common.naics.clone(), self.cfg.paths.naics.clone())?;
        let kind = self.cfg.factor_kind.clone();
        let tax = match (classes, factors) {
            (None, None) => Taxonomy::canonical_uncomposed(&kind)?,
            (Some(c), Some(f)) => Taxonomy::load(&c, &f, &kind)?,
            (Some(_), None) => return Err(Error::Input("--taxonomy needs --factors".into())),
            (None, Some(_)) => return Err(Error::Input("--factors needs --taxonomy".into())),
        };
        let texts = match naics {
            Some(p) => load_naics_descriptions(&p)?,
            None => canonical_naics(),
        };
        let tax = match tax.clone().with_descriptions(&texts) {
            Ok(t) => t,
            Err(e @ Error::MissingNaics(_)) => {
                warn!("class descriptions not composed: {e}");
                tax
            }
            Err(e) => return Err(e),
        };
        for w in tax.warnings() {
            warn!("{w}");
        }
        Ok(tax)
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn files_under(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        for e in entries {
            files_under(&e, out)?;
        }
    } else if path.is_file() {
        out.push(path.to_path_buf());
    }
    Ok(())
}

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    version: u32,
    command: &'a str,
    tool_version: &'a str,
    seed: u64,
    config: &'a RunConfig,
    inputs: BTreeMap<String, FileDigest>,
    outputs: Vec<FileDigest>,
}

fn write_manifest(ctx: &Ctx, outputs: &[PathBuf]) -> Result<()> {
    let mut inputs = BTreeMap::new();
    for (name, path) in &ctx.inputs {
        let mut files = Vec::new();
        files_under(path, &mut files)?;
        let mut h = Sha256::new();
        for f in &files {
            h.update(sha256_file(f)?.as_bytes());
        }
        inputs.insert(
            name.clone(),
            FileDigest {
                path: path.display().to_string(),
                sha256: hex::encode(h.finalize()),
            },
        );
    }
    let mut files = Vec::new();
    for o in outputs {
        files_under(o, &mut files)?;
    }
    let outputs = files
        .iter()
        .map(|f| {
            Ok(FileDigest {
                path: f.strip_prefix(&ctx.cfg.out).unwrap_or(f).display().to_string(),
                sha256: sha256_file(f)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        version: RUN_MANIFEST_VERSION,
        command: ctx.command,
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: ctx.cfg.seed,
        config: &ctx.cfg,
        inputs,
        outputs,
    };
    write_file(
        &ctx.out(&format!("manifests/{}.json", ctx.command)),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )
}

fn parse_ratios(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split([',', ':'])
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Input(format!("--ratios {s:?}: {e}")))?;
    let [a, b, c] = parts[..] else {
        return Err(Error::Input(format!("--ratios {s:?}: expected three values")));
    };
    // 70:20:10 style percentages
    let total = a + b + c;
    if total > 1.5 {
        Ok([a / total, b / total, c / total])
    } else {
        Ok([a, b, c])
    }
}

fn load_split(ctx: &mut Ctx, flag: Option<PathBuf>, tax: &Taxonomy) -> Result<[Vec<LabeledExample>; 3]> {
    let dir = match ctx.input("data", flag, ctx.cfg.paths.data.clone())? {
        Some(d) => d,
        None => {
            let d = ctx.out("data");
            if !d.join("train.csv").is_file() {
                return Err(Error::Input(format!(
                    "no split in {} (run `prepare` first or pass --data)",
                    d.display()
                )));
            }
            ctx.inputs.insert("data".into(), d.clone());
            d
        }
    };
    let part = |name: &str| load_labeled_with_ids(&dir.join(format!("{name}.csv")), tax);
    Ok([part("train")?, part("validation")?, part("test")?])
}

/// `--model`, the config path, the only model under `<out>/models`, or `<out>/models/<family>`.
fn model_path(ctx: &mut Ctx, flag: Option<PathBuf>) -> Result<PathBuf> {
    if flag.is_some() || ctx.cfg.paths.model.is_some() {
        let p = ctx.input("model", flag, ctx.cfg.paths.model.clone())?.expect("model path");
        return Ok(p);
    }
    let models = ctx.out("models");
    let mut found: Vec<PathBuf> = match std::fs::read_dir(&models) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("manifest.json").is_file())
            .collect(),
        Err(_) => Vec::new(),
    };
    found.sort();
    let p = match found.len() {
        0 => {
            return Err(Error::Input(format!(
                "--model: no model under {} (train one first or pass --model)",
                models.display()
            )))
        }
        1 => found.remove(0),
        _ => {
            let p = models.join(&ctx.cfg.model.family);
            if !p.is_dir() {
                return Err(Error::Input(format!(
                    "--model: {} holds several models; pass --model",
                    models.display()
                )));
            }
            p
        }
    };
    ctx.inputs.insert("model".into(), p.clone());
    Ok(p)
}

fn cmd_prepare(ctx: &mut Ctx, common: &CommonArgs, corpus: Option<PathBuf>) -> Result<Vec<PathBuf>> {
    let tax = ctx.taxonomy(common)?;
    let seed = ctx.cfg.seed;
    let examples = match ctx.input("corpus", corpus, ctx.cfg.paths.corpus.clone())? {
        Some(p) => load_labeled(&p, &tax)?,
        None => synth_generate(&tax, ctx.cfg.data.synth_per_class, seed)?,
    };
    let [a, b, c] = ctx.cfg.data.ratios;
    let ratios = Ratios::new(a, b, c)?;
    let mut parts: DatasetSplit = split(&examples, ratios, seed)?;
    if ctx.cfg.data.subsample != 1.0 {
        parts = subsample(&parts, ctx.cfg.data.subsample, seed)?;
    }
    info!(
        "split {} examples into {}/{}/{}",
        examples.len(),
        parts.train.len(),
        parts.validation.len(),
        parts.test.len()
    );
    let dir = ctx.out("data");
    write_labeled(&examples, create(&dir.join("corpus.csv"))?)?;
    for (name, part) in ["train", "validation", "test"].iter().zip(parts.parts()) {
        write_labeled(part, create(&dir.join(format!("{name}.csv")))?)?;
    }
    write_file(
        &dir.join("split_manifest.json"),
        serde_json::to_string_pretty(&parts.manifest())? + "\n",
    )?;
    Ok(vec![dir])
}

fn cmd_train(ctx: &mut Ctx, common: &CommonArgs, data: Option<PathBuf>, model_dir: Option<PathBuf>) -> Result<Vec<PathBuf>> {
    let family: Family = ctx.cfg.model.family.parse()?;
    let tax = ctx.taxonomy(common)?;
    let m = ctx.cfg.model.clone();
    let seed = ctx.cfg.seed;
    let dir = model_dir.unwrap_or_else(|| ctx.out(&format!("models/{family}")));
    let labels = tax.codes();
    let model: AnyModel = match family {
        Family::ZeroShot => {
            let mode: TextMode = m.text_mode.parse()?;
            let provider = sentence_provider(&m.provider)?;
            crate::classifiers::zeroshot_build(provider, &tax, mode)?.into()
        }
        Family::Classical => {
            let [train, _, _] = load_split(ctx, data, &tax)?;
            let features = match m.features.as_str() {
                "tfidf" => FeatureSource::Tfidf,
                other if other.starts_with("vectors:") || other.starts_with("encoder:") => FeatureSource::Words {
                    provider: other.to_string(),
                },
                other => {
                    return Err(Error::Input(format!(
                        "--features {other:?}: expected tfidf, vectors:<path> or encoder:<id>"
                    )))
                }
            };
            let cfg = ClassicalConfig {
                features,
                forest: ForestConfig {
                    n_trees: m.trees,
                    max_depth: m.max_depth,
                    seed,
                    ..ForestConfig::default()
                },
            };
            ClassicalModel::train(&train, &labels, &cfg, &tax.fingerprint())?.into()
        }
        Family::FineTuned => {
            let [train, val, _] = load_split(ctx, data, &tax)?;
            let cfg = TrainingConfig {
                max_length: m.max_length,
                learning_rate: m.learning_rate,
                epochs: m.epochs,
                batch_size: m.batch_size,
                seed,
                early_stopping_patience: m.patience,
            };
            let (mut model, log) = finetune(&m.encoder, &train, &val, &labels, &cfg)?;
            model.set_taxonomy_hash(&tax.fingerprint());
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write_epoch_log(&log, create(&dir.join("epoch_log.csv"))?)?;
            plot::learning_curve(&log, &dir.join("learning_curve.svg"))?;
            info!(
                "best epoch {} of {}, validation loss {:.6}",
                model.best_epoch(),
                log.len(),
                model.best_validation_loss()
            );
            model.into()
        }
    };
    save_model(&model, &dir)?;
    Ok(vec![dir])
}

fn cmd_evaluate(ctx: &mut Ctx, common: &CommonArgs, models: Vec<PathBuf>, data: Option<PathBuf>) -> Result<Vec<PathBuf>> {
    let threshold = ctx.cfg.thresholds.low_f1;
    let models = if models.is_empty() {
        vec![model_path(ctx, None)?]
    } else {
        for (i, m) in models.iter().enumerate() {
            if !m.exists() {
                return Err(Error::Input(format!("--model: {} does not exist", m.display())));
            }
            ctx.inputs.insert(format!("model.{i}"), m.clone());
        }
        models
    };
    let tax = ctx.taxonomy(common)?;
    let [_, _, test] = load_split(ctx, data, &tax)?;
    let mut reports: Vec<(String, EvalReport)> = Vec::new();
    for path in &models {
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into());
        if reports.iter().any(|(n, _)| n == &name) {
            return Err(Error::Input(format!("two models named {name:?}")));
        }
        let model = load_model(path).map_err(|e| e.context(format!("model {}", path.display())))?;
        let report = evaluate(&model, &test)?;
        info!("{name}: weighted F1 {:.4}", report.weighted_f1);
        let dir = ctx.out(&format!("eval/{name}"));
        write_file(&dir.join("report.json"), report.to_json()?)?;
        write_file(&dir.join("report.txt"), report.to_table())?;
        write_file(&dir.join("confusion.csv"), report.confusion_csv())?;
        let low = flag_low_performance(&report, threshold)?;
        write_file(&dir.join("low_performance.txt"), low.iter().map(|c| format!("{c}\n")).collect::<String>())?;
        reports.push((name, report));
    }
    let rows = compare(&reports);
    let dir = ctx.out("eval");
    write_file(&dir.join("comparison.txt"), comparison_table(&rows))?;
    write_file(&dir.join("comparison.json"), serde_json::to_string_pretty(&rows)? + "\n")?;
    Ok(vec![dir])
}

fn classify_rows(model: &dyn Classifier, records: &[TransactionRecord]) -> Result<String> {
    let texts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    let mut header = vec!["record_id".to_string(), "text".into(), "label".into(), "score".into()];
    header.push(format!("top{TOP_K}"));
    w.write_record(&header).map_err(ser)?;
    for (r, t) in records.iter().zip(&texts) {
        let row = match model.predict(t) {
            Ok(p) => {
                let top = p
                    .topk
                    .iter()
                    .map(|(c, s)| format!("{c}:{s}"))
                    .collect::<Vec<_>>()
                    .join("|");
                [r.id.clone(), r.text.clone(), p.label, p.score.to_string(), top]
            }
            Err(e) if e.is_user_error() => {
                warn!("record {}: {e}", r.id);
                [r.id.clone(), r.text.clone(), String::new(), String::new(), String::new()]
            }
            Err(e) => return Err(e.context(format!("record {}", r.id))),
        };
        w.write_record(&row).map_err(ser)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Serde(e.to_string()))?).map_err(|e| Error::Serde(e.to_string()))
}

fn cmd_classify(ctx: &mut Ctx, model: Option<PathBuf>, input: Option<PathBuf>, text: Vec<String>) -> Result<Vec<PathBuf>> {
    let path = model_path(ctx, model)?;
    let input = ctx.input("input", input, None)?;
    let mut records = match input {
        Some(p) => load_ledger(&p)?,
        None => Vec::new(),
    };
    records.extend(text.into_iter().enumerate().map(|(i, t)| TransactionRecord {
        id: format!("text-{}", i + 1),
        text: t,
        amount: None,
        currency: None,
    }));
    if records.is_empty() {
        return Err(Error::Input("nothing to classify (pass --input or --text)".into()));
    }
    let model = load_model(&path)?;
    let out = ctx.out("classify/predictions.csv");
    write_file(&out, classify_rows(&model, &records)?)?;
    Ok(vec![out])
}

fn cmd_estimate(ctx: &mut Ctx, common: &CommonArgs, model: Option<PathBuf>, ledger: Option<PathBuf>) -> Result<Vec<PathBuf>> {
    let threshold = ctx.cfg.thresholds.review;
    let tax = ctx.taxonomy(common)?;
    let path = model_path(ctx, model)?;
    let Some(ledger) = ctx.input("ledger", ledger, ctx.cfg.paths.ledger.clone())? else {
        return Err(Error::Input("--ledger is required".into()));
    };
    let records = load_ledger(&ledger)?;
    let model = load_model(&path)?;
    let outcomes = estimate_ledger(&records, &model, &tax, threshold)?;
    let report = aggregate(&outcomes);
    info!(
        "{} lines mapped, {} unmapped, {:.3} kg CO2e",
        report.mapped_lines(),
        report.unmapped.len(),
        report.totals.emission
    );
    let dir = ctx.out("estimate");
    write_lines_csv(&outcomes, create(&dir.join("lines.csv"))?)?;
    write_report_csv(&report, &tax, create(&dir.join("report.csv"))?)?;
    write_unmapped_csv(&report, create(&dir.join("unmapped.csv"))?)?;
    write_file(&dir.join("report.json"), report.to_json()?)?;
    plot::spend_emission_bars(&report, &dir.join("spend_emission.svg"))?;
    Ok(vec![dir])
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn cmd_report(ctx: &mut Ctx) -> Result<Vec<PathBuf>> {
    use std::fmt::Write as _;
    let comparison = ctx.out("eval/comparison.json");
    let estimate = ctx.out("estimate/report.json");
    if !comparison.is_file() && !estimate.is_file() {
        return Err(Error::Input(format!(
            "--out: {} has no evaluation or estimation results",
            ctx.cfg.out.display()
        )));
    }
    let mut s = String::new();
    if comparison.is_file() {
        ctx.inputs.insert("comparison".into(), comparison.clone());
        let rows: Vec<ComparisonRow> = read_json(&comparison)?;
        s.push_str("# Model comparison\n\n");
        s.push_str(&comparison_table(&rows));
        for r in &rows {
            let low = ctx.out(&format!("eval/{}/low_performance.txt", r.name));
            if let Ok(text) = std::fs::read_to_string(&low) {
                let codes: Vec<&str> = text.lines().collect();
                writeln!(
                    s,
                    "\n{}: {} classes below F1 {}: {}",
                    r.name,
                    codes.len(),
                    ctx.cfg.thresholds.low_f1,
                    codes.join(" ")
                )
                .unwrap();
            }
        }
    }
    if estimate.is_file() {
        ctx.inputs.insert("estimate".into(), estimate.clone());
        let report: EmissionReport = read_json(&estimate)?;
        if !s.is_empty() {
            s.push('\n');
        }
        s.push_str("# Emissions\n\n");
        writeln!(s, "total spend      {}", report.totals.spend).unwrap();
        writeln!(s, "total emission   {} kg CO2e", report.totals.emission).unwrap();
        writeln!(s, "mapped lines     {}", report.mapped_lines()).unwrap();
        writeln!(s, "unmapped lines   {}", report.unmapped.len()).unwrap();
        let mut top: Vec<_> = report.per_class.iter().collect();
        top.sort_by(|a, b| b.1.total_emission.total_cmp(&a.1.total_emission).then_with(|| a.0.cmp(b.0)));
        s.push_str("\nlargest emitters\n");
        for (code, t) in top.iter().take(10) {
            writeln!(s, "  {code:<8} {:>14.3} kg  {:>14.2} spend  {:>4} lines", t.total_emission, t.total_spend, t.line_count)
                .unwrap();
        }
    }
    let out = ctx.out("report/summary.txt");
    write_file(&out, s)?;
    Ok(vec![out])
}

/// Builds the resolved config: defaults, then the config file, then flags.
fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.common.config {
        Some(p) => {
            if !p.is_file() {
                return Err(Error::Input(format!("--config: {} does not exist", p.display())));
            }
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            RunConfig::from_toml(&text, p)?
        }
        None => RunConfig::default(),
    };
    let c = &cli.common;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(k) = &c.factor_kind {
        cfg.factor_kind = k.clone();
    }
    match &cli.command {
        Command::Prepare {
            synth_per_class,
            ratios,
            subsample,
            ..
        } => {
            if let Some(n) = synth_per_class {
                cfg.data.synth_per_class = *n;
            }
            if let Some(r) = ratios {
                cfg.data.ratios = parse_ratios(r)?;
            }
            if let Some(f) = subsample {
                cfg.data.subsample = *f;
            }
        }
        Command::Train {
            family,
            features,
            trees,
            provider,
            text_mode,
            encoder,
            learning_rate,
            epochs,
            batch_size,
            max_length,
            patience,
            ..
        } => {
            let m = &mut cfg.model;
            macro_rules! set {
                ($($field:ident <- $flag:expr),*) => { $( if let Some(v) = $flag { m.$field = v.clone(); } )* };
            }
            set!(family <- family, features <- features, trees <- trees, provider <- provider,
                 text_mode <- text_mode, encoder <- encoder, learning_rate <- learning_rate,
                 epochs <- epochs, batch_size <- batch_size, max_length <- max_length, patience <- patience);
        }
        Command::Evaluate { low_f1_threshold, .. } => {
            if let Some(t) = low_f1_threshold {
                cfg.thresholds.low_f1 = *t;
            }
        }
        Command::Estimate { review_threshold, .. } => {
            if let Some(t) = review_threshold {
                cfg.thresholds.review = *t;
            }
        }
        Command::Classify { .. } | Command::Report => {}
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut ctx = Ctx {
        cfg,
        command: cli.command.name(),
        inputs: BTreeMap::new(),
    };
    let common = &cli.common;
    let outputs = match cli.command {
        Command::Prepare { corpus, .. } => cmd_prepare(&mut ctx, common, corpus)?,
        Command::Train { data, model_dir, .. } => cmd_train(&mut ctx, common, data, model_dir)?,
        Command::Evaluate { models, data, .. } => cmd_evaluate(&mut ctx, common, models, data)?,
        Command::Classify { model, input, text } => cmd_classify(&mut ctx, model, input, text)?,
        Command::Estimate { model, ledger, .. } => cmd_estimate(&mut ctx, common, model, ledger)?,
        Command::Report => cmd_report(&mut ctx)?,
    };
    write_manifest(&ctx, &outputs)
}

/// One-line diagnostic for stderr.
pub fn diagnostic(e: &Error) -> String {
    let s = e.to_string();
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 for user errors, 2 for internal errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error");
            eprintln!("{}", first.trim());
            return 1;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", diagnostic(&e));
            if e.is_user_error() {
                1
            } else {
                2
            }
        }
    }
}
