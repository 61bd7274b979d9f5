//! Attribution metrics, confusion matrices and end-to-end experiments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{fit, ClassifierSpec, TrainedModel};
use crate::corpus::{self, Corpus, Ratio, Variant};
use crate::error::{Error, Result, StageExt};
use crate::features::{self, FeatureMatrix, TokenPolicy, Vocabulary};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMeta {
    pub variant: Option<Variant>,
    pub classes: Vec<String>,
    pub seed: u64,
    pub spec: Option<ClassifierSpec>,
    pub dataset_digest: Option<String>,
    pub split_ratio: Option<Ratio>,
    pub train_size: usize,
    pub valid_size: usize,
    pub removed_duplicates: usize,
    pub vocabulary_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_f1: f64,
    /// Wall-clock seconds spent in `fit`.
    pub train_time_secs: f64,
    /// Axis order of `confusion`.
    pub labels: Vec<String>,
    /// Rows are true labels, columns predicted labels.
    pub confusion: Vec<Vec<u64>>,
    pub metadata: ExperimentMeta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_f1: f64,
}

/// Accuracy and macro-averaged precision and F1 of a confusion matrix.
/// Classes that occur neither as truth nor as prediction are left out
/// of the averages; a class never predicted has precision 0.
pub fn metrics(confusion: &[Vec<u64>]) -> Metrics {
    let k = confusion.len();
    let total: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let (mut p_sum, mut f_sum, mut classes) = (0.0, 0.0, 0usize);
    for c in 0..k {
        let actual: u64 = confusion[c].iter().sum();
        let predicted: u64 = confusion.iter().map(|r| r[c]).sum();
        if actual == 0 && predicted == 0 {
            continue;
        }
        classes += 1;
        let tp = confusion[c][c] as f64;
        let p = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
        let r = if actual > 0 { tp / actual as f64 } else { 0.0 };
        p_sum += p;
        f_sum += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    let n = classes.max(1) as f64;
    Metrics {
        accuracy: if total > 0 { trace as f64 / total as f64 } else { 0.0 },
        macro_precision: p_sum / n,
        macro_f1: f_sum / n,
    }
}

/// Scores `m` on labeled rows.
pub fn evaluate<S: AsRef<str>>(m: &TrainedModel, x: &FeatureMatrix, y: &[S]) -> Result<EvalReport> {
    if x.len() != y.len() {
        return Err(Error::Data(format!("{} feature rows but {} labels", x.len(), y.len())));
    }
    let mut unknown: Vec<&str> = y
        .iter()
        .map(AsRef::as_ref)
        .filter(|l| m.labels.binary_search_by(|x| x.as_str().cmp(l)).is_err())
        .collect();
    unknown.sort_unstable();
    unknown.dedup();
    if !unknown.is_empty() {
        return Err(Error::Data(format!("labels unknown to the model: {}", unknown.join(", "))));
    }
    let predicted = m.predict_indices(x)?;
    let k = m.labels.len();
    let mut confusion = vec![vec![0u64; k]; k];
    for (t, &p) in y.iter().zip(&predicted) {
        let t = m.labels.binary_search_by(|x| x.as_str().cmp(t.as_ref())).unwrap();
        confusion[t][p] += 1;
    }
    let mm = metrics(&confusion);
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        accuracy: mm.accuracy,
        macro_precision: mm.macro_precision,
        macro_f1: mm.macro_f1,
        train_time_secs: m.train_time_secs,
        labels: m.labels.clone(),
        confusion,
        metadata: ExperimentMeta {
            classes: m.labels.clone(),
            seed: m.spec.seed,
            spec: Some(m.spec.clone()),
            ..ExperimentMeta::default()
        },
    })
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<EvalReport> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("format_version").and_then(serde_json::Value::as_u64);
        if version != Some(REPORT_FORMAT_VERSION as u64) {
            return Err(Error::Data(format!("unsupported report format version {version:?}")));
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            out.push_str(l);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// `| Model | Acc | Prec | F1 | Time |` with percentages to two
    /// decimals and seconds.
    pub fn table2_row(&self) -> String {
        let name = self.metadata.spec.as_ref().map_or("?", |s| s.algorithm().display_name());
        format!(
            "| {name:<19} | {:>6.2} | {:>6.2} | {:>6.2} | {:>9.2} |",
            100.0 * self.accuracy,
            100.0 * self.macro_precision,
            100.0 * self.macro_f1,
            self.train_time_secs
        )
    }
}

pub fn table2(reports: &[EvalReport]) -> String {
    let mut out = format!(
        "| {:<19} | {:>6} | {:>6} | {:>6} | {:>9} |\n",
        "Model", "Acc", "Prec", "F1", "Time (s)"
    );
    out.push_str("|---------------------|--------|--------|--------|-----------|\n");
    for r in reports {
        out.push_str(&r.table2_row());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub variant: Variant,
    /// Labels to keep; empty keeps all.
    pub classes: Vec<String>,
    pub spec: ClassifierSpec,
    pub ratio: Ratio,
    pub split_seed: u64,
    /// Seeded subsample of at most this many samples per label, taken
    /// after deduplication.
    pub per_class: Option<usize>,
    pub policy: TokenPolicy,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(corpus: impl Into<PathBuf>, variant: Variant, spec: ClassifierSpec) -> ExperimentConfig {
        ExperimentConfig {
            corpus: corpus.into(),
            variant,
            classes: Vec::new(),
            spec,
            ratio: Ratio::TRAIN_DEFAULT,
            split_seed: corpus::DEFAULT_SEED,
            per_class: None,
            policy: TokenPolicy::default(),
            out: None,
        }
    }
}

pub struct Experiment {
    pub report: EvalReport,
    pub model: TrainedModel,
    pub vocabulary: Vocabulary,
}

/// SHA-256 over every sample's id, label, task, variant and source.
pub fn dataset_digest(c: &Corpus) -> String {
    let mut h = Sha256::new();
    for s in c.samples() {
        for part in [s.id.as_bytes(), s.model_label.as_bytes(), s.task_id.to_string().as_bytes(), s.variant.as_str().as_bytes(), s.source.as_bytes()] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// The deduplicated, split corpus an experiment trains and validates on.
pub struct PreparedSplit {
    pub split: corpus::SplitPair,
    pub dataset_digest: String,
    pub removed_duplicates: usize,
}

/// Load, restrict to `config.classes`, deduplicate, subsample and split.
pub fn prepare_split(config: &ExperimentConfig) -> Result<PreparedSplit> {
    let loaded = corpus::load_corpus(&config.corpus, config.variant).stage("load")?;
    let loaded = if config.classes.is_empty() {
        loaded
    } else {
        loaded.restrict_labels(&config.classes).stage("load")?
    };
    let digest = dataset_digest(&loaded);
    let dedup = corpus::deduplicate(&loaded);
    let pool = match config.per_class {
        Some(n) => corpus::subsample_per_label(&dedup.corpus, n, config.split_seed),
        None => dedup.corpus,
    };
    let split = corpus::stratified_split(&pool, config.ratio, config.split_seed).stage("split")?;
    Ok(PreparedSplit {
        split,
        dataset_digest: digest,
        removed_duplicates: dedup.removed,
    })
}

fn experiment_meta(config: &ExperimentConfig, data: &PreparedSplit, model: &TrainedModel, vocabulary: &Vocabulary) -> ExperimentMeta {
    ExperimentMeta {
        variant: Some(config.variant),
        classes: model.labels.clone(),
        seed: config.split_seed,
        spec: Some(model.spec.clone()),
        dataset_digest: Some(data.dataset_digest.clone()),
        split_ratio: Some(config.ratio),
        train_size: data.split.train.len(),
        valid_size: data.split.valid.len(),
        removed_duplicates: data.removed_duplicates,
        vocabulary_size: vocabulary.len(),
    }
}

/// Load, deduplicate, split, build the vocabulary on the training half,
/// vectorize, fit and evaluate on the validation half. Artifacts are
/// written under `config.out` when set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    let data = prepare_split(config)?;
    let split = &data.split;
    let vocabulary = features::build_vocabulary(&split.train, config.policy).stage("vocab")?;
    let xt = features::vectorize(&split.train, &vocabulary).stage("vectorize")?;
    let xv = features::vectorize(&split.valid, &vocabulary).stage("vectorize")?;
    let model = fit(&config.spec, &xt, &split.train.labels()).stage("fit")?;
    let mut report = evaluate(&model, &xv, &split.valid.labels()).stage("evaluate")?;
    report.metadata = experiment_meta(config, &data, &model, &vocabulary);
    let exp = Experiment {
        report,
        model,
        vocabulary,
    };
    if let Some(dir) = &config.out {
        persist(&exp, dir).stage("persist")?;
    }
    Ok(exp)
}

/// Re-evaluates a saved model on the validation half `config` selects.
/// The training time is the one recorded at fit time.
pub fn evaluate_saved(config: &ExperimentConfig, model: &TrainedModel, vocabulary: &Vocabulary) -> Result<EvalReport> {
    let data = prepare_split(config)?;
    let xv = features::vectorize(&data.split.valid, vocabulary).stage("vectorize")?;
    let mut report = evaluate(model, &xv, &data.split.valid.labels()).stage("evaluate")?;
    report.metadata = experiment_meta(config, &data, model, vocabulary);
    Ok(report)
}

/// Writes `report.json`, `confusion.csv`, `model.json` and
/// `vocabulary.json` into `dir`.
pub fn persist(exp: &Experiment, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p, e))
    };
    write("report.json", exp.report.to_json()?)?;
    write("confusion.csv", exp.report.confusion_csv())?;
    write("model.json", exp.model.to_json()?)?;
    write("vocabulary.json", exp.vocabulary.to_json()?)
}

/// Evaluates a trained model on an independent corpus without refitting.
pub fn cross_validate_external(m: &TrainedModel, v: &Vocabulary, external: &Corpus) -> Result<EvalReport> {
    let offending: Vec<&str> = external
        .label_set()
        .iter()
        .filter(|l| !m.labels.contains(l))
        .map(String::as_str)
        .collect();
    if !offending.is_empty() {
        return Err(Error::Data(format!("labels not known to the model: {}", offending.join(", "))));
    }
    let x = features::vectorize(external, v)?;
    let mut report = evaluate(m, &x, &external.labels())?;
    report.metadata.dataset_digest = Some(dataset_digest(external));
    report.metadata.valid_size = external.len();
    report.metadata.vocabulary_size = v.len();
    Ok(report)
}
