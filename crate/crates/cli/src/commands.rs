use std::collections::BTreeMap;
use std::path::Path;

use jsattr::classifiers::TrainedModel;
use jsattr::corpus::{self, CodeSample, Corpus, Variant};
use jsattr::evaluation::{self, EvalReport, ExperimentConfig};
use jsattr::features::Vocabulary;
use jsattr::similarity;
use serde::Serialize;

use crate::config::Settings;
use crate::error::CliError;
use crate::Op;

fn create_out(settings: &Settings) -> Result<&Path, CliError> {
    let out = settings.out()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Internal(format!("{}: {e}", out.display())))?;
    Ok(out)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| CliError::Internal(format!("{}: {e}", p.display())))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))
}

fn write_corpus(c: &Corpus, path: &Path) -> Result<(), CliError> {
    c.write_jsonl(path).map_err(|e| CliError::Internal(e.to_string()))
}

#[derive(Serialize)]
struct ParseFailure {
    index: usize,
    id: String,
    model: String,
    variant: Variant,
}

#[derive(Serialize)]
pub struct IngestSummary {
    records: usize,
    kept: usize,
    removed_duplicates: usize,
    parse_failures: Vec<ParseFailure>,
    per_label: BTreeMap<String, usize>,
}

/// Writes `corpus.jsonl` (parseable, deduplicated samples) and
/// `ingest_summary.json`.
pub fn ingest(settings: &Settings) -> Result<(), CliError> {
    let records = corpus::load_records(settings.corpus()?).map_err(CliError::Data)?;
    let records: Vec<CodeSample> = match settings.variant {
        Some(v) => records.into_iter().filter(|s| s.variant == v).collect(),
        None => records,
    };
    let n = records.len();
    let mut parse_failures = Vec::new();
    let mut ok = Vec::with_capacity(n);
    for (index, s) in records.into_iter().enumerate() {
        if corpus::syntax_check(&s) {
            ok.push(s);
        } else {
            parse_failures.push(ParseFailure {
                index,
                id: s.id.clone(),
                model: s.model_label.clone(),
                variant: s.variant,
            });
        }
    }
    let dedup = corpus::deduplicate(&Corpus::new(ok));
    let summary = IngestSummary {
        records: n,
        kept: dedup.corpus.len(),
        removed_duplicates: dedup.removed,
        parse_failures,
        per_label: dedup.corpus.label_counts(),
    };
    let out = create_out(settings)?;
    write_corpus(&dedup.corpus, &out.join("corpus.jsonl"))?;
    write(out, "ingest_summary.json", &to_json(&summary)?)?;
    println!(
        "records {}  kept {}  removed duplicates {}  parse failures {}",
        summary.records,
        summary.kept,
        summary.removed_duplicates,
        summary.parse_failures.len()
    );
    for f in &summary.parse_failures {
        println!("  parse failure: record {} ({})", f.index, f.id);
    }
    Ok(())
}

/// Writes `<op>.jsonl` with every sample transformed and relabelled with
/// the matching variant.
pub fn transform(settings: &Settings, op: Op) -> Result<(), CliError> {
    let c = corpus::load_corpus(settings.corpus()?, settings.variant()).map_err(CliError::Data)?;
    let (name, variant) = match op {
        Op::Minify => ("minified.jsonl", Variant::Minified),
        Op::Mangle => ("mangled.jsonl", Variant::Mangled),
    };
    let mut done = Vec::with_capacity(c.len());
    let mut failed = Vec::new();
    for s in c.samples() {
        let r = match op {
            Op::Minify => jsfront::minify(&s.source),
            Op::Mangle => jsfront::mangle(&s.source),
        };
        match r {
            Ok(src) => {
                let mut t = s.clone();
                t.source = src;
                t.variant = variant;
                done.push(t);
            }
            Err(e) => failed.push(format!("{}: {e}", s.id)),
        }
    }
    let out = create_out(settings)?;
    write_corpus(&Corpus::new(done), &out.join(name))?;
    println!("transformed {} of {} samples into {}", c.len() - failed.len(), c.len(), out.join(name).display());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{} sample(s) could not be transformed: {}", failed.len(), failed.join("; "))))
    }
}

fn experiment(settings: &Settings, spec: jsattr::classifiers::ClassifierSpec) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(settings.corpus()?, settings.variant(), spec);
    cfg.classes = settings.classes.clone();
    cfg.ratio = settings.ratio;
    cfg.split_seed = settings.seed;
    cfg.per_class = settings.per_class;
    cfg.policy = settings.policy;
    Ok(cfg)
}

/// Writes `report.json`, `confusion.csv`, `model.json`,
/// `vocabulary.json` and the effective `config.toml`.
pub fn train(settings: &Settings) -> Result<(), CliError> {
    let spec = settings.classifier()?;
    let out = create_out(settings)?;
    let mut cfg = experiment(settings, spec)?;
    cfg.out = Some(out.to_path_buf());
    let exp = evaluation::run_experiment(&cfg)?;
    write(out, "config.toml", &settings.to_file()?.to_toml()?)?;
    println!("{}", evaluation::table2(std::slice::from_ref(&exp.report)).trim_end());
    Ok(())
}

fn load_model(dir: &Path) -> Result<(TrainedModel, Vocabulary), CliError> {
    let model = TrainedModel::load(&dir.join("model.json"))?;
    let vpath = dir.join("vocabulary.json");
    let text = std::fs::read_to_string(&vpath).map_err(|e| CliError::Invalid(format!("{}: {e}", vpath.display())))?;
    let vocabulary = Vocabulary::from_json(&text)?;
    if vocabulary.len() != model.dim {
        return Err(CliError::Invalid(format!(
            "vocabulary has {} entries but the model expects {}",
            vocabulary.len(),
            model.dim
        )));
    }
    Ok((model, vocabulary))
}

fn write_report(out: &Path, name: &str, r: &EvalReport) -> Result<(), CliError> {
    write(out, &format!("{name}.json"), &r.to_json()?)?;
    write(out, &format!("{name}_confusion.csv"), &r.confusion_csv())
}

/// Writes `eval.json` and `eval_confusion.csv`.
pub fn eval(settings: &Settings, model_dir: &Path) -> Result<(), CliError> {
    let (model, vocabulary) = load_model(model_dir)?;
    let cfg = experiment(settings, model.spec.clone())?;
    let report = evaluation::evaluate_saved(&cfg, &model, &vocabulary)?;
    let out = create_out(settings)?;
    write_report(out, "eval", &report)?;
    println!("{}", evaluation::table2(std::slice::from_ref(&report)).trim_end());
    Ok(())
}

/// Writes `similarity.json` and `similarity.txt`.
pub fn similarity(settings: &Settings) -> Result<(), CliError> {
    let models = settings.models();
    if models.len() < 2 {
        return Err(CliError::Config("field `similarity.models` needs at least two models (or pass --models)".into()));
    }
    let c = corpus::load_corpus(settings.corpus()?, settings.variant()).map_err(CliError::Data)?;
    let c = c.restrict_labels(&models)?;
    let report = similarity::diversity_report(&c, &models, &settings.diversity())?;
    let out = create_out(settings)?;
    write(out, "similarity.json", &report.to_json()?)?;
    let table = report.to_table();
    write(out, "similarity.txt", &table)?;
    print!("{table}");
    Ok(())
}

/// Writes `cross_check.json` and `cross_check_confusion.csv`.
pub fn cross_check(settings: &Settings, model_dir: &Path) -> Result<(), CliError> {
    let (model, vocabulary) = load_model(model_dir)?;
    let mut external = corpus::load_corpus(settings.corpus()?, settings.variant()).map_err(CliError::Data)?;
    if !settings.classes.is_empty() {
        external = external.restrict_labels(&settings.classes)?;
    }
    let report = evaluation::cross_validate_external(&model, &vocabulary, &external)?;
    let out = create_out(settings)?;
    write_report(out, "cross_check", &report)?;
    println!("external accuracy {:.2}% on {} samples", report.accuracy * 100.0, external.len());
    if let Ok(text) = std::fs::read_to_string(model_dir.join("report.json")) {
        if let Ok(own) = EvalReport::from_json(&text) {
            println!(
                "validation accuracy {:.2}%, difference {:+.2} pts",
                own.accuracy * 100.0,
                (report.accuracy - own.accuracy) * 100.0
            );
        }
    }
    Ok(())
}
