//! Experiment config file and its merge with flags.
//!
//! Precedence, lowest first: built-in defaults, `LLM_NODEJS_ROOT` (corpus
//! only), the `--config` file, command-line flags.

use std::path::{Path, PathBuf};

use jsattr::classifiers::{Algorithm, ClassifierSpec, ForestParams, GboostParams, Hyperparams, KnnParams, LogregParams, SvmParams};
use jsattr::corpus::{Ratio, Variant, DEFAULT_SEED};
use jsattr::features::TokenPolicy;
use jsattr::similarity::DiversityOptions;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ROOT_ENV: &str = "LLM_NODEJS_ROOT";

/// On-disk form. Every key is optional; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Training share, `"4/5"` or `"0.8"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<TokenPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub similarity: Option<SimilaritySection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    /// Classifier seed; defaults to the top-level seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Overrides of the algorithm's default hyperparameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperparams: Option<toml::Table>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilaritySection {
    /// Models to compare; defaults to `classes`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_pairs: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<FileConfig, CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))?;
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                CliError::Config(format!("{}: {}", origin.display(), e.inner()))
            } else {
                CliError::Config(format!("{}: field `{path}`: {}", origin.display(), e.inner()))
            }
        })
    }

    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        FileConfig::parse(&text, path)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self).map_err(|e| CliError::Internal(format!("serializing config: {e}")))
    }
}

/// Values given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub corpus: Option<PathBuf>,
    pub variant: Option<Variant>,
    pub classes: Option<Vec<String>>,
    pub algo: Option<Algorithm>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub ratio: Option<Ratio>,
    pub per_class: Option<usize>,
}

/// Fully merged settings.
#[derive(Clone, Debug)]
pub struct Settings {
    pub corpus: Option<PathBuf>,
    /// `None` when neither the file nor the flags name one.
    pub variant: Option<Variant>,
    pub classes: Vec<String>,
    pub seed: u64,
    pub ratio: Ratio,
    pub per_class: Option<usize>,
    pub out: Option<PathBuf>,
    pub policy: TokenPolicy,
    pub algorithm: Option<Algorithm>,
    pub classifier_seed: Option<u64>,
    /// Hyperparameter overrides, kept only when they belong to `algorithm`.
    pub hyperparams: Option<toml::Table>,
    pub models: Option<Vec<String>>,
    pub similarity_seed: Option<u64>,
    pub max_pairs: Option<usize>,
}

impl Settings {
    pub fn resolve(file: FileConfig, flags: Flags, env_root: Option<PathBuf>) -> Result<Settings, CliError> {
        let ratio = match (&flags.ratio, &file.ratio) {
            (Some(r), _) => *r,
            (None, Some(s)) => s.parse().map_err(|e| CliError::Config(format!("field `ratio`: {e}")))?,
            (None, None) => Ratio::TRAIN_DEFAULT,
        };
        let section = file.classifier.unwrap_or_default();
        let algorithm = flags.algo.or(section.algorithm);
        // Overrides written for one algorithm are dropped when a flag
        // switches to another.
        let hyperparams = match (flags.algo, section.algorithm) {
            (Some(f), Some(a)) if f != a => None,
            _ => section.hyperparams,
        };
        let sim = file.similarity.unwrap_or_default();
        Ok(Settings {
            corpus: flags.corpus.or(file.corpus).or(env_root),
            variant: flags.variant.or(file.variant),
            classes: flags.classes.or(file.classes).unwrap_or_default(),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            ratio,
            per_class: flags.per_class.or(file.per_class),
            out: flags.out.or(file.out),
            policy: file.features.unwrap_or_default(),
            algorithm,
            classifier_seed: section.seed,
            hyperparams,
            models: sim.models,
            similarity_seed: sim.seed,
            max_pairs: sim.max_pairs,
        })
    }

    pub fn corpus(&self) -> Result<&Path, CliError> {
        self.corpus
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("missing field `corpus` (pass --corpus, set it in the config, or set {ROOT_ENV})")))
    }

    pub fn out(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Config("missing field `out` (pass --out or set it in the config)".into()))
    }

    pub fn variant(&self) -> Variant {
        self.variant.unwrap_or(Variant::Original)
    }

    pub fn classifier(&self) -> Result<ClassifierSpec, CliError> {
        let algorithm = self
            .algorithm
            .ok_or_else(|| CliError::Config("missing field `classifier.algorithm` (pass --algo or set it in the config)".into()))?;
        let seed = self.classifier_seed.unwrap_or(self.seed);
        let mut spec = ClassifierSpec::new(algorithm, seed);
        if let Some(table) = &self.hyperparams {
            spec.params = merge_hyperparams(spec.params, table)?;
        }
        Ok(spec)
    }

    pub fn models(&self) -> Vec<String> {
        self.models.clone().unwrap_or_else(|| self.classes.clone())
    }

    pub fn diversity(&self) -> DiversityOptions {
        DiversityOptions {
            seed: self.similarity_seed.unwrap_or(self.seed),
            max_pairs: self.max_pairs,
            ..DiversityOptions::default()
        }
    }

    /// File form of these settings, written next to training outputs.
    pub fn to_file(&self) -> Result<FileConfig, CliError> {
        let spec = self.classifier()?;
        let mut params = serde_json::to_value(&spec).map_err(|e| CliError::Internal(e.to_string()))?["hyperparams"].take();
        // Unset optional values have no TOML form and are left out.
        if let Some(m) = params.as_object_mut() {
            m.retain(|_, v| !v.is_null());
        }
        let hyperparams: toml::Table = serde_json::from_value(params).map_err(|e| CliError::Internal(format!("hyperparameters: {e}")))?;
        Ok(FileConfig {
            corpus: self.corpus.clone(),
            variant: Some(self.variant()),
            classes: Some(self.classes.clone()),
            seed: Some(self.seed),
            ratio: Some(self.ratio.to_string()),
            per_class: self.per_class,
            out: self.out.clone(),
            features: Some(self.policy),
            classifier: Some(ClassifierSection {
                algorithm: Some(spec.algorithm()),
                seed: Some(spec.seed),
                hyperparams: Some(hyperparams),
            }),
            similarity: None,
        })
    }
}

fn merge_hyperparams(defaults: Hyperparams, table: &toml::Table) -> Result<Hyperparams, CliError> {
    let mut value = serde_json::to_value(&defaults).map_err(|e| CliError::Internal(e.to_string()))?;
    let overrides = serde_json::to_value(table).map_err(|e| CliError::Config(format!("field `classifier.hyperparams`: {e}")))?;
    let target = value["hyperparams"].as_object_mut().expect("hyperparameters serialize as a map");
    for (k, v) in overrides.as_object().into_iter().flatten() {
        target.insert(k.clone(), v.clone());
    }
    let params = value["hyperparams"].take();
    Ok(match defaults {
        Hyperparams::Knn(_) => Hyperparams::Knn(section::<KnnParams>(params)?),
        Hyperparams::Logreg(_) => Hyperparams::Logreg(section::<LogregParams>(params)?),
        Hyperparams::LinearSvm(_) => Hyperparams::LinearSvm(section::<SvmParams>(params)?),
        Hyperparams::RandomForest(_) => Hyperparams::RandomForest(section::<ForestParams>(params)?),
        Hyperparams::Gboost(_) => Hyperparams::Gboost(section::<GboostParams>(params)?),
    })
}

fn section<T: DeserializeOwned>(v: serde_json::Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            "classifier.hyperparams".to_string()
        } else {
            format!("classifier.hyperparams.{path}")
        };
        CliError::Config(format!("field `{field}`: {}", e.inner()))
    })
}
