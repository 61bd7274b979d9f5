//! k-NN, logistic regression, linear SVM, random forest and gradient
//! boosted trees over sparse feature matrices.

mod binning;
mod forest;
mod gboost;
mod knn;
mod lbfgs;
mod linear;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use binning::BinMapper;
pub use forest::{Forest, Tree};
pub use gboost::{Booster, RegTree};
pub use knn::Knn;
pub use linear::Linear;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Knn,
    Logreg,
    LinearSvm,
    RandomForest,
    Gboost,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Gboost,
        Algorithm::RandomForest,
        Algorithm::LinearSvm,
        Algorithm::Logreg,
        Algorithm::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Knn => "knn",
            Algorithm::Logreg => "logreg",
            Algorithm::LinearSvm => "linear_svm",
            Algorithm::RandomForest => "random_forest",
            Algorithm::Gboost => "gboost",
        }
    }

    /// Row name used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Knn => "k-NN",
            Algorithm::Logreg => "Logistic Regression",
            Algorithm::LinearSvm => "Linear SVM",
            Algorithm::RandomForest => "Random Forest",
            Algorithm::Gboost => "XGBoost",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        Ok(match s.as_str() {
            "knn" => Algorithm::Knn,
            "logreg" | "logistic_regression" => Algorithm::Logreg,
            "linear_svm" | "svm" => Algorithm::LinearSvm,
            "random_forest" | "forest" | "rf" => Algorithm::RandomForest,
            "gboost" | "xgboost" => Algorithm::Gboost,
            _ => return Err(Error::Data(format!("unknown algorithm `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogregParams {
    pub max_iter: usize,
    /// L2 penalty on the weights (not the intercepts).
    pub l2: f64,
    /// Bound on the largest gradient component of the mean loss.
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` means `floor(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GboostParams {
    pub estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
    pub max_bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "hyperparams", rename_all = "snake_case")]
pub enum Hyperparams {
    Knn(KnnParams),
    Logreg(LogregParams),
    LinearSvm(SvmParams),
    RandomForest(ForestParams),
    Gboost(GboostParams),
}

impl Hyperparams {
    pub fn defaults(algorithm: Algorithm) -> Hyperparams {
        match algorithm {
            Algorithm::Knn => Hyperparams::Knn(KnnParams { k: 5 }),
            Algorithm::Logreg => Hyperparams::Logreg(LogregParams {
                max_iter: 2000,
                l2: 1.0,
                tol: 1e-4,
            }),
            Algorithm::LinearSvm => Hyperparams::LinearSvm(SvmParams {
                c: 1.0,
                max_iter: 2000,
                tol: 1e-4,
            }),
            Algorithm::RandomForest => Hyperparams::RandomForest(ForestParams {
                trees: 400,
                max_features: None,
                max_depth: None,
                min_samples_split: 2,
                max_bins: 256,
            }),
            Algorithm::Gboost => Hyperparams::Gboost(GboostParams {
                estimators: 400,
                learning_rate: 0.3,
                max_depth: 6,
                lambda: 1.0,
                min_child_weight: 1.0,
                max_bins: 256,
            }),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Hyperparams::Knn(_) => Algorithm::Knn,
            Hyperparams::Logreg(_) => Algorithm::Logreg,
            Hyperparams::LinearSvm(_) => Algorithm::LinearSvm,
            Hyperparams::RandomForest(_) => Algorithm::RandomForest,
            Hyperparams::Gboost(_) => Algorithm::Gboost,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub params: Hyperparams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(algorithm: Algorithm, seed: u64) -> ClassifierSpec {
        ClassifierSpec {
            params: Hyperparams::defaults(algorithm),
            seed,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.params.algorithm()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Knn(Knn),
    Linear(Linear),
    Forest(Forest),
    Booster(Booster),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ClassifierSpec,
    /// Class order, lexicographic.
    pub labels: Vec<String>,
    pub dim: usize,
    pub train_time_secs: f64,
    pub params: Params,
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        self.spec.algorithm()
    }

    fn check_dim(&self, x: &FeatureMatrix) -> Result<()> {
        if x.dim != self.dim || x.rows.iter().any(|r| r.dim != self.dim) {
            return Err(Error::Model(format!(
                "feature dimension mismatch: model expects {}, got {}",
                self.dim, x.dim
            )));
        }
        Ok(())
    }

    pub fn predict_row(&self, row: &FeatureVector) -> usize {
        match &self.params {
            Params::Knn(m) => m.predict(row, self.labels.len()),
            Params::Linear(m) => m.predict(row),
            Params::Forest(m) => m.predict(row),
            Params::Booster(m) => m.predict(row),
        }
    }

    /// Class indices into `labels`.
    pub fn predict_indices(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        self.check_dim(x)?;
        Ok(x.rows.iter().map(|r| self.predict_row(r)).collect())
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<String>> {
        Ok(self
            .predict_indices(x)?
            .into_iter()
            .map(|i| self.labels[i].clone())
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("format_version").and_then(serde_json::Value::as_u64);
        if version != Some(MODEL_FORMAT_VERSION as u64) {
            return Err(Error::Model(format!(
                "unsupported model format version {version:?}, expected {MODEL_FORMAT_VERSION}"
            )));
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<TrainedModel> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainedModel::from_json(&text)
    }
}

/// Training data with labels mapped to lexicographic class indices.
pub struct Encoded<'a> {
    pub x: &'a FeatureMatrix,
    pub y: Vec<usize>,
    pub labels: Vec<String>,
}

impl Encoded<'_> {
    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }
}

fn encode<'a, S: AsRef<str>>(x: &'a FeatureMatrix, y: &[S]) -> Result<Encoded<'a>> {
    if x.len() != y.len() {
        return Err(Error::Model(format!("{} feature rows but {} labels", x.len(), y.len())));
    }
    if let Some((i, r)) = x.rows.iter().enumerate().find(|(_, r)| r.dim != x.dim) {
        return Err(Error::Model(format!(
            "feature dimension mismatch: row {i} has {}, matrix has {}",
            r.dim, x.dim
        )));
    }
    let mut labels: Vec<String> = y.iter().map(|s| s.as_ref().to_string()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::Model(format!(
            "need at least 2 distinct labels, got {}",
            labels.len()
        )));
    }
    let y = y
        .iter()
        .map(|s| labels.binary_search_by(|l| l.as_str().cmp(s.as_ref())).unwrap())
        .collect();
    Ok(Encoded { x, y, labels })
}

/// Trains a classifier. The result depends only on the spec (seed
/// included) and the data in order.
pub fn fit<S: AsRef<str>>(spec: &ClassifierSpec, x: &FeatureMatrix, y: &[S]) -> Result<TrainedModel> {
    let data = encode(x, y)?;
    let start = Instant::now();
    let params = match &spec.params {
        Hyperparams::Knn(p) => {
            if p.k == 0 {
                return Err(Error::Model("knn: k must be positive".into()));
            }
            Params::Knn(Knn::fit(p, &data))
        }
        Hyperparams::Logreg(p) => Params::Linear(Linear::fit_logreg(p, &data)),
        Hyperparams::LinearSvm(p) => Params::Linear(Linear::fit_svm(p, &data, spec.seed)),
        Hyperparams::RandomForest(p) => {
            if p.trees == 0 {
                return Err(Error::Model("random_forest: trees must be positive".into()));
            }
            Params::Forest(Forest::fit(p, &data, spec.seed))
        }
        Hyperparams::Gboost(p) => Params::Booster(Booster::fit(p, &data)),
    };
    let train_time_secs = start.elapsed().as_secs_f64();
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        labels: data.labels,
        dim: x.dim,
        train_time_secs,
        params,
    })
}

/// Index of the largest score; the first one wins ties.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Seed stream for the `i`th independent unit (tree, class) of a model.
pub(crate) fn unit_rng(seed: u64, i: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}
