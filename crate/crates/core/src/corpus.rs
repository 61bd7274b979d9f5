//! Labeled JavaScript corpora: loading, deduplication and stratified splits.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Original,
    Minified,
    Mangled,
    Obfuscated,
    Deobfuscated,
    Ast,
    Jsir,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Original,
        Variant::Minified,
        Variant::Mangled,
        Variant::Obfuscated,
        Variant::Deobfuscated,
        Variant::Ast,
        Variant::Jsir,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Minified => "minified",
            Variant::Mangled => "mangled",
            Variant::Obfuscated => "obfuscated",
            Variant::Deobfuscated => "deobfuscated",
            Variant::Ast => "ast",
            Variant::Jsir => "jsir",
        }
    }

    /// Variants whose source is expected to be JavaScript text.
    pub fn is_javascript(self) -> bool {
        !matches!(self, Variant::Ast | Variant::Jsir)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown variant `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodeSample {
    pub id: String,
    pub model_label: String,
    pub task_id: u32,
    pub variant: Variant,
    pub source: String,
    /// Unrecognized record fields, written back unchanged.
    pub extra: Map<String, Value>,
}

impl CodeSample {
    pub fn new(id: impl Into<String>, model: impl Into<String>, task_id: u32, variant: Variant, source: impl Into<String>) -> CodeSample {
        CodeSample {
            id: id.into(),
            model_label: model.into(),
            task_id,
            variant,
            source: source.into(),
            extra: Map::new(),
        }
    }

    pub fn from_value(value: Value) -> std::result::Result<CodeSample, String> {
        let Value::Object(mut obj) = value else {
            return Err("record is not a JSON object".into());
        };
        let take_str = |obj: &mut Map<String, Value>, field: &str| match obj.remove(field) {
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(format!("field `{field}` must be a string")),
            None => Err(format!("missing field `{field}`")),
        };
        let id = take_str(&mut obj, "id")?;
        let model_label = take_str(&mut obj, "model")?;
        let task_id = match obj.remove("task_id") {
            Some(Value::Number(n)) => n
                .as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .ok_or_else(|| "field `task_id` must be a non-negative integer".to_string())?,
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map_err(|_| "field `task_id` must be a non-negative integer".to_string())?,
            Some(_) => return Err("field `task_id` must be a non-negative integer".into()),
            None => return Err("missing field `task_id`".into()),
        };
        let variant = take_str(&mut obj, "variant")?;
        let variant = variant
            .parse::<Variant>()
            .map_err(|_| format!("field `variant`: unknown variant `{variant}`"))?;
        let source = take_str(&mut obj, "source")?;
        if source.trim().is_empty() {
            return Err("field `source` is empty".into());
        }
        if model_label.is_empty() {
            return Err("field `model` is empty".into());
        }
        Ok(CodeSample {
            id,
            model_label,
            task_id,
            variant,
            source,
            extra: obj,
        })
    }

    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("id".into(), Value::String(self.id.clone()));
        obj.insert("model".into(), Value::String(self.model_label.clone()));
        obj.insert("task_id".into(), Value::from(self.task_id));
        obj.insert("variant".into(), Value::String(self.variant.as_str().into()));
        obj.insert("source".into(), Value::String(self.source.clone()));
        for (k, v) in &self.extra {
            obj.insert(k.clone(), v.clone());
        }
        Value::Object(obj)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    samples: Vec<CodeSample>,
    label_set: Vec<String>,
}

impl Corpus {
    pub fn new(samples: Vec<CodeSample>) -> Corpus {
        let label_set: std::collections::BTreeSet<&str> = samples.iter().map(|s| s.model_label.as_str()).collect();
        let label_set = label_set.into_iter().map(String::from).collect();
        Corpus { samples, label_set }
    }

    pub fn samples(&self) -> &[CodeSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<CodeSample> {
        self.samples
    }

    pub fn label_set(&self) -> &[String] {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.samples.iter().map(|s| s.model_label.as_str()).collect()
    }

    /// Sample counts per label, in label order.
    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for s in &self.samples {
            *out.entry(s.model_label.clone()).or_insert(0) += 1;
        }
        out
    }

    /// Keeps only samples whose label is listed.
    pub fn restrict_labels(&self, labels: &[String]) -> Result<Corpus> {
        let present: HashSet<&str> = self.label_set.iter().map(String::as_str).collect();
        let missing: Vec<&str> = labels.iter().map(String::as_str).filter(|l| !present.contains(l)).collect();
        if !missing.is_empty() {
            return Err(Error::Data(format!("labels not present in corpus: {}", missing.join(", "))));
        }
        let keep: HashSet<&str> = labels.iter().map(String::as_str).collect();
        Ok(Corpus::new(
            self.samples.iter().filter(|s| keep.contains(s.model_label.as_str())).cloned().collect(),
        ))
    }

    pub fn filter(&self, mut keep: impl FnMut(&CodeSample) -> bool) -> Corpus {
        Corpus::new(self.samples.iter().filter(|s| keep(s)).cloned().collect())
    }

    /// Writes one JSON record per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for s in &self.samples {
            serde_json::to_writer(&mut out, &s.to_value())?;
            out.push(b'\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&out).map_err(|e| Error::io(path, e))
    }
}

/// Every record found at `path`, all variants. A directory is walked
/// recursively in path order for `.jsonl` and `.json` files; a `.json`
/// file may also hold a single array of records.
pub fn load_records(path: &Path) -> Result<Vec<CodeSample>> {
    let mut out = Vec::new();
    for file in corpus_files(path)? {
        let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let name = file.display().to_string();
        let bad = |index: usize, message: String| Error::Record {
            file: name.clone(),
            index,
            message,
        };
        if text.trim_start().starts_with('[') {
            let values: Vec<Value> = serde_json::from_str(&text).map_err(|e| bad(0, format!("invalid JSON array: {e}")))?;
            for (i, v) in values.into_iter().enumerate() {
                out.push(CodeSample::from_value(v).map_err(|m| bad(i, m))?);
            }
            continue;
        }
        let mut index = 0;
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(line).map_err(|e| bad(index, format!("invalid JSON: {e}")))?;
            out.push(CodeSample::from_value(v).map_err(|m| bad(index, m))?);
            index += 1;
        }
    }
    Ok(out)
}

fn corpus_files(path: &Path) -> Result<Vec<PathBuf>> {
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let p = e.path().unwrap_or(path).to_path_buf();
            Error::io(p, e.into())
        })?;
        let ext = entry.path().extension().and_then(|e| e.to_str());
        if entry.file_type().is_file() && matches!(ext, Some("jsonl" | "json")) {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

/// Records of one variant, in input order.
pub fn load_corpus(path: &Path, variant: Variant) -> Result<Corpus> {
    let records = load_records(path)?;
    Ok(Corpus::new(records.into_iter().filter(|s| s.variant == variant).collect()))
}

/// Source text with comments and formatting removed. Falls back to
/// space-joined tokens, then to whitespace-collapsed text, for sources
/// the front end does not accept.
pub fn normalized_source(source: &str) -> String {
    if let Ok(m) = jsfront::minify(source) {
        return m;
    }
    if let Ok(ts) = jsfront::tokenize(source) {
        let texts: Vec<&str> = ts.tokens.iter().map(|t| t.text.as_str()).collect();
        return texts.join(" ");
    }
    source.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug)]
pub struct Dedup {
    pub corpus: Corpus,
    pub removed: usize,
}

/// Keeps the first sample of every (label, task, variant, normalized
/// source) group.
pub fn deduplicate(c: &Corpus) -> Dedup {
    let mut seen = HashSet::new();
    let mut kept = Vec::with_capacity(c.len());
    for s in c.samples() {
        let key = (s.model_label.clone(), s.task_id, s.variant, normalized_source(&s.source));
        if seen.insert(key) {
            kept.push(s.clone());
        }
    }
    let removed = c.len() - kept.len();
    Dedup {
        corpus: Corpus::new(kept),
        removed,
    }
}

pub fn syntax_check(s: &CodeSample) -> bool {
    jsfront::syntax_check(&s.source)
}

/// A positive rational `num/den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const TRAIN_DEFAULT: Ratio = Ratio { num: 4, den: 5 };

    pub fn new(num: u64, den: u64) -> Result<Ratio> {
        if den == 0 || num > den {
            return Err(Error::Data(format!("ratio {num}/{den} is not in [0, 1]")));
        }
        Ok(Ratio { num, den })
    }

    /// round(ratio * n), halves rounded up.
    pub fn apply(self, n: usize) -> usize {
        let n = n as u128;
        ((2 * self.num as u128 * n + self.den as u128) / (2 * self.den as u128)) as usize
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for Ratio {
    fn default() -> Ratio {
        Ratio::TRAIN_DEFAULT
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Ratio {
    type Err = Error;

    /// Accepts `4/5` or a decimal such as `0.8`.
    fn from_str(s: &str) -> Result<Ratio> {
        let bad = || Error::Data(format!("invalid ratio `{s}`"));
        if let Some((a, b)) = s.split_once('/') {
            return Ratio::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        }
        let s = s.trim();
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        Ratio::new(int * den + frac, den)
    }
}

#[derive(Clone, Debug)]
pub struct SplitPair {
    pub train: Corpus,
    pub valid: Corpus,
    pub seed: u64,
    pub ratio: Ratio,
}

/// Per-label seeded shuffle, then the first `round(ratio * n)` samples
/// of each label go to training. Labels are visited in lexicographic
/// order with a single ChaCha8 stream seeded from `seed`. Both halves
/// keep the input order.
pub fn stratified_split(c: &Corpus, ratio: Ratio, seed: u64) -> Result<SplitPair> {
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in c.samples().iter().enumerate() {
        by_label.entry(&s.model_label).or_default().push(i);
    }
    if let Some((label, _)) = by_label.iter().find(|(_, v)| v.len() < 2) {
        return Err(Error::Data(format!("label `{label}` has fewer than 2 samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; c.len()];
    for idx in by_label.values_mut() {
        idx.shuffle(&mut rng);
        for &i in &idx[..ratio.apply(idx.len())] {
            in_train[i] = true;
        }
    }
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for (s, t) in c.samples().iter().zip(in_train) {
        if t {
            train.push(s.clone());
        } else {
            valid.push(s.clone());
        }
    }
    Ok(SplitPair {
        train: Corpus::new(train),
        valid: Corpus::new(valid),
        seed,
        ratio,
    })
}

/// At most `n` samples per label, chosen by a seeded shuffle of each
/// label's samples. The result keeps the input order.
pub fn subsample_per_label(c: &Corpus, n: usize, seed: u64) -> Corpus {
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in c.samples().iter().enumerate() {
        by_label.entry(&s.model_label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut keep = vec![false; c.len()];
    for idx in by_label.values_mut() {
        idx.shuffle(&mut rng);
        for &i in idx.iter().take(n) {
            keep[i] = true;
        }
    }
    Corpus::new(
        c.samples()
            .iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(s, _)| s.clone())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_rounding() {
        let r = Ratio::TRAIN_DEFAULT;
        assert_eq!(r.apply(10), 8);
        assert_eq!(r.apply(2500), 2000);
        assert_eq!(r.apply(2), 2);
        assert_eq!(Ratio::new(1, 2).unwrap().apply(3), 2);
        assert_eq!("0.8".parse::<Ratio>().unwrap().apply(10), 8);
        assert_eq!("4/5".parse::<Ratio>().unwrap(), r);
        assert!("6/5".parse::<Ratio>().is_err());
    }

    #[test]
    fn record_errors_name_field() {
        let v: Value = serde_json::json!({"id": "1", "model": "m", "task_id": 3, "source": "x"});
        assert!(CodeSample::from_value(v).unwrap_err().contains("variant"));
        let v: Value = serde_json::json!({"id": "1", "model": "m", "task_id": 3, "variant": "original", "source": "  "});
        assert!(CodeSample::from_value(v).unwrap_err().contains("source"));
    }
}
