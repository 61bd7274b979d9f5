//! Capped token vocabulary and TF-IDF vectors.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write as _;
use std::path::Path;

use jsfront::{TokenKind, TokenStream};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const VOCAB_CAP: usize = 400;

/// How literal tokens map to vocabulary terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TokenPolicy {
    /// String and template contents become `STR` / `TPL`.
    pub string_placeholders: bool,
    /// Numeric and BigInt literals become `NUM`.
    pub number_placeholders: bool,
}

impl Default for TokenPolicy {
    fn default() -> TokenPolicy {
        TokenPolicy {
            string_placeholders: true,
            number_placeholders: true,
        }
    }
}

impl TokenPolicy {
    pub fn term<'a>(&self, kind: TokenKind, text: &'a str) -> &'a str {
        match kind {
            TokenKind::StringLiteral if self.string_placeholders => "STR",
            TokenKind::TemplateLiteral if self.string_placeholders => "TPL",
            TokenKind::NumericLiteral | TokenKind::BigIntLiteral if self.number_placeholders => "NUM",
            _ => text,
        }
    }

    pub fn terms(&self, ts: &TokenStream) -> Vec<String> {
        ts.iter().map(|t| self.term(t.kind, &t.text).to_string()).collect()
    }
}

/// Terms of one source text.
pub fn document_terms(source: &str, policy: &TokenPolicy) -> Result<Vec<String>> {
    Ok(policy.terms(&jsfront::tokenize(source)?))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VocabEntry {
    pub token: String,
    pub df: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    pub entries: Vec<VocabEntry>,
    pub n_docs: u32,
    pub policy: TokenPolicy,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyData {
    n_docs: u32,
    policy: TokenPolicy,
    entries: Vec<VocabEntry>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(d: VocabularyData) -> Vocabulary {
        Vocabulary::from_entries(d.entries, d.n_docs, d.policy)
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> VocabularyData {
        VocabularyData {
            n_docs: v.n_docs,
            policy: v.policy,
            entries: v.entries,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Vocabulary) -> bool {
        self.n_docs == other.n_docs
            && self.policy == other.policy
            && self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.token == b.token && a.df == b.df)
    }
}

impl Vocabulary {
    pub fn from_entries(entries: Vec<VocabEntry>, n_docs: u32, policy: TokenPolicy) -> Vocabulary {
        let index = entries.iter().enumerate().map(|(i, e)| (e.token.clone(), i as u32)).collect();
        Vocabulary {
            entries,
            n_docs,
            policy,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn column(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn idf(&self, column: u32) -> f64 {
        let df = self.entries[column as usize].df as f64;
        ((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Vocabulary> {
        Ok(serde_json::from_str(text)?)
    }

    /// TF-IDF vector of an already tokenized document.
    pub fn vectorize_terms<S: AsRef<str>>(&self, terms: &[S]) -> FeatureVector {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for t in terms {
            if let Some(c) = self.column(t.as_ref()) {
                *counts.entry(c).or_insert(0) += 1;
            }
        }
        let mut indices = Vec::with_capacity(counts.len());
        let mut values = Vec::with_capacity(counts.len());
        for (c, n) in counts {
            indices.push(c);
            values.push(n as f64 * self.idf(c));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        FeatureVector {
            indices,
            values,
            dim: self.len(),
        }
    }

    pub fn tfidf(&self, source: &str) -> Result<FeatureVector> {
        Ok(self.vectorize_terms(&document_terms(source, &self.policy)?))
    }
}

/// Ranks terms by document frequency over `docs`, ties broken
/// lexicographically, and keeps the first `cap`.
pub fn vocabulary_from_terms<S: AsRef<str>>(docs: &[Vec<S>], cap: usize, policy: TokenPolicy) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Data("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in docs {
        let uniq: HashSet<&str> = doc.iter().map(AsRef::as_ref).collect();
        for t in uniq {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, u32)> = df.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cap);
    let entries = ranked
        .into_iter()
        .map(|(t, df)| VocabEntry {
            token: t.to_string(),
            df,
        })
        .collect();
    Ok(Vocabulary::from_entries(entries, docs.len() as u32, policy))
}

pub fn build_vocabulary(train: &Corpus, policy: TokenPolicy) -> Result<Vocabulary> {
    let docs = corpus_terms(train, &policy)?;
    vocabulary_from_terms(&docs, VOCAB_CAP, policy)
}

pub fn corpus_terms(c: &Corpus, policy: &TokenPolicy) -> Result<Vec<Vec<String>>> {
    c.samples()
        .iter()
        .map(|s| document_terms(&s.source, policy).map_err(|e| Error::Data(format!("sample `{}`: {e}", s.id))))
        .collect()
}

/// Sparse vector with strictly increasing column indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    pub dim: usize,
}

impl FeatureVector {
    pub fn from_dense(values: &[f64]) -> FeatureVector {
        let mut v = FeatureVector {
            dim: values.len(),
            ..FeatureVector::default()
        };
        for (i, &x) in values.iter().enumerate() {
            if x != 0.0 {
                v.indices.push(i as u32);
                v.values.push(x);
            }
        }
        v
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    pub fn get(&self, column: usize) -> f64 {
        match self.indices.binary_search(&(column as u32)) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, k: f64) -> FeatureVector {
        FeatureVector {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * k).collect(),
            dim: self.dim,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureVector>,
    pub dim: usize,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<FeatureVector>, dim: usize) -> Result<FeatureMatrix> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.dim != dim) {
            return Err(Error::Data(format!("row {i} has dimension {}, expected {dim}", r.dim)));
        }
        Ok(FeatureMatrix { rows, dim })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<FeatureMatrix> {
        let dim = rows.first().map_or(0, Vec::len);
        FeatureMatrix::new(rows.iter().map(|r| FeatureVector::from_dense(r)).collect(), dim)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Dense CSV with a header row of vocabulary tokens (or column
    /// numbers) and an optional leading label column.
    pub fn write_csv(&self, path: &Path, header: Option<&Vocabulary>, labels: Option<&[&str]>) -> Result<()> {
        let mut out = String::new();
        let mut cols: Vec<String> = match header {
            Some(v) => v.entries.iter().map(|e| csv_field(&e.token)).collect(),
            None => (0..self.dim).map(|i| i.to_string()).collect(),
        };
        if labels.is_some() {
            cols.insert(0, "label".into());
        }
        out.push_str(&cols.join(","));
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            let mut fields: Vec<String> = row.to_dense().iter().map(|v| v.to_string()).collect();
            if let Some(l) = labels {
                fields.insert(0, csv_field(l[r]));
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Vectorizes every sample of `c`.
pub fn vectorize(c: &Corpus, v: &Vocabulary) -> Result<FeatureMatrix> {
    let docs = corpus_terms(c, &v.policy)?;
    Ok(FeatureMatrix {
        rows: docs.iter().map(|d| v.vectorize_terms(d)).collect(),
        dim: v.len(),
    })
}
