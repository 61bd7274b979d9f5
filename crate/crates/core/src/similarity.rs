//! N-gram, syntax and dataflow match, and intra/inter-model diversity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use jsfront::{DataflowEdgeSet, NodeKind, SyntaxTree, TokenStream};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::classifiers::unit_rng;
use crate::corpus::{CodeSample, Corpus};
use crate::error::{Error, Result};

pub const REPORT_FORMAT_VERSION: u32 = 1;
const MAX_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub ngram: f64,
    pub syntax: f64,
    pub dataflow: f64,
}

impl SimilarityScore {
    pub fn constant(k: f64) -> SimilarityScore {
        SimilarityScore {
            ngram: k,
            syntax: k,
            dataflow: k,
        }
    }

    fn mean(a: SimilarityScore, b: SimilarityScore) -> SimilarityScore {
        SimilarityScore {
            ngram: (a.ngram + b.ngram) / 2.0,
            syntax: (a.syntax + b.syntax) / 2.0,
            dataflow: (a.dataflow + b.dataflow) / 2.0,
        }
    }

    fn minus(self, o: SimilarityScore) -> SimilarityScore {
        SimilarityScore {
            ngram: self.ngram - o.ngram,
            syntax: self.syntax - o.syntax,
            dataflow: self.dataflow - o.dataflow,
        }
    }
}

/// Sorted `(key, count)` multiset.
type Bag<K> = Vec<(K, u32)>;

fn bag<K: Ord + Copy>(items: impl Iterator<Item = K>) -> Bag<K> {
    let mut m: BTreeMap<K, u32> = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m.into_iter().collect()
}

/// Size of the multiset intersection.
fn clipped<K: Ord>(a: &Bag<K>, b: &Bag<K>) -> u64 {
    let (mut i, mut j, mut s) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1.min(b[j].1) as u64;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Interns token texts and subtree shapes so samples can be compared by
/// integer keys.
#[derive(Default)]
pub struct Interner {
    tokens: HashMap<String, u32>,
    shapes: HashMap<(NodeKind, Vec<u32>), u32>,
}

#[derive(Clone, Debug)]
struct Ngrams {
    len: usize,
    bags: [Bag<u128>; MAX_ORDER],
}

/// Per-sample data needed by the three metrics.
#[derive(Clone, Debug)]
pub struct Prepared {
    ngrams: Ngrams,
    subtrees: Bag<u32>,
    nodes: usize,
    dataflow: DataflowEdgeSet,
}

impl Interner {
    fn token(&mut self, text: &str) -> u32 {
        let next = self.tokens.len() as u32;
        *self.tokens.entry(text.to_string()).or_insert(next)
    }

    /// Shape id of every node. Two nodes share an id exactly when their
    /// parenthesized preorder kind serializations are equal.
    pub fn shapes(&mut self, tree: &SyntaxTree) -> Vec<u32> {
        let mut ids = vec![0u32; tree.len()];
        for n in (0..tree.len() as u32).rev() {
            let key = (tree.kind(n), tree.children(n).iter().map(|&c| ids[c as usize]).collect());
            let next = self.shapes.len() as u32;
            ids[n as usize] = *self.shapes.entry(key).or_insert(next);
        }
        ids
    }

    fn ngrams(&mut self, tokens: &TokenStream) -> Ngrams {
        let ids: Vec<u32> = tokens.texts().map(|t| self.token(t)).collect();
        let bags = std::array::from_fn(|o| {
            bag(ids.windows(o + 1).map(|w| w.iter().fold(0u128, |acc, &t| (acc << 32) | t as u128)))
        });
        Ngrams { len: ids.len(), bags }
    }

    pub fn prepare(&mut self, tokens: &TokenStream, tree: &SyntaxTree, dataflow: DataflowEdgeSet) -> Prepared {
        Prepared {
            ngrams: self.ngrams(tokens),
            subtrees: bag(self.shapes(tree).into_iter()),
            nodes: tree.len(),
            dataflow,
        }
    }

    pub fn prepare_source(&mut self, source: &str) -> Result<Prepared> {
        let tokens = jsfront::tokenize(source)?;
        let tree = jsfront::parse(source)?;
        let df = jsfront::dataflow_edges(&tree);
        Ok(self.prepare(&tokens, &tree, df))
    }
}

/// Smoothed sentence BLEU over prepared n-gram bags.
fn bleu(cand: &Ngrams, refr: &Ngrams) -> f64 {
    let c = cand.len;
    let mut log_sum = 0.0;
    for o in 0..MAX_ORDER {
        let total = c.saturating_sub(o) as f64;
        let hits = clipped(&cand.bags[o], &refr.bags[o]) as f64;
        let p = if hits > 0.0 { hits / total } else { 1.0 / (total + 1.0) };
        log_sum += p.ln();
    }
    let bp = if c > refr.len {
        1.0
    } else {
        (1.0 - refr.len as f64 / c as f64).exp()
    };
    bp * (log_sum / MAX_ORDER as f64).exp()
}

fn subtree_fraction(cand: &Prepared, refr: &Prepared) -> f64 {
    if cand.nodes == 0 {
        return 0.0;
    }
    clipped(&cand.subtrees, &refr.subtrees) as f64 / cand.nodes as f64
}

/// BLEU with uniform weights over orders 1 to 4 and a brevity penalty.
/// An order with no matching n-gram contributes `1 / (l + 1)`, where
/// `l` is the number of candidate n-grams of that order.
pub fn ngram_match(cand: &TokenStream, refr: &TokenStream) -> Result<f64> {
    if cand.is_empty() || refr.is_empty() {
        return Err(Error::Data("ngram_match needs two non-empty token streams".into()));
    }
    let mut i = Interner::default();
    let a = i.ngrams(cand);
    let b = i.ngrams(refr);
    Ok(bleu(&a, &b))
}

/// Fraction of the candidate's subtrees found in the reference, matched
/// as multisets.
pub fn syntax_match(cand: &SyntaxTree, refr: &SyntaxTree) -> f64 {
    let mut i = Interner::default();
    let a = bag(i.shapes(cand).into_iter());
    let b = bag(i.shapes(refr).into_iter());
    if cand.is_empty() {
        return 0.0;
    }
    clipped(&a, &b) as f64 / cand.len() as f64
}

/// Jaccard index of the edge sets; two empty sets match fully.
pub fn dataflow_match(cand: &DataflowEdgeSet, refr: &DataflowEdgeSet) -> f64 {
    if cand.is_empty() && refr.is_empty() {
        return 1.0;
    }
    let inter = cand.edges.intersection(&refr.edges).count();
    let union = cand.len() + refr.len() - inter;
    inter as f64 / union as f64
}

/// Scores an unordered pair of samples, indexed into the analyzed list.
pub trait PairScorer {
    fn score(&self, a: usize, b: usize) -> SimilarityScore;
}

/// The three metrics, directional ones averaged over both directions.
pub struct CodeBleuScorer {
    prepared: Vec<Prepared>,
}

impl CodeBleuScorer {
    pub fn new(prepared: Vec<Prepared>) -> CodeBleuScorer {
        CodeBleuScorer { prepared }
    }

    pub fn directed(&self, a: usize, b: usize) -> SimilarityScore {
        let (a, b) = (&self.prepared[a], &self.prepared[b]);
        SimilarityScore {
            ngram: bleu(&a.ngrams, &b.ngrams),
            syntax: subtree_fraction(a, b),
            dataflow: dataflow_match(&a.dataflow, &b.dataflow),
        }
    }
}

impl PairScorer for CodeBleuScorer {
    fn score(&self, a: usize, b: usize) -> SimilarityScore {
        SimilarityScore::mean(self.directed(a, b), self.directed(b, a))
    }
}

/// Median; even counts take the mean of the two central values.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    #[default]
    SameTask,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiversityOptions {
    pub pairing: Pairing,
    pub seed: u64,
    /// Uniformly subsample groups with more pairs than this.
    pub max_pairs: Option<usize>,
}

impl Default for DiversityOptions {
    fn default() -> DiversityOptions {
        DiversityOptions {
            pairing: Pairing::SameTask,
            seed: crate::corpus::DEFAULT_SEED,
            max_pairs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub models: Vec<String>,
    pub pairs: usize,
    pub scored: usize,
    pub median: SimilarityScore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub format_version: u32,
    pub models: Vec<String>,
    pub options: DiversityOptions,
    /// Samples left out because they do not parse.
    pub skipped: Vec<String>,
    pub intra: Vec<GroupStats>,
    pub inter: Vec<GroupStats>,
    pub intra_avg: SimilarityScore,
    pub inter_avg: SimilarityScore,
    pub gap: SimilarityScore,
}

fn group_samples(samples: &[&CodeSample], models: &[String]) -> Result<Vec<BTreeMap<u32, Vec<usize>>>> {
    let mut out: Vec<BTreeMap<u32, Vec<usize>>> = vec![BTreeMap::new(); models.len()];
    for (i, s) in samples.iter().enumerate() {
        if let Some(m) = models.iter().position(|m| *m == s.model_label) {
            out[m].entry(s.task_id).or_default().push(i);
        }
    }
    for (m, tasks) in out.iter().enumerate() {
        let shared = out
            .iter()
            .enumerate()
            .any(|(o, other)| o != m && tasks.keys().any(|t| other.contains_key(t)));
        if !shared {
            return Err(Error::Data(format!("model `{}` shares no task with the other models", models[m])));
        }
    }
    Ok(out)
}

fn summarize(models: Vec<String>, pairs: Vec<(usize, usize)>, opts: &DiversityOptions, stream: u64, scorer: &dyn PairScorer) -> Result<GroupStats> {
    let total = pairs.len();
    if total == 0 {
        return Err(Error::Data(match models.as_slice() {
            [m] => format!("model `{m}` has no task with two or more samples"),
            _ => format!("models {} share no task", models.join(" and ")),
        }));
    }
    let chosen: Vec<(usize, usize)> = match opts.max_pairs {
        Some(cap) if total > cap => {
            let mut rng = unit_rng(opts.seed, stream);
            let mut idx = sample(&mut rng, total, cap).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| pairs[i]).collect()
        }
        _ => pairs,
    };
    let scores: Vec<SimilarityScore> = chosen.iter().map(|&(a, b)| scorer.score(a, b)).collect();
    let col = |f: fn(&SimilarityScore) -> f64| median(&scores.iter().map(f).collect::<Vec<_>>());
    Ok(GroupStats {
        models,
        pairs: total,
        scored: scores.len(),
        median: SimilarityScore {
            ngram: col(|s| s.ngram),
            syntax: col(|s| s.syntax),
            dataflow: col(|s| s.dataflow),
        },
    })
}

fn average(groups: &[GroupStats]) -> SimilarityScore {
    let n = groups.len() as f64;
    SimilarityScore {
        ngram: groups.iter().map(|g| g.median.ngram).sum::<f64>() / n,
        syntax: groups.iter().map(|g| g.median.syntax).sum::<f64>() / n,
        dataflow: groups.iter().map(|g| g.median.dataflow).sum::<f64>() / n,
    }
}

/// Report over `samples` (already restricted to the analyzed models) with
/// an arbitrary pair scorer indexed into `samples`.
pub fn diversity_report_with(samples: &[&CodeSample], models: &[String], opts: &DiversityOptions, scorer: &dyn PairScorer) -> Result<SimilarityReport> {
    if models.len() < 2 {
        return Err(Error::Data("diversity analysis needs at least two models".into()));
    }
    let distinct: BTreeSet<&String> = models.iter().collect();
    if distinct.len() != models.len() {
        return Err(Error::Data("model list contains duplicates".into()));
    }
    let groups = group_samples(samples, models)?;
    let mut intra = Vec::new();
    for (m, tasks) in groups.iter().enumerate() {
        let mut pairs = Vec::new();
        for ids in tasks.values() {
            for (x, &a) in ids.iter().enumerate() {
                for &b in &ids[x + 1..] {
                    pairs.push((a, b));
                }
            }
        }
        intra.push(summarize(vec![models[m].clone()], pairs, opts, m as u64, scorer)?);
    }
    let mut inter = Vec::new();
    for m in 0..models.len() {
        for o in m + 1..models.len() {
            let mut pairs = Vec::new();
            for (task, ids) in &groups[m] {
                if let Some(other) = groups[o].get(task) {
                    for &a in ids {
                        for &b in other {
                            pairs.push((a, b));
                        }
                    }
                }
            }
            let stream = (models.len() + m * models.len() + o) as u64;
            inter.push(summarize(vec![models[m].clone(), models[o].clone()], pairs, opts, stream, scorer)?);
        }
    }
    let intra_avg = average(&intra);
    let inter_avg = average(&inter);
    Ok(SimilarityReport {
        format_version: REPORT_FORMAT_VERSION,
        models: models.to_vec(),
        options: opts.clone(),
        skipped: Vec::new(),
        intra,
        inter,
        intra_avg,
        inter_avg,
        gap: intra_avg.minus(inter_avg),
    })
}

/// Same-task diversity analysis of the listed models with the three
/// code similarity metrics. Samples that do not parse are skipped and
/// listed in the report.
pub fn diversity_report(c: &Corpus, models: &[String], opts: &DiversityOptions) -> Result<SimilarityReport> {
    let mut interner = Interner::default();
    let mut kept = Vec::new();
    let mut prepared = Vec::new();
    let mut skipped = Vec::new();
    for s in c.samples().iter().filter(|s| models.contains(&s.model_label)) {
        match interner.prepare_source(&s.source) {
            Ok(p) => {
                kept.push(s);
                prepared.push(p);
            }
            Err(_) => skipped.push(s.id.clone()),
        }
    }
    let scorer = CodeBleuScorer::new(prepared);
    let mut report = diversity_report_with(&kept, models, opts, &scorer)?;
    report.skipped = skipped;
    Ok(report)
}

impl SimilarityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Intra block, inter block, averages and gap, two decimals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, block: &str, name: &str, s: &SimilarityScore| {
            let _ = writeln!(out, "{block:<6} {name:<44} {:>6.2} {:>6.2} {:>8.2}", s.ngram, s.syntax, s.dataflow);
        };
        let _ = writeln!(out, "{:<6} {:<44} {:>6} {:>6} {:>8}", "", "Model(s)", "N-gram", "Syntax", "Dataflow");
        for g in &self.intra {
            row(&mut out, "Intra", &g.models[0], &g.median);
        }
        for g in &self.inter {
            row(&mut out, "Inter", &g.models.join(" x "), &g.median);
        }
        row(&mut out, "Avg", "intra", &self.intra_avg);
        row(&mut out, "Avg", "inter", &self.inter_avg);
        row(&mut out, "Gap", "intra - inter", &self.gap);
        out
    }
}
