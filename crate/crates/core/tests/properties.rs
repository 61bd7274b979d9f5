use std::collections::{BTreeMap, BTreeSet};

use jsattr::corpus::{deduplicate, stratified_split, CodeSample, Corpus, Ratio, Variant};
use jsattr::features::{build_vocabulary, TokenPolicy};
use jsattr::similarity::median;
use proptest::prelude::*;

const SNIPPETS: &[&str] = &[
    "const a = 1;",
    "let b = a + 2;",
    "function f(x) { return x * 2; }",
    "import fs from 'fs';\nexport const read = (p) => fs.readFileSync(p);",
    "class Box { constructor(v) { this.v = v; } get() { return this.v; } }",
    "for (let i = 0; i < 3; i++) { console.log(i); }",
    "const { a, b: [c] } = obj;",
    "async function g() { await h(); }",
];

fn decorate(src: &str, style: u8) -> String {
    match style % 4 {
        0 => src.to_string(),
        1 => format!("// header\n{src}\n"),
        2 => src.replace(' ', "  ").replace(';', " ;\n"),
        _ => format!("/* block */ {src} /* tail */"),
    }
}

fn arb_corpus() -> impl Strategy<Value = Corpus> {
    prop::collection::vec((0..3usize, 1..4u32, 0..SNIPPETS.len(), any::<u8>()), 0..40).prop_map(|items| {
        Corpus::new(
            items
                .into_iter()
                .enumerate()
                .map(|(i, (l, task, s, style))| {
                    CodeSample::new(i.to_string(), ["alpha", "beta", "gamma"][l], task, Variant::Original, decorate(SNIPPETS[s], style))
                })
                .collect(),
        )
    })
}

/// Every label gets at least two samples.
fn arb_split_corpus() -> impl Strategy<Value = Corpus> {
    (prop::collection::vec(2..15usize, 1..4), arb_corpus()).prop_map(|(sizes, extra)| {
        let mut v = Vec::new();
        for (l, n) in sizes.into_iter().enumerate() {
            for i in 0..n {
                v.push(CodeSample::new(format!("s{l}-{i}"), ["alpha", "beta", "gamma"][l], 1, Variant::Original, SNIPPETS[i % SNIPPETS.len()]));
            }
        }
        let labels: BTreeSet<String> = v.iter().map(|s| s.model_label.clone()).collect();
        v.extend(extra.into_samples().into_iter().filter(|s| labels.contains(&s.model_label)));
        Corpus::new(v)
    })
}

fn ids(c: &Corpus) -> Vec<&str> {
    c.samples().iter().map(|s| s.id.as_str()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dedup_is_idempotent(c in arb_corpus()) {
        let once = deduplicate(&c);
        let twice = deduplicate(&once.corpus);
        prop_assert_eq!(&twice.corpus, &once.corpus);
        prop_assert_eq!(twice.removed, 0);
        prop_assert_eq!(once.corpus.len() + once.removed, c.len());
    }

    #[test]
    fn split_is_deterministic_and_partitions(c in arb_split_corpus(), seed in any::<u64>(), num in 1..10u64) {
        let counts = c.label_counts();
        let ratio = Ratio::new(num, 10).unwrap();
        let a = stratified_split(&c, ratio, seed).unwrap();
        let b = stratified_split(&c, ratio, seed).unwrap();
        prop_assert_eq!(ids(&a.train), ids(&b.train));
        prop_assert_eq!(ids(&a.valid), ids(&b.valid));
        let train: BTreeSet<&str> = ids(&a.train).into_iter().collect();
        let valid: BTreeSet<&str> = ids(&a.valid).into_iter().collect();
        prop_assert!(train.is_disjoint(&valid));
        let all: BTreeSet<&str> = ids(&c).into_iter().collect();
        prop_assert_eq!(train.union(&valid).copied().collect::<BTreeSet<_>>(), all);
        let tc = a.train.label_counts();
        for (label, n) in counts {
            let got = *tc.get(&label).unwrap_or(&0) as f64;
            prop_assert!((got - ratio.as_f64() * n as f64).abs() < 1.0);
        }
    }

    #[test]
    fn vocabulary_ignores_corpus_order(c in arb_corpus(), rot in any::<usize>()) {
        prop_assume!(!c.is_empty());
        let mut s = c.samples().to_vec();
        let k = rot % s.len();
        s.rotate_left(k);
        s.reverse();
        let a = build_vocabulary(&c, TokenPolicy::default()).unwrap();
        let b = build_vocabulary(&Corpus::new(s), TokenPolicy::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn tfidf_ignores_comments_and_whitespace(c in arb_corpus(), pick in any::<usize>(), style in any::<u8>()) {
        prop_assume!(!c.is_empty());
        let v = build_vocabulary(&c, TokenPolicy::default()).unwrap();
        let src = SNIPPETS[pick % SNIPPETS.len()];
        prop_assert_eq!(v.tfidf(src).unwrap(), v.tfidf(&decorate(src, style)).unwrap());
    }

    #[test]
    fn median_ignores_order(mut xs in prop::collection::vec(0.0..1.0f64, 1..50), seed in any::<u64>()) {
        let m = median(&xs);
        let n = xs.len();
        xs.rotate_left((seed as usize) % n);
        prop_assert_eq!(m, median(&xs));
        let below = xs.iter().filter(|&&x| x < m).count();
        let above = xs.iter().filter(|&&x| x > m).count();
        prop_assert!(below <= n / 2 && above <= n / 2);
    }
}

#[test]
fn labels_are_sorted_everywhere() {
    let c = Corpus::new(vec![
        CodeSample::new("1", "zeta", 1, Variant::Original, "x;"),
        CodeSample::new("2", "alpha", 1, Variant::Original, "y;"),
        CodeSample::new("3", "mid", 1, Variant::Original, "z;"),
    ]);
    assert_eq!(c.label_set(), ["alpha", "mid", "zeta"]);
    let counts: BTreeMap<String, usize> = c.label_counts();
    assert_eq!(counts.keys().cloned().collect::<Vec<_>>(), c.label_set());
}
