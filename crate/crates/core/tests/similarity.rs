use std::collections::BTreeSet;

use jsattr::corpus::{CodeSample, Corpus, Variant};
use jsattr::similarity::{
    dataflow_match, diversity_report, diversity_report_with, median, ngram_match, syntax_match, DiversityOptions, Interner, PairScorer,
    SimilarityScore, CodeBleuScorer,
};
use jsfront::{dataflow_edges, parse, tokenize, DataflowEdgeSet, Relation};

#[test]
fn bleu_fixture() {
    // p1 = 3/4, p2 = 1/3, p3 = (0+1)/(2+1), p4 = (0+1)/(1+1), equal lengths.
    let expected = (1.0f64 / 24.0).powf(0.25);
    let got = ngram_match(&tokenize("a b c d").unwrap(), &tokenize("a b x d").unwrap()).unwrap();
    assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
}

#[test]
fn bleu_brevity_penalty() {
    // Candidate of 2 tokens against a reference of 4 containing it.
    let p = [1.0, 1.0, 1.0 / 1.0, 1.0 / 1.0];
    let expected = (1.0f64 - 2.0).exp() * p.iter().product::<f64>().powf(0.25);
    let got = ngram_match(&tokenize("a b").unwrap(), &tokenize("a b c d").unwrap()).unwrap();
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn bleu_edge_cases() {
    let s = tokenize("const a = b + c;").unwrap();
    assert!((ngram_match(&s, &s).unwrap() - 1.0).abs() < 1e-12);
    let words: String = (0..30).map(|i| format!("x{i} ")).collect();
    let other: String = (0..30).map(|i| format!("y{i} ")).collect();
    assert!(ngram_match(&tokenize(&words).unwrap(), &tokenize(&other).unwrap()).unwrap() < 0.05);
    assert!(ngram_match(&tokenize("").unwrap(), &s).is_err());
    assert!(ngram_match(&s, &tokenize("// only a comment").unwrap()).is_err());
}

/// Subtrees enumerated by hand for three 5-node programs.
#[test]
fn syntax_fixture() {
    let assign_num = [
        "(Program(ExpressionStatement(AssignmentExpression(Identifier)(NumericLiteral))))",
        "(ExpressionStatement(AssignmentExpression(Identifier)(NumericLiteral)))",
        "(AssignmentExpression(Identifier)(NumericLiteral))",
        "(Identifier)",
        "(NumericLiteral)",
    ];
    let assign_id = [
        "(Program(ExpressionStatement(AssignmentExpression(Identifier)(Identifier))))",
        "(ExpressionStatement(AssignmentExpression(Identifier)(Identifier)))",
        "(AssignmentExpression(Identifier)(Identifier))",
        "(Identifier)",
        "(Identifier)",
    ];
    let call = [
        "(Program(ExpressionStatement(CallExpression(Identifier)(Identifier))))",
        "(ExpressionStatement(CallExpression(Identifier)(Identifier)))",
        "(CallExpression(Identifier)(Identifier))",
        "(Identifier)",
        "(Identifier)",
    ];
    let trees = [parse("x = 1;").unwrap(), parse("x = y;").unwrap(), parse("f(x);").unwrap()];
    let hand = [&assign_num, &assign_id, &call];
    for (t, h) in trees.iter().zip(hand) {
        let got: Vec<String> = t.preorder().map(|n| t.subtree_sexp(n)).collect();
        assert_eq!(got, h.to_vec());
    }
    // Matched counts worked out from the lists above.
    let expect = [
        [5.0, 1.0, 1.0],
        [1.0, 5.0, 2.0],
        [1.0, 2.0, 5.0],
    ];
    for i in 0..3 {
        for j in 0..3 {
            let got = syntax_match(&trees[i], &trees[j]);
            assert!((got - expect[i][j] / 5.0).abs() < 1e-12, "{i} {j}: {got}");
        }
    }
    let renamed = parse("z = w;").unwrap();
    assert_eq!(syntax_match(&trees[1], &renamed), 1.0);
}

#[test]
fn dataflow_jaccard() {
    let set = |edges: &[(u32, u32)]| DataflowEdgeSet {
        edges: edges.iter().map(|&(a, b)| (a, Relation::ComputedFrom, b)).collect::<BTreeSet<_>>(),
        var_count: 4,
    };
    assert_eq!(dataflow_match(&set(&[(1, 0), (2, 1)]), &set(&[(2, 1), (3, 2)])), 1.0 / 3.0);
    assert_eq!(dataflow_match(&set(&[]), &set(&[])), 1.0);
    assert_eq!(dataflow_match(&set(&[(1, 0)]), &set(&[(1, 0)])), 1.0);
    assert_eq!(dataflow_match(&set(&[(1, 0)]), &set(&[])), 0.0);
    let a = set(&[(1, 0), (2, 0), (3, 1)]);
    let b = set(&[(2, 0), (3, 2)]);
    assert_eq!(dataflow_match(&a, &b), dataflow_match(&b, &a));
    assert_eq!(dataflow_match(&a, &b), 1.0 / 4.0);
}

#[test]
fn metrics_survive_formatting_and_mangling() {
    let src = "function add(first, second) {\n  const total = first + second; // sum\n  return total;\n}\nexport default add;";
    let reformatted = jsfront::minify(src).unwrap();
    let mangled = jsfront::mangle(src).unwrap();
    let (t0, t1) = (tokenize(src).unwrap(), tokenize(&reformatted).unwrap());
    assert_eq!(ngram_match(&t0, &t1).unwrap(), 1.0);
    let (p0, p2) = (parse(src).unwrap(), parse(&mangled).unwrap());
    assert_eq!(syntax_match(&p0, &p2), 1.0);
    assert_eq!(dataflow_match(&dataflow_edges(&p0), &dataflow_edges(&p2)), 1.0);
}

#[test]
fn median_rule() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    assert_eq!(median(&[2.0, 3.0, 1.0, 4.0]), 2.5);
}

fn sample(id: &str, model: &str, task: u32, src: &str) -> CodeSample {
    CodeSample::new(id, model, task, Variant::Original, src)
}

struct Constant(f64);

impl PairScorer for Constant {
    fn score(&self, _: usize, _: usize) -> SimilarityScore {
        SimilarityScore::constant(self.0)
    }
}

#[test]
fn constant_metric_gives_zero_gap() {
    let mut v = Vec::new();
    for m in ["m1", "m2", "m3"] {
        for i in 0..3 {
            v.push(sample(&format!("{m}{i}"), m, 1, "x;"));
        }
    }
    let refs: Vec<&CodeSample> = v.iter().collect();
    let models: Vec<String> = ["m1", "m2", "m3"].map(String::from).to_vec();
    let r = diversity_report_with(&refs, &models, &DiversityOptions::default(), &Constant(0.37)).unwrap();
    for g in r.intra.iter().chain(&r.inter) {
        assert_eq!(g.median, SimilarityScore::constant(0.37));
    }
    assert_eq!(r.intra[0].pairs, 3);
    assert_eq!(r.inter[0].pairs, 9);
    assert_eq!(r.gap, SimilarityScore::constant(0.0));
}

#[test]
fn identical_code_per_model_has_positive_gap() {
    let bodies = [
        "const items = [1, 2];\nconst total = items.reduce((a, b) => a + b, 0);\nconsole.log(total);",
        "const items = [3];\nlet out = [];\nfor (const item of items) { if (item > 2) { out.push(item * 3); } }\nexport { out };",
        "function run(q) { const url = q + '/x'; return fetch(url).then(r => r.json()); }\nrun('/api');",
    ];
    let mut v = Vec::new();
    for (m, body) in ["m1", "m2", "m3"].iter().zip(bodies) {
        for task in 1..=3 {
            for rep in 0..4 {
                v.push(sample(&format!("{m}-{task}-{rep}"), m, task, body));
            }
        }
    }
    let models: Vec<String> = ["m1", "m2", "m3"].map(String::from).to_vec();
    let r = diversity_report(&Corpus::new(v), &models, &DiversityOptions::default()).unwrap();
    for g in &r.intra {
        assert_eq!(g.median, SimilarityScore::constant(1.0));
        assert_eq!(g.pairs, 3 * 6);
    }
    assert!(r.gap.ngram > 0.0 && r.gap.syntax > 0.0 && r.gap.dataflow > 0.0);
    for (d, (a, b)) in [
        (r.gap.ngram, (r.intra_avg.ngram, r.inter_avg.ngram)),
        (r.gap.syntax, (r.intra_avg.syntax, r.inter_avg.syntax)),
        (r.gap.dataflow, (r.intra_avg.dataflow, r.inter_avg.dataflow)),
    ] {
        assert_eq!(d, a - b);
    }
    let json: jsattr::similarity::SimilarityReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(json, r);
    assert!(r.to_table().contains("m1 x m2"));
}

#[test]
fn averaged_pair_score_is_symmetric() {
    let srcs = [
        "const a = 1; const b = a + 2; console.log(b);",
        "let x = 5;\nlet y = x * x;\nlet z = y - x;\nexport { z };",
    ];
    let mut i = Interner::default();
    let prepared = srcs.iter().map(|s| i.prepare_source(s).unwrap()).collect();
    let s = CodeBleuScorer::new(prepared);
    assert_eq!(s.score(0, 1), s.score(1, 0));
    assert_ne!(s.directed(0, 1).ngram, s.directed(1, 0).ngram);
    assert_eq!(s.score(0, 0), SimilarityScore::constant(1.0));
}

#[test]
fn model_without_shared_tasks_is_an_error() {
    let v = vec![
        sample("1", "m1", 1, "x;"),
        sample("2", "m1", 1, "y;"),
        sample("3", "m2", 2, "x;"),
        sample("4", "m2", 2, "y;"),
    ];
    let models: Vec<String> = ["m1", "m2"].map(String::from).to_vec();
    let err = diversity_report(&Corpus::new(v), &models, &DiversityOptions::default()).unwrap_err();
    assert!(err.to_string().contains("m1"), "{err}");
}

#[test]
fn pair_cap_samples_deterministically() {
    let mut v = Vec::new();
    for m in ["m1", "m2"] {
        for i in 0..12 {
            v.push(sample(&format!("{m}{i}"), m, 1, &format!("const v = {i} + w{};", i % 3)));
        }
    }
    let models: Vec<String> = ["m1", "m2"].map(String::from).to_vec();
    let opts = DiversityOptions {
        max_pairs: Some(10),
        ..DiversityOptions::default()
    };
    let c = Corpus::new(v);
    let a = diversity_report(&c, &models, &opts).unwrap();
    let b = diversity_report(&c, &models, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.intra[0].pairs, 66);
    assert_eq!(a.intra[0].scored, 10);
}
