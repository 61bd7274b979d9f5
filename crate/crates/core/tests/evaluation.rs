use std::fs;

use jsattr::classifiers::{fit, Algorithm, ClassifierSpec};
use jsattr::corpus::{load_corpus, Variant};
use jsattr::evaluation::{cross_validate_external, evaluate, metrics, run_experiment, table2, EvalReport, ExperimentConfig};
use jsattr::features::FeatureMatrix;

#[test]
fn perfect_predictions() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![if i % 2 == 0 { 0.0 } else { 5.0 }]).collect();
    let y: Vec<&str> = (0..10).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
    let x = FeatureMatrix::from_dense(&rows).unwrap();
    let m = fit(&ClassifierSpec::new(Algorithm::Knn, 0), &x, &y).unwrap();
    let r = evaluate(&m, &x, &y).unwrap();
    assert_eq!((r.accuracy, r.macro_precision, r.macro_f1), (1.0, 1.0, 1.0));
    assert_eq!(r.confusion, vec![vec![5, 0], vec![0, 5]]);
    assert!(evaluate(&m, &x, &vec!["c"; 10]).unwrap_err().to_string().contains('c'));
}

#[test]
fn confusion_example() {
    let m = metrics(&[vec![3, 1], vec![2, 4]]);
    assert!((m.accuracy - 0.7).abs() < 1e-12);
    assert!((m.macro_precision - (3.0 / 5.0 + 4.0 / 5.0) / 2.0).abs() < 1e-12);
}

/// Two labels x 10 programs with distinct habits.
fn tiny_corpus(dir: &std::path::Path) -> std::path::PathBuf {
    let mut lines = Vec::new();
    for i in 0..10 {
        let a = format!("const value{i} = require('fs');\nconst data = value{i}.readFileSync('x{i}');\nmodule.exports = data;");
        let b = format!("let items = [{i}, {}];\nfor (let k = 0; k < items.length; k++) {{ console.log(items[k]); }}", i + 1);
        for (model, src) in [("model-a", a), ("model-b", b)] {
            lines.push(serde_json::json!({"id": format!("{model}-{i}"), "model": model, "task_id": i + 1, "variant": "original", "source": src}).to_string());
        }
    }
    let p = dir.join("tiny.jsonl");
    fs::write(&p, lines.join("\n")).unwrap();
    p
}

#[test]
fn tiny_experiment_is_well_formed_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = tiny_corpus(dir.path());
    let out = dir.path().join("out");
    let mut cfg = ExperimentConfig::new(&corpus, Variant::Original, ClassifierSpec::new(Algorithm::RandomForest, 5));
    cfg.out = Some(out.clone());
    let a = run_experiment(&cfg).unwrap();
    let r = &a.report;
    assert_eq!(r.labels, ["model-a", "model-b"]);
    assert_eq!(r.confusion.iter().flatten().sum::<u64>(), 4);
    assert_eq!(r.metadata.train_size, 16);
    assert!(r.metadata.dataset_digest.as_ref().unwrap().len() == 64);
    assert_eq!(r.accuracy, 1.0);
    for f in ["report.json", "confusion.csv", "model.json", "vocabulary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let back = EvalReport::from_json(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(&back, r);

    let b = run_experiment(&cfg).unwrap();
    let strip = |r: &EvalReport| {
        let mut r = r.clone();
        r.train_time_secs = 0.0;
        r.to_json().unwrap()
    };
    assert_eq!(strip(&a.report), strip(&b.report));
    assert!(table2(&[a.report.clone()]).contains("Random Forest"));
}

#[test]
fn stage_errors_are_annotated() {
    let cfg = ExperimentConfig::new("/nonexistent/corpus.jsonl", Variant::Original, ClassifierSpec::new(Algorithm::Knn, 0));
    let err = run_experiment(&cfg).err().unwrap();
    assert_eq!(err.stage(), Some("load"));
    assert!(err.to_string().starts_with("load:"));

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(tiny_corpus(dir.path()), Variant::Original, ClassifierSpec::new(Algorithm::Knn, 0));
    cfg.per_class = Some(1);
    assert_eq!(run_experiment(&cfg).err().unwrap().stage(), Some("split"));
}

#[test]
fn external_validation_uses_the_same_path() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = tiny_corpus(dir.path());
    let cfg = ExperimentConfig::new(&corpus, Variant::Original, ClassifierSpec::new(Algorithm::Logreg, 1));
    let exp = run_experiment(&cfg).unwrap();
    let all = load_corpus(&corpus, Variant::Original).unwrap();
    let subset = all.filter(|s| s.task_id <= 3);
    let ext = cross_validate_external(&exp.model, &exp.vocabulary, &subset).unwrap();
    let x = jsattr::features::vectorize(&subset, &exp.vocabulary).unwrap();
    let direct = evaluate(&exp.model, &x, &subset.labels()).unwrap();
    assert_eq!(ext.confusion, direct.confusion);
    assert_eq!(exp.model.predict(&x).unwrap().len(), subset.len());

    let mut samples = subset.into_samples();
    samples[0].model_label = "stranger".into();
    let err = cross_validate_external(&exp.model, &exp.vocabulary, &jsattr::corpus::Corpus::new(samples)).unwrap_err();
    assert!(err.to_string().contains("stranger"));
}

#[test]
fn shuffled_validation_order_changes_nothing() {
    let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 7) as f64, (i % 3) as f64]).collect();
    let y: Vec<&str> = (0..30).map(|i| ["a", "b", "c"][i % 3]).collect();
    let x = FeatureMatrix::from_dense(&rows).unwrap();
    let m = fit(&ClassifierSpec::new(Algorithm::Gboost, 0), &x, &y).unwrap();
    let r1 = evaluate(&m, &x, &y).unwrap();
    let mut rev_rows = rows.clone();
    rev_rows.reverse();
    let mut rev_y = y.clone();
    rev_y.reverse();
    let r2 = evaluate(&m, &FeatureMatrix::from_dense(&rev_rows).unwrap(), &rev_y).unwrap();
    assert_eq!(r1.confusion, r2.confusion);
    let cols: Vec<u64> = (0..3).map(|c| r1.confusion.iter().map(|r| r[c]).sum()).collect();
    assert_eq!(cols.iter().sum::<u64>(), 30);
    assert!(r1.confusion.iter().all(|r| r.iter().sum::<u64>() == 10));
}
