use std::fs;

use jsattr::corpus::{deduplicate, load_corpus, load_records, stratified_split, syntax_check, CodeSample, Corpus, Ratio, Variant};
use jsattr::Error;

fn record(id: &str, model: &str, task: u32, variant: &str, source: &str) -> String {
    serde_json::json!({"id": id, "model": model, "task_id": task, "variant": variant, "source": source}).to_string()
}

fn write(dir: &tempfile::TempDir, name: &str, lines: &[String]) -> std::path::PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, lines.join("\n") + "\n").unwrap();
    p
}

fn synthetic(labels: &[&str], per_label: usize) -> Corpus {
    let mut v = Vec::new();
    for l in labels {
        for i in 0..per_label {
            v.push(CodeSample::new(format!("{l}-{i}"), *l, (i % 250) as u32 + 1, Variant::Original, format!("const v{i} = {i};")));
        }
    }
    Corpus::new(v)
}

#[test]
fn loads_requested_variant_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        &dir,
        "a.jsonl",
        &[
            record("1", "gpt-4o", 1, "original", "let a = 1;"),
            record("2", "gpt-4o", 1, "mangled", "let a=1;"),
            record("3", "gpt-5", 2, "original", "let b = 2;"),
            record("4", "gpt-4o", 3, "original", "let c = 3;"),
        ],
    );
    let c = load_corpus(&p, Variant::Original).unwrap();
    assert_eq!(c.samples().iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["1", "3", "4"]);
    assert_eq!(c.label_set(), ["gpt-4o", "gpt-5"]);
    let m = load_corpus(&p, Variant::Mangled).unwrap();
    assert_eq!(m.len(), 1);
    assert!(m.samples().iter().all(|s| s.variant == Variant::Mangled));
}

#[test]
fn loads_directories_and_json_arrays() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir, "b.jsonl", &[record("2", "m", 1, "original", "x;")]);
    write(&dir, "a.jsonl", &[record("1", "m", 1, "original", "y;")]);
    let arr = format!("[{}, {}]", record("3", "n", 2, "original", "z;"), record("4", "n", 2, "minified", "z;"));
    fs::write(dir.path().join("c.json"), arr).unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let c = load_corpus(dir.path(), Variant::Original).unwrap();
    assert_eq!(c.samples().iter().map(|s| s.id.as_str()).collect::<Vec<_>>(), ["1", "2", "3"]);
}

#[test]
fn empty_source_is_an_error_at_its_index() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        &dir,
        "a.jsonl",
        &[record("1", "m", 1, "original", "x;"), record("2", "m", 1, "original", "   \n ")],
    );
    match load_corpus(&p, Variant::Original) {
        Err(Error::Record { index, message, .. }) => {
            assert_eq!(index, 1);
            assert!(message.contains("source"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_variant_field_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = serde_json::json!({"id": "1", "model": "m", "task_id": 1, "source": "x;"}).to_string();
    let p = write(&dir, "a.jsonl", &[record("0", "m", 1, "original", "y;"), bad]);
    let err = load_records(&p).unwrap_err().to_string();
    assert!(err.contains("record 1") && err.contains("variant"), "{err}");
    let p = write(&dir, "b.jsonl", &["{not json".to_string()]);
    assert!(load_records(&p).unwrap_err().to_string().contains("record 0"));
}

#[test]
fn round_trip_preserves_sources_and_extra_fields() {
    let dir = tempfile::tempdir().unwrap();
    let tricky = "const s = \"\\u00e9\\n\";\n\t// ✓ comment\r\nlet t = `${s}`;\n";
    let mut line: serde_json::Value = serde_json::from_str(&record("1", "m", 7, "original", tricky)).unwrap();
    line["prompt_hash"] = "abc".into();
    line["meta"] = serde_json::json!({"tokens": 12});
    let p = write(&dir, "a.jsonl", &[line.to_string(), record("2", "n", 8, "original", "x;")]);
    let first = load_corpus(&p, Variant::Original).unwrap();
    let out = dir.path().join("out.jsonl");
    first.write_jsonl(&out).unwrap();
    let second = load_corpus(&out, Variant::Original).unwrap();
    assert_eq!(first, second);
    assert_eq!(second.samples()[0].source, tricky);
    assert_eq!(second.samples()[0].extra["prompt_hash"], "abc");
}

#[test]
fn dedup_examples() {
    let s = |id: &str, src: &str| CodeSample::new(id, "m", 1, Variant::Original, src);
    let c = Corpus::new(vec![s("1", "let a = 1;"), s("2", "let a = 1;")]);
    let d = deduplicate(&c);
    assert_eq!((d.corpus.len(), d.removed), (1, 1));
    assert_eq!(d.corpus.samples()[0].id, "1");
    let c = Corpus::new(vec![s("1", "// first\nlet a = 1;"), s("2", "let a =\n  1; /* other */")]);
    assert_eq!(deduplicate(&c).removed, 1);
    let c = Corpus::new(vec![s("1", "let a = 1;"), s("2", "let a = 2;"), s("3", "let b = 1;")]);
    let d = deduplicate(&c);
    assert_eq!((d.corpus.len(), d.removed), (3, 0));
    assert!(deduplicate(&Corpus::default()).corpus.is_empty());
}

#[test]
fn dedup_key_includes_label_and_task() {
    let c = Corpus::new(vec![
        CodeSample::new("1", "m", 1, Variant::Original, "x;"),
        CodeSample::new("2", "n", 1, Variant::Original, "x;"),
        CodeSample::new("3", "m", 2, Variant::Original, "x;"),
    ]);
    assert_eq!(deduplicate(&c).removed, 0);
}

#[test]
fn syntax_check_examples() {
    let s = |src: &str| CodeSample::new("1", "m", 1, Variant::Original, src);
    assert!(syntax_check(&s("const a = 1;")));
    assert!(!syntax_check(&s("let = ;")));
}

#[test]
fn split_ten_per_label() {
    let c = synthetic(&["a", "b", "c"], 10);
    let sp = stratified_split(&c, Ratio::TRAIN_DEFAULT, 42).unwrap();
    for l in ["a", "b", "c"] {
        assert_eq!(sp.train.label_counts()[l], 8);
        assert_eq!(sp.valid.label_counts()[l], 2);
    }
}

#[test]
fn split_of_twelve_thousand_five_hundred() {
    let c = synthetic(&["m1", "m2", "m3", "m4", "m5"], 2500);
    let sp = stratified_split(&c, Ratio::TRAIN_DEFAULT, 42).unwrap();
    assert!(sp.train.label_counts().values().all(|&n| n == 2000));
    assert_eq!(sp.valid.len(), 2500);
}

#[test]
fn split_is_deterministic_and_seed_dependent() {
    let c = synthetic(&["a", "b"], 50);
    let ids = |sp: &jsattr::corpus::SplitPair| sp.train.samples().iter().map(|s| s.id.clone()).collect::<Vec<_>>();
    let a = stratified_split(&c, Ratio::TRAIN_DEFAULT, 7).unwrap();
    let b = stratified_split(&c, Ratio::TRAIN_DEFAULT, 7).unwrap();
    let other = stratified_split(&c, Ratio::TRAIN_DEFAULT, 8).unwrap();
    assert_eq!(ids(&a), ids(&b));
    assert_ne!(ids(&a), ids(&other));
}

#[test]
fn split_rejects_singleton_label() {
    let mut c = synthetic(&["a"], 5).into_samples();
    c.push(CodeSample::new("z", "lonely", 1, Variant::Original, "x;"));
    let err = stratified_split(&Corpus::new(c), Ratio::TRAIN_DEFAULT, 1).unwrap_err();
    assert!(err.to_string().contains("lonely"));
}
