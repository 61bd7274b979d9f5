use std::path::Path;
use std::process::{Command, Output};

use jsattr::classifiers::{Algorithm, ClassifierSpec, GboostParams, Hyperparams};
use jsattr::evaluation::{run_experiment, EvalReport, ExperimentConfig};
use jsattr::corpus::Variant;
use serde_json::{json, Value};

fn jsattr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jsattr"))
        .current_dir(dir)
        .env_remove("LLM_NODEJS_ROOT")
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_jsonl(path: &Path, records: &[Value]) {
    let text: String = records.iter().map(|r| format!("{r}\n")).collect();
    std::fs::write(path, text).unwrap();
}

fn record(id: usize, model: &str, task: u32, source: &str) -> Value {
    json!({"id": format!("r{id}"), "model": model, "task_id": task, "variant": "original", "source": source})
}

/// Five labels with distinct habits, twelve tasks each.
fn styled_corpus(path: &Path) {
    let mut v = Vec::new();
    let mut id = 0;
    for task in 1..=12u32 {
        let bodies = [
            format!("function solve(n) {{ let total = 0; for (let i = 0; i < n; i++) {{ total += i * {task}; }} return total; }}"),
            format!("const solve = (n) => Array.from({{ length: n }}, (_, i) => i * {task}).reduce((a, b) => a + b, 0);"),
            format!("var solve = function (n) {{ var s = 0; var i = 0; while (i < n) {{ s = s + i * {task}; i++; }} return s; }};"),
            format!("class Solver {{ run(n) {{ const xs = []; for (const k of [...Array(n).keys()]) xs.push(k * {task}); return xs.length; }} }}"),
            format!("async function solve(n) {{ try {{ return await Promise.resolve(n * {task}); }} catch (e) {{ return null; }} }}"),
        ];
        for (m, body) in bodies.iter().enumerate() {
            for k in 0..2 {
                v.push(record(id, &format!("model-{m}"), task, &format!("{body}\n// variant {k}\nconsole.log(solve({k}));")));
                id += 1;
            }
        }
    }
    write_jsonl(path, &v);
}

#[test]
fn ingest_counts_kept_duplicates_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let recs: Vec<Value> = (0..5).map(|i| record(i, "m", i as u32 + 1, &format!("let x{i} = {i};"))).collect();
    write_jsonl(&dir.path().join("five.jsonl"), &recs);
    let o = jsattr(dir.path(), &["ingest", "--corpus", "five.jsonl", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/ingest_summary.json")).unwrap()).unwrap();
    assert_eq!((s["kept"].as_u64(), s["removed_duplicates"].as_u64()), (Some(5), Some(0)));

    let mut recs = recs;
    recs.push(record(9, "m", 1, "let  x0 =  0 ; // same program"));
    recs.push(record(10, "m", 2, "let = ;"));
    write_jsonl(&dir.path().join("seven.jsonl"), &recs);
    let o = jsattr(dir.path(), &["ingest", "--corpus", "seven.jsonl", "--out", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("b/ingest_summary.json")).unwrap()).unwrap();
    assert_eq!(s["removed_duplicates"], 1);
    assert_eq!(s["kept"], 5);
    assert_eq!(s["parse_failures"][0]["index"], 6);
    assert_eq!(s["parse_failures"][0]["id"], "r10");
    let kept = std::fs::read_to_string(dir.path().join("b/corpus.jsonl")).unwrap();
    assert_eq!(kept.lines().count(), 5);
}

#[test]
fn transform_minify_outputs_parse() {
    let dir = tempfile::tempdir().unwrap();
    let srcs = ["function f(a) {\n  // add\n  return a + 1;\n}", "const x = `t${ 1 + 2 }`;  /* c */", "let r = /ab+c/g.test('abc')\n"];
    let recs: Vec<Value> = srcs.iter().enumerate().map(|(i, s)| record(i, "m", 1, s)).collect();
    write_jsonl(&dir.path().join("c.jsonl"), &recs);
    let o = jsattr(dir.path(), &["transform", "--op", "minify", "--corpus", "c.jsonl", "--out", "t"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("t/minified.jsonl")).unwrap();
    let rows: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 3);
    for (row, src) in rows.iter().zip(srcs) {
        let out = row["source"].as_str().unwrap();
        assert_eq!(row["variant"], "minified");
        assert!(jsfront::parse(out).is_ok(), "{out}");
        assert!(out.len() < src.len());
    }
}

#[test]
fn missing_classifier_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    styled_corpus(&dir.path().join("d.jsonl"));
    std::fs::write(dir.path().join("exp.toml"), "corpus = \"d.jsonl\"\nout = \"o\"\n[classifier]\nseed = 1\n").unwrap();
    let o = jsattr(dir.path(), &["train", "--config", "exp.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("classifier.algorithm"), "{}", stderr(&o));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn config_errors_print_the_field_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.toml"), "[classifier]\nalgorithm = \"gboost\"\nlearning = 2\n").unwrap();
    let o = jsattr(dir.path(), &["train", "--config", "a.toml", "--corpus", "x", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("field `classifier.learning`"), "{}", stderr(&o));

    std::fs::write(dir.path().join("b.toml"), "[classifier]\nalgorithm = \"random_forest\"\n[classifier.hyperparams]\ntrees = \"many\"\n").unwrap();
    let o = jsattr(dir.path(), &["train", "--config", "b.toml", "--corpus", "x", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("classifier.hyperparams.trees"), "{}", stderr(&o));

    std::fs::write(dir.path().join("c.toml"), "variant = \"pretty\"\n").unwrap();
    let o = jsattr(dir.path(), &["ingest", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("field `variant`"), "{}", stderr(&o));
}

#[test]
fn usage_and_data_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jsattr(dir.path(), &["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(jsattr(dir.path(), &["--help"]).status.code(), Some(0));
    let o = jsattr(dir.path(), &["ingest", "--corpus", "missing.jsonl", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = jsattr(dir.path(), &["ingest", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("corpus"));
}

#[test]
fn stage_errors_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![record(0, "a", 1, "x;"), record(1, "a", 2, "y;"), record(2, "b", 1, "z;")];
    write_jsonl(&dir.path().join("s.jsonl"), &recs);
    let o = jsattr(dir.path(), &["train", "--corpus", "s.jsonl", "--algo", "knn", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stage `split`"), "{}", stderr(&o));
}

fn small_gboost() -> &'static str {
    "[classifier]\nalgorithm = \"gboost\"\n[classifier.hyperparams]\nestimators = 20\nmax_depth = 3\n"
}

#[test]
fn eval_reproduces_in_process_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    styled_corpus(&dir.path().join("d.jsonl"));
    std::fs::write(dir.path().join("exp.toml"), small_gboost()).unwrap();
    let o = jsattr(dir.path(), &["train", "--config", "exp.toml", "--corpus", "d.jsonl", "--seed", "5", "--out", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = jsattr(dir.path(), &["eval", "--model", "run", "--corpus", "d.jsonl", "--seed", "5", "--out", "run/eval"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cli = EvalReport::from_json(&std::fs::read_to_string(dir.path().join("run/eval/eval.json")).unwrap()).unwrap();

    let mut cfg = ExperimentConfig::new(
        dir.path().join("d.jsonl"),
        Variant::Original,
        ClassifierSpec {
            params: Hyperparams::Gboost(GboostParams {
                estimators: 20,
                max_depth: 3,
                ..match Hyperparams::defaults(Algorithm::Gboost) {
                    Hyperparams::Gboost(g) => g,
                    _ => unreachable!(),
                }
            }),
            seed: 5,
        },
    );
    cfg.split_seed = 5;
    let exp = run_experiment(&cfg).unwrap();
    assert_eq!(cli.accuracy, exp.report.accuracy);
    assert_eq!(cli.confusion, exp.report.confusion);
    assert!(exp.report.accuracy > 0.5);

    let trained = EvalReport::from_json(&std::fs::read_to_string(dir.path().join("run/report.json")).unwrap()).unwrap();
    assert_eq!(trained.accuracy, cli.accuracy);
}

#[test]
fn flags_override_file_and_outputs_stay_under_out() {
    let dir = tempfile::tempdir().unwrap();
    styled_corpus(&dir.path().join("d.jsonl"));
    std::fs::write(dir.path().join("exp.toml"), format!("seed = 3\nout = \"from-file\"\n{}", small_gboost())).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_jsattr"))
        .current_dir(dir.path())
        .env("LLM_NODEJS_ROOT", dir.path().join("d.jsonl"))
        .args(["train", "--config", "exp.toml", "--seed", "7", "--algo", "logreg", "--out", "flag"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg: toml::Table = std::fs::read_to_string(dir.path().join("flag/config.toml")).unwrap().parse().unwrap();
    assert_eq!(cfg["seed"].as_integer(), Some(7));
    assert_eq!(cfg["classifier"]["algorithm"].as_str(), Some("logreg"));
    let mut entries: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    entries.sort();
    assert_eq!(entries, ["d.jsonl", "exp.toml", "flag"]);

    // The written config reproduces the run.
    let o = jsattr(dir.path(), &["train", "--config", "flag/config.toml", "--out", "again"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = EvalReport::from_json(&std::fs::read_to_string(dir.path().join("flag/report.json")).unwrap()).unwrap();
    let b = EvalReport::from_json(&std::fs::read_to_string(dir.path().join("again/report.json")).unwrap()).unwrap();
    assert_eq!((a.accuracy, &a.confusion), (b.accuracy, &b.confusion));
}

#[test]
fn similarity_and_cross_check_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    styled_corpus(&dir.path().join("d.jsonl"));
    let o = jsattr(
        dir.path(),
        &["similarity", "--corpus", "d.jsonl", "--models", "model-0,model-1,model-2", "--max-pairs", "50", "--out", "sim"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sim/similarity.json")).unwrap()).unwrap();
    assert_eq!(r["intra"].as_array().unwrap().len(), 3);
    assert!(r["gap"]["ngram"].as_f64().unwrap() > 0.0);

    let o = jsattr(dir.path(), &["train", "--corpus", "d.jsonl", "--algo", "knn", "--out", "m"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = jsattr(dir.path(), &["cross-check", "--model", "m", "--corpus", "d.jsonl", "--out", "x"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = EvalReport::from_json(&std::fs::read_to_string(dir.path().join("x/cross_check.json")).unwrap()).unwrap();
    assert_eq!(r.metadata.valid_size, 120);

    write_jsonl(&dir.path().join("other.jsonl"), &[record(0, "stranger", 1, "x;")]);
    let o = jsattr(dir.path(), &["cross-check", "--model", "m", "--corpus", "other.jsonl", "--out", "y"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stranger"));
}
