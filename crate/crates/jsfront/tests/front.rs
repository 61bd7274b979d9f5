use std::process::Command;

use jsfront::{
    dataflow_edges, line_col, mangle, minify, parse, syntax_check, tokenize, Error, NodeKind, SyntaxTree,
    TokenKind,
};

fn kinds(src: &str) -> Vec<(TokenKind, String)> {
    tokenize(src).unwrap().iter().map(|t| (t.kind, t.text.clone())).collect()
}

fn sexp(src: &str) -> String {
    let t = parse(src).unwrap();
    t.subtree_sexp(t.root())
}

#[test]
fn tokenize_let_statement() {
    use TokenKind::*;
    let expected = [
        (Keyword, "let"),
        (Identifier, "x"),
        (Punctuator, "="),
        (NumericLiteral, "1"),
        (Punctuator, ";"),
    ];
    let got = kinds("let x = 1;");
    assert_eq!(got.len(), expected.len());
    for ((k, t), (ek, et)) in got.iter().zip(expected) {
        assert_eq!((*k, t.as_str()), (ek, et));
    }
}

#[test]
fn tokenize_drops_comments() {
    let got: Vec<_> = kinds("// note\nfoo()").into_iter().map(|(_, t)| t).collect();
    assert_eq!(got, ["foo", "(", ")"]);
}

#[test]
fn tokenize_reports_unterminated_literals() {
    for (src, offset) in [("x = 'abc", 4), ("x = `abc", 4), ("x = /abc", 4)] {
        match tokenize(src) {
            Err(Error::Lex { offset: o, .. }) => assert_eq!(o, offset, "{src}"),
            other => panic!("{src}: {other:?}"),
        }
    }
}

#[test]
fn token_spans_are_increasing_and_disjoint() {
    let src = "a = `x${ {b: /re/g} }y` / 2; // tail\n/* c */ f(1n, .5)";
    let ts = tokenize(src).unwrap();
    for w in ts.tokens.windows(2) {
        assert!(w[0].span.end() <= w[1].span.start());
    }
    for t in &ts {
        assert_eq!(&src[t.span.range()], t.text);
        assert!(!t.text.contains("//") || t.kind == TokenKind::RegExpLiteral || t.kind == TokenKind::StringLiteral);
    }
}

#[test]
fn parse_assignment_statement() {
    assert_eq!(
        sexp("x = 1;"),
        "(Program(ExpressionStatement(AssignmentExpression(Identifier)(NumericLiteral))))"
    );
}

#[test]
fn parse_import_declaration() {
    let t = parse("import fs from 'fs';").unwrap();
    let top = t.children(t.root());
    assert_eq!(top.len(), 1);
    assert_eq!(t.kind(top[0]), NodeKind::ImportDeclaration);
}

#[test]
fn parse_error_has_position_and_hint() {
    match parse("function f() {\n  return 1 +;\n}") {
        Err(Error::Syntax { line, column, message, .. }) => {
            assert_eq!((line, column), (2, 13));
            assert!(message.contains("unexpected"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    match parse("if (x {}") {
        Err(Error::Syntax { message, .. }) => assert!(message.contains("expected `)`"), "{message}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(line_col("a\nb", 2), (2, 1));
}

#[test]
fn post_2020_syntax_is_rejected() {
    for src in ["class A { x = 1 }", "a ||= b", "x = 1_000", "await f()", "class A { #p() {} }", "with (o) {}"] {
        assert!(parse(src).is_err(), "{src}");
    }
}

#[test]
fn syntax_check_examples() {
    assert!(syntax_check("const a = 1;"));
    assert!(!syntax_check("let = ;"));
}

#[test]
fn ast_json_export_round_trips() {
    let t = parse("const {a, b: [c]} = f(`x${y}`);").unwrap();
    let json = t.to_json();
    assert_eq!(json["kind"], "Program");
    let back = SyntaxTree::from_json(&json).unwrap();
    assert_eq!(back.kinds_preorder(), t.kinds_preorder());
    assert_eq!(back.subtree_sexp(back.root()), t.subtree_sexp(t.root()));
}

#[test]
fn dataflow_single_dependency() {
    let e = dataflow_edges(&parse("const a=1; const b=a+1;").unwrap());
    assert_eq!(e.edges.len(), 1);
    assert!(e.contains(1, 0));
    assert_eq!(e.var_count, 2);
    assert!(dataflow_edges(&parse("const a=1; const b=2;").unwrap()).is_empty());
}

#[test]
fn dataflow_skips_globals_and_imports() {
    let e = dataflow_edges(&parse("import q from 'q'; const a = q + window.x; const b = a;").unwrap());
    assert_eq!(e.edges.iter().map(|&(d, _, r)| (d, r)).collect::<Vec<_>>(), [(1, 0)]);
}

#[test]
fn dataflow_shadowing_fixture_matches_hand_enumeration() {
    // Variables by first definition: 0 base, 1 acc, 2 scale, 3 n,
    // 4 inner base, 5 inner acc, 6 item, 7 out, 8 x, 9 y.
    let src = include_str!("fixtures/shadowing.js");
    assert_eq!(src.lines().count(), 15);
    let e = dataflow_edges(&parse(src).unwrap());
    let expected = [
        (1, 0),
        (4, 3),
        (5, 4),
        (5, 3),
        (5, 5),
        (1, 1),
        (1, 2),
        (1, 6),
        (7, 1),
        (7, 0),
        (8, 1),
        (9, 1),
        (8, 7),
        (9, 9),
    ];
    let mut got: Vec<(u32, u32)> = e.edges.iter().map(|&(d, _, r)| (d, r)).collect();
    let mut want: Vec<(u32, u32)> = expected.to_vec();
    got.sort_unstable();
    want.sort_unstable();
    assert_eq!(got, want);
    assert_eq!(e.var_count, 10);
}

#[test]
fn minify_examples() {
    assert_eq!(minify("let  x   =  1 ; // c").unwrap(), "let x=1;");
    let s = "a = b + +c - -d / /re/g.x; e = 1 .toString(); f = /x/ instanceof g\nh()";
    let once = minify(s).unwrap();
    assert_eq!(once, "a=b+ +c- -d/ /re/g.x;e=1 .toString();f=/x/ instanceof g\nh()");
    assert_eq!(minify(&once).unwrap(), once);
    assert!(minify("let = ;").is_err());
}

#[test]
fn mangle_examples() {
    assert_eq!(mangle("function f(alpha){ return alpha+1; }").unwrap(), "function a(b){return b+1;}");
    let no_locals = "console.log(window.x, 'y');";
    assert_eq!(mangle(no_locals).unwrap(), minify(no_locals).unwrap());
}

#[test]
fn mangle_keeps_properties_imports_exports_and_globals() {
    let src = "import { readFile as rf } from 'fs';\nexport const api = 1;\nconst local = { key: rf };\nconst { key } = local;\nconsole.log(key, local.key, api);";
    let out = mangle(src).unwrap();
    assert_eq!(
        out,
        "import{readFile as rf}from'fs';export const api=1;const a={key:rf};const{key:b}=a;console.log(b,a.key,api);"
    );
}

#[test]
fn mangle_is_disabled_by_eval() {
    let src = "function f(alpha) { return eval('alpha'); }";
    assert_eq!(mangle(src).unwrap(), minify(src).unwrap());
}

#[test]
fn mangle_reuses_names_across_sibling_scopes() {
    let out = mangle("function f(p) { return p; } function g(q) { return q; }").unwrap();
    assert_eq!(out, "function a(c){return c;}function b(c){return c;}");
}

#[test]
fn mangle_preserves_behavior_under_node() {
    let src = include_str!("fixtures/shadowing_runtime.mjs");
    let Ok(probe) = Command::new("node").arg("--version").output() else {
        eprintln!("node not available; skipping runtime comparison");
        return;
    };
    assert!(probe.status.success());
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, code: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, code).unwrap();
        let out = Command::new("node").arg(&path).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let original = run("original.mjs", src);
    let mangled_src = mangle(src).unwrap();
    assert!(!mangled_src.contains("counter2"));
    let mangled = run("mangled.mjs", &mangled_src);
    let minified = run("minified.mjs", &minify(src).unwrap());
    assert!(original.lines().count() >= 4);
    assert_eq!(original, mangled);
    assert_eq!(original, minified);
}
