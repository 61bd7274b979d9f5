//! Whitespace/comment removal and scope-aware identifier mangling.

use std::collections::{HashMap, HashSet};

use crate::ast::{flags, NodeKind, SyntaxTree};
use crate::error::Result;
use crate::lexer::{is_id_continue, Lexeme, PUNCTUATORS};
use crate::parser::{parse_full, Parsed};
use crate::scope::{analyze, BindingId, ScopeInfo};
use crate::token::{is_keyword, TokenKind};

/// Words never produced by the mangler even though they are valid
/// binding names in module code.
const AVOID: &[&str] = &[
    "arguments", "as", "async", "eval", "from", "get", "meta", "of", "set", "target", "undefined",
];

/// Removes comments and whitespace. A single space is kept only where
/// two tokens would otherwise lex differently, and a line break where a
/// semicolon was inserted automatically.
pub fn minify(source: &str) -> Result<String> {
    let parsed = parse_full(source)?;
    Ok(emit(source, &parsed, &HashMap::new()))
}

/// Renames local bindings to `a`, `b`, ..., `z`, `aa`, ... and minifies.
///
/// Imported and exported bindings and unresolved names keep their
/// names. A module that calls `eval` is only minified.
pub fn mangle(source: &str) -> Result<String> {
    let parsed = parse_full(source)?;
    let info = analyze(&parsed.tree);
    let names = mangle_names(&info);
    let renames = token_renames(&parsed.tree, &info, &names);
    Ok(emit(source, &parsed, &renames))
}

/// The `n`th name of the sequence `a`..`z`, `aa`, `ab`, ...
pub fn short_name(mut n: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

/// New name for every renamed binding.
pub fn mangle_names(info: &ScopeInfo) -> HashMap<BindingId, String> {
    let mut out = HashMap::new();
    if info.uses_eval() {
        return out;
    }
    let renamable = |b: BindingId| {
        let binding = &info.bindings[b as usize];
        binding.kind != crate::scope::BindingKind::Import && !binding.exported
    };
    let mut forbidden: HashSet<&str> = info.unresolved.iter().map(String::as_str).collect();
    forbidden.extend(AVOID);
    for (i, b) in info.bindings.iter().enumerate() {
        if !renamable(i as BindingId) {
            forbidden.insert(b.name.as_str());
        }
    }
    let mut assigned: Vec<Vec<String>> = vec![Vec::new(); info.scopes.len()];
    for (s, scope) in info.scopes.iter().enumerate() {
        let mut used: HashSet<String> = HashSet::new();
        let mut parent = scope.parent;
        while let Some(p) = parent {
            used.extend(assigned[p as usize].iter().cloned());
            parent = info.scopes[p as usize].parent;
        }
        let mut next = 0;
        for &b in &scope.bindings {
            if !renamable(b) {
                continue;
            }
            let name = loop {
                let candidate = short_name(next);
                next += 1;
                if !is_keyword(&candidate) && !forbidden.contains(candidate.as_str()) && !used.contains(&candidate) {
                    break candidate;
                }
            };
            assigned[s].push(name.clone());
            out.insert(b, name);
        }
    }
    out
}

/// Replacement text keyed by token start offset.
fn token_renames(tree: &SyntaxTree, info: &ScopeInfo, names: &HashMap<BindingId, String>) -> HashMap<usize, String> {
    let mut out = HashMap::new();
    for (&b, new) in names {
        let binding = &info.bindings[b as usize];
        for &ident in binding.decls.iter().chain(&binding.refs) {
            let start = tree.span(ident).start();
            let text = if is_shorthand_value(tree, ident) {
                format!("{}:{new}", binding.name)
            } else {
                new.clone()
            };
            out.insert(start, text);
        }
    }
    out
}

fn is_shorthand_value(tree: &SyntaxTree, ident: u32) -> bool {
    let Some(parent) = tree.parent(ident) else {
        return false;
    };
    let (prop, child) = if tree.kind(parent) == NodeKind::AssignmentPattern && tree.children(parent)[0] == ident {
        match tree.parent(parent) {
            Some(p) => (p, parent),
            None => return false,
        }
    } else {
        (parent, ident)
    };
    tree.kind(prop) == NodeKind::Property
        && tree.has_flag(prop, flags::SHORTHAND)
        && tree.children(prop).get(1) == Some(&child)
}

fn emit(source: &str, parsed: &Parsed, renames: &HashMap<usize, String>) -> String {
    let asi: HashSet<usize> = parsed.asi_offsets.iter().copied().collect();
    let mut out = String::with_capacity(source.len());
    let mut prev: Option<(Lexeme, &str)> = None;
    for tok in &parsed.tokens {
        let text = match renames.get(&tok.start) {
            Some(t) if tok.kind == TokenKind::Identifier => t.as_str(),
            _ => tok.text(source),
        };
        if let Some((p, ptext)) = prev {
            if asi.contains(&tok.start) {
                out.push('\n');
            } else if needs_space(&p, ptext, tok, text) {
                out.push(' ');
            }
        }
        out.push_str(text);
        prev = Some((*tok, text));
    }
    out
}

fn needs_space(prev: &Lexeme, ptext: &str, next: &Lexeme, ntext: &str) -> bool {
    let (Some(last), Some(first)) = (ptext.chars().next_back(), ntext.chars().next()) else {
        return false;
    };
    let word = |c: char| is_id_continue(c) || c == '\\';
    if word(last) && word(first) {
        return true;
    }
    match prev.kind {
        TokenKind::NumericLiteral | TokenKind::BigIntLiteral if word(first) => return true,
        TokenKind::NumericLiteral if first == '.' && ptext.bytes().all(|b| b.is_ascii_digit()) => return true,
        TokenKind::RegExpLiteral if word(first) => return true,
        _ => {}
    }
    if last == '/' && (first == '/' || first == '*') {
        return true;
    }
    if prev.kind == TokenKind::Punctuator && next.kind == TokenKind::Punctuator {
        let joined = format!("{ptext}{ntext}");
        return PUNCTUATORS
            .iter()
            .any(|p| p.len() > ptext.len() && p.starts_with(ptext) && joined.starts_with(p));
    }
    false
}
