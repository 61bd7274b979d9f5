//! Recursive-descent parser for ECMAScript 2020 module code.
//!
//! Produces ESTree-shaped trees. Parenthesized expressions and object or
//! array literals are parsed as expressions first and converted in place
//! to patterns when an `=>` or `=` shows they were binding targets.

use std::collections::BTreeSet;

use crate::ast::{flags, NodeId, NodeKind, SyntaxTree, TreeBuilder};
use crate::error::{Error, Result};
use crate::lexer::{LexState, Lexeme, Lexer, SlashMode};
use crate::token::{Span, TokenKind};

/// Set on arrow functions that were not wrapped in parentheses; such an
/// arrow ends the enclosing expression.
const BARE_ARROW: u16 = 1 << 15;

/// Parse result with the token sequence the parser consumed and the
/// offsets of tokens before which a semicolon was inserted because of a
/// line break.
#[derive(Clone, Debug)]
pub struct Parsed {
    pub tree: SyntaxTree,
    pub(crate) tokens: Vec<Lexeme>,
    pub(crate) asi_offsets: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default)]
struct Ctx {
    in_function: bool,
    is_async: bool,
    is_generator: bool,
}

struct Parser<'a> {
    src: &'a str,
    lexer: Lexer<'a>,
    cur: Option<Lexeme>,
    state_before_cur: LexState,
    prev_end: usize,
    b: TreeBuilder,
    tokens: Vec<Lexeme>,
    asi: Vec<usize>,
    ctx: Ctx,
    /// Shorthand properties with defaults (`{a = 1}`) not yet converted
    /// to patterns; any left at the end are errors.
    cover_init: BTreeSet<NodeId>,
}

/// Parses `source` as a module. Syntax errors carry line and column.
pub fn parse(source: &str) -> Result<SyntaxTree> {
    parse_full(source).map(|p| p.tree)
}

pub fn parse_full(source: &str) -> Result<Parsed> {
    let mut p = Parser::new(source)?;
    let root = p.parse_program()?;
    let Parser { b, tokens, asi, .. } = p;
    Ok(Parsed {
        tree: b.finish(root),
        tokens,
        asi_offsets: asi,
    })
}

fn binary_precedence(op: &str) -> Option<(u8, bool)> {
    Some(match op {
        "??" | "||" => (1, true),
        "&&" => (2, true),
        "|" => (3, false),
        "^" => (4, false),
        "&" => (5, false),
        "==" | "!=" | "===" | "!==" => (6, false),
        "<" | ">" | "<=" | ">=" | "instanceof" | "in" => (7, false),
        "<<" | ">>" | ">>>" => (8, false),
        "+" | "-" => (9, false),
        "*" | "/" | "%" => (10, false),
        "**" => (11, false),
        _ => return None,
    })
}

fn is_assign_op(op: &str) -> bool {
    matches!(
        op,
        "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "**=" | "<<=" | ">>=" | ">>>=" | "&=" | "|=" | "^="
    )
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Parser<'a>> {
        let mut lexer = Lexer::new(src);
        let state_before_cur = lexer.state();
        let cur = lexer
            .next_token(SlashMode::Regex)
            .map_err(|e| lex_to_syntax(src, e))?;
        Ok(Parser {
            src,
            lexer,
            cur,
            state_before_cur,
            prev_end: 0,
            b: TreeBuilder::default(),
            tokens: Vec::new(),
            asi: Vec::new(),
            ctx: Ctx::default(),
            cover_init: BTreeSet::new(),
        })
    }

    // ---- token helpers -------------------------------------------------

    fn advance(&mut self) -> Result<()> {
        if let Some(cur) = self.cur {
            self.tokens.push(cur);
            self.prev_end = cur.end;
        }
        self.state_before_cur = self.lexer.state();
        let pos = self.lexer.pos();
        self.cur = match self.lexer.next_token(SlashMode::Heuristic) {
            Ok(t) => t,
            Err(e) => {
                // A failed regex guess may still lex as division.
                self.lexer.rewind(pos, self.state_before_cur);
                self.lexer
                    .next_token(SlashMode::Divide)
                    .map_err(|_| lex_to_syntax(self.src, e))?
            }
        };
        Ok(())
    }

    fn rescan(&mut self, mode: SlashMode) -> Result<()> {
        if let Some(cur) = self.cur {
            self.lexer.rewind(cur.start, self.state_before_cur);
            self.cur = self
                .lexer
                .next_token(mode)
                .map_err(|e| lex_to_syntax(self.src, e))?;
        }
        Ok(())
    }

    fn peek(&self) -> Option<Lexeme> {
        let mut lexer = self.lexer.clone();
        lexer.next_token(SlashMode::Heuristic).ok().flatten()
    }

    fn text(&self) -> &'a str {
        match self.cur {
            Some(c) => &self.src[c.start..c.end],
            None => "",
        }
    }

    fn start(&self) -> usize {
        self.cur.map_or(self.src.len(), |c| c.start)
    }

    fn kind(&self) -> Option<TokenKind> {
        self.cur.map(|c| c.kind)
    }

    fn nl_before(&self) -> bool {
        self.cur.is_some_and(|c| c.nl_before)
    }

    fn is_punct(&self, p: &str) -> bool {
        self.kind() == Some(TokenKind::Punctuator) && self.text() == p
    }

    fn is_kw(&self, k: &str) -> bool {
        self.kind() == Some(TokenKind::Keyword) && self.text() == k
    }

    fn is_ident(&self) -> bool {
        self.kind() == Some(TokenKind::Identifier)
    }

    fn is_contextual(&self, word: &str) -> bool {
        self.is_ident() && self.text() == word
    }

    fn eat_punct(&mut self, p: &str) -> Result<bool> {
        if self.is_punct(p) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p)? {
            Ok(())
        } else {
            Err(self.expected(&format!("`{p}`")))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<()> {
        if self.is_kw(k) {
            self.advance()
        } else {
            Err(self.expected(&format!("`{k}`")))
        }
    }

    fn expect_contextual(&mut self, word: &str) -> Result<()> {
        if self.is_contextual(word) {
            self.advance()
        } else {
            Err(self.expected(&format!("`{word}`")))
        }
    }

    fn found(&self) -> String {
        match self.cur {
            Some(_) => format!("`{}`", self.text()),
            None => "end of input".to_string(),
        }
    }

    fn expected(&self, what: &str) -> Error {
        Error::syntax(
            self.src,
            self.start(),
            format!("expected {what}, found {}", self.found()),
        )
    }

    fn unexpected(&self) -> Error {
        Error::syntax(self.src, self.start(), format!("unexpected {}", self.found()))
    }

    fn error_at(&self, offset: usize, message: &str) -> Error {
        Error::syntax(self.src, offset, message)
    }

    fn consume_semicolon(&mut self) -> Result<()> {
        if self.eat_punct(";")? {
            return Ok(());
        }
        if self.cur.is_none() || self.is_punct("}") {
            return Ok(());
        }
        if self.nl_before() {
            self.asi.push(self.start());
            return Ok(());
        }
        Err(self.expected("`;`"))
    }

    // ---- node helpers --------------------------------------------------

    fn finish(&mut self, kind: NodeKind, start: usize, children: Vec<NodeId>) -> NodeId {
        let end = self.prev_end.max(start);
        self.b.push(kind, Span::new(start, end), children)
    }

    fn leaf_from_cur(&mut self, kind: NodeKind) -> Result<NodeId> {
        let cur = self.cur.ok_or_else(|| self.unexpected())?;
        let id = self.b.push(kind, cur.span(), Vec::new());
        self.b.set_attr(id, cur.text(self.src));
        self.advance()?;
        Ok(id)
    }

    fn is_bare_arrow(&self, id: NodeId) -> bool {
        self.b.kind(id) == NodeKind::ArrowFunctionExpression && self.b.has_flag(id, BARE_ARROW)
    }

    fn with_ctx<T>(&mut self, ctx: Ctx, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let saved = std::mem::replace(&mut self.ctx, ctx);
        let out = f(self);
        self.ctx = saved;
        out
    }

    // ---- program and statements ---------------------------------------

    fn parse_program(&mut self) -> Result<NodeId> {
        let mut body = Vec::new();
        while self.cur.is_some() {
            body.push(self.parse_module_item()?);
        }
        if let Some(&first) = self.cover_init.iter().min_by_key(|&&id| self.b.span(id).start()) {
            return Err(self.error_at(self.b.span(first).start(), "shorthand property default outside a destructuring pattern"));
        }
        Ok(self.b.push(NodeKind::Program, Span::new(0, self.src.len()), body))
    }

    fn peek_is_punct(&self, set: &[&str]) -> bool {
        self.peek().is_some_and(|p| {
            p.kind == TokenKind::Punctuator && set.contains(&p.text(self.src))
        })
    }

    fn parse_module_item(&mut self) -> Result<NodeId> {
        if self.is_kw("import") && !self.peek_is_punct(&["(", "."]) {
            return self.parse_import_declaration();
        }
        if self.is_kw("export") {
            return self.parse_export_declaration();
        }
        self.parse_statement_list_item()
    }

    fn at_async_function(&self) -> bool {
        self.is_contextual("async")
            && self.peek().is_some_and(|p| {
                p.kind == TokenKind::Keyword && p.text(self.src) == "function" && !p.nl_before
            })
    }

    fn parse_statement_list_item(&mut self) -> Result<NodeId> {
        if self.is_kw("function") {
            let start = self.start();
            return self.parse_function(start, true, false, true);
        }
        if self.at_async_function() {
            let start = self.start();
            self.advance()?;
            return self.parse_function(start, true, true, true);
        }
        if self.is_kw("class") {
            return self.parse_class(true, true);
        }
        if self.is_kw("let") || self.is_kw("const") {
            let start = self.start();
            let decl = self.parse_var_declaration(start, false)?;
            self.consume_semicolon()?;
            return Ok(decl);
        }
        if self.is_kw("import") && !self.peek_is_punct(&["(", "."]) {
            return Err(self.error_at(self.start(), "import declarations may only appear at top level"));
        }
        if self.is_kw("export") {
            return Err(self.error_at(self.start(), "export declarations may only appear at top level"));
        }
        self.parse_statement()
    }

    fn parse_statement(&mut self) -> Result<NodeId> {
        let start = self.start();
        let Some(cur) = self.cur else {
            return Err(self.unexpected());
        };
        match (cur.kind, cur.text(self.src)) {
            (TokenKind::Punctuator, "{") => self.parse_block(),
            (TokenKind::Punctuator, ";") => {
                self.advance()?;
                Ok(self.finish(NodeKind::EmptyStatement, start, vec![]))
            }
            (TokenKind::Keyword, "var") => {
                let decl = self.parse_var_declaration(start, false)?;
                self.consume_semicolon()?;
                Ok(decl)
            }
            (TokenKind::Keyword, "if") => self.parse_if(),
            (TokenKind::Keyword, "for") => self.parse_for(),
            (TokenKind::Keyword, "while") => {
                self.advance()?;
                self.expect_punct("(")?;
                let test = self.parse_expression(false)?;
                self.expect_punct(")")?;
                let body = self.parse_statement()?;
                Ok(self.finish(NodeKind::WhileStatement, start, vec![test, body]))
            }
            (TokenKind::Keyword, "do") => {
                self.advance()?;
                let body = self.parse_statement()?;
                self.expect_kw("while")?;
                self.expect_punct("(")?;
                let test = self.parse_expression(false)?;
                self.expect_punct(")")?;
                self.eat_punct(";")?;
                Ok(self.finish(NodeKind::DoWhileStatement, start, vec![body, test]))
            }
            (TokenKind::Keyword, kw @ ("break" | "continue")) => {
                self.advance()?;
                let mut children = Vec::new();
                if self.is_ident() && !self.nl_before() {
                    children.push(self.leaf_from_cur(NodeKind::Identifier)?);
                }
                self.consume_semicolon()?;
                let kind = if kw == "break" {
                    NodeKind::BreakStatement
                } else {
                    NodeKind::ContinueStatement
                };
                Ok(self.finish(kind, start, children))
            }
            (TokenKind::Keyword, "return") => {
                if !self.ctx.in_function {
                    return Err(self.error_at(start, "`return` outside of function"));
                }
                self.advance()?;
                let mut children = Vec::new();
                if !(self.cur.is_none() || self.is_punct(";") || self.is_punct("}") || self.nl_before()) {
                    children.push(self.parse_expression(false)?);
                }
                self.consume_semicolon()?;
                Ok(self.finish(NodeKind::ReturnStatement, start, children))
            }
            (TokenKind::Keyword, "throw") => {
                self.advance()?;
                if self.nl_before() {
                    return Err(self.error_at(self.start(), "illegal newline after `throw`"));
                }
                let arg = self.parse_expression(false)?;
                self.consume_semicolon()?;
                Ok(self.finish(NodeKind::ThrowStatement, start, vec![arg]))
            }
            (TokenKind::Keyword, "try") => self.parse_try(),
            (TokenKind::Keyword, "switch") => self.parse_switch(),
            (TokenKind::Keyword, "debugger") => {
                self.advance()?;
                self.consume_semicolon()?;
                Ok(self.finish(NodeKind::DebuggerStatement, start, vec![]))
            }
            (TokenKind::Keyword, "with") => {
                Err(self.error_at(start, "`with` is not allowed in strict mode"))
            }
            (TokenKind::Keyword, "function" | "class" | "let" | "const") => Err(self.error_at(
                start,
                "declaration not allowed in single-statement context",
            )),
            (TokenKind::Identifier, _) if self.peek_is_punct(&[":"]) => {
                let label = self.leaf_from_cur(NodeKind::Identifier)?;
                self.advance()?; // ':'
                let body = self.parse_statement()?;
                Ok(self.finish(NodeKind::LabeledStatement, start, vec![label, body]))
            }
            _ => {
                let expr = self.parse_expression(false)?;
                self.consume_semicolon()?;
                Ok(self.finish(NodeKind::ExpressionStatement, start, vec![expr]))
            }
        }
    }

    fn parse_block(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.is_punct("}") {
            if self.cur.is_none() {
                return Err(self.expected("`}`"));
            }
            body.push(self.parse_statement_list_item()?);
        }
        self.advance()?;
        Ok(self.finish(NodeKind::BlockStatement, start, body))
    }

    fn parse_if(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        self.expect_punct("(")?;
        let test = self.parse_expression(false)?;
        self.expect_punct(")")?;
        let mut children = vec![test, self.parse_statement()?];
        if self.is_kw("else") {
            self.advance()?;
            children.push(self.parse_statement()?);
        }
        Ok(self.finish(NodeKind::IfStatement, start, children))
    }

    fn parse_var_declaration(&mut self, start: usize, no_in: bool) -> Result<NodeId> {
        let kind = self.text();
        self.advance()?;
        let mut declarators = Vec::new();
        loop {
            let d_start = self.start();
            let id = self.parse_binding_target()?;
            let mut children = vec![id];
            if self.eat_punct("=")? {
                children.push(self.parse_assign(no_in)?);
            }
            declarators.push(self.finish(NodeKind::VariableDeclarator, d_start, children));
            if !self.eat_punct(",")? {
                break;
            }
        }
        let decl = self.finish(NodeKind::VariableDeclaration, start, declarators);
        self.b.set_attr(decl, kind);
        Ok(decl)
    }

    fn parse_for(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        let is_await = if self.is_kw("await") && self.ctx.is_async {
            self.advance()?;
            true
        } else {
            false
        };
        self.expect_punct("(")?;
        let mut init = None;
        if !self.is_punct(";") {
            let init_start = self.start();
            let node = if self.is_kw("var") || self.is_kw("let") || self.is_kw("const") {
                self.parse_var_declaration(init_start, true)?
            } else {
                self.parse_expression(true)?
            };
            let is_of = self.is_contextual("of");
            if is_of || self.is_kw("in") {
                if self.b.kind(node) != NodeKind::VariableDeclaration {
                    self.to_assignable(node, false)?;
                }
                self.advance()?;
                let right = if is_of {
                    self.parse_assign(false)?
                } else {
                    self.parse_expression(false)?
                };
                self.expect_punct(")")?;
                let body = self.parse_statement()?;
                let kind = if is_of {
                    NodeKind::ForOfStatement
                } else {
                    NodeKind::ForInStatement
                };
                let id = self.finish(kind, start, vec![node, right, body]);
                if is_await {
                    self.b.set_flag(id, flags::AWAIT);
                }
                return Ok(id);
            }
            init = Some(node);
        }
        if is_await {
            return Err(self.expected("`of`"));
        }
        let mut children: Vec<NodeId> = init.into_iter().collect();
        self.expect_punct(";")?;
        if !self.is_punct(";") {
            children.push(self.parse_expression(false)?);
        }
        self.expect_punct(";")?;
        if !self.is_punct(")") {
            children.push(self.parse_expression(false)?);
        }
        self.expect_punct(")")?;
        children.push(self.parse_statement()?);
        Ok(self.finish(NodeKind::ForStatement, start, children))
    }

    fn parse_try(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        let mut children = vec![self.parse_block()?];
        let mut complete = false;
        if self.is_kw("catch") {
            let c_start = self.start();
            self.advance()?;
            let mut c_children = Vec::new();
            if self.eat_punct("(")? {
                c_children.push(self.parse_binding_target()?);
                self.expect_punct(")")?;
            }
            c_children.push(self.parse_block()?);
            children.push(self.finish(NodeKind::CatchClause, c_start, c_children));
            complete = true;
        }
        if self.is_kw("finally") {
            self.advance()?;
            children.push(self.parse_block()?);
            complete = true;
        }
        if !complete {
            return Err(self.expected("`catch` or `finally`"));
        }
        Ok(self.finish(NodeKind::TryStatement, start, children))
    }

    fn parse_switch(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        self.expect_punct("(")?;
        let mut children = vec![self.parse_expression(false)?];
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        while !self.eat_punct("}")? {
            let c_start = self.start();
            let mut case_children = Vec::new();
            if self.is_kw("case") {
                self.advance()?;
                case_children.push(self.parse_expression(false)?);
            } else if self.is_kw("default") {
                self.advance()?;
            } else {
                return Err(self.expected("`case`, `default` or `}`"));
            }
            self.expect_punct(":")?;
            while !(self.is_kw("case") || self.is_kw("default") || self.is_punct("}")) {
                if self.cur.is_none() {
                    return Err(self.expected("`}`"));
                }
                case_children.push(self.parse_statement_list_item()?);
            }
            children.push(self.finish(NodeKind::SwitchCase, c_start, case_children));
        }
        Ok(self.finish(NodeKind::SwitchStatement, start, children))
    }

    // ---- modules -------------------------------------------------------

    fn parse_string_literal(&mut self) -> Result<NodeId> {
        if self.kind() != Some(TokenKind::StringLiteral) {
            return Err(self.expected("string literal"));
        }
        self.leaf_from_cur(NodeKind::StringLiteral)
    }

    fn parse_import_declaration(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        let mut children = Vec::new();
        if self.kind() != Some(TokenKind::StringLiteral) {
            let mut need_more = true;
            if self.is_ident() {
                let s = self.start();
                let local = self.parse_binding_ident()?;
                children.push(self.finish(NodeKind::ImportDefaultSpecifier, s, vec![local]));
                need_more = self.eat_punct(",")?;
            }
            if need_more {
                if self.is_punct("*") {
                    let s = self.start();
                    self.advance()?;
                    self.expect_contextual("as")?;
                    let local = self.parse_binding_ident()?;
                    children.push(self.finish(NodeKind::ImportNamespaceSpecifier, s, vec![local]));
                } else if self.eat_punct("{")? {
                    while !self.eat_punct("}")? {
                        let s = self.start();
                        let was_ident = self.is_ident();
                        let imported = self.parse_ident_name()?;
                        let local = if self.is_contextual("as") {
                            self.advance()?;
                            self.parse_binding_ident()?
                        } else {
                            if !was_ident {
                                return Err(self.error_at(s, "reserved word cannot be an import binding"));
                            }
                            self.b.copy(imported)
                        };
                        children.push(self.finish(NodeKind::ImportSpecifier, s, vec![imported, local]));
                        if !self.is_punct("}") {
                            self.expect_punct(",")?;
                        }
                    }
                } else {
                    return Err(self.expected("import specifier"));
                }
            }
            self.expect_contextual("from")?;
        }
        children.push(self.parse_string_literal()?);
        self.consume_semicolon()?;
        Ok(self.finish(NodeKind::ImportDeclaration, start, children))
    }

    fn parse_export_declaration(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        if self.eat_punct("*")? {
            let mut children = Vec::new();
            if self.is_contextual("as") {
                self.advance()?;
                children.push(self.parse_ident_name()?);
            }
            self.expect_contextual("from")?;
            children.push(self.parse_string_literal()?);
            self.consume_semicolon()?;
            return Ok(self.finish(NodeKind::ExportAllDeclaration, start, children));
        }
        if self.is_kw("default") {
            self.advance()?;
            let decl = if self.is_kw("function") {
                let s = self.start();
                self.parse_function(s, true, false, false)?
            } else if self.at_async_function() {
                let s = self.start();
                self.advance()?;
                self.parse_function(s, true, true, false)?
            } else if self.is_kw("class") {
                self.parse_class(true, false)?
            } else {
                let e = self.parse_assign(false)?;
                self.consume_semicolon()?;
                e
            };
            return Ok(self.finish(NodeKind::ExportDefaultDeclaration, start, vec![decl]));
        }
        if self.eat_punct("{")? {
            let mut children = Vec::new();
            while !self.eat_punct("}")? {
                let s = self.start();
                let local = self.parse_ident_name()?;
                let exported = if self.is_contextual("as") {
                    self.advance()?;
                    self.parse_ident_name()?
                } else {
                    self.b.copy(local)
                };
                children.push(self.finish(NodeKind::ExportSpecifier, s, vec![local, exported]));
                if !self.is_punct("}") {
                    self.expect_punct(",")?;
                }
            }
            if self.is_contextual("from") {
                self.advance()?;
                children.push(self.parse_string_literal()?);
            }
            self.consume_semicolon()?;
            return Ok(self.finish(NodeKind::ExportNamedDeclaration, start, children));
        }
        let decl = if self.is_kw("var") || self.is_kw("let") || self.is_kw("const") {
            let s = self.start();
            let d = self.parse_var_declaration(s, false)?;
            self.consume_semicolon()?;
            d
        } else if self.is_kw("function") {
            let s = self.start();
            self.parse_function(s, true, false, true)?
        } else if self.at_async_function() {
            let s = self.start();
            self.advance()?;
            self.parse_function(s, true, true, true)?
        } else if self.is_kw("class") {
            self.parse_class(true, true)?
        } else {
            return Err(self.expected("declaration after `export`"));
        };
        Ok(self.finish(NodeKind::ExportNamedDeclaration, start, vec![decl]))
    }

    // ---- functions and classes ----------------------------------------

    /// Parses `function [*] [name] (params) { body }`; `start` is the
    /// position of `async` when present.
    fn parse_function(&mut self, start: usize, is_decl: bool, is_async: bool, require_name: bool) -> Result<NodeId> {
        self.expect_kw("function")?;
        let is_generator = self.eat_punct("*")?;
        let mut children = Vec::new();
        if self.is_ident() {
            children.push(self.parse_binding_ident()?);
        } else if is_decl && require_name {
            return Err(self.expected("function name"));
        }
        let ctx = Ctx {
            in_function: true,
            is_async,
            is_generator,
        };
        self.with_ctx(ctx, |p| {
            p.parse_params(&mut children)?;
            children.push(p.parse_function_body()?);
            Ok(())
        })?;
        let kind = if is_decl {
            NodeKind::FunctionDeclaration
        } else {
            NodeKind::FunctionExpression
        };
        let id = self.finish(kind, start, children);
        if is_async {
            self.b.set_flag(id, flags::ASYNC);
        }
        if is_generator {
            self.b.set_flag(id, flags::GENERATOR);
        }
        Ok(id)
    }

    fn parse_params(&mut self, out: &mut Vec<NodeId>) -> Result<()> {
        self.expect_punct("(")?;
        while !self.eat_punct(")")? {
            if self.is_punct("...") {
                let s = self.start();
                self.advance()?;
                let target = self.parse_binding_target()?;
                out.push(self.finish(NodeKind::RestElement, s, vec![target]));
                self.expect_punct(")")?;
                break;
            }
            out.push(self.parse_binding_element()?);
            if !self.is_punct(")") {
                self.expect_punct(",")?;
            }
        }
        Ok(())
    }

    fn parse_function_body(&mut self) -> Result<NodeId> {
        self.parse_block()
    }

    /// Method value: a function expression starting at its parameter list.
    fn parse_method_function(&mut self, is_async: bool, is_generator: bool) -> Result<NodeId> {
        let start = self.start();
        let mut children = Vec::new();
        let ctx = Ctx {
            in_function: true,
            is_async,
            is_generator,
        };
        self.with_ctx(ctx, |p| {
            p.parse_params(&mut children)?;
            children.push(p.parse_function_body()?);
            Ok(())
        })?;
        let id = self.finish(NodeKind::FunctionExpression, start, children);
        if is_async {
            self.b.set_flag(id, flags::ASYNC);
        }
        if is_generator {
            self.b.set_flag(id, flags::GENERATOR);
        }
        Ok(id)
    }

    fn parse_class(&mut self, is_decl: bool, require_name: bool) -> Result<NodeId> {
        let start = self.start();
        self.expect_kw("class")?;
        let mut children = Vec::new();
        if self.is_ident() {
            children.push(self.parse_binding_ident()?);
        } else if is_decl && require_name {
            return Err(self.expected("class name"));
        }
        if self.is_kw("extends") {
            self.advance()?;
            let s = self.start();
            let base = self.parse_lhs_base()?;
            children.push(self.parse_subscripts(s, base, false)?);
        }
        let body_start = self.start();
        self.expect_punct("{")?;
        let mut members = Vec::new();
        while !self.eat_punct("}")? {
            if self.eat_punct(";")? {
                continue;
            }
            if self.cur.is_none() {
                return Err(self.expected("`}`"));
            }
            members.push(self.parse_class_member()?);
        }
        let body = self.finish(NodeKind::ClassBody, body_start, members);
        children.push(body);
        let kind = if is_decl {
            NodeKind::ClassDeclaration
        } else {
            NodeKind::ClassExpression
        };
        Ok(self.finish(kind, start, children))
    }

    /// True when the current word is a modifier (not itself the member
    /// or property name).
    fn modifier_applies(&self) -> bool {
        match self.peek() {
            Some(p) => {
                let t = p.text(self.src);
                !(p.kind == TokenKind::Punctuator && matches!(t, "(" | ")" | ":" | "," | "}" | "=" | ";"))
            }
            None => false,
        }
    }

    fn parse_class_member(&mut self) -> Result<NodeId> {
        let start = self.start();
        let mut is_static = false;
        if self.is_kw("static") && self.modifier_applies() {
            self.advance()?;
            is_static = true;
        }
        let (is_async, is_generator, accessor) = self.parse_method_modifiers()?;
        let key_was_constructor = !self.is_punct("[")
            && (self.text() == "constructor"
                || self.text() == "'constructor'"
                || self.text() == "\"constructor\"");
        let (key, computed) = self.parse_property_key()?;
        if !self.is_punct("(") {
            return Err(self.error_at(self.start(), "class fields are not supported; expected `(`"));
        }
        let value = self.parse_method_function(is_async, is_generator)?;
        let id = self.finish(NodeKind::MethodDefinition, start, vec![key, value]);
        let kind = match accessor {
            Some(a) => a,
            None if key_was_constructor && !is_static => "constructor",
            None => "method",
        };
        self.b.set_attr(id, kind);
        if is_static {
            self.b.set_flag(id, flags::STATIC);
        }
        if computed {
            self.b.set_flag(id, flags::COMPUTED);
        }
        Ok(id)
    }

    fn parse_method_modifiers(&mut self) -> Result<(bool, bool, Option<&'static str>)> {
        let mut is_async = false;
        let mut accessor = None;
        if self.is_contextual("async") && self.modifier_applies() && !self.peek().is_some_and(|p| p.nl_before) {
            self.advance()?;
            is_async = true;
        }
        let is_generator = self.eat_punct("*")?;
        if !is_async && !is_generator {
            for word in ["get", "set"] {
                if self.is_contextual(word) && self.modifier_applies() {
                    self.advance()?;
                    accessor = Some(if word == "get" { "get" } else { "set" });
                    break;
                }
            }
        }
        Ok((is_async, is_generator, accessor))
    }

    fn parse_property_key(&mut self) -> Result<(NodeId, bool)> {
        match self.kind() {
            Some(TokenKind::StringLiteral) => Ok((self.leaf_from_cur(NodeKind::StringLiteral)?, false)),
            Some(TokenKind::NumericLiteral) => Ok((self.leaf_from_cur(NodeKind::NumericLiteral)?, false)),
            Some(TokenKind::BigIntLiteral) => Ok((self.leaf_from_cur(NodeKind::BigIntLiteral)?, false)),
            Some(TokenKind::Identifier | TokenKind::Keyword) => {
                Ok((self.leaf_from_cur(NodeKind::Identifier)?, false))
            }
            Some(TokenKind::Punctuator) if self.is_punct("[") => {
                self.advance()?;
                let key = self.parse_assign(false)?;
                self.expect_punct("]")?;
                Ok((key, true))
            }
            _ => Err(self.expected("property name")),
        }
    }

    // ---- patterns ------------------------------------------------------

    fn parse_binding_ident(&mut self) -> Result<NodeId> {
        if !self.is_ident() {
            return Err(self.expected("identifier"));
        }
        self.leaf_from_cur(NodeKind::Identifier)
    }

    fn parse_ident_name(&mut self) -> Result<NodeId> {
        match self.kind() {
            Some(TokenKind::Identifier | TokenKind::Keyword) => self.leaf_from_cur(NodeKind::Identifier),
            _ => Err(self.expected("identifier")),
        }
    }

    fn parse_binding_target(&mut self) -> Result<NodeId> {
        if self.is_punct("[") {
            self.parse_array_pattern()
        } else if self.is_punct("{") {
            self.parse_object_pattern()
        } else {
            self.parse_binding_ident()
        }
    }

    fn parse_binding_element(&mut self) -> Result<NodeId> {
        let start = self.start();
        let target = self.parse_binding_target()?;
        if self.eat_punct("=")? {
            let default = self.parse_assign(false)?;
            return Ok(self.finish(NodeKind::AssignmentPattern, start, vec![target, default]));
        }
        Ok(target)
    }

    fn parse_array_pattern(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.expect_punct("[")?;
        let mut elements = Vec::new();
        loop {
            if self.eat_punct("]")? {
                break;
            }
            if self.eat_punct(",")? {
                continue;
            }
            if self.is_punct("...") {
                let s = self.start();
                self.advance()?;
                let target = self.parse_binding_target()?;
                elements.push(self.finish(NodeKind::RestElement, s, vec![target]));
                self.expect_punct("]")?;
                break;
            }
            elements.push(self.parse_binding_element()?);
            if !self.is_punct("]") {
                self.expect_punct(",")?;
            }
        }
        Ok(self.finish(NodeKind::ArrayPattern, start, elements))
    }

    fn parse_object_pattern(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.expect_punct("{")?;
        let mut props = Vec::new();
        while !self.eat_punct("}")? {
            if self.is_punct("...") {
                let s = self.start();
                self.advance()?;
                let target = self.parse_binding_ident()?;
                props.push(self.finish(NodeKind::RestElement, s, vec![target]));
            } else {
                let s = self.start();
                let key_is_ident = self.is_ident();
                let (key, computed) = self.parse_property_key()?;
                let prop = if self.eat_punct(":")? {
                    let value = self.parse_binding_element()?;
                    self.finish(NodeKind::Property, s, vec![key, value])
                } else {
                    if computed || !key_is_ident {
                        return Err(self.expected("`:`"));
                    }
                    let mut value = self.b.copy(key);
                    if self.eat_punct("=")? {
                        let default = self.parse_assign(false)?;
                        value = self.finish(NodeKind::AssignmentPattern, s, vec![value, default]);
                    }
                    let p = self.finish(NodeKind::Property, s, vec![key, value]);
                    self.b.set_flag(p, flags::SHORTHAND);
                    p
                };
                self.b.set_attr(prop, "init");
                if computed {
                    self.b.set_flag(prop, flags::COMPUTED);
                }
                props.push(prop);
            }
            if !self.is_punct("}") {
                self.expect_punct(",")?;
            }
        }
        Ok(self.finish(NodeKind::ObjectPattern, start, props))
    }

    /// Converts an expression parsed ahead of `=` or `=>` into a pattern.
    fn to_assignable(&mut self, id: NodeId, binding: bool) -> Result<()> {
        let span = self.b.span(id);
        match self.b.kind(id) {
            NodeKind::Identifier => Ok(()),
            NodeKind::MemberExpression if !binding => Ok(()),
            NodeKind::ObjectPattern | NodeKind::ArrayPattern | NodeKind::AssignmentPattern | NodeKind::RestElement => Ok(()),
            NodeKind::ObjectExpression => {
                self.b.set_kind(id, NodeKind::ObjectPattern);
                let children = self.b.children(id).to_vec();
                for (i, c) in children.iter().enumerate() {
                    match self.b.kind(*c) {
                        NodeKind::Property => {
                            if self.b.has_flag(*c, flags::METHOD) || self.b.attr(*c) != Some("init") {
                                return Err(self.error_at(self.b.span(*c).start(), "invalid destructuring target"));
                            }
                            let value = *self.b.children(*c).last().unwrap();
                            self.cover_init.remove(&value);
                            self.to_assignable(value, binding)?;
                        }
                        NodeKind::SpreadElement => {
                            if i + 1 != children.len() {
                                return Err(self.error_at(self.b.span(*c).start(), "rest element must be last"));
                            }
                            self.b.set_kind(*c, NodeKind::RestElement);
                            let arg = self.b.children(*c)[0];
                            self.to_assignable(arg, binding)?;
                        }
                        _ => return Err(self.error_at(self.b.span(*c).start(), "invalid destructuring target")),
                    }
                }
                Ok(())
            }
            NodeKind::ArrayExpression => {
                self.b.set_kind(id, NodeKind::ArrayPattern);
                let children = self.b.children(id).to_vec();
                for c in children {
                    if self.b.kind(c) == NodeKind::SpreadElement {
                        self.b.set_kind(c, NodeKind::RestElement);
                        let arg = self.b.children(c)[0];
                        self.to_assignable(arg, binding)?;
                    } else {
                        self.to_assignable(c, binding)?;
                    }
                }
                Ok(())
            }
            NodeKind::AssignmentExpression if self.b.attr(id) == Some("=") => {
                self.b.set_kind(id, NodeKind::AssignmentPattern);
                self.b.clear_attr(id);
                let left = self.b.children(id)[0];
                self.to_assignable(left, binding)
            }
            _ => Err(self.error_at(span.start(), "invalid assignment target")),
        }
    }

    // ---- expressions ---------------------------------------------------

    fn parse_expression(&mut self, no_in: bool) -> Result<NodeId> {
        let start = self.start();
        let first = self.parse_assign(no_in)?;
        if !self.is_punct(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_punct(",")? {
            items.push(self.parse_assign(no_in)?);
        }
        Ok(self.finish(NodeKind::SequenceExpression, start, items))
    }

    fn parse_assign(&mut self, no_in: bool) -> Result<NodeId> {
        if self.ctx.is_generator && self.is_kw("yield") {
            return self.parse_yield(no_in);
        }
        let start = self.start();
        let left = self.parse_conditional(no_in)?;
        if self.is_bare_arrow(left) {
            return Ok(left);
        }
        if self.kind() == Some(TokenKind::Punctuator) && is_assign_op(self.text()) {
            let op = self.text();
            if op == "=" {
                self.to_assignable(left, false)?;
            } else if !matches!(self.b.kind(left), NodeKind::Identifier | NodeKind::MemberExpression) {
                return Err(self.error_at(self.b.span(left).start(), "invalid assignment target"));
            }
            self.advance()?;
            let right = self.parse_assign(no_in)?;
            let id = self.finish(NodeKind::AssignmentExpression, start, vec![left, right]);
            self.b.set_attr(id, op);
            return Ok(id);
        }
        Ok(left)
    }

    fn starts_expression(&self) -> bool {
        match self.cur {
            None => false,
            Some(c) => match c.kind {
                TokenKind::Punctuator => matches!(
                    c.text(self.src),
                    "(" | "[" | "{" | "+" | "-" | "!" | "~" | "++" | "--" | "/" | "/="
                ),
                TokenKind::Keyword => !matches!(c.text(self.src), "in" | "instanceof" | "of"),
                _ => true,
            },
        }
    }

    fn parse_yield(&mut self, no_in: bool) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        let mut children = Vec::new();
        let mut delegate = false;
        if !self.nl_before() {
            if self.eat_punct("*")? {
                delegate = true;
                children.push(self.parse_assign(no_in)?);
            } else if self.starts_expression() {
                children.push(self.parse_assign(no_in)?);
            }
        }
        let id = self.finish(NodeKind::YieldExpression, start, children);
        if delegate {
            self.b.set_flag(id, flags::DELEGATE);
        }
        Ok(id)
    }

    fn parse_conditional(&mut self, no_in: bool) -> Result<NodeId> {
        let start = self.start();
        let test = self.parse_binary(no_in)?;
        if self.is_bare_arrow(test) || !self.is_punct("?") {
            return Ok(test);
        }
        self.advance()?;
        let cons = self.parse_assign(false)?;
        self.expect_punct(":")?;
        let alt = self.parse_assign(no_in)?;
        Ok(self.finish(NodeKind::ConditionalExpression, start, vec![test, cons, alt]))
    }

    fn parse_binary(&mut self, no_in: bool) -> Result<NodeId> {
        let start = self.start();
        let left = self.parse_unary()?;
        if self.is_bare_arrow(left) {
            return Ok(left);
        }
        self.parse_binary_rhs(start, left, 0, no_in)
    }

    fn current_binary_op(&mut self, no_in: bool) -> Result<Option<(&'a str, u8, bool)>> {
        if self.kind() == Some(TokenKind::RegExpLiteral) {
            self.rescan(SlashMode::Divide)?;
        }
        let Some(cur) = self.cur else { return Ok(None) };
        let text = cur.text(self.src);
        let is_op = match cur.kind {
            TokenKind::Punctuator => true,
            TokenKind::Keyword => matches!(text, "instanceof" | "in"),
            _ => false,
        };
        if !is_op || (no_in && text == "in") {
            return Ok(None);
        }
        Ok(binary_precedence(text).map(|(p, logical)| (text, p, logical)))
    }

    fn parse_binary_rhs(&mut self, start: usize, left: NodeId, min_prec: u8, no_in: bool) -> Result<NodeId> {
        let Some((op, prec, logical)) = self.current_binary_op(no_in)? else {
            return Ok(left);
        };
        if prec <= min_prec {
            return Ok(left);
        }
        if op == "**"
            && matches!(self.b.kind(left), NodeKind::UnaryExpression | NodeKind::AwaitExpression)
            && self.b.span(left).start() == start
        {
            return Err(self.error_at(self.start(), "unary operand of `**` must be parenthesized"));
        }
        self.advance()?;
        let right_start = self.start();
        let right_unary = self.parse_unary()?;
        let next_min = if op == "**" { prec - 1 } else { prec };
        let right = self.parse_binary_rhs(right_start, right_unary, next_min, no_in)?;
        let kind = if logical {
            NodeKind::LogicalExpression
        } else {
            NodeKind::BinaryExpression
        };
        let node = self.finish(kind, start, vec![left, right]);
        self.b.set_attr(node, op);
        self.parse_binary_rhs(start, node, min_prec, no_in)
    }

    fn parse_unary(&mut self) -> Result<NodeId> {
        let start = self.start();
        if self.is_kw("await") && self.ctx.is_async {
            self.advance()?;
            let arg = self.parse_unary()?;
            return Ok(self.finish(NodeKind::AwaitExpression, start, vec![arg]));
        }
        let text = self.text();
        let is_unary = match self.kind() {
            Some(TokenKind::Punctuator) => matches!(text, "!" | "~" | "+" | "-"),
            Some(TokenKind::Keyword) => matches!(text, "typeof" | "void" | "delete"),
            _ => false,
        };
        if is_unary {
            self.advance()?;
            let arg = self.parse_unary()?;
            let id = self.finish(NodeKind::UnaryExpression, start, vec![arg]);
            self.b.set_attr(id, text);
            self.b.set_flag(id, flags::PREFIX);
            return Ok(id);
        }
        if self.is_punct("++") || self.is_punct("--") {
            self.advance()?;
            let arg = self.parse_unary()?;
            if !matches!(self.b.kind(arg), NodeKind::Identifier | NodeKind::MemberExpression) {
                return Err(self.error_at(self.b.span(arg).start(), "invalid update target"));
            }
            let id = self.finish(NodeKind::UpdateExpression, start, vec![arg]);
            self.b.set_attr(id, text);
            self.b.set_flag(id, flags::PREFIX);
            return Ok(id);
        }
        let expr = self.parse_lhs()?;
        if self.is_bare_arrow(expr) {
            return Ok(expr);
        }
        if (self.is_punct("++") || self.is_punct("--")) && !self.nl_before() {
            let op = self.text();
            if !matches!(self.b.kind(expr), NodeKind::Identifier | NodeKind::MemberExpression) {
                return Err(self.error_at(self.b.span(expr).start(), "invalid update target"));
            }
            self.advance()?;
            let id = self.finish(NodeKind::UpdateExpression, start, vec![expr]);
            self.b.set_attr(id, op);
            return Ok(id);
        }
        Ok(expr)
    }

    fn parse_lhs(&mut self) -> Result<NodeId> {
        let start = self.start();
        let base = self.parse_lhs_base()?;
        self.parse_subscripts(start, base, false)
    }

    fn parse_lhs_base(&mut self) -> Result<NodeId> {
        if self.is_kw("new") {
            self.parse_new()
        } else if self.is_kw("super") {
            let id = self.leaf_from_cur(NodeKind::Super)?;
            self.b.clear_attr(id);
            if !(self.is_punct("(") || self.is_punct(".") || self.is_punct("[")) {
                return Err(self.expected("`(`, `.` or `[` after `super`"));
            }
            Ok(id)
        } else if self.is_kw("import") {
            self.parse_import_expression()
        } else {
            self.parse_primary()
        }
    }

    fn parse_import_expression(&mut self) -> Result<NodeId> {
        let start = self.start();
        let meta = self.leaf_from_cur(NodeKind::Identifier)?;
        if self.eat_punct(".")? {
            if !self.is_contextual("meta") {
                return Err(self.expected("`meta`"));
            }
            let prop = self.leaf_from_cur(NodeKind::Identifier)?;
            return Ok(self.finish(NodeKind::MetaProperty, start, vec![meta, prop]));
        }
        self.expect_punct("(")?;
        let source = self.parse_assign(false)?;
        self.expect_punct(")")?;
        // `import` keyword is not a child of ImportExpression in ESTree.
        Ok(self.finish(NodeKind::ImportExpression, start, vec![source]))
    }

    fn parse_new(&mut self) -> Result<NodeId> {
        let start = self.start();
        let new_kw = self.leaf_from_cur(NodeKind::Identifier)?;
        if self.eat_punct(".")? {
            if !self.is_contextual("target") {
                return Err(self.expected("`target`"));
            }
            let prop = self.leaf_from_cur(NodeKind::Identifier)?;
            return Ok(self.finish(NodeKind::MetaProperty, start, vec![new_kw, prop]));
        }
        let callee_start = self.start();
        if self.is_kw("import") {
            return Err(self.error_at(callee_start, "cannot use `new` with `import`"));
        }
        let base = self.parse_lhs_base()?;
        let callee = self.parse_subscripts(callee_start, base, true)?;
        let mut children = vec![callee];
        if self.is_punct("(") {
            children.extend(self.parse_arguments()?.0);
        }
        Ok(self.finish(NodeKind::NewExpression, start, children))
    }

    /// Returns the arguments and whether any spread or trailing comma
    /// appeared.
    fn parse_arguments(&mut self) -> Result<(Vec<NodeId>, bool)> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        let mut trailing_comma = false;
        while !self.eat_punct(")")? {
            let s = self.start();
            if self.eat_punct("...")? {
                let arg = self.parse_assign(false)?;
                args.push(self.finish(NodeKind::SpreadElement, s, vec![arg]));
            } else {
                args.push(self.parse_assign(false)?);
            }
            if !self.is_punct(")") {
                self.expect_punct(",")?;
                trailing_comma = self.is_punct(")");
            }
        }
        Ok((args, trailing_comma))
    }

    fn parse_subscripts(&mut self, start: usize, base: NodeId, no_call: bool) -> Result<NodeId> {
        if self.is_bare_arrow(base) {
            return Ok(base);
        }
        let maybe_async_arrow = !no_call
            && self.b.kind(base) == NodeKind::Identifier
            && self.b.attr(base) == Some("async")
            && self.b.span(base).end() == self.prev_end
            && !self.nl_before();
        let mut expr = base;
        let mut chained = false;
        let mut first = true;
        loop {
            if self.eat_punct(".")? {
                let prop = self.parse_ident_name()?;
                expr = self.finish(NodeKind::MemberExpression, start, vec![expr, prop]);
            } else if self.is_punct("?.") {
                if no_call {
                    return Err(self.error_at(self.start(), "optional chain not allowed in `new` expression"));
                }
                self.advance()?;
                chained = true;
                if self.is_punct("(") {
                    let (args, _) = self.parse_arguments()?;
                    let mut children = vec![expr];
                    children.extend(args);
                    expr = self.finish(NodeKind::CallExpression, start, children);
                } else if self.eat_punct("[")? {
                    let prop = self.parse_expression(false)?;
                    self.expect_punct("]")?;
                    expr = self.finish(NodeKind::MemberExpression, start, vec![expr, prop]);
                    self.b.set_flag(expr, flags::COMPUTED);
                } else {
                    let prop = self.parse_ident_name()?;
                    expr = self.finish(NodeKind::MemberExpression, start, vec![expr, prop]);
                }
                self.b.set_flag(expr, flags::OPTIONAL);
            } else if self.eat_punct("[")? {
                let prop = self.parse_expression(false)?;
                self.expect_punct("]")?;
                expr = self.finish(NodeKind::MemberExpression, start, vec![expr, prop]);
                self.b.set_flag(expr, flags::COMPUTED);
            } else if !no_call && self.is_punct("(") {
                let (args, trailing_comma) = self.parse_arguments()?;
                if first && maybe_async_arrow && self.is_punct("=>") && !self.nl_before() {
                    let _ = trailing_comma;
                    return self.finish_arrow_from_args(start, args, true);
                }
                let mut children = vec![expr];
                children.extend(args);
                expr = self.finish(NodeKind::CallExpression, start, children);
            } else if self.kind() == Some(TokenKind::TemplateLiteral) && self.text().starts_with('`') {
                if chained {
                    return Err(self.error_at(self.start(), "tagged template in optional chain"));
                }
                let quasi = self.parse_template()?;
                expr = self.finish(NodeKind::TaggedTemplateExpression, start, vec![expr, quasi]);
            } else {
                break;
            }
            first = false;
        }
        if chained {
            expr = self.finish(NodeKind::ChainExpression, start, vec![expr]);
        }
        Ok(expr)
    }

    fn finish_arrow_from_args(&mut self, start: usize, args: Vec<NodeId>, is_async: bool) -> Result<NodeId> {
        let n = args.len();
        for (i, &a) in args.iter().enumerate() {
            if self.b.kind(a) == NodeKind::SpreadElement {
                if i + 1 != n {
                    return Err(self.error_at(self.b.span(a).start(), "rest parameter must be last"));
                }
                self.b.set_kind(a, NodeKind::RestElement);
                let arg = self.b.children(a)[0];
                self.to_assignable(arg, true)?;
            } else {
                self.to_assignable(a, true)?;
            }
        }
        self.parse_arrow_body(start, args, is_async)
    }

    fn parse_arrow_body(&mut self, start: usize, mut params: Vec<NodeId>, is_async: bool) -> Result<NodeId> {
        self.expect_punct("=>")?;
        let ctx = Ctx {
            in_function: true,
            is_async,
            is_generator: false,
        };
        let mut expression_body = false;
        let body = self.with_ctx(ctx, |p| {
            if p.is_punct("{") {
                p.parse_function_body()
            } else {
                expression_body = true;
                p.parse_assign(false)
            }
        })?;
        params.push(body);
        let id = self.finish(NodeKind::ArrowFunctionExpression, start, params);
        self.b.set_flag(id, BARE_ARROW);
        if expression_body {
            self.b.set_flag(id, flags::EXPRESSION_BODY);
        }
        if is_async {
            self.b.set_flag(id, flags::ASYNC);
        }
        Ok(id)
    }

    fn parse_primary(&mut self) -> Result<NodeId> {
        let start = self.start();
        let Some(cur) = self.cur else {
            return Err(self.unexpected());
        };
        let text = cur.text(self.src);
        match cur.kind {
            TokenKind::Keyword => match text {
                "this" => {
                    let id = self.leaf_from_cur(NodeKind::ThisExpression)?;
                    self.b.clear_attr(id);
                    Ok(id)
                }
                "true" | "false" => self.leaf_from_cur(NodeKind::BooleanLiteral),
                "null" => self.leaf_from_cur(NodeKind::NullLiteral),
                "function" => self.parse_function(start, false, false, false),
                "class" => self.parse_class(false, false),
                _ => Err(self.unexpected()),
            },
            TokenKind::Identifier => {
                if text == "async" {
                    if let Some(p) = self.peek() {
                        if !p.nl_before && p.kind == TokenKind::Keyword && p.text(self.src) == "function" {
                            self.advance()?;
                            return self.parse_function(start, false, true, false);
                        }
                        if !p.nl_before && p.kind == TokenKind::Identifier {
                            self.advance()?;
                            let param = self.parse_binding_ident()?;
                            if self.nl_before() {
                                return Err(self.expected("`=>`"));
                            }
                            return self.parse_arrow_body(start, vec![param], true);
                        }
                    }
                }
                let id = self.leaf_from_cur(NodeKind::Identifier)?;
                if self.is_punct("=>") && !self.nl_before() {
                    return self.parse_arrow_body(start, vec![id], false);
                }
                Ok(id)
            }
            TokenKind::NumericLiteral => self.leaf_from_cur(NodeKind::NumericLiteral),
            TokenKind::BigIntLiteral => self.leaf_from_cur(NodeKind::BigIntLiteral),
            TokenKind::StringLiteral => self.leaf_from_cur(NodeKind::StringLiteral),
            TokenKind::RegExpLiteral => self.leaf_from_cur(NodeKind::RegExpLiteral),
            TokenKind::TemplateLiteral if text.starts_with('`') => self.parse_template(),
            TokenKind::TemplateLiteral => Err(self.unexpected()),
            TokenKind::Punctuator => match text {
                "/" | "/=" => {
                    self.rescan(SlashMode::Regex)?;
                    self.leaf_from_cur(NodeKind::RegExpLiteral)
                }
                "(" => self.parse_paren(),
                "[" => self.parse_array_literal(),
                "{" => self.parse_object_literal(),
                _ => Err(self.unexpected()),
            },
        }
    }

    fn parse_paren(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        let mut items = Vec::new();
        let mut rest = None;
        let mut trailing_comma = false;
        if !self.is_punct(")") {
            loop {
                if self.is_punct("...") {
                    let s = self.start();
                    self.advance()?;
                    let target = self.parse_binding_target()?;
                    rest = Some(self.finish(NodeKind::RestElement, s, vec![target]));
                    break;
                }
                items.push(self.parse_assign(false)?);
                if self.is_punct(",") {
                    self.advance()?;
                    if self.is_punct(")") {
                        trailing_comma = true;
                        break;
                    }
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        if self.is_punct("=>") && !self.nl_before() {
            for &item in &items {
                self.to_assignable(item, true)?;
            }
            items.extend(rest);
            return self.parse_arrow_body(start, items, false);
        }
        if rest.is_some() || trailing_comma || items.is_empty() {
            return Err(self.expected("`=>`"));
        }
        if items.len() == 1 {
            let inner = items[0];
            if self.is_bare_arrow(inner) {
                self.b.clear_flag(inner, BARE_ARROW);
            }
            return Ok(inner);
        }
        let seq_start = self.b.span(items[0]).start();
        let seq_end = self.b.span(*items.last().unwrap()).end();
        Ok(self.b.push(NodeKind::SequenceExpression, Span::new(seq_start, seq_end), items))
    }

    fn parse_array_literal(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        let mut elements = Vec::new();
        loop {
            if self.eat_punct("]")? {
                break;
            }
            if self.eat_punct(",")? {
                continue;
            }
            let s = self.start();
            if self.eat_punct("...")? {
                let arg = self.parse_assign(false)?;
                elements.push(self.finish(NodeKind::SpreadElement, s, vec![arg]));
            } else {
                elements.push(self.parse_assign(false)?);
            }
            if !self.is_punct("]") {
                self.expect_punct(",")?;
            }
        }
        Ok(self.finish(NodeKind::ArrayExpression, start, elements))
    }

    fn parse_object_literal(&mut self) -> Result<NodeId> {
        let start = self.start();
        self.advance()?;
        let mut props = Vec::new();
        while !self.eat_punct("}")? {
            let s = self.start();
            if self.eat_punct("...")? {
                let arg = self.parse_assign(false)?;
                props.push(self.finish(NodeKind::SpreadElement, s, vec![arg]));
            } else {
                props.push(self.parse_property(s)?);
            }
            if !self.is_punct("}") {
                self.expect_punct(",")?;
            }
        }
        Ok(self.finish(NodeKind::ObjectExpression, start, props))
    }

    fn parse_property(&mut self, start: usize) -> Result<NodeId> {
        let (is_async, is_generator, accessor) = self.parse_method_modifiers()?;
        let key_is_ident = self.is_ident();
        let (key, computed) = self.parse_property_key()?;
        let prop = if is_async || is_generator || accessor.is_some() || self.is_punct("(") {
            let value = self.parse_method_function(is_async, is_generator)?;
            let p = self.finish(NodeKind::Property, start, vec![key, value]);
            self.b.set_attr(p, accessor.unwrap_or("init"));
            if accessor.is_none() {
                self.b.set_flag(p, flags::METHOD);
            }
            p
        } else if self.eat_punct(":")? {
            let value = self.parse_assign(false)?;
            let p = self.finish(NodeKind::Property, start, vec![key, value]);
            self.b.set_attr(p, "init");
            p
        } else {
            if computed || !key_is_ident {
                return Err(self.expected("`:`"));
            }
            let mut value = self.b.copy(key);
            if self.eat_punct("=")? {
                let default = self.parse_assign(false)?;
                value = self.finish(NodeKind::AssignmentPattern, start, vec![value, default]);
                self.cover_init.insert(value);
            }
            let p = self.finish(NodeKind::Property, start, vec![key, value]);
            self.b.set_attr(p, "init");
            self.b.set_flag(p, flags::SHORTHAND);
            p
        };
        if computed {
            self.b.set_flag(prop, flags::COMPUTED);
        }
        Ok(prop)
    }

    fn parse_template(&mut self) -> Result<NodeId> {
        let start = self.start();
        let mut children = Vec::new();
        loop {
            let Some(cur) = self.cur else {
                return Err(self.expected("template continuation"));
            };
            if cur.kind != TokenKind::TemplateLiteral {
                return Err(self.expected("template continuation"));
            }
            let text = cur.text(self.src);
            let open = text.ends_with("${");
            let inner_end = cur.end - if open { 2 } else { 1 };
            let inner_start = cur.start + 1;
            let elem = self
                .b
                .push(NodeKind::TemplateElement, Span::new(inner_start, inner_end), Vec::new());
            self.b.set_attr(elem, &self.src[inner_start..inner_end]);
            children.push(elem);
            self.advance()?;
            if !open {
                break;
            }
            children.push(self.parse_expression(false)?);
            if !(self.kind() == Some(TokenKind::TemplateLiteral) && self.text().starts_with('}')) {
                return Err(self.expected("`}` closing template substitution"));
            }
        }
        Ok(self.finish(NodeKind::TemplateLiteral, start, children))
    }
}

fn lex_to_syntax(src: &str, e: Error) -> Error {
    match e {
        Error::Lex { offset, message } => Error::syntax(src, offset, message),
        other => other,
    }
}
