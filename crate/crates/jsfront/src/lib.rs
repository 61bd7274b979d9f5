//! ECMAScript 2020 front-end: tokenizer, module parser, scope analysis,
//! def-use edges, and the minify/mangle source transformations.

pub mod ast;
pub mod dataflow;
pub mod error;
mod lexer;
pub mod minify;
pub mod parser;
pub mod scope;
pub mod token;

pub use ast::{NodeId, NodeKind, SyntaxTree};
pub use dataflow::{dataflow_edges, DataflowEdgeSet, Relation};
pub use error::{line_col, Error, Result};
pub use lexer::{is_id_continue, is_id_start, tokenize};
pub use minify::{mangle, minify};
pub use parser::{parse, parse_full, Parsed};
pub use token::{is_keyword, Span, Token, TokenKind, TokenStream, KEYWORDS};

/// True when `source` parses as an ES2020 module.
pub fn syntax_check(source: &str) -> bool {
    parse(source).is_ok()
}
