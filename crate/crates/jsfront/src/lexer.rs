//! ECMAScript lexer.
//!
//! The lexer can run standalone ([`tokenize`]) or be driven by the parser.
//! Standalone, a `/` is read as a regular expression or as a division
//! operator depending on the previous token; the parser overrides that
//! guess by re-scanning when the grammar disagrees.

use crate::error::{Error, Result};
use crate::token::{is_keyword, Span, Token, TokenKind, TokenStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SlashMode {
    Heuristic,
    Regex,
    Divide,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Brace {
    Block,
    Expr,
    Template,
}

/// A token without owned text. `nl_before` records whether a line
/// terminator separates it from the previous token.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Lexeme {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
    pub nl_before: bool,
}

impl Lexeme {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct LexState {
    last_kind: Option<TokenKind>,
    last_start: usize,
    last_end: usize,
    regex_ok: bool,
}

#[derive(Clone)]
pub(crate) struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    braces: Vec<Brace>,
    parens: Vec<bool>,
    state: LexState,
}

pub(crate) const PUNCTUATORS: &[&str] = &[
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "=>", "==", "!=", "<=", ">=", "&&",
    "||", "??", "?.", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
    "**", "{", "}", "(", ")", "[", "]", ".", ";", ",", "<", ">", "+", "-", "*", "/", "%", "&",
    "|", "^", "!", "~", "?", ":", "=",
];

pub(crate) fn is_line_terminator(c: char) -> bool {
    matches!(c, '\n' | '\r' | '\u{2028}' | '\u{2029}')
}

fn is_js_whitespace(c: char) -> bool {
    matches!(
        c,
        ' ' | '\t'
            | '\u{000B}'
            | '\u{000C}'
            | '\u{00A0}'
            | '\u{FEFF}'
            | '\u{1680}'
            | '\u{2000}'..='\u{200A}'
            | '\u{202F}'
            | '\u{205F}'
            | '\u{3000}'
    )
}

pub fn is_id_start(c: char) -> bool {
    c == '$' || c == '_' || c.is_ascii_alphabetic() || (!c.is_ascii() && unicode_ident::is_xid_start(c))
}

pub fn is_id_continue(c: char) -> bool {
    c == '$'
        || c == '_'
        || c.is_ascii_alphanumeric()
        || c == '\u{200C}'
        || c == '\u{200D}'
        || (!c.is_ascii() && unicode_ident::is_xid_continue(c))
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Lexer<'a> {
        let mut lexer = Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            braces: Vec::new(),
            parens: Vec::new(),
            state: LexState {
                last_kind: None,
                last_start: 0,
                last_end: 0,
                regex_ok: true,
            },
        };
        if src.starts_with("#!") {
            lexer.skip_line();
        }
        lexer
    }

    pub fn state(&self) -> LexState {
        self.state
    }

    /// Rewind to `pos` with the heuristic state that preceded the token
    /// starting there. Only valid for tokens that did not touch the
    /// brace or paren stacks (i.e. `/`, `/=` and regex literals).
    pub fn rewind(&mut self, pos: usize, state: LexState) {
        self.pos = pos;
        self.state = state;
    }

    fn err(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Lex {
            offset,
            message: message.into(),
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.peek_char() {
            if is_line_terminator(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    /// Skips whitespace and comments; returns whether a line terminator
    /// was crossed.
    fn skip_trivia(&mut self) -> Result<bool> {
        let mut newline = false;
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            match b {
                b' ' | b'\t' | 0x0B | 0x0C => self.pos += 1,
                b'\n' | b'\r' => {
                    newline = true;
                    self.pos += 1;
                }
                b'/' => match self.bytes.get(self.pos + 1) {
                    Some(b'/') => self.skip_line(),
                    Some(b'*') => {
                        let start = self.pos;
                        match self.src[self.pos + 2..].find("*/") {
                            Some(end) => {
                                let body = &self.src[self.pos + 2..self.pos + 2 + end];
                                if body.chars().any(is_line_terminator) {
                                    newline = true;
                                }
                                self.pos += end + 4;
                            }
                            None => return Err(self.err(start, "unterminated comment")),
                        }
                    }
                    _ => break,
                },
                _ if b < 0x80 => break,
                _ => {
                    let c = self.peek_char().unwrap();
                    if is_line_terminator(c) {
                        newline = true;
                    } else if !is_js_whitespace(c) {
                        break;
                    }
                    self.pos += c.len_utf8();
                }
            }
        }
        Ok(newline)
    }

    /// Reads the next token; `None` at end of input.
    pub fn next_token(&mut self, mode: SlashMode) -> Result<Option<Lexeme>> {
        let nl_before = self.skip_trivia()?;
        if self.pos >= self.bytes.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.peek_char().unwrap();
        let kind = if is_id_start(c) || c == '\\' {
            self.read_word()?
        } else if c.is_ascii_digit()
            || (c == '.' && self.bytes.get(start + 1).is_some_and(u8::is_ascii_digit))
        {
            self.read_number()?
        } else if c == '"' || c == '\'' {
            self.read_string(c)?
        } else if c == '`' {
            self.pos += 1;
            self.read_template_rest(start)?
        } else if c == '}' && self.braces.last() == Some(&Brace::Template) {
            self.braces.pop();
            self.pos += 1;
            self.read_template_rest(start)?
        } else if c == '/' && self.slash_is_regex(mode) {
            self.read_regex()?
        } else {
            self.read_punctuator()?
        };
        let lexeme = Lexeme {
            kind,
            start,
            end: self.pos,
            nl_before,
        };
        self.update_state(&lexeme);
        Ok(Some(lexeme))
    }

    fn slash_is_regex(&self, mode: SlashMode) -> bool {
        match mode {
            SlashMode::Regex => true,
            SlashMode::Divide => false,
            SlashMode::Heuristic => self.state.regex_ok,
        }
    }

    fn update_state(&mut self, lx: &Lexeme) {
        let text = lx.text(self.src);
        let regex_ok = match lx.kind {
            TokenKind::Identifier => false,
            TokenKind::Keyword => !matches!(text, "this" | "super" | "true" | "false" | "null"),
            TokenKind::TemplateLiteral => text.ends_with("${"),
            TokenKind::NumericLiteral
            | TokenKind::BigIntLiteral
            | TokenKind::StringLiteral
            | TokenKind::RegExpLiteral => false,
            TokenKind::Punctuator => match text {
                "(" => {
                    let control = self.state.last_kind == Some(TokenKind::Keyword)
                        && matches!(
                            &self.src[self.state.last_start..self.state.last_end],
                            "if" | "while" | "for" | "with"
                        );
                    self.parens.push(control);
                    true
                }
                ")" => self.parens.pop().unwrap_or(false),
                "{" => {
                    let brace = self.classify_brace();
                    self.braces.push(brace);
                    true
                }
                "}" => matches!(self.braces.pop(), Some(Brace::Block) | None),
                "]" | "++" | "--" => false,
                _ => true,
            },
        };
        if lx.kind == TokenKind::TemplateLiteral && text.ends_with("${") {
            self.braces.push(Brace::Template);
        }
        self.state = LexState {
            last_kind: Some(lx.kind),
            last_start: lx.start,
            last_end: lx.end,
            regex_ok,
        };
    }

    fn classify_brace(&self) -> Brace {
        let Some(kind) = self.state.last_kind else {
            return Brace::Block;
        };
        let text = &self.src[self.state.last_start..self.state.last_end];
        match kind {
            TokenKind::Identifier => Brace::Block,
            TokenKind::Keyword => match text {
                "else" | "do" | "try" | "finally" | "class" => Brace::Block,
                _ => Brace::Expr,
            },
            TokenKind::Punctuator => match text {
                ";" | "{" | "}" | ")" | "=>" => Brace::Block,
                _ => Brace::Expr,
            },
            _ => Brace::Expr,
        }
    }

    fn read_word(&mut self) -> Result<TokenKind> {
        let start = self.pos;
        let mut escaped = false;
        let mut first = true;
        while let Some(c) = self.peek_char() {
            if c == '\\' {
                self.read_unicode_escape_in_ident()?;
                escaped = true;
            } else if (first && is_id_start(c)) || (!first && is_id_continue(c)) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
            first = false;
        }
        let text = &self.src[start..self.pos];
        if !escaped && is_keyword(text) {
            Ok(TokenKind::Keyword)
        } else {
            Ok(TokenKind::Identifier)
        }
    }

    fn read_unicode_escape_in_ident(&mut self) -> Result<()> {
        let start = self.pos;
        if !self.src[self.pos..].starts_with("\\u") {
            return Err(self.err(start, "invalid escape in identifier"));
        }
        self.pos += 2;
        if self.bytes.get(self.pos) == Some(&b'{') {
            let close = self.src[self.pos..]
                .find('}')
                .ok_or_else(|| self.err(start, "invalid unicode escape"))?;
            let hex = &self.src[self.pos + 1..self.pos + close];
            if hex.is_empty() || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(self.err(start, "invalid unicode escape"));
            }
            self.pos += close + 1;
        } else {
            let hex = self.src.get(self.pos..self.pos + 4).unwrap_or("");
            if hex.len() != 4 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(self.err(start, "invalid unicode escape"));
            }
            self.pos += 4;
        }
        Ok(())
    }

    fn eat_digits(&mut self, pred: impl Fn(u8) -> bool) -> usize {
        let start = self.pos;
        while self.pos < self.bytes.len() && pred(self.bytes[self.pos]) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn read_number(&mut self) -> Result<TokenKind> {
        let start = self.pos;
        let b0 = self.bytes[start];
        let b1 = self.bytes.get(start + 1).copied().unwrap_or(0);
        let mut kind = TokenKind::NumericLiteral;
        if b0 == b'0' && matches!(b1, b'x' | b'X' | b'o' | b'O' | b'b' | b'B') {
            self.pos += 2;
            let n = match b1 {
                b'x' | b'X' => self.eat_digits(|b| b.is_ascii_hexdigit()),
                b'o' | b'O' => self.eat_digits(|b| (b'0'..=b'7').contains(&b)),
                _ => self.eat_digits(|b| b == b'0' || b == b'1'),
            };
            if n == 0 {
                return Err(self.err(start, "expected digits after radix prefix"));
            }
            if self.bytes.get(self.pos) == Some(&b'n') {
                self.pos += 1;
                kind = TokenKind::BigIntLiteral;
            }
        } else {
            let int_len = self.eat_digits(|b| b.is_ascii_digit());
            if int_len > 1 && b0 == b'0' {
                return Err(self.err(start, "legacy octal literals are not allowed"));
            }
            let mut is_int = true;
            if self.bytes.get(self.pos) == Some(&b'.') {
                is_int = false;
                self.pos += 1;
                self.eat_digits(|b| b.is_ascii_digit());
            }
            if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                    self.pos += 1;
                }
                if self.eat_digits(|b| b.is_ascii_digit()) == 0 {
                    self.pos = save;
                    return Err(self.err(start, "malformed exponent"));
                }
                is_int = false;
            }
            if is_int && self.bytes.get(self.pos) == Some(&b'n') {
                self.pos += 1;
                kind = TokenKind::BigIntLiteral;
            }
        }
        if let Some(c) = self.peek_char() {
            if is_id_start(c) || c.is_ascii_digit() || c == '\\' {
                return Err(self.err(self.pos, "identifier starts immediately after numeric literal"));
            }
        }
        Ok(kind)
    }

    fn read_string(&mut self, quote: char) -> Result<TokenKind> {
        let start = self.pos;
        self.pos += 1;
        loop {
            let Some(c) = self.peek_char() else {
                return Err(self.err(start, "unterminated string literal"));
            };
            self.pos += c.len_utf8();
            if c == quote {
                return Ok(TokenKind::StringLiteral);
            }
            match c {
                '\\' => {
                    if let Some(e) = self.peek_char() {
                        let octal = match e {
                            '1'..='9' => true,
                            '0' => self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit),
                            _ => false,
                        };
                        if octal {
                            return Err(self.err(self.pos - 1, "octal escape sequences are not allowed in strict mode"));
                        }
                        self.pos += e.len_utf8();
                        if e == '\r' && self.bytes.get(self.pos) == Some(&b'\n') {
                            self.pos += 1;
                        }
                    }
                }
                '\n' | '\r' => return Err(self.err(start, "unterminated string literal")),
                _ => {}
            }
        }
    }

    /// Reads a template segment after its opening `` ` `` or `}`.
    fn read_template_rest(&mut self, start: usize) -> Result<TokenKind> {
        loop {
            let Some(c) = self.peek_char() else {
                return Err(self.err(start, "unterminated template literal"));
            };
            self.pos += c.len_utf8();
            match c {
                '`' => return Ok(TokenKind::TemplateLiteral),
                '$' if self.bytes.get(self.pos) == Some(&b'{') => {
                    self.pos += 1;
                    return Ok(TokenKind::TemplateLiteral);
                }
                '\\' => {
                    if let Some(e) = self.peek_char() {
                        self.pos += e.len_utf8();
                    }
                }
                _ => {}
            }
        }
    }

    fn read_regex(&mut self) -> Result<TokenKind> {
        let start = self.pos;
        self.pos += 1;
        let mut in_class = false;
        loop {
            let Some(c) = self.peek_char() else {
                return Err(self.err(start, "unterminated regular expression"));
            };
            if is_line_terminator(c) {
                return Err(self.err(start, "unterminated regular expression"));
            }
            self.pos += c.len_utf8();
            match c {
                '\\' => match self.peek_char() {
                    Some(e) if !is_line_terminator(e) => self.pos += e.len_utf8(),
                    _ => return Err(self.err(start, "unterminated regular expression")),
                },
                '[' => in_class = true,
                ']' => in_class = false,
                '/' if !in_class => break,
                _ => {}
            }
        }
        while let Some(c) = self.peek_char() {
            if is_id_continue(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        Ok(TokenKind::RegExpLiteral)
    }

    fn read_punctuator(&mut self) -> Result<TokenKind> {
        let rest = &self.src[self.pos..];
        for p in PUNCTUATORS {
            if rest.starts_with(p) {
                // `?.` followed by a digit is `?` then a number.
                if *p == "?." && rest.as_bytes().get(2).is_some_and(u8::is_ascii_digit) {
                    continue;
                }
                self.pos += p.len();
                return Ok(TokenKind::Punctuator);
            }
        }
        let c = self.peek_char().unwrap();
        Err(self.err(self.pos, format!("unexpected character {c:?}")))
    }

    pub fn pos(&self) -> usize {
        self.pos
    }
}

/// Splits `source` into tokens, dropping whitespace and comments.
///
/// Template literals produce one `TemplateLiteral` token per quasi
/// segment (`` `a${ ``, `` }b` ``) with the substitution tokens between
/// them. A `/` starts a regular expression after a punctuator, a keyword
/// or at the start of input, and is an operator otherwise.
pub fn tokenize(source: &str) -> Result<TokenStream> {
    let mut lexer = Lexer::new(source);
    let mut tokens = Vec::new();
    while let Some(lx) = lexer.next_token(SlashMode::Heuristic)? {
        tokens.push(Token {
            kind: lx.kind,
            text: source[lx.start..lx.end].to_string(),
            span: lx.span(),
        });
    }
    Ok(TokenStream {
        tokens,
        source_len: source.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds_texts(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .tokens
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    fn pairs(items: &[(TokenKind, &str)]) -> Vec<(TokenKind, String)> {
        items.iter().map(|(k, t)| (*k, t.to_string())).collect()
    }

    #[test]
    fn let_statement() {
        assert_eq!(
            kinds_texts("let x = 1;"),
            pairs(&[
                (Keyword, "let"),
                (Identifier, "x"),
                (Punctuator, "="),
                (NumericLiteral, "1"),
                (Punctuator, ";"),
            ])
        );
    }

    #[test]
    fn comments_dropped() {
        assert_eq!(
            kinds_texts("// note\nfoo()"),
            pairs(&[(Identifier, "foo"), (Punctuator, "("), (Punctuator, ")")])
        );
        assert_eq!(kinds_texts("/* a\n b */ x"), pairs(&[(Identifier, "x")]));
    }

    #[test]
    fn template_segments() {
        assert_eq!(
            kinds_texts("`a${x + `b${y}`}c`"),
            pairs(&[
                (TemplateLiteral, "`a${"),
                (Identifier, "x"),
                (Punctuator, "+"),
                (TemplateLiteral, "`b${"),
                (Identifier, "y"),
                (TemplateLiteral, "}`"),
                (TemplateLiteral, "}c`"),
            ])
        );
        assert_eq!(
            kinds_texts("`${ {a: 1}.a }`"),
            pairs(&[
                (TemplateLiteral, "`${"),
                (Punctuator, "{"),
                (Identifier, "a"),
                (Punctuator, ":"),
                (NumericLiteral, "1"),
                (Punctuator, "}"),
                (Punctuator, "."),
                (Identifier, "a"),
                (TemplateLiteral, "}`"),
            ])
        );
    }

    #[test]
    fn regex_versus_division() {
        let toks = kinds_texts("a = b / c / d; x = /re[/]x/g.test(s);");
        assert_eq!(toks.iter().filter(|(k, _)| *k == RegExpLiteral).count(), 1);
        assert!(toks.contains(&(RegExpLiteral, "/re[/]x/g".to_string())));
        let toks = kinds_texts("if (x) /foo/.test(y)");
        assert_eq!(toks[4], (RegExpLiteral, "/foo/".to_string()));
        let toks = kinds_texts("(a) / 2");
        assert_eq!(toks[3], (Punctuator, "/".to_string()));
        let toks = kinds_texts("return /x/");
        assert_eq!(toks[1].0, RegExpLiteral);
        let toks = kinds_texts("i++ / 2");
        assert_eq!(toks[2].0, Punctuator);
    }

    #[test]
    fn numbers() {
        assert_eq!(
            kinds_texts("0x1F 1.5e-3 .5 10n 0b101 0o17"),
            pairs(&[
                (NumericLiteral, "0x1F"),
                (NumericLiteral, "1.5e-3"),
                (NumericLiteral, ".5"),
                (BigIntLiteral, "10n"),
                (NumericLiteral, "0b101"),
                (NumericLiteral, "0o17"),
            ])
        );
        assert!(tokenize("017").is_err());
        assert!(tokenize("3in x").is_err());
    }

    #[test]
    fn punctuators_maximal_munch() {
        let toks = kinds_texts("a?.b ?? c >>>= d === e ... x?.5:1");
        let texts: Vec<_> = toks.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(
            texts,
            ["a", "?.", "b", "??", "c", ">>>=", "d", "===", "e", "...", "x", "?", ".5", ":", "1"]
        );
    }

    #[test]
    fn unterminated_literals_report_offset() {
        assert_eq!(
            tokenize("x = 'abc").unwrap_err(),
            Error::Lex {
                offset: 4,
                message: "unterminated string literal".into()
            }
        );
        assert!(matches!(tokenize("`abc"), Err(Error::Lex { offset: 0, .. })));
        assert!(matches!(tokenize("x = /abc\n/"), Err(Error::Lex { offset: 4, .. })));
        assert!(matches!(tokenize("/* open"), Err(Error::Lex { offset: 0, .. })));
    }

    #[test]
    fn spans_increase() {
        let ts = tokenize("const s = `a${b}c`; // tail\nfoo(s, /x/);").unwrap();
        for w in ts.tokens.windows(2) {
            assert!(w[0].span.end() <= w[1].span.start());
        }
        for t in &ts.tokens {
            assert_eq!(&"const s = `a${b}c`; // tail\nfoo(s, /x/);"[t.span.range()], t.text);
        }
    }

    #[test]
    fn unicode_identifiers_and_escapes() {
        let toks = kinds_texts("const café = \\u0061b; ünï");
        assert_eq!(toks[1], (Identifier, "café".to_string()));
        assert_eq!(toks[3], (Identifier, "\\u0061b".to_string()));
        assert_eq!(toks[5], (Identifier, "ünï".to_string()));
    }
}
