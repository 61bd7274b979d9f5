use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("lex error at offset {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub fn offset(&self) -> usize {
        match self {
            Error::Lex { offset, .. } | Error::Syntax { offset, .. } => *offset,
        }
    }

    pub(crate) fn syntax(src: &str, offset: usize, message: impl Into<String>) -> Error {
        let (line, column) = line_col(src, offset);
        Error::Syntax {
            offset,
            line,
            column,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// 1-based line and column (in characters) of a byte offset.
pub fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(src.len());
    let mut line = 1;
    let mut line_start = 0;
    for (i, c) in src[..offset].char_indices() {
        match c {
            '\n' | '\u{2028}' | '\u{2029}' => {
                line += 1;
                line_start = i + c.len_utf8();
            }
            '\r' => {
                if src.as_bytes().get(i + 1) != Some(&b'\n') {
                    line += 1;
                    line_start = i + 1;
                }
            }
            _ => {}
        }
    }
    let column = src
        .get(line_start..offset)
        .map(|s| s.chars().count())
        .unwrap_or(0)
        + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::line_col;

    #[test]
    fn line_and_column() {
        let src = "a\nbc\r\nd";
        assert_eq!(line_col(src, 0), (1, 1));
        assert_eq!(line_col(src, 3), (2, 2));
        assert_eq!(line_col(src, 6), (3, 1));
    }
}
