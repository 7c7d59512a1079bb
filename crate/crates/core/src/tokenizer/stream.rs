//! Token stream files: one `CATEGORY(value)` per line, `\n` terminated.
//! Lines starting with `#` are comments.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::vocab::{EventToken, TokenParseError};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("token stream io: {0}")]
    Io(#[from] io::Error),
    #[error("token stream line {line}: {source}")]
    Token {
        line: usize,
        #[source]
        source: TokenParseError,
    },
}

pub fn write_tokens<W: Write>(mut out: W, tokens: &[EventToken]) -> io::Result<()> {
    for t in tokens {
        writeln!(out, "{t}")?;
    }
    out.flush()
}

pub fn tokens_to_string(tokens: &[EventToken]) -> String {
    let mut buf = Vec::new();
    write_tokens(&mut buf, tokens).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

/// Reads a token stream; blank lines and `#` comments are ignored.
pub fn read_tokens<R: BufRead>(reader: R) -> Result<Vec<EventToken>, StreamError> {
    let mut tokens = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        tokens.push(line.parse().map_err(|source| StreamError::Token { line: n + 1, source })?);
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::vocab::Category;

    #[test]
    fn exact_text_layout() {
        let toks = [EventToken::BAR, EventToken::new(Category::Position, 16), EventToken::new(Category::Mlu, 2)];
        assert_eq!(tokens_to_string(&toks), "Bar(0)\nPosition(16)\nMLU(2)\n");
        assert_eq!(read_tokens(tokens_to_string(&toks).as_bytes()).unwrap(), toks);
    }

    #[test]
    fn comments_are_skipped() {
        let text = "# seed=3\nBar(0)\n\n# more\nPosition(0)\n";
        assert_eq!(read_tokens(text.as_bytes()).unwrap().len(), 2);
    }

    #[test]
    fn bad_line_is_located() {
        match read_tokens("Bar(0)\nPosition(x)\n".as_bytes()) {
            Err(StreamError::Token { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
