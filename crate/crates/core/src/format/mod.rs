//! Text formats: game files, extensive-form files and solution reports.

mod ef;
mod game;
mod solution;

use std::fmt;

pub use ef::parse_ef;
pub use game::{parse_game, print_game};
pub use solution::{parse_solution, profile_from_record, write_record, SolutionRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line number.
    pub line: usize,
    /// 1-based column (in characters) of the offending token.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

/// A slice of one input line with its position.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Span<'a> {
    pub text: &'a str,
    pub line: usize,
    /// Byte offset of `text` within the line.
    pub offset: usize,
    pub full: &'a str,
}

impl<'a> Span<'a> {
    #[cfg(test)]
    pub fn new(full: &'a str, line: usize) -> Self {
        Span { text: full, line, offset: 0, full }
    }

    fn sub(&self, start: usize, end: usize) -> Span<'a> {
        Span { text: &self.text[start..end], line: self.line, offset: self.offset + start, full: self.full }
    }

    pub fn column(&self) -> usize {
        self.full[..self.offset].chars().count() + 1
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.column(), message: message.into() }
    }

    pub fn trim(&self) -> Span<'a> {
        let start = self.text.len() - self.text.trim_start().len();
        let end = self.text.trim_end().len();
        if start >= end {
            return self.sub(self.text.len(), self.text.len());
        }
        self.sub(start, end)
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    /// Split on `sep`, trimming every piece.
    pub fn split(&self, sep: char) -> Vec<Span<'a>> {
        let mut out = Vec::new();
        let mut start = 0;
        for (i, c) in self.text.char_indices() {
            if c == sep {
                out.push(self.sub(start, i).trim());
                start = i + c.len_utf8();
            }
        }
        out.push(self.sub(start, self.text.len()).trim());
        out
    }

    /// Split at the first `sep`.
    pub fn split_once(&self, sep: char) -> Option<(Span<'a>, Span<'a>)> {
        let i = self.text.find(sep)?;
        Some((self.sub(0, i).trim(), self.sub(i + sep.len_utf8(), self.text.len()).trim()))
    }

    /// Whitespace-separated words.
    pub fn words(&self) -> Vec<Span<'a>> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in self.text.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    out.push(self.sub(s, i));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push(self.sub(s, self.text.len()));
        }
        out
    }

    pub fn ident(&self, what: &str) -> Result<&'a str, ParseError> {
        let ok = !self.text.is_empty()
            && self.text.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '\'' | '+' | '*'));
        if ok {
            Ok(self.text)
        } else {
            Err(self.error(format!("expected {what}, found `{}`", self.text)))
        }
    }

    pub fn number(&self) -> Result<f64, ParseError> {
        parse_number(self.text).ok_or_else(|| self.error(format!("malformed number `{}`", self.text)))
    }
}

/// A decimal or an integer fraction `a/b`.
pub(crate) fn parse_number(text: &str) -> Option<f64> {
    let x = match text.split_once('/') {
        Some((a, b)) => {
            let (a, b): (i64, i64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            if b == 0 {
                return None;
            }
            a as f64 / b as f64
        }
        None => {
            if !text.chars().next().is_some_and(|c| c.is_ascii_digit() || matches!(c, '-' | '+' | '.')) {
                return None;
            }
            text.parse().ok()?
        }
    };
    x.is_finite().then_some(x)
}

/// Non-empty lines with comments stripped, paired with their 1-based number.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = Span<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let span = Span { text: body, line: i + 1, offset: 0, full: raw }.trim();
        (!span.is_empty()).then_some(span)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_number("1/3"), Some(1.0 / 3.0));
        assert_eq!(parse_number("0.25"), Some(0.25));
        assert_eq!(parse_number("-2"), Some(-2.0));
        assert_eq!(parse_number("1/0"), None);
        assert_eq!(parse_number("nan"), None);
        assert_eq!(parse_number("inf"), None);
        assert_eq!(parse_number("1e400"), None);
    }

    #[test]
    fn span_columns() {
        let line = "  node  R player=P1";
        let span = Span::new(line, 3).trim();
        let words = span.words();
        assert_eq!(words.len(), 3);
        assert_eq!(words[1].column(), 9);
        let (k, v) = words[2].split_once('=').unwrap();
        assert_eq!((k.text, k.column()), ("player", 11));
        assert_eq!((v.text, v.column()), ("P1", 18));
    }
}
