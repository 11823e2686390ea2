//! Pieces shared by the line-oriented text formats.

use std::fmt::Write as _;

use thiserror::Error;

/// A syntax or invariant error located at a 1-based input line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

/// Splits `source` into numbered lines (1-based), dropping one trailing
/// carriage return per line. A final newline does not open an extra line.
pub(crate) fn numbered_lines(source: &str) -> impl Iterator<Item = (usize, &str)> {
    let body = source.strip_suffix('\n').unwrap_or(source);
    let empty = source.is_empty();
    body.split('\n')
        .filter(move |_| !empty)
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
}

/// Number of lines `numbered_lines` yields, at least 1. Errors detected at end
/// of input point here.
pub(crate) fn last_line(source: &str) -> usize {
    numbered_lines(source).count().max(1)
}

/// Why a name field was rejected.
pub(crate) fn name_problem(name: &str) -> Option<&'static str> {
    if name.is_empty() {
        Some("empty name")
    } else if name.contains(['\t', '\n', '\r']) {
        Some("name contains a tab or line break")
    } else if name.contains('|') {
        Some("name contains '|'")
    } else if name.trim() != name {
        Some("name has leading or trailing whitespace")
    } else {
        None
    }
}

/// Field text other than names (paths): non-empty, single line, tab-free.
pub(crate) fn field_problem(field: &str) -> Option<&'static str> {
    if field.is_empty() {
        Some("empty field")
    } else if field.contains(['\t', '\n', '\r']) {
        Some("field contains a tab or line break")
    } else {
        None
    }
}

/// Maximum number of fractional digits written for a coordinate.
pub const MAX_FRACTION_DIGITS: usize = 6;

/// Formats a coordinate: the shortest decimal that reads back as the same
/// value, without exponent. Values needing more than six fractional digits
/// are rounded to six.
pub fn format_number(value: f64) -> String {
    let value = value + 0.0;
    let mut out = String::new();
    write!(out, "{value}").expect("writing to a String");
    match out.find('.') {
        Some(dot) if out.len() - dot - 1 > MAX_FRACTION_DIGITS => {
            out.clear();
            write!(out, "{:.*}", MAX_FRACTION_DIGITS, value).expect("writing to a String");
            let trimmed = out.trim_end_matches('0').trim_end_matches('.');
            if trimmed == "-0" {
                "0".to_string()
            } else {
                trimmed.to_string()
            }
        }
        _ => out,
    }
}

/// Parses `-?digits(.digits{1,6})?`.
pub fn parse_number(text: &str) -> Option<f64> {
    let unsigned = text.strip_prefix('-').unwrap_or(text);
    let (int, frac) = match unsigned.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (unsigned, None),
    };
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if let Some(f) = frac {
        if f.is_empty() || f.len() > MAX_FRACTION_DIGITS || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    let v: f64 = text.parse().ok()?;
    v.is_finite().then_some(v + 0.0)
}

/// Parses a non-negative decimal integer made of ASCII digits only.
pub(crate) fn parse_index(text: &str) -> Option<u64> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}
