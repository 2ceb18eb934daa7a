use crate::model::Cell;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Lowercased word; may contain digits, `_` and inner apostrophes.
    Word(String),
    Int(i64),
    /// Text inside single quotes, case preserved.
    Quoted(String),
    Coord { cell: Cell, z: Option<u32> },
    Comma,
    Stop,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    /// Character offset in the input.
    pub pos: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unexpected input at {pos}: {reason}")]
pub struct LexError {
    pub pos: usize,
    pub reason: &'static str,
}

pub fn lex(text: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let tok = if c.is_whitespace() {
            i += 1;
            continue;
        } else if c.is_alphabetic() {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || inner_apostrophe(&chars, i)) {
                i += 1;
            }
            Tok::Word(chars[start..i].iter().collect::<String>().to_lowercase())
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            Tok::Int(s.parse().map_err(|_| LexError { pos: start, reason: "number out of range" })?)
        } else if c == '\'' {
            let end = chars[i + 1..].iter().position(|&q| q == '\'').ok_or(LexError { pos: start, reason: "unterminated quote" })?;
            let label: String = chars[i + 1..i + 1 + end].iter().collect();
            if label.is_empty() {
                return Err(LexError { pos: start, reason: "empty quoted label" });
            }
            i += end + 2;
            Tok::Quoted(label)
        } else if c == '(' {
            let end = chars[i..].iter().position(|&q| q == ')').ok_or(LexError { pos: start, reason: "unclosed coordinate" })?;
            let inner: String = chars[i + 1..i + end].iter().collect();
            i += end + 1;
            coord(&inner).ok_or(LexError { pos: start, reason: "malformed coordinate" })?
        } else if c == ',' {
            i += 1;
            Tok::Comma
        } else if matches!(c, '.' | '!' | '?' | ';') {
            i += 1;
            Tok::Stop
        } else {
            return Err(LexError { pos: start, reason: "unexpected character" });
        };
        out.push(Token { tok, pos: start });
    }
    Ok(out)
}

fn inner_apostrophe(chars: &[char], i: usize) -> bool {
    chars[i] == '\'' && i > 0 && chars[i - 1].is_alphabetic() && chars.get(i + 1).is_some_and(|c| c.is_alphabetic())
}

fn coord(inner: &str) -> Option<Tok> {
    let parts: Vec<u32> = inner.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    match parts.as_slice() {
        [x, y] => Some(Tok::Coord { cell: Cell::new(*x, *y), z: None }),
        [x, y, z] => Some(Tok::Coord { cell: Cell::new(*x, *y), z: Some(*z) }),
        _ => None,
    }
}
