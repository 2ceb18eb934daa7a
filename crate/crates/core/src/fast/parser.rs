//! Backtracking token cursor that remembers the furthest failure.

use std::str::FromStr;

use crate::model::{Cell, Color, Kind};

use super::lexer::{lex, Tok, Token};
use super::phrase::ObjectPhrase;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("parse error at {position}: expected {expected}")]
pub struct ParseError {
    /// Character offset of the offending token (input length at end of input).
    pub position: usize,
    pub expected: String,
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pub i: usize,
    len: usize,
    fail_at: usize,
    expected: Vec<&'static str>,
}

impl Parser {
    pub fn new(text: &str) -> Result<Parser, ParseError> {
        let toks = lex(text).map_err(|e| ParseError { position: e.pos, expected: e.reason.to_string() })?;
        Ok(Parser { toks, i: 0, len: text.chars().count(), fail_at: 0, expected: Vec::new() })
    }

    pub fn error(&self) -> ParseError {
        let mut expected = self.expected.clone();
        expected.sort_unstable();
        expected.dedup();
        let expected = if expected.is_empty() { "a command".to_string() } else { expected.join(" or ") };
        let position = self.toks.get(self.fail_at).map_or(self.len, |t| t.pos);
        ParseError { position, expected }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    pub fn fail(&mut self, what: &'static str) {
        if self.i > self.fail_at {
            self.fail_at = self.i;
            self.expected.clear();
        }
        if self.i == self.fail_at {
            self.expected.push(what);
        }
    }

    /// Runs `f`, rewinding when it returns `None`.
    pub fn attempt<T>(&mut self, f: impl FnOnce(&mut Parser) -> Option<T>) -> Option<T> {
        let saved = self.i;
        let r = f(self);
        if r.is_none() {
            self.i = saved;
        }
        r
    }

    pub fn word(&mut self, w: &'static str) -> bool {
        match self.peek() {
            Some(Tok::Word(x)) if x == w => {
                self.i += 1;
                true
            }
            _ => {
                self.fail(w);
                false
            }
        }
    }

    pub fn any_word(&mut self, ws: &[&'static str]) -> Option<&'static str> {
        ws.iter().copied().find(|w| self.word(w))
    }

    pub fn color(&mut self) -> Option<Color> {
        if let Some(Tok::Word(w)) = self.peek() {
            if let Ok(c) = Color::from_str(w) {
                if c != Color::None {
                    self.i += 1;
                    return Some(c);
                }
            }
        }
        self.fail("a color");
        None
    }

    pub fn int(&mut self) -> Option<i64> {
        if let Some(Tok::Int(n)) = self.peek() {
            let n = *n;
            self.i += 1;
            return Some(n);
        }
        self.fail("a number");
        None
    }

    pub fn quoted(&mut self) -> Option<String> {
        if let Some(Tok::Quoted(s)) = self.peek() {
            let s = s.clone();
            self.i += 1;
            return Some(s);
        }
        self.fail("a quoted label");
        None
    }

    pub fn coord(&mut self) -> Option<(Cell, Option<u32>)> {
        if let Some(Tok::Coord { cell, z }) = self.peek() {
            let r = (*cell, *z);
            self.i += 1;
            return Some(r);
        }
        self.fail("a cell like (x,y)");
        None
    }

    /// A list separator: `,`, `and` or `, and`.
    pub fn sep(&mut self) -> bool {
        let comma = matches!(self.peek(), Some(Tok::Comma));
        if comma {
            self.i += 1;
        }
        self.attempt(|p| p.word("and").then_some(())).is_some() || comma
    }

    /// Advances past the next occurrence of word `w`.
    pub fn skip_past(&mut self, w: &str) -> bool {
        while let Some(t) = self.peek() {
            let hit = matches!(t, Tok::Word(x) if x == w);
            self.i += 1;
            if hit {
                return true;
            }
        }
        false
    }

    /// Words up to the end of input (or a stop), for free-form zone names.
    pub fn trailing_words(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(Tok::Word(w)) = self.peek() {
            out.push(w.clone());
            self.i += 1;
        }
        out
    }

    /// Accepts optional trailing stops, then requires end of input.
    pub fn end(&mut self) -> bool {
        while let Some(Tok::Stop) = self.peek() {
            self.i += 1;
        }
        if self.i == self.toks.len() {
            true
        } else {
            self.fail("end of input");
            false
        }
    }

    /// `[color] noun ['label']`
    pub fn object(&mut self, allow_label: bool) -> Option<ObjectPhrase> {
        let color = self.attempt(|p| p.color());
        let kind = self.noun()?;
        let label = if allow_label { self.attempt(|p| p.quoted()) } else { None };
        Some(ObjectPhrase { color, kind, label, at: None })
    }

    fn noun(&mut self) -> Option<Kind> {
        if let Some(Tok::Word(w)) = self.peek() {
            let kind = match w.as_str() {
                "letter" | "word" => Some(Kind::LetterTile),
                "digit" | "number" => Some(Kind::DigitTile),
                "symbol" => Some(Kind::SymbolTile),
                other => Kind::from_str(other).ok(),
            };
            if let Some(kind) = kind {
                let two_word = matches!(w.as_str(), "letter" | "digit" | "symbol" | "number");
                self.i += 1;
                if two_word {
                    self.attempt(|p| p.word("tile").then_some(()));
                }
                return Some(kind);
            }
        }
        self.fail("an object noun");
        None
    }
}
