//! Arithmetic equations as laid out on tiles.
//!
//! ```text
//! binary  := int op int "="
//! linear  := int "+" "x" "=" int | "x" "+" int "=" int | "x" "−" int "=" int | int "×" "x" "=" int
//! op      := "+" | "−" | "×" | "÷"
//! int     := digit{1,4}
//! ```
//! ASCII `-`, `*` and `/` are accepted for `−`, `×` and `÷`.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const MAX_OPERAND_DIGITS: usize = 4;
pub const MINUS: &str = "−";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => MINUS,
            Op::Mul => "×",
            Op::Div => "÷",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Equation {
    /// `a op b =`
    Binary { a: u32, op: Op, b: u32 },
    /// `a + x = c`
    AddX { a: u32, c: u32 },
    /// `x + a = c`
    XAdd { a: u32, c: u32 },
    /// `x − a = c`
    XSub { a: u32, c: u32 },
    /// `a × x = c`
    MulX { a: u32, c: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EquationError {
    #[error("ungrammatical equation at position {position}: {reason}")]
    Ungrammatical { position: usize, reason: String },
    #[error("`{0}` has no unique integer solution")]
    NoIntegerSolution(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tok {
    Int(u32),
    Oper(Op),
    Var,
    Eq,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, EquationError> {
    let bad = |position, reason: &str| EquationError::Ungrammatical { position, reason: reason.to_string() };
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                if digits.len() > MAX_OPERAND_DIGITS {
                    return Err(bad(start, "operand longer than four digits"));
                }
                if digits.len() > 1 && digits.starts_with('0') {
                    return Err(bad(start, "leading zero"));
                }
                out.push((start, Tok::Int(digits.parse().expect("digit run"))));
                continue;
            }
            '+' => Tok::Oper(Op::Add),
            '-' | '−' => Tok::Oper(Op::Sub),
            '*' | '×' => Tok::Oper(Op::Mul),
            '/' | '÷' => Tok::Oper(Op::Div),
            'x' | 'X' => Tok::Var,
            '=' => Tok::Eq,
            _ => return Err(bad(i, "unexpected character")),
        };
        out.push((i, tok));
        i += 1;
    }
    Ok(out)
}

/// Parses an equation; trailing `?`, `.` and whitespace are ignored.
pub fn parse_equation(text: &str) -> Result<Equation, EquationError> {
    let text = text.trim_end_matches(|c: char| c == '?' || c == '.' || c.is_whitespace());
    let toks = tokenize(text)?;
    let kinds: Vec<Tok> = toks.iter().map(|(_, t)| *t).collect();
    use Tok::*;
    let eq = match kinds.as_slice() {
        [Int(a), Oper(op), Int(b), Eq] => Equation::Binary { a: *a, op: *op, b: *b },
        [Int(a), Oper(Op::Add), Var, Eq, Int(c)] => Equation::AddX { a: *a, c: *c },
        [Var, Oper(Op::Add), Int(a), Eq, Int(c)] => Equation::XAdd { a: *a, c: *c },
        [Var, Oper(Op::Sub), Int(a), Eq, Int(c)] => Equation::XSub { a: *a, c: *c },
        [Int(a), Oper(Op::Mul), Var, Eq, Int(c)] => Equation::MulX { a: *a, c: *c },
        _ => {
            let position = first_divergence(&toks).unwrap_or(text.chars().count());
            return Err(EquationError::Ungrammatical { position, reason: "does not match any equation form".into() });
        }
    };
    Ok(eq)
}

fn first_divergence(toks: &[(usize, Tok)]) -> Option<usize> {
    use Tok::*;
    let forms: [&[fn(&Tok) -> bool]; 2] = [
        &[|t| matches!(t, Int(_) | Var), |t| matches!(t, Oper(_)), |t| matches!(t, Int(_) | Var), |t| matches!(t, Eq)],
        &[|t| matches!(t, Int(_) | Var), |t| matches!(t, Oper(_)), |t| matches!(t, Int(_) | Var), |t| matches!(t, Eq), |t| matches!(t, Int(_))],
    ];
    let prefix = |form: &[fn(&Tok) -> bool]| toks.iter().zip(form).take_while(|((_, t), f)| f(t)).count();
    let best = forms.iter().map(|f| prefix(f)).max().unwrap_or(0);
    toks.get(best).map(|(p, _)| *p)
}

impl Equation {
    pub fn solve(&self) -> Result<i64, EquationError> {
        let none = || EquationError::NoIntegerSolution(self.to_string());
        let v = match *self {
            Equation::Binary { a, op, b } => {
                let (a, b) = (i64::from(a), i64::from(b));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div if b != 0 && a % b == 0 => a / b,
                    Op::Div => return Err(none()),
                }
            }
            Equation::AddX { a, c } | Equation::XAdd { a, c } => i64::from(c) - i64::from(a),
            Equation::XSub { a, c } => i64::from(c) + i64::from(a),
            Equation::MulX { a, c } if a != 0 && c % a == 0 => i64::from(c / a),
            Equation::MulX { .. } => return Err(none()),
        };
        Ok(v)
    }

    pub fn has_unknown(&self) -> bool {
        !matches!(self, Equation::Binary { .. })
    }

    /// Tile labels left to right as laid out before solving; `"x"` marks the unknown.
    pub fn tiles(&self) -> Vec<String> {
        let digits = |n: u32| n.to_string().chars().map(String::from).collect::<Vec<_>>();
        let sym = |s: &str| vec![s.to_string()];
        let x = || sym("x");
        let parts: Vec<Vec<String>> = match *self {
            Equation::Binary { a, op, b } => vec![digits(a), sym(op.symbol()), digits(b), sym("=")],
            Equation::AddX { a, c } => vec![digits(a), sym("+"), x(), sym("="), digits(c)],
            Equation::XAdd { a, c } => vec![x(), sym("+"), digits(a), sym("="), digits(c)],
            Equation::XSub { a, c } => vec![x(), sym(MINUS), digits(a), sym("="), digits(c)],
            Equation::MulX { a, c } => vec![digits(a), sym("×"), x(), sym("="), digits(c)],
        };
        parts.concat()
    }

    /// Row reading once solved, e.g. `11×13=143` or `1+5=6`.
    pub fn solved_row(&self, answer: i64) -> String {
        let ans = answer_labels(answer).concat();
        let tiles = self.tiles();
        if self.has_unknown() {
            tiles.iter().map(|t| if t == "x" { ans.as_str() } else { t.as_str() }).collect()
        } else {
            format!("{}{}", tiles.concat(), ans)
        }
    }
}

/// Tile labels spelling an integer, with a leading `−` sign tile when negative.
pub fn answer_labels(answer: i64) -> Vec<String> {
    let mut out = Vec::new();
    if answer < 0 {
        out.push(MINUS.to_string());
    }
    out.extend(answer.unsigned_abs().to_string().chars().map(String::from));
    out
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Equation::Binary { a, op, b } => write!(f, "{a} {} {b} =", op.symbol()),
            Equation::AddX { a, c } => write!(f, "{a} + x = {c}"),
            Equation::XAdd { a, c } => write!(f, "x + {a} = {c}"),
            Equation::XSub { a, c } => write!(f, "x {MINUS} {a} = {c}"),
            Equation::MulX { a, c } => write!(f, "{a} × x = {c}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_instances() {
        assert_eq!(parse_equation("1 + x = 6").unwrap().solve().unwrap(), 5);
        assert_eq!(parse_equation("11 × 13 =").unwrap().solve().unwrap(), 143);
        assert_eq!(parse_equation("3 - 3 =").unwrap().solve().unwrap(), 0);
        assert!(matches!(parse_equation("2 × x = 7").unwrap().solve(), Err(EquationError::NoIntegerSolution(_))));
        assert!(matches!(parse_equation("7 ÷ 0 =").unwrap().solve(), Err(EquationError::NoIntegerSolution(_))));
        assert!(matches!(parse_equation("0 * x = 0").unwrap().solve(), Err(EquationError::NoIntegerSolution(_))));
    }

    #[test]
    fn grammar_rejections() {
        for bad in ["", "1 +", "x × 2 = 4", "12345 + 1 =", "1 + 2 = 3", "1 + y =", "07 + 1 ="] {
            assert!(matches!(parse_equation(bad), Err(EquationError::Ungrammatical { .. })), "{bad}");
        }
        match parse_equation("1 + 2 # 3") {
            Err(EquationError::Ungrammatical { position, .. }) => assert_eq!(position, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn display_round_trips() {
        for text in ["1 + x = 6", "x − 4 = 9", "11 × 13 =", "12 ÷ 4 =", "x + 2 = 2", "3 × x = 12"] {
            let e = parse_equation(text).unwrap();
            assert_eq!(e.to_string(), text);
            assert_eq!(parse_equation(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn rows() {
        let e = parse_equation("11 × 13 =").unwrap();
        assert_eq!(e.tiles().concat(), "11×13=");
        assert_eq!(e.solved_row(143), "11×13=143");
        assert_eq!(parse_equation("1 + x = 6").unwrap().solved_row(5), "1+5=6");
        assert_eq!(parse_equation("2 - 9 =").unwrap().solved_row(-7), "2−9=−7");
        assert_eq!(answer_labels(-12), vec!["−", "1", "2"]);
    }
}
