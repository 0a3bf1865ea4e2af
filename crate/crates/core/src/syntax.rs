//! A tiny s-expression reader shared by the query grammars.

use std::fmt;

use crate::error::{Error, Result};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq)]
pub enum Sexp {
    /// Bare token: a keyword, attribute name or number.
    Atom(String),
    /// Single-quoted string literal.
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(l) => Some(l),
            _ => None,
        }
    }

    /// Head keyword and arguments of a list form.
    pub fn form(&self) -> Option<(&str, &[Sexp])> {
        let l = self.list()?;
        let head = l.first()?.atom()?;
        Some((head, &l[1..]))
    }

    /// Interprets a literal: strings, numbers, `null`, `true`, `false`.
    pub fn literal(&self) -> Option<Value> {
        match self {
            Sexp::Str(s) => Some(Value::Str(s.clone())),
            Sexp::Atom(a) => match a.as_str() {
                "null" | "NULL" => Some(Value::Null),
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => match Value::parse_cell(a) {
                    v @ (Value::Int(_) | Value::Dec(_)) => Some(v),
                    _ => None,
                },
            },
            Sexp::List(_) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub fn read(text: &str) -> Result<Sexp> {
    let mut r = Reader {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
    };
    let e = r.expr()?;
    r.skip_ws();
    if r.pos < r.chars.len() {
        return Err(Error::parse(r.line, "trailing input after expression"));
    }
    Ok(e)
}

struct Reader {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Reader {
    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.get(self.pos) {
            if c == ';' {
                while self.chars.get(self.pos).is_some_and(|&c| c != '\n') {
                    self.pos += 1;
                }
            } else if c.is_whitespace() {
                if c == '\n' {
                    self.line += 1;
                }
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn expr(&mut self) -> Result<Sexp> {
        self.skip_ws();
        match self.chars.get(self.pos) {
            None => Err(Error::parse(self.line, "unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.get(self.pos) {
                        None => return Err(Error::parse(self.line, "unclosed `(`")),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(self.expr()?),
                    }
                }
            }
            Some(')') => Err(Error::parse(self.line, "unexpected `)`")),
            Some('\'') => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    match self.chars.get(self.pos) {
                        None => return Err(Error::parse(self.line, "unterminated string")),
                        Some('\'') if self.chars.get(self.pos + 1) == Some(&'\'') => {
                            s.push('\'');
                            self.pos += 2;
                        }
                        Some('\'') => {
                            self.pos += 1;
                            return Ok(Sexp::Str(s));
                        }
                        Some(&c) => {
                            if c == '\n' {
                                self.line += 1;
                            }
                            s.push(c);
                            self.pos += 1;
                        }
                    }
                }
            }
            Some(_) => {
                let start = self.pos;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|&c| !c.is_whitespace() && c != '(' && c != ')' && c != '\'')
                {
                    self.pos += 1;
                }
                Ok(Sexp::Atom(self.chars[start..self.pos].iter().collect()))
            }
        }
    }
}
