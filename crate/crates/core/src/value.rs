//! Domain constants and comparison operators.

use std::cmp::Ordering;
use std::fmt;

use ordered_float::OrderedFloat;
use serde_json::Value as Json;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Dec(OrderedFloat<f64>),
    Str(String),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn dec(x: f64) -> Value {
        Value::Dec(OrderedFloat(x))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Dec(d) => Some(d.0),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Reads a CSV cell: empty or `NULL` is null, then booleans, integers,
    /// decimals, and `'quoted'` or bare strings.
    pub fn parse_cell(text: &str) -> Value {
        let t = text.trim();
        if t.is_empty() || t.eq_ignore_ascii_case("null") {
            return Value::Null;
        }
        if let Some(inner) = t.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')) {
            return Value::Str(inner.replace("''", "'"));
        }
        match t {
            "true" | "TRUE" => return Value::Bool(true),
            "false" | "FALSE" => return Value::Bool(false),
            _ => {}
        }
        if let Ok(i) = t.parse::<i64>() {
            return Value::Int(i);
        }
        if let Ok(x) = t.parse::<f64>() {
            if x.is_finite() {
                return Value::dec(x);
            }
        }
        Value::Str(t.to_string())
    }

    /// Rendering used inside query text: strings are single-quoted.
    pub fn literal(&self) -> String {
        match self {
            Value::Str(s) => format!("'{}'", s.replace('\'', "''")),
            Value::Null => "null".to_string(),
            other => other.to_string(),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Null => Json::Null,
            Value::Bool(b) => Json::Bool(*b),
            Value::Int(i) => Json::from(*i),
            Value::Dec(d) => Json::from(d.0),
            Value::Str(s) => Json::String(s.clone()),
        }
    }

    pub fn from_json(j: &Json) -> Result<Value> {
        Ok(match j {
            Json::Null => Value::Null,
            Json::Bool(b) => Value::Bool(*b),
            Json::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::dec(n.as_f64().ok_or_else(|| Error::parse(0, "bad number"))?),
            },
            Json::String(s) => Value::Str(s.clone()),
            other => return Err(Error::parse(0, format!("`{other}` is not a domain value"))),
        })
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Int(_) | Value::Dec(_) => "number",
            Value::Str(_) => "string",
        }
    }

    /// Equality with integers and decimals compared numerically.
    pub fn same(&self, other: &Value) -> bool {
        match (self.as_f64(), other.as_f64()) {
            (Some(a), Some(b)) => a == b,
            _ => self == other,
        }
    }

    /// Ordering for `<`-style comparisons. `None` when either side is null.
    fn order(&self, other: &Value) -> Result<Option<Ordering>> {
        if self.is_null() || other.is_null() {
            return Ok(None);
        }
        match (self, other) {
            (Value::Str(a), Value::Str(b)) => Ok(Some(a.cmp(b))),
            (Value::Bool(a), Value::Bool(b)) => Ok(Some(a.cmp(b))),
            _ => match (self.as_f64(), other.as_f64()) {
                (Some(a), Some(b)) => Ok(a.partial_cmp(&b)),
                _ => Err(Error::Type(format!(
                    "cannot order {} against {}",
                    self.kind(),
                    other.kind()
                ))),
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Dec(d) => write!(f, "{}", d.0),
            Value::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" | "==" => CmpOp::Eq,
            "!=" | "<>" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }

    /// The operator `o` with `¬(a op b) ⇔ a o b`.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
        }
    }

    /// The operator `o` with `a op b ⇔ b o a`.
    pub fn mirror(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Le,
            other => other,
        }
    }

    /// Nulls equal only themselves and fail every ordered comparison.
    pub fn apply(self, a: &Value, b: &Value) -> Result<bool> {
        match self {
            CmpOp::Eq => Ok(a.same(b)),
            CmpOp::Ne => Ok(!a.same(b)),
            _ => Ok(match a.order(b)? {
                None => false,
                Some(o) => match self {
                    CmpOp::Lt => o == Ordering::Less,
                    CmpOp::Le => o != Ordering::Greater,
                    CmpOp::Gt => o == Ordering::Greater,
                    CmpOp::Ge => o != Ordering::Less,
                    CmpOp::Eq | CmpOp::Ne => unreachable!(),
                },
            }),
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells() {
        assert_eq!(Value::parse_cell(""), Value::Null);
        assert_eq!(Value::parse_cell("42"), Value::Int(42));
        assert_eq!(Value::parse_cell("-78.81"), Value::dec(-78.81));
        assert_eq!(Value::parse_cell("'42'"), Value::str("42"));
        assert_eq!(Value::parse_cell("Lasalle"), Value::str("Lasalle"));
    }

    #[test]
    fn nulls() {
        let n = Value::Null;
        assert!(CmpOp::Eq.apply(&n, &n).unwrap());
        assert!(!CmpOp::Eq.apply(&n, &Value::Int(1)).unwrap());
        assert!(!CmpOp::Lt.apply(&n, &Value::Int(1)).unwrap());
        assert!(!CmpOp::Ge.apply(&Value::Int(1), &n).unwrap());
    }

    #[test]
    fn mixed_numbers() {
        assert!(CmpOp::Eq.apply(&Value::Int(1), &Value::dec(1.0)).unwrap());
        assert!(CmpOp::Lt.apply(&Value::Int(1), &Value::dec(1.5)).unwrap());
        assert!(CmpOp::Lt.apply(&Value::Int(1), &Value::str("a")).is_err());
    }

    #[test]
    fn negate_and_mirror() {
        let vals = [Value::Int(1), Value::Int(2), Value::Int(3)];
        for op in CmpOp::ALL {
            for a in &vals {
                for b in &vals {
                    let x = op.apply(a, b).unwrap();
                    assert_eq!(op.negate().apply(a, b).unwrap(), !x);
                    assert_eq!(op.mirror().apply(b, a).unwrap(), x);
                }
            }
        }
    }
}
