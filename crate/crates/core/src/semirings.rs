//! Commutative semirings with natural order and lattice operations.
//!
//! Elements are a closed tagged union. A [`Semiring`] value describes which
//! carrier an element belongs to and supplies the operations.

use std::fmt;
use std::str::FromStr;

use serde_json::Value as Json;

use crate::error::{Error, Result};

/// Access-control levels, ordered `0 < T < S < C < P`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Access {
    Zero,
    TopSecret,
    Secret,
    Confidential,
    Public,
}

impl Access {
    pub const ALL: [Access; 5] = [
        Access::Zero,
        Access::TopSecret,
        Access::Secret,
        Access::Confidential,
        Access::Public,
    ];

    pub fn symbol(self) -> char {
        match self {
            Access::Zero => '0',
            Access::TopSecret => 'T',
            Access::Secret => 'S',
            Access::Confidential => 'C',
            Access::Public => 'P',
        }
    }

    pub fn from_symbol(s: &str) -> Option<Access> {
        Some(match s {
            "0" => Access::Zero,
            "T" => Access::TopSecret,
            "S" => Access::Secret,
            "C" => Access::Confidential,
            "P" => Access::Public,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Bool(bool),
    Nat(u64),
    Access(Access),
    Vector(Vec<Element>),
    Pair(Box<Element>, Box<Element>),
}

impl Element {
    pub fn pair(d: Element, c: Element) -> Element {
        Element::Pair(Box::new(d), Box::new(c))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Element::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Element::Nat(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[Element]> {
        match self {
            Element::Vector(v) => Some(v),
            _ => None,
        }
    }

    /// The `(d, c)` components of a pair element.
    pub fn as_pair(&self) -> Option<(&Element, &Element)> {
        match self {
            Element::Pair(d, c) => Some((d, c)),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Element::Bool(b) => Json::Bool(*b),
            Element::Nat(n) => Json::from(*n),
            Element::Access(a) => Json::String(a.symbol().to_string()),
            Element::Vector(v) => Json::Array(v.iter().map(Element::to_json).collect()),
            Element::Pair(d, c) => Json::Array(vec![d.to_json(), c.to_json()]),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Bool(true) => f.write_str("T"),
            Element::Bool(false) => f.write_str("F"),
            Element::Nat(n) => write!(f, "{n}"),
            Element::Access(a) => write!(f, "{}", a.symbol()),
            Element::Vector(v) => {
                f.write_str("[")?;
                for (i, k) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}")?;
                }
                f.write_str("]")
            }
            Element::Pair(d, c) => write!(f, "[{d},{c}]"),
        }
    }
}

/// A semiring descriptor. Every variant is an l-semiring.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Semiring {
    Boolean,
    Natural,
    Access,
    Vector { base: Box<Semiring>, width: usize },
    Pair(Box<Semiring>),
}

#[derive(Clone, Copy)]
enum Op {
    Add,
    Mul,
    Glb,
    Lub,
}

impl Semiring {
    pub fn vector(base: Semiring, width: usize) -> Semiring {
        Semiring::Vector {
            base: Box::new(base),
            width,
        }
    }

    pub fn pair(base: Semiring) -> Semiring {
        Semiring::Pair(Box::new(base))
    }

    /// Base semiring of a vector or pair construction.
    pub fn base(&self) -> Option<&Semiring> {
        match self {
            Semiring::Vector { base, .. } | Semiring::Pair(base) => Some(base),
            _ => None,
        }
    }

    pub fn zero(&self) -> Element {
        match self {
            Semiring::Boolean => Element::Bool(false),
            Semiring::Natural => Element::Nat(0),
            Semiring::Access => Element::Access(Access::Zero),
            Semiring::Vector { base, width } => Element::Vector(vec![base.zero(); *width]),
            Semiring::Pair(base) => Element::pair(base.zero(), base.zero()),
        }
    }

    pub fn one(&self) -> Element {
        match self {
            Semiring::Boolean => Element::Bool(true),
            Semiring::Natural => Element::Nat(1),
            Semiring::Access => Element::Access(Access::Public),
            Semiring::Vector { base, width } => Element::Vector(vec![base.one(); *width]),
            Semiring::Pair(base) => Element::pair(base.one(), base.one()),
        }
    }

    pub fn is_zero(&self, e: &Element) -> bool {
        *e == self.zero()
    }

    pub fn contains(&self, e: &Element) -> bool {
        match (self, e) {
            (Semiring::Boolean, Element::Bool(_))
            | (Semiring::Natural, Element::Nat(_))
            | (Semiring::Access, Element::Access(_)) => true,
            (Semiring::Vector { base, width }, Element::Vector(v)) => {
                v.len() == *width && v.iter().all(|k| base.contains(k))
            }
            (Semiring::Pair(base), Element::Pair(d, c)) => base.contains(d) && base.contains(c),
            _ => false,
        }
    }

    pub fn check(&self, e: &Element) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(self.carrier_error(e))
        }
    }

    fn carrier_error(&self, e: &Element) -> Error {
        Error::Carrier {
            semiring: self.to_string(),
            element: e.to_string(),
        }
    }

    /// Annotation for `n` copies of a tuple: `T` for any positive count in 𝔹.
    pub fn from_count(&self, n: u64) -> Result<Element> {
        match self {
            Semiring::Boolean => Ok(Element::Bool(n > 0)),
            Semiring::Natural => Ok(Element::Nat(n)),
            Semiring::Access => Ok(Element::Access(if n > 0 { Access::Public } else { Access::Zero })),
            other => Err(Error::Unsupported(format!("counts are not defined for {other}"))),
        }
    }

    pub fn add(&self, a: &Element, b: &Element) -> Result<Element> {
        self.binop(Op::Add, a, b)
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Result<Element> {
        self.binop(Op::Mul, a, b)
    }

    pub fn glb(&self, a: &Element, b: &Element) -> Result<Element> {
        self.binop(Op::Glb, a, b)
    }

    pub fn lub(&self, a: &Element, b: &Element) -> Result<Element> {
        self.binop(Op::Lub, a, b)
    }

    /// Natural order: `a ≼ b` iff some `c` has `a ⊕ c = b`.
    pub fn leq(&self, a: &Element, b: &Element) -> Result<bool> {
        match (self, a, b) {
            (Semiring::Boolean, Element::Bool(x), Element::Bool(y)) => Ok(!x || *y),
            (Semiring::Natural, Element::Nat(x), Element::Nat(y)) => Ok(x <= y),
            (Semiring::Access, Element::Access(x), Element::Access(y)) => Ok(x <= y),
            (Semiring::Vector { base, width }, Element::Vector(x), Element::Vector(y))
                if x.len() == *width && y.len() == *width =>
            {
                for (p, q) in x.iter().zip(y) {
                    if !base.leq(p, q)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            (Semiring::Pair(base), Element::Pair(d1, c1), Element::Pair(d2, c2)) => {
                Ok(base.leq(d1, d2)? && base.leq(c1, c2)?)
            }
            _ => Err(self.carrier_error(if self.contains(a) { b } else { a })),
        }
    }

    fn binop(&self, op: Op, a: &Element, b: &Element) -> Result<Element> {
        match (self, a, b) {
            (Semiring::Boolean, Element::Bool(x), Element::Bool(y)) => Ok(Element::Bool(match op {
                Op::Add | Op::Lub => *x || *y,
                Op::Mul | Op::Glb => *x && *y,
            })),
            (Semiring::Natural, Element::Nat(x), Element::Nat(y)) => match op {
                Op::Add => x.checked_add(*y).map(Element::Nat).ok_or(Error::Overflow("addition")),
                Op::Mul => x
                    .checked_mul(*y)
                    .map(Element::Nat)
                    .ok_or(Error::Overflow("multiplication")),
                Op::Glb => Ok(Element::Nat(*x.min(y))),
                Op::Lub => Ok(Element::Nat(*x.max(y))),
            },
            (Semiring::Access, Element::Access(x), Element::Access(y)) => Ok(Element::Access(match op {
                Op::Add | Op::Lub => *x.max(y),
                Op::Mul | Op::Glb => *x.min(y),
            })),
            (Semiring::Vector { base, width }, Element::Vector(x), Element::Vector(y))
                if x.len() == *width && y.len() == *width =>
            {
                x.iter()
                    .zip(y)
                    .map(|(p, q)| base.binop(op, p, q))
                    .collect::<Result<Vec<_>>>()
                    .map(Element::Vector)
            }
            (Semiring::Pair(base), Element::Pair(d1, c1), Element::Pair(d2, c2)) => {
                Ok(Element::pair(base.binop(op, d1, d2)?, base.binop(op, c1, c2)?))
            }
            _ => Err(self.carrier_error(if self.contains(a) { b } else { a })),
        }
    }

    /// Parses the text rendering of an element of this semiring.
    pub fn parse_element(&self, text: &str) -> Result<Element> {
        let text = text.trim();
        let bad = || Error::parse(0, format!("`{text}` is not an element of {self}"));
        match self {
            Semiring::Boolean => match text {
                "T" | "true" => Ok(Element::Bool(true)),
                "F" | "false" => Ok(Element::Bool(false)),
                _ => Err(bad()),
            },
            Semiring::Natural => text.parse().map(Element::Nat).map_err(|_| bad()),
            Semiring::Access => Access::from_symbol(text).map(Element::Access).ok_or_else(bad),
            Semiring::Vector { base, width } => {
                let parts = split_brackets(text).ok_or_else(bad)?;
                if parts.len() != *width {
                    return Err(bad());
                }
                parts
                    .iter()
                    .map(|p| base.parse_element(p))
                    .collect::<Result<Vec<_>>>()
                    .map(Element::Vector)
            }
            Semiring::Pair(base) => {
                let parts = split_brackets(text).ok_or_else(bad)?;
                if parts.len() != 2 {
                    return Err(bad());
                }
                Ok(Element::pair(
                    base.parse_element(&parts[0])?,
                    base.parse_element(&parts[1])?,
                ))
            }
        }
    }

    pub fn element_from_json(&self, json: &Json) -> Result<Element> {
        let bad = || Error::parse(0, format!("`{json}` is not an element of {self}"));
        let e = match (self, json) {
            (Semiring::Boolean, Json::Bool(b)) => Element::Bool(*b),
            (Semiring::Natural, Json::Number(n)) => Element::Nat(n.as_u64().ok_or_else(bad)?),
            (Semiring::Access, Json::String(s)) => Element::Access(Access::from_symbol(s).ok_or_else(bad)?),
            (Semiring::Vector { base, .. }, Json::Array(items)) => {
                Element::Vector(items.iter().map(|j| base.element_from_json(j)).collect::<Result<_>>()?)
            }
            (Semiring::Pair(base), Json::Array(items)) if items.len() == 2 => {
                Element::pair(base.element_from_json(&items[0])?, base.element_from_json(&items[1])?)
            }
            (_, Json::String(s)) => self.parse_element(s)?,
            _ => return Err(bad()),
        };
        self.check(&e)?;
        Ok(e)
    }
}

/// Splits `[a,b,[c,d]]` into its top-level items.
fn split_brackets(text: &str) -> Option<Vec<String>> {
    let inner = text.strip_prefix('[')?.strip_suffix(']')?;
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in inner.chars() {
        match ch {
            '[' => {
                depth += 1;
                cur.push(ch);
            }
            ']' => {
                depth = depth.checked_sub(1)?;
                cur.push(ch);
            }
            ',' if depth == 0 => out.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur);
    }
    Some(out.into_iter().map(|s| s.trim().to_string()).collect())
}

impl fmt::Display for Semiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Semiring::Boolean => f.write_str("B"),
            Semiring::Natural => f.write_str("N"),
            Semiring::Access => f.write_str("A"),
            Semiring::Vector { base, width } => write!(f, "{base}^{width}"),
            Semiring::Pair(base) => write!(f, "{base}^2"),
        }
    }
}

impl FromStr for Semiring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "B" | "bool" | "boolean" | "set" => Ok(Semiring::Boolean),
            "N" | "nat" | "natural" | "bag" => Ok(Semiring::Natural),
            "A" | "access" => Ok(Semiring::Access),
            other => Err(Error::parse(0, format!("unknown semiring `{other}`"))),
        }
    }
}

pub fn natural_leq(s: &Semiring, a: &Element, b: &Element) -> Result<bool> {
    s.leq(a, b)
}

pub fn glb_fold<'a>(s: &Semiring, ks: impl IntoIterator<Item = &'a Element>) -> Result<Element> {
    fold(s, ks, Semiring::glb)
}

pub fn lub_fold<'a>(s: &Semiring, ks: impl IntoIterator<Item = &'a Element>) -> Result<Element> {
    fold(s, ks, Semiring::lub)
}

fn fold<'a>(
    s: &Semiring,
    ks: impl IntoIterator<Item = &'a Element>,
    f: fn(&Semiring, &Element, &Element) -> Result<Element>,
) -> Result<Element> {
    let mut it = ks.into_iter();
    let first = it.next().ok_or(Error::EmptyFold)?;
    s.check(first)?;
    it.try_fold(first.clone(), |acc, k| f(s, &acc, k))
}
