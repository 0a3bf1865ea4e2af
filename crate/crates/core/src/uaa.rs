//! Attribute-annotated relations: every value carries a certain/uncertain
//! label and every row a `(u,c)` count pair.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kdb::{self, bad, AttrRef, Attribute, KRelation, Schema};
use crate::semirings::{Element, Semiring};
use crate::syntax::{self, Sexp};
use crate::value::{CmpOp, Value};

/// A value tagged `T` (certain) or `F` (uncertain).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotatedValue {
    pub value: Value,
    pub certain: bool,
}

impl AnnotatedValue {
    pub fn certain(value: impl Into<Value>) -> AnnotatedValue {
        AnnotatedValue {
            value: value.into(),
            certain: true,
        }
    }

    pub fn uncertain(value: impl Into<Value>) -> AnnotatedValue {
        AnnotatedValue {
            value: value.into(),
            certain: false,
        }
    }

    fn with(value: Value, certain: bool) -> AnnotatedValue {
        AnnotatedValue { value, certain }
    }

    /// `v!u` for uncertain values, `v` otherwise.
    pub fn to_cell(&self) -> String {
        let v = match &self.value {
            Value::Null => String::new(),
            v => v.to_string(),
        };
        if self.certain {
            v
        } else {
            format!("{v}!u")
        }
    }

    pub fn from_cell(cell: &str) -> AnnotatedValue {
        match cell.trim().strip_suffix("!u") {
            Some(v) => AnnotatedValue::uncertain(Value::parse_cell(v)),
            None => AnnotatedValue::certain(Value::parse_cell(cell)),
        }
    }

    fn as_bool(&self) -> Result<bool> {
        self.value
            .as_bool()
            .ok_or_else(|| Error::Type(format!("expected a boolean, found `{}`", self.value)))
    }

    fn is_certain_zero(&self) -> bool {
        self.certain && self.value.as_f64() == Some(0.0)
    }
}

impl fmt::Display for AnnotatedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.value, if self.certain { 'T' } else { 'F' })
    }
}

/// Row annotation with `d` best-guess copies of which `c` are certain.
/// Displayed as `(u,c)` with `u = d - c`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UaCount {
    pub d: u64,
    pub c: u64,
}

impl UaCount {
    pub const ZERO: UaCount = UaCount { d: 0, c: 0 };
    pub const ONE: UaCount = UaCount { d: 1, c: 1 };

    pub fn new(d: u64, c: u64) -> Result<UaCount> {
        if c > d {
            return Err(Error::Carrier {
                semiring: "N^2".into(),
                element: format!("[{d},{c}]"),
            });
        }
        Ok(UaCount { d, c })
    }

    /// From the `(uncertain, certain)` counts.
    pub fn uc(u: u64, c: u64) -> UaCount {
        UaCount { d: u + c, c }
    }

    pub fn uncertain(&self) -> u64 {
        self.d - self.c
    }

    pub fn is_zero(&self) -> bool {
        self.d == 0
    }

    pub fn checked_add(self, o: UaCount) -> Result<UaCount> {
        let add = |a: u64, b: u64| a.checked_add(b).ok_or(Error::Overflow("row annotation"));
        Ok(UaCount {
            d: add(self.d, o.d)?,
            c: add(self.c, o.c)?,
        })
    }

    pub fn checked_mul(self, o: UaCount) -> Result<UaCount> {
        let mul = |a: u64, b: u64| a.checked_mul(b).ok_or(Error::Overflow("row annotation"));
        Ok(UaCount {
            d: mul(self.d, o.d)?,
            c: mul(self.c, o.c)?,
        })
    }

    pub fn to_element(self) -> Element {
        Element::pair(Element::Nat(self.d), Element::Nat(self.c))
    }

    pub fn from_element(k: &Element) -> Result<UaCount> {
        let bad = || Error::Carrier {
            semiring: "N^2".into(),
            element: k.to_string(),
        };
        match k.as_pair().ok_or_else(bad)? {
            (Element::Nat(d), Element::Nat(c)) => UaCount::new(*d, *c),
            (Element::Bool(d), Element::Bool(c)) => UaCount::new(*d as u64, *c as u64),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for UaCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.uncertain(), self.c)
    }
}

/// Unit form of a row annotation.
pub fn unit(p: UaCount) -> UaCount {
    if p.c > 0 {
        UaCount::uc(0, 1)
    } else if p.d > 0 {
        UaCount::uc(1, 0)
    } else {
        UaCount::ZERO
    }
}

/// Row annotation contributed by a condition's annotated result.
pub fn trans(res: &AnnotatedValue) -> Result<UaCount> {
    Ok(match (res.as_bool()?, res.certain) {
        (true, true) => UaCount::uc(0, 1),
        (true, false) => UaCount::uc(1, 0),
        _ => UaCount::ZERO,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }

    fn apply(self, a: &Value, b: &Value) -> Result<Value> {
        if a.is_null() || b.is_null() {
            return Ok(Value::Null);
        }
        match (a, b) {
            (Value::Int(x), Value::Int(y)) => {
                let r = match self {
                    ArithOp::Add => x.checked_add(*y),
                    ArithOp::Sub => x.checked_sub(*y),
                    ArithOp::Mul => x.checked_mul(*y),
                };
                r.map(Value::Int).ok_or(Error::Overflow("integer arithmetic"))
            }
            _ => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => Ok(Value::dec(match self {
                    ArithOp::Add => x + y,
                    ArithOp::Sub => x - y,
                    ArithOp::Mul => x * y,
                })),
                _ => Err(Error::Type(format!("cannot compute `{a} {} {b}`", self.symbol()))),
            },
        }
    }
}

/// Expressions over annotated values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Attr(AttrRef),
    Const(AnnotatedValue),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn attr(a: impl Into<AttrRef>) -> Expr {
        Expr::Attr(a.into())
    }

    pub fn val(v: impl Into<Value>) -> Expr {
        Expr::Const(AnnotatedValue::certain(v))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::cmp(CmpOp::Eq, a, b)
    }

    pub fn concat(a: Expr, b: Expr) -> Expr {
        Expr::Concat(Box::new(a), Box::new(b))
    }

    pub fn parse(text: &str) -> Result<Expr> {
        parse_expr(&syntax::read(text)?)
    }

    /// Replaces every constant's label with `T`.
    pub fn all_certain(&self) -> Expr {
        let b = |e: &Expr| Box::new(e.all_certain());
        match self {
            Expr::Attr(a) => Expr::Attr(a.clone()),
            Expr::Const(v) => Expr::Const(AnnotatedValue::certain(v.value.clone())),
            Expr::Arith(op, x, y) => Expr::Arith(*op, b(x), b(y)),
            Expr::Cmp(op, x, y) => Expr::Cmp(*op, b(x), b(y)),
            Expr::Not(x) => Expr::Not(b(x)),
            Expr::And(x, y) => Expr::And(b(x), b(y)),
            Expr::Or(x, y) => Expr::Or(b(x), b(y)),
            Expr::If(c, x, y) => Expr::If(b(c), b(x), b(y)),
            Expr::Concat(x, y) => Expr::Concat(b(x), b(y)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Attr(a) => write!(f, "{a}"),
            Expr::Const(v) if v.certain => f.write_str(&v.value.literal()),
            Expr::Const(v) => write!(f, "(uncertain {})", v.value.literal()),
            Expr::Arith(op, a, b) => write!(f, "({} {a} {b})", op.symbol()),
            Expr::Cmp(op, a, b) => write!(f, "({op} {a} {b})"),
            Expr::Not(a) => write!(f, "(not {a})"),
            Expr::And(a, b) => write!(f, "(and {a} {b})"),
            Expr::Or(a, b) => write!(f, "(or {a} {b})"),
            Expr::If(c, a, b) => write!(f, "(if {c} {a} {b})"),
            Expr::Concat(a, b) => write!(f, "(|| {a} {b})"),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Expr> {
        Expr::parse(s)
    }
}

/// Evaluates `e` over the annotated tuple `t` of schema `schema`.
pub fn eval_expr(e: &Expr, schema: &Schema, t: &[AnnotatedValue]) -> Result<AnnotatedValue> {
    let ev = |x: &Expr| eval_expr(x, schema, t);
    Ok(match e {
        Expr::Attr(a) => t[schema.resolve(a)?].clone(),
        Expr::Const(v) => v.clone(),
        Expr::Arith(op, a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            let v = op.apply(&a.value, &b.value)?;
            if *op == ArithOp::Mul && (a.is_certain_zero() || b.is_certain_zero()) {
                AnnotatedValue::certain(v)
            } else {
                AnnotatedValue::with(v, a.certain && b.certain)
            }
        }
        Expr::Cmp(op, a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            AnnotatedValue::with(Value::Bool(op.apply(&a.value, &b.value)?), a.certain && b.certain)
        }
        Expr::Not(a) => {
            let a = ev(a)?;
            AnnotatedValue::with(Value::Bool(!a.as_bool()?), a.certain)
        }
        Expr::And(a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            let (x, y) = (a.as_bool()?, b.as_bool()?);
            let det = (!x && a.certain) || (!y && b.certain) || (a.certain && b.certain);
            AnnotatedValue::with(Value::Bool(x && y), det)
        }
        Expr::Or(a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            let (x, y) = (a.as_bool()?, b.as_bool()?);
            let det = (x && a.certain) || (y && b.certain) || (a.certain && b.certain);
            AnnotatedValue::with(Value::Bool(x || y), det)
        }
        Expr::If(c, a, b) => {
            let (c, a, b) = (ev(c)?, ev(a)?, ev(b)?);
            let cond = c.as_bool()?;
            let det = (cond && c.certain && a.certain) || (!cond && c.certain && b.certain);
            AnnotatedValue::with(if cond { a.value } else { b.value }, det)
        }
        Expr::Concat(a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            let v = if a.value.is_null() || b.value.is_null() {
                Value::Null
            } else {
                Value::Str(format!("{}{}", a.value, b.value))
            };
            AnnotatedValue::with(v, a.certain && b.certain)
        }
    })
}

/// A bag of annotated tuples with `(u,c)` row annotations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedRelation {
    pub schema: Schema,
    rows: BTreeMap<Vec<AnnotatedValue>, UaCount>,
}

impl AnnotatedRelation {
    pub fn new(schema: Schema) -> AnnotatedRelation {
        AnnotatedRelation {
            schema,
            rows: BTreeMap::new(),
        }
    }

    pub fn from_rows(
        schema: Schema,
        rows: impl IntoIterator<Item = (Vec<AnnotatedValue>, UaCount)>,
    ) -> Result<AnnotatedRelation> {
        let mut r = AnnotatedRelation::new(schema);
        for (t, k) in rows {
            r.add(t, k)?;
        }
        Ok(r)
    }

    /// Every value certain; annotations taken from an `N^2` or `B^2` relation.
    pub fn from_ua(r: &KRelation) -> Result<AnnotatedRelation> {
        AnnotatedRelation::from_rows(
            r.schema.clone(),
            r.iter()
                .map(|(t, k)| {
                    let vals = t.0.iter().cloned().map(AnnotatedValue::certain).collect();
                    Ok((vals, UaCount::from_element(k)?))
                })
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn add(&mut self, t: Vec<AnnotatedValue>, k: UaCount) -> Result<()> {
        if t.len() != self.schema.arity() {
            return Err(Error::Arity {
                expected: self.schema.arity(),
                got: t.len(),
            });
        }
        if k.is_zero() {
            return Ok(());
        }
        let slot = self.rows.entry(t).or_default();
        *slot = slot.checked_add(k)?;
        Ok(())
    }

    pub fn get(&self, t: &[AnnotatedValue]) -> UaCount {
        self.rows.get(t).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<AnnotatedValue>, &UaCount)> {
        self.rows.iter()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Best-guess bag with every label removed.
    pub fn strip(&self) -> Result<KRelation> {
        let mut out = KRelation::new(self.schema.clone(), Semiring::Natural);
        for (t, k) in &self.rows {
            out.add(strip(t), Element::Nat(k.d))?;
        }
        Ok(out)
    }

    fn renamed(&self, schema: Schema) -> AnnotatedRelation {
        AnnotatedRelation {
            schema,
            rows: self.rows.clone(),
        }
    }
}

pub fn strip(t: &[AnnotatedValue]) -> kdb::Tuple {
    kdb::Tuple(t.iter().map(|v| v.value.clone()).collect())
}

pub type AnnotatedDb = BTreeMap<String, AnnotatedRelation>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggFn {
    Count,
    Sum,
    Min,
    Max,
}

impl AggFn {
    pub fn name(self) -> &'static str {
        match self {
            AggFn::Count => "count",
            AggFn::Sum => "sum",
            AggFn::Min => "min",
            AggFn::Max => "max",
        }
    }

    fn from_name(s: &str) -> Option<AggFn> {
        [AggFn::Count, AggFn::Sum, AggFn::Min, AggFn::Max]
            .into_iter()
            .find(|f| f.name() == s)
    }
}

/// Queries over annotated relations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum UaaQuery {
    Rel(String),
    Select(Expr, Box<UaaQuery>),
    /// Generalized projection: each output column is an expression.
    Project(Vec<(Expr, String)>, Box<UaaQuery>),
    Join(Expr, Box<UaaQuery>, Box<UaaQuery>),
    Cross(Box<UaaQuery>, Box<UaaQuery>),
    Union(Box<UaaQuery>, Box<UaaQuery>),
    Aggregate {
        group: Vec<AttrRef>,
        func: AggFn,
        attr: Option<AttrRef>,
        input: Box<UaaQuery>,
    },
    Difference(Box<UaaQuery>, Box<UaaQuery>),
}

impl UaaQuery {
    pub fn rel(name: impl Into<String>) -> UaaQuery {
        UaaQuery::Rel(name.into())
    }

    pub fn select(self, p: Expr) -> UaaQuery {
        UaaQuery::Select(p, Box::new(self))
    }

    pub fn join(self, p: Expr, right: UaaQuery) -> UaaQuery {
        UaaQuery::Join(p, Box::new(self), Box::new(right))
    }

    pub fn union(self, right: UaaQuery) -> UaaQuery {
        UaaQuery::Union(Box::new(self), Box::new(right))
    }

    pub fn minus(self, right: UaaQuery) -> UaaQuery {
        UaaQuery::Difference(Box::new(self), Box::new(right))
    }

    /// Plain projection onto attributes, keeping their names.
    pub fn project<A: Into<AttrRef> + Clone>(self, attrs: &[A]) -> UaaQuery {
        let cols = attrs
            .iter()
            .cloned()
            .map(|a| {
                let a: AttrRef = a.into();
                let name = match &a {
                    AttrRef::Name(n) | AttrRef::Qualified(_, n) => n.clone(),
                    AttrRef::Position(i) => format!("#{i}"),
                };
                (Expr::Attr(a), name)
            })
            .collect();
        UaaQuery::Project(cols, Box::new(self))
    }

    pub fn aggregate<A: Into<AttrRef> + Clone>(self, group: &[A], func: AggFn, attr: Option<&str>) -> UaaQuery {
        UaaQuery::Aggregate {
            group: group.iter().cloned().map(Into::into).collect(),
            func,
            attr: attr.map(AttrRef::from),
            input: Box::new(self),
        }
    }

    pub fn parse(text: &str) -> Result<UaaQuery> {
        parse_uaa(&syntax::read(text)?)
    }

    /// The positive part of `q` as a plain query, when it has one.
    pub fn from_query(q: &kdb::Query) -> Result<UaaQuery> {
        use kdb::Query as Q;
        Ok(match q {
            Q::Rel(n) => UaaQuery::rel(n.as_str()),
            Q::Select(p, q) => UaaQuery::Select(predicate_expr(p), Box::new(Self::from_query(q)?)),
            Q::Project(attrs, q) => Self::from_query(q)?.project(attrs),
            Q::Join(p, a, b) => UaaQuery::Join(
                predicate_expr(p),
                Box::new(Self::from_query(a)?),
                Box::new(Self::from_query(b)?),
            ),
            Q::Cross(a, b) => UaaQuery::Cross(Box::new(Self::from_query(a)?), Box::new(Self::from_query(b)?)),
            Q::Union(a, b) => UaaQuery::Union(Box::new(Self::from_query(a)?), Box::new(Self::from_query(b)?)),
            Q::MinFlags { .. } => return Err(Error::Unsupported("flag merging has no attribute-level form".into())),
        })
    }
}

impl FromStr for UaaQuery {
    type Err = Error;

    fn from_str(s: &str) -> Result<UaaQuery> {
        UaaQuery::parse(s)
    }
}

fn predicate_expr(p: &kdb::Predicate) -> Expr {
    use kdb::{Operand, Predicate as P};
    let operand = |o: &Operand| match o {
        Operand::Attr(a) => Expr::Attr(a.clone()),
        Operand::Const(v) => Expr::val(v.clone()),
    };
    let fold = |ps: &[P], f: fn(Box<Expr>, Box<Expr>) -> Expr, unit: bool| {
        ps.iter()
            .map(predicate_expr)
            .reduce(|a, b| f(Box::new(a), Box::new(b)))
            .unwrap_or_else(|| Expr::val(unit))
    };
    match p {
        P::True => Expr::val(true),
        P::Cmp(a, op, b) => Expr::cmp(*op, operand(a), operand(b)),
        P::And(ps) => fold(ps, Expr::And, true),
        P::Or(ps) => fold(ps, Expr::Or, false),
        P::Not(p) => Expr::Not(Box::new(predicate_expr(p))),
    }
}

pub fn eval_uaa(db: &AnnotatedDb, q: &UaaQuery) -> Result<AnnotatedRelation> {
    match q {
        UaaQuery::Rel(n) => {
            let r = db.get(n).ok_or_else(|| Error::UnknownRelation(n.clone()))?;
            let schema = Schema {
                name: n.clone(),
                ..r.schema.clone()
            };
            Ok(r.renamed(schema.qualified()))
        }
        UaaQuery::Select(p, q) => {
            let input = eval_uaa(db, q)?;
            let mut out = AnnotatedRelation::new(input.schema.clone());
            for (t, k) in input.iter() {
                let f = trans(&eval_expr(p, &input.schema, t)?)?;
                out.add(t.clone(), k.checked_mul(f)?)?;
            }
            Ok(out)
        }
        UaaQuery::Project(cols, q) => {
            let input = eval_uaa(db, q)?;
            let names: Vec<&str> = cols.iter().map(|(_, n)| n.as_str()).collect();
            let mut schema = Schema::new(input.schema.name.clone(), &names)?;
            for ((e, _), a) in cols.iter().zip(schema.attrs.iter_mut()) {
                if let Expr::Attr(r) = e {
                    a.qualifier = input.schema.attrs[input.schema.resolve(r)?].qualifier.clone();
                }
            }
            let mut out = AnnotatedRelation::new(schema);
            for (t, k) in input.iter() {
                let row = cols
                    .iter()
                    .map(|(e, _)| eval_expr(e, &input.schema, t))
                    .collect::<Result<Vec<_>>>()?;
                out.add(row, *k)?;
            }
            Ok(out)
        }
        UaaQuery::Join(p, a, b) => join(db, Some(p), a, b),
        UaaQuery::Cross(a, b) => join(db, None, a, b),
        UaaQuery::Union(a, b) => {
            let (a, b) = (eval_uaa(db, a)?, eval_uaa(db, b)?);
            let mut out = AnnotatedRelation::new(kdb::union_schema(&a.schema, &b.schema)?);
            for (t, k) in a.iter().chain(b.iter()) {
                out.add(t.clone(), *k)?;
            }
            Ok(out)
        }
        UaaQuery::Aggregate {
            group,
            func,
            attr,
            input,
        } => eval_aggregate(&eval_uaa(db, input)?, group, *func, attr.as_ref()),
        UaaQuery::Difference(a, b) => eval_difference(&eval_uaa(db, a)?, &eval_uaa(db, b)?),
    }
}

fn join(db: &AnnotatedDb, p: Option<&Expr>, a: &UaaQuery, b: &UaaQuery) -> Result<AnnotatedRelation> {
    let (a, b) = (eval_uaa(db, a)?, eval_uaa(db, b)?);
    let mut out = AnnotatedRelation::new(kdb::concat_schema(&a.schema, &b.schema));
    for (s, ks) in a.iter() {
        for (t, kt) in b.iter() {
            let mut row = s.clone();
            row.extend(t.iter().cloned());
            let mut k = ks.checked_mul(*kt)?;
            if let Some(p) = p {
                k = k.checked_mul(trans(&eval_expr(p, &out.schema, &row)?)?)?;
            }
            out.add(row, k)?;
        }
    }
    Ok(out)
}

/// Groups on label-free values. The aggregate column is always uncertain.
pub fn eval_aggregate(
    input: &AnnotatedRelation,
    group: &[AttrRef],
    func: AggFn,
    attr: Option<&AttrRef>,
) -> Result<AnnotatedRelation> {
    let gidx = group
        .iter()
        .map(|a| input.schema.resolve(a))
        .collect::<Result<Vec<_>>>()?;
    let aidx = attr.map(|a| input.schema.resolve(a)).transpose()?;
    if aidx.is_none() && func != AggFn::Count {
        return Err(Error::SchemaMismatch(format!("`{}` needs an attribute", func.name())));
    }
    let mut attrs: Vec<Attribute> = gidx.iter().map(|&i| input.schema.attrs[i].clone()).collect();
    attrs.push(Attribute::new(func.name()));
    let schema = Schema {
        name: input.schema.name.clone(),
        attrs,
    };

    let mut groups: BTreeMap<Vec<Value>, Vec<(&Vec<AnnotatedValue>, UaCount)>> = BTreeMap::new();
    for (t, k) in input.iter() {
        let key = gidx.iter().map(|&i| t[i].value.clone()).collect();
        groups.entry(key).or_default().push((t, *k));
    }

    let mut out = AnnotatedRelation::new(schema);
    for members in groups.values() {
        let total = members
            .iter()
            .try_fold(UaCount::ZERO, |acc, (_, k)| acc.checked_add(*k))?;
        let row_unit = unit(total);
        let certain_keys = |t: &[AnnotatedValue]| gidx.iter().filter(|&&i| t[i].certain).count();
        // First best member in sorted order.
        let rep = members
            .iter()
            .filter(|(_, k)| unit(*k) == row_unit)
            .fold(None::<&Vec<AnnotatedValue>>, |best, (t, _)| match best {
                Some(b) if certain_keys(b) >= certain_keys(t) => Some(b),
                _ => Some(t),
            })
            .expect("some member shares the group's unit");
        let mut row: Vec<AnnotatedValue> = gidx
            .iter()
            .map(|&i| AnnotatedValue::with(rep[i].value.clone(), rep[i].certain && gidx.len() == 1))
            .collect();
        let bag = members.iter().map(|(t, k)| (aidx.map(|i| &t[i].value), k.d));
        row.push(AnnotatedValue::uncertain(aggregate(func, bag)?));
        out.add(row, row_unit)?;
    }
    Ok(out)
}

fn aggregate<'a>(func: AggFn, bag: impl Iterator<Item = (Option<&'a Value>, u64)>) -> Result<Value> {
    let bag: Vec<(Option<&Value>, u64)> = bag.filter(|(v, _)| !v.is_some_and(Value::is_null)).collect();
    match func {
        AggFn::Count => {
            let n: u64 = bag.iter().map(|(_, m)| m).sum();
            Ok(Value::Int(i64::try_from(n).map_err(|_| Error::Overflow("count"))?))
        }
        AggFn::Sum => {
            let vals: Vec<(&Value, u64)> = bag.iter().filter_map(|(v, m)| Some(((*v)?, *m))).collect();
            if vals.is_empty() {
                return Ok(Value::Null);
            }
            vals.iter().try_fold(Value::Int(0), |acc, (v, m)| {
                let m = i64::try_from(*m).map_err(|_| Error::Overflow("sum"))?;
                match v {
                    Value::Int(_) | Value::Dec(_) => ArithOp::Add.apply(&acc, &ArithOp::Mul.apply(v, &Value::Int(m))?),
                    other => Err(Error::Type(format!("cannot sum `{other}`"))),
                }
            })
        }
        AggFn::Min | AggFn::Max => {
            let mut best: Option<&Value> = None;
            for v in bag.iter().filter_map(|(v, _)| *v) {
                best = Some(match best {
                    None => v,
                    Some(b) => {
                        let better = if func == AggFn::Min { CmpOp::Lt } else { CmpOp::Gt };
                        if better.apply(v, b)? {
                            v
                        } else {
                            b
                        }
                    }
                });
            }
            Ok(best.cloned().unwrap_or(Value::Null))
        }
    }
}

/// Bag difference of the best-guess bags; everything in the output is
/// marked uncertain.
pub fn eval_difference(a: &AnnotatedRelation, b: &AnnotatedRelation) -> Result<AnnotatedRelation> {
    let schema = kdb::union_schema(&a.schema, &b.schema)?;
    let (sa, sb) = (a.strip()?, b.strip()?);
    let mut out = AnnotatedRelation::new(schema);
    for (t, k) in sa.iter() {
        let (m, n) = (k.as_nat().unwrap_or(0), sb.get(t).as_nat().unwrap_or(0));
        let row = t.0.iter().cloned().map(AnnotatedValue::uncertain).collect();
        out.add(row, UaCount::uc(m.saturating_sub(n), 0))?;
    }
    Ok(out)
}

fn parse_expr(e: &Sexp) -> Result<Expr> {
    if let Some(v) = e.literal() {
        return Ok(Expr::val(v));
    }
    if let Some(a) = e.atom() {
        return Ok(Expr::Attr(a.parse()?));
    }
    let (head, args) = e.form().ok_or_else(|| bad(e, "expected an expression"))?;
    let two = |f: fn(Box<Expr>, Box<Expr>) -> Expr| -> Result<Expr> {
        match args {
            [a, b] => Ok(f(Box::new(parse_expr(a)?), Box::new(parse_expr(b)?))),
            _ => Err(bad(e, "expected two operands")),
        }
    };
    match head {
        "uncertain" => match args {
            [v] => v
                .literal()
                .map(|v| Expr::Const(AnnotatedValue::uncertain(v)))
                .ok_or_else(|| bad(e, "expected a constant")),
            _ => Err(bad(e, "`uncertain` takes one constant")),
        },
        "+" => two(|a, b| Expr::Arith(ArithOp::Add, a, b)),
        "-" => two(|a, b| Expr::Arith(ArithOp::Sub, a, b)),
        "*" => two(|a, b| Expr::Arith(ArithOp::Mul, a, b)),
        "and" => two(Expr::And),
        "or" => two(Expr::Or),
        "||" => two(Expr::Concat),
        "not" => match args {
            [a] => Ok(Expr::Not(Box::new(parse_expr(a)?))),
            _ => Err(bad(e, "`not` takes one argument")),
        },
        "if" => match args {
            [c, a, b] => Ok(Expr::If(
                Box::new(parse_expr(c)?),
                Box::new(parse_expr(a)?),
                Box::new(parse_expr(b)?),
            )),
            _ => Err(bad(e, "`if` takes three arguments")),
        },
        op => match (CmpOp::from_symbol(op), args) {
            (Some(op), [a, b]) => Ok(Expr::cmp(op, parse_expr(a)?, parse_expr(b)?)),
            _ => Err(bad(e, "unknown expression form")),
        },
    }
}

fn parse_column(e: &Sexp) -> Result<(Expr, String)> {
    match e.form() {
        Some(("as", [x, Sexp::Atom(name)])) => Ok((parse_expr(x)?, name.clone())),
        _ => {
            let a = e.atom().ok_or_else(|| bad(e, "expected attribute or (as expr name)"))?;
            let r: AttrRef = a.parse()?;
            let name = match &r {
                AttrRef::Name(n) | AttrRef::Qualified(_, n) => n.clone(),
                AttrRef::Position(i) => format!("#{i}"),
            };
            Ok((Expr::Attr(r), name))
        }
    }
}

fn parse_uaa(e: &Sexp) -> Result<UaaQuery> {
    if let Some(name) = e.atom() {
        return Ok(UaaQuery::rel(name));
    }
    let (head, args) = e.form().ok_or_else(|| bad(e, "expected a query"))?;
    let sub = |q: &Sexp| parse_uaa(q).map(Box::new);
    match (head, args) {
        ("rel", [Sexp::Atom(n)]) => Ok(UaaQuery::rel(n.as_str())),
        ("select", [p, q]) => Ok(UaaQuery::Select(parse_expr(p)?, sub(q)?)),
        ("project", [Sexp::List(cols), q]) => Ok(UaaQuery::Project(
            cols.iter().map(parse_column).collect::<Result<_>>()?,
            sub(q)?,
        )),
        ("join", [p, a, b]) => Ok(UaaQuery::Join(parse_expr(p)?, sub(a)?, sub(b)?)),
        ("cross" | "product", [a, b]) => Ok(UaaQuery::Cross(sub(a)?, sub(b)?)),
        ("union", [a, b]) => Ok(UaaQuery::Union(sub(a)?, sub(b)?)),
        ("difference" | "minus", [a, b]) => Ok(UaaQuery::Difference(sub(a)?, sub(b)?)),
        ("aggregate", [Sexp::List(group), f, q]) => {
            let (func, attr) = match f {
                Sexp::Atom(name) => (AggFn::from_name(name), None),
                _ => match f.form() {
                    Some((name, [Sexp::Atom(a)])) => (AggFn::from_name(name), Some(a.parse()?)),
                    Some((name, [])) => (AggFn::from_name(name), None),
                    _ => (None, None),
                },
            };
            Ok(UaaQuery::Aggregate {
                group: group
                    .iter()
                    .map(|a| a.atom().ok_or_else(|| bad(a, "expected attribute"))?.parse())
                    .collect::<Result<_>>()?,
                func: func.ok_or_else(|| bad(f, "unknown aggregate"))?,
                attr,
                input: sub(q)?,
            })
        }
        _ => Err(bad(e, "malformed query form")),
    }
}
