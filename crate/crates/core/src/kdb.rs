//! K-relations and the positive relational algebra over them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::semirings::{Element, Semiring};
use crate::syntax::{self, Sexp};
use crate::value::{CmpOp, Value};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tuple(pub Vec<Value>);

impl Tuple {
    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    fn concat(&self, other: &Tuple) -> Tuple {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Tuple(v)
    }

    fn pick(&self, idx: &[usize]) -> Tuple {
        Tuple(idx.iter().map(|&i| self.0[i].clone()).collect())
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

impl<V: Into<Value>> FromIterator<V> for Tuple {
    fn from_iter<I: IntoIterator<Item = V>>(iter: I) -> Self {
        Tuple(iter.into_iter().map(Into::into).collect())
    }
}

/// Build a tuple from heterogeneous literals: `tuple![1, "NY"]`.
#[macro_export]
macro_rules! tuple {
    ($($v:expr),* $(,)?) => {
        $crate::kdb::Tuple(vec![$($crate::value::Value::from($v)),*])
    };
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Attribute {
    pub qualifier: Option<String>,
    pub name: String,
}

impl Attribute {
    pub fn new(name: impl Into<String>) -> Attribute {
        Attribute {
            qualifier: None,
            name: name.into(),
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{q}.{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Schema {
    pub name: String,
    pub attrs: Vec<Attribute>,
}

impl Schema {
    /// Base-relation schema: at least one attribute, names unique.
    pub fn new<S: AsRef<str>>(name: impl Into<String>, attrs: &[S]) -> Result<Schema> {
        let name = name.into();
        if attrs.is_empty() {
            return Err(Error::SchemaMismatch(format!("relation `{name}` has no attributes")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in attrs {
            if !seen.insert(a.as_ref()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate attribute `{}` in `{name}`",
                    a.as_ref()
                )));
            }
        }
        Ok(Schema {
            name,
            attrs: attrs.iter().map(|a| Attribute::new(a.as_ref())).collect(),
        })
    }

    pub fn arity(&self) -> usize {
        self.attrs.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.attrs.iter().map(|a| a.name.clone()).collect()
    }

    pub fn resolve(&self, r: &AttrRef) -> Result<usize> {
        let hits: Vec<usize> = match r {
            AttrRef::Position(i) => {
                return if *i < self.arity() {
                    Ok(*i)
                } else {
                    Err(Error::UnknownAttribute(r.to_string()))
                }
            }
            AttrRef::Name(n) => self
                .attrs
                .iter()
                .enumerate()
                .filter(|(_, a)| &a.name == n)
                .map(|(i, _)| i)
                .collect(),
            AttrRef::Qualified(q, n) => self
                .attrs
                .iter()
                .enumerate()
                .filter(|(_, a)| &a.name == n && a.qualifier.as_deref() == Some(q.as_str()))
                .map(|(i, _)| i)
                .collect(),
        };
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(Error::UnknownAttribute(r.to_string())),
            _ => Err(Error::AmbiguousAttribute(r.to_string())),
        }
    }

    pub(crate) fn qualified(&self) -> Schema {
        Schema {
            name: self.name.clone(),
            attrs: self
                .attrs
                .iter()
                .map(|a| Attribute {
                    qualifier: Some(self.name.clone()),
                    name: a.name.clone(),
                })
                .collect(),
        }
    }
}

/// Attribute reference: `a`, `R.a` or the zero-based position `#2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AttrRef {
    Name(String),
    Qualified(String, String),
    Position(usize),
}

impl AttrRef {
    pub fn name(n: impl Into<String>) -> AttrRef {
        AttrRef::Name(n.into())
    }
}

impl FromStr for AttrRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<AttrRef> {
        if let Some(p) = s.strip_prefix('#') {
            return p
                .parse()
                .map(AttrRef::Position)
                .map_err(|_| Error::parse(0, format!("bad position `{s}`")));
        }
        match s.split_once('.') {
            Some((q, n)) if !q.is_empty() && !n.is_empty() => Ok(AttrRef::Qualified(q.to_string(), n.to_string())),
            _ if !s.is_empty() => Ok(AttrRef::Name(s.to_string())),
            _ => Err(Error::parse(0, "empty attribute name")),
        }
    }
}

impl From<&str> for AttrRef {
    fn from(s: &str) -> Self {
        s.parse().unwrap_or_else(|_| AttrRef::Name(s.to_string()))
    }
}

impl fmt::Display for AttrRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrRef::Name(n) => f.write_str(n),
            AttrRef::Qualified(q, n) => write!(f, "{q}.{n}"),
            AttrRef::Position(i) => write!(f, "#{i}"),
        }
    }
}

/// A finite map from tuples to non-zero semiring elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KRelation {
    pub schema: Schema,
    pub semiring: Semiring,
    rows: BTreeMap<Tuple, Element>,
}

impl KRelation {
    pub fn new(schema: Schema, semiring: Semiring) -> KRelation {
        KRelation {
            schema,
            semiring,
            rows: BTreeMap::new(),
        }
    }

    /// Builds a relation from `(tuple, annotation)` rows, summing duplicates.
    pub fn from_rows(
        schema: Schema,
        semiring: Semiring,
        rows: impl IntoIterator<Item = (Tuple, Element)>,
    ) -> Result<KRelation> {
        let mut r = KRelation::new(schema, semiring);
        for (t, k) in rows {
            r.add(t, k)?;
        }
        Ok(r)
    }

    fn check_tuple(&self, t: &Tuple) -> Result<()> {
        if t.arity() != self.schema.arity() {
            return Err(Error::Arity {
                expected: self.schema.arity(),
                got: t.arity(),
            });
        }
        Ok(())
    }

    /// `R(t) := R(t) ⊕ k`.
    pub fn add(&mut self, t: Tuple, k: Element) -> Result<()> {
        self.check_tuple(&t)?;
        self.semiring.check(&k)?;
        let sum = match self.rows.get(&t) {
            Some(old) => self.semiring.add(old, &k)?,
            None => k,
        };
        self.set_unchecked(t, sum);
        Ok(())
    }

    /// `R(t) := k`.
    pub fn set(&mut self, t: Tuple, k: Element) -> Result<()> {
        self.check_tuple(&t)?;
        self.semiring.check(&k)?;
        self.set_unchecked(t, k);
        Ok(())
    }

    fn set_unchecked(&mut self, t: Tuple, k: Element) {
        if self.semiring.is_zero(&k) {
            self.rows.remove(&t);
        } else {
            self.rows.insert(t, k);
        }
    }

    pub fn get(&self, t: &Tuple) -> Element {
        self.rows.get(t).cloned().unwrap_or_else(|| self.semiring.zero())
    }

    pub fn contains(&self, t: &Tuple) -> bool {
        self.rows.contains_key(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Tuple, &Element)> {
        self.rows.iter()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &Tuple> {
        self.rows.keys()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Applies `h` to every annotation, dropping tuples mapped to zero.
    pub fn map_annotations(&self, h: impl Fn(&Element) -> Result<Element>, target: &Semiring) -> Result<KRelation> {
        let mut out = KRelation::new(self.schema.clone(), target.clone());
        for (t, k) in &self.rows {
            let v = h(k)?;
            target.check(&v)?;
            out.set_unchecked(t.clone(), v);
        }
        Ok(out)
    }

    /// Same tuples and annotations under a different schema of equal arity.
    pub fn with_schema(mut self, schema: Schema) -> Result<KRelation> {
        if schema.arity() != self.schema.arity() {
            return Err(Error::Arity {
                expected: self.schema.arity(),
                got: schema.arity(),
            });
        }
        self.schema = schema;
        Ok(self)
    }

    /// Equal tuples and annotations, ignoring schema qualifiers and names.
    pub fn same_content(&self, other: &KRelation) -> bool {
        self.semiring == other.semiring && self.rows == other.rows
    }
}

pub fn map_annotations(r: &KRelation, h: impl Fn(&Element) -> Result<Element>, target: &Semiring) -> Result<KRelation> {
    r.map_annotations(h, target)
}

/// The ℕ→𝔹 support homomorphism `k > 0 ↦ T`.
pub fn support(k: &Element) -> Result<Element> {
    match k {
        Element::Nat(n) => Ok(Element::Bool(*n > 0)),
        Element::Bool(b) => Ok(Element::Bool(*b)),
        other => Err(Error::Carrier {
            semiring: "N".into(),
            element: other.to_string(),
        }),
    }
}

pub type Database = BTreeMap<String, KRelation>;

/// Applies a homomorphism to every relation of a database.
pub fn map_database(db: &Database, h: impl Fn(&Element) -> Result<Element>, target: &Semiring) -> Result<Database> {
    db.iter()
        .map(|(n, r)| Ok((n.clone(), r.map_annotations(&h, target)?)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Attr(AttrRef),
    Const(Value),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Attr(a) => write!(f, "{a}"),
            Operand::Const(v) => f.write_str(&v.literal()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Predicate {
    True,
    Cmp(Operand, CmpOp, Operand),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    pub fn cmp(a: impl Into<AttrRef>, op: CmpOp, b: impl Into<Value>) -> Predicate {
        Predicate::Cmp(Operand::Attr(a.into()), op, Operand::Const(b.into()))
    }

    pub fn attrs(a: impl Into<AttrRef>, op: CmpOp, b: impl Into<AttrRef>) -> Predicate {
        Predicate::Cmp(Operand::Attr(a.into()), op, Operand::Attr(b.into()))
    }

    pub fn eq(a: impl Into<AttrRef>, b: impl Into<Value>) -> Predicate {
        Predicate::cmp(a, CmpOp::Eq, b)
    }

    fn bind(&self, schema: &Schema) -> Result<Bound> {
        let operand = |o: &Operand| -> Result<BoundOperand> {
            Ok(match o {
                Operand::Attr(a) => BoundOperand::Col(schema.resolve(a)?),
                Operand::Const(v) => BoundOperand::Const(v.clone()),
            })
        };
        Ok(match self {
            Predicate::True => Bound::True,
            Predicate::Cmp(a, op, b) => Bound::Cmp(operand(a)?, *op, operand(b)?),
            Predicate::And(ps) => Bound::And(ps.iter().map(|p| p.bind(schema)).collect::<Result<_>>()?),
            Predicate::Or(ps) => Bound::Or(ps.iter().map(|p| p.bind(schema)).collect::<Result<_>>()?),
            Predicate::Not(p) => Bound::Not(Box::new(p.bind(schema)?)),
        })
    }

    /// Evaluates the predicate against one tuple of `schema`.
    pub fn holds(&self, schema: &Schema, t: &Tuple) -> Result<bool> {
        self.bind(schema)?.eval(t)
    }

    fn to_sexp(&self) -> String {
        match self {
            Predicate::True => "true".into(),
            Predicate::Cmp(a, op, b) => format!("({op} {a} {b})"),
            Predicate::And(ps) => format!("(and {})", join_sexps(ps.iter().map(Predicate::to_sexp))),
            Predicate::Or(ps) => format!("(or {})", join_sexps(ps.iter().map(Predicate::to_sexp))),
            Predicate::Not(p) => format!("(not {})", p.to_sexp()),
        }
    }

    /// SQL rendering for `WHERE` clauses.
    pub fn to_sql(&self) -> String {
        let operand = |o: &Operand| match o {
            Operand::Attr(a) => a.to_string(),
            Operand::Const(Value::Null) => "NULL".into(),
            Operand::Const(v) => v.literal(),
        };
        match self {
            Predicate::True => "TRUE".into(),
            Predicate::Cmp(a, op, b) => {
                let sym = if *op == CmpOp::Ne { "<>" } else { op.symbol() };
                format!("{} {sym} {}", operand(a), operand(b))
            }
            Predicate::And(ps) => {
                let parts: Vec<_> = ps.iter().map(|p| format!("({})", p.to_sql())).collect();
                parts.join(" AND ")
            }
            Predicate::Or(ps) => {
                let parts: Vec<_> = ps.iter().map(|p| format!("({})", p.to_sql())).collect();
                parts.join(" OR ")
            }
            Predicate::Not(p) => format!("NOT ({})", p.to_sql()),
        }
    }
}

fn join_sexps(parts: impl Iterator<Item = String>) -> String {
    parts.collect::<Vec<_>>().join(" ")
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexp())
    }
}

enum BoundOperand {
    Col(usize),
    Const(Value),
}

enum Bound {
    True,
    Cmp(BoundOperand, CmpOp, BoundOperand),
    And(Vec<Bound>),
    Or(Vec<Bound>),
    Not(Box<Bound>),
}

impl Bound {
    fn eval(&self, t: &Tuple) -> Result<bool> {
        let get = |o: &BoundOperand| -> Value {
            match o {
                BoundOperand::Col(i) => t.0[*i].clone(),
                BoundOperand::Const(v) => v.clone(),
            }
        };
        match self {
            Bound::True => Ok(true),
            Bound::Cmp(a, op, b) => op.apply(&get(a), &get(b)),
            Bound::And(ps) => {
                for p in ps {
                    if !p.eval(t)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Bound::Or(ps) => {
                for p in ps {
                    if p.eval(t)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Bound::Not(p) => Ok(!p.eval(t)?),
        }
    }
}

/// Positive relational algebra, plus the flag-merging projection used by
/// rewritten queries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Query {
    Rel(String),
    Select(Predicate, Box<Query>),
    Project(Vec<AttrRef>, Box<Query>),
    Join(Predicate, Box<Query>, Box<Query>),
    Cross(Box<Query>, Box<Query>),
    Union(Box<Query>, Box<Query>),
    /// Keeps every attribute not named `flag`, then appends `flag` as the
    /// minimum over all attributes named `flag`.
    MinFlags {
        flag: String,
        input: Box<Query>,
    },
}

impl Query {
    pub fn rel(name: impl Into<String>) -> Query {
        Query::Rel(name.into())
    }

    pub fn select(self, p: Predicate) -> Query {
        Query::Select(p, Box::new(self))
    }

    pub fn project<A: Into<AttrRef> + Clone>(self, attrs: &[A]) -> Query {
        Query::Project(attrs.iter().cloned().map(Into::into).collect(), Box::new(self))
    }

    pub fn join(self, p: Predicate, right: Query) -> Query {
        Query::Join(p, Box::new(self), Box::new(right))
    }

    pub fn cross(self, right: Query) -> Query {
        Query::Cross(Box::new(self), Box::new(right))
    }

    pub fn union(self, right: Query) -> Query {
        Query::Union(Box::new(self), Box::new(right))
    }

    pub fn depth(&self) -> usize {
        match self {
            Query::Rel(_) => 0,
            Query::Select(_, q) | Query::Project(_, q) | Query::MinFlags { input: q, .. } => 1 + q.depth(),
            Query::Join(_, a, b) | Query::Cross(a, b) | Query::Union(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Relation names referenced, with repetition.
    pub fn relations(&self) -> Vec<&str> {
        match self {
            Query::Rel(n) => vec![n.as_str()],
            Query::Select(_, q) | Query::Project(_, q) | Query::MinFlags { input: q, .. } => q.relations(),
            Query::Join(_, a, b) | Query::Cross(a, b) | Query::Union(a, b) => {
                let mut v = a.relations();
                v.extend(b.relations());
                v
            }
        }
    }

    pub fn parse(text: &str) -> Result<Query> {
        parse_query(&syntax::read(text)?)
    }

    /// Output schema given the schemas of base relations.
    pub fn output_schema(&self, catalog: &dyn Fn(&str) -> Option<Schema>) -> Result<Schema> {
        Ok(match self {
            Query::Rel(n) => catalog(n).ok_or_else(|| Error::UnknownRelation(n.clone()))?.qualified(),
            Query::Select(p, q) => {
                let s = q.output_schema(catalog)?;
                p.bind(&s)?;
                s
            }
            Query::Project(attrs, q) => project_schema(&q.output_schema(catalog)?, attrs)?.0,
            Query::Join(p, a, b) => {
                let s = concat_schema(&a.output_schema(catalog)?, &b.output_schema(catalog)?);
                p.bind(&s)?;
                s
            }
            Query::Cross(a, b) => concat_schema(&a.output_schema(catalog)?, &b.output_schema(catalog)?),
            Query::Union(a, b) => union_schema(&a.output_schema(catalog)?, &b.output_schema(catalog)?)?,
            Query::MinFlags { flag, input } => min_flags_schema(&input.output_schema(catalog)?, flag)?.0,
        })
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Rel(n) => write!(f, "(rel {n})"),
            Query::Select(p, q) => write!(f, "(select {p} {q})"),
            Query::Project(attrs, q) => {
                let names: Vec<_> = attrs.iter().map(ToString::to_string).collect();
                write!(f, "(project ({}) {q})", names.join(" "))
            }
            Query::Join(p, a, b) => write!(f, "(join {p} {a} {b})"),
            Query::Cross(a, b) => write!(f, "(cross {a} {b})"),
            Query::Union(a, b) => write!(f, "(union {a} {b})"),
            Query::MinFlags { flag, input } => write!(f, "(min-flags {flag} {input})"),
        }
    }
}

impl FromStr for Query {
    type Err = Error;

    fn from_str(s: &str) -> Result<Query> {
        Query::parse(s)
    }
}

pub(crate) fn bad(form: &Sexp, msg: &str) -> Error {
    Error::parse(0, format!("{msg}: {form}"))
}

pub(crate) fn parse_query(e: &Sexp) -> Result<Query> {
    if let Some(name) = e.atom() {
        return Ok(Query::rel(name));
    }
    let (head, args) = e.form().ok_or_else(|| bad(e, "expected a query"))?;
    match (head, args) {
        ("rel", [Sexp::Atom(n)]) => Ok(Query::rel(n.as_str())),
        ("select", [p, q]) => Ok(Query::Select(parse_predicate(p)?, Box::new(parse_query(q)?))),
        ("project", [Sexp::List(attrs), q]) => Ok(Query::Project(
            attrs
                .iter()
                .map(|a| a.atom().ok_or_else(|| bad(a, "expected attribute"))?.parse())
                .collect::<Result<_>>()?,
            Box::new(parse_query(q)?),
        )),
        ("join", [p, a, b]) => Ok(Query::Join(
            parse_predicate(p)?,
            Box::new(parse_query(a)?),
            Box::new(parse_query(b)?),
        )),
        ("cross" | "product", [a, b]) => Ok(Query::Cross(Box::new(parse_query(a)?), Box::new(parse_query(b)?))),
        ("union", [a, b]) => Ok(Query::Union(Box::new(parse_query(a)?), Box::new(parse_query(b)?))),
        ("min-flags", [Sexp::Atom(flag), q]) => Ok(Query::MinFlags {
            flag: flag.clone(),
            input: Box::new(parse_query(q)?),
        }),
        _ => Err(bad(e, "malformed query form")),
    }
}

pub(crate) fn parse_operand(e: &Sexp) -> Result<Operand> {
    if let Some(v) = e.literal() {
        return Ok(Operand::Const(v));
    }
    match e.atom() {
        Some(a) => Ok(Operand::Attr(a.parse()?)),
        None => Err(bad(e, "expected attribute or constant")),
    }
}

pub(crate) fn parse_predicate(e: &Sexp) -> Result<Predicate> {
    if e.atom() == Some("true") {
        return Ok(Predicate::True);
    }
    let (head, args) = e.form().ok_or_else(|| bad(e, "expected a predicate"))?;
    match head {
        "and" => Ok(Predicate::And(args.iter().map(parse_predicate).collect::<Result<_>>()?)),
        "or" => Ok(Predicate::Or(args.iter().map(parse_predicate).collect::<Result<_>>()?)),
        "not" => match args {
            [p] => Ok(Predicate::Not(Box::new(parse_predicate(p)?))),
            _ => Err(bad(e, "`not` takes one argument")),
        },
        op => match (CmpOp::from_symbol(op), args) {
            (Some(op), [a, b]) => Ok(Predicate::Cmp(parse_operand(a)?, op, parse_operand(b)?)),
            _ => Err(bad(e, "malformed predicate")),
        },
    }
}

fn project_schema(input: &Schema, attrs: &[AttrRef]) -> Result<(Schema, Vec<usize>)> {
    let idx = attrs.iter().map(|a| input.resolve(a)).collect::<Result<Vec<_>>>()?;
    if idx.is_empty() {
        return Err(Error::SchemaMismatch("projection onto no attributes".into()));
    }
    let schema = Schema {
        name: input.name.clone(),
        attrs: idx.iter().map(|&i| input.attrs[i].clone()).collect(),
    };
    Ok((schema, idx))
}

pub(crate) fn concat_schema(a: &Schema, b: &Schema) -> Schema {
    let mut attrs = a.attrs.clone();
    attrs.extend(b.attrs.iter().cloned());
    Schema {
        name: String::new(),
        attrs,
    }
}

pub(crate) fn union_schema(a: &Schema, b: &Schema) -> Result<Schema> {
    if a.names() != b.names() {
        return Err(Error::SchemaMismatch(format!(
            "union of ({}) and ({})",
            a.names().join(", "),
            b.names().join(", ")
        )));
    }
    Ok(a.clone())
}

fn min_flags_schema(input: &Schema, flag: &str) -> Result<(Schema, Vec<usize>, Vec<usize>)> {
    let (flags, keep): (Vec<usize>, Vec<usize>) = (0..input.arity()).partition(|&i| input.attrs[i].name == flag);
    if flags.is_empty() {
        return Err(Error::UnknownAttribute(flag.to_string()));
    }
    let mut attrs: Vec<Attribute> = keep.iter().map(|&i| input.attrs[i].clone()).collect();
    attrs.push(Attribute::new(flag));
    Ok((
        Schema {
            name: input.name.clone(),
            attrs,
        },
        keep,
        flags,
    ))
}

/// Evaluates `q` over `db`; every referenced relation must share one semiring.
pub fn eval(db: &Database, q: &Query) -> Result<KRelation> {
    match q {
        Query::Rel(n) => {
            let r = db.get(n).ok_or_else(|| Error::UnknownRelation(n.clone()))?;
            let schema = Schema {
                name: n.clone(),
                ..r.schema.clone()
            }
            .qualified();
            Ok(KRelation { schema, ..r.clone() })
        }
        Query::Select(p, q) => {
            let input = eval(db, q)?;
            let bound = p.bind(&input.schema)?;
            let mut out = KRelation::new(input.schema.clone(), input.semiring.clone());
            for (t, k) in input.rows {
                if bound.eval(&t)? {
                    out.rows.insert(t, k);
                }
            }
            Ok(out)
        }
        Query::Project(attrs, q) => {
            let input = eval(db, q)?;
            let (schema, idx) = project_schema(&input.schema, attrs)?;
            let mut out = KRelation::new(schema, input.semiring.clone());
            for (t, k) in &input.rows {
                out.add(t.pick(&idx), k.clone())?;
            }
            Ok(out)
        }
        Query::Join(p, a, b) => product(db, Some(p), a, b),
        Query::Cross(a, b) => product(db, None, a, b),
        Query::Union(a, b) => {
            let l = eval(db, a)?;
            let r = eval(db, b)?;
            same_semiring(&l, &r)?;
            let mut out = KRelation::new(union_schema(&l.schema, &r.schema)?, l.semiring.clone());
            for (t, k) in l.rows.into_iter().chain(r.rows) {
                out.add(t, k)?;
            }
            Ok(out)
        }
        Query::MinFlags { flag, input } => {
            let input = eval(db, input)?;
            let (schema, keep, flags) = min_flags_schema(&input.schema, flag)?;
            let mut out = KRelation::new(schema, input.semiring.clone());
            for (t, k) in &input.rows {
                let mut min: Option<i64> = None;
                for &i in &flags {
                    match t.0[i] {
                        Value::Int(f) => min = Some(min.map_or(f, |m| m.min(f))),
                        ref other => return Err(Error::Type(format!("flag value `{other}` is not an integer"))),
                    }
                }
                let mut v = t.pick(&keep);
                v.0.push(Value::Int(min.expect("at least one flag")));
                out.add(v, k.clone())?;
            }
            Ok(out)
        }
    }
}

fn same_semiring(l: &KRelation, r: &KRelation) -> Result<()> {
    if l.semiring != r.semiring {
        return Err(Error::SchemaMismatch(format!(
            "operands annotated in {} and {}",
            l.semiring, r.semiring
        )));
    }
    Ok(())
}

fn product(db: &Database, p: Option<&Predicate>, a: &Query, b: &Query) -> Result<KRelation> {
    let l = eval(db, a)?;
    let r = eval(db, b)?;
    same_semiring(&l, &r)?;
    let schema = concat_schema(&l.schema, &r.schema);
    let bound = p.map(|p| p.bind(&schema)).transpose()?;
    let sr = l.semiring.clone();
    let mut out = KRelation::new(schema, sr.clone());
    for (t1, k1) in &l.rows {
        for (t2, k2) in &r.rows {
            let t = t1.concat(t2);
            if let Some(b) = &bound {
                if !b.eval(&t)? {
                    continue;
                }
            }
            out.add(t, sr.mul(k1, k2)?)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat(n: u64) -> Element {
        Element::Nat(n)
    }

    /// Address and Neighborhood from the running bag example.
    use crate::fixtures::{address_db as qa_db, state_query as qa};

    #[test]
    fn q_a_bag_result() {
        let out = eval(&qa_db(), &qa()).unwrap();
        assert_eq!(out.get(&tuple!["NY"]), nat(2));
        assert_eq!(out.get(&tuple!["AZ"]), nat(1));
        assert!(!out.contains(&tuple!["IL"]));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn support_map_commutes_on_q_a() {
        let db = qa_db();
        let direct = eval(&db, &qa())
            .unwrap()
            .map_annotations(support, &Semiring::Boolean)
            .unwrap();
        assert_eq!(direct.get(&tuple!["NY"]), Element::Bool(true));
        let mapped = map_database(&db, support, &Semiring::Boolean).unwrap();
        assert!(eval(&mapped, &qa()).unwrap().same_content(&direct));
    }

    #[test]
    fn empty_inputs_give_empty_output() {
        let mut db = qa_db();
        for r in db.values_mut() {
            *r = KRelation::new(r.schema.clone(), Semiring::Natural);
        }
        assert!(eval(&db, &qa()).unwrap().is_empty());
    }

    #[test]
    fn identity_map() {
        let r = &qa_db()["Address"];
        assert_eq!(r.map_annotations(|k| Ok(k.clone()), &Semiring::Natural).unwrap(), *r);
    }

    #[test]
    fn errors() {
        let db = qa_db();
        assert_eq!(
            eval(&db, &Query::rel("Nope")),
            Err(Error::UnknownRelation("Nope".into()))
        );
        assert!(matches!(
            eval(&db, &Query::rel("Address").project(&["zip"])),
            Err(Error::UnknownAttribute(_))
        ));
        assert!(matches!(
            eval(&db, &Query::rel("Address").union(Query::rel("Neighborhood"))),
            Err(Error::SchemaMismatch(_))
        ));
        let self_join = Query::rel("Address").cross(Query::rel("Address")).project(&["id"]);
        assert!(matches!(eval(&db, &self_join), Err(Error::AmbiguousAttribute(_))));
        let by_pos = Query::rel("Address").cross(Query::rel("Address")).project(&["#3"]);
        assert_eq!(eval(&db, &by_pos).unwrap().get(&tuple![1]), nat(3));
    }

    #[test]
    fn zero_divisors_are_dropped() {
        let v = Semiring::vector(Semiring::Natural, 2);
        let s = Schema::new("R", &["a"]).unwrap();
        let r = KRelation::from_rows(
            s.clone(),
            v.clone(),
            [(tuple![1], Element::Vector(vec![nat(1), nat(0)]))],
        )
        .unwrap();
        let t = KRelation::from_rows(
            Schema::new("S", &["b"]).unwrap(),
            v,
            [(tuple![1], Element::Vector(vec![nat(0), nat(1)]))],
        )
        .unwrap();
        let db: Database = [("R".to_string(), r), ("S".to_string(), t)].into();
        assert!(eval(&db, &Query::rel("R").cross(Query::rel("S"))).unwrap().is_empty());
    }

    #[test]
    fn query_text_roundtrip() {
        let text = "(project (a b) (select (and (= color 'red') (not (< n 3.5))) (join (= R.x S.x) (rel R) (rel S))))";
        let q = Query::parse(text).unwrap();
        assert_eq!(q.to_string(), text);
        assert_eq!(Query::parse(&q.to_string()).unwrap(), q);
        assert_eq!(Query::parse("food").unwrap(), Query::rel("food"));
    }

    #[test]
    fn null_semantics_in_selection() {
        let r = KRelation::from_rows(
            Schema::new("R", &["a"]).unwrap(),
            Semiring::Boolean,
            [
                (Tuple(vec![Value::Null]), Element::Bool(true)),
                (tuple![1], Element::Bool(true)),
            ],
        )
        .unwrap();
        let db: Database = [("R".to_string(), r)].into();
        let lt = eval(&db, &Query::rel("R").select(Predicate::cmp("a", CmpOp::Lt, 5))).unwrap();
        assert_eq!(lt.len(), 1);
        let eq = eval(&db, &Query::rel("R").select(Predicate::eq("a", Value::Null))).unwrap();
        assert_eq!(eq.tuples().next(), Some(&Tuple(vec![Value::Null])));
    }

    #[test]
    fn min_flags_folds_flags() {
        let r = KRelation::from_rows(
            Schema::new("R", &["a", "C"]).unwrap(),
            Semiring::Natural,
            [(tuple![1, 1], nat(2)), (tuple![2, 0], nat(1))],
        )
        .unwrap();
        let db: Database = [("R".to_string(), r.clone()), ("S".to_string(), r)].into();
        let q = Query::MinFlags {
            flag: "C".into(),
            input: Box::new(Query::rel("R").cross(Query::rel("S"))),
        };
        let out = eval(&db, &q).unwrap();
        assert_eq!(out.schema.names(), vec!["a", "a", "C"]);
        assert_eq!(out.get(&tuple![1, 1, 1]), nat(4));
        assert_eq!(out.get(&tuple![1, 2, 0]), nat(2));
    }
}
