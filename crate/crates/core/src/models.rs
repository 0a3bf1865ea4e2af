//! Tuple-independent databases, x-DBs and C-tables: labeling schemes and
//! best-guess world extraction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kdb::{KRelation, Schema, Tuple};
use crate::semirings::Semiring;
use crate::value::{CmpOp, Value};

const EPS: f64 = 1e-9;

/// A label relation: an under-approximation of certain annotations.
pub type Labeling = KRelation;

fn check_probability(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p <= 1.0 + EPS {
        Ok(())
    } else {
        Err(Error::Model(format!("probability {p} outside (0, 1]")))
    }
}

fn check_arity(schema: &Schema, t: &Tuple) -> Result<()> {
    if t.arity() != schema.arity() {
        return Err(Error::Arity {
            expected: schema.arity(),
            got: t.arity(),
        });
    }
    Ok(())
}

fn check_base(sr: &Semiring) -> Result<()> {
    match sr {
        Semiring::Boolean | Semiring::Natural => Ok(()),
        other => Err(Error::Unsupported(format!(
            "models are annotated in B or N, not {other}"
        ))),
    }
}

/// Options for best-guess world extraction when probabilities are absent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BgwOptions {
    /// `None` picks the first alternative or candidate; `Some` picks at random.
    pub seed: Option<u64>,
    /// Include optional tuples and x-tuples in the guess.
    pub include_optional: bool,
}

impl BgwOptions {
    pub fn seeded(seed: u64) -> BgwOptions {
        BgwOptions {
            seed: Some(seed),
            ..BgwOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TiRow {
    pub tuple: Tuple,
    pub optional: bool,
    pub probability: Option<f64>,
}

impl TiRow {
    pub fn certain(tuple: Tuple) -> TiRow {
        TiRow {
            tuple,
            optional: false,
            probability: None,
        }
    }

    pub fn optional(tuple: Tuple) -> TiRow {
        TiRow {
            tuple,
            optional: true,
            probability: None,
        }
    }

    pub fn with_probability(tuple: Tuple, p: f64) -> TiRow {
        TiRow {
            tuple,
            optional: p < 1.0 - EPS,
            probability: Some(p),
        }
    }
}

/// Tuple-independent database.
#[derive(Clone, Debug, PartialEq)]
pub struct TiDb {
    pub schema: Schema,
    pub rows: Vec<TiRow>,
}

impl TiDb {
    pub fn new(schema: Schema, rows: Vec<TiRow>) -> Result<TiDb> {
        let mut seen = BTreeSet::new();
        let with_p = rows.iter().filter(|r| r.probability.is_some()).count();
        if with_p != 0 && with_p != rows.len() {
            return Err(Error::Model("either all or no TI rows carry probabilities".into()));
        }
        for r in &rows {
            check_arity(&schema, &r.tuple)?;
            if !seen.insert(&r.tuple) {
                return Err(Error::Model(format!("duplicate tuple {}", r.tuple)));
            }
            if let Some(p) = r.probability {
                check_probability(p)?;
                if r.optional != (p < 1.0 - EPS) {
                    return Err(Error::Model(format!(
                        "tuple {} has probability {p} but optional={}",
                        r.tuple, r.optional
                    )));
                }
            }
        }
        Ok(TiDb { schema, rows })
    }

    /// Every tuple present with certainty.
    pub fn deterministic(schema: Schema, tuples: impl IntoIterator<Item = Tuple>) -> Result<TiDb> {
        TiDb::new(schema, tuples.into_iter().map(TiRow::certain).collect())
    }

    pub fn has_probabilities(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.probability.is_some())
    }
}

pub fn label_ti(db: &TiDb, sr: &Semiring) -> Result<Labeling> {
    check_base(sr)?;
    let mut out = KRelation::new(db.schema.clone(), sr.clone());
    for r in db.rows.iter().filter(|r| !r.optional) {
        out.add(r.tuple.clone(), sr.one())?;
    }
    Ok(out)
}

pub fn bgw_ti(db: &TiDb, sr: &Semiring, opts: &BgwOptions) -> Result<KRelation> {
    check_base(sr)?;
    let mut out = KRelation::new(db.schema.clone(), sr.clone());
    for r in &db.rows {
        let keep = match r.probability {
            Some(p) => p >= 0.5,
            None => !r.optional || opts.include_optional,
        };
        if keep {
            out.add(r.tuple.clone(), sr.one())?;
        }
    }
    Ok(out)
}

/// A block of mutually exclusive alternatives.
#[derive(Clone, Debug, PartialEq)]
pub struct XTuple {
    pub alternatives: Vec<Tuple>,
    pub optional: bool,
    pub probabilities: Option<Vec<f64>>,
}

impl XTuple {
    pub fn certain(alternatives: Vec<Tuple>) -> XTuple {
        XTuple {
            alternatives,
            optional: false,
            probabilities: None,
        }
    }

    pub fn optional(alternatives: Vec<Tuple>) -> XTuple {
        XTuple {
            alternatives,
            optional: true,
            probabilities: None,
        }
    }

    pub fn with_probabilities(alternatives: Vec<Tuple>, ps: Vec<f64>) -> XTuple {
        let total: f64 = ps.iter().sum();
        XTuple {
            alternatives,
            optional: total < 1.0 - EPS,
            probabilities: Some(ps),
        }
    }

    /// `P(τ)`, the probability that some alternative is present.
    pub fn total_probability(&self) -> Option<f64> {
        self.probabilities.as_ref().map(|ps| ps.iter().sum())
    }

    fn validate(&self, schema: &Schema) -> Result<()> {
        if self.alternatives.is_empty() {
            return Err(Error::Model("x-tuple without alternatives".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &self.alternatives {
            check_arity(schema, t)?;
            if !seen.insert(t) {
                return Err(Error::Model(format!("repeated alternative {t}")));
            }
        }
        if let Some(ps) = &self.probabilities {
            if ps.len() != self.alternatives.len() {
                return Err(Error::Model("one probability per alternative required".into()));
            }
            for &p in ps {
                check_probability(p)?;
            }
            let total: f64 = ps.iter().sum();
            if total > 1.0 + EPS {
                return Err(Error::Model(format!("alternative probabilities sum to {total}")));
            }
            if self.optional != (total < 1.0 - EPS) {
                return Err(Error::Model(format!(
                    "x-tuple with total probability {total} has optional={}",
                    self.optional
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct XDb {
    pub schema: Schema,
    pub xtuples: Vec<XTuple>,
}

impl XDb {
    pub fn new(schema: Schema, xtuples: Vec<XTuple>) -> Result<XDb> {
        for x in &xtuples {
            x.validate(&schema)?;
        }
        Ok(XDb { schema, xtuples })
    }

    pub fn has_probabilities(&self) -> bool {
        !self.xtuples.is_empty() && self.xtuples.iter().all(|x| x.probabilities.is_some())
    }
}

pub fn label_xdb(db: &XDb, sr: &Semiring) -> Result<Labeling> {
    check_base(sr)?;
    let mut out = KRelation::new(db.schema.clone(), sr.clone());
    for x in &db.xtuples {
        if let ([t], false) = (x.alternatives.as_slice(), x.optional) {
            out.add(t.clone(), sr.one())?;
        }
    }
    Ok(out)
}

pub fn bgw_xdb(db: &XDb, sr: &Semiring, opts: &BgwOptions) -> Result<KRelation> {
    check_base(sr)?;
    let mut rng = opts.seed.map(ChaCha8Rng::seed_from_u64);
    let mut out = KRelation::new(db.schema.clone(), sr.clone());
    for x in &db.xtuples {
        let pick = match &x.probabilities {
            Some(ps) => {
                let (best, pmax) = ps
                    .iter()
                    .enumerate()
                    .fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
                let absent = 1.0 - ps.iter().sum::<f64>();
                (pmax >= absent).then_some(best)
            }
            None if x.optional && !opts.include_optional => None,
            None => Some(match rng.as_mut() {
                Some(rng) => rng.random_range(0..x.alternatives.len()),
                None => 0,
            }),
        };
        if let Some(i) = pick {
            out.add(x.alternatives[i].clone(), sr.one())?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(Value),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(v: impl Into<Value>) -> Term {
        Term::Const(v.into())
    }

    fn resolve<'a>(&'a self, val: &'a Valuation) -> Result<&'a Value> {
        match self {
            Term::Const(v) => Ok(v),
            Term::Var(x) => val
                .get(x)
                .ok_or_else(|| Error::Model(format!("variable `{x}` has no value"))),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => f.write_str(x),
            Term::Const(v) => f.write_str(&v.literal()),
        }
    }
}

pub type Valuation = BTreeMap<String, Value>;

/// Boolean conditions over comparisons of variables and constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    True,
    False,
    Atom(Term, CmpOp, Term),
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Not(Box<Condition>),
}

impl Condition {
    pub fn atom(a: Term, op: CmpOp, b: Term) -> Condition {
        Condition::Atom(a, op, b)
    }

    pub fn eval(&self, val: &Valuation) -> Result<bool> {
        Ok(match self {
            Condition::True => true,
            Condition::False => false,
            Condition::Atom(a, op, b) => op.apply(a.resolve(val)?, b.resolve(val)?)?,
            Condition::And(cs) => {
                for c in cs {
                    if !c.eval(val)? {
                        return Ok(false);
                    }
                }
                true
            }
            Condition::Or(cs) => {
                for c in cs {
                    if c.eval(val)? {
                        return Ok(true);
                    }
                }
                false
            }
            Condition::Not(c) => !c.eval(val)?,
        })
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Condition::True | Condition::False => {}
            Condition::Atom(a, _, b) => {
                for t in [a, b] {
                    if let Term::Var(x) = t {
                        out.insert(x.clone());
                    }
                }
            }
            Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| c.collect_vars(out)),
            Condition::Not(c) => c.collect_vars(out),
        }
    }

    /// Parses `X=1 AND (Y<>'red' OR NOT X>2)`.
    pub fn parse(text: &str) -> Result<Condition> {
        let tokens = lex_condition(text)?;
        let mut p = CondParser { tokens, pos: 0 };
        if p.tokens.is_empty() {
            return Ok(Condition::True);
        }
        let c = p.or()?;
        if p.pos != p.tokens.len() {
            return Err(Error::parse(0, format!("trailing input in condition `{text}`")));
        }
        Ok(c)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::True => f.write_str("TRUE"),
            Condition::False => f.write_str("FALSE"),
            Condition::Atom(a, op, b) => {
                let sym = if *op == CmpOp::Ne { "<>" } else { op.symbol() };
                write!(f, "{a}{sym}{b}")
            }
            Condition::And(cs) | Condition::Or(cs) => {
                let sep = if matches!(self, Condition::And(_)) {
                    " AND "
                } else {
                    " OR "
                };
                let parts: Vec<String> = cs
                    .iter()
                    .map(|c| match c {
                        Condition::And(_) | Condition::Or(_) => format!("({c})"),
                        _ => c.to_string(),
                    })
                    .collect();
                f.write_str(&parts.join(sep))
            }
            Condition::Not(c) => match **c {
                Condition::And(_) | Condition::Or(_) => write!(f, "NOT ({c})"),
                _ => write!(f, "NOT {c}"),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum CondToken {
    LParen,
    RParen,
    And,
    Or,
    Not,
    True,
    False,
    Op(CmpOp),
    Term(Term),
}

fn lex_condition(text: &str) -> Result<Vec<CondToken>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |msg: String| Error::parse(0, msg);
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '(' => {
                out.push(CondToken::LParen);
                i += 1;
            }
            ')' => {
                out.push(CondToken::RParen);
                i += 1;
            }
            '=' | '<' | '>' | '!' => {
                let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                let (op, len) = match CmpOp::from_symbol(&two) {
                    Some(op) if two.len() == 2 => (op, 2),
                    _ => match CmpOp::from_symbol(&c.to_string()) {
                        Some(op) => (op, 1),
                        None => return Err(err(format!("bad operator near `{two}`"))),
                    },
                };
                out.push(CondToken::Op(op));
                i += len;
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err("unterminated string in condition".into())),
                        Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                            s.push('\'');
                            i += 2;
                        }
                        Some('\'') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(CondToken::Term(Term::Const(Value::Str(s))));
            }
            _ => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '.' | '-')) {
                    i += 1;
                }
                if start == i {
                    return Err(err(format!("unexpected character `{c}` in condition")));
                }
                let word: String = chars[start..i].iter().collect();
                out.push(match word.to_ascii_uppercase().as_str() {
                    "AND" => CondToken::And,
                    "OR" => CondToken::Or,
                    "NOT" => CondToken::Not,
                    "TRUE" => CondToken::True,
                    "FALSE" => CondToken::False,
                    "NULL" => CondToken::Term(Term::Const(Value::Null)),
                    _ => match Value::parse_cell(&word) {
                        v @ (Value::Int(_) | Value::Dec(_)) => CondToken::Term(Term::Const(v)),
                        _ => CondToken::Term(Term::Var(word)),
                    },
                });
            }
        }
    }
    Ok(out)
}

struct CondParser {
    tokens: Vec<CondToken>,
    pos: usize,
}

impl CondParser {
    fn peek(&self) -> Option<&CondToken> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<CondToken> {
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::parse(0, "condition ends unexpectedly"))?;
        self.pos += 1;
        Ok(t)
    }

    fn or(&mut self) -> Result<Condition> {
        let mut parts = vec![self.and()?];
        while self.peek() == Some(&CondToken::Or) {
            self.pos += 1;
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Condition::Or(parts)
        })
    }

    fn and(&mut self) -> Result<Condition> {
        let mut parts = vec![self.not()?];
        while self.peek() == Some(&CondToken::And) {
            self.pos += 1;
            parts.push(self.not()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Condition::And(parts)
        })
    }

    fn not(&mut self) -> Result<Condition> {
        if self.peek() == Some(&CondToken::Not) {
            self.pos += 1;
            return Ok(Condition::Not(Box::new(self.not()?)));
        }
        match self.next()? {
            CondToken::LParen => {
                let c = self.or()?;
                match self.next()? {
                    CondToken::RParen => Ok(c),
                    t => Err(Error::parse(0, format!("expected `)`, found {t:?}"))),
                }
            }
            CondToken::True => Ok(Condition::True),
            CondToken::False => Ok(Condition::False),
            CondToken::Term(a) => match (self.next()?, self.next()?) {
                (CondToken::Op(op), CondToken::Term(b)) => Ok(Condition::Atom(a, op, b)),
                _ => Err(Error::parse(0, "expected `term op term`")),
            },
            t => Err(Error::parse(0, format!("unexpected {t:?} in condition"))),
        }
    }
}

/// A literal reduced to `lhs op rhs` with negations pushed into the
/// operator and operands in canonical order.
fn normalize_literal(c: &Condition) -> Option<Literal> {
    match c {
        Condition::True => Some(Literal::Const(true)),
        Condition::False => Some(Literal::Const(false)),
        Condition::Atom(a, op, b) => Some(Literal::atom(a, *op, b)),
        Condition::Not(inner) => match normalize_literal(inner)? {
            Literal::Const(b) => Some(Literal::Const(!b)),
            Literal::Atom(a, op, b) => Some(Literal::Atom(a, op.negate(), b)),
        },
        Condition::And(_) | Condition::Or(_) => None,
    }
}

#[derive(Debug, PartialEq)]
enum Literal {
    Const(bool),
    Atom(Term, CmpOp, Term),
}

impl Literal {
    fn atom(a: &Term, op: CmpOp, b: &Term) -> Literal {
        if a > b {
            Literal::Atom(b.clone(), op.mirror(), a.clone())
        } else {
            Literal::Atom(a.clone(), op, b.clone())
        }
    }

    fn trivially_true(&self) -> bool {
        match self {
            Literal::Const(b) => *b,
            Literal::Atom(a, op, b) if a == b => matches!(op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge),
            Literal::Atom(Term::Const(a), op, Term::Const(b)) => op.apply(a, b).unwrap_or(false),
            Literal::Atom(..) => false,
        }
    }
}

fn flatten<'a>(c: &'a Condition, conj: bool, out: &mut Vec<&'a Condition>) {
    match (c, conj) {
        (Condition::And(cs), true) | (Condition::Or(cs), false) => cs.iter().for_each(|x| flatten(x, conj, out)),
        _ => out.push(c),
    }
}

/// True iff `φ` is in CNF and every clause holds syntactically: it has a
/// complementary pair of literals or a literal that is true on its own.
pub fn is_cnf_tautology(phi: &Condition) -> bool {
    let mut clauses = Vec::new();
    flatten(phi, true, &mut clauses);
    clauses.into_iter().all(|clause| {
        let mut lits = Vec::new();
        flatten(clause, false, &mut lits);
        let Some(lits) = lits.into_iter().map(normalize_literal).collect::<Option<Vec<_>>>() else {
            return false;
        };
        lits.iter().any(Literal::trivially_true)
            || lits.iter().enumerate().any(|(i, l)| {
                lits[i + 1..].iter().any(|m| match (l, m) {
                    (Literal::Atom(a, o, b), Literal::Atom(c, p, d)) => a == c && b == d && *p == o.negate(),
                    _ => false,
                })
            })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CRow {
    pub values: Vec<Term>,
    pub condition: Condition,
}

impl CRow {
    pub fn new(values: Vec<Term>, condition: Condition) -> CRow {
        CRow { values, condition }
    }

    /// The row's tuple when every value is a constant.
    pub fn ground(&self) -> Option<Tuple> {
        self.values
            .iter()
            .map(|t| match t {
                Term::Const(v) => Some(v.clone()),
                Term::Var(_) => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Tuple)
    }

    fn instantiate(&self, val: &Valuation) -> Result<Tuple> {
        self.values
            .iter()
            .map(|t| t.resolve(val).cloned())
            .collect::<Result<Vec<_>>>()
            .map(Tuple)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub candidates: Vec<Value>,
    pub probabilities: Option<Vec<f64>>,
}

impl Variable {
    pub fn over(candidates: Vec<Value>) -> Variable {
        Variable {
            candidates,
            probabilities: None,
        }
    }

    pub fn with_probabilities(candidates: Vec<Value>, ps: Vec<f64>) -> Variable {
        Variable {
            candidates,
            probabilities: Some(ps),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CTable {
    pub schema: Schema,
    pub rows: Vec<CRow>,
    pub global: Condition,
    pub variables: BTreeMap<String, Variable>,
}

impl CTable {
    pub fn new(
        schema: Schema,
        rows: Vec<CRow>,
        global: Condition,
        variables: BTreeMap<String, Variable>,
    ) -> Result<CTable> {
        for (x, v) in &variables {
            if v.candidates.is_empty() {
                return Err(Error::Model(format!("variable `{x}` has an empty candidate domain")));
            }
            if let Some(ps) = &v.probabilities {
                if ps.len() != v.candidates.len() {
                    return Err(Error::Model(format!(
                        "variable `{x}` needs one probability per candidate"
                    )));
                }
                for &p in ps {
                    check_probability(p)?;
                }
            }
        }
        let mut used = global.variables();
        for r in &rows {
            if r.values.len() != schema.arity() {
                return Err(Error::Arity {
                    expected: schema.arity(),
                    got: r.values.len(),
                });
            }
            used.extend(r.condition.variables());
            used.extend(r.values.iter().filter_map(|t| match t {
                Term::Var(x) => Some(x.clone()),
                Term::Const(_) => None,
            }));
        }
        if let Some(x) = used.iter().find(|x| !variables.contains_key(*x)) {
            return Err(Error::Model(format!("variable `{x}` has no candidate domain")));
        }
        Ok(CTable {
            schema,
            rows,
            global,
            variables,
        })
    }

    /// Every valuation over the candidate domains that satisfies the global
    /// condition, with its probability when all variables carry one.
    pub fn valuations(&self, budget: u128) -> Result<Vec<(Valuation, Option<f64>)>> {
        let count = self
            .variables
            .values()
            .map(|v| v.candidates.len() as u128)
            .try_fold(1u128, |acc, n| acc.checked_mul(n))
            .unwrap_or(u128::MAX);
        if count > budget {
            return Err(Error::Budget { needed: count, budget });
        }
        let names: Vec<&String> = self.variables.keys().collect();
        let vars: Vec<&Variable> = self.variables.values().collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; vars.len()];
        loop {
            let val: Valuation = names
                .iter()
                .zip(&vars)
                .zip(&idx)
                .map(|((n, v), &i)| ((*n).clone(), v.candidates[i].clone()))
                .collect();
            if self.global.eval(&val)? {
                let p = vars
                    .iter()
                    .zip(&idx)
                    .map(|(v, &i)| v.probabilities.as_ref().map(|ps| ps[i]))
                    .product::<Option<f64>>();
                out.push((val, p));
            }
            if !odometer(&mut idx, |k| vars[k].candidates.len()) {
                break;
            }
        }
        Ok(out)
    }

    /// The world selected by a valuation.
    pub fn world(&self, val: &Valuation, sr: &Semiring) -> Result<KRelation> {
        check_base(sr)?;
        let mut out = KRelation::new(self.schema.clone(), sr.clone());
        for r in &self.rows {
            if r.condition.eval(val)? {
                out.add(r.instantiate(val)?, sr.one())?;
            }
        }
        Ok(out)
    }
}

/// Advances a mixed-radix counter, last digit fastest. False on wrap-around.
pub(crate) fn odometer(idx: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < radix(k) {
            return true;
        }
        idx[k] = 0;
    }
    false
}

pub fn label_ctable(db: &CTable, sr: &Semiring) -> Result<Labeling> {
    check_base(sr)?;
    let mut out = KRelation::new(db.schema.clone(), sr.clone());
    for r in &db.rows {
        if let Some(t) = r.ground() {
            if is_cnf_tautology(&r.condition) {
                out.add(t, sr.one())?;
            }
        }
    }
    Ok(out)
}

pub fn bgw_ctable(db: &CTable, sr: &Semiring, opts: &BgwOptions, budget: u128) -> Result<KRelation> {
    let mut rng = opts.seed.map(ChaCha8Rng::seed_from_u64);
    let mut guess = Valuation::new();
    for (x, v) in &db.variables {
        let i = match (&v.probabilities, rng.as_mut()) {
            (Some(ps), _) => {
                ps.iter()
                    .enumerate()
                    .fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc })
                    .0
            }
            (None, Some(rng)) => rng.random_range(0..v.candidates.len()),
            (None, None) => 0,
        };
        guess.insert(x.clone(), v.candidates[i].clone());
    }
    if db.global.eval(&guess)? {
        return db.world(&guess, sr);
    }
    let mut vals = db.valuations(budget)?;
    if vals.is_empty() {
        return Err(Error::NoValuation);
    }
    if let Some(rng) = rng.as_mut() {
        if vals.iter().all(|(_, p)| p.is_none()) {
            let (v, _) = vals.choose(rng).expect("nonempty");
            return db.world(v, sr);
        }
    }
    // Highest probability first; enumeration order breaks ties.
    vals.sort_by(|a, b| {
        b.1.unwrap_or(0.0)
            .partial_cmp(&a.1.unwrap_or(0.0))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    db.world(&vals[0].0, sr)
}

/// An uncertain relation in one of the three supported models.
#[derive(Clone, Debug, PartialEq)]
pub enum UncertainRelation {
    Ti(TiDb),
    X(XDb),
    C(CTable),
}

pub type UncertainDb = BTreeMap<String, UncertainRelation>;

impl UncertainRelation {
    pub fn schema(&self) -> &Schema {
        match self {
            UncertainRelation::Ti(m) => &m.schema,
            UncertainRelation::X(m) => &m.schema,
            UncertainRelation::C(m) => &m.schema,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            UncertainRelation::Ti(_) => "ti",
            UncertainRelation::X(_) => "x",
            UncertainRelation::C(_) => "ctable",
        }
    }

    pub fn label(&self, sr: &Semiring) -> Result<Labeling> {
        match self {
            UncertainRelation::Ti(m) => label_ti(m, sr),
            UncertainRelation::X(m) => label_xdb(m, sr),
            UncertainRelation::C(m) => label_ctable(m, sr),
        }
    }

    pub fn bgw(&self, sr: &Semiring, opts: &BgwOptions, budget: u128) -> Result<KRelation> {
        match self {
            UncertainRelation::Ti(m) => bgw_ti(m, sr, opts),
            UncertainRelation::X(m) => bgw_xdb(m, sr, opts),
            UncertainRelation::C(m) => bgw_ctable(m, sr, opts, budget),
        }
    }
}
