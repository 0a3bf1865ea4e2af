//! Bag encoding of UA-relations and the rewriting of queries over it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kdb::{AttrRef, Attribute, Database, KRelation, Operand, Predicate, Query, Schema, Tuple};
use crate::semirings::{Element, Semiring};
use crate::uadb::UaDb;
use crate::value::{CmpOp, Value};

/// Name of the certainty flag column.
pub const FLAG: &str = "C";

fn nat_pair(k: &Element) -> Result<(u64, u64)> {
    match k.as_pair() {
        Some((Element::Nat(d), Element::Nat(c))) => Ok((*d, *c)),
        _ => Err(Error::Carrier {
            semiring: "N^2".into(),
            element: k.to_string(),
        }),
    }
}

/// `(t,1) ↦ c` and `(t,0) ↦ d - c`.
pub fn enc(r: &KRelation) -> Result<KRelation> {
    if r.semiring != Semiring::pair(Semiring::Natural) {
        return Err(Error::SchemaMismatch(format!(
            "only N^2 relations can be encoded, not {}",
            r.semiring
        )));
    }
    if r.schema.attrs.iter().any(|a| a.name == FLAG) {
        return Err(Error::SchemaMismatch(format!(
            "attribute name `{FLAG}` is reserved for the certainty flag"
        )));
    }
    let mut schema = r.schema.clone();
    schema.attrs.push(Attribute {
        qualifier: schema.attrs.first().and_then(|a| a.qualifier.clone()),
        name: FLAG.to_string(),
    });
    let mut out = KRelation::new(schema, Semiring::Natural);
    for (t, k) in r.iter() {
        let (d, c) = nat_pair(k)?;
        assert!(c <= d, "UA pair [{d},{c}] violates c <= d");
        for (flag, n) in [(1, c), (0, d - c)] {
            let mut v = t.0.clone();
            v.push(Value::Int(flag));
            out.add(Tuple(v), Element::Nat(n))?;
        }
    }
    Ok(out)
}

/// `t ↦ [R'(t,0) + R'(t,1), R'(t,1)]`.
pub fn dec(r: &KRelation) -> Result<KRelation> {
    if r.semiring != Semiring::Natural {
        return Err(Error::SchemaMismatch(format!(
            "encoded relations are bags, not {}",
            r.semiring
        )));
    }
    match r.schema.attrs.last() {
        Some(a) if a.name == FLAG => {}
        _ => return Err(Error::SchemaMismatch(format!("last attribute must be `{FLAG}`"))),
    }
    let mut schema = r.schema.clone();
    schema.attrs.pop();
    let sr = Semiring::pair(Semiring::Natural);
    let mut out = KRelation::new(schema, sr);
    for (t, k) in r.iter() {
        let n = k.as_nat().expect("bag annotation");
        let (last, rest) = t.0.split_last().expect("flag column");
        let c = match last {
            Value::Int(1) => n,
            Value::Int(0) => 0,
            other => return Err(Error::Type(format!("certainty flag must be 0 or 1, found `{other}`"))),
        };
        out.add(Tuple(rest.to_vec()), Element::pair(Element::Nat(n), Element::Nat(c)))?;
    }
    Ok(out)
}

pub fn enc_database(db: &UaDb) -> Result<Database> {
    db.relations.iter().map(|(n, r)| Ok((n.clone(), enc(r)?))).collect()
}

/// Translates `q` into a query over encoded relations. Every rewritten
/// subquery returns the original columns followed by the flag column.
pub fn rewrite_ra(q: &Query) -> Result<Query> {
    Ok(match q {
        Query::Rel(n) => Query::Rel(n.clone()),
        Query::Select(p, q) => Query::Select(p.clone(), Box::new(rewrite_ra(q)?)),
        Query::Project(attrs, q) => {
            let mut attrs = attrs.clone();
            attrs.push(AttrRef::Name(FLAG.to_string()));
            Query::Project(attrs, Box::new(rewrite_ra(q)?))
        }
        // The join condition never mentions the flag, so it can be applied
        // after the flags are merged. This keeps positional references valid.
        Query::Join(p, a, b) => Query::Select(p.clone(), Box::new(merge(a, b)?)),
        Query::Cross(a, b) => merge(a, b)?,
        Query::Union(a, b) => Query::Union(Box::new(rewrite_ra(a)?), Box::new(rewrite_ra(b)?)),
        Query::MinFlags { .. } => {
            return Err(Error::Unsupported(
                "flag merging is not part of the input algebra".into(),
            ))
        }
    })
}

fn merge(a: &Query, b: &Query) -> Result<Query> {
    Ok(Query::MinFlags {
        flag: FLAG.to_string(),
        input: Box::new(Query::Cross(Box::new(rewrite_ra(a)?), Box::new(rewrite_ra(b)?))),
    })
}

struct SqlGen {
    next: usize,
}

impl SqlGen {
    fn alias(&mut self) -> String {
        self.next += 1;
        format!("Q{}", self.next)
    }

    fn stmt(&mut self, q: &Query) -> Result<String> {
        Ok(match q {
            Query::Rel(n) => format!("SELECT * FROM {n}"),
            Query::Select(p, q) => {
                let (from, names) = self.table(q)?;
                format!("SELECT * FROM {from} WHERE {}", predicate_sql(p, &names)?)
            }
            Query::Project(attrs, q) => {
                let (from, names) = self.table(q)?;
                let mut cols = attrs.iter().map(|a| attr_sql(a, &names)).collect::<Result<Vec<_>>>()?;
                cols.push(FLAG.to_string());
                format!("SELECT {} FROM {from}", cols.join(", "))
            }
            Query::Join(..) | Query::Cross(..) => {
                let (p, a, b) = match q {
                    Query::Join(p, a, b) => (Some(p), a, b),
                    Query::Cross(a, b) => (None, a, b),
                    _ => unreachable!(),
                };
                let (la, ra) = (self.alias(), self.alias());
                let (lf, mut names) = self.table_as(a, &la)?;
                let (rf, rnames) = self.table_as(b, &ra)?;
                names.extend(rnames);
                let mut s = format!("SELECT {la}.*, {ra}.*, {la}.{FLAG}*{ra}.{FLAG} AS {FLAG} FROM {lf}, {rf}");
                if let Some(p) = p {
                    s.push_str(&format!(" WHERE {}", predicate_sql(p, &names)?));
                }
                s
            }
            Query::Union(a, b) => format!("{} UNION ALL {}", self.operand(a)?, self.operand(b)?),
            Query::MinFlags { .. } => {
                return Err(Error::Unsupported(
                    "flag merging is not part of the input algebra".into(),
                ))
            }
        })
    }

    fn operand(&mut self, q: &Query) -> Result<String> {
        Ok(match q {
            Query::Rel(n) => n.clone(),
            Query::Union(..) => self.stmt(q)?,
            _ => format!("({})", self.stmt(q)?),
        })
    }

    fn table(&mut self, q: &Query) -> Result<(String, BTreeMap<String, String>)> {
        let alias = self.alias();
        self.table_as(q, &alias)
    }

    /// A `FROM` entry named `alias`, plus the mapping from relation names
    /// inside it to that alias.
    fn table_as(&mut self, q: &Query, alias: &str) -> Result<(String, BTreeMap<String, String>)> {
        let names = q
            .relations()
            .into_iter()
            .map(|r| (r.to_string(), alias.to_string()))
            .collect();
        let item = match q {
            Query::Rel(n) => format!("{n} {alias}"),
            _ => format!("({}) {alias}", self.stmt(q)?),
        };
        Ok((item, names))
    }
}

fn attr_sql(a: &AttrRef, names: &BTreeMap<String, String>) -> Result<String> {
    match a {
        AttrRef::Name(n) => Ok(n.clone()),
        AttrRef::Qualified(q, n) => Ok(format!("{}.{n}", names.get(q).unwrap_or(q))),
        AttrRef::Position(_) => Err(Error::Unsupported(format!(
            "positional reference `{a}` has no SQL rendering"
        ))),
    }
}

fn predicate_sql(p: &Predicate, names: &BTreeMap<String, String>) -> Result<String> {
    let operand = |o: &Operand| -> Result<String> {
        match o {
            Operand::Attr(a) => attr_sql(a, names),
            Operand::Const(Value::Null) => Ok("NULL".into()),
            Operand::Const(v) => Ok(v.literal()),
        }
    };
    let group = |ps: &[Predicate], sep: &str| -> Result<String> {
        Ok(ps
            .iter()
            .map(|p| predicate_sql(p, names).map(|s| format!("({s})")))
            .collect::<Result<Vec<_>>>()?
            .join(sep))
    };
    Ok(match p {
        Predicate::True => "TRUE".into(),
        Predicate::Cmp(a, op, b) => {
            let sym = if *op == CmpOp::Ne { "<>" } else { op.symbol() };
            format!("{} {sym} {}", operand(a)?, operand(b)?)
        }
        Predicate::And(ps) => group(ps, " AND ")?,
        Predicate::Or(ps) => group(ps, " OR ")?,
        Predicate::Not(p) => format!("NOT ({})", predicate_sql(p, names)?),
    })
}

/// SQL over encoded relations computing the rewritten query. Subqueries
/// are aliased `Q1`, `Q2`, ... in pre-order.
pub fn emit_sql(q: &Query) -> Result<String> {
    SqlGen { next: 0 }.stmt(q)
}

/// Column names of a relation stored in one of the on-disk encodings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelingSql {
    Ti {
        relation: String,
        attrs: Vec<String>,
        prob: String,
    },
    X {
        relation: String,
        attrs: Vec<String>,
        xid: String,
        altid: String,
        prob: String,
    },
    CTable {
        relation: String,
        attrs: Vec<String>,
        vars: Vec<String>,
        condition: String,
    },
}

/// SQL computing the best-guess world and certainty flag of an encoded
/// relation.
pub fn emit_labeling_sql(spec: &LabelingSql) -> String {
    match spec {
        LabelingSql::Ti { relation, attrs, prob } => format!(
            "SELECT {},\n       CASE WHEN {prob} = 1 THEN 1 ELSE 0 END AS {FLAG}\nFROM {relation}\nWHERE {prob} >= 0.5",
            attrs.join(", ")
        ),
        LabelingSql::X {
            relation,
            attrs,
            xid,
            altid,
            prob,
        } => format!(
            "SELECT {},\n       CASE WHEN {prob} = 1 THEN 1 ELSE 0 END AS {FLAG}\nFROM {relation}\n\
             WHERE {altid} = FIRST_VALUE({altid}) OVER w1\n      \
             AND max({prob}) OVER w2 >= 1 - (sum({prob}) OVER w2)\n\
             WINDOW w1 AS (PARTITION BY {xid} ORDER BY {prob} DESC),\n       \
             w2 AS (PARTITION BY {xid})",
            attrs.join(", ")
        ),
        LabelingSql::CTable {
            relation,
            attrs,
            vars,
            condition,
        } => {
            let guard: Vec<String> = vars.iter().map(|v| format!("{v} IS NULL")).collect();
            let mut s = format!(
                "SELECT {},\n       CASE WHEN isTautology({condition}) THEN 1 ELSE 0 END AS {FLAG}\nFROM {relation}",
                attrs.join(", ")
            );
            if !guard.is_empty() {
                s.push_str(&format!("\nWHERE {}", guard.join(" AND ")));
            }
            s
        }
    }
}

/// Schema helper for encoded relations: the base schema plus the flag.
pub fn encoded_schema(s: &Schema) -> Schema {
    let mut s = s.clone();
    s.attrs.push(Attribute::new(FLAG));
    s
}
