//! Incomplete databases as relations over per-world annotation vectors, and
//! the brute-force certain-answer oracle.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kdb::{eval, Database, KRelation, Query, Schema, Tuple};
use crate::models::{odometer, CTable, TiDb, UncertainDb, UncertainRelation, XDb};
use crate::semirings::{glb_fold, lub_fold, Element, Semiring};

pub const DEFAULT_WORLD_BUDGET: u128 = 1_000_000;
pub const BUDGET_ENV: &str = "UADB_WORLD_BUDGET";

/// The enumeration budget, overridable through `UADB_WORLD_BUDGET`.
pub fn world_budget() -> u128 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .filter(|&b| b >= 1)
        .unwrap_or(DEFAULT_WORLD_BUDGET)
}

/// An incomplete database: every relation is annotated in `base^W`.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldDb {
    pub base: Semiring,
    pub world_count: usize,
    pub relations: Database,
    pub probabilities: Option<Vec<f64>>,
}

impl WorldDb {
    pub fn new(base: Semiring, world_count: usize) -> Result<WorldDb> {
        if world_count == 0 {
            return Err(Error::Model("an incomplete database needs at least one world".into()));
        }
        Ok(WorldDb {
            base,
            world_count,
            relations: Database::new(),
            probabilities: None,
        })
    }

    pub fn semiring(&self) -> Semiring {
        Semiring::vector(self.base.clone(), self.world_count)
    }

    /// Collects per-world databases into vectors. World `i` is `worlds[i-1]`.
    pub fn from_worlds(base: Semiring, worlds: &[Database]) -> Result<WorldDb> {
        let mut db = WorldDb::new(base.clone(), worlds.len())?;
        let vsr = db.semiring();
        let mut vectors: BTreeMap<String, (Schema, BTreeMap<Tuple, Vec<Element>>)> = BTreeMap::new();
        for (i, w) in worlds.iter().enumerate() {
            for (name, r) in w {
                if r.semiring != base {
                    return Err(Error::SchemaMismatch(format!(
                        "world relation `{name}` annotated in {} instead of {base}",
                        r.semiring
                    )));
                }
                let entry = vectors
                    .entry(name.clone())
                    .or_insert_with(|| (r.schema.clone(), BTreeMap::new()));
                for (t, k) in r.iter() {
                    entry
                        .1
                        .entry(t.clone())
                        .or_insert_with(|| vec![base.zero(); worlds.len()])[i] = k.clone();
                }
            }
        }
        for (name, (schema, rows)) in vectors {
            let rel = KRelation::from_rows(
                schema,
                vsr.clone(),
                rows.into_iter().map(|(t, v)| (t, Element::Vector(v))),
            )?;
            db.relations.insert(name, rel);
        }
        Ok(db)
    }

    pub fn with_probabilities(mut self, ps: Vec<f64>) -> Result<WorldDb> {
        if ps.len() != self.world_count {
            return Err(Error::Model("one probability per world required".into()));
        }
        let total: f64 = ps.iter().sum();
        if ps.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!("world probabilities sum to {total}")));
        }
        self.probabilities = Some(ps);
        Ok(self)
    }

    pub fn insert(&mut self, name: impl Into<String>, r: KRelation) -> Result<()> {
        if r.semiring != self.semiring() {
            return Err(Error::SchemaMismatch(format!(
                "relation annotated in {} instead of {}",
                r.semiring,
                self.semiring()
            )));
        }
        self.relations.insert(name.into(), r);
        Ok(())
    }

    pub fn relation(&self, name: &str) -> Result<&KRelation> {
        self.relations
            .get(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }

    pub fn total_tuples(&self) -> usize {
        self.relations.values().map(KRelation::len).sum()
    }

    /// Possible world `i`, 1-based.
    pub fn world(&self, i: usize) -> Result<Database> {
        if i == 0 || i > self.world_count {
            return Err(Error::WorldOutOfRange {
                id: i,
                count: self.world_count,
            });
        }
        self.relations
            .iter()
            .map(|(n, r)| Ok((n.clone(), world_of(r, &self.base, i)?)))
            .collect()
    }

    pub fn certain_annotation(&self, rel: &str, t: &Tuple) -> Result<Element> {
        vector_glb(&self.base, &self.relation(rel)?.get(t))
    }

    pub fn possible_annotation(&self, rel: &str, t: &Tuple) -> Result<Element> {
        vector_lub(&self.base, &self.relation(rel)?.get(t))
    }

    /// Evaluates `q` in the vector semiring. The result holds one relation
    /// named [`RESULT`].
    pub fn eval_worlds(&self, q: &Query) -> Result<WorldDb> {
        let r = eval(&self.relations, q)?;
        let mut out = WorldDb {
            relations: Database::new(),
            ..self.clone()
        };
        out.relations.insert(RESULT.to_string(), r);
        Ok(out)
    }
}

pub const RESULT: &str = "result";

/// Projects a vector-annotated relation onto world `i`.
pub fn world_of(r: &KRelation, base: &Semiring, i: usize) -> Result<KRelation> {
    r.map_annotations(
        |k| match k {
            Element::Vector(v) => v
                .get(i - 1)
                .cloned()
                .ok_or(Error::WorldOutOfRange { id: i, count: v.len() }),
            other => Err(Error::Carrier {
                semiring: "vector".into(),
                element: other.to_string(),
            }),
        },
        base,
    )
}

fn vector_glb(base: &Semiring, k: &Element) -> Result<Element> {
    match k {
        Element::Vector(v) => glb_fold(base, v),
        other => Err(Error::Carrier {
            semiring: "vector".into(),
            element: other.to_string(),
        }),
    }
}

fn vector_lub(base: &Semiring, k: &Element) -> Result<Element> {
    match k {
        Element::Vector(v) => lub_fold(base, v),
        other => Err(Error::Carrier {
            semiring: "vector".into(),
            element: other.to_string(),
        }),
    }
}

/// Certain annotations of every tuple of a vector-annotated relation.
pub fn certain(r: &KRelation, base: &Semiring) -> Result<KRelation> {
    r.map_annotations(|k| vector_glb(base, k), base)
}

/// Possible annotations of every tuple of a vector-annotated relation.
pub fn possible(r: &KRelation, base: &Semiring) -> Result<KRelation> {
    r.map_annotations(|k| vector_lub(base, k), base)
}

pub fn oracle_certain(db: &WorldDb, q: &Query) -> Result<KRelation> {
    oracle_certain_with_budget(db, q, world_budget())
}

/// Exact certain annotations of `q`'s answers: evaluates `q` in every world
/// separately and takes the greatest lower bound per tuple.
pub fn oracle_certain_with_budget(db: &WorldDb, q: &Query, budget: u128) -> Result<KRelation> {
    let needed = db.world_count as u128 * db.total_tuples().max(1) as u128;
    if needed > budget {
        return Err(Error::Budget { needed, budget });
    }
    let answers = (1..=db.world_count)
        .map(|i| eval(&db.world(i)?, q))
        .collect::<Result<Vec<_>>>()?;
    let schema = answers[0].schema.clone();
    let mut all: Vec<&Tuple> = answers.iter().flat_map(|a| a.tuples()).collect();
    all.sort();
    all.dedup();
    let mut out = KRelation::new(schema, db.base.clone());
    for t in all {
        let ks: Vec<Element> = answers.iter().map(|a| a.get(t)).collect();
        out.set(t.clone(), glb_fold(&db.base, &ks)?)?;
    }
    Ok(out)
}

/// One way to resolve a unit of uncertainty: the tuples it contributes and
/// its probability.
struct Choice {
    rows: Vec<(usize, Tuple)>,
    probability: Option<f64>,
}

fn ti_factors(rel: usize, m: &TiDb) -> (Vec<(usize, Tuple)>, Vec<Vec<Choice>>) {
    let mut fixed = Vec::new();
    let mut factors = Vec::new();
    for r in &m.rows {
        if r.optional {
            factors.push(vec![
                Choice {
                    rows: vec![],
                    probability: r.probability.map(|p| 1.0 - p),
                },
                Choice {
                    rows: vec![(rel, r.tuple.clone())],
                    probability: r.probability,
                },
            ]);
        } else {
            fixed.push((rel, r.tuple.clone()));
        }
    }
    (fixed, factors)
}

fn x_factors(rel: usize, m: &XDb) -> Vec<Vec<Choice>> {
    m.xtuples
        .iter()
        .map(|x| {
            let mut cs = Vec::new();
            if x.optional {
                cs.push(Choice {
                    rows: vec![],
                    probability: x.total_probability().map(|p| (1.0 - p).max(0.0)),
                });
            }
            for (i, t) in x.alternatives.iter().enumerate() {
                cs.push(Choice {
                    rows: vec![(rel, t.clone())],
                    probability: x.probabilities.as_ref().map(|ps| ps[i]),
                });
            }
            cs
        })
        .collect()
}

fn c_factor(rel: usize, m: &CTable, budget: u128) -> Result<Vec<Choice>> {
    let vals = m.valuations(budget)?;
    let total: Option<f64> = vals.iter().map(|(_, p)| *p).sum();
    vals.into_iter()
        .map(|(val, p)| {
            let w = m.world(&val, &Semiring::Natural)?;
            let mut rows = Vec::new();
            for (t, k) in w.iter() {
                for _ in 0..k.as_nat().unwrap_or(0) {
                    rows.push((rel, t.clone()));
                }
            }
            Ok(Choice {
                rows,
                probability: match (p, total) {
                    (Some(p), Some(t)) if t > 0.0 => Some(p / t),
                    _ => None,
                },
            })
        })
        .collect()
}

pub fn expand_model_to_worlds(name: &str, m: &UncertainRelation, base: &Semiring, budget: u128) -> Result<WorldDb> {
    expand_database(&[(name.to_string(), m.clone())].into(), base, budget)
}

/// Enumerates every possible world of a database of independent uncertain
/// relations. World probabilities are products over the independent choices.
pub fn expand_database(db: &UncertainDb, base: &Semiring, budget: u128) -> Result<WorldDb> {
    let names: Vec<&String> = db.keys().collect();
    let mut fixed = Vec::new();
    let mut factors: Vec<Vec<Choice>> = Vec::new();
    for (i, m) in db.values().enumerate() {
        match m {
            UncertainRelation::Ti(t) => {
                let (f, fs) = ti_factors(i, t);
                fixed.extend(f);
                factors.extend(fs);
            }
            UncertainRelation::X(x) => factors.extend(x_factors(i, x)),
            UncertainRelation::C(c) => factors.push(c_factor(i, c, budget)?),
        }
    }
    if factors.iter().any(Vec::is_empty) {
        return Err(Error::NoValuation);
    }
    let count = factors
        .iter()
        .map(|f| f.len() as u128)
        .try_fold(1u128, |acc, n| acc.checked_mul(n))
        .unwrap_or(u128::MAX);
    if count > budget {
        return Err(Error::Budget { needed: count, budget });
    }
    let one = base.from_count(1)?;
    let mut worlds = Vec::with_capacity(count as usize);
    let mut probs: Option<Vec<f64>> = Some(Vec::with_capacity(count as usize));
    let mut idx = vec![0usize; factors.len()];
    loop {
        let mut w: Database = names
            .iter()
            .zip(db.values())
            .map(|(n, m)| ((*n).clone(), KRelation::new(m.schema().clone(), base.clone())))
            .collect();
        let mut p = Some(1.0);
        let chosen = factors.iter().zip(&idx).map(|(f, &i)| &f[i]);
        for (rel, t) in fixed.iter().chain(chosen.clone().flat_map(|c| c.rows.iter())) {
            w.get_mut(names[*rel])
                .expect("known relation")
                .add(t.clone(), one.clone())?;
        }
        for c in chosen {
            p = match (p, c.probability) {
                (Some(a), Some(b)) => Some(a * b),
                _ => None,
            };
        }
        probs = match (probs, p) {
            (Some(mut ps), Some(p)) => {
                ps.push(p);
                Some(ps)
            }
            _ => None,
        };
        worlds.push(w);
        if !odometer(&mut idx, |k| factors[k].len()) {
            break;
        }
    }
    let mut out = WorldDb::from_worlds(base.clone(), &worlds)?;
    let has_probs = db.values().all(|m| match m {
        UncertainRelation::Ti(t) => t.rows.is_empty() || t.has_probabilities(),
        UncertainRelation::X(x) => x.xtuples.is_empty() || x.has_probabilities(),
        UncertainRelation::C(c) => c.variables.values().all(|v| v.probabilities.is_some()),
    });
    if let (Some(ps), true) = (probs, has_probs) {
        out = out.with_probabilities(ps)?;
    }
    Ok(out)
}
