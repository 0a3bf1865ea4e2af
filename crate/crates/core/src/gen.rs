//! Seeded random instances for property tests and experiments.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kdb::{AttrRef, Database, KRelation, Operand, Predicate, Query, Schema, Tuple};
use crate::models::{
    CRow, CTable, Condition, Term, TiDb, TiRow, UncertainDb, UncertainRelation, Variable, XDb, XTuple,
};
use crate::semirings::{Access, Element, Semiring};
use crate::value::{CmpOp, Value};
use crate::worlds::WorldDb;

/// Upper bound on tuples per generated relation.
pub const MAX_TUPLES: usize = 6;
/// Upper bound on possible worlds per generated relation.
pub const MAX_WORLDS: usize = 64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Attribute names `a0, a1, ...`.
pub fn attr_names(arity: usize) -> Vec<String> {
    (0..arity).map(|i| format!("a{i}")).collect()
}

fn schema(name: &str, arity: usize) -> Schema {
    Schema::new(name, &attr_names(arity)).expect("generated schema")
}

fn small_tuple(rng: &mut impl Rng, arity: usize, domain: i64) -> Tuple {
    Tuple((0..arity).map(|_| Value::Int(rng.random_range(0..domain))).collect())
}

pub fn random_ti(rng: &mut impl Rng, name: &str, arity: usize, probabilistic: bool) -> TiDb {
    let n = rng.random_range(0..=MAX_TUPLES);
    let mut tuples: Vec<Tuple> = (0..n).map(|_| small_tuple(rng, arity, 3)).collect();
    tuples.sort();
    tuples.dedup();
    tuples.shuffle(rng);
    let rows = tuples
        .into_iter()
        .map(|t| match (probabilistic, rng.random_range(0..3)) {
            (true, 0) => TiRow::with_probability(t, 1.0),
            (true, _) => TiRow::with_probability(t, [0.25, 0.5, 0.75][rng.random_range(0..3)]),
            (false, 0) => TiRow::optional(t),
            (false, _) => TiRow::certain(t),
        })
        .collect();
    TiDb::new(schema(name, arity), rows).expect("generated TI-DB")
}

pub fn random_xdb(rng: &mut impl Rng, name: &str, arity: usize, probabilistic: bool) -> XDb {
    let mut xtuples = Vec::new();
    let (mut tuples, mut worlds) = (0, 1);
    loop {
        let k = rng.random_range(1..=3usize);
        let mut alts: Vec<Tuple> = (0..k).map(|_| small_tuple(rng, arity, 3)).collect();
        alts.sort();
        alts.dedup();
        alts.shuffle(rng);
        let optional = rng.random_bool(0.3);
        let choices = alts.len() + optional as usize;
        if tuples + alts.len() > MAX_TUPLES || worlds * choices > MAX_WORLDS || rng.random_bool(0.15) {
            break;
        }
        tuples += alts.len();
        worlds *= choices;
        xtuples.push(if probabilistic {
            // Quarters keep the sums exact; optional blocks get at most 3/4.
            let k = alts.len() as u32;
            let total = if optional { rng.random_range(k..=3) } else { 4 };
            let mut quarters = vec![1u32; alts.len()];
            for _ in k..total {
                quarters[rng.random_range(0..alts.len())] += 1;
            }
            let ps = quarters.iter().map(|&q| q as f64 / 4.0).collect();
            XTuple::with_probabilities(alts, ps)
        } else if optional {
            XTuple::optional(alts)
        } else {
            XTuple::certain(alts)
        });
    }
    XDb::new(schema(name, arity), xtuples).expect("generated x-DB")
}

pub fn random_ctable(rng: &mut impl Rng, name: &str, arity: usize, probabilistic: bool) -> CTable {
    let vars = ["X", "Y"];
    let mut variables = BTreeMap::new();
    for v in vars {
        let cands: Vec<Value> = (0..rng.random_range(1..=3)).map(Value::Int).collect();
        let var = if probabilistic {
            let n = cands.len() as f64;
            Variable::with_probabilities(cands.clone(), vec![1.0 / n; cands.len()])
        } else {
            Variable::over(cands)
        };
        variables.insert(v.to_string(), var);
    }
    let term = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.3) {
            Term::var(*vars.choose(rng).expect("vars"))
        } else {
            Term::constant(rng.random_range(0..3i64))
        }
    };
    let mut r = ChaCha8Rng::seed_from_u64(rng.random());
    let rows = (0..r.random_range(0..=4))
        .map(|_| {
            let values = (0..arity).map(|_| term(&mut r)).collect();
            let condition = match r.random_range(0..4) {
                0 => Condition::atom(term(&mut r), *CmpOp::ALL.choose(&mut r).expect("ops"), term(&mut r)),
                1 => {
                    let x = Term::var(*vars.choose(&mut r).expect("vars"));
                    let c = Term::constant(r.random_range(0..3i64));
                    Condition::Or(vec![
                        Condition::atom(x.clone(), CmpOp::Eq, c.clone()),
                        Condition::atom(x, CmpOp::Ne, c),
                    ])
                }
                _ => Condition::True,
            };
            CRow::new(values, condition)
        })
        .collect();
    CTable::new(schema(name, arity), rows, Condition::True, variables).expect("generated C-table")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Ti,
    X,
    C,
}

pub fn random_relation(rng: &mut impl Rng, kind: Kind, name: &str, arity: usize) -> UncertainRelation {
    let probabilistic = rng.random_bool(0.5);
    match kind {
        Kind::Ti => UncertainRelation::Ti(random_ti(rng, name, arity, probabilistic)),
        Kind::X => UncertainRelation::X(random_xdb(rng, name, arity, probabilistic)),
        Kind::C => UncertainRelation::C(random_ctable(rng, name, arity, probabilistic)),
    }
}

/// Relations `R` and `S` of arity 2, both of `kind`.
pub fn random_db(rng: &mut impl Rng, kind: Kind) -> UncertainDb {
    ["R", "S"]
        .into_iter()
        .map(|n| (n.to_string(), random_relation(rng, kind, n, 2)))
        .collect()
}

/// Random positive query over relations `R` and `S` of arity 2. Attribute
/// references are positional so self-joins stay unambiguous.
pub fn random_query(rng: &mut impl Rng, depth: usize) -> Query {
    random_query_arity(rng, depth).0
}

fn random_pred(rng: &mut impl Rng, arity: usize, split: Option<usize>) -> Predicate {
    let op = *[CmpOp::Eq, CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Ge]
        .choose(rng)
        .expect("ops");
    let pos = |i: usize| Operand::Attr(AttrRef::Position(i));
    match split {
        Some(s) if rng.random_bool(0.8) => {
            Predicate::Cmp(pos(rng.random_range(0..s)), op, pos(rng.random_range(s..arity)))
        }
        _ => Predicate::Cmp(
            pos(rng.random_range(0..arity)),
            op,
            Operand::Const(Value::Int(rng.random_range(0..3))),
        ),
    }
}

fn random_query_arity(rng: &mut impl Rng, depth: usize) -> (Query, usize) {
    if depth == 0 {
        return (Query::rel(["R", "S"][rng.random_range(0..2)]), 2);
    }
    match rng.random_range(0..5) {
        0 => {
            let (q, n) = random_query_arity(rng, depth - 1);
            (q.select(random_pred(rng, n, None)), n)
        }
        1 => {
            let (q, n) = random_query_arity(rng, depth - 1);
            let k = rng.random_range(1..=n.min(2));
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            idx.truncate(k);
            let attrs: Vec<AttrRef> = idx.into_iter().map(AttrRef::Position).collect();
            (Query::Project(attrs, Box::new(q)), k)
        }
        2 | 3 => {
            let (a, n) = random_query_arity(rng, depth - 1);
            let right_depth = rng.random_range(0..depth);
            let (b, m) = random_query_arity(rng, right_depth);
            if n + m > 6 {
                return (a, n);
            }
            if rng.random_bool(0.8) {
                let p = random_pred(rng, n + m, Some(n));
                (a.join(p, b), n + m)
            } else {
                (a.cross(b), n + m)
            }
        }
        _ => {
            let (a, n) = random_query_arity(rng, depth - 1);
            let b = swap_relations(&a);
            let b = if a.depth() + 2 <= depth && rng.random_bool(0.5) {
                b.select(random_pred(rng, n, None))
            } else {
                b
            };
            (a.union(b), n)
        }
    }
}

/// Same shape with `R` and `S` exchanged; output schemas coincide because
/// both relations use the same attribute names.
fn swap_relations(q: &Query) -> Query {
    let s = |q: &Query| Box::new(swap_relations(q));
    match q {
        Query::Rel(n) => Query::rel(if n == "R" { "S" } else { "R" }),
        Query::Select(p, q) => Query::Select(p.clone(), s(q)),
        Query::Project(a, q) => Query::Project(a.clone(), s(q)),
        Query::Join(p, a, b) => Query::Join(p.clone(), s(a), s(b)),
        Query::Cross(a, b) => Query::Cross(s(a), s(b)),
        Query::Union(a, b) => Query::Union(s(a), s(b)),
        Query::MinFlags { flag, input } => Query::MinFlags {
            flag: flag.clone(),
            input: s(input),
        },
    }
}

/// Random `N^2` relations `R` and `S` satisfying `c <= d`.
pub fn random_ua_db(rng: &mut impl Rng) -> Database {
    let sr = Semiring::pair(Semiring::Natural);
    ["R", "S"]
        .into_iter()
        .map(|n| {
            let mut r = KRelation::new(schema(n, 2), sr.clone());
            for _ in 0..rng.random_range(0..=MAX_TUPLES) {
                let d = rng.random_range(1..4u64);
                let c = rng.random_range(0..=d);
                r.add(small_tuple(rng, 2, 3), Element::pair(Element::Nat(d), Element::Nat(c)))
                    .expect("pair annotation");
            }
            (n.to_string(), r)
        })
        .collect()
}

/// Random incomplete databases over the access-control semiring.
pub fn random_access_worlds(rng: &mut impl Rng, worlds: usize) -> WorldDb {
    let sr = Semiring::vector(Semiring::Access, worlds);
    let mut db = WorldDb::new(Semiring::Access, worlds).expect("worlds");
    for n in ["R", "S"] {
        let mut r = KRelation::new(schema(n, 2), sr.clone());
        for _ in 0..rng.random_range(0..=MAX_TUPLES) {
            let v = (0..worlds)
                .map(|_| Element::Access(*Access::ALL.choose(rng).expect("levels")))
                .collect();
            r.add(small_tuple(rng, 2, 3), Element::Vector(v))
                .expect("access vector");
        }
        db.insert(n, r).expect("vector relation");
    }
    db
}

/// A large x-DB where each cell is uncertain with probability `rate`.
/// Uncertain cells vary across two or three alternatives; all other cells
/// agree. Values are drawn from a domain far larger than the row count.
pub fn synthetic_xdb(rows: usize, cols: usize, rate: f64, seed: u64) -> XDb {
    let mut rng = rng(seed);
    let domain = 1_000_000i64;
    let xtuples = (0..rows)
        .map(|_| {
            let base: Vec<Value> = (0..cols).map(|_| Value::Int(rng.random_range(0..domain))).collect();
            let uncertain: Vec<usize> = (0..cols).filter(|_| rng.random_bool(rate)).collect();
            if uncertain.is_empty() {
                return XTuple::certain(vec![Tuple(base)]);
            }
            let k = rng.random_range(2..=3);
            let mut alts = vec![Tuple(base.clone())];
            while alts.len() < k {
                let mut t = base.clone();
                for &c in &uncertain {
                    t[c] = Value::Int(rng.random_range(0..domain));
                }
                let t = Tuple(t);
                if !alts.contains(&t) {
                    alts.push(t);
                }
            }
            XTuple::certain(alts)
        })
        .collect();
    XDb::new(schema("R", cols), xtuples).expect("synthetic x-DB")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worlds::expand_model_to_worlds;

    #[test]
    fn generated_models_stay_small() {
        let mut r = rng(7);
        for i in 0..300 {
            for kind in [Kind::Ti, Kind::X, Kind::C] {
                let m = random_relation(&mut r, kind, "R", 2);
                let w = expand_model_to_worlds("R", &m, &Semiring::Boolean, 1_000_000).unwrap();
                assert!(w.world_count <= MAX_WORLDS, "case {i}: {} worlds", w.world_count);
            }
        }
    }

    #[test]
    fn generated_queries_typecheck() {
        let mut r = rng(3);
        let catalog = |n: &str| Some(schema(n, 2));
        for _ in 0..500 {
            let q = random_query(&mut r, 3);
            assert!(q.depth() <= 3);
            q.output_schema(&catalog).unwrap();
        }
    }

    #[test]
    fn synthetic_rates() {
        let x = synthetic_xdb(1000, 8, 0.0, 1);
        assert!(x.xtuples.iter().all(|t| t.alternatives.len() == 1));
        let x = synthetic_xdb(1000, 8, 0.1, 1);
        let multi = x.xtuples.iter().filter(|t| t.alternatives.len() > 1).count();
        assert!((450..700).contains(&multi), "{multi}");
    }
}
