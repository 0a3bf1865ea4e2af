//! UA-databases: a best-guess world paired with a c-sound labeling.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::kdb::{eval, AttrRef, Database, KRelation, Query, Schema};
use crate::models::{BgwOptions, UncertainDb, UncertainRelation, XDb};
use crate::semirings::{Element, Semiring};

/// Relations annotated with pairs `[d, c]` where `c ≼ d`.
#[derive(Clone, Debug, PartialEq)]
pub struct UaDb {
    pub base: Semiring,
    pub relations: Database,
}

impl UaDb {
    pub fn semiring(&self) -> Semiring {
        Semiring::pair(self.base.clone())
    }

    /// Wraps pair-annotated relations after checking `c ≼ d` everywhere.
    pub fn from_relations(base: Semiring, relations: Database) -> Result<UaDb> {
        let sr = Semiring::pair(base.clone());
        for (name, r) in &relations {
            if r.semiring != sr {
                return Err(Error::SchemaMismatch(format!(
                    "`{name}` annotated in {} instead of {sr}",
                    r.semiring
                )));
            }
            check_pairs(name, r, &base)?;
        }
        Ok(UaDb { base, relations })
    }

    pub fn relation(&self, name: &str) -> Result<&KRelation> {
        self.relations
            .get(name)
            .ok_or_else(|| Error::UnknownRelation(name.to_string()))
    }
}

fn check_pairs(name: &str, r: &KRelation, base: &Semiring) -> Result<()> {
    for (t, k) in r.iter() {
        let (d, c) = k.as_pair().ok_or_else(|| Error::Carrier {
            semiring: Semiring::pair(base.clone()).to_string(),
            element: k.to_string(),
        })?;
        if !base.leq(c, d)? {
            return Err(Error::Sandwich {
                relation: name.to_string(),
                tuple: t.to_string(),
                label: c.to_string(),
                det: d.to_string(),
            });
        }
    }
    Ok(())
}

/// Pairs each tuple's best-guess annotation with its label.
pub fn make_uadb(world: &Database, labeling: &Database) -> Result<UaDb> {
    if let Some(n) = labeling.keys().find(|n| !world.contains_key(*n)) {
        return Err(Error::SchemaMismatch(format!("labeling for unknown relation `{n}`")));
    }
    let mut base: Option<Semiring> = None;
    let mut relations = Database::new();
    for (name, d) in world {
        match &base {
            None => base = Some(d.semiring.clone()),
            Some(b) if *b != d.semiring => {
                return Err(Error::SchemaMismatch(format!(
                    "`{name}` annotated in {} instead of {b}",
                    d.semiring
                )))
            }
            Some(_) => {}
        }
        let sr = d.semiring.clone();
        let empty = KRelation::new(d.schema.clone(), sr.clone());
        let l = labeling.get(name).unwrap_or(&empty);
        if l.semiring != sr || l.schema.arity() != d.schema.arity() {
            return Err(Error::SchemaMismatch(format!(
                "labeling of `{name}` does not match its world relation"
            )));
        }
        let tuples: BTreeSet<_> = d.tuples().chain(l.tuples()).cloned().collect();
        let mut out = KRelation::new(d.schema.clone(), Semiring::pair(sr.clone()));
        for t in tuples {
            let (dk, ck) = (d.get(&t), l.get(&t));
            if !sr.leq(&ck, &dk)? {
                return Err(Error::Sandwich {
                    relation: name.clone(),
                    tuple: t.to_string(),
                    label: ck.to_string(),
                    det: dk.to_string(),
                });
            }
            out.set(t, Element::pair(dk, ck))?;
        }
        relations.insert(name.clone(), out);
    }
    Ok(UaDb {
        base: base.unwrap_or(Semiring::Boolean),
        relations,
    })
}

/// Labels every relation and pairs it with the extracted best-guess world.
pub fn label_database(db: &UncertainDb, base: &Semiring, opts: &BgwOptions, budget: u128) -> Result<UaDb> {
    let mut world = Database::new();
    let mut labels = Database::new();
    for (name, m) in db {
        world.insert(name.clone(), m.bgw(base, opts, budget)?);
        labels.insert(name.clone(), m.label(base)?);
    }
    make_uadb(&world, &labels)
}

fn component(r: &KRelation, base: &Semiring, first: bool) -> Result<KRelation> {
    r.map_annotations(
        |k| match k.as_pair() {
            Some((d, c)) => Ok(if first { d.clone() } else { c.clone() }),
            None => Err(Error::Carrier {
                semiring: "pair".into(),
                element: k.to_string(),
            }),
        },
        base,
    )
}

pub fn h_det_relation(r: &KRelation) -> Result<KRelation> {
    component(r, pair_base(r)?, true)
}

pub fn h_cert_relation(r: &KRelation) -> Result<KRelation> {
    component(r, pair_base(r)?, false)
}

fn pair_base(r: &KRelation) -> Result<&Semiring> {
    match &r.semiring {
        Semiring::Pair(b) => Ok(b),
        other => Err(Error::SchemaMismatch(format!("{other} is not a pair semiring"))),
    }
}

pub fn h_det(db: &UaDb) -> Result<Database> {
    db.relations
        .iter()
        .map(|(n, r)| Ok((n.clone(), component(r, &db.base, true)?)))
        .collect()
}

pub fn h_cert(db: &UaDb) -> Result<Database> {
    db.relations
        .iter()
        .map(|(n, r)| Ok((n.clone(), component(r, &db.base, false)?)))
        .collect()
}

/// Evaluates `q` pointwise over `[d, c]` pairs.
pub fn eval_ua(db: &UaDb, q: &Query) -> Result<KRelation> {
    eval(&db.relations, q)
}

/// `(u,c)` with `u = d - c` for bag pairs, `[d,c]` otherwise.
pub fn render_pair(k: &Element) -> String {
    match k.as_pair() {
        Some((Element::Nat(d), Element::Nat(c))) => format!("({},{c})", d.saturating_sub(*c)),
        _ => k.to_string(),
    }
}

/// Whether some two alternatives of every non-optional multi-alternative
/// x-tuple differ on `attrs`.
pub fn is_xkey(r: &XDb, attrs: &[AttrRef]) -> Result<bool> {
    let idx = attrs.iter().map(|a| r.schema.resolve(a)).collect::<Result<Vec<_>>>()?;
    Ok(r.xtuples.iter().all(|x| {
        x.optional
            || x.alternatives.len() == 1
            || x.alternatives.iter().any(|a| {
                x.alternatives[0].values().len() == a.values().len()
                    && idx.iter().any(|&i| a.values()[i] != x.alternatives[0].values()[i])
            })
    }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Completeness {
    /// The labeled answer equals the certain answer.
    Preserved,
    /// The sufficient condition does not hold.
    NotGuaranteed,
    /// The query is outside the shape the condition speaks about.
    Inapplicable(String),
}

impl Completeness {
    pub fn is_preserved(&self) -> bool {
        *self == Completeness::Preserved
    }
}

impl fmt::Display for Completeness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Completeness::Preserved => f.write_str("preserved"),
            Completeness::NotGuaranteed => f.write_str("not guaranteed"),
            Completeness::Inapplicable(why) => write!(f, "condition inapplicable: {why}"),
        }
    }
}

/// Splits `π_A(block)` where block is built only from selections, joins and
/// products over base relations.
fn canonical(q: &Query) -> Option<(Option<&[AttrRef]>, &Query)> {
    fn block(q: &Query) -> bool {
        match q {
            Query::Rel(_) => true,
            Query::Select(_, q) => block(q),
            Query::Join(_, a, b) | Query::Cross(a, b) => block(a) && block(b),
            _ => false,
        }
    }
    let (attrs, body) = match q {
        Query::Project(attrs, body) => (Some(attrs.as_slice()), body.as_ref()),
        other => (None, other),
    };
    block(body).then_some((attrs, body))
}

/// Sufficient condition for labels to stay c-complete through `q`.
pub fn preserves_ccompleteness(q: &Query, dbs: &UncertainDb) -> Result<Completeness> {
    for n in q.relations() {
        if !dbs.contains_key(n) {
            return Err(Error::UnknownRelation(n.to_string()));
        }
    }
    if q.relations()
        .iter()
        .all(|n| matches!(dbs[*n], UncertainRelation::Ti(_)))
    {
        return Ok(Completeness::Preserved);
    }
    let Some((attrs, body)) = canonical(q) else {
        return Ok(Completeness::Inapplicable(
            "query is not of the form project(select(product))".into(),
        ));
    };
    let rels = body.relations();
    let distinct: BTreeSet<&str> = rels.iter().copied().collect();
    if distinct.len() != rels.len() {
        return Ok(Completeness::Inapplicable("query contains a self-join".into()));
    }
    let catalog = |n: &str| dbs.get(n).map(|m| m.schema().clone());
    let schema: Schema = body.output_schema(&catalog)?;
    let positions: Vec<usize> = match attrs {
        Some(attrs) => attrs.iter().map(|a| schema.resolve(a)).collect::<Result<_>>()?,
        None => (0..schema.arity()).collect(),
    };
    for rel in distinct {
        let kept: Vec<AttrRef> = positions
            .iter()
            .map(|&p| &schema.attrs[p])
            .filter(|a| a.qualifier.as_deref() == Some(rel))
            .map(|a| AttrRef::Name(a.name.clone()))
            .collect();
        let ok = match &dbs[rel] {
            UncertainRelation::Ti(_) => true,
            UncertainRelation::X(x) => is_xkey(x, &kept)?,
            UncertainRelation::C(_) => false,
        };
        if !ok {
            return Ok(Completeness::NotGuaranteed);
        }
    }
    Ok(Completeness::Preserved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdb::Predicate;
    use crate::models::{TiDb, TiRow, XTuple};
    use crate::tuple;
    use crate::value::CmpOp;

    fn nat(n: u64) -> Element {
        Element::Nat(n)
    }

    fn bag(name: &str, rows: &[(&str, u64)]) -> KRelation {
        KRelation::from_rows(
            Schema::new(name, &["item"]).unwrap(),
            Semiring::Natural,
            rows.iter().map(|(s, n)| (tuple![*s], nat(*n))),
        )
        .unwrap()
    }

    #[test]
    fn bag_representation() {
        let world = bag("F", &[("apple", 1), ("pear", 1), ("carrot", 1), ("tomato", 1)]);
        let label = bag("F", &[("apple", 1), ("pear", 1), ("carrot", 1)]);
        let db = make_uadb(
            &[("F".to_string(), world.clone())].into(),
            &[("F".to_string(), label)].into(),
        )
        .unwrap();
        let f = db.relation("F").unwrap();
        assert_eq!(render_pair(&f.get(&tuple!["apple"])), "(0,1)");
        assert_eq!(render_pair(&f.get(&tuple!["tomato"])), "(1,0)");
        assert_eq!(f.get(&tuple!["tomato"]).to_string(), "[1,0]");
        assert_eq!(h_det(&db).unwrap()["F"], world);
    }

    #[test]
    fn empty_labeling_degrades_to_guess() {
        let world = bag("F", &[("apple", 2)]);
        let db = make_uadb(&[("F".to_string(), world)].into(), &Database::new()).unwrap();
        assert_eq!(
            db.relation("F").unwrap().get(&tuple!["apple"]),
            Element::pair(nat(2), nat(0))
        );
        assert!(h_cert(&db).unwrap()["F"].is_empty());
    }

    #[test]
    fn sandwich_violation() {
        let world = bag("F", &[("apple", 1)]);
        let label = bag("F", &[("apple", 2)]);
        let r = make_uadb(&[("F".to_string(), world)].into(), &[("F".to_string(), label)].into());
        assert!(matches!(r, Err(Error::Sandwich { .. })));
        let stray = bag("F", &[("kiwi", 1)]);
        let r = make_uadb(
            &[("F".to_string(), bag("F", &[]))].into(),
            &[("F".to_string(), stray)].into(),
        );
        assert!(matches!(r, Err(Error::Sandwich { .. })));
    }

    #[test]
    fn components_of_a_pair() {
        let sr = Semiring::pair(Semiring::Natural);
        let r = KRelation::from_rows(
            Schema::new("R", &["a"]).unwrap(),
            sr,
            [(tuple![1], Element::pair(nat(3), nat(2)))],
        )
        .unwrap();
        assert_eq!(h_det_relation(&r).unwrap().get(&tuple![1]), nat(3));
        assert_eq!(h_cert_relation(&r).unwrap().get(&tuple![1]), nat(2));
    }

    #[test]
    fn deterministic_inputs_stay_diagonal() {
        let world = bag("F", &[("apple", 2), ("pear", 1)]);
        let db = make_uadb(
            &[("F".to_string(), world.clone())].into(),
            &[("F".to_string(), world)].into(),
        )
        .unwrap();
        let q = Query::rel("F").cross(Query::rel("F")).project(&["#0"]);
        for (_, k) in eval_ua(&db, &q).unwrap().iter() {
            let (d, c) = k.as_pair().unwrap();
            assert_eq!(d, c);
        }
    }

    fn pairs_x() -> XDb {
        XDb::new(
            Schema::new("R", &["first", "second"]).unwrap(),
            vec![
                XTuple::certain(vec![tuple![1, 2], tuple![1, 3]]),
                XTuple::certain(vec![tuple![5, 5]]),
                XTuple::optional(vec![tuple![7, 1], tuple![7, 2]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn xkeys() {
        let r = pairs_x();
        assert!(!is_xkey(&r, &["first".into()]).unwrap());
        assert!(is_xkey(&r, &["second".into()]).unwrap());
        assert!(is_xkey(&r, &["first".into(), "second".into()]).unwrap());
        assert!(is_xkey(&r, &["zip".into()]).is_err());
    }

    #[test]
    fn completeness_conditions() {
        let mut dbs = UncertainDb::new();
        dbs.insert("R".into(), UncertainRelation::X(pairs_x()));
        let s = TiDb::new(
            Schema::new("S", &["k", "v"]).unwrap(),
            vec![TiRow::certain(tuple![1, "a"]), TiRow::optional(tuple![5, "b"])],
        )
        .unwrap();
        dbs.insert("S".into(), UncertainRelation::Ti(s));
        let join = || Query::rel("R").join(Predicate::attrs("R.first", CmpOp::Eq, "S.k"), Query::rel("S"));
        assert_eq!(
            preserves_ccompleteness(&join().project(&["second", "v"]), &dbs).unwrap(),
            Completeness::Preserved
        );
        assert_eq!(
            preserves_ccompleteness(&join().project(&["first", "v"]), &dbs).unwrap(),
            Completeness::NotGuaranteed
        );
        assert!(matches!(
            preserves_ccompleteness(&Query::rel("R").cross(Query::rel("R")), &dbs).unwrap(),
            Completeness::Inapplicable(_)
        ));
        assert!(matches!(
            preserves_ccompleteness(&Query::rel("R").union(Query::rel("R")), &dbs).unwrap(),
            Completeness::Inapplicable(_)
        ));
        let ti_only = Query::rel("S").union(Query::rel("S")).project(&["k"]);
        assert_eq!(
            preserves_ccompleteness(&ti_only, &dbs).unwrap(),
            Completeness::Preserved
        );
    }
}
