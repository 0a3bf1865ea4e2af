mod common;

use proptest::prelude::*;
use rand::Rng;
use uadb_core::gen::{self, Kind};
use uadb_core::kdb::{AttrRef, Operand, Predicate};
use uadb_core::models::{BgwOptions, UncertainDb, UncertainRelation};
use uadb_core::uadb::{
    eval_ua, h_cert, h_cert_relation, h_det, h_det_relation, label_database, make_uadb, preserves_ccompleteness, UaDb,
};
use uadb_core::worlds::{certain, expand_database, expand_model_to_worlds, oracle_certain, possible, RESULT};
use uadb_core::{eval, CmpOp, Database, KRelation, Query, Semiring, Value};

const BUDGET: u128 = u128::MAX;

fn kinds() -> impl Strategy<Value = Kind> {
    proptest::sample::select(vec![Kind::Ti, Kind::X, Kind::C])
}

fn bases() -> impl Strategy<Value = Semiring> {
    proptest::sample::select(vec![Semiring::Natural, Semiring::Boolean])
}

fn leq_everywhere(sr: &Semiring, lo: &KRelation, hi: &KRelation) -> Result<(), String> {
    for (t, k) in lo.iter() {
        if !sr.leq(k, &hi.get(t)).unwrap() {
            return Err(format!("{t}: {k} is not below {}", hi.get(t)));
        }
    }
    Ok(())
}

fn best_guess(db: &UncertainDb, sr: &Semiring) -> Database {
    db.iter()
        .map(|(n, m)| (n.clone(), m.bgw(sr, &BgwOptions::default(), BUDGET).unwrap()))
        .collect()
}

proptest! {
    #![proptest_config(common::config())]

    #[test]
    fn labelings_are_sound(seed in any::<u64>(), kind in kinds(), sr in bases()) {
        let mut rng = gen::rng(seed);
        let m = gen::random_relation(&mut rng, kind, "R", 2);
        let labels = m.label(&sr).unwrap();
        let worlds = expand_model_to_worlds("R", &m, &sr, BUDGET).unwrap();
        let exact = certain(worlds.relation("R").unwrap(), &sr).unwrap();
        prop_assert!(leq_everywhere(&sr, &labels, &exact).is_ok(), "{:?}", leq_everywhere(&sr, &labels, &exact));
        if kind != Kind::C {
            prop_assert!(labels.same_content(&exact), "{:?} vs {:?}", labels, exact);
        }
        let bgw = m.bgw(&sr, &BgwOptions::default(), BUDGET).unwrap();
        prop_assert!(leq_everywhere(&sr, &labels, &bgw).is_ok());
    }

    /// With probabilities the guessed world is a most likely one.
    #[test]
    fn best_guess_is_most_likely(seed in any::<u64>(), x in any::<bool>()) {
        let mut rng = gen::rng(seed);
        let m = if x {
            UncertainRelation::X(gen::random_xdb(&mut rng, "R", 2, true))
        } else {
            UncertainRelation::Ti(gen::random_ti(&mut rng, "R", 2, true))
        };
        let sr = Semiring::Natural;
        let bgw = m.bgw(&sr, &BgwOptions::default(), BUDGET).unwrap();
        let worlds = expand_model_to_worlds("R", &m, &sr, BUDGET).unwrap();
        let ps = worlds.probabilities.clone().unwrap();
        let best = ps.iter().cloned().fold(0.0, f64::max);
        let mine = (1..=worlds.world_count)
            .filter(|&i| worlds.world(i).unwrap()["R"].same_content(&bgw))
            .map(|i| ps[i - 1])
            .fold(-1.0, f64::max);
        prop_assert!(mine >= best - 1e-9, "guess has p={} but best is {}", mine, best);
    }

    /// Labeled answers stay between the certain and best-guess answers.
    #[test]
    fn queries_preserve_bounds(seed in any::<u64>(), kind in kinds(), sr in bases()) {
        let mut rng = gen::rng(seed);
        let db = gen::random_db(&mut rng, kind);
        let q = gen::random_query(&mut rng, 3);
        let ua = label_database(&db, &sr, &BgwOptions::default(), BUDGET).unwrap();
        let out = eval_ua(&ua, &q).unwrap();
        let worlds = expand_database(&db, &sr, BUDGET).unwrap();
        let exact = oracle_certain(&worlds, &q).unwrap();
        let cert = h_cert_relation(&out).unwrap();
        prop_assert!(leq_everywhere(&sr, &cert, &exact).is_ok(), "{}: {:?}", q, leq_everywhere(&sr, &cert, &exact));
        let poss = possible(&worlds.eval_worlds(&q).unwrap().relations[RESULT], &sr).unwrap();
        prop_assert!(leq_everywhere(&sr, &exact, &poss).is_ok());

        let det = h_det_relation(&out).unwrap();
        let expected = eval(&best_guess(&db, &sr), &q).unwrap();
        prop_assert!(det.same_content(&expected), "{}: {:?} vs {:?}", q, det, expected);

        if kind == Kind::Ti {
            prop_assert!(cert.same_content(&exact), "{}: {:?} vs {:?}", q, cert, exact);
        }
    }

    /// Any weaker labeling stays sound after querying.
    #[test]
    fn weakened_labelings_stay_sound(seed in any::<u64>(), kind in kinds(), sr in bases()) {
        let mut rng = gen::rng(seed);
        let db = gen::random_db(&mut rng, kind);
        let q = gen::random_query(&mut rng, 3);
        let world = best_guess(&db, &sr);
        let rng = std::cell::RefCell::new(rng);
        let labels: Database = db
            .iter()
            .map(|(n, m)| {
                let full = m.label(&sr).unwrap();
                let weak = full
                    .map_annotations(
                        |k| Ok(if rng.borrow_mut().random_bool(0.5) { k.clone() } else { sr.zero() }),
                        &sr,
                    )
                    .unwrap();
                (n.clone(), weak)
            })
            .collect();
        let ua = make_uadb(&world, &labels).unwrap();
        let cert = h_cert_relation(&eval_ua(&ua, &q).unwrap()).unwrap();
        let exact = oracle_certain(&expand_database(&db, &sr, BUDGET).unwrap(), &q).unwrap();
        prop_assert!(leq_everywhere(&sr, &cert, &exact).is_ok());
    }

    /// When the x-key condition holds the labeled answer is exactly certain.
    #[test]
    fn retained_xkeys_give_complete_answers(seed in any::<u64>(), sr in bases()) {
        let mut rng = gen::rng(seed);
        let db = gen::random_db(&mut rng, Kind::X);
        let q = canonical_query(&mut rng);
        if preserves_ccompleteness(&q, &db).unwrap().is_preserved() {
            let ua = label_database(&db, &sr, &BgwOptions::default(), BUDGET).unwrap();
            let cert = h_cert_relation(&eval_ua(&ua, &q).unwrap()).unwrap();
            let exact = oracle_certain(&expand_database(&db, &sr, BUDGET).unwrap(), &q).unwrap();
            prop_assert!(cert.same_content(&exact), "{}: {:?} vs {:?}", q, cert, exact);
        }
    }

    /// Both pair projections commute with query evaluation.
    #[test]
    fn pair_projections_commute(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let ua = UaDb::from_relations(Semiring::Natural, gen::random_ua_db(&mut rng)).unwrap();
        let q = gen::random_query(&mut rng, 3);
        let out = eval_ua(&ua, &q).unwrap();
        prop_assert!(h_det_relation(&out).unwrap().same_content(&eval(&h_det(&ua).unwrap(), &q).unwrap()));
        prop_assert!(h_cert_relation(&out).unwrap().same_content(&eval(&h_cert(&ua).unwrap(), &q).unwrap()));
    }

    /// Exact access-level labels survive projections and joins soundly.
    #[test]
    fn access_levels_stay_sound(seed in any::<u64>(), worlds in 1usize..5) {
        let mut rng = gen::rng(seed);
        let sr = Semiring::Access;
        let wdb = gen::random_access_worlds(&mut rng, worlds);
        let q = gen::random_query(&mut rng, 3);
        let first = wdb.world(1).unwrap();
        let labels: Database = wdb
            .relations
            .iter()
            .map(|(n, r)| (n.clone(), certain(r, &sr).unwrap()))
            .collect();
        let out = eval_ua(&make_uadb(&first, &labels).unwrap(), &q).unwrap();
        let exact = oracle_certain(&wdb, &q).unwrap();
        prop_assert!(leq_everywhere(&sr, &h_cert_relation(&out).unwrap(), &exact).is_ok(), "{}", q);
        prop_assert!(h_det_relation(&out).unwrap().same_content(&eval(&first, &q).unwrap()));
    }
}

/// `π(σ(R ⋈ S))`, `π(σ(R))` or `π(R × S)` with positional attributes.
fn canonical_query(rng: &mut impl Rng) -> Query {
    let pos = |i: usize| Operand::Attr(AttrRef::Position(i));
    let (body, arity) = match rng.random_range(0..3) {
        0 => (Query::rel("R"), 2),
        1 => {
            let p = Predicate::Cmp(pos(rng.random_range(0..2)), CmpOp::Eq, pos(rng.random_range(2..4)));
            (Query::rel("R").join(p, Query::rel("S")), 4)
        }
        _ => (Query::rel("R").cross(Query::rel("S")), 4),
    };
    let body = if rng.random_bool(0.5) {
        let p = Predicate::Cmp(
            pos(rng.random_range(0..arity)),
            CmpOp::Ne,
            Operand::Const(Value::Int(rng.random_range(0..3))),
        );
        body.select(p)
    } else {
        body
    };
    let attrs: Vec<AttrRef> = (0..arity)
        .filter(|_| rng.random_bool(0.6))
        .map(AttrRef::Position)
        .collect();
    if attrs.is_empty() {
        body
    } else {
        Query::Project(attrs, Box::new(body))
    }
}

#[test]
fn xkey_condition_is_exercised() {
    let hits = (0..500u64)
        .filter(|&seed| {
            let mut rng = gen::rng(seed);
            let db = gen::random_db(&mut rng, Kind::X);
            let q = canonical_query(&mut rng);
            preserves_ccompleteness(&q, &db).unwrap().is_preserved()
        })
        .count();
    assert!(hits >= 100, "only {hits} of 500 queries keep an x-key");
}
