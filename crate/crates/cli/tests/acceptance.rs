//! One PASS/FAIL line per acceptance criterion. Exits non-zero on any failure.

use std::time::{Duration, Instant};

use rand::Rng;
use uadb_cli::experiments::{self, FnrParams, UtilityParams};
use uadb_core::fixtures::*;
use uadb_core::gen::{self, Kind};
use uadb_core::kdb::{map_database, support, AttrRef, Operand, Predicate};
use uadb_core::models::{label_ctable, BgwOptions, UncertainDb, UncertainRelation};
use uadb_core::rewriter::{dec, enc, enc_database, rewrite_ra};
use uadb_core::semirings::glb_fold;
use uadb_core::uaa::{eval_expr, eval_uaa, AnnotatedValue, ArithOp, Expr, UaCount};
use uadb_core::uadb::{
    eval_ua, h_cert, h_cert_relation, h_det, h_det_relation, label_database, make_uadb, preserves_ccompleteness, UaDb,
};
use uadb_core::worlds::{certain, expand_database, expand_model_to_worlds, oracle_certain, world_budget};
use uadb_core::{eval, tuple, Access, CmpOp, Database, Element, KRelation, Query, Schema, Semiring, Value};

/// Cases per randomized suite.
const CASES: u64 = 500;
const GOLDEN_LIMIT: Duration = Duration::from_secs(1);
const PROPERTY_LIMIT: Duration = Duration::from_secs(60);
const FNR_LIMIT: Duration = Duration::from_secs(120);
const UTILITY_LIMIT: Duration = Duration::from_secs(60);
const ACCESS_LIMIT: Duration = Duration::from_secs(60);
/// Allowed gap between certain-answer precision and 1.
const EXACT: f64 = 0.0;

type Check = Result<String, String>;
type Case = fn(u64) -> Result<(), String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn below(sr: &Semiring, lo: &KRelation, hi: &KRelation) -> Result<(), String> {
    for (t, k) in lo.iter() {
        if !sr.leq(k, &hi.get(t)).map_err(err)? {
            return Err(format!("{t}: {k} is not below {}", hi.get(t)));
        }
    }
    Ok(())
}

// ---- goldens

fn goldens() -> Check {
    let nat = Semiring::Natural;
    let loc = loc_worlds();
    let cert = certain(loc.relation("LOC").map_err(err)?, &nat).map_err(err)?;
    let got = [
        cert.get(&tuple!["Lasalle", "NY"]),
        cert.get(&tuple!["Tucson", "AZ"]),
        cert.get(&tuple!["Greenville", "IN"]),
    ];
    ensure(got == [Element::Nat(2), Element::Nat(1), Element::Nat(0)], || {
        format!("certain multiplicities {got:?}")
    })?;

    let qa = eval(&address_db(), &state_query()).map_err(err)?;
    ensure(
        qa.len() == 2 && qa.get(&tuple!["NY"]) == Element::Nat(2) && qa.get(&tuple!["AZ"]) == Element::Nat(1),
        || format!("state counts {qa:?}"),
    )?;

    let ua = label_database(&geocoding_db(), &nat, &BgwOptions::default(), world_budget()).map_err(err)?;
    let out = eval_ua(&ua, &geocoding_query()).map_err(err)?;
    let labels = h_cert_relation(&out).map_err(err)?;
    let flags: Vec<(Value, bool)> = out
        .tuples()
        .map(|t| (t.values()[0].clone(), labels.get(t) == Element::Nat(1)))
        .collect();
    let want: Vec<(Value, bool)> = [(1, true), (2, false), (3, false), (4, true)]
        .into_iter()
        .map(|(id, c)| (Value::Int(id), c))
        .collect();
    ensure(flags == want, || format!("geocoding labels {flags:?}"))?;
    let oracle = oracle_certain(
        &expand_database(&geocoding_db(), &nat, world_budget()).map_err(err)?,
        &geocoding_query(),
    )
    .map_err(err)?;
    ensure(oracle.get(&tuple![3, "Kingsley", "NY"]) == Element::Nat(1), || {
        "id 3 should be certain in every world".into()
    })?;

    let (t, f) = (AnnotatedValue::certain, AnnotatedValue::uncertain);
    let db = food_db();
    let j = eval_uaa(&db, &food_join()).map_err(err)?;
    let join_ok = j.len() == 3
        && j.get(&[t("apple"), t("red"), t("fruit"), t("child"), t("fruit")]) == UaCount::uc(2, 6)
        && j.get(&[t("carrot"), f("red"), t("vegetable"), t("adult"), f("vegetable")]) == UaCount::uc(4, 0)
        && j.get(&[t("apple"), f("red"), t("fruit"), t("child"), t("fruit")]) == UaCount::uc(4, 2);
    ensure(join_ok, || "food join rows".into())?;
    let s = eval_uaa(&db, &food_selection()).map_err(err)?;
    ensure(
        s.get(&[t("apple"), f("red"), t("fruit"), t("child"), t("fruit")]) == UaCount::uc(6, 0),
        || "food selection row".into(),
    )?;
    let fin = eval_uaa(&db, &food_query()).map_err(err)?;
    ensure(
        fin.len() == 2 && fin.get(&[t("red")]) == UaCount::uc(2, 6) && fin.get(&[f("red")]) == UaCount::uc(10, 0),
        || "food answer rows".into(),
    )?;

    let d = eval_uaa(&described_food(), &description_query()).map_err(err)?;
    let d_ok = d.len() == 3
        && d.get(&[t("apple"), t("red fruit")]) == UaCount::ONE
        && d.get(&[t("carrot"), f("red vegetable")]) == UaCount::ONE
        && d.get(&[t("tomato"), f("red fruit")]) == UaCount::ONE;
    ensure(d_ok, || "descriptions".into())?;

    let c = conditional_pair();
    let labels = label_ctable(&c, &Semiring::Boolean).map_err(err)?;
    let m = UncertainRelation::C(c);
    let worlds = expand_model_to_worlds("R", &m, &Semiring::Boolean, world_budget()).map_err(err)?;
    let oracle = oracle_certain(&worlds, &Query::rel("R")).map_err(err)?;
    ensure(
        !labels.contains(&tuple![1, 1]) && oracle.get(&tuple![1, 1]) == Element::Bool(true),
        || "c-table pair".into(),
    )?;
    Ok("6 examples".into())
}

// ---- property suites

fn best_guess(db: &UncertainDb, sr: &Semiring) -> Result<Database, String> {
    db.iter()
        .map(|(n, m)| Ok((n.clone(), m.bgw(sr, &BgwOptions::default(), u128::MAX).map_err(err)?)))
        .collect()
}

/// Soundness, best-guess agreement and TI completeness for one random case.
fn labeling_case(seed: u64) -> Result<(), String> {
    let mut rng = gen::rng(seed);
    let kind = [Kind::Ti, Kind::X, Kind::C][(seed % 3) as usize];
    let sr = if seed.is_multiple_of(2) {
        Semiring::Natural
    } else {
        Semiring::Boolean
    };
    let db = gen::random_db(&mut rng, kind);
    let q = gen::random_query(&mut rng, 3);
    let ua = label_database(&db, &sr, &BgwOptions::default(), u128::MAX).map_err(err)?;
    let out = eval_ua(&ua, &q).map_err(err)?;
    let cert = h_cert_relation(&out).map_err(err)?;
    let exact = oracle_certain(&expand_database(&db, &sr, u128::MAX).map_err(err)?, &q).map_err(err)?;
    below(&sr, &cert, &exact).map_err(|e| format!("soundness, seed {seed}, {q}: {e}"))?;
    let det = h_det_relation(&out).map_err(err)?;
    let guess = eval(&best_guess(&db, &sr)?, &q).map_err(err)?;
    ensure(det.same_content(&guess), || format!("best guess, seed {seed}, {q}"))?;
    if kind == Kind::Ti {
        ensure(cert.same_content(&exact), || {
            format!("TI completeness, seed {seed}, {q}")
        })?;
    }
    Ok(())
}

/// `π(σ(R ⋈ S))`, `π(σ(R))` or `π(R × S)` over positions.
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
        let c = Operand::Const(Value::Int(rng.random_range(0..3)));
        body.select(Predicate::Cmp(pos(rng.random_range(0..arity)), CmpOp::Ne, c))
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

/// Returns whether the x-key condition held.
fn xkey_case(seed: u64) -> Result<bool, String> {
    let mut rng = gen::rng(seed);
    let db = gen::random_db(&mut rng, Kind::X);
    let q = canonical_query(&mut rng);
    if !preserves_ccompleteness(&q, &db).map_err(err)?.is_preserved() {
        return Ok(false);
    }
    let sr = Semiring::Boolean;
    let ua = label_database(&db, &sr, &BgwOptions::default(), u128::MAX).map_err(err)?;
    let cert = h_cert_relation(&eval_ua(&ua, &q).map_err(err)?).map_err(err)?;
    let exact = oracle_certain(&expand_database(&db, &sr, u128::MAX).map_err(err)?, &q).map_err(err)?;
    ensure(cert.same_content(&exact), || format!("x-key, seed {seed}, {q}"))?;
    Ok(true)
}

fn homomorphism_case(seed: u64) -> Result<(), String> {
    let mut rng = gen::rng(seed);
    let ua = UaDb::from_relations(Semiring::Natural, gen::random_ua_db(&mut rng)).map_err(err)?;
    let q = gen::random_query(&mut rng, 3);
    let out = eval_ua(&ua, &q).map_err(err)?;
    let det = eval(&h_det(&ua).map_err(err)?, &q).map_err(err)?;
    ensure(h_det_relation(&out).map_err(err)?.same_content(&det), || {
        format!("h_det, {q}")
    })?;
    let cert = eval(&h_cert(&ua).map_err(err)?, &q).map_err(err)?;
    ensure(h_cert_relation(&out).map_err(err)?.same_content(&cert), || {
        format!("h_cert, {q}")
    })?;

    let bags = h_det(&ua).map_err(err)?;
    let after = eval(&bags, &q)
        .map_err(err)?
        .map_annotations(support, &Semiring::Boolean)
        .map_err(err)?;
    let before = eval(&map_database(&bags, support, &Semiring::Boolean).map_err(err)?, &q).map_err(err)?;
    ensure(after.same_content(&before), || format!("support, {q}"))?;

    // glb over worlds against sums and products of world vectors.
    let base = [Semiring::Natural, Semiring::Boolean, Semiring::Access][(seed % 3) as usize].clone();
    let width = rng.random_range(1..5);
    let mut vector = || -> Vec<Element> {
        (0..width)
            .map(|_| match base {
                Semiring::Natural => Element::Nat(rng.random_range(0..20)),
                Semiring::Boolean => Element::Bool(rng.random_bool(0.5)),
                _ => Element::Access(Access::ALL[rng.random_range(0..5)]),
            })
            .collect()
    };
    let (x, y) = (vector(), vector());
    let v = Semiring::vector(base.clone(), width);
    let glb = |k: &[Element]| glb_fold(&base, k).map_err(err);
    let (xe, ye) = (Element::Vector(x.clone()), Element::Vector(y.clone()));
    let sum = v.add(&xe, &ye).map_err(err)?;
    let prod = v.mul(&xe, &ye).map_err(err)?;
    let lhs = base.add(&glb(&x)?, &glb(&y)?).map_err(err)?;
    ensure(base.leq(&lhs, &glb(sum.as_vector().unwrap())?).map_err(err)?, || {
        format!("superadditivity on {x:?}, {y:?}")
    })?;
    let lhs = base.mul(&glb(&x)?, &glb(&y)?).map_err(err)?;
    ensure(base.leq(&lhs, &glb(prod.as_vector().unwrap())?).map_err(err)?, || {
        format!("supermultiplicativity on {x:?}, {y:?}")
    })
}

fn rewriting_case(seed: u64) -> Result<(), String> {
    let mut rng = gen::rng(seed);
    let db = UaDb::from_relations(Semiring::Natural, gen::random_ua_db(&mut rng)).map_err(err)?;
    let q = gen::random_query(&mut rng, 3);
    let direct = eval_ua(&db, &q).map_err(err)?;
    let via = dec(&eval(&enc_database(&db).map_err(err)?, &rewrite_ra(&q).map_err(err)?).map_err(err)?).map_err(err)?;
    ensure(direct.same_content(&via), || format!("rewriting, {q}"))?;
    for r in db.relations.values() {
        ensure(dec(&enc(r).map_err(err)?).map_err(err)?.same_content(r), || {
            "roundtrip".into()
        })?;
    }
    Ok(())
}

fn random_int_expr(rng: &mut impl Rng, depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.3) {
        return if rng.random_bool(0.5) {
            Expr::Attr(AttrRef::Position(rng.random_range(0..3)))
        } else {
            Expr::val(rng.random_range(-5i64..5))
        };
    }
    if rng.random_bool(0.2) {
        let c = random_bool_expr(rng, depth - 1);
        let (a, b) = (random_int_expr(rng, depth - 1), random_int_expr(rng, depth - 1));
        return Expr::If(Box::new(c), Box::new(a), Box::new(b));
    }
    let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul][rng.random_range(0..3)];
    let (a, b) = (random_int_expr(rng, depth - 1), random_int_expr(rng, depth - 1));
    Expr::Arith(op, Box::new(a), Box::new(b))
}

fn random_bool_expr(rng: &mut impl Rng, depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.3) {
        let op = CmpOp::ALL[rng.random_range(0..CmpOp::ALL.len())];
        let (a, b) = (random_int_expr(rng, 1), random_int_expr(rng, 1));
        return Expr::cmp(op, a, b);
    }
    match rng.random_range(0..3) {
        0 => Expr::Not(Box::new(random_bool_expr(rng, depth - 1))),
        1 => Expr::And(
            Box::new(random_bool_expr(rng, depth - 1)),
            Box::new(random_bool_expr(rng, depth - 1)),
        ),
        _ => Expr::Or(
            Box::new(random_bool_expr(rng, depth - 1)),
            Box::new(random_bool_expr(rng, depth - 1)),
        ),
    }
}

/// Evaluation that never looks at labels.
fn plain(e: &Expr, row: &[i64]) -> Value {
    let b = |x: &Expr| plain(x, row) == Value::Bool(true);
    let i = |x: &Expr| match plain(x, row) {
        Value::Int(v) => v,
        other => panic!("not an integer: {other}"),
    };
    match e {
        Expr::Attr(AttrRef::Position(p)) => Value::Int(row[*p]),
        Expr::Const(v) => v.value.clone(),
        Expr::Arith(ArithOp::Add, x, y) => Value::Int(i(x) + i(y)),
        Expr::Arith(ArithOp::Sub, x, y) => Value::Int(i(x) - i(y)),
        Expr::Arith(ArithOp::Mul, x, y) => Value::Int(i(x) * i(y)),
        Expr::Cmp(op, x, y) => {
            let (x, y) = (i(x), i(y));
            Value::Bool(match op {
                CmpOp::Eq => x == y,
                CmpOp::Ne => x != y,
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Gt => x > y,
                CmpOp::Ge => x >= y,
            })
        }
        Expr::Not(x) => Value::Bool(!b(x)),
        Expr::And(x, y) => Value::Bool(b(x) && b(y)),
        Expr::Or(x, y) => Value::Bool(b(x) || b(y)),
        Expr::If(c, x, y) => plain(if b(c) { x } else { y }, row),
        Expr::Concat(x, y) => Value::Str(format!("{}{}", plain(x, row), plain(y, row))),
        Expr::Attr(a) => panic!("unexpected reference {a}"),
    }
}

fn embedding_case(seed: u64) -> Result<(), String> {
    let mut rng = gen::rng(seed);
    let e = match seed % 3 {
        0 => random_int_expr(&mut rng, 3),
        1 => random_bool_expr(&mut rng, 3),
        _ => Expr::concat(random_int_expr(&mut rng, 2), random_bool_expr(&mut rng, 2)),
    };
    let row: Vec<i64> = (0..3).map(|_| rng.random_range(-5..5)).collect();
    let schema = Schema::new("R", &["x", "y", "z"]).map_err(err)?;
    let tagged: Vec<AnnotatedValue> = row.iter().map(|&v| AnnotatedValue::certain(v)).collect();
    let got = eval_expr(&e.all_certain(), &schema, &tagged).map_err(err)?;
    let want = AnnotatedValue::certain(plain(&e, &row));
    ensure(got == want, || format!("{e}: {got:?} vs {want:?}"))
}

fn weakened_case(seed: u64) -> Result<(), String> {
    let mut rng = gen::rng(seed);
    let kind = [Kind::Ti, Kind::X, Kind::C][(seed % 3) as usize];
    let sr = Semiring::Natural;
    let db = gen::random_db(&mut rng, kind);
    let q = gen::random_query(&mut rng, 3);
    let mut labels = Database::new();
    for (n, m) in db.iter() {
        let full = m.label(&sr).map_err(err)?;
        let drop: Vec<bool> = full.iter().map(|_| rng.random_bool(0.5)).collect();
        let it = std::cell::RefCell::new(drop.into_iter());
        let weak = full
            .map_annotations(
                |k| {
                    Ok(if it.borrow_mut().next().unwrap_or(false) {
                        sr.zero()
                    } else {
                        k.clone()
                    })
                },
                &sr,
            )
            .map_err(err)?;
        labels.insert(n.clone(), weak);
    }
    let ua = make_uadb(&best_guess(&db, &sr)?, &labels).map_err(err)?;
    let cert = h_cert_relation(&eval_ua(&ua, &q).map_err(err)?).map_err(err)?;
    let exact = oracle_certain(&expand_database(&db, &sr, u128::MAX).map_err(err)?, &q).map_err(err)?;
    below(&sr, &cert, &exact).map_err(|e| format!("weakened, seed {seed}, {q}: {e}"))
}

fn properties() -> Check {
    let suites: [(&str, Case); 6] = [
        ("labeling", labeling_case),
        ("weakened labels", weakened_case),
        ("homomorphisms", homomorphism_case),
        ("rewriting", rewriting_case),
        ("embedding", embedding_case),
        ("x-key", |s| xkey_case(s).map(|_| ())),
    ];
    for (name, case) in suites {
        for seed in 0..CASES {
            case(seed).map_err(|e| format!("{name}: {e}"))?;
        }
    }
    let xkeys = (0..CASES).filter(|&s| xkey_case(s).unwrap_or(false)).count();
    ensure(xkeys >= 100, || format!("only {xkeys} x-key cases"))?;
    Ok(format!("6 suites x {CASES} cases, {xkeys} x-key hits"))
}

// ---- experiments

fn fnr() -> Check {
    let report = experiments::run_fnr(&FnrParams::default()).map_err(err)?;
    let summary = report.summary();
    let first = summary.first().ok_or("no widths")?;
    let last = summary.last().ok_or("no widths")?;
    let bad = report.violations();
    ensure(bad.is_empty(), || bad.join("; "))?;
    ensure(last.median <= first.median, || {
        format!("median FNR rose from {:.4} to {:.4}", first.median, last.median)
    })?;
    Ok(format!(
        "median FNR {:.4} at width {} and {:.4} at width {}, {} runs",
        first.median,
        first.width,
        last.median,
        last.width,
        report.runs.len()
    ))
}

fn utility() -> Check {
    let rows = experiments::run_utility(&UtilityParams::default()).map_err(err)?;
    for r in &rows {
        ensure((r.certain_precision - 1.0).abs() <= EXACT, || {
            format!("{}% {}: certain precision {}", r.rate, r.query, r.certain_precision)
        })?;
        ensure(r.guess_recall >= r.certain_recall, || {
            format!(
                "{}% {}: recall {} < {}",
                r.rate, r.query, r.guess_recall, r.certain_recall
            )
        })?;
    }
    let worst = rows.iter().map(|r| r.certain_recall).fold(1.0, f64::min);
    Ok(format!("{} rows, lowest certain recall {worst:.3}", rows.len()))
}

fn access() -> Check {
    let axioms = experiments::access_axioms();
    ensure(axioms.is_empty(), || axioms.join("; "))?;
    let r = experiments::run_access(CASES as usize, 4, 0).map_err(err)?;
    ensure(r.unsound.is_empty(), || r.unsound.join("; "))?;
    Ok(format!("{} trials, {} informative", r.trials, r.informative))
}

fn main() {
    let criteria: [Criterion; 5] = [
        ("1 worked examples", GOLDEN_LIMIT, goldens),
        ("2 property suites", PROPERTY_LIMIT, properties),
        ("3 FNR shape", FNR_LIMIT, fnr),
        ("4 utility", UTILITY_LIMIT, utility),
        ("5 access levels", ACCESS_LIMIT, access),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let started = Instant::now();
        let outcome = check();
        let took = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > limit => Err(format!("{detail}; took {took:.2?} over {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name:<18} {took:>9.2?}  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<18} {took:>9.2?}  {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
