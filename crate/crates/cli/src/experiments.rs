//! Desk-scale experiments: incompleteness of labels under projection,
//! usefulness of best-guess answers, and the access-control semiring.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use serde_json::{json, Value as Json};
use uadb_core::gen::{self, synthetic_xdb};
use uadb_core::kdb::{AttrRef, Predicate};
use uadb_core::models::{BgwOptions, UncertainDb, UncertainRelation, XDb, XTuple};
use uadb_core::uadb::{eval_ua, h_cert_relation, h_det_relation, is_xkey, label_database, make_uadb, UaDb};
use uadb_core::worlds::{certain, oracle_certain};
use uadb_core::{eval, Access, CmpOp, Database, Element, KRelation, Query, Result, Schema, Semiring, Tuple, Value};

use crate::metrics::{precision_recall, MetricsReport};
use crate::render::table;

/// Linear interpolation between closest ranks.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Exact certain answers of `π_cols` over a single x-DB under set
/// semantics. A projected tuple is in every world exactly when some
/// non-optional x-tuple projects all of its alternatives onto it: otherwise
/// each x-tuple can pick an alternative that avoids it, independently.
pub fn projection_certain(x: &XDb, cols: &[usize]) -> Result<KRelation> {
    let names: Vec<String> = cols.iter().map(|&c| x.schema.attrs[c].name.clone()).collect();
    let mut out = KRelation::new(Schema::new(x.schema.name.clone(), &names)?, Semiring::Boolean);
    let proj = |t: &Tuple| Tuple(cols.iter().map(|&c| t.values()[c].clone()).collect());
    for xt in x.xtuples.iter().filter(|xt| !xt.optional) {
        let first = proj(&xt.alternatives[0]);
        if xt.alternatives.iter().all(|a| proj(a) == first) {
            out.set(first, Element::Bool(true))?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct FnrParams {
    pub rows: usize,
    pub cols: usize,
    pub rate: f64,
    pub queries: usize,
    pub seed: u64,
}

impl Default for FnrParams {
    fn default() -> FnrParams {
        FnrParams {
            rows: 1000,
            cols: 8,
            rate: 0.1,
            queries: 9,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FnrRun {
    pub width: usize,
    pub columns: Vec<usize>,
    /// The kept columns form an x-key, so no false negatives are allowed.
    pub xkey: bool,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug)]
pub struct FnrReport {
    pub params: FnrParams,
    pub runs: Vec<FnrRun>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WidthSummary {
    pub width: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub xkey_runs: usize,
    pub max_fpr: f64,
}

pub fn run_fnr(p: &FnrParams) -> Result<FnrReport> {
    let x = synthetic_xdb(p.rows, p.cols, p.rate, p.seed);
    let db: UncertainDb = [("R".to_string(), UncertainRelation::X(x.clone()))].into();
    let sr = Semiring::Boolean;
    let started = Instant::now();
    let ua = label_database(&db, &sr, &BgwOptions::default(), u128::MAX)?;
    let label_time = started.elapsed();
    let mut rng = gen::rng(p.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut runs = Vec::new();
    for width in 1..=p.cols {
        for _ in 0..p.queries {
            let mut columns = sample(&mut rng, p.cols, width).into_vec();
            columns.sort_unstable();
            let attrs: Vec<AttrRef> = columns.iter().copied().map(AttrRef::Position).collect();
            let q = Query::Project(attrs.clone(), Box::new(Query::rel("R")));

            let started = Instant::now();
            let out = eval_ua(&ua, &q)?;
            let labels = h_cert_relation(&out)?;
            let query_time = started.elapsed();

            let started = Instant::now();
            let exact = projection_certain(&x, &columns)?;
            let oracle_time = started.elapsed();

            let mut metrics = MetricsReport::compare(&labels, &exact, &sr, out.len())?;
            metrics.label_time = label_time + query_time;
            metrics.oracle_time = oracle_time;
            runs.push(FnrRun {
                width,
                xkey: is_xkey(&x, &attrs)?,
                columns,
                metrics,
            });
        }
    }
    Ok(FnrReport {
        params: p.clone(),
        runs,
    })
}

impl FnrReport {
    pub fn summary(&self) -> Vec<WidthSummary> {
        (1..=self.params.cols)
            .map(|width| {
                let runs: Vec<&FnrRun> = self.runs.iter().filter(|r| r.width == width).collect();
                let mut fnr: Vec<f64> = runs.iter().map(|r| r.metrics.false_negative_rate).collect();
                fnr.sort_by(f64::total_cmp);
                WidthSummary {
                    width,
                    q1: quantile(&fnr, 0.25),
                    median: quantile(&fnr, 0.5),
                    q3: quantile(&fnr, 0.75),
                    xkey_runs: runs.iter().filter(|r| r.xkey).count(),
                    max_fpr: runs.iter().map(|r| r.metrics.false_positive_rate).fold(0.0, f64::max),
                }
            })
            .collect()
    }

    /// Broken guarantees: nonzero FPR anywhere, or a false negative on a
    /// projection that keeps an x-key.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.runs {
            if r.metrics.false_positive_rate > 0.0 {
                out.push(format!(
                    "FPR {} on columns {:?}",
                    r.metrics.false_positive_rate, r.columns
                ));
            }
            if r.xkey && r.metrics.false_negatives > 0 {
                out.push(format!("false negatives on x-key columns {:?}", r.columns));
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let header: Vec<String> = ["width", "q1", "median", "q3", "x-key runs", "max FPR"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<Vec<String>> = self
            .summary()
            .iter()
            .map(|s| {
                vec![
                    s.width.to_string(),
                    format!("{:.4}", s.q1),
                    format!("{:.4}", s.median),
                    format!("{:.4}", s.q3),
                    s.xkey_runs.to_string(),
                    format!("{:.4}", s.max_fpr),
                ]
            })
            .collect();
        table(&header, &rows)
    }

    /// One line per run.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("width,columns,xkey,fnr,fpr,oracle_certain,labeled_certain\n");
        for r in &self.runs {
            let cols: Vec<String> = r.columns.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.width,
                cols.join(" "),
                r.xkey,
                r.metrics.false_negative_rate,
                r.metrics.false_positive_rate,
                r.metrics.oracle_certain,
                r.metrics.labeled_certain
            ));
        }
        out
    }

    pub fn to_json(&self) -> Json {
        json!({
            "rows": self.params.rows,
            "cols": self.params.cols,
            "rate": self.params.rate,
            "seed": self.params.seed,
            "widths": self.summary().iter().map(|s| json!({
                "width": s.width, "q1": s.q1, "median": s.median, "q3": s.q3,
                "xkey_runs": s.xkey_runs, "max_fpr": s.max_fpr,
            })).collect::<Vec<_>>(),
            "runs": self.runs.iter().map(|r| json!({
                "width": r.width, "columns": r.columns, "xkey": r.xkey, "metrics": r.metrics.to_json(),
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct UtilityParams {
    pub rows: usize,
    /// Percent of rows whose value is replaced by a set of alternatives.
    pub rates: Vec<u32>,
    pub seed: u64,
}

impl Default for UtilityParams {
    fn default() -> UtilityParams {
        UtilityParams {
            rows: 500,
            rates: vec![10, 30, 50],
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UtilityRow {
    pub rate: u32,
    pub query: String,
    pub truth: usize,
    pub certain_answers: usize,
    pub guess_answers: usize,
    pub certain_precision: f64,
    pub certain_recall: f64,
    pub guess_precision: f64,
    pub guess_recall: f64,
}

const CITIES: usize = 12;
const CATEGORIES: usize = 4;

fn city(i: usize) -> Value {
    Value::str(format!("city{i:02}"))
}

fn category(i: usize) -> Value {
    Value::str(format!("k{i}"))
}

/// `(id, city, category, price)` rows.
pub fn ground_truth(rows: usize, rng: &mut impl Rng) -> Vec<Tuple> {
    (0..rows)
        .map(|id| {
            Tuple(vec![
                Value::Int(id as i64),
                city(rng.random_range(0..CITIES)),
                category(rng.random_range(0..CATEGORIES)),
                Value::Int(rng.random_range(0..100)),
            ])
        })
        .collect()
}

fn utility_schema() -> Schema {
    Schema::new("R", &["id", "city", "category", "price"]).expect("schema")
}

/// Hides the true value of `rate`% of the rows among one or two wrong
/// readings. Probabilities are random, so the truth is often not the most
/// likely reading.
pub fn corrupt(truth: &[Tuple], rate: u32, rng: &mut impl Rng) -> Result<XDb> {
    let xtuples = truth
        .iter()
        .map(|t| {
            if rng.random_range(0..100) >= rate {
                return XTuple::with_probabilities(vec![t.clone()], vec![1.0]);
            }
            let mut alts = vec![t.clone()];
            let wanted = rng.random_range(2..=3);
            while alts.len() < wanted {
                let mut v = t.values().to_vec();
                match rng.random_range(0..3) {
                    0 => v[1] = city(rng.random_range(0..CITIES)),
                    1 => v[2] = category(rng.random_range(0..CATEGORIES)),
                    _ => v[3] = Value::Int(rng.random_range(0..100)),
                }
                let v = Tuple(v);
                if !alts.contains(&v) {
                    alts.push(v);
                }
            }
            let weights: Vec<f64> = alts.iter().map(|_| rng.random_range(1..=4) as f64).collect();
            let total: f64 = weights.iter().sum();
            let mut order: Vec<usize> = (0..alts.len()).collect();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
            XTuple::with_probabilities(
                order.iter().map(|&i| alts[i].clone()).collect(),
                order.iter().map(|&i| weights[i] / total).collect(),
            )
        })
        .collect();
    XDb::new(utility_schema(), xtuples)
}

pub fn utility_queries() -> Vec<(&'static str, Query)> {
    vec![
        (
            "price >= 50",
            Query::rel("R").select(Predicate::cmp("price", CmpOp::Ge, 50i64)),
        ),
        (
            "cities of k0",
            Query::rel("R")
                .select(Predicate::cmp("category", CmpOp::Eq, "k0"))
                .project(&["city"]),
        ),
        ("city and category", Query::rel("R").project(&["city", "category"])),
    ]
}

fn support(r: &KRelation) -> BTreeSet<Tuple> {
    r.tuples().cloned().collect()
}

pub fn run_utility(p: &UtilityParams) -> Result<Vec<UtilityRow>> {
    let mut rng = gen::rng(p.seed);
    let truth = ground_truth(p.rows, &mut rng);
    let truth_db: Database = [(
        "R".to_string(),
        KRelation::from_rows(
            utility_schema(),
            Semiring::Boolean,
            truth.iter().map(|t| (t.clone(), Element::Bool(true))),
        )?,
    )]
    .into();
    let sr = Semiring::Boolean;
    let mut out = Vec::new();
    for &rate in &p.rates {
        let x = corrupt(&truth, rate, &mut rng)?;
        let db: UncertainDb = [("R".to_string(), UncertainRelation::X(x))].into();
        let ua = label_database(&db, &sr, &BgwOptions::default(), u128::MAX)?;
        for (name, q) in utility_queries() {
            let answer = eval_ua(&ua, &q)?;
            let sure = support(&h_cert_relation(&answer)?);
            let guess = support(&h_det_relation(&answer)?);
            let expected = support(&eval(&truth_db, &q)?);
            let (cp, cr) = precision_recall(&sure, &expected);
            let (gp, gr) = precision_recall(&guess, &expected);
            out.push(UtilityRow {
                rate,
                query: name.to_string(),
                truth: expected.len(),
                certain_answers: sure.len(),
                guess_answers: guess.len(),
                certain_precision: cp,
                certain_recall: cr,
                guess_precision: gp,
                guess_recall: gr,
            });
        }
    }
    Ok(out)
}

/// Rows where certain answers are imprecise or recall more than the guess.
pub fn utility_violations(rows: &[UtilityRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| r.certain_precision != 1.0 || r.guess_recall < r.certain_recall)
        .map(|r| format!("{}% {}: {:?}", r.rate, r.query, r))
        .collect()
}

pub fn utility_table(rows: &[UtilityRow]) -> String {
    let header: Vec<String> = [
        "rate", "query", "truth", "certain", "guess", "cert P", "cert R", "guess P", "guess R",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                format!("{}%", r.rate),
                r.query.clone(),
                r.truth.to_string(),
                r.certain_answers.to_string(),
                r.guess_answers.to_string(),
                format!("{:.3}", r.certain_precision),
                format!("{:.3}", r.certain_recall),
                format!("{:.3}", r.guess_precision),
                format!("{:.3}", r.guess_recall),
            ]
        })
        .collect();
    table(&header, &body)
}

pub fn utility_csv(rows: &[UtilityRow]) -> String {
    let mut out = String::from(
        "rate,query,truth,certain_answers,guess_answers,certain_precision,certain_recall,guess_precision,guess_recall\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.rate,
            r.query,
            r.truth,
            r.certain_answers,
            r.guess_answers,
            r.certain_precision,
            r.certain_recall,
            r.guess_precision,
            r.guess_recall
        ));
    }
    out
}

pub fn utility_json(rows: &[UtilityRow]) -> Json {
    Json::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "rate": r.rate, "query": r.query, "truth": r.truth,
                    "certain_answers": r.certain_answers, "guess_answers": r.guess_answers,
                    "certain_precision": r.certain_precision, "certain_recall": r.certain_recall,
                    "guess_precision": r.guess_precision, "guess_recall": r.guess_recall,
                })
            })
            .collect(),
    )
}

/// Semiring and lattice laws checked on every triple of access levels.
pub fn access_axioms() -> Vec<String> {
    let sr = Semiring::Access;
    let all: Vec<Element> = Access::ALL.iter().copied().map(Element::Access).collect();
    let (zero, one) = (sr.zero(), sr.one());
    let mut bad = Vec::new();
    let op = |r: Result<Element>| r.expect("access levels are closed");
    for a in &all {
        for b in &all {
            for c in &all {
                let add = |x: &Element, y: &Element| op(sr.add(x, y));
                let mul = |x: &Element, y: &Element| op(sr.mul(x, y));
                let glb = |x: &Element, y: &Element| op(sr.glb(x, y));
                let lub = |x: &Element, y: &Element| op(sr.lub(x, y));
                let laws = [
                    ("+ associative", add(&add(a, b), c) == add(a, &add(b, c))),
                    ("+ commutative", add(a, b) == add(b, a)),
                    ("0 neutral", add(a, &zero) == *a),
                    ("* associative", mul(&mul(a, b), c) == mul(a, &mul(b, c))),
                    ("* commutative", mul(a, b) == mul(b, a)),
                    ("1 neutral", mul(a, &one) == *a),
                    ("distributive", mul(a, &add(b, c)) == add(&mul(a, b), &mul(a, c))),
                    ("0 annihilates", mul(a, &zero) == zero),
                    ("absorbs glb", lub(a, &glb(a, b)) == *a),
                    ("absorbs lub", glb(a, &lub(a, b)) == *a),
                    ("glb associative", glb(&glb(a, b), c) == glb(a, &glb(b, c))),
                    ("lub associative", lub(&lub(a, b), c) == lub(a, &lub(b, c))),
                    ("order is glb", sr.leq(a, b).expect("comparable") == (glb(a, b) == *a)),
                ];
                bad.extend(
                    laws.iter()
                        .filter(|(_, ok)| !ok)
                        .map(|(law, _)| format!("{law} fails for {a}, {b}, {c}")),
                );
            }
        }
    }
    bad
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AccessReport {
    pub axiom_violations: Vec<String>,
    pub trials: usize,
    /// Trials with at least one certain answer.
    pub informative: usize,
    pub unsound: Vec<String>,
}

/// Exact labels of random access-annotated databases pushed through
/// random projections stay below the certain access level.
pub fn run_access(trials: usize, worlds: usize, seed: u64) -> Result<AccessReport> {
    let sr = Semiring::Access;
    let mut report = AccessReport {
        axiom_violations: access_axioms(),
        trials,
        ..AccessReport::default()
    };
    for i in 0..trials as u64 {
        let mut rng = gen::rng(seed.wrapping_add(i));
        let wdb = gen::random_access_worlds(&mut rng, worlds.max(1));
        let q = Query::Project(vec![AttrRef::Position(0)], Box::new(gen::random_query(&mut rng, 2)));
        let guess = wdb.world(1)?;
        let labels: Database = wdb
            .relations
            .iter()
            .map(|(n, r)| Ok((n.clone(), certain(r, &sr)?)))
            .collect::<Result<_>>()?;
        let ua: UaDb = make_uadb(&guess, &labels)?;
        let out = eval_ua(&ua, &q)?;
        let exact = oracle_certain(&wdb, &q)?;
        let cert = h_cert_relation(&out)?;
        if !cert.is_empty() {
            report.informative += 1;
        }
        for (t, k) in cert.iter() {
            if !sr.leq(k, &exact.get(t))? {
                report
                    .unsound
                    .push(format!("{q}: {t} labeled {k}, certain {}", exact.get(t)));
            }
        }
        if !h_det_relation(&out)?.same_content(&eval(&guess, &q)?) {
            report.unsound.push(format!("{q}: best guess differs"));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use uadb_core::worlds::expand_model_to_worlds;

    #[test]
    fn quartiles_interpolate() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 2.0);
        assert_eq!(quantile(&xs, 0.25), 1.0);
        assert_eq!(quantile(&[0.0, 1.0], 0.5), 0.5);
        assert_eq!(quantile(&[], 0.5), 0.0);
    }

    #[test]
    fn projection_shortcut_matches_enumeration() {
        for seed in 0..300 {
            let mut rng = gen::rng(seed);
            let x = gen::random_xdb(&mut rng, "R", 3, false);
            let width = rng.random_range(1..=3);
            let cols = sample(&mut rng, 3, width).into_vec();
            let q = Query::Project(
                cols.iter().copied().map(AttrRef::Position).collect(),
                Box::new(Query::rel("R")),
            );
            let worlds =
                expand_model_to_worlds("R", &UncertainRelation::X(x.clone()), &Semiring::Boolean, u128::MAX).unwrap();
            let exact = oracle_certain(&worlds, &q).unwrap();
            let fast = projection_certain(&x, &cols).unwrap();
            assert!(fast.same_content(&exact), "seed {seed}: {fast:?} vs {exact:?}");
        }
    }

    #[test]
    fn no_uncertainty_means_no_false_negatives() {
        let report = run_fnr(&FnrParams {
            rows: 200,
            rate: 0.0,
            queries: 3,
            ..FnrParams::default()
        })
        .unwrap();
        assert!(report.runs.iter().all(|r| r.metrics.false_negative_rate == 0.0));
    }

    #[test]
    fn uncorrupted_data_is_answered_perfectly() {
        let rows = run_utility(&UtilityParams {
            rows: 100,
            rates: vec![0],
            seed: 3,
        })
        .unwrap();
        for r in rows {
            assert_eq!(
                (r.certain_precision, r.certain_recall, r.guess_precision, r.guess_recall),
                (1.0, 1.0, 1.0, 1.0)
            );
        }
    }

    #[test]
    fn access_levels_obey_the_laws() {
        assert!(access_axioms().is_empty());
        let r = run_access(50, 3, 1).unwrap();
        assert!(r.unsound.is_empty(), "{:?}", r.unsound);
    }
}
