//! Small worked-example databases: address geocoding, neighborhood lookups
//! and the food/preference tables. Used by golden tests and demos.

use std::collections::BTreeMap;

use crate::kdb::{Database, KRelation, Predicate, Query, Schema, Tuple};
use crate::models::{CRow, CTable, Condition, Term, TiDb, UncertainDb, UncertainRelation, Variable, XDb, XTuple};
use crate::semirings::{Element, Semiring};
use crate::tuple;
use crate::uaa::{AnnotatedDb, AnnotatedRelation, AnnotatedValue, Expr, UaaQuery};
use crate::value::{CmpOp, Value};
use crate::worlds::WorldDb;

fn nat(n: u64) -> Element {
    Element::Nat(n)
}

/// Bag `Address` and `Neighborhood` relations.
pub fn address_db() -> Database {
    let addr = KRelation::from_rows(
        Schema::new("Address", &["id", "address", "l"]).expect("schema"),
        Semiring::Natural,
        [
            (tuple![1, "51 Comstock", "L1"], nat(1)),
            (tuple![2, "Grant at Ferguson", "L2"], nat(1)),
            (tuple![3, "499 Woodlawn", "L4"], nat(1)),
        ],
    )
    .expect("relation");
    let nbhd = KRelation::from_rows(
        Schema::new("Neighborhood", &["l", "locale", "state"]).expect("schema"),
        Semiring::Natural,
        [
            (tuple!["L1", "Lasalle", "NY"], nat(1)),
            (tuple!["L2", "Tucson", "AZ"], nat(1)),
            (tuple!["L3", "Greenville", "NY"], nat(1)),
            (tuple!["L4", "Kingsley", "NY"], nat(1)),
            (tuple!["L5", "Kensington", "IL"], nat(1)),
        ],
    )
    .expect("relation");
    [("Address".to_string(), addr), ("Neighborhood".to_string(), nbhd)].into()
}

/// States of all addresses, as a bag.
pub fn state_query() -> Query {
    Query::rel("Address")
        .join(
            Predicate::attrs("Address.l", CmpOp::Eq, "Neighborhood.l"),
            Query::rel("Neighborhood"),
        )
        .project(&["state"])
}

/// Two-world bag database over `LOC(locale, state)`.
pub fn loc_worlds() -> WorldDb {
    let mut db = WorldDb::new(Semiring::Natural, 2).expect("worlds");
    let v = |xs: [u64; 2]| Element::Vector(xs.iter().map(|&x| nat(x)).collect());
    let r = KRelation::from_rows(
        Schema::new("LOC", &["locale", "state"]).expect("schema"),
        db.semiring(),
        [
            (tuple!["Lasalle", "NY"], v([3, 2])),
            (tuple!["Tucson", "AZ"], v([2, 1])),
            (tuple!["Greenville", "IN"], v([0, 5])),
        ],
    )
    .expect("relation");
    db.insert("LOC", r).expect("vector relation");
    db
}

/// Geocoded addresses with ambiguous coordinates for ids 2 and 3. Id 1 sits
/// strictly inside Lasalle so inclusive bounds do not also place it in
/// Kensington; id 2 lists its Tucson reading first.
pub fn geocoded_addresses() -> XDb {
    let alt = |id: i64, addr: &str, lat: f64, lon: f64| {
        Tuple(vec![Value::Int(id), Value::str(addr), Value::dec(lat), Value::dec(lon)])
    };
    XDb::new(
        Schema::new("ADDR", &["id", "address", "lat", "lon"]).expect("schema"),
        vec![
            XTuple::certain(vec![alt(1, "51 Comstock", 42.94, -78.82)]),
            XTuple::certain(vec![
                alt(2, "Grant at Ferguson", 32.25, -110.87),
                alt(2, "Grant at Ferguson", 42.91, -78.89),
            ]),
            XTuple::certain(vec![
                alt(3, "499 Woodlawn", 42.91, -78.84),
                alt(3, "499 Woodlawn", 42.90, -78.85),
            ]),
            XTuple::certain(vec![alt(4, "192 Davidson", 42.93, -78.80)]),
        ],
    )
    .expect("x-DB")
}

/// Bounding rectangles of neighborhoods.
pub fn locales() -> TiDb {
    let rect = |locale: &str, state: &str, r: [f64; 4]| {
        let mut v = vec![Value::str(locale), Value::str(state)];
        v.extend(r.iter().map(|&x| Value::dec(x)));
        Tuple(v)
    };
    TiDb::deterministic(
        Schema::new("LOC", &["locale", "state", "lat1", "lon1", "lat2", "lon2"]).expect("schema"),
        [
            rect("Lasalle", "NY", [42.93, -78.83, 42.95, -78.81]),
            rect("Tucson", "AZ", [31.99, -111.045, 32.32, -110.71]),
            rect("Grant Ferry", "NY", [42.91, -78.91, 42.92, -78.88]),
            rect("Kingsley", "NY", [42.90, -78.85, 42.91, -78.84]),
            rect("Kensington", "NY", [42.93, -78.81, 42.96, -78.78]),
        ],
    )
    .expect("TI-DB")
}

pub fn geocoding_db() -> UncertainDb {
    [
        ("ADDR".to_string(), UncertainRelation::X(geocoded_addresses())),
        ("LOC".to_string(), UncertainRelation::Ti(locales())),
    ]
    .into()
}

/// Maps each address to the neighborhood whose rectangle contains it.
pub fn geocoding_query() -> Query {
    let inside = Predicate::And(vec![
        Predicate::attrs("LOC.lat1", CmpOp::Le, "ADDR.lat"),
        Predicate::attrs("ADDR.lat", CmpOp::Le, "LOC.lat2"),
        Predicate::attrs("LOC.lon1", CmpOp::Le, "ADDR.lon"),
        Predicate::attrs("ADDR.lon", CmpOp::Le, "LOC.lon2"),
    ]);
    Query::rel("ADDR")
        .join(inside, Query::rel("LOC"))
        .project(&["ADDR.id", "LOC.locale", "LOC.state"])
}

/// `(1, X)` if `X = 1` and `(1, 1)` if `X <> 1`, with `X` in `{1, 2}`.
pub fn conditional_pair() -> CTable {
    let x = Term::var("X");
    let one = Term::constant(1);
    CTable::new(
        Schema::new("R", &["a", "b"]).expect("schema"),
        vec![
            CRow::new(
                vec![one.clone(), x.clone()],
                Condition::atom(x.clone(), CmpOp::Eq, one.clone()),
            ),
            CRow::new(vec![one.clone(), one.clone()], Condition::atom(x, CmpOp::Ne, one)),
        ],
        Condition::True,
        BTreeMap::from([("X".to_string(), Variable::over(vec![Value::Int(1), Value::Int(2)]))]),
    )
    .expect("C-table")
}

fn c(v: &str) -> AnnotatedValue {
    AnnotatedValue::certain(v)
}

fn u(v: &str) -> AnnotatedValue {
    AnnotatedValue::uncertain(v)
}

/// Attribute-annotated `food` and `preference`.
pub fn food_db() -> AnnotatedDb {
    use crate::uaa::UaCount;
    let food = AnnotatedRelation::from_rows(
        Schema::new("food", &["name", "color", "category"]).expect("schema"),
        [
            (vec![c("apple"), c("red"), c("fruit")], UaCount::uc(1, 3)),
            (vec![c("carrot"), u("red"), c("vegetable")], UaCount::uc(0, 2)),
            (vec![c("apple"), u("red"), c("fruit")], UaCount::uc(2, 1)),
        ],
    )
    .expect("relation");
    let pref = AnnotatedRelation::from_rows(
        Schema::new("preference", &["group", "pref"]).expect("schema"),
        [
            (vec![c("child"), c("fruit")], UaCount::uc(0, 2)),
            (vec![c("adult"), u("vegetable")], UaCount::uc(1, 1)),
        ],
    )
    .expect("relation");
    [("food".to_string(), food), ("preference".to_string(), pref)].into()
}

pub fn food_join() -> UaaQuery {
    UaaQuery::rel("food").join(
        Expr::eq(Expr::attr("category"), Expr::attr("pref")),
        UaaQuery::rel("preference"),
    )
}

pub fn food_selection() -> UaaQuery {
    food_join().select(Expr::eq(Expr::attr("color"), Expr::val("red")))
}

/// Colors of red food someone prefers.
pub fn food_query() -> UaaQuery {
    food_selection().project(&["color"])
}

/// Food descriptions for string concatenation.
pub fn described_food() -> AnnotatedDb {
    use crate::uaa::UaCount;
    let food = AnnotatedRelation::from_rows(
        Schema::new("food", &["name", "color", "category"]).expect("schema"),
        [
            (vec![c("apple"), c("red"), c("fruit")], UaCount::ONE),
            (vec![c("carrot"), u("red"), c("vegetable")], UaCount::ONE),
            (vec![c("tomato"), u("red"), u("fruit")], UaCount::ONE),
        ],
    )
    .expect("relation");
    [("food".to_string(), food)].into()
}

/// `name` and `color || ' ' || category AS description`.
pub fn description_query() -> UaaQuery {
    let desc = Expr::concat(
        Expr::concat(Expr::attr("color"), Expr::val(" ")),
        Expr::attr("category"),
    );
    UaaQuery::Project(
        vec![(Expr::attr("name"), "name".into()), (desc, "description".into())],
        Box::new(UaaQuery::rel("food")),
    )
}
