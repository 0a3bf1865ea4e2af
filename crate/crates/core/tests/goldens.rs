//! Worked examples reproduced exactly.

use uadb_core::fixtures::*;
use uadb_core::models::{label_ctable, BgwOptions};
use uadb_core::uaa::{eval_uaa, AnnotatedValue, UaCount};
use uadb_core::uadb::{eval_ua, h_cert_relation, label_database, render_pair};
use uadb_core::worlds::{certain, expand_database, expand_model_to_worlds, oracle_certain, world_budget};
use uadb_core::{eval, tuple, Element, Query, Semiring};

fn t(v: &str) -> AnnotatedValue {
    AnnotatedValue::certain(v)
}

fn f(v: &str) -> AnnotatedValue {
    AnnotatedValue::uncertain(v)
}

#[test]
fn certain_multiplicities_of_two_bag_worlds() {
    let db = loc_worlds();
    let cert = certain(db.relation("LOC").unwrap(), &Semiring::Natural).unwrap();
    assert_eq!(cert.get(&tuple!["Lasalle", "NY"]), Element::Nat(2));
    assert_eq!(cert.get(&tuple!["Tucson", "AZ"]), Element::Nat(1));
    assert_eq!(cert.get(&tuple!["Greenville", "IN"]), Element::Nat(0));
}

#[test]
fn bag_join_counts_states() {
    let out = eval(&address_db(), &state_query()).unwrap();
    assert_eq!(out.len(), 2);
    assert_eq!(out.get(&tuple!["NY"]), Element::Nat(2));
    assert_eq!(out.get(&tuple!["AZ"]), Element::Nat(1));
    assert!(!out.contains(&tuple!["IL"]));
}

#[test]
fn geocoding_labels_and_misclassified_address() {
    let sr = Semiring::Natural;
    let ua = label_database(&geocoding_db(), &sr, &BgwOptions::default(), world_budget()).unwrap();
    let out = eval_ua(&ua, &geocoding_query()).unwrap();
    let shown: Vec<(String, String)> = out.iter().map(|(t, k)| (t.to_string(), render_pair(k))).collect();
    assert_eq!(out.len(), 4, "{shown:?}");

    let expect = [
        (tuple![1, "Lasalle", "NY"], true),
        (tuple![2, "Tucson", "AZ"], false),
        (tuple![3, "Kingsley", "NY"], false),
        (tuple![4, "Kensington", "NY"], true),
    ];
    let cert = h_cert_relation(&out).unwrap();
    for (row, labeled) in &expect {
        assert!(out.contains(row), "missing {row}");
        assert_eq!(cert.get(row) == Element::Nat(1), *labeled, "{row}");
    }

    // Id 3 lies in Kingsley under both readings, so it is certain after all.
    let worlds = expand_database(&geocoding_db(), &sr, world_budget()).unwrap();
    let oracle = oracle_certain(&worlds, &geocoding_query()).unwrap();
    assert_eq!(oracle.get(&tuple![3, "Kingsley", "NY"]), Element::Nat(1));
    assert_eq!(oracle.get(&tuple![2, "Tucson", "AZ"]), Element::Nat(0));
    assert_eq!(oracle.len(), 3);
}

#[test]
fn food_pipeline_intermediates() {
    let db = food_db();
    let j = eval_uaa(&db, &food_join()).unwrap();
    assert_eq!(j.len(), 3);
    assert_eq!(
        j.get(&[t("apple"), t("red"), t("fruit"), t("child"), t("fruit")]),
        UaCount::uc(2, 6)
    );
    assert_eq!(
        j.get(&[t("carrot"), f("red"), t("vegetable"), t("adult"), f("vegetable")]),
        UaCount::uc(4, 0)
    );
    assert_eq!(
        j.get(&[t("apple"), f("red"), t("fruit"), t("child"), t("fruit")]),
        UaCount::uc(4, 2)
    );

    let s = eval_uaa(&db, &food_selection()).unwrap();
    assert_eq!(s.len(), 3);
    assert_eq!(
        s.get(&[t("apple"), f("red"), t("fruit"), t("child"), t("fruit")]),
        UaCount::uc(6, 0)
    );
    assert_eq!(
        s.get(&[t("apple"), t("red"), t("fruit"), t("child"), t("fruit")]),
        UaCount::uc(2, 6)
    );

    let out = eval_uaa(&db, &food_query()).unwrap();
    assert_eq!(out.len(), 2);
    assert_eq!(out.get(&[t("red")]), UaCount::uc(2, 6));
    assert_eq!(out.get(&[f("red")]), UaCount::uc(10, 0));
}

#[test]
fn concatenated_descriptions() {
    let out = eval_uaa(&described_food(), &description_query()).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!(out.get(&[t("apple"), t("red fruit")]), UaCount::ONE);
    assert_eq!(out.get(&[t("carrot"), f("red vegetable")]), UaCount::ONE);
    assert_eq!(out.get(&[t("tomato"), f("red fruit")]), UaCount::ONE);
}

#[test]
fn conditional_table_is_sound_but_incomplete() {
    let db = conditional_pair();
    let labels = label_ctable(&db, &Semiring::Boolean).unwrap();
    assert!(!labels.contains(&tuple![1, 1]));

    let m = uadb_core::models::UncertainRelation::C(db);
    let worlds = expand_model_to_worlds("R", &m, &Semiring::Boolean, world_budget()).unwrap();
    assert_eq!(worlds.world_count, 2);
    let oracle = oracle_certain(&worlds, &Query::rel("R")).unwrap();
    assert_eq!(oracle.get(&tuple![1, 1]), Element::Bool(true));
}
