#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use uadb_core::{Access, Element, Semiring};

/// 500 cases from a fixed seed so failures reproduce.
pub fn config() -> Config {
    Config {
        cases: 500,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

/// Elements small enough that three-way products stay far from overflow.
pub fn element(sr: &Semiring) -> BoxedStrategy<Element> {
    match sr {
        Semiring::Boolean => any::<bool>().prop_map(Element::Bool).boxed(),
        Semiring::Natural => (0u64..20).prop_map(Element::Nat).boxed(),
        Semiring::Access => proptest::sample::select(Access::ALL.to_vec())
            .prop_map(Element::Access)
            .boxed(),
        Semiring::Vector { base, width } => proptest::collection::vec(element(base), *width)
            .prop_map(Element::Vector)
            .boxed(),
        Semiring::Pair(base) => (element(base), element(base))
            .prop_map(|(d, c)| Element::pair(d, c))
            .boxed(),
    }
}

/// Every element of a finite carrier.
pub fn carrier(sr: &Semiring) -> Vec<Element> {
    match sr {
        Semiring::Boolean => vec![Element::Bool(false), Element::Bool(true)],
        Semiring::Access => Access::ALL.iter().copied().map(Element::Access).collect(),
        other => panic!("{other} is infinite"),
    }
}
