mod common;

use proptest::prelude::*;
use uadb_core::semirings::glb_fold;
use uadb_core::{Element, Semiring};

fn semirings() -> Vec<Semiring> {
    let n = Semiring::Natural;
    vec![
        Semiring::Boolean,
        n.clone(),
        Semiring::Access,
        Semiring::vector(n.clone(), 3),
        Semiring::vector(Semiring::Boolean, 4),
        Semiring::pair(n),
        Semiring::pair(Semiring::Boolean),
        Semiring::pair(Semiring::Access),
    ]
}

fn axioms(sr: &Semiring, a: &Element, b: &Element, c: &Element) -> Result<(), String> {
    let (zero, one) = (sr.zero(), sr.one());
    let add = |x: &Element, y: &Element| sr.add(x, y).unwrap();
    let mul = |x: &Element, y: &Element| sr.mul(x, y).unwrap();
    let checks = [
        ("add assoc", add(&add(a, b), c) == add(a, &add(b, c))),
        ("add comm", add(a, b) == add(b, a)),
        ("add zero", add(a, &zero) == *a),
        ("mul assoc", mul(&mul(a, b), c) == mul(a, &mul(b, c))),
        ("mul comm", mul(a, b) == mul(b, a)),
        ("mul one", mul(a, &one) == *a),
        ("distributes", mul(a, &add(b, c)) == add(&mul(a, b), &mul(a, c))),
        ("zero annihilates", mul(a, &zero) == zero),
    ];
    match checks.iter().find(|(_, ok)| !ok) {
        Some((law, _)) => Err(format!("{law} fails in {sr} for {a}, {b}, {c}")),
        None => Ok(()),
    }
}

#[test]
fn finite_carriers_exhaustively() {
    for sr in [Semiring::Boolean, Semiring::Access] {
        let all = common::carrier(&sr);
        for a in &all {
            for b in &all {
                for c in &all {
                    axioms(&sr, a, b, c).unwrap();
                }
                let (meet, join) = (sr.glb(a, b).unwrap(), sr.lub(a, b).unwrap());
                assert_eq!(sr.lub(a, &meet).unwrap(), *a);
                assert_eq!(sr.glb(a, &join).unwrap(), *a);
                assert_eq!(sr.leq(a, b).unwrap(), meet == *a);
            }
        }
    }
}

fn triple(sr: Semiring) -> impl Strategy<Value = (Semiring, Element, Element, Element)> {
    let e = common::element(&sr);
    (Just(sr), e.clone(), e.clone(), e)
}

fn any_triple() -> impl Strategy<Value = (Semiring, Element, Element, Element)> {
    proptest::sample::select(semirings()).prop_flat_map(triple)
}

proptest! {
    #![proptest_config(common::config())]

    #[test]
    fn semiring_axioms((sr, a, b, c) in any_triple()) {
        prop_assert!(axioms(&sr, &a, &b, &c).is_ok(), "{:?}", axioms(&sr, &a, &b, &c));
    }

    #[test]
    fn absorption((sr, a, b, _c) in any_triple()) {
        prop_assert_eq!(sr.lub(&a, &sr.glb(&a, &b).unwrap()).unwrap(), a.clone());
        prop_assert_eq!(sr.glb(&a, &sr.lub(&a, &b).unwrap()).unwrap(), a);
    }

    /// k1 ≼ k3 and k2 ≼ k4 give k1+k2 ≼ k3+k4 and k1*k2 ≼ k3*k4.
    #[test]
    fn order_factors_through_operations((sr, a, b, c) in any_triple(), d in any::<u64>()) {
        let k1 = sr.glb(&a, &c).unwrap();
        let k3 = a;
        let k4 = b;
        let k2 = if d % 2 == 0 { sr.glb(&k4, &c).unwrap() } else { sr.zero() };
        prop_assert!(sr.leq(&k1, &k3).unwrap() && sr.leq(&k2, &k4).unwrap());
        prop_assert!(sr.leq(&sr.add(&k1, &k2).unwrap(), &sr.add(&k3, &k4).unwrap()).unwrap());
        prop_assert!(sr.leq(&sr.mul(&k1, &k2).unwrap(), &sr.mul(&k3, &k4).unwrap()).unwrap());
    }

    /// glb over worlds is superadditive and supermultiplicative.
    #[test]
    fn certain_annotation_bounds((base, v, x, y) in world_vectors()) {
        let glb = |k: &Element| glb_fold(&base, k.as_vector().unwrap()).unwrap();
        let sum = base.add(&glb(&x), &glb(&y)).unwrap();
        prop_assert!(base.leq(&sum, &glb(&v.add(&x, &y).unwrap())).unwrap());
        let prod = base.mul(&glb(&x), &glb(&y)).unwrap();
        prop_assert!(base.leq(&prod, &glb(&v.mul(&x, &y).unwrap())).unwrap());
    }
}

fn world_vectors() -> impl Strategy<Value = (Semiring, Semiring, Element, Element)> {
    let bases = vec![Semiring::Natural, Semiring::Boolean, Semiring::Access];
    (proptest::sample::select(bases), 1usize..5).prop_flat_map(|(base, width)| {
        let v = Semiring::vector(base.clone(), width);
        let e = common::element(&v);
        (Just(base), Just(v), e.clone(), e)
    })
}
