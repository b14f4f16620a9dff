mod common;

use common::*;
use pep_core::lattice::{for_each_in_cube, Coset};
use pep_core::pep::{union, PepVector};
use pep_core::reduction::{multiplicative_relations, pep_rank, reduced_decomposition, stabilizer};
use proptest::prelude::*;

fn radius_for(f: &PepVector) -> i64 {
    if f.variables() >= 3 {
        4
    } else {
        6
    }
}

#[test]
fn decomposition_partitions_and_reproduces_values() {
    for (name, f) in fixtures() {
        let d = reduced_decomposition(&f).unwrap();
        for_each_in_cube(f.variables(), radius_for(&f), |n| {
            let owners: Vec<_> = d.pieces.iter().filter(|p| p.coset.contains_i64(n)).collect();
            assert_eq!(owners.len(), 1, "{name}: {n:?} lies in {} pieces", owners.len());
            let m = owners[0].project(n).unwrap();
            assert_eq!(owners[0].pep.evaluate(&m).unwrap(), f.evaluate(n).unwrap(), "{name} at {n:?}");
        });
    }
}

#[test]
fn stabilizer_is_invariant_and_maximal() {
    for (name, f) in fixtures() {
        let r = f.variables();
        let s = stabilizer(&f, &Coset::full(r)).unwrap();
        let check = if r >= 3 { 3 } else { 5 };
        for_each_in_cube(r, 3, |k| {
            let invariant = {
                let mut ok = true;
                for_each_in_cube(r, check, |n| {
                    if ok {
                        let shifted: Vec<i64> = n.iter().zip(k).map(|(a, b)| a + b).collect();
                        ok = f.evaluate(&shifted).unwrap() == f.evaluate(n).unwrap();
                    }
                });
                ok
            };
            assert_eq!(s.contains_i64(k), invariant, "{name}: shift {k:?}");
        });
    }
}

#[test]
fn relation_examples() {
    assert!(multiplicative_relations(&[int(2), int(3)]).unwrap().is_trivial());
    let r = multiplicative_relations(&[int(2), int(4)]).unwrap();
    assert_eq!(r.lattice.rank(), 1);
    assert!(r.lattice.contains_i64(&[2, -1]));
    let k = pep_core::places::Field::quadratic(2).unwrap();
    let u = &pep_core::places::FieldElement::one(k) + &pep_core::places::FieldElement::sqrt_d(k);
    let r = multiplicative_relations(&[u.clone(), &u * &u]).unwrap();
    assert_eq!(r.lattice.rank(), 1);
    assert!(r.lattice.contains_i64(&[2, -1]));
}

#[test]
fn relations_are_exactly_the_torsion_exponents() {
    let bases = [int(-2), int(4), frac(1, 2), int(3), int(-6)];
    let rel = multiplicative_relations(&bases).unwrap();
    for_each_in_cube(bases.len(), 2, |e| {
        let x = pep_core::pep::power_product(&bases, &big(e)).unwrap();
        let torsion = pep_core::places::torsion_order(&x).is_some();
        assert_eq!(rel.lattice.contains_i64(e), torsion, "exponent {e:?}");
    });
}

#[test]
fn union_rank_is_the_larger_rank() {
    let two_three = scalar(&[2, 3], 2, vec![(1, vec![vec![1, 0], vec![0, 1]])]);
    let pairs = [(powers(2), two_three), (collapsing(), powers(3)), (alternating(), sign_plus_two())];
    for (a, b) in pairs {
        let (ra, rb) = (pep_rank(&a).unwrap(), pep_rank(&b).unwrap());
        assert_eq!(pep_rank(&union(&a, &b).unwrap()).unwrap(), ra.max(rb));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn rank_is_invariant_under_unimodular_change(
        which in 0usize..8,
        ops in prop::collection::vec((0usize..3, 0usize..3, -2i64..=2), 0..4),
        flips in prop::collection::vec(any::<bool>(), 3),
    ) {
        let (_, f) = &fixtures()[which];
        let u = unimodular(f.variables(), &ops, &flips);
        let g = precompose(f, &u);
        for_each_in_cube(f.variables(), 2, |n| {
            assert_eq!(g.evaluate(n).unwrap(), f.evaluate(&apply(&u, n)).unwrap());
        });
        prop_assert_eq!(pep_rank(&g).unwrap(), pep_rank(f).unwrap());
    }
}
