mod common;

use std::collections::BTreeSet;

use common::*;
use pep_core::counting::enumerate_image;
use pep_core::lattice::{for_each_in_cube, Coset, Lattice};
use pep_core::pep::{canonicalize, degeneracy_type, is_identically_zero, pad_with_independent_base, restrict_to_coset, union, PepVector};
use pep_core::places::{Field, FieldElement};
use pep_core::reduction::is_reduced;
use proptest::prelude::*;

fn image(f: &PepVector, radius: i64) -> BTreeSet<Vec<FieldElement>> {
    enumerate_image(f, radius).unwrap().fibers.into_keys().collect()
}

fn subset_sums_vanish(values: &[FieldElement], idx: &[usize]) -> bool {
    let field = values[0].field();
    (1u32..(1 << idx.len())).any(|mask| {
        let mut s = FieldElement::zero(field);
        for (b, &i) in idx.iter().enumerate() {
            if mask & (1 << b) != 0 {
                s = &s + &values[i];
            }
        }
        s.is_zero()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn canonicalize_is_idempotent_and_preserves_values(which in 0usize..8, n in prop::collection::vec(-8i64..=8, 3)) {
        let (_, f) = &fixtures()[which];
        let g = canonicalize(f).unwrap();
        prop_assert_eq!(canonicalize(&g).unwrap(), g.clone());
        let n = &n[..f.variables()];
        prop_assert_eq!(f.evaluate(n).unwrap(), g.evaluate(n).unwrap());
    }

    #[test]
    fn degeneracy_split_is_honest(which in 0usize..8, n in prop::collection::vec(-6i64..=6, 3)) {
        let (_, f) = &fixtures()[which];
        let n = &n[..f.variables()];
        let g = canonicalize(f).unwrap();
        let values = g.term_values(n).unwrap();
        let t = degeneracy_type(f, n).unwrap();
        for (vals, split) in values.iter().zip(&t.components) {
            let mut all: Vec<usize> = split.nondegenerate.iter().chain(&split.vanishing).copied().collect();
            all.sort();
            prop_assert_eq!(all, (0..vals.len()).collect::<Vec<_>>());
            let mut sum = FieldElement::zero(g.field());
            for &i in &split.vanishing {
                sum = &sum + &vals[i];
            }
            prop_assert!(sum.is_zero());
            if !split.nondegenerate.is_empty() {
                prop_assert!(!subset_sums_vanish(vals, &split.nondegenerate));
            }
        }
    }
}

#[test]
fn union_image_is_the_union_of_images() {
    let radius = 4;
    let pairs = [(powers(2), powers(3)), (alternating(), powers(5)), (powers(2), powers(2))];
    for (f1, f2) in pairs {
        let u = union(&f1, &f2).unwrap();
        let mut expect = image(&f1, radius);
        expect.extend(image(&f2, radius));
        assert_eq!(image(&u, radius), expect);
    }
    let c1 = scalar(&[2], 1, vec![(1, vec![vec![0]])]);
    let c2 = scalar(&[2], 1, vec![(2, vec![vec![0]])]);
    let u = union(&c1, &c2).unwrap();
    assert_eq!(image(&u, 2), [vec![int(1)], vec![int(2)]].into_iter().collect());
}

#[test]
fn symbolic_zero_agrees_with_evaluation() {
    let odd = Coset::from_i64(&[1], Lattice::scaled_full(1, 2));
    let even = Coset::from_i64(&[0], Lattice::scaled_full(1, 2));
    let cases = vec![
        (restrict_to_coset(&alternating(), &odd).unwrap(), true),
        (restrict_to_coset(&alternating(), &even).unwrap(), false),
        (scalar(&[2], 1, vec![(1, vec![vec![1]]), (-1, vec![vec![1]])]), true),
        (scalar(&[2, 3], 1, vec![(1, vec![vec![1], vec![0]]), (-1, vec![vec![0], vec![1]])]), false),
        (alternating(), false),
        (pair_cancel(), false),
    ];
    for (f, zero) in cases {
        assert_eq!(is_identically_zero(&f).unwrap(), zero);
        let r = f.variables();
        let mut all_zero = true;
        for_each_in_cube(r, 3 * r as i64 + 1, |n| {
            all_zero &= f.evaluate(n).unwrap().iter().all(|x| x.is_zero());
        });
        assert_eq!(all_zero, zero);
    }
}

#[test]
fn restriction_to_even_numbers() {
    let even = Coset::from_i64(&[0], Lattice::scaled_full(1, 2));
    let g = restrict_to_coset(&alternating(), &even).unwrap();
    for m in 0..5i64 {
        assert_eq!(g.evaluate(&[m]).unwrap(), alternating().evaluate(&[2 * m]).unwrap());
        assert_eq!(g.evaluate(&[m]).unwrap(), vec![int(2 * 4i64.pow(m as u32))]);
    }
}

#[test]
fn omega_example_value() {
    let f = omega_pair();
    let k = f.field();
    assert_eq!(f.evaluate(&[0, 1, 0]).unwrap(), vec![FieldElement::from_int(k, 4)]);
}

#[test]
fn padding_with_a_fresh_base() {
    let g = pad_with_independent_base(&powers(3), &int(2)).unwrap();
    assert!(is_reduced(&g).unwrap());
    assert_eq!(g.variables(), 2);
    assert!(pad_with_independent_base(&powers(2), &int(4)).is_err());
    let f = scalar(&[5, 7], 1, vec![(1, vec![vec![1], vec![0]]), (1, vec![vec![0], vec![1]])]);
    let g = pad_with_independent_base(&f, &int(2)).unwrap();
    assert!(is_reduced(&g).unwrap());
    assert_eq!(g.variables(), 2);
    assert_eq!(g.characters().len(), 3);
}

#[test]
fn base_rewriting_is_canonical() {
    // (√2)^{2n} and 2^n over ℚ(√2).
    let k = Field::quadratic(2).unwrap();
    let one = FieldElement::one(k);
    let a = pep_core::pep::pep_from_ints(k, vec![FieldElement::sqrt_d(k)], 1, vec![vec![(one.clone(), vec![vec![2]])]]).unwrap();
    let b = pep_core::pep::pep_from_ints(k, vec![FieldElement::from_int(k, 2)], 1, vec![vec![(one, vec![vec![1]])]]).unwrap();
    assert_eq!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
    // 2^{n−m} 6^m and 2^n 3^m.
    let c = scalar(&[2, 6], 2, vec![(1, vec![vec![1, -1], vec![0, 1]])]);
    let d = scalar(&[2, 3], 2, vec![(1, vec![vec![1, 0], vec![0, 1]])]);
    assert_eq!(canonicalize(&c).unwrap(), canonicalize(&d).unwrap());
}
