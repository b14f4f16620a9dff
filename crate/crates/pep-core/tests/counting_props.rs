mod common;

use std::collections::BTreeMap;

use common::*;
use pep_core::counting::{
    anti_triangular_census, count_by_height, empirical_zero_locus, enumerate_image, enumerate_image_slab, fiber_statistics, finish_count,
    partition_report, plan_count, recurrence_zero_structure, tally_piece_slab, Completeness, HeightTally, ImageTally,
};
use pep_core::lattice::Coset;
use pep_core::pep::{is_identically_zero, restrict_to_coset, PepVector};
use pep_core::places::FieldElement;
use pep_core::reduction::pep_rank;
use proptest::prelude::*;

fn two_three() -> PepVector {
    scalar(&[2, 3], 2, vec![(1, vec![vec![1, 0], vec![0, 1]])])
}

fn two_plus_three() -> PepVector {
    scalar(&[2, 3], 1, vec![(1, vec![vec![1], vec![0]]), (1, vec![vec![0], vec![1]])])
}

fn two_minus_two() -> PepVector {
    scalar(&[2], 2, vec![(1, vec![vec![1, 0]]), (-1, vec![vec![0, 1]])])
}

fn two_minus_three() -> PepVector {
    scalar(&[2, 3], 1, vec![(1, vec![vec![1], vec![0]]), (-1, vec![vec![0], vec![1]])])
}

/// Number of `(a, b)` with `H_aff(2^a 3^b) ≤ t`, by integer search.
fn two_three_oracle(t: u128) -> u64 {
    let pow = |a: u32, b: u32| -> Option<u128> { 2u128.checked_pow(a)?.checked_mul(3u128.checked_pow(b)?) };
    let mut n = 0;
    for a in -80i64..=80 {
        for b in -50i64..=50 {
            let num = pow(a.max(0) as u32, b.max(0) as u32);
            let den = pow((-a).max(0) as u32, (-b).max(0) as u32);
            if let (Some(x), Some(y)) = (num, den) {
                if x.max(y) <= t {
                    n += 1;
                }
            }
        }
    }
    n
}

fn two_oracle(t: u64) -> u64 {
    2 * (63 - t.leading_zeros() as u64) + 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn powers_of_two_count_exactly(mut ts in prop::collection::btree_set(1u64..10_000_000, 1..6)) {
        let ts: Vec<u64> = std::mem::take(&mut ts).into_iter().collect();
        let tf: Vec<f64> = ts.iter().map(|&t| t as f64).collect();
        let r = count_by_height(&powers(2), &tf).unwrap();
        prop_assert_eq!(r.completeness, Completeness::Certified);
        let expect: Vec<u64> = ts.iter().map(|&t| two_oracle(t)).collect();
        prop_assert_eq!(r.counts, expect);
    }

    #[test]
    fn slabs_merge_to_the_full_count(split in -8i64..8, which in 0usize..4) {
        let f = [two_three(), powers(2), rank_two(), pair_cancel()][which].clone();
        let ts = [10.0, 1000.0, 100000.0];
        let full = count_by_height(&f, &ts).unwrap();
        let plan = plan_count(&f, &ts).unwrap();
        let mut tally = HeightTally::default();
        for i in 0..plan.pieces.len() {
            let r = plan.pieces[i].radius;
            let cut = split.clamp(-r - 1, r);
            tally = tally.merge(tally_piece_slab(&plan, i, cut + 1, r).unwrap());
            tally = tally.merge(tally_piece_slab(&plan, i, -r, cut).unwrap());
        }
        prop_assert_eq!(finish_count(&plan, &tally).unwrap(), full);

        let radius = 3;
        let whole = enumerate_image(&f, radius).unwrap();
        let parts = [(-radius, split.min(radius)), (split.min(radius) + 1, radius)];
        let merged = parts.iter().fold(ImageTally::default(), |acc, &(lo, hi)| acc.merge(enumerate_image_slab(&f, radius, lo, hi).unwrap()));
        prop_assert_eq!(merged, whole);
    }
}

#[test]
fn two_three_counts_match_the_oracle_and_grow() {
    let ts = [1.0, 2.0, 10.0, 100.0, 1e4, 1e6, 1e8];
    let r = count_by_height(&two_three(), &ts).unwrap();
    assert_eq!(r.completeness, Completeness::Certified);
    for (t, n) in ts.iter().zip(&r.counts) {
        assert_eq!(*n, two_three_oracle(*t as u128), "T = {t}");
    }
    assert!(r.counts.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn fitted_rank_matches_the_exact_rank() {
    let ts: Vec<f64> = (0..8).map(|i| 1e6 * 10f64.powi(i)).collect();
    for f in [powers(2), powers(3), two_three(), rank_two()] {
        let r = count_by_height(&f, &ts).unwrap();
        let fit = r.fit.clone().unwrap();
        assert_eq!(fit.r_hat, Some(pep_rank(&f).unwrap() as i64));
        assert!(fit.consistent);
    }
    let sign = scalar(&[-1], 1, vec![(1, vec![vec![1]])]);
    let r = count_by_height(&sign, &[1.0, 10.0, 100.0, 1000.0]).unwrap();
    assert_eq!(r.rank, 0);
    assert_eq!(r.counts, vec![2, 2, 2, 2]);
    assert!((r.fit.unwrap().c_hat - 2.0).abs() < 1e-12);
}

#[test]
fn constant_counts_once() {
    let c = scalar(&[2], 1, vec![(7, vec![vec![0]])]);
    let r = count_by_height(&c, &[7.0, 100.0]).unwrap();
    assert_eq!(r.counts, vec![1, 1]);
    assert_eq!(r.completeness, Completeness::Certified);
}

#[test]
fn zero_loci_are_sound_and_cover_the_witnesses() {
    let cases: Vec<PepVector> = vec![alternating(), two_minus_two(), two_minus_three(), two_plus_three(), pair_cancel(), omega_pair()];
    for f in cases {
        let radius = if f.variables() >= 3 { 4 } else if f.variables() == 2 { 12 } else { 60 };
        let z = empirical_zero_locus(&f, radius).unwrap();
        for c in &z.cosets {
            assert!(is_identically_zero(&restrict_to_coset(&f, c).unwrap()).unwrap());
        }
        assert!(z.uncovered.is_empty());
        for w in &z.witnesses {
            assert!(f.evaluate(w).unwrap().iter().all(|x| x.is_zero()));
        }
    }
    let diag = empirical_zero_locus(&two_minus_two(), 8).unwrap();
    assert_eq!(diag.cosets.len(), 1);
    assert_eq!(diag.cosets[0].rank(), 1);
    assert!(diag.cosets[0].contains_i64(&[5, 5]));
    let origin = empirical_zero_locus(&two_minus_three(), 20).unwrap();
    assert_eq!(origin.cosets, vec![Coset::point(&[0])]);
}

#[test]
fn recurrence_zero_examples() {
    let z = recurrence_zero_structure(&alternating(), 40).unwrap();
    assert_eq!(z.progressions, vec![(1, 2)]);
    assert!(z.finite.is_empty());
    let shifted = scalar(&[2], 1, vec![(1, vec![vec![1]]), (-4, vec![vec![0]])]);
    let z = recurrence_zero_structure(&shifted, 40).unwrap();
    assert_eq!(z.finite, vec![2]);
    assert!(z.progressions.is_empty());
    let doubled = scalar(&[2], 1, vec![(1, vec![vec![1]]), (1, vec![vec![1]])]);
    let z = recurrence_zero_structure(&doubled, 40).unwrap();
    assert!(z.finite.is_empty() && z.progressions.is_empty());
}

#[test]
fn image_examples() {
    let img = enumerate_image(&powers(2), 3).unwrap();
    assert_eq!(img.len(), 7);
    assert!(img.fibers.values().all(|&c| c == 1));
    assert!(img.fibers.contains_key(&vec![frac(1, 8)]));
    let sign = scalar(&[-1], 1, vec![(1, vec![vec![1]])]);
    let img = enumerate_image(&sign, 10).unwrap();
    assert_eq!(img.fibers[&vec![int(1)]], 11);
    assert_eq!(img.fibers[&vec![int(-1)]], 10);
    // 2^n + (-2)^n for |n| ≤ 4, evaluated by hand.
    let mut expect: BTreeMap<Vec<FieldElement>, u64> = BTreeMap::new();
    for n in -4i64..=4 {
        let v = if n % 2 != 0 {
            int(0)
        } else if n >= 0 {
            int(2 << n)
        } else {
            frac(2, 1 << -n)
        };
        *expect.entry(vec![v]).or_insert(0) += 1;
    }
    assert_eq!(enumerate_image(&alternating(), 4).unwrap().fibers, expect);
    assert_eq!(expect[&vec![int(0)]], 4);
}

#[test]
fn fiber_examples() {
    let four = powers(4);
    let r = fiber_statistics(&four, &powers(2), 10).unwrap();
    assert_eq!(r.modulus, 1);
    assert!(r.classes.iter().all(|(_, c)| *c == 1));
    assert!(r.violators.is_empty());
    let r = fiber_statistics(&powers(2), &powers(2), 10).unwrap();
    assert_eq!(r.modulus, 1);
    assert_eq!(r.classes, vec![(vec![0], 1)]);
    let r = fiber_statistics(&powers(2), &two_three(), 6).unwrap();
    assert!(r.classes.iter().all(|(_, c)| *c == 1));
}

#[test]
fn partition_examples() {
    let p = partition_report(&pair_cancel(), 6).unwrap();
    assert!(p.unplaced.is_empty());
    let diag = p.pieces.iter().find(|q| !q.degeneracy.is_nondegenerate()).expect("degenerate piece");
    assert_eq!(diag.region.base.rank(), 1);
    assert!(diag.region.contains_i64(&[3, 3]));
    assert_eq!(diag.seminorm_rank, 0);
    assert_eq!(diag.height_range, (0.0, 0.0));
    let rest = p.pieces.iter().find(|q| q.degeneracy.is_nondegenerate()).unwrap();
    assert_eq!(rest.seminorm_rank, 2);
    assert!(!rest.region.contains_i64(&[2, 2]));
    assert_eq!(diag.points + rest.points, 13 * 13);

    let p = partition_report(&two_plus_three(), 10).unwrap();
    assert_eq!(p.pieces.len(), 1);
    assert_eq!(p.pieces[0].region.base, Coset::full(1));
    assert!(p.pieces[0].region.excluded.is_empty());
}

#[test]
fn census_examples() {
    let v = anti_triangular_census(&two_plus_three(), 30, 0.1).unwrap();
    assert!(v.iter().all(|x| x.point[0].abs() < 2), "{v:?}");
    assert!(anti_triangular_census(&powers(2), 20, 0.1).unwrap().is_empty());
    let v = anti_triangular_census(&pair_cancel(), 8, 0.1).unwrap();
    assert!(v.iter().all(|x| x.point[0] != x.point[1]));
}
