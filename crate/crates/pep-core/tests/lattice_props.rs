use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use pep_core::lattice::{coset_intersect, enumerate_coset_box, for_each_in_cube, hnf, kernel, saturation, snf, Coset, IntMatrix, Lattice};
use pep_core::places::{torsion_order, Decomposition, Field, FieldElement, PlaceKind};

fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-6i64..=6, cols), rows)
}

fn unimodular(m: &IntMatrix) -> bool {
    m.determinant().abs().is_one()
}

fn in_box(p: &[i64], r: i64) -> bool {
    p.iter().all(|x| x.abs() <= r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snf_transforms_are_unimodular_and_consistent(rows in 1usize..4, cols in 1usize..4, seed in small_matrix(3, 3)) {
        let data: Vec<Vec<i64>> = seed.into_iter().take(rows).map(|r| r.into_iter().take(cols).collect()).collect();
        let m = IntMatrix::from_rows(cols, &data);
        let s = snf(&m);
        prop_assert!(unimodular(&s.u));
        prop_assert!(unimodular(&s.v));
        prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.s.clone());
        let d = s.diagonal();
        for w in d.windows(2) {
            prop_assert!(w[0] >= BigInt::zero());
            if !w[0].is_zero() {
                prop_assert!((&w[1] % &w[0]).is_zero());
            } else {
                prop_assert!(w[1].is_zero());
            }
        }
    }

    #[test]
    fn hnf_is_a_unimodular_row_transform(data in small_matrix(3, 4)) {
        let m = IntMatrix::from_rows(4, &data);
        let h = hnf(&m);
        prop_assert!(unimodular(&h.u));
        prop_assert_eq!(h.u.mul(&m), h.h.clone());
        prop_assert_eq!(h.rank, m.rank());
    }

    #[test]
    fn kernel_annihilates_and_has_complementary_rank(data in small_matrix(2, 4)) {
        let m = IntMatrix::from_rows(4, &data);
        let k = kernel(&m);
        for v in k.basis().row_vecs() {
            prop_assert!(m.mul_vec(&v).iter().all(|x| x.is_zero()));
        }
        prop_assert_eq!(k.rank() + m.rank(), 4);
    }

    #[test]
    fn saturation_contains_and_is_idempotent(data in small_matrix(2, 3)) {
        let l = Lattice::from_rows(3, &data);
        let s = saturation(&l);
        prop_assert!(l.is_sublattice_of(&s));
        prop_assert_eq!(saturation(&s), s.clone());
        prop_assert_eq!(s.rank(), l.rank());
        prop_assert!(s.is_saturated());
    }

    #[test]
    fn coset_intersection_matches_brute_force(
        dim in 2usize..4,
        o1 in prop::collection::vec(-3i64..=3, 3),
        o2 in prop::collection::vec(-3i64..=3, 3),
        g1 in small_matrix(2, 3),
        g2 in small_matrix(2, 3),
    ) {
        let cut = |v: &Vec<i64>| v[..dim].to_vec();
        let rows1: Vec<Vec<i64>> = g1.iter().map(cut).collect();
        let rows2: Vec<Vec<i64>> = g2.iter().map(cut).collect();
        let c1 = Coset::from_i64(&cut(&o1), Lattice::from_rows(dim, &rows1));
        let c2 = Coset::from_i64(&cut(&o2), Lattice::from_rows(dim, &rows2));
        let meet = coset_intersect(&c1, &c2);
        let radius = 6;
        for_each_in_cube(dim, radius, |p| {
            let both = c1.contains_i64(p) && c2.contains_i64(p);
            let claimed = meet.as_ref().is_some_and(|c| c.contains_i64(p));
            assert_eq!(both, claimed, "point {p:?}");
        });
    }
}

#[test]
fn kernel_of_one_two_three() {
    let k = kernel(&IntMatrix::from_rows(3, &[vec![1, 2, 3]]));
    assert_eq!(k.rank(), 2);
    assert!(k.contains_i64(&[2, -1, 0]));
    assert!(k.contains_i64(&[3, 0, -1]));
}

#[test]
fn snf_of_small_example() {
    let s = snf(&IntMatrix::from_rows(2, &[vec![2, 4], vec![6, 8]]));
    assert_eq!(s.diagonal(), vec![BigInt::from(2), BigInt::from(4)]);
}

#[test]
fn skew_lines_meet_in_one_point() {
    let a = Coset::from_i64(&[0, 0], Lattice::from_rows(2, &[vec![1, 1]]));
    let b = Coset::from_i64(&[1, 0], Lattice::from_rows(2, &[vec![1, -1]]));
    let meet = coset_intersect(&a, &b);
    let mut brute = Vec::new();
    for_each_in_cube(2, 5, |p| {
        if a.contains_i64(p) && b.contains_i64(p) {
            brute.push(p.to_vec());
        }
    });
    // (1,0)+t(1,-1) = s(1,1) has no integer solution, so both sides are empty.
    assert!(brute.is_empty());
    assert!(meet.is_none());
}

#[test]
fn coset_box_of_odd_numbers() {
    let odd = Coset::from_i64(&[1], Lattice::scaled_full(1, 2));
    let mut pts: Vec<i64> = enumerate_coset_box(&odd, 3).into_iter().map(|p| p[0]).collect();
    pts.sort();
    assert_eq!(pts, vec![-3, -1, 1, 3]);
    assert!(enumerate_coset_box(&odd, 3).iter().all(|p| in_box(p, 3)));
}

fn fields() -> Vec<Field> {
    let mut v = vec![Field::Rational];
    for d in [-1, -2, -3, -5, -7, 2, 3, 5, 6, 7, 10, 13] {
        v.push(Field::quadratic(d).unwrap());
    }
    v
}

#[test]
fn local_degrees_sum_to_the_field_degree() {
    for k in fields() {
        for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
            let places = k.places_above(p).unwrap();
            let total: u32 = places
                .iter()
                .map(|v| {
                    let e = match v.kind {
                        PlaceKind::Finite { kind: Decomposition::Ramified, .. } => 2,
                        _ => 1,
                    };
                    e * v.residue_degree()
                })
                .sum();
            assert_eq!(total, k.degree(), "field {k:?}, p = {p}");
        }
    }
}

#[test]
fn torsion_order_is_the_exact_order() {
    for k in fields() {
        let w = k.roots_of_unity_order();
        for m in 1..=w {
            let Some(z) = k.root_of_unity(m) else { continue };
            let n = torsion_order(&z).expect("root of unity has finite order");
            assert_eq!(z.pow(n as i64).unwrap(), FieldElement::one(k));
            for j in 1..n {
                assert!(!z.pow(j as i64).unwrap().is_one());
            }
            assert_eq!(w % n, 0);
        }
        assert_eq!(torsion_order(&FieldElement::from_int(k, 2)), None);
        if k.is_real_quadratic() {
            let u = &FieldElement::from_int(k, 1) + &FieldElement::sqrt_d(k);
            assert_eq!(torsion_order(&u), None);
        }
    }
}
