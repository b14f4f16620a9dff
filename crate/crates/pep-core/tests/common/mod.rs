#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use pep_core::lattice::IntMatrix;
use pep_core::pep::{pep_from_ints, Character, PepPolynomial, PepVector, Term};
use pep_core::places::{Field, FieldElement};

pub fn int(n: i64) -> FieldElement {
    FieldElement::from_int(Field::Rational, n)
}

pub fn frac(n: i64, d: i64) -> FieldElement {
    FieldElement::rational(Field::Rational, BigRational::new(n.into(), d.into()))
}

/// Scalar PEP over ℚ from `(coefficient, exponent rows)` terms.
pub fn scalar(bases: &[i64], variables: usize, terms: Vec<(i64, Vec<Vec<i64>>)>) -> PepVector {
    let bases = bases.iter().map(|&b| int(b)).collect();
    let terms = terms.into_iter().map(|(c, rows)| (int(c), rows)).collect();
    pep_from_ints(Field::Rational, bases, variables, vec![terms]).unwrap()
}

pub fn powers(base: i64) -> PepVector {
    scalar(&[base], 1, vec![(1, vec![vec![1]])])
}

/// `2^n + (−2)^n`.
pub fn alternating() -> PepVector {
    scalar(&[2, -2], 1, vec![(1, vec![vec![1], vec![0]]), (1, vec![vec![0], vec![1]])])
}

/// `(−1)^n + 2^n`.
pub fn sign_plus_two() -> PepVector {
    scalar(&[-1, 2], 1, vec![(1, vec![vec![1], vec![0]]), (1, vec![vec![0], vec![1]])])
}

/// `2^{2n+2m} 3^{n+m}`.
pub fn collapsing() -> PepVector {
    scalar(&[2, 3], 2, vec![(1, vec![vec![2, 2], vec![1, 1]])])
}

/// `(2^a 3^b, 2^{−a} 3^{−b})`.
pub fn rank_two() -> PepVector {
    let b = vec![int(2), int(3)];
    pep_from_ints(
        Field::Rational,
        b,
        2,
        vec![vec![(int(1), vec![vec![1, 0], vec![0, 1]])], vec![(int(1), vec![vec![-1, 0], vec![0, -1]])]],
    )
    .unwrap()
}

/// `2^a − 2^b + 3^{a−b}`.
pub fn pair_cancel() -> PepVector {
    scalar(
        &[2, 3],
        2,
        vec![(1, vec![vec![1, 0], vec![0, 0]]), (-1, vec![vec![0, 1], vec![0, 0]]), (1, vec![vec![0, 0], vec![1, -1]])],
    )
}

/// `ω^m 2^n + ω^k 2^n` over ℚ(√−3), variables `(m, n, k)`.
pub fn omega_pair() -> PepVector {
    let k = Field::quadratic(-3).unwrap();
    let w = k.root_of_unity(3).unwrap();
    let two = FieldElement::from_int(k, 2);
    let one = FieldElement::one(k);
    pep_from_ints(
        k,
        vec![w, two],
        3,
        vec![vec![(one.clone(), vec![vec![1, 0, 0], vec![0, 1, 0]]), (one, vec![vec![0, 0, 1], vec![0, 1, 0]])]],
    )
    .unwrap()
}

/// `((1+√2)^n, 2^m)` over ℚ(√2).
pub fn unit_and_two() -> PepVector {
    let k = Field::quadratic(2).unwrap();
    let u = &FieldElement::one(k) + &FieldElement::sqrt_d(k);
    let one = FieldElement::one(k);
    pep_from_ints(
        k,
        vec![u, FieldElement::from_int(k, 2)],
        2,
        vec![vec![(one.clone(), vec![vec![1, 0], vec![0, 0]])], vec![(one, vec![vec![0, 0], vec![0, 1]])]],
    )
    .unwrap()
}

pub fn fixtures() -> Vec<(&'static str, PepVector)> {
    vec![
        ("2^n", powers(2)),
        ("2^n+(-2)^n", alternating()),
        ("(-1)^n+2^n", sign_plus_two()),
        ("2^(2n+2m)3^(n+m)", collapsing()),
        ("(2^a3^b, 2^-a3^-b)", rank_two()),
        ("2^a-2^b+3^(a-b)", pair_cancel()),
        ("w^m2^n+w^k2^n", omega_pair()),
        ("((1+r2)^n, 2^m)", unit_and_two()),
    ]
}

/// `n ↦ f(U n)` for an integer matrix `U` (rows indexed like `n`).
pub fn precompose(f: &PepVector, u: &[Vec<i64>]) -> PepVector {
    let um = IntMatrix::from_rows(f.variables(), u);
    let components = f
        .components()
        .iter()
        .map(|c| PepPolynomial {
            terms: c
                .terms
                .iter()
                .map(|t| Term { coeff: t.coeff.clone(), character: Character::new(t.character.matrix().mul(&um)) })
                .collect(),
        })
        .collect();
    PepVector::new(f.field(), f.bases().to_vec(), f.variables(), components).unwrap()
}

pub fn apply(u: &[Vec<i64>], n: &[i64]) -> Vec<i64> {
    u.iter().map(|row| row.iter().zip(n).map(|(a, b)| a * b).sum()).collect()
}

/// Unimodular matrix from a list of elementary row operations `(i, j, c)`:
/// row i += c · row j, plus optional sign flips.
pub fn unimodular(dim: usize, ops: &[(usize, usize, i64)], flips: &[bool]) -> Vec<Vec<i64>> {
    let mut u: Vec<Vec<i64>> = (0..dim).map(|i| (0..dim).map(|j| i64::from(i == j)).collect()).collect();
    for &(i, j, c) in ops {
        let (i, j) = (i % dim, j % dim);
        if i == j {
            continue;
        }
        for col in 0..dim {
            u[i][col] += c * u[j][col];
        }
    }
    for (i, &f) in flips.iter().enumerate().take(dim) {
        if f {
            for x in &mut u[i] {
                *x = -*x;
            }
        }
    }
    u
}

pub fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}
