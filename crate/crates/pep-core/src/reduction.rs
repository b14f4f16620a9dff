//! Multiplicative relations among bases and the two-step reduction of a PEP
//! vector into reduced pieces on cosets of `Eℤ^r`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lattice::{kernel, quotient_map, Coset, IntMatrix, Lattice};
use crate::nt;
use crate::pep::{canonicalize, power_product, restrict_to_coset, Character, PepPolynomial, PepVector, Term};
use crate::places::{finite_support, normalized_log_abs, torsion_order, valuation, FieldElement};

/// Largest number of cosets `E^r` the first reduction will produce.
pub const MAX_TORSION_COSETS: u64 = 10_000;

/// Exponent vectors `α` with `∏ λ_i^{α_i}` a root of unity; each HNF basis
/// row is annotated with the order of the root of unity it produces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicativeRelations {
    pub lattice: Lattice,
    pub torsion_orders: Vec<u32>,
}

impl MultiplicativeRelations {
    pub fn is_trivial(&self) -> bool {
        self.lattice.rank() == 0
    }

    /// Exponent of the torsion subgroup of the group generated by the bases.
    pub fn torsion_exponent(&self) -> u64 {
        self.torsion_orders.iter().fold(1u64, |a, &o| nt::lcm_u64(a, o as u64))
    }
}

/// Relation lattice of a tuple of nonzero field elements. Candidates come
/// from the kernel of the finite valuation matrix; in real quadratic fields
/// the remaining unit part is resolved from archimedean logs and every
/// relation is confirmed exactly.
pub fn multiplicative_relations(bases: &[FieldElement]) -> Result<MultiplicativeRelations> {
    let k = bases.len();
    if bases.iter().any(|b| b.is_zero()) {
        return Err(Error::ZeroBase);
    }
    if k == 0 {
        return Ok(MultiplicativeRelations { lattice: Lattice::zero(0), torsion_orders: Vec::new() });
    }
    let field = bases[0].field();
    let mut places = Vec::new();
    for b in bases {
        places.extend(finite_support(b)?);
    }
    places.sort();
    places.dedup();
    let mut vt = IntMatrix::zeros(places.len(), k);
    for (i, v) in places.iter().enumerate() {
        for (j, b) in bases.iter().enumerate() {
            vt.set(i, j, BigInt::from(valuation(b, v)?));
        }
    }
    let units = kernel(&vt);
    let m = units.rank();
    let unit_rel = if field.is_real_quadratic() && m > 0 {
        let place = field.archimedean_places()[0];
        let mut logs = Vec::with_capacity(m);
        for i in 0..m {
            let u = power_product(bases, units.basis().row(i))?;
            logs.push(if torsion_order(&u).is_some() { None } else { Some(normalized_log_abs(&u, &place)?) });
        }
        let reference = logs.iter().flatten().copied().fold(f64::INFINITY, |a, l| if l.abs() < a.abs() { l } else { a });
        if reference.is_infinite() {
            Lattice::full(m)
        } else {
            let mut fracs = Vec::with_capacity(m);
            for l in &logs {
                fracs.push(match l {
                    None => (0i64, 1i64),
                    Some(l) => {
                        let ratio = l / reference;
                        nt::best_rational(ratio, 1_000_000, 1e-9 * ratio.abs().max(1.0)).ok_or(Error::UnitRelations)?
                    }
                });
            }
            let den = fracs.iter().fold(1u64, |a, &(_, q)| nt::lcm_u64(a, q as u64)) as i64;
            let row: Vec<i64> = fracs.iter().map(|&(p, q)| p * (den / q)).collect();
            kernel(&IntMatrix::from_rows(m, &[row]))
        }
    } else {
        Lattice::full(m)
    };
    let gens: Vec<Vec<BigInt>> = (0..unit_rel.rank()).map(|i| units.basis().left_mul_vec(unit_rel.basis().row(i))).collect();
    let lattice = Lattice::from_generators(k, IntMatrix::from_big_rows(k, gens));
    let mut torsion_orders = Vec::with_capacity(lattice.rank());
    for i in 0..lattice.rank() {
        let x = power_product(bases, lattice.basis().row(i))?;
        torsion_orders.push(torsion_order(&x).ok_or(Error::UnitRelations)?);
    }
    Ok(MultiplicativeRelations { lattice, torsion_orders })
}

fn stacked_rows(f: &PepVector) -> IntMatrix {
    let mut rows = IntMatrix::zeros(0, f.variables());
    for c in f.characters() {
        rows = rows.vstack(c.matrix());
    }
    rows
}

/// Bases multiplicatively independent and the exponent rows span the dual
/// of `ℚ^r` (after canonicalization).
pub fn is_reduced(f: &PepVector) -> Result<bool> {
    let g = canonicalize(f)?;
    if !multiplicative_relations(g.bases())?.is_trivial() {
        return Ok(false);
    }
    Ok(stacked_rows(&g).rank() == g.variables())
}

/// Restrictions of `f` to the cosets `a + Eℤ^r`, `a ∈ [0, E)^r`, where `E`
/// is the torsion exponent of the group generated by the bases. Each piece
/// is in canonical form and has torsion-free independent bases.
#[derive(Clone, Debug)]
pub struct FirstReduction {
    pub modulus: u64,
    pub pieces: Vec<(Coset, PepVector)>,
}

pub fn first_reduction(f: &PepVector) -> Result<FirstReduction> {
    let g = canonicalize(f)?;
    let e = multiplicative_relations(g.bases())?.torsion_exponent();
    let r = g.variables();
    let count = (e as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    if count > MAX_TORSION_COSETS as u128 {
        return Err(Error::Cap { what: "torsion cosets E^r", limit: MAX_TORSION_COSETS, requested: count.min(u64::MAX as u128) as u64 });
    }
    let lattice = Lattice::scaled_full(r, e);
    let mut pieces = Vec::with_capacity(count as usize);
    let mut a = vec![0u64; r];
    loop {
        let coset = Coset::new(a.iter().map(|&x| BigInt::from(x)).collect(), lattice.clone());
        let piece = restrict_to_coset(&g, &coset)?;
        pieces.push((coset, piece));
        // odometer over [0, e)^r, last coordinate fastest
        let mut i = r;
        loop {
            if i == 0 {
                return Ok(FirstReduction { modulus: e, pieces });
            }
            i -= 1;
            a[i] += 1;
            if a[i] < e {
                break;
            }
            a[i] = 0;
        }
    }
}

/// `f = f_new ∘ P` where `P : ℤ^r → ℤ^{r'}` kills the common kernel of all
/// exponent rows.
#[derive(Clone, Debug)]
pub struct SecondReduction {
    pub kernel: Lattice,
    pub projection: IntMatrix,
    pub pep: PepVector,
}

pub fn second_reduction(f: &PepVector) -> Result<SecondReduction> {
    if !multiplicative_relations(f.bases())?.is_trivial() {
        return Err(Error::Precondition("second reduction needs multiplicatively independent bases".into()));
    }
    let h = kernel(&stacked_rows(f));
    let (p, s) = quotient_map(&h)?;
    let mut components = Vec::with_capacity(f.components().len());
    for c in f.components() {
        let mut terms = Vec::with_capacity(c.terms.len());
        for t in &c.terms {
            let a = t.character.matrix();
            let reduced = a.mul(&s);
            if reduced.mul(&p) != *a {
                return Err(Error::Diagnostic("exponent row does not factor through the projection".into()));
            }
            terms.push(Term { coeff: t.coeff.clone(), character: Character::new(reduced) });
        }
        components.push(PepPolynomial::new(terms));
    }
    let pep = PepVector::new(f.field(), f.bases().to_vec(), p.rows(), components)?;
    Ok(SecondReduction { kernel: h, projection: p, pep })
}

/// One piece of a reduced decomposition: on `coset`, `f(n) = pep(P·m)`
/// where `m` are the coordinates of `n` in the coset's basis.
#[derive(Clone, Debug)]
pub struct ReducedPiece {
    pub coset: Coset,
    pub projection: IntMatrix,
    pub pep: PepVector,
}

impl ReducedPiece {
    pub fn rank(&self) -> usize {
        self.pep.variables()
    }

    /// Parameters of `n` in the reduced piece, if `n` lies in the coset.
    pub fn project(&self, n: &[i64]) -> Option<Vec<i64>> {
        let nb: Vec<BigInt> = n.iter().map(|&x| BigInt::from(x)).collect();
        let m = self.coset.coordinates(&nb)?;
        let v = self.projection.mul_vec(&m);
        v.iter().map(num_traits::ToPrimitive::to_i64).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ReducedDecomposition {
    pub modulus: u64,
    pub pieces: Vec<ReducedPiece>,
}

impl ReducedDecomposition {
    pub fn piece_for(&self, n: &[i64]) -> Option<&ReducedPiece> {
        self.pieces.iter().find(|p| p.coset.contains_i64(n))
    }

    pub fn rank(&self) -> usize {
        self.pieces.iter().map(|p| p.rank()).max().unwrap_or(0)
    }
}

pub fn reduced_decomposition(f: &PepVector) -> Result<ReducedDecomposition> {
    let first = first_reduction(f)?;
    let mut pieces = Vec::with_capacity(first.pieces.len());
    for (coset, g) in first.pieces {
        let s = second_reduction(&g)?;
        pieces.push(ReducedPiece { coset, projection: s.projection, pep: s.pep });
    }
    Ok(ReducedDecomposition { modulus: first.modulus, pieces })
}

/// Largest lattice `K ⊂ M − M` with `f(m + k) = f(m)` for all `m ∈ M`.
pub fn stabilizer(f: &PepVector, coset: &Coset) -> Result<Lattice> {
    let g = restrict_to_coset(f, coset)?;
    let q = g.variables();
    let rel = multiplicative_relations(g.bases())?;
    let order = rel.torsion_exponent();
    let k = g.bases().len();
    let free = if order > 1 { k - 1 } else { k };
    let chars = g.characters();
    let extra = if order > 1 { chars.len() } else { 0 };
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for (ci, c) in chars.iter().enumerate() {
        let a = c.matrix();
        for i in 0..free {
            let mut row: Vec<BigInt> = a.row(i).to_vec();
            row.extend(vec![BigInt::zero(); extra]);
            rows.push(row);
        }
        if order > 1 {
            let mut row: Vec<BigInt> = a.row(k - 1).to_vec();
            row.extend(vec![BigInt::zero(); extra]);
            row[q + ci] = -BigInt::from(order);
            rows.push(row);
        }
    }
    let sol = kernel(&IntMatrix::from_big_rows(q + extra, rows));
    let gens: Vec<Vec<BigInt>> = (0..sol.rank()).map(|i| sol.basis().row(i)[..q].to_vec()).collect();
    let in_coords = Lattice::from_generators(q, IntMatrix::from_big_rows(q, gens));
    Ok(in_coords.map_rows(coset.lattice().basis()))
}

/// Rank of `f`: the largest number of variables among the reduced pieces.
pub fn pep_rank(f: &PepVector) -> Result<usize> {
    Ok(reduced_decomposition(f)?.rank())
}

/// For a single-component `f` whose first-reduction pieces are all single
/// monomials, returns those pieces; the image of `f` is then a finite union
/// of translated groups. `None` if some piece is not a monomial.
pub fn monomial_on_cosets(f: &PepVector) -> Result<Option<Vec<(Coset, PepVector)>>> {
    if f.components().len() != 1 {
        return Err(Error::Precondition("monomial_on_cosets needs a single component".into()));
    }
    let first = first_reduction(f)?;
    if first.pieces.iter().any(|(_, p)| p.components()[0].terms.len() != 1) {
        return Ok(None);
    }
    Ok(Some(first.pieces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pep::pep_from_ints;
    use crate::places::Field;
    use num_rational::BigRational;

    fn int(n: i64) -> FieldElement {
        FieldElement::from_int(Field::Rational, n)
    }

    #[test]
    fn relations_between_powers() {
        let rel = multiplicative_relations(&[int(2), int(4), int(-8)]).unwrap();
        assert_eq!(rel.lattice.rank(), 2);
        assert!(rel.lattice.contains_i64(&[2, -1, 0]));
        assert!(rel.lattice.contains_i64(&[-3, 0, 1]));
        assert!(!rel.lattice.contains_i64(&[3, 0, 1]));
        assert_eq!(rel.torsion_exponent(), 2);
    }

    #[test]
    fn real_quadratic_units() {
        let k = Field::quadratic(2).unwrap();
        let one = BigRational::from_integer(1.into());
        let eps = FieldElement::new(k, one.clone(), one.clone()).unwrap();
        let eps2 = FieldElement::new(k, BigRational::from_integer(3.into()), BigRational::from_integer(2.into())).unwrap();
        let rel = multiplicative_relations(&[eps, eps2]).unwrap();
        assert_eq!(rel.lattice, Lattice::from_rows(2, &[vec![2, -1]]));
    }

    #[test]
    fn second_reduction_collapses_diagonal() {
        let f = pep_from_ints(Field::Rational, vec![int(2), int(3)], 2, vec![vec![(int(1), vec![vec![2, 2], vec![1, 1]])]]).unwrap();
        let s = second_reduction(&f).unwrap();
        assert_eq!(s.kernel, Lattice::from_rows(2, &[vec![1, -1]]));
        assert_eq!(s.pep.variables(), 1);
        let rows = s.pep.components()[0].terms[0].character.matrix().to_i64_rows().unwrap();
        assert_eq!(rows, vec![vec![2], vec![1]]);
    }

    #[test]
    fn sign_alternation_splits_in_two() {
        let f = pep_from_ints(Field::Rational, vec![int(-1)], 1, vec![vec![(int(1), vec![vec![1]])]]).unwrap();
        let d = reduced_decomposition(&f).unwrap();
        assert_eq!(d.modulus, 2);
        assert_eq!(d.rank(), 0);
        assert_eq!(d.pieces[0].pep.evaluate(&[]).unwrap(), vec![int(1)]);
        assert_eq!(d.pieces[1].pep.evaluate(&[]).unwrap(), vec![int(-1)]);
    }

    #[test]
    fn stabilizer_examples() {
        let f = pep_from_ints(Field::Rational, vec![int(-1), int(2)], 1, vec![vec![(int(1), vec![vec![1], vec![0]]), (int(1), vec![vec![0], vec![1]])]]).unwrap();
        assert_eq!(stabilizer(&f, &Coset::full(1)).unwrap().rank(), 0);
        let g = pep_from_ints(Field::Rational, vec![int(2)], 2, vec![vec![(int(1), vec![vec![1, -1]])]]).unwrap();
        assert_eq!(stabilizer(&g, &Coset::full(2)).unwrap(), Lattice::from_rows(2, &[vec![1, 1]]));
        let h = pep_from_ints(Field::Rational, vec![int(-1)], 1, vec![vec![(int(1), vec![vec![1]])]]).unwrap();
        assert_eq!(stabilizer(&h, &Coset::full(1)).unwrap(), Lattice::from_rows(1, &[vec![2]]));
    }
}
