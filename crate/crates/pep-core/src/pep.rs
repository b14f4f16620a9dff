//! Vectors of purely exponential polynomials
//! `f(n) = Σ_j a_j · ∏_β λ_β^{(A_j n)_β}` over a shared tuple of bases.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lattice::{quotient_map, Coset, IntMatrix};
use crate::places::{torsion_order, Field, FieldElement};
use crate::reduction::multiplicative_relations;

/// Cap on the number of terms per component for subset-sum searches.
pub const MAX_DEGENERACY_TERMS: usize = 12;

/// `n ↦ λ^{A n}` for an integer matrix `A` of shape (bases × variables).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Character {
    exponents: IntMatrix,
}

impl Character {
    pub fn new(exponents: IntMatrix) -> Self {
        Self { exponents }
    }

    pub fn trivial(bases: usize, variables: usize) -> Self {
        Self { exponents: IntMatrix::zeros(bases, variables) }
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.exponents
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.is_zero()
    }

    pub fn value(&self, bases: &[FieldElement], n: &[i64]) -> Result<FieldElement> {
        let e = self.exponents.mul_vec_i64(n);
        power_product(bases, &e)
    }

    pub fn value_big(&self, bases: &[FieldElement], n: &[BigInt]) -> Result<FieldElement> {
        let e = self.exponents.mul_vec(n);
        power_product(bases, &e)
    }

    /// `χ(e_j)` for each standard basis vector.
    pub fn signature(&self, bases: &[FieldElement], field: Field) -> Result<Vec<FieldElement>> {
        (0..self.exponents.cols())
            .map(|j| {
                let col: Vec<BigInt> = (0..self.exponents.rows()).map(|i| self.exponents.get(i, j).clone()).collect();
                let v = power_product(bases, &col)?;
                v.lift(field)
            })
            .collect()
    }
}

/// `∏ λ_β^{e_β}`.
pub fn power_product(bases: &[FieldElement], e: &[BigInt]) -> Result<FieldElement> {
    let field = bases.first().map(|b| b.field()).unwrap_or(Field::Rational);
    let mut acc = FieldElement::one(field);
    for (b, k) in bases.iter().zip(e) {
        if k.is_zero() {
            continue;
        }
        acc = &acc * &b.pow_big(k)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub coeff: FieldElement,
    pub character: Character,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PepPolynomial {
    pub terms: Vec<Term>,
}

impl PepPolynomial {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() <= 1
    }
}

/// A vector of PEPs in `variables` integer variables over a shared base tuple.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PepVector {
    field: Field,
    bases: Vec<FieldElement>,
    variables: usize,
    components: Vec<PepPolynomial>,
}

impl PepVector {
    pub fn new(field: Field, bases: Vec<FieldElement>, variables: usize, components: Vec<PepPolynomial>) -> Result<Self> {
        let bases = bases.iter().map(|b| b.lift(field)).collect::<Result<Vec<_>>>()?;
        if bases.iter().any(|b| b.is_zero()) {
            return Err(Error::ZeroBase);
        }
        let mut comps = Vec::with_capacity(components.len());
        for c in components {
            let mut terms = Vec::with_capacity(c.terms.len());
            for t in c.terms {
                let m = t.character.matrix();
                if m.rows() != bases.len() || m.cols() != variables {
                    return Err(Error::Shape(format!(
                        "exponent matrix is {}x{}, expected {}x{}",
                        m.rows(),
                        m.cols(),
                        bases.len(),
                        variables
                    )));
                }
                terms.push(Term { coeff: t.coeff.lift(field)?, character: t.character });
            }
            comps.push(PepPolynomial { terms });
        }
        Ok(Self { field, bases, variables, components: comps })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn bases(&self) -> &[FieldElement] {
        &self.bases
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn components(&self) -> &[PepPolynomial] {
        &self.components
    }

    pub fn is_monomial(&self) -> bool {
        self.components.iter().all(|c| c.is_monomial())
    }

    /// Distinct characters occurring in any component.
    pub fn characters(&self) -> Vec<Character> {
        let set: BTreeSet<&Character> = self.components.iter().flat_map(|c| c.terms.iter().map(|t| &t.character)).collect();
        set.into_iter().cloned().collect()
    }

    pub fn evaluate(&self, n: &[i64]) -> Result<Vec<FieldElement>> {
        self.check_point(n.len())?;
        self.components
            .iter()
            .map(|c| {
                let mut acc = FieldElement::zero(self.field);
                for t in &c.terms {
                    acc = &acc + &(&t.coeff * &t.character.value(&self.bases, n)?);
                }
                Ok(acc)
            })
            .collect()
    }

    pub fn evaluate_big(&self, n: &[BigInt]) -> Result<Vec<FieldElement>> {
        self.check_point(n.len())?;
        self.components
            .iter()
            .map(|c| {
                let mut acc = FieldElement::zero(self.field);
                for t in &c.terms {
                    acc = &acc + &(&t.coeff * &t.character.value_big(&self.bases, n)?);
                }
                Ok(acc)
            })
            .collect()
    }

    /// Values of the individual terms, per component.
    pub fn term_values(&self, n: &[i64]) -> Result<Vec<Vec<FieldElement>>> {
        self.check_point(n.len())?;
        self.components
            .iter()
            .map(|c| c.terms.iter().map(|t| Ok(&t.coeff * &t.character.value(&self.bases, n)?)).collect())
            .collect()
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.variables {
            return Err(Error::Shape(format!("point has {len} coordinates, expected {}", self.variables)));
        }
        Ok(())
    }
}

/// Evaluate `f` at an integer point.
pub fn evaluate(f: &PepVector, n: &[i64]) -> Result<Vec<FieldElement>> {
    f.evaluate(n)
}

/// Canonical form: equal characters merged, zero terms dropped, and the
/// bases rewritten onto a basis of the group generated by the character
/// values (plus at most one root of unity, placed last). Two representations
/// of the same map have identical canonical forms.
pub fn canonicalize(f: &PepVector) -> Result<PepVector> {
    let field = f.field;
    let r = f.variables;
    let mut merged: Vec<BTreeMap<Vec<FieldElement>, FieldElement>> = Vec::with_capacity(f.components.len());
    for c in &f.components {
        let mut m: BTreeMap<Vec<FieldElement>, FieldElement> = BTreeMap::new();
        for t in &c.terms {
            if t.coeff.is_zero() {
                continue;
            }
            let sig = t.character.signature(&f.bases, field)?;
            let e = m.entry(sig).or_insert_with(|| FieldElement::zero(field));
            *e = &*e + &t.coeff;
        }
        m.retain(|_, v| !v.is_zero());
        merged.push(m);
    }
    let gens: BTreeSet<FieldElement> =
        merged.iter().flat_map(|m| m.keys().flat_map(|s| s.iter().filter(|x| !x.is_one()).cloned())).collect();
    let g: Vec<FieldElement> = gens.into_iter().collect();
    let rel = multiplicative_relations(&g)?;
    let (p, s) = quotient_map(&rel.lattice)?;
    let t = p.rows();
    let mut mu = Vec::with_capacity(t);
    for j in 0..t {
        let col: Vec<BigInt> = (0..g.len()).map(|i| s.get(i, j).clone()).collect();
        let x = rel.lattice.reduce(&col);
        mu.push(power_product(&g, &x)?);
    }
    let mut torsion_parts = Vec::with_capacity(g.len());
    let mut order = 1u32;
    for (i, gi) in g.iter().enumerate() {
        let col: Vec<BigInt> = (0..t).map(|j| p.get(j, i).clone()).collect();
        let zeta_i = gi.div(&power_product(&mu, &col)?)?;
        let o = torsion_order(&zeta_i).ok_or_else(|| Error::Diagnostic("torsion part is not a root of unity".into()))?;
        order = crate::nt::lcm_u64(order as u64, o as u64) as u32;
        torsion_parts.push(zeta_i);
    }
    let zeta = field
        .root_of_unity(order)
        .ok_or_else(|| Error::Diagnostic(format!("no root of unity of order {order} in {field}")))?;
    let mut zeta_exp = Vec::with_capacity(g.len());
    for z in &torsion_parts {
        let mut acc = FieldElement::one(field);
        let mut found = None;
        for c in 0..order {
            if acc == *z {
                found = Some(c);
                break;
            }
            acc = &acc * &zeta;
        }
        zeta_exp.push(found.ok_or_else(|| Error::Diagnostic("root of unity outside the torsion slot".into()))?);
    }
    let with_zeta = order > 1;
    let k = t + usize::from(with_zeta);
    let mut bases = mu;
    if with_zeta {
        bases.push(zeta);
    }
    let index: BTreeMap<&FieldElement, usize> = g.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let mut components = Vec::with_capacity(merged.len());
    for m in &merged {
        let mut terms = Vec::with_capacity(m.len());
        for (sig, coeff) in m {
            let mut a = IntMatrix::zeros(k, r);
            for (j, v) in sig.iter().enumerate() {
                if v.is_one() {
                    continue;
                }
                let i = index[v];
                for row in 0..t {
                    a.set(row, j, p.get(row, i).clone());
                }
                if with_zeta {
                    a.set(t, j, BigInt::from(zeta_exp[i]));
                }
            }
            terms.push(Term { coeff: coeff.clone(), character: Character::new(a) });
        }
        terms.sort_by(|a, b| a.character.cmp(&b.character));
        components.push(PepPolynomial { terms });
    }
    Ok(PepVector { field, bases, variables: r, components })
}

/// The vector `(f₁(x)+f₂(y))/2 + (−1)^z (f₁(x)−f₂(y))/2`, whose image is the
/// union of the images of `f₁` and `f₂`. Variables are `(x, y, z)`.
pub fn union(f1: &PepVector, f2: &PepVector) -> Result<PepVector> {
    if f1.field != f2.field {
        return Err(Error::IncompatibleFields);
    }
    if f1.components.len() != f2.components.len() {
        return Err(Error::Shape("union needs the same number of components".into()));
    }
    let field = f1.field;
    let (k1, r1) = (f1.bases.len(), f1.variables);
    let (k, r) = (k1 + f2.bases.len() + 1, r1 + f2.variables + 1);
    let mut bases = f1.bases.clone();
    bases.extend(f2.bases.iter().cloned());
    bases.push(FieldElement::from_int(field, -1));
    let half = FieldElement::rational(field, num_rational::BigRational::new(1.into(), 2.into()));
    let embed = |a: &IntMatrix, row0: usize, col0: usize, sign_col: bool| {
        let mut m = IntMatrix::zeros(k, r);
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                m.set(row0 + i, col0 + j, a.get(i, j).clone());
            }
        }
        if sign_col {
            m.set(k - 1, r - 1, BigInt::from(1));
        }
        Character::new(m)
    };
    let mut components = Vec::new();
    for (c1, c2) in f1.components.iter().zip(&f2.components) {
        let mut terms = Vec::new();
        for t in &c1.terms {
            let c = &t.coeff * &half;
            terms.push(Term { coeff: c.clone(), character: embed(t.character.matrix(), 0, 0, false) });
            terms.push(Term { coeff: c, character: embed(t.character.matrix(), 0, 0, true) });
        }
        for t in &c2.terms {
            let c = &t.coeff * &half;
            terms.push(Term { coeff: c.clone(), character: embed(t.character.matrix(), k1, r1, false) });
            terms.push(Term { coeff: -c, character: embed(t.character.matrix(), k1, r1, true) });
        }
        components.push(PepPolynomial { terms });
    }
    canonicalize(&PepVector { field, bases, variables: r, components })
}

/// A polynomial map `K^inputs → K^outputs`; each output is a list of
/// monomials `(coefficient, exponent per input)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialMap {
    pub inputs: usize,
    pub outputs: Vec<Vec<(FieldElement, Vec<u32>)>>,
}

fn multiply(f: &PepVector, a: &PepPolynomial, b: &PepPolynomial) -> PepPolynomial {
    let mut m: BTreeMap<Character, FieldElement> = BTreeMap::new();
    for x in &a.terms {
        for y in &b.terms {
            let mut e = x.character.matrix().clone();
            for i in 0..e.rows() {
                for j in 0..e.cols() {
                    let v = e.get(i, j) + y.character.matrix().get(i, j);
                    e.set(i, j, v);
                }
            }
            let entry = m.entry(Character::new(e)).or_insert_with(|| FieldElement::zero(f.field));
            *entry = &*entry + &(&x.coeff * &y.coeff);
        }
    }
    PepPolynomial { terms: m.into_iter().filter(|(_, c)| !c.is_zero()).map(|(character, coeff)| Term { coeff, character }).collect() }
}

/// `P ∘ f` as a PEP vector in the same variables.
pub fn compose_polynomial_map(f: &PepVector, map: &PolynomialMap) -> Result<PepVector> {
    if map.inputs != f.components.len() {
        return Err(Error::Shape(format!("map takes {} inputs, f has {} components", map.inputs, f.components.len())));
    }
    let k = f.bases.len();
    let mut components = Vec::with_capacity(map.outputs.len());
    for out in &map.outputs {
        let mut terms = Vec::new();
        for (c, exps) in out {
            if exps.len() != map.inputs {
                return Err(Error::Shape("monomial exponent length".into()));
            }
            let mut prod = PepPolynomial { terms: vec![Term { coeff: c.lift(f.field)?, character: Character::trivial(k, f.variables) }] };
            for (i, &e) in exps.iter().enumerate() {
                for _ in 0..e {
                    prod = multiply(f, &prod, &f.components[i]);
                }
            }
            terms.extend(prod.terms);
        }
        components.push(PepPolynomial { terms });
    }
    canonicalize(&PepVector { field: f.field, bases: f.bases.clone(), variables: f.variables, components })
}

/// `m ↦ f(offset + Σ m_j b_j)` in the coordinates of the coset's HNF basis.
pub fn restrict_to_coset(f: &PepVector, coset: &Coset) -> Result<PepVector> {
    if coset.dim() != f.variables {
        return Err(Error::Shape("coset lives in a different ambient lattice".into()));
    }
    let bt = coset.lattice().basis().transpose();
    let mut components = Vec::with_capacity(f.components.len());
    for c in &f.components {
        let mut terms = Vec::with_capacity(c.terms.len());
        for t in &c.terms {
            let shift = t.character.value_big(&f.bases, coset.offset())?;
            terms.push(Term { coeff: &t.coeff * &shift, character: Character::new(t.character.matrix().mul(&bt)) });
        }
        components.push(PepPolynomial { terms });
    }
    canonicalize(&PepVector { field: f.field, bases: f.bases.clone(), variables: coset.rank(), components })
}

/// Exact zero test (characters are linearly independent functions).
pub fn is_identically_zero(f: &PepVector) -> Result<bool> {
    Ok(canonicalize(f)?.components.iter().all(|c| c.terms.is_empty()))
}

/// Split of one component's terms into a non-degenerate part and a part
/// summing to zero. Indices refer to the canonical term order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentSplit {
    pub nondegenerate: Vec<usize>,
    pub vanishing: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DegeneracyType {
    pub components: Vec<ComponentSplit>,
}

impl DegeneracyType {
    pub fn is_nondegenerate(&self) -> bool {
        self.components.iter().all(|c| c.vanishing.is_empty())
    }
}

/// Degeneracy type of `f` at `n`: per component the largest set of terms
/// with no vanishing subsum whose complement sums to zero; ties are broken
/// by the lexicographically smallest sorted index list.
pub fn degeneracy_type(f: &PepVector, n: &[i64]) -> Result<DegeneracyType> {
    let g = canonicalize(f)?;
    degeneracy_of_terms(&g.term_values(n)?)
}

/// Degeneracy type from explicit term values.
pub fn degeneracy_of_terms(values: &[Vec<FieldElement>]) -> Result<DegeneracyType> {
    let components = values.iter().map(|v| split_component(v)).collect::<Result<Vec<_>>>()?;
    Ok(DegeneracyType { components })
}

fn split_component(s: &[FieldElement]) -> Result<ComponentSplit> {
    let e = s.len();
    if e > MAX_DEGENERACY_TERMS {
        return Err(Error::Cap { what: "terms per component", limit: MAX_DEGENERACY_TERMS as u64, requested: e as u64 });
    }
    if e == 0 {
        return Ok(ComponentSplit { nondegenerate: Vec::new(), vanishing: Vec::new() });
    }
    let field = s[0].field();
    let full = 1usize << e;
    let mut zero = vec![false; full];
    let mut sums: Vec<FieldElement> = Vec::with_capacity(full);
    sums.push(FieldElement::zero(field));
    zero[0] = true;
    for mask in 1..full {
        let low = mask.trailing_zeros() as usize;
        let v = &sums[mask & (mask - 1)] + &s[low];
        zero[mask] = v.is_zero();
        sums.push(v);
    }
    // has_zero[mask]: some nonempty submask sums to zero
    let mut has_zero: Vec<bool> = (0..full).map(|m| m != 0 && zero[m]).collect();
    for bit in 0..e {
        for mask in 0..full {
            if mask & (1 << bit) != 0 && has_zero[mask ^ (1 << bit)] {
                has_zero[mask] = true;
            }
        }
    }
    let all = full - 1;
    let mut best: Option<Vec<usize>> = None;
    for t1 in 0..full {
        if has_zero[t1] || !zero[all ^ t1] {
            continue;
        }
        let idx: Vec<usize> = (0..e).filter(|i| t1 & (1 << i) != 0).collect();
        let better = match &best {
            None => true,
            Some(b) => idx.len() > b.len() || (idx.len() == b.len() && idx < *b),
        };
        if better {
            best = Some(idx);
        }
    }
    let nondegenerate = best.expect("a maximal vanishing subset always leaves a non-degenerate rest");
    let vanishing = (0..e).filter(|i| !nondegenerate.contains(i)).collect();
    Ok(ComponentSplit { nondegenerate, vanishing })
}

/// Append a fresh variable `l` and a component `α^l`; `α` must be
/// multiplicatively independent of the bases.
pub fn pad_with_independent_base(f: &PepVector, alpha: &FieldElement) -> Result<PepVector> {
    let alpha = alpha.lift(f.field)?;
    if alpha.is_zero() {
        return Err(Error::ZeroBase);
    }
    let mut all = f.bases.clone();
    all.push(alpha.clone());
    let rel = multiplicative_relations(&all)?;
    let k = f.bases.len();
    if (0..rel.lattice.rank()).any(|i| !rel.lattice.basis().get(i, k).is_zero()) {
        return Err(Error::Precondition("padding base depends on the existing bases".into()));
    }
    let r = f.variables;
    let grow = |m: &IntMatrix| {
        let mut g = IntMatrix::zeros(k + 1, r + 1);
        for i in 0..k {
            for j in 0..r {
                g.set(i, j, m.get(i, j).clone());
            }
        }
        g
    };
    let mut components: Vec<PepPolynomial> = f
        .components
        .iter()
        .map(|c| PepPolynomial {
            terms: c.terms.iter().map(|t| Term { coeff: t.coeff.clone(), character: Character::new(grow(t.character.matrix())) }).collect(),
        })
        .collect();
    let mut e = IntMatrix::zeros(k + 1, r + 1);
    e.set(k, r, BigInt::from(1));
    components.push(PepPolynomial { terms: vec![Term { coeff: FieldElement::one(f.field), character: Character::new(e) }] });
    PepVector::new(f.field, all, r + 1, components)
}

/// Convenience constructor from small integers: each term is
/// `(coefficient, exponent rows)`.
pub fn pep_from_ints(
    field: Field,
    bases: Vec<FieldElement>,
    variables: usize,
    components: Vec<Vec<(FieldElement, Vec<Vec<i64>>)>>,
) -> Result<PepVector> {
    let k = bases.len();
    let comps = components
        .into_iter()
        .map(|c| PepPolynomial {
            terms: c
                .into_iter()
                .map(|(coeff, rows)| {
                    let rows = if rows.is_empty() { vec![vec![0; variables]; k] } else { rows };
                    Term { coeff, character: Character::new(IntMatrix::from_rows(variables, &rows)) }
                })
                .collect(),
        })
        .collect();
    PepVector::new(field, bases, variables, comps)
}

/// Exponent of a base in a character as an `i64` matrix (for display and formats).
pub fn exponent_rows(c: &Character) -> Option<Vec<Vec<i64>>> {
    c.matrix().to_i64_rows()
}
