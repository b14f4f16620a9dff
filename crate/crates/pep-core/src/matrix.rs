//! Square matrices over ℚ or a quadratic field: semisimplicity, Jordan
//! splitting, bounded-generation parametrizations, power membership, and
//! the growth sources used as ambient counts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::counting::{count_by_height, image_up_to_height, Completeness};
use crate::error::{Error, Result};
use crate::heightnorm::affine_height;
use crate::lattice::{IntMatrix, Lattice};
use crate::nt;
use crate::pep::{Character, PepPolynomial, PepVector, Term};
use crate::places::{Field, FieldElement};
use crate::reduction::{multiplicative_relations, pep_rank};

/// Row-major `n × n` matrix with entries in one field.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matrix {
    field: Field,
    n: usize,
    entries: Vec<FieldElement>,
}

fn join(a: Field, b: Field) -> Result<Field> {
    match (a, b) {
        (Field::Rational, k) | (k, Field::Rational) => Ok(k),
        (x, y) if x == y => Ok(x),
        _ => Err(Error::IncompatibleFields),
    }
}

impl Matrix {
    pub fn new(field: Field, n: usize, entries: Vec<FieldElement>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Shape(format!("{} entries for a {n}x{n} matrix", entries.len())));
        }
        let entries = entries.iter().map(|x| x.lift(field)).collect::<Result<Vec<_>>>()?;
        Ok(Self { field, n, entries })
    }

    pub fn from_ints(n: usize, entries: &[i64]) -> Result<Self> {
        Self::new(Field::Rational, n, entries.iter().map(|&x| FieldElement::from_int(Field::Rational, x)).collect())
    }

    pub fn identity(field: Field, n: usize) -> Self {
        Self::diagonal(field, &vec![FieldElement::one(field); n])
    }

    pub fn diagonal(field: Field, d: &[FieldElement]) -> Self {
        let n = d.len();
        let mut entries = vec![FieldElement::zero(field); n * n];
        for (i, x) in d.iter().enumerate() {
            entries[i * n + i] = x.lift(field).expect("diagonal entry in the field");
        }
        Self { field, n, entries }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElement {
        &self.entries[i * self.n + j]
    }

    pub fn lift(&self, field: Field) -> Result<Self> {
        Self::new(field, self.n, self.entries.clone())
    }

    fn zero_like(field: Field, n: usize) -> Self {
        Self { field, n, entries: vec![FieldElement::zero(field); n * n] }
    }

    pub fn mul(&self, o: &Matrix) -> Result<Matrix> {
        let field = join(self.field, o.field)?;
        let n = self.n;
        if o.n != n {
            return Err(Error::Shape("matrix sizes differ".into()));
        }
        let mut out = Self::zero_like(field, n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let idx = i * n + j;
                    out.entries[idx] = &out.entries[idx] + &(a * o.get(k, j));
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, o: &Matrix) -> Result<Matrix> {
        let field = join(self.field, o.field)?;
        let entries = self.entries.iter().zip(&o.entries).map(|(a, b)| a + b).collect();
        Matrix::new(field, self.n, entries)
    }

    pub fn sub(&self, o: &Matrix) -> Result<Matrix> {
        let field = join(self.field, o.field)?;
        let entries = self.entries.iter().zip(&o.entries).map(|(a, b)| a - b).collect();
        Matrix::new(field, self.n, entries)
    }

    pub fn scale(&self, c: &FieldElement) -> Result<Matrix> {
        let field = join(self.field, c.field())?;
        Matrix::new(field, self.n, self.entries.iter().map(|a| a * c).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.field, self.n)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j).is_zero()))
    }

    pub fn trace(&self) -> FieldElement {
        (0..self.n).fold(FieldElement::zero(self.field), |a, i| &a + self.get(i, i))
    }

    /// Determinant by Gaussian elimination over the field.
    pub fn det(&self) -> FieldElement {
        let n = self.n;
        let mut m = self.entries.clone();
        let mut det = FieldElement::one(self.field);
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !m[r * n + c].is_zero()) else {
                return FieldElement::zero(self.field);
            };
            if p != c {
                for j in 0..n {
                    m.swap(p * n + j, c * n + j);
                }
                det = -det;
            }
            let piv = m[c * n + c].clone();
            det = &det * &piv;
            let inv = piv.inv().expect("nonzero pivot");
            for r in c + 1..n {
                let f = &m[r * n + c] * &inv;
                if f.is_zero() {
                    continue;
                }
                for j in c..n {
                    let v = &m[r * n + j] - &(&f * &m[c * n + j]);
                    m[r * n + j] = v;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let mut a = self.entries.clone();
        let mut b = Self::identity(self.field, n).entries;
        for c in 0..n {
            let p = (c..n).find(|&r| !a[r * n + c].is_zero()).ok_or(Error::Singular)?;
            for j in 0..n {
                a.swap(p * n + j, c * n + j);
                b.swap(p * n + j, c * n + j);
            }
            let inv = a[c * n + c].inv()?;
            for j in 0..n {
                a[c * n + j] = &a[c * n + j] * &inv;
                b[c * n + j] = &b[c * n + j] * &inv;
            }
            for r in 0..n {
                if r == c || a[r * n + c].is_zero() {
                    continue;
                }
                let f = a[r * n + c].clone();
                for j in 0..n {
                    a[r * n + j] = &a[r * n + j] - &(&f * &a[c * n + j]);
                    b[r * n + j] = &b[r * n + j] - &(&f * &b[c * n + j]);
                }
            }
        }
        Ok(Matrix { field: self.field, n, entries: b })
    }

    pub fn pow(&self, e: i64) -> Result<Matrix> {
        let mut base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = Self::identity(self.field, self.n);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Characteristic polynomial, coefficients from the constant term up
    /// (Faddeev–LeVerrier).
    pub fn char_poly(&self) -> Vec<FieldElement> {
        let n = self.n;
        let k = self.field;
        let mut c = vec![FieldElement::zero(k); n + 1];
        c[n] = FieldElement::one(k);
        let mut m = Self::zero_like(k, n);
        let id = Self::identity(k, n);
        for step in 1..=n {
            m = self.mul(&m).unwrap().add(&id.scale(&c[n - step + 1]).unwrap()).unwrap();
            let t = self.mul(&m).unwrap().trace();
            c[n - step] = -(&t * &FieldElement::rational(k, BigRational::new(BigInt::one(), BigInt::from(step))));
        }
        c
    }
}

fn poly_trim(mut p: Vec<FieldElement>) -> Vec<FieldElement> {
    while p.last().is_some_and(|x| x.is_zero()) {
        p.pop();
    }
    p
}

fn poly_derivative(p: &[FieldElement]) -> Vec<FieldElement> {
    let k = p.first().map(|x| x.field()).unwrap_or(Field::Rational);
    poly_trim(p.iter().enumerate().skip(1).map(|(i, c)| c * &FieldElement::from_int(k, i as i64)).collect())
}

fn poly_divrem(a: &[FieldElement], b: &[FieldElement]) -> (Vec<FieldElement>, Vec<FieldElement>) {
    let b = poly_trim(b.to_vec());
    let mut r = poly_trim(a.to_vec());
    let k = a.first().or(b.first()).map(|x| x.field()).unwrap_or(Field::Rational);
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let lead = b.last().expect("nonzero divisor").inv().expect("nonzero lead");
    let mut q = vec![FieldElement::zero(k); r.len() - b.len() + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let f = r.last().unwrap() * &lead;
        for (i, c) in b.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &(&f * c);
        }
        q[shift] = f;
        r = poly_trim(r);
    }
    (q, r)
}

fn poly_gcd(a: &[FieldElement], b: &[FieldElement]) -> Vec<FieldElement> {
    let mut a = poly_trim(a.to_vec());
    let mut b = poly_trim(b.to_vec());
    while !b.is_empty() {
        let (_, r) = poly_divrem(&a, &b);
        a = b;
        b = r;
    }
    if let Some(l) = a.last() {
        let inv = l.inv().unwrap();
        a = a.iter().map(|c| c * &inv).collect();
    }
    a
}

/// `p / gcd(p, p')`: the product of the distinct irreducible factors.
fn squarefree_part(p: &[FieldElement]) -> Vec<FieldElement> {
    let g = poly_gcd(p, &poly_derivative(p));
    poly_divrem(p, &g).0
}

fn poly_at(p: &[FieldElement], m: &Matrix) -> Matrix {
    let mut acc = Matrix::zero_like(m.field, m.n);
    let id = Matrix::identity(m.field, m.n);
    for c in p.iter().rev() {
        acc = acc.mul(m).unwrap().add(&id.scale(c).unwrap()).unwrap();
    }
    acc
}

/// Semisimple iff the squarefree part of the characteristic polynomial
/// already annihilates the matrix.
pub fn is_semisimple(m: &Matrix) -> bool {
    poly_at(&squarefree_part(&m.char_poly()), m).is_zero()
}

/// Multiplicative Jordan decomposition `M = S·U` with `S` semisimple, `U`
/// unipotent and `SU = US`, computed over the entry field by Newton's
/// iteration on the squarefree part of the characteristic polynomial.
pub fn jordan_split(m: &Matrix) -> Result<(Matrix, Matrix)> {
    if m.det().is_zero() {
        return Err(Error::Singular);
    }
    let q = squarefree_part(&m.char_poly());
    let dq = poly_derivative(&q);
    let mut s = m.clone();
    for _ in 0..=m.n + 1 {
        let qs = poly_at(&q, &s);
        if qs.is_zero() {
            let u = s.inverse()?.mul(m)?;
            return Ok((s, u));
        }
        let step = qs.mul(&poly_at(&dq, &s).inverse()?)?;
        s = s.sub(&step)?;
    }
    Err(Error::Diagnostic("Newton iteration for the semisimple part did not terminate".into()))
}

/// `(U − I)^n = 0`.
pub fn is_unipotent(m: &Matrix) -> bool {
    let nil = m.sub(&Matrix::identity(m.field, m.n)).unwrap();
    nil.pow(m.n as i64).unwrap().is_zero()
}

fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| BigRational::new(n, d))
}

/// Square root inside the element's own field, if there is one.
pub fn sqrt_in_field(x: &FieldElement) -> Option<FieldElement> {
    let k = x.field();
    if x.is_zero() {
        return Some(x.clone());
    }
    let Some(d) = k.d() else {
        return rational_sqrt(x.a()).map(|s| FieldElement::rational(k, s));
    };
    let dd = BigRational::from_integer(BigInt::from(d));
    if x.b().is_zero() {
        if let Some(s) = rational_sqrt(x.a()) {
            return Some(FieldElement::rational(k, s));
        }
        return rational_sqrt(&(x.a() / &dd)).map(|s| FieldElement::new(k, BigRational::zero(), s).unwrap());
    }
    let norm = x.norm();
    let s = rational_sqrt(&norm)?;
    let two = BigRational::from_integer(BigInt::from(2));
    for t in [(x.a() + &s) / &two, (x.a() - &s) / &two] {
        if let Some(u) = rational_sqrt(&t) {
            if u.is_zero() {
                continue;
            }
            let v = x.b() / (&two * &u);
            let y = FieldElement::new(k, u, v).unwrap();
            if &y * &y == *x {
                return Some(y);
            }
        }
    }
    None
}

/// Squarefree `d` and rational `c` with `q = c² d`.
fn squarefree_decomposition(q: &BigRational) -> Result<(i64, BigRational)> {
    let m: BigInt = q.numer() * q.denom();
    let mut d: i64 = if m.is_negative() { -1 } else { 1 };
    for (p, e) in nt::factor(&BigUint::from(m.magnitude().clone()))? {
        if e % 2 == 1 {
            d = d.checked_mul(p as i64).ok_or(Error::UnsupportedField("discriminant too large".into()))?;
        }
    }
    let c = rational_sqrt(&(q / BigRational::from_integer(BigInt::from(d)))).expect("square cofactor");
    Ok((d, c))
}

/// `g⁻¹ M g = diag(eigenvalues)`, checked exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemisimpleCert {
    pub eigenvalues: Vec<FieldElement>,
    pub conjugator: Matrix,
}

impl SemisimpleCert {
    pub fn field(&self) -> Result<Field> {
        self.eigenvalues.iter().try_fold(self.conjugator.field, |k, x| join(k, x.field()))
    }

    pub fn verify(&self, m: &Matrix) -> Result<()> {
        let k = join(self.field()?, m.field)?;
        let g = self.conjugator.lift(k)?;
        let d = Matrix::diagonal(k, &self.eigenvalues);
        if g.size() != m.size() || self.eigenvalues.len() != m.size() {
            return Err(Error::Certificate("certificate has the wrong size".into()));
        }
        let gi = g.inverse().map_err(|_| Error::Certificate("conjugating matrix is singular".into()))?;
        if gi.mul(&m.lift(k)?)?.mul(&g)? != d {
            return Err(Error::Certificate("conjugation does not diagonalize".into()));
        }
        Ok(())
    }
}

/// Diagonalization certificate for diagonal matrices and for 2×2 matrices
/// whose eigenvalues lie in ℚ or a quadratic field.
pub fn certify_semisimple(m: &Matrix) -> Result<SemisimpleCert> {
    let k = m.field;
    if m.is_diagonal() {
        let eig = (0..m.n).map(|i| m.get(i, i).clone()).collect();
        return Ok(SemisimpleCert { eigenvalues: eig, conjugator: Matrix::identity(k, m.n) });
    }
    if m.n != 2 {
        return Err(Error::Precondition("automatic certificates cover diagonal and 2x2 matrices only".into()));
    }
    let t = m.trace();
    let disc = &(&t * &t) - &(&FieldElement::from_int(k, 4) * &m.det());
    if disc.is_zero() {
        return Err(Error::Precondition("matrix is not semisimple".into()));
    }
    let (field, s) = match sqrt_in_field(&disc) {
        Some(s) => (k, s),
        None if k == Field::Rational => {
            let (d, c) = squarefree_decomposition(disc.a())?;
            let kk = Field::quadratic(d)?;
            (kk, FieldElement::new(kk, BigRational::zero(), c)?)
        }
        None => return Err(Error::UnsupportedField(format!("eigenvalues of a matrix over {k} leave the field"))),
    };
    let m = m.lift(field)?;
    let t = t.lift(field)?;
    let half = FieldElement::rational(field, BigRational::new(BigInt::one(), BigInt::from(2)));
    let eig = [&(&t + &s) * &half, &(&t - &s) * &half];
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let vec_for = |l: &FieldElement| if !b.is_zero() { [b.clone(), l - a] } else { [l - d, c.clone()] };
    let (v1, v2) = (vec_for(&eig[0]), vec_for(&eig[1]));
    let g = Matrix::new(field, 2, vec![v1[0].clone(), v2[0].clone(), v1[1].clone(), v2[1].clone()])?;
    let cert = SemisimpleCert { eigenvalues: eig.to_vec(), conjugator: g };
    cert.verify(&m)?;
    Ok(cert)
}

/// Bounded-generation data `Γ = ⟨γ₁⟩⋯⟨γ_r⟩` with a diagonalization of each
/// generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgSpec {
    pub factors: Vec<(Matrix, SemisimpleCert)>,
}

impl BgSpec {
    pub fn new(factors: Vec<(Matrix, SemisimpleCert)>) -> Result<Self> {
        let s = Self { factors };
        s.field()?;
        for (m, c) in &s.factors {
            c.verify(m)?;
        }
        Ok(s)
    }

    /// Certificates built automatically for each generator.
    pub fn from_matrices(ms: Vec<Matrix>) -> Result<Self> {
        let factors = ms.into_iter().map(|m| Ok((m.clone(), certify_semisimple(&m)?))).collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }

    pub fn field(&self) -> Result<Field> {
        self.factors.iter().try_fold(Field::Rational, |k, (m, c)| join(join(k, m.field)?, c.field()?))
    }

    pub fn size(&self) -> usize {
        self.factors.first().map_or(0, |(m, _)| m.n)
    }

    /// `γ₁^{a₁} ⋯ γ_r^{a_r}` computed directly.
    pub fn product(&self, a: &[i64]) -> Result<Matrix> {
        let k = self.field()?;
        let mut acc = Matrix::identity(k, self.size());
        for ((m, _), &e) in self.factors.iter().zip(a) {
            acc = acc.mul(&m.lift(k)?.pow(e)?)?;
        }
        Ok(acc)
    }
}

/// Largest number of eigenvalue paths `n^r` expanded by `bg_to_pep`.
pub const MAX_BG_PATHS: usize = 1 << 16;

/// Entries of `∏ γ_i^{a_i}` as PEPs: each generator is `Σ_k λ_{ik}^{a_i} E_{ik}`
/// with `E_{ik}` the spectral projectors, and the product is expanded over
/// eigenvalue paths. Bases are the distinct eigenvalues.
pub fn bg_to_pep(spec: &BgSpec) -> Result<PepVector> {
    let k = spec.field()?;
    let n = spec.size();
    let r = spec.factors.len();
    if spec.factors.iter().any(|(m, _)| m.n != n) {
        return Err(Error::Shape("generators have different sizes".into()));
    }
    for (m, c) in &spec.factors {
        c.verify(m)?;
    }
    let paths = n.checked_pow(r as u32).filter(|&p| p <= MAX_BG_PATHS);
    let Some(paths) = paths else {
        return Err(Error::Cap { what: "eigenvalue paths", limit: MAX_BG_PATHS as u64, requested: u64::MAX });
    };
    let mut projectors: Vec<Vec<Matrix>> = Vec::with_capacity(r);
    let mut eig: Vec<Vec<FieldElement>> = Vec::with_capacity(r);
    for (_, c) in &spec.factors {
        let g = c.conjugator.lift(k)?;
        let gi = g.inverse()?;
        let mut ps = Vec::with_capacity(n);
        for j in 0..n {
            let entries = (0..n).flat_map(|p| (0..n).map(|q| g.get(p, j) * gi.get(j, q)).collect::<Vec<_>>()).collect();
            ps.push(Matrix::new(k, n, entries)?);
        }
        projectors.push(ps);
        eig.push(c.eigenvalues.iter().map(|x| x.lift(k)).collect::<Result<_>>()?);
    }
    if eig.iter().flatten().any(|x| x.is_zero()) {
        return Err(Error::Singular);
    }
    let bases: Vec<FieldElement> = eig.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut comps: Vec<Vec<Term>> = vec![Vec::new(); n * n];
    for idx in 0..paths {
        let mut path = Vec::with_capacity(r);
        let mut x = idx;
        for _ in 0..r {
            path.push(x % n);
            x /= n;
        }
        let mut prod = Matrix::identity(k, n);
        for (i, &j) in path.iter().enumerate() {
            prod = prod.mul(&projectors[i][j])?;
        }
        if prod.is_zero() {
            continue;
        }
        let mut e = IntMatrix::zeros(bases.len(), r);
        for (i, &j) in path.iter().enumerate() {
            let b = bases.binary_search(&eig[i][j]).expect("eigenvalue among bases");
            e.set(b, i, BigInt::one());
        }
        let ch = Character::new(e);
        for (pos, c) in prod.entries.iter().enumerate() {
            if !c.is_zero() {
                comps[pos].push(Term { coeff: c.clone(), character: ch.clone() });
            }
        }
    }
    PepVector::new(k, bases, r, comps.into_iter().map(PepPolynomial::new).collect())
}

/// `h_aff` of the entry vector.
pub fn matrix_height(m: &Matrix) -> f64 {
    affine_height(&m.entries)
}

/// ℤ-rank of the group generated by commuting semisimple generators, from
/// the multiplicative relations among their joint eigenvalues.
pub fn bg_group_rank(spec: &BgSpec) -> Result<usize> {
    let k = spec.field()?;
    let r = spec.factors.len();
    let n = spec.size();
    let mats: Vec<Matrix> = spec.factors.iter().map(|(m, _)| m.lift(k)).collect::<Result<_>>()?;
    let mut joint: Option<Vec<Vec<FieldElement>>> = None;
    for (_, c) in &spec.factors {
        let g = c.conjugator.lift(k)?;
        let gi = g.inverse()?;
        let diags: Vec<Matrix> = mats.iter().map(|m| gi.mul(m)?.mul(&g)).collect::<Result<_>>()?;
        if diags.iter().all(|d| d.is_diagonal()) {
            joint = Some(diags.iter().map(|d| (0..n).map(|i| d.get(i, i).clone()).collect()).collect());
            break;
        }
    }
    let joint = joint.ok_or(Error::Precondition("no certificate diagonalizes all generators at once".into()))?;
    let mut rel = Lattice::full(r);
    for j in 0..n {
        let col: Vec<FieldElement> = joint.iter().map(|row| row[j].clone()).collect();
        rel = rel.intersect(&multiplicative_relations(&col)?.lattice);
    }
    Ok(r - rel.rank())
}

/// Both sides of the rank identity for a commuting bounded-generation set:
/// the ℤ-rank of the group and the rank of its PEP parametrization.
pub fn lemma_ranks(spec: &BgSpec) -> Result<(usize, usize)> {
    Ok((bg_group_rank(spec)?, pep_rank(&bg_to_pep(spec)?)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipReport {
    /// Exponents `l` with `|l| ≤ N` and `g^l` in the image.
    pub exponents: Vec<i64>,
    pub count: u64,
    /// `(ln N)^{rank+1}`.
    pub envelope: f64,
    pub rank: usize,
    /// Image points examined.
    pub candidates: usize,
    pub completeness: Completeness,
}

const FIRST_PRIME: u64 = (1 << 61) - 1;

fn reduce_mod(x: &FieldElement, p: u64, root: u64) -> Option<u64> {
    let a = nt::rational_mod_p(x.a(), p)?;
    if x.b().is_zero() {
        return Some(a);
    }
    let b = nt::rational_mod_p(x.b(), p)?;
    Some((a as u128 + nt::mul_mod(b, root, p) as u128).rem_euclid(p as u128) as u64)
}

fn reduce_all(xs: &[FieldElement], p: u64, root: u64) -> Option<Vec<u64>> {
    xs.iter().map(|x| reduce_mod(x, p, root)).collect()
}

fn mat_mul_mod(a: &[u64], b: &[u64], n: usize, p: u64) -> Vec<u64> {
    let mut out = vec![0u64; n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x == 0 {
                continue;
            }
            for j in 0..n {
                let v = out[i * n + j] as u128 + nt::mul_mod(x, b[k * n + j], p) as u128;
                out[i * n + j] = (v % p as u128) as u64;
            }
        }
    }
    out
}

fn fingerprint(v: &[u64], p: u64) -> u64 {
    let mut h = 0u64;
    for (i, &x) in v.iter().enumerate() {
        h = ((h as u128 * 1_000_003 + x as u128 + i as u128) % p as u128) as u64;
    }
    h
}

/// Upper bound for `h_aff(g^l)` over `|l| ≤ N`: exact via the binomial
/// expansion for rational unipotent `g`, otherwise the largest exact height
/// seen at `±2^k` and `±N` (best effort).
fn power_height_bound(g: &Matrix, big_n: i64) -> Result<(f64, bool)> {
    if g.field == Field::Rational && is_unipotent(g) {
        let n = g.n;
        let nil = g.sub(&Matrix::identity(g.field, n))?;
        let mut powers = vec![Matrix::identity(g.field, n)];
        for _ in 1..n {
            powers.push(powers.last().unwrap().mul(&nil)?);
        }
        let mut den = BigInt::one();
        for pm in &powers {
            for x in &pm.entries {
                den = num_integer::Integer::lcm(&den, x.a().denom());
            }
        }
        let dl = nt::ln_abs_bigint(&den);
        let mut worst = dl;
        for pos in 0..n * n {
            let mut total = 0.0f64;
            for (k, pm) in powers.iter().enumerate() {
                let c = pm.entries[pos].a().to_f64().unwrap_or(f64::MAX).abs();
                total += c * libm::pow(big_n as f64 + k as f64, k as f64);
            }
            worst = worst.max(dl + libm::log(total.max(1.0)));
        }
        return Ok((worst * 1.000_001 + 1e-9, true));
    }
    let mut h: f64 = 0.0;
    let mut l = 1i64;
    loop {
        let e = l.min(big_n);
        h = h.max(matrix_height(&g.pow(e)?)).max(matrix_height(&g.pow(-e)?));
        if e == big_n {
            break;
        }
        l = l.saturating_mul(2);
    }
    Ok((h, false))
}

/// `#{l : |l| ≤ N, g^l ∈ f(ℤ^r)}`. Image points up to the largest relevant
/// height are enumerated exactly; the scan over `l` runs modulo a large
/// prime and every hit is confirmed in exact arithmetic.
pub fn power_membership_count(g: &Matrix, f: &PepVector, big_n: i64) -> Result<MembershipReport> {
    let n = g.n;
    if f.components().len() != n * n {
        return Err(Error::Shape(format!("expected {} components for {n}x{n} matrices", n * n)));
    }
    let k = join(g.field, f.field())?;
    let g = g.lift(k)?;
    let ginv = g.inverse()?;
    let (lt, exact_bound) = power_height_bound(&g, big_n)?;
    let (image, certified_box) = image_up_to_height(f, lt)?;
    let image: Vec<Vec<FieldElement>> = image.into_iter().map(|v| v.iter().map(|x| x.lift(k)).collect()).collect::<Result<_>>()?;

    let mut p = FIRST_PRIME;
    let (p, root, table) = loop {
        let root = match k.d() {
            None => 0,
            Some(d) => match nt::sqrt_mod(d.rem_euclid(p as i64) as u64, p) {
                Some(r) => r,
                None => {
                    p = next_prime_below(p);
                    continue;
                }
            },
        };
        let mut table: BTreeMap<u64, Vec<(Vec<u64>, usize)>> = BTreeMap::new();
        let mut ok = reduce_all(&g.entries, p, root).is_some() && reduce_all(&ginv.entries, p, root).is_some();
        for (i, v) in image.iter().enumerate() {
            if !ok {
                break;
            }
            match reduce_all(v, p, root) {
                Some(r) => table.entry(fingerprint(&r, p)).or_default().push((r, i)),
                None => ok = false,
            }
        }
        if ok {
            break (p, root, table);
        }
        p = next_prime_below(p);
    };
    let gm = reduce_all(&g.entries, p, root).unwrap();
    let gim = reduce_all(&ginv.entries, p, root).unwrap();
    let mut exponents = Vec::new();
    let mut check = |l: i64, cur: &[u64]| -> Result<()> {
        if let Some(hits) = table.get(&fingerprint(cur, p)) {
            for (res, i) in hits {
                if res.as_slice() == cur && g.pow(l)?.entries == image[*i] {
                    exponents.push(l);
                    break;
                }
            }
        }
        Ok(())
    };
    let mut cur = Matrix::identity(Field::Rational, n).entries.iter().map(|x| reduce_mod(x, p, root).unwrap()).collect::<Vec<_>>();
    check(0, &cur)?;
    for l in 1..=big_n {
        cur = mat_mul_mod(&cur, &gm, n, p);
        check(l, &cur)?;
    }
    cur = Matrix::identity(Field::Rational, n).entries.iter().map(|x| reduce_mod(x, p, root).unwrap()).collect();
    for l in 1..=big_n {
        cur = mat_mul_mod(&cur, &gim, n, p);
        check(-l, &cur)?;
    }
    exponents.sort();
    let rank = pep_rank(f)?;
    let envelope = libm::pow(libm::log(big_n.max(2) as f64), rank as f64 + 1.0);
    Ok(MembershipReport {
        count: exponents.len() as u64,
        exponents,
        envelope,
        rank,
        candidates: image.len(),
        completeness: if exact_bound && certified_box { Completeness::Certified } else { Completeness::BoundaryEstimated },
    })
}

fn next_prime_below(p: u64) -> u64 {
    let mut q = p - 2;
    while !nt::is_prime_u64(q) {
        q -= 2;
    }
    q
}

/// Largest entry bound accepted by the SL₂(ℤ) counter (the product table
/// has `T²` entries).
pub const MAX_SL2_BOUND: i64 = 4096;

/// For `1 ≤ m ≤ T²`, the number of `(b, c) ∈ [1, T]²` with `bc = m`.
#[derive(Clone, Debug)]
pub struct Sl2Table {
    bound: i64,
    products: Vec<u32>,
}

impl Sl2Table {
    pub fn new(bound: i64) -> Result<Self> {
        if bound < 1 {
            return Err(Error::Precondition("entry bound must be at least 1".into()));
        }
        if bound > MAX_SL2_BOUND {
            return Err(Error::Cap { what: "SL2 entry bound", limit: MAX_SL2_BOUND as u64, requested: bound as u64 });
        }
        let t = bound as usize;
        let mut products = vec![0u32; t * t + 1];
        for b in 1..=t {
            for c in 1..=t {
                products[b * c] += 1;
            }
        }
        Ok(Self { bound, products })
    }

    pub fn bound(&self) -> i64 {
        self.bound
    }

    /// Contribution of the rows `a ∈ [lo, hi]`: for each `(a, d)` the number
    /// of `(b, c)` in the box with `bc = ad − 1`.
    pub fn count_rows(&self, lo: i64, hi: i64) -> u64 {
        let t = self.bound;
        let mut total = 0u64;
        for a in lo.max(-t)..=hi.min(t) {
            for d in -t..=t {
                let m = a * d - 1;
                total += if m == 0 {
                    4 * t as u64 + 1
                } else {
                    let am = m.unsigned_abs() as usize;
                    if am < self.products.len() {
                        2 * self.products[am] as u64
                    } else {
                        0
                    }
                };
            }
        }
        total
    }
}

/// `#{γ ∈ SL₂(ℤ) : max |γ_ij| ≤ T}`.
pub fn sl2z_ball_count(bound: i64) -> Result<u64> {
    let t = Sl2Table::new(bound)?;
    Ok(t.count_rows(-bound, bound))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordGrowthRow {
    pub length: usize,
    /// Distinct elements given by words of length at most `length`.
    pub distinct: u64,
    pub max_height: f64,
    /// Every element of this length satisfies `H ≤ n^{l−1} C^l`.
    pub bound_holds: bool,
    /// `δ` with `distinct = ((nC)^l)^δ`.
    pub delta: f64,
}

/// Largest number of distinct elements kept by `free_word_growth`.
pub const MAX_WORDS: usize = 2_000_000;

/// Breadth-first enumeration of the ball of radius `l_max` in the word
/// metric for `{g1^{±1}, g2^{±1}}`, with exact de-duplication.
pub fn free_word_growth(g1: &Matrix, g2: &Matrix, l_max: usize) -> Result<Vec<WordGrowthRow>> {
    let k = join(g1.field, g2.field)?;
    let n = g1.n;
    let gens = [g1.lift(k)?, g1.inverse()?.lift(k)?, g2.lift(k)?, g2.inverse()?.lift(k)?];
    let ln_c = gens.iter().map(matrix_height).fold(0.0f64, f64::max);
    let ln_n = libm::log(n as f64);
    let id = Matrix::identity(k, n);
    let mut seen: BTreeSet<Matrix> = BTreeSet::new();
    seen.insert(id.clone());
    let mut frontier = vec![id];
    let mut rows = vec![WordGrowthRow { length: 0, distinct: 1, max_height: 0.0, bound_holds: true, delta: 0.0 }];
    let mut max_h: f64 = 0.0;
    for l in 1..=l_max {
        let mut next = Vec::new();
        let mut holds = true;
        let bound = (l as f64 - 1.0) * ln_n + l as f64 * ln_c;
        for w in &frontier {
            for s in &gens {
                let x = w.mul(s)?;
                if seen.contains(&x) {
                    continue;
                }
                let h = matrix_height(&x);
                holds &= h <= bound + 1e-9 * bound.max(1.0);
                max_h = max_h.max(h);
                seen.insert(x.clone());
                next.push(x);
                if seen.len() > MAX_WORDS {
                    return Err(Error::Cap { what: "distinct words", limit: MAX_WORDS as u64, requested: seen.len() as u64 });
                }
            }
        }
        let scale = l as f64 * (ln_n + ln_c);
        let distinct = seen.len() as u64;
        let delta = if scale > 0.0 { libm::log(distinct as f64) / scale } else { 0.0 };
        rows.push(WordGrowthRow { length: l, distinct, max_height: max_h, bound_holds: holds, delta });
        frontier = next;
    }
    Ok(rows)
}

/// Counts of the ambient group by height threshold.
#[derive(Clone, Debug, PartialEq)]
pub enum Ambient {
    /// `SL₂(ℤ)` counted by largest entry (equal to `H_aff` for integer matrices).
    Sl2z,
    /// Explicit counts, one per threshold.
    Counts(Vec<u64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Decreasing,
    Constant,
    Increasing,
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsenessRow {
    pub threshold: f64,
    pub subset: u64,
    pub ambient: u64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparsenessReport {
    pub rows: Vec<SparsenessRow>,
    pub trend: Trend,
    pub completeness: Completeness,
}

impl SparsenessReport {
    pub fn looks_sparse(&self) -> bool {
        self.trend == Trend::Decreasing
    }
}

pub fn sparseness_report(f: &PepVector, ambient: &Ambient, thresholds: &[f64]) -> Result<SparsenessReport> {
    let sub = count_by_height(f, thresholds)?;
    let amb: Vec<u64> = match ambient {
        Ambient::Sl2z => thresholds.iter().map(|&t| sl2z_ball_count(t.floor() as i64)).collect::<Result<_>>()?,
        Ambient::Counts(c) if c.len() == thresholds.len() => c.clone(),
        Ambient::Counts(_) => return Err(Error::Shape("one ambient count per threshold".into())),
    };
    let rows: Vec<SparsenessRow> = thresholds
        .iter()
        .zip(&sub.counts)
        .zip(&amb)
        .map(|((&t, &s), &a)| SparsenessRow { threshold: t, subset: s, ambient: a, ratio: if a == 0 { f64::INFINITY } else { s as f64 / a as f64 } })
        .collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let trend = if ratios.windows(2).all(|w| w[1] < w[0]) {
        Trend::Decreasing
    } else if ratios.windows(2).all(|w| w[1] == w[0]) {
        Trend::Constant
    } else if ratios.windows(2).all(|w| w[1] > w[0]) {
        Trend::Increasing
    } else {
        Trend::Mixed
    };
    Ok(SparsenessReport { rows, trend, completeness: sub.completeness })
}
