//! Number fields of degree at most two, their elements, and their places
//! with absolute values normalized so that the product formula holds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::nt;

/// `ℚ` or `ℚ(√d)` with `d` squarefree and different from 0 and 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    Rational,
    Quadratic(i64),
}

impl Field {
    pub fn quadratic(d: i64) -> Result<Field> {
        if d == 0 || d == 1 || !nt::is_squarefree(d) {
            return Err(Error::UnsupportedField(format!(
                "Q(sqrt({d})) needs d squarefree and not 0 or 1"
            )));
        }
        Ok(Field::Quadratic(d))
    }

    pub fn degree(self) -> u32 {
        match self {
            Field::Rational => 1,
            Field::Quadratic(_) => 2,
        }
    }

    pub fn d(self) -> Option<i64> {
        match self {
            Field::Rational => None,
            Field::Quadratic(d) => Some(d),
        }
    }

    pub fn is_imaginary(self) -> bool {
        matches!(self, Field::Quadratic(d) if d < 0)
    }

    pub fn is_real_quadratic(self) -> bool {
        matches!(self, Field::Quadratic(d) if d > 0)
    }

    /// Order of the (cyclic) group of roots of unity.
    pub fn roots_of_unity_order(self) -> u32 {
        match self {
            Field::Quadratic(-1) => 4,
            Field::Quadratic(-3) => 6,
            _ => 2,
        }
    }

    /// The canonical primitive `m`-th root of unity: -1, i, or the one
    /// with positive imaginary part.
    pub fn root_of_unity(self, m: u32) -> Option<FieldElement> {
        let h = || BigRational::new(1.into(), 2.into());
        match (self, m) {
            (_, 1) => Some(FieldElement::one(self)),
            (_, 2) => Some(FieldElement::from_int(self, -1)),
            (Field::Quadratic(-1), 4) => Some(FieldElement::sqrt_d(self)),
            (Field::Quadratic(-3), 3) => Some(FieldElement::new_unchecked(self, -h(), h())),
            (Field::Quadratic(-3), 6) => Some(FieldElement::new_unchecked(self, h(), h())),
            _ => None,
        }
    }

    /// Coefficients `(c0, c1)` with `ω² = c1·ω + c0` for the integral basis `{1, ω}`.
    fn omega_relation(self) -> (BigInt, BigInt) {
        match self {
            Field::Rational => (BigInt::zero(), BigInt::zero()),
            Field::Quadratic(d) if d.rem_euclid(4) == 1 => (BigInt::from((d - 1) / 4), BigInt::one()),
            Field::Quadratic(d) => (BigInt::from(d), BigInt::zero()),
        }
    }

    pub fn archimedean_places(self) -> Vec<Place> {
        match self {
            Field::Rational => vec![Place::new(self, PlaceKind::Real { index: 0 })],
            Field::Quadratic(d) if d > 0 => vec![
                Place::new(self, PlaceKind::Real { index: 0 }),
                Place::new(self, PlaceKind::Real { index: 1 }),
            ],
            Field::Quadratic(_) => vec![Place::new(self, PlaceKind::Complex)],
        }
    }

    /// The places lying over the rational prime `p`.
    pub fn places_above(self, p: u64) -> Result<Vec<Place>> {
        if !nt::is_prime_u64(p) {
            return Err(Error::Precondition(format!("{p} is not prime")));
        }
        let fin = |index, kind, root| Place::new(self, PlaceKind::Finite { p, index, kind, root });
        let d = match self {
            Field::Rational => return Ok(vec![fin(0, Decomposition::Rational, 0)]),
            Field::Quadratic(d) => d,
        };
        let d1 = d.rem_euclid(4) == 1;
        let disc_divisible = if d1 { d % p as i64 == 0 } else { p == 2 || d % p as i64 == 0 };
        if disc_divisible {
            return Ok(vec![fin(0, Decomposition::Ramified, 0)]);
        }
        let roots = if p == 2 {
            // only reached for d ≡ 1 mod 4: ω² - ω - (d-1)/4 mod 2
            if d.rem_euclid(8) == 1 {
                Some((0, 1))
            } else {
                None
            }
        } else {
            let dm = d.rem_euclid(p as i64) as u64;
            nt::sqrt_mod(dm, p).map(|s| {
                let (r0, r1) = if d1 {
                    let inv2 = (p + 1) / 2;
                    (nt::mul_mod((1 + s) % p, inv2, p), nt::mul_mod((1 + p - s) % p, inv2, p))
                } else {
                    (s, (p - s) % p)
                };
                (r0.min(r1), r0.max(r1))
            })
        };
        Ok(match roots {
            Some((r0, r1)) => vec![fin(0, Decomposition::Split, r0), fin(1, Decomposition::Split, r1)],
            None => vec![fin(0, Decomposition::Inert, 0)],
        })
    }

    fn join(self, other: Field) -> Field {
        match (self, other) {
            (a, b) if a == b => a,
            (Field::Rational, b) => b,
            (a, Field::Rational) => a,
            _ => panic!("arithmetic between elements of different quadratic fields"),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rational => write!(f, "Q"),
            Field::Quadratic(d) => write!(f, "Q(sqrt({d}))"),
        }
    }
}

/// `a + b√d` with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement {
    field: Field,
    a: BigRational,
    b: BigRational,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

impl FieldElement {
    pub fn new(field: Field, a: BigRational, b: BigRational) -> Result<Self> {
        if field == Field::Rational && !b.is_zero() {
            return Err(Error::IncompatibleFields);
        }
        Ok(Self { field, a, b })
    }

    fn new_unchecked(field: Field, a: BigRational, b: BigRational) -> Self {
        Self { field, a, b }
    }

    pub fn rational(field: Field, a: BigRational) -> Self {
        Self { field, a, b: BigRational::zero() }
    }

    pub fn from_int(field: Field, n: i64) -> Self {
        Self::rational(field, rat(n))
    }

    pub fn zero(field: Field) -> Self {
        Self::from_int(field, 0)
    }

    pub fn one(field: Field) -> Self {
        Self::from_int(field, 1)
    }

    /// `√d` itself.
    pub fn sqrt_d(field: Field) -> Self {
        assert!(field != Field::Rational);
        Self { field, a: BigRational::zero(), b: BigRational::one() }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn a(&self) -> &BigRational {
        &self.a
    }

    pub fn b(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Re-home the element in `field`; fails if it does not live there.
    pub fn lift(&self, field: Field) -> Result<Self> {
        if field == self.field || self.field == Field::Rational || (field == Field::Rational && self.b.is_zero()) {
            return Ok(Self { field, a: self.a.clone(), b: self.b.clone() });
        }
        Err(Error::IncompatibleFields)
    }

    fn d_rat(&self) -> BigRational {
        rat(self.field.d().unwrap_or(0))
    }

    pub fn conj(&self) -> Self {
        Self { field: self.field, a: self.a.clone(), b: -self.b.clone() }
    }

    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - self.d_rat() * &self.b * &self.b
    }

    pub fn trace(&self) -> BigRational {
        rat(2) * &self.a
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.b.is_zero() {
            return Ok(Self::rational(self.field, self.a.recip()));
        }
        let n = self.norm();
        Ok(Self { field: self.field, a: &self.a / &n, b: -(&self.b / &n) })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        if self.b.is_zero() {
            return Ok(Self::rational(self.field, num_traits::pow(self.a.clone(), e as usize)));
        }
        let mut acc = Self::one(self.field);
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    pub fn pow_big(&self, e: &BigInt) -> Result<Self> {
        let e = e
            .to_i64()
            .ok_or_else(|| Error::Precondition("exponent does not fit in 64 bits".into()))?;
        self.pow(e)
    }

    /// Coordinates `(u, w)` with `x = u + w·ω` in the integral basis `{1, ω}`.
    pub fn integral_coords(&self) -> (BigRational, BigRational) {
        match self.field {
            Field::Quadratic(d) if d.rem_euclid(4) == 1 => (&self.a - &self.b, rat(2) * &self.b),
            _ => (self.a.clone(), self.b.clone()),
        }
    }

    /// `ln |σ(x)|` for the real embedding sending `√d` to `sign·√d`. Uses the
    /// conjugate and the exact norm to avoid cancellation.
    fn ln_abs_real(&self, sign: i32) -> f64 {
        let d = self.field.d().unwrap_or(0);
        if self.b.is_zero() {
            return nt::ln_abs_rational(&self.a);
        }
        let ln_bs = nt::ln_abs_rational(&self.b) + 0.5 * libm::log(d as f64);
        if self.a.is_zero() {
            return ln_bs;
        }
        let same = (self.a.is_positive() == self.b.is_positive()) == (sign > 0);
        let ln_a = nt::ln_abs_rational(&self.a);
        let direct = nt::log_add_exp(ln_a, ln_bs);
        if same {
            direct
        } else {
            nt::ln_abs_rational(&self.norm()) - direct
        }
    }

    /// Approximate real value under the real embedding `index` (0: √d > 0).
    pub fn to_f64(&self, index: u8) -> f64 {
        let s = if index == 0 { 1.0 } else { -1.0 };
        let d = self.field.d().unwrap_or(0) as f64;
        let sgn = if self.is_zero() {
            0.0
        } else {
            let v = self.a.to_f64().unwrap_or(0.0) + s * self.b.to_f64().unwrap_or(0.0) * libm::sqrt(d.abs());
            if v < 0.0 { -1.0 } else { 1.0 }
        };
        if sgn == 0.0 {
            return 0.0;
        }
        sgn * libm::exp(self.ln_abs_real(if index == 0 { 1 } else { -1 }))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        let d = self.field.d().unwrap_or(0);
        if self.a.is_zero() {
            write!(f, "{}*sqrt({d})", self.b)
        } else {
            write!(f, "{} + {}*sqrt({d})", self.a, self.b)
        }
    }
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, o: &FieldElement) -> FieldElement {
        FieldElement { field: self.field.join(o.field), a: &self.a + &o.a, b: &self.b + &o.b }
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, o: &FieldElement) -> FieldElement {
        FieldElement { field: self.field.join(o.field), a: &self.a - &o.a, b: &self.b - &o.b }
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, o: &FieldElement) -> FieldElement {
        let field = self.field.join(o.field);
        if self.b.is_zero() && o.b.is_zero() {
            return FieldElement::rational(field, &self.a * &o.a);
        }
        let d = rat(field.d().unwrap_or(0));
        FieldElement {
            field,
            a: &self.a * &o.a + d * &self.b * &o.b,
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement { field: self.field, a: -self.a.clone(), b: -self.b.clone() }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

/// How a rational prime decomposes in the field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Decomposition {
    Rational,
    Split,
    Inert,
    Ramified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlaceKind {
    /// Real embedding; for quadratic fields index 0 sends √d to the positive root.
    Real { index: u8 },
    Complex,
    /// Prime over `p`; for split primes `root` is the residue of ω at this prime.
    Finite { p: u64, index: u8, kind: Decomposition, root: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Place {
    pub field: Field,
    pub kind: PlaceKind,
}

impl Place {
    pub fn new(field: Field, kind: PlaceKind) -> Self {
        Self { field, kind }
    }

    pub fn is_archimedean(&self) -> bool {
        !matches!(self.kind, PlaceKind::Finite { .. })
    }

    /// Residue degree; 1 for archimedean places.
    pub fn residue_degree(&self) -> u32 {
        match self.kind {
            PlaceKind::Finite { kind: Decomposition::Inert, .. } => 2,
            _ => 1,
        }
    }

    pub fn prime(&self) -> Option<u64> {
        match self.kind {
            PlaceKind::Finite { p, .. } => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PlaceKind::Real { .. } if self.field == Field::Rational => write!(f, "inf"),
            PlaceKind::Real { index } => write!(f, "inf{index}"),
            PlaceKind::Complex => write!(f, "inf"),
            PlaceKind::Finite { p, kind: Decomposition::Split, index, .. } => write!(f, "p{p}.{index}"),
            PlaceKind::Finite { p, .. } => write!(f, "p{p}"),
        }
    }
}

/// Exact valuation of a nonzero element at a finite place (in units of the
/// place's uniformizer).
pub fn valuation(x: &FieldElement, place: &Place) -> Result<i64> {
    if x.is_zero() {
        return Err(Error::Precondition("valuation of zero".into()));
    }
    let (p, kind, root) = match place.kind {
        PlaceKind::Finite { p, kind, root, .. } => (p, kind, root),
        _ => return Err(Error::Precondition("valuation at an archimedean place".into())),
    };
    Ok(match kind {
        Decomposition::Rational => nt::vp_rational(&x.a, p),
        Decomposition::Ramified => nt::vp_rational(&x.norm(), p),
        Decomposition::Inert => nt::vp_rational(&x.norm(), p) / 2,
        Decomposition::Split => {
            let (u, w) = x.integral_coords();
            let vu = if u.is_zero() { i64::MAX } else { nt::vp_rational(&u, p) };
            let vw = if w.is_zero() { i64::MAX } else { nt::vp_rational(&w, p) };
            let m = vu.min(vw);
            let scale = if m >= 0 {
                BigRational::from_integer(BigInt::from(p).pow(m as u32))
            } else {
                BigRational::from_integer(BigInt::from(p).pow((-m) as u32)).recip()
            };
            let (u, w) = (&u / &scale, &w / &scale);
            let ur = nt::rational_mod_p(&u, p).unwrap();
            let wr = nt::rational_mod_p(&w, p).unwrap();
            let in_place = (ur + nt::mul_mod(wr, root, p)) % p == 0;
            let rest = if in_place {
                let n = &u * &u + {
                    let (c0, c1) = x.field.omega_relation();
                    // N(u + wω) = u² + c1·u·w - c0·w²
                    BigRational::from_integer(c1) * &u * &w - BigRational::from_integer(c0) * &w * &w
                };
                nt::vp_rational(&n, p)
            } else {
                0
            };
            m + rest
        }
    })
}

/// `ln ‖x‖_v` with the normalization `‖x‖_v = |N_{K_v/ℚ_p}(x)|_p` at finite
/// places, `|σ(x)|` at real places and `|σ(x)|²` at complex places. Their sum
/// over all places vanishes for nonzero `x`.
pub fn normalized_log_abs(x: &FieldElement, place: &Place) -> Result<f64> {
    if x.is_zero() {
        return Err(Error::Precondition("absolute value of zero has no logarithm".into()));
    }
    let x = x.lift(place.field)?;
    Ok(match place.kind {
        PlaceKind::Real { index } => x.ln_abs_real(if index == 0 { 1 } else { -1 }),
        PlaceKind::Complex => nt::ln_abs_rational(&x.norm()),
        PlaceKind::Finite { p, .. } => {
            -(place.residue_degree() as f64) * valuation(&x, place)? as f64 * libm::log(p as f64)
        }
    })
}

/// Places where `‖x‖_v ≠ 1`, archimedean first, finite ones sorted by prime.
pub fn support(x: &FieldElement) -> Result<Vec<Place>> {
    if x.is_zero() {
        return Err(Error::Precondition("support of zero".into()));
    }
    let field = x.field;
    let mut out = Vec::new();
    let unit_abs = match field {
        Field::Rational => {
            let abs = nt::abs_rational(&x.a);
            abs.is_one()
        }
        Field::Quadratic(d) if d > 0 => {
            // |σ(x)| = 1 at a real place forces x = ±1
            x.b.is_zero() && nt::abs_rational(&x.a).is_one()
        }
        Field::Quadratic(_) => x.norm().is_one(),
    };
    if !unit_abs {
        out.extend(field.archimedean_places());
    }
    for p in candidate_primes(x)? {
        for place in field.places_above(p)? {
            if valuation(x, &place)? != 0 {
                out.push(place);
            }
        }
    }
    Ok(out)
}

/// Finite places that matter for `x`: primes dividing the denominators of
/// its coordinates or its norm.
pub fn finite_support(x: &FieldElement) -> Result<Vec<Place>> {
    Ok(support(x)?.into_iter().filter(|p| !p.is_archimedean()).collect())
}

fn candidate_primes(x: &FieldElement) -> Result<Vec<u64>> {
    let n = x.norm();
    let mut primes = Vec::new();
    for v in [x.a.denom(), x.b.denom(), n.numer(), n.denom()] {
        if !v.is_zero() {
            primes.extend(nt::prime_divisors(v)?);
        }
    }
    primes.sort_unstable();
    primes.dedup();
    Ok(primes)
}

/// Order of `x` as a root of unity, or `None` if it is not one.
pub fn torsion_order(x: &FieldElement) -> Option<u32> {
    if x.is_zero() || !x.norm().is_one() {
        return None;
    }
    if x.field.is_imaginary() {
        let mut acc = x.clone();
        for k in 1..=6u32 {
            if acc.is_one() {
                return Some(k);
            }
            acc = &acc * x;
        }
        return None;
    }
    if !x.b.is_zero() {
        return None;
    }
    if x.a.is_one() {
        Some(1)
    } else if (-x.a.clone()).is_one() {
        Some(2)
    } else {
        None
    }
}

/// Logs of normalized absolute values at a fixed list of places.
#[derive(Clone, Debug, PartialEq)]
pub struct ValuationVector {
    pub places: Vec<Place>,
    pub logs: Vec<f64>,
}

pub fn valuation_vector(x: &FieldElement, places: &[Place]) -> Result<ValuationVector> {
    let logs = places.iter().map(|v| normalized_log_abs(x, v)).collect::<Result<Vec<_>>>()?;
    Ok(ValuationVector { places: places.to_vec(), logs })
}

/// `ln` of `∏_{v finite} max(1, ‖x_1‖_v, …, ‖x_n‖_v)`, computed exactly as
/// the index of `O_K` in the fractional ideal generated by `1, x_1, …, x_n`.
pub fn finite_height_ln(xs: &[FieldElement]) -> f64 {
    let field = xs.first().map(|x| x.field).unwrap_or(Field::Rational);
    let coords: Vec<(BigRational, BigRational)> = xs.iter().map(|x| x.integral_coords()).collect();
    let mut den = BigInt::one();
    for (u, w) in &coords {
        den = den.lcm(u.denom()).lcm(w.denom());
    }
    if field == Field::Rational {
        return nt::ln_abs_bigint(&den);
    }
    let (c0, c1) = field.omega_relation();
    let mut gens: Vec<(BigInt, BigInt)> = vec![(den.clone(), BigInt::zero()), (BigInt::zero(), den.clone())];
    for (u, w) in &coords {
        let du = (u * BigRational::from_integer(den.clone())).to_integer();
        let dw = (w * BigRational::from_integer(den.clone())).to_integer();
        gens.push((&dw * &c0, &du + &dw * &c1));
        gens.push((du, dw));
    }
    let mut index = BigInt::zero();
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            let m = &gens[i].0 * &gens[j].1 - &gens[i].1 * &gens[j].0;
            index = index.gcd(&m);
        }
    }
    2.0 * nt::ln_abs_bigint(&den) - nt::ln_abs_bigint(&index)
}

/// `Σ_{v | ∞} ln max(1, ‖x_1‖_v, …)`.
pub fn archimedean_height_ln(xs: &[FieldElement]) -> f64 {
    let field = xs.first().map(|x| x.field).unwrap_or(Field::Rational);
    let mut total = 0.0;
    for place in field.archimedean_places() {
        let mut m = 0.0f64;
        for x in xs.iter().filter(|x| !x.is_zero()) {
            m = m.max(normalized_log_abs(x, &place).unwrap());
        }
        total += m;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn el(field: Field, a: (i64, i64), b: (i64, i64)) -> FieldElement {
        FieldElement::new(field, q(a.0, a.1), q(b.0, b.1)).unwrap()
    }

    fn all_places(x: &FieldElement) -> Vec<Place> {
        let mut ps = x.field().archimedean_places();
        ps.extend(finite_support(x).unwrap());
        ps
    }

    #[test]
    fn gaussian_one_plus_i() {
        let k = Field::quadratic(-1).unwrap();
        let x = el(k, (1, 1), (1, 1));
        let arch = normalized_log_abs(&x, &k.archimedean_places()[0]).unwrap();
        assert!((arch - libm::log(2.0)).abs() < 1e-12);
        let above2 = k.places_above(2).unwrap();
        assert_eq!(above2.len(), 1);
        let v2 = normalized_log_abs(&x, &above2[0]).unwrap();
        assert!((v2 + libm::log(2.0)).abs() < 1e-12);
    }

    #[test]
    fn splitting_types() {
        let k = Field::quadratic(-1).unwrap();
        assert_eq!(k.places_above(5).unwrap().len(), 2);
        assert_eq!(k.places_above(3).unwrap()[0].residue_degree(), 2);
        let k = Field::quadratic(5).unwrap();
        assert!(matches!(k.places_above(5).unwrap()[0].kind, PlaceKind::Finite { kind: Decomposition::Ramified, .. }));
        assert!(matches!(k.places_above(2).unwrap()[0].kind, PlaceKind::Finite { kind: Decomposition::Inert, .. }));
        let k = Field::quadratic(17).unwrap();
        assert_eq!(k.places_above(2).unwrap().len(), 2);
    }

    #[test]
    fn split_valuation_separates_conjugates() {
        let k = Field::quadratic(-1).unwrap();
        let x = el(k, (1, 1), (2, 1));
        let ps = k.places_above(5).unwrap();
        let v: Vec<i64> = ps.iter().map(|p| valuation(&x, p).unwrap()).collect();
        let vc: Vec<i64> = ps.iter().map(|p| valuation(&x.conj(), p).unwrap()).collect();
        assert_eq!(v.iter().sum::<i64>(), 1);
        assert_eq!(vc.iter().sum::<i64>(), 1);
        assert_ne!(v, vc);
        let ratio = x.div(&x.conj()).unwrap();
        let s = finite_support(&ratio).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn torsion_orders() {
        let k = Field::quadratic(-3).unwrap();
        let w = k.root_of_unity(3).unwrap();
        assert_eq!(torsion_order(&w), Some(3));
        assert_eq!(torsion_order(&k.root_of_unity(6).unwrap()), Some(6));
        assert_eq!(torsion_order(&FieldElement::from_int(Field::Rational, -1)), Some(2));
        assert_eq!(torsion_order(&FieldElement::from_int(Field::Rational, 2)), None);
        let g = Field::quadratic(-1).unwrap();
        assert_eq!(torsion_order(&FieldElement::sqrt_d(g)), Some(4));
        let r = Field::quadratic(2).unwrap();
        assert_eq!(torsion_order(&el(r, (1, 1), (1, 1))), None);
        // (3+4i)/5 has norm one but is not a root of unity
        assert_eq!(torsion_order(&el(g, (3, 5), (4, 5))), None);
    }

    #[test]
    fn affine_height_of_rational() {
        let x = FieldElement::rational(Field::Rational, q(-7, 3));
        let h = finite_height_ln(core::slice::from_ref(&x)) + archimedean_height_ln(core::slice::from_ref(&x));
        assert!((h - libm::log(7.0)).abs() < 1e-12);
    }

    #[test]
    fn cancellation_free_embedding() {
        let k = Field::quadratic(2).unwrap();
        let unit = el(k, (1, 1), (1, 1));
        let small = unit.pow(-30).unwrap();
        let place = k.archimedean_places()[0];
        let l = normalized_log_abs(&small, &place).unwrap();
        let expect = -30.0 * libm::log(1.0 + libm::sqrt(2.0));
        assert!((l - expect).abs() < 1e-9);
    }

    fn arb_field() -> impl Strategy<Value = Field> {
        prop_oneof![
            Just(Field::Rational),
            Just(Field::Quadratic(-1)),
            Just(Field::Quadratic(-3)),
            Just(Field::Quadratic(2)),
            Just(Field::Quadratic(5)),
            Just(Field::Quadratic(-5)),
            Just(Field::Quadratic(13)),
        ]
    }

    fn arb_element() -> impl Strategy<Value = FieldElement> {
        (arb_field(), -60i64..60, 1i64..40, -60i64..60, 1i64..40).prop_filter_map("nonzero", |(k, a, ad, b, bd)| {
            let b = if k == Field::Rational { 0 } else { b };
            let x = FieldElement::new(k, q(a, ad), q(b, bd)).unwrap();
            (!x.is_zero()).then_some(x)
        })
    }

    proptest! {
        #[test]
        fn product_formula(x in arb_element()) {
            let total: f64 = all_places(&x).iter().map(|v| normalized_log_abs(&x, v).unwrap()).sum();
            prop_assert!(total.abs() < 1e-9, "sum of logs = {}", total);
        }

        #[test]
        fn valuations_multiplicative((x, y) in (arb_element(), arb_element()).prop_filter("same field", |(x, y)| x.field() == y.field())) {
            let xy = &x * &y;
            let mut places = all_places(&x);
            places.extend(all_places(&y));
            places.sort();
            places.dedup();
            for v in &places {
                let l = normalized_log_abs(&xy, v).unwrap();
                let r = normalized_log_abs(&x, v).unwrap() + normalized_log_abs(&y, v).unwrap();
                prop_assert!((l - r).abs() < 1e-9);
            }
        }

        #[test]
        fn inverse_roundtrip(x in arb_element()) {
            prop_assert!((&x * &x.inv().unwrap()).is_one());
        }
    }
}
