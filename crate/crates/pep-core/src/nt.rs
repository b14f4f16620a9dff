//! Integer helpers: logarithms of big numbers, primality, factoring,
//! square roots modulo primes and small rational approximation.

use alloc::string::ToString;
use alloc::vec::Vec;
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub const LN2: f64 = core::f64::consts::LN_2;

/// Natural log of a positive big integer, accurate to double precision.
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 64 {
        return libm::log(n.to_u64().unwrap() as f64);
    }
    let shift = bits - 64;
    let top = (n >> shift).to_u64().unwrap();
    libm::log(top as f64) + shift as f64 * LN2
}

pub fn ln_abs_bigint(n: &BigInt) -> f64 {
    ln_biguint(n.magnitude())
}

/// `ln |q|` for a nonzero rational.
pub fn ln_abs_rational(q: &BigRational) -> f64 {
    ln_abs_bigint(q.numer()) - ln_abs_bigint(q.denom())
}

/// `ln(e^x + e^y)` without overflow.
pub fn log_add_exp(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(libm::exp(lo - hi))
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

// Pollard-Brent; n is composite and odd.
fn rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut g) = (2u64, 2u64, 1u64);
        while g == 1 {
            x = f(x);
            y = f(f(y));
            g = gcd_u64(x.abs_diff(y), n);
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

fn factor_u64_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime_u64(n) {
        out.push(n);
        return;
    }
    if n % 2 == 0 {
        out.push(2);
        factor_u64_into(n / 2, out);
        return;
    }
    let d = rho(n);
    factor_u64_into(d, out);
    factor_u64_into(n / d, out);
}

/// Prime factorization `[(p, e)]` sorted by `p`. Cofactors above 64 bits
/// left after trial division are rejected.
pub fn factor(n: &BigUint) -> Result<Vec<(u64, u32)>> {
    let mut n = n.clone();
    let mut primes: Vec<u64> = Vec::new();
    if n.is_zero() {
        return Err(Error::Precondition("cannot factor zero".into()));
    }
    let mut p = 2u64;
    while p < 1 << 16 && n.bits() > 64 {
        let bp = BigUint::from(p);
        while (&n % &bp).is_zero() {
            n /= &bp;
            primes.push(p);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    let rest = n
        .to_u64()
        .ok_or_else(|| Error::Factorization(n.to_string()))?;
    factor_u64_into(rest, &mut primes);
    primes.sort_unstable();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for q in primes {
        match out.last_mut() {
            Some((last, e)) if *last == q => *e += 1,
            _ => out.push((q, 1)),
        }
    }
    Ok(out)
}

/// Distinct primes dividing a nonzero integer.
pub fn prime_divisors(n: &BigInt) -> Result<Vec<u64>> {
    Ok(factor(n.magnitude())?.into_iter().map(|(p, _)| p).collect())
}

/// Legendre symbol `(a/p)` for an odd prime `p`: 0, 1 or -1.
pub fn legendre(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Square root modulo an odd prime (Tonelli-Shanks).
pub fn sqrt_mod(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if legendre(a, p) != 1 {
        return None;
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let mut z = 2;
    while legendre(z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mul_mod(tt, tt, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// `v_p(n)` for nonzero `n`.
pub fn vp_bigint(n: &BigInt, p: u64) -> i64 {
    debug_assert!(!n.is_zero());
    let bp = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&bp);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

pub fn vp_rational(q: &BigRational, p: u64) -> i64 {
    vp_bigint(q.numer(), p) - vp_bigint(q.denom(), p)
}

/// Residue of a p-integral rational modulo `p`.
pub fn rational_mod_p(q: &BigRational, p: u64) -> Option<u64> {
    let bp = BigInt::from(p);
    let den = q.denom().mod_floor(&bp).to_u64().unwrap();
    if den == 0 {
        return None;
    }
    let num = q.numer().mod_floor(&bp).to_u64().unwrap();
    Some(mul_mod(num, pow_mod(den, p - 2, p), p))
}

/// Best rational approximation `p/q` with `q <= max_den` via continued
/// fractions; `None` if no convergent lands within `tol`.
pub fn best_rational(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..64 {
        let a = libm::floor(y);
        if a.abs() > 1e15 {
            return None;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = y - a;
        if frac.abs() < 1e-15 {
            return None;
        }
        y = 1.0 / frac;
    }
    None
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    a / gcd_u64(a, b) * b
}

pub fn bigint_sign(n: &BigInt) -> i32 {
    match n.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

pub fn abs_rational(q: &BigRational) -> BigRational {
    if q.is_negative() {
        -q.clone()
    } else {
        q.clone()
    }
}

pub fn is_squarefree(d: i64) -> bool {
    let n = d.unsigned_abs();
    match factor(&BigUint::from(n)) {
        Ok(f) => f.iter().all(|&(_, e)| e == 1),
        Err(_) => false,
    }
}

pub fn one_rat() -> BigRational {
    BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_small() {
        let f = factor(&BigUint::from(360u32)).unwrap();
        assert_eq!(f, alloc::vec![(2, 3), (3, 2), (5, 1)]);
        let f = factor(&BigUint::from(1_000_000_007u64 * 998_244_353u64)).unwrap();
        assert_eq!(f, alloc::vec![(998_244_353, 1), (1_000_000_007, 1)]);
    }

    #[test]
    fn sqrt_mod_roundtrip() {
        for p in [3u64, 5, 7, 13, 17, 41, 1_000_000_007] {
            for a in 1..30u64 {
                if let Some(r) = sqrt_mod(a, p) {
                    assert_eq!(mul_mod(r, r, p), a % p);
                }
            }
        }
    }

    #[test]
    fn ln_big() {
        let n = BigUint::from(3u32).pow(200);
        let expect = 200.0 * libm::log(3.0);
        assert!((ln_biguint(&n) - expect).abs() < 1e-10);
    }

    #[test]
    fn continued_fraction() {
        assert_eq!(best_rational(2.0 / 3.0, 100, 1e-12), Some((2, 3)));
        assert_eq!(best_rational(-5.0 / 7.0, 100, 1e-12), Some((-5, 7)));
        assert_eq!(best_rational(core::f64::consts::PI, 50, 1e-12), None);
    }
}
