//! Exact integer/rational helpers: primes, p-adic valuations, residues, and
//! certified sign evaluation for rational combinations of square roots.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Sparse rational coefficients over the formal basis `b0, b1, ...`.
///
/// Scalar blocks use only `b0`. No zero coefficients are stored.
pub type Span = BTreeMap<usize, Rational>;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization in ascending prime order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `Some((p, e))` when `n = p^e` with `e >= 1`.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    match factorize(n).as_slice() {
        [(p, e)] => Some((*p, *e)),
        _ => None,
    }
}

static PRIMES: OnceLock<RwLock<Vec<u64>>> = OnceLock::new();

/// The `k`-th prime, 1-based (`nth_prime(1) == 2`).
pub fn nth_prime(k: usize) -> u64 {
    assert!(k >= 1, "primes are 1-indexed");
    let cache = PRIMES.get_or_init(|| RwLock::new(vec![2]));
    if let Some(p) = cache.read().unwrap().get(k - 1) {
        return *p;
    }
    let mut primes = cache.write().unwrap();
    let mut candidate = *primes.last().unwrap() + 1;
    while primes.len() < k {
        if is_prime(candidate) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes[k - 1]
}

pub fn valuation_u64(mut n: u64, p: u64) -> u32 {
    debug_assert!(n != 0 && p >= 2);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// `v_p(n)`, or `None` for zero.
pub fn valuation_int(n: &BigInt, p: u64) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return Some(v);
        }
        n = q;
        v += 1;
    }
}

/// `v_p(r)`, or `None` for zero.
pub fn valuation(r: &Rational, p: u64) -> Option<i64> {
    let num = valuation_int(r.numer(), p)?;
    let den = valuation_int(r.denom(), p).unwrap_or(0);
    Some(num as i64 - den as i64)
}

/// True when `r` lies in `Z_(p)`, i.e. its reduced denominator is coprime to `p`.
pub fn is_p_integral(r: &Rational, p: u64) -> bool {
    !(r.denom() % BigInt::from(p)).is_zero()
}

/// True when `r / n` still lies in `Z_(p)`.
pub fn p_divisible(r: &Rational, n: u64, p: u64) -> bool {
    match valuation(r, p) {
        None => true,
        Some(v) => v >= valuation_u64(n, p) as i64,
    }
}

pub fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    (old_r == 1).then(|| old_s.rem_euclid(m))
}

/// Image of `r` in `Z / modulus`, provided the denominator is invertible.
pub fn residue(r: &Rational, modulus: u64) -> Option<u64> {
    if modulus == 1 {
        return Some(0);
    }
    let m = BigInt::from(modulus);
    let num = r.numer().mod_floor(&m).to_i128()?;
    let den = r.denom().mod_floor(&m).to_i128()?;
    let inv = mod_inverse(den, modulus as i128)?;
    Some(((num * inv).rem_euclid(modulus as i128)) as u64)
}

/// Real value of basis symbol `k` is `sqrt(q_k)` with `q_0 = 1`.
fn radicand(symbol: usize) -> u64 {
    if symbol == 0 {
        1
    } else {
        nth_prime(symbol)
    }
}

/// Enclosure `[lo, hi]` of `sum c_k * b_k` with absolute width at most
/// `(sum |c_k|) * 2^-bits`.
pub fn span_enclosure(span: &Span, bits: u32) -> (Rational, Rational) {
    let scale = BigInt::one() << bits;
    let mut lo = Rational::zero();
    let mut hi = Rational::zero();
    for (&sym, c) in span {
        let q = radicand(sym);
        if q == 1 {
            lo += c;
            hi += c;
            continue;
        }
        let s = (BigInt::from(q) * &scale * &scale).sqrt();
        let below = Rational::new(s.clone(), scale.clone());
        let above = Rational::new(s + 1, scale.clone());
        if c.is_positive() {
            lo += c * &below;
            hi += c * &above;
        } else {
            lo += c * &above;
            hi += c * &below;
        }
    }
    (lo, hi)
}

/// Sign of the real number `sum c_k * b_k`.
///
/// Zero iff every coefficient is zero (the basis is linearly independent over
/// the rationals), so precision escalation always terminates.
pub fn span_sign(span: &Span) -> Ordering {
    if span.values().all(Zero::is_zero) {
        return Ordering::Equal;
    }
    if span.keys().all(|&k| k == 0) {
        return span[&0].cmp(&Rational::zero());
    }
    // Integer coefficients keep the enclosure arithmetic on BigInt.
    let lcm = span
        .values()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<(u64, BigInt)> = span
        .iter()
        .map(|(&k, c)| (radicand(k), (c * Rational::from(lcm.clone())).to_integer()))
        .collect();
    let mut bits = 53u32;
    loop {
        let scale = BigInt::one() << bits;
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        for (q, n) in &ints {
            if *q == 1 {
                let v = n * &scale;
                lo += &v;
                hi += v;
                continue;
            }
            let s = (BigInt::from(*q) * &scale * &scale).sqrt();
            if n.is_positive() {
                lo += n * &s;
                hi += n * (&s + 1);
            } else {
                lo += n * (&s + 1);
                hi += n * &s;
            }
        }
        if lo.is_positive() {
            return Ordering::Greater;
        }
        if hi.is_negative() {
            return Ordering::Less;
        }
        bits *= 2;
    }
}

pub fn span_add(a: &Span, b: &Span) -> Span {
    let mut out = a.clone();
    for (k, v) in b {
        let e = out.entry(*k).or_insert_with(Rational::zero);
        *e += v;
        if e.is_zero() {
            out.remove(k);
        }
    }
    out
}

pub fn span_scale(a: &Span, c: &Rational) -> Span {
    if c.is_zero() {
        return Span::new();
    }
    a.iter().map(|(k, v)| (*k, v * c)).collect()
}

pub fn span_sub(a: &Span, b: &Span) -> Span {
    span_add(a, &span_scale(b, &-Rational::one()))
}

pub fn span_cmp(a: &Span, b: &Span) -> Ordering {
    span_sign(&span_sub(a, b))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}
