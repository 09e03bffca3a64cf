//! Exact arithmetic utilities: prime sieve, p-adic valuations, factored
//! rationals (fractional ideals of `Q`), the Moebius function, Bernoulli
//! numbers, and even zeta values.
//!
//! Factorization is trial division against a fixed sieve. A cofactor surviving
//! the sieve is either 1, a prime below `SIEVE_LIMIT^2` (kept), or too large to
//! certify, which is a hard error rather than a silent wrong answer.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use std::collections::BTreeMap;

use crate::{Error, Result};

/// Trial-division bound. Factorizations are exact for any input all of whose
/// prime factors except at most one are below this, the exception being a
/// prime below `SIEVE_LIMIT^2`.
pub const SIEVE_LIMIT: u64 = 1_000_000;

static PRIMES: Lazy<Vec<u32>> = Lazy::new(|| {
    let n = SIEVE_LIMIT as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::with_capacity(78_498);
    for p in 2..=n {
        if !composite[p] {
            out.push(p as u32);
            let mut q = p * p;
            while q <= n {
                composite[q] = true;
                q += p;
            }
        }
    }
    out
});

/// All primes up to [`SIEVE_LIMIT`], ascending.
pub fn primes() -> &'static [u32] {
    &PRIMES
}

/// p-adic valuation of a nonzero integer.
///
/// # Panics
/// Panics if `x = 0` (the valuation would be infinite) or `p < 2`.
pub fn valuation_int(x: &BigInt, p: u64) -> i64 {
    assert!(!x.is_zero(), "valuation of zero is infinite");
    assert!(p >= 2);
    let p = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0i64;
    loop {
        let (q, r) = num_integer::Integer::div_rem(&x, &p);
        if !r.is_zero() {
            return v;
        }
        x = q;
        v += 1;
    }
}

/// p-adic valuation of a nonzero rational: `ord_p(num) - ord_p(den)`.
pub fn valuation(x: &BigRational, p: u64) -> i64 {
    assert!(!x.is_zero(), "valuation of zero is infinite");
    valuation_int(x.numer(), p) - valuation_int(x.denom(), p)
}

/// Factors `|n|` into `prime -> exponent`, ascending primes.
pub fn factor(n: &BigInt) -> Result<BTreeMap<u64, i64>> {
    if n.is_zero() {
        return Err(Error::Analysis("cannot factor zero".into()));
    }
    let mut m = n.abs();
    let mut out = BTreeMap::new();
    for &p in primes() {
        if BigInt::from(p).pow(2) > m {
            break;
        }
        let v = valuation_int(&m, p as u64);
        if v > 0 {
            out.insert(p as u64, v);
            m /= BigInt::from(p).pow(v as u32);
        }
    }
    if !m.is_one() {
        // Survivor of full sieve division: prime iff below SIEVE_LIMIT^2.
        if m < BigInt::from(SIEVE_LIMIT).pow(2) {
            let p = m.to_u64().expect("fits by bound");
            *out.entry(p).or_insert(0) += 1;
        } else {
            return Err(Error::Analysis(format!(
                "factorization of {n} needs primes beyond the 10^6 sieve (cofactor {m})"
            )));
        }
    }
    Ok(out)
}

/// Moebius function of `n >= 1`.
pub fn moebius(n: u64) -> Result<i8> {
    if n == 0 {
        return Err(Error::Analysis("moebius undefined at 0".into()));
    }
    let f = factor(&BigInt::from(n))?;
    if f.values().any(|&e| e >= 2) {
        return Ok(0);
    }
    Ok(if f.len() % 2 == 0 { 1 } else { -1 })
}

/// A nonzero rational in fully factored form: `sign * prod p^{e_p}`.
///
/// Doubles as a fractional ideal of `Q` (then `sign = +1` and the value is the
/// positive generator; the ideal norm is that same value).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactoredRational {
    /// `+1` or `-1`.
    pub sign: i8,
    /// `prime -> nonzero exponent`, ascending.
    pub factors: BTreeMap<u64, i64>,
}

impl FactoredRational {
    pub fn one() -> Self {
        FactoredRational { sign: 1, factors: BTreeMap::new() }
    }

    /// `p^k` for a prime `p` (not validated beyond `p >= 2`).
    pub fn prime_power(p: u64, k: i64) -> Self {
        assert!(p >= 2);
        let mut factors = BTreeMap::new();
        if k != 0 {
            factors.insert(p, k);
        }
        FactoredRational { sign: 1, factors }
    }

    pub fn from_rational(r: &BigRational) -> Result<Self> {
        if r.is_zero() {
            return Err(Error::Analysis("zero has no factorization".into()));
        }
        let mut factors = factor(r.numer())?;
        for (p, e) in factor(r.denom())? {
            *factors.entry(p).or_insert(0) -= e;
        }
        factors.retain(|_, e| *e != 0);
        Ok(FactoredRational { sign: if r.is_negative() { -1 } else { 1 }, factors })
    }

    pub fn from_int(n: &BigInt) -> Result<Self> {
        Self::from_rational(&BigRational::from(n.clone()))
    }

    pub fn value(&self) -> BigRational {
        let mut num = BigInt::from(self.sign);
        let mut den = BigInt::one();
        for (&p, &e) in &self.factors {
            if e > 0 {
                num *= BigInt::from(p).pow(e as u32);
            } else {
                den *= BigInt::from(p).pow((-e) as u32);
            }
        }
        BigRational::new(num, den)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        for (&p, &e) in &other.factors {
            *factors.entry(p).or_insert(0) += e;
        }
        factors.retain(|_, e| *e != 0);
        FactoredRational { sign: self.sign * other.sign, factors }
    }

    pub fn inv(&self) -> Self {
        FactoredRational {
            sign: self.sign,
            factors: self.factors.iter().map(|(&p, &e)| (p, -e)).collect(),
        }
    }

    pub fn pow(&self, k: i64) -> Self {
        if k == 0 {
            return Self::one();
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        let mut factors: BTreeMap<u64, i64> =
            self.factors.iter().map(|(&p, &e)| (p, e * k)).collect();
        factors.retain(|_, e| *e != 0);
        FactoredRational { sign, factors }
    }

    /// Exact `k`-th root (`k >= 1`); errors unless every exponent is divisible
    /// by `k` and the sign admits one.
    pub fn root(&self, k: i64) -> Result<Self> {
        assert!(k >= 1);
        if self.sign < 0 && k % 2 == 0 {
            return Err(Error::Analysis("even root of a negative rational".into()));
        }
        let mut factors = BTreeMap::new();
        for (&p, &e) in &self.factors {
            if e % k != 0 {
                return Err(Error::Analysis(format!(
                    "non-integral exponent: {p}^{e} has no exact {k}-th root"
                )));
            }
            factors.insert(p, e / k);
        }
        Ok(FactoredRational { sign: self.sign, factors })
    }

    pub fn exponent(&self, p: u64) -> i64 {
        self.factors.get(&p).copied().unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.sign == 1 && self.factors.is_empty()
    }
}

/// Binomial coefficient as an exact integer.
pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut out = BigInt::one();
    for i in 0..k.min(n - k) {
        out = out * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    out
}

/// Bernoulli numbers `B_0..=B_n` (convention `B_1 = -1/2`), exact.
pub fn bernoulli(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(BigRational::one());
            continue;
        }
        // sum_{k=0}^{m} C(m+1,k) B_k = 0  =>  B_m
        let mut acc = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            acc += BigRational::from(binomial(m as u64 + 1, k as u64)) * bk;
        }
        b.push(-acc / BigRational::from(BigInt::from(m as i64 + 1)));
    }
    b
}

/// `zeta(s)` for integer `s >= 2`.
///
/// Even `s` uses the Bernoulli closed form
/// `zeta(2n) = (-1)^{n+1} B_{2n} (2 pi)^{2n} / (2 (2n)!)` with exact rational
/// scaffolding; odd `s` falls back to Euler-Maclaurin summation whose
/// truncation error is far below f64 resolution for `s >= 3`.
pub fn zeta_q(s: u32) -> Result<f64> {
    if s < 2 {
        return Err(Error::Analysis(format!(
            "zeta(s) diverges for s <= 1 (got {s})"
        )));
    }
    if s % 2 == 0 {
        let n = (s / 2) as usize;
        let b2n = bernoulli(2 * n).pop().expect("nonempty");
        let mut fact = BigRational::one();
        for i in 1..=(2 * n) {
            fact *= BigRational::from(BigInt::from(i as i64));
        }
        let coeff = b2n / (BigRational::from(BigInt::from(2)) * fact);
        // (-1)^{n+1} B_{2n} is |B_{2n}|, so the closed form is just the
        // absolute value of the rational coefficient times (2 pi)^s.
        let two_pi = 2.0 * std::f64::consts::PI;
        let coeff_f = coeff.numer().to_f64().unwrap() / coeff.denom().to_f64().unwrap();
        Ok(coeff_f.abs() * two_pi.powi(s as i32))
    } else {
        let n = 100_000u64;
        let si = s as i32;
        // Small terms first to keep the summation error near one ulp.
        let mut sum = 0.0f64;
        for k in (1..=n).rev() {
            sum += (k as f64).powi(-si);
        }
        let nf = n as f64;
        sum += nf.powi(1 - si) / (s as f64 - 1.0);
        sum += 0.5 * nf.powi(-si);
        sum -= s as f64 / 12.0 * nf.powi(-si - 1);
        Ok(sum)
    }
}

/// Invariants of the base field `Q`, spelled out so the leading-constant
/// formula reads like its number-field version.
#[derive(Clone, Copy, Debug)]
pub struct FieldContext {
    /// Field degree over `Q`.
    pub degree: u32,
    /// Real embeddings.
    pub r1: u32,
    /// Conjugate pairs of complex embeddings.
    pub r2: u32,
    /// Absolute value of the discriminant.
    pub abs_discriminant: u64,
    /// Number of roots of unity (`#mu_Q = #{1, -1} = 2`).
    pub roots_of_unity: u32,
    /// Regulator (empty unit rank for `Q`).
    pub regulator: f64,
    /// Class number.
    pub class_number: u32,
}

impl FieldContext {
    pub fn rationals() -> Self {
        FieldContext {
            degree: 1,
            r1: 1,
            r2: 0,
            abs_discriminant: 1,
            roots_of_unity: 2,
            regulator: 1.0,
            class_number: 1,
        }
    }
}
