//! Points of weighted projective space over `Q`: scaling ideals, heights,
//! primitive representatives, and the `{+1, -1}` orbit structure.
//!
//! A point of `P(w)(Q)` is a nonzero coordinate vector `x in Q^m` up to the
//! action `lambda * x = (lambda^{w_i} x_i)_i`. The scaling ideal `I_w(x)` is
//! the fractional ideal with exponent `min_{x_i != 0} floor(ord_p(x_i)/w_i)`
//! at each prime; its positive generator `q` is the largest scale by which `x`
//! can be divided while staying integral, so `(q^{-1}) * x` is the primitive
//! integral representative. The height is
//! `S_w(x) = max_i |x_i|^{1/w_i} / N(I_w(x))`, invariant under the action.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{factor, valuation, FactoredRational};
use crate::{Error, Result};

/// Positive integer weights `(w_1, ..., w_m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector(pub Vec<u32>);

impl WeightVector {
    pub fn new(w: Vec<u32>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidMorphism("empty weight vector".into()));
        }
        if w.iter().any(|&wi| wi == 0) {
            return Err(Error::InvalidMorphism("weights must be positive".into()));
        }
        Ok(WeightVector(w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|w| = w_1 + ... + w_m`.
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&w| w as u64).sum()
    }

    pub fn min(&self) -> u32 {
        *self.0.iter().min().expect("nonempty")
    }
}

fn check_point(x: &[BigRational]) -> Result<()> {
    if x.is_empty() || x.iter().all(|c| c.is_zero()) {
        return Err(Error::InvalidMorphism(
            "the zero vector does not represent a projective point".into(),
        ));
    }
    Ok(())
}

/// `lambda * x = (lambda^{w_i} x_i)_i` for `lambda != 0`.
pub fn lambda_action(lambda: &BigRational, x: &[BigRational], w: &WeightVector) -> Vec<BigRational> {
    assert!(!lambda.is_zero());
    assert_eq!(x.len(), w.len());
    x.iter()
        .zip(&w.0)
        .map(|(xi, &wi)| {
            let mut p = BigRational::one();
            for _ in 0..wi {
                p *= lambda;
            }
            p * xi
        })
        .collect()
}

/// Scaling ideal `I_w(x)`: exponent `min_{x_i != 0} floor(ord_p(x_i) / w_i)`
/// at every prime `p`; zero coordinates are skipped (their order is +infinity).
pub fn scaling_ideal(x: &[BigRational], w: &WeightVector) -> Result<FactoredRational> {
    check_point(x)?;
    assert_eq!(x.len(), w.len());
    // Candidate primes: support of every nonzero coordinate.
    let mut support = std::collections::BTreeSet::new();
    for xi in x.iter().filter(|c| !c.is_zero()) {
        for set in [factor(xi.numer())?, factor(xi.denom())?] {
            support.extend(set.keys().copied());
        }
    }
    let mut factors = std::collections::BTreeMap::new();
    for p in support {
        let e = x
            .iter()
            .zip(&w.0)
            .filter(|(xi, _)| !xi.is_zero())
            .map(|(xi, &wi)| div_floor(valuation(xi, p), wi as i64))
            .min()
            .expect("nonzero point");
        if e != 0 {
            factors.insert(p, e);
        }
    }
    Ok(FactoredRational { sign: 1, factors })
}

fn div_floor(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b)
}

/// Primitive integral representative: scales `x` by the inverse of the positive
/// generator `q` of `I_w(x)`. Never flips signs (`q > 0`).
pub fn normalize_primitive(x: &[BigRational], w: &WeightVector) -> Result<Vec<BigInt>> {
    let ideal = scaling_ideal(x, w)?;
    let q = ideal.value(); // positive generator
    let q_inv = BigRational::one() / q;
    let scaled = lambda_action(&q_inv, x, w);
    let mut out = Vec::with_capacity(scaled.len());
    for c in &scaled {
        if !c.denom().is_one() {
            return Err(Error::Analysis(format!(
                "normalization produced a non-integral coordinate {c}; scaling ideal was wrong"
            )));
        }
        out.push(c.numer().clone());
    }
    debug_assert!(
        scaling_ideal(&out.iter().map(|c| BigRational::from(c.clone())).collect::<Vec<_>>(), w)
            .unwrap()
            .is_one(),
        "primitive representative must have trivial scaling ideal"
    );
    Ok(out)
}

/// `S_w(x) = max_i |x_i|^{1/w_i} / N(I_w(x))` as a float.
pub fn height(x: &[BigRational], w: &WeightVector) -> Result<f64> {
    check_point(x)?;
    let n = scaling_ideal(x, w)?.value();
    let n = n.numer().to_f64().unwrap() / n.denom().to_f64().unwrap();
    let mut arch: f64 = 0.0;
    for (xi, &wi) in x.iter().zip(&w.0) {
        if xi.is_zero() {
            continue;
        }
        let v = xi.numer().to_f64().unwrap().abs() / xi.denom().to_f64().unwrap();
        arch = arch.max(v.powf(1.0 / wi as f64));
    }
    Ok(arch / n)
}

/// Exact test `S_w(x) <= bound`, via `|x_i| <= (bound * N(I_w(x)))^{w_i}`.
pub fn height_at_most(x: &[BigRational], w: &WeightVector, bound: &BigRational) -> Result<bool> {
    check_point(x)?;
    let scale = bound * scaling_ideal(x, w)?.value();
    if scale.is_negative() {
        return Ok(false);
    }
    for (xi, &wi) in x.iter().zip(&w.0) {
        let mut rhs = BigRational::one();
        for _ in 0..wi {
            rhs *= &scale;
        }
        if xi.abs() > rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Size of the stabilizer of `x` in `mu_Q = {1, -1}`: 2 when every coordinate
/// with odd weight vanishes (then `-1` acts trivially on `x`), else 1.
pub fn automorphism_count(x: &[BigRational], w: &WeightVector) -> Result<u32> {
    check_point(x)?;
    let fixed = x
        .iter()
        .zip(&w.0)
        .all(|(xi, &wi)| wi % 2 == 0 || xi.is_zero());
    Ok(if fixed { 2 } else { 1 })
}

/// `(-1) * x`: negates the odd-weight coordinates.
pub fn flip(x: &[BigRational], w: &WeightVector) -> Vec<BigRational> {
    x.iter()
        .zip(&w.0)
        .map(|(xi, &wi)| if wi % 2 == 1 { -xi.clone() } else { xi.clone() })
        .collect()
}

/// Canonical representative of the `{1, -1}`-orbit `{x, (-1) * x}`: the
/// lexicographically smaller of the two under coordinatewise rational order.
/// Idempotent, and the identity when all weights are even.
pub fn canonical_orbit_rep(x: &[BigRational], w: &WeightVector) -> Result<Vec<BigRational>> {
    check_point(x)?;
    let y = flip(x, w);
    Ok(if y.as_slice() < x { y } else { x.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    fn qr(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn scaling_ideal_examples() {
        let w24 = WeightVector::new(vec![2, 4]).unwrap();
        let i = scaling_ideal(&[q(8), q(16)], &w24).unwrap();
        assert_eq!(i.value(), q(2)); // min(floor(3/2), floor(4/4)) = 1 at p = 2
        let i = scaling_ideal(&[q(1), q(12345)], &w24).unwrap();
        assert!(i.is_one());
        let i = scaling_ideal(&[q(0), q(8)], &w24).unwrap();
        assert!(i.is_one()); // zero coordinate skipped, floor(3/4) = 0
        let i = scaling_ideal(&[qr(1, 2), q(1)], &w24).unwrap();
        assert_eq!(i.value(), qr(1, 2)); // min(floor(-1/2), 0) = -1
    }

    #[test]
    fn normalize_primitive_examples() {
        let w24 = WeightVector::new(vec![2, 4]).unwrap();
        assert_eq!(
            normalize_primitive(&[q(8), q(16)], &w24).unwrap(),
            vec![BigInt::from(2), BigInt::from(1)]
        );
        assert_eq!(
            normalize_primitive(&[qr(1, 2), q(1)], &w24).unwrap(),
            vec![BigInt::from(2), BigInt::from(16)]
        );
        // Signs are never flipped: q > 0.
        assert_eq!(
            normalize_primitive(&[q(-8), q(16)], &w24).unwrap(),
            vec![BigInt::from(-2), BigInt::from(1)]
        );
    }

    #[test]
    fn height_example() {
        let w24 = WeightVector::new(vec![2, 4]).unwrap();
        // max(8^{1/2}, 16^{1/4}) / 2 = 2 sqrt(2) / 2 = sqrt(2)
        let h = height(&[q(8), q(16)], &w24).unwrap();
        assert!((h - 2f64.sqrt()).abs() < 1e-12);
        assert!(height_at_most(&[q(8), q(16)], &w24, &qr(3, 2)).unwrap());
        assert!(!height_at_most(&[q(8), q(16)], &w24, &qr(7, 5)).unwrap());
        // Boundary ties are inside: height exactly 1.
        let w11 = WeightVector::new(vec![1, 1]).unwrap();
        assert!(height_at_most(&[q(1), q(-1)], &w11, &q(1)).unwrap());
        assert!(!height_at_most(&[q(1), q(-1)], &w11, &qr(99, 100)).unwrap());
    }

    #[test]
    fn automorphism_count_examples() {
        let w24 = WeightVector::new(vec![2, 4]).unwrap();
        assert_eq!(automorphism_count(&[q(3), q(5)], &w24).unwrap(), 2);
        let w13 = WeightVector::new(vec![1, 3]).unwrap();
        assert_eq!(automorphism_count(&[q(1), q(0)], &w13).unwrap(), 1);
        let w12 = WeightVector::new(vec![1, 2]).unwrap();
        assert_eq!(automorphism_count(&[q(0), q(7)], &w12).unwrap(), 2);
    }

    #[test]
    fn canonical_rep_examples() {
        let w13 = WeightVector::new(vec![1, 3]).unwrap();
        let r = canonical_orbit_rep(&[q(-1), q(0)], &w13).unwrap();
        assert_eq!(r, vec![q(-1), q(0)]);
        let r2 = canonical_orbit_rep(&[q(1), q(0)], &w13).unwrap();
        assert_eq!(r2, vec![q(-1), q(0)]); // same orbit, same canonical point
        let rr = canonical_orbit_rep(&r, &w13).unwrap();
        assert_eq!(rr, r); // idempotent
        // All-even weights: flip is the identity, both signs are canonical.
        let w24 = WeightVector::new(vec![2, 4]).unwrap();
        assert_eq!(canonical_orbit_rep(&[q(1), q(0)], &w24).unwrap(), vec![q(1), q(0)]);
        assert_eq!(canonical_orbit_rep(&[q(-1), q(0)], &w24).unwrap(), vec![q(-1), q(0)]);
    }

    #[test]
    fn zero_vector_rejected() {
        let w = WeightVector::new(vec![1, 1]).unwrap();
        assert!(scaling_ideal(&[q(0), q(0)], &w).is_err());
        assert!(height(&[q(0), q(0)], &w).is_err());
    }
}
