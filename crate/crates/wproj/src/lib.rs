//! Counting rational points of bounded height on weighted projective spaces.
//!
//! A weighted projective space `P(w)` over `Q` with weights `w = (w_1, ..., w_m)`
//! is the quotient of `Q^m - {0}` by the action `lambda * (x_1, ..., x_m) =
//! (lambda^{w_1} x_1, ..., lambda^{w_m} x_m)`. A morphism `phi: P(w) -> P(u)` is
//! given by polynomials `f_1, ..., f_n` where `f_i` is `w`-weighted-homogeneous of
//! degree `e * u_i` and the `f_i` have no common zero away from the origin.
//!
//! This crate computes, for such a morphism:
//!
//! * exact heights and scaling ideals on source and target ([`weighted_space`]),
//! * the local congruence data of the height discrepancy `d(x)` between pullback
//!   height and source height — residue-class profiles at finitely many primes,
//!   the finite set of discrepancy values, and a census of labeled residue
//!   classes ([`local_analysis`]),
//! * the rational constant `c_phi` and the full leading constant `C` in the
//!   asymptotic `N_phi(T) ~ C * T^{|w|/e}` for the number of rational points of
//!   pullback height at most `T` ([`asymptotics`]),
//! * the volume of the real height-at-most-one region entering `C` ([`volume`]),
//! * and exact counts `N_phi(T)` by direct enumeration, used to verify the
//!   asymptotic prediction ([`enumeration`]).
//!
//! Everything on the arithmetic side is exact (`BigInt` / `BigRational`); floating
//! point appears only in volume integration and asymptotic fits, generically over
//! [`num_traits::Float`] with the crate-wide alias [`Real`] fixing the default.

pub mod arith;
pub mod asymptotics;
pub mod enumeration;
pub mod local_analysis;
pub mod morphism;
mod univariate;
pub mod volume;
pub mod weighted_space;

/// Default floating-point scalar for the approximate layer (volume, fits).
pub type Real = f64;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Errors across the crate, grouped by the failure's nature so callers can map
/// them to exit codes without string matching.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input: JSON syntax, polynomial syntax, inconsistent degrees,
    /// zero polynomials, or an invalid morphism (common zero off the origin).
    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),
    /// Local or global analysis failed: non-stabilizing profile, possibly
    /// infinite discrepancy set, or factorization outside supported range.
    #[error("analysis failed: {0}")]
    Analysis(String),
    /// An enumeration exceeded its configured cell budget.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// Filesystem or serialization failure while reading/writing artifacts.
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Renders a `BigRational` as `"p/q"`, or just `"p"` when the denominator is 1.
pub fn rational_string(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p/q"`, an integer string, or a decimal string (`"1.5"`) as an exact
/// rational. Used for CLI thresholds so height comparisons stay exact.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidMorphism(format!("cannot parse rational from {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if d == BigInt::from(0) {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int = if int.is_empty() || int == "-" {
            format!("{int}0")
        } else {
            int.to_string()
        };
        let n: BigInt = int.parse().map_err(|_| bad())?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let fn_: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let frac_part = BigRational::new(fn_, scale.clone());
        let whole = BigRational::from(n);
        return Ok(if s.starts_with('-') {
            whole - frac_part
        } else {
            whole + frac_part
        });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parsing_roundtrip() {
        assert_eq!(parse_rational("3/2").unwrap(), parse_rational("1.5").unwrap());
        assert_eq!(parse_rational("-0.25").unwrap(), parse_rational("-1/4").unwrap());
        assert_eq!(rational_string(&parse_rational("10/5").unwrap()), "2");
        assert_eq!(rational_string(&parse_rational("7/3").unwrap()), "7/3");
        assert!(parse_rational("1.5e3").is_err());
        assert!(parse_rational("1/0").is_err());
    }
}
