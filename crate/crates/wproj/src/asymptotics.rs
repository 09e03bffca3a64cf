//! The leading constant and growth exponents of the point count.
//!
//! With `|w| = w_1 + ... + w_m` the count of points of height at most `T`
//! grows like `C * T^{|w|/e}`. The constant factors as an arithmetic part
//! (an exact rational assembled from the local censuses) times an archimedean
//! part (the volume of the unit height region) over the usual zeta and field
//! normalizations. Everything before the final f64 multiplication is exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

use crate::arith::{zeta_q, FieldContext};
use crate::local_analysis::{CensusCell, GlobalAnalysis};
use crate::morphism::MorphismSpec;
use crate::{Error, Result};

/// The exact arithmetic factor:
///
/// `[ sum_d sum_{c1} d^{|w|/e} mu(c1) census(d,c1) / index(c1) ]
///  * prod_{p bad} (1 - p^{-|w|})^{-1}`.
///
/// `d^{|w|/e}` must be rational, which needs `d^{|w|}` to be an exact `e`-th
/// power; realized discrepancies always satisfy this, anything else is a
/// reported error rather than a rounding.
pub fn c_phi_sum(
    census: &[CensusCell],
    modulus_index: &BTreeMap<u64, BigInt>,
    bad_primes: &[u64],
    total_weight: u64,
    e: u32,
) -> Result<BigRational> {
    let mut sum = BigRational::zero();
    for cell in census {
        if cell.count.is_zero() {
            continue;
        }
        let powed = cell.d.pow(total_weight as i64);
        let root = powed.root(e as i64).map_err(|_| {
            Error::Analysis(format!(
                "discrepancy power d^(|w|/e) is non-integral for d = {}, |w| = {total_weight}, e = {e}",
                crate::rational_string(&cell.d.value())
            ))
        })?;
        let mu = if bad_primes.iter().filter(|&&p| cell.c1 % p == 0).count() % 2 == 0 {
            BigInt::one()
        } else {
            -BigInt::one()
        };
        let index = modulus_index
            .get(&cell.c1)
            .expect("census c1 has a modulus index");
        sum += root.value() * BigRational::new(mu * &cell.count, index.clone());
    }
    let mut euler = BigRational::one();
    for &p in bad_primes {
        let pw = BigInt::from(p).pow(total_weight as u32);
        euler *= BigRational::new(pw.clone(), &pw - BigInt::one());
    }
    Ok(sum * euler)
}

/// The arithmetic factor of a completed analysis.
pub fn c_phi(analysis: &GlobalAnalysis) -> BigRational {
    analysis.c_phi.clone()
}

/// Assembles the leading constant
/// `C = (h R / #mu) (2^{r2} / sqrt|D|)^m c_phi vol / zeta(|w|)`,
/// which over `Q` is `c_phi * vol / (2 zeta(|w|))`. `coords` is the number of
/// homogeneous coordinates `m`.
pub fn leading_constant(
    c_phi: &BigRational,
    total_weight: u64,
    coords: usize,
    volume: f64,
    field: &FieldContext,
) -> Result<f64> {
    if total_weight < 2 {
        return Err(Error::Analysis(format!(
            "total weight {total_weight} is below 2; the count diverges"
        )));
    }
    let zeta = zeta_q(total_weight as u32)?;
    let unit_part =
        field.class_number as f64 * field.regulator / field.roots_of_unity as f64;
    let embed_part =
        (2f64.powi(field.r2 as i32) / (field.abs_discriminant as f64).sqrt()).powi(coords as i32);
    let c_phi_f = c_phi.numer().to_f64().unwrap() / c_phi.denom().to_f64().unwrap();
    Ok(unit_part * embed_part * c_phi_f * volume / zeta)
}

/// Log-corrected weight systems: the secondary term degenerates onto the main
/// term exactly for `P(1,1)` and `P(2)`.
pub fn log_correction(weights: &[u32]) -> bool {
    weights == [1, 1] || weights == [2]
}

#[derive(Clone, Debug)]
pub struct AsymptoticPrediction {
    /// Growth exponent `|w|/e`.
    pub exponent: BigRational,
    /// Leading constant `C`.
    pub constant: f64,
    /// Exponent of the error term, `(|w| - min_i w_i)/e`.
    pub error_exponent: BigRational,
    /// Whether the error term carries a log factor.
    pub log_correction: bool,
    /// The exact arithmetic factor that went into `constant`.
    pub c_phi: BigRational,
    /// The archimedean factor that went into `constant`.
    pub volume: f64,
}

impl AsymptoticPrediction {
    /// `C * T^{|w|/e}`.
    pub fn expected_count(&self, t: f64) -> f64 {
        let ex = self.exponent.numer().to_f64().unwrap()
            / self.exponent.denom().to_f64().unwrap();
        self.constant * t.powf(ex)
    }
}

/// The full prediction for a morphism whose local analysis and region volume
/// are already computed.
pub fn predict(
    spec: &MorphismSpec,
    analysis: &GlobalAnalysis,
    volume: f64,
    field: &FieldContext,
) -> Result<AsymptoticPrediction> {
    let tw = spec.source.total();
    let constant = leading_constant(&analysis.c_phi, tw, spec.source.len(), volume, field)?;
    let exponent = BigRational::new(BigInt::from(tw), BigInt::from(spec.e));
    let error_exponent = BigRational::new(
        BigInt::from(tw - spec.source.min() as u64),
        BigInt::from(spec.e),
    );
    debug_assert!(exponent.is_positive());
    Ok(AsymptoticPrediction {
        exponent,
        constant,
        error_exponent,
        log_correction: log_correction(&spec.source.0),
        c_phi: analysis.c_phi.clone(),
        volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_analysis::global_analysis;
    use crate::morphism::parse_morphism;

    #[test]
    fn schanuel_constant_on_the_plane() {
        // P(1,1), identity: c_phi = 1, vol of {max(|a|,|b|) <= 1} = 4,
        // C = 4 / (2 zeta(2)) = 12/pi^2.
        let c = leading_constant(
            &BigRational::one(),
            2,
            2,
            4.0,
            &FieldContext::rationals(),
        )
        .unwrap();
        assert!((c - 12.0 / std::f64::consts::PI.powi(2)).abs() < 1e-12);
        assert!((c - 1.2158542037080532).abs() < 1e-12);
    }

    #[test]
    fn identity_constant_on_p24() {
        // Identity on P(2,4): vol of {|a| <= 1, |b| <= 1} = 4, C = 2/zeta(6).
        let c = leading_constant(
            &BigRational::one(),
            6,
            2,
            4.0,
            &FieldContext::rationals(),
        )
        .unwrap();
        // zeta(6) = pi^6/945, so C = 1890/pi^6, checked against pi directly.
        assert!((c - 1890.0 / std::f64::consts::PI.powi(6)).abs() < 1e-12);
    }

    #[test]
    fn prediction_shape() {
        let spec = parse_morphism(
            r#"{
                "name": "x1_2", "source_weights": [2, 4], "target_weights": [4, 6],
                "polynomials": ["x1^2 - 2*x2", "3*x1*x2 - x1^3"]
            }"#,
        )
        .unwrap();
        let ga = global_analysis(&spec).unwrap();
        assert_eq!(ga.c_phi, BigRational::new(BigInt::from(3), BigInt::from(2)));
        let pred = predict(&spec, &ga, 2.5377, &FieldContext::rationals()).unwrap();
        assert_eq!(pred.exponent, BigRational::from(BigInt::from(6)));
        assert_eq!(pred.error_exponent, BigRational::from(BigInt::from(4)));
        assert!(!pred.log_correction);
        // C = (3/2) vol / (2 zeta(6)); with vol ~ 2.5377 this is ~ 1.8708.
        assert!((pred.constant - 1.871).abs() < 5e-3);
        let n100 = pred.expected_count(100.0);
        assert!((n100 / (pred.constant * 1e12) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_correction_flags() {
        assert!(log_correction(&[1, 1]));
        assert!(log_correction(&[2]));
        assert!(!log_correction(&[2, 4]));
        assert!(!log_correction(&[1, 3]));
        assert!(!log_correction(&[1, 1, 1]));
    }

    #[test]
    fn diverging_weight_rejected() {
        let err = leading_constant(
            &BigRational::one(),
            1,
            1,
            1.0,
            &FieldContext::rationals(),
        )
        .unwrap_err();
        assert!(format!("{err}").contains("diverges"));
    }
}
