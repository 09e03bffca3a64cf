//! Randomized invariant suites plus fixed-instance laws that do not
//! randomize well (full-scan identities, volume scaling, twists).
//!
//! Every randomized suite runs 1024 cases. Persistence files are disabled so
//! failures print their seeds instead of writing into the tree.

mod common;

use common::{fixture, ipow, rat};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;
use proptest::prelude::*;

use wproj::arith::FieldContext;
use wproj::asymptotics::predict;
use wproj::enumeration::{count_exact, moebius_crosscheck, CountOptions};
use wproj::local_analysis::{discrepancy, global_analysis, GlobalAnalysis};
use wproj::morphism::{parse_morphism, MorphismSpec};
use wproj::volume::volume_slice;
use wproj::weighted_space::{height_at_most, scaling_ideal, WeightVector};

static X12: Lazy<(MorphismSpec, GlobalAnalysis)> = Lazy::new(|| {
    let spec = fixture("x1_2.json");
    let analysis = global_analysis(&spec).unwrap();
    (spec, analysis)
});

static X13: Lazy<(MorphismSpec, GlobalAnalysis)> = Lazy::new(|| {
    let spec = fixture("x1_3.json");
    let analysis = global_analysis(&spec).unwrap();
    (spec, analysis)
});

static ID11: Lazy<(MorphismSpec, GlobalAnalysis)> = Lazy::new(|| {
    let spec = fixture("identity_p11.json");
    let analysis = global_analysis(&spec).unwrap();
    (spec, analysis)
});

fn weights() -> impl Strategy<Value = WeightVector> {
    prop_oneof![
        Just(vec![1u32, 1]),
        Just(vec![1, 2]),
        Just(vec![1, 3]),
        Just(vec![2, 3]),
        Just(vec![2, 4]),
        Just(vec![3, 4]),
    ]
    .prop_map(WeightVector)
}

/// Rational in [-50, 50] with denominator up to 12; zero allowed.
fn coord() -> impl Strategy<Value = BigRational> {
    (-50i64..=50, 1i64..=12)
        .prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

/// Nonzero scaling factor with numerator and denominator up to 8.
fn lambda() -> impl Strategy<Value = BigRational> {
    (1i64..=8, 1i64..=8, any::<bool>()).prop_map(|(n, d, neg)| {
        let l = BigRational::new(BigInt::from(n), BigInt::from(d));
        if neg {
            -l
        } else {
            l
        }
    })
}

fn scale(x: &[BigRational], w: &WeightVector, l: &BigRational) -> Vec<BigRational> {
    x.iter()
        .zip(&w.0)
        .map(|(xi, &wi)| ipow(l, wi) * xi)
        .collect()
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cases(1024))]

    // I_w(lambda_* x) = (lambda) * I_w(x) as fractional ideals.
    #[test]
    fn scaling_ideal_is_multiplicative(
        w in weights(),
        x1 in coord(),
        x2 in coord(),
        l in lambda(),
    ) {
        let x = vec![x1, x2];
        prop_assume!(x.iter().any(|c| !c.is_zero()));
        let scaled = scale(&x, &w, &l);
        let lhs = scaling_ideal(&scaled, &w).unwrap().value();
        let rhs = l.abs() * scaling_ideal(&x, &w).unwrap().value();
        prop_assert_eq!(lhs, rhs);
    }

    // S_w is constant on orbits: the exact comparison against any bound is
    // unchanged by scaling.
    #[test]
    fn height_comparison_is_scale_invariant(
        w in weights(),
        x1 in coord(),
        x2 in coord(),
        l in lambda(),
        bn in 1i64..=40,
        bd in 1i64..=12,
    ) {
        let x = vec![x1, x2];
        prop_assume!(x.iter().any(|c| !c.is_zero()));
        let bound = BigRational::new(BigInt::from(bn), BigInt::from(bd));
        let scaled = scale(&x, &w, &l);
        prop_assert_eq!(
            height_at_most(&scaled, &w, &bound).unwrap(),
            height_at_most(&x, &w, &bound).unwrap()
        );
    }

    // phi(lambda_* x) = (lambda^e)_* phi(x), coordinate by coordinate.
    #[test]
    fn morphisms_are_equivariant(
        which in 0usize..2,
        x1 in coord(),
        x2 in coord(),
        l in lambda(),
    ) {
        let spec = if which == 0 { &X12.0 } else { &X13.0 };
        let x = vec![x1, x2];
        let scaled = scale(&x, &spec.source, &l);
        let lhs = spec.evaluate(&scaled);
        let le = ipow(&l, spec.e);
        let rhs: Vec<BigRational> = spec
            .evaluate(&x)
            .into_iter()
            .zip(&spec.target.0)
            .map(|(fj, &uj)| ipow(&le, uj) * fj)
            .collect();
        prop_assert_eq!(lhs, rhs);
    }

    // d(lambda_* x) = d(x): the discrepancy is a function on the quotient.
    #[test]
    fn discrepancy_is_scale_invariant(
        which in 0usize..2,
        a in -60i64..=60,
        b in -60i64..=60,
        l in lambda(),
    ) {
        prop_assume!(a != 0 || b != 0);
        let spec = if which == 0 { &X12.0 } else { &X13.0 };
        let x = vec![
            BigRational::from(BigInt::from(a)),
            BigRational::from(BigInt::from(b)),
        ];
        let scaled = scale(&x, &spec.source, &l);
        prop_assert_eq!(
            discrepancy(spec, &scaled).unwrap().value(),
            discrepancy(spec, &x).unwrap().value()
        );
    }

    // On primitive points the residue profiles determine the discrepancy:
    // the product of per-prime labels equals the direct definition. The
    // direct side factors the image coordinates exactly, which caps the box:
    // [-200, 200]^2 keeps the degree-3 values of the first fixture inside
    // the sieve range, and the second fixture's degree-6 values need
    // |a|, |b| <= 64.
    #[test]
    fn profiles_agree_with_direct_discrepancy(
        which in 0usize..2,
        a in -200i64..=200,
        b in -200i64..=200,
    ) {
        prop_assume!(a != 0 || b != 0);
        let (a, b) = if which == 0 { (a, b) } else { (a * 64 / 200, b * 64 / 200) };
        prop_assume!(a != 0 || b != 0);
        let (spec, analysis) = if which == 0 { (&X12.0, &X12.1) } else { (&X13.0, &X13.1) };
        let xi = vec![BigInt::from(a), BigInt::from(b)];
        let x = vec![
            BigRational::from(BigInt::from(a)),
            BigRational::from(BigInt::from(b)),
        ];
        prop_assume!(scaling_ideal(&x, &spec.source).unwrap().is_one());
        let mut from_profiles = BigRational::one();
        for profile in &analysis.profiles {
            let j = profile.label_of_point(&xi);
            from_profiles *= wproj::arith::FactoredRational::prime_power(profile.p, j).value();
        }
        prop_assert_eq!(from_profiles, discrepancy(spec, &x).unwrap().value());
    }

    // The per-discrepancy masses partition the total, and every mass has
    // denominator 1 or 2 (stabilizers over the rationals are trivial or +-1).
    #[test]
    fn counts_partition_by_discrepancy(
        which in 0usize..2,
        n in 1i64..=36,
    ) {
        let ((spec, analysis), t) = if which == 0 {
            // X1(2): T in (0, 3/2], stepping by 1/24.
            ((&X12.0, &X12.1), BigRational::new(BigInt::from(n), BigInt::from(24)))
        } else {
            // Identity P(1,1): T in (0, 30], stepping by 5/6.
            ((&ID11.0, &ID11.1), BigRational::new(BigInt::from(5 * n), BigInt::from(6)))
        };
        let opts = CountOptions::default();
        let outcome = count_exact(spec, analysis, &t, &opts).unwrap();
        let sum: BigRational = outcome
            .by_discrepancy
            .iter()
            .map(|(_, m)| m.clone())
            .fold(BigRational::zero(), |acc, m| acc + m);
        prop_assert_eq!(&sum, &outcome.mass);
        let denom = outcome.mass.denom().to_i64().unwrap();
        prop_assert!(denom == 1 || denom == 2, "denominator {denom}");
        // Monotonicity in T.
        let half = count_exact(spec, analysis, &(&t / BigRational::from(BigInt::from(2))), &opts)
            .unwrap();
        prop_assert!(half.mass <= outcome.mass);
    }
}

// ---------------------------------------------------------------------------
// Fixed-instance laws

#[test]
fn moebius_inversion_on_fixed_thresholds() {
    for ((spec, analysis), ts) in [
        ((&X12.0, &X12.1), vec!["1", "3/2", "2"]),
        ((&X13.0, &X13.1), vec!["1", "2"]),
        ((&ID11.0, &ID11.1), vec!["5", "10"]),
    ] {
        for t in ts {
            let check = moebius_crosscheck(spec, analysis, &rat(t), 50).unwrap();
            assert!(
                check.pass,
                "{} at T = {t}: lhs {} rhs {} max content {}",
                spec.name, check.lhs, check.rhs, check.max_content
            );
            // The primitive side of the identity is the count itself.
            let direct = count_exact(spec, analysis, &rat(t), &CountOptions::default()).unwrap();
            assert_eq!(check.lhs, direct.mass, "{} at T = {t}", spec.name);
        }
    }
}

#[test]
fn region_volume_obeys_the_scaling_law() {
    // vol B(T) = T^{|w|/e} vol B(1). The slicer's node layout is invariant
    // under the scaling, so the ratio holds to float roundoff, far inside
    // the 1e-6 tolerance asserted here.
    for (spec, total) in [(&X12.0, 6u32), (&X13.0, 4u32)] {
        let base = volume_slice(spec, &rat("1"), 2048).unwrap().value;
        for t in ["2", "5"] {
            let scaled = volume_slice(spec, &rat(t), 2048).unwrap().value;
            let factor = rat(t).to_f64().unwrap().powi(total as i32);
            let rel = (scaled / base - factor).abs() / factor;
            assert!(rel < 1e-6, "{} at T = {t}: ratio off by {rel:.3e}", spec.name);
        }
    }
}

#[test]
fn twisted_morphisms_count_and_predict_identically() {
    // Rescaling f_j by c^{u_j} composes phi with an automorphism of the
    // target, so heights, counts, and the leading constant are unchanged.
    // c = 2 shifts the 2-adic labels up; c = 1/3 makes every discrepancy
    // fractional through a constant label at p = 3. Both must reproduce the
    // original counts exactly and the original constant to float accuracy.
    let twist2 = parse_morphism(
        r#"{
        "name": "x1_2_twist2",
        "source_weights": [2, 4],
        "target_weights": [4, 6],
        "polynomials": ["16*x1^2 - 32*x2", "192*x1*x2 - 64*x1^3"]
    }"#,
    )
    .unwrap();
    let twist3 = parse_morphism(
        r#"{
        "name": "x1_2_twist_third",
        "source_weights": [2, 4],
        "target_weights": [4, 6],
        "polynomials": ["1/81*x1^2 - 2/81*x2", "1/243*x1*x2 - 1/729*x1^3"]
    }"#,
    )
    .unwrap();
    let field = FieldContext::rationals();
    let (base_spec, base_analysis) = (&X12.0, &X12.1);
    let base_vol = volume_slice(base_spec, &rat("1"), 2048).unwrap().value;
    let base_pred = predict(base_spec, base_analysis, base_vol, &field).unwrap();
    for spec in [&twist2, &twist3] {
        let analysis = global_analysis(spec).unwrap();
        for t in ["1", "2"] {
            let got = count_exact(spec, &analysis, &rat(t), &CountOptions::default()).unwrap();
            let want =
                count_exact(base_spec, base_analysis, &rat(t), &CountOptions::default()).unwrap();
            assert_eq!(got.mass, want.mass, "{} at T = {t}", spec.name);
        }
        let vol = volume_slice(spec, &rat("1"), 2048).unwrap().value;
        let pred = predict(spec, &analysis, vol, &field).unwrap();
        let rel = (pred.constant - base_pred.constant).abs() / base_pred.constant;
        assert!(rel < 2e-6, "{}: constant off by {rel:.3e}", spec.name);
        assert_eq!(pred.exponent, base_pred.exponent);
    }
}
