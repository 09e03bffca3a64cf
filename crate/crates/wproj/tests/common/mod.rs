//! Shared helpers for the integration suites: fixture loading and the
//! definition-level scanner used as the counting oracle.

// Each test target compiles this module and uses a subset of it.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use wproj::local_analysis::GlobalAnalysis;
use wproj::morphism::{parse_morphism_file, MorphismSpec};
use wproj::volume::bounding_box;
use wproj::weighted_space::{automorphism_count, canonical_orbit_rep, scaling_ideal};

pub fn fixture(name: &str) -> MorphismSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    parse_morphism_file(&path).unwrap()
}

pub fn rat(s: &str) -> BigRational {
    wproj::parse_rational(s).unwrap()
}

pub fn ipow(x: &BigRational, k: u32) -> BigRational {
    num_traits::pow(x.clone(), k as usize)
}

/// Mass and per-discrepancy masses by exhaustive scan over a padded box.
///
/// The scanner counts directly from the definitions: it walks every integer
/// vector in a box that provably contains the height region, applies the size
/// inequality S_{u,inf}(phi(x)) <= N(I_u(phi(x))) * T coordinate by
/// coordinate, and filters primitivity and canonicality with the basic ideal
/// operations. No residue tables, no admissible windows, no strata.
///
/// The box is the certified unit bounding box scaled to the d_max*T level;
/// every point outside it violates |f_j| <= (d_max T)^{u_j} for some j and so
/// fails the size inequality for every possible discrepancy. The +2 padding
/// swallows float rounding in the box conversion.
pub fn scanner(
    spec: &MorphismSpec,
    analysis: &GlobalAnalysis,
    t: &BigRational,
) -> (BigRational, BTreeMap<BigRational, BigRational>) {
    let unit = bounding_box(spec, &BigRational::one()).unwrap();
    let dmax_t = (analysis.d_max() * t).to_f64().unwrap();
    let e = spec.e as f64;
    let half: Vec<i64> = spec
        .source
        .0
        .iter()
        .zip(&unit)
        .map(|(&w, b)| (dmax_t.powf(w as f64 / e) * b.to_f64().unwrap()).ceil() as i64 + 2)
        .collect();

    let mut mass = BigRational::zero();
    let mut by_d: BTreeMap<BigRational, BigRational> = BTreeMap::new();
    for a in -half[0]..=half[0] {
        for b in -half[1]..=half[1] {
            if a == 0 && b == 0 {
                continue;
            }
            let x = vec![
                BigRational::from(BigInt::from(a)),
                BigRational::from(BigInt::from(b)),
            ];
            let fv = spec.evaluate(&x);
            let iu = scaling_ideal(&fv, &spec.target).unwrap();
            let nt = iu.value() * t;
            let inside = fv
                .iter()
                .zip(&spec.target.0)
                .all(|(fj, &uj)| fj.abs() <= ipow(&nt, uj));
            if !inside {
                continue;
            }
            if !scaling_ideal(&x, &spec.source).unwrap().is_one() {
                continue;
            }
            if canonical_orbit_rep(&x, &spec.source).unwrap() != x {
                continue;
            }
            let aut = automorphism_count(&x, &spec.source).unwrap();
            let w = BigRational::new(BigInt::one(), BigInt::from(aut));
            mass += w.clone();
            *by_d.entry(iu.value()).or_insert_with(BigRational::zero) += w;
        }
    }
    (mass, by_d)
}
