//! Equivalence of the pruned enumerator against a definition-level scanner.
//!
//! The fast path must reproduce the scanner in `common` exactly, as
//! rationals, on every fixture and threshold here.

mod common;

use std::collections::BTreeMap;

use common::{fixture, rat, scanner};
use num_rational::BigRational;
use num_traits::Zero;

use wproj::enumeration::{count_exact, CountOptions};
use wproj::local_analysis::global_analysis;

fn check_equivalence(name: &str, ts: &[&str]) {
    let spec = fixture(name);
    let analysis = global_analysis(&spec).unwrap();
    for ts in ts {
        let t = rat(ts);
        let (want_mass, want_by_d) = scanner(&spec, &analysis, &t);
        let got = count_exact(&spec, &analysis, &t, &CountOptions::default()).unwrap();
        assert_eq!(got.mass, want_mass, "{name} at T = {ts}");
        let got_by_d: BTreeMap<BigRational, BigRational> = got
            .by_discrepancy
            .iter()
            .filter(|(_, m)| !m.is_zero())
            .cloned()
            .collect();
        assert_eq!(got_by_d, want_by_d, "{name} at T = {ts}, split by discrepancy");
    }
}

#[test]
fn x12_matches_the_definition_scanner() {
    check_equivalence("x1_2.json", &["1", "3/2", "2", "3"]);
}

#[test]
fn x13_matches_the_definition_scanner() {
    check_equivalence("x1_3.json", &["1", "3/2", "2", "3"]);
}

#[test]
fn identity_p11_matches_the_definition_scanner() {
    check_equivalence("identity_p11.json", &["1", "3/2", "2", "3"]);
}

#[test]
fn identity_p24_matches_the_definition_scanner() {
    check_equivalence("identity_p24.json", &["1", "3/2", "2", "3"]);
}

// Regression pins below were read off the scanner first, then frozen.

#[test]
fn x12_mass_at_one_is_three() {
    let spec = fixture("x1_2.json");
    let analysis = global_analysis(&spec).unwrap();
    let (mass, by_d) = scanner(&spec, &analysis, &rat("1"));
    // Six points of mass 1/2: (+-1, 0) with discrepancy 1, plus (0, +-8) and
    // (+-8, 24) at discrepancy 2. All four of the latter tie the bound
    // exactly: phi(0,8) = (-16, 0) with |-16| = 16 = (2*1)^4, and
    // phi(8,24) = (16, 64) with 16 = (2*1)^4 and 64 = (2*1)^6.
    assert_eq!(mass, rat("3"));
    let expect: BTreeMap<BigRational, BigRational> =
        [(rat("1"), rat("1")), (rat("2"), rat("2"))].into_iter().collect();
    assert_eq!(by_d, expect);
    // Every one of those points has size exactly 1, so the count jumps from
    // zero: boundary ties are included, on either path.
    let (below, _) = scanner(&spec, &analysis, &rat("99/100"));
    assert_eq!(below, rat("0"));
    let got = count_exact(&spec, &analysis, &rat("99/100"), &CountOptions::default()).unwrap();
    assert_eq!(got.mass, rat("0"));
}

#[test]
fn x13_mass_at_one_is_one() {
    let spec = fixture("x1_3.json");
    let analysis = global_analysis(&spec).unwrap();
    let (mass, by_d) = scanner(&spec, &analysis, &rat("1"));
    // (1,0) and (-1,0) are the same orbit: lambda = -1 sends one to the other
    // under weights (1,3). One point, trivial stabilizer, mass 1.
    assert_eq!(mass, rat("1"));
    let expect: BTreeMap<BigRational, BigRational> = [(rat("1"), rat("1"))].into_iter().collect();
    assert_eq!(by_d, expect);
}

#[test]
fn schanuel_mass_at_ten_is_128() {
    let spec = fixture("identity_p11.json");
    let analysis = global_analysis(&spec).unwrap();
    let (mass, _) = scanner(&spec, &analysis, &rat("10"));
    // Coprime pairs in [-10,10]^2: 4*(2*sum_{k<=10} phi(k) - 1) + 4 = 256
    // vectors, two per orbit, every stabilizer trivial.
    assert_eq!(mass, rat("128"));
    let got = count_exact(&spec, &analysis, &rat("10"), &CountOptions::default()).unwrap();
    assert_eq!(got.mass, rat("128"));
}
