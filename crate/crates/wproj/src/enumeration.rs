//! Exact counts of bounded-size points by pruned integer enumeration.
//!
//! The count N(T) is the groupoid mass of primitive canonical representatives
//! x with S_{u,inf}(phi(x)) <= N(d(x)) * T, where d(x) is the discrepancy of
//! x. The enumerator walks columns of the first coordinate inside the scaled
//! certified bounding box, stratifies every column by the residue classes of
//! the local profiles (each class fixes d(x)), and solves the per-stratum
//! inequalities |f_j(a, b)| <= (d T)^{u_j} exactly for the admissible second
//! coordinates. Degrees <= 2 in the inner variable get closed-form integer
//! windows; higher degrees fall back to the certified root isolator. Every
//! candidate is then accepted or rejected by the exact integer inequality, so
//! pruning never decides membership, only cost.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{self, FactoredRational};
use crate::asymptotics::AsymptoticPrediction;
use crate::local_analysis::GlobalAnalysis;
use crate::morphism::MorphismSpec;
use crate::univariate::{admissible_integer_ranges, RatPoly};
use crate::volume::bounding_box;
use crate::weighted_space::{automorphism_count, canonical_orbit_rep, scaling_ideal};
use crate::{Error, Result};

/// Tuning knobs for `count_exact`. Defaults suit the shipped fixtures.
#[derive(Clone, Debug)]
pub struct CountOptions {
    /// Upper bound on outer-loop columns; exceeding it aborts before scanning.
    pub budget_columns: u64,
    /// Columns per work slab (parallel unit and checkpoint granularity).
    pub slab_columns: u64,
    /// Resumable partial-sum file; ignored unless it matches the run exactly.
    pub checkpoint: Option<PathBuf>,
    /// Audit every n-th accepted point against the definition of the
    /// discrepancy; 0 disables the audit.
    pub audit_stride: u64,
    /// Drop points whose image has a vanishing (c4, c6) discriminant.
    pub exclude_singular: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            budget_columns: 10_000_000,
            slab_columns: 1024,
            checkpoint: None,
            audit_stride: 1009,
            exclude_singular: false,
        }
    }
}

/// Result of one exact count.
#[derive(Clone, Debug)]
pub struct CountOutcome {
    pub t: BigRational,
    /// Total mass; denominator divides 2.
    pub mass: BigRational,
    /// Mass per discrepancy value, ascending, zero entries included.
    pub by_discrepancy: Vec<(BigRational, BigRational)>,
    /// Outer columns scanned.
    pub columns: u64,
    /// Candidates tested by the exact filter.
    pub candidates: u64,
    /// Accepted orbit representatives.
    pub points: u64,
    /// Accepted points re-checked against the discrepancy definition.
    pub audited: u64,
}

/// Both sides of the Mobius-inversion identity, evaluated independently.
#[derive(Clone, Debug)]
pub struct MoebiusCheck {
    /// Mass of primitive representatives (scaling ideal exactly one).
    pub lhs: BigRational,
    /// The inclusion-exclusion sum over contents c <= prime_cut.
    pub rhs: BigRational,
    /// Largest content seen in the scan; the tail vanishes iff <= prime_cut.
    pub max_content: u64,
    pub prime_cut: u64,
    pub pass: bool,
}

/// Exact masses along a threshold ladder with the fitted constants.
#[derive(Clone, Debug)]
pub struct CountReport {
    pub t_ladder: Vec<BigRational>,
    pub masses: Vec<BigRational>,
    /// mass / T^{|w|/e} per rung.
    pub fitted: Vec<f64>,
    /// |fitted - C| / C per rung.
    pub relative_gaps: Vec<f64>,
    /// Heuristic: the final gap improved on the first or is already tiny.
    pub gaps_shrinking: bool,
    pub prediction: AsymptoticPrediction,
}

fn ipow(x: &BigRational, k: u32) -> BigRational {
    num_traits::pow(x.clone(), k as usize)
}

/// Smallest integer >= (scale^w)^{1/e} * unit, overshooting by at most one.
fn ceil_scaled_bound(scale: &BigRational, w: u32, e: u32, unit: &BigRational) -> BigInt {
    debug_assert!(scale.is_positive() && unit.is_positive());
    let q = ipow(scale, w) * ipow(unit, e);
    let n = -(-q).floor().to_integer();
    if e == 1 {
        n
    } else {
        n.nth_root(e) + 1
    }
}

// ---------------------------------------------------------------------------
// Residue stratification

/// The combined congruence data of all bad primes, flattened to one pair of
/// moduli. Each residue class of a primitive point determines its
/// discrepancy; classes without primitive points are dropped entirely.
struct ResidueSystem {
    m1: i64,
    m2: i64,
    d_values: Vec<BigRational>,
    /// rows[r1][d_idx] = admissible second-coordinate residues, ascending.
    rows: Vec<Vec<Vec<i64>>>,
}

const RESIDUE_GUARD: u64 = 1 << 24;

impl ResidueSystem {
    fn build(analysis: &GlobalAnalysis) -> Result<ResidueSystem> {
        let mut m1: u64 = 1;
        let mut m2: u64 = 1;
        let mut shift = FactoredRational::one();
        for profile in &analysis.profiles {
            if profile.is_trivial() {
                let j0 = profile.constant_label().expect("trivial profile");
                if j0 != 0 {
                    shift = shift.mul(&FactoredRational::prime_power(profile.p, j0));
                }
            } else {
                m1 *= profile.p.pow(profile.s[0]);
                m2 *= profile.p.pow(profile.s[1]);
            }
        }
        if m1.saturating_mul(m2) > RESIDUE_GUARD {
            return Err(Error::Analysis(format!(
                "combined residue table {m1} x {m2} exceeds the guard"
            )));
        }
        let d_values: Vec<BigRational> =
            analysis.discrepancy_set.iter().map(|d| d.value()).collect();
        let index: BTreeMap<BigRational, usize> = d_values
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, v)| (v, i))
            .collect();
        let bad: Vec<_> = analysis
            .profiles
            .iter()
            .filter(|profile| !profile.is_trivial())
            .collect();
        let mut rows = vec![vec![Vec::new(); d_values.len()]; m1 as usize];
        for r1 in 0..m1 {
            for r2 in 0..m2 {
                let mut d = shift.clone();
                let mut alive = true;
                for profile in &bad {
                    let p1 = profile.p.pow(profile.s[0]);
                    let p2 = profile.p.pow(profile.s[1]);
                    let idx = ((r1 % p1) * p2 + r2 % p2) as usize;
                    if !profile.primitive[idx] {
                        alive = false;
                        break;
                    }
                    d = d.mul(&FactoredRational::prime_power(profile.p, profile.labels[idx]));
                }
                if !alive {
                    continue;
                }
                let di = *index.get(&d.value()).ok_or_else(|| {
                    Error::Analysis("residue class carries a discrepancy outside the set".into())
                })?;
                rows[r1 as usize][di].push(r2 as i64);
            }
        }
        Ok(ResidueSystem { m1: m1 as i64, m2: m2 as i64, d_values, rows })
    }
}

// ---------------------------------------------------------------------------
// Exact integer windows for |G(b)| <= M with deg_b G <= 2

/// Integer interval of { b : a2 b^2 + a1 b + a0 <= 0 } for a2 > 0.
fn quad_le_interval(a2: &BigInt, a1: &BigInt, a0: &BigInt) -> Option<(BigInt, BigInt)> {
    debug_assert!(a2.is_positive());
    let disc = a1 * a1 - BigInt::from(4) * a2 * a0;
    if disc.is_negative() {
        return None;
    }
    let s = disc.sqrt();
    let q = |b: &BigInt| -> BigInt { (a2 * b + a1) * b + a0 };
    let two_a2 = BigInt::from(2) * a2;
    // The floor square root puts the starting guesses within two of the real
    // roots, so each walk to the exact integer edge is constant length. A
    // nonnegative discriminant still admits no integer solution when both
    // roots fall strictly between consecutive integers; the capped walk
    // detects that by overshooting.
    let mut lo = (-a1 - &s).div_floor(&two_a2);
    let mut found = false;
    for _ in 0..8 {
        if !q(&lo).is_positive() {
            found = true;
            break;
        }
        lo += 1;
    }
    if !found {
        return None;
    }
    let mut hi = (-a1 + &s).div_floor(&two_a2) + 1;
    let mut steps = 0;
    while q(&hi).is_positive() {
        hi -= 1;
        steps += 1;
        debug_assert!(steps < 8);
    }
    debug_assert!(lo <= hi);
    Some((lo, hi))
}

fn clip_push(out: &mut Vec<(BigInt, BigInt)>, lo: BigInt, hi: BigInt, wlo: &BigInt, whi: &BigInt) {
    let lo = lo.max(wlo.clone());
    let hi = hi.min(whi.clone());
    if lo <= hi {
        out.push((lo, hi));
    }
}

/// Integer solutions of a2 b^2 + a1 b + a0 <= 0 inside [wlo, whi].
fn poly_le_ranges(
    a2: &BigInt,
    a1: &BigInt,
    a0: &BigInt,
    wlo: &BigInt,
    whi: &BigInt,
) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::new();
    if a2.is_zero() {
        if a1.is_zero() {
            if !a0.is_positive() {
                out.push((wlo.clone(), whi.clone()));
            }
        } else if a1.is_positive() {
            clip_push(&mut out, wlo.clone(), (-a0).div_floor(a1), wlo, whi);
        } else {
            // a1 < 0: b >= a0 / |a1|, so the edge is the ceiling.
            clip_push(&mut out, -((-a0).div_floor(&-a1)), whi.clone(), wlo, whi);
        }
        return out;
    }
    if a2.is_positive() {
        if let Some((lo, hi)) = quad_le_interval(a2, a1, a0) {
            clip_push(&mut out, lo, hi, wlo, whi);
        }
        return out;
    }
    // a2 < 0: the complement of a positive-leading strict inequality. Over
    // the integers q <= 0 iff not (-q <= -1).
    match quad_le_interval(&-a2, &-a1, &(BigInt::one() - a0)) {
        None => out.push((wlo.clone(), whi.clone())),
        Some((lo, hi)) => {
            clip_push(&mut out, wlo.clone(), lo - 1, wlo, whi);
            clip_push(&mut out, hi + 1, whi.clone(), wlo, whi);
        }
    }
    out
}

fn intersect_ranges(
    a: &[(BigInt, BigInt)],
    b: &[(BigInt, BigInt)],
) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.clone().max(b[j].0.clone());
        let hi = a[i].1.clone().min(b[j].1.clone());
        if lo <= hi {
            out.push((lo, hi));
        }
        if a[i].1 <= b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Exact integer cover of { b in [wlo, whi] : |G(b)| <= mf } for the integer
/// polynomial G given by ascending coefficients. Closed form through degree
/// two, isolator fallback above.
fn abs_le_ranges(
    coeffs: &[BigInt],
    mf: &BigInt,
    wlo: &BigInt,
    whi: &BigInt,
) -> Vec<(BigInt, BigInt)> {
    let mut c = coeffs.to_vec();
    while c.last().map_or(false, |t| t.is_zero()) {
        c.pop();
    }
    debug_assert!(!mf.is_negative());
    match c.len() {
        0 => vec![(wlo.clone(), whi.clone())],
        1 => {
            if c[0].abs() <= *mf {
                vec![(wlo.clone(), whi.clone())]
            } else {
                vec![]
            }
        }
        2 | 3 => {
            let zero = BigInt::zero();
            let (c0, c1, c2) = (
                c[0].clone(),
                c.get(1).cloned().unwrap_or_else(|| zero.clone()),
                c.get(2).cloned().unwrap_or(zero),
            );
            let upper = poly_le_ranges(&c2, &c1, &(&c0 - mf), wlo, whi);
            let lower = poly_le_ranges(&-c2, &-c1, &(-&c0 - mf), wlo, whi);
            intersect_ranges(&upper, &lower)
        }
        _ => {
            let g = RatPoly::new(c.iter().map(|x| BigRational::from(x.clone())).collect());
            let m = BigRational::from(mf.clone());
            admissible_integer_ranges(&g, &m, wlo, whi)
        }
    }
}

// ---------------------------------------------------------------------------
// The column scanner

/// One polynomial as integer coefficient polynomials of the inner variable.
struct ConstraintShape {
    /// ipolys[k] = ascending coefficients in a of the b^k coefficient of
    /// den * f_j.
    ipolys: Vec<Vec<BigInt>>,
    den: BigInt,
    uj: u32,
}

fn constraint_shapes(spec: &MorphismSpec) -> Vec<ConstraintShape> {
    spec.polynomials
        .iter()
        .zip(&spec.target.0)
        .map(|(f, &uj)| {
            let inner = f.as_inner_poly();
            let mut den = BigInt::one();
            for poly in &inner {
                for c in &poly.coeffs {
                    den = den.lcm(c.denom());
                }
            }
            let ipolys = inner
                .iter()
                .map(|poly| {
                    poly.coeffs
                        .iter()
                        .map(|c| {
                            let scaled = c * BigRational::from(den.clone());
                            debug_assert!(scaled.is_integer());
                            scaled.to_integer()
                        })
                        .collect()
                })
                .collect();
            ConstraintShape { ipolys, den, uj }
        })
        .collect()
}

fn horner_big(coeffs: &[BigInt], x: &BigInt) -> BigInt {
    let mut acc = BigInt::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn horner_i128(coeffs: &[i128], x: i128) -> i128 {
    let mut acc = 0i128;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

#[derive(Clone, Copy, PartialEq)]
enum FlipMode {
    BothEven,
    FirstOdd,
    SecondOddOnly,
}

#[derive(Clone, Serialize, Deserialize)]
struct Tally {
    aut1: Vec<u64>,
    aut2: Vec<u64>,
    candidates: u64,
    points: u64,
    audited: u64,
}

impl Tally {
    fn new(n: usize) -> Tally {
        Tally { aut1: vec![0; n], aut2: vec![0; n], candidates: 0, points: 0, audited: 0 }
    }

    fn merge(&mut self, other: &Tally) {
        for (a, b) in self.aut1.iter_mut().zip(&other.aut1) {
            *a += b;
        }
        for (a, b) in self.aut2.iter_mut().zip(&other.aut2) {
            *a += b;
        }
        self.candidates += other.candidates;
        self.points += other.points;
        self.audited += other.audited;
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    fingerprint: String,
    batches_done: usize,
    tally: Tally,
}

struct Scanner<'a> {
    spec: &'a MorphismSpec,
    shapes: Vec<ConstraintShape>,
    rs: ResidueSystem,
    /// mf[d][j] = floor(den_j * (d T)^{u_j}).
    mf: Vec<Vec<BigInt>>,
    /// Per-stratum second-coordinate bound.
    bb: Vec<i64>,
    mode: FlipMode,
    w1: u32,
    w2: u32,
    audit_stride: u64,
    audit_primes: &'a [u64],
    exclude_singular: bool,
    /// p^{w2} for every prime small enough to matter in the zero column.
    zero_col_divisors: Vec<i128>,
}

impl Scanner<'_> {
    /// Stabilizer order of an accepted representative, or None when the
    /// vector is not the canonical member of its sign orbit.
    fn accept(&self, a: i64, b: i64) -> Option<u32> {
        match self.mode {
            FlipMode::BothEven => Some(2),
            FlipMode::FirstOdd => {
                if a < 0 {
                    Some(1)
                } else if self.w2 % 2 == 0 {
                    Some(2)
                } else if b < 0 {
                    Some(1)
                } else {
                    None
                }
            }
            FlipMode::SecondOddOnly => {
                if b < 0 {
                    Some(1)
                } else if b == 0 {
                    Some(2)
                } else {
                    None
                }
            }
        }
    }

    fn audit_point(&self, a: i64, b: i64, d_expected: &BigRational) -> Result<()> {
        let x = vec![BigInt::from(a), BigInt::from(b)];
        let fv = self.spec.evaluate_int(&x);
        let mut d = BigRational::one();
        for &p in self.audit_primes {
            let eu = fv
                .iter()
                .zip(&self.spec.target.0)
                .filter(|(v, _)| !v.is_zero())
                .map(|(v, &uj)| arith::valuation(v, p).div_euclid(uj as i64))
                .min()
                .expect("image nonzero");
            let ew = x
                .iter()
                .zip(&self.spec.source.0)
                .filter(|(v, _)| !v.is_zero())
                .map(|(v, &wi)| arith::valuation_int(v, p).div_euclid(wi as i64))
                .min()
                .expect("point nonzero");
            d *= FactoredRational::prime_power(p, eu - self.spec.e as i64 * ew).value();
        }
        if &d != d_expected {
            return Err(Error::Analysis(format!(
                "discrepancy audit failed at ({a}, {b}): profile table gives {d_expected}, \
                 the definition gives {d}"
            )));
        }
        Ok(())
    }

    /// True when the candidate is a primitive vector. `pa` holds p^{w2} for
    /// every prime with p^{w1} | a (first coordinate fixed in this column).
    fn primitive(&self, a: i64, b: i64, pa: &[Option<i128>]) -> bool {
        if a == 0 {
            if b == 0 {
                return false;
            }
            if self.w2 == 1 {
                return b == 1 || b == -1;
            }
            let babs = (b as i128).abs();
            return self.zero_col_divisors.iter().all(|pw| babs % pw != 0);
        }
        if b == 0 {
            return pa.is_empty();
        }
        let babs = (b as i128).abs();
        pa.iter().all(|pw| match pw {
            Some(pw) => babs % pw != 0,
            // p^{w2} overflowed i128, so it cannot divide a nonzero b here.
            None => true,
        })
    }

    fn singular_image(&self, fv: &[BigRational]) -> bool {
        // (c4, c6) with c4^3 = c6^2 is a degenerate Weierstrass fiber.
        ipow(&fv[0], 3) == ipow(&fv[1], 2)
    }

    fn scan_slab(&self, a_lo: i64, a_hi: i64) -> Result<Tally> {
        let nd = self.rs.d_values.len();
        let mut tally = Tally::new(nd);
        let m2 = self.rs.m2;
        for a in a_lo..=a_hi {
            let a_big = BigInt::from(a);
            let r1 = a.rem_euclid(self.rs.m1) as usize;
            let row = &self.rs.rows[r1];
            if row.iter().all(|res| res.is_empty()) {
                continue;
            }
            // Prime powers controlling primitivity along this column.
            let mut pa: Vec<Option<i128>> = Vec::new();
            if a != 0 {
                let factors = arith::factor(&a_big.abs())?;
                for (&p, &mult) in &factors {
                    if mult >= self.w1 as i64 {
                        pa.push((p as i128).checked_pow(self.w2));
                    }
                }
            }
            // Column coefficients of den_j * f_j(a, b) as polynomials in b.
            let col: Vec<Vec<BigInt>> = self
                .shapes
                .iter()
                .map(|shape| {
                    shape
                        .ipolys
                        .iter()
                        .map(|ipoly| horner_big(ipoly, &a_big))
                        .collect()
                })
                .collect();
            let bb_max = *self.bb.iter().max().expect("stratum bounds");
            // Machine path when every Horner intermediate provably fits.
            let col_small: Option<Vec<Vec<i128>>> = self
                .shapes
                .iter()
                .zip(&col)
                .map(|(_, coeffs)| {
                    let bound = coeffs.iter().rev().fold(BigInt::zero(), |acc, c| {
                        acc * BigInt::from(bb_max) + c.abs()
                    });
                    if bound <= BigInt::from(i128::MAX >> 2) {
                        coeffs
                            .iter()
                            .map(|c| c.to_i128())
                            .collect::<Option<Vec<i128>>>()
                    } else {
                        None
                    }
                })
                .collect();

            for di in 0..nd {
                let allowed = &row[di];
                if allowed.is_empty() {
                    continue;
                }
                let wlo = BigInt::from(-self.bb[di]);
                let whi = BigInt::from(self.bb[di]);
                let mut ranges = vec![(wlo.clone(), whi.clone())];
                for (j, coeffs) in col.iter().enumerate() {
                    let next = abs_le_ranges(coeffs, &self.mf[di][j], &wlo, &whi);
                    ranges = intersect_ranges(&ranges, &next);
                    if ranges.is_empty() {
                        break;
                    }
                }
                if ranges.is_empty() {
                    continue;
                }
                let mf_small: Option<Vec<i128>> = self.mf[di]
                    .iter()
                    .map(|m| m.to_i128())
                    .collect();
                for (rlo, rhi) in &ranges {
                    let rlo = rlo.to_i64().expect("window fits i64");
                    let rhi = rhi.to_i64().expect("window fits i64");
                    for &r2 in allowed {
                        let mut b = rlo + (r2 - rlo).rem_euclid(m2);
                        while b <= rhi {
                            tally.candidates += 1;
                            if self.test_point(
                                a, b, di, &col, &col_small, &mf_small, &pa, &mut tally,
                            )? {
                                tally.points += 1;
                            }
                            b += m2;
                        }
                    }
                }
            }
        }
        Ok(tally)
    }

    #[allow(clippy::too_many_arguments)]
    fn test_point(
        &self,
        a: i64,
        b: i64,
        di: usize,
        col: &[Vec<BigInt>],
        col_small: &Option<Vec<Vec<i128>>>,
        mf_small: &Option<Vec<i128>>,
        pa: &[Option<i128>],
        tally: &mut Tally,
    ) -> Result<bool> {
        if a == 0 && b == 0 {
            return Ok(false);
        }
        // Exact size inequality, constraint by constraint.
        match (col_small, mf_small) {
            (Some(cs), Some(ms)) => {
                for (coeffs, &mf) in cs.iter().zip(ms) {
                    if horner_i128(coeffs, b as i128).abs() > mf {
                        return Ok(false);
                    }
                }
            }
            _ => {
                let b_big = BigInt::from(b);
                for (coeffs, mf) in col.iter().zip(&self.mf[di]) {
                    if horner_big(coeffs, &b_big).abs() > *mf {
                        return Ok(false);
                    }
                }
            }
        }
        if !self.primitive(a, b, pa) {
            return Ok(false);
        }
        let aut = match self.accept(a, b) {
            Some(aut) => aut,
            None => return Ok(false),
        };
        if self.exclude_singular {
            let x = vec![BigInt::from(a), BigInt::from(b)];
            if self.singular_image(&self.spec.evaluate_int(&x)) {
                return Ok(false);
            }
        }
        if aut == 1 {
            tally.aut1[di] += 1;
        } else {
            tally.aut2[di] += 1;
        }
        if self.audit_stride > 0 && tally.points % self.audit_stride == 0 {
            self.audit_point(a, b, &self.rs.d_values[di])?;
            tally.audited += 1;
        }
        Ok(true)
    }
}

// ---------------------------------------------------------------------------
// Public entry points

fn mass_from(tally: &Tally, d_values: &[BigRational]) -> (BigRational, Vec<(BigRational, BigRational)>) {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut total = BigRational::zero();
    let mut by_d = Vec::with_capacity(d_values.len());
    for (i, d) in d_values.iter().enumerate() {
        let m = BigRational::from(BigInt::from(tally.aut1[i]))
            + BigRational::from(BigInt::from(tally.aut2[i])) * half.clone();
        total += m.clone();
        by_d.push((d.clone(), m));
    }
    (total, by_d)
}

/// Exact groupoid mass of { x : S_u(phi(x)) <= T } on the source space.
pub fn count_exact(
    spec: &MorphismSpec,
    analysis: &GlobalAnalysis,
    t: &BigRational,
    opts: &CountOptions,
) -> Result<CountOutcome> {
    if spec.source.len() != 2 {
        return Err(Error::Analysis(format!(
            "exact enumeration is implemented for two source coordinates (got {})",
            spec.source.len()
        )));
    }
    if !t.is_positive() {
        return Err(Error::Analysis("the size threshold T must be positive".into()));
    }
    if opts.exclude_singular && spec.target.0 != [4, 6] {
        return Err(Error::Analysis(
            "the singular-fiber exclusion needs a (c4, c6)-valued map, target weights (4, 6)"
                .into(),
        ));
    }
    let unit = bounding_box(spec, &BigRational::one())?;
    let rs = ResidueSystem::build(analysis)?;
    let shapes = constraint_shapes(spec);
    let (w1, w2) = (spec.source.0[0], spec.source.0[1]);
    let e = spec.e;

    // Per-stratum thresholds and bounds.
    let mut mf = Vec::with_capacity(rs.d_values.len());
    let mut bb = Vec::with_capacity(rs.d_values.len());
    for d in &rs.d_values {
        let dt = d * t;
        let row: Vec<BigInt> = shapes
            .iter()
            .map(|shape| {
                let k = ipow(&dt, shape.uj);
                (BigRational::from(shape.den.clone()) * k).floor().to_integer()
            })
            .collect();
        mf.push(row);
        let bound = ceil_scaled_bound(&dt, w2, e, &unit[1]);
        bb.push(bound.to_i64().ok_or_else(|| {
            Error::Budget("inner enumeration window exceeds the machine range".into())
        })?);
    }

    let dmax_t = rs.d_values.last().expect("nonempty discrepancy set") * t;
    let a_bound = ceil_scaled_bound(&dmax_t, w1, e, &unit[0])
        .to_i64()
        .ok_or_else(|| Error::Budget("outer enumeration range exceeds the machine range".into()))?;
    let mode = match (w1 % 2 == 1, w2 % 2 == 1) {
        (false, false) => FlipMode::BothEven,
        (true, _) => FlipMode::FirstOdd,
        (false, true) => FlipMode::SecondOddOnly,
    };
    // Odd first weight: the canonical representative of every orbit has
    // a <= 0, so the positive columns never contribute.
    let (a_lo, a_hi) = if mode == FlipMode::FirstOdd {
        (-a_bound, 0)
    } else {
        (-a_bound, a_bound)
    };
    let columns = (a_hi - a_lo + 1) as u64;
    if columns > opts.budget_columns {
        return Err(Error::Budget(format!(
            "T = {t} needs {columns} outer columns, above the budget of {}; \
             raise --budget to proceed",
            opts.budget_columns
        )));
    }

    let zero_col_divisors = if w2 >= 2 {
        let top = bb.iter().max().copied().unwrap_or(0) as i128;
        arith::primes()
            .iter()
            .map(|&p| p as i128)
            .take_while(|p| p.checked_pow(w2).map_or(false, |pw| pw <= top))
            .map(|p| p.pow(w2))
            .collect()
    } else {
        Vec::new()
    };
    let scanner = Scanner {
        spec,
        shapes,
        rs,
        mf,
        bb,
        mode,
        w1,
        w2,
        audit_stride: opts.audit_stride,
        audit_primes: &analysis.candidate_primes,
        exclude_singular: opts.exclude_singular,
        zero_col_divisors,
    };

    // Fixed slab partition; the reduce below folds in slab order so thread
    // scheduling cannot change any output bit.
    let slab = opts.slab_columns.max(1) as i64;
    let mut slabs = Vec::new();
    let mut lo = a_lo;
    while lo <= a_hi {
        let hi = (lo + slab - 1).min(a_hi);
        slabs.push((lo, hi));
        lo = hi + 1;
    }

    let fingerprint = format!(
        "{}|w={:?}|u={:?}|e={}|t={}|d={:?}|a=[{},{}]|slab={}|singular={}",
        spec.name,
        spec.source.0,
        spec.target.0,
        spec.e,
        t,
        scanner.rs.d_values.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        a_lo,
        a_hi,
        slab,
        opts.exclude_singular,
    );
    let mut tally = Tally::new(scanner.rs.d_values.len());
    let mut start_batch = 0usize;
    let batch_size = rayon::current_num_threads().max(1) * 4;
    let batches: Vec<&[(i64, i64)]> = slabs.chunks(batch_size).collect();
    if let Some(path) = &opts.checkpoint {
        if let Ok(bytes) = std::fs::read(path) {
            if let Ok(cp) = serde_json::from_slice::<Checkpoint>(&bytes) {
                if cp.fingerprint == fingerprint && cp.batches_done <= batches.len() {
                    tally = cp.tally;
                    start_batch = cp.batches_done;
                }
            }
        }
    }
    for (bi, batch) in batches.iter().enumerate().skip(start_batch) {
        let parts: Result<Vec<Tally>> = batch
            .par_iter()
            .map(|&(lo, hi)| scanner.scan_slab(lo, hi))
            .collect();
        for part in parts? {
            tally.merge(&part);
        }
        if let Some(path) = &opts.checkpoint {
            let cp = Checkpoint {
                fingerprint: fingerprint.clone(),
                batches_done: bi + 1,
                tally: tally.clone(),
            };
            std::fs::write(path, serde_json::to_vec(&cp).expect("checkpoint serializes"))?;
        }
    }

    let (mass, by_discrepancy) = mass_from(&tally, &scanner.rs.d_values);
    Ok(CountOutcome {
        t: t.clone(),
        mass,
        by_discrepancy,
        columns,
        candidates: tally.candidates,
        points: tally.points,
        audited: tally.audited,
    })
}

/// The count split by discrepancy value; entries sum to `count_exact`.
pub fn count_by_discrepancy(
    spec: &MorphismSpec,
    analysis: &GlobalAnalysis,
    t: &BigRational,
    opts: &CountOptions,
) -> Result<Vec<(BigRational, BigRational)>> {
    Ok(count_exact(spec, analysis, t, opts)?.by_discrepancy)
}

/// Verifies the Mobius-inversion identity by two independent direct scans:
/// the primitive mass at T must equal the inclusion-exclusion over contents.
pub fn moebius_crosscheck(
    spec: &MorphismSpec,
    analysis: &GlobalAnalysis,
    t: &BigRational,
    prime_cut: u64,
) -> Result<MoebiusCheck> {
    if spec.source.len() != 2 {
        return Err(Error::Analysis(
            "the crosscheck scan is implemented for two source coordinates".into(),
        ));
    }
    if !t.is_positive() {
        return Err(Error::Analysis("the size threshold T must be positive".into()));
    }
    let unit = bounding_box(spec, &BigRational::one())?;
    let dmax_t = analysis.d_max() * t;
    let e = spec.e;
    let half: Vec<i64> = spec
        .source
        .0
        .iter()
        .zip(&unit)
        .map(|(&w, b)| {
            ceil_scaled_bound(&dmax_t, w, e, b)
                .to_i64()
                .ok_or_else(|| Error::Budget("crosscheck box exceeds the machine range".into()))
        })
        .collect::<Result<_>>()?;
    if half[0].saturating_mul(half[1]) > 100_000_000 {
        return Err(Error::Budget(
            "the crosscheck is a full box scan; use a smaller T".into(),
        ));
    }

    let mut lhs = BigRational::zero();
    let mut rhs = BigRational::zero();
    let mut max_content: u64 = 0;
    for a in -half[0]..=half[0] {
        for b in -half[1]..=half[1] {
            if a == 0 && b == 0 {
                continue;
            }
            let x = vec![
                BigRational::from(BigInt::from(a)),
                BigRational::from(BigInt::from(b)),
            ];
            if canonical_orbit_rep(&x, &spec.source)? != x {
                continue;
            }
            let delta = crate::local_analysis::discrepancy(spec, &x)?.value();
            let dt = &delta * t;
            let fv = spec.evaluate(&x);
            let inside = fv
                .iter()
                .zip(&spec.target.0)
                .all(|(fj, &uj)| fj.abs() <= ipow(&dt, uj));
            if !inside {
                continue;
            }
            let content = scaling_ideal(&x, &spec.source)?.value().to_integer();
            let content = content.to_u64().expect("content fits in the scan box");
            max_content = max_content.max(content);
            let aut = automorphism_count(&x, &spec.source)?;
            let mass = BigRational::new(BigInt::one(), BigInt::from(aut));
            if content == 1 {
                lhs += mass.clone();
            }
            for c in 1..=prime_cut.min(content) {
                if content % c == 0 {
                    let mu = arith::moebius(c)?;
                    if mu != 0 {
                        rhs += BigRational::from(BigInt::from(mu)) * mass.clone();
                    }
                }
            }
        }
    }
    let pass = lhs == rhs && max_content <= prime_cut;
    Ok(MoebiusCheck { lhs, rhs, max_content, prime_cut, pass })
}

/// Runs `count_exact` along an ascending ladder and fits the growth constant.
pub fn convergence_report(
    spec: &MorphismSpec,
    analysis: &GlobalAnalysis,
    prediction: &AsymptoticPrediction,
    ladder: &[BigRational],
    opts: &CountOptions,
) -> Result<CountReport> {
    if ladder.is_empty() {
        return Err(Error::Analysis("the threshold ladder is empty".into()));
    }
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Analysis("the threshold ladder must be strictly ascending".into()));
    }
    let exponent = prediction.exponent.numer().to_f64().unwrap()
        / prediction.exponent.denom().to_f64().unwrap();
    let mut masses = Vec::with_capacity(ladder.len());
    let mut fitted = Vec::with_capacity(ladder.len());
    let mut relative_gaps = Vec::with_capacity(ladder.len());
    for t in ladder {
        let outcome = count_exact(spec, analysis, t, opts)?;
        let mass_f = outcome.mass.to_f64().expect("mass fits f64");
        let t_f = t.to_f64().expect("threshold fits f64");
        let fit = mass_f / t_f.powf(exponent);
        fitted.push(fit);
        relative_gaps.push((fit - prediction.constant).abs() / prediction.constant);
        masses.push(outcome.mass);
    }
    debug_assert!(masses.windows(2).all(|w| w[0] <= w[1]));
    let gaps_shrinking = relative_gaps.last().unwrap() <= &(relative_gaps[0] * 0.8 + 0.005);
    Ok(CountReport {
        t_ladder: ladder.to_vec(),
        masses,
        fitted,
        relative_gaps,
        gaps_shrinking,
        prediction: prediction.clone(),
    })
}
