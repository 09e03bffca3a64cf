//! Archimedean factor: the unit height region and its volume.
//!
//! The region at height bound `t` is `{x in R^m : |f_i(x)| <= t^{e u_i}}`. It
//! is compact (a common real zero off the origin is excluded by morphism
//! validation) and star shaped under the weighted scaling toward the origin,
//! so a box certified to have the whole region strictly off its faces
//! contains the region: a point escaping the box would scale down through a
//! face. Face certification runs in exact rational interval arithmetic.
//!
//! For two coordinates the volume integrates slice measures between exact
//! breakpoints. Breakpoints are the real roots of the boundary polynomials in
//! the first coordinate: corner resultants (two boundary curves meet),
//! discriminants (a boundary curve folds), and leading coefficient drops. On
//! each open piece the slice endpoints are analytic, and an endpoint
//! clustering substitution removes the square root behavior at piece ends, so
//! Gauss-Legendre converges fast. A seeded Monte Carlo estimate serves as an
//! independent cross check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng as _;
use rand::SeedableRng as _;
use rand_chacha::ChaCha12Rng;

use crate::morphism::{MorphismSpec, WeightedPolynomial};
use crate::univariate::{isolate_real_roots, rat_to_f64, resultant_in_inner, RatPoly};
use crate::{Error, Result};

/// Per-polynomial bound `t^{e u_i}`, exact.
fn thresholds(spec: &MorphismSpec, t: &BigRational) -> Result<Vec<BigRational>> {
    if !t.is_positive() {
        return Err(Error::Analysis(format!(
            "height bound must be positive (got {})",
            crate::rational_string(t)
        )));
    }
    Ok(spec
        .target
        .0
        .iter()
        .map(|&ui| {
            let mut acc = BigRational::one();
            for _ in 0..(spec.e as u64 * ui as u64) {
                acc *= t;
            }
            acc
        })
        .collect())
}

#[derive(Clone, Debug)]
struct Iv {
    lo: BigRational,
    hi: BigRational,
}

impl Iv {
    fn point(x: BigRational) -> Self {
        Iv { lo: x.clone(), hi: x }
    }

    fn symmetric(b: &BigRational) -> Self {
        Iv { lo: -b.clone(), hi: b.clone() }
    }

    fn add(&self, o: &Iv) -> Iv {
        Iv { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    fn scale(&self, c: &BigRational) -> Iv {
        if c.is_negative() {
            Iv { lo: &self.hi * c, hi: &self.lo * c }
        } else {
            Iv { lo: &self.lo * c, hi: &self.hi * c }
        }
    }

    /// Tight power: even powers of a sign-straddling interval start at zero.
    fn powu(&self, n: u32) -> Iv {
        if n == 0 {
            return Iv::point(BigRational::one());
        }
        let lo_n = num_traits::pow::pow(self.lo.clone(), n as usize);
        let hi_n = num_traits::pow::pow(self.hi.clone(), n as usize);
        if n % 2 == 1 {
            Iv { lo: lo_n, hi: hi_n }
        } else if !self.lo.is_negative() {
            Iv { lo: lo_n, hi: hi_n }
        } else if !self.hi.is_positive() {
            Iv { lo: hi_n, hi: lo_n }
        } else {
            Iv { lo: BigRational::zero(), hi: lo_n.max(hi_n) }
        }
    }

    fn mul(&self, o: &Iv) -> Iv {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let mut lo = c[0].clone();
        let mut hi = c[0].clone();
        for v in &c[1..] {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        Iv { lo, hi }
    }

    fn entirely_outside(&self, tau: &BigRational) -> bool {
        self.lo > *tau || self.hi < -tau.clone()
    }

    fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

fn eval_interval(f: &WeightedPolynomial, x: &[Iv]) -> Iv {
    let mut acc = Iv::point(BigRational::zero());
    for (exps, c) in &f.terms {
        let mut term = Iv::point(BigRational::one());
        for (iv, &e) in x.iter().zip(exps) {
            if e > 0 {
                term = term.mul(&iv.powu(e));
            }
        }
        acc = acc.add(&term.scale(c));
    }
    acc
}

/// Certifies that the region stays strictly off the face `x_coord = sign*B`.
fn certify_face(
    spec: &MorphismSpec,
    taus: &[BigRational],
    bounds: &[BigRational],
    coord: usize,
    sign: i8,
) -> bool {
    let m = bounds.len();
    let face_value = if sign > 0 { bounds[coord].clone() } else { -bounds[coord].clone() };
    let min_widths: Vec<BigRational> = bounds
        .iter()
        .map(|b| b / BigRational::from(BigInt::from(1u64 << 20)))
        .collect();
    let mut work: Vec<Vec<Iv>> = vec![(0..m)
        .map(|k| {
            if k == coord {
                Iv::point(face_value.clone())
            } else {
                Iv::symmetric(&bounds[k])
            }
        })
        .collect()];
    let mut budget = 4000usize;
    while let Some(cell) = work.pop() {
        if budget == 0 {
            return false;
        }
        budget -= 1;
        let cleared = spec
            .polynomials
            .iter()
            .zip(taus)
            .any(|(f, tau)| eval_interval(f, &cell).entirely_outside(tau));
        if cleared {
            continue;
        }
        // Split the widest splittable free coordinate.
        let split = (0..m)
            .filter(|&k| k != coord && cell[k].width() > min_widths[k])
            .max_by(|&a, &b| cell[a].width().cmp(&cell[b].width()));
        let Some(k) = split else {
            return false; // uncleared cell too small to keep splitting
        };
        let mid = (&cell[k].lo + &cell[k].hi) / BigRational::from(BigInt::from(2));
        let mut left = cell.clone();
        left[k] = Iv { lo: cell[k].lo.clone(), hi: mid.clone() };
        let mut right = cell;
        let hi = right[k].hi.clone();
        right[k] = Iv { lo: mid, hi };
        work.push(left);
        work.push(right);
    }
    true
}

/// Smallest certified symmetric box `prod [-B_i, B_i]` containing the region,
/// up to the inflation granularity. The seed comes from the on-axis monomial
/// bounds, then faces are certified and the box inflated on failure.
pub fn bounding_box(spec: &MorphismSpec, t: &BigRational) -> Result<Vec<BigRational>> {
    let taus = thresholds(spec, t)?;
    let m = spec.source.len();
    let one = BigRational::one();
    let mut bounds: Vec<BigRational> = (0..m)
        .map(|k| {
            let mut best = one.clone();
            for (f, tau) in spec.polynomials.iter().zip(&taus) {
                // Restriction to the k-th axis is the pure x_k monomial.
                for (exps, c) in &f.terms {
                    if exps.iter().enumerate().all(|(j, &e)| (e == 0) == (j != k)) {
                        let ratio = tau / c.abs();
                        // r^{1/d} <= max(1, r) keeps the seed rational.
                        best = best.max(ratio.max(one.clone()));
                    }
                }
            }
            best * BigRational::from(BigInt::from(2))
        })
        .collect();

    let inflate = BigRational::new(BigInt::from(3), BigInt::from(2));
    for _ in 0..=6 {
        let ok = (0..m)
            .all(|k| certify_face(spec, &taus, &bounds, k, 1) && certify_face(spec, &taus, &bounds, k, -1));
        if ok {
            return Ok(bounds);
        }
        for b in &mut bounds {
            *b *= inflate.clone();
        }
    }
    Err(Error::Analysis(
        "cannot certify a bounding box for the height region: inflation limit reached".into(),
    ))
}

/// Where a boundary-in-`a` polynomial comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundarySource {
    /// Two boundary curves `f_i = sigma_i tau_i` meet.
    Corner { sigma: [i8; 2] },
    /// A boundary curve folds back (discriminant in the second coordinate),
    /// or a second-coordinate-free constraint switches feasibility.
    Critical { index: usize, sigma: i8 },
    /// The slice degree drops (leading coefficient in the second coordinate).
    Degenerate { index: usize },
}

#[derive(Clone, Debug)]
pub struct BoundaryPolynomial {
    pub source: BoundarySource,
    /// Primitive integer coefficients, ascending; of the halved polynomial
    /// (in `z = a^2`) when `halved` is set.
    pub coeffs: Vec<BigInt>,
    pub halved: bool,
    /// Real roots of the exposed polynomial.
    pub real_roots: Vec<f64>,
    /// The unhalved polynomial in `a`, used for slice breakpoints.
    pub(crate) a_poly: RatPoly,
}

fn root_width() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(1u64 << 44))
}

fn make_boundary(source: BoundarySource, poly: &RatPoly) -> Option<BoundaryPolynomial> {
    if poly.degree().unwrap_or(0) == 0 {
        return None;
    }
    let prim = poly.primitive_integer();
    let a_poly = RatPoly::new(prim.iter().map(|c| BigRational::from(c.clone())).collect());
    let halved = prim.len() > 3 && prim.iter().skip(1).step_by(2).all(|c| c.is_zero());
    let exposed: Vec<BigInt> = if halved {
        prim.iter().step_by(2).cloned().collect()
    } else {
        prim.clone()
    };
    let exposed_poly =
        RatPoly::new(exposed.iter().map(|c| BigRational::from(c.clone())).collect());
    let real_roots: Vec<f64> = isolate_real_roots(&exposed_poly, &root_width())
        .iter()
        .map(|b| b.midpoint_f64())
        .collect();
    Some(BoundaryPolynomial { source, coeffs: exposed, halved, real_roots, a_poly })
}

fn inner_derivative(f: &[RatPoly]) -> Vec<RatPoly> {
    f.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c.scale(&BigRational::from(BigInt::from(k as i64))))
        .collect()
}

fn inner_degree(f: &[RatPoly]) -> usize {
    f.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

/// All boundary-in-`a` polynomials of the two-coordinate region at height
/// bound `t`.
pub fn boundary_polynomials(spec: &MorphismSpec, t: &BigRational) -> Result<Vec<BoundaryPolynomial>> {
    if spec.source.len() != 2 {
        return Err(Error::Analysis(format!(
            "boundary polynomials need exactly two coordinates (got {})",
            spec.source.len()
        )));
    }
    let taus = thresholds(spec, t)?;
    let inners: Vec<Vec<RatPoly>> =
        spec.polynomials.iter().map(|f| f.as_inner_poly()).collect();
    let shifted = |i: usize, sigma: i8| -> Vec<RatPoly> {
        let mut v = inners[i].clone();
        if v.is_empty() {
            v.push(RatPoly::zero());
        }
        let shift = if sigma > 0 { -taus[i].clone() } else { taus[i].clone() };
        v[0] = v[0].add(&RatPoly::constant(shift));
        v
    };
    let mut out = Vec::new();
    for s1 in [1i8, -1] {
        for s2 in [1i8, -1] {
            let r = resultant_in_inner(&shifted(0, s1), &shifted(1, s2));
            if r.is_zero() {
                return Err(Error::Analysis(
                    "boundary curves share a one-dimensional component".into(),
                ));
            }
            out.extend(make_boundary(BoundarySource::Corner { sigma: [s1, s2] }, &r));
        }
    }
    for i in 0..2 {
        for sigma in [1i8, -1] {
            let f = shifted(i, sigma);
            let deg = inner_degree(&f);
            if deg >= 2 {
                let d = resultant_in_inner(&f, &inner_derivative(&f));
                if d.is_zero() {
                    return Err(Error::Analysis(
                        "a boundary curve is non-reduced in the second coordinate".into(),
                    ));
                }
                out.extend(make_boundary(BoundarySource::Critical { index: i, sigma }, &d));
            } else if deg == 0 {
                out.extend(make_boundary(BoundarySource::Critical { index: i, sigma }, &f[0]));
            }
        }
        let lc = inners[i].last().cloned().unwrap_or_else(RatPoly::zero);
        if lc.degree().unwrap_or(0) >= 1 {
            out.extend(make_boundary(BoundarySource::Degenerate { index: i }, &lc));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Difference between the two finest quadrature levels, summed over
    /// pieces; a usable (not rigorous) error size.
    pub error_estimate: f64,
    pub pieces: usize,
    pub breakpoints: Vec<f64>,
    /// The certified box, as f64 for reporting.
    pub bounds: Vec<f64>,
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

/// Real roots of an f64 polynomial inside `[lo, hi]`, by recursing on the
/// derivative for monotone pieces. Tangential (even-order) roots can be
/// missed; they separate intervals of zero length, which is harmless for
/// measuring.
fn poly_roots_f64(c: &[f64], lo: f64, hi: f64, out: &mut Vec<f64>) {
    let mut d = c.len();
    while d > 0 && c[d - 1] == 0.0 {
        d -= 1;
    }
    if d <= 1 {
        return;
    }
    if d == 2 {
        let r = -c[0] / c[1];
        if r >= lo && r <= hi {
            out.push(r);
        }
        return;
    }
    let deriv: Vec<f64> = c[..d]
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| k as f64 * ck)
        .collect();
    let mut crit = Vec::new();
    poly_roots_f64(&deriv, lo, hi, &mut crit);
    crit.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut pts = Vec::with_capacity(crit.len() + 2);
    pts.push(lo);
    pts.extend(crit);
    pts.push(hi);
    for win in pts.windows(2) {
        let (mut x0, mut x1) = (win[0], win[1]);
        if x1 <= x0 {
            continue;
        }
        let (mut f0, f1) = (horner(&c[..d], x0), horner(&c[..d], x1));
        if f0 == 0.0 {
            out.push(x0);
            continue;
        }
        if f0 * f1 > 0.0 {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (x0 + x1);
            if mid <= x0 || mid >= x1 {
                break;
            }
            let fm = horner(&c[..d], mid);
            if fm == 0.0 {
                x0 = mid;
                break;
            }
            if f0 * fm < 0.0 {
                x1 = mid;
            } else {
                x0 = mid;
                f0 = fm;
            }
        }
        out.push(0.5 * (x0 + x1));
    }
}

/// f64 coefficient table of one constraint: coefficients (as polynomials in
/// `a`) of the powers of `b`, plus the bound.
struct SliceConstraint {
    b_coeffs: Vec<Vec<f64>>,
    tau: f64,
}

fn slice_measure(constraints: &[SliceConstraint], a: f64, blim: f64) -> f64 {
    let at_a: Vec<(Vec<f64>, f64)> = constraints
        .iter()
        .map(|sc| {
            (sc.b_coeffs.iter().map(|c| horner(c, a)).collect::<Vec<f64>>(), sc.tau)
        })
        .collect();
    let mut cuts = vec![-blim, blim];
    for (poly, tau) in &at_a {
        for s in [*tau, -*tau] {
            let mut shifted = poly.clone();
            if shifted.is_empty() {
                shifted.push(0.0);
            }
            shifted[0] -= s;
            poly_roots_f64(&shifted, -blim, blim, &mut cuts);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut measure = 0.0;
    for win in cuts.windows(2) {
        let (x0, x1) = (win[0], win[1]);
        if x1 - x0 <= 0.0 {
            continue;
        }
        let mid = 0.5 * (x0 + x1);
        let inside = at_a.iter().all(|(poly, tau)| {
            let v = horner(poly, mid);
            v.abs() <= tau * (1.0 + 1e-12) + 1e-300
        });
        if inside {
            measure += x1 - x0;
        }
    }
    measure
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Integrates `g` over `[x0, x1]` with the endpoint-clustering substitution
/// `x = x0 + (x1 - x0) sin^2(pi t / 2)`, which regularizes square root
/// behavior at both ends.
fn integrate_piece(g: &dyn Fn(f64) -> f64, x0: f64, x1: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let len = x1 - x0;
    let mut acc = 0.0;
    for (u, w) in nodes.iter().zip(&weights) {
        let t = 0.5 * (u + 1.0);
        let s = 0.5 * (1.0 - (std::f64::consts::PI * t).cos());
        let x = x0 + len * s;
        let dxdt = len * 0.5 * std::f64::consts::PI * (std::f64::consts::PI * t).sin();
        acc += w * g(x) * dxdt * 0.5;
    }
    acc
}

/// Volume of the region at height bound `t` by slice integration.
///
/// `grid` scales the quadrature node budget; 2048 reproduces the default
/// density, larger values refine proportionally.
pub fn volume_slice(spec: &MorphismSpec, t: &BigRational, grid: u32) -> Result<VolumeEstimate> {
    if grid == 0 {
        return Err(Error::Analysis("quadrature grid must be positive".into()));
    }
    let m = spec.source.len();
    let taus = thresholds(spec, t)?;
    if m == 1 {
        // Homogeneous in one variable means each f_i is a monomial; the
        // region is the smallest of the exact intervals.
        let mut half = f64::INFINITY;
        for (f, tau) in spec.polynomials.iter().zip(&taus) {
            let (exps, c) = f.terms.iter().next().expect("nonzero polynomial");
            debug_assert_eq!(f.terms.len(), 1);
            let r = (rat_to_f64(tau) / rat_to_f64(&c.abs())).powf(1.0 / exps[0] as f64);
            half = half.min(r);
        }
        return Ok(VolumeEstimate {
            value: 2.0 * half,
            error_estimate: 0.0,
            pieces: 1,
            breakpoints: vec![-half, half],
            bounds: vec![half],
        });
    }
    if m != 2 {
        return Err(Error::Analysis(format!(
            "slice volume is implemented for one or two coordinates (got {m})"
        )));
    }

    let bounds = bounding_box(spec, t)?;
    let b1 = rat_to_f64(&bounds[0]);
    let b2 = rat_to_f64(&bounds[1]);
    let boundary = boundary_polynomials(spec, t)?;
    let mut cuts: Vec<f64> = vec![-b1, b1];
    for bp in &boundary {
        for bracket in isolate_real_roots(&bp.a_poly, &root_width()) {
            let r = bracket.midpoint_f64();
            if r > -b1 && r < b1 {
                cuts.push(r);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-11);

    let constraints: Vec<SliceConstraint> = spec
        .polynomials
        .iter()
        .zip(&taus)
        .map(|(f, tau)| {
            let b_coeffs = f
                .as_inner_poly()
                .iter()
                .map(|cpoly| cpoly.coeffs.iter().map(rat_to_f64).collect())
                .collect();
            SliceConstraint { b_coeffs, tau: rat_to_f64(tau) }
        })
        .collect();
    let blim = b2 + 1.0;
    let g = |a: f64| slice_measure(&constraints, a, blim);

    let total_len = 2.0 * b1;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut pieces = 0usize;
    for win in cuts.windows(2) {
        let (x0, x1) = (win[0], win[1]);
        if x1 - x0 < 1e-12 {
            continue;
        }
        pieces += 1;
        let scale = grid as f64 / 2048.0;
        let n = ((32.0 + 192.0 * (x1 - x0) / total_len) * scale).round().max(8.0) as usize;
        let coarse = integrate_piece(&g, x0, x1, n);
        let fine = integrate_piece(&g, x0, x1, 2 * n);
        value += fine;
        error += (fine - coarse).abs();
    }
    Ok(VolumeEstimate {
        value,
        error_estimate: error,
        pieces,
        breakpoints: cuts,
        bounds: bounds.iter().map(rat_to_f64).collect(),
    })
}

#[derive(Clone, Debug)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub hits: u64,
    pub samples: u64,
}

/// Seeded Monte Carlo volume over the certified box.
pub fn volume_monte_carlo(
    spec: &MorphismSpec,
    t: &BigRational,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::Analysis("need at least one sample".into()));
    }
    let taus = thresholds(spec, t)?;
    let bounds = bounding_box(spec, t)?;
    let b: Vec<f64> = bounds.iter().map(rat_to_f64).collect();
    let taus_f: Vec<f64> = taus.iter().map(rat_to_f64).collect();
    let polys: Vec<Vec<(f64, Vec<u32>)>> = spec
        .polynomials
        .iter()
        .map(|f| f.terms.iter().map(|(e, c)| (rat_to_f64(c), e.clone())).collect())
        .collect();
    let boxvol: f64 = b.iter().map(|bi| 2.0 * bi).product();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    let mut x = vec![0.0f64; b.len()];
    for _ in 0..samples {
        for (xi, bi) in x.iter_mut().zip(&b) {
            *xi = rng.random_range(-bi..*bi);
        }
        let inside = polys.iter().zip(&taus_f).all(|(terms, tau)| {
            let v: f64 = terms
                .iter()
                .map(|(c, exps)| {
                    c * exps
                        .iter()
                        .zip(&x)
                        .map(|(&e, xi)| xi.powi(e as i32))
                        .product::<f64>()
                })
                .sum();
            v.abs() <= *tau
        });
        if inside {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(MonteCarloEstimate {
        value: boxvol * p,
        std_error: boxvol * (p * (1.0 - p) / samples as f64).sqrt(),
        hits,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphism::parse_morphism;
    use num_traits::ToPrimitive;

    const X12: &str = r#"{
        "name": "x1_2", "source_weights": [2, 4], "target_weights": [4, 6],
        "polynomials": ["x1^2 - 2*x2", "3*x1*x2 - x1^3"]
    }"#;
    const X13: &str = r#"{
        "name": "x1_3", "source_weights": [1, 3], "target_weights": [4, 6],
        "polynomials": ["x1^4 - 4*x1*x2", "6*x1^3*x2 - x1^6 - 6*x2^2"]
    }"#;
    const ID24: &str = r#"{
        "name": "identity_p24", "source_weights": [2, 4], "target_weights": [2, 4],
        "polynomials": ["x1", "x2"]
    }"#;

    fn one() -> BigRational {
        BigRational::one()
    }

    #[test]
    fn identity_region_is_square() {
        let spec = parse_morphism(ID24).unwrap();
        let est = volume_slice(&spec, &one(), 2048).unwrap();
        assert!((est.value - 4.0).abs() < 1e-9, "vol = {}", est.value);
        assert!(est.breakpoints.iter().any(|r| (r - 1.0).abs() < 1e-9));
        assert!(est.breakpoints.iter().any(|r| (r + 1.0).abs() < 1e-9));
    }

    #[test]
    fn x12_volume_matches_closed_form() {
        // The slice endpoints are rational in a except for the corner at the
        // real root alpha of a^3 + 3a - 2; integrating the exact slice length
        // gives vol = (2/3)(2 + ln 2 + alpha - ln alpha).
        let spec = parse_morphism(X12).unwrap();
        let boundary = boundary_polynomials(&spec, &one()).unwrap();
        let corner = boundary
            .iter()
            .find(|bp| {
                bp.source == BoundarySource::Corner { sigma: [-1, 1] }
            })
            .expect("corner polynomial present");
        assert!(!corner.halved);
        let coeffs: Vec<i64> = corner.coeffs.iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(coeffs, vec![-2, 3, 0, 1]);
        assert_eq!(corner.real_roots.len(), 1);
        let alpha = corner.real_roots[0];
        assert!((alpha - 0.59607).abs() < 1e-4);

        let est = volume_slice(&spec, &one(), 2048).unwrap();
        let closed = (2.0 / 3.0) * (2.0 + 2f64.ln() + alpha - alpha.ln());
        assert!(
            (est.value - closed).abs() < 2e-6,
            "slice {} vs closed form {closed}",
            est.value
        );
        assert!(est.error_estimate < 1e-6);
    }

    #[test]
    fn x13_halved_corner_polynomial() {
        let spec = parse_morphism(X13).unwrap();
        let boundary = boundary_polynomials(&spec, &one()).unwrap();
        let corner = boundary
            .iter()
            .find(|bp| bp.source == BoundarySource::Corner { sigma: [-1, 1] })
            .expect("corner polynomial present");
        assert!(corner.halved);
        let coeffs: Vec<i64> = corner.coeffs.iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(coeffs, vec![-3, -8, 6, 0, 1]);
        let mut roots = corner.real_roots.clone();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(roots.len(), 2);
        assert!((roots[0] + 0.3044).abs() < 1e-3, "roots = {roots:?}");
        assert!((roots[1] - 1.3240).abs() < 1e-3, "roots = {roots:?}");
    }

    #[test]
    fn monte_carlo_agrees_with_slices() {
        for src in [X12, X13] {
            let spec = parse_morphism(src).unwrap();
            let est = volume_slice(&spec, &one(), 2048).unwrap();
            let mc = volume_monte_carlo(&spec, &one(), 200_000, 7).unwrap();
            assert!(
                (est.value - mc.value).abs() < 5.0 * mc.std_error + 1e-3,
                "{}: slice {} vs mc {} +- {}",
                spec.name,
                est.value,
                mc.value,
                mc.std_error
            );
        }
    }

    #[test]
    fn scaling_law_in_the_height_bound() {
        let spec = parse_morphism(X12).unwrap();
        let v1 = volume_slice(&spec, &one(), 2048).unwrap().value;
        let t = BigRational::from(BigInt::from(2));
        let v2 = volume_slice(&spec, &t, 2048).unwrap().value;
        // vol(t) = t^{|w|} vol(1); the quadrature grids scale along, so the
        // ratio holds to near machine precision.
        assert!((v2 / v1 - 64.0).abs() < 1e-8, "ratio = {}", v2 / v1);
    }

    #[test]
    fn bounding_box_is_certified_and_reasonable() {
        let spec = parse_morphism(X12).unwrap();
        let b = bounding_box(&spec, &one()).unwrap();
        // The region touches (2, 3/2), so the box must be strictly beyond 2
        // in the first coordinate and beyond 3/2 in the second.
        assert!(b[0] > BigRational::from(BigInt::from(2)));
        assert!(b[1] > BigRational::new(BigInt::from(3), BigInt::from(2)));
        // And it should not balloon: the seed times at most (3/2)^7.
        assert!(b[0] < BigRational::from(BigInt::from(40)));
    }

    #[test]
    fn rejects_nonpositive_height_bound() {
        let spec = parse_morphism(X12).unwrap();
        assert!(volume_slice(&spec, &BigRational::zero(), 2048).is_err());
    }
}
