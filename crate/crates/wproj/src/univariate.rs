//! Exact univariate polynomials over `Q`: arithmetic, gcd, resultants, Sturm
//! root isolation, and admissible-interval extraction.
//!
//! Everything here is exact rational arithmetic; callers convert to f64 only at
//! the very end (volume breakpoints) or never (enumeration ranges). Degrees in
//! this crate are small, so clarity beats asymptotic cleverness throughout.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense polynomial, coefficients ascending, no trailing zeros (zero poly = empty).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoly {
    pub coeffs: Vec<BigRational>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn zero() -> Self {
        RatPoly { coeffs: vec![] }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_int(&self, x: &BigInt) -> BigRational {
        self.eval(&BigRational::from(x.clone()))
    }

    pub fn derivative(&self) -> RatPoly {
        if self.coeffs.len() <= 1 {
            return RatPoly::zero();
        }
        RatPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from(BigInt::from(i)))
                .collect(),
        )
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![BigRational::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        RatPoly::new(out)
    }

    pub fn neg(&self) -> RatPoly {
        RatPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RatPoly::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Euclidean division: `self = q * div + r` with `deg r < deg div`.
    pub fn div_rem(&self, div: &RatPoly) -> (RatPoly, RatPoly) {
        assert!(!div.is_zero(), "division by zero polynomial");
        let dd = div.degree().unwrap();
        let lead = div.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (RatPoly::zero(), self.clone());
        }
        let mut q = vec![BigRational::zero(); rem.len() - dd];
        while rem.len() > dd && !rem.is_empty() {
            let c = rem.last().unwrap() / &lead;
            if c.is_zero() {
                rem.pop();
                continue;
            }
            let shift = rem.len() - 1 - dd;
            q[shift] = c.clone();
            for (i, dc) in div.coeffs.iter().enumerate() {
                let idx = shift + i;
                let sub = dc * &c;
                rem[idx] -= sub;
            }
            // Leading term cancels by construction.
            debug_assert!(rem.last().unwrap().is_zero());
            rem.pop();
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
        }
        (RatPoly::new(q), RatPoly { coeffs: rem })
    }

    /// Monic gcd; gcd(0, 0) = 0.
    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        match a.leading() {
            Some(l) if !l.is_one() => {
                let inv = BigRational::one() / l;
                a.scale(&inv)
            }
            _ => a,
        }
    }

    /// Squarefree part `self / gcd(self, self')`, monic.
    pub fn squarefree(&self) -> RatPoly {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            return self.clone();
        }
        let (q, r) = self.div_rem(&g);
        debug_assert!(r.is_zero());
        q
    }

    /// Clears denominators and integer content; returns the primitive integer
    /// polynomial with positive leading coefficient.
    pub fn primitive_integer(&self) -> Vec<BigInt> {
        if self.is_zero() {
            return vec![];
        }
        let mut den = BigInt::one();
        for c in &self.coeffs {
            den = den.lcm(c.denom());
        }
        let ints: Vec<BigInt> =
            self.coeffs.iter().map(|c| (c * BigRational::from(den.clone())).to_integer()).collect();
        let mut content = BigInt::zero();
        for c in &ints {
            content = content.gcd(c);
        }
        let sign = if ints.last().unwrap().is_negative() { -content } else { content };
        ints.iter().map(|c| c / &sign).collect()
    }

    /// Resultant via the subresultant-flavored Euclidean recurrence.
    pub fn resultant(&self, other: &RatPoly) -> BigRational {
        fn go(f: &RatPoly, g: &RatPoly) -> BigRational {
            let df = f.degree().expect("nonzero");
            match g.degree() {
                None => BigRational::zero(),
                Some(0) => num_traits::pow::Pow::pow(g.coeffs[0].clone(), BigInt::from(df)),
                Some(dg) => {
                    let (_, r) = f.div_rem(g);
                    if r.is_zero() {
                        return BigRational::zero();
                    }
                    let dr = r.degree().unwrap();
                    let sign = if (df * dg) % 2 == 1 {
                        -BigRational::one()
                    } else {
                        BigRational::one()
                    };
                    let lc = num_traits::pow::Pow::pow(
                        g.leading().unwrap().clone(),
                        BigInt::from(df as i64 - dr as i64),
                    );
                    sign * lc * go(g, &r)
                }
            }
        }
        if self.is_zero() || other.is_zero() {
            return BigRational::zero();
        }
        if self.degree() == Some(0) {
            return num_traits::pow::Pow::pow(
                self.coeffs[0].clone(),
                BigInt::from(other.degree().unwrap()),
            );
        }
        go(self, other)
    }
}

/// Determinant of a square matrix with entries in `Q[a]`, by Laplace expansion
/// with a bitmask memo over column subsets. Sizes here are Sylvester matrices
/// of the inner-variable degrees, i.e. small.
fn poly_matrix_det(m: &[Vec<RatPoly>]) -> RatPoly {
    let n = m.len();
    assert!(n <= 20, "Sylvester matrix unexpectedly large");
    let mut memo: std::collections::HashMap<u32, RatPoly> = std::collections::HashMap::new();
    fn go(
        m: &[Vec<RatPoly>],
        row: usize,
        mask: u32,
        memo: &mut std::collections::HashMap<u32, RatPoly>,
    ) -> RatPoly {
        let n = m.len();
        if row == n {
            return RatPoly::constant(BigRational::one());
        }
        if let Some(hit) = memo.get(&mask) {
            return hit.clone();
        }
        let mut acc = RatPoly::zero();
        let mut parity = 0u32;
        for col in 0..n {
            if mask & (1 << col) != 0 {
                continue;
            }
            if !m[row][col].is_zero() {
                let sub = go(m, row + 1, mask | (1 << col), memo);
                let term = m[row][col].mul(&sub);
                acc = if parity % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            parity += 1;
        }
        memo.insert(mask, acc.clone());
        acc
    }
    go(m, 0, 0, &mut memo)
}

/// Resultant in the inner variable of two bivariate polynomials presented as
/// polys in `b` whose coefficients are polys in `a`. Returns an element of `Q[a]`.
pub fn resultant_in_inner(f: &[RatPoly], g: &[RatPoly]) -> RatPoly {
    // Trim leading (highest-b) zero coefficient polys.
    let trim = |v: &[RatPoly]| {
        let mut v = v.to_vec();
        while v.last().is_some_and(|c| c.is_zero()) {
            v.pop();
        }
        v
    };
    let f = trim(f);
    let g = trim(g);
    assert!(!f.is_empty() && !g.is_empty(), "resultant of zero polynomial");
    let (df, dg) = (f.len() - 1, g.len() - 1);
    if df == 0 {
        return num_traits::pow::Pow::pow(&f[0], dg).clone();
    }
    if dg == 0 {
        return num_traits::pow::Pow::pow(&g[0], df).clone();
    }
    let n = df + dg;
    let mut m = vec![vec![RatPoly::zero(); n]; n];
    for i in 0..dg {
        for (j, c) in f.iter().enumerate() {
            m[i][i + (df - j)] = c.clone();
        }
    }
    for i in 0..df {
        for (j, c) in g.iter().enumerate() {
            m[dg + i][i + (dg - j)] = c.clone();
        }
    }
    poly_matrix_det(&m)
}

impl num_traits::pow::Pow<usize> for &RatPoly {
    type Output = RatPoly;
    fn pow(self, k: usize) -> RatPoly {
        let mut out = RatPoly::constant(BigRational::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }
}

/// One isolated real root: an exact rational bracket with `lo <= root <= hi`.
/// `lo == hi` marks an exact rational root.
#[derive(Clone, Debug)]
pub struct RootBracket {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RootBracket {
    pub fn midpoint_f64(&self) -> f64 {
        let mid = (&self.lo + &self.hi) / BigRational::from(BigInt::from(2));
        rat_to_f64(&mid)
    }
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // Out of f64 range only for astronomically sized inputs; saturate.
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

fn sturm_chain(p: &RatPoly) -> Vec<RatPoly> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        if chain[n - 1].is_zero() {
            chain.pop();
            return chain;
        }
        let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
        if r.is_zero() {
            return chain;
        }
        chain.push(r.neg());
    }
}

fn sign_variations(chain: &[RatPoly], x: &BigRational) -> usize {
    let mut vars = 0;
    let mut last = 0i8;
    for p in chain {
        let v = p.eval(x);
        let s = if v.is_zero() {
            0
        } else if v.is_negative() {
            -1
        } else {
            1
        };
        if s != 0 {
            if last != 0 && s != last {
                vars += 1;
            }
            last = s;
        }
    }
    vars
}

/// Roots in the open interval `(a, b)`; requires `p(a) != 0 != p(b)`.
fn count_roots(chain: &[RatPoly], a: &BigRational, b: &BigRational) -> usize {
    sign_variations(chain, a) - sign_variations(chain, b)
}

/// `B` with all real roots of `p` strictly inside `(-B, B)` (Cauchy bound + 1).
pub fn root_bound(p: &RatPoly) -> BigRational {
    let lead = p.leading().expect("nonzero").abs();
    let mut max = BigRational::zero();
    for c in &p.coeffs[..p.coeffs.len() - 1] {
        let q = c.abs() / &lead;
        if q > max {
            max = q;
        }
    }
    max + BigRational::from(BigInt::from(2))
}

/// All real roots of `p` (nonzero), each refined to a bracket of width `< width`,
/// ascending and disjoint.
pub fn isolate_real_roots(p: &RatPoly, width: &BigRational) -> Vec<RootBracket> {
    assert!(!p.is_zero());
    if p.degree() == Some(0) {
        return vec![];
    }
    let sf = p.squarefree();
    let chain = sturm_chain(&sf);
    let bound = root_bound(&sf);
    let mut out = Vec::new();
    // Worklist of (a, b) with p(a), p(b) != 0; split until each holds one root.
    let mut work = vec![(-bound.clone(), bound.clone())];
    while let Some((a, b)) = work.pop() {
        let n = count_roots(&chain, &a, &b);
        if n == 0 {
            continue;
        }
        if n == 1 {
            out.push(refine_bracket(&sf, a, b, width));
            continue;
        }
        let two = BigRational::from(BigInt::from(2));
        let mid = (&a + &b) / &two;
        if sf.eval(&mid).is_zero() {
            // Exact rational root at the midpoint; carve out a root-free collar
            // whose endpoints avoid the finitely many other roots.
            let mut eps = (&b - &a) / BigRational::from(BigInt::from(16));
            loop {
                let (lo, hi) = (&mid - &eps, &mid + &eps);
                if !sf.eval(&lo).is_zero()
                    && !sf.eval(&hi).is_zero()
                    && count_roots(&chain, &lo, &hi) == 1
                {
                    out.push(RootBracket { lo: mid.clone(), hi: mid.clone() });
                    work.push((a.clone(), lo));
                    work.push((hi, b.clone()));
                    break;
                }
                eps /= &two;
            }
            continue;
        }
        work.push((a, mid.clone()));
        work.push((mid, b));
    }
    out.sort_by(|x, y| x.lo.cmp(&y.lo));
    out
}

fn refine_bracket(sf: &RatPoly, mut a: BigRational, mut b: BigRational, width: &BigRational) -> RootBracket {
    // Invariant: exactly one root in (a, b), p(a) != 0 != p(b).
    let two = BigRational::from(BigInt::from(2));
    let sa = sf.eval(&a).is_negative();
    loop {
        if &(&b - &a) < width {
            return RootBracket { lo: a, hi: b };
        }
        let mid = (&a + &b) / &two;
        let vm = sf.eval(&mid);
        if vm.is_zero() {
            return RootBracket { lo: mid.clone(), hi: mid };
        }
        // Sign test works because the bracket holds a single simple root of sf.
        if vm.is_negative() == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
}

/// Sound integer cover of `{ x in [window_lo, window_hi] : |g(x)| <= m }`:
/// every integer satisfying the condition lies in some returned inclusive
/// range; ranges are disjoint, ascending, and may include a few integers that
/// fail the exact test (callers re-check each candidate).
pub fn admissible_integer_ranges(
    g: &RatPoly,
    m: &BigRational,
    window_lo: &BigInt,
    window_hi: &BigInt,
) -> Vec<(BigInt, BigInt)> {
    assert!(!m.is_negative());
    if window_lo > window_hi {
        return vec![];
    }
    let deg = match g.degree() {
        None => 0,
        Some(d) => d,
    };
    if deg == 0 {
        let c = g.coeffs.first().cloned().unwrap_or_else(BigRational::zero);
        return if c.abs() <= *m {
            vec![(window_lo.clone(), window_hi.clone())]
        } else {
            vec![]
        };
    }
    // Boundary points of {|g| <= m} are roots of (g - m)(g + m).
    let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
    let mut cuts: Vec<RootBracket> = Vec::new();
    for shifted in [g.sub(&RatPoly::constant(m.clone())), g.add(&RatPoly::constant(m.clone()))] {
        if !shifted.is_zero() {
            cuts.extend(isolate_real_roots(&shifted, &quarter));
        }
    }
    let wl = BigRational::from(window_lo.clone());
    let wh = BigRational::from(window_hi.clone());
    // Only cut zones touching the window delimit in-window pieces.
    cuts.retain(|c| c.hi >= wl && c.lo <= wh);
    cuts.sort_by(|x, y| x.lo.cmp(&y.lo));
    if cuts.is_empty() {
        // Condition is constant on the whole window.
        return if g.eval(&wl).abs() <= *m {
            vec![(window_lo.clone(), window_hi.clone())]
        } else {
            vec![]
        };
    }
    // Sample points: window edges plus midpoints between consecutive cut zones.
    // After clipping, every piece intersecting the window holds one sample.
    let mut samples: Vec<BigRational> = vec![wl.clone()];
    for w in cuts.windows(2) {
        samples.push((&w[0].hi + &w[1].lo) / BigRational::from(BigInt::from(2)));
    }
    samples.push(wh.clone());
    // A piece is admissible iff its sample satisfies the condition; extend to
    // the cut zones' outer edges so no integer can slip between pieces.
    let mut ranges: Vec<(BigInt, BigInt)> = Vec::new();
    let push = |ranges: &mut Vec<(BigInt, BigInt)>, lo: BigRational, hi: BigRational| {
        let lo = lo.floor().to_integer().max(window_lo.clone());
        let hi = hi.ceil().to_integer().min(window_hi.clone());
        if lo <= hi {
            ranges.push((lo, hi));
        }
    };
    for (i, s) in samples.iter().enumerate() {
        if g.eval(s).abs() <= *m {
            let lo = if i == 0 { wl.clone() } else { cuts[i - 1].lo.clone() };
            let hi = if i == samples.len() - 1 { wh.clone() } else { cuts[i].hi.clone() };
            push(&mut ranges, lo, hi);
        }
    }
    // Cut zones themselves may contain admissible integers (roots of g -+ m
    // are the boundary of the admissible set, and zones overcover the roots).
    for c in &cuts {
        push(&mut ranges, c.lo.clone(), c.hi.clone());
    }
    ranges.sort();
    let mut merged: Vec<(BigInt, BigInt)> = Vec::new();
    for (lo, hi) in ranges {
        if let Some(last) = merged.last_mut() {
            if lo <= &last.1 + BigInt::one() {
                if hi > last.1 {
                    last.1 = hi;
                }
                continue;
            }
        }
        merged.push((lo, hi));
    }
    merged
}
