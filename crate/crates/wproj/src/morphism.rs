//! Morphisms of weighted projective spaces: parsing, degree checking, and the
//! no-common-zero validation.
//!
//! A morphism `phi: P(w) -> P(u)` is a list of polynomials `f_1, ..., f_n`
//! (one per target coordinate) in the source variables `x1, ..., xm`, each
//! `w`-weighted-homogeneous with `deg_w(f_i) = e * u_i` for one common
//! integer `e >= 1`, such that the `f_i` have no common zero away from the
//! origin over the algebraic closure. For two source variables that condition
//! is decided exactly: the dehomogenizations `f_i(1, t)` share no root iff
//! their gcd is constant, and likewise for `f_i(s, 1)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Deserialize;
use std::collections::BTreeMap;

use crate::univariate::{isolate_real_roots, RatPoly};
use crate::weighted_space::WeightVector;
use crate::{Error, Result};

/// Sparse polynomial in `m` variables: exponent tuple -> nonzero coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedPolynomial {
    pub vars: usize,
    pub terms: BTreeMap<Vec<u32>, BigRational>,
}

impl WeightedPolynomial {
    pub fn new(vars: usize, mut terms: BTreeMap<Vec<u32>, BigRational>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        debug_assert!(terms.keys().all(|e| e.len() == vars));
        WeightedPolynomial { vars, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn evaluate(&self, x: &[BigRational]) -> BigRational {
        assert_eq!(x.len(), self.vars);
        let mut acc = BigRational::zero();
        for (exps, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(exps) {
                for _ in 0..e {
                    t *= xi;
                }
            }
            acc += t;
        }
        acc
    }

    pub fn evaluate_int(&self, x: &[BigInt]) -> BigRational {
        let xs: Vec<BigRational> = x.iter().map(|c| BigRational::from(c.clone())).collect();
        self.evaluate(&xs)
    }

    /// Weighted degree if homogeneous, else an error naming the two degrees.
    pub fn weighted_degree(&self, w: &WeightVector) -> Result<u64> {
        assert_eq!(w.len(), self.vars);
        let mut deg: Option<u64> = None;
        for exps in self.terms.keys() {
            let d: u64 = exps.iter().zip(&w.0).map(|(&e, &wi)| e as u64 * wi as u64).sum();
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 != d => {
                    return Err(Error::InvalidMorphism(format!(
                        "not weighted-homogeneous: monomials of weighted degree {d0} and {d}"
                    )))
                }
                _ => {}
            }
        }
        deg.ok_or_else(|| Error::InvalidMorphism("zero polynomial has no degree".into()))
    }

    /// Two-variable only: `f(1, t)` as a univariate polynomial in `t`.
    /// For nonzero homogeneous `f` the result is nonzero (the `x2`-exponent
    /// determines the monomial, so nothing cancels).
    pub fn dehomogenize_first(&self) -> RatPoly {
        assert_eq!(self.vars, 2);
        let deg = self.terms.keys().map(|e| e[1]).max().unwrap_or(0) as usize;
        let mut coeffs = vec![BigRational::zero(); deg + 1];
        for (exps, c) in &self.terms {
            coeffs[exps[1] as usize] += c;
        }
        RatPoly::new(coeffs)
    }

    /// Two-variable only: `f(s, 1)` as a univariate polynomial in `s`.
    pub fn dehomogenize_second(&self) -> RatPoly {
        assert_eq!(self.vars, 2);
        let deg = self.terms.keys().map(|e| e[0]).max().unwrap_or(0) as usize;
        let mut coeffs = vec![BigRational::zero(); deg + 1];
        for (exps, c) in &self.terms {
            coeffs[exps[0] as usize] += c;
        }
        RatPoly::new(coeffs)
    }

    /// Two-variable only: substitute `x1 = a`, leaving a polynomial in `x2`.
    pub fn specialize_first(&self, a: &BigRational) -> RatPoly {
        assert_eq!(self.vars, 2);
        let deg = self.terms.keys().map(|e| e[1]).max().unwrap_or(0) as usize;
        let mut coeffs = vec![BigRational::zero(); deg + 1];
        for (exps, c) in &self.terms {
            let mut t = c.clone();
            for _ in 0..exps[0] {
                t *= a;
            }
            coeffs[exps[1] as usize] += t;
        }
        RatPoly::new(coeffs)
    }

    /// Coefficients as a polynomial in `x2` over `Q[x1]` (index = `x2` power).
    pub fn as_inner_poly(&self) -> Vec<RatPoly> {
        assert_eq!(self.vars, 2);
        let deg = self.terms.keys().map(|e| e[1]).max().unwrap_or(0) as usize;
        let mut out = vec![RatPoly::zero(); deg + 1];
        for (exps, c) in &self.terms {
            let da = exps[0] as usize;
            let mut coeffs = vec![BigRational::zero(); da + 1];
            coeffs[da] = c.clone();
            out[exps[1] as usize] = out[exps[1] as usize].add(&RatPoly::new(coeffs));
        }
        out
    }
}

/// A validated morphism `phi: P(w) -> P(u)`.
#[derive(Clone, Debug)]
pub struct MorphismSpec {
    pub name: String,
    pub source: WeightVector,
    pub target: WeightVector,
    pub polynomials: Vec<WeightedPolynomial>,
    /// Common ratio `deg_w(f_i) / u_i`, a positive integer.
    pub e: u32,
}

impl MorphismSpec {
    pub fn evaluate(&self, x: &[BigRational]) -> Vec<BigRational> {
        self.polynomials.iter().map(|f| f.evaluate(x)).collect()
    }

    pub fn evaluate_int(&self, x: &[BigInt]) -> Vec<BigRational> {
        self.polynomials.iter().map(|f| f.evaluate_int(x)).collect()
    }
}

#[derive(Deserialize)]
struct MorphismFile {
    name: String,
    source_weights: Vec<u32>,
    target_weights: Vec<u32>,
    polynomials: Vec<String>,
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
}

/// Parses and fully validates a morphism from its JSON description.
pub fn parse_morphism(json: &str) -> Result<MorphismSpec> {
    let file: MorphismFile = serde_json::from_str(json)
        .map_err(|e| Error::InvalidMorphism(format!("bad morphism JSON: {e}")))?;
    let source = WeightVector::new(file.source_weights)?;
    let target = WeightVector::new(file.target_weights)?;
    if file.polynomials.len() != target.len() {
        return Err(Error::InvalidMorphism(format!(
            "{} polynomials for {} target coordinates",
            file.polynomials.len(),
            target.len()
        )));
    }
    let mut polys = Vec::with_capacity(file.polynomials.len());
    for (i, s) in file.polynomials.iter().enumerate() {
        let f = parse_polynomial(s, source.len())
            .map_err(|e| match e {
                Error::InvalidMorphism(m) => Error::InvalidMorphism(format!("f_{}: {m}", i + 1)),
                other => other,
            })?;
        if f.is_zero() {
            return Err(Error::InvalidMorphism(format!("f_{} is the zero polynomial", i + 1)));
        }
        polys.push(f);
    }
    // Degree bookkeeping: deg_w(f_i) = e * u_i for one common integer e >= 1.
    let mut e: Option<u64> = None;
    for (i, (f, &u)) in polys.iter().zip(&target.0).enumerate() {
        let d = f.weighted_degree(&source).map_err(|err| match err {
            Error::InvalidMorphism(m) => Error::InvalidMorphism(format!("f_{}: {m}", i + 1)),
            other => other,
        })?;
        if d == 0 {
            return Err(Error::InvalidMorphism(format!(
                "f_{} is constant (weighted degree 0), so e would be 0; morphisms need e >= 1",
                i + 1
            )));
        }
        if d % u as u64 != 0 {
            return Err(Error::InvalidMorphism(format!(
                "deg_w(f_{}) = {d} is not a multiple of target weight u_{} = {u}",
                i + 1,
                i + 1
            )));
        }
        let ei = d / u as u64;
        match e {
            None => e = Some(ei),
            Some(e0) if e0 != ei => {
                return Err(Error::InvalidMorphism(format!(
                    "inconsistent degrees: f_1 gives e = {e0} but f_{} gives e = {ei}",
                    i + 1
                )))
            }
            _ => {}
        }
    }
    let spec = MorphismSpec {
        name: file.name,
        source,
        target,
        polynomials: polys,
        e: e.expect("at least one polynomial") as u32,
    };
    validate_no_common_zero(&spec)?;
    Ok(spec)
}

pub fn parse_morphism_file(path: &std::path::Path) -> Result<MorphismSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_morphism(&text)
}

/// Checks the common-zero condition exactly for two source variables; more
/// variables would need elimination machinery this crate does not carry.
pub fn validate_no_common_zero(spec: &MorphismSpec) -> Result<()> {
    if spec.source.len() != 2 {
        return Err(Error::InvalidMorphism(format!(
            "validation supports exactly 2 source variables, got {}",
            spec.source.len()
        )));
    }
    for (label, dehom) in [
        ("f_i(1, t)", spec.polynomials.iter().map(|f| f.dehomogenize_first()).collect::<Vec<_>>()),
        ("f_i(s, 1)", spec.polynomials.iter().map(|f| f.dehomogenize_second()).collect::<Vec<_>>()),
    ] {
        let mut g = dehom[0].clone();
        for fi in &dehom[1..] {
            g = g.gcd(fi);
        }
        if g.degree().unwrap_or(0) > 0 {
            return Err(Error::InvalidMorphism(common_zero_message(label, &g)));
        }
    }
    Ok(())
}

fn common_zero_message(label: &str, g: &RatPoly) -> String {
    let ints = g.primitive_integer();
    let pretty: Vec<String> = ints.iter().enumerate().map(|(i, c)| format!("{c}*t^{i}")).collect();
    let witness = {
        let width = BigRational::new(BigInt::from(1), BigInt::from(1_000_000_000));
        let roots = isolate_real_roots(g, &width);
        match roots.first() {
            Some(r) => format!("t0 ~ {:.9}", r.midpoint_f64()),
            None => "a complex root t0 of the factor".to_string(),
        }
    };
    format!(
        "common zero off the origin: the dehomogenizations {label} share the factor [{}] \
         (coefficients ascending); {witness} gives a witness common zero",
        pretty.join(" + ")
    )
}

/// Polynomial string parser. Grammar, whitespace-insensitive:
///   expr   = ['+'|'-'] term (('+'|'-') term)*
///   term   = factor ('*' factor)*        (juxtaposition also accepted)
///   factor = rational | var ('^' uint)?
///   rational = uint ('/' uint)?
///   var    = 'x' uint                     (1-based variable index)
pub fn parse_polynomial(input: &str, vars: usize) -> Result<WeightedPolynomial> {
    let bad = |msg: &str| Error::InvalidMorphism(format!("cannot parse {input:?}: {msg}"));
    let bytes: Vec<char> = input.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0usize;
    let mut terms: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();

    fn read_uint(bytes: &[char], pos: &mut usize) -> Option<u64> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        if *pos == start {
            return None;
        }
        bytes[start..*pos].iter().collect::<String>().parse().ok()
    }

    while pos < bytes.len() {
        // Sign prefix.
        let mut sign = BigRational::one();
        while pos < bytes.len() && (bytes[pos] == '+' || bytes[pos] == '-') {
            if bytes[pos] == '-' {
                sign = -sign;
            }
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(bad("dangling sign"));
        }
        // One term: product of factors.
        let mut coeff = sign;
        let mut exps = vec![0u32; vars];
        let mut saw_factor = false;
        loop {
            if pos < bytes.len() && bytes[pos] == '*' {
                if !saw_factor {
                    return Err(bad("'*' with no left factor"));
                }
                pos += 1;
            }
            if pos >= bytes.len() || bytes[pos] == '+' || bytes[pos] == '-' {
                break;
            }
            if bytes[pos].is_ascii_digit() {
                let n = read_uint(&bytes, &mut pos).ok_or_else(|| bad("bad number"))?;
                let mut r = BigRational::from(BigInt::from(n));
                if pos < bytes.len() && bytes[pos] == '/' {
                    pos += 1;
                    let d = read_uint(&bytes, &mut pos).ok_or_else(|| bad("bad denominator"))?;
                    if d == 0 {
                        return Err(bad("zero denominator"));
                    }
                    r /= BigRational::from(BigInt::from(d));
                }
                coeff *= r;
                saw_factor = true;
                continue;
            }
            if bytes[pos] == 'x' {
                pos += 1;
                let idx = read_uint(&bytes, &mut pos).ok_or_else(|| bad("variable needs an index"))?;
                if idx == 0 || idx as usize > vars {
                    return Err(bad(&format!("variable x{idx} out of range (1..={vars})")));
                }
                let mut exp = 1u64;
                if pos < bytes.len() && bytes[pos] == '^' {
                    pos += 1;
                    exp = read_uint(&bytes, &mut pos).ok_or_else(|| bad("bad exponent"))?;
                }
                exps[idx as usize - 1] = exps[idx as usize - 1]
                    .checked_add(u32::try_from(exp).map_err(|_| bad("exponent too large"))?)
                    .ok_or_else(|| bad("exponent too large"))?;
                saw_factor = true;
                continue;
            }
            return Err(bad(&format!("unexpected character {:?}", bytes[pos])));
        }
        if !saw_factor {
            return Err(bad("empty term"));
        }
        *terms.entry(exps).or_insert_with(BigRational::zero) += coeff;
    }
    if terms.is_empty() {
        return Err(bad("empty polynomial"));
    }
    Ok(WeightedPolynomial::new(vars, terms))
}
