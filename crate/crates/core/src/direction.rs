//! Direction functions `p(x)`: the probability that the next jump from `x`
//! goes left, toward 0.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, domain, Error, Result};

const GRID_CHECK_POINTS: usize = 10_000;
const GRID_SLACK: f64 = 1e-12;

/// A polynomial direction function stored by its monomial coefficients at 0,
/// `p(x) = Σ pₙ xⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolynomial", into = "RawPolynomial")]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolynomial {
    coefficients: Vec<f64>,
}

impl TryFrom<RawPolynomial> for Polynomial {
    type Error = Error;
    fn try_from(raw: RawPolynomial) -> Result<Self> {
        Polynomial::new(raw.coefficients)
    }
}

impl From<Polynomial> for RawPolynomial {
    fn from(p: Polynomial) -> Self {
        RawPolynomial {
            coefficients: p.coefficients,
        }
    }
}

impl Polynomial {
    /// Builds `p(x) = Σ coefficients[n] xⁿ`; rejects polynomials leaving [0, 1]
    /// on a dense grid of the unit interval.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return domain("polynomial needs at least one coefficient");
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return domain("polynomial coefficients must be finite");
        }
        let poly = Self { coefficients };
        for i in 0..=GRID_CHECK_POINTS {
            let x = i as f64 / GRID_CHECK_POINTS as f64;
            let v = poly.value(x);
            if !(-GRID_SLACK..=1.0 + GRID_SLACK).contains(&v) {
                return domain(format!("polynomial direction function leaves [0, 1]: p({x}) = {v}"));
            }
        }
        Ok(poly)
    }

    /// Coefficients `pₙ` of the expansion at 0.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    fn value(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Coefficients `qₙ` of the expansion at 1, `p(x) = Σ qₙ (x-1)ⁿ`.
    ///
    /// Every finite `f64` is a dyadic rational, so the binomial re-expansion
    /// `qₙ = Σ_{m≥n} C(m,n) pₘ` is carried out exactly and rounded once.
    pub fn coefficients_at_one(&self) -> Vec<f64> {
        let p: Vec<BigRational> = self
            .coefficients
            .iter()
            .map(|&c| BigRational::from_float(c).expect("coefficients are finite"))
            .collect();
        let k = p.len();
        (0..k)
            .map(|n| {
                let mut acc = BigRational::zero();
                let mut binom = BigInt::from(1u32); // C(m, n) starting at m = n
                for (m, pm) in p.iter().enumerate().skip(n) {
                    if m > n {
                        binom = binom * BigInt::from(m) / BigInt::from(m - n);
                    }
                    acc += pm * BigRational::from_integer(binom.clone());
                }
                acc.to_f64().unwrap_or(f64::NAN)
            })
            .collect()
    }
}

/// A step function with levels `p_i` on `[s_{i-1}, s_i)` and `p(1) = p_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPiecewise", into = "RawPiecewise")]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPiecewise {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl TryFrom<RawPiecewise> for PiecewiseConstant {
    type Error = Error;
    fn try_from(raw: RawPiecewise) -> Result<Self> {
        PiecewiseConstant::new(raw.breakpoints, raw.levels)
    }
}

impl From<PiecewiseConstant> for RawPiecewise {
    fn from(p: PiecewiseConstant) -> Self {
        RawPiecewise {
            breakpoints: p.breakpoints,
            levels: p.levels,
        }
    }
}

impl PiecewiseConstant {
    /// `breakpoints` is the full partition `0 = s₀ < s₁ < … < s_k = 1`.
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || breakpoints.len() != levels.len() + 1 {
            return domain(format!(
                "piecewise constant needs k levels and k+1 breakpoints, got {} and {}",
                levels.len(),
                breakpoints.len()
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return domain("breakpoints must start at 0 and end at 1");
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return domain("breakpoints must be strictly increasing");
        }
        for &l in &levels {
            check_unit("level", l)?;
        }
        Ok(Self { breakpoints, levels })
    }

    /// Interior breakpoints `s₁ … s_{k-1}` only.
    pub fn with_interior(interior: &[f64], levels: Vec<f64>) -> Result<Self> {
        let mut b = Vec::with_capacity(interior.len() + 2);
        b.push(0.0);
        b.extend_from_slice(interior);
        b.push(1.0);
        Self::new(b, levels)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn pieces(&self) -> usize {
        self.levels.len()
    }

    /// Index of the piece `[s_{i-1}, s_i)` containing `x`; `x = 1` maps to the last piece.
    pub fn piece_index(&self, x: f64) -> usize {
        let k = self.levels.len();
        // first breakpoint strictly greater than x, among s_1..s_{k-1}
        let idx = self.breakpoints[1..k].partition_point(|&s| s <= x);
        idx.min(k - 1)
    }

    fn value(&self, x: f64) -> f64 {
        self.levels[self.piece_index(x)]
    }

    fn left_limit(&self, x: f64) -> f64 {
        let k = self.levels.len();
        let idx = self.breakpoints[1..k].partition_point(|&s| s < x);
        self.levels[idx.min(k - 1)]
    }
}

/// The probability-of-left-jump function `p(x)` on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DirectionFunction {
    /// `p(x) = p`.
    Constant { p: f64 },
    /// `p(x) = c x + (1 - b)(1 - x)`, with `b, c ∈ (0, 1]`.
    Linear { b: f64, c: f64 },
    Polynomial(Polynomial),
    PiecewiseConstant(PiecewiseConstant),
    /// `p(x) = 1{x > threshold}`.
    Indicator { threshold: f64 },
    /// `p(x) = 1 - v + (2v - 1) 1{x < pivot}`: always drift toward the pivot
    /// with probability `1 - v`.
    SearchForm { v: f64, pivot: f64 },
}

/// One constant level of a step-type direction function on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl DirectionFunction {
    pub fn constant(p: f64) -> Result<Self> {
        let f = Self::Constant { p };
        f.validate()?;
        Ok(f)
    }

    pub fn linear(b: f64, c: f64) -> Result<Self> {
        let f = Self::Linear { b, c };
        f.validate()?;
        Ok(f)
    }

    /// `p(x) = x`.
    pub fn identity() -> Self {
        Self::Linear { b: 1.0, c: 1.0 }
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        Ok(Self::Polynomial(Polynomial::new(coefficients)?))
    }

    pub fn piecewise(interior_breakpoints: &[f64], levels: Vec<f64>) -> Result<Self> {
        Ok(Self::PiecewiseConstant(PiecewiseConstant::with_interior(
            interior_breakpoints,
            levels,
        )?))
    }

    pub fn indicator(threshold: f64) -> Result<Self> {
        let f = Self::Indicator { threshold };
        f.validate()?;
        Ok(f)
    }

    pub fn search_form(v: f64, pivot: f64) -> Result<Self> {
        let f = Self::SearchForm { v, pivot };
        f.validate()?;
        Ok(f)
    }

    /// Checks the parameter constraints of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { p } => check_unit("p", *p),
            Self::Linear { b, c } => {
                if !(*b > 0.0 && *b <= 1.0 && *c > 0.0 && *c <= 1.0) {
                    return domain(format!("linear direction needs b, c in (0, 1], got b = {b}, c = {c}"));
                }
                Ok(())
            }
            Self::Polynomial(poly) => Polynomial::new(poly.coefficients.clone()).map(|_| ()),
            Self::PiecewiseConstant(pc) => {
                PiecewiseConstant::new(pc.breakpoints.clone(), pc.levels.clone()).map(|_| ())
            }
            Self::Indicator { threshold } => {
                if !(*threshold > 0.0 && *threshold < 1.0) {
                    return domain(format!("indicator threshold {threshold} must lie in (0, 1)"));
                }
                Ok(())
            }
            Self::SearchForm { v, pivot } => {
                if !(0.0..=0.5).contains(v) {
                    return domain(format!("search form v = {v} must lie in [0, 1/2]"));
                }
                check_unit("pivot", *pivot)
            }
        }
    }

    /// `p(x)`, with a domain error off [0, 1].
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.value(x))
    }

    /// `p(x)` without the domain check.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Self::Constant { p } => *p,
            Self::Linear { b, c } => c * x + (1.0 - b) * (1.0 - x),
            Self::Polynomial(poly) => poly.value(x).clamp(0.0, 1.0),
            Self::PiecewiseConstant(pc) => pc.value(x),
            Self::Indicator { threshold } => {
                if x > *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Self::SearchForm { v, pivot } => {
                if x < *pivot {
                    *v
                } else {
                    1.0 - v
                }
            }
        }
    }

    /// `lim_{t ↑ x} p(t)`.
    pub fn left_limit(&self, x: f64) -> f64 {
        match self {
            Self::PiecewiseConstant(pc) => pc.left_limit(x),
            Self::Indicator { threshold } => {
                if x > *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Self::SearchForm { v, pivot } => {
                if x <= *pivot {
                    *v
                } else {
                    1.0 - v
                }
            }
            _ => self.value(x),
        }
    }

    /// `lim_{t ↓ x} p(t)`.
    pub fn right_limit(&self, x: f64) -> f64 {
        match self {
            Self::Indicator { threshold } => {
                if x >= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.value(x),
        }
    }

    /// Jump points of `p` in (0, 1).
    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            Self::PiecewiseConstant(pc) => {
                let k = pc.levels.len();
                (1..k)
                    .filter(|&i| pc.levels[i] != pc.levels[i - 1])
                    .map(|i| pc.breakpoints[i])
                    .collect()
            }
            Self::Indicator { threshold } => vec![*threshold],
            Self::SearchForm { v, pivot } => {
                if *v != 0.5 && *pivot > 0.0 && *pivot < 1.0 {
                    vec![*pivot]
                } else {
                    vec![]
                }
            }
            _ => vec![],
        }
    }

    /// The constant pieces of a step-type function (constant, piecewise,
    /// indicator, search form); `None` for the others.
    pub fn steps(&self) -> Option<Vec<Step>> {
        let two = |s: f64, a: f64, b: f64| {
            if s <= 0.0 {
                vec![Step { lo: 0.0, hi: 1.0, level: b }]
            } else if s >= 1.0 {
                vec![Step { lo: 0.0, hi: 1.0, level: a }]
            } else {
                vec![Step { lo: 0.0, hi: s, level: a }, Step { lo: s, hi: 1.0, level: b }]
            }
        };
        match self {
            Self::Constant { p } => Some(vec![Step { lo: 0.0, hi: 1.0, level: *p }]),
            Self::PiecewiseConstant(pc) => Some(
                pc.levels
                    .iter()
                    .enumerate()
                    .map(|(i, &level)| Step {
                        lo: pc.breakpoints[i],
                        hi: pc.breakpoints[i + 1],
                        level,
                    })
                    .collect(),
            ),
            Self::Indicator { threshold } => Some(two(*threshold, 0.0, 1.0)),
            Self::SearchForm { v, pivot } => Some(two(*pivot, *v, 1.0 - v)),
            _ => None,
        }
    }

    /// The step-type variants as a [`PiecewiseConstant`] (equal to `self`
    /// except possibly at the breakpoints).
    pub fn to_piecewise(&self) -> Option<PiecewiseConstant> {
        let steps = self.steps()?;
        let mut breakpoints = vec![0.0];
        breakpoints.extend(steps.iter().map(|s| s.hi));
        PiecewiseConstant::new(breakpoints, steps.iter().map(|s| s.level).collect()).ok()
    }

    /// The polynomial-type variants as a [`Polynomial`].
    pub fn to_polynomial(&self) -> Option<Polynomial> {
        Polynomial::new(self.monomial_coefficients()?).ok()
    }

    /// Monomial coefficients at 0 for the polynomial-type variants
    /// (constant, linear, polynomial); `None` otherwise.
    pub fn monomial_coefficients(&self) -> Option<Vec<f64>> {
        match self {
            Self::Constant { p } => Some(vec![*p]),
            Self::Linear { b, c } => Some(vec![1.0 - b, c + b - 1.0]),
            Self::Polynomial(poly) => Some(poly.coefficients.clone()),
            _ => None,
        }
    }

    /// `p(0+)`.
    pub fn at_zero(&self) -> f64 {
        self.right_limit(0.0)
    }

    /// `p(1-)`.
    pub fn at_one(&self) -> f64 {
        self.left_limit(1.0)
    }
}

/// Evaluates `p(x)`; `x` must lie in [0, 1].
pub fn eval_p(p: &DirectionFunction, x: f64) -> Result<f64> {
    p.eval(x)
}

/// Outcome of the non-absorption check `sup_{x∈[0,δ]} max{p(x), 1 - p(1-x)} < 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub satisfied: bool,
    pub delta: f64,
    /// `1 - sup`; positive exactly when the check is satisfied.
    pub epsilon: f64,
    pub sup: f64,
    pub explanation: String,
}

/// Candidate values of δ tried by [`check_e1_default`], largest first.
pub const DEFAULT_DELTAS: [f64; 4] = [0.25, 0.1, 0.01, 0.001];

fn e1_objective(p: &DirectionFunction, x: f64) -> f64 {
    p.value(x).max(1.0 - p.value(1.0 - x))
}

/// Supremum of `max{p(x), 1 - p(1-x)}` over `[0, δ]`.
fn e1_sup(p: &DirectionFunction, delta: f64) -> f64 {
    match p {
        Self_::Constant { p } => p.max(1.0 - p),
        Self_::Linear { .. } => [0.0, delta]
            .iter()
            .map(|&x| e1_objective(p, x))
            .fold(f64::MIN, f64::max),
        Self_::PiecewiseConstant(pc) => {
            let k = pc.levels.len();
            let mut sup = f64::MIN;
            for i in 0..k {
                let (lo, hi) = (pc.breakpoints[i], pc.breakpoints[i + 1]);
                // [lo, hi) meets [0, δ]
                if lo <= delta {
                    sup = sup.max(pc.levels[i]);
                }
                // [lo, hi) meets [1-δ, 1], or i is the last piece (p(1) = p_k)
                if hi > 1.0 - delta || i == k - 1 {
                    sup = sup.max(1.0 - pc.levels[i]);
                }
            }
            sup
        }
        Self_::Indicator { threshold } => {
            // p = 1 somewhere in [0, δ] iff δ > y; 1 - p(t) = 1 for some t ∈ [1-δ, 1] iff 1-δ <= y
            if delta > *threshold || 1.0 - delta <= *threshold {
                1.0
            } else {
                0.0
            }
        }
        Self_::SearchForm { v, pivot } => {
            let mut sup = f64::MIN;
            // p on [0, δ]
            if 0.0 < *pivot {
                sup = sup.max(*v);
            }
            if delta >= *pivot {
                sup = sup.max(1.0 - v);
            }
            // 1 - p(t) on [1-δ, 1]; t = 1 >= pivot always
            sup = sup.max(*v);
            if 1.0 - delta < *pivot {
                sup = sup.max(1.0 - v);
            }
            sup
        }
        Self_::Polynomial(_) => {
            let n = GRID_CHECK_POINTS;
            let h = delta / n as f64;
            let (mut best_i, mut best) = (0, f64::MIN);
            for i in 0..=n {
                let v = e1_objective(p, i as f64 * h);
                if v > best {
                    best = v;
                    best_i = i;
                }
            }
            // refine around the best grid point
            let mut lo = (best_i.saturating_sub(1)) as f64 * h;
            let mut hi = ((best_i + 1).min(n)) as f64 * h;
            let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..100 {
                let a = hi - inv_phi * (hi - lo);
                let b = lo + inv_phi * (hi - lo);
                if e1_objective(p, a) >= e1_objective(p, b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            best.max(e1_objective(p, 0.5 * (lo + hi)))
        }
    }
}

use DirectionFunction as Self_;

/// Checks the non-absorption condition at a given `δ ∈ (0, 1/2)`.
pub fn check_e1(p: &DirectionFunction, delta: f64) -> Result<ErgodicityReport> {
    if !(delta > 0.0 && delta < 0.5) {
        return domain(format!("delta = {delta} must lie in (0, 1/2)"));
    }
    p.validate()?;
    let sup = e1_sup(p, delta).clamp(0.0, 1.0);
    let satisfied = sup < 1.0;
    let explanation = if satisfied {
        format!("sup over [0, {delta}] of max{{p(x), 1-p(1-x)}} = {sup} < 1")
    } else {
        format!("sup over [0, {delta}] of max{{p(x), 1-p(1-x)}} reaches 1: the chain can be absorbed at an endpoint")
    };
    Ok(ErgodicityReport {
        satisfied,
        delta,
        epsilon: 1.0 - sup,
        sup,
        explanation,
    })
}

/// Tries δ ∈ {0.25, 0.1, 0.01, 0.001} and reports the largest that works, or
/// the failing report at the smallest δ.
pub fn check_e1_default(p: &DirectionFunction) -> Result<ErgodicityReport> {
    let mut last = None;
    for &d in &DEFAULT_DELTAS {
        let r = check_e1(p, d)?;
        if r.satisfied {
            return Ok(r);
        }
        last = Some(r);
    }
    Ok(last.expect("at least one delta tried"))
}

/// Fails with an ergodicity error unless `p` passes [`check_e1_default`].
pub fn require_e1(p: &DirectionFunction) -> Result<ErgodicityReport> {
    let r = check_e1_default(p)?;
    if r.satisfied {
        Ok(r)
    } else {
        Err(Error::Ergodicity(r.explanation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn conversions_to_specialized_forms() {
        let pc = DirectionFunction::indicator(0.3).unwrap().to_piecewise().unwrap();
        assert_eq!(pc.breakpoints(), &[0.0, 0.3, 1.0]);
        assert_eq!(pc.levels(), &[0.0, 1.0]);
        let lin = DirectionFunction::linear(0.5, 1.0).unwrap().to_polynomial().unwrap();
        assert_eq!(lin.coefficients(), &[0.5, 0.5]);
        assert!(DirectionFunction::identity().to_piecewise().is_none());
        assert!(DirectionFunction::indicator(0.3).unwrap().to_polynomial().is_none());
    }

    #[test]
    fn eval_examples() {
        assert!((DirectionFunction::identity().eval(0.3).unwrap() - 0.3).abs() < 1e-15);
        let pc = DirectionFunction::piecewise(&[0.5], vec![0.0, 1.0]).unwrap();
        assert_eq!(pc.eval(0.5).unwrap(), 1.0);
        assert_eq!(pc.eval(0.4999).unwrap(), 0.0);
        assert_eq!(pc.eval(1.0).unwrap(), 1.0);
        let s = DirectionFunction::search_form(0.0, 0.4).unwrap();
        assert_eq!(s.eval(0.2).unwrap(), 0.0);
        assert_eq!(s.eval(0.4).unwrap(), 1.0);
        assert!(matches!(pc.eval(1.2), Err(Error::Domain(_))));
        assert!(matches!(pc.eval(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn limits_at_jumps() {
        let pc = DirectionFunction::piecewise(&[0.3, 0.6], vec![0.2, 0.9, 0.4]).unwrap();
        assert_eq!(pc.left_limit(0.3), 0.2);
        assert_eq!(pc.right_limit(0.3), 0.9);
        assert_eq!(pc.left_limit(0.6), 0.9);
        assert_eq!(pc.at_one(), 0.4);
        let ind = DirectionFunction::indicator(0.5).unwrap();
        assert_eq!(ind.value(0.5), 0.0);
        assert_eq!(ind.right_limit(0.5), 1.0);
        assert_eq!(ind.discontinuities(), vec![0.5]);
    }

    #[test]
    fn construction_errors() {
        assert!(PiecewiseConstant::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.1, 0.2, 0.3]).is_err());
        assert!(PiecewiseConstant::new(vec![0.1, 1.0], vec![0.1]).is_err());
        assert!(PiecewiseConstant::new(vec![0.0, 1.0], vec![1.1]).is_err());
        assert!(DirectionFunction::linear(0.0, 0.5).is_err());
        assert!(DirectionFunction::polynomial(vec![0.0, 2.0]).is_err());
        assert!(DirectionFunction::indicator(1.0).is_err());
        assert!(DirectionFunction::search_form(0.6, 0.5).is_err());
    }

    #[test]
    fn coefficients_at_one_are_exact() {
        // p(x) = 0.1 + 0.3x + 0.5x² → q0 = 0.9, q1 = 1.3, q2 = 0.5
        let poly = Polynomial::new(vec![0.1, 0.3, 0.5]).unwrap();
        let q = poly.coefficients_at_one();
        let exact = [0.1 + 0.3 + 0.5, 0.3 + 2.0 * 0.5, 0.5];
        for (a, b) in q.iter().zip(exact) {
            assert!((a - b).abs() < 1e-15);
        }
        // re-expansion reproduces p
        for &x in &[0.0, 0.25, 0.7, 1.0] {
            let via_q: f64 = q.iter().enumerate().map(|(n, c)| c * (x - 1.0f64).powi(n as i32)).sum();
            assert!((via_q - poly.value(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn e1_examples() {
        let r = check_e1(&DirectionFunction::constant(0.5).unwrap(), 0.1).unwrap();
        assert!(r.satisfied && (r.epsilon - 0.5).abs() < 1e-15);
        let r = check_e1(&DirectionFunction::identity(), 0.1).unwrap();
        assert!(r.satisfied && (r.sup - 0.1).abs() < 1e-15 && (r.epsilon - 0.9).abs() < 1e-15);
        for &d in &[0.001, 0.1, 0.49] {
            assert!(!check_e1(&DirectionFunction::constant(1.0).unwrap(), d).unwrap().satisfied);
        }
        assert!(check_e1(&DirectionFunction::identity(), 0.5).is_err());
        assert!(check_e1(&DirectionFunction::identity(), 0.0).is_err());
    }

    #[test]
    fn e1_default_delta() {
        let r = check_e1_default(&DirectionFunction::identity()).unwrap();
        assert_eq!(r.delta, 0.25);
        let ind = DirectionFunction::indicator(0.05).unwrap();
        let r = check_e1_default(&ind).unwrap();
        assert!(r.satisfied);
        assert_eq!(r.delta, 0.01);
        let r = check_e1_default(&DirectionFunction::constant(0.0).unwrap()).unwrap();
        assert!(!r.satisfied);
        assert!(matches!(
            require_e1(&DirectionFunction::constant(1.0).unwrap()),
            Err(Error::Ergodicity(_))
        ));
    }

    fn brute_sup(p: &DirectionFunction, delta: f64) -> f64 {
        let n = 100_000;
        (0..=n)
            .map(|i| e1_objective(p, delta * i as f64 / n as f64))
            .fold(f64::MIN, f64::max)
    }

    #[test]
    fn e1_matches_brute_force() {
        let cases = vec![
            DirectionFunction::constant(0.3).unwrap(),
            DirectionFunction::linear(0.4, 0.7).unwrap(),
            DirectionFunction::linear(1.0, 1.0).unwrap(),
            DirectionFunction::piecewise(&[0.05, 0.5, 0.97], vec![0.2, 0.6, 0.1, 0.8]).unwrap(),
            DirectionFunction::indicator(0.03).unwrap(),
            DirectionFunction::indicator(0.5).unwrap(),
            DirectionFunction::search_form(0.2, 0.6).unwrap(),
            DirectionFunction::search_form(0.1, 0.04).unwrap(),
            DirectionFunction::polynomial(vec![0.2, 0.5, -0.3]).unwrap(),
        ];
        for p in &cases {
            for &d in &[0.25, 0.1, 0.01, 0.001] {
                let exact = check_e1(p, d).unwrap().sup;
                let brute = brute_sup(p, d);
                assert!((exact - brute).abs() < 1e-9, "{p:?} δ = {d}: {exact} vs {brute}");
            }
        }
    }

    #[test]
    fn piecewise_hypothesis_implies_e1() {
        let p = DirectionFunction::piecewise(&[0.2, 0.4, 0.9], vec![0.95, 0.0, 1.0, 0.05]).unwrap();
        // δ < min(s₁, 1 - s_{k-1}) = 0.1
        assert!(check_e1(&p, 0.09).unwrap().satisfied);
    }

    fn arb_direction() -> impl Strategy<Value = DirectionFunction> {
        prop_oneof![
            (0.0..=1.0f64).prop_map(|p| DirectionFunction::Constant { p }),
            (0.01..=1.0f64, 0.01..=1.0f64).prop_map(|(b, c)| DirectionFunction::Linear { b, c }),
            (0.01..0.99f64).prop_map(|t| DirectionFunction::Indicator { threshold: t }),
            (0.0..=0.5f64, 0.0..=1.0f64).prop_map(|(v, pivot)| DirectionFunction::SearchForm { v, pivot }),
            (proptest::collection::vec(0.0..=1.0f64, 1..6), 0.0..1.0f64).prop_map(|(levels, shift)| {
                let k = levels.len();
                let interior: Vec<f64> = (1..k).map(|i| (i as f64 + 0.5 * shift) / (k as f64 + 0.5)).collect();
                DirectionFunction::piecewise(&interior, levels).unwrap()
            }),
            (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, b)| {
                // a convex combination of 1, x, x² stays in [0, 1]
                DirectionFunction::polynomial(vec![a * 0.5, (1.0 - a) * b, (1.0 - a) * (1.0 - b) * 0.5]).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn values_stay_in_unit_interval(p in arb_direction()) {
            for i in 0..=10_000 {
                let v = p.eval(i as f64 / 10_000.0).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn exact_sup_agrees_with_grid(p in arb_direction(), d in 0.001..0.49f64) {
            if !matches!(p, DirectionFunction::Polynomial(_)) {
                let exact = check_e1(&p, d).unwrap().sup;
                prop_assert!((exact - brute_sup(&p, d)).abs() < 1e-9);
            }
        }
    }
}
