//! Adaptive Gauss–Kronrod (7/15) quadrature, plus a wrapper for integrands on
//! sub-intervals of [0, 1] with integrable power-law singularities at 0 or 1.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::point::UnitPoint;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-14, 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    while err > tol.abs.max(tol.rel * total.abs()) {
        if !total.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite quadrature value on [{a}, {b}]"
            )));
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature on [{a}, {b}] stopped at {} subintervals with error {err:e} (value {total})",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // The interval cannot be split further in floating point.
            heap.push(Piece { error: 0.0, ..worst });
            err = heap.iter().map(|p| p.error).sum();
            if err <= tol.abs.max(tol.rel * total.abs()) {
                break;
            }
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        heap.push(Piece { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, error: e2 });
        // Re-sum to avoid drift from repeated incremental updates.
        total = heap.iter().map(|p| p.value).sum();
        err = heap.iter().map(|p| p.error).sum();
    }
    if !total.is_finite() {
        return Err(Error::Numeric(format!("non-finite quadrature value on [{a}, {b}]")));
    }
    Ok(Integral { value: total, error: err })
}

/// Leading power-law exponents of an integrand at 0 and at 1:
/// `f(x) ~ x^at_zero` as `x → 0` and `f(x) ~ (1-x)^at_one` as `x → 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EndpointPowers {
    pub at_zero: Option<f64>,
    pub at_one: Option<f64>,
}

impl EndpointPowers {
    pub fn new(at_zero: f64, at_one: f64) -> Self {
        Self {
            at_zero: Some(at_zero),
            at_one: Some(at_one),
        }
    }
}

/// Smallest offset from a singular endpoint at which the integrand is evaluated.
const MIN_OFFSET: f64 = 1e-300;

/// Integrates `∫_0^len f(offset) d offset` where `f ~ offset^e` near 0, e > -1,
/// by substituting `offset = len * t^k` with `k = 1/(1+e)`; the transformed
/// integrand tends to a constant at `t = 0`.
fn integrate_power_singular<F: Fn(f64) -> f64>(f: F, len: f64, e: f64, tol: Tolerance) -> Result<Integral> {
    let k = 1.0 / (1.0 + e);
    let t_min = (MIN_OFFSET / len).powf(1.0 / k);
    integrate(
        |t: f64| {
            let t = t.max(t_min);
            let tk = t.powf(k);
            f(len * tk) * len * k * tk / t
        },
        0.0,
        1.0,
        tol,
    )
}

/// Integrates `f` over `[lo, hi] ⊆ [0, 1]`, evaluating it at [`UnitPoint`]s so
/// that complements near 1 stay exact. When `lo` is 0 (resp. `hi` is 1) and
/// the corresponding exponent in `powers` is negative, the singular end is
/// handled by a power substitution.
pub fn integrate_unit<F: Fn(UnitPoint) -> f64>(
    f: F,
    lo: UnitPoint,
    hi: UnitPoint,
    powers: EndpointPowers,
    tol: Tolerance,
) -> Result<Integral> {
    integrate_unit_dyn(&f, lo, hi, powers, tol)
}

fn integrate_unit_dyn(
    f: &dyn Fn(UnitPoint) -> f64,
    lo: UnitPoint,
    hi: UnitPoint,
    powers: EndpointPowers,
    tol: Tolerance,
) -> Result<Integral> {
    if hi.x < lo.x {
        let r = integrate_unit_dyn(f, hi, lo, powers, tol)?;
        return Ok(Integral { value: -r.value, error: r.error });
    }
    if lo.x == hi.x {
        return Ok(Integral { value: 0.0, error: 0.0 });
    }
    if lo.x < 0.5 && hi.x > 0.5 {
        let mid = UnitPoint::new(0.5);
        let a = integrate_unit_dyn(f, lo, mid, powers, tol)?;
        let b = integrate_unit_dyn(f, mid, hi, powers, tol)?;
        return Ok(Integral { value: a.value + b.value, error: a.error + b.error });
    }
    let sub_tol = Tolerance::new(tol.abs * 0.5, tol.rel);
    if lo.x < 0.5 || (lo.x == 0.5 && hi.x == 0.5) {
        // parametrize by x
        match powers.at_zero {
            Some(e) if lo.x == 0.0 && e < 0.0 => {
                integrate_power_singular(|s| f(UnitPoint::new(s)), hi.x, e, sub_tol)
            }
            _ => integrate(|x| f(UnitPoint::new(x)), lo.x, hi.x, sub_tol),
        }
    } else {
        // parametrize by the complement 1 - x, running from hi.xc up to lo.xc
        match powers.at_one {
            Some(e) if hi.xc == 0.0 && e < 0.0 => {
                integrate_power_singular(|s| f(UnitPoint::from_complement(s)), lo.xc, e, sub_tol)
            }
            _ => integrate(|s| f(UnitPoint::from_complement(s)), hi.xc, lo.xc, sub_tol),
        }
    }
}

/// [`integrate_unit`] over consecutive segments delimited by `splits`
/// (interior points of (lo, hi), any order, duplicates ignored).
pub fn integrate_unit_split<F: Fn(UnitPoint) -> f64>(
    f: F,
    lo: UnitPoint,
    hi: UnitPoint,
    splits: &[f64],
    powers: EndpointPowers,
    tol: Tolerance,
) -> Result<Integral> {
    let mut pts: Vec<UnitPoint> = vec![lo];
    let mut inner: Vec<f64> = splits
        .iter()
        .copied()
        .filter(|&s| s > lo.x && s < hi.x)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner.into_iter().map(UnitPoint::new));
    pts.push(hi);
    let mut value = 0.0;
    let mut error = 0.0;
    for w in pts.windows(2) {
        let r = integrate_unit(&f, w[0], w[1], powers, tol)?;
        value += r.value;
        error += r.error;
    }
    Ok(Integral { value, error })
}
