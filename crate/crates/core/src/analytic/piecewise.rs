use crate::direction::PiecewiseConstant;
use crate::error::{check_positive, Error, Result};
use crate::point::UnitPoint;
use crate::quad::{integrate_unit, EndpointPowers, Tolerance};
use crate::special::incomplete_beta_pair;

use super::{Density, EndpointExponents};

const SEGMENT_TOL: Tolerance = Tolerance::new(1e-15, 1e-13);

/// `∫_lo^hi t^(a-1) (1-t)^(b-1) dt` for `a, b ≥ 0`, not both zero.
///
/// Positive parameters use the incomplete beta function. A zero parameter
/// (allowed only on a segment away from the non-integrable end) splits off
/// the logarithm and integrates the bounded remainder by quadrature.
pub fn beta_segment(lo: UnitPoint, hi: UnitPoint, a: f64, b: f64) -> Result<f64> {
    if hi.x < lo.x {
        return Ok(-beta_segment(hi, lo, a, b)?);
    }
    if lo.x == hi.x {
        return Ok(0.0);
    }
    if a > 0.0 && b > 0.0 {
        if lo.x < 0.5 && hi.x > 0.5 {
            let mid = UnitPoint::new(0.5);
            return Ok(beta_segment(lo, mid, a, b)? + beta_segment(mid, hi, a, b)?);
        }
        return if hi.x <= 0.5 {
            Ok(incomplete_beta_pair(hi.x, hi.xc, a, b)? - incomplete_beta_pair(lo.x, lo.xc, a, b)?)
        } else {
            Ok(incomplete_beta_pair(lo.xc, lo.x, b, a)? - incomplete_beta_pair(hi.xc, hi.x, b, a)?)
        };
    }
    if b == 0.0 && a > 0.0 {
        if hi.xc <= 0.0 {
            return Err(Error::Numeric("beta segment with b = 0 reaches 1".into()));
        }
        // ∫ 1/(1-t) + ∫ (t^(a-1) - 1)/(1-t)
        let log_part = ((lo.xc - hi.xc) / hi.xc).ln_1p();
        let powers = EndpointPowers {
            at_zero: (a < 1.0).then_some(a - 1.0),
            at_one: None,
        };
        let rest = integrate_unit(
            |t: UnitPoint| ((a - 1.0) * t.x.ln()).exp_m1() / t.xc,
            lo,
            hi,
            powers,
            SEGMENT_TOL,
        )?;
        return Ok(log_part + rest.value);
    }
    if a == 0.0 && b > 0.0 {
        if lo.x <= 0.0 {
            return Err(Error::Numeric("beta segment with a = 0 reaches 0".into()));
        }
        let log_part = ((hi.x - lo.x) / lo.x).ln_1p();
        let powers = EndpointPowers {
            at_zero: None,
            at_one: (b < 1.0).then_some(b - 1.0),
        };
        let rest = integrate_unit(
            |t: UnitPoint| ((b - 1.0) * t.xc.ln()).exp_m1() / t.x,
            lo,
            hi,
            powers,
            SEGMENT_TOL,
        )?;
        return Ok(log_part + rest.value);
    }
    Err(Error::Domain(format!("beta segment parameters a = {a}, b = {b} are invalid")))
}

/// Stationary density for piecewise-constant `p` and β(1, z) on both sides:
/// on the i-th piece it is `C_i x^(z(1-p_i)-1) (1-x)^(z p_i-1)`, with the
/// constants chained by continuity at the breakpoints.
#[derive(Debug, Clone)]
pub struct PiecewiseBetaDensity {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    z: f64,
    ln_constants: Vec<f64>,
    constants: Vec<f64>,
    /// Probability mass of each piece.
    masses: Vec<f64>,
    /// Mass to the left of each piece.
    cumulative: Vec<f64>,
}

/// Builds the glued beta density; needs `p_1 < 1` and `p_k > 0`.
pub fn stationary_density_piecewise(p: &PiecewiseConstant, z: f64) -> Result<PiecewiseBetaDensity> {
    check_positive("z", z)?;
    let s = p.breakpoints().to_vec();
    let levels = p.levels().to_vec();
    let k = levels.len();
    if levels[0] >= 1.0 || levels[k - 1] <= 0.0 {
        return Err(Error::Ergodicity(format!(
            "piecewise direction has p = {} at 0 and p = {} at 1; need p(0+) < 1 and p(1-) > 0",
            levels[0],
            levels[k - 1]
        )));
    }
    // ln C_i relative to ln C_1
    let mut rel = vec![0.0; k];
    for i in 1..k {
        let si = UnitPoint::new(s[i]);
        rel[i] = rel[i - 1] + z * (levels[i] - levels[i - 1]) * (si.x.ln() - si.xc.ln());
    }
    let mut raw = Vec::with_capacity(k);
    for i in 0..k {
        let lo = UnitPoint::new(s[i]);
        let hi = if i + 1 == k { UnitPoint::from_complement(0.0) } else { UnitPoint::new(s[i + 1]) };
        let seg = beta_segment(lo, hi, z * (1.0 - levels[i]), z * levels[i])?;
        raw.push(rel[i].exp() * seg);
    }
    let total: f64 = raw.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numeric(format!("piecewise density mass {total} is not positive and finite")));
    }
    let ln_c1 = -total.ln();
    let ln_constants: Vec<f64> = rel.iter().map(|r| r + ln_c1).collect();
    let constants = ln_constants.iter().map(|c| c.exp()).collect();
    let masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
    let mut cumulative = Vec::with_capacity(k);
    let mut acc = 0.0;
    for m in &masses {
        cumulative.push(acc);
        acc += m;
    }
    Ok(PiecewiseBetaDensity { breakpoints: s, levels, z, ln_constants, constants, masses, cumulative })
}

impl PiecewiseBetaDensity {
    /// `C_1, …, C_k`; `C_1` is the normalizing constant.
    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    /// Probability mass of each piece; sums to 1.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Beta parameters `(z(1-p_i), z p_i)` of each piece.
    pub fn piece_parameters(&self) -> Vec<(f64, f64)> {
        self.levels.iter().map(|&p| (self.z * (1.0 - p), self.z * p)).collect()
    }

    fn piece(&self, x: f64) -> usize {
        let k = self.levels.len();
        (self.breakpoints.partition_point(|&s| s <= x).max(1) - 1).min(k - 1)
    }

    fn piece_value(&self, i: usize, x: UnitPoint) -> f64 {
        let p = self.levels[i];
        let (a, b) = (self.z * (1.0 - p), self.z * p);
        (self.ln_constants[i] + (a - 1.0) * x.x.ln() + (b - 1.0) * x.xc.ln()).exp()
    }

    /// Largest relative jump between the pieces meeting at an interior breakpoint.
    pub fn continuity_defect(&self) -> f64 {
        (1..self.levels.len())
            .map(|i| {
                let s = UnitPoint::new(self.breakpoints[i]);
                let (left, right) = (self.piece_value(i - 1, s), self.piece_value(i, s));
                (left - right).abs() / left.abs().max(right.abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn cdf_at(&self, x: UnitPoint) -> Result<f64> {
        if x.x <= 0.0 {
            return Ok(0.0);
        }
        if x.xc <= 0.0 {
            return Ok(1.0);
        }
        let i = self.piece(x.x);
        let p = self.levels[i];
        let seg = beta_segment(UnitPoint::new(self.breakpoints[i]), x, self.z * (1.0 - p), self.z * p)?;
        Ok((self.cumulative[i] + self.constants[i] * seg).clamp(0.0, 1.0))
    }
}

impl Density for PiecewiseBetaDensity {
    fn pdf_at(&self, x: UnitPoint) -> f64 {
        let k = self.levels.len();
        let endpoint = |e: f64, c: f64| {
            if e > 0.0 {
                0.0
            } else if e < 0.0 {
                f64::INFINITY
            } else {
                c
            }
        };
        if x.x <= 0.0 {
            return endpoint(self.z * (1.0 - self.levels[0]) - 1.0, self.constants[0]);
        }
        if x.xc <= 0.0 {
            return endpoint(self.z * self.levels[k - 1] - 1.0, self.constants[k - 1]);
        }
        self.piece_value(self.piece(x.x), x)
    }

    fn endpoint_exponents(&self) -> EndpointExponents {
        let k = self.levels.len();
        EndpointExponents {
            at_zero: self.z * (1.0 - self.levels[0]) - 1.0,
            at_one: self.z * self.levels[k - 1] - 1.0,
        }
    }

    fn kinks(&self) -> Vec<f64> {
        (1..self.levels.len())
            .filter(|&i| self.levels[i] != self.levels[i - 1])
            .map(|i| self.breakpoints[i])
            .collect()
    }
}
