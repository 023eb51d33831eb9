use std::f64::consts::LN_2;

use crate::direction::{require_e1, DirectionFunction, Polynomial, Step};
use crate::error::{check_positive, Result};
use crate::point::UnitPoint;
use crate::quad::{integrate, Tolerance};

use super::{DensityForm, DensityFunction, EndpointExponents, LogShape};

const INNER_TOL: Tolerance = Tolerance::new(1e-15, 1e-13);

/// How the inner integrals `∫_{1/2}^x p/t dt` and `∫_{1/2}^x p/(1-t) dt`
/// are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerIntegrals {
    /// Exact antiderivatives for polynomial and step-type `p`.
    #[default]
    ClosedForm,
    /// Adaptive quadrature in `ln t` and `-ln(1-t)`, for any `p`.
    Quadrature,
}

#[derive(Debug, Clone)]
enum Inner {
    Polynomial { at_zero: Vec<f64>, at_one: Vec<f64> },
    Steps(Vec<Step>),
    Quadrature(DirectionFunction),
}

impl Inner {
    /// `(I_L, I_R) = (∫_{1/2}^x p/t, ∫_{1/2}^x p/(1-t))`.
    fn eval(&self, x: UnitPoint) -> (f64, f64) {
        match self {
            Inner::Polynomial { at_zero, at_one } => {
                let mut il = at_zero[0] * (x.x.ln() + LN_2);
                for (n, &c) in at_zero.iter().enumerate().skip(1) {
                    il += c * (x.x.powi(n as i32) - 0.5f64.powi(n as i32)) / n as f64;
                }
                let mut ir = -at_one[0] * (x.xc.ln() + LN_2);
                for (n, &c) in at_one.iter().enumerate().skip(1) {
                    ir -= c * ((-x.xc).powi(n as i32) - (-0.5f64).powi(n as i32)) / n as f64;
                }
                (il, ir)
            }
            Inner::Steps(steps) => {
                let half = UnitPoint::new(0.5);
                let (a, b, sign) = if x.x >= 0.5 { (half, x, 1.0) } else { (x, half, -1.0) };
                let (mut il, mut ir) = (0.0, 0.0);
                for s in steps {
                    if s.level == 0.0 || s.hi <= a.x || s.lo >= b.x {
                        continue;
                    }
                    let lo = if s.lo > a.x { UnitPoint::new(s.lo) } else { a };
                    let hi = if s.hi < b.x { UnitPoint::new(s.hi) } else { b };
                    il += s.level * ((hi.x - lo.x) / lo.x).ln_1p();
                    ir += s.level * ((lo.xc - hi.xc) / hi.xc).ln_1p();
                }
                (sign * il, sign * ir)
            }
            Inner::Quadrature(p) => {
                let jumps = p.discontinuities();
                let left_splits: Vec<f64> = jumps.iter().map(|s| s.ln()).collect();
                let right_splits: Vec<f64> = jumps.iter().map(|s| -(-s).ln_1p()).collect();
                let il = integrate_split(|v| p.value(v.exp()), -LN_2, x.x.ln(), &left_splits);
                let ir = integrate_split(|w| p.value(-(-w).exp_m1()), LN_2, -x.xc.ln(), &right_splits);
                (il, ir)
            }
        }
    }
}

/// `∫_a^b f` split at the points of `splits` lying strictly between.
fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, splits: &[f64]) -> f64 {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts = vec![lo];
    let mut inner: Vec<f64> = splits.iter().copied().filter(|&s| s > lo && s < hi).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(hi);
    let total: f64 = pts
        .windows(2)
        .map(|w| match integrate(&f, w[0], w[1], INNER_TOL) {
            Ok(r) => r.value,
            Err(_) => f64::NAN,
        })
        .sum();
    sign * total
}

#[derive(Debug)]
struct GeneralShape {
    l: f64,
    r: f64,
    inner: Inner,
}

impl LogShape for GeneralShape {
    fn ln_shape(&self, x: UnitPoint) -> f64 {
        let (il, ir) = self.inner.eval(x);
        (self.l - 1.0) * x.x.ln() - x.xc.ln() + (self.l * x.xc + self.r * x.x).ln() - self.r * ir - self.l * il
    }
}

/// Stationary density for β(1, l) left and β(1, r) right proportions and an
/// arbitrary direction function, with closed-form inner integrals.
pub fn stationary_density_general(p: &DirectionFunction, l: f64, r: f64) -> Result<DensityFunction> {
    stationary_density_general_with(p, l, r, InnerIntegrals::ClosedForm)
}

/// [`stationary_density_general`] with an explicit inner-integral method.
pub fn stationary_density_general_with(
    p: &DirectionFunction,
    l: f64,
    r: f64,
    method: InnerIntegrals,
) -> Result<DensityFunction> {
    check_positive("l", l)?;
    check_positive("r", r)?;
    p.validate()?;
    require_e1(p)?;
    let inner = match method {
        InnerIntegrals::Quadrature => Inner::Quadrature(p.clone()),
        InnerIntegrals::ClosedForm => {
            if let Some(coef) = p.monomial_coefficients() {
                let at_one = Polynomial::new(coef.clone())?.coefficients_at_one();
                Inner::Polynomial { at_zero: coef, at_one }
            } else if let Some(steps) = p.steps() {
                Inner::Steps(steps)
            } else {
                Inner::Quadrature(p.clone())
            }
        }
    };
    let exponents = EndpointExponents {
        at_zero: l * (1.0 - p.at_zero()) - 1.0,
        at_one: r * p.at_one() - 1.0,
    };
    DensityFunction::from_shape(
        DensityForm::General,
        Box::new(GeneralShape { l, r, inner }),
        exponents,
        p.discontinuities(),
    )
}
