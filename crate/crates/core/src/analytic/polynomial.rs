use crate::direction::Polynomial;
use crate::error::{check_positive, Error, Result};
use crate::point::UnitPoint;

use super::{DensityForm, DensityFunction, EndpointExponents, LogShape};

/// `x^e0 (1-x)^e1 (l(1-x) + r x) exp(r Σ q_n (-(1-x))^n / n - l Σ p_n x^n / n)`
/// with `p_n` the coefficients at 0 and `q_n` those at 1.
#[derive(Debug)]
struct PolynomialShape {
    l: f64,
    r: f64,
    at_zero: Vec<f64>,
    at_one: Vec<f64>,
    exponents: EndpointExponents,
}

impl LogShape for PolynomialShape {
    fn ln_shape(&self, x: UnitPoint) -> f64 {
        let mut s = self.exponents.at_zero * x.x.ln() + self.exponents.at_one * x.xc.ln();
        s += (self.l * x.xc + self.r * x.x).ln();
        for (n, &q) in self.at_one.iter().enumerate().skip(1) {
            s += self.r * q * (-x.xc).powi(n as i32) / n as f64;
        }
        for (n, &p) in self.at_zero.iter().enumerate().skip(1) {
            s -= self.l * p * x.x.powi(n as i32) / n as f64;
        }
        s
    }
}

/// Stationary density for a polynomial direction function, in closed form
/// up to the normalizing constant. Requires `p(0) < 1` and `p(1) > 0`.
pub fn stationary_density_polynomial(p: &Polynomial, l: f64, r: f64) -> Result<DensityFunction> {
    check_positive("l", l)?;
    check_positive("r", r)?;
    let at_zero = p.coefficients().to_vec();
    let at_one = p.coefficients_at_one();
    if at_zero[0] >= 1.0 || at_one[0] <= 0.0 {
        return Err(Error::Ergodicity(format!(
            "polynomial direction has p(0) = {} and p(1) = {}; need p(0) < 1 and p(1) > 0",
            at_zero[0], at_one[0]
        )));
    }
    let exponents = EndpointExponents {
        at_zero: l * (1.0 - at_zero[0]) - 1.0,
        at_one: r * at_one[0] - 1.0,
    };
    DensityFunction::from_shape(
        DensityForm::Polynomial,
        Box::new(PolynomialShape { l, r, at_zero, at_one, exponents }),
        exponents,
        vec![],
    )
}
