//! Jump-proportion laws: the distributions of the fractions `L` and `R` of
//! the distance to the respective endpoint covered by a jump.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_unit, domain, Error, Result};
use crate::point::UnitPoint;
use crate::special::{beta_fn, ln_beta, regularized_incomplete_beta_pair};

const NORMALIZATION_TOL: f64 = 1e-10;
const DENSITY_GRID: usize = 10_000;

/// A distribution on [0, 1] for jump proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProportionLaw {
    /// β(1, z), density `z (1-x)^(z-1)`.
    BetaOneZ { z: f64 },
    /// β(a, b) with a positive integer first parameter.
    BetaIntFirst { a: u32, b: f64 },
    /// Signed finite mixture with density `Σ μⱼ (1-x)^(lⱼ-1)`, `Σ μⱼ/lⱼ = 1`.
    Mixture { terms: Vec<MixtureTerm> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureTerm {
    pub weight: f64,
    pub exponent: f64,
}

impl MixtureTerm {
    pub fn new(weight: f64, exponent: f64) -> Self {
        Self { weight, exponent }
    }
}

impl ProportionLaw {
    pub fn beta_one(z: f64) -> Result<Self> {
        let law = Self::BetaOneZ { z };
        law.validate()?;
        Ok(law)
    }

    pub fn beta(a: u32, b: f64) -> Result<Self> {
        let law = Self::BetaIntFirst { a, b };
        law.validate()?;
        Ok(law)
    }

    /// Builds a mixture from `(μⱼ, lⱼ)` pairs.
    pub fn mixture(terms: &[(f64, f64)]) -> Result<Self> {
        let law = Self::Mixture {
            terms: terms.iter().map(|&(w, e)| MixtureTerm::new(w, e)).collect(),
        };
        law.validate()?;
        Ok(law)
    }

    /// Parameter checks; for mixtures also normalization and a nonnegative
    /// density on a dense grid of (0, 1).
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::BetaOneZ { z } => check_positive("z", *z),
            Self::BetaIntFirst { a, b } => {
                if *a == 0 {
                    return domain("first beta parameter must be a positive integer");
                }
                check_positive("b", *b)
            }
            Self::Mixture { terms } => {
                if terms.is_empty() {
                    return domain("mixture needs at least one term");
                }
                for t in terms {
                    check_positive("mixture exponent", t.exponent)?;
                    if !t.weight.is_finite() {
                        return domain("mixture weights must be finite");
                    }
                }
                let mass: f64 = terms.iter().map(|t| t.weight / t.exponent).sum();
                if (mass - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::Normalization(format!(
                        "mixture weights give Σ μ/l = {mass}, expected 1"
                    )));
                }
                if terms.iter().any(|t| t.weight < 0.0) {
                    for i in 1..DENSITY_GRID {
                        let x = i as f64 / DENSITY_GRID as f64;
                        let d = self.pdf(UnitPoint::new(x));
                        if d < 0.0 {
                            return Err(Error::Unsupported(format!(
                                "signed mixture density is negative at x = {x} ({d})"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Maps every representation of β(1, z) to `BetaIntFirst { a: 1, b: z }`.
    pub fn canonical(&self) -> Self {
        match self {
            Self::BetaOneZ { z } => Self::BetaIntFirst { a: 1, b: *z },
            Self::Mixture { terms } if terms.len() == 1 => {
                let t = terms[0];
                if (t.weight - t.exponent).abs() <= NORMALIZATION_TOL * t.exponent {
                    Self::BetaIntFirst { a: 1, b: t.exponent }
                } else {
                    self.clone()
                }
            }
            _ => self.clone(),
        }
    }

    /// `Some(z)` when the law is β(1, z) in any representation.
    pub fn as_beta_one(&self) -> Option<f64> {
        match self.canonical() {
            Self::BetaIntFirst { a: 1, b } => Some(b),
            _ => None,
        }
    }

    pub fn is_nonnegative_mixture(&self) -> bool {
        match self {
            Self::Mixture { terms } => terms.iter().all(|t| t.weight >= 0.0),
            _ => true,
        }
    }

    /// Density at `u`, with `1 - u` carried exactly.
    pub fn pdf(&self, u: UnitPoint) -> f64 {
        match self {
            Self::BetaOneZ { z } => z * u.xc.powf(z - 1.0),
            Self::BetaIntFirst { a, b } => {
                let a = *a as f64;
                if a == 1.0 {
                    return b * u.xc.powf(b - 1.0);
                }
                let lb = ln_beta(a, *b).expect("validated parameters");
                if u.x == 0.0 {
                    return 0.0;
                }
                ((a - 1.0) * u.x.ln() + (b - 1.0) * u.xc.ln() - lb).exp()
            }
            Self::Mixture { terms } => terms
                .iter()
                .map(|t| t.weight * u.xc.powf(t.exponent - 1.0))
                .sum(),
        }
    }

    /// Distribution function at `u`.
    pub fn cdf(&self, u: UnitPoint) -> f64 {
        if u.x <= 0.0 {
            return 0.0;
        }
        if u.xc <= 0.0 {
            return 1.0;
        }
        match self {
            Self::BetaOneZ { z } => -(z * u.xc.ln()).exp_m1(),
            Self::BetaIntFirst { a, b } => {
                if *a == 1 {
                    -(b * u.xc.ln()).exp_m1()
                } else {
                    regularized_incomplete_beta_pair(u.x, u.xc, *a as f64, *b).expect("validated parameters")
                }
            }
            Self::Mixture { terms } => terms
                .iter()
                .map(|t| -t.weight * (t.exponent * u.xc.ln()).exp_m1() / t.exponent)
                .sum::<f64>()
                .clamp(0.0, 1.0),
        }
    }

    /// `E[(1 - U)^s]` for `s > -(tail exponent)`, infinite otherwise. Used for
    /// the local power behavior of stationary densities at the endpoints.
    pub fn complement_moment(&self, s: f64) -> f64 {
        match self.canonical() {
            Self::BetaIntFirst { a, b } => {
                if b + s <= 0.0 {
                    f64::INFINITY
                } else {
                    let a = a as f64;
                    beta_fn(a, b + s).unwrap() / beta_fn(a, b).unwrap()
                }
            }
            Self::Mixture { terms } => {
                let mut sum = 0.0;
                for t in &terms {
                    if t.weight == 0.0 {
                        continue;
                    }
                    if t.exponent + s <= 0.0 {
                        return f64::INFINITY;
                    }
                    sum += t.weight / (t.exponent + s);
                }
                sum
            }
            Self::BetaOneZ { .. } => unreachable!("canonical form"),
        }
    }

    /// Exponent `κ` with `f(u) ~ (1-u)^κ` as `u → 1`.
    pub fn tail_exponent(&self) -> f64 {
        match self.canonical() {
            Self::BetaIntFirst { b, .. } => b - 1.0,
            Self::Mixture { terms } => terms
                .iter()
                .filter(|t| t.weight != 0.0)
                .map(|t| t.exponent - 1.0)
                .fold(f64::INFINITY, f64::min),
            Self::BetaOneZ { .. } => unreachable!("canonical form"),
        }
    }
}

/// The chain's transition density `f(x, y)` for `x ≠ y`:
/// `(1-p(x))/(1-x) f_R((y-x)/(1-x))` above the diagonal and
/// `p(x)/x f_L((x-y)/x)` below it.
pub fn transition_density(
    p: &crate::direction::DirectionFunction,
    left: &ProportionLaw,
    right: &ProportionLaw,
    x: UnitPoint,
    y: UnitPoint,
) -> f64 {
    if x.x < y.x {
        // u = (y-x)/(1-x), 1-u = (1-y)/(1-x)
        let u = UnitPoint {
            x: (y.x - x.x) / x.xc,
            xc: y.xc / x.xc,
        };
        (1.0 - p.value(x.x)) / x.xc * right.pdf(u)
    } else if y.x < x.x {
        // u = (x-y)/x, 1-u = y/x
        let u = UnitPoint {
            x: (x.x - y.x) / x.x,
            xc: y.x / x.x,
        };
        p.value(x.x) / x.x * left.pdf(u)
    } else {
        0.0
    }
}

/// Probability that a proportion drawn from `law` lies in `[lo, hi]`.
pub fn proportion_mass(law: &ProportionLaw, lo: UnitPoint, hi: UnitPoint) -> f64 {
    // subtract on the side where the values are smaller
    if lo.x < 0.5 {
        law.cdf(hi) - law.cdf(lo)
    } else {
        let sf = |u: UnitPoint| 1.0 - law.cdf(u);
        sf(lo) - sf(hi)
    }
}

pub(crate) fn check_law_unit(u: f64) -> Result<()> {
    check_unit("u", u)
}
