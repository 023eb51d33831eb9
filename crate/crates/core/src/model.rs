use serde::{Deserialize, Serialize};

use crate::direction::DirectionFunction;
use crate::error::{check_unit, Result};
use crate::law::{transition_density, ProportionLaw};
use crate::point::UnitPoint;

/// Everything needed to run the chain: direction function, left and right
/// proportion laws and the starting state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub p: DirectionFunction,
    pub left: ProportionLaw,
    pub right: ProportionLaw,
    pub x0: f64,
}

impl ChainSpec {
    pub fn new(p: DirectionFunction, left: ProportionLaw, right: ProportionLaw, x0: f64) -> Result<Self> {
        let spec = Self { p, left, right, x0 };
        spec.validate()?;
        Ok(spec)
    }

    /// β(1, l) to the left and β(1, r) to the right.
    pub fn beta_one(p: DirectionFunction, l: f64, r: f64, x0: f64) -> Result<Self> {
        Self::new(p, ProportionLaw::beta_one(l)?, ProportionLaw::beta_one(r)?, x0)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("x0", self.x0)?;
        self.p.validate()?;
        self.left.validate()?;
        self.right.validate()
    }

    /// Transition density `f(x, y)`, `x ≠ y`.
    pub fn kernel(&self, x: UnitPoint, y: UnitPoint) -> f64 {
        transition_density(&self.p, &self.left, &self.right, x, y)
    }

    /// `(l, r)` when both laws are of the form β(1, ·).
    pub fn beta_one_parameters(&self) -> Option<(f64, f64)> {
        Some((self.left.as_beta_one()?, self.right.as_beta_one()?))
    }
}
