/// A point of the unit interval carried together with its complement.
///
/// Densities in this crate have power-law behavior at both ends of [0, 1].
/// Near 1 the gap `1 - x` cannot be recovered from `x` once `x` is rounded,
/// so callers that know the gap exactly pass it along.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    pub x: f64,
    pub xc: f64,
}

impl UnitPoint {
    pub fn new(x: f64) -> Self {
        Self { x, xc: 1.0 - x }
    }

    /// The point at distance `xc` below 1.
    pub fn from_complement(xc: f64) -> Self {
        Self { x: 1.0 - xc, xc }
    }

    pub fn mirror(self) -> Self {
        Self {
            x: self.xc,
            xc: self.x,
        }
    }
}

impl From<f64> for UnitPoint {
    fn from(x: f64) -> Self {
        Self::new(x)
    }
}
