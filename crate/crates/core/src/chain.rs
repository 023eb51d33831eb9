//! Simulation of `X_{n+1} = X_n - X_n L_{n+1} I_{n+1} + (1 - X_n) R_{n+1} (1 - I_{n+1})`
//! with `I_{n+1} = 1{U_{n+1} < p(X_n)}`.
//!
//! The direction uniforms `U`, the left proportions `L` and the right
//! proportions `R` come from three separate ChaCha streams of the same seed,
//! so changing one law leaves the other two sequences untouched.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::law::{check_law_unit, ProportionLaw};
use crate::model::ChainSpec;
use crate::point::UnitPoint;
use crate::special::regularized_incomplete_beta_pair;

const BISECTION_TOL: f64 = 1e-12;

/// Inverse-CDF style map from one uniform `u` to a proportion.
///
/// β(1, z) uses the closed-form inverse `1 - (1-u)^(1/z)`. Nonnegative
/// mixtures use composition: `u` picks the component and is then rescaled
/// to drive that component's inverse. β(a, b) with `a > 1` and signed
/// mixtures invert the distribution function by bisection.
pub fn sample_proportion(law: &ProportionLaw, u: f64) -> Result<f64> {
    check_law_unit(u)?;
    match law {
        ProportionLaw::BetaOneZ { z } => Ok(beta_one_inverse(*z, u)),
        ProportionLaw::BetaIntFirst { a: 1, b } => Ok(beta_one_inverse(*b, u)),
        ProportionLaw::BetaIntFirst { a, b } => {
            let (a, b) = (*a as f64, *b);
            bisect_cdf(u, |x| {
                regularized_incomplete_beta_pair(x, 1.0 - x, a, b).expect("validated parameters")
            })
        }
        ProportionLaw::Mixture { terms } => {
            if law.is_nonnegative_mixture() {
                let mut acc = 0.0;
                for (i, t) in terms.iter().enumerate() {
                    let w = t.weight / t.exponent;
                    if u < acc + w || i == terms.len() - 1 {
                        let v = if w > 0.0 { ((u - acc) / w).clamp(0.0, 1.0) } else { 0.0 };
                        return Ok(beta_one_inverse(t.exponent, v));
                    }
                    acc += w;
                }
                unreachable!("loop returns on the last term")
            } else {
                law.validate()?;
                bisect_cdf(u, |x| law.cdf(UnitPoint::new(x)))
            }
        }
    }
}

fn beta_one_inverse(z: f64, u: f64) -> f64 {
    // 1 - (1-u)^(1/z), accurate for small u
    -((-u).ln_1p() / z).exp_m1()
}

fn bisect_cdf<F: Fn(f64) -> f64>(u: f64, cdf: F) -> Result<f64> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    if u >= 1.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOL {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numeric("inverse-CDF bisection did not converge".into()))
}

/// Draws one proportion from `rng`. β(a, b) with integer `a > 1` and
/// integer `b` uses the a-th order statistic of `a + b - 1` uniforms.
pub fn draw_proportion<R: Rng + ?Sized>(law: &ProportionLaw, rng: &mut R) -> Result<f64> {
    if let ProportionLaw::BetaIntFirst { a, b } = law {
        if *a > 1 && b.fract() == 0.0 && *b <= 64.0 {
            let n = *a as usize + *b as usize - 1;
            let mut us: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            us.sort_by(f64::total_cmp);
            return Ok(us[*a as usize - 1]);
        }
    }
    sample_proportion(law, rng.gen::<f64>())
}

/// The three driving streams of one chain.
#[derive(Debug, Clone)]
pub struct ChainStreams {
    pub direction: ChaCha8Rng,
    pub left: ChaCha8Rng,
    pub right: ChaCha8Rng,
}

impl ChainStreams {
    /// Streams `3·slot`, `3·slot + 1`, `3·slot + 2` of the ChaCha generator
    /// keyed by `seed`. Slot 0 is what [`simulate`] uses.
    pub fn new(seed: u64, slot: u64) -> Self {
        let make = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(3 * slot + k);
            rng
        };
        Self {
            direction: make(0),
            left: make(1),
            right: make(2),
        }
    }
}

/// Deterministic per-run seed for batch `index` of a base seed (SplitMix64).
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

/// Applies one jump of the given direction and proportion.
pub fn transition(x: f64, direction: Direction, proportion: f64) -> f64 {
    match direction {
        Direction::Left => (x - x * proportion).clamp(0.0, 1.0),
        Direction::Right => (x + (1.0 - x) * proportion).clamp(0.0, 1.0),
    }
}

/// Picks the direction from a uniform: left iff `u < p(x)`.
pub fn choose_direction(p_at_x: f64, u: f64) -> Direction {
    if u < p_at_x {
        Direction::Left
    } else {
        Direction::Right
    }
}

/// Advances the chain by one step from `x`.
pub fn step(spec: &ChainSpec, x: f64, streams: &mut ChainStreams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("state x = {x} is outside [0, 1]")));
    }
    let u: f64 = streams.direction.gen();
    let dir = choose_direction(spec.p.value(x), u);
    let prop = match dir {
        Direction::Left => draw_proportion(&spec.left, &mut streams.left)?,
        Direction::Right => draw_proportion(&spec.right, &mut streams.right)?,
    };
    Ok(transition(x, dir, prop))
}

/// A simulated path together with the inputs that reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<f64>,
    pub seed: u64,
    pub spec: ChainSpec,
}

impl Trajectory {
    /// Writes `step,x` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,x")?;
        for (i, x) in self.states.iter().enumerate() {
            writeln!(w, "{i},{}", crate::io::fmt17(*x))?;
        }
        Ok(())
    }
}

/// Runs `n_steps` steps from `spec.x0`; identical inputs give identical paths.
pub fn simulate(spec: &ChainSpec, n_steps: usize, seed: u64) -> Result<Trajectory> {
    spec.validate()?;
    let mut streams = ChainStreams::new(seed, 0);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut x = spec.x0;
    states.push(x);
    for _ in 0..n_steps {
        x = step(spec, x, &mut streams)?;
        states.push(x);
    }
    Ok(Trajectory {
        states,
        seed,
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direction::DirectionFunction;

    #[test]
    fn beta_one_inverse_examples() {
        let b1 = ProportionLaw::beta_one(1.0).unwrap();
        assert!((sample_proportion(&b1, 0.42).unwrap() - 0.42).abs() < 1e-15);
        let b2 = ProportionLaw::beta_one(2.0).unwrap();
        assert!((sample_proportion(&b2, 0.75).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(sample_proportion(&b2, 0.0).unwrap(), 0.0);
        assert!(sample_proportion(&b2, 1.2).is_err());
    }

    #[test]
    fn inverse_cdf_round_trip() {
        let laws = [
            ProportionLaw::beta(3, 2.5).unwrap(),
            ProportionLaw::mixture(&[(1.5, 1.0), (-1.0, 2.0)]).unwrap(),
            ProportionLaw::beta_one(0.3).unwrap(),
        ];
        for law in &laws {
            for &u in &[0.01, 0.3, 0.5, 0.77, 0.999] {
                let x = sample_proportion(law, u).unwrap();
                assert!((law.cdf(UnitPoint::new(x)) - u).abs() < 1e-10, "{law:?} u = {u}");
            }
        }
    }

    #[test]
    fn forced_transitions() {
        assert_eq!(transition(0.0, Direction::Left, 0.7), 0.0);
        assert_eq!(transition(1.0, Direction::Right, 0.7), 1.0);
        assert!((transition(0.5, Direction::Left, 0.4) - 0.3).abs() < 1e-15);
        assert_eq!(choose_direction(0.3, 0.3), Direction::Right);
        assert_eq!(choose_direction(0.3, 0.2999), Direction::Left);
    }

    #[test]
    fn zero_steps_and_absorbing_left() {
        let spec = ChainSpec::beta_one(DirectionFunction::constant(1.0).unwrap(), 2.0, 2.0, 0.5).unwrap();
        let t = simulate(&spec, 0, 9).unwrap();
        assert_eq!(t.states, vec![0.5]);
        let t = simulate(&spec, 50, 9).unwrap();
        assert!(t.states.windows(2).all(|w| w[1] <= w[0]));
        assert!(t.states.windows(2).any(|w| w[1] < w[0]));
    }

    #[test]
    fn reproducible_and_stream_isolated() {
        let spec = ChainSpec::beta_one(DirectionFunction::identity(), 2.0, 3.0, 0.3).unwrap();
        let a = simulate(&spec, 1000, 42).unwrap();
        let b = simulate(&spec, 1000, 42).unwrap();
        assert_eq!(a.states, b.states);
        let c = simulate(&spec, 1000, 43).unwrap();
        assert_ne!(a.states, c.states);

        // changing the right law does not perturb the direction stream
        let mut s1 = ChainStreams::new(7, 0);
        let mut s2 = ChainStreams::new(7, 0);
        let _ = draw_proportion(&ProportionLaw::beta_one(5.0).unwrap(), &mut s2.right);
        let u1: f64 = s1.direction.gen();
        let u2: f64 = s2.direction.gen();
        assert_eq!(u1, u2);
    }

    #[test]
    fn order_statistic_sampler_mean() {
        // β(2, 3) has mean 0.4
        let law = ProportionLaw::beta(2, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let m: f64 = (0..n).map(|_| draw_proportion(&law, &mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((m - 0.4).abs() < 3e-3);
    }

    #[test]
    fn csv_export() {
        let spec = ChainSpec::beta_one(DirectionFunction::identity(), 1.0, 1.0, 0.25).unwrap();
        let t = simulate(&spec, 2, 1).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "step,x");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,2.5000000000000000e-1");
        for l in &lines[1..] {
            let x: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
            assert!((0.0..=1.0).contains(&x));
        }
    }
}
