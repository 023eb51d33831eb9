//! Adaptive Dormand–Prince 5(4) integration for small systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct OdeTolerance {
    pub rtol: f64,
    pub atol: f64,
}

const MAX_STEPS: usize = 2_000_000;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction) in place.
/// `h` is the step-size hint, updated to the last accepted step so that
/// consecutive calls over adjacent intervals continue smoothly.
pub(crate) fn integrate<F>(f: &F, t0: f64, t1: f64, y: &mut [f64], h: &mut f64, tol: OdeTolerance) -> Result<()>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(());
    }
    let dir = span.signum();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut t = t0;
    let mut step = if *h > 0.0 { h.min(span.abs()) } else { span.abs() * 1e-3 };
    f(t, y, &mut k[0]);
    for _ in 0..MAX_STEPS {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            return Ok(());
        }
        let last = step >= remaining;
        let hs = if last { remaining } else { step } * dir;
        macro_rules! stage {
            ($idx:expr, $c:expr, [$(($j:expr, $a:expr)),*]) => {{
                for i in 0..n {
                    tmp[i] = y[i] + hs * (0.0 $(+ $a * k[$j][i])*);
                }
                let (head, tail) = k.split_at_mut($idx);
                let _ = head;
                f(t + $c * hs, &tmp, &mut tail[0]);
            }};
        }
        stage!(1, C2, [(0, A21)]);
        stage!(2, C3, [(0, A31), (1, A32)]);
        stage!(3, C4, [(0, A41), (1, A42), (2, A43)]);
        stage!(4, C5, [(0, A51), (1, A52), (2, A53), (3, A54)]);
        stage!(5, 1.0, [(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
        for i in 0..n {
            y5[i] = y[i] + hs * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        let t_new = if last { t1 } else { t + hs };
        {
            let (head, tail) = k.split_at_mut(6);
            let _ = head;
            f(t_new, &y5, &mut tail[0]);
        }
        let mut err = 0.0;
        for i in 0..n {
            let e = hs
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            step *= 0.1;
        } else if err <= 1.0 {
            t = t_new;
            y.copy_from_slice(&y5);
            k.swap(0, 6);
            if !last {
                *h = step;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            step *= factor;
            if last {
                return Ok(());
            }
        } else {
            step *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if step <= 1e-15 * t.abs().max(1e-300) {
            return Err(Error::Numeric(format!("step size underflow at t = {t:e} (stiff system?)")));
        }
    }
    Err(Error::Numeric(format!("more than {MAX_STEPS} steps between {t0} and {t1}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: OdeTolerance = OdeTolerance { rtol: 1e-10, atol: 1e-12 };

    #[test]
    fn exponential_and_oscillator() {
        let mut y = [1.0];
        let mut h = 0.0;
        integrate(&|_t, y: &[f64], d: &mut [f64]| d[0] = -2.0 * y[0], 0.0, 3.0, &mut y, &mut h, TOL).unwrap();
        assert!((y[0] - (-6.0f64).exp()).abs() < 1e-11);

        let mut y = [1.0, 0.0];
        let mut h = 0.0;
        let f = |_t, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        integrate(&f, 0.0, 10.0, &mut y, &mut h, TOL).unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn backward_and_chained_intervals() {
        // y' = y / t from t = 2 down to t = 1: y = t / 2 · y(2)
        let f = |t: f64, y: &[f64], d: &mut [f64]| d[0] = y[0] / t;
        let mut y = [4.0];
        let mut h = 0.0;
        for w in [2.0, 1.7, 1.3, 1.0].windows(2) {
            integrate(&f, w[0], w[1], &mut y, &mut h, TOL).unwrap();
        }
        assert!((y[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn power_law_near_zero() {
        // y' = 3 y / t from 1e-6 to 1, y = t^3
        let f = |t: f64, y: &[f64], d: &mut [f64]| d[0] = 3.0 * y[0] / t;
        let mut y = [1e-18];
        let mut h = 0.0;
        integrate(&f, 1e-6, 1.0, &mut y, &mut h, OdeTolerance { rtol: 1e-10, atol: 1e-30 }).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);
    }
}
