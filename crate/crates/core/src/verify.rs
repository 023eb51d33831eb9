//! Independent checks that a density is the stationary density of a chain:
//! the integral-equation residual, a discretized-kernel power iteration,
//! and a Monte Carlo goodness-of-fit.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{Density, DensityFunction};
use crate::chain::simulate;
use crate::direction::DirectionFunction;
use crate::error::{Error, Result};
use crate::law::{transition_density, ProportionLaw};
use crate::model::ChainSpec;
use crate::point::UnitPoint;
use crate::quad::{integrate_unit_split, EndpointPowers, Tolerance};

/// Number of interior points of the residual grid.
pub const RESIDUAL_POINTS: usize = 501;
const KERNEL_TOL: Tolerance = Tolerance::new(1e-13, 1e-10);

/// `∫₀¹ π(x) f(x, y) dx`, split at `y`, at the jumps of `p` and at the
/// density's kinks.
pub fn apply_kernel<D: Density + ?Sized>(
    d: &D,
    p: &DirectionFunction,
    left: &ProportionLaw,
    right: &ProportionLaw,
    y: f64,
) -> Result<f64> {
    let yp = UnitPoint::new(y);
    let mut splits = p.discontinuities();
    splits.extend(d.kinks());
    let exps = d.endpoint_exponents();
    let integrand = |x: UnitPoint| {
        let v = d.pdf_at(x);
        if v == 0.0 {
            0.0
        } else {
            v * transition_density(p, left, right, x, yp)
        }
    };
    let below = integrate_unit_split(
        integrand,
        UnitPoint::new(0.0),
        yp,
        &splits,
        EndpointPowers { at_zero: Some(exps.at_zero), at_one: None },
        KERNEL_TOL,
    )?;
    let above = integrate_unit_split(
        integrand,
        yp,
        UnitPoint::from_complement(0.0),
        &splits,
        EndpointPowers { at_zero: None, at_one: Some(exps.at_one) },
        KERNEL_TOL,
    )?;
    Ok(below.value + above.value)
}

/// Largest scaled integral-equation residual over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `sup |π(y) - ∫π f| / max(π(y), 1)`.
    pub residual: f64,
    /// Where the supremum is attained.
    pub at: f64,
    pub points: usize,
}

/// Integral-equation residual of `d` for `spec` on the interior grid
/// `i/502`, `i = 1..501`.
pub fn residual_ie<D: Density + ?Sized>(d: &D, spec: &ChainSpec) -> Result<ResidualReport> {
    let grid: Vec<f64> = (1..=RESIDUAL_POINTS).map(|i| i as f64 / (RESIDUAL_POINTS + 1) as f64).collect();
    residual_ie_on(d, spec, &grid)
}

/// [`residual_ie`] on a caller-supplied grid of interior points.
pub fn residual_ie_on<D: Density + ?Sized>(d: &D, spec: &ChainSpec, grid: &[f64]) -> Result<ResidualReport> {
    spec.validate()?;
    let values = grid
        .par_iter()
        .map(|&y| {
            let pi = d.pdf(y);
            let k = apply_kernel(d, &spec.p, &spec.left, &spec.right, y)?;
            Ok((pi - k).abs() / pi.max(1.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mut residual, mut at) = (0.0, f64::NAN);
    for (y, r) in grid.iter().zip(&values) {
        if !r.is_finite() {
            return Err(Error::Numeric(format!("non-finite residual at y = {y}")));
        }
        if *r > residual || at.is_nan() {
            residual = *r;
            at = *y;
        }
    }
    Ok(ResidualReport { residual, at, points: grid.len() })
}

/// Discretized transition operator and its stationary vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelGrid {
    pub n_cells: usize,
    pub midpoints: Vec<f64>,
    /// Row-major `n × n` transition probabilities between cells.
    #[serde(skip)]
    pub matrix: Vec<f64>,
    /// Stationary cell probabilities.
    pub stationary: Vec<f64>,
    pub iterations: usize,
    /// L1 distance between the last two iterates.
    pub final_change: f64,
    /// Largest `|row sum - 1|`.
    pub max_row_defect: f64,
}

/// Power-iteration stopping rule.
pub const ORACLE_L1_TOL: f64 = 1e-12;
pub const ORACLE_MAX_ITERATIONS: usize = 100_000;

fn row(spec: &ChainSpec, x: f64, n: usize) -> Vec<f64> {
    let xp = UnitPoint::new(x);
    let pv = spec.p.value(x);
    let edge = |k: usize| UnitPoint::new(k as f64 / n as f64);
    let mut out = vec![0.0; n];
    // right jumps land in (x, 1]: y = x + (1-x)R; left jumps in [0, x): y = x - xL
    let right_cdf = |y: UnitPoint| -> f64 {
        if y.x <= x {
            0.0
        } else {
            spec.right.cdf(UnitPoint { x: (y.x - x) / xp.xc, xc: y.xc / xp.xc })
        }
    };
    let left_sf = |y: UnitPoint| -> f64 {
        // P(x - xL ≤ y) = P(L ≥ (x - y)/x)
        if y.x >= x {
            1.0
        } else {
            1.0 - spec.left.cdf(UnitPoint { x: (x - y.x) / x, xc: y.x / x })
        }
    };
    let mut prev_r = 0.0;
    let mut prev_l = 0.0;
    for (j, cell) in out.iter_mut().enumerate() {
        let hi = edge(j + 1);
        let (r, l) = (right_cdf(hi), if x > 0.0 { left_sf(hi) } else { 1.0 });
        *cell = (1.0 - pv) * (r - prev_r) + pv * (l - prev_l);
        prev_r = r;
        prev_l = l;
    }
    out
}

/// Builds the `n_cells`-cell transition matrix (midpoint in x, exact in y
/// through the proportion laws' distribution functions) and iterates the
/// uniform vector to stationarity.
pub fn kernel_oracle(spec: &ChainSpec, n_cells: usize) -> Result<KernelGrid> {
    if n_cells < 100 {
        return Err(Error::Domain(format!("kernel oracle needs at least 100 cells, got {n_cells}")));
    }
    spec.validate()?;
    let n = n_cells;
    let midpoints: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let rows: Vec<Vec<f64>> = midpoints.par_iter().map(|&x| row(spec, x, n)).collect();
    let max_row_defect = rows
        .iter()
        .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let matrix: Vec<f64> = rows.into_iter().flatten().collect();

    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < ORACLE_MAX_ITERATIONS {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, &w) in pi.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (acc, &m) in next.iter_mut().zip(&matrix[i * n..(i + 1) * n]) {
                *acc += w * m;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        change = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        iterations += 1;
        if change < ORACLE_L1_TOL {
            break;
        }
    }
    if change >= ORACLE_L1_TOL {
        return Err(Error::Numeric(format!(
            "power iteration did not converge: L1 change {change:e} after {iterations} iterations"
        )));
    }
    Ok(KernelGrid { n_cells: n, midpoints, matrix, stationary: pi, iterations, final_change: change, max_row_defect })
}

impl KernelGrid {
    /// Stationary probability divided by the cell width.
    pub fn cell_densities(&self) -> Vec<f64> {
        self.stationary.iter().map(|p| p * self.n_cells as f64).collect()
    }

    /// Writes `x_lo,x_hi,density` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let n = self.n_cells as f64;
        crate::io::write_rows(
            w,
            &["x_lo", "x_hi", "density"],
            self.cell_densities()
                .into_iter()
                .enumerate()
                .map(|(i, d)| vec![i as f64 / n, (i + 1) as f64 / n, d]),
        )
    }
}

/// Average of `d` over each of `n` equal cells.
pub fn cell_averages<D: Density + ?Sized>(d: &D, n: usize) -> Result<Vec<f64>> {
    let kinks = d.kinks();
    let powers = d.endpoint_exponents().powers();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = UnitPoint::new(i as f64 / n as f64);
            let hi = if i + 1 == n { UnitPoint::from_complement(0.0) } else { UnitPoint::new((i + 1) as f64 / n as f64) };
            let r = integrate_unit_split(|x| d.pdf_at(x), lo, hi, &kinks, powers, Tolerance::new(1e-13, 1e-10))?;
            Ok(r.value * n as f64)
        })
        .collect()
}

/// Sup-norm distance between two cell-average vectors.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Settings of [`mc_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    pub n_steps: usize,
    pub burn_in: usize,
    pub bins: usize,
    pub ks_threshold: f64,
    pub tv_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { n_steps: 1_000_000, burn_in: 10_000, bins: 200, ks_threshold: 0.01, tv_threshold: 0.02 }
    }
}

/// Samples below this size never pass.
pub const MIN_FIT_SAMPLES: usize = 100;

/// Goodness of fit of a simulated path against a density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub ks: f64,
    pub tv: f64,
    pub sample_size: usize,
    pub burn_in: usize,
    pub bins: usize,
    pub ks_threshold: f64,
    pub tv_threshold: f64,
    pub seed: u64,
    pub passed: bool,
}

/// Simulates `spec`, drops the burn-in and compares the remaining states
/// with `d`: exact KS distance against its distribution function and total
/// variation on equal bins.
pub fn mc_fit(spec: &ChainSpec, d: &DensityFunction, options: &FitOptions, seed: u64) -> Result<FitReport> {
    if options.n_steps <= options.burn_in {
        return Err(Error::Domain(format!(
            "n_steps = {} must exceed burn_in = {}",
            options.n_steps, options.burn_in
        )));
    }
    if options.bins == 0 {
        return Err(Error::Domain("bins must be positive".into()));
    }
    let path = simulate(spec, options.n_steps, seed)?;
    let mut sample: Vec<f64> = path.states[options.burn_in + 1..].to_vec();
    fit_sample(&mut sample, d, options, seed)
}

/// The statistics of [`mc_fit`] for an already drawn sample (sorted in place).
pub fn fit_sample(sample: &mut [f64], d: &DensityFunction, options: &FitOptions, seed: u64) -> Result<FitReport> {
    sample.sort_by(f64::total_cmp);
    let n = sample.len();
    let cdf = d.cdf_sorted(sample)?;
    let nf = n as f64;
    let mut ks: f64 = 0.0;
    // ties share the same empirical jump
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sample[j + 1] == sample[i] {
            j += 1;
        }
        let f = cdf[i];
        ks = ks.max((f - i as f64 / nf).abs()).max(((j + 1) as f64 / nf - f).abs());
        i = j + 1;
    }
    let bins = options.bins;
    let edges: Vec<f64> = (0..=bins).map(|k| k as f64 / bins as f64).collect();
    let edge_cdf = d.cdf_sorted(&edges)?;
    let mut counts = vec![0usize; bins];
    for &x in sample.iter() {
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let tv = 0.5
        * counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (c as f64 / nf - (edge_cdf[k + 1] - edge_cdf[k])).abs())
            .sum::<f64>();
    let passed = n >= MIN_FIT_SAMPLES && ks <= options.ks_threshold && tv <= options.tv_threshold;
    Ok(FitReport {
        ks: ks.clamp(0.0, 1.0),
        tv: tv.clamp(0.0, 1.0),
        sample_size: n,
        burn_in: options.burn_in,
        bins,
        ks_threshold: options.ks_threshold,
        tv_threshold: options.tv_threshold,
        seed,
        passed,
    })
}
