use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::{step, ChainStreams};
use crate::direction::DirectionFunction;
use crate::error::{check_positive, Error, Result};
use crate::law::ProportionLaw;
use crate::model::ChainSpec;

/// A robot moving in the room `[0, d₁] × [0, d₂]`. Each axis is an
/// independent chain in normalized coordinates `xᵢ/dᵢ` with direction
/// function `pᵢ`, left proportions β(1, lᵢ) and right proportions β(1, rᵢ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageSpec {
    pub room: [f64; 2],
    pub p: [DirectionFunction; 2],
    pub left: [f64; 2],
    pub right: [f64; 2],
    pub start: [f64; 2],
    /// Occupancy cells per axis.
    pub grid: [usize; 2],
}

impl CoverageSpec {
    pub fn validate(&self) -> Result<()> {
        for i in 0..2 {
            check_positive("room size", self.room[i])?;
            check_positive("left parameter", self.left[i])?;
            check_positive("right parameter", self.right[i])?;
            self.p[i].validate()?;
            if !(0.0..=self.room[i]).contains(&self.start[i]) {
                return Err(Error::Domain(format!(
                    "start coordinate {} = {} is outside [0, {}]",
                    i + 1,
                    self.start[i],
                    self.room[i]
                )));
            }
            if self.grid[i] == 0 {
                return Err(Error::Domain("occupancy grid needs at least one cell per axis".into()));
            }
        }
        Ok(())
    }

    /// The normalized one-dimensional chain of axis `i`.
    pub fn axis_chain(&self, i: usize) -> Result<ChainSpec> {
        ChainSpec::new(
            self.p[i].clone(),
            ProportionLaw::beta_one(self.left[i])?,
            ProportionLaw::beta_one(self.right[i])?,
            self.start[i] / self.room[i],
        )
    }

    /// Per-axis RNG streams: axis `i` uses slot `i` of `seed`.
    pub fn streams(seed: u64) -> [ChainStreams; 2] {
        [ChainStreams::new(seed, 0), ChainStreams::new(seed, 1)]
    }
}

fn step_axes(axes: &[ChainSpec; 2], room: [f64; 2], pos: [f64; 2], streams: &mut [ChainStreams; 2]) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for i in 0..2 {
        let x = (pos[i] / room[i]).clamp(0.0, 1.0);
        out[i] = step(&axes[i], x, &mut streams[i])? * room[i];
    }
    Ok(out)
}

/// Moves the robot once: each axis independently jumps toward 0 with
/// probability `pᵢ(xᵢ/dᵢ)` and toward `dᵢ` otherwise.
pub fn coverage_step(spec: &CoverageSpec, pos: [f64; 2], streams: &mut [ChainStreams; 2]) -> Result<[f64; 2]> {
    spec.validate()?;
    for i in 0..2 {
        if !(0.0..=spec.room[i]).contains(&pos[i]) {
            return Err(Error::Domain(format!("position {pos:?} is outside the room")));
        }
    }
    let axes = [spec.axis_chain(0)?, spec.axis_chain(1)?];
    step_axes(&axes, spec.room, pos, streams)
}

/// Occupancy statistics of a coverage run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageResult {
    pub n_steps: usize,
    pub seed: u64,
    pub grid: [usize; 2],
    /// Visits per cell, `counts[i * grid[1] + j]` for axis-1 cell `i` and
    /// axis-2 cell `j`.
    #[serde(skip)]
    pub counts: Vec<u64>,
    /// Empirical marginal densities in normalized coordinates.
    pub marginals: [Vec<f64>; 2],
    /// Most visited cell (first in row-major order on ties).
    pub argmax_cell: [usize; 2],
    /// Its center in room coordinates.
    pub argmax_center: [f64; 2],
    /// Total variation between the joint histogram and the product of its marginals.
    pub product_tv: f64,
    pub final_position: [f64; 2],
}

impl CoverageResult {
    /// Whether the closed cell `argmax_cell` contains `point` (room coordinates).
    pub fn argmax_contains(&self, room: [f64; 2], point: [f64; 2]) -> bool {
        (0..2).all(|i| {
            let w = room[i] / self.grid[i] as f64;
            let lo = self.argmax_cell[i] as f64 * w;
            point[i] >= lo - 1e-12 * room[i] && point[i] <= lo + w + 1e-12 * room[i]
        })
    }

    /// Writes the counts as a headerless CSV matrix: one row per axis-1
    /// cell, one column per axis-2 cell.
    pub fn write_counts_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.counts.chunks(self.grid[1]) {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Runs the robot for `n_steps` steps and histograms the visited positions
/// (the start position is not counted).
pub fn run_coverage(spec: &CoverageSpec, n_steps: usize, seed: u64) -> Result<CoverageResult> {
    spec.validate()?;
    if n_steps == 0 {
        return Err(Error::Domain("coverage needs at least one step".into()));
    }
    let axes = [spec.axis_chain(0)?, spec.axis_chain(1)?];
    let mut streams = CoverageSpec::streams(seed);
    let [g0, g1] = spec.grid;
    let mut counts = vec![0u64; g0 * g1];
    let cell = |x: f64, d: f64, g: usize| ((x / d * g as f64) as usize).min(g - 1);
    let mut pos = spec.start;
    for _ in 0..n_steps {
        pos = step_axes(&axes, spec.room, pos, &mut streams)?;
        counts[cell(pos[0], spec.room[0], g0) * g1 + cell(pos[1], spec.room[1], g1)] += 1;
    }
    let total = n_steps as f64;
    let mut m0 = vec![0.0; g0];
    let mut m1 = vec![0.0; g1];
    for i in 0..g0 {
        for j in 0..g1 {
            let c = counts[i * g1 + j] as f64 / total;
            m0[i] += c;
            m1[j] += c;
        }
    }
    let mut product_tv = 0.0;
    for i in 0..g0 {
        for j in 0..g1 {
            product_tv += (counts[i * g1 + j] as f64 / total - m0[i] * m1[j]).abs();
        }
    }
    product_tv *= 0.5;
    let best = (0..counts.len()).fold(0, |b, k| if counts[k] > counts[b] { k } else { b });
    let argmax_cell = [best / g1, best % g1];
    let argmax_center = [
        (argmax_cell[0] as f64 + 0.5) * spec.room[0] / g0 as f64,
        (argmax_cell[1] as f64 + 0.5) * spec.room[1] / g1 as f64,
    ];
    let marginals = [
        m0.iter().map(|v| v * g0 as f64).collect(),
        m1.iter().map(|v| v * g1 as f64).collect(),
    ];
    Ok(CoverageResult {
        n_steps,
        seed,
        grid: spec.grid,
        counts,
        marginals,
        argmax_cell,
        argmax_center,
        product_tv,
        final_position: pos,
    })
}
