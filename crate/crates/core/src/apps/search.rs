use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chain::{step, ChainStreams};
use crate::direction::DirectionFunction;
use crate::error::{Error, Result};
use crate::law::ProportionLaw;
use crate::model::ChainSpec;

/// Built-in objectives on `[0, 1]^d` (to be maximized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// `-Σ |xⱼ - targetⱼ|`.
    NegativeL1 { target: Vec<f64> },
    /// `-Σ (xⱼ - targetⱼ)²`.
    NegativeSquared { target: Vec<f64> },
    Constant { value: f64 },
}

impl Objective {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::NegativeL1 { target } => -x.iter().zip(target).map(|(a, b)| (a - b).abs()).sum::<f64>(),
            Self::NegativeSquared { target } => -x.iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
            Self::Constant { value } => *value,
        }
    }

    fn dimension(&self) -> Option<usize> {
        match self {
            Self::NegativeL1 { target } | Self::NegativeSquared { target } => Some(target.len()),
            Self::Constant { .. } => None,
        }
    }
}

/// The proportion parameter `z_n` at step `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `z_n = z0 + slope · n`.
    Linear { z0: f64, slope: f64 },
}

impl Default for Schedule {
    fn default() -> Self {
        Self::Linear { z0: 1.0, slope: 0.01 }
    }
}

impl Schedule {
    pub fn z(&self, n: usize) -> f64 {
        match self {
            Self::Linear { z0, slope } => z0 + slope * n as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Linear { z0, slope } if *z0 > 0.0 && *slope >= 0.0 && z0.is_finite() && slope.is_finite() => Ok(()),
            other => Err(Error::Domain(format!("schedule {other:?} must start positive and be nondecreasing"))),
        }
    }
}

/// Sequential random search: every coordinate moves by one chain step with
/// β(1, z_n) proportions, drifting toward the current best point with
/// probability `1 - v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub objective: Objective,
    pub v: f64,
    #[serde(default)]
    pub schedule: Schedule,
    pub start: Vec<f64>,
    pub max_steps: Option<usize>,
    /// Stop once the L1 path length reaches this value.
    pub max_travel: Option<f64>,
}

impl SearchSpec {
    pub fn dimension(&self) -> usize {
        self.start.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.start.is_empty() {
            return Err(Error::Domain("search needs dimension at least 1".into()));
        }
        if let Some(d) = self.objective.dimension() {
            if d != self.start.len() {
                return Err(Error::Domain(format!(
                    "objective has dimension {d} but the start point has {}",
                    self.start.len()
                )));
            }
        }
        if !(0.0..=0.5).contains(&self.v) {
            return Err(Error::Domain(format!("v = {} is outside [0, 1/2]", self.v)));
        }
        if self.start.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Domain(format!("start {:?} is outside [0, 1]^d", self.start)));
        }
        if self.max_steps.is_none() && self.max_travel.is_none() {
            return Err(Error::Domain("search needs max_steps or max_travel".into()));
        }
        if let Some(t) = self.max_travel {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("max_travel = {t} must be positive")));
            }
        }
        self.schedule.validate()
    }
}

/// One row of the search trace: the state after `n` steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    /// Schedule value `z_n`, used to generate the next point.
    pub z: f64,
    pub x: Vec<f64>,
    pub best_value: f64,
    pub travel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub travel: f64,
    pub steps: usize,
    pub seed: u64,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

impl SearchResult {
    /// Writes `n,z,x_1..x_d,best_value,travel`.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let d = self.best_point.len();
        let mut header = vec!["n".to_string(), "z".to_string()];
        header.extend((1..=d).map(|j| format!("x_{j}")));
        header.push("best_value".into());
        header.push("travel".into());
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        crate::io::write_rows(
            w,
            &refs,
            self.trace.iter().map(|r| {
                let mut row = vec![r.n as f64, r.z];
                row.extend_from_slice(&r.x);
                row.push(r.best_value);
                row.push(r.travel);
                row
            }),
        )
    }
}

/// Runs the search with the objective named in `spec`.
pub fn search_run(spec: &SearchSpec, seed: u64) -> Result<SearchResult> {
    let objective = spec.objective.clone();
    search_run_with(spec, |x| objective.eval(x), seed)
}

/// Runs the search with an arbitrary objective `g`. Coordinate `j` draws
/// from RNG slot `j`; the best point `Y` changes only on strict improvement
/// and only after all coordinates of the new point are generated.
pub fn search_run_with<G: Fn(&[f64]) -> f64>(spec: &SearchSpec, g: G, seed: u64) -> Result<SearchResult> {
    spec.validate()?;
    let d = spec.dimension();
    let mut streams: Vec<ChainStreams> = (0..d).map(|j| ChainStreams::new(seed, j as u64)).collect();
    let mut x = spec.start.clone();
    let mut best = x.clone();
    let mut best_value = g(&x);
    let mut travel = 0.0;
    let mut n = 0;
    let mut trace = vec![TraceRow { n: 0, z: spec.schedule.z(0), x: x.clone(), best_value, travel }];
    loop {
        if spec.max_steps.is_some_and(|m| n >= m) || spec.max_travel.is_some_and(|t| travel >= t) {
            break;
        }
        let z = spec.schedule.z(n);
        let law = ProportionLaw::BetaOneZ { z };
        let mut next = Vec::with_capacity(d);
        for j in 0..d {
            let chain = ChainSpec {
                p: DirectionFunction::SearchForm { v: spec.v, pivot: best[j] },
                left: law.clone(),
                right: law.clone(),
                x0: x[j],
            };
            next.push(step(&chain, x[j], &mut streams[j])?);
        }
        travel += next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum::<f64>();
        x = next;
        n += 1;
        let value = g(&x);
        if value > best_value {
            best_value = value;
            best = x.clone();
        }
        trace.push(TraceRow { n, z: spec.schedule.z(n), x: x.clone(), best_value, travel });
    }
    Ok(SearchResult { best_point: best, best_value, travel, steps: n, seed, trace })
}
