//! Run configurations: one TOML document per run, tagged by `command`.

use std::path::Path;

use betachain::apps::{CoverageSpec, SearchSpec};
use betachain::{ChainSpec, DirectionFunction, ProportionLaw};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A complete run description. The `command` tag must match the subcommand
/// the file is passed to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Density(DensityConfig),
    Simulate(SimulateConfig),
    Verify(VerifyConfig),
    Bvp(BvpConfig),
    Coverage(CoverageConfig),
    Search(SearchConfig),
}

impl RunConfig {
    pub fn command(&self) -> &'static str {
        match self {
            Self::Density(_) => "density",
            Self::Simulate(_) => "simulate",
            Self::Verify(_) => "verify",
            Self::Bvp(_) => "bvp",
            Self::Coverage(_) => "coverage",
            Self::Search(_) => "search",
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read configuration {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical TOML text; `parse(emit(c)) == c` and emitting again gives the same text.
    pub fn emit(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Which closed form evaluates the stationary density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormChoice {
    /// Piecewise beta for step-type `p` with `l = r`, polynomial for
    /// polynomial-type `p`, general otherwise.
    #[default]
    Auto,
    General,
    Polynomial,
    Piecewise,
}

fn default_grid_points() -> usize {
    betachain::analytic::DEFAULT_GRID_POINTS
}

/// Stationary density for β(1, l) left and β(1, r) right proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub l: f64,
    pub r: f64,
    #[serde(default)]
    pub form: FormChoice,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub p: DirectionFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_steps: usize,
    pub chain: ChainSpec,
}

fn default_fit_steps() -> usize {
    1_000_000
}
fn default_burn_in() -> usize {
    10_000
}
fn default_bins() -> usize {
    200
}
fn default_ks() -> f64 {
    0.01
}
fn default_tv() -> f64 {
    0.02
}
fn default_residual() -> f64 {
    1e-6
}
fn default_oracle_threshold() -> f64 {
    2e-3
}

/// Checks the closed-form density of a β(1, l) / β(1, r) chain by
/// simulation, by its integral-equation residual and optionally against the
/// discretized kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default)]
    pub form: FormChoice,
    #[serde(default = "default_fit_steps")]
    pub n_steps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_ks")]
    pub ks_threshold: f64,
    #[serde(default = "default_tv")]
    pub tv_threshold: f64,
    #[serde(default = "default_residual")]
    pub residual_threshold: f64,
    /// Cells of the kernel oracle; omitted means no oracle comparison.
    pub oracle_cells: Option<usize>,
    #[serde(default = "default_oracle_threshold")]
    pub oracle_threshold: f64,
    pub chain: ChainSpec,
}

fn default_eps() -> f64 {
    1e-6
}
fn default_bvp_grid() -> usize {
    2001
}

/// Semidegenerate-kernel boundary value problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BvpConfig {
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_bvp_grid")]
    pub grid_points: usize,
    /// Cells of the kernel oracle; omitted means no oracle comparison.
    pub oracle_cells: Option<usize>,
    #[serde(default = "default_oracle_threshold")]
    pub oracle_threshold: f64,
    pub p: DirectionFunction,
    pub left: ProportionLaw,
    pub right: ProportionLaw,
}

fn default_product_tv() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    pub n_steps: usize,
    /// Largest accepted TV distance between the joint histogram and the
    /// product of its marginals.
    #[serde(default = "default_product_tv")]
    pub tv_threshold: f64,
    pub robot: CoverageSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub search: SearchSpec,
}
