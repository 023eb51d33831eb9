//! One function per subcommand; each writes its files through [`Outputs`].

use betachain::analytic::{
    quadrature_mass, stationary_density_general, stationary_density_piecewise, stationary_density_polynomial,
    DensityFunction, DensityForm, EndpointExponents,
};
use betachain::apps::{run_coverage, search_run, CoverageResult};
use betachain::chain::simulate;
use betachain::semidegenerate::{factorize, solve_bvp_with, BvpDiagnostics, BvpOptions};
use betachain::verify::{cell_averages, kernel_oracle, mc_fit, residual_ie, sup_distance, FitOptions, FitReport, ResidualReport};
use betachain::{ChainSpec, DirectionFunction, ProportionLaw};
use serde::Serialize;

use crate::config::{BvpConfig, CoverageConfig, DensityConfig, FormChoice, SearchConfig, SimulateConfig, VerifyConfig};
use crate::error::CliError;
use crate::output::Outputs;

/// Result of a command whose files were all written: `Err` carries the
/// reason a check failed.
pub type Checked = Result<(), String>;

fn build_density(p: &DirectionFunction, l: f64, r: f64, form: FormChoice) -> Result<DensityFunction, CliError> {
    let form = match form {
        FormChoice::Auto if l == r && p.to_piecewise().is_some() => FormChoice::Piecewise,
        FormChoice::Auto if p.to_polynomial().is_some() => FormChoice::Polynomial,
        FormChoice::Auto => FormChoice::General,
        other => other,
    };
    Ok(match form {
        FormChoice::Piecewise => {
            if l != r {
                return Err(CliError::Config(format!("the piecewise form needs l = r, got l = {l}, r = {r}")));
            }
            let pc = p
                .to_piecewise()
                .ok_or_else(|| CliError::Config("the piecewise form needs a step-type direction function".into()))?;
            stationary_density_piecewise(&pc, l)?.into()
        }
        FormChoice::Polynomial => {
            let poly = p
                .to_polynomial()
                .ok_or_else(|| CliError::Config("the polynomial form needs a polynomial-type direction function".into()))?;
            stationary_density_polynomial(&poly, l, r)?
        }
        FormChoice::General | FormChoice::Auto => stationary_density_general(p, l, r)?,
    })
}

fn grid_csv(out: &mut Outputs, d: &DensityFunction, points: usize) -> Result<(), CliError> {
    if points == 0 {
        return Err(CliError::Config("grid_points must be positive".into()));
    }
    out.write_with("density.csv", |w| d.write_grid_csv(w, points))
}

#[derive(Serialize)]
struct DensityMeta<'a> {
    form: DensityForm,
    /// Normalizing constant (`C₁` for the piecewise form).
    normalization: f64,
    /// Piecewise form only: the constants `C₁…C_k` and the piece masses.
    constants: Option<&'a [f64]>,
    masses: Option<&'a [f64]>,
    exponents: EndpointExponents,
    /// Total mass by independent quadrature.
    mass: f64,
    l: f64,
    r: f64,
    grid_points: usize,
}

pub fn density(c: &DensityConfig, out: &mut Outputs) -> Result<Checked, CliError> {
    let d = build_density(&c.p, c.l, c.r, c.form)?;
    grid_csv(out, &d, c.grid_points)?;
    let pw = d.as_piecewise();
    out.json(
        "density.json",
        &DensityMeta {
            form: d.form(),
            normalization: d.normalization(),
            constants: pw.map(|p| p.constants()),
            masses: pw.map(|p| p.masses()),
            exponents: d.exponents(),
            mass: quadrature_mass(&d)?,
            l: c.l,
            r: c.r,
            grid_points: c.grid_points,
        },
    )?;
    Ok(Ok(()))
}

pub fn simulate_cmd(c: &SimulateConfig, seed: u64, out: &mut Outputs) -> Result<Checked, CliError> {
    let path = simulate(&c.chain, c.n_steps, seed)?;
    out.write_with("trajectory.csv", |w| path.write_csv(w))?;
    Ok(Ok(()))
}

#[derive(Serialize)]
struct OracleReport {
    cells: usize,
    iterations: usize,
    /// Sup-norm distance between cell averages of the density and the oracle.
    sup_distance: f64,
    threshold: f64,
    passed: bool,
}

fn compare_oracle<D: betachain::analytic::Density>(
    spec: &ChainSpec,
    d: &D,
    cells: usize,
    threshold: f64,
    out: &mut Outputs,
) -> Result<OracleReport, CliError> {
    let oracle = kernel_oracle(spec, cells)?;
    out.write_with("oracle.csv", |w| oracle.write_csv(w))?;
    let sup = sup_distance(&cell_averages(d, cells)?, &oracle.cell_densities());
    Ok(OracleReport { cells, iterations: oracle.iterations, sup_distance: sup, threshold, passed: sup <= threshold })
}

#[derive(Serialize)]
struct VerifyReport {
    form: DensityForm,
    fit: FitReport,
    residual: ResidualReport,
    residual_threshold: f64,
    oracle: Option<OracleReport>,
    passed: bool,
}

fn beta_one_parameter(law: &ProportionLaw, side: &str) -> Result<f64, CliError> {
    match law {
        ProportionLaw::BetaOneZ { z } => Ok(*z),
        _ => Err(CliError::Config(format!(
            "verify needs beta_one_z proportion laws (closed-form density); the {side} law is {law:?}"
        ))),
    }
}

pub fn verify(c: &VerifyConfig, seed: u64, out: &mut Outputs) -> Result<Checked, CliError> {
    c.chain.validate()?;
    let l = beta_one_parameter(&c.chain.left, "left")?;
    let r = beta_one_parameter(&c.chain.right, "right")?;
    let d = build_density(&c.chain.p, l, r, c.form)?;
    grid_csv(out, &d, betachain::analytic::DEFAULT_GRID_POINTS)?;
    let options = FitOptions {
        n_steps: c.n_steps,
        burn_in: c.burn_in,
        bins: c.bins,
        ks_threshold: c.ks_threshold,
        tv_threshold: c.tv_threshold,
    };
    let fit = mc_fit(&c.chain, &d, &options, seed)?;
    let residual = residual_ie(&d, &c.chain)?;
    let oracle = c
        .oracle_cells
        .map(|cells| compare_oracle(&c.chain, &d, cells, c.oracle_threshold, out))
        .transpose()?;
    let mut failures = Vec::new();
    if !fit.passed {
        failures.push(format!("KS {} / TV {} above {} / {}", fit.ks, fit.tv, fit.ks_threshold, fit.tv_threshold));
    }
    if residual.residual > c.residual_threshold {
        failures.push(format!("residual {} above {}", residual.residual, c.residual_threshold));
    }
    if let Some(o) = oracle.as_ref().filter(|o| !o.passed) {
        failures.push(format!("oracle distance {} above {}", o.sup_distance, o.threshold));
    }
    let report = VerifyReport {
        form: d.form(),
        fit,
        residual,
        residual_threshold: c.residual_threshold,
        oracle,
        passed: failures.is_empty(),
    };
    out.json("verify.json", &report)?;
    Ok(if failures.is_empty() { Ok(()) } else { Err(failures.join("; ")) })
}

#[derive(Serialize)]
struct BvpReport {
    diagnostics: BvpDiagnostics,
    oracle: Option<OracleReport>,
    passed: bool,
}

pub fn bvp(c: &BvpConfig, out: &mut Outputs) -> Result<Checked, CliError> {
    let k = factorize(&c.p, &c.left, &c.right)?;
    let options = BvpOptions { eps: c.eps, grid_points: c.grid_points, ..BvpOptions::default() };
    let sol = solve_bvp_with(&k, &options)?;
    out.write_with("bvp.csv", |w| sol.write_csv(w))?;
    let diagnostics = sol.diagnostics()?;
    let oracle = match c.oracle_cells {
        Some(cells) => {
            let spec = ChainSpec::new(c.p.clone(), c.left.clone(), c.right.clone(), 0.5)?;
            Some(compare_oracle(&spec, &sol, cells, c.oracle_threshold, out)?)
        }
        None => None,
    };
    let mut failures = Vec::new();
    if !diagnostics.passed {
        failures.push("BVP diagnostics above tolerance".to_string());
    }
    if let Some(o) = oracle.as_ref().filter(|o| !o.passed) {
        failures.push(format!("oracle distance {} above {}", o.sup_distance, o.threshold));
    }
    let report = BvpReport { diagnostics, oracle, passed: failures.is_empty() };
    out.json("diagnostics.json", &report)?;
    Ok(if failures.is_empty() { Ok(()) } else { Err(failures.join("; ")) })
}

#[derive(Serialize)]
struct CoverageReport<'a> {
    #[serde(flatten)]
    result: &'a CoverageResult,
    tv_threshold: f64,
    passed: bool,
}

pub fn coverage(c: &CoverageConfig, seed: u64, out: &mut Outputs) -> Result<Checked, CliError> {
    let result = run_coverage(&c.robot, c.n_steps, seed)?;
    out.write_with("occupancy.csv", |w| result.write_counts_csv(w))?;
    let passed = result.product_tv <= c.tv_threshold;
    out.json("coverage.json", &CoverageReport { result: &result, tv_threshold: c.tv_threshold, passed })?;
    Ok(if passed {
        Ok(())
    } else {
        Err(format!("TV to product of marginals {} above {}", result.product_tv, c.tv_threshold))
    })
}

pub fn search(c: &SearchConfig, seed: u64, out: &mut Outputs) -> Result<Checked, CliError> {
    let result = search_run(&c.search, seed)?;
    out.write_with("trace.csv", |w| result.write_trace_csv(w))?;
    out.json("search.json", &result)?;
    Ok(Ok(()))
}
