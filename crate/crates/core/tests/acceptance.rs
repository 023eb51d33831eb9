//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.
//!
//! Every random quantity uses a pinned seed, so the report is reproducible
//! run to run; only the wall-clock timings vary.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use betachain::analytic::{stationary_density_general, stationary_density_piecewise, Density, DensityFunction};
use betachain::apps::{run_coverage, search_run, CoverageSpec, Objective, Schedule, SearchSpec};
use betachain::semidegenerate::{factorize, solve_bvp};
use betachain::special::ln_beta;
use betachain::verify::{cell_averages, kernel_oracle, mc_fit, residual_ie, sup_distance, FitOptions};
use betachain::{check_e1_default, ChainSpec, DirectionFunction, PiecewiseConstant, ProportionLaw, UnitPoint};

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = fn() -> Vec<Outcome>;

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b).unwrap()).exp()
}

fn interior(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| i as f64 / (n + 1) as f64)
}

/// Closed-form density against the β(a, b) density, then an MC fit.
fn beta_case(p: DirectionFunction, z: f64, a: f64, b: f64, seed: u64) -> Outcome {
    let start = Instant::now();
    let d = stationary_density_general(&p, z, z).unwrap();
    let rel = interior(1000)
        .map(|x| (d.pdf(x) / beta_pdf(x, a, b) - 1.0).abs())
        .fold(0.0, f64::max);
    let spec = ChainSpec::beta_one(p, z, z, 0.5).unwrap();
    let fit = mc_fit(&spec, &d, &FitOptions::default(), seed).unwrap();
    let elapsed = start.elapsed();
    outcome(
        rel <= 1e-10 && fit.ks <= 0.01 && elapsed < Duration::from_secs(30),
        format!("max rel err {rel:.2e}, KS {:.4} (seed {seed}), {elapsed:.2?}", fit.ks),
    )
}

fn criterion_1() -> Vec<Outcome> {
    [1.0, 2.0, 5.0]
        .iter()
        .map(|&z| {
            let mut o = beta_case(DirectionFunction::identity(), z, z, z, 1000 + z as u64);
            o.detail = format!("z = {z}: {}", o.detail);
            o
        })
        .collect()
}

fn criterion_2() -> Vec<Outcome> {
    [(0.5, 1.0, 2.0), (0.8, 0.3, 4.0)]
        .iter()
        .map(|&(b, c, z)| {
            let p = DirectionFunction::linear(b, c).unwrap();
            let mut o = beta_case(p, z, b * z, c * z, 2000 + z as u64);
            o.detail = format!("(b, c, z) = ({b}, {c}, {z}): {}", o.detail);
            o
        })
        .collect()
}

fn criterion_3() -> Vec<Outcome> {
    let pc = PiecewiseConstant::with_interior(&[0.5], vec![0.0, 1.0]).unwrap();
    let d = stationary_density_piecewise(&pc, 1.0).unwrap();
    let target = 1.0 / (2.0 * std::f64::consts::LN_2);
    let c = d.constants();
    let const_err = c.iter().map(|v| (v - target).abs()).fold(0.0, f64::max);
    let spec = ChainSpec::beta_one(DirectionFunction::PiecewiseConstant(pc), 1.0, 1.0, 0.5).unwrap();
    let res = residual_ie(&d, &spec).unwrap();
    vec![outcome(
        c.len() == 2 && const_err <= 1e-12 && res.residual <= 1e-6,
        format!("C = {c:?}, |C - 1/(2 ln 2)| = {const_err:.1e}, residual {:.2e}", res.residual),
    )]
}

fn criterion_4() -> Vec<Outcome> {
    let law = ProportionLaw::BetaOneZ { z: 2.0 };
    let k = factorize(&DirectionFunction::identity(), &law, &law).unwrap();
    let sol = solve_bvp(&k).unwrap();
    let exact = stationary_density_general(&DirectionFunction::identity(), 2.0, 2.0).unwrap();
    let sup = (0..=9800)
        .map(|i| 0.01 + i as f64 * 1e-4)
        .map(|y| (sol.u_at(UnitPoint::new(y)) - exact.pdf(y)).abs())
        .fold(0.0, f64::max);
    let (alpha, beta) = (sol.alpha(0), sol.beta(0));
    let first_integral = sol
        .grid()
        .iter()
        .enumerate()
        .map(|(i, y)| (alpha[i] * (1.0 - y).powi(2) - beta[i] * y * y).abs())
        .fold(0.0, f64::max);
    vec![outcome(
        sup <= 1e-6 && first_integral <= 1e-7,
        format!("sup |u - π| on [0.01, 0.99] = {sup:.2e}, first-integral defect {first_integral:.2e}"),
    )]
}

fn criterion_5() -> Vec<Outcome> {
    let start = Instant::now();
    let law = ProportionLaw::BetaIntFirst { a: 2, b: 2.0 };
    let p = DirectionFunction::identity();
    let k = factorize(&p, &law, &law).unwrap();
    let sol = solve_bvp(&k).unwrap();
    let spec = ChainSpec::new(p, law.clone(), law, 0.5).unwrap();
    let oracle = kernel_oracle(&spec, 2000).unwrap();
    let dist = sup_distance(&cell_averages(&sol, 2000).unwrap(), &oracle.cell_densities());
    let elapsed = start.elapsed();
    vec![outcome(
        dist <= 2e-3 && elapsed < Duration::from_secs(120),
        format!("sup cell-average distance {dist:.2e} ({} oracle iterations), {elapsed:.2?}", oracle.iterations),
    )]
}

fn criterion_6() -> Vec<Outcome> {
    let mut out = Vec::new();
    let two = PiecewiseConstant::with_interior(&[0.5], vec![0.0, 1.0]).unwrap();
    let n = 10_000;
    let h = 1.0 / (n + 1) as f64;
    for z in [2.0, 5.0, 10.0] {
        let d = stationary_density_piecewise(&two, z).unwrap();
        let (argmax, _) = interior(n).fold((0.0, f64::NEG_INFINITY), |(bx, bv), x| {
            let v = d.pdf(x);
            if v > bv {
                (x, v)
            } else {
                (bx, bv)
            }
        });
        out.push(outcome(
            (argmax - 0.5).abs() <= h,
            format!("two pieces, z = {z}: argmax {argmax:.6} on a {n}-point grid"),
        ));
    }
    let interior_s: Vec<f64> = (1..6).map(|i| i as f64 / 6.0).collect();
    let six = PiecewiseConstant::with_interior(&interior_s, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
    let d = stationary_density_piecewise(&six, 3.0).unwrap();
    let values: Vec<f64> = interior(2001).map(|x| d.pdf(x)).collect();
    let maxima = values.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count();
    out.push(outcome(
        maxima == 3,
        format!("six pieces, z = 3: {maxima} interior local maxima on a 2001-point grid"),
    ));
    out
}

fn criterion_7() -> Vec<Outcome> {
    let start = Instant::now();
    let spec = CoverageSpec {
        room: [1.0, 1.0],
        p: [DirectionFunction::indicator(0.2).unwrap(), DirectionFunction::indicator(0.5).unwrap()],
        left: [3.0, 3.0],
        right: [3.0, 3.0],
        start: [0.5, 0.5],
        grid: [50, 50],
    };
    let r = run_coverage(&spec, 1_000_000, 7).unwrap();
    let elapsed = start.elapsed();
    let mode_ok = r.argmax_contains(spec.room, [0.2, 0.5]);
    vec![outcome(
        mode_ok && r.product_tv <= 0.05 && elapsed < Duration::from_secs(60),
        format!(
            "argmax cell {:?} (contains (0.2, 0.5): {mode_ok}), TV to product {:.4}, {elapsed:.2?}",
            r.argmax_cell, r.product_tv
        ),
    )]
}

fn criterion_8() -> Vec<Outcome> {
    let spec = SearchSpec {
        objective: Objective::NegativeL1 { target: vec![0.7] },
        v: 0.0,
        schedule: Schedule::Linear { z0: 1.0, slope: 1.0 },
        start: vec![0.5],
        max_steps: Some(2000),
        max_travel: None,
    };
    let mut hits = 0;
    let mut monotone = true;
    for seed in 0..100 {
        let r = search_run(&spec, seed).unwrap();
        if (r.best_point[0] - 0.7).abs() <= 0.05 {
            hits += 1;
        }
        monotone &= r.trace.windows(2).all(|w| w[1].best_value >= w[0].best_value);
    }
    vec![outcome(
        hits >= 95 && monotone,
        format!("{hits}/100 seeds within 0.05 of 0.7, best value monotone on every run: {monotone}"),
    )]
}

fn criterion_9() -> Vec<Outcome> {
    let e1 = check_e1_default(&DirectionFunction::constant(1.0).unwrap()).unwrap();
    let wrong = DensityFunction::beta(3.0, 3.0).unwrap();
    let spec = ChainSpec::beta_one(DirectionFunction::constant(0.5).unwrap(), 1.0, 1.0, 0.5).unwrap();
    let res = residual_ie(&wrong, &spec).unwrap();
    vec![
        outcome(!e1.satisfied, format!("p ≡ 1: E1 satisfied = {}", e1.satisfied)),
        outcome(
            res.residual >= 0.1,
            format!("β(3,3) against p ≡ 1/2, l = r = 1: residual {:.3}", res.residual),
        ),
    ]
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("identity direction gives β(z, z)", criterion_1),
        ("linear direction gives β(bz, cz)", criterion_2),
        ("two-piece indicator constants and residual", criterion_3),
        ("BVP reproduces the closed form", criterion_4),
        ("BVP agrees with the kernel oracle", criterion_5),
        ("density shapes for piecewise directions", criterion_6),
        ("coverage robot", criterion_7),
        ("random search", criterion_8),
        ("negative controls", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcomes = run();
        let passed = outcomes.iter().all(|o| o.passed);
        if !passed {
            failures += 1;
        }
        println!("criterion {} ({name}): {}", i + 1, if passed { "PASS" } else { "FAIL" });
        for o in &outcomes {
            println!("    [{}] {}", if o.passed { "ok" } else { "fail" }, o.detail);
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
