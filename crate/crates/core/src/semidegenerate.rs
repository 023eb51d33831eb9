//! Semidegenerate kernels and the two-point boundary value problem for the
//! stationary density.
//!
//! A kernel is semidegenerate when `f(x, y) = Σ aᵢ(y) bᵢ(x)` for `x < y` and
//! `f(x, y) = Σ cⱼ(y) dⱼ(x)` for `y < x`. The stationary density then reads
//! `u = Σ aᵢ αᵢ + Σ cⱼ βⱼ` with `αᵢ' = bᵢ u`, `βⱼ' = -dⱼ u`, `αᵢ(0+) = 0` and
//! `βⱼ(1-) = 0`.
//!
//! The solver shoots from both ends. From `y = ε` the β-values are free and
//! the α-values follow from the local power law `u ~ y^e0`; from `y = 1-ε`
//! the α-values are free and the β-values follow from `u ~ (1-y)^e1`. The two
//! families are matched at `y = 1/2` through the null vector of an
//! `(N+M) × (N+M)` matrix, found by singular-value decomposition.

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::analytic::{Density, EndpointExponents};
use crate::direction::{require_e1, DirectionFunction};
use crate::error::{Error, Result};
use crate::law::{transition_density, ProportionLaw};
use crate::ode::{integrate, OdeTolerance};
use crate::point::UnitPoint;
use crate::quad::{integrate_unit, integrate_unit_split, EndpointPowers, Tolerance};
use crate::special::beta_fn;

/// `coef · x^x_pow · (1-x)^xc_pow`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monomial {
    pub coef: f64,
    pub x_pow: f64,
    pub xc_pow: f64,
}

impl Monomial {
    pub fn eval(&self, x: UnitPoint) -> f64 {
        let mut v = self.coef;
        if self.x_pow != 0.0 {
            v *= x.x.powf(self.x_pow);
        }
        if self.xc_pow != 0.0 {
            v *= x.xc.powf(self.xc_pow);
        }
        v
    }
}

/// One separated product. For right jumps `a(y) = outer(y)` and
/// `b(x) = inner(x)(1 - p(x))`; for left jumps `c(y) = outer(y)` and
/// `d(x) = inner(x) p(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparableTerm {
    pub outer: Monomial,
    pub inner: Monomial,
}

/// The factors `{aᵢ, bᵢ}` (N terms) and `{cⱼ, dⱼ}` (M terms) of a
/// semidegenerate transition kernel, with the jump set `S` of `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFactorization {
    p: DirectionFunction,
    left: ProportionLaw,
    right: ProportionLaw,
    right_terms: Vec<SeparableTerm>,
    left_terms: Vec<SeparableTerm>,
    discontinuities: Vec<f64>,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn sign(k: u32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// β(r₁, r₂) right proportions: `(y-x)^(r₁-1)` expanded binomially.
fn right_beta_terms(r1: u32, r2: f64) -> Result<Vec<SeparableTerm>> {
    let norm = 1.0 / beta_fn(r1 as f64, r2)?;
    Ok((0..r1)
        .map(|i| SeparableTerm {
            outer: Monomial { coef: norm, x_pow: i as f64, xc_pow: r2 - 1.0 },
            inner: Monomial {
                coef: binomial(r1 - 1, i) * sign(r1 - 1 - i),
                x_pow: (r1 - 1 - i) as f64,
                xc_pow: -(r1 as f64 + r2 - 1.0),
            },
        })
        .collect())
}

/// β(l₁, l₂) left proportions: `(x-y)^(l₁-1)` expanded binomially.
fn left_beta_terms(l1: u32, l2: f64) -> Result<Vec<SeparableTerm>> {
    let norm = 1.0 / beta_fn(l1 as f64, l2)?;
    Ok((0..l1)
        .map(|j| SeparableTerm {
            outer: Monomial { coef: norm * sign(j), x_pow: j as f64 + l2 - 1.0, xc_pow: 0.0 },
            inner: Monomial {
                coef: binomial(l1 - 1, j),
                x_pow: -(j as f64) - l2,
                xc_pow: 0.0,
            },
        })
        .collect())
}

fn right_mixture_terms(law: &ProportionLaw) -> Vec<SeparableTerm> {
    mixture_terms(law)
        .into_iter()
        .map(|(w, r)| SeparableTerm {
            outer: Monomial { coef: w, x_pow: 0.0, xc_pow: r - 1.0 },
            inner: Monomial { coef: 1.0, x_pow: 0.0, xc_pow: -r },
        })
        .collect()
}

fn left_mixture_terms(law: &ProportionLaw) -> Vec<SeparableTerm> {
    mixture_terms(law)
        .into_iter()
        .map(|(w, l)| SeparableTerm {
            outer: Monomial { coef: w, x_pow: l - 1.0, xc_pow: 0.0 },
            inner: Monomial { coef: 1.0, x_pow: -l, xc_pow: 0.0 },
        })
        .collect()
}

fn mixture_terms(law: &ProportionLaw) -> Vec<(f64, f64)> {
    match law {
        ProportionLaw::Mixture { terms } => terms.iter().map(|t| (t.weight, t.exponent)).collect(),
        ProportionLaw::BetaOneZ { z } | ProportionLaw::BetaIntFirst { a: 1, b: z } => vec![(*z, *z)],
        ProportionLaw::BetaIntFirst { .. } => unreachable!("checked by the caller"),
    }
}

fn beta_parameters(law: &ProportionLaw, side: &str) -> Result<(u32, f64)> {
    match law.canonical() {
        ProportionLaw::BetaIntFirst { a, b } => Ok((a, b)),
        other => Err(Error::Unsupported(format!(
            "{side} law {other:?} is not a beta law with an integer first parameter"
        ))),
    }
}

fn is_mixture_type(law: &ProportionLaw) -> bool {
    matches!(law, ProportionLaw::Mixture { .. }) || law.as_beta_one().is_some()
}

fn prepare(p: &DirectionFunction, left: &ProportionLaw, right: &ProportionLaw) -> Result<()> {
    p.validate()?;
    left.validate()?;
    right.validate()?;
    require_e1(p)?;
    Ok(())
}

/// Factors for β(l₁, l₂) left and β(r₁, r₂) right proportions with integer
/// `l₁, r₁`: `N = r₁` and `M = l₁` terms.
pub fn factorize_beta_kernel(
    p: &DirectionFunction,
    left: &ProportionLaw,
    right: &ProportionLaw,
) -> Result<KernelFactorization> {
    prepare(p, left, right)?;
    let (l1, l2) = beta_parameters(left, "left")?;
    let (r1, r2) = beta_parameters(right, "right")?;
    Ok(KernelFactorization {
        p: p.clone(),
        left: left.clone(),
        right: right.clone(),
        right_terms: right_beta_terms(r1, r2)?,
        left_terms: left_beta_terms(l1, l2)?,
        discontinuities: p.discontinuities(),
    })
}

/// Factors for finite-mixture proportion densities `Σ λᵢ (1-u)^(rᵢ-1)`
/// (right) and `Σ μⱼ (1-u)^(lⱼ-1)` (left); β(1, z) counts as the one-term
/// mixture `(z, z)`.
pub fn factorize_mixture_kernel(
    p: &DirectionFunction,
    left: &ProportionLaw,
    right: &ProportionLaw,
) -> Result<KernelFactorization> {
    prepare(p, left, right)?;
    for (law, side) in [(left, "left"), (right, "right")] {
        if !is_mixture_type(law) {
            return Err(Error::Unsupported(format!("{side} law {law:?} is not a mixture")));
        }
    }
    Ok(KernelFactorization {
        p: p.clone(),
        left: left.clone(),
        right: right.clone(),
        right_terms: right_mixture_terms(right),
        left_terms: left_mixture_terms(left),
        discontinuities: p.discontinuities(),
    })
}

/// Factorizes each side by its own law: beta laws by binomial expansion,
/// mixtures term by term.
pub fn factorize(p: &DirectionFunction, left: &ProportionLaw, right: &ProportionLaw) -> Result<KernelFactorization> {
    prepare(p, left, right)?;
    let side_is_beta = |law: &ProportionLaw| matches!(law.canonical(), ProportionLaw::BetaIntFirst { .. });
    let right_terms = if side_is_beta(right) {
        let (r1, r2) = beta_parameters(right, "right")?;
        right_beta_terms(r1, r2)?
    } else {
        right_mixture_terms(right)
    };
    let left_terms = if side_is_beta(left) {
        let (l1, l2) = beta_parameters(left, "left")?;
        left_beta_terms(l1, l2)?
    } else {
        left_mixture_terms(left)
    };
    Ok(KernelFactorization {
        p: p.clone(),
        left: left.clone(),
        right: right.clone(),
        right_terms,
        left_terms,
        discontinuities: p.discontinuities(),
    })
}

impl KernelFactorization {
    /// Number of right-jump terms.
    pub fn n(&self) -> usize {
        self.right_terms.len()
    }

    /// Number of left-jump terms.
    pub fn m(&self) -> usize {
        self.left_terms.len()
    }

    /// The jump set `S` of `p`.
    pub fn discontinuities(&self) -> &[f64] {
        &self.discontinuities
    }

    pub fn direction(&self) -> &DirectionFunction {
        &self.p
    }

    pub fn left_law(&self) -> &ProportionLaw {
        &self.left
    }

    pub fn right_law(&self) -> &ProportionLaw {
        &self.right
    }

    pub fn right_terms(&self) -> &[SeparableTerm] {
        &self.right_terms
    }

    pub fn left_terms(&self) -> &[SeparableTerm] {
        &self.left_terms
    }

    pub fn a(&self, i: usize, y: UnitPoint) -> f64 {
        self.right_terms[i].outer.eval(y)
    }

    pub fn b(&self, i: usize, x: UnitPoint) -> f64 {
        self.right_terms[i].inner.eval(x) * (1.0 - self.p.value(x.x))
    }

    pub fn c(&self, j: usize, y: UnitPoint) -> f64 {
        self.left_terms[j].outer.eval(y)
    }

    pub fn d(&self, j: usize, x: UnitPoint) -> f64 {
        self.left_terms[j].inner.eval(x) * self.p.value(x.x)
    }

    /// The kernel rebuilt from its factors.
    pub fn kernel(&self, x: UnitPoint, y: UnitPoint) -> f64 {
        if x.x < y.x {
            (0..self.n()).map(|i| self.a(i, y) * self.b(i, x)).sum()
        } else if y.x < x.x {
            (0..self.m()).map(|j| self.c(j, y) * self.d(j, x)).sum()
        } else {
            0.0
        }
    }

    /// Largest relative difference between the rebuilt and the direct
    /// kernel on the off-diagonal points of an `n × n` midpoint grid.
    pub fn reconstruction_error(&self, n: usize) -> f64 {
        let pts: Vec<UnitPoint> = (0..n).map(|k| UnitPoint::new((k as f64 + 0.5) / n as f64)).collect();
        let mut worst: f64 = 0.0;
        for x in &pts {
            for y in &pts {
                if x.x == y.x {
                    continue;
                }
                let direct = transition_density(&self.p, &self.left, &self.right, *x, *y);
                let rebuilt = self.kernel(*x, *y);
                let err = (rebuilt - direct).abs() / direct.abs().max(f64::MIN_POSITIVE);
                if direct == 0.0 && rebuilt.abs() < 1e-300 {
                    continue;
                }
                worst = worst.max(err);
            }
        }
        worst
    }

    /// `∫₀¹ f(x, y) dy` by quadrature of the rebuilt kernel.
    pub fn row_mass(&self, x: f64) -> Result<f64> {
        let xp = UnitPoint::new(x);
        let tol = Tolerance::new(1e-13, 1e-11);
        let below = integrate_unit(
            |y| self.kernel(xp, y),
            UnitPoint::new(0.0),
            xp,
            EndpointPowers { at_zero: Some(self.left.tail_exponent()), at_one: None },
            tol,
        )?;
        let above = integrate_unit(
            |y| self.kernel(xp, y),
            xp,
            UnitPoint::from_complement(0.0),
            EndpointPowers { at_zero: None, at_one: Some(self.right.tail_exponent()) },
            tol,
        )?;
        Ok(below.value + above.value)
    }

    /// Local power exponents of the stationary density at 0 and at 1.
    ///
    /// Near 0 the density behaves like `y^e` with `p(0+) E[(1-L)^(-e-1)] = 1`
    /// when `p(0+) > 0`, and like the left law's tail otherwise; the right
    /// end is mirrored with `1 - p(1-)` and the right law.
    pub fn endpoint_exponents(&self) -> EndpointExponents {
        EndpointExponents {
            at_zero: local_exponent(self.p.at_zero(), &self.left),
            at_one: local_exponent(1.0 - self.p.at_one(), &self.right),
        }
    }
}

fn local_exponent(jump_prob: f64, law: &ProportionLaw) -> f64 {
    let tail = law.tail_exponent();
    if jump_prob <= 0.0 {
        return tail;
    }
    let g = |e: f64| jump_prob * law.complement_moment(-e - 1.0) - 1.0;
    let (mut lo, mut hi) = (-1.0, tail);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Numerical settings of [`solve_bvp_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BvpOptions {
    /// Endpoint offset ε.
    pub eps: f64,
    /// Number of points of the uniform output grid on `[ε, 1-ε]`.
    pub grid_points: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Largest accepted `σ_min / σ_next`.
    pub max_sigma_ratio: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            grid_points: 2001,
            rtol: 1e-10,
            atol: 1e-12,
            max_sigma_ratio: 1e-6,
        }
    }
}

const MATCH_POINT: f64 = 0.5;
/// Geometric nodes per decade between ε and the first uniform grid node.
const NODES_PER_DECADE: f64 = 8.0;

/// A normalized solution of the boundary value problem.
#[derive(Debug, Clone)]
pub struct BvpSolution {
    k: KernelFactorization,
    options: BvpOptions,
    exponents: EndpointExponents,
    /// All integration nodes in increasing order.
    nodes: Vec<f64>,
    /// `(α₁..α_N, β₁..β_M)` at each node.
    states: Vec<Vec<f64>>,
    /// Positions of the uniform output grid within `nodes`.
    grid: Vec<usize>,
    singular_values: Vec<f64>,
    matching_residual: f64,
}

/// Solves the boundary value problem with default options.
pub fn solve_bvp(k: &KernelFactorization) -> Result<BvpSolution> {
    solve_bvp_with(k, &BvpOptions::default())
}

/// p on the closed node interval `[lo, hi]`: one-sided limits at the ends.
fn p_on(p: &DirectionFunction, lo: f64, hi: f64, t: f64) -> f64 {
    if t <= lo {
        p.right_limit(lo)
    } else if t >= hi {
        p.left_limit(hi)
    } else {
        p.value(t)
    }
}

impl KernelFactorization {
    /// Right-hand side for `cols` stacked columns of `(α, β, w)` with
    /// `w' = u`, at `y` with direction value `pv`.
    fn rhs(&self, y: f64, pv: f64, cols: usize, state: &[f64], out: &mut [f64]) {
        let (n, m) = (self.n(), self.m());
        let dim = n + m + 1;
        let pt = UnitPoint::new(y);
        let mut coef = [0.0f64; 64];
        let (a, rest) = coef.split_at_mut(n);
        let (c, rest) = rest.split_at_mut(m);
        let (b, d) = rest.split_at_mut(n);
        for i in 0..n {
            a[i] = self.right_terms[i].outer.eval(pt);
            b[i] = self.right_terms[i].inner.eval(pt) * (1.0 - pv);
        }
        for j in 0..m {
            c[j] = self.left_terms[j].outer.eval(pt);
            d[j] = self.left_terms[j].inner.eval(pt) * pv;
        }
        for col in 0..cols {
            let s = &state[col * dim..(col + 1) * dim];
            let o = &mut out[col * dim..(col + 1) * dim];
            let u: f64 = (0..n).map(|i| a[i] * s[i]).sum::<f64>() + (0..m).map(|j| c[j] * s[n + j]).sum::<f64>();
            for i in 0..n {
                o[i] = b[i] * u;
            }
            for j in 0..m {
                o[n + j] = -d[j] * u;
            }
            o[n + m] = u;
        }
    }

    /// `u` from `(α, β)` at `y`.
    fn u_from(&self, y: UnitPoint, s: &[f64]) -> f64 {
        let n = self.n();
        (0..n).map(|i| self.a(i, y) * s[i]).sum::<f64>()
            + (0..self.m()).map(|j| self.c(j, y) * s[n + j]).sum::<f64>()
    }
}

/// Integrates `cols` stacked columns through `nodes` (in the given order)
/// and returns the state at every node.
fn shoot(
    k: &KernelFactorization,
    nodes: &[f64],
    init: Vec<f64>,
    cols: usize,
    tol: OdeTolerance,
) -> Result<Vec<Vec<f64>>> {
    let mut y = init;
    let mut out = Vec::with_capacity(nodes.len());
    out.push(y.clone());
    let mut h = 0.0;
    for w in nodes.windows(2) {
        let (lo, hi) = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
        let f = |t: f64, s: &[f64], o: &mut [f64]| k.rhs(t, p_on(&k.p, lo, hi, t), cols, s, o);
        integrate(&f, w[0], w[1], &mut y, &mut h, tol)?;
        out.push(y.clone());
    }
    Ok(out)
}

fn uniform_grid(eps: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| eps + k as f64 * (1.0 - 2.0 * eps) / (n - 1) as f64).collect()
}

/// Solves the boundary value problem for the factorized kernel.
pub fn solve_bvp_with(k: &KernelFactorization, options: &BvpOptions) -> Result<BvpSolution> {
    let (n, m) = (k.n(), k.m());
    if n + m + 1 > 21 {
        return Err(Error::Unsupported(format!("N + M = {} exceeds 20 terms", n + m)));
    }
    if options.grid_points < 3 || !(options.eps > 0.0 && options.eps < 0.01) {
        return Err(Error::Domain(format!("invalid BVP options {options:?}")));
    }
    let dim = n + m + 1;
    let eps = options.eps;
    let exps = k.endpoint_exponents();
    let tol = OdeTolerance { rtol: options.rtol, atol: options.atol };

    // node set: uniform grid, geometric refinement at both ends, S and the matching point
    let grid_values = uniform_grid(eps, options.grid_points);
    let spacing = grid_values[1] - grid_values[0];
    let mut nodes = grid_values.clone();
    let mut g = 1;
    loop {
        let off = eps * 10f64.powf(g as f64 / NODES_PER_DECADE);
        if off >= eps + spacing {
            break;
        }
        nodes.push(off);
        nodes.push(1.0 - off);
        g += 1;
    }
    nodes.extend(k.discontinuities.iter().copied().filter(|&s| s > eps && s < 1.0 - eps));
    nodes.push(MATCH_POINT);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mid = nodes.iter().position(|&y| y == MATCH_POINT).expect("inserted above");
    let left_nodes = &nodes[..=mid];
    let right_nodes: Vec<f64> = nodes[mid..].iter().rev().copied().collect();

    // left family: β(ε) = e_j, α(ε) = K u(ε), w(ε) = ε u(ε)/(e0+1)
    let y0 = UnitPoint::new(eps);
    let p0 = k.p.value(eps);
    let kl: Vec<f64> = (0..n)
        .map(|i| eps * k.right_terms[i].inner.eval(y0) * (1.0 - p0) / (exps.at_zero + k.right_terms[i].inner.x_pow + 1.0))
        .collect();
    let a_dot_k: f64 = (0..n).map(|i| k.a(i, y0) * kl[i]).sum();
    let mut left_init = vec![0.0; m * dim];
    for j in 0..m {
        let col = &mut left_init[j * dim..(j + 1) * dim];
        col[n + j] = 1.0;
        let u = k.c(j, y0) / (1.0 - a_dot_k);
        for i in 0..n {
            col[i] = kl[i] * u;
        }
        col[n + m] = eps * u / (exps.at_zero + 1.0);
    }

    // right family: α(1-ε) = e_i, β(1-ε) = K' u(1-ε), w(1-ε) = -ε u/(e1+1)
    let y1 = UnitPoint::new(1.0 - eps);
    let p1 = k.p.value(1.0 - eps);
    let kr: Vec<f64> = (0..m)
        .map(|j| eps * k.left_terms[j].inner.eval(y1) * p1 / (exps.at_one + k.left_terms[j].inner.xc_pow + 1.0))
        .collect();
    let c_dot_k: f64 = (0..m).map(|j| k.c(j, y1) * kr[j]).sum();
    let mut right_init = vec![0.0; n * dim];
    for i in 0..n {
        let col = &mut right_init[i * dim..(i + 1) * dim];
        col[i] = 1.0;
        let u = k.a(i, y1) / (1.0 - c_dot_k);
        for j in 0..m {
            col[n + j] = kr[j] * u;
        }
        col[n + m] = -eps * u / (exps.at_one + 1.0);
    }

    let (left_states, right_states) = rayon::join(
        || shoot(k, left_nodes, left_init, m, tol),
        || shoot(k, &right_nodes, right_init, n, tol),
    );
    let left_states = left_states?;
    let right_states = right_states?;

    // matching at the middle: [Z_L | -Z_R] c = 0 on the (α, β) components
    let zl = left_states.last().expect("nonempty");
    let zr = right_states.last().expect("nonempty");
    let size = n + m;
    let cols = m + n;
    let mut z = DMatrix::<f64>::zeros(size, cols);
    for row in 0..size {
        for j in 0..m {
            z[(row, j)] = zl[j * dim + row];
        }
        for i in 0..n {
            z[(row, m + i)] = -zr[i * dim + row];
        }
    }
    let scales: Vec<f64> = (0..cols).map(|c| z.column(c).norm()).collect();
    for (c, s) in scales.iter().enumerate() {
        if !(*s > 0.0 && s.is_finite()) {
            return Err(Error::Numeric(format!("shooting column {c} has norm {s}")));
        }
        z.column_mut(c).scale_mut(1.0 / s);
    }
    let svd = z.clone().svd(true, true);
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let s_min = singular_values[cols - 1];
    let s_next = singular_values[cols - 2];
    if !(s_min <= options.max_sigma_ratio * s_next) {
        return Err(Error::NoNullVector {
            reason: format!("σ_min/σ_next = {} exceeds {}", s_min / s_next, options.max_sigma_ratio),
            singular_values,
        });
    }
    let v_t = svd.v_t.expect("requested");
    let null = v_t.row(order[cols - 1]);
    let coef: Vec<f64> = (0..cols).map(|c| null[c] / scales[c]).collect();
    let residual_vec = &z * nalgebra::DVector::from_iterator(cols, null.iter().copied());
    let matching_residual = residual_vec.norm();

    let combine = |states: &[f64], offset: usize, count: usize| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for c in 0..count {
            for q in 0..dim {
                out[q] += coef[offset + c] * states[c * dim + q];
            }
        }
        out
    };
    let mut combined: Vec<Vec<f64>> = left_states.iter().map(|s| combine(s, 0, m)).collect();
    let right_combined: Vec<Vec<f64>> = right_states.iter().rev().map(|s| combine(s, m, n)).collect();
    let mass = combined[mid][n + m] - right_combined[0][n + m];
    // average the two matched states at the middle
    for q in 0..dim {
        combined[mid][q] = 0.5 * (combined[mid][q] + right_combined[0][q]);
    }
    combined.extend(right_combined.into_iter().skip(1));
    if !(mass.abs() > 0.0 && mass.is_finite()) {
        return Err(Error::Numeric(format!("BVP solution has mass {mass}")));
    }
    let states: Vec<Vec<f64>> = combined
        .into_iter()
        .map(|s| s[..n + m].iter().map(|v| v / mass).collect())
        .collect();

    let grid: Vec<usize> = grid_values
        .iter()
        .map(|g| nodes.binary_search_by(|y| y.total_cmp(g)).expect("grid values are nodes"))
        .collect();
    let sol = BvpSolution {
        k: k.clone(),
        options: *options,
        exponents: exps,
        nodes,
        states,
        grid,
        singular_values,
        matching_residual,
    };
    let min_u = sol.min_u();
    if min_u < -1e-9 {
        return Err(Error::Numeric(format!("BVP solution is negative (min u = {min_u:e})")));
    }
    Ok(sol)
}

/// Checks of a [`BvpSolution`] against its defining equations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvpDiagnostics {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    /// All singular values of the matching matrix, decreasing.
    pub singular_values: Vec<f64>,
    pub sigma_ratio: f64,
    /// Norm of the matching-matrix residual at the null vector.
    pub matching_residual: f64,
    /// Largest `|αᵢ(0+)|`, `|βⱼ(1-)|` extrapolated from the end nodes.
    pub boundary_residual: f64,
    pub min_u: f64,
    /// `|∫u - 1|` by independent quadrature.
    pub mass_error: f64,
    /// Largest relative difference between α (β) and the quadrature of `b·u` (`d·u`).
    pub integral_form_defect: f64,
    /// Sup-norm of `u - (integral operator applied to u)` on the check grid.
    pub round_trip: f64,
    pub exponents: EndpointExponents,
    /// An endpoint exponent is below -0.95.
    pub low_confidence_exponents: bool,
    pub passed: bool,
}

/// Tolerances of [`BvpSolution::diagnostics`].
pub const BVP_BOUNDARY_TOL: f64 = 1e-8;
pub const BVP_MASS_TOL: f64 = 1e-6;
pub const BVP_INTEGRAL_FORM_TOL: f64 = 1e-6;
pub const BVP_ROUND_TRIP_TOL: f64 = 1e-5;
pub const LOW_CONFIDENCE_EXPONENT: f64 = -0.95;

impl BvpSolution {
    pub fn factorization(&self) -> &KernelFactorization {
        &self.k
    }

    /// The uniform output grid.
    pub fn grid(&self) -> Vec<f64> {
        self.grid.iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn alpha(&self, i: usize) -> Vec<f64> {
        self.grid.iter().map(|&g| self.states[g][i]).collect()
    }

    pub fn beta(&self, j: usize) -> Vec<f64> {
        self.grid.iter().map(|&g| self.states[g][self.k.n() + j]).collect()
    }

    /// `u` on the output grid.
    pub fn u(&self) -> Vec<f64> {
        self.grid.iter().map(|&g| self.node_u(g)).collect()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    fn node_u(&self, g: usize) -> f64 {
        self.k.u_from(UnitPoint::new(self.nodes[g]), &self.states[g])
    }

    fn min_u(&self) -> f64 {
        (0..self.nodes.len()).map(|g| self.node_u(g)).fold(f64::INFINITY, f64::min)
    }

    /// Derivatives of `(α, β)` at node `g`, with `p` taken as `pv`.
    fn derivative(&self, g: usize, pv: f64) -> Vec<f64> {
        let (n, m) = (self.k.n(), self.k.m());
        let dim = n + m + 1;
        let mut s = self.states[g].clone();
        s.push(0.0);
        let mut out = vec![0.0; dim];
        self.k.rhs(self.nodes[g], pv, 1, &s, &mut out);
        out.truncate(n + m);
        out
    }

    /// `(α, β)` at `y ∈ [ε, 1-ε]` by cubic Hermite interpolation.
    pub fn state_at(&self, y: f64) -> Vec<f64> {
        let last = self.nodes.len() - 1;
        let g = (self.nodes.partition_point(|&t| t <= y).max(1) - 1).min(last - 1);
        let (y0, y1) = (self.nodes[g], self.nodes[g + 1]);
        let h = y1 - y0;
        let s = ((y - y0) / h).clamp(0.0, 1.0);
        let d0 = self.derivative(g, self.k.p.right_limit(y0));
        let d1 = self.derivative(g + 1, self.k.p.left_limit(y1));
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        (0..d0.len())
            .map(|q| h00 * self.states[g][q] + h10 * h * d0[q] + h01 * self.states[g + 1][q] + h11 * h * d1[q])
            .collect()
    }

    /// `u(y)` on [0, 1]; power laws beyond the end nodes.
    pub fn u_at(&self, y: UnitPoint) -> f64 {
        let eps = self.options.eps;
        let endpoint = |e: f64, u_end: f64, ratio: f64| {
            if ratio == 0.0 {
                if e > 0.0 {
                    0.0
                } else if e < 0.0 {
                    f64::INFINITY
                } else {
                    u_end
                }
            } else {
                u_end * ratio.powf(e)
            }
        };
        if y.x < eps {
            return endpoint(self.exponents.at_zero, self.node_u(0), y.x / eps);
        }
        if y.xc < eps {
            return endpoint(self.exponents.at_one, self.node_u(self.nodes.len() - 1), y.xc / eps);
        }
        let s = self.state_at(y.x);
        self.k.u_from(y, &s)
    }

    /// Writes `y,u,alpha_1..alpha_N,beta_1..beta_M` on the output grid.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let (n, m) = (self.k.n(), self.k.m());
        let mut header = vec!["y".to_string(), "u".to_string()];
        header.extend((1..=n).map(|i| format!("alpha_{i}")));
        header.extend((1..=m).map(|j| format!("beta_{j}")));
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = self.grid.iter().map(|&g| {
            let mut row = vec![self.nodes[g], self.node_u(g)];
            row.extend_from_slice(&self.states[g]);
            row
        });
        crate::io::write_rows(w, &header_refs, rows)
    }

    /// Re-checks the solution against the boundary conditions, the
    /// normalization, the integral form of the α/β equations and the
    /// integral equation itself.
    pub fn diagnostics(&self) -> Result<BvpDiagnostics> {
        let (n, m) = (self.k.n(), self.k.m());
        let eps = self.options.eps;
        let exps = self.exponents;
        let tol = Tolerance::new(1e-12, 1e-10);
        let kinks = self.kinks();
        let u = |y: UnitPoint| self.u_at(y);

        // boundary values: subtract the power-law sliver integrals
        let first = UnitPoint::new(self.nodes[0]);
        let last_idx = self.nodes.len() - 1;
        let last = UnitPoint::new(self.nodes[last_idx]);
        let (u0, u1) = (self.node_u(0), self.node_u(last_idx));
        let mut boundary: f64 = 0.0;
        for i in 0..n {
            let sliver = eps * self.k.b(i, first) * u0 / (exps.at_zero + self.k.right_terms[i].inner.x_pow + 1.0);
            boundary = boundary.max((self.states[0][i] - sliver).abs());
        }
        for j in 0..m {
            let sliver = eps * self.k.d(j, last) * u1 / (exps.at_one + self.k.left_terms[j].inner.xc_pow + 1.0);
            boundary = boundary.max((self.states[last_idx][n + j] - sliver).abs());
        }

        let zero = UnitPoint::new(0.0);
        let one = UnitPoint::from_complement(0.0);
        let mass = integrate_unit_split(u, zero, one, &kinks, exps.powers(), tol)?.value;

        // α(y) = ∫₀ʸ bᵢ u, β(y) = ∫_y¹ dⱼ u at a few grid nodes
        let mut defect: f64 = 0.0;
        for &y in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            let g = self.nodes.partition_point(|&t| t < y).min(last_idx);
            let yp = UnitPoint::new(self.nodes[g]);
            for i in 0..n {
                let m_i = self.k.right_terms[i].inner.x_pow;
                let powers = EndpointPowers { at_zero: Some(exps.at_zero + m_i), at_one: None };
                let q = integrate_unit_split(|x| self.k.b(i, x) * u(x), zero, yp, &kinks, powers, tol)?.value;
                let a = self.states[g][i];
                defect = defect.max((a - q).abs() / a.abs().max(1.0));
            }
            for j in 0..m {
                let n_j = self.k.left_terms[j].inner.xc_pow;
                let powers = EndpointPowers { at_zero: None, at_one: Some(exps.at_one + n_j) };
                let q = integrate_unit_split(|x| self.k.d(j, x) * u(x), yp, one, &kinks, powers, tol)?.value;
                let b = self.states[g][n + j];
                defect = defect.max((b - q).abs() / b.abs().max(1.0));
            }
        }

        let round_trip = (1..100)
            .map(|i| {
                let y = i as f64 / 100.0;
                let ku = crate::verify::apply_kernel(self, &self.k.p, &self.k.left, &self.k.right, y)?;
                Ok((ku - self.u_at(UnitPoint::new(y))).abs())
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);

        let min_u = self.min_u();
        let cols = self.singular_values.len();
        let sigma_ratio = self.singular_values[cols - 1] / self.singular_values[cols - 2];
        let low_confidence = exps.at_zero < LOW_CONFIDENCE_EXPONENT || exps.at_one < LOW_CONFIDENCE_EXPONENT;
        let mass_error = (mass - 1.0).abs();
        let passed = boundary <= BVP_BOUNDARY_TOL
            && mass_error <= BVP_MASS_TOL
            && defect <= BVP_INTEGRAL_FORM_TOL
            && round_trip <= BVP_ROUND_TRIP_TOL
            && min_u >= -1e-9;
        Ok(BvpDiagnostics {
            n,
            m,
            eps,
            singular_values: self.singular_values.clone(),
            sigma_ratio,
            matching_residual: self.matching_residual,
            boundary_residual: boundary,
            min_u,
            mass_error,
            integral_form_defect: defect,
            round_trip,
            exponents: exps,
            low_confidence_exponents: low_confidence,
            passed,
        })
    }
}

impl Density for BvpSolution {
    fn pdf_at(&self, x: UnitPoint) -> f64 {
        self.u_at(x)
    }

    fn endpoint_exponents(&self) -> EndpointExponents {
        self.exponents
    }

    fn kinks(&self) -> Vec<f64> {
        let eps = self.options.eps;
        let mut k = self.k.discontinuities.clone();
        k.push(eps);
        k.push(1.0 - eps);
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::stationary_density_general;

    fn beta_one(z: f64) -> ProportionLaw {
        ProportionLaw::beta_one(z).unwrap()
    }

    #[test]
    fn abcd_factors_for_beta_one_laws() {
        let p = DirectionFunction::identity();
        let k = factorize_beta_kernel(&p, &ProportionLaw::beta(1, 3.0).unwrap(), &ProportionLaw::beta(1, 2.0).unwrap())
            .unwrap();
        assert_eq!((k.n(), k.m()), (1, 1));
        let y = UnitPoint::new(0.3);
        assert!((k.a(0, y) - 2.0 * 0.7).abs() < 1e-14);
        assert!((k.b(0, y) - 0.7 / 0.49).abs() < 1e-13);
        assert!((k.c(0, y) - 3.0 * 0.09).abs() < 1e-14);
        assert!((k.d(0, y) - 0.3 / 0.027).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_row_mass() {
        let cases = vec![
            (DirectionFunction::constant(0.5).unwrap(), ProportionLaw::beta(2, 1.0).unwrap(), ProportionLaw::beta(1, 1.0).unwrap()),
            (DirectionFunction::identity(), ProportionLaw::beta(2, 2.0).unwrap(), ProportionLaw::beta(2, 2.0).unwrap()),
            (DirectionFunction::identity(), ProportionLaw::beta(3, 1.5).unwrap(), ProportionLaw::beta(2, 0.7).unwrap()),
            (
                DirectionFunction::piecewise(&[0.4], vec![0.3, 0.8]).unwrap(),
                beta_one(2.0),
                ProportionLaw::beta(3, 2.0).unwrap(),
            ),
        ];
        for (p, left, right) in cases {
            let k = factorize_beta_kernel(&p, &left, &right).unwrap();
            assert!(k.reconstruction_error(200) < 1e-10, "{left:?} {right:?}: {}", k.reconstruction_error(200));
            for i in 0..50 {
                let x = (i as f64 + 0.5) / 50.0;
                let mass = k.row_mass(x).unwrap();
                assert!((mass - 1.0).abs() < 1e-9, "{left:?} {right:?} x = {x}: {mass}");
            }
        }
    }

    #[test]
    fn mixture_factors() {
        let p = DirectionFunction::identity();
        let right = ProportionLaw::mixture(&[(2.0 / 3.0, 1.0), (2.0 / 3.0, 2.0)]).unwrap();
        let left = ProportionLaw::mixture(&[(1.5, 1.0), (-1.0, 2.0)]).unwrap();
        let k = factorize_mixture_kernel(&p, &left, &right).unwrap();
        assert_eq!((k.n(), k.m()), (2, 2));
        assert!(k.reconstruction_error(200) < 1e-10);
        assert!((k.row_mass(0.3).unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(
            ProportionLaw::mixture(&[(1.0, 1.0), (1.0, 2.0)]),
            Err(Error::Normalization(_))
        ));
        // a one-term (z, z) mixture gives the β(1, z) factors
        let single = ProportionLaw::mixture(&[(3.0, 3.0)]).unwrap();
        let km = factorize_mixture_kernel(&p, &single, &single).unwrap();
        let kb = factorize_beta_kernel(&p, &beta_one(3.0), &beta_one(3.0)).unwrap();
        for &y in &[0.1, 0.5, 0.8] {
            let y = UnitPoint::new(y);
            assert!((km.a(0, y) - kb.a(0, y)).abs() < 1e-13);
            assert!((km.b(0, y) - kb.b(0, y)).abs() < 1e-13);
            assert!((km.c(0, y) - kb.c(0, y)).abs() < 1e-13);
            assert!((km.d(0, y) - kb.d(0, y)).abs() < 1e-13);
        }
    }

    #[test]
    fn unsupported_laws() {
        let p = DirectionFunction::identity();
        let mix = ProportionLaw::mixture(&[(1.5, 1.0), (-1.0, 2.0)]).unwrap();
        assert!(matches!(factorize_beta_kernel(&p, &mix, &beta_one(2.0)), Err(Error::Unsupported(_))));
        let b22 = ProportionLaw::beta(2, 2.0).unwrap();
        assert!(matches!(factorize_mixture_kernel(&p, &b22, &beta_one(2.0)), Err(Error::Unsupported(_))));
        assert!(matches!(
            factorize_beta_kernel(&DirectionFunction::constant(1.0).unwrap(), &b22, &b22),
            Err(Error::Ergodicity(_))
        ));
        let k = factorize(&p, &mix, &b22).unwrap();
        assert_eq!((k.n(), k.m()), (2, 2));
    }

    #[test]
    fn endpoint_exponents_match_closed_form() {
        let cases = [
            (DirectionFunction::constant(0.3).unwrap(), 0.3, 2.0),
            (DirectionFunction::constant(0.5).unwrap(), 0.5, 1.0),
            (DirectionFunction::linear(1.0, 0.5).unwrap(), 0.0, 3.0),
        ];
        for (p, p0, l) in cases {
            let k = factorize_beta_kernel(&p, &beta_one(l), &beta_one(l)).unwrap();
            let e = k.endpoint_exponents().at_zero;
            assert!((e - (l * (1.0 - p0) - 1.0)).abs() < 1e-12, "p0 = {p0}, l = {l}: {e}");
        }
    }

    #[test]
    fn beta_two_two_matches_closed_form() {
        let k = factorize_beta_kernel(&DirectionFunction::identity(), &beta_one(2.0), &beta_one(2.0)).unwrap();
        let sol = solve_bvp(&k).unwrap();
        let exact = stationary_density_general(&DirectionFunction::identity(), 2.0, 2.0).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=980 {
            let y = 0.01 + i as f64 * 0.001;
            worst = worst.max((sol.u_at(UnitPoint::new(y)) - exact.pdf(y)).abs());
        }
        assert!(worst < 1e-6, "sup error {worst}");
        // first integral α(1-y)^r = β y^l
        for (idx, y) in sol.grid().iter().enumerate() {
            let (a, b) = (sol.alpha(0)[idx], sol.beta(0)[idx]);
            assert!((a * (1.0 - y).powi(2) - b * y * y).abs() < 1e-7, "y = {y}");
        }
        let d = sol.diagnostics().unwrap();
        assert!(d.passed, "{d:?}");
    }

    #[test]
    fn arcsine_case_and_continuity_across_jumps() {
        // p ≡ 1/2 with l = r = 1: the arcsine law β(1/2, 1/2)
        let p = DirectionFunction::constant(0.5).unwrap();
        let k = factorize_beta_kernel(&p, &beta_one(1.0), &beta_one(1.0)).unwrap();
        let sol = solve_bvp(&k).unwrap();
        for &y in &[0.05f64, 0.3, 0.5, 0.77, 0.95] {
            let exact = 1.0 / (std::f64::consts::PI * (y * (1.0 - y)).sqrt());
            assert!((sol.u_at(UnitPoint::new(y)) - exact).abs() / exact < 1e-6, "y = {y}");
        }

        let p = DirectionFunction::piecewise(&[0.3, 0.65], vec![0.2, 0.9, 0.4]).unwrap();
        let k = factorize_beta_kernel(&p, &beta_one(2.0), &beta_one(2.0)).unwrap();
        let sol = solve_bvp(&k).unwrap();
        for &s in &[0.3, 0.65] {
            let (a, b) = (sol.u_at(UnitPoint::new(s - 1e-9)), sol.u_at(UnitPoint::new(s + 1e-9)));
            assert!((a - b).abs() < 1e-6, "jump at {s}: {a} vs {b}");
        }
        let exact = stationary_density_general(&p, 2.0, 2.0).unwrap();
        for &y in &[0.1, 0.3, 0.5, 0.8] {
            assert!((sol.u_at(UnitPoint::new(y)) - exact.pdf(y)).abs() < 1e-6, "y = {y}");
        }
    }

    #[test]
    fn csv_header() {
        let k = factorize_beta_kernel(
            &DirectionFunction::identity(),
            &ProportionLaw::beta(2, 2.0).unwrap(),
            &ProportionLaw::beta(2, 2.0).unwrap(),
        )
        .unwrap();
        let sol = solve_bvp_with(&k, &BvpOptions { grid_points: 11, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("y,u,alpha_1,alpha_2,beta_1,beta_2\n"));
        assert_eq!(s.lines().count(), 12);
    }
}
