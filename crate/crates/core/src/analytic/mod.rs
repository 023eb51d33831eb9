//! Closed-form stationary densities for β(1, l) / β(1, r) proportions.
//!
//! The general form is
//! `π(x) = C x^l (r/(1-x) + l/x) exp(-r ∫_{1/2}^x p/(1-t) dt - l ∫_{1/2}^x p/t dt)`,
//! with specializations for polynomial `p` and for piecewise-constant `p`
//! with equal laws (densities glued from beta pieces).

mod general;
mod piecewise;
mod polynomial;

use std::io::Write;

use serde::Serialize;

use crate::error::{check_unit, Result};
use crate::point::UnitPoint;
use crate::quad::{integrate_unit, EndpointPowers, Tolerance};
use crate::special::{ln_beta, regularized_incomplete_beta_pair};

pub use general::{stationary_density_general, stationary_density_general_with, InnerIntegrals};
pub use piecewise::{beta_segment, stationary_density_piecewise, PiecewiseBetaDensity};
pub use polynomial::stationary_density_polynomial;

/// Default number of interior grid points for CSV export.
pub const DEFAULT_GRID_POINTS: usize = 2001;

const CDF_TOL: Tolerance = Tolerance::new(1e-14, 1e-12);
const TABLE_CELLS: usize = 64;
/// Stand-in for an endpoint when the density has a finite nonzero limit there.
const LIMIT_OFFSET: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityForm {
    General,
    Polynomial,
    PiecewiseBeta,
    ProductBeta,
}

/// Leading powers: `π(x) ~ x^at_zero` near 0 and `π(x) ~ (1-x)^at_one` near 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointExponents {
    pub at_zero: f64,
    pub at_one: f64,
}

impl EndpointExponents {
    pub fn powers(&self) -> EndpointPowers {
        EndpointPowers::new(self.at_zero, self.at_one)
    }

    /// Both exponents exceed -1, so the mass is finite.
    pub fn integrable(&self) -> bool {
        self.at_zero > -1.0 && self.at_one > -1.0
    }
}

/// Anything that can be evaluated as a candidate density on (0, 1).
pub trait Density: Sync {
    fn pdf_at(&self, x: UnitPoint) -> f64;

    fn endpoint_exponents(&self) -> EndpointExponents;

    /// Points of (0, 1) where the density may fail to be smooth.
    fn kinks(&self) -> Vec<f64>;

    fn pdf(&self, x: f64) -> f64 {
        self.pdf_at(UnitPoint::new(x))
    }
}

/// Unnormalized log-density of the quadrature-normalized forms.
trait LogShape: Sync + Send + std::fmt::Debug {
    fn ln_shape(&self, x: UnitPoint) -> f64;
}

#[derive(Debug)]
enum Repr {
    Shape(Box<dyn LogShape>),
    Piecewise(PiecewiseBetaDensity),
    Product { a: f64, b: f64, ln_norm: f64 },
}

/// A normalized stationary density with its metadata.
#[derive(Debug)]
pub struct DensityFunction {
    form: DensityForm,
    repr: Repr,
    /// Normalizing constant of the form's own expression.
    normalization: f64,
    /// `ln_shape` offset so that `pdf = exp(ln_shape - ln_scale)`.
    ln_scale: f64,
    exponents: EndpointExponents,
    kinks: Vec<f64>,
    /// CDF nodes and cumulative masses for the quadrature-normalized forms.
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DensityFunction {
    /// The β(a, b) density.
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        let ln_norm = ln_beta(a, b)?;
        Ok(Self {
            form: DensityForm::ProductBeta,
            repr: Repr::Product { a, b, ln_norm },
            normalization: (-ln_norm).exp(),
            ln_scale: 0.0,
            exponents: EndpointExponents { at_zero: a - 1.0, at_one: b - 1.0 },
            kinks: vec![],
            nodes: vec![],
            cumulative: vec![],
        })
    }

    /// Normalizes a log-shape by adaptive quadrature split at `kinks`.
    fn from_shape(
        form: DensityForm,
        shape: Box<dyn LogShape>,
        exponents: EndpointExponents,
        kinks: Vec<f64>,
    ) -> Result<Self> {
        if !exponents.integrable() {
            return Err(crate::Error::Numeric(format!(
                "endpoint exponents {exponents:?} are not integrable"
            )));
        }
        let shift = shape.ln_shape(UnitPoint::new(0.5));
        let mut nodes: Vec<f64> = (0..=TABLE_CELLS).map(|i| i as f64 / TABLE_CELLS as f64).collect();
        nodes.extend(kinks.iter().copied().filter(|&s| s > 0.0 && s < 1.0));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let powers = exponents.powers();
        let f = |pt: UnitPoint| -> f64 { eval_shape(shape.as_ref(), exponents, pt, shift) };
        let mut cumulative = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in nodes.windows(2) {
            let hi = if w[1] == 1.0 { UnitPoint::from_complement(0.0) } else { UnitPoint::new(w[1]) };
            let r = integrate_unit(f, UnitPoint::new(w[0]), hi, powers, CDF_TOL)?;
            acc += r.value;
            cumulative.push(acc);
        }
        let total = acc;
        if !(total > 0.0 && total.is_finite()) {
            return Err(crate::Error::Numeric(format!("density mass {total} is not positive and finite")));
        }
        for c in cumulative.iter_mut() {
            *c /= total;
        }
        let ln_scale = shift + total.ln();
        Ok(Self {
            form,
            repr: Repr::Shape(shape),
            normalization: (-ln_scale).exp(),
            ln_scale,
            exponents,
            kinks,
            nodes,
            cumulative,
        })
    }

    pub fn form(&self) -> DensityForm {
        self.form
    }

    /// The constant `C` in front of the form's expression.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn exponents(&self) -> EndpointExponents {
        self.exponents
    }

    /// The piecewise-beta representation, when this density has one.
    pub fn as_piecewise(&self) -> Option<&PiecewiseBetaDensity> {
        match &self.repr {
            Repr::Piecewise(p) => Some(p),
            _ => None,
        }
    }

    /// `∫₀ˣ π`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        self.cdf_at(UnitPoint::new(x))
    }

    /// [`Self::cdf`] with the complement carried exactly.
    pub fn cdf_at(&self, x: UnitPoint) -> Result<f64> {
        if x.x <= 0.0 {
            return Ok(0.0);
        }
        if x.xc <= 0.0 {
            return Ok(1.0);
        }
        match &self.repr {
            Repr::Product { a, b, .. } => regularized_incomplete_beta_pair(x.x, x.xc, *a, *b),
            Repr::Piecewise(pw) => pw.cdf_at(x),
            Repr::Shape(shape) => {
                let j = self.nodes.partition_point(|&s| s <= x.x) - 1;
                let f = |pt: UnitPoint| eval_shape(shape.as_ref(), self.exponents, pt, self.ln_scale);
                let powers = self.exponents.powers();
                let v = if j + 2 == self.nodes.len() {
                    let r = integrate_unit(f, x, UnitPoint::from_complement(0.0), powers, CDF_TOL)?;
                    1.0 - r.value
                } else {
                    let r = integrate_unit(f, UnitPoint::new(self.nodes[j]), x, powers, CDF_TOL)?;
                    self.cumulative[j] + r.value
                };
                Ok(v.clamp(0.0, 1.0))
            }
        }
    }

    /// [`Self::cdf`] at increasing points; quadrature-normalized forms
    /// integrate only between consecutive points, so large samples are cheap.
    pub fn cdf_sorted(&self, xs: &[f64]) -> Result<Vec<f64>> {
        if xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(crate::Error::Domain("cdf_sorted needs nondecreasing points".into()));
        }
        let shape = match &self.repr {
            Repr::Shape(shape) => shape,
            _ => return xs.iter().map(|&x| self.cdf(x)).collect(),
        };
        let f = |pt: UnitPoint| eval_shape(shape.as_ref(), self.exponents, pt, self.ln_scale);
        let powers = self.exponents.powers();
        let mut out = Vec::with_capacity(xs.len());
        // (cell index, point, cdf) of the last evaluation
        let mut prev: Option<(usize, f64, f64)> = None;
        for &x in xs {
            check_unit("x", x)?;
            if x <= 0.0 || x >= 1.0 {
                out.push(if x <= 0.0 { 0.0 } else { 1.0 });
                continue;
            }
            let j = self.nodes.partition_point(|&s| s <= x) - 1;
            let (start, base) = match prev {
                Some((pj, px, pc)) if pj == j => (px, pc),
                _ if j == 0 => {
                    let v = self.cdf(x)?;
                    prev = Some((j, x, v));
                    out.push(v);
                    continue;
                }
                _ => (self.nodes[j], self.cumulative[j]),
            };
            let r = integrate_unit(f, UnitPoint::new(start), UnitPoint::new(x), powers, CDF_TOL)?;
            let v = (base + r.value).clamp(0.0, 1.0);
            prev = Some((j, x, v));
            out.push(v);
        }
        Ok(out)
    }

    /// `(x, π(x))` on `n` uniform interior points `i/(n+1)`.
    pub fn grid(&self, n: usize) -> Vec<(f64, f64)> {
        (1..=n)
            .map(|i| {
                let x = i as f64 / (n + 1) as f64;
                (x, self.pdf(x))
            })
            .collect()
    }

    /// Writes the `x,pi` CSV over [`Self::grid`].
    pub fn write_grid_csv<W: Write>(&self, w: W, n: usize) -> std::io::Result<()> {
        crate::io::write_rows(w, &["x", "pi"], self.grid(n).into_iter().map(|(x, p)| vec![x, p]))
    }
}

fn eval_shape(shape: &dyn LogShape, exps: EndpointExponents, pt: UnitPoint, ln_scale: f64) -> f64 {
    let endpoint = |e: f64, inner: UnitPoint| -> f64 {
        if e > 0.0 {
            0.0
        } else if e < 0.0 {
            f64::INFINITY
        } else {
            (shape.ln_shape(inner) - ln_scale).exp()
        }
    };
    if pt.x <= 0.0 {
        return endpoint(exps.at_zero, UnitPoint { x: LIMIT_OFFSET, xc: 1.0 });
    }
    if pt.xc <= 0.0 {
        return endpoint(exps.at_one, UnitPoint { x: 1.0, xc: LIMIT_OFFSET });
    }
    (shape.ln_shape(pt) - ln_scale).exp()
}

impl Density for DensityFunction {
    fn pdf_at(&self, x: UnitPoint) -> f64 {
        match &self.repr {
            Repr::Shape(shape) => eval_shape(shape.as_ref(), self.exponents, x, self.ln_scale),
            Repr::Piecewise(pw) => pw.pdf_at(x),
            Repr::Product { a, b, ln_norm } => {
                if x.x <= 0.0 || x.xc <= 0.0 {
                    let e = if x.x <= 0.0 { a - 1.0 } else { b - 1.0 };
                    return if e > 0.0 {
                        0.0
                    } else if e < 0.0 {
                        f64::INFINITY
                    } else {
                        (-ln_norm).exp()
                    };
                }
                ((a - 1.0) * x.x.ln() + (b - 1.0) * x.xc.ln() - ln_norm).exp()
            }
        }
    }

    fn endpoint_exponents(&self) -> EndpointExponents {
        self.exponents
    }

    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

impl From<PiecewiseBetaDensity> for DensityFunction {
    fn from(pw: PiecewiseBetaDensity) -> Self {
        let exponents = pw.endpoint_exponents();
        let kinks = pw.kinks();
        Self {
            form: DensityForm::PiecewiseBeta,
            normalization: pw.constants()[0],
            repr: Repr::Piecewise(pw),
            ln_scale: 0.0,
            exponents,
            kinks,
            nodes: vec![],
            cumulative: vec![],
        }
    }
}

/// `∫₀ˣ π` for any density produced here.
pub fn density_cdf(d: &DensityFunction, x: f64) -> Result<f64> {
    d.cdf(x)
}

/// Mass of `d` computed by independent adaptive quadrature (a check, not
/// used for normalization).
pub fn quadrature_mass<D: Density + ?Sized>(d: &D) -> Result<f64> {
    crate::quad::integrate_unit_split(
        |x| d.pdf_at(x),
        UnitPoint::new(0.0),
        UnitPoint::from_complement(0.0),
        &d.kinks(),
        d.endpoint_exponents().powers(),
        Tolerance::new(1e-13, 1e-11),
    )
    .map(|r| r.value)
}
