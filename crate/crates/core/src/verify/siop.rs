//! Slab split of the second-derivative singular integral: reconstruction and far-field annulus decay.

use super::fit::loglog_slope;
use crate::error::{Error, Result};
use crate::fields::{Field, SlabGrid};
use crate::pressure::{siop_decompose, SiopOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct SiopCheck {
    pub p: f64,
    /// max |h1 + h2 − Tg| relative to sup |h1| + sup |h2|.
    pub reconstruction_rel: f64,
    pub bound_h1: f64,
    pub bound_h2: f64,
    /// (N, contribution, Hölder bound) for each annulus.
    pub annuli: Vec<(usize, f64, f64)>,
    /// Log-log slope of the contributions against N over N ≥ 2.
    pub slope: f64,
    /// Same for the Hölder bounds.
    pub holder_slope: f64,
    /// The exponent the decay is compared with, −(1 + 1/p).
    pub expected: f64,
}

impl SiopCheck {
    pub fn slope_ok(&self, tol: f64) -> bool {
        (self.slope - self.expected).abs() <= tol
    }
}

/// Slowly varying positive g on a wide doubled box, slab |x₃| < `slab`, annuli of unit lateral side.
pub fn annulus_test_field(half_width: f64, n_lateral: usize, height: f64, nz: usize) -> Result<Field> {
    let grid = SlabGrid::new(half_width, height, n_lateral, n_lateral, nz)?.doubled();
    let k = std::f64::consts::PI / half_width;
    Ok(Field::scalar_from_fn(grid, |x| 1.0 + 0.25 * (k * x[0]).cos() * (k * x[1]).cos() + 0.25 * (std::f64::consts::PI * x[2] / height).cos()))
}

pub fn check_siop(g: &Field, slab: f64, p: f64, opts: &SiopOptions) -> Result<SiopCheck> {
    let d = siop_decompose(g, slab, p, opts)?;
    let scale = d.h1.sup_norm() + d.h2.sup_norm();
    let reconstruction_rel = if scale > 0.0 { d.reconstruction_error / scale } else { d.reconstruction_error };
    let fit: Vec<_> = d.annuli.iter().filter(|a| a.n >= 2 && a.contribution > 0.0).collect();
    if fit.len() < 3 {
        return Err(Error::InvalidArgument("fewer than three annuli to fit; widen the box".into()));
    }
    let ns: Vec<f64> = fit.iter().map(|a| a.n as f64).collect();
    let (slope, _) = loglog_slope(&ns, &fit.iter().map(|a| a.contribution).collect::<Vec<_>>());
    let (holder_slope, _) = loglog_slope(&ns, &fit.iter().map(|a| a.holder_bound).collect::<Vec<_>>());
    Ok(SiopCheck {
        p,
        reconstruction_rel,
        bound_h1: d.bound_h1,
        bound_h2: d.bound_h2,
        annuli: d.annuli.iter().map(|a| (a.n, a.contribution, a.holder_bound)).collect(),
        slope,
        holder_slope,
        expected: -(1.0 + 1.0 / p),
    })
}
