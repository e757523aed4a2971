//! Half-space Neumann pressure p¹_H, whole-space pressure p_F and the singular-integral split.

mod siop;

pub use siop::{siop_decompose, AnnulusTerm, SiopDecomposition, SiopOptions};

use crate::error::{Error, Result};
use crate::fft3::Periodic3;
use crate::fields::{extend_parity, norm_bmo, restrict_half, Field, NormReport, ParityTable, Rank, SlabGrid};
use crate::quad::{adaptive_vec, QuadratureSpec};
use crate::radial::{Mat3, Vec3};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureOptions {
    /// Largest allowed |H| on the lateral boundary relative to sup |H|; `None` skips the check.
    pub support_tol: Option<f64>,
    /// Largest BMO cube side; defaults to min(L, H).
    pub bmo_max_cube: Option<f64>,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions { support_tol: Some(1e-6), bmo_max_cube: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureResult {
    /// p¹ on the half grid with zero mean over the nodes of the unit half-ball.
    pub p1: Field,
    /// BMO estimate of the even extension of p¹.
    pub bmo: NormReport,
    /// max |Δp¹ + div div H| over interior nodes.
    pub residual: f64,
    /// max |∂₃p¹| on x₃ = 0.
    pub trace_defect: f64,
    /// Mean of p¹ over the unit half-ball after normalization.
    pub normalization_mean: f64,
}

/// Periodic box made of all stored layers but the top one (which duplicates the bottom).
pub(crate) fn periodic_box(g: &SlabGrid) -> Periodic3 {
    let nzp = g.nlayers() - 1;
    Periodic3::new([g.nx, g.ny, nzp], [2.0 * g.half_width, 2.0 * g.half_width, nzp as f64 * g.hz()])
}

pub(crate) fn to_box(g: &SlabGrid, comp: &[f64]) -> Vec<f64> {
    comp[..g.n_nodes() - g.nodes_per_layer()].to_vec()
}

pub(crate) fn from_box(g: &SlabGrid, v: &[f64], dst: &mut [f64]) {
    let m = g.n_nodes() - g.nodes_per_layer();
    dst[..m].copy_from_slice(&v[..m]);
    let npl = g.nodes_per_layer();
    dst[m..].copy_from_slice(&v[..npl]);
}

fn check_support(h: &Field, tol: Option<f64>) -> Result<()> {
    if let Some(tol) = tol {
        let s = h.sup_norm();
        if s > 0.0 {
            h.check_support(tol * s)?;
            let top = h.top_layer_max();
            if top > tol * s {
                return Err(Error::Support { value: top, tol: tol * s });
            }
        }
    }
    Ok(())
}

/// Symbol of ∂_i∂_j on the box: −k_i k_j (odd-derivative wavenumbers off the diagonal).
fn dd_symbol(w: &[(Vec<f64>, Vec<f64>); 3], idx: [usize; 3], i: usize, j: usize) -> f64 {
    if i == j {
        -w[i].0[idx[i]].powi(2)
    } else {
        -w[i].1[idx[i]] * w[j].1[idx[j]]
    }
}

fn k2(w: &[(Vec<f64>, Vec<f64>); 3], idx: [usize; 3]) -> f64 {
    (0..3).map(|a| w[a].0[idx[a]].powi(2)).sum()
}

fn for_each_mode<F: FnMut(usize, [usize; 3])>(n: [usize; 3], mut f: F) {
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                f((k * n[1] + j) * n[0] + i, [i, j, k]);
            }
        }
    }
}

/// Transform of div div T for a 9-component tensor field on the box.
fn div_div_hat(plan: &Periodic3, comps: &[Vec<f64>]) -> Vec<Complex64> {
    let w = plan.wavenumbers();
    let mut acc = vec![Complex64::default(); plan.len()];
    for i in 0..3 {
        for j in 0..3 {
            let c = plan.forward_real(&comps[i * 3 + j]);
            for_each_mode(plan.n, |m, idx| acc[m] += dd_symbol(&w, idx, i, j) * c[m]);
        }
    }
    acc
}

/// Solves Δp = −rhs on the periodic box (zero mode dropped).
fn solve_neg_poisson(plan: &Periodic3, rhs_hat: &[Complex64]) -> Vec<Complex64> {
    let w = plan.wavenumbers();
    let mut out = vec![Complex64::default(); plan.len()];
    for_each_mode(plan.n, |m, idx| {
        let q = k2(&w, idx);
        if q > 0.0 {
            out[m] = rhs_hat[m] / q;
        }
    });
    out
}

fn laplacian(plan: &Periodic3, v: &[f64]) -> Vec<f64> {
    let w = plan.wavenumbers();
    let mut c = plan.forward_real(v);
    for_each_mode(plan.n, |m, idx| c[m] *= -k2(&w, idx));
    plan.inverse_real(c)
}

fn d3(plan: &Periodic3, v: &[f64]) -> Vec<f64> {
    let w = plan.wavenumbers();
    let mut c = plan.forward_real(v);
    for_each_mode(plan.n, |m, idx| c[m] *= Complex64::new(0.0, w[2].1[idx[2]]));
    plan.inverse_real(c)
}

/// Node mean over {|x| < r, x₃ > 0} (or over the full ball when `half` is false).
fn ball_mean(f: &Field, r: f64, half: bool) -> Result<f64> {
    let g = &f.grid;
    let (mut s, mut n) = (0.0, 0usize);
    for k in 0..g.nlayers() {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let p = g.point(i, j, k);
                if (half && p[2] <= 0.0) || p[0] * p[0] + p[1] * p[1] + p[2] * p[2] >= r * r {
                    continue;
                }
                s += f.get(0, 0, i, j, k);
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no grid nodes inside the normalization ball".into()));
    }
    Ok(s / n as f64)
}

/// p¹_H: Δp¹ = −div div H in x₃ > 0, ∂₃p¹ = 0 on x₃ = 0, via even/odd extension and a periodic
/// spectral solve on the doubled box.
pub fn pressure_half(h: &Field, opts: &PressureOptions) -> Result<PressureResult> {
    h.validate()?;
    if h.rank != Rank::Tensor {
        return Err(Error::ComponentMismatch { expected: 9, got: h.ncomp() });
    }
    if h.grid.extended || h.time_axis.is_some() {
        return Err(Error::InvalidArgument("expected a single-time half-space tensor field".into()));
    }
    check_support(h, opts.support_tol)?;
    let ext = extend_parity(h, &ParityTable::pressure_tensor())?;
    let g2 = ext.grid;
    let plan = periodic_box(&g2);
    let comps: Vec<Vec<f64>> = (0..9).map(|c| to_box(&g2, ext.component(0, c))).collect();
    let dd = div_div_hat(&plan, &comps);
    let p_hat = solve_neg_poisson(&plan, &dd);
    let p_box = plan.inverse_real(p_hat);
    let mut p_ext = Field::zeros(g2, Rank::Scalar);
    from_box(&g2, &p_box, p_ext.component_mut(0, 0));
    let mut p1 = restrict_half(&p_ext)?;
    let mean = ball_mean(&p1, 1.0, true)?;
    p1.values.iter_mut().for_each(|v| *v -= mean);
    let normalization_mean = ball_mean(&p1, 1.0, true)?;

    // residual from independent transforms of the re-extended p¹ and of H
    let even = extend_parity(&p1, &ParityTable::uniform(1, crate::fields::Parity::Even))?;
    let pb = to_box(&g2, even.component(0, 0));
    let lap = laplacian(&plan, &pb);
    let ddh = plan.inverse_real(dd);
    let npl = g2.nodes_per_layer();
    let nz = h.grid.nz;
    let mut residual = 0.0f64;
    for k in (nz + 1)..(2 * nz) {
        for p in 0..npl {
            residual = residual.max((lap[k * npl + p] + ddh[k * npl + p]).abs());
        }
    }
    let dz = d3(&plan, &pb);
    let trace_defect = dz[nz * npl..(nz + 1) * npl].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cube = opts.bmo_max_cube.unwrap_or(h.grid.half_width.min(h.grid.height));
    let bmo = norm_bmo(&even, cube)?;
    Ok(PressureResult { p1, bmo, residual, trace_defect, normalization_mean })
}

/// Whole-space pressure p = −(1/3) tr F + (1/4π) PV ∫ ∂_i∂_j(1/|x − y|) F_ij(y) dy, i.e. the
/// solution of Δp = −div div F, computed with the symbol −k_i k_j/|k|² on the periodic box.
/// Normalized to zero node mean over the unit ball.
pub fn pressure_whole(f: &Field, opts: &PressureOptions) -> Result<Field> {
    f.validate()?;
    if f.rank != Rank::Tensor {
        return Err(Error::ComponentMismatch { expected: 9, got: f.ncomp() });
    }
    if f.time_axis.is_some() {
        return Err(Error::InvalidArgument("expected a single-time field".into()));
    }
    check_support(f, opts.support_tol)?;
    let g = f.grid;
    let plan = periodic_box(&g);
    let comps: Vec<Vec<f64>> = (0..9).map(|c| to_box(&g, f.component(0, c))).collect();
    let p_hat = solve_neg_poisson(&plan, &div_div_hat(&plan, &comps));
    let mut p = Field::zeros(g, Rank::Scalar);
    from_box(&g, &plan.inverse_real(p_hat), p.component_mut(0, 0));
    let mean = ball_mean(&p, 1.0, false)?;
    p.values.iter_mut().for_each(|v| *v -= mean);
    Ok(p)
}

/// f = −div F − ∇p_F for a single-time tensor field: the half-space Neumann pressure on a half
/// grid, the periodic whole-space pressure on an extended grid. No support check is made; the
/// lateral directions are periodic by construction.
pub fn leray_forcing(f: &Field) -> Result<Field> {
    f.validate()?;
    if f.rank != Rank::Tensor || f.time_axis.is_some() {
        return Err(Error::InvalidArgument("expected a single-time tensor field".into()));
    }
    let whole = f.grid.extended;
    let ext = if whole { f.clone() } else { extend_parity(f, &ParityTable::pressure_tensor())? };
    let g2 = ext.grid;
    let plan = periodic_box(&g2);
    let w = plan.wavenumbers();
    let hats: Vec<Vec<Complex64>> = (0..9).map(|c| plan.forward_real(&to_box(&g2, ext.component(0, c)))).collect();
    let mut p_hat = vec![Complex64::default(); plan.len()];
    for i in 0..3 {
        for j in 0..3 {
            for_each_mode(plan.n, |m, idx| p_hat[m] += dd_symbol(&w, idx, i, j) * hats[i * 3 + j][m]);
        }
    }
    let p_hat = solve_neg_poisson(&plan, &p_hat);
    let mut out = Field::zeros(g2, Rank::Vector);
    for j in 0..3 {
        let mut fj = vec![Complex64::default(); plan.len()];
        for_each_mode(plan.n, |m, idx| {
            let mut s = Complex64::default();
            for c in 0..3 {
                s += Complex64::new(0.0, w[c].1[idx[c]]) * hats[j * 3 + c][m];
            }
            s += Complex64::new(0.0, w[j].1[idx[j]]) * p_hat[m];
            fj[m] = -s;
        });
        from_box(&g2, &plan.inverse_real(fj), out.component_mut(0, j));
    }
    if whole {
        Ok(out)
    } else {
        restrict_half(&out)
    }
}

/// Local term plus principal-value integral at one point, for a tensor given in closed form and
/// supported in |y − x| < `reach`. Spherical shells: Gauss–Legendre in cos θ, trapezoid in φ.
pub fn pressure_whole_pv_point<F: Fn(&Vec3) -> Mat3>(f: F, x: &Vec3, reach: f64, spec: &QuadratureSpec) -> Result<f64> {
    let gl = crate::quad::GaussLegendre::new(48);
    let nphi = 96;
    let mut dirs = vec![];
    for (mu, wmu) in gl.on(-1.0, 1.0) {
        let s = (1.0 - mu * mu).sqrt();
        for q in 0..nphi {
            let ph = 2.0 * PI * q as f64 / nphi as f64;
            dirs.push(([s * ph.cos(), s * ph.sin(), mu], wmu * 2.0 * PI / nphi as f64));
        }
    }
    let fx = f(x);
    let local = -(fx[0][0] + fx[1][1] + fx[2][2]) / 3.0;
    let breaks: Vec<f64> = (0..=16).map(|i| reach * i as f64 / 16.0).collect();
    let v = adaptive_vec(
        |r, out| {
            let mut acc = 0.0;
            for (w, wt) in &dirs {
                let y = [x[0] + r * w[0], x[1] + r * w[1], x[2] + r * w[2]];
                let fy = f(&y);
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        let k = 3.0 * w[i] * w[j] - if i == j { 1.0 } else { 0.0 };
                        s += k * fy[i][j];
                    }
                }
                acc += wt * s;
            }
            out[0] = acc / (4.0 * PI * r);
        },
        &breaks,
        1,
        spec,
    )?;
    Ok(local + v[0])
}

#[cfg(test)]
mod tests;
