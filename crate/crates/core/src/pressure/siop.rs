//! Split Tg = T(g outside the slab) + T(g inside the slab) for the second-derivative Riesz-type
//! operator T with kernel ∂_i∂_j(1/(4π|z|)) (principal value), plus per-annulus far-field sums.

use super::{for_each_mode, from_box, periodic_box, to_box};
use crate::error::{Error, Result};
use crate::fields::{norm_bmo, norm_ls_unif, Field, Rank, UnifOptions};
use crate::radial::Vec3;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiopOptions {
    /// Component pair (i, j) of the kernel.
    pub pair: (usize, usize),
    /// Unit normal of the slab {|y·ν| < L}.
    pub normal: Vec3,
    /// Point at which the near column and annulus sums are taken.
    pub reference: Vec3,
    /// Lateral side of the near cube; annulus N has lateral sup-distance in
    /// [(N − ½)·side, (N + ½)·side).
    pub cube_side: f64,
    /// Largest BMO cube; defaults to min(L_box, H_box).
    pub bmo_max_cube: Option<f64>,
}

impl Default for SiopOptions {
    fn default() -> Self {
        SiopOptions { pair: (0, 2), normal: [0.0, 0.0, 1.0], reference: [0.0; 3], cube_side: 4.0, bmo_max_cube: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusTerm {
    pub n: usize,
    /// ∫ |K(x₀ − y)| |g(y)| dy over the annulus part of the slab.
    pub contribution: f64,
    /// ‖K(x₀ − ·)‖_{L_p'} ‖g‖_{L_p} over the same set.
    pub holder_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiopDecomposition {
    pub h1: Field,
    pub h2: Field,
    pub tg: Field,
    /// ‖h1‖_BMO / sup |g| outside the slab.
    pub bound_h1: f64,
    /// ‖h2‖_{L_p,unif} / ‖g‖_{L_p,unif}.
    pub bound_h2: f64,
    /// max |h1 + h2 − Tg|.
    pub reconstruction_error: f64,
    /// ∫ |K||g| over the near column at the reference point (slab part).
    pub near_column: f64,
    pub annuli: Vec<AnnulusTerm>,
}

fn kernel(z: Vec3, i: usize, j: usize) -> f64 {
    let r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    let d = if i == j { r2 } else { 0.0 };
    (3.0 * z[i] * z[j] - d) / (4.0 * PI * r2 * r2 * r2.sqrt())
}

fn apply_t(g: &Field, i: usize, j: usize) -> Field {
    let grid = g.grid;
    let plan = periodic_box(&grid);
    let w = plan.wavenumbers();
    let mut c = plan.forward_real(&to_box(&grid, g.component(0, 0)));
    for_each_mode(plan.n, |m, idx| {
        let k2: f64 = (0..3).map(|a| w[a].0[idx[a]].powi(2)).sum();
        if k2 == 0.0 {
            c[m] = Default::default();
            return;
        }
        let kk = if i == j { w[i].0[idx[i]].powi(2) } else { w[i].1[idx[i]] * w[j].1[idx[j]] };
        let d = if i == j { 1.0 / 3.0 } else { 0.0 };
        c[m] *= -(kk / k2 - d);
    });
    let mut out = Field::zeros(grid, Rank::Scalar);
    from_box(&grid, &plan.inverse_real(c), out.component_mut(0, 0));
    out
}

fn lateral_basis(nu: Vec3) -> (Vec3, Vec3) {
    let a = if nu[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = a[0] * nu[0] + a[1] * nu[1] + a[2] * nu[2];
    let mut e1 = [a[0] - d * nu[0], a[1] - d * nu[1], a[2] - d * nu[2]];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|v| *v /= n1);
    let e2 = [nu[1] * e1[2] - nu[2] * e1[1], nu[2] * e1[0] - nu[0] * e1[2], nu[0] * e1[1] - nu[1] * e1[0]];
    (e1, e2)
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Splits Tg at the slab {|y·ν| < L}; `g` must be a single-time scalar field whose grid models
/// a box of ℝ³ (typically an extended grid).
pub fn siop_decompose(g: &Field, slab_halfwidth: f64, p: f64, opts: &SiopOptions) -> Result<SiopDecomposition> {
    g.validate()?;
    if g.rank != Rank::Scalar || g.time_axis.is_some() {
        return Err(Error::InvalidArgument("expected a single-time scalar field".into()));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in (1, inf)")));
    }
    let grid = g.grid;
    let zmin = grid.z(0);
    let zmax = grid.z(grid.nlayers() - 1);
    let nu = opts.normal;
    let nn = dot(&nu, &nu).sqrt();
    if (nn - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("slab normal must be a unit vector".into()));
    }
    if !(slab_halfwidth > 0.0) || (nu[2].abs() == 1.0 && slab_halfwidth >= zmax.min(-zmin)) {
        return Err(Error::InvalidArgument("slab wider than the grid".into()));
    }
    let (i, j) = opts.pair;
    if i > 2 || j > 2 {
        return Err(Error::InvalidArgument("kernel component out of range".into()));
    }
    let inside = |x: &Vec3| dot(x, &nu).abs() < slab_halfwidth;
    let mut g1 = g.clone();
    let mut g2 = g.clone();
    let mut sup_out = 0.0f64;
    for k in 0..grid.nlayers() {
        for jj in 0..grid.ny {
            for ii in 0..grid.nx {
                let x = grid.point(ii, jj, k);
                let v = g.get(0, 0, ii, jj, k);
                if inside(&x) {
                    g1.set(0, 0, ii, jj, k, 0.0);
                } else {
                    g2.set(0, 0, ii, jj, k, 0.0);
                    sup_out = sup_out.max(v.abs());
                }
            }
        }
    }
    let tg = apply_t(g, i, j);
    let h1 = apply_t(&g1, i, j);
    let h2 = apply_t(&g2, i, j);
    let reconstruction_error =
        tg.values.iter().zip(h1.values.iter().zip(&h2.values)).fold(0.0f64, |m, (t, (a, b))| m.max((a + b - t).abs()));

    let cube = opts.bmo_max_cube.unwrap_or(grid.half_width.min(grid.height));
    let bmo = norm_bmo(&h1, cube)?.value;
    let bound_h1 = if sup_out > 0.0 { bmo / sup_out } else { 0.0 };
    let timed = |f: &Field| Field { time_axis: Some(vec![0.0]), ..f.clone() };
    let uo = UnifOptions::default();
    let gu = norm_ls_unif(&timed(g), p, f64::INFINITY, uo)?.value;
    let hu = norm_ls_unif(&timed(&h2), p, f64::INFINITY, uo)?.value;
    let bound_h2 = if gu > 0.0 { hu / gu } else { 0.0 };

    // near column and annuli at the reference point
    let (e1, e2) = lateral_basis(nu);
    let x0 = opts.reference;
    let side = opts.cube_side;
    let reach = (grid.half_width - dot(&x0, &x0).sqrt()).max(0.0);
    let n_max = ((reach / side) - 0.5).floor().max(0.0) as usize;
    let vol = grid.hx() * grid.hy() * grid.hz();
    let q = p / (p - 1.0);
    let mut near = 0.0;
    let mut acc = vec![(0.0, 0.0, 0.0); n_max + 1];
    for k in 0..grid.nlayers() {
        for jj in 0..grid.ny {
            for ii in 0..grid.nx {
                let y = grid.point(ii, jj, k);
                if !inside(&y) {
                    continue;
                }
                let z = [x0[0] - y[0], x0[1] - y[1], x0[2] - y[2]];
                let d = dot(&z, &e1).abs().max(dot(&z, &e2).abs());
                let n = (d / side + 0.5).floor() as usize;
                let v = g.get(0, 0, ii, jj, k).abs();
                if n == 0 {
                    if z != [0.0; 3] {
                        near += vol * kernel(z, i, j).abs() * v;
                    }
                    continue;
                }
                if n > n_max {
                    continue;
                }
                let kv = kernel(z, i, j).abs();
                acc[n].0 += vol * kv * v;
                acc[n].1 += vol * kv.powf(q);
                acc[n].2 += vol * v.powf(p);
            }
        }
    }
    let annuli = (1..=n_max)
        .map(|n| AnnulusTerm {
            n,
            contribution: acc[n].0,
            holder_bound: acc[n].1.powf(1.0 / q) * acc[n].2.powf(1.0 / p),
        })
        .collect();
    Ok(SiopDecomposition { h1, h2, tg, bound_h1, bound_h2, reconstruction_error, near_column: near, annuli })
}
