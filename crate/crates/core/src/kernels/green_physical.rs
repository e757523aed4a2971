//! Direct evaluation of G² from its iterated physical-space integral: an outer adaptive integral
//! over z₃ ∈ [0, x₃] and an inner plane integral of ∂_β∂_i E against the lateral heat kernel,
//! taken in polar coordinates about the singular point of E.

use super::green2::gamma1;
use crate::error::{Error, Result};
use crate::quad::{adaptive_vec, merge_breaks, QuadratureSpec};
use crate::radial::{Mat3, Vec3};
use std::f64::consts::PI;

fn gauss2(d2: f64, t: f64) -> f64 {
    (-d2 / (4.0 * t)).exp() / (4.0 * PI * t)
}

/// Angular moments of Γ₂(u − r q̂): [∫1, ∫q̂₁q̂₁, ∫q̂₁q̂₂, ∫q̂₂q̂₂, ∫q̂₁, ∫q̂₂] dθ.
fn angular_moments(u: [f64; 2], r: f64, t: f64) -> [f64; 6] {
    let ur = (u[0] * u[0] + u[1] * u[1]).sqrt();
    let kappa = r * ur / (2.0 * t);
    let n = ((32.0 + 10.0 * kappa.sqrt()) as usize).next_multiple_of(4);
    let base = -(ur * ur + r * r) / (4.0 * t);
    let mut m = [0.0; 6];
    let dth = 2.0 * PI / n as f64;
    for j in 0..n {
        let th = j as f64 * dth;
        let (s, c) = th.sin_cos();
        let g = (base + r * (u[0] * c + u[1] * s) / (2.0 * t)).exp();
        m[0] += g;
        m[1] += g * c * c;
        m[2] += g * c * s;
        m[3] += g * s * s;
        m[4] += g * c;
        m[5] += g * s;
    }
    let f = dth / (4.0 * PI * t);
    m.iter_mut().for_each(|v| *v *= f);
    m
}

/// P_{iβ}(u, h) = ∫ (∂_β∂_i E)(q, h) Γ₂(u − q) dq for i = 1..3, β = 1..2, packed as [i*2+β].
fn plane_convolution(u: [f64; 2], h: f64, t: f64, spec: &QuadratureSpec) -> Result<[f64; 6]> {
    let ur = (u[0] * u[0] + u[1] * u[1]).sqrt();
    let st = t.sqrt();
    let rmax = ur + 14.0 * st;
    let g0 = gauss2(ur * ur, t);
    let mut br = vec![ur - 4.0 * st, ur, ur + 4.0 * st];
    for s in [0.25, 0.5, 1.0, 2.0, 4.0] {
        br.push(s * h);
        br.push(s * st);
    }
    let breaks = merge_breaks(0.0, rmax, &br);
    let c = 1.0 / (4.0 * PI);
    let v = adaptive_vec(
        |r, out| {
            let rr = (r * r + h * h).sqrt();
            let r3 = rr.powi(3);
            let r5 = rr.powi(5);
            let a = angular_moments(u, r, t);
            // lateral block, with the angular mean of Γ₂(u) removed
            let sub0 = g0 * 2.0 * PI;
            let subq = g0 * PI;
            let aq = [[a[1] - subq, a[2]], [a[2], a[3] - subq]];
            for i in 0..2 {
                for b in 0..2 {
                    let d = if i == b { (a[0] - sub0) / r3 } else { 0.0 };
                    out[i * 2 + b] = c * r * (d - 3.0 * r * r * aq[i][b] / r5);
                }
            }
            for b in 0..2 {
                out[4 + b] = c * r * (-3.0 * h * r * a[4 + b] / r5);
            }
        },
        &breaks,
        6,
        spec,
    )?;
    // the removed constant integrates to −I(rmax) over [0, rmax], I(R) = ∫_R^∞ r(R⁻³ − 1.5r²R⁻⁵) dr
    let rho = (rmax * rmax + h * h).sqrt();
    let tail = -0.5 / rho + 0.5 * h * h / rho.powi(3);
    let mut p = [0.0; 6];
    p.copy_from_slice(&v);
    p[0] += c * g0 * 2.0 * PI * (-tail);
    p[3] += c * g0 * 2.0 * PI * (-tail);
    Ok(p)
}

/// G²(x, y, t) by the nested physical-space integral (values only).
pub fn green_g2_physical(x: &Vec3, y: &Vec3, t: f64, spec: &QuadratureSpec) -> Result<Mat3> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let mut g = [[0.0; 3]; 3];
    if x[2] <= 0.0 {
        return Ok(g);
    }
    let u = [x[0] - y[0], x[1] - y[1]];
    let x3 = x[2];
    let inner = QuadratureSpec { rel_tol: spec.rel_tol * 0.1, abs_tol: spec.abs_tol * 0.1, ..*spec };
    let mut br = vec![];
    for j in 1..12 {
        br.push(x3 - x3 * 0.5f64.powi(j));
    }
    let st = t.sqrt();
    br.extend([st, 2.0 * st, 4.0 * st]);
    let breaks = merge_breaks(0.0, x3, &br);
    let mut err = None;
    let v = adaptive_vec(
        |z3, out| {
            let w = 4.0 * gamma1(z3 + y[2], t);
            if w == 0.0 {
                return;
            }
            match plane_convolution(u, x3 - z3, t, &inner) {
                Ok(p) => {
                    for i in 0..6 {
                        out[i] = w * p[i];
                    }
                }
                Err(e) => err = Some(e),
            }
        },
        &breaks,
        6,
        spec,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    for i in 0..3 {
        for b in 0..2 {
            g[i][b] = v[i * 2 + b];
        }
    }
    Ok(g)
}
