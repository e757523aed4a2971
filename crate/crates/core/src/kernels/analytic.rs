//! Closed-form kernels: Γ, E, N^(±), whole-space Φ and K, and G¹.

use super::KernelQuery;
use crate::error::{Error, Result};
use crate::radial::{norm2, radial_deriv, sub, Tensor3, Vec3};
use crate::special::{gamma_star_half, gauss1d_deriv};
use std::f64::consts::PI;

/// ∂^orders ∂_t^dt Γ(z, t).
pub fn heat_deriv(z: &Vec3, t: f64, orders: [u8; 3], dt: u8) -> f64 {
    if dt == 0 {
        return (0..3).map(|i| gauss1d_deriv(z[i], t, orders[i])).product();
    }
    // ∂_t Γ = ΔΓ
    (0..3)
        .map(|l| {
            let mut o = orders;
            o[l] += 2;
            heat_deriv(z, t, o, dt - 1)
        })
        .sum()
}

/// Γ(x − y, t) and its exact derivatives.
pub fn heat_kernel(q: &KernelQuery) -> Result<f64> {
    q.validate()?;
    let z = sub(&q.x, &q.y);
    let mut o = [0u8; 3];
    let mut ny = 0;
    for i in 0..3 {
        o[i] = q.dx[i] + q.dy[i];
        ny += q.dy[i] as i32;
    }
    let s = if ny % 2 == 0 { 1.0 } else { -1.0 };
    Ok(s * heat_deriv(&z, q.t, o, q.dt))
}

fn laplace_h(rho: f64) -> [f64; 5] {
    // g(ρ) = -(4π)^{-1} ρ^{-1/2}; h_k = 2^k g^{(k)}
    let mut h = [0.0; 5];
    let mut c = -1.0 / (4.0 * PI);
    for (k, v) in h.iter_mut().enumerate() {
        *v = c * rho.powf(-0.5 - k as f64);
        c *= 2.0 * (-0.5 - k as f64);
    }
    h
}

/// E(x) = −1/(4π|x|) (ΔE = δ) and derivatives ∂_{idx} E, up to order 4.
pub fn laplace_fundamental(x: &Vec3, idx: &[usize]) -> Result<f64> {
    let r2 = norm2(x);
    if r2 == 0.0 {
        return Err(Error::Singular("E evaluated at the origin"));
    }
    if idx.len() > 4 || idx.iter().any(|&i| i > 2) {
        return Err(Error::InvalidArgument("derivative index".into()));
    }
    Ok(radial_deriv(&laplace_h(r2), x, idx))
}

/// N^(±)(y, z) = E(y − z) ± E(y − z*), with y-derivatives `idx`.
pub fn reflected_poisson_kernel(y: &Vec3, z: &Vec3, sign: f64, idx: &[usize]) -> Result<f64> {
    let zs = [z[0], z[1], -z[2]];
    let a = laplace_fundamental(&sub(y, z), idx)?;
    let b = laplace_fundamental(&sub(y, &zs), idx)?;
    Ok(a + sign.signum() * b)
}

/// h_k = 2^k d^kΦ/dρ^k for the decaying solution of ΔΦ = Γ, ρ = |x|².
pub fn phi_ws_h(rho: f64, t: f64) -> [f64; 5] {
    let u = rho / (4.0 * t);
    let c = (4.0 * PI).powf(-1.5);
    let mut h = [0.0; 5];
    for (k, v) in h.iter_mut().enumerate() {
        let ik = c * t.powf(-(k as f64 + 0.5)) * gamma_star_half(k, u);
        *v = -(-0.5f64).powi(k as i32) * ik;
    }
    h
}

/// Whole-space Φ(x, t) with ΔΦ = Γ, and spatial derivatives up to order 4.
pub fn potential_ws(x: &Vec3, t: f64, idx: &[usize]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if idx.len() > 4 || idx.iter().any(|&i| i > 2) {
        return Err(Error::InvalidArgument("derivative index".into()));
    }
    Ok(radial_deriv(&phi_ws_h(norm2(x), t), x, idx))
}

/// Whole-space K_{mjs}(x, y, t) as a full tensor `[m][j][s]`.
pub fn kernel_ws_tensor(x: &Vec3, y: &Vec3, t: f64) -> Result<Tensor3> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let z = sub(x, y);
    let h = phi_ws_h(norm2(&z), t);
    let mut k = [[[0.0; 3]; 3]; 3];
    let mut gs = [0.0; 3];
    for (s, g) in gs.iter_mut().enumerate() {
        let mut o = [0u8; 3];
        o[s] = 1;
        *g = heat_deriv(&z, t, o, 0);
    }
    for m in 0..3 {
        for j in 0..3 {
            for s in 0..3 {
                let d = if m == j { gs[s] } else { 0.0 };
                k[m][j][s] = -d + radial_deriv(&h, &z, &[m, j, s]);
            }
        }
    }
    Ok(k)
}

pub fn kernel_ws(q: &KernelQuery) -> Result<f64> {
    q.validate()?;
    if q.has_derivatives() {
        return Err(Error::InvalidArgument("kernel_ws evaluates values only".into()));
    }
    let k = kernel_ws_tensor(&q.x, &q.y, q.t)?;
    Ok(k[q.comp[0]][q.comp[1]][q.comp[2]])
}

/// Scalar part Γ(x − y) − Γ(x − y*) of G¹ with derivatives.
pub(crate) fn g1_scalar(x: &Vec3, y: &Vec3, t: f64, dx: [u8; 3], dy: [u8; 3], dt: u8) -> f64 {
    let z = sub(x, y);
    let zs = [x[0] - y[0], x[1] - y[1], x[2] + y[2]];
    let mut o = [0u8; 3];
    for i in 0..3 {
        o[i] = dx[i] + dy[i];
    }
    let lat = dy[0] + dy[1];
    let s_lat = if lat % 2 == 0 { 1.0 } else { -1.0 };
    let s_v = if dy[2] % 2 == 0 { 1.0 } else { -1.0 };
    s_lat * (s_v * heat_deriv(&z, t, o, dt) - heat_deriv(&zs, t, o, dt))
}

/// G¹_{ij}(x, y, t) = δ_ij (Γ(x−y,t) − Γ(x−y*,t)) with exact derivatives.
pub fn green_g1(q: &KernelQuery) -> Result<f64> {
    q.validate_half_space()?;
    if q.comp[0] != q.comp[1] {
        return Ok(0.0);
    }
    Ok(g1_scalar(&q.x, &q.y, q.t, q.dx, q.dy, q.dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GaussLegendre;

    #[test]
    fn heat_kernel_examples() {
        let t = 1.0 / (4.0 * PI);
        let q = KernelQuery::new([0.3, 0.2, 0.1], [0.3, 0.2, 0.1], t);
        assert!((heat_kernel(&q).unwrap() - 1.0).abs() < 1e-14);
        let t: f64 = 0.2;
        let r = (4.0 * t).sqrt();
        let q = KernelQuery::new([r, 0.0, 0.0], [0.0; 3], t);
        let want = (4.0 * PI * t).powf(-1.5) * (-1.0f64).exp();
        assert!((heat_kernel(&q).unwrap() - want).abs() < 1e-14 * want);
        assert!(heat_kernel(&KernelQuery::new([0.0; 3], [0.0; 3], 0.0)).is_err());
    }

    #[test]
    fn heat_kernel_unit_mass() {
        let t: f64 = 0.3;
        let gl = GaussLegendre::new(48);
        let ball = |rad: f64| {
            gl.integrate(0.0, rad, |r| {
                4.0 * PI * r * r * heat_kernel(&KernelQuery::new([r, 0.0, 0.0], [0.0; 3], t)).unwrap()
            })
        };
        // exact mass of the ball of radius R: erf(a) − 2a e^{−a²}/√π, a = R/(2√t)
        let a: f64 = 4.0;
        let exact = libm::erf(a) - 2.0 * a * (-a * a).exp() / PI.sqrt();
        assert!((ball(8.0 * t.sqrt()) - exact).abs() < 1e-8);
        assert!((ball(12.0 * t.sqrt()) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn time_derivative_is_laplacian() {
        let x = [0.2, -0.4, 0.5];
        let t = 0.15;
        let e = 1e-6;
        let q = KernelQuery::new(x, [0.0; 3], t);
        let fd = (heat_kernel(&KernelQuery { t: t + e, ..q }).unwrap() - heat_kernel(&KernelQuery { t: t - e, ..q }).unwrap()) / (2.0 * e);
        let an = heat_kernel(&q.dt(1)).unwrap();
        assert!((fd - an).abs() < 1e-6 * an.abs());
    }

    #[test]
    fn laplace_examples_and_flux() {
        let v = laplace_fundamental(&[1.0, 0.0, 0.0], &[]).unwrap();
        assert!((v + 0.0795774715459).abs() < 1e-12);
        assert!(laplace_fundamental(&[0.0; 3], &[]).is_err());
        // flux through sphere r = 0.5
        let r = 0.5;
        let gl = GaussLegendre::new(24);
        let mut flux = 0.0;
        for (ct, wc) in gl.on(-1.0, 1.0) {
            for (ph, wp) in gl.on(0.0, 2.0 * PI) {
                let st = (1.0 - ct * ct).sqrt();
                let n = [st * ph.cos(), st * ph.sin(), ct];
                let x = [r * n[0], r * n[1], r * n[2]];
                let g: f64 = (0..3).map(|i| laplace_fundamental(&x, &[i]).unwrap() * n[i]).sum();
                flux += wc * wp * r * r * g;
            }
        }
        assert!((flux - 1.0).abs() < 1e-6);
        // ∂_i E = x_i / (4π|x|^3)
        let x = [0.3, -0.7, 0.4];
        let r3 = norm2(&x).powf(1.5);
        assert!((laplace_fundamental(&x, &[1]).unwrap() - x[1] / (4.0 * PI * r3)).abs() < 1e-14);
    }

    #[test]
    fn reflected_kernel_examples() {
        let y = [0.3, 0.1, 0.7];
        let z = [-0.2, 0.4, 0.0];
        assert!(reflected_poisson_kernel(&y, &z, -1.0, &[]).unwrap().abs() < 1e-15);
        let yb = [0.3, 0.1, 0.0];
        let z2 = [-0.2, 0.4, 0.6];
        assert!(reflected_poisson_kernel(&yb, &z2, 1.0, &[2]).unwrap().abs() < 1e-15);
        let a = reflected_poisson_kernel(&y, &z2, 1.0, &[]).unwrap() + reflected_poisson_kernel(&y, &z2, -1.0, &[]).unwrap();
        let b = 2.0 * laplace_fundamental(&sub(&y, &z2), &[]).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn phi_laplacian_is_heat_kernel() {
        let t = 0.5;
        let x = [1.0, 0.0, 0.0];
        let e = 1e-3;
        let f = |p: Vec3| potential_ws(&p, t, &[]).unwrap();
        let mut lap = -6.0 * f(x);
        for i in 0..3 {
            let mut p = x;
            p[i] += e;
            lap += f(p);
            p[i] -= 2.0 * e;
            lap += f(p);
        }
        lap /= e * e;
        let g = heat_deriv(&x, t, [0; 3], 0);
        assert!((lap - g).abs() < 1e-5 * g);
        // analytic Laplacian from second derivatives
        let an: f64 = (0..3).map(|i| potential_ws(&x, t, &[i, i]).unwrap()).sum();
        assert!((an - g).abs() < 1e-12 * g);
    }

    #[test]
    fn phi_far_field() {
        let t: f64 = 0.25;
        let r = 40.0 * t.sqrt();
        let v = potential_ws(&[r, 0.0, 0.0], t, &[]).unwrap();
        assert!((v * (-4.0 * PI * r) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn kernel_ws_trace_and_symmetry() {
        let x = [0.4, -0.1, 0.9];
        let y = [0.0, 0.3, 0.2];
        let t = 0.2;
        let k = kernel_ws_tensor(&x, &y, t).unwrap();
        let z = sub(&x, &y);
        for s in 0..3 {
            let mut o = [0u8; 3];
            o[s] = 1;
            let ds = heat_deriv(&z, t, o, 0);
            let tr: f64 = (0..3).map(|m| k[m][m][s]).sum();
            assert!((tr + 2.0 * ds).abs() < 1e-8, "trace {tr} vs {}", -2.0 * ds);
            for m in 0..3 {
                for j in 0..3 {
                    let a = k[m][j][s] + if m == j { ds } else { 0.0 };
                    let b = k[j][m][s] + if m == j { ds } else { 0.0 };
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn g1_vanishes_on_boundary_and_off_diagonal() {
        let q = KernelQuery::new([0.1, 0.2, 0.5], [0.3, -0.1, 0.0], 0.1);
        assert_eq!(green_g1(&q).unwrap(), 0.0);
        let q2 = KernelQuery::new([0.1, 0.2, 0.5], [0.3, -0.1, 0.4], 0.1).comp([0, 1, 0]);
        assert_eq!(green_g1(&q2).unwrap(), 0.0);
        let q3 = KernelQuery::new([0.1, 0.2, 5.0], [0.3, -0.1, 5.1], 0.01);
        let a = green_g1(&q3).unwrap();
        let b = heat_kernel(&q3).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
    }
}
