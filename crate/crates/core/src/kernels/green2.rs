//! Boundary correction G² of the half-space Green tensor.
//!
//! Transforming laterally in u = x' − y', the inner plane convolution of ∇E with the lateral heat
//! kernel becomes a product, and the z₃ integral collapses to
//! m(k) = ∫_{y₃}^{x₃+y₃} Γ₁(a) e^{-k(x₃+y₃-a)} da, which has a closed form in erfc. Then
//! Ĝ²_{αβ} = 2k k̂_α k̂_β e^{-tk²} m and Ĝ²_{3β} = 2ik k̂_β e^{-tk²} m.

use super::analytic::g1_scalar;
use super::spectral::{RadialBank, SpectralPlan, SpectralTable, SpectralTerm};
use super::KernelQuery;
use crate::error::{Error, Result};
use crate::quad::{GaussLegendre, QuadratureSpec};
use crate::radial::{Mat3, Vec3};
use crate::special::exp_erfc;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

fn gl16() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(16))
}

#[inline]
pub fn gamma1(a: f64, t: f64) -> f64 {
    (-a * a / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

#[inline]
pub(crate) fn gamma1_d(a: f64, t: f64) -> f64 {
    -a / (2.0 * t) * gamma1(a, t)
}

/// m(k; x₃, y₃, t) alone.
pub fn m_value(k: f64, x3: f64, y3: f64, t: f64) -> f64 {
    let xx = x3 + y3;
    let st = t.sqrt();
    if x3 <= 0.0 {
        0.0
    } else if x3 < st && k * x3 < 0.5 {
        gl16().integrate(y3, xx, |a| gamma1(a, t) * (-k * (xx - a)).exp())
    } else {
        let pre = k * k * t - k * xx;
        let u1 = (2.0 * k * t - xx) / (2.0 * st);
        let u0 = (2.0 * k * t - y3) / (2.0 * st);
        0.5 * (exp_erfc(pre, u1) - exp_erfc(pre, u0))
    }
}

/// The z₃-collapsed profile m and its derivatives in X = x₃ + y₃ and L = y₃.
#[derive(Debug, Clone, Copy, Default)]
pub struct MProfile {
    pub m: f64,
    pub mx: f64,
    pub ml: f64,
    pub mxx: f64,
    pub mxl: f64,
    pub mll: f64,
    /// ∂_t (e^{-tk²} m) · e^{tk²}
    pub mt: f64,
}

impl MProfile {
    pub fn new(k: f64, x3: f64, y3: f64, t: f64) -> Self {
        let xx = x3 + y3;
        let l = y3;
        let m = m_value(k, x3, y3, t);
        let ex = (-k * x3).exp();
        let gx = gamma1(xx, t);
        let gl = gamma1(l, t);
        let gxd = gamma1_d(xx, t);
        let gld = gamma1_d(l, t);
        let mx = gx - k * m;
        let ml = -gl * ex;
        let mxx = gxd - k * mx;
        let mxl = k * gl * ex;
        let mll = -(gld + k * gl) * ex;
        let mt = (gxd - gld * ex) - k * (gx - gl * ex);
        MProfile { m, mx, ml, mxx, mxl, mll, mt }
    }

    /// ∂_{x₃}^a ∂_{y₃}^b m with ∂_{x₃} = ∂_X and ∂_{y₃} = ∂_X + ∂_L.
    pub fn vertical(&self, a: u8, b: u8) -> f64 {
        match (a, b) {
            (0, 0) => self.m,
            (1, 0) => self.mx,
            (0, 1) => self.mx + self.ml,
            (2, 0) => self.mxx,
            (1, 1) => self.mxx + self.mxl,
            (0, 2) => self.mxx + 2.0 * self.mxl + self.mll,
            _ => panic!("vertical derivative order above 2"),
        }
    }
}

/// Radial profile selector for G².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G2Key {
    /// e^{-tk²} ∂_{x₃}^a ∂_{y₃}^b m
    M { a: u8, b: u8 },
    /// ∂_t (e^{-tk²} m)
    Mt,
}

/// Radial profiles of G² at fixed (x₃, y₃, t).
#[derive(Debug, Clone)]
pub struct G2Bank {
    pub x3: f64,
    pub y3: f64,
    pub t: f64,
    pub keys: Vec<G2Key>,
}

impl RadialBank for G2Bank {
    fn n_keys(&self) -> usize {
        self.keys.len()
    }
    fn eval(&self, k: f64, out: &mut [f64]) {
        let p = MProfile::new(k, self.x3, self.y3, self.t);
        let g = (-self.t * k * k).exp();
        for (o, key) in out.iter_mut().zip(&self.keys) {
            *o = g * match *key {
                G2Key::M { a, b } => p.vertical(a, b),
                G2Key::Mt => p.mt,
            };
        }
    }
    fn length_scale(&self) -> f64 {
        self.x3 + self.y3
    }
    fn time(&self) -> f64 {
        self.t
    }
}

/// Terms of G²_{iβ} (i = 0..3, β = 0..2) for key index `key`, with lateral derivatives applied.
pub(crate) fn g2_terms(key: usize, dx: [u8; 3], dy: [u8; 3]) -> Vec<Vec<SpectralTerm>> {
    let mut out = Vec::with_capacity(6);
    for i in 0..3 {
        for b in 0..2 {
            let mut t = SpectralTerm::new(key);
            t.kpow = 1;
            t.trig = t.trig.times_khat(b);
            if i < 2 {
                t.coef = Complex64::new(2.0, 0.0);
                t.trig = t.trig.times_khat(i);
            } else {
                t.coef = Complex64::new(0.0, 2.0);
            }
            for g in 0..2 {
                for _ in 0..dx[g] {
                    t = t.lateral_deriv(g, 1.0);
                }
                for _ in 0..dy[g] {
                    t = t.lateral_deriv(g, -1.0);
                }
            }
            out.push(vec![t]);
        }
    }
    out
}

fn key_for(dx: [u8; 3], dy: [u8; 3], dt: u8) -> Result<G2Key> {
    if dt > 0 {
        if dx[2] > 0 || dy[2] > 0 {
            return Err(Error::InvalidArgument("∂_t combined with vertical derivatives is not supported".into()));
        }
        return Ok(G2Key::Mt);
    }
    if dx[2] + dy[2] > 2 {
        return Err(Error::InvalidArgument("total vertical derivative order above 2".into()));
    }
    Ok(G2Key::M { a: dx[2], b: dy[2] })
}

fn unpack(v: &[f64]) -> Mat3 {
    let mut g = [[0.0; 3]; 3];
    for i in 0..3 {
        for b in 0..2 {
            g[i][b] = v[i * 2 + b];
        }
    }
    g
}

/// Full G² tensor (column 3 identically zero) with derivatives, by adaptive Hankel quadrature.
pub fn green_g2_tensor(x: &Vec3, y: &Vec3, t: f64, dx: [u8; 3], dy: [u8; 3], dt: u8, spec: &QuadratureSpec) -> Result<Mat3> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if x[2] <= 0.0 && dx[2] == 0 {
        return Ok([[0.0; 3]; 3]);
    }
    let key = key_for(dx, dy, dt)?;
    let bank = G2Bank { x3: x[2], y3: y[2], t, keys: vec![key] };
    let plan = SpectralPlan::new(&g2_terms(0, dx, dy));
    let v = plan.eval_adaptive(&bank, [x[0] - y[0], x[1] - y[1]], spec)?;
    Ok(unpack(&v))
}

/// One component G²_{ij} of a query; the j = 3 column is exactly zero.
pub fn green_g2(q: &KernelQuery, spec: &QuadratureSpec) -> Result<f64> {
    q.validate_half_space()?;
    if q.comp[1] == 2 {
        return Ok(0.0);
    }
    let g = green_g2_tensor(&q.x, &q.y, q.t, q.dx, q.dy, q.dt, spec)?;
    Ok(g[q.comp[0]][q.comp[1]])
}

/// G = G¹ + G².
pub fn green_full(q: &KernelQuery, spec: &QuadratureSpec) -> Result<f64> {
    q.validate_half_space()?;
    let g1 = if q.comp[0] == q.comp[1] {
        g1_scalar(&q.x, &q.y, q.t, q.dx, q.dy, q.dt)
    } else {
        0.0
    };
    Ok(g1 + green_g2(q, spec)?)
}

/// G² frozen on a k-rule for fixed (x₃, y₃, t), evaluated at many lateral offsets.
#[derive(Debug, Clone)]
pub struct G2Table {
    table: SpectralTable,
}

impl G2Table {
    pub fn new(x3: f64, y3: f64, t: f64, dx: [u8; 3], dy: [u8; 3], dt: u8, rho_max: f64, resolution: f64) -> Result<Self> {
        let key = key_for(dx, dy, dt)?;
        let bank = G2Bank { x3, y3, t, keys: vec![key] };
        let plan = SpectralPlan::new(&g2_terms(0, dx, dy));
        Ok(G2Table { table: plan.table(&bank, rho_max, resolution) })
    }

    pub fn eval(&self, u: [f64; 2]) -> Mat3 {
        unpack(&self.table.eval(u))
    }

    pub fn ring(&self, rho: f64) -> Vec<f64> {
        self.table.ring(rho)
    }

    pub fn eval_ring(&self, ring: &[f64], phi: f64) -> Mat3 {
        unpack(&self.table.at_angle(ring, phi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m_quad(k: f64, x3: f64, y3: f64, t: f64) -> f64 {
        let gl = GaussLegendre::new(40);
        let br: Vec<f64> = (0..=40).map(|i| y3 + x3 * i as f64 / 40.0).collect();
        gl.composite(&br).into_iter().map(|(a, w)| w * gamma1(a, t) * (-k * (x3 + y3 - a)).exp()).sum()
    }

    #[test]
    fn m_profile_closed_form_matches_quadrature() {
        for &(k, x3, y3, t) in &[
            (0.5, 1.0, 0.2, 0.1),
            (30.0, 1.0, 0.0, 0.01),
            (3.0, 0.05, 0.3, 0.2),
            (200.0, 0.5, 0.01, 1e-3),
            (0.01, 2.0, 1.0, 1.0),
        ] {
            let a = MProfile::new(k, x3, y3, t).m;
            let b = m_quad(k, x3, y3, t);
            assert!((a - b).abs() <= 1e-12 + 1e-9 * b.abs(), "{k} {x3} {y3} {t}: {a} {b}");
        }
    }

    #[test]
    fn m_profile_derivatives_by_fd() {
        let (k, x3, y3, t) = (1.7, 0.6, 0.3, 0.15);
        let e = 1e-5;
        let p = MProfile::new(k, x3, y3, t);
        let f = |a: f64, b: f64| MProfile::new(k, a, b, t);
        let dx = (f(x3 + e, y3).m - f(x3 - e, y3).m) / (2.0 * e);
        let dy = (f(x3, y3 + e).m - f(x3, y3 - e).m) / (2.0 * e);
        assert!((dx - p.vertical(1, 0)).abs() < 1e-7);
        assert!((dy - p.vertical(0, 1)).abs() < 1e-7);
        let dxy = (f(x3, y3 + e).mx - f(x3, y3 - e).mx) / (2.0 * e);
        assert!((dxy - p.vertical(1, 1)).abs() < 1e-6);
        let dyy = (f(x3, y3 + e).vertical(0, 1) - f(x3, y3 - e).vertical(0, 1)) / (2.0 * e);
        assert!((dyy - p.vertical(0, 2)).abs() < 1e-6);
        let g = |tt: f64| (-tt * k * k).exp() * MProfile::new(k, x3, y3, tt).m;
        let dt = (g(t + e) - g(t - e)) / (2.0 * e);
        assert!((dt - (-t * k * k).exp() * p.mt).abs() < 1e-6);
    }

    #[test]
    fn column_three_and_boundary_vanish() {
        let spec = QuadratureSpec::new(1e-8, 1e-14).unwrap();
        let q = KernelQuery::new([0.1, 0.0, 0.4], [0.0, 0.2, 0.1], 0.1).comp([0, 2, 0]);
        assert_eq!(green_g2(&q, &spec).unwrap(), 0.0);
        let q = KernelQuery::new([0.1, 0.0, 0.0], [0.0, 0.2, 0.1], 0.1).comp([0, 1, 0]);
        assert_eq!(green_g2(&q, &spec).unwrap(), 0.0);
    }
}
