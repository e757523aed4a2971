//! Half-space potentials Φ_mn (Neumann for n < 3, Dirichlet for n = 3) and the kernel
//! K_mjs = ∂_{y_s} G_mj − Σ_n ∂³Φ_mn/∂y_n∂y_j∂y_s.
//!
//! Laterally, Φ̂_mn(k; y₃) = ∫_0^∞ N̂^σ(k; y₃, z₃) Ĝ_mn(k; x₃, z₃) dz₃ with
//! N̂^σ = −(e^{-k|y₃−z₃|} + σ e^{-k(y₃+z₃)})/(2k). Vertical derivatives of order two and three
//! use (∂²_{y₃} − k²) V = source(y₃).

use super::analytic::g1_scalar;
use super::green2::{g2_terms, gamma1, gamma1_d, G2Key, MProfile};
use super::spectral::{RadialBank, SpectralPlan, SpectralTable, SpectralTerm};
use super::KernelQuery;
use crate::error::{Error, Result};
use crate::quad::{graded_breaks, merge_breaks, GaussLegendre, QuadratureSpec};
use crate::radial::{Tensor3, Vec3};
use num_complex::Complex64;
use std::sync::OnceLock;

fn gl16() -> &'static GaussLegendre {
    static R: OnceLock<GaussLegendre> = OnceLock::new();
    R.get_or_init(|| GaussLegendre::new(16))
}

/// Radial profile selector for half-space potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsKey {
    G2(G2Key),
    /// d-th y₃-derivative of the potential of the G¹ profile with reflection sign σ.
    P1 { sigma: i8, d: u8 },
    /// d-th y₃-derivative of the (Neumann) potential of the G² profile 2k e^{-tk²} m.
    P2 { d: u8 },
}

#[derive(Debug, Clone, Default)]
struct KeyReg {
    keys: Vec<HsKey>,
}

impl KeyReg {
    fn idx(&mut self, k: HsKey) -> usize {
        match self.keys.iter().position(|x| *x == k) {
            Some(i) => i,
            None => {
                self.keys.push(k);
                self.keys.len() - 1
            }
        }
    }
}

/// Radial profiles at fixed (x₃, y₃, t); potential profiles are z₃-integrals.
#[derive(Debug, Clone)]
pub struct HalfSpaceBank {
    pub x3: f64,
    pub y3: f64,
    pub t: f64,
    keys: Vec<HsKey>,
    need_p1p: bool,
    need_p1m: bool,
    need_p2: bool,
    resolution: f64,
}

impl HalfSpaceBank {
    fn new(x3: f64, y3: f64, t: f64, keys: Vec<HsKey>, resolution: f64) -> Self {
        let need_p1p = keys.iter().any(|k| matches!(k, HsKey::P1 { sigma: 1, .. }));
        let need_p1m = keys.iter().any(|k| matches!(k, HsKey::P1 { sigma: -1, .. }));
        let need_p2 = keys.iter().any(|k| matches!(k, HsKey::P2 { .. }));
        HalfSpaceBank { x3, y3, t, keys, need_p1p, need_p1m, need_p2, resolution }
    }

    fn z_nodes(&self, k: f64) -> Vec<(f64, f64)> {
        let st = self.t.sqrt();
        let w = 12.0 * st;
        let hmax = 1.5 * st / self.resolution;
        let mut segs = vec![(0.0, w)];
        if self.need_p1p || self.need_p1m {
            segs.push(((self.x3 - w).max(0.0), self.x3 + w));
        }
        segs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for s in segs {
            match merged.last_mut() {
                Some(l) if s.0 <= l.1 => l.1 = l.1.max(s.1),
                _ => merged.push(s),
            }
        }
        let h0 = (0.25 / k.max(1e-300)).min(hmax);
        let mut out = Vec::new();
        for (a, b) in merged {
            let mut br: Vec<f64> = Vec::new();
            let n = ((b - a) / hmax).ceil().max(1.0) as usize;
            br.extend((0..=n).map(|i| a + (b - a) * i as f64 / n as f64));
            if h0 < hmax {
                for c in [a, self.y3] {
                    if c >= a && c <= b {
                        br.extend(graded_breaks(c, b, h0, 2.0).into_iter().take_while(|&x| x < c + hmax));
                        br.extend(graded_breaks(0.0, c - a, h0, 2.0).into_iter().map(|d| c - d).take_while(|&x| x > c - hmax));
                    }
                }
            }
            br.push(self.y3);
            br.push(self.x3);
            let br = merge_breaks(a, b, &br);
            out.extend(gl16().composite(&br));
        }
        out
    }
}

struct Sources {
    h1: f64,
    h1d: f64,
    h2: f64,
    h2d: f64,
}

fn sources(k: f64, x3: f64, z: f64, t: f64, want1: bool, want2: bool) -> Sources {
    let g = (-t * k * k).exp();
    let (h1, h1d) = if want1 {
        (
            g * (gamma1(x3 - z, t) - gamma1(x3 + z, t)),
            g * (-gamma1_d(x3 - z, t) - gamma1_d(x3 + z, t)),
        )
    } else {
        (0.0, 0.0)
    };
    let (h2, h2d) = if want2 {
        let p = MProfile::new(k, x3, z, t);
        (2.0 * k * g * p.m, 2.0 * k * g * p.vertical(0, 1))
    } else {
        (0.0, 0.0)
    };
    Sources { h1, h1d, h2, h2d }
}

impl RadialBank for HalfSpaceBank {
    fn n_keys(&self) -> usize {
        self.keys.len()
    }

    fn eval(&self, k: f64, out: &mut [f64]) {
        // [V0, V1] for (P1,+), (P1,-), (P2,+)
        let mut v = [[0.0f64; 2]; 3];
        let want1 = self.need_p1p || self.need_p1m;
        if want1 || self.need_p2 {
            let y = self.y3;
            for (z, w) in self.z_nodes(k) {
                let s = sources(k, self.x3, z, self.t, want1, self.need_p2);
                let a = k * (y - z).abs();
                let ea = (-a).exp();
                let eb = (-k * (y + z)).exp();
                let sg = if y >= z { 1.0 } else { -1.0 };
                // N̂^±, ∂_{y₃} N̂^±
                let np = -(ea + eb) / (2.0 * k);
                let nm = ea * (-2.0 * k * y.min(z)).exp_m1() / (2.0 * k);
                let dnp = (sg * ea + eb) / 2.0;
                let dnm = (sg * ea - eb) / 2.0;
                if self.need_p1p {
                    v[0][0] += w * np * s.h1;
                    v[0][1] += w * dnp * s.h1;
                }
                if self.need_p1m {
                    v[1][0] += w * nm * s.h1;
                    v[1][1] += w * dnm * s.h1;
                }
                if self.need_p2 {
                    v[2][0] += w * np * s.h2;
                    v[2][1] += w * dnp * s.h2;
                }
            }
        }
        let src = sources(k, self.x3, self.y3, self.t, want1, self.need_p2);
        let mp = MProfile::new(k, self.x3, self.y3, self.t);
        let g = (-self.t * k * k).exp();
        let k2 = k * k;
        let deriv = |vv: [f64; 2], h: f64, hd: f64, d: u8| match d {
            0 => vv[0],
            1 => vv[1],
            2 => k2 * vv[0] + h,
            3 => k2 * vv[1] + hd,
            _ => unreachable!(),
        };
        for (o, key) in out.iter_mut().zip(&self.keys) {
            *o = match *key {
                HsKey::G2(G2Key::M { a, b }) => g * mp.vertical(a, b),
                HsKey::G2(G2Key::Mt) => g * mp.mt,
                HsKey::P1 { sigma, d } => {
                    let vv = if sigma > 0 { v[0] } else { v[1] };
                    deriv(vv, src.h1, src.h1d, d)
                }
                HsKey::P2 { d } => deriv(v[2], src.h2, src.h2d, d),
            };
        }
    }

    fn length_scale(&self) -> f64 {
        self.x3 + self.y3 + 12.0 * self.t.sqrt()
    }

    fn time(&self) -> f64 {
        self.t
    }
}

/// Terms of ∂_{y_{derivs}} Φ_mn (indices 0..3; derivs lists y-derivative directions).
fn phi_terms(m: usize, n: usize, derivs: &[usize], reg: &mut KeyReg) -> Vec<SpectralTerm> {
    let dv = derivs.iter().filter(|&&d| d == 2).count() as u8;
    let apply = |mut t: SpectralTerm| {
        for &d in derivs {
            if d < 2 {
                t = t.lateral_deriv(d, -1.0);
            }
        }
        t
    };
    let mut out = Vec::new();
    if m == n {
        let sigma = if n < 2 { 1 } else { -1 };
        out.push(apply(SpectralTerm::new(reg.idx(HsKey::P1 { sigma, d: dv }))));
    }
    if n < 2 {
        let mut t = SpectralTerm::new(reg.idx(HsKey::P2 { d: dv }));
        t.trig = t.trig.times_khat(n);
        if m < 2 {
            t.trig = t.trig.times_khat(m);
        } else {
            t.coef = Complex64::new(0.0, 1.0);
        }
        out.push(apply(t));
    }
    out
}

/// Spectral terms for the 27 components of K (without the analytic G¹ part), indexed m*9 + j*3 + s.
fn k_terms(reg: &mut KeyReg) -> Vec<Vec<SpectralTerm>> {
    let g2_plain = reg.idx(HsKey::G2(G2Key::M { a: 0, b: 0 }));
    let g2_dy3 = reg.idx(HsKey::G2(G2Key::M { a: 0, b: 1 }));
    let mut out = vec![Vec::new(); 27];
    for s in 0..3 {
        let (key, dy) = if s < 2 {
            let mut d = [0u8; 3];
            d[s] = 1;
            (g2_plain, d)
        } else {
            (g2_dy3, [0u8; 3])
        };
        let g2 = g2_terms(key, [0; 3], dy);
        for m in 0..3 {
            for j in 0..2 {
                out[m * 9 + j * 3 + s].extend(g2[m * 2 + j].iter().copied());
            }
        }
    }
    for m in 0..3 {
        for j in 0..3 {
            for s in 0..3 {
                for n in 0..3 {
                    let ts = phi_terms(m, n, &[n, j, s], reg);
                    out[m * 9 + j * 3 + s].extend(ts.into_iter().map(|t| t.scaled(Complex64::new(-1.0, 0.0))));
                }
            }
        }
    }
    out
}

fn g1_ys(x: &Vec3, y: &Vec3, t: f64, s: usize) -> f64 {
    let mut dy = [0u8; 3];
    dy[s] = 1;
    g1_scalar(x, y, t, [0; 3], dy, 0)
}

fn pack_k(x: &Vec3, y: &Vec3, t: f64, v: &[f64]) -> Tensor3 {
    let mut k = [[[0.0; 3]; 3]; 3];
    let g1 = [g1_ys(x, y, t, 0), g1_ys(x, y, t, 1), g1_ys(x, y, t, 2)];
    for m in 0..3 {
        for j in 0..3 {
            for s in 0..3 {
                k[m][j][s] = v[m * 9 + j * 3 + s] + if m == j { g1[s] } else { 0.0 };
            }
        }
    }
    k
}

fn check(x: &Vec3, y: &Vec3, t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if x[2] < 0.0 || y[2] < 0.0 {
        return Err(Error::InvalidArgument("half-space kernels need x₃, y₃ >= 0".into()));
    }
    Ok(())
}

/// Full K_mjs(x, y, t) tensor `[m][j][s]`, adaptive in k.
pub fn kernel_hs_tensor(x: &Vec3, y: &Vec3, t: f64, spec: &QuadratureSpec) -> Result<Tensor3> {
    check(x, y, t)?;
    let mut reg = KeyReg::default();
    let terms = k_terms(&mut reg);
    let bank = HalfSpaceBank::new(x[2], y[2], t, reg.keys, spec.resolution_factor());
    let plan = SpectralPlan::new(&terms);
    let v = plan.eval_adaptive(&bank, [x[0] - y[0], x[1] - y[1]], spec)?;
    Ok(pack_k(x, y, t, &v))
}

/// One component K_{comp[0] comp[1] comp[2]}.
pub fn kernel_hs(q: &KernelQuery, spec: &QuadratureSpec) -> Result<f64> {
    q.validate_half_space()?;
    if q.has_derivatives() {
        return Err(Error::InvalidArgument("kernel_hs evaluates values only".into()));
    }
    let k = kernel_hs_tensor(&q.x, &q.y, q.t, spec)?;
    Ok(k[q.comp[0]][q.comp[1]][q.comp[2]])
}

/// ∂_{y_{derivs}} Φ_mn(x, y, t); at most three derivatives, at most three in y₃.
pub fn potential_hs(x: &Vec3, y: &Vec3, t: f64, mn: (usize, usize), derivs: &[usize], spec: &QuadratureSpec) -> Result<f64> {
    check(x, y, t)?;
    if mn.0 > 2 || mn.1 > 2 || derivs.len() > 3 || derivs.iter().any(|&d| d > 2) {
        return Err(Error::InvalidArgument("component or derivative index".into()));
    }
    let mut reg = KeyReg::default();
    let terms = vec![phi_terms(mn.0, mn.1, derivs, &mut reg)];
    let bank = HalfSpaceBank::new(x[2], y[2], t, reg.keys, spec.resolution_factor());
    let plan = SpectralPlan::new(&terms);
    Ok(plan.eval_adaptive(&bank, [x[0] - y[0], x[1] - y[1]], spec)?[0])
}

/// Frozen G²-generated and G¹-generated parts of Σ_n ∂³Φ_mn/∂y_n∂y_j∂y_s, for decay studies.
/// Outputs are indexed part*27 + m*9 + j*3 + s with part 0 from G¹, part 1 from G².
pub fn phi_term_parts(x: &Vec3, y: &Vec3, t: f64, spec: &QuadratureSpec) -> Result<[Tensor3; 2]> {
    check(x, y, t)?;
    let mut reg = KeyReg::default();
    let mut terms = vec![Vec::new(); 54];
    for m in 0..3 {
        for j in 0..3 {
            for s in 0..3 {
                for n in 0..3 {
                    for tm in phi_terms(m, n, &[n, j, s], &mut reg) {
                        let part = match reg.keys[tm.key] {
                            HsKey::P1 { .. } => 0,
                            _ => 1,
                        };
                        terms[part * 27 + m * 9 + j * 3 + s].push(tm);
                    }
                }
            }
        }
    }
    let bank = HalfSpaceBank::new(x[2], y[2], t, reg.keys, spec.resolution_factor());
    let plan = SpectralPlan::new(&terms);
    let v = plan.eval_adaptive(&bank, [x[0] - y[0], x[1] - y[1]], spec)?;
    let mut out = [[[[0.0; 3]; 3]; 3]; 2];
    for p in 0..2 {
        for m in 0..3 {
            for j in 0..3 {
                for s in 0..3 {
                    out[p][m][j][s] = v[p * 27 + m * 9 + j * 3 + s];
                }
            }
        }
    }
    Ok(out)
}

/// K frozen on a k-rule for fixed (x₃, y₃, t), evaluated at many lateral offsets.
#[derive(Debug, Clone)]
pub struct KernelTableHs {
    x3: f64,
    y3: f64,
    t: f64,
    table: SpectralTable,
}

impl KernelTableHs {
    pub fn new(x3: f64, y3: f64, t: f64, rho_max: f64, resolution: f64) -> Result<Self> {
        check(&[0.0, 0.0, x3], &[0.0, 0.0, y3], t)?;
        let mut reg = KeyReg::default();
        let terms = k_terms(&mut reg);
        let bank = HalfSpaceBank::new(x3, y3, t, reg.keys, resolution);
        let plan = SpectralPlan::new(&terms);
        Ok(KernelTableHs { x3, y3, t, table: plan.table(&bank, rho_max, resolution) })
    }

    pub fn n_nodes(&self) -> usize {
        self.table.n_nodes()
    }

    pub fn n_slots(&self) -> usize {
        self.table.n_slots()
    }

    /// K at lateral offset u = x' − y'.
    pub fn eval(&self, u: [f64; 2]) -> Tensor3 {
        let v = self.table.eval(u);
        pack_k(&[u[0], u[1], self.x3], &[0.0, 0.0, self.y3], self.t, &v)
    }

    /// Radial part at |u| = ρ, shared by all offsets on that circle.
    pub fn ring(&self, rho: f64) -> Vec<f64> {
        self.table.ring(rho)
    }

    /// K at u = ρ(cos φ, sin φ) from a precomputed [`KernelTableHs::ring`].
    pub fn eval_ring(&self, ring: &[f64], rho: f64, phi: f64) -> Tensor3 {
        let v = self.table.at_angle(ring, phi);
        pack_k(&[rho * phi.cos(), rho * phi.sin(), self.x3], &[0.0, 0.0, self.y3], self.t, &v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_conditions_of_potentials() {
        let spec = QuadratureSpec::new(1e-9, 1e-13).unwrap();
        let x = [0.2, -0.1, 0.7];
        let t = 0.2;
        let yb = [0.5, 0.3, 0.0];
        for m in 0..3 {
            let v = potential_hs(&x, &yb, t, (m, 2), &[], &spec).unwrap();
            assert!(v.abs() < 1e-10, "Dirichlet m={m}: {v}");
            for n in 0..2 {
                let d = potential_hs(&x, &yb, t, (m, n), &[2], &spec).unwrap();
                assert!(d.abs() < 1e-10, "Neumann m={m} n={n}: {d}");
            }
        }
    }

    fn green_mn(x: &Vec3, y: &Vec3, t: f64, m: usize, n: usize, spec: &QuadratureSpec) -> f64 {
        crate::kernels::green_full(&KernelQuery::new(*x, *y, t).comp([m, n, 0]), spec).unwrap()
    }

    #[test]
    fn laplacian_of_potential_is_green() {
        let spec = QuadratureSpec::new(1e-11, 1e-14).unwrap();
        let x = [0.1, 0.2, 0.6];
        let y = [0.4, -0.1, 0.5];
        let t = 0.15;
        let e = 2e-2;
        for (m, n) in [(0, 0), (0, 1), (2, 0), (2, 2), (1, 2)] {
            let f = |p: Vec3| potential_hs(&x, &p, t, (m, n), &[], &spec).unwrap();
            // fourth-order Laplacian stencil
            let mut lap = -3.0 * 30.0 * f(y);
            for i in 0..3 {
                for (c, s) in [(16.0, 1.0), (-1.0, 2.0)] {
                    let mut p = y;
                    p[i] += s * e;
                    lap += c * f(p);
                    p[i] -= 2.0 * s * e;
                    lap += c * f(p);
                }
            }
            lap /= 12.0 * e * e;
            let g = green_mn(&x, &y, t, m, n, &spec);
            let scale = green_mn(&x, &y, t, m, m, &spec).abs().max(g.abs());
            assert!((lap - g).abs() < 1e-3 * scale, "({m},{n}) lap {lap} G {g}");
        }
    }

    #[test]
    fn analytic_potential_derivatives_match_fd() {
        let spec = QuadratureSpec::new(1e-11, 1e-14).unwrap();
        let x = [0.1, 0.2, 0.6];
        let y = [0.4, -0.1, 0.5];
        let t = 0.2;
        let e = 1e-3;
        for (m, n) in [(0, 1), (2, 0), (1, 1)] {
            for base in [vec![], vec![2usize], vec![0, 2]] {
                for s in 0..3 {
                    let mut yp = y;
                    yp[s] += e;
                    let mut ym = y;
                    ym[s] -= e;
                    let fd = (potential_hs(&x, &yp, t, (m, n), &base, &spec).unwrap()
                        - potential_hs(&x, &ym, t, (m, n), &base, &spec).unwrap())
                        / (2.0 * e);
                    let mut d = base.clone();
                    d.push(s);
                    let an = potential_hs(&x, &y, t, (m, n), &d, &spec).unwrap();
                    assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "({m},{n}) {d:?}: fd {fd} an {an}");
                }
            }
        }
    }

    #[test]
    fn kernel_table_matches_pointwise() {
        let spec = QuadratureSpec::new(1e-10, 1e-14).unwrap();
        let t = 0.1;
        let tab = KernelTableHs::new(0.7, 0.4, t, 2.0, 1.0).unwrap();
        for u in [[0.0, 0.0], [0.3, -0.4], [1.1, 0.9]] {
            let a = tab.eval(u);
            let b = kernel_hs_tensor(&[u[0], u[1], 0.7], &[0.0, 0.0, 0.4], t, &spec).unwrap();
            let scale = b.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            for m in 0..3 {
                for j in 0..3 {
                    for s in 0..3 {
                        assert!((a[m][j][s] - b[m][j][s]).abs() < 1e-7 * scale);
                    }
                }
            }
        }
    }
}
