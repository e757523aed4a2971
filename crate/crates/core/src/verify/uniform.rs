//! Space-time integrals of |∇_y G² f| against the uniform norm of f, and the near-singularity
//! model integral that decides when they are finite.

use super::estimates::C_EXP;
use super::fit::{EstimateFit, FitRow, RefinementStep, Verdict};
use crate::error::{Error, Result};
use crate::fields::bump;
use crate::kernels::G2Table;
use crate::quad::GaussLegendre;
use crate::radial::Vec3;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Time-independent f = amplitude · bump(|y − c|/r) e₁, supported in a ball of radius r ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpForce {
    pub center: Vec3,
    pub radius: f64,
    pub amplitude: f64,
}

impl BumpForce {
    pub fn value(&self, y: &Vec3) -> f64 {
        let d = ((y[0] - self.center[0]).powi(2) + (y[1] - self.center[1]).powi(2) + (y[2] - self.center[2]).powi(2)).sqrt();
        self.amplitude * bump(d / self.radius)
    }

    /// ‖f‖ in L_{s,l,unif} over (A, 0) with unit balls: |A|^{1/l} ‖f‖_{L_s}, since the support fits
    /// in one unit ball.
    pub fn unif_norm(&self, s: f64, l: f64, a: f64) -> f64 {
        let gl = GaussLegendre::new(64);
        let ls = if s.is_infinite() {
            self.amplitude.abs() * bump(0.0)
        } else {
            let v = gl.integrate(0.0, self.radius, |r| 4.0 * PI * r * r * (self.amplitude.abs() * bump(r / self.radius)).powf(s));
            v.powf(1.0 / s)
        };
        let tl = if l.is_infinite() { 1.0 } else { (-a).powf(1.0 / l) };
        ls * tl
    }
}

/// ∫_A^t ∫ |∇_y G²(x, y, t − τ) f(y)| dy dτ with λ = t − τ = μ² and polar lateral nodes about x'.
/// `n` Gauss nodes per axis.
pub fn gradient_integral(x: &Vec3, t: f64, a: f64, f: &BumpForce, n: usize) -> Result<f64> {
    if !(t > a) || x[2] < 0.0 {
        return Err(Error::InvalidArgument("need t > A and x₃ >= 0".into()));
    }
    if f.amplitude == 0.0 {
        return Ok(0.0);
    }
    let gl = GaussLegendre::new(n);
    let mus: Vec<(f64, f64)> = gl.on(0.0, (t - a).sqrt()).collect();
    let zs: Vec<(f64, f64)> = gl.on((f.center[2] - f.radius).max(0.0), f.center[2] + f.radius).collect();
    let off = ((x[0] - f.center[0]).powi(2) + (x[1] - f.center[1]).powi(2)).sqrt();
    let rs: Vec<(f64, f64)> = gl.on(0.0, off + f.radius).collect();
    let na = 2 * n;
    let dphi = 2.0 * PI / na as f64;
    let rho_max = off + f.radius + 1.0;
    let per_mu = |&(mu, wmu): &(f64, f64)| -> Result<f64> {
        let lam = mu * mu;
        if lam == 0.0 {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for &(y3, wz) in &zs {
            let tabs = (0..3)
                .map(|k| {
                    let mut dy = [0u8; 3];
                    dy[k] = 1;
                    G2Table::new(x[2], y3, lam, [0; 3], dy, 0, rho_max, 1.0)
                })
                .collect::<Result<Vec<_>>>()?;
            for &(r, wr) in &rs {
                let rings: Vec<Vec<f64>> = tabs.iter().map(|tb| tb.ring(r)).collect();
                for ia in 0..na {
                    let phi = ia as f64 * dphi;
                    let y = [x[0] - r * phi.cos(), x[1] - r * phi.sin(), y3];
                    let fv = f.value(&y);
                    if fv == 0.0 {
                        continue;
                    }
                    let mut s2 = 0.0;
                    for (tb, ring) in tabs.iter().zip(&rings) {
                        let g = tb.eval_ring(ring, phi);
                        s2 += (0..3).map(|i| g[i][0] * g[i][0]).sum::<f64>();
                    }
                    acc += wz * wr * r * dphi * s2.sqrt() * fv.abs();
                }
            }
        }
        // dλ = 2μ dμ
        Ok(2.0 * mu * wmu * acc)
    };
    Ok(mus.par_iter().map(per_mu).collect::<Result<Vec<_>>>()?.iter().sum())
}

/// Inner factor of the model integral at x on the wall:
/// λ^{-s'/2} ∫_{Q(1)×(0,1)} J(x, y, λ)^{s'} dy, J = (|x − y*|² + λ)^{-3/2} e^{−c y₃²/λ}.
fn model_inner(lam: f64, sp: f64, gl: &GaussLegendre) -> f64 {
    let sl = lam.sqrt();
    let zb = [0.0, sl, 4.0 * sl, 1.0f64.min(12.0 * sl), 1.0];
    let rb = [0.0, sl.min(0.5), 4.0 * sl.min(0.25), 1.0];
    // square [−1, 1]² as 8 sectors 0 < φ < π/4, r < sec φ
    let sectors: Vec<(f64, f64)> = gl.on(0.0, PI / 4.0).collect();
    let mut v = 0.0;
    for (y3, wz) in gl.composite(&sorted(&zb)) {
        let e = (-C_EXP * sp * y3 * y3 / lam).exp();
        if e == 0.0 {
            continue;
        }
        for &(phi, wp) in &sectors {
            let edge = 1.0 / phi.cos();
            let br: Vec<f64> = rb.iter().map(|r| r.min(edge)).chain([edge]).collect();
            for (r, wr) in gl.composite(&sorted(&br)) {
                v += 8.0 * wz * wp * wr * r * (r * r + y3 * y3 + lam).powf(-1.5 * sp) * e;
            }
        }
    }
    lam.powf(-sp / 2.0) * v
}

fn sorted(b: &[f64]) -> Vec<f64> {
    let mut v = b.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// The model integral ∫_δ^T (inner(λ))^{l'/s'} dλ, log-spaced Gauss panels in λ.
pub fn model_integral(s: f64, l: f64, delta: f64, horizon: f64) -> Result<f64> {
    if !(s > 1.0 && l >= s) || !(delta > 0.0 && horizon > delta) {
        return Err(Error::InvalidArgument("need 1 < s <= l and 0 < δ < T".into()));
    }
    let conj = |p: f64| if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    let (sp, lp) = (conj(s), conj(l));
    let gl = GaussLegendre::new(16);
    let decades = (horizon / delta).log10().ceil().max(1.0) as usize;
    let br: Vec<f64> = (0..=4 * decades).map(|i| delta * (horizon / delta).powf(i as f64 / (4 * decades) as f64)).collect();
    let nodes = gl.composite(&br);
    let parts: Vec<f64> = nodes.par_iter().map(|&(lam, w)| w * model_inner(lam, sp, &gl).powf(lp / sp)).collect();
    Ok(parts.iter().sum())
}

/// Finite-or-divergent check, reported as an [`EstimateFit`].
/// 3/s + 2/l < 1: history holds sup I / ‖f‖ at two quadrature levels (stable = within 20%).
/// Otherwise: history holds the model integral at δ = 4^{-k} δ₀ (k = 0..=levels), stable means
/// the integral grew by at least 2× at every step, as divergence predicts.
pub fn check_uniform_integral(s: f64, l: f64, a: f64, family: &[BumpForce], probes: &[Vec3], levels: usize) -> Result<EstimateFit> {
    if !(s > 1.0 && l >= s) {
        return Err(Error::InvalidArgument("need 1 < s <= l <= ∞".into()));
    }
    if !(a < 0.0) {
        return Err(Error::InvalidArgument("A must be negative".into()));
    }
    let cond = 3.0 / s + if l.is_infinite() { 0.0 } else { 2.0 / l };
    let id = format!("2.2-uniform s={s} l={l}");
    if cond < 1.0 {
        let mut history = Vec::new();
        let mut rows = Vec::new();
        for (lvl, n) in [12usize, 20].into_iter().enumerate() {
            rows.clear();
            for f in family {
                let norm = f.unif_norm(s, l, a);
                for x in probes {
                    let v = gradient_integral(x, 0.0, a, f, n)?;
                    rows.push(if norm > 0.0 { FitRow::new(v, norm) } else { FitRow { lhs: v, rhs_factor: 0.0, ratio: 0.0 } });
                }
            }
            let c = rows.iter().fold(0.0f64, |m, r| m.max(r.ratio));
            history.push(RefinementStep { rel_tol: 1.0 / (lvl + 1) as f64, constant: c });
        }
        let desc = format!("{} bump forces x {} probes, A = {a}", family.len(), probes.len());
        EstimateFit::from_history(&id, &desc, history, rows, vec![("condition".into(), cond)], true)
    } else {
        let horizon = -a;
        let d0 = 1e-2 * horizon;
        let mut history = Vec::new();
        for k in 0..=levels {
            let delta = d0 * 0.25f64.powi(k as i32);
            history.push(RefinementStep { rel_tol: delta, constant: model_integral(s, l, delta, horizon)? });
        }
        let growth: Vec<f64> = history.windows(2).map(|w| w[1].constant / w[0].constant).collect();
        let gmin = growth.iter().fold(f64::INFINITY, |m, g| m.min(*g));
        let rows = history.iter().map(|h| FitRow::new(h.constant, h.rel_tol)).collect();
        let mut fit = EstimateFit::from_history(&id, "model near-singularity integral at x on the wall", history, rows, vec![("condition".into(), cond), ("growth_min".into(), gmin)], true)?;
        fit.verdict = if levels >= 1 && gmin >= 2.0 { Verdict::Stable } else { Verdict::Unstable };
        fit.constant = f64::INFINITY;
        Ok(fit)
    }
}
