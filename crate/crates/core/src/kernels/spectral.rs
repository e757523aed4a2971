//! Lateral Fourier representation of laterally translation-invariant kernels.
//!
//! A kernel value is written as a sum of terms `coef · k^kpow · R_key(k) · P(k̂)` in the lateral
//! wavevector k = |k| k̂, where `P` is a trigonometric polynomial in the angle of k̂. The inverse
//! transform in u = x' − y' reduces, harmonic by harmonic, to Hankel integrals
//! `(2π)^{-1} ∫ k^{1+kpow} R(k) J_|n|(kρ) dk`.

use crate::error::Result;
use crate::quad::{adaptive_vec, merge_breaks, GaussLegendre, QuadratureSpec};
use crate::special::{bessel_j, NJ};
use num_complex::Complex64;
use std::f64::consts::PI;

const NH: i32 = 6;

/// Trigonometric polynomial Σ_{n=-6}^{6} c_n e^{inθ} in the angle of k̂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigPoly {
    c: [Complex64; 13],
}

impl TrigPoly {
    pub fn one() -> Self {
        let mut c = [Complex64::new(0.0, 0.0); 13];
        c[NH as usize] = Complex64::new(1.0, 0.0);
        TrigPoly { c }
    }

    pub fn coeff(&self, n: i32) -> Complex64 {
        self.c[(n + NH) as usize]
    }

    /// Multiplies by k̂_γ (γ = 0: cos θ, γ = 1: sin θ).
    pub fn times_khat(&self, g: usize) -> Self {
        let mut c = [Complex64::new(0.0, 0.0); 13];
        // cos = (e+ + e-)/2, sin = (e+ - e-)/(2i)
        let (ap, am) = if g == 0 {
            (Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0))
        } else {
            (Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5))
        };
        for n in -NH..=NH {
            let v = self.coeff(n);
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            assert!(n.abs() < NH, "trigonometric degree exceeds 6");
            c[(n + 1 + NH) as usize] += ap * v;
            c[(n - 1 + NH) as usize] += am * v;
        }
        TrigPoly { c }
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        (-NH..=NH)
            .map(|n| self.coeff(n) * Complex64::from_polar(1.0, n as f64 * theta))
            .sum()
    }
}

/// One term `coef · k^kpow · R_key(k) · trig(k̂)`.
#[derive(Debug, Clone, Copy)]
pub struct SpectralTerm {
    pub coef: Complex64,
    pub kpow: i32,
    pub key: usize,
    pub trig: TrigPoly,
}

impl SpectralTerm {
    pub fn new(key: usize) -> Self {
        SpectralTerm {
            coef: Complex64::new(1.0, 0.0),
            kpow: 0,
            key,
            trig: TrigPoly::one(),
        }
    }

    /// Applies a lateral derivative with symbol `sign · i k_γ`.
    pub fn lateral_deriv(mut self, g: usize, sign: f64) -> Self {
        self.coef *= Complex64::new(0.0, sign);
        self.kpow += 1;
        self.trig = self.trig.times_khat(g);
        self
    }

    pub fn scaled(mut self, s: Complex64) -> Self {
        self.coef *= s;
        self
    }
}

/// A family of radial profiles R_key(k) evaluated together.
pub trait RadialBank {
    fn n_keys(&self) -> usize;
    fn eval(&self, k: f64, out: &mut [f64]);
    /// Largest vertical length entering exponential factors e^{-kD}; sets the small-k panel width.
    fn length_scale(&self) -> f64;
    fn time(&self) -> f64;
}

/// Hankel slot (key, kpow, |n|) shared by several terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    key: usize,
    kpow: i32,
    n: usize,
}

/// Assembled linear map from slot integrals to output components.
#[derive(Debug, Clone)]
pub struct SpectralPlan {
    slots: Vec<Slot>,
    // (output index, slot index, signed harmonic n, weight)
    uses: Vec<(usize, usize, i32, Complex64)>,
    n_out: usize,
}

impl SpectralPlan {
    /// `terms[o]` lists the terms summed into output component `o`.
    pub fn new(terms: &[Vec<SpectralTerm>]) -> Self {
        let mut slots: Vec<Slot> = Vec::new();
        let mut uses = Vec::new();
        for (o, ts) in terms.iter().enumerate() {
            for t in ts {
                for n in -NH..=NH {
                    let c = t.trig.coeff(n);
                    if c.norm() == 0.0 || t.coef.norm() == 0.0 {
                        continue;
                    }
                    let s = Slot { key: t.key, kpow: t.kpow, n: n.unsigned_abs() as usize };
                    let idx = match slots.iter().position(|x| *x == s) {
                        Some(i) => i,
                        None => {
                            slots.push(s);
                            slots.len() - 1
                        }
                    };
                    // ∫ e^{inθ} e^{ikρ cos(θ-φ)} dθ = 2π iⁿ J_n(kρ) e^{inφ}, J_{-n} = (-1)^n J_n
                    let mut w = t.coef * c * Complex64::i().powi(n);
                    if n < 0 && n % 2 != 0 {
                        w = -w;
                    }
                    uses.push((o, idx, n, w));
                }
            }
        }
        SpectralPlan { slots, uses, n_out: terms.len() }
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    fn combine(&self, integrals: &[f64], phi: f64) -> Vec<f64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_out];
        for &(o, s, n, w) in &self.uses {
            out[o] += w * Complex64::from_polar(integrals[s], n as f64 * phi);
        }
        out.into_iter().map(|c| c.re).collect()
    }

    fn max_kpow(&self) -> i32 {
        self.slots.iter().map(|s| s.kpow).max().unwrap_or(0)
    }

    /// Pointwise evaluation at lateral offset u with adaptive k-quadrature.
    pub fn eval_adaptive<B: RadialBank>(&self, bank: &B, u: [f64; 2], spec: &QuadratureSpec) -> Result<Vec<f64>> {
        if self.slots.is_empty() {
            return Ok(vec![0.0; self.n_out]);
        }
        let rho = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let phi = u[1].atan2(u[0]);
        let kc = cutoff(bank, self.max_kpow());
        let width = panel_width(kc, rho.max(bank.length_scale()), 1.0);
        let breaks = panel_breaks(kc, width);
        let mut rv = vec![0.0; bank.n_keys()];
        let mut jb = [0.0; NJ];
        let slots = &self.slots;
        let vals = adaptive_vec(
            |k, out| {
                bank.eval(k, &mut rv);
                bessel_j(k * rho, &mut jb);
                for (i, s) in slots.iter().enumerate() {
                    out[i] = k.powi(1 + s.kpow) * rv[s.key] * jb[s.n] / (2.0 * PI);
                }
            },
            &breaks,
            slots.len(),
            spec,
        )?;
        Ok(self.combine(&vals, phi))
    }

    /// Precomputes slot weights on a fixed k-rule suitable for offsets up to `rho_max`.
    pub fn table<B: RadialBank>(&self, bank: &B, rho_max: f64, resolution: f64) -> SpectralTable {
        let kc = cutoff(bank, self.max_kpow());
        let width = panel_width(kc, rho_max.max(bank.length_scale()), resolution);
        let breaks = panel_breaks(kc, width);
        let gl = GaussLegendre::new(16);
        let nodes = gl.composite(&breaks);
        let mut rv = vec![0.0; bank.n_keys()];
        let ns = self.slots.len();
        let mut ks = Vec::with_capacity(nodes.len());
        let mut w = vec![0.0; nodes.len() * ns];
        for (q, &(k, wq)) in nodes.iter().enumerate() {
            bank.eval(k, &mut rv);
            ks.push(k);
            for (i, s) in self.slots.iter().enumerate() {
                w[q * ns + i] = wq * k.powi(1 + s.kpow) * rv[s.key] / (2.0 * PI);
            }
        }
        SpectralTable { plan: self.clone(), ks, w }
    }
}

/// A [`SpectralPlan`] with its radial profiles frozen on a fixed k-rule.
#[derive(Debug, Clone)]
pub struct SpectralTable {
    plan: SpectralPlan,
    ks: Vec<f64>,
    w: Vec<f64>,
}

impl SpectralTable {
    pub fn eval(&self, u: [f64; 2]) -> Vec<f64> {
        let rho = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let phi = u[1].atan2(u[0]);
        self.at_angle(&self.ring(rho), phi)
    }

    /// Hankel integrals at lateral distance ρ; combine with [`SpectralTable::at_angle`].
    pub fn ring(&self, rho: f64) -> Vec<f64> {
        let ns = self.plan.slots.len();
        let mut acc = vec![0.0; ns];
        let mut jb = [0.0; NJ];
        for (q, &k) in self.ks.iter().enumerate() {
            bessel_j(k * rho, &mut jb);
            let row = &self.w[q * ns..(q + 1) * ns];
            for (i, s) in self.plan.slots.iter().enumerate() {
                acc[i] += row[i] * jb[s.n];
            }
        }
        acc
    }

    pub fn at_angle(&self, ring: &[f64], phi: f64) -> Vec<f64> {
        self.plan.combine(ring, phi)
    }

    pub fn n_nodes(&self) -> usize {
        self.ks.len()
    }

    pub fn n_slots(&self) -> usize {
        self.plan.slots.len()
    }
}

/// Largest k where any weighted profile is still above 1e-15 of its peak.
fn cutoff<B: RadialBank>(bank: &B, max_kpow: i32) -> f64 {
    let t = bank.time();
    let khi = (60.0 / t).sqrt();
    let n = 96;
    let mut rv = vec![0.0; bank.n_keys()];
    let mut mags = Vec::with_capacity(n);
    for j in 0..n {
        let k = khi * (1e-5f64).powf(j as f64 / (n - 1) as f64);
        bank.eval(k, &mut rv);
        let m = rv.iter().fold(0.0f64, |a, v| a.max(v.abs())) * k.powi(1 + max_kpow.max(0));
        mags.push((k, m));
    }
    let peak = mags.iter().fold(0.0f64, |a, v| a.max(v.1));
    if peak == 0.0 {
        return khi;
    }
    let kc = mags
        .iter()
        .find(|(_, m)| *m > 1e-15 * peak)
        .map(|(k, _)| *k)
        .unwrap_or(khi);
    (kc * 1.25).min(khi)
}

fn panel_width(kc: f64, len: f64, resolution: f64) -> f64 {
    let w = (kc / 12.0).min(4.0 / len.max(1e-12));
    let w = w.max(kc / 6000.0);
    w / resolution.max(1e-3)
}

fn panel_breaks(kc: f64, width: f64) -> Vec<f64> {
    let n = (kc / width).ceil().max(1.0) as usize;
    let mut b: Vec<f64> = (0..=n).map(|i| kc * i as f64 / n as f64).collect();
    // extra resolution near k = 0 where profiles may vary on the scale of the largest length
    b.extend([kc / (4.0 * n as f64), kc / (2.0 * n as f64)]);
    merge_breaks(0.0, kc, &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Gauss2 {
        t: f64,
    }
    impl RadialBank for Gauss2 {
        fn n_keys(&self) -> usize {
            1
        }
        fn eval(&self, k: f64, out: &mut [f64]) {
            out[0] = (-self.t * k * k).exp();
        }
        fn length_scale(&self) -> f64 {
            0.0
        }
        fn time(&self) -> f64 {
            self.t
        }
    }

    fn gauss2(u: [f64; 2], t: f64) -> f64 {
        (-(u[0] * u[0] + u[1] * u[1]) / (4.0 * t)).exp() / (4.0 * PI * t)
    }

    #[test]
    fn inverse_transform_of_heat_symbol() {
        let bank = Gauss2 { t: 0.3 };
        let spec = QuadratureSpec::new(1e-11, 1e-14).unwrap();
        // value and ∂_{u_1}∂_{u_2} of the 2D heat kernel
        let base = SpectralTerm::new(0);
        let mixed = base.lateral_deriv(0, 1.0).lateral_deriv(1, 1.0);
        let plan = SpectralPlan::new(&[vec![base], vec![mixed]]);
        let tab = plan.table(&bank, 3.0, 1.0);
        for u in [[0.0, 0.0], [0.4, -0.7], [1.5, 1.1]] {
            let v = plan.eval_adaptive(&bank, u, &spec).unwrap();
            let g = gauss2(u, 0.3);
            let dd = g * u[0] * u[1] / (4.0 * 0.3 * 0.3);
            assert!((v[0] - g).abs() < 1e-10, "{v:?} {g}");
            assert!((v[1] - dd).abs() < 1e-10, "{v:?} {dd}");
            let w = tab.eval(u);
            assert!((w[0] - g).abs() < 1e-10 && (w[1] - dd).abs() < 1e-10);
        }
    }

    #[test]
    fn trig_multiplication() {
        let p = TrigPoly::one().times_khat(0).times_khat(1);
        for th in [0.1, 1.3, 2.9] {
            let v = p.eval(th);
            assert!((v.re - th.cos() * th.sin()).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }
}
