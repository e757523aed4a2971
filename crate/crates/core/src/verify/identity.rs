//! Two-path check of ∫ G f dy = ∫ K F dy (half space) and ∫ Γ f dy = ∫ K F dy (whole space),
//! f = −div F − ∇p_F, for stresses F = A Δψ with a Gaussian ψ. For this family the pressure is
//! local: p = −A_jm (∂_j∂_m ψ(y) + ∂_j∂_m ψ(y*)) in the half space (even in y₃, so ∂₃p = 0 on
//! the wall) and p = −A_jm ∂_j∂_m ψ in the whole space.

use crate::error::{Error, Result};
use crate::kernels::{green_g1, heat_kernel, kernel_ws_tensor, G2Table, KernelQuery, KernelTableHs};
use crate::quad::GaussLegendre;
use crate::radial::{Mat3, Vec3};
use rayon::prelude::*;
use std::f64::consts::PI;

/// F(y) = A Δψ(y), ψ(y) = exp(−|y − c|²/2σ²), A symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianStress {
    pub a: Mat3,
    pub center: Vec3,
    pub width: f64,
}

struct Derivs {
    d2: Mat3,
    d3: [[[f64; 3]; 3]; 3],
}

impl GaussianStress {
    fn derivs(&self, y: &Vec3) -> Derivs {
        let v = self.width * self.width;
        let d = [y[0] - self.center[0], y[1] - self.center[1], y[2] - self.center[2]];
        let psi = (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * v)).exp();
        let dl = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut d2 = [[0.0; 3]; 3];
        let mut d3 = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                d2[i][j] = (d[i] * d[j] / (v * v) - dl(i, j) / v) * psi;
                for k in 0..3 {
                    d3[i][j][k] = (-d[i] * d[j] * d[k] / (v * v * v)
                        + (dl(i, j) * d[k] + dl(i, k) * d[j] + dl(j, k) * d[i]) / (v * v))
                        * psi;
                }
            }
        }
        Derivs { d2, d3 }
    }

    pub fn stress(&self, y: &Vec3) -> Mat3 {
        let dv = self.derivs(y);
        let lap = dv.d2[0][0] + dv.d2[1][1] + dv.d2[2][2];
        let mut f = self.a;
        f.iter_mut().flatten().for_each(|v| *v *= lap);
        f
    }

    /// ∂_i p_F; `half` selects the half-space pressure.
    pub fn pressure_gradient(&self, y: &Vec3, half: bool) -> Vec3 {
        let dv = self.derivs(y);
        let dr = if half { Some(self.derivs(&[y[0], y[1], -y[2]])) } else { None };
        let mut g = [0.0; 3];
        for (i, gi) in g.iter_mut().enumerate() {
            for j in 0..3 {
                for m in 0..3 {
                    let mut v = dv.d3[i][j][m];
                    if let Some(r) = &dr {
                        v += if i == 2 { -r.d3[i][j][m] } else { r.d3[i][j][m] };
                    }
                    *gi -= self.a[j][m] * v;
                }
            }
        }
        g
    }

    /// f = −div F − ∇p_F.
    pub fn forcing(&self, y: &Vec3, half: bool) -> Vec3 {
        let dv = self.derivs(y);
        let dlap: Vec3 = std::array::from_fn(|k| (0..3).map(|i| dv.d3[k][i][i]).sum());
        let gp = self.pressure_gradient(y, half);
        std::array::from_fn(|i| -(0..3).map(|m| self.a[i][m] * dlap[m]).sum::<f64>() - gp[i])
    }

    /// Radius beyond which ψ and its derivatives are below 1e-10 of their peak.
    pub fn reach(&self) -> f64 {
        7.5 * self.width
    }

    /// max of |F| and |F_{3j,j}| on the wall, relative to sup |F|.
    pub fn wall_defect(&self) -> f64 {
        let peak = self.stress(&self.center).iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let c = self.center;
        let r = self.reach();
        let mut worst = 0.0f64;
        for i in 0..=16 {
            for j in 0..=16 {
                let y = [c[0] - r + 2.0 * r * i as f64 / 16.0, c[1] - r + 2.0 * r * j as f64 / 16.0, 0.0];
                let dv = self.derivs(&y);
                let lap = dv.d2[0][0] + dv.d2[1][1] + dv.d2[2][2];
                let dlap: Vec3 = std::array::from_fn(|k| (0..3).map(|i| dv.d3[k][i][i]).sum());
                let div3: f64 = (0..3).map(|m| self.a[2][m] * dlap[m]).sum();
                let amax = self.a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
                worst = worst.max(amax * lap.abs()).max(div3.abs());
            }
        }
        worst / peak
    }
}

/// Quadrature level: `n` nodes per axis (radial and vertical), `2n` angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityLevel {
    pub n: usize,
    /// Resolution factor of the kernel tables.
    pub resolution: f64,
}

impl IdentityLevel {
    pub fn coarse() -> Self {
        IdentityLevel { n: 16, resolution: 1.0 }
    }

    /// One more 8-node panel per axis and finer kernel tables.
    pub fn refined(&self) -> Self {
        IdentityLevel { n: self.n + 8, resolution: 1.25 * self.resolution }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySample {
    pub x: Vec3,
    pub t: f64,
    pub green_side: Vec3,
    pub kernel_side: Vec3,
    /// |green − kernel|_∞ / |green|_∞.
    pub mismatch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub samples: Vec<IdentitySample>,
    pub max_mismatch: f64,
}

fn panels(a: f64, b: f64, n: usize, gl: &GaussLegendre) -> Vec<(f64, f64)> {
    let np = (n / gl.nodes.len()).max(1);
    let br: Vec<f64> = (0..=np).map(|i| a + (b - a) * i as f64 / np as f64).collect();
    gl.composite(&br)
}

fn finish(samples: Vec<IdentitySample>) -> IdentityReport {
    let max_mismatch = samples.iter().fold(0.0f64, |m, s| m.max(s.mismatch));
    IdentityReport { samples, max_mismatch }
}

fn sample(x: Vec3, t: f64, g: Vec3, k: Vec3) -> IdentitySample {
    let den = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let num = (0..3).fold(0.0f64, |m, i| m.max((g[i] - k[i]).abs()));
    IdentitySample { x, t, green_side: g, kernel_side: k, mismatch: if den > 0.0 { num / den } else { num } }
}

fn validate(probes: &[Vec3], times: &[f64], level: &IdentityLevel) -> Result<()> {
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::NonPositiveTime(times.iter().copied().find(|t| !(*t > 0.0)).unwrap_or(0.0)));
    }
    if level.n < 8 || !(level.resolution > 0.0) {
        return Err(Error::InvalidArgument("identity level needs n >= 8 and positive resolution".into()));
    }
    if probes.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite probe".into()));
    }
    Ok(())
}

/// Polar-in-x' nodes (ρ, φ, weight·ρ) covering the lateral support of F seen from x'.
fn lateral_rule(x: &Vec3, src: &GaussianStress, level: &IdentityLevel, gl: &GaussLegendre) -> (Vec<(f64, f64)>, Vec<f64>) {
    let off = ((x[0] - src.center[0]).powi(2) + (x[1] - src.center[1]).powi(2)).sqrt();
    let radial = panels(0.0, off + src.reach(), level.n, gl);
    let na = 2 * level.n;
    let angles = (0..na).map(|i| 2.0 * PI * i as f64 / na as f64).collect();
    (radial, angles)
}

/// Half-space identity at every probe × time.
pub fn check_identity_lemma21(src: &GaussianStress, probes: &[Vec3], times: &[f64], level: &IdentityLevel, wall_tol: f64) -> Result<IdentityReport> {
    validate(probes, times, level)?;
    if probes.iter().any(|x| x[2] < 0.0) || src.center[2] <= 0.0 {
        return Err(Error::InvalidArgument("probes and F must lie in the half space".into()));
    }
    let defect = src.wall_defect();
    if defect > wall_tol {
        return Err(Error::InvalidArgument(format!("F violates the wall conditions: {defect:.3e}")));
    }
    let gl = GaussLegendre::new(8);
    let jobs: Vec<(Vec3, f64)> = probes.iter().flat_map(|x| times.iter().map(move |t| (*x, *t))).collect();
    let samples = jobs
        .par_iter()
        .map(|&(x, t)| -> Result<IdentitySample> {
            let (radial, angles) = lateral_rule(&x, src, level, &gl);
            let rho_max = radial.last().map(|r| r.0).unwrap_or(0.0) + 1.0;
            let zs = panels((src.center[2] - src.reach()).max(0.0), src.center[2] + src.reach(), level.n, &gl);
            let dphi = 2.0 * PI / angles.len() as f64;
            let mut gs = [0.0; 3];
            let mut ks = [0.0; 3];
            for &(y3, wz) in &zs {
                let g2 = G2Table::new(x[2], y3, t, [0; 3], [0; 3], 0, rho_max, level.resolution)?;
                let kt = KernelTableHs::new(x[2], y3, t, rho_max, level.resolution)?;
                for &(r, wr) in &radial {
                    let g2r = g2.ring(r);
                    let ktr = kt.ring(r);
                    let w = wz * wr * r * dphi;
                    for &phi in &angles {
                        // y' = x' − u, u = r(cos φ, sin φ)
                        let y = [x[0] - r * phi.cos(), x[1] - r * phi.sin(), y3];
                        let f = src.forcing(&y, true);
                        let big_f = src.stress(&y);
                        let g1 = green_g1(&KernelQuery::new(x, y, t))?;
                        let g2v = g2.eval_ring(&g2r, phi);
                        let kv = kt.eval_ring(&ktr, r, phi);
                        for i in 0..3 {
                            let mut a = g1 * f[i];
                            let mut b = 0.0;
                            for j in 0..3 {
                                a += g2v[i][j] * f[j];
                                for m in 0..3 {
                                    b += kv[i][j][m] * big_f[j][m];
                                }
                            }
                            gs[i] += w * a;
                            ks[i] += w * b;
                        }
                    }
                }
            }
            Ok(sample(x, t, gs, ks))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(samples))
}

/// Whole-space identity ∫ Γ(x − y, t) f dy = ∫ K(x, y, t) F dy at every probe × time.
pub fn check_identity_whole(src: &GaussianStress, probes: &[Vec3], times: &[f64], level: &IdentityLevel) -> Result<IdentityReport> {
    validate(probes, times, level)?;
    let gl = GaussLegendre::new(8);
    let jobs: Vec<(Vec3, f64)> = probes.iter().flat_map(|x| times.iter().map(move |t| (*x, *t))).collect();
    let samples = jobs
        .par_iter()
        .map(|&(x, t)| -> Result<IdentitySample> {
            let (radial, angles) = lateral_rule(&x, src, level, &gl);
            let zs = panels(src.center[2] - src.reach(), src.center[2] + src.reach(), level.n, &gl);
            let dphi = 2.0 * PI / angles.len() as f64;
            let mut gs = [0.0; 3];
            let mut ks = [0.0; 3];
            for &(y3, wz) in &zs {
                for &(r, wr) in &radial {
                    let w = wz * wr * r * dphi;
                    for &phi in &angles {
                        let y = [x[0] - r * phi.cos(), x[1] - r * phi.sin(), y3];
                        let f = src.forcing(&y, false);
                        let big_f = src.stress(&y);
                        let g = heat_kernel(&KernelQuery::new(x, y, t))?;
                        let kv = kernel_ws_tensor(&x, &y, t)?;
                        for i in 0..3 {
                            let mut b = 0.0;
                            for j in 0..3 {
                                for m in 0..3 {
                                    b += kv[i][j][m] * big_f[j][m];
                                }
                            }
                            gs[i] += w * g * f[i];
                            ks[i] += w * b;
                        }
                    }
                }
            }
            Ok(sample(x, t, gs, ks))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(samples))
}
