//! Linear Stokes flow S_τ (heat flow in the whole space) acting on grid fields, in lateral Fourier
//! variables with per-mode vertical operators built from the kernels and a cubic interpolant of
//! the data in x₃.

use crate::fft3::Periodic3;
use crate::fields::{Field, Rank, SlabGrid};
use crate::kernels::green2::{gamma1, m_value};
use crate::quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Half,
    Whole,
}

/// Vertical operator for one elapsed time: the heat part (shared by all modes) and, in the half
/// space, the boundary-correction matrix per distinct |k'|.
struct VerticalOps {
    heat: Vec<f64>,
    g2: Vec<Vec<f64>>,
}

/// Per-component lateral spectra, layout `[layer][mode]`.
pub type Spectrum = Vec<Vec<Complex64>>;

pub struct Propagator {
    pub grid: SlabGrid,
    pub space: Space,
    lateral: Periodic3,
    zs: Vec<f64>,
    /// (k₁, k₂, index into `kmag`) per mode.
    modes: Vec<(f64, f64, usize)>,
    kmag: Vec<f64>,
    resolution: f64,
    cache: Mutex<HashMap<u64, Arc<VerticalOps>>>,
}

/// Quadrature rule ∫ K(y) v(y) dy ≈ Σ_l w_l v(z_l) against a cubic Lagrange interpolant, as
/// (sub-node, [(node, weight)]) pairs.
fn cubic_rule(zs: &[f64], per_cell: usize) -> Vec<(f64, [(usize, f64); 4])> {
    let n = zs.len();
    let gl = GaussLegendre::new(per_cell);
    let mut out = vec![];
    for c in 0..n - 1 {
        let s0 = if n < 4 { 0 } else { c.saturating_sub(1).min(n - 4) };
        let st: Vec<usize> = (s0..(s0 + 4).min(n)).collect();
        for (y, w) in gl.on(zs[c], zs[c + 1]) {
            let mut e = [(0, 0.0); 4];
            for (q, &a) in st.iter().enumerate() {
                let mut l = 1.0;
                for &b in &st {
                    if b != a {
                        l *= (y - zs[b]) / (zs[a] - zs[b]);
                    }
                }
                e[q] = (a, w * l);
            }
            out.push((y, e));
        }
    }
    out
}

impl Propagator {
    pub fn new(grid: SlabGrid, space: Space) -> Self {
        Self::with_resolution(grid, space, 1.0)
    }

    /// `resolution` scales the number of quadrature sub-nodes per cell.
    pub fn with_resolution(grid: SlabGrid, space: Space, resolution: f64) -> Self {
        let lateral = Periodic3::new([grid.nx, grid.ny, 1], [2.0 * grid.half_width, 2.0 * grid.half_width, 1.0]);
        let zs: Vec<f64> = (0..grid.nlayers()).map(|k| grid.z(k)).collect();
        let w = lateral.wavenumbers();
        let mut kmag: Vec<f64> = vec![];
        let mut key: HashMap<u64, usize> = HashMap::new();
        let mut modes = vec![];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (k1, k2) = (w[0].0[i], w[1].0[j]);
                let q = k1 * k1 + k2 * k2;
                let id = *key.entry(q.to_bits()).or_insert_with(|| {
                    kmag.push(q.sqrt());
                    kmag.len() - 1
                });
                modes.push((k1, k2, id));
            }
        }
        Propagator { grid, space, lateral, zs, modes, kmag, resolution, cache: Mutex::new(HashMap::new()) }
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    fn per_cell(&self, tau: f64) -> usize {
        let hz = self.grid.hz();
        ((self.resolution * (4.0 * hz / tau.sqrt()).max(8.0)).ceil() as usize).clamp(8, 96)
    }

    fn build(&self, tau: f64) -> VerticalOps {
        let nl = self.zs.len();
        let rule = cubic_rule(&self.zs, self.per_cell(tau));
        let mut heat = vec![0.0; nl * nl];
        for (x, xv) in self.zs.iter().enumerate() {
            for (y, e) in &rule {
                let mut kv = gamma1(xv - y, tau);
                if self.space == Space::Half {
                    kv -= gamma1(xv + y, tau);
                }
                for &(l, w) in e {
                    heat[x * nl + l] += kv * w;
                }
            }
        }
        let g2 = if self.space == Space::Half {
            self.kmag
                .par_iter()
                .map(|&k| {
                    let mut m = vec![0.0; nl * nl];
                    let pre = 2.0 * k * (-tau * k * k).exp();
                    if pre < 1e-300 {
                        return m;
                    }
                    for (x, &xv) in self.zs.iter().enumerate().skip(1) {
                        for (y, e) in &rule {
                            let kv = pre * m_value(k, xv, *y, tau);
                            for &(l, w) in e {
                                m[x * nl + l] += kv * w;
                            }
                        }
                    }
                    m
                })
                .collect()
        } else {
            vec![]
        };
        VerticalOps { heat, g2 }
    }

    fn ops(&self, tau: f64) -> Arc<VerticalOps> {
        let key = tau.to_bits();
        if let Some(o) = self.cache.lock().unwrap().get(&key) {
            return o.clone();
        }
        let o = Arc::new(self.build(tau));
        self.cache.lock().unwrap().insert(key, o.clone());
        o
    }

    /// Builds (or finds) the vertical operators for elapsed time `tau`.
    pub fn prepare(&self, tau: f64) {
        if tau > 0.0 {
            self.ops(tau);
        }
    }

    /// Lateral transform of a 3-component single-time slice `it` of a vector field.
    pub fn to_spectrum(&self, u: &Field, it: usize) -> [Spectrum; 3] {
        let npl = self.grid.nodes_per_layer();
        std::array::from_fn(|c| {
            u.component(it, c).chunks(npl).map(|layer| self.lateral.forward_real(layer)).collect()
        })
    }

    pub fn from_spectrum(&self, s: &[Spectrum; 3], out: &mut Field, it: usize) {
        let npl = self.grid.nodes_per_layer();
        for c in 0..3 {
            let dst = out.component_mut(it, c);
            for (k, layer) in s[c].iter().enumerate() {
                dst[k * npl..(k + 1) * npl].copy_from_slice(&self.lateral.inverse_real(layer.clone()));
            }
        }
    }

    pub fn zero_spectrum(&self) -> [Spectrum; 3] {
        let nl = self.zs.len();
        let npl = self.grid.nodes_per_layer();
        std::array::from_fn(|_| vec![vec![Complex64::default(); npl]; nl])
    }

    /// acc += weight · S_τ(src), all in spectral variables.
    pub fn apply_add(&self, src: &[Spectrum; 3], tau: f64, weight: f64, acc: &mut [Spectrum; 3]) {
        let nl = self.zs.len();
        let npl = self.grid.nodes_per_layer();
        if tau == 0.0 {
            for c in 0..3 {
                for k in 0..nl {
                    if self.space == Space::Half && k == 0 {
                        continue;
                    }
                    for m in 0..npl {
                        acc[c][k][m] += weight * src[c][k][m];
                    }
                }
            }
            return;
        }
        let ops = self.ops(tau);
        let damp: Vec<f64> = self.modes.iter().map(|&(k1, k2, _)| weight * (-tau * (k1 * k1 + k2 * k2)).exp()).collect();
        for c in 0..3 {
            for x in 0..nl {
                let row = &ops.heat[x * nl..(x + 1) * nl];
                let dst = &mut acc[c][x];
                for (l, &h) in row.iter().enumerate() {
                    if h == 0.0 {
                        continue;
                    }
                    for (m, d) in dst.iter_mut().enumerate() {
                        *d += (h * damp[m]) * src[c][l][m];
                    }
                }
            }
        }
        if self.space == Space::Half {
            let khat: Vec<(f64, f64)> = self
                .modes
                .iter()
                .map(|&(k1, k2, id)| {
                    let k = self.kmag[id];
                    if k == 0.0 {
                        (0.0, 0.0)
                    } else {
                        (k1 / k, k2 / k)
                    }
                })
                .collect();
            let s: Vec<Vec<Complex64>> = (0..nl)
                .map(|l| (0..npl).map(|m| khat[m].0 * src[0][l][m] + khat[m].1 * src[1][l][m]).collect())
                .collect();
            for (m, &(_, _, id)) in self.modes.iter().enumerate() {
                if self.kmag[id] == 0.0 {
                    continue;
                }
                let (a1, a2) = khat[m];
                let mat = &ops.g2[id];
                for x in 1..nl {
                    let row = &mat[x * nl..(x + 1) * nl];
                    let mut w = Complex64::default();
                    for (l, &r) in row.iter().enumerate() {
                        w += r * s[l][m];
                    }
                    w *= weight;
                    acc[0][x][m] += a1 * w;
                    acc[1][x][m] += a2 * w;
                    acc[2][x][m] += Complex64::new(0.0, 1.0) * w;
                }
            }
        }
    }

    /// S_τ u for a single-time vector field.
    pub fn propagate(&self, u: &Field, tau: f64) -> Field {
        let src = self.to_spectrum(u, 0);
        let mut acc = self.zero_spectrum();
        self.apply_add(&src, tau, 1.0, &mut acc);
        let mut out = Field::zeros(self.grid, Rank::Vector);
        self.from_spectrum(&acc, &mut out, 0);
        out
    }
}
