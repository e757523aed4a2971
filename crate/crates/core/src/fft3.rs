//! Periodic 3-D transforms on an nx × ny × nz box stored as `[k][j][i]`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub struct Periodic3 {
    pub n: [usize; 3],
    pub period: [f64; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl Periodic3 {
    pub fn new(n: [usize; 3], period: [f64; 3]) -> Self {
        let mut p = FftPlanner::new();
        let fwd = [p.plan_fft_forward(n[0]), p.plan_fft_forward(n[1]), p.plan_fft_forward(n[2])];
        let inv = [p.plan_fft_inverse(n[0]), p.plan_fft_inverse(n[1]), p.plan_fft_inverse(n[2])];
        Periodic3 { n, period, fwd, inv }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn apply(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [nx, ny, nz] = self.n;
        for row in data.chunks_mut(nx) {
            plans[0].process(row);
        }
        let mut buf = vec![Complex64::default(); ny.max(nz)];
        for k in 0..nz {
            for i in 0..nx {
                for j in 0..ny {
                    buf[j] = data[(k * ny + j) * nx + i];
                }
                plans[1].process(&mut buf[..ny]);
                for j in 0..ny {
                    data[(k * ny + j) * nx + i] = buf[j];
                }
            }
        }
        for j in 0..ny {
            for i in 0..nx {
                for k in 0..nz {
                    buf[k] = data[(k * ny + j) * nx + i];
                }
                plans[2].process(&mut buf[..nz]);
                for k in 0..nz {
                    data[(k * ny + j) * nx + i] = buf[k];
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.fwd);
    }

    /// Inverse transform including the 1/N normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inv);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut c);
        c
    }

    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut data);
        data.into_iter().map(|v| v.re).collect()
    }

    /// Wavenumber of index `m` along `axis`: (full value, value used for odd derivatives).
    /// The Nyquist mode has no odd-derivative counterpart and returns 0 there.
    pub fn wavenumber(&self, axis: usize, m: usize) -> (f64, f64) {
        let n = self.n[axis];
        let s = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        let k = 2.0 * PI * s / self.period[axis];
        let odd = if n % 2 == 0 && m == n / 2 { 0.0 } else { k };
        (k, odd)
    }

    /// Per-axis wavenumber tables (full, odd-derivative).
    pub fn wavenumbers(&self) -> [(Vec<f64>, Vec<f64>); 3] {
        std::array::from_fn(|a| (0..self.n[a]).map(|m| self.wavenumber(a, m)).unzip())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_derivative_of_trig_polynomial() {
        let n = [8, 6, 10];
        let per = [2.0, 3.0, 4.0];
        let p = Periodic3::new(n, per);
        let f = |x: f64, y: f64, z: f64| (2.0 * PI * x / per[0]).sin() * (4.0 * PI * y / per[1]).cos() + (2.0 * PI * z / per[2]).cos();
        let mut v = vec![];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    v.push(f(i as f64 * per[0] / 8.0, j as f64 * per[1] / 6.0, k as f64 * per[2] / 10.0));
                }
            }
        }
        let mut c = p.forward_real(&v);
        let w = p.wavenumbers();
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    c[(k * n[1] + j) * n[0] + i] *= Complex64::new(0.0, w[0].1[i]);
                }
            }
        }
        let d = p.inverse_real(c);
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let (x, y) = (i as f64 * per[0] / 8.0, j as f64 * per[1] / 6.0);
                    let want = 2.0 * PI / per[0] * (2.0 * PI * x / per[0]).cos() * (4.0 * PI * y / per[1]).cos();
                    assert!((d[(k * n[1] + j) * n[0] + i] - want).abs() < 1e-12);
                }
            }
        }
    }
}
