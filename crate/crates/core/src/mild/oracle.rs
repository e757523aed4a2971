//! Independent time stepper for the laterally periodic slab 0 < x₃ < H with no-slip walls:
//! spectral in x', second-order differences in x₃, backward Euler with explicit advection and a
//! rotational incremental pressure-correction projection.

use super::MildProblem;
use crate::error::{Error, Result};
use crate::fft3::Periodic3;
use crate::fields::{Field, Rank, SlabGrid};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Time steps per ladder interval of the problem.
    pub substeps: usize,
    /// The lid sits at `lid_factor`·H, with u_A extended by zero above H.
    pub lid_factor: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { substeps: 40, lid_factor: 2 }
    }
}

/// Solves a·x_{i−1} + b_i·x_i + c·x_{i+1} = d_i (constant off-diagonals, general diagonal).
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], d: &mut [Complex64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut b0 = diag[0];
    cp[0] = upper[0] / b0;
    d[0] /= b0;
    for i in 1..n {
        b0 = diag[i] - lower[i] * cp[i - 1];
        cp[i] = if i + 1 < n { upper[i] / b0 } else { 0.0 };
        let prev = d[i - 1];
        d[i] = (d[i] - lower[i] * prev) / b0;
    }
    for i in (0..n - 1).rev() {
        let next = d[i + 1];
        d[i] -= cp[i] * next;
    }
}

/// Velocity at the problem's ladder times, starting from u_A at A. Half-space problems only.
pub fn projection_oracle(problem: &MildProblem, opts: &OracleOptions) -> Result<Field> {
    problem.validate()?;
    if problem.space != super::Space::Half {
        return Err(Error::InvalidArgument("the projection oracle models the half space".into()));
    }
    if opts.substeps == 0 || opts.lid_factor == 0 {
        return Err(Error::InvalidArgument("substeps and lid_factor must be positive".into()));
    }
    let g0 = problem.u_a.grid;
    let g = SlabGrid { height: g0.height * opts.lid_factor as f64, nz: g0.nz * opts.lid_factor, ..g0 };
    let u_a = {
        let mut f = Field::zeros(g, Rank::Vector);
        let n0 = g0.n_nodes();
        for c in 0..3 {
            f.component_mut(0, c)[..n0].copy_from_slice(problem.u_a.component(0, c));
        }
        f
    };
    let (nx, ny, nz) = (g.nx, g.ny, g.nz);
    let nl = nz + 1;
    let npl = g.nodes_per_layer();
    let h = g.hz();
    let dt = problem.dt() / opts.substeps as f64;
    let plan = Periodic3::new([nx, ny, 1], [2.0 * g.half_width, 2.0 * g.half_width, 1.0]);
    let w = plan.wavenumbers();
    let kx: Vec<f64> = (0..npl).map(|m| w[0].1[m % nx]).collect();
    let ky: Vec<f64> = (0..npl).map(|m| w[1].1[m / nx]).collect();
    let k2: Vec<f64> = (0..npl).map(|m| w[0].0[m % nx].powi(2) + w[1].0[m / nx].powi(2)).collect();
    let iu = Complex64::new(0.0, 1.0);

    let spec_of = |phys: &[f64]| -> Vec<Vec<Complex64>> { phys.chunks(npl).map(|l| plan.forward_real(l)).collect() };
    let mut u: Vec<Vec<Vec<Complex64>>> = (0..3).map(|c| spec_of(u_a.component(0, c))).collect();
    let mut p = vec![vec![Complex64::default(); npl]; nl];

    let times = problem.times();
    let mut out = Field::zeros_timed(g, Rank::Vector, times.clone());
    let store = |u: &Vec<Vec<Vec<Complex64>>>, out: &mut Field, it: usize| {
        for c in 0..3 {
            let dst = out.component_mut(it, c);
            for k in 0..nl {
                dst[k * npl..(k + 1) * npl].copy_from_slice(&plan.inverse_real(u[c][k].clone()));
            }
        }
    };
    store(&u, &mut out, 0);

    let lat_deriv = |s: &[Complex64], kk: &[f64]| -> Vec<f64> {
        plan.inverse_real(s.iter().zip(kk).map(|(v, k)| iu * k * v).collect())
    };
    for n in 1..times.len() {
        for _ in 0..opts.substeps {
            // advection (u·∇)u in physical space
            let phys: Vec<Vec<Vec<f64>>> =
                (0..3).map(|c| (0..nl).map(|k| plan.inverse_real(u[c][k].clone())).collect()).collect();
            let mut adv = vec![vec![vec![Complex64::default(); npl]; nl]; 3];
            for c in 0..3 {
                for k in 1..nz {
                    let dxu = lat_deriv(&u[c][k], &kx);
                    let dyu = lat_deriv(&u[c][k], &ky);
                    let nlin: Vec<f64> = (0..npl)
                        .map(|q| {
                            let dz = (phys[c][k + 1][q] - phys[c][k - 1][q]) / (2.0 * h);
                            phys[0][k][q] * dxu[q] + phys[1][k][q] * dyu[q] + phys[2][k][q] * dz
                        })
                        .collect();
                    adv[c][k] = plan.forward_real(&nlin);
                }
            }
            // momentum predictor
            let mut ustar = vec![vec![vec![Complex64::default(); npl]; nl]; 3];
            for c in 0..3 {
                for q in 0..npl {
                    let m = nz - 1;
                    let mut rhs: Vec<Complex64> = (1..nz)
                        .map(|k| {
                            let gp = match c {
                                0 => iu * kx[q] * p[k][q],
                                1 => iu * ky[q] * p[k][q],
                                _ => (p[k + 1][q] - p[k - 1][q]) / (2.0 * h),
                            };
                            u[c][k][q] / dt - adv[c][k][q] - gp
                        })
                        .collect();
                    let diag = vec![1.0 / dt + k2[q] + 2.0 / (h * h); m];
                    let off = vec![-1.0 / (h * h); m];
                    thomas(&off, &diag, &off, &mut rhs);
                    for k in 1..nz {
                        ustar[c][k][q] = rhs[k - 1];
                    }
                }
            }
            // projection
            let mut div = vec![vec![Complex64::default(); npl]; nl];
            for k in 0..nl {
                for q in 0..npl {
                    let dz = if k == 0 {
                        (-3.0 * ustar[2][0][q] + 4.0 * ustar[2][1][q] - ustar[2][2][q]) / (2.0 * h)
                    } else if k == nz {
                        (3.0 * ustar[2][nz][q] - 4.0 * ustar[2][nz - 1][q] + ustar[2][nz - 2][q]) / (2.0 * h)
                    } else {
                        (ustar[2][k + 1][q] - ustar[2][k - 1][q]) / (2.0 * h)
                    };
                    div[k][q] = iu * kx[q] * ustar[0][k][q] + iu * ky[q] * ustar[1][k][q] + dz;
                }
            }
            let mut phi = vec![vec![Complex64::default(); npl]; nl];
            for q in 0..npl {
                let mut rhs: Vec<Complex64> = (0..nl).map(|k| div[k][q] / dt).collect();
                let mut lower = vec![1.0 / (h * h); nl];
                let mut upper = vec![1.0 / (h * h); nl];
                let mut diag = vec![-2.0 / (h * h) - k2[q]; nl];
                upper[0] = 2.0 / (h * h);
                lower[nz] = 2.0 / (h * h);
                if k2[q] == 0.0 {
                    diag[0] = 1.0;
                    upper[0] = 0.0;
                    rhs[0] = Complex64::default();
                }
                lower[0] = 0.0;
                thomas(&lower, &diag, &upper, &mut rhs);
                for k in 0..nl {
                    phi[k][q] = rhs[k];
                }
            }
            for k in 1..nz {
                for q in 0..npl {
                    u[0][k][q] = ustar[0][k][q] - dt * iu * kx[q] * phi[k][q];
                    u[1][k][q] = ustar[1][k][q] - dt * iu * ky[q] * phi[k][q];
                    u[2][k][q] = ustar[2][k][q] - dt * (phi[k + 1][q] - phi[k - 1][q]) / (2.0 * h);
                }
            }
            for k in 0..nl {
                for q in 0..npl {
                    p[k][q] += phi[k][q] - div[k][q];
                }
            }
        }
        store(&u, &mut out, n);
    }
    let mut cut = Field::zeros_timed(g0, Rank::Vector, times);
    let n0 = g0.n_nodes();
    for it in 0..cut.ntimes() {
        for c in 0..3 {
            cut.component_mut(it, c).copy_from_slice(&out.component(it, c)[..n0]);
        }
    }
    Ok(cut)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_tridiagonal() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [3.0, 4.0, 5.0, 6.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut d: Vec<Complex64> = (0..4)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += lower[i] * x[i - 1];
                }
                if i < 3 {
                    v += upper[i] * x[i + 1];
                }
                Complex64::new(v, -v)
            })
            .collect();
        thomas(&lower, &diag, &upper, &mut d);
        for i in 0..4 {
            assert!((d[i] - Complex64::new(x[i], -x[i])).norm() < 1e-14);
        }
    }

    #[test]
    fn rest_stays_at_rest() {
        let g = SlabGrid::new(1.0, 1.0, 8, 8, 6).unwrap();
        let pb = super::super::MildProblem {
            a: -0.1,
            u_a: Field::zeros(g, Rank::Vector),
            n_steps: 2,
            space: super::super::Space::Half,
            spec: crate::QuadratureSpec::new(1e-6, 1e-12).unwrap(),
            picard_tol: 1e-10,
            max_iter: 5,
            admissibility_tol: 1e-3,
        };
        let out = projection_oracle(&pb, &OracleOptions { substeps: 3, lid_factor: 2 }).unwrap();
        assert_eq!(out.ntimes(), 3);
        assert_eq!(out.sup_norm(), 0.0);
        assert!(projection_oracle(&pb, &OracleOptions { substeps: 0, lid_factor: 2 }).is_err());
    }
}
