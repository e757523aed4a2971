//! Checks of the Neumann pressure operator and of the split of the mild-solution pressure.

use super::fit::{EstimateFit, FitRow, RefinementStep};
use crate::error::{Error, Result};
use crate::fft3::Periodic3;
use crate::fields::{Field, Rank, SlabGrid};
use crate::mild::{mild_residual, outer, MildProblem, Space};
use crate::pressure::{pressure_half, PressureOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum of `bumps` Gaussians with random symmetric tensor coefficients, kept 6.5σ away from the
/// wall, the lateral sides and the top.
pub fn random_stress(grid: SlabGrid, bumps: usize, rng: &mut ChaCha8Rng) -> Field {
    let mut parts = Vec::with_capacity(bumps);
    for _ in 0..bumps {
        let sigma = rng.gen_range(0.04..0.07) * grid.height.min(grid.half_width);
        let margin = 6.5 * sigma;
        let cx = rng.gen_range(-1.0..1.0) * (grid.half_width - margin);
        let cy = rng.gen_range(-1.0..1.0) * (grid.half_width - margin);
        let cz = rng.gen_range(margin..grid.height - margin);
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                a[i][j] = rng.gen_range(-1.0..1.0);
                a[j][i] = a[i][j];
            }
        }
        parts.push(([cx, cy, cz], sigma, a));
    }
    Field::from_fn(grid, Rank::Tensor, |p| {
        let mut m = vec![0.0; 9];
        for (c, s, a) in &parts {
            let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2);
            let g = (-d2 / (2.0 * s * s)).exp();
            for i in 0..3 {
                for j in 0..3 {
                    m[i * 3 + j] += a[i][j] * g;
                }
            }
        }
        m
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureOperatorReport {
    /// Largest |Δp¹ + div div H| over all draws.
    pub residual: f64,
    /// Largest |∂₃p¹| on the wall over all draws.
    pub trace_defect: f64,
    /// ‖p¹‖_BMO / ‖H‖_∞ fitted over two seeds of `draws` random H each.
    pub fit: EstimateFit,
}

/// `draws` random stresses per seed (seed and seed + 1), reported as one fit whose history is the
/// largest BMO ratio per seed.
pub fn check_pressure_operator(grid: SlabGrid, draws: usize, seed: u64) -> Result<PressureOperatorReport> {
    if draws == 0 {
        return Err(Error::InvalidArgument("need at least one draw".into()));
    }
    let opts = PressureOptions::default();
    let mut residual = 0.0f64;
    let mut trace_defect = 0.0f64;
    let mut history = Vec::new();
    let mut rows = Vec::new();
    for (level, s) in [seed, seed.wrapping_add(1)].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let mut c = 0.0f64;
        for _ in 0..draws {
            let bumps = rng.gen_range(1..=3);
            let h = random_stress(grid, bumps, &mut rng);
            let r = pressure_half(&h, &opts)?;
            residual = residual.max(r.residual);
            trace_defect = trace_defect.max(r.trace_defect);
            let row = FitRow::new(r.bmo.value, h.sup_norm());
            c = c.max(row.ratio);
            rows.push(row);
        }
        history.push(RefinementStep { rel_tol: level as f64, constant: c });
    }
    let desc = format!("{draws} random Gaussian stresses per seed, seeds {seed} and {}", seed.wrapping_add(1));
    let fit = EstimateFit::from_history("pressure-BMO", &desc, history, rows, vec![("residual".into(), residual), ("trace_defect".into(), trace_defect)], true)?;
    Ok(PressureOperatorReport { residual, trace_defect, fit })
}

/// ∂₃ at layer k, fourth order; one-sided within two layers of either end.
fn dz1(col: &dyn Fn(usize) -> f64, k: usize, nl: usize, h: f64) -> f64 {
    let fwd = |f: &dyn Fn(usize) -> f64, k: usize| match k {
        0 => (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / (12.0 * h),
        _ => (-3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4)) / (12.0 * h),
    };
    if k < 2 {
        fwd(col, k)
    } else if k + 2 >= nl {
        -fwd(&|m| col(nl - 1 - m), nl - 1 - k)
    } else {
        (col(k - 2) - 8.0 * col(k - 1) + 8.0 * col(k + 1) - col(k + 2)) / (12.0 * h)
    }
}

/// ∂₃² at layer k, fourth order; one-sided within two layers of either end.
fn dz2(col: &dyn Fn(usize) -> f64, k: usize, nl: usize, h: f64) -> f64 {
    let fwd = |f: &dyn Fn(usize) -> f64, k: usize| match k {
        0 => (45.0 * f(0) - 154.0 * f(1) + 214.0 * f(2) - 156.0 * f(3) + 61.0 * f(4) - 10.0 * f(5)) / (12.0 * h * h),
        _ => (10.0 * f(0) - 15.0 * f(1) - 4.0 * f(2) + 14.0 * f(3) - 6.0 * f(4) + f(5)) / (12.0 * h * h),
    };
    if k < 2 {
        fwd(col, k)
    } else if k + 2 >= nl {
        fwd(&|m| col(nl - 1 - m), nl - 1 - k)
    } else {
        (-col(k - 2) + 16.0 * col(k - 1) - 30.0 * col(k) + 16.0 * col(k + 1) - col(k + 2)) / (12.0 * h * h)
    }
}

/// Spectral-in-x', finite-difference-in-x₃ derivatives of single-time scalar data on a half grid.
struct Deriv {
    grid: SlabGrid,
    plan: Periodic3,
    kx: Vec<f64>,
    ky: Vec<f64>,
    k2: Vec<f64>,
}

impl Deriv {
    fn new(grid: SlabGrid) -> Self {
        let plan = Periodic3::new([grid.nx, grid.ny, 1], [2.0 * grid.half_width, 2.0 * grid.half_width, 1.0]);
        let w = plan.wavenumbers();
        let npl = grid.nodes_per_layer();
        let kx = (0..npl).map(|m| w[0].1[m % grid.nx]).collect();
        let ky = (0..npl).map(|m| w[1].1[m / grid.nx]).collect();
        let k2 = (0..npl).map(|m| w[0].0[m % grid.nx].powi(2) + w[1].0[m / grid.nx].powi(2)).collect();
        Deriv { grid, plan, kx, ky, k2 }
    }

    fn lateral(&self, v: &[f64], sym: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let npl = self.grid.nodes_per_layer();
        let mut out = Vec::with_capacity(v.len());
        for layer in v.chunks(npl) {
            let c = self.plan.forward_real(layer);
            out.extend(self.plan.inverse_real(c.iter().enumerate().map(|(m, x)| sym(m) * x).collect()));
        }
        out
    }

    fn vertical(&self, v: &[f64], second: bool) -> Vec<f64> {
        let npl = self.grid.nodes_per_layer();
        let nl = self.grid.nlayers();
        let h = self.grid.hz();
        let mut out = vec![0.0; v.len()];
        for p in 0..npl {
            let col = |k: usize| v[k * npl + p];
            for k in 0..nl {
                out[k * npl + p] = if second { dz2(&col, k, nl, h) } else { dz1(&col, k, nl, h) };
            }
        }
        out
    }

    fn grad(&self, v: &[f64]) -> [Vec<f64>; 3] {
        let i = Complex64::new(0.0, 1.0);
        [self.lateral(v, |m| i * self.kx[m]), self.lateral(v, |m| i * self.ky[m]), self.vertical(v, false)]
    }

    fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let lat = self.lateral(v, |m| Complex64::new(-self.k2[m], 0.0));
        lat.iter().zip(self.vertical(v, true)).map(|(a, b)| a + b).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureSplitReport {
    /// Time at which the split is taken (last ladder time).
    pub time: f64,
    /// ∇p² = ∇p − ∇p¹ on the half grid.
    pub grad_p2: Field,
    /// max |div ∇p²| over layers with centred stencils in the lower half of the slab (the upper
    /// half feels the truncation at x₃ = H).
    pub harmonicity_defect: f64,
    /// (x₃, max |div ∇p²|) over every layer with centred stencils.
    pub defect_profile: Vec<(f64, f64)>,
    /// (x₃, sup_{x'} |∇p²| / ln(2 + 1/x₃)) on the wall ladder x₃ = h·2^i, nearest the wall last.
    pub log_ladder: Vec<(f64, f64)>,
    /// Fit of |∇p²| ≤ c ln(2 + 1/x₃); history is the running sup along the ladder.
    pub log_fit: EstimateFit,
    /// (x₃, sup_{x'} |∇p²|) over the top quartile of layers, stopping before the two lid layers
    /// where the vertical stencils turn one-sided.
    pub top_profile: Vec<(f64, f64)>,
    pub top_monotone: bool,
    /// Finite-difference sup |∇u| and sup |∂_t u| at the split time.
    pub sup_grad_u: f64,
    pub sup_dt_u: f64,
}

/// Splits the pressure of a converged mild solution at its last ladder time. Errors when the mild
/// residual exceeds `max_residual`.
pub fn check_pressure_split(u: &Field, problem: &MildProblem, max_residual: f64) -> Result<PressureSplitReport> {
    let grid = u.grid;
    if grid.extended || problem.space != Space::Half {
        return Err(Error::InvalidArgument("the pressure split is taken on the half space".into()));
    }
    if u.rank != Rank::Vector || u.ntimes() < 4 {
        return Err(Error::InvalidArgument("need a vector field on at least four ladder times".into()));
    }
    let res = mild_residual(u, problem, &problem.propagator(), true)?;
    if res.max > max_residual {
        return Err(Error::InvalidArgument(format!("mild residual {:.3e} exceeds {max_residual:.3e}", res.max)));
    }
    let n = u.ntimes() - 1;
    let times = u.time_axis.clone().unwrap_or_default();
    let dt = problem.dt();
    let d = Deriv::new(grid);
    let nn = grid.n_nodes();

    // ∇p = −∂_t u − (u·∇)u + Δu
    let mut grad_p = [vec![0.0; nn], vec![0.0; nn], vec![0.0; nn]];
    let mut sup_grad_u = 0.0f64;
    let mut sup_dt_u = 0.0f64;
    let uc: Vec<&[f64]> = (0..3).map(|c| u.component(n, c)).collect();
    let grads: Vec<[Vec<f64>; 3]> = uc.iter().map(|v| d.grad(v)).collect();
    for c in 0..3 {
        let lap = d.laplacian(uc[c]);
        let at = |m: usize| u.component(n - m, c);
        for p in 0..nn {
            let ut = (11.0 * at(0)[p] - 18.0 * at(1)[p] + 9.0 * at(2)[p] - 2.0 * at(3)[p]) / (6.0 * dt);
            let adv: f64 = (0..3).map(|j| uc[j][p] * grads[c][j][p]).sum();
            grad_p[c][p] = -ut - adv + lap[p];
            sup_dt_u = sup_dt_u.max(ut.abs());
            for j in 0..3 {
                sup_grad_u = sup_grad_u.max(grads[c][j][p].abs());
            }
        }
    }
    let h = outer(&u.at_time(n));
    let p1 = pressure_half(&h, &PressureOptions { support_tol: None, bmo_max_cube: None })?.p1;
    let grad_p1 = d.grad(p1.component(0, 0));
    let mut grad_p2 = Field::zeros(grid, Rank::Vector);
    for c in 0..3 {
        let dst = grad_p2.component_mut(0, c);
        for p in 0..nn {
            dst[p] = grad_p[c][p] - grad_p1[c][p];
        }
    }

    let npl = grid.nodes_per_layer();
    let nl = grid.nlayers();
    let div: Vec<f64> = {
        let i = Complex64::new(0.0, 1.0);
        let a = d.lateral(grad_p2.component(0, 0), |m| i * d.kx[m]);
        let b = d.lateral(grad_p2.component(0, 1), |m| i * d.ky[m]);
        let c = d.vertical(grad_p2.component(0, 2), false);
        (0..nn).map(|p| a[p] + b[p] + c[p]).collect()
    };
    let defect_profile: Vec<(f64, f64)> =
        (2..nl - 2).map(|k| (grid.z(k), div[k * npl..(k + 1) * npl].iter().fold(0.0f64, |m, v| m.max(v.abs())))).collect();
    let harmonicity_defect = defect_profile.iter().filter(|v| v.0 <= 0.5 * grid.height).fold(0.0f64, |m, v| m.max(v.1));

    let layer_sup = |k: usize| {
        (0..npl).fold(0.0f64, |m, p| {
            let q = k * npl + p;
            let v: f64 = (0..3).map(|c| grad_p2.component(0, c)[q].powi(2)).sum();
            m.max(v.sqrt())
        })
    };
    let mut ladder_k = vec![];
    let mut k = 1;
    while 4 * k < nl {
        ladder_k.push(k);
        k *= 2;
    }
    ladder_k.reverse();
    let log_ladder: Vec<(f64, f64)> = ladder_k
        .iter()
        .map(|&k| {
            let x3 = grid.z(k);
            (x3, layer_sup(k) / (2.0 + 1.0 / x3).ln())
        })
        .collect();
    let mut history = Vec::new();
    let mut run = 0.0f64;
    for &(x3, c) in &log_ladder {
        run = run.max(c);
        history.push(RefinementStep { rel_tol: x3, constant: run });
    }
    let rows = log_ladder.iter().map(|&(x3, c)| FitRow { lhs: c * (2.0 + 1.0 / x3).ln(), rhs_factor: (2.0 + 1.0 / x3).ln(), ratio: c }).collect();
    let log_fit = EstimateFit::from_history("1.11", &format!("wall ladder x3 = h*2^i, {} layers", log_ladder.len()), history, rows, vec![], true)?;

    let top_profile: Vec<(f64, f64)> = ((3 * nl) / 4..nl - 2).map(|k| (grid.z(k), layer_sup(k))).collect();
    let top_monotone = top_profile.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(PressureSplitReport {
        time: times.get(n).copied().unwrap_or(0.0),
        grad_p2,
        harmonicity_defect,
        defect_profile,
        log_ladder,
        log_fit,
        top_profile,
        top_monotone,
        sup_grad_u,
        sup_dt_u,
    })
}

/// Truncation estimate for the finer of a grid pair whose defects converge at `order`.
pub fn truncation_estimate(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    (coarse - fine).abs() / (ratio.powf(order) - 1.0)
}
