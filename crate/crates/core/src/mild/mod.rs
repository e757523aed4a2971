//! Mild representation machinery: initial-data propagator, Duhamel term, representation residual,
//! Picard iteration and an independent projection-method solver used as an oracle.
//!
//! The quadratic term is evaluated through the Green tensor applied to
//! f = −div(u⊗u) − ∇p¹_{u⊗u} rather than through K against u⊗u; the two agree for fields that
//! vanish on the boundary (checked pointwise in the verification harness).

mod oracle;
mod propagator;

pub use oracle::{projection_oracle, OracleOptions};
pub use propagator::{Propagator, Space, Spectrum};

use crate::error::{Error, Result};
use crate::fields::{Field, Rank};
use crate::pressure::leray_forcing;
use crate::quad::QuadratureSpec;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct MildProblem {
    /// Start time A < 0.
    pub a: f64,
    /// Initial data at τ = A: single-time vector field (half grid, or extended grid for the whole space).
    pub u_a: Field,
    /// Uniform time ladder A + n·|A|/n_steps, n = 0..=n_steps.
    pub n_steps: usize,
    pub space: Space,
    pub spec: QuadratureSpec,
    /// Picard stopping tolerance on sup |u_{k+1} − u_k|.
    pub picard_tol: f64,
    pub max_iter: usize,
    /// Largest admissible max |div u_A| (interior) and |u_A| on x₃ = 0.
    pub admissibility_tol: f64,
}

/// One Picard step: u_k is kept only for the final iterate (see [`PicardOutcome::solution`]).
#[derive(Debug, Clone, PartialEq)]
pub struct PicardState {
    pub k: usize,
    /// sup |u_k − u_{k−1}|.
    pub residual: f64,
    pub boundary_defect: f64,
    pub divergence_defect: f64,
    pub sup_norm: f64,
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub states: Vec<PicardState>,
    pub solution: Field,
    pub converged: bool,
    /// Set when the increments grew and the iteration was stopped.
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MildResidual {
    pub max: f64,
    pub per_time: Vec<f64>,
}

impl MildProblem {
    pub fn times(&self) -> Vec<f64> {
        let dt = -self.a / self.n_steps as f64;
        (0..=self.n_steps).map(|n| if n == self.n_steps { 0.0 } else { self.a + n as f64 * dt }).collect()
    }

    pub fn dt(&self) -> f64 {
        -self.a / self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a < 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidArgument("A must be negative".into()));
        }
        if self.n_steps == 0 || self.max_iter == 0 {
            return Err(Error::InvalidArgument("n_steps and max_iter must be positive".into()));
        }
        self.spec.validate()?;
        self.u_a.validate()?;
        if self.u_a.rank != Rank::Vector || self.u_a.time_axis.is_some() {
            return Err(Error::InvalidArgument("u_A must be a single-time vector field".into()));
        }
        if (self.space == Space::Whole) != self.u_a.grid.extended {
            return Err(Error::InvalidArgument("whole-space problems use extended grids, half-space ones half grids".into()));
        }
        let d = divergence_defect(&self.u_a, 0);
        if d > self.admissibility_tol {
            return Err(Error::InvalidArgument(format!("u_A is not divergence free: {d:.3e}")));
        }
        if self.space == Space::Half {
            let b = boundary_defect(&self.u_a, 0);
            if b > self.admissibility_tol {
                return Err(Error::InvalidArgument(format!("u_A does not vanish on the boundary: {b:.3e}")));
            }
        }
        Ok(())
    }

    pub fn propagator(&self) -> Propagator {
        Propagator::with_resolution(self.u_a.grid, self.space, self.spec.resolution_factor())
    }
}

/// Smooth divergence-free field with vanishing trace on x₃ = 0:
/// u = ∇×(a ζ e₃) + ∇×∇×(a ζ e₃) with a(x') = exp(−|x' − c'|²/2s²), ζ(x₃) = x₃² exp(−(x₃ − c₃)²/2s²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelFlow {
    pub center: [f64; 3],
    pub width: f64,
    pub scale: f64,
}

impl ModelFlow {
    pub fn eval(&self, p: [f64; 3]) -> [f64; 3] {
        let (c, s2) = (self.center, self.width * self.width);
        let (d1, d2) = (p[0] - c[0], p[1] - c[1]);
        let a = (-(d1 * d1 + d2 * d2) / (2.0 * s2)).exp();
        let a1 = -d1 / s2 * a;
        let a2 = -d2 / s2 * a;
        let lap = ((d1 * d1 + d2 * d2) / (s2 * s2) - 2.0 / s2) * a;
        let z = p[2];
        let e = (-(z - c[2]).powi(2) / (2.0 * s2)).exp();
        let zeta = z * z * e;
        let dzeta = (2.0 * z - z * z * (z - c[2]) / s2) * e;
        let k = self.scale;
        [k * (a2 * zeta + a1 * dzeta), k * (-a1 * zeta + a2 * dzeta), -k * lap * zeta]
    }

    pub fn sample(&self, grid: crate::fields::SlabGrid) -> Field {
        Field::from_fn(grid, Rank::Vector, |p| self.eval(p).to_vec())
    }
}

/// [`ModelFlow`] scaled so that its largest nodal magnitude on `grid` equals `amplitude`.
pub fn model_initial_data(grid: crate::fields::SlabGrid, center: [f64; 3], width: f64, amplitude: f64) -> Field {
    let mut flow = ModelFlow { center, width, scale: 1.0 };
    let m = flow.sample(grid).sup_norm();
    if m > 0.0 {
        flow.scale = amplitude / m;
    }
    flow.sample(grid)
}

/// max |div u| over interior nodes: spectral in x', fourth-order differences in x₃.
pub fn divergence_defect(u: &Field, it: usize) -> f64 {
    let g = u.grid;
    let plan = crate::fft3::Periodic3::new([g.nx, g.ny, 1], [2.0 * g.half_width, 2.0 * g.half_width, 1.0]);
    let w = plan.wavenumbers();
    let npl = g.nodes_per_layer();
    let nl = g.nlayers();
    let hz = g.hz();
    let mut worst = 0.0f64;
    let u3 = u.component(it, 2);
    for k in 2..nl.saturating_sub(2) {
        let mut c = vec![num_complex::Complex64::default(); npl];
        for a in 0..2 {
            let layer = plan.forward_real(&u.component(it, a)[k * npl..(k + 1) * npl]);
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let kk = if a == 0 { w[0].1[i] } else { w[1].1[j] };
                    c[j * g.nx + i] += num_complex::Complex64::new(0.0, kk) * layer[j * g.nx + i];
                }
            }
        }
        let lat = plan.inverse_real(c);
        for p in 0..npl {
            let at = |d: isize| u3[((k as isize + d) as usize) * npl + p];
            let dz = (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * hz);
            worst = worst.max((lat[p] + dz).abs());
        }
    }
    worst
}

/// max |u| on the boundary layer (half grids only; 0 otherwise).
pub fn boundary_defect(u: &Field, it: usize) -> f64 {
    if u.grid.extended {
        return 0.0;
    }
    let npl = u.grid.nodes_per_layer();
    (0..u.ncomp()).fold(0.0f64, |m, c| u.component(it, c)[..npl].iter().fold(m, |m, v| m.max(v.abs())))
}

/// S_{t−A} u_A.
pub fn propagate_initial(prop: &Propagator, u_a: &Field, a: f64, t: f64) -> Result<Field> {
    if !(t > a) {
        return Err(Error::InvalidArgument(format!("t = {t} must exceed A = {a}")));
    }
    Ok(prop.propagate(u_a, t - a))
}

fn check_uniform(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument("time ladder needs at least two samples".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-300)) {
        return Err(Error::InvalidArgument("time ladder must be uniform".into()));
    }
    Ok(dt)
}

/// ∫_{t₀}^{t_n} S_{t_n−τ} f(τ) dτ at every ladder time t_n of the tensor field F, with
/// f = −div F − ∇p_F, by the trapezoid rule in τ. The integrand is bounded at τ = t_n, where
/// S₀ is the identity (with the boundary value set to its zero limit in the half space).
pub fn duhamel(prop: &Propagator, f: &Field) -> Result<Field> {
    f.validate()?;
    if f.rank != Rank::Tensor {
        return Err(Error::ComponentMismatch { expected: 9, got: f.ncomp() });
    }
    let times = f.time_axis.clone().ok_or_else(|| Error::InvalidArgument("F needs a time axis".into()))?;
    let dt = check_uniform(&times)?;
    let nt = times.len();
    let spectra: Vec<[Spectrum; 3]> = (0..nt)
        .into_par_iter()
        .map(|m| leray_forcing(&f.at_time(m)).map(|fm| prop.to_spectrum(&fm, 0)))
        .collect::<Result<_>>()?;
    for n in 1..nt {
        prop.prepare(n as f64 * dt);
    }
    let accs: Vec<[Spectrum; 3]> = (0..nt)
        .into_par_iter()
        .map(|n| {
            let mut acc = prop.zero_spectrum();
            for (m, s) in spectra.iter().enumerate().take(n + 1) {
                if n == 0 {
                    break;
                }
                let w = if m == 0 || m == n { 0.5 * dt } else { dt };
                prop.apply_add(s, (n - m) as f64 * dt, w, &mut acc);
            }
            acc
        })
        .collect();
    let mut out = Field::zeros_timed(f.grid, Rank::Vector, times);
    for (n, acc) in accs.iter().enumerate() {
        prop.from_spectrum(acc, &mut out, n);
    }
    Ok(out)
}

/// u ⊗ u at every stored time.
pub fn outer(u: &Field) -> Field {
    let mut f = Field {
        grid: u.grid,
        rank: Rank::Tensor,
        values: vec![0.0; u.grid.n_nodes() * 9 * u.ntimes()],
        time_axis: u.time_axis.clone(),
    };
    let n = u.grid.n_nodes();
    for it in 0..u.ntimes() {
        for i in 0..3 {
            for j in 0..3 {
                let ui = u.component(it, i).to_vec();
                let uj = u.component(it, j);
                let dst = f.component_mut(it, i * 3 + j);
                for p in 0..n {
                    dst[p] = ui[p] * uj[p];
                }
            }
        }
    }
    f
}

/// S_{t−A} u_A at every ladder time.
pub fn linear_part(problem: &MildProblem, prop: &Propagator) -> Result<Field> {
    let times = problem.times();
    let mut out = Field::zeros_timed(problem.u_a.grid, Rank::Vector, times.clone());
    let src = prop.to_spectrum(&problem.u_a, 0);
    for n in 1..times.len() {
        prop.prepare(n as f64 * problem.dt());
    }
    let accs: Vec<[Spectrum; 3]> = (0..times.len())
        .into_par_iter()
        .map(|n| {
            let mut acc = prop.zero_spectrum();
            if n == 0 {
                for c in 0..3 {
                    acc[c] = src[c].clone();
                }
            } else {
                prop.apply_add(&src, n as f64 * problem.dt(), 1.0, &mut acc);
            }
            acc
        })
        .collect();
    for (n, acc) in accs.iter().enumerate() {
        prop.from_spectrum(acc, &mut out, n);
    }
    Ok(out)
}

fn sup_diff(a: &Field, b: &Field, it: usize) -> f64 {
    let n = a.grid.n_nodes() * a.ncomp();
    a.values[it * n..(it + 1) * n].iter().zip(&b.values[it * n..(it + 1) * n]).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// max over ladder times t > A and nodes of |u − S(u_A) − Duhamel(u⊗u)|; with `nonlinear`
/// false the Duhamel term is left out.
pub fn mild_residual(u: &Field, problem: &MildProblem, prop: &Propagator, nonlinear: bool) -> Result<MildResidual> {
    let lin = linear_part(problem, prop)?;
    if u.values.len() != lin.values.len() || u.time_axis != lin.time_axis {
        return Err(Error::InvalidArgument("u must be sampled on the problem grid and time ladder".into()));
    }
    let mut rhs = lin;
    if nonlinear {
        let d = duhamel(prop, &outer(u))?;
        rhs.values.iter_mut().zip(&d.values).for_each(|(r, v)| *r += v);
    }
    let per_time: Vec<f64> = (1..u.ntimes()).map(|it| sup_diff(u, &rhs, it)).collect();
    let max = per_time.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(MildResidual { max, per_time })
}

/// Picard iteration u_{k+1} = S(u_A) + Duhamel(u_k ⊗ u_k) from u_0 = S(u_A).
pub fn picard_solve(problem: &MildProblem) -> Result<PicardOutcome> {
    problem.validate()?;
    let prop = problem.propagator();
    let lin = linear_part(problem, &prop)?;
    let mut u = lin.clone();
    let mut states = vec![];
    let mut converged = false;
    let mut diverged = false;
    for k in 1..=problem.max_iter {
        let d = duhamel(&prop, &outer(&u))?;
        let mut next = lin.clone();
        next.values.iter_mut().zip(&d.values).for_each(|(r, v)| *r += v);
        let residual = (0..u.ntimes()).fold(0.0f64, |m, it| m.max(sup_diff(&next, &u, it)));
        u = next;
        let divergence_defect = (0..u.ntimes()).fold(0.0f64, |m, it| m.max(divergence_defect(&u, it)));
        let boundary = (0..u.ntimes()).fold(0.0f64, |m, it| m.max(boundary_defect(&u, it)));
        let prev = states.last().map(|s: &PicardState| s.residual);
        states.push(PicardState { k, residual, boundary_defect: boundary, divergence_defect, sup_norm: u.sup_norm() });
        if residual <= problem.picard_tol {
            converged = true;
            break;
        }
        if let Some(p) = prev {
            if residual > p {
                diverged = true;
                break;
            }
        }
    }
    Ok(PicardOutcome { states, solution: u, converged, diverged })
}
