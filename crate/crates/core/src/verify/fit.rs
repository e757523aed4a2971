//! Fitted estimate constants, their refinement history and seeded sample clouds.

use crate::error::{Error, Result};
use crate::radial::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
        }
    }
}

/// One sample of an inequality lhs ≤ C · rhs_factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitRow {
    pub lhs: f64,
    pub rhs_factor: f64,
    pub ratio: f64,
}

impl FitRow {
    pub fn new(lhs: f64, rhs_factor: f64) -> Self {
        FitRow { lhs, rhs_factor, ratio: lhs / rhs_factor }
    }
}

/// Fitted constant at one tolerance level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementStep {
    pub rel_tol: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateFit {
    pub id: String,
    pub samples: String,
    pub constant: f64,
    /// Named auxiliary fit parameters (slopes, exponents, ratios).
    pub params: Vec<(String, f64)>,
    pub history: Vec<RefinementStep>,
    pub verdict: Verdict,
    /// Samples at the finest level.
    pub rows: Vec<FitRow>,
}

/// |a − b| ≤ frac · max(|a|, |b|).
pub fn within(a: f64, b: f64, frac: f64) -> bool {
    a.is_finite() && b.is_finite() && (a - b).abs() <= frac * a.abs().max(b.abs())
}

pub fn sup_ratio(rows: &[FitRow]) -> f64 {
    rows.iter().fold(0.0f64, |m, r| if r.ratio.is_finite() { m.max(r.ratio) } else { f64::INFINITY })
}

impl EstimateFit {
    /// Stable iff the last two constants agree within 20% and `extra_ok`.
    pub fn from_history(id: &str, samples: &str, history: Vec<RefinementStep>, rows: Vec<FitRow>, params: Vec<(String, f64)>, extra_ok: bool) -> Result<Self> {
        let last = history.last().ok_or_else(|| Error::InvalidArgument("empty refinement history".into()))?;
        let stable = extra_ok
            && history.len() >= 2
            && within(history[history.len() - 2].constant, last.constant, 0.2);
        Ok(EstimateFit {
            id: id.to_string(),
            samples: samples.to_string(),
            constant: last.constant,
            params,
            history,
            verdict: if stable { Verdict::Stable } else { Verdict::Unstable },
            rows,
        })
    }

    /// One line per row; fit parameters (e.g. the mass slope) follow as constant columns.
    pub fn csv(&self) -> String {
        let mut s = String::from("sample,lhs,rhs_factor,ratio");
        for (k, _) in &self.params {
            let _ = write!(s, ",{k}");
        }
        s.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(s, "{i},{:.12e},{:.12e},{:.12e}", r.lhs, r.rhs_factor, r.ratio);
            for (_, v) in &self.params {
                let _ = write!(s, ",{v:.12e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn summary_line(&self) -> String {
        let mut s = format!("{} constant={:.6e} verdict={}", self.id, self.constant, self.verdict.as_str());
        for (k, v) in &self.params {
            let _ = write!(s, " {k}={v:.6e}");
        }
        let hist: Vec<String> = self.history.iter().map(|h| format!("{:.0e}:{:.6e}", h.rel_tol, h.constant)).collect();
        let _ = write!(s, " history=[{}]", hist.join(" "));
        s
    }
}

/// Log-spaced cloud of (x, y, t) in the closed half space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub n_points: usize,
    pub seed: u64,
    /// Range of |x − y*|² + t (or |x − y|² + t for whole-space kernels).
    pub d_min: f64,
    pub d_max: f64,
}

impl SampleSpec {
    pub fn new(n_points: usize, seed: u64) -> Self {
        SampleSpec { n_points, seed, d_min: 1e-3, d_max: 10.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 100 {
            return Err(Error::InvalidArgument(format!("sample cloud too small: {} < 100 points", self.n_points)));
        }
        if !(self.d_min > 0.0) || !(self.d_max / self.d_min >= 1e3) {
            return Err(Error::InvalidArgument("sample cloud must span at least 3 decades".into()));
        }
        Ok(())
    }

    pub fn description(&self) -> String {
        format!("{} points, seed {}, |x-y*|^2+t in [{:e}, {:e}]", self.n_points, self.seed, self.d_min, self.d_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub x: Vec3,
    pub y: Vec3,
    pub t: f64,
}

/// Coordinates of a cloud point in the unit cube: log D, log(t/D), lateral share of D − t,
/// share of x₃ + y₃ taken by y₃, lateral angle, and the lateral position of x.
pub type CloudCoords = [f64; 7];

/// Splits D = |x − y*|² + t between t, the lateral offset and x₃ + y₃.
pub fn cloud_point(u: &CloudCoords, spec: &SampleSpec) -> CloudPoint {
    let (lo, hi) = (spec.d_min.ln(), spec.d_max.ln());
    let d = (lo + (hi - lo) * u[0]).exp();
    let t = d * 10f64.powf(-2.0 * (1.0 - u[1]));
    let rest = d - t;
    let lat = rest * u[2];
    let sum3 = (rest - lat).max(0.0).sqrt();
    let b = u[3];
    let ang = std::f64::consts::TAU * u[4];
    let x0 = [2.0 * u[5] - 1.0, 2.0 * u[6] - 1.0];
    let r = lat.sqrt();
    CloudPoint {
        x: [x0[0], x0[1], (1.0 - b) * sum3],
        y: [x0[0] - r * ang.cos(), x0[1] - r * ang.sin(), b * sum3],
        t,
    }
}

pub fn cloud_coords(spec: &SampleSpec) -> Result<Vec<CloudCoords>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..spec.n_points).map(|_| std::array::from_fn(|_| rng.gen_range(0.0..1.0))).collect())
}

/// Log-spaced cloud of (x, y, t) in the closed half space.
pub fn half_space_cloud(spec: &SampleSpec) -> Result<Vec<CloudPoint>> {
    Ok(cloud_coords(spec)?.iter().map(|u| cloud_point(u, spec)).collect())
}

/// Compass search for a larger ratio from `start`, at most `evals` evaluations. Returns every
/// evaluated row.
pub fn polish<F>(start: CloudCoords, spec: &SampleSpec, evals: usize, row: &F) -> Result<Vec<FitRow>>
where
    F: Fn(&CloudPoint) -> Result<FitRow>,
{
    let mut best_u = start;
    let mut best = row(&cloud_point(&start, spec))?;
    let mut out = vec![best];
    let mut h = 0.1;
    while out.len() < evals && h > 1e-3 {
        let mut improved = false;
        'dirs: for k in 0..7 {
            for sgn in [1.0, -1.0] {
                let mut u = best_u;
                u[k] = (u[k] + sgn * h).clamp(0.0, 1.0 - 1e-12);
                if u[k] == best_u[k] {
                    continue;
                }
                let r = row(&cloud_point(&u, spec))?;
                out.push(r);
                if r.ratio > best.ratio {
                    best = r;
                    best_u = u;
                    improved = true;
                    break 'dirs;
                }
                if out.len() >= evals {
                    break 'dirs;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok(out)
}

/// Least-squares slope and intercept of ln y against ln x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
