//! Truncated-grid estimators of L_s, the uniform space-time norm and the BMO seminorm.

use super::Field;
use crate::error::{Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Ls { s: f64 },
    /// sup over x of the L_l(A, 0; L_s(B₊(x, radius))) norm; `a` is the first time sample.
    LslUnif { s: f64, l: f64, a: f64 },
    /// `even_extended` records whether the field was measured on the doubled grid.
    Bmo { even_extended: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub kind: NormKind,
    pub value: f64,
    pub discretization: String,
    /// Node achieving the sup (sup-type norms only).
    pub sup_location: Option<[f64; 3]>,
}

impl NormReport {
    pub fn csv_header() -> &'static str {
        "kind,s,l,a,value,sup_x1,sup_x2,sup_x3,discretization"
    }

    pub fn csv_row(&self) -> String {
        let (name, s, l, a) = match self.kind {
            NormKind::Ls { s } => ("Ls", s, f64::NAN, f64::NAN),
            NormKind::LslUnif { s, l, a } => ("LslUnif", s, l, a),
            NormKind::Bmo { even_extended } => (if even_extended { "BMO_even" } else { "BMO" }, f64::NAN, f64::NAN, f64::NAN),
        };
        let loc = self.sup_location.map_or(",,".to_string(), |p| format!("{:e},{:e},{:e}", p[0], p[1], p[2]));
        format!("{name},{s},{l},{a},{:e},{loc},{}", self.value, self.discretization)
    }
}

fn check_exponent(s: f64) -> Result<()> {
    if s >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("exponent {s} must lie in [1, inf]")))
    }
}

/// Trapezoid weights along x₃ (half weight on the first and last layer).
fn layer_weights(f: &Field) -> Vec<f64> {
    let g = &f.grid;
    let nl = g.nlayers();
    (0..nl).map(|k| if k == 0 || k == nl - 1 { 0.5 * g.hz() } else { g.hz() }).collect()
}

/// L_s norm over the stored box (per time, maximized over times).
pub fn norm_ls(f: &Field, s: f64) -> Result<NormReport> {
    f.validate()?;
    check_exponent(s)?;
    let g = &f.grid;
    let wz = layer_weights(f);
    let npl = g.nodes_per_layer();
    let area = g.hx() * g.hy();
    let mut best = 0.0f64;
    for it in 0..f.ntimes() {
        let mut acc = 0.0f64;
        for c in 0..f.ncomp() {
            for (k, layer) in f.component(it, c).chunks(npl).enumerate() {
                for v in layer {
                    if s.is_infinite() {
                        acc = acc.max(v.abs());
                    } else {
                        acc += area * wz[k] * v.abs().powf(s);
                    }
                }
            }
        }
        best = best.max(if s.is_infinite() { acc } else { acc.powf(1.0 / s) });
    }
    Ok(NormReport {
        kind: NormKind::Ls { s },
        value: best,
        discretization: format!("trapezoid nx={} ny={} layers={}", g.nx, g.ny, g.nlayers()),
        sup_location: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnifOptions {
    /// Candidate centers are every `center_stride`-th node along each axis.
    pub center_stride: usize,
    pub radius: f64,
}

impl Default for UnifOptions {
    fn default() -> Self {
        UnifOptions { center_stride: 1, radius: 1.0 }
    }
}

/// sup over node centers x of ( ∫ ( ∫_{B₊(x)} |f|^s dy )^{l/s} dτ )^{1/l}, B₊(x) = {|y − x| < r, y₃ > x₃}.
///
/// Ball integrals are node sums times the cell volume; the time integral is the trapezoid rule
/// on the time axis.
pub fn norm_ls_unif(f: &Field, s: f64, l: f64, opts: UnifOptions) -> Result<NormReport> {
    f.validate()?;
    check_exponent(s)?;
    check_exponent(l)?;
    let times = f.time_axis.as_ref().ok_or_else(|| Error::InvalidArgument("field has no time axis".into()))?;
    if opts.center_stride == 0 || !(opts.radius > 0.0) {
        return Err(Error::InvalidArgument("stride and radius must be positive".into()));
    }
    let g = f.grid;
    let (hx, hy, hz) = (g.hx(), g.hy(), g.hz());
    let r = opts.radius;
    let (rx, ry, rz) = ((r / hx) as isize, (r / hy) as isize, (r / hz) as isize);
    let mut offsets = vec![];
    for dk in 1..=rz {
        for dj in -ry..=ry {
            for di in -rx..=rx {
                let d2 = (di as f64 * hx).powi(2) + (dj as f64 * hy).powi(2) + (dk as f64 * hz).powi(2);
                if d2 < r * r {
                    offsets.push((di, dj, dk));
                }
            }
        }
    }
    let vol = hx * hy * hz;
    let nt = times.len();
    let tw: Vec<f64> = (0..nt)
        .map(|i| {
            let lo = if i > 0 { times[i] - times[i - 1] } else { 0.0 };
            let hi = if i + 1 < nt { times[i + 1] - times[i] } else { 0.0 };
            0.5 * (lo + hi)
        })
        .collect();
    let (nx, ny, nl) = (g.nx as isize, g.ny as isize, g.nlayers() as isize);
    let st = opts.center_stride;
    let centers: Vec<(usize, usize, usize)> = (0..g.nlayers())
        .step_by(st)
        .flat_map(|k| (0..g.ny).step_by(st).flat_map(move |j| (0..g.nx).step_by(st).map(move |i| (i, j, k))))
        .collect();
    let values: Vec<f64> = centers
        .par_iter()
        .map(|&(i, j, k)| {
            let mut time_acc = 0.0f64;
            for it in 0..nt {
                let mut acc = 0.0f64;
                for c in 0..f.ncomp() {
                    let blk = f.component(it, c);
                    for &(di, dj, dk) in &offsets {
                        let kk = k as isize + dk;
                        if kk >= nl {
                            continue;
                        }
                        let (mut ii, mut jj) = (i as isize + di, j as isize + dj);
                        if g.periodic_lateral {
                            ii = ii.rem_euclid(nx);
                            jj = jj.rem_euclid(ny);
                        } else if ii < 0 || ii >= nx || jj < 0 || jj >= ny {
                            continue;
                        }
                        let v = blk[(kk * ny * nx + jj * nx + ii) as usize].abs();
                        if s.is_infinite() {
                            acc = acc.max(v);
                        } else {
                            acc += vol * v.powf(s);
                        }
                    }
                }
                let inner = if s.is_infinite() { acc } else { acc.powf(1.0 / s) };
                if l.is_infinite() {
                    time_acc = time_acc.max(inner);
                } else {
                    time_acc += tw[it] * inner.powf(l);
                }
            }
            if l.is_infinite() {
                time_acc
            } else {
                time_acc.powf(1.0 / l)
            }
        })
        .collect();
    let (best, arg) = values.iter().enumerate().fold((0.0f64, 0), |(m, a), (n, &v)| if v > m { (v, n) } else { (m, a) });
    let (i, j, k) = centers[arg];
    Ok(NormReport {
        kind: NormKind::LslUnif { s, l, a: times[0] },
        value: best,
        discretization: format!("radius={r} ball_nodes={} centers={} times={nt}", offsets.len(), centers.len()),
        sup_location: Some(g.point(i, j, k)),
    })
}

/// Largest mean oscillation over dyadic node-aligned cubes of side max_cube·2^−j.
///
/// Averages are plain node means over the cube. This only bounds the BMO seminorm from below.
/// Fields with a time axis report the sup over times.
pub fn norm_bmo(f: &Field, max_cube: f64) -> Result<NormReport> {
    f.validate()?;
    if f.ncomp() != 1 {
        return Err(Error::ComponentMismatch { expected: 1, got: f.ncomp() });
    }
    let g = f.grid;
    let (hx, hy, hz) = (g.hx(), g.hy(), g.hz());
    let ext_z = (g.nlayers() - 1) as f64 * hz;
    if !(max_cube > 0.0) || max_cube > (g.nx - 1) as f64 * hx + 1e-12 || max_cube > (g.ny - 1) as f64 * hy + 1e-12 || max_cube > ext_z + 1e-12 {
        return Err(Error::InvalidArgument(format!("max_cube {max_cube} exceeds the grid extent")));
    }
    let mut sizes = vec![];
    let mut side = max_cube;
    loop {
        let n = [(side / hx).round() as usize, (side / hy).round() as usize, (side / hz).round() as usize];
        if n.iter().any(|&m| m < 1) {
            break;
        }
        sizes.push(n);
        side *= 0.5;
    }
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("empty cube family".into()));
    }
    let (nx, ny, nl) = (g.nx, g.ny, g.nlayers());
    let mut best = 0.0f64;
    let mut loc = [0.0; 3];
    for it in 0..f.ntimes() {
        let v = f.component(it, 0);
        let at = |i: usize, j: usize, k: usize| v[(k * ny + j) * nx + i];
        for n in &sizes {
            let (cx, cy, cz) = (n[0] + 1, n[1] + 1, n[2] + 1);
            if cx > nx || cy > ny || cz > nl {
                continue;
            }
            let count = (cx * cy * cz) as f64;
            let positions: Vec<(usize, usize, usize)> = (0..=nl - cz)
                .flat_map(|k| (0..=ny - cy).flat_map(move |j| (0..=nx - cx).map(move |i| (i, j, k))))
                .collect();
            let (m, p) = positions
                .par_iter()
                .map(|&(i0, j0, k0)| {
                    let mut sum = 0.0;
                    for k in k0..k0 + cz {
                        for j in j0..j0 + cy {
                            for i in i0..i0 + cx {
                                sum += at(i, j, k);
                            }
                        }
                    }
                    let mean = sum / count;
                    let mut osc = 0.0;
                    for k in k0..k0 + cz {
                        for j in j0..j0 + cy {
                            for i in i0..i0 + cx {
                                osc += (at(i, j, k) - mean).abs();
                            }
                        }
                    }
                    (osc / count, (i0, j0, k0))
                })
                .reduce(|| (0.0, (0, 0, 0)), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
            if m > best {
                best = m;
                loc = g.point(p.0, p.1, p.2);
            }
        }
    }
    let desc: Vec<String> = sizes.iter().map(|n| format!("{}x{}x{}", n[0], n[1], n[2])).collect();
    Ok(NormReport {
        kind: NormKind::Bmo { even_extended: g.extended },
        value: best,
        discretization: format!("cubes(cells)={}", desc.join("/")),
        sup_location: Some(loc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Rank, SlabGrid};

    #[test]
    fn bmo_examples() {
        let g = SlabGrid::new(1.0, 1.0, 16, 16, 8).unwrap().doubled();
        let c = Field::scalar_from_fn(g, |_| 3.0);
        assert_eq!(norm_bmo(&c, 1.0).unwrap().value, 0.0);
        let s = Field::scalar_from_fn(g, |p| p[0].signum() * (p[0] != 0.0) as i32 as f64);
        assert!(norm_bmo(&s, 2.0).is_err());
        let r = norm_bmo(&s, 1.0).unwrap();
        // centered 9-node cube: the x₁ = 0 column holds sign 0, the other 8 have |f − 0| = 1
        assert!((r.value - 8.0 / 9.0).abs() < 1e-15, "{}", r.value);
        let f = Field::scalar_from_fn(g, |p| (p[0] * 3.0).sin() + p[2]);
        let mut f2 = f.clone();
        f2.values.iter_mut().for_each(|v| *v += 7.25);
        assert_eq!(norm_bmo(&f, 1.0).unwrap().value, norm_bmo(&f2, 1.0).unwrap().value);
    }

    #[test]
    fn bmo_of_log_is_refinement_stable() {
        let logf = |p: [f64; 3]| {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            r.max(1e-3).ln()
        };
        // nodes avoid the origin by a half-cell lateral offset
        let coarse = SlabGrid::new(1.0, 1.0, 16, 16, 8).unwrap().doubled();
        let fine = SlabGrid::new(1.0, 1.0, 32, 32, 16).unwrap().doubled();
        let shift = |g: SlabGrid| move |p: [f64; 3]| logf([p[0] + 0.5 * g.hx(), p[1] + 0.5 * g.hy(), p[2] + 0.5 * g.hz()]);
        let a = norm_bmo(&Field::scalar_from_fn(coarse, shift(coarse)), 1.0).unwrap().value;
        let b = norm_bmo(&Field::scalar_from_fn(fine, shift(fine)), 1.0).unwrap().value;
        assert!((a - b).abs() <= 0.1 * b, "{a} vs {b}");
    }

    fn ball_oracle(g: &SlabGrid, c: (usize, usize, usize)) -> f64 {
        let mut n = 0usize;
        let p = g.point(c.0, c.1, c.2);
        for k in 0..g.nlayers() {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let q = g.point(i, j, k);
                    let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) + (q[2] - p[2]).powi(2);
                    if q[2] > p[2] && d2 < 1.0 {
                        n += 1;
                    }
                }
            }
        }
        n as f64 * g.hx() * g.hy() * g.hz()
    }

    #[test]
    fn unif_norm_of_one_matches_direct_sum() {
        let mut g = SlabGrid::new(2.0, 1.5, 16, 16, 6).unwrap();
        g.periodic_lateral = false;
        let mut f = Field::zeros_timed(g, Rank::Scalar, vec![-1.0, -0.5, 0.0]);
        f.values.iter_mut().for_each(|v| *v = 1.0);
        let r = norm_ls_unif(&f, 2.0, 2.0, UnifOptions::default()).unwrap();
        let mut best = 0.0f64;
        for k in 0..g.nlayers() {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    best = best.max(ball_oracle(&g, (i, j, k)));
                }
            }
        }
        // ∫_{-1}^0 vol dτ = vol
        assert!((r.value - best.sqrt()).abs() < 1e-12, "{} vs {}", r.value, best.sqrt());
        let zero = Field::zeros_timed(g, Rank::Scalar, vec![-1.0, 0.0]);
        assert_eq!(norm_ls_unif(&zero, 3.0, 2.0, UnifOptions::default()).unwrap().value, 0.0);
        assert!(norm_ls_unif(&f.at_time(0), 2.0, 2.0, UnifOptions::default()).is_err());
        assert!(norm_ls_unif(&f, 0.5, 2.0, UnifOptions::default()).is_err());
    }

    #[test]
    fn unif_norm_is_translation_invariant() {
        let g = SlabGrid::new(2.0, 2.0, 16, 16, 8).unwrap();
        let cyl = |cx: f64| {
            let mut f = Field::zeros_timed(g, Rank::Scalar, vec![-1.0, 0.0]);
            for it in 0..2 {
                for k in 0..g.nlayers() {
                    for j in 0..g.ny {
                        for i in 0..g.nx {
                            let p = g.point(i, j, k);
                            if (p[0] - cx).powi(2) + p[1] * p[1] < 1.0 && p[2] < 1.0 {
                                f.set(it, 0, i, j, k, 1.0);
                            }
                        }
                    }
                }
            }
            norm_ls_unif(&f, 2.0, 3.0, UnifOptions::default()).unwrap().value
        };
        assert!((cyl(-0.5) - cyl(0.75)).abs() < 1e-12);
    }

    #[test]
    fn ls_norm_of_constant() {
        let g = SlabGrid::new(1.0, 2.0, 8, 8, 4).unwrap();
        let f = Field::scalar_from_fn(g, |_| 2.0);
        let r = norm_ls(&f, 2.0).unwrap();
        assert!((r.value - (4.0 * 8.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(norm_ls(&f, f64::INFINITY).unwrap().value, 2.0);
    }
}
