use super::*;
use std::f64::consts::PI;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gauss(d: [f64; 3], s: f64) -> f64 {
    (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (2.0 * s * s)).exp()
}

/// ∂_i∂_j and Δ of exp(−|x − c|²/2σ²) plus its mirror image across x₃ = 0.
fn imaged(p: [f64; 3], c: [f64; 3], s: f64) -> (f64, Mat3, f64) {
    let mut v = 0.0;
    let mut h = [[0.0; 3]; 3];
    let mut lap = 0.0;
    for cc in [c, [c[0], c[1], -c[2]]] {
        let d = [p[0] - cc[0], p[1] - cc[1], p[2] - cc[2]];
        let g = gauss(d, s);
        let s2 = s * s;
        v += g;
        for i in 0..3 {
            for j in 0..3 {
                h[i][j] += g * (d[i] * d[j] / (s2 * s2) - if i == j { 1.0 / s2 } else { 0.0 });
            }
        }
        lap += g * ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / (s2 * s2) - 3.0 / s2);
    }
    (v, h, lap)
}

fn grid() -> SlabGrid {
    SlabGrid::new(2.0, 2.0, 32, 32, 16).unwrap()
}

fn rel_l2(a: &Field, b: &Field) -> f64 {
    let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.values.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn normalized(mut f: Field) -> Field {
    let m = ball_mean(&f, 1.0, true).unwrap();
    f.values.iter_mut().for_each(|v| *v -= m);
    f
}

#[test]
fn trivial_inputs_give_zero() {
    let g = grid();
    let r = pressure_half(&Field::zeros(g, Rank::Tensor), &PressureOptions::default()).unwrap();
    assert_eq!(r.p1.sup_norm(), 0.0);
    let iso = Field::from_fn(g, Rank::Tensor, |_| vec![2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0]);
    let opts = PressureOptions { support_tol: None, ..Default::default() };
    let r = pressure_half(&iso, &opts).unwrap();
    assert!(r.p1.sup_norm() < 1e-12);
    assert!(pressure_half(&iso, &PressureOptions::default()).is_err());
}

#[test]
fn isotropic_manufactured_solution() {
    // H = −q𝕀 gives Δp = Δq, so p = q up to a constant
    let g = grid();
    let (c, s) = ([0.1, -0.2, 0.6], 0.25);
    let h = Field::from_fn(g, Rank::Tensor, |p| {
        let q = imaged(p, c, s).0;
        vec![-q, 0.0, 0.0, 0.0, -q, 0.0, 0.0, 0.0, -q]
    });
    let r = pressure_half(&h, &PressureOptions::default()).unwrap();
    let want = normalized(Field::scalar_from_fn(g, |p| imaged(p, c, s).0));
    assert!(rel_l2(&r.p1, &want) < 1e-4, "{}", rel_l2(&r.p1, &want));
    assert!(r.residual < 1e-6 && r.trace_defect < 1e-6, "{} {}", r.residual, r.trace_defect);
    assert!(r.normalization_mean.abs() < 1e-12);
}

#[test]
fn hessian_manufactured_solution() {
    // H = ∇²w gives div div H = Δ²w, so p = −Δw
    let g = SlabGrid::new(2.0, 3.0, 32, 32, 24).unwrap();
    let (c, s) = ([-0.1, 0.1, 0.8], 0.25);
    let h = Field::from_fn(g, Rank::Tensor, |p| {
        let hh = imaged(p, c, s).1;
        hh.iter().flatten().copied().collect()
    });
    let r = pressure_half(&h, &PressureOptions::default()).unwrap();
    let want = normalized(Field::scalar_from_fn(g, |p| -imaged(p, c, s).2));
    assert!(rel_l2(&r.p1, &want) < 1e-4, "{}", rel_l2(&r.p1, &want));
    assert!(r.residual < 1e-6 && r.trace_defect < 1e-6, "{} {}", r.residual, r.trace_defect);
    assert!(r.bmo.value > 0.0);
}

/// Dense oracle for H = H₁₁ e₁⊗e₁: direct lateral DFT sums and a direct cosine series in x₃
/// (nodes 0..=nz, trapezoid weights), p̂ = −k₁²Ĥ₁₁/|k|².
fn dense_oracle(g: &SlabGrid, h11: &Field) -> Field {
    use num_complex::Complex64;
    let (nx, ny, nz) = (g.nx, g.ny, g.nz);
    let big_l = 2.0 * g.half_width;
    let kw = |m: usize, n: usize| 2.0 * PI * (if m <= n / 2 { m as f64 } else { m as f64 - n as f64 }) / big_l;
    let kz = |m: usize| PI * m as f64 / g.height;
    let wz = |k: usize| if k == 0 || k == nz { 0.5 } else { 1.0 };
    let mut coef = vec![Complex64::default(); nx * ny * (nz + 1)];
    for m in 0..=nz {
        for b in 0..ny {
            for a in 0..nx {
                let mut s = Complex64::default();
                for k in 0..=nz {
                    let cz = wz(k) * (kz(m) * g.z(k)).cos();
                    for j in 0..ny {
                        for i in 0..nx {
                            let ph = -2.0 * PI * ((a * i) as f64 / nx as f64 + (b * j) as f64 / ny as f64);
                            s += Complex64::from_polar(cz * h11.get(0, 0, i, j, k), ph);
                        }
                    }
                }
                let k1 = kw(a, nx);
                let q = k1 * k1 + kw(b, ny).powi(2) + kz(m).powi(2);
                coef[(m * ny + b) * nx + a] = if q > 0.0 { -s * k1 * k1 / q } else { Complex64::default() };
            }
        }
    }
    let mut p = Field::zeros(*g, Rank::Scalar);
    for k in 0..=nz {
        for j in 0..ny {
            for i in 0..nx {
                let mut s = Complex64::default();
                for m in 0..=nz {
                    let cz = wz(m) * (kz(m) * g.z(k)).cos() * 2.0 / nz as f64;
                    for b in 0..ny {
                        for a in 0..nx {
                            let ph = 2.0 * PI * ((a * i) as f64 / nx as f64 + (b * j) as f64 / ny as f64);
                            s += coef[(m * ny + b) * nx + a] * Complex64::from_polar(cz, ph);
                        }
                    }
                }
                p.set(0, 0, i, j, k, s.re / (nx * ny) as f64);
            }
        }
    }
    normalized(p)
}

#[test]
fn single_component_against_dense_oracle() {
    let g = SlabGrid::new(2.0, 3.0, 16, 16, 18).unwrap();
    let (c, s) = ([0.1, 0.0, 0.9], 0.3);
    let phi = Field::scalar_from_fn(g, |p| imaged(p, c, s).0);
    let h = Field::from_fn(g, Rank::Tensor, |p| {
        let mut v = vec![0.0; 9];
        v[0] = imaged(p, c, s).0;
        v
    });
    let opts = PressureOptions::default();
    let r = pressure_half(&h, &opts).unwrap();
    let want = dense_oracle(&g, &phi);
    assert!(rel_l2(&r.p1, &want) < 1e-4, "{}", rel_l2(&r.p1, &want));
    let h2 = Field { values: h.values.iter().map(|v| 2.0 * v).collect(), ..h.clone() };
    let r2 = pressure_half(&h2, &opts).unwrap();
    for (a, b) in r.p1.values.iter().zip(&r2.p1.values) {
        assert!((2.0 * a - b).abs() < 1e-12);
    }
}

#[test]
fn whole_space_isotropic_bump() {
    let g = grid().doubled();
    let s = 0.3;
    let f = Field::from_fn(g, Rank::Tensor, |p| {
        let q = gauss(p, s);
        vec![q, 0.0, 0.0, 0.0, q, 0.0, 0.0, 0.0, q]
    });
    let p = pressure_whole(&f, &PressureOptions::default()).unwrap();
    let mut want = Field::scalar_from_fn(g, |x| -gauss(x, s));
    let m = ball_mean(&want, 1.0, false).unwrap();
    want.values.iter_mut().for_each(|v| *v -= m);
    assert!(rel_l2(&p, &want) < 1e-6);
}

#[test]
fn whole_space_symbol_route_matches_principal_value_route() {
    let g = SlabGrid::new(3.0, 3.0, 48, 48, 24).unwrap().doubled();
    let a = [[1.0, 0.3, -0.2], [0.3, -0.5, 0.7], [-0.2, 0.7, 0.4]];
    let s = 0.3;
    let ff = |x: &Vec3| {
        let q = gauss(*x, s);
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = a[i][j] * q;
            }
        }
        m
    };
    let f = Field::from_fn(g, Rank::Tensor, |p| ff(&p).iter().flatten().copied().collect());
    let p = pressure_whole(&f, &PressureOptions::default()).unwrap();
    let spec = QuadratureSpec::new(1e-9, 1e-12).unwrap();
    let nodes = [(24, 24, 24), (27, 22, 26), (20, 25, 30)];
    let pv: Vec<f64> = nodes
        .iter()
        .map(|&(i, j, k)| pressure_whole_pv_point(ff, &g.point(i, j, k), 3.5, &spec).unwrap())
        .collect();
    let sp: Vec<f64> = nodes.iter().map(|&(i, j, k)| p.get(0, 0, i, j, k)).collect();
    let scale = p.sup_norm();
    for n in 1..3 {
        let (d_pv, d_sp) = (pv[n] - pv[0], sp[n] - sp[0]);
        assert!((d_pv - d_sp).abs() < 1e-3 * scale, "{d_pv} vs {d_sp}");
    }
}

fn fd4_second(v: &dyn Fn(isize, isize, isize) -> f64, axis: usize, h: f64) -> f64 {
    let e = |s: isize| match axis {
        0 => v(s, 0, 0),
        1 => v(0, s, 0),
        _ => v(0, 0, s),
    };
    (-e(-2) + 16.0 * e(-1) - 30.0 * e(0) + 16.0 * e(1) - e(2)) / (12.0 * h * h)
}

#[test]
fn whole_space_finite_difference_residual() {
    let g = SlabGrid::new(2.0, 2.0, 64, 64, 32).unwrap().doubled();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut a = [[0.0; 3]; 3];
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = rng.gen_range(-1.0..1.0);
            b[i][j] = rng.gen_range(-1.0..1.0);
        }
    }
    let s = 0.4;
    let comp = |p: [f64; 3], i: usize, j: usize| gauss(p, s) * (a[i][j] + b[i][j] * p[0]);
    let f = Field::from_fn(g, Rank::Tensor, |p| (0..9).map(|c| comp(p, c / 3, c % 3)).collect());
    // the local residual does not see the periodic truncation, so the support check is off
    let p = pressure_whole(&f, &PressureOptions { support_tol: None, ..Default::default() }).unwrap();
    let h = g.hx();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &(i, j, k) in &[(32usize, 32usize, 32usize), (36, 30, 28), (28, 35, 37), (40, 32, 30)] {
        let at = |di: isize, dj: isize, dk: isize| {
            p.get(0, 0, (i as isize + di) as usize, (j as isize + dj) as usize, (k as isize + dk) as usize)
        };
        let lap: f64 = (0..3).map(|ax| fd4_second(&at, ax, h)).sum();
        // div div F from the closed form by central differences of the smooth comp function
        let x = g.point(i, j, k);
        let e = 1e-3;
        let mut dd = 0.0;
        for ii in 0..3 {
            for jj in 0..3 {
                let sh = |si: f64, sj: f64| {
                    let mut y = x;
                    y[ii] += si * e;
                    y[jj] += sj * e;
                    comp(y, ii, jj)
                };
                dd += (sh(1.0, 1.0) - sh(1.0, -1.0) - sh(-1.0, 1.0) + sh(-1.0, -1.0)) / (4.0 * e * e);
            }
        }
        worst = worst.max((lap + dd).abs());
        scale = scale.max(dd.abs());
    }
    assert!(worst < 1e-4 * scale, "{worst} vs {scale}");
}
