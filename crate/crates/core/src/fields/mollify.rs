use super::Field;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Unnormalized C∞ bump exp(−1/(1−r²)) on the unit ball.
pub fn bump(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

/// Shift up by `shift` (zero below), then convolve with the unit-mass bump of radius `eps`.
///
/// The discrete stencil weights are normalized to sum to one, so constants are reproduced
/// exactly wherever the stencil fits. Lateral neighbours wrap when the grid is periodic and
/// read as zero otherwise; layers above the top read as zero.
pub fn mollify(f: &Field, eps: f64, shift: f64) -> Result<Field> {
    f.validate()?;
    if !(eps > 0.0) || !(shift >= 0.0) || !eps.is_finite() || !shift.is_finite() {
        return Err(Error::InvalidArgument("eps must be > 0 and shift >= 0".into()));
    }
    let g = f.grid;
    if g.extended {
        return Err(Error::InvalidArgument("mollify acts on half-space fields".into()));
    }
    let h = g.max_spacing();
    if eps < h {
        return Err(Error::Undersampled { eps, h });
    }
    let shifted = shift_up(f, shift);
    let (hx, hy, hz) = (g.hx(), g.hy(), g.hz());
    let rx = (eps / hx).floor() as isize;
    let ry = (eps / hy).floor() as isize;
    let rz = (eps / hz).floor() as isize;
    let mut stencil = vec![];
    for dk in -rz..=rz {
        for dj in -ry..=ry {
            for di in -rx..=rx {
                let r = ((di as f64 * hx).powi(2) + (dj as f64 * hy).powi(2) + (dk as f64 * hz).powi(2)).sqrt() / eps;
                let w = bump(r);
                if w > 0.0 {
                    stencil.push((di, dj, dk, w));
                }
            }
        }
    }
    let total: f64 = stencil.iter().map(|s| s.3).sum();
    stencil.iter_mut().for_each(|s| s.3 /= total);

    let (nx, ny, nl) = (g.nx as isize, g.ny as isize, g.nlayers() as isize);
    let npl = g.nodes_per_layer();
    let mut out = Field { values: vec![0.0; f.values.len()], ..f.clone() };
    let blocks = f.ntimes() * f.ncomp();
    let n = g.n_nodes();
    out.values.par_chunks_mut(n).zip(shifted.par_chunks(n)).take(blocks).for_each(|(dst, src)| {
        for k in 0..nl {
            for j in 0..ny {
                for i in 0..nx {
                    let mut acc = 0.0;
                    for &(di, dj, dk, w) in &stencil {
                        let kk = k + dk;
                        if kk < 0 || kk >= nl {
                            continue;
                        }
                        let (mut ii, mut jj) = (i + di, j + dj);
                        if g.periodic_lateral {
                            ii = ii.rem_euclid(nx);
                            jj = jj.rem_euclid(ny);
                        } else if ii < 0 || ii >= nx || jj < 0 || jj >= ny {
                            continue;
                        }
                        acc += w * src[kk as usize * npl + (jj * nx + ii) as usize];
                    }
                    dst[k as usize * npl + (j * nx + i) as usize] = acc;
                }
            }
        }
    });
    Ok(out)
}

/// g(y', y₃) = f(y', y₃ − shift), linear in x₃ between layers, zero for y₃ < shift.
fn shift_up(f: &Field, shift: f64) -> Vec<f64> {
    if shift == 0.0 {
        return f.values.clone();
    }
    let g = f.grid;
    let npl = g.nodes_per_layer();
    let nl = g.nlayers();
    let hz = g.hz();
    let mut out = vec![0.0; f.values.len()];
    for (dst, src) in out.chunks_mut(g.n_nodes()).zip(f.values.chunks(g.n_nodes())) {
        for k in 0..nl {
            let s = (g.z(k) - shift) / hz;
            if s < -1e-12 {
                continue;
            }
            let s = s.max(0.0);
            let k0 = s.floor() as usize;
            let a = s - k0 as f64;
            if k0 >= nl {
                continue;
            }
            for p in 0..npl {
                let lo = src[k0 * npl + p];
                let hi = if k0 + 1 < nl { src[(k0 + 1) * npl + p] } else { 0.0 };
                dst[k * npl + p] = if a == 0.0 { lo } else { (1.0 - a) * lo + a * hi };
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::SlabGrid;

    fn grid() -> SlabGrid {
        SlabGrid::new(1.0, 2.0, 32, 32, 32).unwrap()
    }

    #[test]
    fn constants_are_reproduced() {
        let g = grid();
        let f = Field::scalar_from_fn(g, |_| 2.5);
        let m = mollify(&f, 0.2, 0.0).unwrap();
        for k in 4..28 {
            assert!((m.get(0, 0, 5, 7, k) - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_field_is_exact_in_the_interior() {
        let mut g = grid();
        g.periodic_lateral = false;
        let f = Field::scalar_from_fn(g, |p| p[0] - 0.5 * p[1] + 0.25 * p[2]);
        let m = mollify(&f, 0.2, 0.0).unwrap();
        for (i, j, k) in [(8, 8, 8), (16, 20, 12), (24, 10, 20)] {
            let p = g.point(i, j, k);
            assert!((m.get(0, 0, i, j, k) - (p[0] - 0.5 * p[1] + 0.25 * p[2])).abs() < 1e-13);
        }
    }

    #[test]
    fn shifted_output_vanishes_near_the_boundary() {
        let g = grid();
        let f = Field::scalar_from_fn(g, |p| 1.0 + p[0].sin() * p[2].cos());
        let (eps, shift) = (0.125, 0.5);
        let m = mollify(&f, eps, shift).unwrap();
        for k in 0..g.nlayers() {
            if g.z(k) < shift - eps {
                assert!((0..g.nodes_per_layer()).all(|p| m.component(0, 0)[k * g.nodes_per_layer() + p] == 0.0));
            }
        }
        assert!(m.sup_norm() <= f.sup_norm() + 1e-12);
    }

    #[test]
    fn undersampled_radius_is_rejected() {
        let g = grid();
        let f = Field::zeros(g, crate::fields::Rank::Scalar);
        assert!(matches!(mollify(&f, 0.01, 0.0), Err(Error::Undersampled { .. })));
    }
}
