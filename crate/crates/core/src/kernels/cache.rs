//! Baked tables of the half-space kernel K(x, y₀, t) on every node of a grid, one block per time.
//!
//! File layout follows the field container: a 64-byte header
//! `HSK1 nx=<..> ny=<..> nz=<..> L=<..> H=<..> nt=<..>`, then the nt times, the source point y₀ and
//! 27 components × nodes per time, little-endian f64.

use super::half_space::KernelTableHs;
use crate::error::{Error, Result};
use crate::fields::io::{parse_kv, read_f64s, HEADER_LEN};
use crate::fields::SlabGrid;
use crate::radial::{Tensor3, Vec3};
use rayon::prelude::*;
use std::io::{Read, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelCache {
    pub grid: SlabGrid,
    pub source: Vec3,
    pub times: Vec<f64>,
    /// [time][component m·9 + j·3 + s][node]
    pub values: Vec<f64>,
}

impl KernelCache {
    /// Tabulates K on the half grid. The wall layer x₃ = 0 is included.
    pub fn bake(grid: SlabGrid, source: Vec3, times: &[f64], resolution: f64) -> Result<Self> {
        grid.validate()?;
        if grid.extended {
            return Err(Error::InvalidArgument("kernel caches live on half grids".into()));
        }
        if !(source[2] > 0.0) || times.is_empty() || times.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::InvalidArgument("need y₃ > 0 and positive times".into()));
        }
        let nn = grid.n_nodes();
        let npl = grid.nodes_per_layer();
        let rho_max = 2f64.sqrt() * 2.0 * grid.half_width + source[0].hypot(source[1]);
        let mut values = vec![0.0; times.len() * 27 * nn];
        for (it, &t) in times.iter().enumerate() {
            let layers: Vec<Vec<Tensor3>> = (0..grid.nlayers())
                .into_par_iter()
                .map(|k| {
                    let tab = KernelTableHs::new(grid.z(k), source[2], t, rho_max, resolution)?;
                    Ok((0..npl)
                        .map(|p| {
                            let x = grid.point(p % grid.nx, p / grid.nx, k);
                            tab.eval([x[0] - source[0], x[1] - source[1]])
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            let block = &mut values[it * 27 * nn..(it + 1) * 27 * nn];
            for (k, layer) in layers.iter().enumerate() {
                for (p, kt) in layer.iter().enumerate() {
                    for m in 0..3 {
                        for j in 0..3 {
                            for s in 0..3 {
                                block[(m * 9 + j * 3 + s) * nn + k * npl + p] = kt[m][j][s];
                            }
                        }
                    }
                }
            }
        }
        Ok(KernelCache { grid, source, times: times.to_vec(), values })
    }

    pub fn get(&self, it: usize, comp: [usize; 3], i: usize, j: usize, k: usize) -> f64 {
        let nn = self.grid.n_nodes();
        let c = comp[0] * 9 + comp[1] * 3 + comp[2];
        self.values[(it * 27 + c) * nn + (k * self.grid.ny + j) * self.grid.nx + i]
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        let s = format!("HSK1 nx={} ny={} nz={} L={} H={} nt={}", g.nx, g.ny, g.nz, g.half_width, g.height, self.times.len());
        if s.len() > HEADER_LEN - 1 {
            return Err(Error::Format(format!("header too long: {s}")));
        }
        let mut h = [b' '; HEADER_LEN];
        h[..s.len()].copy_from_slice(s.as_bytes());
        h[HEADER_LEN - 1] = b'\n';
        w.write_all(&h)?;
        let mut buf = Vec::with_capacity(8 * (self.times.len() + 3 + self.values.len()));
        for v in self.times.iter().chain(&self.source).chain(&self.values) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut h = [0u8; HEADER_LEN];
        r.read_exact(&mut h).map_err(|e| Error::Format(format!("short header: {e}")))?;
        let text = std::str::from_utf8(&h).map_err(|_| Error::Format("header is not utf-8".into()))?;
        let mut it = text.split_whitespace();
        if it.next() != Some("HSK1") {
            return Err(Error::Format("bad magic".into()));
        }
        let nx = parse_kv(it.next(), "nx")?;
        let ny = parse_kv(it.next(), "ny")?;
        let nz = parse_kv(it.next(), "nz")?;
        let l = parse_kv(it.next(), "L")?;
        let hh = parse_kv(it.next(), "H")?;
        let nt: usize = parse_kv(it.next(), "nt")?;
        let grid = SlabGrid::new(l, hh, nx, ny, nz).map_err(|e| Error::Format(e.to_string()))?;
        let times = read_f64s(&mut r, nt)?;
        let s = read_f64s(&mut r, 3)?;
        let values = read_f64s(&mut r, nt * 27 * grid.n_nodes())?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(KernelCache { grid, source: [s[0], s[1], s[2]], times, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_hs_tensor;
    use crate::QuadratureSpec;

    #[test]
    fn baked_values_match_direct_evaluation_and_round_trip() {
        let g = SlabGrid::new(1.0, 1.0, 4, 4, 2).unwrap();
        let y = [0.1, -0.2, 0.4];
        let c = KernelCache::bake(g, y, &[0.3], 1.0).unwrap();
        let spec = QuadratureSpec::new(1e-9, 1e-13).unwrap();
        let x = g.point(1, 2, 1);
        let d = kernel_hs_tensor(&x, &y, 0.3, &spec).unwrap();
        let scale = d.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for m in 0..3 {
            for j in 0..3 {
                for s in 0..3 {
                    assert!((c.get(0, [m, j, s], 1, 2, 1) - d[m][j][s]).abs() < 1e-6 * scale);
                }
            }
        }
        let mut buf = vec![];
        c.write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"HSK1");
        assert_eq!(KernelCache::read(&buf[..]).unwrap(), c);
        assert!(KernelCache::read(&buf[..buf.len() - 8]).is_err());
    }
}
