//! Grids, sampled fields, parity extensions, mollifiers and the norms used by the estimates.

pub(crate) mod io;
mod mollify;
mod norms;

pub use io::{read_field, write_field};
pub use mollify::{bump, mollify};
pub use norms::{norm_bmo, norm_ls, norm_ls_unif, NormKind, NormReport, UnifOptions};

use crate::error::{Error, Result};

/// Truncated half-space box [−L, L)² × [0, H].
///
/// Lateral nodes sit at x = −L + i·hx, i < nx (the node at +L is the periodic image of −L).
/// Vertical nodes sit at x₃ = k·hz, k ≤ nz; for an extended (doubled) grid k runs over
/// −nz..=nz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabGrid {
    pub half_width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub periodic_lateral: bool,
    pub extended: bool,
}

impl SlabGrid {
    pub fn new(half_width: f64, height: f64, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        let g = SlabGrid { half_width, height, nx, ny, nz, periodic_lateral: true, extended: false };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite() && self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::InvalidArgument("box dimensions must be positive and finite".into()));
        }
        if self.nx < 2 || self.ny < 2 || self.nz < 2 {
            return Err(Error::InvalidArgument("all cell counts must be >= 2".into()));
        }
        if self.nx % 2 != 0 || self.ny % 2 != 0 {
            return Err(Error::InvalidArgument("lateral cell counts must be even".into()));
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.half_width / self.nx as f64
    }
    pub fn hy(&self) -> f64 {
        2.0 * self.half_width / self.ny as f64
    }
    pub fn hz(&self) -> f64 {
        self.height / self.nz as f64
    }
    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.hx()
    }
    pub fn y(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.hy()
    }
    /// Number of vertical layers stored.
    pub fn nlayers(&self) -> usize {
        if self.extended {
            2 * self.nz + 1
        } else {
            self.nz + 1
        }
    }
    /// x₃ of stored layer `k`.
    pub fn z(&self, k: usize) -> f64 {
        if self.extended {
            (k as f64 - self.nz as f64) * self.hz()
        } else {
            k as f64 * self.hz()
        }
    }
    /// Stored layer index of the boundary plane x₃ = 0.
    pub fn boundary_layer(&self) -> usize {
        if self.extended {
            self.nz
        } else {
            0
        }
    }
    pub fn nodes_per_layer(&self) -> usize {
        self.nx * self.ny
    }
    pub fn n_nodes(&self) -> usize {
        self.nodes_per_layer() * self.nlayers()
    }
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.x(i), self.y(j), self.z(k)]
    }
    pub fn doubled(&self) -> SlabGrid {
        SlabGrid { extended: true, ..*self }
    }
    pub fn half(&self) -> SlabGrid {
        SlabGrid { extended: false, ..*self }
    }
    pub fn min_spacing(&self) -> f64 {
        self.hx().min(self.hy()).min(self.hz())
    }
    pub fn max_spacing(&self) -> f64 {
        self.hx().max(self.hy()).max(self.hz())
    }
}

/// Tensor rank of a field; components are stored row-major (3^rank of them).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
    Tensor,
}

impl Rank {
    pub fn components(&self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 3,
            Rank::Tensor => 9,
        }
    }
    pub fn as_u8(&self) -> u8 {
        match self {
            Rank::Scalar => 0,
            Rank::Vector => 1,
            Rank::Tensor => 2,
        }
    }
    pub fn from_u8(r: u8) -> Result<Self> {
        match r {
            0 => Ok(Rank::Scalar),
            1 => Ok(Rank::Vector),
            2 => Ok(Rank::Tensor),
            _ => Err(Error::InvalidArgument(format!("rank {r}"))),
        }
    }
}

/// Samples of a scalar, vector or tensor quantity on a [`SlabGrid`], optionally per time.
///
/// Layout: `values[((it * ncomp + c) * nlayers + k) * ny * nx + j * nx + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: SlabGrid,
    pub rank: Rank,
    pub values: Vec<f64>,
    pub time_axis: Option<Vec<f64>>,
}

impl Field {
    pub fn zeros(grid: SlabGrid, rank: Rank) -> Self {
        Field { grid, rank, values: vec![0.0; grid.n_nodes() * rank.components()], time_axis: None }
    }

    pub fn zeros_timed(grid: SlabGrid, rank: Rank, times: Vec<f64>) -> Self {
        let n = grid.n_nodes() * rank.components() * times.len();
        Field { grid, rank, values: vec![0.0; n], time_axis: Some(times) }
    }

    /// Samples `f(point) -> components` at every node.
    pub fn from_fn<F: Fn([f64; 3]) -> Vec<f64>>(grid: SlabGrid, rank: Rank, f: F) -> Self {
        let mut out = Field::zeros(grid, rank);
        let nc = rank.components();
        for k in 0..grid.nlayers() {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let v = f(grid.point(i, j, k));
                    for c in 0..nc {
                        let idx = out.index(0, c, i, j, k);
                        out.values[idx] = v[c];
                    }
                }
            }
        }
        out
    }

    pub fn scalar_from_fn<F: Fn([f64; 3]) -> f64>(grid: SlabGrid, f: F) -> Self {
        Field::from_fn(grid, Rank::Scalar, |p| vec![f(p)])
    }

    pub fn ncomp(&self) -> usize {
        self.rank.components()
    }

    pub fn ntimes(&self) -> usize {
        self.time_axis.as_ref().map_or(1, |t| t.len())
    }

    #[inline]
    pub fn index(&self, it: usize, c: usize, i: usize, j: usize, k: usize) -> usize {
        let g = &self.grid;
        ((it * self.ncomp() + c) * g.nlayers() + k) * g.nodes_per_layer() + j * g.nx + i
    }

    #[inline]
    pub fn get(&self, it: usize, c: usize, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(it, c, i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, it: usize, c: usize, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.index(it, c, i, j, k);
        self.values[idx] = v;
    }

    /// Contiguous block of one component at one time.
    pub fn component(&self, it: usize, c: usize) -> &[f64] {
        let n = self.grid.n_nodes();
        let s = (it * self.ncomp() + c) * n;
        &self.values[s..s + n]
    }

    pub fn component_mut(&mut self, it: usize, c: usize) -> &mut [f64] {
        let n = self.grid.n_nodes();
        let s = (it * self.ncomp() + c) * n;
        &mut self.values[s..s + n]
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let want = self.grid.n_nodes() * self.ncomp() * self.ntimes();
        if self.values.len() != want {
            return Err(Error::InvalidArgument(format!("expected {want} samples, got {}", self.values.len())));
        }
        if let Some(t) = &self.time_axis {
            if t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidArgument("time axis must be strictly increasing".into()));
            }
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// Largest magnitude on the lateral boundary rows/columns (support-margin check).
    pub fn lateral_boundary_max(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0f64;
        for it in 0..self.ntimes() {
            for c in 0..self.ncomp() {
                for k in 0..g.nlayers() {
                    for j in 0..g.ny {
                        for i in 0..g.nx {
                            if i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1 {
                                m = m.max(self.get(it, c, i, j, k).abs());
                            }
                        }
                    }
                }
            }
        }
        m
    }

    /// Largest magnitude on the top stored layer (the periodic seam of transform solvers).
    pub fn top_layer_max(&self) -> f64 {
        let g = &self.grid;
        let npl = g.nodes_per_layer();
        let k = g.nlayers() - 1;
        let mut m = 0.0f64;
        for it in 0..self.ntimes() {
            for c in 0..self.ncomp() {
                m = self.component(it, c)[k * npl..].iter().fold(m, |m, v| m.max(v.abs()));
            }
        }
        m
    }

    pub fn check_support(&self, tol: f64) -> Result<()> {
        let v = self.lateral_boundary_max();
        if v > tol {
            return Err(Error::Support { value: v, tol });
        }
        Ok(())
    }

    /// Single-time slice `it`.
    pub fn at_time(&self, it: usize) -> Field {
        let n = self.grid.n_nodes() * self.ncomp();
        Field {
            grid: self.grid,
            rank: self.rank,
            values: self.values[it * n..(it + 1) * n].to_vec(),
            time_axis: None,
        }
    }
}

/// Parity of a component under x₃ → −x₃.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityTable(pub Vec<Parity>);

impl ParityTable {
    /// Pressure (Neumann) convention for a 3×3 tensor: H_αβ, H_33 even; H_α3, H_3α odd.
    pub fn pressure_tensor() -> Self {
        let mut v = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                v.push(if (i == 2) ^ (j == 2) { Parity::Odd } else { Parity::Even });
            }
        }
        ParityTable(v)
    }

    /// Velocity (no-slip) convention: u_α odd, u₃ even.
    pub fn velocity() -> Self {
        ParityTable(vec![Parity::Odd, Parity::Odd, Parity::Even])
    }

    pub fn uniform(n: usize, p: Parity) -> Self {
        ParityTable(vec![p; n])
    }
}

/// Even/odd extension of a half-space field to x₃ ∈ [−H, H].
pub fn extend_parity(f: &Field, p: &ParityTable) -> Result<Field> {
    if f.grid.extended {
        return Err(Error::InvalidArgument("field is already extended".into()));
    }
    if p.0.len() != f.ncomp() {
        return Err(Error::ComponentMismatch { expected: f.ncomp(), got: p.0.len() });
    }
    let g2 = f.grid.doubled();
    let mut out = Field {
        grid: g2,
        rank: f.rank,
        values: vec![0.0; g2.n_nodes() * f.ncomp() * f.ntimes()],
        time_axis: f.time_axis.clone(),
    };
    let nz = f.grid.nz;
    let npl = f.grid.nodes_per_layer();
    for it in 0..f.ntimes() {
        for (c, par) in p.0.iter().enumerate() {
            let src = f.component(it, c);
            let dst = out.component_mut(it, c);
            for k in 0..=nz {
                let s = &src[k * npl..(k + 1) * npl];
                let up = (nz + k) * npl;
                dst[up..up + npl].copy_from_slice(s);
                if k > 0 {
                    let dn = (nz - k) * npl;
                    for (d, v) in dst[dn..dn + npl].iter_mut().zip(s) {
                        *d = if *par == Parity::Even { *v } else { -*v };
                    }
                }
            }
            if *par == Parity::Odd {
                dst[nz * npl..(nz + 1) * npl].iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
    Ok(out)
}

/// Restriction of an extended field to x₃ ≥ 0.
pub fn restrict_half(f: &Field) -> Result<Field> {
    if !f.grid.extended {
        return Err(Error::InvalidArgument("field is not extended".into()));
    }
    let g = f.grid.half();
    let mut out = Field {
        grid: g,
        rank: f.rank,
        values: vec![0.0; g.n_nodes() * f.ncomp() * f.ntimes()],
        time_axis: f.time_axis.clone(),
    };
    let npl = g.nodes_per_layer();
    let off = f.grid.nz * npl;
    for it in 0..f.ntimes() {
        for c in 0..f.ncomp() {
            let src = f.component(it, c);
            out.component_mut(it, c).copy_from_slice(&src[off..off + g.n_nodes()]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SlabGrid {
        SlabGrid::new(1.0, 1.0, 8, 8, 4).unwrap()
    }

    #[test]
    fn grid_invariants() {
        assert!(SlabGrid::new(1.0, 1.0, 7, 8, 4).is_err());
        assert!(SlabGrid::new(1.0, 1.0, 8, 8, 1).is_err());
        assert!(SlabGrid::new(-1.0, 1.0, 8, 8, 4).is_err());
        let g = grid();
        assert_eq!(g.z(0), 0.0);
        assert!((g.z(g.nz) - g.height).abs() < 1e-15);
        let d = g.doubled();
        assert_eq!(d.z(d.boundary_layer()), 0.0);
        assert!((d.z(0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn parity_examples() {
        let g = grid();
        let one = Field::scalar_from_fn(g, |_| 1.0);
        let e = extend_parity(&one, &ParityTable::uniform(1, Parity::Even)).unwrap();
        assert!(e.values.iter().all(|&v| v == 1.0));
        let o = extend_parity(&one, &ParityTable::uniform(1, Parity::Odd)).unwrap();
        for k in 0..o.grid.nlayers() {
            let z = o.grid.z(k);
            let want = if z == 0.0 { 0.0 } else { z.signum() };
            assert_eq!(o.get(0, 0, 3, 2, k), want);
        }
        let lin = Field::scalar_from_fn(g, |p| p[2]);
        let o = extend_parity(&lin, &ParityTable::uniform(1, Parity::Odd)).unwrap();
        for k in 0..o.grid.nlayers() {
            assert!((o.get(0, 0, 1, 1, k) - o.grid.z(k)).abs() < 1e-15);
        }
        assert!(matches!(
            extend_parity(&lin, &ParityTable::velocity()),
            Err(Error::ComponentMismatch { .. })
        ));
    }

    #[test]
    fn restriction_inverts_extension() {
        let g = grid();
        let f = Field::from_fn(g, Rank::Vector, |p| vec![p[0] * p[2], p[1] + p[2], (p[0] - p[2]).sin()]);
        let mut f = f;
        // odd components must vanish on the boundary for exact round trip
        for j in 0..g.ny {
            for i in 0..g.nx {
                f.set(0, 0, i, j, 0, 0.0);
                f.set(0, 1, i, j, 0, 0.0);
            }
        }
        let e = extend_parity(&f, &ParityTable::velocity()).unwrap();
        assert_eq!(restrict_half(&e).unwrap(), f);
    }
}
