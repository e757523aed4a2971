//! Point evaluators for the heat kernel, the Laplace fundamental solution, the whole-space
//! potential Φ and kernel K, and the half-space Green tensor G = G¹ + G², potentials Φ_mn and
//! kernel K_mjs.

pub mod analytic;
pub mod cache;
pub mod green2;
pub mod green_physical;
pub mod half_space;
pub mod spectral;

pub use analytic::{
    green_g1, heat_deriv, heat_kernel, kernel_ws, kernel_ws_tensor, laplace_fundamental, potential_ws,
    reflected_poisson_kernel, phi_ws_h,
};
pub use green2::{green_full, green_g2, green_g2_tensor, m_value, G2Bank, G2Table};
pub use cache::KernelCache;
pub use green_physical::green_g2_physical;
pub use half_space::{kernel_hs, kernel_hs_tensor, phi_term_parts, potential_hs, HalfSpaceBank, KernelTableHs};

use crate::error::{Error, Result};
use crate::radial::Vec3;

/// Arguments of a kernel component evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuery {
    pub x: Vec3,
    pub y: Vec3,
    pub t: f64,
    /// Derivative orders in x₁, x₂, x₃.
    pub dx: [u8; 3],
    /// Derivative orders in y₁, y₂, y₃.
    pub dy: [u8; 3],
    /// Time-derivative order (0 or 1).
    pub dt: u8,
    /// Component indices (i, j) for tensors, (m, j, s) for K; unused trailing entries ignored.
    pub comp: [usize; 3],
}

impl KernelQuery {
    pub fn new(x: Vec3, y: Vec3, t: f64) -> Self {
        KernelQuery { x, y, t, dx: [0; 3], dy: [0; 3], dt: 0, comp: [0; 3] }
    }

    pub fn comp(mut self, c: [usize; 3]) -> Self {
        self.comp = c;
        self
    }

    pub fn dx(mut self, d: [u8; 3]) -> Self {
        self.dx = d;
        self
    }

    pub fn dy(mut self, d: [u8; 3]) -> Self {
        self.dy = d;
        self
    }

    pub fn dt(mut self, d: u8) -> Self {
        self.dt = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0) || !self.t.is_finite() {
            return Err(Error::NonPositiveTime(self.t));
        }
        if self.dx.iter().chain(&self.dy).any(|&d| d > 2) || self.dt > 1 {
            return Err(Error::InvalidArgument("derivative orders must be <= 2 (time <= 1)".into()));
        }
        if self.comp.iter().any(|&c| c > 2) {
            return Err(Error::InvalidArgument("component index out of range".into()));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite point".into()));
        }
        Ok(())
    }

    pub fn validate_half_space(&self) -> Result<()> {
        self.validate()?;
        if self.x[2] < 0.0 || self.y[2] < 0.0 {
            return Err(Error::InvalidArgument("half-space kernels need x₃, y₃ >= 0".into()));
        }
        Ok(())
    }

    pub fn has_derivatives(&self) -> bool {
        self.dx.iter().chain(&self.dy).any(|&d| d > 0) || self.dt > 0
    }
}
