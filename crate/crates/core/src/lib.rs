//! Numerical calculus of the half-space and whole-space Stokes Green functions: kernels,
//! pressure operators, mild-solution machinery and an estimate-verification harness.

pub mod error;
pub mod fft3;
pub mod fields;
pub mod kernels;
pub mod mild;
pub mod pressure;
pub mod quad;
pub mod radial;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use kernels::KernelQuery;
pub use quad::QuadratureSpec;
pub use radial::{Mat3, Tensor3, Vec3};
