//! Certification harness: two-path identity checks, fitted estimate constants and their
//! stability under refinement.

pub mod estimates;
pub mod fit;
pub mod identity;
pub mod pressure;
pub mod siop;
pub mod uniform;

pub use estimates::{check_green_mass, check_kernel_estimates, green2_mass, EstimateId};
pub use fit::{cloud_point, half_space_cloud, CloudCoords, CloudPoint, EstimateFit, FitRow, RefinementStep, SampleSpec, Verdict};
pub use identity::{check_identity_lemma21, check_identity_whole, GaussianStress, IdentityLevel, IdentityReport, IdentitySample};
pub use uniform::{check_uniform_integral, gradient_integral, model_integral, BumpForce};
pub use pressure::{check_pressure_operator, check_pressure_split, random_stress, truncation_estimate, PressureOperatorReport, PressureSplitReport};
pub use siop::{annulus_test_field, check_siop, SiopCheck};
