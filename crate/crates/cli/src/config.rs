//! TOML experiment configuration. Tolerances have no defaults: every job names the ones it uses.

use serde::Deserialize;
use std::path::PathBuf;
use stokes_core::fields::SlabGrid;
use stokes_core::QuadratureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Kernels,
    Pressure,
    Mild,
    Verify,
    Siop,
    BakeCache,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Kernels => "kernels",
            Kind::Pressure => "pressure",
            Kind::Mild => "mild",
            Kind::Verify => "verify",
            Kind::Siop => "siop",
            Kind::BakeCache => "bake-cache",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub run: Run,
    pub grid: Option<Grid>,
    pub tolerance: Tolerance,
    pub kernels: Option<KernelsCfg>,
    pub pressure: Option<PressureCfg>,
    pub mild: Option<MildCfg>,
    pub verify: Option<VerifyCfg>,
    pub siop: Option<SiopCfg>,
    pub cache: Option<CacheCfg>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    pub kind: Option<Kind>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

/// Lengths in units of the slab coordinates.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub half_width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Grid {
    pub fn slab(&self) -> anyhow::Result<SlabGrid> {
        Ok(SlabGrid::new(self.half_width, self.height, self.nx, self.ny, self.nz)?)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    /// Quadrature relative and absolute tolerances.
    pub rel: f64,
    pub abs: f64,
    /// Picard stopping tolerance on sup |u_{k+1} − u_k| (mild, verify 1.11).
    pub picard: Option<f64>,
    /// Largest admissible max |div u_A| and |u_A| on the wall (mild, verify 1.11).
    pub admissibility: Option<f64>,
    /// Largest accepted residual: pressure Poisson/trace residual, or mild residual (mild).
    pub residual: Option<f64>,
    /// Largest relative mismatch of the two identity paths (verify 2.1 / 4.1).
    pub identity: Option<f64>,
}

impl Tolerance {
    pub fn scaled(mut self, s: f64) -> Self {
        self.rel *= s;
        self.abs *= s;
        self.picard = self.picard.map(|v| v * s);
        self
    }

    pub fn quadrature(&self) -> anyhow::Result<QuadratureSpec> {
        Ok(QuadratureSpec::new(self.rel, self.abs)?)
    }

    pub fn need(v: Option<f64>, name: &str) -> Result<f64, ConfigError> {
        v.ok_or_else(|| ConfigError(format!("[tolerance] {name} is required for this job")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelsCfg {
    /// Rows [x1, x2, x3, y1, y2, y3, t].
    pub queries: Vec<[f64; 7]>,
    /// Optional baked table; queries on its nodes, source and times are served from it.
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureCfg {
    /// Random stresses per seed for the operator check.
    pub draws: usize,
    /// Optional tensor field file to solve for p¹.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MildCfg {
    /// Start time A < 0.
    pub a: f64,
    pub n_steps: usize,
    /// sup |u_A|; 0 gives the zero fixed point.
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
    pub max_iter: usize,
    /// Finer vertical resolution for the 1.11 truncation pair (verify only).
    pub nz_fine: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyCfg {
    pub estimates: Vec<String>,
    /// Cloud size for the pointwise fits.
    pub points: usize,
    /// Range of |x − y*|² + t spanned by the cloud.
    pub d_min: f64,
    pub d_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiopCfg {
    pub p: Vec<f64>,
    /// Slab |x₃| < slab.
    pub slab: f64,
    pub pair: [usize; 2],
    pub half_width: f64,
    pub n_lateral: usize,
    pub height: f64,
    pub nz: usize,
    pub cube_side: f64,
    /// Accepted deviation of the annulus slope from −(1 + 1/p).
    pub slope_tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheCfg {
    pub source: [f64; 3],
    pub times: Vec<f64>,
    pub resolution: f64,
    pub file: PathBuf,
}

/// Bad or incomplete configuration (exit status 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn parse(text: &str, origin: &str) -> Result<Config, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(format!("{origin}: {e}")))
}

pub fn preset(kind: Kind) -> &'static str {
    match kind {
        Kind::Kernels => include_str!("../presets/kernels.toml"),
        Kind::Pressure => include_str!("../presets/pressure.toml"),
        Kind::Mild => include_str!("../presets/mild.toml"),
        Kind::Verify => include_str!("../presets/verify.toml"),
        Kind::Siop => include_str!("../presets/siop.toml"),
        Kind::BakeCache => include_str!("../presets/bake-cache.toml"),
    }
}

impl Config {
    pub fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, ConfigError> {
        s.as_ref().ok_or_else(|| ConfigError(format!("missing [{name}] section")))
    }

    pub fn grid(&self) -> Result<Grid, ConfigError> {
        Self::section(&self.grid, "grid").copied()
    }
}
