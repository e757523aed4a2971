mod config;
mod jobs;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use config::{Config, ConfigError, Kind};
use std::path::PathBuf;
use std::process::ExitCode;
use stokes_core::verify::EstimateId;

/// Experiments on half-space and whole-space Stokes kernels, pressures and mild solutions.
///
/// Exit status: 0 when every check passes, 1 when a verdict or residual fails, 2 for
/// configuration errors, 3 when a job aborts.
#[derive(Parser)]
#[command(name = "stokes", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate G and K at the configured query points.
    Kernels(Common),
    /// Neumann pressure of a stress field, and the operator check over random stresses.
    Pressure(Common),
    /// Picard iteration for the mild half-space problem.
    Mild(Common),
    /// Estimate and identity checks; one CSV per fit.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Estimate id (repeatable), e.g. 2.2, 2.18, 4.x-Phi, 2.2-uniform, 2.1, 4.1, 1.11.
        #[arg(long = "estimate", conflicts_with = "all")]
        estimate: Vec<String>,
        /// Every pointwise estimate plus the uniform-integral dichotomy.
        #[arg(long)]
        all: bool,
    },
    /// Slab split of the singular integral and its annulus decay.
    Siop(Common),
    /// Tabulate K(x, y₀, t) on a grid into an HSK1 file.
    BakeCache(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; the subcommand's built-in preset when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides [run] out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides [run] threads).
    #[arg(long)]
    threads: Option<usize>,
    /// Random seed (overrides [run] seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies the quadrature and Picard tolerances.
    #[arg(long)]
    tol_scale: Option<f64>,
}

fn load(kind: Kind, c: &Common) -> Result<jobs::Ctx, ConfigError> {
    let (text, origin) = match &c.config {
        Some(p) => (
            std::fs::read_to_string(p).map_err(|e| ConfigError(format!("{}: {e}", p.display())))?,
            p.display().to_string(),
        ),
        None => (config::preset(kind).to_string(), format!("preset {}", kind.as_str())),
    };
    let cfg = config::parse(&text, &origin)?;
    if let Some(k) = cfg.run.kind {
        if k != kind {
            return Err(ConfigError(format!("{origin}: kind = {:?} does not match subcommand {}", k.as_str(), kind.as_str())));
        }
    }
    let scale = c.tol_scale.unwrap_or(1.0);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(ConfigError("--tol-scale must be positive".into()));
    }
    let tol = cfg.tolerance.scaled(scale);
    if !(tol.rel > 0.0 && tol.abs >= 0.0) {
        return Err(ConfigError(format!("{origin}: tolerances must be positive")));
    }
    let threads = c.threads.or(cfg.run.threads);
    if let Some(n) = threads {
        // ignore a second initialisation (tests running several commands in one process)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    Ok(jobs::Ctx { out: c.out.clone().unwrap_or_else(|| cfg.run.out.clone()), seed: c.seed.unwrap_or(cfg.run.seed), tol, cfg })
}

fn run(cli: Cli) -> anyhow::Result<jobs::Outcome> {
    let (kind, common) = match &cli.cmd {
        Cmd::Kernels(c) => (Kind::Kernels, c),
        Cmd::Pressure(c) => (Kind::Pressure, c),
        Cmd::Mild(c) => (Kind::Mild, c),
        Cmd::Verify { common, .. } => (Kind::Verify, common),
        Cmd::Siop(c) => (Kind::Siop, c),
        Cmd::BakeCache(c) => (Kind::BakeCache, c),
    };
    let ctx = load(kind, common)?;
    jobs::ensure_dir(&ctx.out)?;
    let outcome = match &cli.cmd {
        Cmd::Kernels(_) => jobs::kernels(&ctx)?,
        Cmd::Pressure(_) => jobs::pressure(&ctx)?,
        Cmd::Mild(_) => jobs::mild(&ctx)?,
        Cmd::Siop(_) => jobs::siop(&ctx)?,
        Cmd::BakeCache(_) => jobs::bake_cache(&ctx)?,
        Cmd::Verify { estimate, all, .. } => {
            let ids: Vec<String> = if *all {
                EstimateId::ALL.iter().map(|e| e.as_str().to_string()).chain(["2.2-uniform".to_string()]).collect()
            } else if !estimate.is_empty() {
                estimate.clone()
            } else {
                Config::section(&ctx.cfg.verify, "verify")?.estimates.clone()
            };
            if ids.is_empty() {
                return Err(ConfigError("no estimate ids selected".into()).into());
            }
            jobs::verify(&ctx, &ids)?
        }
    };
    let mut text = outcome.summary.join("\n");
    text.push('\n');
    std::fs::write(ctx.out.join("summary.txt"), &text).context("writing summary.txt")?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) => {
            for l in &o.summary {
                println!("{l}");
            }
            ExitCode::from(if o.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<ConfigError>().is_some() { 2 } else { 3 })
        }
    }
}
