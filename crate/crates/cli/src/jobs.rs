//! One function per subcommand. Each writes its artifacts under the output directory and returns
//! summary lines plus a pass flag.

use crate::config::{Config, ConfigError, Tolerance};
use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use stokes_core::fields::{read_field, write_field};
use stokes_core::kernels::{green_full, kernel_hs_tensor, KernelCache};
use stokes_core::mild::{mild_residual, model_initial_data, picard_solve, MildProblem, PicardOutcome, Space};
use stokes_core::pressure::{pressure_half, PressureOptions, SiopOptions};
use stokes_core::verify::{
    annulus_test_field, check_identity_lemma21, check_identity_whole, check_kernel_estimates, check_pressure_operator,
    check_pressure_split, check_siop, check_uniform_integral, truncation_estimate, BumpForce, EstimateFit, EstimateId,
    GaussianStress, IdentityLevel, IdentityReport, SampleSpec, Verdict,
};
use stokes_core::KernelQuery;

pub struct Outcome {
    pub summary: Vec<String>,
    pub pass: bool,
}

impl Outcome {
    fn new() -> Self {
        Outcome { summary: vec![], pass: true }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.summary.push(format!("{} {line}", if ok { "PASS" } else { "FAIL" }));
        self.pass &= ok;
    }
}

pub struct Ctx {
    pub cfg: Config,
    pub out: PathBuf,
    pub seed: u64,
    pub tol: Tolerance,
}

impl Ctx {
    fn write(&self, name: &str, text: &str) -> Result<()> {
        let p = self.out.join(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }
}

fn file_id(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

fn record_fit(ctx: &Ctx, o: &mut Outcome, fit: &EstimateFit) -> Result<()> {
    ctx.write(&format!("fit_{}.csv", file_id(&fit.id)), &fit.csv())?;
    o.check(fit.verdict == Verdict::Stable, fit.summary_line());
    Ok(())
}

pub fn kernels(ctx: &Ctx) -> Result<Outcome> {
    let kc = Config::section(&ctx.cfg.kernels, "kernels")?;
    let spec = ctx.tol.quadrature()?;
    let cache = match &kc.cache {
        Some(p) => Some(KernelCache::read(fs::File::open(p).with_context(|| format!("opening {}", p.display()))?)?),
        None => None,
    };
    let mut csv = String::from("x1,x2,x3,y1,y2,y3,t,source");
    for i in 1..=3 {
        for j in 1..=3 {
            let _ = write!(csv, ",G{i}{j}");
        }
    }
    for m in 1..=3 {
        for j in 1..=3 {
            for s in 1..=3 {
                let _ = write!(csv, ",K{m}{j}{s}");
            }
        }
    }
    csv.push('\n');
    let mut o = Outcome::new();
    let mut from_cache = 0;
    for q in &kc.queries {
        let (x, y, t) = ([q[0], q[1], q[2]], [q[3], q[4], q[5]], q[6]);
        let mut g = [[0.0; 3]; 3];
        for (i, row) in g.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = green_full(&KernelQuery::new(x, y, t).comp([i, j, 0]), &spec)?;
            }
        }
        let cached = cache.as_ref().and_then(|c| cache_lookup(c, &x, &y, t));
        let (k, src) = match cached {
            Some(k) => {
                from_cache += 1;
                (k, "cache")
            }
            None => (kernel_hs_tensor(&x, &y, t, &spec)?, "direct"),
        };
        let _ = write!(csv, "{},{},{},{},{},{},{},{src}", q[0], q[1], q[2], q[3], q[4], q[5], q[6]);
        for v in g.iter().flatten().chain(k.iter().flatten().flatten()) {
            let _ = write!(csv, ",{v:.12e}");
        }
        csv.push('\n');
    }
    ctx.write("kernels.csv", &csv)?;
    o.summary.push(format!("kernels: {} queries, {from_cache} served from cache", kc.queries.len()));
    Ok(o)
}

fn cache_lookup(c: &KernelCache, x: &[f64; 3], y: &[f64; 3], t: f64) -> Option<stokes_core::Tensor3> {
    if *y != c.source {
        return None;
    }
    let it = c.times.iter().position(|&s| s == t)?;
    let g = &c.grid;
    let find = |v: f64, n: usize, at: &dyn Fn(usize) -> f64| (0..n).find(|&i| (at(i) - v).abs() <= 1e-12 * (1.0 + v.abs()));
    let i = find(x[0], g.nx, &|i| g.x(i))?;
    let j = find(x[1], g.ny, &|j| g.y(j))?;
    let k = find(x[2], g.nlayers(), &|k| g.z(k))?;
    let mut out = [[[0.0; 3]; 3]; 3];
    for m in 0..3 {
        for jj in 0..3 {
            for s in 0..3 {
                out[m][jj][s] = c.get(it, [m, jj, s], i, j, k);
            }
        }
    }
    Some(out)
}

pub fn bake_cache(ctx: &Ctx) -> Result<Outcome> {
    let cc = Config::section(&ctx.cfg.cache, "cache")?;
    let grid = ctx.cfg.grid()?.slab()?;
    let cache = KernelCache::bake(grid, cc.source, &cc.times, cc.resolution)?;
    let path = ctx.out.join(&cc.file);
    cache.write(std::io::BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?))?;
    let mut o = Outcome::new();
    o.summary.push(format!("bake-cache: {} times x {} nodes -> {}", cc.times.len(), grid.n_nodes(), cc.file.display()));
    Ok(o)
}

pub fn pressure(ctx: &Ctx) -> Result<Outcome> {
    let pc = Config::section(&ctx.cfg.pressure, "pressure")?;
    let tol = Tolerance::need(ctx.tol.residual, "residual")?;
    let mut o = Outcome::new();
    if let Some(p) = &pc.input {
        let h = read_field(std::io::BufReader::new(fs::File::open(p).with_context(|| format!("opening {}", p.display()))?))?;
        let r = pressure_half(&h, &PressureOptions::default())?;
        write_field(&r.p1, std::io::BufWriter::new(fs::File::create(ctx.out.join("p1.hsf"))?))?;
        o.check(
            r.residual <= tol && r.trace_defect <= tol,
            format!("input residual={:.3e} trace_defect={:.3e} bmo={:.6e}", r.residual, r.trace_defect, r.bmo.value),
        );
    }
    let grid = ctx.cfg.grid()?.slab()?;
    let r = check_pressure_operator(grid, pc.draws, ctx.seed)?;
    o.check(r.residual <= tol, format!("pressure residual={:.3e} tol={tol:.1e}", r.residual));
    o.check(r.trace_defect <= tol, format!("pressure trace_defect={:.3e} tol={tol:.1e}", r.trace_defect));
    record_fit(ctx, &mut o, &r.fit)?;
    Ok(o)
}

fn mild_problem(ctx: &Ctx, nz: Option<usize>) -> Result<MildProblem> {
    let mc = Config::section(&ctx.cfg.mild, "mild")?;
    let mut g = ctx.cfg.grid()?;
    if let Some(nz) = nz {
        g.nz = nz;
    }
    let grid = g.slab()?;
    Ok(MildProblem {
        a: mc.a,
        u_a: model_initial_data(grid, mc.center, mc.width, mc.amplitude),
        n_steps: mc.n_steps,
        space: Space::Half,
        spec: ctx.tol.quadrature()?,
        picard_tol: Tolerance::need(ctx.tol.picard, "picard")?,
        max_iter: mc.max_iter,
        admissibility_tol: Tolerance::need(ctx.tol.admissibility, "admissibility")?,
    })
}

fn picard_csv(out: &PicardOutcome) -> String {
    let mut s = String::from("k,residual,divergence_defect,boundary_defect,sup_norm\n");
    for st in &out.states {
        let _ = writeln!(s, "{},{:.12e},{:.12e},{:.12e},{:.12e}", st.k, st.residual, st.divergence_defect, st.boundary_defect, st.sup_norm);
    }
    s
}

pub fn mild(ctx: &Ctx) -> Result<Outcome> {
    let factor = Tolerance::need(ctx.tol.residual, "residual")?;
    let pb = mild_problem(ctx, None)?;
    let out = picard_solve(&pb)?;
    ctx.write("picard.csv", &picard_csv(&out))?;
    write_field(&out.solution, std::io::BufWriter::new(fs::File::create(ctx.out.join("u.hsf"))?))?;
    let res = mild_residual(&out.solution, &pb, &pb.propagator(), true)?;
    let mut o = Outcome::new();
    o.check(out.converged && !out.diverged, format!("picard converged={} iterations={}", out.converged, out.states.len()));
    o.check(res.max <= factor * pb.picard_tol, format!("mild_residual={:.3e} limit={:.3e}", res.max, factor * pb.picard_tol));
    Ok(o)
}

pub fn siop(ctx: &Ctx) -> Result<Outcome> {
    let sc = Config::section(&ctx.cfg.siop, "siop")?;
    let g = annulus_test_field(sc.half_width, sc.n_lateral, sc.height, sc.nz)?;
    let opts = SiopOptions { pair: (sc.pair[0], sc.pair[1]), cube_side: sc.cube_side, bmo_max_cube: Some(sc.cube_side), ..Default::default() };
    let mut o = Outcome::new();
    for &p in &sc.p {
        let c = check_siop(&g, sc.slab, p, &opts)?;
        let mut csv = String::from("n,contribution,holder_bound\n");
        for (n, a, b) in &c.annuli {
            let _ = writeln!(csv, "{n},{a:.12e},{b:.12e}");
        }
        ctx.write(&format!("siop_p{p}.csv"), &csv)?;
        o.check(c.reconstruction_rel <= ctx.tol.rel, format!("siop p={p} reconstruction={:.3e} bound_h1={:.6e} bound_h2={:.6e}", c.reconstruction_rel, c.bound_h1, c.bound_h2));
        o.check(c.slope_ok(sc.slope_tol), format!("siop p={p} annulus slope={:.4} holder_slope={:.4} expected={:.4}", c.slope, c.holder_slope, c.expected));
    }
    Ok(o)
}

/// Admissible Gaussian stresses used by the identity checks.
pub fn identity_stresses() -> Vec<GaussianStress> {
    let e = |i: usize, j: usize| {
        let mut a = [[0.0; 3]; 3];
        a[i][j] = 1.0;
        a
    };
    let mut shear = [[0.0; 3]; 3];
    shear[0][1] = 0.5;
    shear[1][0] = 0.5;
    shear[1][1] = 1.0;
    vec![
        GaussianStress { a: e(0, 0), center: [0.0, 0.0, 1.5], width: 0.25 },
        GaussianStress { a: e(2, 0), center: [0.1, 0.1, 1.55], width: 0.25 },
        GaussianStress { a: shear, center: [-0.1, 0.0, 1.6], width: 0.25 },
    ]
}

pub const IDENTITY_TIMES: [f64; 3] = [0.05, 0.2, 0.5];
pub const IDENTITY_PROBE: [f64; 3] = [0.1, -0.2, 1.3];

fn identity(ctx: &Ctx, o: &mut Outcome, half: bool) -> Result<()> {
    let tol = Tolerance::need(ctx.tol.identity, "identity")?;
    let base = IdentityLevel::coarse().refined().refined();
    let levels = [base, base.refined()];
    let id = if half { "2.1" } else { "4.1" };
    let mut csv = String::from("level,field,x1,x2,x3,t,green1,green2,green3,kernel1,kernel2,kernel3,mismatch\n");
    let mut worst = [0.0f64; 2];
    for (li, level) in levels.iter().enumerate() {
        for (fi, src) in identity_stresses().iter().enumerate() {
            let r: IdentityReport = if half {
                check_identity_lemma21(src, &[IDENTITY_PROBE], &IDENTITY_TIMES, level, 1e-6)?
            } else {
                check_identity_whole(src, &[IDENTITY_PROBE], &IDENTITY_TIMES, level)?
            };
            worst[li] = worst[li].max(r.max_mismatch);
            for s in &r.samples {
                let _ = write!(csv, "{},{fi},{},{},{},{}", level.n, s.x[0], s.x[1], s.x[2], s.t);
                for v in s.green_side.iter().chain(&s.kernel_side) {
                    let _ = write!(csv, ",{v:.12e}");
                }
                let _ = writeln!(csv, ",{:.12e}", s.mismatch);
            }
        }
    }
    ctx.write(&format!("identity_{id}.csv"), &csv)?;
    o.check(worst[1] <= tol, format!("{id} identity mismatch={:.3e} tol={tol:.1e}", worst[1]));
    o.check(worst[0] >= 2.0 * worst[1], format!("{id} identity refinement {:.3e} -> {:.3e}", worst[0], worst[1]));
    Ok(())
}

fn uniform(ctx: &Ctx, o: &mut Outcome) -> Result<()> {
    let fam = [
        BumpForce { center: [0.0, 0.0, 0.5], radius: 0.4, amplitude: 1.0 },
        BumpForce { center: [0.2, -0.1, 0.35], radius: 0.3, amplitude: 2.0 },
    ];
    let probes = [[0.0, 0.0, 0.05], [0.1, 0.1, 0.3]];
    for (s, l) in [(6.0, 6.0), (2.5, 2.5)] {
        let fit = check_uniform_integral(s, l, -1.0, &fam, &probes, 3)?;
        record_fit(ctx, o, &fit)?;
    }
    Ok(())
}

fn split(ctx: &Ctx, o: &mut Outcome) -> Result<()> {
    let max_res = Tolerance::need(ctx.tol.residual, "residual")?;
    let mc = Config::section(&ctx.cfg.mild, "mild")?;
    let nz = ctx.cfg.grid()?.nz;
    let fine = mc.nz_fine.ok_or_else(|| ConfigError("[mild] nz_fine is required for 1.11".into()))?;
    let mut defects = vec![];
    let mut last = None;
    for n in [nz, fine] {
        let pb = mild_problem(ctx, Some(n))?;
        let out = picard_solve(&pb)?;
        anyhow::ensure!(out.converged, "Picard did not converge on nz = {n}");
        let r = check_pressure_split(&out.solution, &pb, max_res)?;
        defects.push(r.harmonicity_defect);
        last = Some(r);
    }
    let r = last.expect("two grids");
    let mut csv = String::from("x3,harmonicity_defect\n");
    for (z, v) in &r.defect_profile {
        let _ = writeln!(csv, "{z:.12e},{v:.12e}");
    }
    ctx.write("split_defect.csv", &csv)?;
    let mut csv = String::from("x3,sup_grad_p2\n");
    for (z, v) in &r.top_profile {
        let _ = writeln!(csv, "{z:.12e},{v:.12e}");
    }
    ctx.write("split_top.csv", &csv)?;
    let est = truncation_estimate(defects[0], defects[1], fine as f64 / nz as f64, 4.0);
    o.check(defects[1] <= 10.0 * est, format!("1.11 harmonicity defect={:.3e} truncation_estimate={est:.3e}", defects[1]));
    record_fit(ctx, o, &r.log_fit)?;
    o.check(r.top_monotone, format!("1.11 top-quartile decay monotone={}", r.top_monotone));
    o.summary.push(format!("conclusion checks: sup|grad u|={:.6e} sup|dt u|={:.6e}", r.sup_grad_u, r.sup_dt_u));
    Ok(())
}

pub const EXTRA_IDS: [&str; 4] = ["2.2-uniform", "2.1", "4.1", "1.11"];

pub fn verify(ctx: &Ctx, ids: &[String]) -> Result<Outcome> {
    for id in ids {
        if !EXTRA_IDS.contains(&id.as_str()) && EstimateId::parse(id).is_err() {
            return Err(ConfigError(format!("unknown estimate id {id:?}")).into());
        }
    }
    let mut o = Outcome::new();
    let kernel_ids: Vec<EstimateId> = ids.iter().filter_map(|s| EstimateId::parse(s).ok()).collect();
    if !kernel_ids.is_empty() {
        let vc = Config::section(&ctx.cfg.verify, "verify")?;
        let spec = SampleSpec { n_points: vc.points, seed: ctx.seed, d_min: vc.d_min, d_max: vc.d_max };
        for fit in check_kernel_estimates(&kernel_ids, &spec, &ctx.tol.quadrature()?)? {
            record_fit(ctx, &mut o, &fit)?;
        }
    }
    for id in ids {
        match id.as_str() {
            "2.2-uniform" => uniform(ctx, &mut o)?,
            "2.1" => identity(ctx, &mut o, true)?,
            "4.1" => identity(ctx, &mut o, false)?,
            "1.11" => split(ctx, &mut o)?,
            _ => {}
        }
    }
    Ok(o)
}

pub fn ensure_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

