//! Quadrature rules: Gauss–Legendre panels and an adaptive vector Gauss–Kronrod integrator.

use crate::error::{Error, Result};
use std::collections::BinaryHeap;
use std::cmp::Ordering;

/// Tolerances shared by all quadrature-backed evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_refinements: usize,
    pub singular_split_radius: f64,
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        let s = QuadratureSpec {
            rel_tol,
            abs_tol,
            max_refinements: 400,
            singular_split_radius: 0.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.singular_split_radius >= 0.0) {
            return Err(Error::InvalidArgument("singular_split_radius must be >= 0".into()));
        }
        Ok(())
    }

    /// Tightens both tolerances by `factor` (> 1 tightens).
    pub fn refined(&self, factor: f64) -> Self {
        QuadratureSpec {
            rel_tol: self.rel_tol / factor,
            abs_tol: self.abs_tol / factor,
            max_refinements: self.max_refinements * 2,
            singular_split_radius: self.singular_split_radius,
        }
    }

    /// Panel-count multiplier used by fixed-rule pipelines: grows by ~1.5x per decade of rel_tol below 1e-4.
    pub fn resolution_factor(&self) -> f64 {
        let d = (-self.rel_tol.log10() - 4.0).max(0.0);
        1.5f64.powf(d)
    }
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over consecutive breakpoints.
    pub fn composite(&self, breaks: &[f64]) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(breaks.len().saturating_sub(1) * self.nodes.len());
        for w in breaks.windows(2) {
            if w[1] > w[0] {
                out.extend(self.on(w[0], w[1]));
            }
        }
        out
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Breakpoints `a = b0 < ... < bn = b` with panel widths growing geometrically away from `a`,
/// starting at `h0`.
pub fn graded_breaks(a: f64, b: f64, h0: f64, ratio: f64) -> Vec<f64> {
    let mut v = vec![a];
    let mut h = h0.max((b - a) * 1e-12);
    let mut x = a;
    while x + h < b - 0.25 * h {
        x += h;
        v.push(x);
        h *= ratio;
    }
    v.push(b);
    v
}

/// Sorted, deduplicated breakpoints restricted to [a, b].
pub fn merge_breaks(a: f64, b: f64, extra: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = extra.iter().copied().filter(|&x| x > a && x < b).collect();
    v.push(a);
    v.push(b);
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let tol = (b - a).abs() * 1e-12;
    v.dedup_by(|x, y| (*x - *y).abs() <= tol);
    v
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600567216780,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

struct Seg {
    a: f64,
    b: f64,
    val: Vec<f64>,
    err: f64,
}
impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.partial_cmp(&o.err).unwrap_or(Ordering::Equal)
    }
}

fn gk21<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for (i, &x) in XGK.iter().enumerate() {
        let pts: &[f64] = if i == 10 { &[0.0] } else { &[-1.0, 1.0] };
        for &s in pts {
            buf.iter_mut().for_each(|v| *v = 0.0);
            f(c + s * h * x, buf);
            for d in 0..dim {
                k[d] += WGK[i] * buf[d];
                if i % 2 == 1 {
                    g[d] += WG[i / 2] * buf[d];
                }
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..dim {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).abs());
    }
    (k, err)
}

/// Adaptive Gauss–Kronrod (10/21) integration of a vector-valued integrand over `[a, b]`, starting
/// from the panels defined by `breaks` (which must include a and b). The error criterion uses the
/// max-norm over components.
pub fn adaptive_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    breaks: &[f64],
    dim: usize,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (val, err) = gk21(&mut f, w[0], w[1], dim, &mut buf);
            heap.push(Seg { a: w[0], b: w[1], val, err });
        }
    }
    let total = |h: &BinaryHeap<Seg>| {
        let mut s = vec![0.0; dim];
        let mut e = 0.0;
        for seg in h.iter() {
            for d in 0..dim {
                s[d] += seg.val[d];
            }
            e += seg.err;
        }
        (s, e)
    };
    let mut n = 0;
    loop {
        let (s, e) = total(&heap);
        let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if e <= spec.abs_tol.max(spec.rel_tol * scale) || heap.is_empty() {
            return Ok(s);
        }
        if n >= spec.max_refinements {
            return Err(Error::NoConvergence { refinements: n, estimate: e });
        }
        let seg = heap.pop().unwrap();
        let m = 0.5 * (seg.a + seg.b);
        if m <= seg.a || m >= seg.b {
            return Err(Error::NoConvergence { refinements: n, estimate: e });
        }
        let (v1, e1) = gk21(&mut f, seg.a, m, dim, &mut buf);
        let (v2, e2) = gk21(&mut f, m, seg.b, dim, &mut buf);
        heap.push(Seg { a: seg.a, b: m, val: v1, err: e1 });
        heap.push(Seg { a: m, b: seg.b, val: v2, err: e2 });
        n += 1;
    }
}

/// Scalar convenience wrapper around [`adaptive_vec`].
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    adaptive_vec(|x, out| out[0] = f(x), breaks, 1, spec).map(|v| v[0])
}
