//! Special functions: scaled complementary error function, lower incomplete gamma at half-integer
//! order, integer-order Bessel functions and 1D Gaussian derivatives.

use std::f64::consts::PI;

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// exp(x²)·erfc(x), accurate for large positive x.
pub fn erfcx(x: f64) -> f64 {
    if x < 5.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // Continued fraction: erfcx(x) = (1/√π) · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut f = x;
    for k in (1..60).rev() {
        f = x + (k as f64 * 0.5) / f;
    }
    1.0 / (PI.sqrt() * f)
}

/// exp(pre)·erfc(u) computed without overflow for large u.
pub fn exp_erfc(pre: f64, u: f64) -> f64 {
    if u > 0.0 {
        (pre - u * u).exp() * erfcx(u)
    } else {
        pre.exp() * libm::erfc(u)
    }
}

/// γ*(a, U) = γ(a, U) / U^a for a = k + 1/2.
pub fn gamma_star_half(k: usize, u: f64) -> f64 {
    let a = k as f64 + 0.5;
    if u < 30.0 {
        // e^{-U} Σ U^n / (a (a+1) ... (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 0;
        loop {
            n += 1;
            term *= u / (a + n as f64);
            sum += term;
            if term < 1e-17 * sum || n > 400 {
                break;
            }
        }
        return (-u).exp() * sum;
    }
    // Γ(a) - Γ(a, U) with upward recurrence of the upper incomplete gamma.
    let su = u.sqrt();
    let mut big = PI.sqrt(); // Γ(1/2)
    let mut upper = PI.sqrt() * libm::erfc(su);
    let mut aa = 0.5;
    for _ in 0..k {
        upper = aa * upper + u.powf(aa) * (-u).exp();
        big *= aa;
        aa += 1.0;
    }
    (big - upper) / u.powf(a)
}

/// Number of Bessel orders returned by [`bessel_j`].
pub const NJ: usize = 7;

/// J_n(x) for n = 0..NJ, written into `out[n]`, x ≥ 0.
pub fn bessel_j(x: f64, out: &mut [f64; NJ]) {
    if x < 1e-3 {
        // leading terms of the power series
        let q = 0.25 * x * x;
        let mut p = 1.0;
        for (n, o) in out.iter_mut().enumerate() {
            let n1 = n as f64 + 1.0;
            *o = p * (1.0 - q / n1 + q * q / (2.0 * n1 * (n1 + 1.0)));
            p *= 0.5 * x / (n as f64 + 1.0);
        }
        return;
    }
    if x > 8.0 {
        let j0 = libm::j0(x);
        let j1 = libm::j1(x);
        out[0] = j0;
        out[1] = j1;
        let mut a = j0;
        let mut b = j1;
        for n in 1..NJ - 1 {
            let c = 2.0 * n as f64 / x * b - a;
            out[n + 1] = c;
            a = b;
            b = c;
        }
        return;
    }
    // Miller's downward recurrence normalized by J0 + 2 Σ J_2k = 1
    let start = 2 * ((x as usize) + 14);
    let mut jp = 0.0;
    let mut j = 1e-30;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        let n = k - 1;
        if n < NJ {
            out[n] = j;
        }
        if n == 0 {
            norm += j;
        } else if n % 2 == 0 {
            norm += 2.0 * j;
        }
    }
    let inv = 1.0 / norm;
    out.iter_mut().for_each(|v| *v *= inv);
}

/// d^n/ds^n of g(s) = (4πt)^{-1/2} exp(-s²/(4t)).
pub fn gauss1d_deriv(s: f64, t: f64, n: u8) -> f64 {
    let sig = (2.0 * t).sqrt();
    let z = s / sig;
    let g = (4.0 * PI * t).powf(-0.5) * (-0.5 * z * z).exp();
    // probabilists' Hermite: d^n/dz^n e^{-z²/2} = (-1)^n He_n(z) e^{-z²/2}
    let mut h0 = 1.0;
    let mut h1 = z;
    let he = match n {
        0 => 1.0,
        1 => z,
        _ => {
            for k in 1..n as usize {
                let h2 = z * h1 - k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    };
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * he * g / sig.powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfcx_matches_direct_and_asymptotic() {
        for &x in &[0.0, 0.5, 2.0, 4.9] {
            assert!((erfcx(x) - (x * x).exp() * libm::erfc(x)).abs() < 1e-14 * erfcx(x).max(1.0));
        }
        // continuity across the switch
        let a = (25.0f64).exp() * libm::erfc(5.0);
        assert!((erfcx(5.0) - a).abs() / a < 1e-10);
        let x: f64 = 100.0;
        let asym = 1.0 / (PI.sqrt() * x) * (1.0 - 0.5 / (x * x) + 0.75 / x.powi(4));
        assert!((erfcx(x) - asym).abs() / asym < 1e-10);
    }

    fn gamma_star_quad(k: usize, u: f64) -> f64 {
        // ∫_0^1 s^{a-1} e^{-U s} ds, substituting s = v², ds = 2v dv
        let a = k as f64 + 0.5;
        let gl = crate::quad::GaussLegendre::new(64);
        let br: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
        gl.composite(&br)
            .into_iter()
            .map(|(v, w)| w * 2.0 * v * (v * v).powf(a - 1.0) * (-u * v * v).exp())
            .sum()
    }

    #[test]
    fn gamma_star_against_quadrature() {
        for k in 0..6 {
            for &u in &[0.0, 0.3, 3.0, 20.0, 29.9, 30.1, 80.0] {
                let a = gamma_star_half(k, u);
                let b = gamma_star_quad(k, u);
                assert!((a - b).abs() <= 1e-11 * b.abs().max(1e-300), "k={k} u={u} {a} {b}");
            }
        }
    }

    #[test]
    fn bessel_recurrence_matches_jn() {
        let mut o = [0.0; NJ];
        for &x in &[1e-6, 9e-4, 1.1e-3, 0.01, 0.05, 0.1, 1.0, 4.9, 7.9, 8.1, 12.0, 60.0] {
            bessel_j(x, &mut o);
            for n in 0..NJ {
                let r = libm::jn(n as i32, x);
                assert!((o[n] - r).abs() < 1e-13 + 1e-12 * r.abs(), "x={x} n={n} {} {r}", o[n]);
            }
        }
    }

    #[test]
    fn gauss_derivs_by_fd() {
        let t = 0.3;
        let h = 1e-4;
        for n in 0..4u8 {
            for &s in &[-1.0, 0.2, 0.9] {
                let fd = (gauss1d_deriv(s + h, t, n) - gauss1d_deriv(s - h, t, n)) / (2.0 * h);
                let an = gauss1d_deriv(s, t, n + 1);
                assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "n={n} s={s}");
            }
        }
    }
}
