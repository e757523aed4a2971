//! Cartesian derivatives of radial functions f(|z|²).
//!
//! `h[k] = 2^k f^{(k)}(|z|²)`; derivatives up to order four are assembled from these scalars.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];
pub type Tensor3 = [[[f64; 3]; 3]; 3];

#[inline]
fn d(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// ∂_{idx[0]} ... ∂_{idx[n-1]} f(|z|²), n ≤ 4.
pub fn radial_deriv(h: &[f64; 5], z: &Vec3, idx: &[usize]) -> f64 {
    match idx.len() {
        0 => h[0],
        1 => h[1] * z[idx[0]],
        2 => {
            let (i, j) = (idx[0], idx[1]);
            h[1] * d(i, j) + h[2] * z[i] * z[j]
        }
        3 => {
            let (i, j, k) = (idx[0], idx[1], idx[2]);
            h[2] * (d(i, j) * z[k] + d(i, k) * z[j] + d(j, k) * z[i]) + h[3] * z[i] * z[j] * z[k]
        }
        4 => {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            h[2] * (d(i, j) * d(k, l) + d(i, k) * d(j, l) + d(i, l) * d(j, k))
                + h[3]
                    * (d(i, j) * z[k] * z[l]
                        + d(i, k) * z[j] * z[l]
                        + d(i, l) * z[j] * z[k]
                        + d(j, k) * z[i] * z[l]
                        + d(j, l) * z[i] * z[k]
                        + d(k, l) * z[i] * z[j])
                + h[4] * z[i] * z[j] * z[k] * z[l]
        }
        _ => panic!("radial derivatives above order 4 are not supported"),
    }
}

pub fn gradient(h: &[f64; 5], z: &Vec3) -> Vec3 {
    [h[1] * z[0], h[1] * z[1], h[1] * z[2]]
}

pub fn hessian(h: &[f64; 5], z: &Vec3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = radial_deriv(h, z, &[i, j]);
        }
    }
    m
}

pub fn third(h: &[f64; 5], z: &Vec3) -> Tensor3 {
    let mut t = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                t[i][j][k] = radial_deriv(h, z, &[i, j, k]);
            }
        }
    }
    t
}

pub fn norm2(z: &Vec3) -> f64 {
    z[0] * z[0] + z[1] * z[1] + z[2] * z[2]
}

pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Reflection y* = (y', -y₃).
pub fn reflect(y: &Vec3) -> Vec3 {
    [y[0], y[1], -y[2]]
}
