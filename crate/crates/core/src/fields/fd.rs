//! Fourth-order central finite differences.

use super::{Mat3, Vec3};

const D2: [(f64, f64); 4] = [(-2.0, -1.0 / 12.0), (-1.0, 16.0 / 12.0), (1.0, 16.0 / 12.0), (2.0, -1.0 / 12.0)];
const D2_CENTER: f64 = -30.0 / 12.0;

// antisymmetric pairs, so constants difference to exactly zero
fn first<T>(m2: T, m1: T, p1: T, p2: T, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    ((p1 - m1) * 8.0 - (p2 - m2)) * (1.0 / (12.0 * h))
}

fn shifted(x: Vec3, axis: usize, s: f64) -> Vec3 {
    let mut y = x;
    y[axis] += s;
    y
}

/// Value, Jacobian `J[(i, j)] = ∂_j u_i` and Laplacian from one 13-point stencil.
pub fn vector_stencil<F: Fn(Vec3) -> Vec3>(f: F, x: Vec3, h: f64) -> (Vec3, Mat3, Vec3) {
    let center = f(x);
    let mut jac = Mat3::zeros();
    let mut lap = center * (3.0 * D2_CENTER / (h * h));
    for axis in 0..3 {
        let v: Vec<Vec3> = D2.iter().map(|(s, _)| f(shifted(x, axis, s * h))).collect();
        jac.set_column(axis, &first(v[0], v[1], v[2], v[3], h));
        for ((_, w), vv) in D2.iter().zip(&v) {
            lap += vv * (w / (h * h));
        }
    }
    (center, jac, lap)
}

pub fn jacobian<F: Fn(Vec3) -> Vec3>(f: F, x: Vec3, h: f64) -> Mat3 {
    let mut jac = Mat3::zeros();
    for axis in 0..3 {
        let v = |s: f64| f(shifted(x, axis, s * h));
        jac.set_column(axis, &first(v(-2.0), v(-1.0), v(1.0), v(2.0), h));
    }
    jac
}

pub fn gradient<F: Fn(Vec3) -> f64>(f: F, x: Vec3, h: f64) -> Vec3 {
    let mut g = Vec3::zeros();
    for axis in 0..3 {
        let v = |s: f64| f(shifted(x, axis, s * h));
        g[axis] = first(v(-2.0), v(-1.0), v(1.0), v(2.0), h);
    }
    g
}

pub fn divergence<F: Fn(Vec3) -> Vec3>(f: F, x: Vec3, h: f64) -> f64 {
    jacobian(f, x, h).trace()
}

pub fn laplacian<F: Fn(Vec3) -> Vec3>(f: F, x: Vec3, h: f64) -> Vec3 {
    vector_stencil(f, x, h).2
}

pub fn scalar_laplacian<F: Fn(Vec3) -> f64>(f: F, x: Vec3, h: f64) -> f64 {
    let mut lap = f(x) * 3.0 * D2_CENTER;
    for axis in 0..3 {
        for (s, w) in D2 {
            let mut y = x;
            y[axis] += s * h;
            lap += w * f(y);
        }
    }
    lap / (h * h)
}

/// One-dimensional fourth-order derivative.
pub fn derivative<F: Fn(f64) -> f64>(f: F, t: f64, h: f64) -> f64 {
    first(f(t - 2.0 * h), f(t - h), f(t + h), f(t + 2.0 * h), h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quartics() {
        let f = |x: Vec3| Vec3::new(x.x.powi(4) + x.y * x.z, x.y.powi(3), x.x * x.y * x.z);
        let x = Vec3::new(0.3, -0.7, 1.1);
        let (v, j, l) = vector_stencil(f, x, 0.1);
        assert_eq!(v, f(x));
        assert!((j[(0, 0)] - 4.0 * 0.3f64.powi(3)).abs() < 1e-12);
        assert!((j[(0, 2)] + 0.7).abs() < 1e-12);
        assert!((j[(2, 1)] - 0.3 * 1.1).abs() < 1e-12);
        assert!((l[0] - 12.0 * 0.09).abs() < 1e-10);
        assert!((l[1] - 6.0 * -0.7).abs() < 1e-10);
        assert!(l[2].abs() < 1e-10);
        assert!((divergence(f, x, 0.1) - (4.0 * 0.027 + 3.0 * 0.49 + 0.3 * -0.7)).abs() < 1e-12);
    }

    #[test]
    fn scalar_operators() {
        let f = |x: Vec3| x.x * x.x * x.y + x.z.powi(4);
        let x = Vec3::new(1.0, 2.0, 0.5);
        let g = gradient(f, x, 0.05);
        assert!((g - Vec3::new(4.0, 1.0, 0.5)).norm() < 1e-12);
        assert!((scalar_laplacian(f, x, 0.05) - (4.0 + 3.0)).abs() < 1e-10);
        assert!((derivative(|t| t.powi(3), 2.0, 0.1) - 12.0).abs() < 1e-12);
    }
}
