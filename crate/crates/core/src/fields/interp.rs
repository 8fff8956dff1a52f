use std::f64::consts::PI;

use super::{FieldValue, Vec3};
use crate::error::{Error, Result};

/// Tensor-product node layout `(r, cosθ, φ)` shared by graded grids and CSV point clouds.
///
/// Interpolation is tricubic Lagrange in `(ln r, θ, φ)`, periodic in `φ` and
/// continued across the poles by mirroring to `φ + π`.
/// Beyond the outermost radius the value at the outer radius is continued with
/// the field's power-law tail.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalAxes {
    log_r: Vec<f64>,
    radii: Vec<f64>,
    cos_theta: Vec<f64>,
    /// Polar angles padded with two mirrored nodes across each pole, ascending.
    theta_ext: Vec<f64>,
    n_phi: usize,
}

fn stencil(nodes: &[f64], s: f64) -> (usize, Vec<f64>) {
    let n = nodes.len();
    let m = n.min(4);
    let idx = nodes.partition_point(|&v| v <= s);
    let start = idx.saturating_sub(2).min(n - m);
    let pts = &nodes[start..start + m];
    let weights = (0..m)
        .map(|k| {
            let mut w = 1.0;
            for (j, pj) in pts.iter().enumerate() {
                if j != k {
                    w *= (s - pj) / (pts[k] - pj);
                }
            }
            w
        })
        .collect();
    (start, weights)
}

impl SphericalAxes {
    pub fn new(radii: Vec<f64>, cos_theta: Vec<f64>, n_phi: usize) -> Self {
        let log_r = radii.iter().map(|r| r.ln()).collect();
        let nt = cos_theta.len();
        let theta: Vec<f64> = cos_theta.iter().rev().map(|c| c.acos()).collect();
        let mut theta_ext = Vec::with_capacity(nt + 4);
        for k in (0..2.min(nt)).rev() {
            theta_ext.push(-theta[k]);
        }
        theta_ext.extend_from_slice(&theta);
        for k in 0..2.min(nt) {
            theta_ext.push(2.0 * PI - theta[nt - 1 - k]);
        }
        SphericalAxes { log_r, radii, cos_theta, theta_ext, n_phi }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.cos_theta.len() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ir: usize, it: usize, ip: usize) -> usize {
        (ir * self.cos_theta.len() + it) * self.n_phi + ip
    }

    pub fn r_outer(&self) -> f64 {
        *self.radii.last().expect("non-empty axes")
    }

    /// Interpolates node values at `x`; `tail_exponent` continues the field past the outer radius.
    pub fn interpolate<T: FieldValue>(&self, values: &[T], tail_exponent: f64, x: Vec3) -> T {
        let r = x.norm();
        if r == 0.0 {
            return self.interpolate(values, tail_exponent, Vec3::new(0.0, 0.0, self.radii[0] * 1e-3));
        }
        let r_out = self.r_outer();
        let (r_eval, factor) = if r > r_out { (r_out, (r_out / r).powf(tail_exponent)) } else { (r, 1.0) };
        let theta = (x.z / r).clamp(-1.0, 1.0).acos();
        let mut phi = x.y.atan2(x.x);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }

        let (r0, wr) = stencil(&self.log_r, r_eval.ln());
        let (t0, wt) = stencil(&self.theta_ext, theta);
        let nt = self.cos_theta.len();
        let pad = 2.min(nt);
        let np = self.n_phi;
        let dphi = 2.0 * PI / np as f64;
        let m = np.min(4);
        let offset = if m == 4 { 1 } else { 0 };
        let phi_weights = |phi: f64| {
            let p = phi / dphi;
            let base = p.floor();
            let frac = p - base;
            let w: Vec<(usize, f64)> = (0..m)
                .map(|k| {
                    let mut w = 1.0;
                    for j in 0..m {
                        if j != k {
                            w *= (frac + offset as f64 - j as f64) / (k as f64 - j as f64);
                        }
                    }
                    let ip = (base as i64 - offset as i64 + k as i64).rem_euclid(np as i64) as usize;
                    (ip, w)
                })
                .collect();
            w
        };
        let direct = phi_weights(phi);
        let mirrored = phi_weights((phi + PI) % (2.0 * PI));

        let mut acc = T::zero();
        for (a, wa) in wr.iter().enumerate() {
            for (b, wb) in wt.iter().enumerate() {
                // padded theta index -> (cos index, across a pole?)
                let j = t0 + b;
                let (k, across) = if j < pad {
                    (pad - 1 - j, true)
                } else if j >= pad + nt {
                    (nt - 1 - (j - pad - nt), true)
                } else {
                    (j - pad, false)
                };
                let it = nt - 1 - k;
                let wab = wa * wb;
                for (ip, wk) in if across { &mirrored } else { &direct } {
                    let idx = self.index(r0 + a, it, *ip);
                    acc = acc.plus(&values[idx].scaled(wab * wk));
                }
            }
        }
        acc.scaled(factor)
    }

    /// Recognizes a point cloud laid out on spherical tensor-product axes.
    ///
    /// Returns the axes and, for each axis node index, the row of `points` that holds it.
    pub fn detect(points: &[Vec3]) -> Result<(Self, Vec<usize>)> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty point cloud".into()));
        }
        let mut rs: Vec<f64> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let coords: Vec<(f64, f64, f64)> = points
            .iter()
            .map(|x| {
                let r = x.norm();
                let c = if r > 0.0 { x.z / r } else { 2.0 };
                let mut phi = x.y.atan2(x.x);
                if phi < 0.0 {
                    phi += 2.0 * PI;
                }
                (r, c, phi)
            })
            .collect();
        for &(r, c, _) in &coords {
            if r == 0.0 || (1.0 - c * c) < 1e-20 {
                return Err(Error::InvalidInput("points on the symmetry axis have no azimuth".into()));
            }
            rs.push(r);
            cs.push(c);
        }
        let unique = |v: &mut Vec<f64>, tol: f64| {
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            v.dedup_by(|a, b| (*a - *b).abs() <= tol * b.abs().max(1.0));
        };
        unique(&mut rs, 1e-9);
        unique(&mut cs, 1e-9);
        let per_line = rs.len() * cs.len();
        if !points.len().is_multiple_of(per_line) {
            return Err(Error::InvalidInput("point cloud is not a spherical tensor grid".into()));
        }
        let n_phi = points.len() / per_line;
        if rs.len() < 2 || cs.len() < 2 || n_phi < 4 {
            return Err(Error::InvalidInput("point cloud too small to interpolate".into()));
        }
        let axes = SphericalAxes::new(rs, cs, n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        let nearest = |v: &[f64], s: f64| {
            let i = v.partition_point(|&a| a < s);
            let cand = [i.saturating_sub(1), i.min(v.len() - 1)];
            *cand
                .iter()
                .min_by(|&&a, &&b| (v[a] - s).abs().partial_cmp(&(v[b] - s).abs()).expect("finite"))
                .expect("two candidates")
        };
        let mut order = vec![usize::MAX; points.len()];
        for (row, &(r, c, phi)) in coords.iter().enumerate() {
            let ir = nearest(&axes.radii, r);
            let it = nearest(&axes.cos_theta, c);
            let pk = phi / dphi;
            let ip = pk.round() as usize % n_phi;
            if (pk - pk.round()).abs() > 1e-6 {
                return Err(Error::InvalidInput("azimuths are not uniformly spaced".into()));
            }
            let idx = axes.index(ir, it, ip);
            if order[idx] != usize::MAX {
                return Err(Error::InvalidInput("duplicate node in point cloud".into()));
            }
            order[idx] = row;
        }
        Ok((axes, order))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_graded_grid;

    #[test]
    fn reproduces_nodes_and_smooth_fields() {
        let g = make_graded_grid(0.5, 32.0, 1.3, 16, 16).unwrap();
        let axes = g.axes();
        let f = |x: Vec3| x.x / x.norm().powi(2) + 0.3 * x.z * x.y / x.norm().powi(3);
        let vals: Vec<f64> = g.points().iter().map(|x| f(*x)).collect();
        for (i, x) in g.points().iter().enumerate().step_by(97) {
            assert!((axes.interpolate(&vals, 1.0, *x) - vals[i]).abs() < 1e-12);
        }
        for x in [Vec3::new(1.3, -0.4, 2.0), Vec3::new(-5.0, 7.0, 1.0), Vec3::new(0.1, 0.2, -9.0)] {
            let err = (axes.interpolate(&vals, 1.0, x) - f(x)).abs();
            assert!(err < 2e-3 / x.norm(), "{x:?}: {err}");
        }
        // beyond the grid the tail model takes over exactly along rays
        let far = Vec3::new(0.0, 60.0, 0.0) / 60f64.sqrt();
        let scale = axes.interpolate(&vals, 1.0, far * 100.0) / axes.interpolate(&vals, 1.0, far * 200.0);
        assert!((scale - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_shuffled_tensor_grid() {
        let g = make_graded_grid(1.0, 4.0, 2.0, 6, 8).unwrap();
        let mut pts: Vec<Vec3> = g.points().to_vec();
        pts.reverse();
        let (axes, order) = SphericalAxes::detect(&pts).unwrap();
        assert_eq!(axes.len(), g.len());
        for (idx, row) in order.iter().enumerate() {
            assert!((pts[*row] - g.points()[idx]).norm() < 1e-12);
        }
        assert!(SphericalAxes::detect(&pts[1..]).is_err());
    }
}
