use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quadrature::{gauss_legendre, gauss_legendre_interval};
use super::{SphericalAxes, Vec3};
use crate::error::{Error, Result};

/// Default Gauss points per geometric shell.
pub const SHELL_RADIAL_NODES: usize = 2;
/// Minimum Gauss points on `[0, r_min]` when the grid covers the whole ball.
pub const CORE_RADIAL_NODES: usize = 3;

fn default_radial_order() -> usize {
    SHELL_RADIAL_NODES
}

/// Parameters of a [`GradedGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub ratio: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Also cover the ball `|x| < r_min`, so the grid integrates over all of `B_{r_max}`.
    #[serde(default)]
    pub include_core: bool,
    /// Gauss points per shell.
    #[serde(default = "default_radial_order")]
    pub radial_order: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<GradedGrid> {
        GradedGrid::new(self)
    }
}

/// Geometrically graded spherical-shell grid.
///
/// Shell radii are `r_j = r_min q^j`; each shell carries `radial_order` radial
/// Gauss points (two by default), the angular rule is Gauss–Legendre in `cosθ` times uniform `φ`.
/// Node `(ir, it, ip)` is stored at `(ir * n_theta + it) * n_phi + ip`.
#[derive(Debug, Clone)]
pub struct GradedGrid {
    spec: GridSpec,
    r_max: f64,
    shells: usize,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    cos_theta: Vec<f64>,
    theta_weights: Vec<f64>,
    phi: Vec<f64>,
    points: Vec<Vec3>,
    weights: Vec<f64>,
    cell_radius: Vec<f64>,
}

/// Builds a shell grid over `r_min ≤ |x| ≤ r_max`.
pub fn make_graded_grid(r_min: f64, r_max: f64, q: f64, n_theta: usize, n_phi: usize) -> Result<GradedGrid> {
    GradedGrid::new(&GridSpec {
        r_min,
        r_max,
        ratio: q,
        n_theta,
        n_phi,
        include_core: false,
        radial_order: SHELL_RADIAL_NODES,
    })
}

impl GradedGrid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        let GridSpec { r_min, r_max, ratio, n_theta, n_phi, include_core, radial_order } = *spec;
        if !(r_min > 0.0 && r_min.is_finite()) {
            return Err(Error::InvalidConfig(format!("r_min must be positive, got {r_min}")));
        }
        if !(ratio > 1.0 && ratio.is_finite()) {
            return Err(Error::InvalidConfig(format!("grading ratio must exceed 1, got {ratio}")));
        }
        if !(r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("r_max ({r_max}) must exceed r_min ({r_min})")));
        }
        if n_theta < 4 || n_phi < 4 {
            return Err(Error::InvalidConfig(format!(
                "angular counts must be at least 4, got n_theta = {n_theta}, n_phi = {n_phi}"
            )));
        }
        if !(1..=32).contains(&radial_order) {
            return Err(Error::InvalidConfig(format!("radial_order must be in 1..=32, got {radial_order}")));
        }
        let exact = (r_max / r_min).ln() / ratio.ln();
        let shells = ((exact - 1e-9).ceil() as usize).max(1);
        let actual_r_max = r_min * ratio.powi(shells as i32);

        let mut radii = Vec::new();
        let mut radial_weights = Vec::new();
        if include_core {
            for (r, w) in gauss_legendre_interval(0.0, r_min, CORE_RADIAL_NODES.max(radial_order)) {
                radii.push(r);
                radial_weights.push(w * r * r);
            }
        }
        for j in 0..shells {
            let a = r_min * ratio.powi(j as i32);
            let b = a * ratio;
            for (r, w) in gauss_legendre_interval(a, b, radial_order) {
                radii.push(r);
                radial_weights.push(w * r * r);
            }
        }

        let (cos_theta, theta_weights) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let phi: Vec<f64> = (0..n_phi).map(|k| k as f64 * dphi).collect();

        let n = radii.len() * n_theta * n_phi;
        let mut points = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (r, wr) in radii.iter().zip(&radial_weights) {
            for (c, wt) in cos_theta.iter().zip(&theta_weights) {
                let s = (1.0 - c * c).sqrt();
                for p in &phi {
                    points.push(Vec3::new(r * s * p.cos(), r * s * p.sin(), r * c));
                    weights.push(wr * wt * dphi);
                }
            }
        }
        let cell_radius = weights.iter().map(|w| (3.0 * w / (4.0 * PI)).cbrt()).collect();

        Ok(GradedGrid {
            spec: *spec,
            r_max: actual_r_max,
            shells,
            radii,
            radial_weights,
            cos_theta,
            theta_weights,
            phi,
            points,
            weights,
            cell_radius,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn r_min(&self) -> f64 {
        self.spec.r_min
    }

    /// Outer radius actually covered (the requested one rounded up to a whole shell).
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn requested_r_max(&self) -> f64 {
        self.spec.r_max
    }

    pub fn ratio(&self) -> f64 {
        self.spec.ratio
    }

    pub fn shell_count(&self) -> usize {
        self.shells
    }

    pub fn has_core(&self) -> bool {
        self.spec.include_core
    }

    pub fn n_theta(&self) -> usize {
        self.spec.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.spec.n_phi
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Radius of the ball with the same volume as each node's quadrature cell.
    pub fn cell_radius(&self) -> &[f64] {
        &self.cell_radius
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn theta_weights(&self) -> &[f64] {
        &self.theta_weights
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn nodes_per_radius(&self) -> usize {
        self.spec.n_theta * self.spec.n_phi
    }

    /// Node indices of the outermost radial layer.
    pub fn outer_layer(&self) -> std::ops::Range<usize> {
        let m = self.nodes_per_radius();
        self.len() - m..self.len()
    }

    /// Node indices at radial index `ir`.
    pub fn layer(&self, ir: usize) -> std::ops::Range<usize> {
        let m = self.nodes_per_radius();
        ir * m..(ir + 1) * m
    }

    pub fn integrate<F: Fn(Vec3) -> f64>(&self, f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    pub fn axes(&self) -> SphericalAxes {
        SphericalAxes::new(self.radii.clone(), self.cos_theta.clone(), self.spec.n_phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrates_to_shell_volume() {
        let g = make_graded_grid(1.0, 2.0, 2.0, 16, 16).unwrap();
        let vol = g.integrate(|_| 1.0);
        let exact = 4.0 / 3.0 * PI * (8.0 - 1.0);
        assert!((vol - exact).abs() < 1e-10, "{vol} vs {exact}");
        assert!((exact - 29.3215).abs() < 1e-4);
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn r_max_rounds_up_to_whole_shell() {
        let g = make_graded_grid(1.0, 1.5, 2.0, 16, 16).unwrap();
        assert_eq!(g.shell_count(), 1);
        assert_eq!(g.r_max(), 2.0);
        assert_eq!(g.requested_r_max(), 1.5);
    }

    #[test]
    fn inverse_square_integrates_exactly() {
        let g = make_graded_grid(1.0, 8.0, 2.0, 16, 16).unwrap();
        assert_eq!(g.shell_count(), 3);
        let v = g.integrate(|x| 1.0 / x.norm_squared());
        assert!((v - 4.0 * PI * 7.0).abs() < 1e-8);
    }

    #[test]
    fn core_ball_completes_the_volume() {
        let g = GridSpec { r_min: 0.5, r_max: 4.0, ratio: 2.0, n_theta: 6, n_phi: 8, include_core: true, radial_order: 2 }
            .build()
            .unwrap();
        let vol = g.integrate(|_| 1.0);
        assert!((vol - 4.0 / 3.0 * PI * 64.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_configurations() {
        assert!(matches!(make_graded_grid(0.0, 2.0, 2.0, 8, 8), Err(Error::InvalidConfig(_))));
        assert!(matches!(make_graded_grid(1.0, 2.0, 1.0, 8, 8), Err(Error::InvalidConfig(_))));
        assert!(matches!(make_graded_grid(1.0, 1.0, 2.0, 8, 8), Err(Error::InvalidConfig(_))));
        assert!(matches!(make_graded_grid(1.0, 2.0, 2.0, 3, 8), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn construction_is_deterministic() {
        let a = make_graded_grid(0.3, 50.0, 1.4, 8, 12).unwrap();
        let b = make_graded_grid(0.3, 50.0, 1.4, 8, 12).unwrap();
        assert!(a.points().iter().zip(b.points()).all(|(p, q)| p.iter().zip(q.iter()).all(|(u, v)| u.to_bits() == v.to_bits())));
        assert!(a.weights().iter().zip(b.weights()).all(|(u, v)| u.to_bits() == v.to_bits()));
    }

    #[test]
    fn quadrature_error_drops_under_refinement() {
        // ∫ exp(-r) (1 + z²/r²) over 0.5 ≤ r ≤ 32
        let exact_radial = |a: f64, b: f64| {
            let f = |r: f64| -(r * r + 2.0 * r + 2.0) * (-r).exp();
            f(b) - f(a)
        };
        let exact = exact_radial(0.5, 32.0) * (4.0 * PI + 4.0 * PI / 3.0);
        let mut errors = Vec::new();
        for level in 0..3 {
            let q = 2f64.powf(1.0 / (1 << level) as f64);
            let n = 4 << level;
            let g = make_graded_grid(0.5, 32.0, q, n, n).unwrap();
            let v = g.integrate(|x| {
                let r = x.norm();
                (-r).exp() * (1.0 + x.z * x.z / (r * r))
            });
            errors.push((v - exact).abs() / exact);
        }
        for w in errors.windows(2) {
            assert!(w[1] < w[0] / 4.0, "errors {errors:?}");
        }
    }
}
