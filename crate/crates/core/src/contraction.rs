//! Fixed points of `x = y + L x + B(x, x)` in a Banach space.
//!
//! If `‖L‖ ≤ ε < 1`, `‖B(x, z)‖ ≤ c‖x‖‖z‖` and `‖y‖ < (1-ε)²/(4c)`, the map
//! sends every ball of radius `ξ ∈ (ξ₁, ξ₂]` into itself, where
//! `ξ₁ < ξ₂` are the roots of `ξ = ‖y‖ + εξ + cξ²`, and has a unique fixed
//! point in the open `ξ₂`-ball; that point lies in the closed `ξ₁`-ball.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Mat3, Vec3};

/// Roots `ξ₁ ≤ ξ₂` of `cξ² - (1-ε)ξ + ‖y‖ = 0`.
pub fn contraction_roots(eps: f64, c: f64, y_norm: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("need 0 ≤ eps < 1, got {eps}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!("need c > 0, got {c}")));
    }
    if !(y_norm >= 0.0) || !y_norm.is_finite() {
        return Err(Error::Domain(format!("need a finite ‖y‖ ≥ 0, got {y_norm}")));
    }
    let a = 1.0 - eps;
    let disc = a * a - 4.0 * c * y_norm;
    if y_norm >= a * a / (4.0 * c) || disc <= 0.0 {
        return Err(Error::NoCertificate { eps_hat: eps, c_hat: c, y_norm });
    }
    // both roots without cancellation
    let s = a + disc.sqrt();
    Ok((2.0 * y_norm / s, s / (2.0 * c)))
}

/// Measured constants and the resulting roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionCertificate {
    pub eps_hat: f64,
    pub c_hat: f64,
    pub y_norm: f64,
    pub discriminant: f64,
    pub xi1: f64,
    pub xi2: f64,
}

impl ContractionCertificate {
    /// Fails with [`Error::NoCertificate`] unless the smallness condition holds.
    pub fn new(eps_hat: f64, c_hat: f64, y_norm: f64) -> Result<Self> {
        if !(eps_hat < 1.0) {
            return Err(Error::NoCertificate { eps_hat, c_hat, y_norm });
        }
        // a vanishing bilinear part leaves a linear problem with ξ₂ = ∞
        if c_hat == 0.0 {
            let xi1 = y_norm / (1.0 - eps_hat);
            return Ok(ContractionCertificate {
                eps_hat,
                c_hat,
                y_norm,
                discriminant: (1.0 - eps_hat).powi(2),
                xi1,
                xi2: f64::INFINITY,
            });
        }
        let (xi1, xi2) = contraction_roots(eps_hat.max(0.0), c_hat, y_norm)?;
        Ok(ContractionCertificate {
            eps_hat,
            c_hat,
            y_norm,
            discriminant: (1.0 - eps_hat).powi(2) - 4.0 * c_hat * y_norm,
            xi1,
            xi2,
        })
    }

    /// Contraction factor of the map on the `ξ`-ball.
    pub fn lipschitz_on_ball(&self, xi: f64) -> f64 {
        self.eps_hat + 2.0 * self.c_hat * xi
    }
}

/// A problem `x ↦ F(x) = y + Lx + B(x, x)` on a normed space.
pub trait QuadraticProblem {
    type State: Clone;

    fn zero(&self) -> Self::State;
    fn map(&self, x: &Self::State) -> Result<Self::State>;
    fn norm(&self, x: &Self::State) -> Result<f64>;
    fn distance(&self, a: &Self::State, b: &Self::State) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub struct PicardOutcome<S> {
    pub state: S,
    pub norm_history: Vec<f64>,
    pub step_history: Vec<f64>,
    pub converged: bool,
}

/// Plain Picard iteration from `x0`.
///
/// Stops when a step is at most `tol`. Fails with [`Error::Divergence`] as soon
/// as an iterate leaves the `ξ₂`-ball.
pub fn picard_iterate<P: QuadraticProblem>(
    problem: &P,
    x0: P::State,
    xi2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PicardOutcome<P::State>> {
    let mut x = x0;
    let mut norm_history = vec![problem.norm(&x)?];
    let mut step_history = Vec::new();
    for iteration in 1..=max_iter {
        let next = problem.map(&x)?;
        let norm = problem.norm(&next)?;
        let step = problem.distance(&next, &x)?;
        norm_history.push(norm);
        step_history.push(step);
        if !norm.is_finite() || norm > xi2 {
            return Err(Error::Divergence { iteration, norm, xi2 });
        }
        x = next;
        if step <= tol {
            return Ok(PicardOutcome { state: x, norm_history, step_history, converged: true });
        }
    }
    Ok(PicardOutcome { state: x, norm_history, step_history, converged: false })
}

/// `x = y + Lx + c (x·x) n` on `R³` with the Euclidean norm: `‖L‖ = ε` when
/// `L` is `ε` times a rotation, and the bilinear constant is exactly `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticQuadratic {
    pub y: Vec3,
    pub l: Mat3,
    pub c: f64,
    pub n: Vec3,
}

impl SyntheticQuadratic {
    pub fn new(y: Vec3, eps: f64, rotation_axis: Vec3, angle: f64, c: f64, n: Vec3) -> Self {
        let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(rotation_axis), angle);
        SyntheticQuadratic { y, l: r.matrix() * eps, c, n: n.normalize() }
    }
}

impl QuadraticProblem for SyntheticQuadratic {
    type State = Vec3;

    fn zero(&self) -> Vec3 {
        Vec3::zeros()
    }
    fn map(&self, x: &Vec3) -> Result<Vec3> {
        Ok(self.y + self.l * x + self.n * (self.c * x.dot(x)))
    }
    fn norm(&self, x: &Vec3) -> Result<f64> {
        Ok(x.norm())
    }
    fn distance(&self, a: &Vec3, b: &Vec3) -> Result<f64> {
        Ok((a - b).norm())
    }
}
