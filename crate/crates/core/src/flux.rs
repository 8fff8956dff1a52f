//! Momentum flux through spheres, the outflow functional, and the canonical
//! outflow field `Φ x / (4π|x|³)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::quadrature::SphereRule;
use crate::fields::{fd, Mat3, ScalarEvaluator, Vec3, VectorEvaluator};

/// `T = p I + u ⊗ u - (∇u + ∇uᵀ)` with `grad_u[(i, j)] = ∂_j u_i`.
pub fn momentum_flux_tensor(u: &Vec3, grad_u: &Mat3, p: f64) -> Mat3 {
    let parts = FluxTensorParts::new(u, grad_u, p);
    parts.pressure + parts.convective + parts.viscous
}

/// The three terms of the momentum flux tensor, kept apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxTensorParts {
    pub pressure: Mat3,
    pub convective: Mat3,
    pub viscous: Mat3,
}

impl FluxTensorParts {
    pub fn new(u: &Vec3, grad_u: &Mat3, p: f64) -> Self {
        FluxTensorParts {
            pressure: Mat3::identity() * p,
            convective: u * u.transpose(),
            viscous: -(grad_u + grad_u.transpose()),
        }
    }
}

/// How velocity gradients on the sphere are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GradientMode {
    /// Use [`VectorEvaluator::jacobian_at`]; fails if the field has none.
    Exact,
    /// Fourth-order central differences with step `h`, or `1e-4 R` when `None`.
    FiniteDifference { h: Option<f64> },
}

/// Surface integrals of the three flux terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ForceParts {
    pub pressure: Vec3,
    pub convective: Vec3,
    pub viscous: Vec3,
}

impl ForceParts {
    pub fn total(&self) -> Vec3 {
        self.pressure + self.convective + self.viscous
    }

    /// The part linear in `(u, p)`: pressure plus viscous stress.
    pub fn linear(&self) -> Vec3 {
        self.pressure + self.viscous
    }
}

/// A net-force evaluation together with its angular-refinement check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForceEstimate {
    pub value: Vec3,
    pub parts: ForceParts,
    /// Result with the angular order doubled.
    pub refined: Vec3,
    pub discrepancy: f64,
    /// False when doubling the order moved the result by more than `1e-6` relative.
    pub converged: bool,
}

fn check_sphere(radius: f64, order: usize) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("sphere radius must be positive, got {radius}")));
    }
    if order < 8 {
        return Err(Error::InvalidInput(format!("angular order must be at least 8, got {order}")));
    }
    Ok(())
}

fn force_parts<U, P>(u: &U, p: &P, mode: GradientMode, radius: f64, order: usize) -> Result<ForceParts>
where
    U: VectorEvaluator + ?Sized,
    P: ScalarEvaluator + ?Sized,
{
    let rule = SphereRule::of_order(order);
    let mut acc = ForceParts::default();
    for (n, w) in rule.iter() {
        let x = n * radius;
        let v = u.vector_at(x);
        let grad = match mode {
            GradientMode::Exact => u
                .jacobian_at(x)
                .ok_or_else(|| Error::InvalidInput("exact gradients requested but the field has none".into()))?,
            GradientMode::FiniteDifference { h } => fd::jacobian(|y| u.vector_at(y), x, h.unwrap_or(1e-4 * radius)),
        };
        let t = FluxTensorParts::new(&v, &grad, p.scalar_at(x));
        let ds = w * radius * radius;
        acc.pressure += t.pressure * n * ds;
        acc.convective += t.convective * n * ds;
        acc.viscous += t.viscous * n * ds;
    }
    let total = acc.total();
    if !(total.x.is_finite() && total.y.is_finite() && total.z.is_finite()) {
        return Err(Error::InvalidInput(format!("field is not finite on the sphere of radius {radius}")));
    }
    Ok(acc)
}

/// `∮_{|x|=R} T(u, p) n dS`.
pub fn net_force<U, P>(u: &U, p: &P, mode: GradientMode, radius: f64, order: usize) -> Result<ForceEstimate>
where
    U: VectorEvaluator + ?Sized,
    P: ScalarEvaluator + ?Sized,
{
    check_sphere(radius, order)?;
    let parts = force_parts(u, p, mode, radius, order)?;
    let refined = force_parts(u, p, mode, radius, 2 * order)?.total();
    let value = parts.total();
    let scale = parts.pressure.norm() + parts.convective.norm() + parts.viscous.norm();
    let discrepancy = (refined - value).norm();
    Ok(ForceEstimate { value, parts, refined, discrepancy, converged: discrepancy <= 1e-6 * scale.max(1e-300) })
}

/// `∮_{|x|=R} u·n dS`.
pub fn outflow<U: VectorEvaluator + ?Sized>(u: &U, radius: f64, order: usize) -> Result<f64> {
    check_sphere(radius, order)?;
    let rule = SphereRule::of_order(order);
    let total: f64 = rule.iter().map(|(n, w)| w * u.vector_at(n * radius).dot(n)).sum::<f64>() * radius * radius;
    if !total.is_finite() {
        return Err(Error::InvalidInput(format!("field is not finite on the sphere of radius {radius}")));
    }
    Ok(total)
}

/// `a(x) = Φ x / (4π|x|³)` with its pressure `π_a = -½|a|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutflowField {
    pub flux: f64,
}

pub fn canonical_outflow_field(flux: f64) -> OutflowField {
    OutflowField { flux }
}

impl OutflowField {
    pub fn velocity(&self, x: Vec3) -> Vec3 {
        if self.flux == 0.0 {
            return Vec3::zeros();
        }
        let r = x.norm();
        x * (self.flux / (4.0 * PI * r * r * r))
    }

    pub fn pressure(&self, x: Vec3) -> f64 {
        -0.5 * self.velocity(x).norm_squared()
    }

    pub fn jacobian(&self, x: Vec3) -> Mat3 {
        if self.flux == 0.0 {
            return Mat3::zeros();
        }
        let r2 = x.norm_squared();
        let r3 = r2 * r2.sqrt();
        (Mat3::identity() - x * x.transpose() * (3.0 / r2)) * (self.flux / (4.0 * PI * r3))
    }

    pub fn pressure_evaluator(&self) -> OutflowPressure {
        OutflowPressure(*self)
    }
}

impl VectorEvaluator for OutflowField {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        self.velocity(x)
    }
    fn jacobian_at(&self, x: Vec3) -> Option<Mat3> {
        Some(self.jacobian(x))
    }
}

pub struct OutflowPressure(OutflowField);

impl ScalarEvaluator for OutflowPressure {
    fn scalar_at(&self, x: Vec3) -> f64 {
        self.0.pressure(x)
    }
    fn gradient_at(&self, x: Vec3) -> Option<Vec3> {
        // ∇(-½|a|²) = -(∇a)ᵀ a
        Some(-(self.0.jacobian(x).transpose() * self.0.velocity(x)))
    }
}

/// `w = u - a(Φ)`: the part of a field with no net outflow.
pub struct OutflowRemainder<U> {
    pub u: U,
    pub outflow: OutflowField,
}

impl<U: VectorEvaluator> VectorEvaluator for OutflowRemainder<U> {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        self.u.vector_at(x) - self.outflow.velocity(x)
    }
    fn jacobian_at(&self, x: Vec3) -> Option<Mat3> {
        Some(self.u.jacobian_at(x)? - self.outflow.jacobian(x))
    }
}

/// Angular order used by [`split_outflow`].
pub const SPLIT_ORDER: usize = 24;

/// Measures the outflow `Φ` through `|x| = R` and returns `(Φ, u - a(Φ))`.
pub fn split_outflow<U: VectorEvaluator>(u: U, radius: f64) -> Result<(f64, OutflowRemainder<U>)> {
    let phi = outflow(&u, radius, SPLIT_ORDER)?;
    Ok((phi, OutflowRemainder { u, outflow: canonical_outflow_field(phi) }))
}
