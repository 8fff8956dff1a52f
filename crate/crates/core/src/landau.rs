//! Landau jets: closed forms, the force function and its inverse, stream
//! functions, and the family regularized near the origin.
//!
//! Polar angle `θ` is measured from the symmetry axis. In the frame where the
//! axis is `e₃`, with `c = cosθ`,
//!
//! ```text
//! U_r = (2/r) [(A²-1)/(A-c)² - 1],   U_θ = -2 sinθ / (r (A-c)),
//! P   = 4 (A c - 1) / (r² (A-c)²),   ψ   = 2 r sin²θ / (A-c).
//! ```

use std::f64::consts::PI;

use nalgebra::{Rotation3, Unit};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::quadrature::{gauss_legendre, gauss_legendre_interval};
use crate::fields::{Mat3, ScalarEvaluator, Vec3, VectorEvaluator};
use crate::jet::{smoothstep, Jet, Scalar};

/// `A β(A)` tends to this as `A → ∞`.
pub const BETA_LARGE_A_LIMIT: f64 = 16.0 * PI;

/// Magnitude of the force exerted by the Landau jet with parameter `A`.
pub fn beta(a: f64) -> Result<f64> {
    if !(a > 1.0) || a.is_nan() {
        return Err(Error::Domain(format!("A must exceed 1, got {a}")));
    }
    if a.is_infinite() {
        return Ok(0.0);
    }
    let h = if a > 2.0 {
        // A + A²/2 ln((A-1)/(A+1)) + 4A/(3(A²-1)) = Σ_k (4/3 - 1/(2k+1)) A^{1-2k}
        let inv2 = 1.0 / (a * a);
        let mut pow = 1.0 / a;
        let mut sum = 0.0;
        for k in 1..200 {
            let term = (4.0 / 3.0 - 1.0 / (2 * k + 1) as f64) * pow;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            pow *= inv2;
        }
        sum
    } else {
        a - a * a * (1.0 / a).atanh() + 4.0 * a / (3.0 * (a * a - 1.0))
    };
    Ok(16.0 * PI * h)
}

/// Inverse of [`beta`]: the `A > 1` whose jet exerts force `beta_val`.
pub fn gamma(beta_val: f64) -> Result<f64> {
    if !(beta_val > 0.0) || !beta_val.is_finite() {
        return Err(Error::Domain(format!("force magnitude must be positive and finite, got {beta_val}")));
    }
    // Solve ln β(1 + e^s) = ln β* in s = ln(A - 1); β is decreasing so f is too.
    let target = beta_val.ln();
    let f = |s: f64| -> f64 { beta(1.0 + s.exp()).map(|b| b.ln() - target).unwrap_or(f64::NAN) };
    let mut lo = (1e-8f64).ln();
    let mut hi = 9f64.ln();
    let mut flo = f(lo);
    let mut fhi = f(hi);
    let mut expansions = 0;
    while flo < 0.0 {
        lo -= 10f64.ln() * 2.0;
        flo = f(lo);
        expansions += 1;
        if expansions > 60 || !flo.is_finite() {
            return Err(Error::Convergence(format!(
                "could not bracket A for force {beta_val:e}: beta(1 + {:e}) is still smaller",
                lo.exp()
            )));
        }
    }
    while fhi > 0.0 {
        hi += 10f64.ln();
        fhi = f(hi);
        expansions += 1;
        if expansions > 60 || !fhi.is_finite() {
            return Err(Error::Convergence(format!(
                "could not bracket A for force {beta_val:e}: beta(1 + {:e}) is still larger",
                hi.exp()
            )));
        }
    }
    // Illinois false position with bisection fallback.
    let mut side = 0i32;
    for _ in 0..300 {
        if flo == 0.0 {
            return Ok(1.0 + lo.exp());
        }
        if fhi == 0.0 {
            return Ok(1.0 + hi.exp());
        }
        let mut s = (lo * fhi - hi * flo) / (fhi - flo);
        if !(s > lo && s < hi) {
            s = 0.5 * (lo + hi);
        }
        let fs = f(s);
        if fs > 0.0 {
            lo = s;
            flo = fs;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = s;
            fhi = fs;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
        if (hi - lo).abs() <= 1e-15 * (1.0 + lo.abs()) || fs.abs() < 1e-15 {
            return Ok(1.0 + s.exp());
        }
    }
    Err(Error::Convergence(format!(
        "root search for A stalled in [1 + {:e}, 1 + {:e}] (force {beta_val:e})",
        lo.exp(),
        hi.exp()
    )))
}

/// Polar components of a Landau solution in its own frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauPolar {
    pub u_r: f64,
    pub u_theta: f64,
    pub u_phi: f64,
    pub p: f64,
}

pub fn eval_landau_polar(a: f64, r: f64, theta: f64) -> Result<LandauPolar> {
    if !(a > 1.0) {
        return Err(Error::Domain(format!("A must exceed 1, got {a}")));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("theta must lie in [0, pi], got {theta}")));
    }
    let (s, c) = theta.sin_cos();
    let amc = a - c;
    Ok(LandauPolar {
        u_r: 2.0 / r * (2.0 * a * c - c * c - 1.0) / (amc * amc),
        u_theta: -2.0 * s / (r * amc),
        u_phi: 0.0,
        p: 4.0 * (a * c - 1.0) / (r * r * amc * amc),
    })
}

/// The correspondence `b ↔ (A, axis)`. `magnitude == 0` encodes `b = 0`, for which `a` is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LandauParams {
    pub a: f64,
    pub axis: Vec3,
    pub magnitude: f64,
}

impl LandauParams {
    pub fn from_b(b: Vec3) -> Result<Self> {
        let m = b.norm();
        if !m.is_finite() {
            return Err(Error::InvalidInput("force vector must be finite".into()));
        }
        if m == 0.0 {
            return Ok(LandauParams { a: f64::INFINITY, axis: Vec3::z(), magnitude: 0.0 });
        }
        Ok(LandauParams { a: gamma(m)?, axis: b / m, magnitude: m })
    }

    pub fn from_a(a: f64, axis: Vec3) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput("axis must be a nonzero finite vector".into()));
        }
        Ok(LandauParams { a, axis: axis / n, magnitude: beta(a)? })
    }

    pub fn b(&self) -> Vec3 {
        self.axis * self.magnitude
    }

    pub fn is_zero(&self) -> bool {
        self.magnitude == 0.0
    }

    /// Rotation taking `e₃` to the axis.
    pub fn frame(&self) -> Rotation3<f64> {
        frame_for(self.axis)
    }
}

fn frame_for(axis: Vec3) -> Rotation3<f64> {
    let e3 = Vec3::z();
    let d = e3.dot(&axis);
    if d > 1.0 - 1e-15 {
        return Rotation3::identity();
    }
    if d < -1.0 + 1e-15 {
        return Rotation3::from_axis_angle(&Vec3::x_axis(), PI);
    }
    let k = Unit::new_normalize(e3.cross(&axis));
    Rotation3::from_axis_angle(&k, d.clamp(-1.0, 1.0).acos())
}

/// Velocity and pressure in the frame with axis `e₃`, for a radial profile `ρ`.
///
/// `rho` and `rho_p` are `ρ(r)` and `ρ'(r)` already lifted to `S`; the exact
/// jet is `ρ = r`.
fn local_fields<S: Scalar>(a: f64, xi: [S; 3], r: S, rho: S, rho_p: S) -> ([S; 3], S) {
    let inv_r = r.recip();
    let c = xi[2] * inv_r;
    let amc = c * -1.0 + a;
    let inv_amc = amc.recip();
    let g = (c * (2.0 * a) - c * c - 1.0) * inv_amc * inv_amc;
    let k1 = rho * g * inv_r * inv_r * inv_r * 2.0;
    let k2 = rho_p * inv_r * inv_amc * 2.0;
    let mut u = [S::constant(0.0); 3];
    for i in 0..3 {
        let e = c * xi[i] * inv_r;
        u[i] = k1 * xi[i] - k2 * if i == 2 { e - 1.0 } else { e };
    }
    let p = rho * (c * a - 1.0) * inv_r * inv_r * inv_r * inv_amc * inv_amc * 4.0;
    (u, p)
}

fn exact_local<S: Scalar>(a: f64, xi: [S; 3]) -> ([S; 3], S) {
    let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
    local_fields(a, xi, r, r, S::constant(1.0))
}

/// Landau velocity and pressure at `x` for force `b`.
pub fn eval_landau(b: Vec3, x: Vec3) -> Result<(Vec3, f64)> {
    if x.norm() == 0.0 {
        return Err(Error::Singularity);
    }
    let sol = LandauSolution::new(LandauParams::from_b(b)?);
    Ok((sol.velocity(x), sol.pressure(x)))
}

/// Evaluator for the exact Landau solution `(U^b, P^b)`.
#[derive(Debug, Clone)]
pub struct LandauSolution {
    params: LandauParams,
    frame: Rotation3<f64>,
}

impl LandauSolution {
    pub fn new(params: LandauParams) -> Self {
        LandauSolution { frame: params.frame(), params }
    }

    pub fn from_b(b: Vec3) -> Result<Self> {
        Ok(Self::new(LandauParams::from_b(b)?))
    }

    pub fn params(&self) -> &LandauParams {
        &self.params
    }

    pub fn velocity(&self, x: Vec3) -> Vec3 {
        if self.params.is_zero() {
            return Vec3::zeros();
        }
        let xi = self.frame.inverse_transform_vector(&x);
        let (u, _) = exact_local(self.params.a, [xi.x, xi.y, xi.z]);
        self.frame * Vec3::new(u[0], u[1], u[2])
    }

    pub fn pressure(&self, x: Vec3) -> f64 {
        if self.params.is_zero() {
            return 0.0;
        }
        let xi = self.frame.inverse_transform_vector(&x);
        exact_local(self.params.a, [xi.x, xi.y, xi.z]).1
    }

    /// Velocity, Jacobian, Laplacian and pressure gradient from one jet evaluation.
    pub fn derivatives(&self, x: Vec3) -> FieldDerivatives {
        if self.params.is_zero() {
            return FieldDerivatives::default();
        }
        let xi = self.frame.inverse_transform_vector(&x);
        let (u, p) = exact_local(self.params.a, Jet::point([xi.x, xi.y, xi.z]));
        FieldDerivatives::from_local(&self.frame, u, p)
    }

    pub fn pressure_evaluator(&self) -> LandauPressure<'_> {
        LandauPressure(self)
    }
}

impl VectorEvaluator for LandauSolution {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        self.velocity(x)
    }
    fn jacobian_at(&self, x: Vec3) -> Option<Mat3> {
        Some(self.derivatives(x).jacobian)
    }
}

/// Pressure of a [`LandauSolution`] as a scalar evaluator.
pub struct LandauPressure<'a>(&'a LandauSolution);

impl ScalarEvaluator for LandauPressure<'_> {
    fn scalar_at(&self, x: Vec3) -> f64 {
        self.0.pressure(x)
    }
    fn gradient_at(&self, x: Vec3) -> Option<Vec3> {
        Some(self.0.derivatives(x).pressure_gradient)
    }
}

/// Pointwise derivative data in global coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldDerivatives {
    pub velocity: Vec3,
    /// `J[(i, j)] = ∂_j u_i`.
    pub jacobian: Mat3,
    pub laplacian: Vec3,
    pub pressure: f64,
    pub pressure_gradient: Vec3,
}

impl FieldDerivatives {
    fn from_local(frame: &Rotation3<f64>, u: [Jet; 3], p: Jet) -> Self {
        let r = frame.matrix();
        let v = Vec3::new(u[0].v, u[1].v, u[2].v);
        let j = Mat3::from_fn(|i, k| u[i].g[k]);
        let lap = Vec3::new(u[0].laplacian(), u[1].laplacian(), u[2].laplacian());
        FieldDerivatives {
            velocity: r * v,
            jacobian: r * j * r.transpose(),
            laplacian: r * lap,
            pressure: p.v,
            pressure_gradient: r * Vec3::new(p.g[0], p.g[1], p.g[2]),
        }
    }

    /// `-Δu + (u·∇)u + ∇p`.
    pub fn momentum_residual(&self) -> Vec3 {
        -self.laplacian + self.jacobian * self.velocity + self.pressure_gradient
    }
}

/// Stream function derivatives at one `(r, θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamDerivatives {
    pub psi: f64,
    pub d_r: f64,
    pub d_theta: f64,
    pub d_theta_theta: f64,
}

/// An axisymmetric stream function `ψ(r, θ)`.
pub trait StreamFunction {
    fn psi(&self, r: f64, theta: f64) -> f64;

    /// Exact derivatives, if the stream function provides them.
    fn derivatives(&self, _r: f64, _theta: f64) -> Option<StreamDerivatives> {
        None
    }
}

fn sin<S: Scalar>(t: S) -> S {
    let (s, c) = t.value().sin_cos();
    t.chain(s, c, -s)
}

fn cos<S: Scalar>(t: S) -> S {
    let (s, c) = t.value().sin_cos();
    t.chain(c, -s, -c)
}

fn stream_jet<F: Fn(Jet, Jet) -> Jet>(f: F, r: f64, theta: f64) -> StreamDerivatives {
    let v = f(Jet::variable(r, 0), Jet::variable(theta, 1));
    StreamDerivatives { psi: v.v, d_r: v.g[0], d_theta: v.g[1], d_theta_theta: v.h[1][1] }
}

/// `ψ = 2 r sin²θ / (A - cosθ)`.
#[derive(Debug, Clone, Copy)]
pub struct LandauStream {
    pub a: f64,
}

impl LandauStream {
    fn generic<S: Scalar>(&self, r: S, theta: S) -> S {
        let s = sin(theta);
        r * s * s * 2.0 / (cos(theta) * -1.0 + self.a)
    }
}

impl StreamFunction for LandauStream {
    fn psi(&self, r: f64, theta: f64) -> f64 {
        self.generic(r, theta)
    }
    fn derivatives(&self, r: f64, theta: f64) -> Option<StreamDerivatives> {
        Some(stream_jet(|r, t| self.generic(r, t), r, theta))
    }
}

/// Stream function of the linear Stokes flow due to a unit force along `e₃`: `ψ = r sin²θ / (8π)`.
#[derive(Debug, Clone, Copy)]
pub struct StokesletStream;

impl StokesletStream {
    fn generic<S: Scalar>(r: S, theta: S) -> S {
        let s = sin(theta);
        r * s * s / (8.0 * PI)
    }
}

impl StreamFunction for StokesletStream {
    fn psi(&self, r: f64, theta: f64) -> f64 {
        Self::generic(r, theta)
    }
    fn derivatives(&self, r: f64, theta: f64) -> Option<StreamDerivatives> {
        Some(stream_jet(Self::generic, r, theta))
    }
}

/// The force-normalized family `ψ_ε = ψ|_{A=γ(ε)} / ε`.
#[derive(Debug, Clone, Copy)]
pub struct ReynoldsStream {
    pub eps: f64,
    inner: LandauStream,
}

impl ReynoldsStream {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        Ok(ReynoldsStream { eps, inner: LandauStream { a: gamma(eps)? } })
    }
}

impl StreamFunction for ReynoldsStream {
    fn psi(&self, r: f64, theta: f64) -> f64 {
        self.inner.psi(r, theta) / self.eps
    }
    fn derivatives(&self, r: f64, theta: f64) -> Option<StreamDerivatives> {
        let d = self.inner.derivatives(r, theta)?;
        let k = 1.0 / self.eps;
        Some(StreamDerivatives {
            psi: d.psi * k,
            d_r: d.d_r * k,
            d_theta: d.d_theta * k,
            d_theta_theta: d.d_theta_theta * k,
        })
    }
}

/// `ψ̃ = 2 ρ(r) sin²θ / (A - cosθ)`.
#[derive(Debug, Clone, Copy)]
pub struct RegularizedStream {
    pub a: f64,
    pub profile: RegularizationProfile,
}

impl RegularizedStream {
    fn generic<S: Scalar>(&self, r: S, theta: S) -> S {
        let d = self.profile.rho(r.value());
        let s = sin(theta);
        r.chain(d[0], d[1], d[2]) * s * s * 2.0 / (cos(theta) * -1.0 + self.a)
    }
}

impl StreamFunction for RegularizedStream {
    fn psi(&self, r: f64, theta: f64) -> f64 {
        self.generic(r, theta)
    }
    fn derivatives(&self, r: f64, theta: f64) -> Option<StreamDerivatives> {
        Some(stream_jet(|r, t| self.generic(r, t), r, theta))
    }
}

/// Any closure, without derivative information.
pub struct PlainStream<F>(pub F);

impl<F: Fn(f64, f64) -> f64> StreamFunction for PlainStream<F> {
    fn psi(&self, r: f64, theta: f64) -> f64 {
        (self.0)(r, theta)
    }
}

/// `(U_r, U_θ)` of the axisymmetric field generated by `psi`.
///
/// On the axis `U_θ = 0` and `U_r` is the limit `∂²_θψ / (r² cosθ)`.
pub fn velocity_from_stream(psi: &dyn StreamFunction, r: f64, theta: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("theta must lie in [0, pi], got {theta}")));
    }
    let d = psi
        .derivatives(r, theta)
        .ok_or_else(|| Error::InvalidInput("stream function has no derivative evaluators".into()))?;
    let s = theta.sin();
    if s.abs() < 1e-12 {
        return Ok((d.d_theta_theta / (r * r * theta.cos()), 0.0));
    }
    Ok((d.d_theta / (r * r * s), -d.d_r / (r * s)))
}

/// `(1/ε) U^{γ(ε) e₃}(x)`; tends to the Stokeslet as `ε → 0`.
pub fn reynolds_solution(eps: f64, x: Vec3) -> Result<Vec3> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if x.norm() == 0.0 {
        return Err(Error::Singularity);
    }
    let sol = LandauSolution::new(LandauParams { a: gamma(eps)?, axis: Vec3::z(), magnitude: eps });
    Ok(sol.velocity(x) / eps)
}

/// `ρ(r) = r s((r - r₀)/r₀)` with the smooth step `s`: zero below `r₀`, equal to `r` above `2r₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizationProfile {
    pub r0: f64,
}

impl RegularizationProfile {
    pub fn new(r0: f64) -> Result<Self> {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::InvalidConfig(format!("r0 must be positive, got {r0}")));
        }
        Ok(RegularizationProfile { r0 })
    }

    /// `[ρ, ρ', ρ'', ρ''']` at `r`.
    pub fn rho(&self, r: f64) -> [f64; 4] {
        let r0 = self.r0;
        if r <= r0 {
            return [0.0; 4];
        }
        if r >= 2.0 * r0 {
            return [r, 1.0, 0.0, 0.0];
        }
        let s = smoothstep((r - r0) / r0);
        let (d1, d2, d3) = (s[1] / r0, s[2] / (r0 * r0), s[3] / (r0 * r0 * r0));
        [r * s[0], s[0] + r * d1, 2.0 * d1 + r * d2, 3.0 * d2 + r * d3]
    }
}

/// The regularized pair `(Ũ, P̃)`: zero inside `r₀`, equal to `(U^b, P^b)` outside `2r₀`.
#[derive(Debug, Clone)]
pub struct RegularizedLandau {
    exact: LandauSolution,
    profile: RegularizationProfile,
}

impl RegularizedLandau {
    pub fn new(params: LandauParams, profile: RegularizationProfile) -> Self {
        RegularizedLandau { exact: LandauSolution::new(params), profile }
    }

    pub fn from_b(b: Vec3, profile: RegularizationProfile) -> Result<Self> {
        Ok(Self::new(LandauParams::from_b(b)?, profile))
    }

    pub fn params(&self) -> &LandauParams {
        self.exact.params()
    }

    pub fn profile(&self) -> &RegularizationProfile {
        &self.profile
    }

    pub fn exact(&self) -> &LandauSolution {
        &self.exact
    }

    fn local<S: Scalar>(&self, xi: [S; 3]) -> ([S; 3], S) {
        let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        let d = self.profile.rho(r.value());
        local_fields(self.params().a, xi, r, r.chain(d[0], d[1], d[2]), r.chain(d[1], d[2], d[3]))
    }

    fn region(&self, x: &Vec3) -> Region {
        let r = x.norm();
        if self.params().is_zero() || r <= self.profile.r0 {
            Region::Inside
        } else if r >= 2.0 * self.profile.r0 {
            Region::Outside
        } else {
            Region::Blend
        }
    }

    pub fn velocity(&self, x: Vec3) -> Vec3 {
        match self.region(&x) {
            Region::Inside => Vec3::zeros(),
            Region::Outside => self.exact.velocity(x),
            Region::Blend => {
                let f = self.exact.frame;
                let xi = f.inverse_transform_vector(&x);
                let (u, _) = self.local([xi.x, xi.y, xi.z]);
                f * Vec3::new(u[0], u[1], u[2])
            }
        }
    }

    pub fn pressure(&self, x: Vec3) -> f64 {
        match self.region(&x) {
            Region::Inside => 0.0,
            Region::Outside => self.exact.pressure(x),
            Region::Blend => {
                let xi = self.exact.frame.inverse_transform_vector(&x);
                self.local([xi.x, xi.y, xi.z]).1
            }
        }
    }

    pub fn derivatives(&self, x: Vec3) -> FieldDerivatives {
        match self.region(&x) {
            Region::Inside => FieldDerivatives::default(),
            Region::Outside => self.exact.derivatives(x),
            Region::Blend => {
                let f = self.exact.frame;
                let xi = f.inverse_transform_vector(&x);
                let (u, p) = self.local(Jet::point([xi.x, xi.y, xi.z]));
                FieldDerivatives::from_local(&f, u, p)
            }
        }
    }

    /// `F̃ = -ΔŨ + (Ũ·∇)Ũ + ∇P̃`, supported in `r₀ ≤ |x| ≤ 2r₀`.
    pub fn forcing(&self, x: Vec3) -> Vec3 {
        match self.region(&x) {
            Region::Blend => self.derivatives(x).momentum_residual(),
            _ => Vec3::zeros(),
        }
    }

    pub fn pressure_evaluator(&self) -> RegularizedPressure<'_> {
        RegularizedPressure(self)
    }

    pub fn forcing_evaluator(&self) -> RegularizedForcing<'_> {
        RegularizedForcing(self)
    }
}

enum Region {
    Inside,
    Blend,
    Outside,
}

impl VectorEvaluator for RegularizedLandau {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        self.velocity(x)
    }
    fn jacobian_at(&self, x: Vec3) -> Option<Mat3> {
        Some(self.derivatives(x).jacobian)
    }
}

pub struct RegularizedPressure<'a>(&'a RegularizedLandau);

impl ScalarEvaluator for RegularizedPressure<'_> {
    fn scalar_at(&self, x: Vec3) -> f64 {
        self.0.pressure(x)
    }
    fn gradient_at(&self, x: Vec3) -> Option<Vec3> {
        Some(self.0.derivatives(x).pressure_gradient)
    }
}

pub struct RegularizedForcing<'a>(&'a RegularizedLandau);

impl VectorEvaluator for RegularizedForcing<'_> {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        self.0.forcing(x)
    }
}

pub fn regularized_landau(b: Vec3, profile: RegularizationProfile, x: Vec3) -> Result<(Vec3, f64)> {
    let reg = RegularizedLandau::from_b(b, profile)?;
    Ok((reg.velocity(x), reg.pressure(x)))
}

pub fn regularized_forcing(b: Vec3, profile: RegularizationProfile, x: Vec3) -> Result<Vec3> {
    Ok(RegularizedLandau::from_b(b, profile)?.forcing(x))
}

/// `∫ F̃` over the blending annulus; equals `b`.
pub fn forcing_integral(b: Vec3, profile: RegularizationProfile) -> Result<Vec3> {
    let reg = RegularizedLandau::from_b(b, profile)?;
    Ok(reg.forcing_integral_with(16, 8, 32, 8))
}

impl RegularizedLandau {
    /// Product quadrature of `F̃`: `panels × per_panel` radial Gauss nodes, `n_theta × n_phi` angular.
    pub fn forcing_integral_with(&self, panels: usize, per_panel: usize, n_theta: usize, n_phi: usize) -> Vec3 {
        if self.params().is_zero() {
            return Vec3::zeros();
        }
        let r0 = self.profile.r0;
        let f = self.exact.frame;
        let (ct, wt) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut acc = Vec3::zeros();
        for k in 0..panels {
            let a = r0 * (1.0 + k as f64 / panels as f64);
            let b = r0 * (1.0 + (k + 1) as f64 / panels as f64);
            for (r, wr) in gauss_legendre_interval(a, b, per_panel) {
                for (c, w) in ct.iter().zip(&wt) {
                    let s = (1.0 - c * c).sqrt();
                    for j in 0..n_phi {
                        let phi = j as f64 * dphi;
                        let xi = [r * s * phi.cos(), r * s * phi.sin(), r * c];
                        let (u, p) = self.local(Jet::point(xi));
                        let d = FieldDerivatives::from_local(&Rotation3::identity(), u, p);
                        acc += d.momentum_residual() * (wr * r * r * w * dphi);
                    }
                }
            }
        }
        f * acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::fd;

    const BETA2: f64 = 34.766840318785725;

    #[test]
    fn beta_reference_values() {
        assert!((beta(2.0).unwrap() - BETA2).abs() < 1e-12);
        assert!((1e4 * beta(1e4).unwrap() / BETA_LARGE_A_LIMIT - 1.0).abs() < 1e-3);
        assert!(beta(1.0 + 1e-6).unwrap() > 1e6);
        assert!(matches!(beta(1.0), Err(Error::Domain(_))));
        // both branches agree at the switch point
        let a: f64 = 2.0 + 1e-12;
        let closed = 16.0 * PI * (a - a * a * (1.0 / a).atanh() + 4.0 * a / (3.0 * (a * a - 1.0)));
        assert!((beta(a).unwrap() - closed).abs() < 1e-12 * closed);
    }

    #[test]
    fn gamma_inverts_beta() {
        assert!((gamma(BETA2).unwrap() - 2.0).abs() < 1e-10);
        assert!((gamma(0.502655).unwrap() / 100.0 - 1.0).abs() < 0.01);
        assert!(matches!(gamma(-1.0), Err(Error::Domain(_))));
        assert!(gamma(1e9).unwrap() > 1.0);
    }

    #[test]
    fn polar_examples() {
        let p = eval_landau_polar(2.0, 1.0, PI / 2.0).unwrap();
        assert!((p.u_r + 0.5).abs() < 1e-15 && (p.u_theta + 1.0).abs() < 1e-15 && (p.p + 1.0).abs() < 1e-15);
        let p = eval_landau_polar(2.0, 1.0, 0.0).unwrap();
        assert!((p.u_r - 4.0).abs() < 1e-15 && p.u_theta == 0.0 && (p.p - 4.0).abs() < 1e-15);
        let q = eval_landau_polar(2.0, 2.0, PI / 2.0).unwrap();
        assert!((q.u_r + 0.25).abs() < 1e-15 && (q.u_theta + 0.5).abs() < 1e-15 && (q.p + 0.25).abs() < 1e-15);
        assert!(eval_landau_polar(2.0, 0.0, 0.3).is_err());
    }

    #[test]
    fn cartesian_matches_polar() {
        let b = Vec3::z() * BETA2;
        let (u, p) = eval_landau(b, Vec3::z()).unwrap();
        assert!((u - Vec3::new(0.0, 0.0, 4.0)).norm() < 1e-12);
        assert!((p - 4.0).abs() < 1e-12);
        assert_eq!(eval_landau(Vec3::zeros(), Vec3::x()).unwrap(), (Vec3::zeros(), 0.0));
        assert!(matches!(eval_landau(b, Vec3::zeros()), Err(Error::Singularity)));
        let s = crate::fields::SphericalPoint { r: 1.7, theta: 1.1, phi: 0.4 };
        let (er, et, _) = s.basis();
        let (u, _) = eval_landau(b, s.to_cartesian()).unwrap();
        let pol = eval_landau_polar(2.0, 1.7, 1.1).unwrap();
        assert!((u.dot(&er) - pol.u_r).abs() < 1e-12);
        assert!((u.dot(&et) - pol.u_theta).abs() < 1e-12);
    }

    #[test]
    fn exact_solution_has_zero_residual() {
        let sol = LandauSolution::new(LandauParams::from_a(2.0, Vec3::new(1.0, -2.0, 0.5)).unwrap());
        for x in [Vec3::new(0.4, 0.2, -1.0), Vec3::new(3.0, 1.0, 2.0)] {
            let d = sol.derivatives(x);
            assert!(d.momentum_residual().norm() < 1e-12 * (1.0 + d.laplacian.norm()));
            assert!(d.jacobian.trace().abs() < 1e-12);
            let jfd = fd::jacobian(|y| sol.velocity(y), x, 1e-3);
            assert!((jfd - d.jacobian).norm() < 1e-8);
        }
    }

    #[test]
    fn stream_velocity_examples() {
        let (ur, ut) = velocity_from_stream(&LandauStream { a: 2.0 }, 1.0, PI / 2.0).unwrap();
        assert!((ur + 0.5).abs() < 1e-14 && (ut + 1.0).abs() < 1e-14);
        let (ur, ut) = velocity_from_stream(&StokesletStream, 1.0, PI / 2.0).unwrap();
        assert!(ur.abs() < 1e-16 && (ut + 1.0 / (8.0 * PI)).abs() < 1e-15);
        let (ur, _) = velocity_from_stream(&LandauStream { a: 2.0 }, 1.0, 0.0).unwrap();
        assert!((ur - 4.0).abs() < 1e-12);
        let zero = PlainStream(|_, _| 0.0);
        assert!(matches!(velocity_from_stream(&zero, 1.0, 1.0), Err(Error::InvalidInput(_))));
        assert!((LandauStream { a: 2.0 }.psi(1.0, PI / 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn regularization_profile() {
        let p = RegularizationProfile::new(1.0).unwrap();
        assert_eq!(p.rho(0.5), [0.0; 4]);
        assert_eq!(p.rho(2.5), [2.5, 1.0, 0.0, 0.0]);
        for r in [1.1, 1.4, 1.77] {
            let d = p.rho(r);
            for k in 0..3 {
                let num = fd::derivative(|t| p.rho(t)[k], r, 1e-4);
                assert!((num - d[k + 1]).abs() < 1e-5 * (1.0 + num.abs()), "k={k} r={r}");
            }
        }
        assert!(RegularizationProfile::new(0.0).is_err());
    }

    #[test]
    fn regularized_support_and_seams() {
        let profile = RegularizationProfile::new(1.0).unwrap();
        let b = Vec3::z() * BETA2;
        let reg = RegularizedLandau::from_b(b, profile).unwrap();
        let x = Vec3::new(1.0, 2.0, -2.0);
        let (u, p) = eval_landau(b, x).unwrap();
        assert_eq!(reg.velocity(x), u);
        assert_eq!(reg.pressure(x), p);
        assert_eq!(reg.velocity(Vec3::x() * 0.5), Vec3::zeros());
        assert_eq!(reg.forcing(Vec3::x() * 0.5), Vec3::zeros());
        assert!(reg.forcing(Vec3::x() * 3.0).norm() < 1e-10);
        // forcing vs finite-difference residual in the annulus
        let x = Vec3::x() * 1.5;
        let f = reg.forcing(x);
        let (v, j, lap) = fd::vector_stencil(|y| reg.velocity(y), x, 1e-3);
        let gp = fd::gradient(|y| reg.pressure(y), x, 1e-3);
        let f_fd = -lap + j * v + gp;
        assert!(f.norm() > 1.0);
        assert!((f - f_fd).norm() < 1e-6 * f.norm(), "{f} vs {f_fd}");
    }

    #[test]
    fn forcing_integral_recovers_b() {
        let profile = RegularizationProfile::new(1.0).unwrap();
        let b = Vec3::z() * BETA2;
        let i = forcing_integral(b, profile).unwrap();
        assert!((i - b).norm() < 1e-3 * BETA2, "{i}");
        assert_eq!(forcing_integral(Vec3::zeros(), profile).unwrap(), Vec3::zeros());
    }
}
