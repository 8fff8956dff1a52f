//! Extension of an exterior solution on `|x| > R₀` to all of `R³`.
//!
//! `ũ = η u + v` where `η` is a radial cutoff that switches on between `2R₀`
//! and `2.5R₀` and `v` solves `div v = -u·∇η` with support in `B_{2.5R₀}`.
//! The forcing `f = -Δũ + (ũ·∇)ũ + ∇p̃` is then supported in `B_{2.5R₀}`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::quadrature::gauss_legendre_interval;
use crate::fields::{
    fd, GradedGrid, Mat3, SampledField, SampledScalarField, SampledVectorField, ScalarEvaluator, Vec3,
    VectorEvaluator,
};
use crate::flux::outflow;
use crate::jet::smoothstep;

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    gauss_legendre_interval(-1.0, 1.0, n)
}

/// Cutoff plateaus in units of `R₀`.
pub const CUTOFF_START: f64 = 2.0;
pub const CUTOFF_END: f64 = 2.5;
/// Support radius of the Bogovskii averaging weight, in units of `R₀`.
pub const MOLLIFIER_RADIUS: f64 = 2.0;

/// `η(r) = s((r/R₀ - 2)/0.5)`: zero for `r ≤ 2R₀`, one for `r ≥ 2.5R₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialCutoff {
    r0: f64,
}

impl RadialCutoff {
    pub fn new(r0: f64) -> Result<Self> {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::InvalidConfig(format!("R0 must be positive, got {r0}")));
        }
        Ok(RadialCutoff { r0 })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// `[η, η', η'', η''']` in `r`.
    pub fn derivatives(&self, r: f64) -> [f64; 4] {
        let width = (CUTOFF_END - CUTOFF_START) * self.r0;
        let s = smoothstep((r / self.r0 - CUTOFF_START) / (CUTOFF_END - CUTOFF_START));
        [s[0], s[1] / width, s[2] / (width * width), s[3] / (width * width * width)]
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivatives(r)[0]
    }

    pub fn gradient(&self, x: Vec3) -> Vec3 {
        let r = x.norm();
        if r <= CUTOFF_START * self.r0 || r >= CUTOFF_END * self.r0 {
            return Vec3::zeros();
        }
        x * (self.derivatives(r)[1] / r)
    }
}

pub fn radial_cutoff_eta(r0: f64, r: f64) -> Result<f64> {
    Ok(RadialCutoff::new(r0)?.value(r))
}

// ---------------------------------------------------------------------------

/// Normalized smooth bump `c exp(-1/(1-|y|²/a²))` supported in `B_a`.
#[derive(Debug, Clone, Copy)]
struct Mollifier {
    radius: f64,
    scale: f64,
}

impl Mollifier {
    fn new(radius: f64) -> Self {
        let mass: f64 = gauss_legendre(96)
            .into_iter()
            .map(|(t, w)| {
                let t = 0.5 * (t + 1.0);
                0.5 * w * 4.0 * PI * t * t * (-1.0 / (1.0 - t * t)).exp()
            })
            .sum();
        Mollifier { radius, scale: 1.0 / (mass * radius.powi(3)) }
    }

    #[inline]
    fn value(&self, y: Vec3) -> f64 {
        let t2 = y.norm_squared() / (self.radius * self.radius);
        if t2 >= 1.0 {
            0.0
        } else {
            self.scale * (-1.0 / (1.0 - t2)).exp()
        }
    }
}

/// Quadrature orders for [`BogovskiiOperator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BogovskiiResolution {
    /// Gauss nodes in the cosine of the cone angle when `x` is outside the mollifier ball.
    pub cone_polar: usize,
    pub cone_azimuth: usize,
    /// Gauss nodes in `cos θ` over the full sphere when `x` is inside it.
    pub sphere_polar: usize,
    pub sphere_azimuth: usize,
    /// Gauss nodes on each chord through the mollifier ball.
    pub chord: usize,
    /// Gauss nodes on each ray segment through the support of the datum.
    pub ray: usize,
}

impl Default for BogovskiiResolution {
    fn default() -> Self {
        BogovskiiResolution { cone_polar: 10, cone_azimuth: 20, sphere_polar: 16, sphere_azimuth: 32, chord: 16, ray: 20 }
    }
}

/// The explicit solution operator of `div v = g` on a ball, star-shaped with
/// respect to a smaller concentric ball carrying the averaging weight `ω`:
///
/// ```text
/// v(x) = ∫ g(y) (x-y)/|x-y|³ ∫_{|x-y|}^∞ ω(y + s(x-y)/|x-y|) s² ds dy.
/// ```
///
/// In polar coordinates about `x` this is
/// `v(x) = ∫_{S²} e [W₀G₂ + 2W₁G₁ + W₂G₀] dσ(e)` with
/// `W_k = ∫₀^∞ ω(x+se) s^k ds` and `G_k = ∫₀^∞ g(x-ρe) ρ^k dρ`.
/// Only directions whose forward ray meets the support of `ω` contribute.
#[derive(Debug, Clone)]
pub struct BogovskiiOperator {
    mollifier: Mollifier,
    inner: f64,
    outer: f64,
    cone: Vec<(f64, f64)>,
    sphere: Vec<(f64, f64)>,
    cone_azimuth: usize,
    sphere_azimuth: usize,
    chord: Vec<(f64, f64)>,
    ray: Vec<(f64, f64)>,
}

fn orthonormal_pair(c: Vec3) -> (Vec3, Vec3) {
    let helper = if c.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let p = c.cross(&helper).normalize();
    let q = c.cross(&p);
    (p, q)
}

impl BogovskiiOperator {
    /// `ω` lives in `B_{mollifier_radius}`; the datum in `inner ≤ |y| ≤ outer`.
    pub fn new(mollifier_radius: f64, inner: f64, outer: f64, res: BogovskiiResolution) -> Result<Self> {
        if !(mollifier_radius > 0.0) || !(outer > mollifier_radius) || !(inner >= 0.0) || !(inner < outer) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < mollifier radius < outer and 0 ≤ inner < outer, got {mollifier_radius}, {inner}, {outer}"
            )));
        }
        if [res.cone_polar, res.cone_azimuth, res.sphere_polar, res.sphere_azimuth, res.chord, res.ray]
            .iter()
            .any(|&n| n < 2)
        {
            return Err(Error::InvalidConfig("Bogovskii quadrature orders must be at least 2".into()));
        }
        Ok(BogovskiiOperator {
            mollifier: Mollifier::new(mollifier_radius),
            inner,
            outer,
            cone: gauss_legendre(res.cone_polar),
            sphere: gauss_legendre(res.sphere_polar),
            cone_azimuth: res.cone_azimuth,
            sphere_azimuth: res.sphere_azimuth,
            chord: gauss_legendre(res.chord),
            ray: gauss_legendre(res.ray),
        })
    }

    /// The operator used for extensions from `|x| > R₀`.
    pub fn for_extension(r0: f64) -> Result<Self> {
        Self::new(MOLLIFIER_RADIUS * r0, CUTOFF_START * r0, CUTOFF_END * r0, BogovskiiResolution::default())
    }

    pub fn support_radius(&self) -> f64 {
        self.outer
    }

    fn moments_w(&self, x: Vec3, e: Vec3) -> [f64; 3] {
        let a = self.mollifier.radius;
        let b = x.dot(&e);
        let disc = b * b - x.norm_squared() + a * a;
        if disc <= 0.0 {
            return [0.0; 3];
        }
        let d = disc.sqrt();
        let (lo, hi) = ((-b - d).max(0.0), -b + d);
        if hi <= lo {
            return [0.0; 3];
        }
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut w = [0.0; 3];
        for &(t, wt) in &self.chord {
            let s = mid + half * t;
            let o = self.mollifier.value(x + e * s) * wt * half;
            w[0] += o;
            w[1] += o * s;
            w[2] += o * s * s;
        }
        w
    }

    /// `ρ ≥ 0` intervals where `inner ≤ |x - ρe| ≤ outer`.
    fn ray_segments(&self, x: Vec3, e: Vec3) -> ([(f64, f64); 2], usize) {
        let b = x.dot(&e);
        let c = x.norm_squared();
        let mut out = [(0.0, 0.0); 2];
        let disc_o = b * b - c + self.outer * self.outer;
        if disc_o <= 0.0 {
            return (out, 0);
        }
        let d_o = disc_o.sqrt();
        let (o_lo, o_hi) = ((b - d_o).max(0.0), b + d_o);
        if o_hi <= o_lo {
            return (out, 0);
        }
        let disc_i = b * b - c + self.inner * self.inner;
        if self.inner == 0.0 || disc_i <= 0.0 {
            out[0] = (o_lo, o_hi);
            return (out, 1);
        }
        let d_i = disc_i.sqrt();
        let (i_lo, i_hi) = (b - d_i, b + d_i);
        let mut n = 0;
        for (lo, hi) in [(o_lo, o_hi.min(i_lo)), (o_lo.max(i_hi), o_hi)] {
            if hi > lo {
                out[n] = (lo, hi);
                n += 1;
            }
        }
        (out, n)
    }

    fn moments_g<G: Fn(Vec3) -> f64>(&self, g: &G, x: Vec3, e: Vec3) -> [f64; 3] {
        let (segs, n) = self.ray_segments(x, e);
        let mut m = [0.0; 3];
        for &(lo, hi) in &segs[..n] {
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for &(t, wt) in &self.ray {
                let rho = mid + half * t;
                let v = g(x - e * rho) * wt * half;
                m[0] += v;
                m[1] += v * rho;
                m[2] += v * rho * rho;
            }
        }
        m
    }

    /// `v(x)`; exactly zero outside the support ball.
    pub fn apply<G: Fn(Vec3) -> f64>(&self, g: &G, x: Vec3) -> Vec3 {
        let r = x.norm();
        if r >= self.outer {
            return Vec3::zeros();
        }
        let a = self.mollifier.radius;
        let (axis, mu_lo, nodes, n_az) = if r > a {
            let sin_max = a / r;
            (-x / r, (1.0 - sin_max * sin_max).sqrt(), &self.cone, self.cone_azimuth)
        } else {
            (Vec3::z(), -1.0, &self.sphere, self.sphere_azimuth)
        };
        let (p, q) = orthonormal_pair(axis);
        let (mid, half) = (0.5 * (1.0 + mu_lo), 0.5 * (1.0 - mu_lo));
        let dphi = 2.0 * PI / n_az as f64;
        let mut acc = Vec3::zeros();
        for &(t, wt) in nodes {
            let mu = mid + half * t;
            let st = (1.0 - mu * mu).max(0.0).sqrt();
            for k in 0..n_az {
                let phi = (k as f64 + 0.5) * dphi;
                let e = axis * mu + (p * phi.cos() + q * phi.sin()) * st;
                let w = self.moments_w(x, e);
                if w[0] == 0.0 {
                    continue;
                }
                let gm = self.moments_g(g, x, e);
                let s = w[0] * gm[2] + 2.0 * w[1] * gm[1] + w[2] * gm[0];
                acc += e * (s * wt * half * dphi);
            }
        }
        acc
    }

    /// `∫ g` over the support shell, by Gauss rules in `r` and on the sphere.
    pub fn mean<G: Fn(Vec3) -> f64 + Sync>(&self, g: &G) -> f64 {
        let radial = gauss_legendre_interval(self.inner, self.outer, 48);
        let sphere = crate::fields::quadrature::SphereRule::of_order(32);
        radial
            .par_iter()
            .map(|&(r, wr)| sphere.iter().map(|(e, ws)| ws * g(e * r)).sum::<f64>() * wr * r * r)
            .sum()
    }
}

/// Solves `div v = g` for sampled `g` supported in `B_R`, returning `v` on the same grid.
pub fn bogovskii_solve(g: &SampledScalarField, support_radius: f64, tol: f64) -> Result<SampledVectorField> {
    let grid = g.grid().clone();
    let peak = g.max_magnitude();
    if peak == 0.0 {
        return Ok(SampledField::zeros(grid, 3.0));
    }
    if support_radius > grid.r_max() {
        return Err(Error::Domain("support radius exceeds the grid".into()));
    }
    for (x, v) in grid.points().iter().zip(g.values()) {
        if x.norm() > support_radius && v.abs() > 1e-12 * peak {
            return Err(Error::Domain(format!("datum is nonzero at |x| = {} outside B_{support_radius}", x.norm())));
        }
    }
    let mean = g.integral();
    let l1 = g.l1();
    if mean.abs() > tol * l1 {
        return Err(Error::IncompatibleDatum { mean, l1 });
    }
    let axes = grid.axes();
    let values = g.values();
    let eval = |y: Vec3| if y.norm() > support_radius { 0.0 } else { axes.interpolate(values, 0.0, y) };
    let op = BogovskiiOperator::new(0.5 * support_radius, 0.0, support_radius, BogovskiiResolution::default())?;
    let out = grid.points().par_iter().map(|x| op.apply(&eval, *x)).collect();
    SampledField::new(grid, out, 3.0)
}

// ---------------------------------------------------------------------------

/// A solution known on `|x| > R₀`, with its decay constant `C∗`.
#[derive(Debug, Clone)]
pub struct ExteriorSolutionSample<U, P> {
    pub r0: f64,
    pub c_star: f64,
    pub u: U,
    pub p: P,
}

impl<U: VectorEvaluator, P: ScalarEvaluator> ExteriorSolutionSample<U, P> {
    pub fn new(r0: f64, c_star: f64, u: U, p: P) -> Result<Self> {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(Error::InvalidConfig(format!("R0 must be positive, got {r0}")));
        }
        if !(c_star > 0.0) || !c_star.is_finite() {
            return Err(Error::InvalidConfig(format!("C* must be positive, got {c_star}")));
        }
        Ok(ExteriorSolutionSample { r0, c_star, u, p })
    }

    /// `max |u(x)|(R₀ + |x|)` over random points with `R₀ < |x| < 20R₀`.
    pub fn measure_decay_constant(r0: f64, u: &U, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                let dir = loop {
                    let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    let n = d.norm();
                    if n > 1e-3 && n <= 1.0 {
                        break d / n;
                    }
                };
                let r = r0 * (1.0 + 19.0 * rng.gen::<f64>()).max(1.0 + 1e-9);
                u.vector_at(dir * r).norm() * (r0 + r)
            })
            .fold(0.0, f64::max)
    }

    /// Checks `|u|(R₀+|x|) ≤ C∗(1 + slack)` on a random cloud; returns the measured ratio to `C∗`.
    pub fn check_decay(&self, samples: usize, seed: u64, slack: f64) -> Result<f64> {
        let ratio = Self::measure_decay_constant(self.r0, &self.u, samples, seed) / self.c_star;
        if ratio > 1.0 + slack {
            return Err(Error::Precondition(format!("|u|(R0+|x|) reaches {ratio} C*")));
        }
        Ok(ratio)
    }
}

/// `ũ = η u + v`.
pub struct ExtendedVelocity<'a, U: ?Sized> {
    u: &'a U,
    cutoff: RadialCutoff,
    bogovskii: BogovskiiOperator,
}

impl<U: VectorEvaluator + ?Sized> ExtendedVelocity<'_, U> {
    /// `-u·∇η`, the datum of the divergence problem.
    pub fn datum(&self, y: Vec3) -> f64 {
        let grad = self.cutoff.gradient(y);
        if grad == Vec3::zeros() {
            0.0
        } else {
            -self.u.vector_at(y).dot(&grad)
        }
    }

    /// The divergence correction `v` alone.
    pub fn correction(&self, x: Vec3) -> Vec3 {
        self.bogovskii.apply(&|y| self.datum(y), x)
    }

    pub fn cutoff(&self) -> &RadialCutoff {
        &self.cutoff
    }

    pub fn with_resolution(self, res: BogovskiiResolution) -> Result<Self> {
        let r0 = self.cutoff.r0();
        let bogovskii = BogovskiiOperator::new(MOLLIFIER_RADIUS * r0, CUTOFF_START * r0, CUTOFF_END * r0, res)?;
        Ok(ExtendedVelocity { bogovskii, ..self })
    }
}

impl<U: VectorEvaluator + ?Sized> VectorEvaluator for ExtendedVelocity<'_, U> {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        let r = x.norm();
        let r0 = self.cutoff.r0();
        if r >= CUTOFF_END * r0 {
            return self.u.vector_at(x);
        }
        let v = self.correction(x);
        if r <= CUTOFF_START * r0 {
            v
        } else {
            self.u.vector_at(x) * self.cutoff.value(r) + v
        }
    }

    fn jacobian_at(&self, x: Vec3) -> Option<Mat3> {
        if x.norm() >= CUTOFF_END * self.cutoff.r0() {
            self.u.jacobian_at(x)
        } else {
            None
        }
    }
}

/// Relative outflow (against `4πR C∗`) accepted as zero.
pub const OUTFLOW_TOLERANCE: f64 = 1e-8;

/// Builds `ũ`; the exterior field must carry no flux through spheres.
pub fn extend_velocity<U: VectorEvaluator, P>(sol: &ExteriorSolutionSample<U, P>) -> Result<ExtendedVelocity<'_, U>> {
    let radius = CUTOFF_START * sol.r0;
    let phi = outflow(&sol.u, radius, 32)?;
    let scale = 4.0 * PI * radius * sol.c_star / (sol.r0 + radius);
    if phi.abs() > OUTFLOW_TOLERANCE * scale {
        return Err(Error::Precondition(format!(
            "exterior field has outflow {phi:.6e}; split it off with split_outflow before extending"
        )));
    }
    Ok(ExtendedVelocity {
        u: &sol.u,
        cutoff: RadialCutoff::new(sol.r0)?,
        bogovskii: BogovskiiOperator::for_extension(sol.r0)?,
    })
}

/// `p̃ = η p`.
pub struct ExtendedPressure<'a, P: ?Sized> {
    p: &'a P,
    cutoff: RadialCutoff,
}

impl<P: ScalarEvaluator + ?Sized> ScalarEvaluator for ExtendedPressure<'_, P> {
    fn scalar_at(&self, x: Vec3) -> f64 {
        let r = x.norm();
        let r0 = self.cutoff.r0();
        if r >= CUTOFF_END * r0 {
            self.p.scalar_at(x)
        } else if r <= CUTOFF_START * r0 {
            0.0
        } else {
            self.cutoff.value(r) * self.p.scalar_at(x)
        }
    }

    fn gradient_at(&self, x: Vec3) -> Option<Vec3> {
        let r = x.norm();
        let r0 = self.cutoff.r0();
        if r >= CUTOFF_END * r0 {
            self.p.gradient_at(x)
        } else if r <= CUTOFF_START * r0 {
            Some(Vec3::zeros())
        } else {
            let gp = self.p.gradient_at(x)?;
            Some(gp * self.cutoff.value(r) + self.cutoff.gradient(x) * self.p.scalar_at(x))
        }
    }
}

pub fn extend_pressure<U, P: ScalarEvaluator>(sol: &ExteriorSolutionSample<U, P>) -> Result<ExtendedPressure<'_, P>> {
    Ok(ExtendedPressure { p: &sol.p, cutoff: RadialCutoff::new(sol.r0)? })
}

/// `f = -Δũ + (ũ·∇)ũ + ∇p̃` by fourth-order differences with step `h`.
///
/// Nodes farther than `support + 2h` from the origin, where the stencil only
/// sees the exterior solution, are set to zero.
pub fn compute_forcing<U, P>(
    u_tilde: &U,
    p_tilde: &P,
    grid: &Arc<GradedGrid>,
    h: f64,
    support: Option<f64>,
) -> Result<SampledVectorField>
where
    U: VectorEvaluator + ?Sized,
    P: ScalarEvaluator + ?Sized,
{
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("step must be positive, got {h}")));
    }
    let cut = support.map(|s| s + 2.0 * h).unwrap_or(f64::INFINITY);
    let values = grid
        .points()
        .par_iter()
        .map(|x| {
            if x.norm() > cut {
                return Vec3::zeros();
            }
            let (u, jac, lap) = fd::vector_stencil(|y| u_tilde.vector_at(y), *x, h);
            let gp = p_tilde.gradient_at(*x).unwrap_or_else(|| fd::gradient(|y| p_tilde.scalar_at(y), *x, h));
            -lap + jac * u + gp
        })
        .collect();
    SampledField::new(grid.clone(), values, 4.0)
}
