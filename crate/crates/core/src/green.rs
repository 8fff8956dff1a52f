//! The Stokes Green tensor and the volume convolutions built on it.
//!
//! ```text
//! G_ij(x) = (δ_ij/|x| + x_i x_j/|x|³) / 8π,     Q_j(x) = x_j / (4π|x|³),
//! ```
//!
//! so that `-ΔG_{·j} + ∇Q_j = e_j δ` and `div G_{·j} = 0`.
//!
//! Convolutions are direct sums over the nodes of a graded grid. Each source
//! node stands for a ball of the same volume as its quadrature cell; pairs
//! closer than [`NEAR_FACTOR`] cell radii use the kernel averaged over that
//! ball, which is known in closed form. The weakly singular gradient and
//! Calderón–Zygmund kernels are applied in subtracted form,
//! `∫K(x-y)M(y) = ∫K(x-y)(M(y)-M(x)) + M(x)∫_{B_R}K(x-y)`, with the last
//! integral done analytically. Mass beyond the grid is not summed; its size is
//! bounded from the field's power-law tail and returned as an error bar.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::quadrature::gauss_legendre_interval;
use crate::fields::{
    outer, FieldValue, GradedGrid, Mat3, SampledField, SampledScalarField, SampledTensorField,
    SampledVectorField, ScalarEvaluator, Vec3, VectorEvaluator,
};

/// Pairs closer than this many source cell radii use cell-averaged kernels.
pub const NEAR_FACTOR: f64 = 3.0;

const INV_8PI: f64 = 1.0 / (8.0 * PI);
const INV_4PI: f64 = 1.0 / (4.0 * PI);

pub fn oseen_tensor(x: Vec3) -> Result<Mat3> {
    let r2 = x.norm_squared();
    if r2 == 0.0 {
        return Err(Error::Singularity);
    }
    let r = r2.sqrt();
    Ok((Mat3::identity() / r + outer(&x, &x) / (r2 * r)) * INV_8PI)
}

pub fn pressure_kernel(x: Vec3) -> Result<Vec3> {
    let r2 = x.norm_squared();
    if r2 == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(x * (INV_4PI / (r2 * r2.sqrt())))
}

/// `∂_k G_ij` as `grad[k][(i, j)]`.
pub fn oseen_gradient(x: Vec3) -> Result<[Mat3; 3]> {
    let r2 = x.norm_squared();
    if r2 == 0.0 {
        return Err(Error::Singularity);
    }
    let r3 = r2 * r2.sqrt();
    let mut out = [Mat3::zeros(); 3];
    for (k, m) in out.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                m[(i, j)] = INV_8PI
                    * ((-d(i, j) * x[k] + d(i, k) * x[j] + d(j, k) * x[i]) / r3
                        - 3.0 * x[i] * x[j] * x[k] / (r3 * r2));
            }
        }
    }
    Ok(out)
}

/// Kernel data at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub g: Mat3,
    pub grad_g: [Mat3; 3],
    pub q: Vec3,
}

pub fn kernel_value(x: Vec3) -> Result<KernelValue> {
    Ok(KernelValue { g: oseen_tensor(x)?, grad_g: oseen_gradient(x)?, q: pressure_kernel(x)? })
}

/// Velocity of a unit point force along `e₃`: the third column of `G`.
pub fn stokeslet_velocity(x: Vec3) -> Result<Vec3> {
    Ok(oseen_tensor(x)?.column(2).into_owned())
}

/// The Stokeslet `G e₃` with exact gradients; its pressure is [`StokesletPressure`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Stokeslet;

impl VectorEvaluator for Stokeslet {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        stokeslet_velocity(x).unwrap_or(Vec3::repeat(f64::NAN))
    }
    fn jacobian_at(&self, x: Vec3) -> Option<Mat3> {
        let g = oseen_gradient(x).ok()?;
        Some(Mat3::from_fn(|i, k| g[k][(i, 2)]))
    }
}

/// `Q_3(x) = x_3 / (4π|x|³)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StokesletPressure;

impl ScalarEvaluator for StokesletPressure {
    fn scalar_at(&self, x: Vec3) -> f64 {
        pressure_kernel(x).map(|q| q.z).unwrap_or(f64::NAN)
    }
    fn gradient_at(&self, x: Vec3) -> Option<Vec3> {
        let r2 = x.norm_squared();
        if r2 == 0.0 {
            return None;
        }
        let r3 = r2 * r2.sqrt();
        Some((Vec3::z() - x * (3.0 * x.z / r2)) * (INV_4PI / r3))
    }
}

// ---------------------------------------------------------------------------
// Contracted kernels. `a` is the source cell radius, `vol` its ball volume.

#[inline]
fn ball_volume(a: f64) -> f64 {
    4.0 / 3.0 * PI * a * a * a
}

/// `Σ_j G_ij(d) h_j`, averaged over the source ball when near.
#[inline]
fn green_apply(d: Vec3, a: f64, h: &Vec3) -> Vec3 {
    let r2 = d.norm_squared();
    let a2 = a * a;
    let dh = d.dot(h);
    if r2 < a2 {
        return (h * (a2 / 3.0 - 2.0 / 15.0 * r2) + d * (dh / 15.0)) / ball_volume(a);
    }
    let r = r2.sqrt();
    let mut v = (h + d * (dh / r2)) * (INV_8PI / r);
    if r2 < NEAR_FACTOR * NEAR_FACTOR * a2 {
        let r5 = r2 * r2 * r;
        v -= (d * (3.0 * dh) - h * r2) * (a2 / (40.0 * PI * r5));
    }
    v
}

/// `Σ_j Q_j(d) h_j`.
#[inline]
fn pressure_apply(d: Vec3, a: f64, h: &Vec3) -> f64 {
    let r2 = d.norm_squared();
    if r2 < a * a {
        return d.dot(h) / 3.0 / ball_volume(a);
    }
    d.dot(h) * INV_4PI / (r2 * r2.sqrt())
}

/// `Σ_jk ∂_k G_ij(d) M_jk`.
#[inline]
fn grad_green_apply(d: Vec3, a: f64, m: &Mat3) -> Vec3 {
    let r2 = d.norm_squared();
    let a2 = a * a;
    let md = m * d;
    let mtd = m.tr_mul(&d);
    let tr = m.trace();
    if r2 < a2 {
        return (md * (-4.0 / 15.0) + (mtd + d * tr) / 15.0) / ball_volume(a);
    }
    let r = r2.sqrt();
    let r3 = r2 * r;
    let dmd = d.dot(&md);
    let mut v = (-md + mtd + d * (tr - 3.0 * dmd / r2)) * (INV_8PI / r3);
    if r2 < NEAR_FACTOR * NEAR_FACTOR * a2 {
        let r5 = r3 * r2;
        let r7 = r5 * r2;
        let corr = (mtd * 3.0 + d * (3.0 * tr) - md * 2.0) / r5 - (d * (3.0 * dmd) - md * r2) * (5.0 / r7);
        v -= corr * (a2 / (40.0 * PI));
    }
    v
}

/// `Σ_jk K_jk(d) M_jk` with the Calderón–Zygmund kernel `K = (3dd - |d|²I)/(4π|d|⁵)`.
#[inline]
fn stress_pressure_apply(d: Vec3, a: f64, m: &Mat3) -> f64 {
    let r2 = d.norm_squared();
    if r2 < a * a {
        return 0.0;
    }
    let r5 = r2 * r2 * r2.sqrt();
    (3.0 * d.dot(&(m * d)) - r2 * m.trace()) * INV_4PI / r5
}

// ---------------------------------------------------------------------------
// Sources and tails.

struct Sources<T> {
    pos: Vec<Vec3>,
    weight: Vec<f64>,
    radius: Vec<f64>,
    value: Vec<T>,
}

impl<T: FieldValue> Sources<T> {
    fn from_field(field: &SampledField<T>, nonzero_only: bool) -> Self {
        let g = field.grid();
        let mut s = Sources { pos: Vec::new(), weight: Vec::new(), radius: Vec::new(), value: Vec::new() };
        for i in 0..g.len() {
            let v = field.values()[i];
            if nonzero_only && v.magnitude() == 0.0 {
                continue;
            }
            s.pos.push(g.points()[i]);
            s.weight.push(g.weights()[i]);
            s.radius.push(g.cell_radius()[i]);
            s.value.push(v);
        }
        s
    }

    #[inline]
    fn sum<O: FieldValue, F: Fn(Vec3, f64, &T) -> O>(&self, x: Vec3, kernel: F) -> O {
        let mut acc = O::zero();
        for k in 0..self.pos.len() {
            let c = kernel(x - self.pos[k], self.radius[k], &self.value[k]);
            acc = acc.plus(&c.scaled(self.weight[k]));
        }
        acc
    }

    #[inline]
    fn sum_subtracted<O: FieldValue, F: Fn(Vec3, f64, &T) -> O>(&self, x: Vec3, at_x: &T, kernel: F) -> O {
        let mut acc = O::zero();
        for k in 0..self.pos.len() {
            let dv = self.value[k].minus(at_x);
            let c = kernel(x - self.pos[k], self.radius[k], &dv);
            acc = acc.plus(&c.scaled(self.weight[k]));
        }
        acc
    }
}

/// `∫_{|y|>R} |y|^{-τ} |x-y|^{-m} dy` for `|x| = t < R`, `m ∈ {2, 3}`.
fn tail_integral(t: f64, big_r: f64, tau: f64, m: u32) -> f64 {
    if t >= big_r {
        return f64::INFINITY;
    }
    let p = tau + m as f64 - 3.0;
    // r = R v^{-1/p} makes the integrand bounded in v
    gauss_legendre_interval(0.0, 1.0, 32)
        .into_iter()
        .map(|(v, w)| {
            let r = big_r * v.powf(-1.0 / p);
            let dr = big_r / p * v.powf(-1.0 / p - 1.0);
            let ang = match m {
                2 => {
                    if t < 1e-12 * r {
                        4.0 * PI / (r * r)
                    } else {
                        2.0 * PI / (r * t) * ((r + t) / (r - t)).ln()
                    }
                }
                _ => 4.0 * PI / (r * (r * r - t * t)),
            };
            w * r.powf(2.0 - tau) * ang * dr
        })
        .sum()
}

/// Bound on `|Σ_jk ∂_kG_ij M_jk|` per unit `|M| / |d|²`.
const GRAD_GREEN_BOUND: f64 = (3.0 + 1.732_050_807_568_877_2 + 3.0) * INV_8PI;
/// Bound on `|Σ_jk K_jk M_jk|` per unit `|M| / |d|³`.
const STRESS_BOUND: f64 = (3.0 + 1.732_050_807_568_877_2) * INV_4PI;

fn check_whole_ball(grid: &GradedGrid) -> Result<()> {
    if grid.has_core() {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "singular convolutions need a grid that covers the whole ball (include_core)".into(),
        ))
    }
}

fn tail_errors<T: FieldValue>(
    field: &SampledField<T>,
    targets: &[Vec3],
    m: u32,
    bound: f64,
) -> Result<Vec<f64>> {
    let c = field.tail_constant();
    if c == 0.0 {
        return Ok(vec![0.0; targets.len()]);
    }
    let tau = field.tail_exponent();
    let required = 3.0 - m as f64;
    if tau <= required {
        return Err(Error::DivergentTail { exponent: tau, required });
    }
    let big_r = field.grid().r_max();
    Ok(targets.par_iter().map(|x| bound * c * tail_integral(x.norm(), big_r, tau, m)).collect())
}

/// Values of a convolution at arbitrary points, with the bound on the omitted tail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Convolution<T> {
    pub values: Vec<T>,
    pub tail_error: Vec<f64>,
}

impl<T> Convolution<T> {
    pub fn max_tail_error(&self) -> f64 {
        self.tail_error.iter().copied().fold(0.0, f64::max)
    }
}

fn values_at<T: FieldValue>(field: &SampledField<T>, targets: &[Vec3]) -> Vec<T> {
    let g = field.grid();
    if targets.as_ptr() == g.points().as_ptr() && targets.len() == g.len() {
        return field.values().to_vec();
    }
    let axes = g.axes();
    targets
        .par_iter()
        .map(|x| {
            if x.norm() > g.r_max() {
                T::zero()
            } else {
                axes.interpolate(field.values(), field.tail_exponent(), *x)
            }
        })
        .collect()
}

/// `Σ_jk ∫ ∂_k G_ij(x-y) M_jk(y) dy`, i.e. `G ∗ div M`.
pub fn convolve_grad_green(m: &SampledTensorField, targets: &[Vec3]) -> Result<Convolution<Vec3>> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("no target points".into()));
    }
    let tail_error = tail_errors(m, targets, 2, GRAD_GREEN_BOUND)?;
    if m.max_magnitude() == 0.0 {
        return Ok(Convolution { values: vec![Vec3::zeros(); targets.len()], tail_error });
    }
    check_whole_ball(m.grid())?;
    let big_r = m.grid().r_max();
    let all = Sources::from_field(m, false);
    let support = Sources::from_field(m, true);
    let m_x = values_at(m, targets);
    let values = targets
        .par_iter()
        .zip(m_x.par_iter())
        .map(|(x, mx)| {
            if x.norm() >= big_r {
                return support.sum(*x, grad_green_apply);
            }
            if mx.magnitude() == 0.0 {
                return support.sum(*x, grad_green_apply);
            }
            let inner = all.sum_subtracted(*x, mx, grad_green_apply);
            // ∫_{B_R} ∂_k G_ij(x-y) dy = -(4/15) δ_ij x_k + (δ_ik x_j + δ_jk x_i)/15
            let ball = mx * x * (-4.0 / 15.0) + (mx.tr_mul(x) + x * mx.trace()) / 15.0;
            inner + ball
        })
        .collect();
    Ok(Convolution { values, tail_error })
}

/// `PV ∫ K(x-y) : M(y) dy - tr M(x) / 3`, the pressure of `-G ∗ div M`.
pub fn convolve_stress_pressure(m: &SampledTensorField, targets: &[Vec3]) -> Result<Convolution<f64>> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("no target points".into()));
    }
    let tail_error = tail_errors(m, targets, 3, STRESS_BOUND)?;
    if m.max_magnitude() == 0.0 {
        return Ok(Convolution { values: vec![0.0; targets.len()], tail_error });
    }
    check_whole_ball(m.grid())?;
    let big_r = m.grid().r_max();
    let all = Sources::from_field(m, false);
    let support = Sources::from_field(m, true);
    let m_x = values_at(m, targets);
    let values = targets
        .par_iter()
        .zip(m_x.par_iter())
        .map(|(x, mx)| {
            if x.norm() >= big_r || mx.magnitude() == 0.0 {
                return support.sum(*x, stress_pressure_apply);
            }
            // the principal-value integral of K over a ball containing x vanishes
            all.sum_subtracted(*x, mx, stress_pressure_apply) - mx.trace() / 3.0
        })
        .collect();
    Ok(Convolution { values, tail_error })
}

fn check_no_tail(h: &SampledVectorField) -> Result<()> {
    let outer = h.grid().outer_layer();
    if h.values()[outer].iter().any(|v| v.norm() != 0.0) {
        return Err(Error::Domain("source does not vanish on the outer layer of its grid".into()));
    }
    Ok(())
}

/// `∫ G(x-y) h(y) dy` for a source supported inside its grid.
pub fn convolve_green(h: &SampledVectorField, targets: &[Vec3]) -> Result<Vec<Vec3>> {
    check_no_tail(h)?;
    let src = Sources::from_field(h, true);
    Ok(targets.par_iter().map(|x| src.sum(*x, green_apply)).collect())
}

/// `∫ Q(x-y)·h(y) dy` for a source supported inside its grid.
pub fn convolve_pressure_source(h: &SampledVectorField, targets: &[Vec3]) -> Result<Vec<f64>> {
    check_no_tail(h)?;
    let src = Sources::from_field(h, true);
    Ok(targets.par_iter().map(|x| src.sum(*x, pressure_apply)).collect())
}

/// Output of a map onto a grid, with the largest tail error bar.
#[derive(Debug, Clone)]
pub struct GridConvolution {
    pub field: SampledVectorField,
    pub max_tail_error: f64,
}

/// `G ∗ div M` on the nodes of `M`'s grid.
pub fn apply_grad_green(m: &SampledTensorField) -> Result<GridConvolution> {
    let grid = m.grid().clone();
    let conv = convolve_grad_green(m, grid.points())?;
    let tail = (m.tail_exponent() - 1.0).min(2.0);
    let max_tail_error = conv.max_tail_error();
    Ok(GridConvolution { field: SampledField::new(grid, conv.values, tail)?, max_tail_error })
}

/// `T_Ũ(v) = G ∗ div(Ũ ⊗ v + v ⊗ Ũ)`.
pub fn linear_map_tu<U: VectorEvaluator + ?Sized>(u: &U, v: &SampledVectorField) -> Result<GridConvolution> {
    let tau = v.tail_exponent() + 1.0;
    let m = v.map(tau, |x, vv| {
        let uu = u.vector_at(x);
        outer(&uu, vv) + outer(vv, &uu)
    });
    apply_grad_green(&m)
}

/// [`linear_map_tu`] with `Ũ` already sampled on the grid of `v`.
pub fn linear_map_tu_sampled(u: &SampledVectorField, v: &SampledVectorField) -> Result<GridConvolution> {
    let tau = v.tail_exponent() + u.tail_exponent();
    let values = u.values().iter().zip(v.values()).map(|(a, b)| outer(a, b) + outer(b, a)).collect();
    apply_grad_green(&SampledField::new(v.grid().clone(), values, tau)?)
}

/// `B(v, w) = G ∗ div(v ⊗ w)`.
pub fn bilinear_map_b(v: &SampledVectorField, w: &SampledVectorField) -> Result<GridConvolution> {
    if !Arc::ptr_eq(v.grid(), w.grid()) && v.grid().points() != w.grid().points() {
        return Err(Error::InvalidInput("fields live on different grids".into()));
    }
    let tau = v.tail_exponent() + w.tail_exponent();
    let values = v.values().iter().zip(w.values()).map(|(a, b)| outer(a, b)).collect();
    apply_grad_green(&SampledField::new(v.grid().clone(), values, tau)?)
}

/// Relative size of the mean a compactly supported source may have.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-6;

/// `V = G ∗ h` on `targets` for a zero-mean source `h`, which makes `V = O(|x|^{-2})`.
pub fn source_term_v(h: &SampledVectorField, targets: &Arc<GradedGrid>) -> Result<SampledVectorField> {
    let mean = h.integral().norm();
    let l1 = h.l1();
    if mean > ZERO_MEAN_TOLERANCE * l1 {
        return Err(Error::ZeroMeanViolation { mean, l1 });
    }
    let values = convolve_green(h, targets.points())?;
    SampledField::new(targets.clone(), values, 2.0)
}

/// `I(x) = ∫ dy / (|x-y|² (1+|y|)^{α+β})`, reduced to a radial integral.
pub fn lemma41_integral(x: Vec3, alpha: f64, beta_exp: f64) -> Result<f64> {
    let s = alpha + beta_exp;
    if !(s > 1.0) {
        return Err(Error::Domain(format!("alpha + beta must exceed 1, got {s}")));
    }
    let t = x.norm();
    let radial = |r: f64| -> f64 {
        let ang = if t == 0.0 || r == 0.0 {
            4.0 * PI
        } else {
            // r² × spherical mean of |x - r e|^{-2}
            2.0 * PI * r / t * ((r + t) / (r - t).abs()).ln()
        };
        ang * (1.0 + r).powf(-s)
    };
    let panel = |a: f64, b: f64| -> f64 { gauss_legendre_interval(a, b, 12).into_iter().map(|(r, w)| w * radial(r)).sum() };
    let mut total = 0.0;
    let split = if t > 0.0 { t } else { 1.0 };
    if t > 0.0 {
        // geometric panels toward the logarithmic singularity at r = t
        let mut edges = vec![0.0];
        for k in 1..=48 {
            edges.push(t * (1.0 - 0.5f64.powi(k)));
        }
        for w in edges.windows(2) {
            total += panel(w[0], w[1]);
        }
        let mut edges = vec![2.0 * t];
        for k in 1..=48 {
            edges.push(t * (1.0 + 0.5f64.powi(k)));
        }
        for w in edges.windows(2) {
            total += panel(w[1], w[0]);
        }
    } else {
        total += panel(0.0, 1.0);
    }
    // [c, ∞) with r = c v^{-1/(s-1)}, which flattens the (1+r)^{-s} decay
    let c = if t > 0.0 { 2.0 * split } else { split };
    let p = s - 1.0;
    for k in 0..8 {
        let (a, b) = (k as f64 / 8.0, (k + 1) as f64 / 8.0);
        total += gauss_legendre_interval(a, b, 16)
            .into_iter()
            .map(|(v, w)| {
                let r = c * v.powf(-1.0 / p);
                w * radial(r) * c / p * v.powf(-1.0 / p - 1.0)
            })
            .sum::<f64>();
    }
    Ok(total)
}

/// Sampled tensor field `u ⊗ v + v ⊗ u + w ⊗ w`, the flux feeding the maps above.
pub fn stress_field(u: &SampledVectorField, v: &SampledVectorField, w: &SampledVectorField) -> Result<SampledTensorField> {
    let tau = (u.tail_exponent() + v.tail_exponent()).min(2.0 * w.tail_exponent());
    let values = u
        .values()
        .iter()
        .zip(v.values())
        .zip(w.values())
        .map(|((a, b), c)| outer(a, b) + outer(b, a) + outer(c, c))
        .collect();
    SampledField::new(u.grid().clone(), values, tau)
}

/// Scalar pressure of [`apply_grad_green`]-type maps on the grid, as a sampled field.
pub fn stress_pressure_on_grid(m: &SampledTensorField) -> Result<(SampledScalarField, f64)> {
    let grid = m.grid().clone();
    let conv = convolve_stress_pressure(m, grid.points())?;
    let err = conv.max_tail_error();
    Ok((SampledField::new(grid, conv.values, m.tail_exponent().min(3.0))?, err))
}
