//! The perturbation problem `v + T_Ũ(v) + B(v, v) = V` on a graded grid.
//!
//! With `T_Ũ(v) = G ∗ div(Ũ⊗v + v⊗Ũ)`, `B(v, w) = G ∗ div(v⊗w)` and
//! `V = G ∗ (f - F̃)`, a solution gives `u = Ũ + v` solving the stationary
//! Navier–Stokes system with force `f`. The smallness hypothesis is checked at
//! run time: `‖T_Ũ‖` and the bilinear constant are measured and the roots of
//! `ξ = ‖V‖ + ε̂ξ + ĉξ²` must exist.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contraction::{picard_iterate, ContractionCertificate, QuadraticProblem};
use crate::error::{Error, Result};
use crate::fields::{
    GradedGrid, GridSpec, Mat3, SampledField, SampledScalarField, SampledTensorField, SampledVectorField, ScalarEvaluator,
    SphericalAxes, Vec3, VectorEvaluator,
};
use crate::flux::{canonical_outflow_field, OutflowField};
use crate::green::{
    apply_grad_green, bilinear_map_b, convolve_pressure_source, linear_map_tu_sampled, source_term_v,
    stress_field, stress_pressure_on_grid,
};
use crate::landau::{LandauParams, RegularizationProfile, RegularizedLandau};

fn default_alpha() -> f64 {
    1.5
}
fn default_max_iter() -> usize {
    50
}
fn default_tol() -> f64 {
    1e-8
}
fn default_budget() -> f64 {
    1.0
}
fn default_power_fields() -> usize {
    5
}
fn default_power_steps() -> usize {
    3
}
fn default_pairs() -> usize {
    10
}
fn default_slack() -> f64 {
    0.05
}

/// Parameters of [`picard_solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Decay exponent of the solution space, strictly inside `(1, 2)`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub grid: GridSpec,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Stop when a Picard step is this small in the weighted norm.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Bound `M` on `|b|` used in diagnostics.
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default)]
    pub seed: u64,
    /// Random starts for the power iteration on `T_Ũ`.
    #[serde(default = "default_power_fields")]
    pub power_fields: usize,
    #[serde(default = "default_power_steps")]
    pub power_steps: usize,
    /// Random pairs for the bilinear constant.
    #[serde(default = "default_pairs")]
    pub bilinear_pairs: usize,
    /// Relative slack in `‖v‖ ≤ ξ₁`.
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Also iterate from `v₀ = V` and report the distance between the two limits.
    #[serde(default)]
    pub check_uniqueness: bool,
}

impl SolverConfig {
    pub fn new(alpha: f64, grid: GridSpec) -> Self {
        SolverConfig {
            alpha,
            grid,
            max_iter: default_max_iter(),
            tol: default_tol(),
            budget: default_budget(),
            seed: 0,
            power_fields: default_power_fields(),
            power_steps: default_power_steps(),
            bilinear_pairs: default_pairs(),
            slack: default_slack(),
            check_uniqueness: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie strictly inside (1, 2), got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 || self.power_fields == 0 || self.power_steps == 0 || self.bilinear_pairs == 0 {
            return Err(Error::InvalidConfig("iteration and sample counts must be positive".into()));
        }
        if !(self.budget > 0.0) || !(self.slack >= 0.0) {
            return Err(Error::InvalidConfig("budget must be positive and slack non-negative".into()));
        }
        if !self.grid.include_core {
            return Err(Error::InvalidConfig("the solver grid must include the core ball".into()));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<GradedGrid>> {
        self.validate()?;
        Ok(Arc::new(self.grid.build()?))
    }
}

/// Smooth random field `(1+|x-c|²)^{-α/2} (a + B(x-c)/(1+|x-c|))`, scaled to unit norm.
fn random_field(grid: &Arc<GradedGrid>, alpha: f64, rng: &mut ChaCha8Rng) -> Result<SampledVectorField> {
    let mut draw = || rng.gen_range(-1.0..1.0);
    let a = Vec3::new(draw(), draw(), draw());
    let b = Mat3::from_fn(|_, _| draw());
    let c = Vec3::new(draw(), draw(), draw()) * 0.5;
    let field = SampledField::from_fn(grid.clone(), alpha, |x| {
        let d = x - c;
        let s = d.norm();
        (a + b * d / (1.0 + s)) * (1.0 + s * s).powf(-0.5 * alpha)
    });
    let n = field.weighted_sup_norm(alpha)?.value;
    Ok(field.scaled(1.0 / n))
}

fn x_norm(v: &SampledVectorField, alpha: f64) -> Result<f64> {
    Ok(v.weighted_sup_norm(alpha)?.value)
}

/// Measured operator bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorBounds {
    pub eps_hat: f64,
    pub eps_samples: Vec<f64>,
    pub c_hat: f64,
    pub c_samples: Vec<f64>,
}

/// `ε̂ ≈ ‖T_Ũ‖` by power iteration: the largest ratio `‖T w‖/‖w‖` met.
pub fn estimate_linear_bound(u_tilde: &SampledVectorField, config: &SolverConfig) -> Result<(f64, Vec<f64>)> {
    let grid = u_tilde.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut samples = Vec::new();
    if u_tilde.max_magnitude() == 0.0 {
        return Ok((0.0, vec![0.0]));
    }
    for _ in 0..config.power_fields {
        let mut w = random_field(&grid, config.alpha, &mut rng)?;
        for _ in 0..config.power_steps {
            let tw = linear_map_tu_sampled(u_tilde, &w)?.field;
            let n = x_norm(&tw, config.alpha)?;
            samples.push(n / x_norm(&w, config.alpha)?);
            if n == 0.0 {
                break;
            }
            w = tw.scaled(1.0 / n);
        }
    }
    Ok((samples.iter().copied().fold(0.0, f64::max), samples))
}

/// `ĉ`: the largest ratio `‖B(v,w)‖/(‖v‖‖w‖)` over random pairs (and the pair `(y, y)` if given).
pub fn estimate_bilinear_bound(
    grid: &Arc<GradedGrid>,
    config: &SolverConfig,
    y: Option<&SampledVectorField>,
) -> Result<(f64, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut samples = Vec::new();
    for _ in 0..config.bilinear_pairs {
        let v = random_field(grid, config.alpha, &mut rng)?;
        let w = random_field(grid, config.alpha, &mut rng)?;
        let b = bilinear_map_b(&v, &w)?.field;
        samples.push(x_norm(&b, config.alpha)? / (x_norm(&v, config.alpha)? * x_norm(&w, config.alpha)?));
    }
    if let Some(y) = y {
        let n = x_norm(y, config.alpha)?;
        if n > 0.0 {
            let b = bilinear_map_b(y, y)?.field;
            samples.push(x_norm(&b, config.alpha)? / (n * n));
        }
    }
    Ok((samples.iter().copied().fold(0.0, f64::max), samples))
}

pub fn estimate_bounds(
    u_tilde: &SampledVectorField,
    config: &SolverConfig,
    y: Option<&SampledVectorField>,
) -> Result<OperatorBounds> {
    let (eps_hat, eps_samples) = estimate_linear_bound(u_tilde, config)?;
    let (c_hat, c_samples) = estimate_bilinear_bound(u_tilde.grid(), config, y)?;
    Ok(OperatorBounds { eps_hat, eps_samples, c_hat, c_samples })
}

/// `v ↦ V - G ∗ div(Ũ⊗v + v⊗Ũ + v⊗v)`.
struct Perturbation<'a> {
    u_tilde: &'a SampledVectorField,
    source: &'a SampledVectorField,
    alpha: f64,
}

impl Perturbation<'_> {
    fn stress(&self, v: &SampledVectorField) -> Result<SampledTensorField> {
        stress_field(self.u_tilde, v, v)
    }
}

impl QuadraticProblem for Perturbation<'_> {
    type State = SampledVectorField;

    fn zero(&self) -> SampledVectorField {
        SampledField::zeros(self.source.grid().clone(), 2.0)
    }
    fn map(&self, v: &SampledVectorField) -> Result<SampledVectorField> {
        if v.max_magnitude() == 0.0 {
            return Ok(self.source.clone());
        }
        let n = apply_grad_green(&self.stress(v)?)?.field;
        self.source.sub(&n)
    }
    fn norm(&self, v: &SampledVectorField) -> Result<f64> {
        x_norm(v, self.alpha)
    }
    fn distance(&self, a: &SampledVectorField, b: &SampledVectorField) -> Result<f64> {
        x_norm(&a.sub(b)?, self.alpha)
    }
}

/// Output of [`picard_solve`].
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub v: SampledVectorField,
    pub q: SampledScalarField,
    pub source: SampledVectorField,
    pub norm_history: Vec<f64>,
    pub step_history: Vec<f64>,
    pub certificate: ContractionCertificate,
    pub bounds: OperatorBounds,
    pub converged: bool,
    pub summary: SolveSummary,
}

/// The serializable part of a [`SolveResult`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_norm: f64,
    pub final_step: f64,
    /// `‖v‖ ≤ ξ₁(1 + slack)`.
    pub within_xi1: bool,
    /// Every iterate stayed inside the `ξ₂`-ball.
    pub captured: bool,
    pub uniqueness_gap: Option<f64>,
    pub within_budget: bool,
    pub max_tail_error: f64,
    pub norm_history: Vec<f64>,
    pub step_history: Vec<f64>,
    pub certificate: ContractionCertificate,
    pub bounds: OperatorBounds,
}

/// Samples `Ũ` on the solver grid with its `|x|^{-1}` tail.
pub fn sample_u_tilde<U: VectorEvaluator + ?Sized>(u_tilde: &U, grid: &Arc<GradedGrid>) -> SampledVectorField {
    SampledField::from_fn(grid.clone(), 1.0, |x| u_tilde.vector_at(x))
}

/// Solves for `v` from `v₀ = 0`, measuring the certificate first.
///
/// `f_minus_f` is `f - F̃` on its own (compactly supported) source grid.
pub fn picard_solve<U: VectorEvaluator + ?Sized>(
    u_tilde: &U,
    f_minus_f: &SampledVectorField,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let grid = config.build_grid()?;
    let u = sample_u_tilde(u_tilde, &grid);
    let source = source_term_v(f_minus_f, &grid)?;
    let bounds = estimate_bounds(&u, config, Some(&source))?;
    picard_solve_measured(&u, f_minus_f, source, bounds, config, None)
}

/// [`picard_solve`] with `Ũ` sampled, `V` computed and the bounds already measured.
pub fn picard_solve_measured(
    u: &SampledVectorField,
    f_minus_f: &SampledVectorField,
    source: SampledVectorField,
    bounds: OperatorBounds,
    config: &SolverConfig,
    force: Option<Vec3>,
) -> Result<SolveResult> {
    config.validate()?;
    let y_norm = x_norm(&source, config.alpha)?;
    let certificate = ContractionCertificate::new(bounds.eps_hat, bounds.c_hat, y_norm)?;
    let problem = Perturbation { u_tilde: u, source: &source, alpha: config.alpha };
    let out = picard_iterate(&problem, problem.zero(), certificate.xi2, config.tol, config.max_iter)?;
    let uniqueness_gap = if config.check_uniqueness && out.converged {
        let other = picard_iterate(&problem, source.clone(), certificate.xi2, config.tol, config.max_iter)?;
        Some(problem.distance(&other.state, &out.state)?)
    } else {
        None
    };
    let v = out.state;
    let final_norm = *out.norm_history.last().expect("history starts with v0");
    let final_step = out.step_history.last().copied().unwrap_or(0.0);
    let stress = problem.stress(&v)?;
    let max_tail_error = if v.max_magnitude() == 0.0 { 0.0 } else { apply_grad_green(&stress)?.max_tail_error };
    let q = recover_pressure(&v, u, f_minus_f)?;
    let summary = SolveSummary {
        alpha: config.alpha,
        iterations: out.step_history.len(),
        converged: out.converged,
        final_norm,
        final_step,
        within_xi1: final_norm <= certificate.xi1 * (1.0 + config.slack),
        captured: out.norm_history.iter().skip(1).all(|n| *n < certificate.xi2),
        uniqueness_gap,
        within_budget: force.map(|b| b.norm() <= config.budget).unwrap_or(true),
        max_tail_error,
        norm_history: out.norm_history.clone(),
        step_history: out.step_history.clone(),
        certificate,
        bounds: bounds.clone(),
    };
    Ok(SolveResult {
        v,
        q,
        source,
        norm_history: out.norm_history,
        step_history: out.step_history,
        certificate,
        bounds,
        converged: out.converged,
        summary,
    })
}

/// `q = Q ∗ (f - F̃) + Q ∗ (-div M)` with `M = Ũ⊗v + v⊗Ũ + v⊗v`, the second
/// term written as `PV ∫ K : M - tr M / 3`.
pub fn recover_pressure(
    v: &SampledVectorField,
    u_tilde: &SampledVectorField,
    f_minus_f: &SampledVectorField,
) -> Result<SampledScalarField> {
    let grid = v.grid().clone();
    let direct = if f_minus_f.max_magnitude() == 0.0 {
        vec![0.0; grid.len()]
    } else {
        convolve_pressure_source(f_minus_f, grid.points())?
    };
    if v.max_magnitude() == 0.0 {
        return SampledField::new(grid, direct, 3.0);
    }
    let (stress_part, _) = stress_pressure_on_grid(&stress_field(u_tilde, v, v)?)?;
    let values = direct.iter().zip(stress_part.values()).map(|(a, b)| a + b).collect();
    SampledField::new(grid, values, 3.0)
}

/// `u = a_Φ + Ũ^b + v`, `p = π_a + P̃^b + q`, with `v` and `q` interpolated between nodes.
pub struct AssembledSolution {
    outflow: OutflowField,
    regularized: Option<RegularizedLandau>,
    v: SampledVectorField,
    q: SampledScalarField,
    axes: SphericalAxes,
}

pub fn assemble_solution(
    b: Vec3,
    phi: f64,
    result: &SolveResult,
    profile: RegularizationProfile,
) -> Result<AssembledSolution> {
    if !result.converged {
        return Err(Error::Precondition("cannot assemble an unconverged solve".into()));
    }
    assemble_fields(b, phi, result.v.clone(), result.q.clone(), profile)
}

/// Assembly from raw parts.
pub fn assemble_fields(
    b: Vec3,
    phi: f64,
    v: SampledVectorField,
    q: SampledScalarField,
    profile: RegularizationProfile,
) -> Result<AssembledSolution> {
    let params = LandauParams::from_b(b)?;
    let regularized = if params.is_zero() { None } else { Some(RegularizedLandau::new(params, profile)) };
    let axes = v.grid().axes();
    Ok(AssembledSolution { outflow: canonical_outflow_field(phi), regularized, v, q, axes })
}

impl AssembledSolution {
    pub fn remainder(&self, x: Vec3) -> Vec3 {
        if self.v.max_magnitude() == 0.0 {
            return Vec3::zeros();
        }
        self.axes.interpolate(self.v.values(), self.v.tail_exponent(), x)
    }

    pub fn pressure_remainder(&self, x: Vec3) -> f64 {
        if self.q.max_magnitude() == 0.0 {
            return 0.0;
        }
        self.axes.interpolate(self.q.values(), self.q.tail_exponent(), x)
    }

    pub fn velocity(&self, x: Vec3) -> Vec3 {
        let mut u = self.outflow.velocity(x);
        if let Some(r) = &self.regularized {
            u += r.velocity(x);
        }
        u + self.remainder(x)
    }

    pub fn pressure(&self, x: Vec3) -> f64 {
        let mut p = self.outflow.pressure(x);
        if let Some(r) = &self.regularized {
            p += r.pressure(x);
        }
        p + self.pressure_remainder(x)
    }

    pub fn pressure_evaluator(&self) -> AssembledPressure<'_> {
        AssembledPressure(self)
    }
}

impl VectorEvaluator for AssembledSolution {
    fn vector_at(&self, x: Vec3) -> Vec3 {
        self.velocity(x)
    }
}

pub struct AssembledPressure<'a>(&'a AssembledSolution);

impl ScalarEvaluator for AssembledPressure<'_> {
    fn scalar_at(&self, x: Vec3) -> f64 {
        self.0.pressure(x)
    }
}
