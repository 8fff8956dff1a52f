//! End-to-end runs: an exterior solution is extended to all of `R³`, its
//! forcing is compared with that of `Ũ^b`, and the perturbation problem is
//! solved and checked against `U^b` at large distances.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{asymptotics_report, AsymptoticsReport};
use crate::error::{Error, Result};
use crate::extension::{compute_forcing, extend_pressure, extend_velocity, ExteriorSolutionSample, CUTOFF_END};
use crate::fields::{
    FnScalar, GradedGrid, GridSpec, SampledField, SampledVectorField, ScalarEvaluator, Vec3, VectorEvaluator,
};
use crate::flux::{canonical_outflow_field, net_force, split_outflow, GradientMode};
use crate::green::source_term_v;
use crate::jet::smoothstep;
use crate::landau::{LandauParams, LandauSolution, RegularizationProfile, RegularizedLandau};
use crate::solver::{
    assemble_fields, estimate_bilinear_bound, estimate_linear_bound, picard_solve_measured, sample_u_tilde,
    AssembledSolution, OperatorBounds, SolveResult, SolveSummary, SolverConfig,
};

fn default_r0() -> f64 {
    1.0
}
fn default_fd_step() -> f64 {
    0.02
}
fn default_force_order() -> usize {
    16
}
fn default_forcing_grid() -> GridSpec {
    GridSpec { r_min: 0.5, r_max: 2.7, ratio: 1.1, n_theta: 6, n_phi: 4, include_core: true, radial_order: 12 }
}
fn default_solver() -> SolverConfig {
    SolverConfig::new(
        1.5,
        GridSpec { r_min: 0.5, r_max: 270.0, ratio: 1.3, n_theta: 16, n_phi: 16, include_core: true, radial_order: 2 },
    )
}
fn default_report_min_radius() -> f64 {
    5.0
}

/// The exact Landau solution restricted to `|x| > R₀`, run through the whole pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandauExteriorConfig {
    pub b: Vec3,
    /// Radius of the excluded ball.
    #[serde(default = "default_r0")]
    pub r0: f64,
    /// Decay constant of the exterior datum; measured when absent.
    #[serde(default)]
    pub c_star: Option<f64>,
    /// `r₀` of the profile defining `Ũ^b`.
    #[serde(default = "default_r0")]
    pub regularization_r0: f64,
    /// Step of the differences producing `f`.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_force_order")]
    pub force_order: usize,
    /// Grid carrying `f` and `F̃`; must contain the ball `B_{2.5R₀}`.
    #[serde(default = "default_forcing_grid")]
    pub forcing_grid: GridSpec,
    #[serde(default = "default_solver")]
    pub solver: SolverConfig,
    /// Innermost shell used in the far-field report.
    #[serde(default = "default_report_min_radius")]
    pub report_min_radius: f64,
}

impl LandauExteriorConfig {
    pub fn new(b: Vec3) -> Self {
        LandauExteriorConfig {
            b,
            r0: 1.0,
            c_star: None,
            regularization_r0: 1.0,
            fd_step: default_fd_step(),
            force_order: default_force_order(),
            forcing_grid: default_forcing_grid(),
            solver: default_solver(),
            report_min_radius: default_report_min_radius(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) || !(self.regularization_r0 > 0.0) || !(self.fd_step > 0.0) {
            return Err(Error::InvalidConfig("r0, regularization_r0 and fd_step must be positive".into()));
        }
        let reach = CUTOFF_END * self.r0 + 2.0 * self.fd_step;
        if !self.forcing_grid.include_core || self.forcing_grid.r_max <= reach {
            return Err(Error::InvalidConfig(format!(
                "the forcing grid must include its core and reach beyond {reach}"
            )));
        }
        if self.forcing_grid.r_max <= 2.0 * self.regularization_r0 {
            return Err(Error::InvalidConfig("the forcing grid must contain the support of the regularized forcing".into()));
        }
        self.solver.validate()
    }
}

/// `b = 0` and a compact zero-mean force made of two opposite bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleConfig {
    pub strength: f64,
    /// Direction and magnitude of the force carried by each bump.
    #[serde(default = "default_dipole_direction")]
    pub direction: Vec3,
    /// Bumps sit at `±offset`.
    #[serde(default = "default_dipole_offset")]
    pub offset: Vec3,
    #[serde(default = "default_dipole_radius")]
    pub radius: f64,
    #[serde(default = "default_dipole_grid")]
    pub forcing_grid: GridSpec,
    #[serde(default = "default_solver")]
    pub solver: SolverConfig,
    #[serde(default = "default_report_min_radius")]
    pub report_min_radius: f64,
}

fn default_dipole_direction() -> Vec3 {
    Vec3::z()
}
fn default_dipole_offset() -> Vec3 {
    Vec3::new(0.0, 0.0, 0.5)
}
fn default_dipole_radius() -> f64 {
    0.5
}
fn default_dipole_grid() -> GridSpec {
    GridSpec { r_min: 0.25, r_max: 1.2, ratio: 1.2, n_theta: 12, n_phi: 8, include_core: true, radial_order: 4 }
}

impl DipoleConfig {
    pub fn new(strength: f64) -> Self {
        DipoleConfig {
            strength,
            direction: default_dipole_direction(),
            offset: default_dipole_offset(),
            radius: default_dipole_radius(),
            forcing_grid: default_dipole_grid(),
            solver: default_solver(),
            report_min_radius: default_report_min_radius(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.strength.is_finite() || !(self.radius > 0.0) {
            return Err(Error::InvalidConfig("strength must be finite and radius positive".into()));
        }
        if self.offset.norm() + self.radius >= self.forcing_grid.r_max || !self.forcing_grid.include_core {
            return Err(Error::InvalidConfig("the forcing grid must include its core and contain both bumps".into()));
        }
        self.solver.validate()
    }

    /// The force field itself.
    pub fn force(&self, x: Vec3) -> Vec3 {
        let dir = self.direction;
        (dipole_bump((x - self.offset).norm() / self.radius) - dipole_bump((x + self.offset).norm() / self.radius))
            * self.strength
            * dir
    }
}

/// Smooth bump equal to 1 at the origin and vanishing for `t ≥ 1`.
fn dipole_bump(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        smoothstep(1.0 - t)[0]
    }
}

/// A named run read from a JSON document with a `"scenario"` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum Scenario {
    LandauExterior(LandauExteriorConfig),
    Dipole(DipoleConfig),
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::LandauExterior(c) => c.validate(),
            Scenario::Dipole(c) => c.validate(),
        }
    }

    pub fn solver_mut(&mut self) -> &mut SolverConfig {
        match self {
            Scenario::LandauExterior(c) => &mut c.solver,
            Scenario::Dipole(c) => &mut c.solver,
        }
    }

    pub fn run(&self) -> Result<PipelineOutput> {
        match self {
            Scenario::LandauExterior(c) => run_landau_exterior(c),
            Scenario::Dipole(c) => run_dipole(c),
        }
    }
}

/// Everything measured along the way.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub b: Vec3,
    pub force_discrepancy: f64,
    pub outflow: f64,
    pub c_star: Option<f64>,
    /// `∫ f` on the forcing grid.
    pub forcing_integral: Vec3,
    pub forcing_l1: f64,
    /// `∫ F̃` on the same grid.
    pub regularized_forcing_integral: Vec3,
    /// `|∫ (f - F̃)|` removed by the zero-mean projection.
    pub projected_mean: f64,
    pub forcing_nodes: usize,
    pub solver_nodes: usize,
    pub solve: SolveSummary,
    pub asymptotics: AsymptoticsReport,
}

pub struct PipelineOutput {
    pub report: PipelineReport,
    pub result: SolveResult,
    pub solution: AssembledSolution,
}

/// Smooth radial weight on `B_R` used to remove a discrete mean.
fn projection_bump(x: Vec3, radius: f64) -> f64 {
    dipole_bump(x.norm() / radius)
}

/// `h - (∫h / ∫ψ) ψ`, which has zero discrete mean on `h`'s grid. Returns the removed mean.
pub fn project_zero_mean(h: &SampledVectorField, radius: f64) -> Result<(SampledVectorField, f64)> {
    let grid = h.grid();
    if radius >= grid.r_max() {
        return Err(Error::InvalidInput("projection bump must fit inside the grid".into()));
    }
    let mean = h.integral();
    let psi = SampledField::from_fn(grid.clone(), h.tail_exponent(), |x| projection_bump(x, radius));
    let mass = psi.integral();
    let corrected = h.map(h.tail_exponent(), |x, v| v - mean * (projection_bump(x, radius) / mass));
    Ok((corrected, mean.norm()))
}

/// `ε̂` before anything expensive happens, failing fast when it is not below 1.
fn early_linear_bound(u: &SampledVectorField, config: &SolverConfig) -> Result<(f64, Vec<f64>)> {
    let (eps_hat, samples) = estimate_linear_bound(u, config)?;
    if !(eps_hat < 1.0) {
        return Err(Error::NoCertificate { eps_hat, c_hat: f64::NAN, y_norm: f64::NAN });
    }
    Ok((eps_hat, samples))
}

fn report_shells(grid: &GradedGrid, min_radius: f64) -> Vec<f64> {
    let mut shells: Vec<f64> = grid.radii().iter().copied().filter(|r| *r >= min_radius).collect();
    shells.dedup();
    shells
}

#[allow(clippy::too_many_arguments)]
fn finish(
    b: Vec3,
    phi: f64,
    u_sampled: &SampledVectorField,
    h: &SampledVectorField,
    eps: (f64, Vec<f64>),
    profile: RegularizationProfile,
    solver: &SolverConfig,
    report_min_radius: f64,
) -> Result<(SolveResult, AssembledSolution, AsymptoticsReport)> {
    let grid = u_sampled.grid().clone();
    let source = if h.max_magnitude() == 0.0 { SampledField::zeros(grid.clone(), 2.0) } else { source_term_v(h, &grid)? };
    let (c_hat, c_samples) = estimate_bilinear_bound(&grid, solver, Some(&source))?;
    let bounds = OperatorBounds { eps_hat: eps.0, eps_samples: eps.1, c_hat, c_samples };
    let result = picard_solve_measured(u_sampled, h, source, bounds, solver, Some(b))?;
    if !result.converged {
        return Err(Error::Convergence(format!(
            "no convergence in {} iterations (last step {})",
            result.summary.iterations, result.summary.final_step
        )));
    }
    let solution = assemble_fields(b, phi, result.v.clone(), result.q.clone(), profile)?;
    let shells = report_shells(&grid, report_min_radius);
    let p = solution.pressure_evaluator();
    let asymptotics = asymptotics_report(&solution, &p, b, solver.alpha, &shells)?;
    Ok((result, solution, asymptotics))
}

/// Restricts `(U^b, P^b)` to `|x| > R₀`, extends, solves, and compares with `U^b`.
pub fn run_landau_exterior(config: &LandauExteriorConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let exact = LandauSolution::new(LandauParams::from_b(config.b)?);
    let r0 = config.r0;
    let exterior_u = |x: Vec3| if x.norm() > r0 { exact.velocity(x) } else { Vec3::zeros() };
    let exterior_p = |x: Vec3| if x.norm() > r0 { exact.pressure(x) } else { 0.0 };
    let u_ext = crate::fields::FnVector(exterior_u);
    let p_ext = FnScalar(exterior_p);
    run_exterior(&u_ext, &p_ext, config)
}

/// The pipeline for an arbitrary solution known on `|x| > R₀`.
pub fn run_exterior(
    u: &dyn VectorEvaluator,
    p: &dyn ScalarEvaluator,
    config: &LandauExteriorConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    let r0 = config.r0;
    let force_radius = 1.5 * CUTOFF_END * r0;
    let force = net_force(u, p, GradientMode::FiniteDifference { h: None }, force_radius, config.force_order)?;
    let b = force.value;
    let (phi, remainder) = split_outflow(u, 1.5 * r0)?;
    let outflow = canonical_outflow_field(phi);
    let p_rem = FnScalar(|x: Vec3| p.scalar_at(x) - outflow.pressure(x));

    let profile = RegularizationProfile::new(config.regularization_r0)?;
    let solver_grid = config.solver.build_grid()?;
    let regularized = RegularizedLandau::from_b(b, profile)?;
    let u_sampled = sample_u_tilde(&regularized, &solver_grid);
    let eps = early_linear_bound(&u_sampled, &config.solver)?;

    let c_star = match config.c_star {
        Some(c) => c,
        None => ExteriorSolutionSample::<_, crate::fields::Zero>::measure_decay_constant(r0, &remainder, 256, config.solver.seed).max(1e-300),
    };
    let sample = ExteriorSolutionSample::new(r0, c_star, remainder, p_rem)?;
    let u_tilde = extend_velocity(&sample)?;
    let p_tilde = extend_pressure(&sample)?;
    let forcing_grid = Arc::new(config.forcing_grid.build()?);
    let f = compute_forcing(&u_tilde, &p_tilde, &forcing_grid, config.fd_step, Some(CUTOFF_END * r0))?;
    let f_reg = SampledField::from_fn(forcing_grid.clone(), 4.0, |x| regularized.forcing(x));
    let raw = f.sub(&f_reg)?.with_tail_exponent(4.0);
    let (h, projected_mean) = project_zero_mean(&raw, CUTOFF_END * r0.max(config.regularization_r0))?;

    let (result, solution, asymptotics) =
        finish(b, phi, &u_sampled, &h, eps, profile, &config.solver, config.report_min_radius)?;
    let report = PipelineReport {
        b,
        force_discrepancy: force.discrepancy,
        outflow: phi,
        c_star: Some(c_star),
        forcing_integral: f.integral(),
        forcing_l1: f.l1(),
        regularized_forcing_integral: f_reg.integral(),
        projected_mean,
        forcing_nodes: forcing_grid.len(),
        solver_nodes: solver_grid.len(),
        solve: result.summary.clone(),
        asymptotics,
    };
    Ok(PipelineOutput { report, result, solution })
}

/// `b = 0`, `Ũ = 0`, and `f` the two-bump force of [`DipoleConfig`].
pub fn run_dipole(config: &DipoleConfig) -> Result<PipelineOutput> {
    config.validate()?;
    let forcing_grid = Arc::new(config.forcing_grid.build()?);
    let f = SampledField::from_fn(forcing_grid.clone(), 4.0, |x| config.force(x));
    let (h, projected_mean) = project_zero_mean(&f, config.offset.norm() + config.radius)?;
    let solver_grid = config.solver.build_grid()?;
    let u_sampled = SampledField::zeros(solver_grid.clone(), 1.0);
    let profile = RegularizationProfile::new(1.0)?;
    let (result, solution, asymptotics) = finish(
        Vec3::zeros(),
        0.0,
        &u_sampled,
        &h,
        (0.0, vec![0.0]),
        profile,
        &config.solver,
        config.report_min_radius,
    )?;
    let report = PipelineReport {
        b: Vec3::zeros(),
        force_discrepancy: 0.0,
        outflow: 0.0,
        c_star: None,
        forcing_integral: f.integral(),
        forcing_l1: f.l1(),
        regularized_forcing_integral: Vec3::zeros(),
        projected_mean,
        forcing_nodes: forcing_grid.len(),
        solver_nodes: solver_grid.len(),
        solve: result.summary.clone(),
        asymptotics,
    };
    Ok(PipelineOutput { report, result, solution })
}
