//! Invariant batteries behind `landau-asym verify`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use landau_asym::analysis::{counterexample_field, counterexample_forcing_integral, fit_decay_exponent, nse_residual};
use landau_asym::contraction::{contraction_roots, picard_iterate, ContractionCertificate, QuadraticProblem, SyntheticQuadratic};
use landau_asym::fields::{GridSpec, SampledField, Vec3};
use landau_asym::flux::{canonical_outflow_field, net_force, outflow, GradientMode};
use landau_asym::green::{oseen_tensor, Stokeslet, StokesletPressure};
use landau_asym::landau::{
    beta, eval_landau_polar, forcing_integral, gamma, velocity_from_stream, LandauParams, LandauSolution, LandauStream,
    RegularizationProfile, StokesletStream, BETA_LARGE_A_LIMIT,
};
use landau_asym::solver::{picard_solve, SolverConfig};
use landau_asym::Result;

use crate::commands::{emit, to_json};
use crate::{Cli, CliResult, Suite, VerifyArgs, EXIT_FAILURE, EXIT_OK};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: &'static str, name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { suite, name, passed, detail },
        Err(e) => Check { suite, name, passed: false, detail: format!("error: {e}") },
    }
}

pub fn landau_suite() -> Vec<Check> {
    let s = "landau";
    vec![
        check(s, "beta_gamma_round_trip", || {
            let mut worst = 0.0f64;
            for k in 0..50 {
                let a = 1.001 * (1e3f64 / 1.001).powf(k as f64 / 49.0);
                worst = worst.max((gamma(beta(a)?)? - a).abs() / a);
            }
            Ok((worst <= 1e-10, format!("max relative error {worst:.3e}")))
        }),
        check(s, "large_A_limit", || {
            let v = 1e4 * beta(1e4)?;
            let rel = (v - BETA_LARGE_A_LIMIT).abs() / BETA_LARGE_A_LIMIT;
            Ok((rel < 1e-3, format!("A beta(A) = {v:.6}, relative gap {rel:.2e}")))
        }),
        check(s, "stream_matches_closed_form", || {
            let mut worst = 0.0f64;
            for a in [1.5, 2.0, 5.0] {
                for r in [0.5, 1.0, 3.0] {
                    for k in 0..=8 {
                        let t = PI * k as f64 / 8.0;
                        let (ur, ut) = velocity_from_stream(&LandauStream { a }, r, t)?;
                        let exact = eval_landau_polar(a, r, t)?;
                        worst = worst.max((ur - exact.u_r).abs().max((ut - exact.u_theta).abs()));
                    }
                }
            }
            Ok((worst < 1e-10, format!("max deviation {worst:.3e}")))
        }),
        check(s, "residual_vanishes", || {
            let sol = LandauSolution::new(LandauParams::from_a(2.0, Vec3::z())?);
            let p = sol.pressure_evaluator();
            let mut worst = 0.0f64;
            for x in [Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.3, -1.0, 1.5), Vec3::new(0.0, 0.4, -3.0)] {
                let r = nse_residual(&sol, &p, None, x, 1e-3);
                worst = worst.max(r.momentum.norm()).max(r.divergence.abs());
            }
            Ok((worst < 1e-6, format!("max residual {worst:.3e}")))
        }),
        check(s, "regularized_forcing_carries_b", || {
            let b = Vec3::new(0.0, 0.0, beta(2.0)?);
            let f = forcing_integral(b, RegularizationProfile::new(1.0)?)?;
            let rel = (f - b).norm() / b.norm();
            Ok((rel < 1e-3, format!("relative error {rel:.2e}")))
        }),
    ]
}

pub fn green_suite() -> Vec<Check> {
    let s = "green";
    vec![
        check(s, "stokeslet_column_matches_stream", || {
            let mut worst = 0.0f64;
            for r in [0.5, 2.0] {
                for k in 1..8 {
                    let t = PI * k as f64 / 8.0;
                    let x = Vec3::new(r * t.sin(), 0.0, r * t.cos());
                    let col = oseen_tensor(x)?.column(2).into_owned();
                    let (ur, ut) = velocity_from_stream(&StokesletStream, r, t)?;
                    let er = Vec3::new(t.sin(), 0.0, t.cos());
                    let et = Vec3::new(t.cos(), 0.0, -t.sin());
                    worst = worst.max((col - er * ur - et * ut).norm());
                }
            }
            Ok((worst < 1e-12, format!("max deviation {worst:.3e}")))
        }),
        check(s, "stokeslet_linear_flux_is_e3", || {
            let f = net_force(&Stokeslet, &StokesletPressure, GradientMode::Exact, 1.0, 16)?;
            let err = (f.parts.linear() - Vec3::z()).norm();
            Ok((err < 1e-6, format!("|flux - e3| = {err:.3e}")))
        }),
        check(s, "oseen_is_symmetric", || {
            let g = oseen_tensor(Vec3::new(0.3, -0.7, 1.1))?;
            let asym = (g - g.transpose()).norm();
            Ok((asym == 0.0, format!("asymmetry {asym:.1e}")))
        }),
    ]
}

pub fn flux_suite() -> Vec<Check> {
    let s = "flux";
    vec![
        check(s, "landau_force_radius_independent", || {
            let sol = LandauSolution::new(LandauParams::from_a(2.0, Vec3::z())?);
            let p = sol.pressure_evaluator();
            let b2 = beta(2.0)?;
            let fs: Vec<Vec3> = [1.0, 2.0, 5.0]
                .iter()
                .map(|&r| net_force(&sol, &p, GradientMode::Exact, r, 16).map(|f| f.value))
                .collect::<Result<_>>()?;
            let spread = fs.iter().flat_map(|a| fs.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
            let err = (fs[0] - Vec3::z() * b2).norm() / b2;
            Ok((err < 1e-4 && spread < 1e-6, format!("relative error {err:.2e}, spread {spread:.2e}")))
        }),
        check(s, "canonical_outflow", || {
            let a = canonical_outflow_field(1.0);
            let phi = outflow(&landau_asym::fields::FnVector(|x| a.velocity(x)), 2.0, 16)?;
            Ok(((phi - 1.0).abs() < 1e-12, format!("outflow {phi}")))
        }),
    ]
}

pub fn solver_suite() -> Vec<Check> {
    let s = "solver";
    vec![
        check(s, "contraction_roots", || {
            let (a, b) = contraction_roots(0.0, 1.0, 3.0 / 16.0)?;
            Ok(((a - 0.25).abs() < 1e-15 && (b - 0.75).abs() < 1e-15, format!("({a}, {b})")))
        }),
        check(s, "synthetic_fixed_point", || {
            let p = SyntheticQuadratic::new(Vec3::new(0.02, -0.01, 0.03), 0.3, Vec3::new(1.0, 1.0, 0.0), 0.7, 2.0, Vec3::z());
            let cert = ContractionCertificate::new(0.3, 2.0, p.y.norm())?;
            let a = picard_iterate(&p, p.zero(), cert.xi2, 1e-13, 200)?;
            let b = picard_iterate(&p, Vec3::new(0.0, 0.1, -0.1), cert.xi2, 1e-13, 200)?;
            let gap = (a.state - b.state).norm();
            let ok = a.converged && a.state.norm() <= cert.xi1 * (1.0 + 1e-12) && gap < 1e-8;
            Ok((ok, format!("|x| = {:.4e}, xi1 = {:.4e}, multistart gap {gap:.1e}", a.state.norm(), cert.xi1)))
        }),
        check(s, "zero_source_is_fixed", || {
            let grid = GridSpec { r_min: 0.5, r_max: 20.0, ratio: 1.8, n_theta: 4, n_phi: 4, include_core: true, radial_order: 2 };
            let config = SolverConfig { power_fields: 1, power_steps: 1, bilinear_pairs: 2, ..SolverConfig::new(1.5, grid) };
            let g = Arc::new(grid.build()?);
            let h = SampledField::zeros(g, 4.0);
            let res = picard_solve(&landau_asym::fields::Zero, &h, &config)?;
            Ok((res.converged && res.v.max_magnitude() == 0.0, format!("{} iteration(s)", res.summary.iterations)))
        }),
    ]
}

pub fn counterexample_suite() -> Vec<Check> {
    let s = "counterexample";
    vec![
        check(s, "residual_vanishes_outside_b2", || {
            let mut worst = 0.0f64;
            for r in [3.0, 5.0, 10.0] {
                worst = worst.max(counterexample_field(3, 0.5, Vec3::new(r, 0.0, 0.0))?.1.abs());
            }
            Ok((worst <= 1e-6, format!("max residual {worst:.3e}")))
        }),
        check(s, "decay_slower_than_r_minus_2", || {
            let samples: Vec<(f64, f64)> = (0..24)
                .map(|k| 3.0 * 100f64.powf(k as f64 / 23.0))
                .map(|r| counterexample_field(3, 0.5, Vec3::new(r, 0.0, 0.0)).map(|(u, _)| (r, u.abs())))
                .collect::<Result<_>>()?;
            let fit = fit_decay_exponent(&samples)?;
            Ok(((fit.exponent - 1.5).abs() <= 1e-3 && fit.exponent < 2.0, format!("exponent {:.6}", fit.exponent)))
        }),
        check(s, "forcing_has_zero_mean", || {
            let (total, abs) = counterexample_forcing_integral(0.5, 24, 16)?;
            Ok((total.abs() <= 1e-10 * abs, format!("integral {total:.2e} against L1 {abs:.3e}")))
        }),
    ]
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Landau => landau_suite(),
        Suite::Green => green_suite(),
        Suite::Flux => flux_suite(),
        Suite::Solver => solver_suite(),
        Suite::Counterexample => counterexample_suite(),
        Suite::All => [landau_suite(), green_suite(), flux_suite(), solver_suite(), counterexample_suite()].concat(),
    }
}

#[derive(Serialize)]
struct Summary {
    passed: bool,
    checks: Vec<Check>,
}

pub fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> CliResult<i32> {
    let checks = run_suite(args.suite);
    let passed = checks.iter().all(|c| c.passed);
    emit(cli, "verify.json", &to_json(&Summary { passed, checks })?)?;
    Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
}
