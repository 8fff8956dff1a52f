//! Acceptance criteria 1 to 11, run in sequence so the timings are not skewed by
//! parallel tests. Each criterion prints one `PASS` or `FAIL` line.

use std::f64::consts::PI;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use landau_asym::analysis::{counterexample_field, counterexample_forcing_integral, fit_decay_exponent};
use landau_asym::contraction::{contraction_roots, picard_iterate, ContractionCertificate, QuadraticProblem, SyntheticQuadratic};
use landau_asym::fields::quadrature::SphereRule;
use landau_asym::fields::{fd, Vec3};
use landau_asym::flux::{net_force, GradientMode};
use landau_asym::green::{lemma41_integral, oseen_tensor, Stokeslet, StokesletPressure};
use landau_asym::landau::{
    beta, forcing_integral, gamma, reynolds_solution, velocity_from_stream, LandauParams, LandauSolution,
    RegularizationProfile, RegularizedLandau, StokesletStream, BETA_LARGE_A_LIMIT,
};
use landau_asym::pipeline::{run_landau_exterior, LandauExteriorConfig};
use landau_asym::Result;

struct Outcome {
    passed: bool,
    detail: String,
}

fn run(id: usize, title: &str, limit: Duration, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (passed, detail) = match outcome {
        Ok(o) => (o.passed && elapsed <= limit, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    // written to the process stdout directly so the line survives output capture
    let _ = writeln!(
        std::io::stdout().lock(),
        "criterion {id:>2} {}: {title}: {detail} [{:.2} s, limit {} s]",
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    passed
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Momentum and divergence residual by finite differences with step `h`, relative
/// to the size of the individual terms.
fn scaled_residual(sol: &LandauSolution, x: Vec3, h: f64) -> f64 {
    let (u, jac, lap) = fd::vector_stencil(|y| sol.velocity(y), x, h);
    let grad_p = fd::gradient(|y| sol.pressure(y), x, h);
    let convect = jac * u;
    let momentum = -lap + convect + grad_p;
    let scale = lap.norm() + convect.norm() + grad_p.norm();
    (momentum.norm() + jac.trace().abs() * x.norm()) / scale
}

fn landau_exactness() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let points: Vec<Vec3> = (0..50).map(|_| random_direction(&mut rng) * rng.gen_range(0.5..10.0)).collect();
    let mut worst = 0.0f64;
    let mut worst_order = f64::INFINITY;
    for a in [1.5, 2.0, 5.0] {
        let sol = LandauSolution::new(LandauParams::from_a(a, Vec3::z())?);
        for &x in &points {
            worst = worst.max(scaled_residual(&sol, x, 1e-3));
        }
        let coarse: f64 = points.iter().map(|&x| scaled_residual(&sol, x, 0.08 * x.norm())).sum();
        let fine: f64 = points.iter().map(|&x| scaled_residual(&sol, x, 0.04 * x.norm())).sum();
        worst_order = worst_order.min((coarse / fine).log2());
    }
    Ok(Outcome {
        passed: worst <= 1e-6 && worst_order >= 2.0,
        detail: format!("max scaled residual at h = 1e-3 {worst:.2e}, observed order {worst_order:.2}"),
    })
}

fn force_identity() -> Result<Outcome> {
    let sol = LandauSolution::new(LandauParams::from_a(2.0, Vec3::z())?);
    let p = sol.pressure_evaluator();
    let expected = Vec3::new(0.0, 0.0, beta(2.0)?);
    let forces: Vec<Vec3> =
        [1.0, 2.0, 5.0].iter().map(|&r| net_force(&sol, &p, GradientMode::Exact, r, 16).map(|f| f.value)).collect::<Result<_>>()?;
    let rel = forces.iter().map(|f| (f - expected).norm() / expected.norm()).fold(0.0, f64::max);
    let spread = forces.iter().flat_map(|a| forces.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
    Ok(Outcome {
        passed: rel <= 1e-4 && spread <= 1e-6,
        detail: format!("beta(2) = {:.8}, relative error {rel:.2e}, R-spread {spread:.2e}", expected.z),
    })
}

fn beta_gamma_round_trip() -> Result<Outcome> {
    let samples: Vec<f64> = (0..100).map(|k| 1.001 * (1e3f64 / 1.001).powf(k as f64 / 99.0)).collect();
    let mut worst = 0.0f64;
    let mut betas = Vec::with_capacity(samples.len());
    for &a in &samples {
        let b = beta(a)?;
        worst = worst.max((gamma(b)? - a).abs() / a);
        betas.push(b);
    }
    let decreasing = betas.windows(2).all(|w| w[1] < w[0]);
    let limit = 1e4 * beta(1e4)?;
    let gap = (limit - BETA_LARGE_A_LIMIT).abs() / BETA_LARGE_A_LIMIT;
    Ok(Outcome {
        passed: worst <= 1e-10 && decreasing && gap <= 1e-3,
        detail: format!("round-trip error {worst:.2e}, decreasing {decreasing}, A beta(A) gap at 1e4 {gap:.2e}"),
    })
}

fn stokeslet_consistency() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = random_direction(&mut rng) * rng.gen_range(0.1..10.0);
        let r = x.norm();
        let t = (x.z / r).acos();
        let phi = x.y.atan2(x.x);
        let (ur, ut) = velocity_from_stream(&StokesletStream, r, t)?;
        let e_r = x / r;
        let e_t = Vec3::new(t.cos() * phi.cos(), t.cos() * phi.sin(), -t.sin());
        let column = oseen_tensor(x)?.column(2).into_owned();
        worst = worst.max((e_r * ur + e_t * ut - column).norm() / column.norm());
    }
    let flux = net_force(&Stokeslet, &StokesletPressure, GradientMode::Exact, 1.0, 16)?.parts.linear();
    let flux_err = (flux - Vec3::z()).norm();
    Ok(Outcome {
        passed: worst <= 1e-12 && flux_err <= 1e-6,
        detail: format!("max relative deviation {worst:.2e}, |flux - e3| {flux_err:.2e}"),
    })
}

fn reynolds_limit() -> Result<Outcome> {
    let rule = SphereRule::of_order(16);
    let mut sups = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let mut sup = 0.0f64;
        for (x, _) in rule.iter() {
            let g = oseen_tensor(*x)?.column(2).into_owned();
            sup = sup.max((reynolds_solution(eps, *x)? - g).norm());
        }
        sups.push(sup);
    }
    let monotone = sups.windows(2).all(|w| w[1] < w[0]);
    let bound = 0.01 / (4.0 * PI);
    Ok(Outcome {
        passed: monotone && sups[2] <= bound,
        detail: format!("sup deviations {:.3e}, {:.3e}, {:.3e} (bound {bound:.3e})", sups[0], sups[1], sups[2]),
    })
}

fn regularized_forcing() -> Result<Outcome> {
    let b = Vec3::new(0.0, 0.0, beta(2.0)?);
    let profile = RegularizationProfile::new(1.0)?;
    let field = RegularizedLandau::from_b(b, profile)?;
    let rule = SphereRule::of_order(12);
    let mut peak = 0.0f64;
    let mut outside = 0.0f64;
    for k in 0..=200 {
        let r = 0.05 + 3.95 * k as f64 / 200.0;
        let inside = (1.0..=2.0).contains(&r);
        for (n, _) in rule.iter() {
            let f = field.forcing(n * r).norm();
            if inside {
                peak = peak.max(f);
            } else {
                outside = outside.max(f);
            }
        }
    }
    let total = forcing_integral(b, profile)?;
    let rel = (total - b).norm() / b.norm();
    Ok(Outcome {
        passed: outside <= 1e-10 * peak && rel <= 1e-3,
        detail: format!("outside/peak {:.2e}, integral relative error {rel:.2e}", outside / peak),
    })
}

fn lemma_bound() -> Result<Outcome> {
    let mut weighted = Vec::new();
    let mut at_zero = 0.0;
    for r in [0.0, 1.0, 10.0, 50.0, 100.0] {
        let i = lemma41_integral(Vec3::new(0.0, 0.0, r), 1.5, 1.0)?;
        if r == 0.0 {
            at_zero = i;
        }
        weighted.push((1.0 + r).powf(1.5) * i);
    }
    let max = weighted.iter().cloned().fold(f64::MIN, f64::max);
    let min = weighted.iter().cloned().fold(f64::MAX, f64::min);
    let rel = (at_zero - 8.0 * PI / 3.0).abs() / (8.0 * PI / 3.0);
    Ok(Outcome {
        passed: max / min <= 5.0 && rel <= 1e-3,
        detail: format!("weighted values {weighted:.4?}, max/min {:.3}, I(0) relative error {rel:.2e}", max / min),
    })
}

fn contraction_mechanics() -> Result<Outcome> {
    let (xi1, xi2) = contraction_roots(0.0, 1.0, 3.0 / 16.0)?;
    let roots_ok = (xi1 - 0.25).abs() < 1e-14 && (xi2 - 0.75).abs() < 1e-14;
    let (eps, c) = (0.25, 1.5);
    let p = SyntheticQuadratic::new(Vec3::new(0.05, -0.02, 0.04), eps, Vec3::new(1.0, -2.0, 0.5), 0.9, c, Vec3::new(0.0, 0.6, 0.8));
    let cert = ContractionCertificate::new(eps, c, p.y.norm())?;
    let base = picard_iterate(&p, p.zero(), cert.xi2, 1e-14, 10_000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut gap = 0.0f64;
    for _ in 0..20 {
        let start = random_direction(&mut rng) * cert.xi2 * rng.gen_range(0.0..0.95);
        let run = picard_iterate(&p, start, cert.xi2, 1e-14, 10_000)?;
        if !run.converged {
            gap = f64::INFINITY;
        }
        gap = gap.max((run.state - base.state).norm());
    }
    let norm = base.state.norm();
    Ok(Outcome {
        passed: roots_ok && base.converged && norm <= cert.xi1 && gap <= 1e-8,
        detail: format!(
            "roots ({xi1}, {xi2}); fixed point norm {norm:.6e} <= xi1 {:.6e}; multistart gap {gap:.1e} over a xi2 = {:.3} ball",
            cert.xi1, cert.xi2
        ),
    })
}

fn end_to_end() -> Result<Outcome> {
    let b = Vec3::new(0.0, 0.0, 0.1);
    let out = run_landau_exterior(&LandauExteriorConfig::new(b))?;
    let r = &out.report;
    let cert = &r.solve.certificate;
    let a = &r.asymptotics;
    let force_err = (r.forcing_integral - b).norm() / b.norm();
    let cert_ok = cert.eps_hat < 1.0 && cert.discriminant > 0.0 && cert.xi1 < cert.xi2 && cert.y_norm <= cert.xi1;
    let v_exp = a.velocity_fit.as_ref().map_or(f64::NAN, |f| f.exponent);
    let p_exp = a.pressure_fit.as_ref().map_or(f64::NAN, |f| f.exponent);
    let passed = force_err <= 0.01
        && cert_ok
        && r.solve.converged
        && v_exp >= 1.5 - 0.1
        && a.remainder_norm <= 10.0 * cert.xi1
        && p_exp >= 2.5 - 0.15;
    Ok(Outcome {
        passed,
        detail: format!(
            "int f = {:.6} (error {force_err:.2e}); eps_hat {:.3e}, c_hat {:.3e}, |V| {:.4e}, xi1 {:.4e}; converged {} in {}; \
             remainder exponent {v_exp:.3}, X_1.5 norm {:.3e}; pressure exponent {p_exp:.3}; {} solver nodes",
            r.forcing_integral.z,
            cert.eps_hat,
            cert.c_hat,
            cert.y_norm,
            cert.xi1,
            r.solve.converged,
            r.solve.iterations,
            a.remainder_norm,
            r.solver_nodes
        ),
    })
}

fn counterexample() -> Result<Outcome> {
    let eps = 0.5;
    let mut residual = 0.0f64;
    for r in [3.0, 5.0, 10.0] {
        residual = residual.max(counterexample_field(3, eps, Vec3::new(r, 0.0, 0.0))?.1.abs());
    }
    let samples: Vec<(f64, f64)> = (0..24)
        .map(|k| 3.0 * 100f64.powf(k as f64 / 23.0))
        .map(|r| counterexample_field(3, eps, Vec3::new(r, 0.0, 0.0)).map(|(u, _)| (r, u.abs())))
        .collect::<Result<_>>()?;
    let fit = fit_decay_exponent(&samples)?;
    let (total, l1) = counterexample_forcing_integral(eps, 24, 16)?;
    Ok(Outcome {
        passed: residual <= 1e-6 && (fit.exponent - 1.5).abs() <= 1e-3 && fit.exponent < 2.0 && total.abs() <= 1e-10 * l1,
        detail: format!("residual {residual:.2e}, exponent {:.6}, integral {total:.2e} against L1 {l1:.3e}", fit.exponent),
    })
}

fn smallness_guard() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let config = dir.path().join("large.json");
    let json = r#"{
        "scenario": "landau-exterior",
        "b": [0.0, 0.0, 100.0],
        "forcing_grid": {"r_min": 0.5, "r_max": 2.7, "ratio": 1.3, "n_theta": 6, "n_phi": 4, "include_core": true, "radial_order": 4},
        "solver": {"alpha": 1.5, "grid": {"r_min": 0.5, "r_max": 100.0, "ratio": 1.6, "n_theta": 6, "n_phi": 6, "include_core": true, "radial_order": 2}}
    }"#;
    std::fs::write(&config, json)?;
    let out_dir = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_landau-asym"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .arg("solve")
        .output()
        ?;
    let code = output.status.code();
    let wrote_field = out_dir.join("v.csv").exists() || !output.stdout.is_empty();
    Ok(Outcome {
        passed: code == Some(3) && !wrote_field,
        detail: format!("exit code {code:?}, field written {wrote_field}"),
    })
}

#[test]
fn acceptance_criteria() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "Landau exactness", secs(1), landau_exactness),
        run(2, "force identity", secs(1), force_identity),
        run(3, "beta/gamma round trip", secs(1), beta_gamma_round_trip),
        run(4, "Stokeslet consistency", secs(1), stokeslet_consistency),
        run(5, "Reynolds limit", secs(1), reynolds_limit),
        run(6, "regularized forcing", secs(10), regularized_forcing),
        run(7, "weighted convolution bound", secs(30), lemma_bound),
        run(8, "contraction mechanics", secs(1), contraction_mechanics),
        run(9, "end-to-end far field of a Landau exterior flow", secs(600), end_to_end),
        run(10, "slowly decaying counterexample", secs(10), counterexample),
        run(11, "smallness guard", secs(60), smallness_guard),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
