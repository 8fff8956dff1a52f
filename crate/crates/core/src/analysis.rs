//! Decay fits, PDE residuals, the far-field report against `U^b`, and the
//! slowly decaying solution of a perturbed Poisson problem.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::quadrature::{gauss_legendre_interval, SphereRule};
use crate::fields::{fd, ScalarEvaluator, Vec3, VectorEvaluator};
use crate::jet::smoothstep;
use crate::landau::{LandauParams, LandauSolution};

/// Smallest number of radii in a fit.
pub const MIN_FIT_RADII: usize = 8;
/// Smallest ratio `r_max / r_min` of the fitted radii.
pub const MIN_FIT_SPAN: f64 = 8.0;
/// Fraction of the (logarithmic) radius range dropped at the inner end.
pub const INNER_EXCLUSION: f64 = 0.2;
pub const VELOCITY_FIT_TOLERANCE: f64 = 0.1;
pub const PRESSURE_FIT_TOLERANCE: f64 = 0.15;

/// Least-squares power law `m ≈ exp(log_prefactor) r^{-exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub r_range: (f64, f64),
    /// RMS of the residual in `(log r, log m)`.
    pub rms_residual: f64,
    pub dropped_zeros: usize,
    pub excluded_inner: usize,
    pub samples: Vec<(f64, f64)>,
}

impl DecayFit {
    pub fn model(&self, r: f64) -> f64 {
        (self.log_prefactor - self.exponent * r.ln()).exp()
    }

    /// Writes `r,magnitude,model` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["r", "magnitude", "model"])?;
        for &(r, m) in &self.samples {
            w.write_record([r.to_string(), m.to_string(), self.model(r).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits `log m = c - k log r` over the outer 80% of the log-radius range.
///
/// Non-positive magnitudes are dropped (and counted). The retained radii must
/// number at least [`MIN_FIT_RADII`] and span a factor of at least [`MIN_FIT_SPAN`].
pub fn fit_decay_exponent(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.iter().any(|(r, m)| !(*r > 0.0) || !r.is_finite() || m.is_nan()) {
        return Err(Error::InvalidInput("radii must be positive and magnitudes not NaN".into()));
    }
    let positive: Vec<(f64, f64)> = samples.iter().copied().filter(|(_, m)| *m > 0.0).collect();
    let dropped_zeros = samples.len() - positive.len();
    if positive.is_empty() {
        return Err(Error::InvalidInput("no positive magnitudes to fit".into()));
    }
    let lo = positive.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = positive.iter().map(|s| s.0).fold(0.0, f64::max);
    let cut = lo * (hi / lo).powf(INNER_EXCLUSION);
    let mut kept: Vec<(f64, f64)> = positive.into_iter().filter(|(r, _)| *r >= cut).collect();
    kept.sort_by(|a, b| a.0.total_cmp(&b.0));
    let excluded_inner = samples.len() - dropped_zeros - kept.len();
    let r_range = (kept.first().map_or(0.0, |s| s.0), kept.last().map_or(0.0, |s| s.0));
    if kept.len() < MIN_FIT_RADII || r_range.1 < MIN_FIT_SPAN * r_range.0 {
        return Err(Error::InvalidInput(format!(
            "decay fit needs {MIN_FIT_RADII} radii spanning a factor {MIN_FIT_SPAN}; got {} over [{}, {}]",
            kept.len(),
            r_range.0,
            r_range.1
        )));
    }
    let n = kept.len() as f64;
    let xs: Vec<f64> = kept.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit {
        exponent: -slope,
        log_prefactor: intercept,
        r_range,
        rms_residual: rms,
        dropped_zeros,
        excluded_inner,
        samples: kept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NseResidual {
    pub momentum: Vec3,
    pub divergence: f64,
}

/// `-Δu + (u·∇)u + ∇p - f` and `div u` at `x` by fourth-order central differences.
pub fn nse_residual(
    u: &dyn VectorEvaluator,
    p: &dyn ScalarEvaluator,
    f: Option<&dyn VectorEvaluator>,
    x: Vec3,
    h: f64,
) -> NseResidual {
    let (value, jac, lap) = fd::vector_stencil(|y| u.vector_at(y), x, h);
    let grad_p = fd::gradient(|y| p.scalar_at(y), x, h);
    let force = f.map_or(Vec3::zeros(), |f| f.vector_at(x));
    NseResidual { momentum: -lap + jac * value + grad_p - force, divergence: jac.trace() }
}

/// The linear part `-Δu + ∇p - f` only.
pub fn stokes_residual(
    u: &dyn VectorEvaluator,
    p: &dyn ScalarEvaluator,
    f: Option<&dyn VectorEvaluator>,
    x: Vec3,
    h: f64,
) -> NseResidual {
    let (_, jac, lap) = fd::vector_stencil(|y| u.vector_at(y), x, h);
    let grad_p = fd::gradient(|y| p.scalar_at(y), x, h);
    let force = f.map_or(Vec3::zeros(), |f| f.vector_at(x));
    NseResidual { momentum: -lap + grad_p - force, divergence: jac.trace() }
}

/// Comparison of a solution with `U^b` on a set of spheres.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub b: Vec3,
    pub alpha: f64,
    /// `sup (1+|x|)^α |u - U^b|` over the shells.
    pub remainder_norm: f64,
    /// `p₀` from the least-squares model `p - P^b ≈ p₀ + c|x|^{-α-1}` on the outer half of the shells.
    pub pressure_offset: f64,
    /// `sup (1+|x|)^{α+1} |p - p₀ - P^b|` over the shells.
    pub pressure_remainder_norm: f64,
    /// Per shell: `(r, max |u - U^b|, max |p - p₀ - P^b|)`.
    pub shells: Vec<(f64, f64, f64)>,
    /// `None` when the remainder vanishes on every shell.
    pub velocity_fit: Option<DecayFit>,
    pub pressure_fit: Option<DecayFit>,
    /// Both fits reach `α` and `α + 1` within tolerance.
    pub certified: bool,
    /// The velocity remainder decays no faster than `|x|^{-1}`: the leading term is not `U^b`.
    pub asymptotics_mismatch: bool,
}

/// Directions per shell in [`asymptotics_report`].
pub const REPORT_SPHERE_ORDER: usize = 8;

/// Remainders of `(u, p)` against `(U^b, P^b)` on spheres of the given radii.
pub fn asymptotics_report(
    u: &dyn VectorEvaluator,
    p: &dyn ScalarEvaluator,
    b: Vec3,
    alpha: f64,
    shells: &[f64],
) -> Result<AsymptoticsReport> {
    if shells.is_empty() || shells.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidInput("shell radii must be positive".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    let landau = LandauSolution::new(LandauParams::from_b(b)?);
    let rule = SphereRule::of_order(REPORT_SPHERE_ORDER);
    let dirs: Vec<(Vec3, f64)> = rule.iter().map(|(e, w)| (*e, w)).collect();
    let total_w: f64 = dirs.iter().map(|d| d.1).sum();

    // per shell: max |u - U|, pressure differences, their weighted mean
    let raw: Vec<(f64, f64, Vec<f64>, f64)> = shells
        .par_iter()
        .map(|&r| {
            let mut du = 0.0f64;
            let mut dp = Vec::with_capacity(dirs.len());
            let mut mean = 0.0;
            for (e, w) in &dirs {
                let x = e * r;
                du = du.max((u.vector_at(x) - landau.velocity(x)).norm());
                let d = p.scalar_at(x) - landau.pressure(x);
                mean += w * d;
                dp.push(d);
            }
            (r, du, dp, mean / total_w)
        })
        .collect();

    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&i, &j| raw[i].0.total_cmp(&raw[j].0));
    let outer: Vec<usize> = order[order.len() / 2..].to_vec();
    let pressure_offset = fit_offset(
        &outer.iter().map(|&i| (raw[i].0, raw[i].3)).collect::<Vec<_>>(),
        alpha + 1.0,
    );

    let mut shells_out = Vec::with_capacity(raw.len());
    let mut remainder_norm = 0.0f64;
    let mut pressure_remainder_norm = 0.0f64;
    for &i in &order {
        let (r, du, dp, _) = &raw[i];
        let dp_max = dp.iter().map(|d| (d - pressure_offset).abs()).fold(0.0, f64::max);
        remainder_norm = remainder_norm.max((1.0 + r).powf(alpha) * du);
        pressure_remainder_norm = pressure_remainder_norm.max((1.0 + r).powf(alpha + 1.0) * dp_max);
        shells_out.push((*r, *du, dp_max));
    }

    let velocity_fit = optional_fit(shells_out.iter().map(|s| (s.0, s.1)).collect())?;
    let pressure_fit = optional_fit(shells_out.iter().map(|s| (s.0, s.2)).collect())?;
    let velocity_ok = velocity_fit.as_ref().is_none_or(|f| f.exponent >= alpha - VELOCITY_FIT_TOLERANCE);
    let pressure_ok = pressure_fit.as_ref().is_none_or(|f| f.exponent >= alpha + 1.0 - PRESSURE_FIT_TOLERANCE);
    let asymptotics_mismatch = velocity_fit.as_ref().is_some_and(|f| f.exponent < 1.0 + VELOCITY_FIT_TOLERANCE);
    Ok(AsymptoticsReport {
        b,
        alpha,
        remainder_norm,
        pressure_offset,
        pressure_remainder_norm,
        shells: shells_out,
        velocity_fit,
        pressure_fit,
        certified: velocity_ok && pressure_ok,
        asymptotics_mismatch,
    })
}

/// Remainders at round-off level carry no decay information.
fn optional_fit(samples: Vec<(f64, f64)>) -> Result<Option<DecayFit>> {
    let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    if peak <= 1e-13 {
        return Ok(None);
    }
    fit_decay_exponent(&samples).map(Some)
}

/// `p₀` in the least-squares model `d(r) ≈ p₀ + c r^{-k}`.
fn fit_offset(data: &[(f64, f64)], k: f64) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    if data.len() == 1 {
        return data[0].1;
    }
    let n = data.len() as f64;
    let (mut s1, mut s11, mut sy, mut s1y) = (0.0, 0.0, 0.0, 0.0);
    for &(r, d) in data {
        let phi = r.powf(-k);
        s1 += phi;
        s11 += phi * phi;
        sy += d;
        s1y += phi * d;
    }
    let det = n * s11 - s1 * s1;
    if det.abs() <= 1e-14 * n * s11 {
        return sy / n;
    }
    (s11 * sy - s1 * s1y) / det
}

/// `κ = ε(3-ε)/(1-ε)`, for which `x₁|x|^{-3+ε}` solves `-Δu + κ div(x u/|x|²) = 0` off the origin.
pub fn counterexample_coefficient(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(eps * (3.0 - eps) / (1.0 - eps))
}

fn counterexample_u(eps: f64, x: Vec3) -> f64 {
    let r = x.norm();
    if r <= 1.0 {
        return 0.0;
    }
    smoothstep(r - 1.0)[0] * x.x * r.powf(-3.0 + eps)
}

/// Finite-difference step used by [`counterexample_field`].
pub const COUNTEREXAMPLE_STEP: f64 = 1e-3;

/// `(u(x), -Δu + κ div(x u/|x|²))` for `u = η(|x|) x₁|x|^{-n+ε}`, `η` vanishing on `B₁` and equal to 1 outside `B₂`.
///
/// The second entry is the forcing the cut-off field needs; it vanishes outside `B₂`.
pub fn counterexample_field(n: usize, eps: f64, x: Vec3) -> Result<(f64, f64)> {
    if n != 3 {
        return Err(Error::Domain(format!("only n = 3 is supported, got {n}")));
    }
    let kappa = counterexample_coefficient(eps)?;
    let h = COUNTEREXAMPLE_STEP;
    let u = |y: Vec3| counterexample_u(eps, y);
    let lap = fd::scalar_laplacian(u, x, h);
    let flux = |y: Vec3| {
        let r2 = y.norm_squared();
        if r2 == 0.0 {
            Vec3::zeros()
        } else {
            y * (u(y) / r2)
        }
    };
    let div = fd::divergence(flux, x, h);
    Ok((u(x), -lap + kappa * div))
}

/// `(∫ f, ∫ |f|)` over `B₂` for the forcing of [`counterexample_field`].
pub fn counterexample_forcing_integral(eps: f64, radial_nodes: usize, sphere_order: usize) -> Result<(f64, f64)> {
    counterexample_coefficient(eps)?;
    let rule = SphereRule::of_order(sphere_order);
    let mut total = 0.0;
    let mut abs = 0.0;
    for (r, wr) in gauss_legendre_interval(1.0, 2.0, radial_nodes) {
        for (e, we) in rule.iter() {
            let (_, f) = counterexample_field(3, eps, e * r)?;
            total += wr * we * r * r * f;
            abs += wr * we * r * r * f.abs();
        }
    }
    Ok((total, abs))
}

/// Writes a report as pretty JSON.
pub fn write_report_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{FnScalar, FnVector, Zero};
    use crate::green::{Stokeslet, StokesletPressure};

    fn radii(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn pure_power_law() {
        let s: Vec<_> = radii(20, 1.0, 100.0).into_iter().map(|r| (r, 3.0 * r.powf(-1.5))).collect();
        let fit = fit_decay_exponent(&s).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-10);
        assert!(fit.rms_residual < 1e-12);
        assert!((fit.log_prefactor - 3f64.ln()).abs() < 1e-10);
        let c: Vec<_> = radii(20, 1.0, 100.0).into_iter().map(|r| (r, 2.0)).collect();
        assert!(fit_decay_exponent(&c).unwrap().exponent.abs() < 1e-10);
    }

    #[test]
    fn wobbly_power_law() {
        let s: Vec<_> = radii(40, 1.0, 1000.0).into_iter().map(|r| (r, (1.0 + 0.1 * r.ln().sin()) / r)).collect();
        let fit = fit_decay_exponent(&s).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.05);
        assert!(fit.rms_residual > 1e-4);
    }

    #[test]
    fn fit_guards() {
        let short: Vec<_> = radii(20, 1.0, 4.0).into_iter().map(|r| (r, 1.0 / r)).collect();
        assert!(fit_decay_exponent(&short).is_err());
        let few: Vec<_> = radii(5, 1.0, 100.0).into_iter().map(|r| (r, 1.0 / r)).collect();
        assert!(fit_decay_exponent(&few).is_err());
        let mut with_zero: Vec<_> = radii(20, 1.0, 100.0).into_iter().map(|r| (r, 1.0 / r)).collect();
        with_zero[10].1 = 0.0;
        assert_eq!(fit_decay_exponent(&with_zero).unwrap().dropped_zeros, 1);
    }

    #[test]
    fn landau_residual_is_small() {
        let sol = LandauSolution::new(LandauParams::from_a(2.0, Vec3::z()).unwrap());
        let res = nse_residual(&sol, &sol.pressure_evaluator(), None, Vec3::new(2.0, 0.0, 0.0), 1e-3);
        assert!(res.momentum.norm() < 1e-6, "{:?}", res);
        assert!(res.divergence.abs() < 1e-6);
        let c = FnScalar(|_| 1.0);
        let r = nse_residual(&Zero, &c, None, Vec3::new(0.3, 1.0, -2.0), 1e-3);
        assert_eq!(r.momentum, Vec3::zeros());
        assert_eq!(r.divergence, 0.0);
    }

    #[test]
    fn stokeslet_linear_residual() {
        let res = stokes_residual(&Stokeslet, &StokesletPressure, None, Vec3::new(2.0, 0.0, 0.0), 1e-3);
        assert!(res.momentum.norm() < 1e-6);
    }

    #[test]
    fn report_against_itself_and_perturbations() {
        let b = Vec3::new(0.0, 0.0, 0.3);
        let sol = LandauSolution::new(LandauParams::from_b(b).unwrap());
        let shells = radii(16, 2.0, 200.0);
        let rep = asymptotics_report(&sol, &sol.pressure_evaluator(), b, 1.5, &shells).unwrap();
        assert!(rep.remainder_norm < 1e-14 && rep.pressure_offset.abs() < 1e-14);
        assert!(rep.certified && !rep.asymptotics_mismatch);

        let pert = FnVector(|x: Vec3| sol.velocity(x) + Vec3::new(1.0, 0.5, 0.0) / x.norm_squared());
        let shifted = FnScalar(|x: Vec3| sol.pressure(x) + 0.7 + x.z / x.norm().powi(4));
        let rep = asymptotics_report(&pert, &shifted, b, 1.5, &shells).unwrap();
        assert!((rep.velocity_fit.as_ref().unwrap().exponent - 2.0).abs() < 0.1);
        assert!((rep.pressure_offset - 0.7).abs() < 1e-6);
        assert!(rep.certified);

        let other = LandauSolution::new(LandauParams::from_b(b * 2.0).unwrap());
        let rep = asymptotics_report(&other, &other.pressure_evaluator(), b, 1.5, &shells).unwrap();
        assert!((rep.velocity_fit.unwrap().exponent - 1.0).abs() < 1e-6);
        assert!(rep.asymptotics_mismatch && !rep.certified);
    }

    #[test]
    fn counterexample_pointwise() {
        for r in [3.0, 5.0, 10.0] {
            let (u, res) = counterexample_field(3, 0.5, Vec3::new(r, 0.0, 0.0)).unwrap();
            assert!((u - r.powf(-1.5)).abs() < 1e-15);
            assert!(res.abs() < 1e-6, "{r} {res}");
        }
        assert!(counterexample_field(3, 1.0, Vec3::x()).is_err());
        assert!(counterexample_field(2, 0.5, Vec3::x()).is_err());
        let (u, f) = counterexample_field(3, 0.5, Vec3::new(0.3, 0.1, 0.0)).unwrap();
        assert_eq!(u, 0.0);
        assert_eq!(f, 0.0);
        let (_, f) = counterexample_field(3, 0.5, Vec3::new(1.5, 0.1, 0.0)).unwrap();
        assert!(f.abs() > 1e-3);
        let (total, abs) = counterexample_forcing_integral(0.5, 24, 16).unwrap();
        assert!(abs > 0.1 && total.abs() < 1e-10 * abs);
    }
}
