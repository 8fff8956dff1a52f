use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use landau_asym::fields::{
    read_table_csv, write_scalar_csv, write_vector_csv, FnScalar, FnVector, ScalarEvaluator, SphericalAxes, Vec3,
    VectorEvaluator,
};
use landau_asym::flux::{canonical_outflow_field, net_force, outflow, GradientMode};
use landau_asym::landau::{
    beta, gamma, LandauParams, LandauSolution, LandauStream, ReynoldsStream, RegularizationProfile, RegularizedLandau,
    StokesletStream, StreamFunction,
};
use landau_asym::pipeline::{DipoleConfig, LandauExteriorConfig, Scenario};
use landau_asym::Error;

use crate::contour::{meridian_contours, to_svg};
use crate::{BetaArgs, Cli, CliError, CliResult, ForceArgs, GammaArgs, LandauArgs, SolveArgs, StreamArgs, EXIT_OK};

/// Writes `contents` to `<out>/<name>`, or to stdout without `--out`.
pub(crate) fn emit(cli: &Cli, name: &str, contents: &str) -> CliResult<()> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), contents)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            if !contents.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn vec3(v: &[f64], what: &str) -> CliResult<Vec3> {
    if v.len() != 3 || v.iter().any(|c| !c.is_finite()) {
        return Err(CliError::Config(format!("{what} needs three finite components, got {v:?}")));
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn landau_params(a: Option<f64>, b: &Option<Vec<f64>>) -> CliResult<LandauParams> {
    match (a, b) {
        (Some(a), None) => Ok(LandauParams::from_a(a, Vec3::z())?),
        (None, Some(b)) => Ok(LandauParams::from_b(vec3(b, "--b")?)?),
        _ => Err(CliError::Config("give exactly one of --A and --b".into())),
    }
}

/// `r ∈ {0.5, 1, 2, 5, 10}`, 13 polar angles, in the `xz` half-plane.
fn meridian_sample() -> Vec<Vec3> {
    let mut pts = Vec::new();
    for r in [0.5, 1.0, 2.0, 5.0, 10.0] {
        for k in 0..13 {
            let t = PI * k as f64 / 12.0;
            pts.push(Vec3::new(r * t.sin(), 0.0, r * t.cos()));
        }
    }
    pts
}

fn field_csv(points: &[Vec3], u: &[Vec3], p: &[f64]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "z", "ux", "uy", "uz", "p"]).map_err(|e| CliError::Other(e.to_string()))?;
    for ((x, v), s) in points.iter().zip(u).zip(p) {
        w.write_record([x.x, x.y, x.z, v.x, v.y, v.z, *s].map(|c| c.to_string()))
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Other(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Other(e.to_string()))
}

pub fn cmd_landau(cli: &Cli, args: &LandauArgs) -> CliResult<i32> {
    let params = landau_params(args.a, &args.b)?;
    let points = match &args.points {
        Some(path) => read_table_csv(fs::File::open(path)?)?.points()?,
        None => meridian_sample(),
    };
    let (u, p): (Vec<Vec3>, Vec<f64>) = match args.regularized {
        Some(r0) => {
            let reg = RegularizedLandau::new(params, RegularizationProfile::new(r0)?);
            points.iter().map(|x| (reg.velocity(*x), reg.pressure(*x))).unzip()
        }
        None => {
            if !params.is_zero() && points.iter().any(|x| x.norm() == 0.0) {
                return Err(Error::Singularity.into());
            }
            let sol = LandauSolution::new(params);
            points.iter().map(|x| (sol.velocity(*x), sol.pressure(*x))).unzip()
        }
    };
    emit(cli, "landau.csv", &field_csv(&points, &u, &p)?)?;
    Ok(EXIT_OK)
}

pub fn cmd_beta(cli: &Cli, args: &BetaArgs) -> CliResult<i32> {
    let value = beta(args.a)?;
    emit(cli, "beta.json", &to_json(&serde_json::json!({ "A": args.a, "beta": value }))?)?;
    Ok(EXIT_OK)
}

pub fn cmd_gamma(cli: &Cli, args: &GammaArgs) -> CliResult<i32> {
    let value = gamma(args.beta)?;
    emit(cli, "gamma.json", &to_json(&serde_json::json!({ "beta": args.beta, "A": value }))?)?;
    Ok(EXIT_OK)
}

/// A field read from CSV and interpolated on its spherical axes.
struct TabulatedField {
    axes: SphericalAxes,
    u: Vec<Vec3>,
    p: Vec<f64>,
}

impl TabulatedField {
    fn read(path: &Path) -> CliResult<Self> {
        let table = read_table_csv(fs::File::open(path)?)?;
        let points = table.points()?;
        let u_rows = table.vectors(["ux", "uy", "uz"])?;
        let p_rows = table.scalars("p")?;
        let (axes, perm) = SphericalAxes::detect(&points)?;
        Ok(TabulatedField {
            u: perm.iter().map(|&i| u_rows[i]).collect(),
            p: perm.iter().map(|&i| p_rows[i]).collect(),
            axes,
        })
    }
}

#[derive(Serialize)]
struct ForceReport {
    radii: Vec<f64>,
    forces: Vec<Vec3>,
    outflow: Vec<f64>,
    converged: Vec<bool>,
    max_deviation: f64,
}

pub fn cmd_force(cli: &Cli, args: &ForceArgs) -> CliResult<i32> {
    if args.radii.is_empty() || args.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(CliError::Config("--radii needs positive radii".into()));
    }
    type Source = (Box<dyn VectorEvaluator>, Box<dyn ScalarEvaluator>, Option<f64>);
    let (u, p, fd_scale): Source = if let Some(phi) = args.outflow {
        let a = canonical_outflow_field(phi);
        let b = a;
        (Box::new(FnVector(move |x| a.velocity(x))), Box::new(FnScalar(move |x| b.pressure(x))), Some(1e-4))
    } else if let Some(path) = &args.field {
        let t = Arc::new(TabulatedField::read(path)?);
        let t2 = t.clone();
        (
            Box::new(FnVector(move |x| t.axes.interpolate(&t.u, 1.0, x))),
            Box::new(FnScalar(move |x| t2.axes.interpolate(&t2.p, 2.0, x))),
            Some(1e-2),
        )
    } else if args.a.is_some() || args.b.is_some() {
        let sol = LandauSolution::new(landau_params(args.a, &args.b)?);
        let s2 = sol.clone();
        (Box::new(sol), Box::new(FnScalar(move |x| s2.pressure(x))), None)
    } else {
        return Err(CliError::Config("give one of --A, --b, --outflow, --field".into()));
    };
    let mut report = ForceReport { radii: args.radii.clone(), forces: vec![], outflow: vec![], converged: vec![], max_deviation: 0.0 };
    for &r in &args.radii {
        let mode = match fd_scale {
            None => GradientMode::Exact,
            Some(s) => GradientMode::FiniteDifference { h: Some(s * r) },
        };
        let f = net_force(&u, &p, mode, r, args.order)?;
        report.forces.push(f.value);
        report.converged.push(f.converged);
        report.outflow.push(outflow(&u, r, args.order)?);
    }
    for a in &report.forces {
        for b in &report.forces {
            report.max_deviation = report.max_deviation.max((a - b).norm());
        }
    }
    emit(cli, "force.json", &to_json(&report)?)?;
    Ok(EXIT_OK)
}

fn scenario_from_args(cli: &Cli, args: &SolveArgs) -> CliResult<Scenario> {
    let mut scenario = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Scenario>(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => match args.scenario.as_deref() {
            Some("landau-exterior") => {
                let b = args.b.as_ref().ok_or_else(|| CliError::Config("landau-exterior needs --b".into()))?;
                Scenario::LandauExterior(LandauExteriorConfig::new(vec3(b, "--b")?))
            }
            Some("dipole") => Scenario::Dipole(DipoleConfig::new(args.strength.unwrap_or(0.05))),
            Some(other) => return Err(CliError::Config(format!("unknown scenario {other:?}"))),
            None => return Err(CliError::Config("give --config or --scenario".into())),
        },
    };
    if let Some(seed) = cli.seed {
        scenario.solver_mut().seed = seed;
    }
    if let Some(alpha) = args.alpha {
        scenario.solver_mut().alpha = alpha;
    }
    scenario.validate()?;
    Ok(scenario)
}

pub fn cmd_solve(cli: &Cli, args: &SolveArgs) -> CliResult<i32> {
    let scenario = scenario_from_args(cli, args)?;
    let out = match scenario.run() {
        Ok(out) => out,
        Err(e @ Error::NoCertificate { .. }) => {
            if let Error::NoCertificate { eps_hat, c_hat, y_norm } = &e {
                let diag = serde_json::json!({ "eps_hat": eps_hat, "c_hat": c_hat, "y_norm": y_norm });
                eprintln!("{}", diag);
            }
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let report = to_json(&out.report)?;
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        let grid = out.result.v.grid();
        write_vector_csv(fs::File::create(dir.join("v.csv"))?, grid.points(), out.result.v.values())?;
        write_scalar_csv(fs::File::create(dir.join("q.csv"))?, grid.points(), out.result.q.values())?;
        fs::write(dir.join("certificate.json"), to_json(&out.result.certificate)?)?;
        fs::write(dir.join("report.json"), &report)?;
        if let Some(fit) = &out.report.asymptotics.velocity_fit {
            fit.write_csv(&dir.join("velocity_fit.csv"))?;
        }
        if let Some(fit) = &out.report.asymptotics.pressure_fit {
            fit.write_csv(&dir.join("pressure_fit.csv"))?;
        }
    } else {
        emit(cli, "report.json", &report)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_stream(cli: &Cli, args: &StreamArgs) -> CliResult<i32> {
    let levels = args.levels.clone().unwrap_or_default();
    if levels.is_empty() || levels.iter().any(|l| !l.is_finite()) {
        return Err(CliError::Config("--levels needs at least one finite level".into()));
    }
    if !(args.r_max > 0.0) || args.resolution < 8 {
        return Err(CliError::Config("--r-max must be positive and --resolution at least 8".into()));
    }
    let psi: Box<dyn StreamFunction> = if let Some(a) = args.a {
        if !(a > 1.0) {
            return Err(Error::Domain(format!("A must exceed 1, got {a}")).into());
        }
        Box::new(LandauStream { a })
    } else if args.stokeslet {
        Box::new(StokesletStream)
    } else if let Some(eps) = args.eps {
        Box::new(ReynoldsStream::new(eps)?)
    } else {
        return Err(CliError::Config("give one of --A, --stokeslet, --eps".into()));
    };
    let contours = meridian_contours(psi.as_ref(), args.r_max, args.resolution, &levels);
    emit(cli, "stream.svg", &to_svg(&contours, args.r_max))?;
    Ok(EXIT_OK)
}
