use std::path::Path;
use std::process::{Command, Output};

use landau_asym::fields::{read_table_csv, GridSpec, Vec3};
use landau_asym::landau::{beta, LandauSolution, LandauStream, StokesletStream, StreamFunction};
use landau_asym_cli::contour::{parse_svg, Polyline};

fn landau_asym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landau-asym")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_points(path: &Path, points: &[Vec3]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["x", "y", "z"]).unwrap();
    for p in points {
        w.write_record([p.x.to_string(), p.y.to_string(), p.z.to_string()]).unwrap();
    }
    w.flush().unwrap();
}

#[test]
fn landau_csv_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let points = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.3, -0.4, 2.0), Vec3::new(-5.0, 1.0, -1.0)];
    let input = dir.path().join("pts.csv");
    write_points(&input, &points);
    let out = landau_asym(&["landau", "--b", "1,-2,0.5", "--points", input.to_str().unwrap()]);
    assert!(out.status.success());
    let table = read_table_csv(out.stdout.as_slice()).unwrap();
    let u = table.vectors(["ux", "uy", "uz"]).unwrap();
    let p = table.scalars("p").unwrap();
    let sol = LandauSolution::from_b(Vec3::new(1.0, -2.0, 0.5)).unwrap();
    for (k, x) in points.iter().enumerate() {
        assert!((u[k] - sol.velocity(*x)).norm() <= 1e-14 * sol.velocity(*x).norm());
        assert!((p[k] - sol.pressure(*x)).abs() <= 1e-14 * sol.pressure(*x).abs());
    }
}

#[test]
fn zero_force_gives_the_zero_field() {
    let out = landau_asym(&["landau", "--b", "0,0,0"]);
    let table = read_table_csv(out.stdout.as_slice()).unwrap();
    assert!(table.vectors(["ux", "uy", "uz"]).unwrap().iter().all(|u| u.norm() == 0.0));
    assert!(table.scalars("p").unwrap().iter().all(|p| *p == 0.0));
}

#[test]
fn tabulated_landau_field_reproduces_its_force() {
    let dir = tempfile::tempdir().unwrap();
    let grid = GridSpec { r_min: 1.0, r_max: 8.0, ratio: 1.25, n_theta: 16, n_phi: 16, include_core: false, radial_order: 2 }
        .build()
        .unwrap();
    let pts = dir.path().join("grid.csv");
    write_points(&pts, grid.points());
    let field = dir.path().join("field");
    let out = landau_asym(&["--out", field.to_str().unwrap(), "landau", "--A", "2", "--points", pts.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = field.join("landau.csv");
    let report = json(&landau_asym(&["force", "--field", csv.to_str().unwrap(), "--radii", "2,4"]));
    let b = beta(2.0).unwrap();
    for f in report["forces"].as_array().unwrap() {
        let fz = f[2].as_f64().unwrap();
        assert!((fz - b).abs() <= 5e-3 * b, "force {fz} against {b}");
    }
}

#[test]
fn builtin_force_and_outflow() {
    let report = json(&landau_asym(&["force", "--A", "2", "--radii", "1,2,5"]));
    let b = beta(2.0).unwrap();
    for f in report["forces"].as_array().unwrap() {
        assert!((f[2].as_f64().unwrap() - b).abs() <= 1e-10 * b);
    }
    let report = json(&landau_asym(&["force", "--outflow", "1.5", "--radii", "1,3"]));
    for phi in report["outflow"].as_array().unwrap() {
        assert!((phi.as_f64().unwrap() - 1.5).abs() <= 1e-12);
    }
}

#[test]
fn beta_and_gamma_invert_each_other() {
    let b = json(&landau_asym(&["beta", "--A", "3"]))["beta"].as_f64().unwrap();
    let a = json(&landau_asym(&["gamma", "--beta", &b.to_string()]))["A"].as_f64().unwrap();
    assert!((a - 3.0).abs() <= 1e-10 * 3.0);
}

fn stream_svg(args: &[&str]) -> Vec<(f64, Vec<Polyline>)> {
    let out = landau_asym(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    parse_svg(&String::from_utf8(out.stdout).unwrap())
}

#[test]
fn stream_contours_lie_on_their_level() {
    let psi = LandauStream { a: 2.0 };
    let contours = stream_svg(&["stream", "--A", "2", "--levels", "0.5,1,2", "--resolution", "300"]);
    assert_eq!(contours.len(), 3);
    for (level, lines) in contours {
        assert!(!lines.is_empty());
        for (rho, z) in lines.iter().flatten() {
            let r = rho.hypot(*z);
            let value = psi.psi(r, rho.atan2(*z));
            assert!((value - level).abs() <= 1e-3 * level, "psi {value} on level {level}");
        }
    }
}

#[test]
fn stokeslet_contours_are_mirror_symmetric() {
    let contours = stream_svg(&["stream", "--stokeslet", "--levels", "0.1", "--resolution", "200"]);
    let points: Vec<(f64, f64)> = contours[0].1.iter().flatten().copied().collect();
    assert!(!points.is_empty());
    for (rho, z) in &points {
        let value = StokesletStream.psi(rho.hypot(*z), rho.atan2(*z));
        assert!((value - 0.1).abs() <= 1e-3 * 0.1);
        // the reflected point lies on the same level set
        let mirrored = StokesletStream.psi(rho.hypot(*z), rho.atan2(-z));
        assert!((mirrored - 0.1).abs() <= 1e-3 * 0.1);
    }
    let top = points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let bottom = points.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    assert!((top + bottom).abs() <= 2e-2 * top);
}

#[test]
fn verify_all_passes() {
    let out = landau_asym(&["verify"]);
    let report = json(&out);
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 15);
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(landau_asym(&["landau", "--A", "0.5"]).status.code(), Some(2));
    assert_eq!(landau_asym(&["force", "--A", "2"]).status.code(), Some(2));
    assert_eq!(landau_asym(&["verify", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(landau_asym(&["stream", "--A", "2", "--levels", ""]).status.code(), Some(2));
    assert_eq!(landau_asym(&["--threads", "0", "beta", "--A", "2"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(landau_asym(&["--config", bad.to_str().unwrap(), "solve"]).status.code(), Some(2));
    std::fs::write(&bad, r#"{"scenario": "dipole", "strength": 0.1, "colour": "red"}"#).unwrap();
    assert_eq!(landau_asym(&["--config", bad.to_str().unwrap(), "solve"]).status.code(), Some(2));
    assert_eq!(landau_asym(&["solve", "--scenario", "dipole", "--strength", "0.1", "--alpha", "2.5"]).status.code(), Some(2));
}

#[test]
fn origin_is_a_singular_point() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    write_points(&input, &[Vec3::zeros()]);
    let out = landau_asym(&["landau", "--A", "2", "--points", input.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    let out = landau_asym(&["landau", "--A", "2", "--regularized", "1", "--points", input.to_str().unwrap()]);
    assert!(out.status.success());
}

fn small_dipole(dir: &Path) -> std::path::PathBuf {
    let config = dir.join("dipole.json");
    let json = r#"{
        "scenario": "dipole",
        "strength": 0.3,
        "report_min_radius": 3.0,
        "solver": {"alpha": 1.5, "seed": 7, "grid": {"r_min": 0.5, "r_max": 60.0, "ratio": 1.6, "n_theta": 6, "n_phi": 6, "include_core": true, "radial_order": 2}}
    }"#;
    std::fs::write(&config, json).unwrap();
    config
}

#[test]
fn solve_writes_outputs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_dipole(dir.path());
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = landau_asym(&["--config", config.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "solve"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let a = run("a");
    let b = run("b");
    for file in ["v.csv", "q.csv", "certificate.json", "report.json"] {
        let left = std::fs::read(a.join(file)).unwrap();
        assert!(!left.is_empty(), "{file} is empty");
        assert_eq!(left, std::fs::read(b.join(file)).unwrap(), "{file} differs between runs");
    }
    let cert: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("certificate.json")).unwrap()).unwrap();
    assert!(cert["xi1"].as_f64().unwrap() < cert["xi2"].as_f64().unwrap());
}

#[test]
fn seed_override_changes_only_the_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_dipole(dir.path());
    let report = |seed: &str| json(&landau_asym(&["--config", config.to_str().unwrap(), "--seed", seed, "solve"]));
    let a = report("1");
    let b = report("2");
    assert_ne!(a["solve"]["bounds"]["c_samples"], b["solve"]["bounds"]["c_samples"]);
    let va = a["solve"]["final_norm"].as_f64().unwrap();
    let vb = b["solve"]["final_norm"].as_f64().unwrap();
    assert!((va - vb).abs() <= 1e-8 * va.max(1e-300));
}
