use landau_asym::fields::{GridSpec, Vec3};
use landau_asym::pipeline::{run_dipole, run_landau_exterior, DipoleConfig, LandauExteriorConfig, Scenario};
use landau_asym::Error;

fn small_solver_grid() -> GridSpec {
    GridSpec { r_min: 0.5, r_max: 80.0, ratio: 1.5, n_theta: 8, n_phi: 8, include_core: true, radial_order: 2 }
}

#[test]
fn dipole_far_field_decays_faster_than_landau() {
    let mut config = DipoleConfig::new(0.5);
    config.solver.grid = small_solver_grid();
    config.solver.check_uniqueness = true;
    config.report_min_radius = 3.0;
    let out = run_dipole(&config).unwrap();
    let r = &out.report;
    assert_eq!(r.b, Vec3::zeros());
    assert!(r.solve.converged && r.solve.within_xi1 && r.solve.captured);
    assert!(r.solve.uniqueness_gap.unwrap() <= 1e-6);
    let a = &r.asymptotics;
    let v = a.velocity_fit.as_ref().unwrap();
    let p = a.pressure_fit.as_ref().unwrap();
    assert!(v.exponent >= 1.5 - 0.1, "velocity exponent {}", v.exponent);
    assert!(p.exponent >= 2.5 - 0.15, "pressure exponent {}", p.exponent);
    assert!(a.certified);
}

#[test]
fn large_force_has_no_certificate() {
    let mut config = LandauExteriorConfig::new(Vec3::new(0.0, 0.0, 100.0));
    config.forcing_grid = GridSpec { r_min: 0.5, r_max: 2.7, ratio: 1.3, n_theta: 6, n_phi: 4, include_core: true, radial_order: 4 };
    config.solver.grid = GridSpec { r_min: 0.5, r_max: 40.0, ratio: 1.6, n_theta: 6, n_phi: 6, include_core: true, radial_order: 2 };
    match run_landau_exterior(&config) {
        Err(Error::NoCertificate { eps_hat, .. }) => assert!(eps_hat >= 1.0 || eps_hat.is_nan()),
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("a field was returned without a certificate"),
    }
}

#[test]
fn scenario_json_rejects_unknown_keys() {
    let ok: Scenario = serde_json::from_str(r#"{"scenario": "dipole", "strength": 0.2}"#).unwrap();
    assert!(matches!(ok, Scenario::Dipole(ref c) if c.strength == 0.2));
    assert!(serde_json::from_str::<Scenario>(r#"{"scenario": "dipole", "strength": 0.2, "strenght": 1}"#).is_err());
    assert!(serde_json::from_str::<Scenario>(r#"{"scenario": "vortex"}"#).is_err());
}

#[test]
fn alpha_outside_the_open_interval_is_rejected() {
    for alpha in [1.0, 2.0, 0.5] {
        let mut config = DipoleConfig::new(0.1);
        config.solver.alpha = alpha;
        assert!(matches!(config.validate(), Err(Error::InvalidConfig(_))));
    }
}
