use gmfg_core::monte_carlo::validate_solution;
use gmfg_core::output::{field_to_csv, parse_field_csv};
use gmfg_core::{load_scenario, picard_solve};

const BODY: &str = r#"
[grid]
n = 32
[time]
T = 0.5
n_t = 60
[clusters]
M = 4
[graphon]
kind = "uniform_attachment"
[cost]
ell2 = "cos(2*pi*(x - y))"
[drift]
b = "0.2*sin(2*pi*x)"
[initial]
m0 = "1 + 0.5*cos(2*pi*(x - a))"
[monte_carlo]
n_paths = 2000
"#;

#[test]
fn toml_to_validated_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, BODY).unwrap();
    let cfg = load_scenario(&path).unwrap();
    let sc = cfg.build().unwrap();
    let sol = picard_solve(&sc, &cfg.picard_config().unwrap()).unwrap();
    assert!(sol.report.converged);
    assert!(sol.report.bounds_passed());
    let v = validate_solution(&sc, &sol, &cfg.mc_config()).unwrap();
    assert!(v.passed);
    assert_eq!(v.clusters, vec![0, 2, 3]);
}

#[test]
fn density_field_survives_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, BODY).unwrap();
    let cfg = load_scenario(&path).unwrap();
    let sc = cfg.build().unwrap();
    let sol = picard_solve(&sc, &cfg.picard_config().unwrap()).unwrap();
    let text = field_to_csv(&sc.disc.grid, &sc.disc.tgrid, &sc.disc.alpha, &sol.mu).unwrap();
    let back = parse_field_csv(&text).unwrap();
    assert_eq!(back.values, sol.mu);
}
