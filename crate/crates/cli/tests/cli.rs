use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn gmfg(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gmfg")).args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn key_paths(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    if let Value::Object(map) = v {
        for (k, child) in map {
            let p = format!("{prefix}/{k}");
            out.insert(p.clone());
            key_paths(child, &p, out);
        }
    }
}

const SMALL: &str = "[grid]\nn = 32\n[time]\nT = 0.5\nn_t = 50\n[clusters]\nM = 4\n";

fn coupled() -> String {
    format!(
        "{SMALL}[graphon]\nkind = \"uniform_attachment\"\n[cost]\nell2 = \"cos(2*pi*(x - y))\"\n\
         [drift]\nb = \"0.2*sin(2*pi*x)\"\n[initial]\nm0 = \"1 + 0.5*cos(2*pi*(x - a))\"\n\
         [monte_carlo]\nn_paths = 2000\n"
    )
}

#[test]
fn decoupled_scenario_exits_zero_within_two_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{SMALL}[graphon]\nkind = \"constant\"\np = 0.0\n[initial]\nm0 = \"1 + 0.5*cos(2*pi*x)\"\n");
    let cfg = scenario(dir.path(), "s.toml", &body);
    let out = dir.path().join("out");
    let (code, stdout, _) = gmfg(&["solve", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let r = report(&out);
    assert!(r["solve"]["iterations"].as_u64().unwrap() <= 2);
    assert_eq!(r["exit_code"], 0);
    for f in ["mu.csv", "v.csv", "grad_v.csv"] {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(text.starts_with("t,alpha,x,value\n"));
        assert_eq!(text.lines().count(), 1 + 51 * 4 * 32);
    }
}

#[test]
fn constant_graphon_reports_small_alpha_variation() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{SMALL}[graphon]\nkind = \"constant\"\np = 0.5\n[drift]\nb = \"0.2*cos(2*pi*x)\"\n[initial]\nm0 = \"1 + 0.5*sin(2*pi*x)\"\n"
    );
    let cfg = scenario(dir.path(), "s.toml", &body);
    let out = dir.path().join("out");
    let (code, ..) = gmfg(&["solve", cfg.to_str().unwrap(), "--output", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code, 0);
    assert!(report(&out)["alpha_variation"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn stability_guard_exits_three_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[grid]\nn = 8\n[time]\nn_t = 200\n[clusters]\nM = 2\n[drift]\nb = \"3*sin(2*pi*x)\"\n";
    let cfg = scenario(dir.path(), "s.toml", body);
    let out = dir.path().join("out");
    let (code, _, stderr) = gmfg(&["solve", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("stability guard"), "{stderr}");
    assert!(stderr.contains("n >="), "{stderr}");
    let r = report(&out);
    assert_eq!(r["exit_code"], 3);
    assert!(r["error"].as_str().unwrap().contains("h <="));
}

#[test]
fn non_convergence_exits_two_with_same_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let good = scenario(dir.path(), "good.toml", &coupled());
    let bad = scenario(dir.path(), "bad.toml", &format!("{}[picard]\nmax_iter = 1\n", coupled()));
    let (o1, o2, o3) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(gmfg(&["solve", good.to_str().unwrap(), "--output", o1.to_str().unwrap()]).0, 0);
    assert_eq!(gmfg(&["solve", bad.to_str().unwrap(), "--output", o2.to_str().unwrap()]).0, 2);
    let guard = scenario(dir.path(), "guard.toml", "[grid]\nn = 8\n[clusters]\nM = 2\n[drift]\nb = \"3*sin(2*pi*x)\"\n");
    assert_eq!(gmfg(&["solve", guard.to_str().unwrap(), "--output", o3.to_str().unwrap()]).0, 3);
    let (mut k1, mut k2) = (BTreeSet::new(), BTreeSet::new());
    key_paths(&report(&o1), "", &mut k1);
    key_paths(&report(&o2), "", &mut k2);
    assert_eq!(k1, k2);
    let top = |v: &Value| v.as_object().unwrap().keys().cloned().collect::<BTreeSet<_>>();
    assert_eq!(top(&report(&o1)), top(&report(&o3)));
    assert_eq!(report(&o2)["solve"]["residuals"].as_array().unwrap().len(), 1);
}

#[test]
fn identical_configs_give_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "s.toml", &coupled());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(gmfg(&["solve", cfg.to_str().unwrap(), "--output", a.to_str().unwrap(), "--threads", "1"]).0, 0);
    assert_eq!(gmfg(&["solve", cfg.to_str().unwrap(), "--output", b.to_str().unwrap()]).0, 0);
    for f in ["mu.csv", "v.csv", "grad_v.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn density_csv_reloads_as_initial_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "s.toml", &coupled());
    let out = dir.path().join("out");
    assert_eq!(gmfg(&["solve", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]).0, 0);
    let reload = scenario(
        dir.path(),
        "reload.toml",
        &format!("{SMALL}[initial]\nm0_file = \"out/mu.csv\"\n"),
    );
    let sc = gmfg_core::load_scenario(&reload).unwrap().build().unwrap();
    let mu = gmfg_core::output::read_field_csv(&out.join("mu.csv")).unwrap().values;
    let last = mu.levels() - 1;
    for j in 0..4 {
        for (a, b) in sc.m0.slice(j).iter().zip(mu.slice(last, j)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = gmfg(&["solve", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("missing.toml"));
    let cfg = scenario(dir.path(), "neg.toml", "[time]\nT = -1.0\n");
    let (code, _, stderr) = gmfg(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("time.T"), "{stderr}");
    let cfg = scenario(dir.path(), "typo.toml", "[grid]\nn = 32\nnn = 3\n");
    let (code, _, stderr) = gmfg(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 3"), "{stderr}");
    assert_eq!(gmfg(&["frobnicate"]).0, 2);
}

#[test]
fn probe_and_norms_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "s.toml", &coupled());
    let out = dir.path().join("out");
    let (code, stdout, _) = gmfg(&["probe", cfg.to_str().unwrap(), "--seeds", "3", "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let r = report(&out);
    assert_eq!(r["probe"]["passed"], true);
    assert_eq!(r["probe"]["pairwise"].as_array().unwrap().len(), 3);
    let (code, stdout, _) = gmfg(&["norms", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("S^1/2"));
    let norms: Value = serde_json::from_str(&std::fs::read_to_string(out.join("norms.json")).unwrap()).unwrap();
    assert!(norms["density"]["sup"].as_f64().unwrap() > 1.0);
    let empty = dir.path().join("empty");
    assert_eq!(gmfg(&["norms", cfg.to_str().unwrap(), "--output", empty.to_str().unwrap()]).0, 1);
}

#[test]
fn validate_runs_all_oracles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "s.toml", &coupled());
    let out = dir.path().join("out");
    let (code, stdout, stderr) = gmfg(&["validate", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    let r = report(&out);
    assert_eq!(code, 0, "{stdout}{stderr}\n{}", serde_json::to_string_pretty(&r["validation"]).unwrap());
    let v = &r["validation"];
    assert_eq!(v["passed"], true);
    assert_eq!(v["clusters"].as_array().unwrap().len(), 3);
    assert_eq!(v["nash"].as_array().unwrap().len(), 3);
}
