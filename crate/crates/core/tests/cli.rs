use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use spl_core::case2::CASE2_CERTIFICATES;
use spl_core::run::CASE1_CERTIFICATES;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn spl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spl")).args(args).output().unwrap()
}

fn solve(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    spl(&args)
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn case1_benchmark_exits_zero_with_full_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve(&configs().join("case1_benchmark.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["certificates"]["order"], "pass");
    let keys: Vec<&String> = r["certificates"].as_object().unwrap().keys().collect();
    assert_eq!(keys, CASE1_CERTIFICATES.to_vec());
    for f in ["u.csv", "e1.csv", "eigen.json", "mesh_nodes.csv", "mesh_elements.csv"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let header = std::fs::read_to_string(dir.path().join("u.csv")).unwrap();
    assert!(header.starts_with("x,u,lower,upper,v0,e1\n"));
    for k in ["lambda1", "a_lambda", "capital_a_lambda", "c_k"] {
        assert!(r["constants"][k].is_number(), "missing constant {k}");
    }
}

#[test]
fn case2_report_is_deterministic_apart_from_timings() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = configs().join("case2_benchmark.toml");
    for d in [&a, &b] {
        let o = solve(&cfg, d.path(), &["--seed", "3"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let strip = |mut v: Value| {
        let obj = v.as_object_mut().unwrap();
        obj.remove("timings");
        obj["config"].as_object_mut().unwrap().remove("output");
        v
    };
    let (ra, rb) = (strip(report(a.path())), strip(report(b.path())));
    assert_eq!(ra, rb);
    let mut want: Vec<&str> = CASE2_CERTIFICATES.to_vec();
    want.push("weight_admissible");
    want.sort();
    let keys: Vec<&str> = ra["certificates"].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, want);
    assert_eq!(ra["config"]["seed"], 3);
    for f in ["nu.csv", "zeta.csv", "path_profile.csv"] {
        let na = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(na, std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn lambda_far_above_estimate_warns_on_sphere_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hi.toml");
    std::fs::write(&cfg, "case = \"II\"\nlambda_rel = 2.0\n").unwrap();
    let o = solve(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&dir.path().join("out"));
    assert_eq!(r["certificates"]["sphere_geometry"], "warn");
    assert_eq!(r["certificates"]["lambda_range"], "warn");
    assert_eq!(r["status"], "warn");
}

#[test]
fn missing_weight_table_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(&cfg, "case = \"I\"\n[weight]\nkind = \"table\"\npath = \"absent.csv\"\n").unwrap();
    let o = solve(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.csv"));
}

#[test]
fn relative_table_paths_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("x,w\n");
    for k in 0..=40 {
        let x = -1.0 + k as f64 / 20.0;
        table.push_str(&format!("{x},{}\n", 1.0 + 0.5 * x * x));
    }
    std::fs::write(dir.path().join("w.csv"), table).unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(
        &cfg,
        "case = \"I\"\nresolution = 128\n[weight]\nkind = \"table\"\npath = \"w.csv\"\n[f]\nkind = \"affine\"\nc0 = 1.0\nc1 = 1.0\n",
    )
    .unwrap();
    let o = solve(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn invalid_ranges_list_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve(&configs().join("case2_benchmark.toml"), dir.path(), &["--q", "1.2", "--r", "1.0"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("q must lie in (0,1)"), "{e}");
    assert!(e.contains("open interval (p-1, p_s*-1)"), "{e}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(&cfg, "case = \"II\"\nlamda = 0.1\n[weight]\nkind = \"constant\"\nvalu = 2\n").unwrap();
    let o = solve(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("unknown key `lamda`") && e.contains("unknown key `weight.valu`"), "{e}");
}

#[test]
fn hard_certificate_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(
        &cfg,
        "case = \"I\"\nresolution = 64\n[f]\nkind = \"affine\"\nc0 = 1.0\nc1 = 1.0\n[tolerances]\nresidual = 1e-300\n",
    )
    .unwrap();
    let o = solve(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let r = report(&dir.path().join("out"));
    assert_eq!(r["certificates"]["residual"], "fail");
    assert_eq!(r["status"], "fail");
}

#[test]
fn solver_failure_exits_one_with_stage_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(&cfg, "case = \"II\"\nlambda_rel = 8.0\n").unwrap();
    let o = solve(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("error in stage"), "{}", stderr(&o));
    let r = report(&dir.path().join("out"));
    assert_eq!(r["status"], "error");
    assert!(r["stage"].is_string());
}

#[test]
fn weighted_disk_case2_keeps_the_mountain_pass_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t.toml");
    std::fs::write(
        &cfg,
        "case = \"II\"\nr = 1.5\nresolution = 16\n[domain]\nkind = \"disk\"\nradius = 1.0\n[weight]\nkind = \"power\"\nalpha = 0.5\n",
    )
    .unwrap();
    let o = solve(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&dir.path().join("out"));
    let rho = r["constants"]["geometry"]["rho"].as_f64().unwrap();
    let (nu, zeta) = (r["energies"]["nu"].as_f64().unwrap(), r["energies"]["zeta"].as_f64().unwrap());
    assert!(nu < 0.0 && rho <= zeta, "I(nu) {nu}, rho {rho}, I(zeta) {zeta}");
    assert_eq!(r["certificates"]["mountain_pass_level"], "pass");
}
