use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn roughfilm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roughfilm")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const FLAT: &str = r#"{"geometry": {"f1": {"kind": "constant", "value": 0.0}, "f2": {"kind": "constant", "value": 1.0}}}"#;
const RIDGES: &str = r#"{"geometry": {"f1": {"kind": "sine2_1d"}, "parallel_offset": 0.5},
  "mesh": {"n_h": 8, "n_v": 4}}"#;

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(roughfilm(&["bogus"]).status.code(), Some(1));
    assert_eq!(roughfilm(&[]).status.code(), Some(1));
    assert_eq!(roughfilm(&["gamma-sweep"]).status.code(), Some(1));
    let help = roughfilm(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("gamma-sweep"));
}

#[test]
fn bad_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let crossing = write(
        dir.path(),
        "crossing.json",
        r#"{"geometry": {"f1": {"kind": "sine2_2d"}, "f2": {"kind": "constant", "value": 0.5}}}"#,
    );
    let o = roughfilm(&["--config", &crossing, "ahom"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("(0.5, 0.5)"));

    let skew = write(
        dir.path(),
        "skew.json",
        r#"{"geometry": {"f1": {"kind": "sine2_1d"}, "f2": {"kind": "constant", "value": 1.5}}}"#,
    );
    assert_eq!(roughfilm(&["--config", &skew, "ahom", "--parallel"]).status.code(), Some(2));
    assert_eq!(roughfilm(&["ahom"]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(roughfilm(&["--config", missing.to_str().unwrap(), "ahom"]).status.code(), Some(2));
    let broken = write(dir.path(), "broken.json", "{\"geometry\": ");
    assert_eq!(roughfilm(&["--config", &broken, "ahom"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let capped = write(
        dir.path(),
        "capped.json",
        r#"{"geometry": {"f1": {"kind": "sine2_1d"}, "parallel_offset": 0.5}, "mesh": {"n_h": 8, "n_v": 4, "max_iter": 2}}"#,
    );
    let o = roughfilm(&["--config", &capped, "ghom"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));
    assert!(o.stdout.is_empty());
}

#[test]
fn ghom_on_slab_and_ridges() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write(dir.path(), "flat.json", FLAT);
    let o = roughfilm(&["--config", &flat, "--threads", "1", "ghom"]);
    assert_eq!(o.status.code(), Some(0));
    let g = &json(&o)["G"];
    for (i, row) in g.as_array().unwrap().iter().enumerate() {
        for (j, v) in row.as_array().unwrap().iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((v.as_f64().unwrap() - expect).abs() < 1e-10);
        }
    }

    let ridges = write(dir.path(), "ridges.json", RIDGES);
    let field = dir.path().join("phi.csv");
    let o = roughfilm(&["--config", &ridges, "ghom", "--xi", "1,-0.5,0,2,-1,0", "--field", field.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    let (e, rec) = (r["xi"]["energy"].as_f64().unwrap(), r["xi"]["reconstructed"].as_f64().unwrap());
    assert!((e - rec).abs() < 1e-6 * (1.0 + 6.25));
    let rows = std::fs::read_to_string(field).unwrap().lines().count();
    assert_eq!(rows, 1 + 8 * 8 * 5);
    assert_eq!(roughfilm(&["--config", &ridges, "ghom", "--xi", "1,2,3"]).status.code(), Some(2));
}

#[test]
fn sweep_output_is_deterministic_and_finite() {
    let dir = tempfile::tempdir().unwrap();
    let ridges = write(dir.path(), "ridges.json", RIDGES);
    let csv = dir.path().join("sweep.csv");
    let args = ["--config", &ridges, "gamma-sweep", "--m", "0,0,-2", "--eps", "0.25,0.125", "--csv", csv.to_str().unwrap()];
    let a = roughfilm(&args);
    let b = roughfilm(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(r["m"], serde_json::json!([0.0, 0.0, -1.0]));
    assert_eq!(r["records"].as_array().unwrap().len(), 2);
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("eps,I_eps,target,abs_error,rel_error\n"));
    assert_eq!(text.lines().count(), 3);
    let bad = roughfilm(&["--config", &ridges, "gamma-sweep", "--m", "0,0,1", "--eps", "0.3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn energy_reads_field_csv() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write(dir.path(), "flat.json", FLAT);
    let mut rows = String::from("x_index,y_index,m1,m2,m3\n");
    for i in 0..4 {
        for j in 0..3 {
            rows.push_str(&format!("{i},{j},0,0,1\n"));
        }
    }
    let field = write(dir.path(), "m.csv", &rows);
    let o = roughfilm(&["--config", &flat, "energy", "--field", &field]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    assert_eq!(r["exchange_term"].as_f64(), Some(0.0));
    assert!((r["total"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert_eq!(r["grid"], serde_json::json!([4, 3]));

    let holes = write(dir.path(), "holes.csv", "0,0,0,0,1\n1,1,0,0,1\n");
    assert_eq!(roughfilm(&["--config", &flat, "energy", "--field", &holes]).status.code(), Some(2));
    let long = write(dir.path(), "long.csv", "0,0,0,0,2\n0,1,0,0,1\n1,0,0,0,1\n1,1,0,0,1\n");
    assert_eq!(roughfilm(&["--config", &flat, "energy", "--field", &long]).status.code(), Some(2));
}

#[test]
fn output_section_mirrors_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"geometry": {"f1": {"kind": "sine2_1d"}, "parallel_offset": 1.0},
            "rules": {"cell_rule": {"n": 4}, "plane_rule": {"R_cut": 10.0, "n_rad": 16, "n_ang": 32, "arc_density": 1.0}},
            "output": {"format": "csv", "path": "ahom.csv"}}"#,
    );
    let o = roughfilm(&["--config", &cfg, "ahom", "--parallel"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["formula_used"], "parallel");
    let text = std::fs::read_to_string(dir.path().join("ahom.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("total,")));

    let e = roughfilm(&["--config", &cfg, "easy-axis"]);
    assert_eq!(e.status.code(), Some(0));
    let r = json(&e);
    // ridges along x2 leave that direction free of charges
    assert_eq!(r["m"], serde_json::json!([0.0, 1.0, 0.0]));
}

#[test]
fn selftest_on_flat_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write(dir.path(), "flat.json", FLAT);
    let o = roughfilm(&["--config", &flat, "selftest"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["passed"], true);
    let checks = r["checks"].as_array().unwrap();
    let find = |n: &str| checks.iter().find(|c| c["name"] == n).unwrap()["passed"].clone();
    assert_eq!(find("flat_film_oracle"), true);
    assert_eq!(find("structure_config_geometry"), true);
}
