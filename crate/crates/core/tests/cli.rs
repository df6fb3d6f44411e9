use std::path::{Path, PathBuf};

use mwmw::cli::{
    apply_override, fmt_f64, main_with_args, run_command, to_json_string, Command, Format, RunConfig, ENTROPY_HEADER,
    EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, SWEEP_HEADER,
};
use serde_json::{json, Value};

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("mwmw").chain(args.iter().copied()))
}

fn run_preset(cmd: &str, name: &str, out: &Path, extra: &[&str]) -> i32 {
    let config = preset(name);
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn verify_dipole_preset_passes() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("verify", "dipole", out.path(), &[]), EXIT_PASS);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], json!(true));
    let names: Vec<&str> = report["items"].as_array().unwrap().iter().map(|i| i["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"k_symmetry") && names.contains(&"charge_family") && names.contains(&"decay_k"));
}

#[test]
fn verify_symmetry_breaker_fails() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("verify", "symmetry_breaker", out.path(), &[]), EXIT_FAIL);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("verify.json")).unwrap()).unwrap();
    let sym = report["items"].as_array().unwrap().iter().find(|i| i["name"] == "k_symmetry").unwrap();
    assert_eq!(sym["pass"], json!(false));
}

#[test]
fn multi_index_length_must_match_dimension() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("sweep", "dipole", out.path(), &["--set", "symmetry.a=1,0"]), EXIT_CONFIG);
    assert!(!out.path().join("sweep.csv").exists());
}

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["verify", "--out", out]), EXIT_CONFIG);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"lattice": {"kind": "hypercubic", "d": 1, "half_extent": 3}, "bogus": 1}"#).unwrap();
    assert_eq!(run(&["verify", "--config", bad.to_str().unwrap(), "--out", out]), EXIT_CONFIG);
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["verify", "--config", bad.to_str().unwrap(), "--out", out]), EXIT_CONFIG);
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["verify", "--config", missing.to_str().unwrap(), "--out", out]), EXIT_CONFIG);
    assert_eq!(run_preset("entropy", "entropy", dir.path(), &["--set", "run.seed=null"]), EXIT_CONFIG);
    assert_eq!(run_preset("sweep", "dipole", dir.path(), &["--set", "run.slope_threshold=0"]), EXIT_CONFIG);
}

#[test]
fn sweep_dipole_preset_is_bounded() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("sweep", "dipole", out.path(), &[]), EXIT_PASS);
    let text = std::fs::read_to_string(out.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), SWEEP_HEADER);
    let rows = csv_rows(&out.path().join("sweep.csv"));
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == 13 && r[12] == "bounded"));
    for r in &rows {
        let tri: f64 = r[6].parse().unwrap();
        let rhs: f64 = r[7].parse().unwrap();
        assert!(tri <= rhs);
    }
}

#[test]
fn sweep_at_zero_angle_has_zero_bounds() {
    let out = tempfile::tempdir().unwrap();
    let code = run_preset("sweep", "dipole", out.path(), &["--set", "run.s=0", "--set", "run.m_range=[2,3]"]);
    assert_eq!(code, EXIT_PASS);
    for r in csv_rows(&out.path().join("sweep.csv")) {
        for col in [5, 6, 7] {
            assert_eq!(r[col].parse::<f64>().unwrap(), 0.0, "column {col} in {r:?}");
        }
    }
}

#[test]
fn sweep_contrast_is_growing() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("sweep", "xy_contrast", out.path(), &["--format", "json"]), EXIT_FAIL);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"]["kind"], json!("growing"));
    assert!(report["verdict"]["exponent"].as_f64().unwrap() >= 0.8);
    assert!(report["rows"][0]["rhs_bound"].is_null());
}

#[test]
fn sweep_in_two_dimensions_quotes_the_multi_index() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("sweep", "slab", out.path(), &["--set", "run.m_range=[2,4]"]), EXIT_PASS);
    let text = std::fs::read_to_string(out.path().join("sweep.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("2,\"0,0\","));
}

#[test]
fn sweep_reports_truncation_with_exit_3() {
    let out = tempfile::tempdir().unwrap();
    let code =
        run_preset("sweep", "dipole", out.path(), &["--set", "lattice.half_extent=8", "--set", "run.exact=false"]);
    assert_eq!(code, mwmw::cli::EXIT_RESOURCE);
    let rows = csv_rows(&out.path().join("sweep.csv"));
    assert!(!rows.is_empty() && rows.len() < 5);
    assert!(rows.iter().all(|r| r[12] == "truncated"));
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let extra = ["--set", "run.m_range=[2,4]", "--threads", "1"];
    assert_eq!(run_preset("sweep", "dipole", a.path(), &extra), EXIT_PASS);
    assert_eq!(run_preset("sweep", "dipole", b.path(), &extra), EXIT_PASS);
    assert_eq!(std::fs::read(a.path().join("sweep.csv")).unwrap(), std::fs::read(b.path().join("sweep.csv")).unwrap());
}

#[test]
fn entropy_suite_has_100_small_defects() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("entropy", "entropy", out.path(), &[]), EXIT_PASS);
    let text = std::fs::read_to_string(out.path().join("entropy.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), ENTROPY_HEADER);
    let rows = csv_rows(&out.path().join("entropy.csv"));
    assert_eq!(rows.len(), 100);
    let max = rows.iter().map(|r| r[4].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(max <= 1e-8, "{max}");
}

#[test]
fn geometry_z2_preset_passes() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("geometry", "z2_geometry", out.path(), &[]), EXIT_PASS);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("geometry.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["pass"], json!(true));
    assert_eq!(report["report"]["growth"]["c"].as_f64(), Some(9.0));
    assert_eq!(report["report"]["growth"]["gamma"].as_f64(), Some(2.0));
    // A constant that is too small fails.
    assert_eq!(run_preset("geometry", "z2_geometry", out.path(), &["--set", "run.growth.c=1"]), EXIT_FAIL);
}

#[test]
fn ffunction_preset_reproduces_zeta_value() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("ffunction", "ffunction", out.path(), &[]), EXIT_PASS);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("ffunction.json")).unwrap()).unwrap();
    let norm = report["norm_f"].as_f64().unwrap();
    assert!((norm - 1.40411).abs() < 1e-5, "{norm}");
}

#[test]
fn overrides_follow_dotted_paths() {
    let mut v = json!({ "run": { "beta": 1.0 } });
    apply_override(&mut v, "run.beta", "2.5").unwrap();
    apply_override(&mut v, "output.dir", "results").unwrap();
    apply_override(&mut v, "symmetry.a", "1,0").unwrap();
    assert_eq!(v["run"]["beta"], json!(2.5));
    assert_eq!(v["output"]["dir"], json!("results"));
    assert_eq!(v["symmetry"]["a"], json!("1,0"));
    assert!(apply_override(&mut v, "run..beta", "1").is_err());
    assert!(apply_override(&mut v, "run.beta.x", "1").is_err());
}

#[test]
fn interaction_can_live_in_its_own_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("phi.json"), r#"{"builtin": {"name": "dipole_hop4"}}"#).unwrap();
    let cfg_path = dir.path().join("run.json");
    std::fs::write(
        &cfg_path,
        r#"{"lattice": {"kind": "hypercubic", "d": 1, "half_extent": 6}, "interaction": {"file": "phi.json"},
            "symmetry": {"k": 1}}"#,
    )
    .unwrap();
    let cfg = RunConfig::load(&cfg_path, &[]).unwrap();
    let o = run_command(Command::Verify, &cfg, dir.path(), Format::Json).unwrap();
    assert_eq!(o.code, EXIT_PASS, "{}", o.summary);
}

#[test]
fn floats_carry_17_significant_digits() {
    assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    for x in [std::f64::consts::PI, 1e-300, -2.5e17] {
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
    let v = json!({ "x": 0.1, "n": 3, "list": [1.5, null], "empty": [] });
    let text = to_json_string(&v);
    assert!(text.contains("1.0000000000000001e-1") && text.contains("\"n\": 3"));
    assert_eq!(serde_json::from_str::<Value>(&text).unwrap()["x"], json!(0.1));
}
