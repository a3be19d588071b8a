use std::path::Path;
use std::process::{Command, Output};

fn cremer(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cremer")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).expect("valid JSON")
}

#[test]
fn render_writes_exact_ppm() {
    let dir = tempfile::tempdir().unwrap();
    let o = cremer(dir.path(), &["render", "--poly", "0,0,1", "--width", "64", "--height", "48", "--bounds", "-2,2,-1.5,1.5", "--out", "d.ppm"]);
    assert!(o.status.success(), "{o:?}");
    let bytes = std::fs::read(dir.path().join("d.ppm")).unwrap();
    let header = b"P6\n64 48\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    assert_eq!(bytes.len(), header.len() + 64 * 48 * 3);
    // The centre pixel of z^2 lies in the unit disc.
    let k = header.len() + 3 * (24 * 64 + 32);
    assert_eq!(&bytes[k..k + 3], &[20, 20, 60]);
}

#[test]
fn ray_streams_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let o = cremer(dir.path(), &["ray", "--poly", "q:-1", "--angle", "1/3"]);
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(json).collect();
    let finals: Vec<&serde_json::Value> = lines.iter().filter(|v| v.get("status").is_some()).collect();
    assert_eq!(finals.len(), 2, "orbit of 1/3 has two rays");
    for f in finals {
        assert_eq!(f["status"], "LANDED");
        let p = f["point"].as_array().unwrap();
        assert!((p[0].as_f64().unwrap() - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-6);
    }
}

#[test]
fn partition_exit_codes_follow_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let pass = cremer(dir.path(), &["partition", "--poly", "q:-1", "--depth", "0"]);
    assert_eq!(pass.status.code(), Some(0));
    let report = json(&stdout(&pass));
    assert_eq!(report["verdict"], "PASS");
    assert_eq!(report["result"]["period"], 2);
    // m = 1 cannot separate the two Fatou markers.
    let fail = cremer(dir.path(), &["partition", "--poly", "q:-1", "--depth", "0", "--period", "1"]);
    assert_eq!(fail.status.code(), Some(2));
    assert_eq!(json(&stdout(&fail))["result"]["separation"]["verdict"], "FAIL");
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = cremer(dir.path(), &["cycles", "--poly", "1,2x,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PARSE_ERROR at position 3"));
    let o = cremer(dir.path(), &["cycles", "--poly", "0,0,2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NOT_MONIC"));
    let o = cremer(dir.path(), &["cycles", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    let o = cremer(dir.path(), &["ray", "--poly", "q:-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "poly = q:-1\nmax_period = 2\n# comment\ncenter = -0.5\nradius = 0.6\n").unwrap();
    let o = cremer(dir.path(), &["cycles", "--config", "run.cfg", "--max-period", "3"]);
    assert!(o.status.success(), "{o:?}");
    let report = json(&stdout(&o));
    assert_eq!(report["config"]["max_period"], "3");
    assert_eq!(report["config"]["poly"], "q:-1");
    // Inside |z + 0.5| <= 0.6: alpha and the superattracting 2-cycle {0, -1}.
    let cycles = report["result"]["census"]["cycles"].as_array().unwrap();
    let periods: Vec<u64> = cycles.iter().map(|c| c["period"].as_u64().unwrap()).collect();
    assert_eq!(periods, vec![1, 2]);
}

#[test]
fn echoed_config_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let first = cremer(dir.path(), &["probe", "--poly", "q:-1", "--max-period", "3", "--target", "1.618033988749895"]);
    assert!(first.status.success());
    let report = json(&stdout(&first));
    let text: String = report["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", v.as_str().unwrap()))
        .collect();
    std::fs::write(dir.path().join("echo.cfg"), text).unwrap();
    let second = cremer(dir.path(), &["probe", "--config", "echo.cfg"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn probe_never_claims_non_accessibility() {
    let dir = tempfile::tempdir().unwrap();
    let o = cremer(dir.path(), &["probe", "--poly", "q:-1", "--max-period", "2", "--target", "0.3+0.2i", "--fixed", "-0.618033988749895"]);
    assert!(o.status.success());
    let text = stdout(&o).to_lowercase();
    assert!(!text.contains("non-accessible") && !text.contains("inaccessible"));
}

#[test]
fn renorm_writes_masks() {
    let dir = tempfile::tempdir().unwrap();
    let o = cremer(dir.path(), &["renorm", "--poly", "-3,-3,0,1", "--seed", "-1", "--budget", "2000", "--out", "r.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&std::fs::read_to_string(dir.path().join("r.json")).unwrap());
    assert_eq!(report["result"]["renormalization"]["map"]["degree"], 2);
    assert_eq!(report["result"]["margin"], true);
    for name in ["r.inner.json", "r.outer.json"] {
        let mask = json(&std::fs::read_to_string(dir.path().join(name)).unwrap());
        assert!(mask["nx"].as_u64().unwrap() > 0);
    }
}

#[test]
fn pipeline_reports_verdicts_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = cremer(dir.path(), &["pipeline", "--poly", "q:0", "--out", "z2.json", "--set", "samples=200"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&std::fs::read_to_string(dir.path().join("z2.json")).unwrap());
    assert_eq!(report["verdict"], "PASS");
    assert_eq!(report["result"]["stabilization_period"], 1);
    assert_eq!(report["result"]["partitions"][0]["cells"].as_array().unwrap().len(), 1);
    let artifact = report["artifacts"][0].as_str().unwrap();
    assert!(dir.path().join(artifact).exists());
}

#[test]
fn pipeline_failure_keeps_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    // d^m - 1 exceeds the ray-count cap at m = 13.
    let o = cremer(dir.path(), &["pipeline", "--poly", "q:-1", "--period", "13", "--out", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    let report = json(&std::fs::read_to_string(dir.path().join("bad.json")).unwrap());
    assert_eq!(report["result"]["error"]["stage"], "fixed_collection");
    assert!(report["result"]["census"]["cycles"].as_array().is_some());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let o = cremer(dir.path(), &["render", "--poly", "q:-1", "--rays", "0,1/3,2/3", "--width", "96", "--height", "64", "--out", "b.ppm"]);
        assert!(o.status.success());
        outputs.push(std::fs::read(dir.path().join("b.ppm")).unwrap());
        let o = cremer(dir.path(), &["partition", "--poly", "q:-1", "--depth", "1", "--out", "p.json"]);
        assert!(o.status.success());
        outputs.push(std::fs::read(dir.path().join("p.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[2]);
    assert_eq!(outputs[1], outputs[3]);
}
