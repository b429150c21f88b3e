use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hjreg_core::io::read_scalar_field;

fn hjreg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hjreg")).args(args).current_dir(dir).output().unwrap()
}

fn write_config(dir: &Path, text: &str) {
    fs::write(dir.join("cfg.json"), text).unwrap();
}

const CONE: &str = r#"{"n": 65, "coefficient": {"constant": {"vector": [0.3, 0.0]}}, "boundary": "zero"}"#;

#[test]
fn cone_centre_value_is_the_distance_to_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), CONE);
    let o = hjreg(&["solve-hj", "--config", "cfg.json", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let h = read_scalar_field::<f64>(&dir.path().join("out/h_plus.txt")).unwrap();
    let g = h.grid().clone();
    let c = g.nearest_node([0.0, 0.0]).unwrap();
    // Distance 1 to the unit circle, in the Randers metric of the shift (0.3, 0).
    let exact = hjreg_core::oracles::cone_value([0.3, 0.0], 1.0, [0.0, 0.0]).unwrap();
    assert!((h.get(c) - exact).abs() <= 2.0 * g.spacing(), "{} vs {exact}", h.get(c));
    let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/h_plus.json")).unwrap()).unwrap();
    assert!(side["cycles"].as_u64().unwrap() > 0);
    assert!(dir.path().join("out/h_minus.txt").is_file());
}

#[test]
fn malformed_config_exits_2_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "{\"n\": 65,\n \"coefficient\": ");
    let o = hjreg(&["solve-hj", "--config", "cfg.json", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cfg.json:2:"));
    assert!(!dir.path().join("out").exists());

    write_config(dir.path(), r#"{"n": 65, "coefficient": {"constant": {"vector": [0, 0]}}, "boundary": "zero", "rhs": -1}"#);
    let o = hjreg(&["solve-hj", "--config", "cfg.json", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn degenerate_shift_is_flagged_in_the_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"n": 33, "coefficient": {"constant": {"vector": [1.0, 0]}}, "boundary": "zero"}"#);
    let o = hjreg(&["solve-hj", "--config", "cfg.json", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let side = fs::read_to_string(dir.path().join("out/h_plus.json")).unwrap();
    assert!(side.contains("degenerate shift"), "{side}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        r#"{"n": 65, "coefficient": {"mueller": {"alpha": 0.5}}, "boundary": "mueller_trace",
            "measurement": {"field": "obstacle", "alpha": 0.5, "plane": {"given": {"value": 0, "gradient": [1, 0]}},
                            "anisotropic_radii": [0.25, 0.125], "levels": [0.1], "deltas": [0.125, 0.0625]}}"#,
    );
    for out in ["a", "b"] {
        for cmd in ["solve-hj", "solve-obstacle", "measure"] {
            let o = hjreg(&[cmd, "--config", "cfg.json", "--out", out, "--jobs", if out == "a" { "1" } else { "3" }], dir.path());
            assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for expected in ["u.txt", "contact.json", "modulus_0.csv", "diagnostics_0.json", "lambda_plus.txt"] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}");
    }
    for n in names {
        assert_eq!(fs::read(dir.path().join("a").join(&n)).unwrap(), fs::read(dir.path().join("b").join(&n)).unwrap(), "{n:?}");
    }
    let csv = fs::read_to_string(dir.path().join("a/modulus_0.csv")).unwrap();
    assert!(csv.starts_with("r,osc_onesided,osc_twosided,bound,regime\n"));
}

#[test]
fn unknown_suite_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hjreg(&["acceptance", "--suite", "nope", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
