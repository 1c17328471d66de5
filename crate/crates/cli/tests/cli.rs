use std::io::Write;
use std::process::{Command, Output};

fn cmsys(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmsys")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn couplings_of_a_row() {
    let o = cmsys(&["couplings", "--space", "A II"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("g^2 = 2"));
}

#[test]
fn commuting_pair_passes() {
    let o = cmsys(&["verify", "commute", "--family", "A", "--rank", "2", "--kind", "rational", "--ops", "H,I3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS commute"));
}

#[test]
fn perturbed_coupling_fails_with_exit_one() {
    let o = cmsys(&["verify", "commute", "--family", "B", "--rank", "2", "--ops", "H,I4B", "--perturb", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL"));
}

#[test]
fn json_report_parses() {
    let o = cmsys(&["verify", "fvanish", "--family", "G", "--rank", "2", "--points", "5", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["check"], "f_vanish");
    assert_eq!(v["pass"], true);
}

#[test]
fn domain_errors_exit_two() {
    let o = cmsys(&["print", "--op", "I4B", "--family", "A", "--rank", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cmsys(&["print", "--op", "H", "--family", "A", "--rank", "1", "--kind", "elliptic"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cmsys(&["verify", "commute", "--family", "A", "--rank", "2", "--ops", "H"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn print_formats() {
    let o = cmsys(&["print", "--op", "H", "--family", "A", "--rank", "1", "--kind", "trig", "--format", "sexpr"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("csc"));
    let o = cmsys(&["print", "--op", "I3", "--family", "A", "--rank", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dim"], 2);
}

#[test]
fn calibrate_recovers_quartic_weight() {
    let o = cmsys(&["calibrate", "--template", "i4", "--family", "A", "--rank", "3", "--kind", "rational", "--g2", "2", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["values"][0][0], "x4");
    let x4 = v["values"][0][1].as_f64().unwrap();
    assert!((x4 - 4.0).abs() < 1e-9, "{x4}");
}

#[test]
fn suite_from_config_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(
        f,
        r#"{{"suite": [
            {{"check": "commute", "system": {{"family": "A", "rank": 2, "kind": "trig"}}, "operators": ["H", "I4"], "n_points": 5}},
            {{"check": "table_couplings"}}
        ]}}"#
    )
    .unwrap();
    let path = f.path().to_str().unwrap();
    let o = cmsys(&["suite", "--config", path, "--format", "text"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("2 passed, 0 failed"));
    let o = cmsys(&["suite", "--config", path]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reports"][0]["operators"][1], "I4");
    assert_eq!(v["passed"], 2);
}

#[test]
fn bad_config_names_the_field() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, r#"{{"suite": [{{"check": "commute", "n_points": "many"}}]}}"#).unwrap();
    let o = cmsys(&["suite", "--config", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_points"));
}
