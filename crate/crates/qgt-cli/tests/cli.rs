use std::process::{Command, Output};

fn qgt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgt")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn link_table_as_json() {
    let o = qgt(&["kernel", "link", "--q", "1/2", "--zeta-plus", "1", "--zeta-minus", "-1", "--x", "+:2,+:0"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v, serde_json::json!({"(+:1)": "1/3", "(+:0)": "2/3", "tail": "0"}));
}

#[test]
fn spline_moment() {
    let o = qgt(&["spline", "moments", "--x", "+:2,+:0", "--m", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "5/6");
}

#[test]
fn csv_columns() {
    let o = qgt(&["kernel", "closed", "--x", "+:3,+:1,+:0", "--k", "2", "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("config,weight,tail_bound"));
    assert_eq!(lines.next(), Some("\"(+:2,+:0)\",3/7,0"));
    assert_eq!(lines.next(), Some("\"(+:1,+:0)\",4/7,0"));
}

#[test]
fn compose_agrees_with_closed_form() {
    let a = qgt(&["kernel", "compose", "--x", "-:2,+:3,+:1,+:0", "--k", "2"]);
    let b = qgt(&["kernel", "closed", "--x", "+:3,+:1,+:0,-:2", "--k", "2"]);
    assert!(a.status.success() && b.status.success());
    let a: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&b)).unwrap();
    let (a, b) = (a.as_object().unwrap(), b.as_object().unwrap());
    for (k, w) in a {
        if k == "tail" {
            continue;
        }
        let wa: f64 = w.as_str().unwrap().parse().unwrap();
        let wb: f64 = b.get(k).map_or(0.0, |v| v.as_str().unwrap().parse().unwrap());
        assert!((wa - wb).abs() < 1e-8, "{k}: {wa} vs {wb}");
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["sample", "--x", "+:3,+:2,+:0", "--k", "1", "--n", "500", "--seed", "9"];
    assert_eq!(stdout(&qgt(&args)), stdout(&qgt(&args)));
}

#[test]
fn trajectory_lines() {
    let o = qgt(&["sample", "--x", "+:3,+:2,+:0", "--k", "1", "--trajectory"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let levels: Vec<&str> = out.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(levels, ["3", "2", "1"]);
}

#[test]
fn transform_round_trip() {
    let o = qgt(&["transform", "inv", "--atom", "+:1=1/2", "--atom", "-:0=1/4", "--y", "-:0", "--order", "4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let re: f64 = v["re"].as_str().unwrap().parse().unwrap();
    assert!((re - 0.25).abs() < 1e-8);
}

#[test]
fn boundary_check_reports_residuals() {
    let o = qgt(&["boundary", "check", "--x", "+:0,-:1", "--k", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r: f64 = v["coherence"].as_str().unwrap().parse().unwrap();
    assert!(r < 1e-7);
}

#[test]
fn malformed_input_exits_with_2() {
    assert_eq!(qgt(&["kernel", "link", "--x", "+:2,+:x"]).status.code(), Some(2));
    assert_eq!(qgt(&["kernel", "link", "--x", "+:2", "--min-abs", "0"]).status.code(), Some(2));
    assert_eq!(qgt(&["kernel", "closed", "--x", "+:2,+:0", "--k", "5"]).status.code(), Some(2));
    assert_eq!(qgt(&["--q", "2", "kernel", "link", "--x", "+:1"]).status.code(), Some(2));
}

#[test]
fn quick_validation_passes() {
    let o = qgt(&["validate", "--level", "quick"]);
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 11, "{out}");
    assert_eq!(o.status.code(), Some(0));
}
