use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lambertq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap().trim_end().to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Vec<Value> {
    stdout(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn eval_lambert_prints_digits() {
    let out = run(&["eval", "lambert", "--q", "1/2", "--digits", "40"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1.606695152415291763783301523190924580481");
}

#[test]
fn eval_report_is_one_json_line() {
    let out = run(&["eval", "qxt", "--x", "0.3", "--t", "0.2", "--q", "0.5", "--method", "alt", "--report"]);
    assert!(out.status.success());
    let lines = json(&out);
    assert_eq!(lines.len(), 1);
    let r = &lines[0];
    assert_eq!(r["method"], "alt");
    assert!(r["value"].as_str().unwrap().starts_with("1.7174544142333825307759548340"));
    assert!(r["tail_bound"].is_string());
    assert!(r["terms_used"].as_u64().unwrap() > 0);
}

#[test]
fn eval_accepts_negative_parameters() {
    let out = run(&["eval", "theta3", "--q", "-0.3", "--digits", "12"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "0.416160642609");
}

#[test]
fn bilateral_methods_print_the_same_value() {
    let values: Vec<String> = ["direct", "theta", "form1", "form2"]
        .iter()
        .map(|m| stdout(&run(&["eval", "bilateral", "--x", "0.5", "--t", "0.6", "--q", "0.2", "--method", m])))
        .collect();
    assert!(values.iter().all(|v| v == "2.10994149296804891703842572036"), "{values:?}");
}

#[test]
fn domain_errors_exit_2() {
    let out = run(&["eval", "lambert", "--q", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("q outside (\u{2212}1,1)"));
    assert_eq!(run(&["eval", "qxt", "--x", "0.3", "--q", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "lambert", "--q", "0.5", "--method", "alt"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "lambert", "--q", "abc"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "lambert", "--q", "0.5", "--digits", "0"]).status.code(), Some(2));
}

#[test]
fn recip_sum_examples() {
    let fib = run(&["recip-sum", "--m1", "1", "--m2", "1", "--digits", "7", "--method", "horadam"]);
    assert_eq!(stdout(&fib), "3.359886");
    let pell = run(&["recip-sum", "--m1", "2", "--m2", "1", "--digits", "7", "--method", "horadam"]);
    assert_eq!(stdout(&pell), "1.842203");
    assert_eq!(run(&["recip-sum", "--m1", "1", "--m2", "-1", "--digits", "10"]).status.code(), Some(2));
    assert_eq!(run(&["recip-sum", "--m1", "2", "--m2", "1", "--method", "gosper"]).status.code(), Some(2));
    assert_eq!(run(&["recip-sum", "--m1", "2", "--m2", "1", "--method", "split"]).status.code(), Some(2));
}

#[test]
fn verify_single_and_unknown() {
    let out = run(&["verify", "--identity", "symm", "--trials", "20", "--seed", "7"]);
    assert!(out.status.success());
    let r = &json(&out)[0];
    assert_eq!(r["name"], "symm");
    assert_eq!(r["trials"], 20);
    assert_eq!(r["seed"], 7);
    assert_eq!(r["pass"], true);
    assert!(r["worst_point"]["q"].is_string());

    let out = run(&["verify", "--identity", "unknown"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["verify"]).status.code(), Some(2));
}

#[test]
fn verify_gosper_matrix_with_fixed_factors() {
    let out = run(&["verify", "--identity", "gosper-matrix", "--factors", "200"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let r = &json(&out)[0];
    assert_eq!(r["pass"], true);
}

#[test]
fn bench_reports_consistent_methods() {
    let out = run(&["bench", "--series", "qxt", "--x", "0", "--t", "0.5", "--q", "0.5", "--digits", "50"]);
    assert!(out.status.success());
    let r = &json(&out)[0];
    assert_eq!(r["consistent"], true);
    let methods = r["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 3);
    for m in methods {
        assert!(m["value"].as_str().unwrap().starts_with("2.0"));
    }

    let out = run(&["bench", "--series", "lambert", "--q", "1/2", "--digits", "100"]);
    let r = &json(&out)[0];
    let theta = r["methods"].as_array().unwrap().iter().find(|m| m["method_tag"] == "theta").unwrap();
    assert!(theta["terms_used"].as_u64().unwrap() <= 23);
    assert!(r["term_ratio"].as_f64().unwrap() > 1.0);
}
