use std::fs;
use std::path::PathBuf;

use serde_json::Value;
use walras_flow::cli::{run, EXIT_BUDGET, EXIT_OK, EXIT_PARSE};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("walras-flow").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn solve_lone_buyer() {
    let (code, out, _) = call(&["solve", &fixture("lone_buyer.json")]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert_eq!(v["prices"], json(r#"{"alpha":0,"beta":0}"#));
    assert_eq!(v["allocation"], json(r#"{"1":{"alpha":1,"beta":1}}"#));
}

#[test]
fn solve_output_is_byte_stable() {
    let (_, out, _) = call(&["solve", &fixture("vcg.json")]);
    let expected = r#"{
  "allocation": {
    "1": {
      "alpha": 2
    },
    "2": {
      "alpha": 1,
      "beta": 1
    },
    "3": {
      "beta": 1
    }
  },
  "prices": {
    "alpha": 2,
    "beta": 0
  }
}
"#;
    assert_eq!(out, expected);
}

#[test]
fn solve_empty() {
    let (code, out, _) = call(&["solve", &fixture("empty.json")]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(json(&out), json(r#"{"prices":{},"allocation":{}}"#));
}

#[test]
fn duplicate_demo_shows_the_gap() {
    let (code, out, _) = call(&["duplicate-demo", &fixture("lone_buyer.json")]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert_eq!(v["original"]["prices"], json(r#"{"alpha":0,"beta":0}"#));
    assert_eq!(
        v["duplicated"]["prices"],
        json(r#"{"alpha#1":4,"beta#1":0}"#)
    );
}

#[test]
fn modes_print_identical_prices() {
    for f in [
        "lone_buyer.json",
        "three_goods.json",
        "vcg.json",
        "price_jump.json",
    ] {
        let (_, unit, _) = call(&["solve", &fixture(f), "--mode", "unit"]);
        let (_, adapted, _) = call(&["solve", &fixture(f), "--mode", "adapted"]);
        let (_, cold, _) = call(&["solve", &fixture(f), "--warm-start", "false"]);
        assert_eq!(json(&unit)["prices"], json(&adapted)["prices"], "{f}");
        assert_eq!(json(&unit)["prices"], json(&cold)["prices"], "{f}");
    }
}

#[test]
fn trace_replay_from_intermediate_prices() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let instance = dir.path().join("market.json");
    fs::write(
        &instance,
        r#"{"objects":[{"id":"a","supply":2},{"id":"b","supply":2}],
            "buyers":[{"id":"x","demand":3,"valuations":{"a":5,"b":4}},
                      {"id":"y","demand":2,"valuations":{"a":5,"b":5}}]}"#,
    )
    .unwrap();
    let instance = instance.to_string_lossy().into_owned();
    let (code, out, _) = call(&["solve", &instance, "--trace", trace.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let final_prices = json(&out)["prices"].clone();
    let t = json(&fs::read_to_string(&trace).unwrap());
    let iterations = t["iterations"].as_array().unwrap();
    assert!(iterations.len() >= 2);
    assert_eq!(t["final"]["prices"], final_prices);
    assert_eq!(t["final"]["iterations"], iterations.len() + 1);
    for it in iterations {
        let start = dir.path().join("start.json");
        fs::write(&start, it["prices"].to_string()).unwrap();
        let (code, out, err) = call(&[
            "solve",
            &instance,
            "--start-prices",
            start.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(json(&out)["prices"], final_prices);
        if it["prices"]
            .as_object()
            .unwrap()
            .values()
            .any(|p| p.as_i64() != Some(0))
        {
            assert!(err.contains("warning"));
        }
    }
}

#[test]
fn dump_network_writes_the_start_network() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("g.txt");
    let (code, _, _) = call(&[
        "solve",
        &fixture("three_goods.json"),
        "--dump-network",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(dump).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.starts_with("s -> j1' [2, 2]\n"));
    assert!(text.contains("j2'' -> beta [1, "));
}

#[test]
fn verify_reports_named_checks() {
    let (code, out, _) = call(&["verify", &fixture("three_goods.json")]);
    assert_eq!(code, EXIT_OK);
    let v = json(&out);
    assert_eq!(v["passed"], true);
    let names: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for name in [
        "market-clearing",
        "competitive-iff-flow",
        "minimum-competitive-prices",
        "steepest-descent-cut",
    ] {
        assert!(names.contains(&name), "{name}");
    }
}

#[test]
fn budget_exhaustion_exits_3() {
    let (code, _, err) = call(&["brute", &fixture("three_goods.json"), "--budget", "10"]);
    assert_eq!(code, EXIT_BUDGET);
    assert!(err.contains("budget"));
    let (code, out, _) = call(&["verify", &fixture("three_goods.json"), "--budget", "10"]);
    assert_eq!(code, EXIT_BUDGET);
    assert!(out.contains("skipped"));
}

#[test]
fn brute_matches_solve() {
    let (_, brute, _) = call(&["brute", &fixture("three_goods.json")]);
    assert_eq!(
        json(&brute)["prices"],
        json(r#"{"alpha":0,"beta":1,"gamma":0}"#)
    );
}

#[test]
fn monotone_sweep_table() {
    let (code, out, _) = call(&["monotone", "--samples", "25", "--seed", "3"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.trim_end().ends_with("25/25 passed (seed 3)"));
    let (_, again, _) = call(&["monotone", "--samples", "25", "--seed", "3"]);
    assert_eq!(out, again);
    let (code, out, _) = call(&["monotone", &fixture("price_jump.json"), "--samples", "10"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("[5, 5]") || out.contains("[5, 0]") || out.contains("[0, 5]"));
}

#[test]
fn parse_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    for text in [
        "not json",
        r#"{"objects":[{"id":"a","supply":-1}],"buyers":[]}"#,
        r#"{"objects":[{"id":"a","supply":1.5}],"buyers":[]}"#,
        r#"{"objects":[{"id":"a","supply":1}],"buyers":[{"id":"x","demand":1,"valuations":{"z":1}}]}"#,
        r#"{"objects":[{"id":"a","supply":1},{"id":"a","supply":1}],"buyers":[]}"#,
        r#"{"objects":[],"buyers":[],"extra":1}"#,
    ] {
        fs::write(&bad, text).unwrap();
        let (code, _, err) = call(&["solve", bad.to_str().unwrap()]);
        assert_eq!(code, EXIT_PARSE, "{text}");
        assert!(err.starts_with("error:"), "{err}");
    }
    let (code, _, _) = call(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(code, EXIT_PARSE);
    let (code, _, _) = call(&["solve", &fixture("lone_buyer.json"), "--mode", "fast"]);
    assert_eq!(code, EXIT_PARSE);
    let start = dir.path().join("start.json");
    fs::write(&start, r#"{"gamma": 1}"#).unwrap();
    let (code, _, _) = call(&[
        "solve",
        &fixture("lone_buyer.json"),
        "--start-prices",
        start.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_PARSE);
}

#[test]
fn help_exits_0() {
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("duplicate-demo"));
}
