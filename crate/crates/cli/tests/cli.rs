use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const PROBLEM: &str = r#"{"schema_version":1,"n":1,"objective":[[2,1.0],[1,-0.5]],
    "constraints":[[[0,1.0],[2,-1.0]]],"options":{"eps":0.01}}"#;

fn pvh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvh"))
        .args(args)
        .env_remove("PVH_THREADS")
        .output()
        .expect("pvh binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_out(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn assert_schema(schema: &str, instance: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(schema);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", path.display());
}

/// Drops wall-clock fields so reports can be compared across runs.
fn strip_times(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("time_ms");
            m.values_mut().for_each(strip_times);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_times),
        _ => {}
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn solve_prints_csv_trace() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", PROBLEM);
    let o = pvh(&["solve", "--problem", p.to_str().unwrap(), "--kmax", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("k,bound,residual,time_ms\n"));
    let bounds: Vec<f64> = csv_rows(&text).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(bounds.len(), 4);
    for w in bounds.windows(2) {
        assert!(w[0] <= w[1] + 1e-6, "{bounds:?}");
    }
    // Bounds sit between min f = -1/16 and min (f + 0.01 (1 + x^2)^2) on [-1, 1].
    let perturbed = (0..=20_000)
        .map(|i| {
            let x = -1.0 + i as f64 / 10_000.0;
            x * x - 0.5 * x + 0.01 * (1.0 + x * x).powi(2)
        })
        .fold(f64::INFINITY, f64::min);
    assert!(
        bounds[3] >= -0.0625 - 1e-6 && bounds[3] <= perturbed + 1e-6,
        "{bounds:?}"
    );
    assert!(stderr(&o).contains("# seed 0"));
}

#[test]
fn solve_json_is_deterministic_and_validates() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", PROBLEM);
    let args = [
        "solve",
        "--json",
        "--problem",
        p.to_str().unwrap(),
        "--kmax",
        "2",
        "--fstar",
        "-0.0625",
    ];
    let mut a = json_out(&pvh(&args));
    let mut b = json_out(&pvh(&args));
    assert_schema("solve-report.schema.json", &a);
    assert_eq!(a["seed"], 0);
    assert_eq!(a["eps"], 0.01);
    assert_eq!(a["ball_radius"], 1.0);
    strip_times(&mut a);
    strip_times(&mut b);
    assert_eq!(a, b);
}

#[test]
fn certificates_verify_and_tampering_is_caught() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", PROBLEM);
    let c = dir.path().join("c.json");
    let o = pvh(&[
        "solve",
        "--problem",
        p.to_str().unwrap(),
        "--kmax",
        "2",
        "--certificates",
        c.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let certs: Value = serde_json::from_str(&std::fs::read_to_string(&c).unwrap()).unwrap();
    assert_schema("certificate.schema.json", &certs);
    assert_schema("certificate.schema.json", &certs[1]);

    let o = pvh(&[
        "verify",
        "--problem",
        p.to_str().unwrap(),
        "--certificate",
        c.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[4] == "true"));

    let o = pvh(&[
        "verify",
        "--json",
        "--problem",
        p.to_str().unwrap(),
        "--certificate",
        c.to_str().unwrap(),
    ]);
    assert_schema("verify-report.schema.json", &json_out(&o));

    let mut single = certs[1].clone();
    single["lambda"] = (single["lambda"].as_f64().unwrap() + 0.1).into();
    let bad = write(&dir, "bad.json", &single.to_string());
    let o = pvh(&[
        "verify",
        "--problem",
        p.to_str().unwrap(),
        "--certificate",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("false"));

    let o = pvh(&[
        "verify",
        "--problem",
        p.to_str().unwrap(),
        "--certificate",
        bad.to_str().unwrap(),
        "--tol",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bounds_reznick_example() {
    let o = pvh(&["bounds", "--reznick", "--n", "3", "--d", "2", "--theta", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "127\n");
}

#[test]
fn bounds_table_and_json() {
    let args = [
        "bounds", "--n", "3", "--d", "2", "--theta", "10", "--d-f", "4", "--norm-f", "2", "--fstar", "0.5",
    ];
    let o = pvh(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("formula,value\n"));
    assert!(text.contains("reznick,127\n"));
    assert!(text.contains("polya,n/a\n"));
    let mut json_args = args.to_vec();
    json_args.push("--json");
    let v = json_out(&pvh(&json_args));
    assert_schema("bounds-report.schema.json", &v);
    assert_eq!(v["reznick"], 127);
    assert!(v.get("polya").is_none());

    let o = pvh(&["bounds", "--polya", "--n", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--degree"));
}

#[test]
fn bounds_estimates_theta_from_a_form() {
    let dir = TempDir::new().unwrap();
    let h = write(&dir, "h.json", "[[2,0,0,2.0],[0,2,0,1.0],[0,0,2,1.0]]");
    let v = json_out(&pvh(&[
        "bounds",
        "--json",
        "--reznick",
        "--form",
        h.to_str().unwrap(),
        "--seed",
        "7",
    ]));
    assert_schema("bounds-report.schema.json", &v);
    assert_eq!(v["seed"], 7);
    assert!((v["theta"].as_f64().unwrap() - 2.0).abs() < 1e-3);

    let indefinite = write(&dir, "g.json", "[[2,0,1.0],[0,2,-1.0]]");
    let o = pvh(&["bounds", "--reznick", "--form", indefinite.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn construct_reports_every_constant() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "f.json", "[[2,0,1.0],[0,2,1.0]]");
    let args = [
        "construct",
        "--objective",
        f.to_str().unwrap(),
        "--eps",
        "0.5",
        "--icecream",
        "--u-cap",
        "2",
        "--grid-res",
        "61",
        "--anchor-res",
        "21",
        "--reznick-search",
        "6",
    ];
    let v = json_out(&pvh(&args));
    assert_schema("construct-report.schema.json", &v);
    let st = &v["state"];
    assert_eq!(st["u"], 2);
    assert_eq!(st["D"], 9);
    assert_eq!(st["demonstration"], true);
    assert_eq!(v["exponent_chain"]["c"], 65);
    let k_found = v["reznick_search"]["k_found"].as_u64().unwrap();
    assert!(k_found <= st["K_bar"].as_u64().unwrap());
    let mut again = json_out(&pvh(&args));
    let mut first = v.clone();
    strip_times(&mut first);
    strip_times(&mut again);
    assert_eq!(first, again);

    let o = pvh(&["construct", "--objective", f.to_str().unwrap(), "--eps", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bernstein_error_within_guarantee() {
    let o = pvh(&["bernstein", "--function", "ridge", "--k", "2,8,32"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("k,bound,measured_error\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let (bound, measured): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(measured <= bound, "{r:?}");
    }
    let v = json_out(&pvh(&[
        "bernstein",
        "--json",
        "--function",
        "abs",
        "--domain",
        "unit",
        "--k",
        "4",
    ]));
    assert_schema("bernstein-report.schema.json", &v);
}

#[test]
fn continuous_sweep() {
    let o = pvh(&[
        "continuous",
        "--kind",
        "sdp",
        "--function",
        "abs",
        "--resolution",
        "11,21",
        "--k",
        "0,1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("kind,resolution,k,bound,status,time_ms\n"));
    assert_eq!(csv_rows(&text).len(), 4);
    let v = json_out(&pvh(&[
        "continuous",
        "--json",
        "--kind",
        "qc",
        "--function",
        "bowl",
        "--resolution",
        "9",
    ]));
    assert_schema("continuous-report.schema.json", &v);
    for e in v["entries"].as_array().unwrap() {
        assert!((e["result"]["bound"].as_f64().unwrap() - 0.05).abs() < 1e-6);
    }
}

#[test]
fn user_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let o = pvh(&["solve", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(pvh(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        pvh(&["solve", "--problem", "/no/such/file.json"]).status.code(),
        Some(1)
    );
    let bad = write(&dir, "bad.json", r#"{"objective":[[2,1.0]]}"#);
    let o = pvh(&["solve", "--problem", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("$.n"));
    assert_eq!(
        pvh(&["continuous", "--kind", "sdp", "--function", "nope"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(pvh(&["--help"]).status.code(), Some(0));
}

#[test]
fn thread_cap_from_environment() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", PROBLEM);
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_pvh"))
            .args(["solve", "--problem", p.to_str().unwrap(), "--kmax", "1"])
            .env("PVH_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run("1").status.code(), Some(0));
    let o = run("zero");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("PVH_THREADS"));
}

#[test]
fn problem_files_match_schema() {
    let minimal: Value =
        serde_json::from_str(r#"{"n":1,"objective":[[2,1.0]],"constraints":[[[0,1.0],[2,-1.0]]]}"#).unwrap();
    assert_schema("problem.schema.json", &minimal);
    assert_schema("problem.schema.json", &serde_json::from_str(PROBLEM).unwrap());
    let file = pvh_core::io::parse_problem(PROBLEM).unwrap();
    assert_schema("problem.schema.json", &file.to_json());
}

#[test]
fn run_reports_through_writers() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = pvh_cli::run(
        ["pvh", "bounds", "--reznick", "--n", "3", "--d", "2", "--theta", "10"],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap(), "127\n");
}
