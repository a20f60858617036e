use pvh_web::{bernstein_curve, degree_bounds, hierarchy_bounds, CURVE_FUNCTIONS};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).expect("exports return JSON")
}

#[test]
fn bernstein_curve_within_guarantee() {
    for name in CURVE_FUNCTIONS {
        let mut prev = f64::INFINITY;
        for k in [4, 16, 64] {
            let v = parse(bernstein_curve(name, k, 401));
            assert!(v.get("error").is_none(), "{v}");
            let measured = v["measured_error"].as_f64().unwrap();
            assert!(measured <= v["bound"].as_f64().unwrap(), "{name} k={k}");
            assert!(measured <= prev + 1e-12, "{name} k={k}");
            prev = measured;
            assert_eq!(v["x"].as_array().unwrap().len(), 401);
            assert_eq!(v["approx"].as_array().unwrap().len(), 401);
        }
    }
    // B_k(|x|) at 0 on [-1, 1] for k = 2 is the mean of the node values 1, 0, 1 with weights 1/4, 1/2, 1/4.
    let v = parse(bernstein_curve("abs", 2, 3));
    assert!((v["approx"][1].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn bernstein_curve_rejects_bad_input() {
    assert!(parse(bernstein_curve("nope", 4, 10)).get("error").is_some());
    assert!(parse(bernstein_curve("abs", 0, 10)).get("error").is_some());
    assert!(parse(bernstein_curve("abs", 4, 1)).get("error").is_some());
}

#[test]
fn hierarchy_bounds_on_a_small_problem() {
    let problem = r#"{"n":1,"objective":[[2,1.0],[1,-0.5]],"constraints":[[[0,1.0],[2,-1.0]]]}"#;
    let v = parse(hierarchy_bounds(problem, 2, 0.01));
    assert!(v.get("error").is_none(), "{v}");
    assert_eq!(v["ball_radius"], 1.0);
    let entries = v["trace"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for e in entries {
        let b = e["bound"].as_f64().unwrap();
        assert!((-0.0625 - 1e-6..=-0.05).contains(&b), "{b}");
    }
    assert!(v["csv"].as_str().unwrap().starts_with("k,bound,residual,time_ms\n"));
    let err = parse(hierarchy_bounds(r#"{"objective":[]}"#, 1, 0.1));
    assert!(err["error"].as_str().unwrap().contains("$.n"));
    assert!(parse(hierarchy_bounds(problem, 99, 0.1)).get("error").is_some());
}

#[test]
fn degree_bounds_matches_calculators() {
    let v = parse(degree_bounds(r#"{"n":3,"d":2,"theta":10}"#));
    assert_eq!(v["reznick"], 127);
    assert!(v["polya"].is_null());
    assert!(v["errors"].as_object().unwrap().is_empty());
    let v = parse(degree_bounds(r#"{"n":3,"d":2,"theta":0.5}"#));
    assert!(v["reznick"].is_null());
    assert!(v["errors"]["reznick"].is_string());
    let v = parse(degree_bounds(r#"{"n":3,"d_f":4,"norm_f":2,"fstar":0.5}"#));
    assert_eq!(
        v["schmudgen"].as_u64().unwrap(),
        pvh_core::bounds::schmudgen_bound(3, 4, 2.0, 0.5, 1.0).unwrap()
    );
    assert!(parse(degree_bounds("[1]")).get("error").is_some());
    assert!(parse(degree_bounds(r#"{"n":"three"}"#)).get("error").is_some());
}
