//! Browser bindings for the demo page. Every export returns a JSON string:
//! the result object, or `{"error": message}`.

use pvh_core::bernstein::{bernstein_error_bound, default_resolution, BernsteinApprox, Domain, SampledFunction};
use pvh_core::bounds::{nie_schweighofer_bound, polya_bound, reznick_bound, schmudgen_bound};
use pvh_core::hierarchy::run_hierarchy;
use pvh_core::io::parse_problem;
use pvh_core::ipm::SolverOptions;
use serde_json::{json, Map, Value};
use wasm_bindgen::prelude::*;

/// Largest relaxation order the page will run.
pub const MAX_ORDER: u32 = 6;
/// Largest Bernstein degree the page will build.
pub const MAX_DEGREE: u32 = 400;

/// One-variable functions offered by [`bernstein_curve`].
pub const CURVE_FUNCTIONS: [&str; 3] = ["abs", "hat", "sine"];

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn curve_function(name: &str) -> Result<fn(f64) -> f64, String> {
    Ok(match name {
        "abs" => f64::abs,
        "hat" => |x: f64| (1.0 - 2.0 * x.abs()).max(0.0),
        "sine" => |x: f64| (std::f64::consts::PI * x).sin(),
        _ => {
            return Err(format!(
                "unknown function `{name}`; choose one of {}",
                CURVE_FUNCTIONS.join(", ")
            ))
        }
    })
}

/// Degree-`k` Bernstein approximation of a one-variable function on
/// `[−1,1]`, sampled at `points` equally spaced points, with its measured
/// error and guarantee.
#[wasm_bindgen]
pub fn bernstein_curve(function: &str, k: u32, points: u32) -> String {
    respond((|| {
        if k == 0 || k > MAX_DEGREE {
            return Err(format!("degree must lie in 1..={MAX_DEGREE}"));
        }
        if !(2..=5000).contains(&points) {
            return Err("points must lie in 2..=5000".into());
        }
        let g = curve_function(function)?;
        let f = SampledFunction::with_estimates(1, move |x: &[f64]| g(x[0]), default_resolution(1))
            .map_err(|e| e.to_string())?;
        let approx = BernsteinApprox::build(&f, &[k], Domain::Symmetric).map_err(|e| e.to_string())?;
        let xs: Vec<f64> = (0..points)
            .map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64)
            .collect();
        let fx: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        let bx: Vec<f64> = xs.iter().map(|&x| approx.eval(&[x])).collect();
        let measured = fx.iter().zip(&bx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(json!({
            "function": function,
            "k": k,
            "lipschitz_estimate": f.lipschitz,
            "bound": bernstein_error_bound(2.0 * f.lipschitz, 1, k),
            "measured_error": measured,
            "x": xs,
            "f": fx,
            "approx": bx,
        }))
    })())
}

/// Runs the hierarchy on a problem file for orders `0..=kmax`.
#[wasm_bindgen]
pub fn hierarchy_bounds(problem_json: &str, kmax: u32, eps: f64) -> String {
    respond((|| {
        if kmax > MAX_ORDER {
            return Err(format!("kmax must be at most {MAX_ORDER} in the browser"));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err("eps must be a finite nonnegative number".into());
        }
        let file = parse_problem(problem_json).map_err(|e| e.to_string())?;
        let (trace, _) =
            run_hierarchy(&file.problem, kmax, eps, &SolverOptions::default()).map_err(|e| e.to_string())?;
        Ok(json!({
            "csv": trace.to_csv(),
            "ball_radius": file.problem.ball_radius(),
            "trace": trace,
        }))
    })())
}

fn number(inputs: &Map<String, Value>, key: &str) -> Result<Option<f64>, String> {
    match inputs.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_f64().map(Some).ok_or_else(|| format!("`{key}` must be a number")),
    }
}

fn integer(inputs: &Map<String, Value>, key: &str) -> Result<Option<u64>, String> {
    match inputs.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| format!("`{key}` must be a nonnegative integer")),
    }
}

/// Evaluates every degree bound whose inputs are present. Input keys: `n`,
/// `d` and `theta` (Reznick); `degree`, `norm_p` and `min_simplex` (Pólya);
/// `n`, `d_f`, `norm_f`, `fstar` and `c` (Schmüdgen, Nie–Schweighofer).
/// A bound is null when an input is missing; failures go to `errors`.
#[wasm_bindgen]
pub fn degree_bounds(inputs_json: &str) -> String {
    respond((|| {
        let v: Value = serde_json::from_str(inputs_json).map_err(|e| e.to_string())?;
        let inp = v.as_object().ok_or("inputs must be a JSON object")?;
        let n = integer(inp, "n")?.map(|n| n as usize);
        let d = integer(inp, "d")?.map(|d| d as u32);
        let degree = integer(inp, "degree")?.map(|d| d as u32);
        let d_f = integer(inp, "d_f")?.map(|d| d as u32);
        let theta = number(inp, "theta")?;
        let (norm_p, min_simplex) = (number(inp, "norm_p")?, number(inp, "min_simplex")?);
        let (norm_f, fstar) = (number(inp, "norm_f")?, number(inp, "fstar")?);
        let c = number(inp, "c")?.unwrap_or(1.0);

        let mut out = Map::new();
        let mut errors = Map::new();
        let mut record = |name: &str, r: Option<Result<Value, pvh_core::Error>>| {
            let value = match r {
                None => Value::Null,
                Some(Ok(v)) => v,
                Some(Err(e)) => {
                    errors.insert(name.into(), e.to_string().into());
                    Value::Null
                }
            };
            out.insert(name.into(), value);
        };
        record(
            "reznick",
            n.zip(d)
                .zip(theta)
                .map(|((n, d), t)| reznick_bound(n, d, t).map(Value::from)),
        );
        record(
            "polya",
            degree
                .zip(norm_p)
                .zip(min_simplex)
                .map(|((d, p), m)| polya_bound(d, p, m).map(Value::from)),
        );
        let schm = n.zip(d_f).zip(norm_f).zip(fstar);
        record(
            "schmudgen",
            schm.map(|(((n, d), nf), fs)| schmudgen_bound(n, d, nf, fs, c).map(Value::from)),
        );
        record(
            "nie_schweighofer",
            schm.map(|(((n, d), nf), fs)| nie_schweighofer_bound(n, d, nf, fs, c).map(Value::from)),
        );
        out.insert("c".into(), c.into());
        out.insert("errors".into(), Value::Object(errors));
        Ok(Value::Object(out))
    })())
}
