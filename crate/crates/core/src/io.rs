//! Problem files, schema version 1:
//!
//! ```json
//! {"schema_version": 1, "n": 1, "objective": [[2, 1.0]],
//!  "constraints": [[[0, 1.0], [2, -1.0]]], "ball_radius": 1.0, "options": {}}
//! ```
//!
//! Terms are `[α₁, …, αₙ, coeff]` records. `ball_radius` is the `L` of a
//! constraint `L − ‖x‖₂²`; such a constraint is also detected on its own.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::polyalg::json::{from_json, to_json};
use crate::polyalg::{Polynomial, PopProblem};

pub const SCHEMA_VERSION: u64 = 1;

const FIELDS: [&str; 6] = [
    "schema_version",
    "n",
    "objective",
    "constraints",
    "ball_radius",
    "options",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: PopProblem,
    pub options: Map<String, Value>,
}

impl ProblemFile {
    pub fn to_json(&self) -> Value {
        problem_to_json(&self.problem, &self.options)
    }
}

/// Parses and validates a problem file. Error paths use `$.field[i]` form.
pub fn parse_problem(text: &str) -> Result<ProblemFile> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::parse("$", e.to_string()))?;
    problem_from_value(&value)
}

pub fn problem_from_value(value: &Value) -> Result<ProblemFile> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::parse("$", "problem file must be a JSON object"))?;
    if let Some(key) = obj.keys().find(|k| !FIELDS.contains(&k.as_str())) {
        return Err(Error::parse(format!("$.{key}"), "unknown field"));
    }
    if let Some(v) = obj.get("schema_version") {
        if v.as_u64() != Some(SCHEMA_VERSION) {
            return Err(Error::parse(
                "$.schema_version",
                format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"),
            ));
        }
    }
    let n = obj
        .get("n")
        .ok_or_else(|| Error::parse("$.n", "missing required field `n`"))?
        .as_u64()
        .filter(|&n| n >= 1 && n <= u32::MAX as u64)
        .ok_or_else(|| Error::parse("$.n", "n must be a positive integer"))? as usize;
    let objective = from_json(
        obj.get("objective")
            .ok_or_else(|| Error::parse("$.objective", "missing required field `objective`"))?,
        n,
        "$.objective",
    )?;
    let constraints = match obj.get("constraints") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(j, g)| from_json(g, n, &format!("$.constraints[{j}]")))
            .collect::<Result<Vec<Polynomial>>>()?,
        Some(_) => return Err(Error::parse("$.constraints", "constraints must be an array")),
    };
    let problem = match obj.get("ball_radius") {
        None | Some(Value::Null) => PopProblem::new(objective, constraints)?,
        Some(v) => {
            let l = v
                .as_f64()
                .filter(|l| *l > 0.0 && l.is_finite())
                .ok_or_else(|| Error::parse("$.ball_radius", "ball_radius must be a positive number"))?;
            PopProblem::with_ball(objective, constraints, l)
                .map_err(|e| Error::parse("$.ball_radius", e.to_string()))?
        }
    };
    let options = match obj.get("options") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(Error::parse("$.options", "options must be an object")),
    };
    Ok(ProblemFile { problem, options })
}

/// Emits a problem in schema v1; parsing the output reproduces `prob`.
pub fn problem_to_json(prob: &PopProblem, options: &Map<String, Value>) -> Value {
    let mut obj = Map::new();
    obj.insert("schema_version".into(), SCHEMA_VERSION.into());
    obj.insert("n".into(), prob.nvars().into());
    obj.insert("objective".into(), to_json(prob.objective()));
    obj.insert(
        "constraints".into(),
        Value::Array(prob.constraints().iter().map(to_json).collect()),
    );
    if let Some(l) = prob.ball_radius() {
        obj.insert("ball_radius".into(), l.into());
    }
    obj.insert("options".into(), Value::Object(options.clone()));
    Value::Object(obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_detects_ball() {
        let p = parse_problem(r#"{"n":1,"objective":[[2,1.0]],"constraints":[[[0,1.0],[2,-1.0]]]}"#).unwrap();
        assert_eq!(p.problem.ball_radius(), Some(1.0));
        assert_eq!(*p.problem.objective(), Polynomial::var(1, 0).pow(2));
        assert_eq!(p.problem.constraints().len(), 1);
    }

    #[test]
    fn ball_radius_field_adds_constraint() {
        let p = parse_problem(r#"{"schema_version":1,"n":2,"objective":[[1,1,1.0]],"ball_radius":2}"#).unwrap();
        assert_eq!(p.problem.ball_radius(), Some(2.0));
        assert_eq!(p.problem.constraints()[0], Polynomial::ball(2, 2.0));
        let clash = r#"{"n":1,"objective":[[1,1.0]],"constraints":[[[0,1.0],[2,-1.0]]],"ball_radius":2}"#;
        assert!(parse_problem(clash).unwrap_err().to_string().contains("$.ball_radius"));
    }

    #[test]
    fn errors_name_the_field() {
        let cases = [
            (r#"{"objective":[[2,1.0]]}"#, "$.n"),
            (r#"{"n":1}"#, "$.objective"),
            (
                r#"{"n":1,"objective":[[2,1.0]],"constraints":[[[0,0,1.0]]]}"#,
                "$.constraints[0][0]",
            ),
            (
                r#"{"n":1,"objective":[[2,1.0]],"schema_version":2}"#,
                "$.schema_version",
            ),
            (r#"{"n":1,"objective":[[2,1.0]],"colour":1}"#, "$.colour"),
            (r#"{"n":0,"objective":[]}"#, "$.n"),
            (r#"[1]"#, "$"),
            (r#"{"n":1,"objective":[[2,1.0]],"options":3}"#, "$.options"),
        ];
        for (text, path) in cases {
            let err = parse_problem(text).unwrap_err().to_string();
            assert!(err.contains(&format!("at {path}:")), "{text}: {err}");
        }
    }

    #[test]
    fn round_trip() {
        let text = r#"{"n":2,"objective":[[4,0,1.0],[2,2,-0.3],[0,0,0.1]],
            "constraints":[[[1,0,1.0]],[[0,0,4.0],[2,0,-1.0],[0,2,-1.0]]],"options":{"eps":0.01}}"#;
        let a = parse_problem(text).unwrap();
        let emitted = serde_json::to_string(&a.to_json()).unwrap();
        let b = parse_problem(&emitted).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.problem.ball_radius(), Some(4.0));
        assert_eq!(b.options["eps"], 0.01);
    }
}
