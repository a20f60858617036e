use std::fs;
use std::io::Write;
use std::path::Path;

use pvh_core::bernstein::{bernstein_error_bound, default_resolution, BernsteinApprox, Domain, SampledFunction};
use pvh_core::bounds::{estimate_theta, nie_schweighofer_bound, polya_bound, reznick_bound, schmudgen_bound};
use pvh_core::construct::{
    build_f, icecream, is_icecream, rate_exponent_icecream, reznick_search, ConstructParams, LojasiewiczData,
};
use pvh_core::contopt::{builtin, sample_box, sweep, sweep_csv, RelaxationKind};
use pvh_core::hierarchy::{empirical_slope, run_hierarchy, verify_certificate, Certificate, PSD_SLACK};
use pvh_core::io::{parse_problem, problem_from_value, ProblemFile};
use pvh_core::ipm::SolveStatus;
use pvh_core::polyalg::json::{from_json, infer_nvars};
use pvh_core::Polynomial;
use serde_json::{json, Value};

use crate::{
    BernsteinArgs, BoundsArgs, ConstructArgs, ContinuousArgs, DomainArg, Failure, KindArg, Outcome, SolveArgs,
    VerifyArgs, EXIT_NUMERICAL, EXIT_OK,
};

/// Largest residual for which a degraded solve still counts as a success.
const ACCEPT_RESIDUAL: f64 = 1e-6;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::User(format!("cannot read {}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::User(format!("{} is not valid JSON: {e}", path.display())))
}

fn read_problem(path: &Path) -> Result<ProblemFile, Failure> {
    parse_problem(&read_text(path)?).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

fn write_json(out: &mut dyn Write, v: &Value) -> Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn note_seed(err: &mut dyn Write, seed: u64) -> Result<(), Failure> {
    writeln!(err, "# seed {seed}")?;
    Ok(())
}

/// Reads a term list whose variable count is `n` or can be inferred.
fn read_form(path: &Path, n: Option<usize>) -> Result<Polynomial, Failure> {
    let v = read_json(path)?;
    let n = n
        .or_else(|| infer_nvars(&v))
        .ok_or_else(|| Failure::User(format!("cannot infer n from {}; pass --n", path.display())))?;
    from_json(&v, n, "$").map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

pub fn solve(a: &SolveArgs, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let file = read_problem(&a.problem)?;
    let eps = match (a.eps, file.options.get("eps")) {
        (Some(e), _) => e,
        (None, Some(v)) => v
            .as_f64()
            .ok_or_else(|| Failure::User("options.eps must be a number".into()))?,
        (None, None) => 0.0,
    };
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Failure::User(format!(
            "eps must be a finite nonnegative number, got {eps}"
        )));
    }
    let opts = a.solver.options();
    opts.validate()?;
    let (trace, certs) = run_hierarchy(&file.problem, a.kmax, eps, &opts)?;
    if let Some(path) = &a.certificates {
        fs::write(path, serde_json::to_string_pretty(&certs)?)?;
    }
    let slope = a.fstar.and_then(|f| empirical_slope(&trace, f));
    if json {
        write_json(
            out,
            &json!({
                "seed": 0,
                "eps": eps,
                "kmax": a.kmax,
                "ball_radius": file.problem.ball_radius(),
                "trace": trace,
                "empirical_slope": slope,
                "slope_is_heuristic": true,
            }),
        )?;
    } else {
        write!(out, "{}", trace.to_csv())?;
        note_seed(err, 0)?;
    }
    for k in &trace.monotonicity_violations {
        writeln!(err, "warning: bound decreased from order {k} to {}", k + 1)?;
    }
    let failed = trace
        .entries
        .iter()
        .any(|e| !e.bound.is_finite() || !(e.residual <= ACCEPT_RESIDUAL));
    Ok(if failed { EXIT_NUMERICAL } else { EXIT_OK })
}

pub fn verify(a: &VerifyArgs, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let file = read_problem(&a.problem)?;
    let value = read_json(&a.certificate)?;
    let certs: Vec<Certificate> = match value {
        Value::Array(_) => serde_json::from_value(value)?,
        _ => vec![serde_json::from_value(value)?],
    };
    if certs.is_empty() {
        return Err(Failure::User("certificate file holds no certificates".into()));
    }
    let mut rows = Vec::new();
    for c in &certs {
        let residual = verify_certificate(&file.problem, c)?;
        let (min_eig, scale) = c.grams.iter().fold((f64::INFINITY, 1.0f64), |(m, s), g| {
            (m.min(g.min_eigenvalue()), s.max(g.max_abs()))
        });
        let pass = residual <= a.tol && min_eig >= -PSD_SLACK * scale;
        rows.push((c.k, c.lambda, residual, min_eig, pass));
    }
    if json {
        let results: Vec<Value> = rows
            .iter()
            .map(|&(k, lambda, residual, min_eig, pass)| {
                json!({"k": k, "lambda": lambda, "residual": residual, "min_eigenvalue": min_eig, "pass": pass})
            })
            .collect();
        write_json(out, &json!({"seed": 0, "tol": a.tol, "results": results}))?;
    } else {
        writeln!(out, "k,lambda,residual,min_eigenvalue,pass")?;
        for (k, lambda, residual, min_eig, pass) in &rows {
            writeln!(out, "{k},{lambda},{residual:e},{min_eig:e},{pass}")?;
        }
        note_seed(err, 0)?;
    }
    Ok(if rows.iter().all(|r| r.4) {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    })
}

/// JSON has no infinity, so overflowing bounds are stored as null.
fn cell(v: &Value) -> String {
    if v.is_null() {
        "inf".into()
    } else {
        v.to_string()
    }
}

fn need<T: Copy>(v: Option<T>, flag: &str, formula: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::User(format!("{formula} needs --{flag}")))
}

pub fn bounds(a: &BoundsArgs, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (mut n, mut d, mut theta, mut estimate) = (a.n, a.d, a.theta, None);
    if let Some(path) = &a.form {
        let h = read_form(path, a.n)?;
        let est = estimate_theta(&h, a.samples, a.seed)?;
        if !est.positive_definite() {
            return Err(Failure::User(format!(
                "form is not positive definite: sampled minimum {} on the sphere",
                est.inf_val
            )));
        }
        n = n.or(Some(h.nvars()));
        d = d.or(Some(h.degree() as u32 / 2));
        theta = theta.or(Some(est.ratio));
        estimate = Some(est);
    }
    let all = !(a.reznick || a.polya || a.schmudgen || a.nie_schweighofer);
    let schm_inputs = (n, a.d_f, a.norm_f, a.fstar);
    let mut rows: Vec<(&str, Option<Value>)> = Vec::new();
    if a.reznick || (all && n.is_some() && d.is_some() && theta.is_some()) {
        let v = reznick_bound(
            need(n, "n", "reznick")?,
            need(d, "d", "reznick")?,
            need(theta, "theta", "reznick")?,
        )?;
        rows.push(("reznick", Some(v.into())));
    } else if all {
        rows.push(("reznick", None));
    }
    if a.polya || (all && a.degree.is_some() && a.norm_p.is_some() && a.min_simplex.is_some()) {
        let v = polya_bound(
            need(a.degree, "degree", "polya")?,
            need(a.norm_p, "norm-p", "polya")?,
            need(a.min_simplex, "min-simplex", "polya")?,
        )?;
        rows.push(("polya", Some(v.into())));
    } else if all {
        rows.push(("polya", None));
    }
    let schm_ready = matches!(schm_inputs, (Some(_), Some(_), Some(_), Some(_)));
    let schm_args = || -> Result<(usize, u32, f64, f64), Failure> {
        Ok((
            need(n, "n", "schmudgen")?,
            need(a.d_f, "d-f", "schmudgen")?,
            need(a.norm_f, "norm-f", "schmudgen")?,
            need(a.fstar, "fstar", "schmudgen")?,
        ))
    };
    if a.schmudgen || (all && schm_ready) {
        let (n, d_f, norm_f, fstar) = schm_args()?;
        rows.push(("schmudgen", Some(schmudgen_bound(n, d_f, norm_f, fstar, a.c)?.into())));
    } else if all {
        rows.push(("schmudgen", None));
    }
    if a.nie_schweighofer || (all && schm_ready) {
        let (n, d_f, norm_f, fstar) = schm_args()?;
        rows.push((
            "nie_schweighofer",
            Some(nie_schweighofer_bound(n, d_f, norm_f, fstar, a.c)?.into()),
        ));
    } else if all {
        rows.push(("nie_schweighofer", None));
    }
    if rows.iter().all(|r| r.1.is_none()) {
        return Err(Failure::User(
            "no bound has all of its inputs; see `pvh bounds --help`".into(),
        ));
    }
    if json {
        let mut report = serde_json::Map::new();
        report.insert("seed".into(), a.seed.into());
        for (name, v) in &rows {
            if let Some(v) = v {
                report.insert((*name).into(), v.clone());
            }
        }
        report.insert("theta".into(), json!(theta));
        report.insert("theta_estimate".into(), json!(estimate));
        report.insert("c".into(), a.c.into());
        write_json(out, &Value::Object(report))?;
    } else if !all && rows.len() == 1 {
        writeln!(out, "{}", cell(rows[0].1.as_ref().expect("selected bound is computed")))?;
    } else {
        writeln!(out, "formula,value")?;
        for (name, v) in &rows {
            match v {
                Some(v) => writeln!(out, "{name},{}", cell(v))?,
                None => writeln!(out, "{name},n/a")?,
            }
        }
    }
    if estimate.is_some() {
        writeln!(err, "# seed {}; theta is a sampled estimate", a.seed)?;
    }
    Ok(EXIT_OK)
}

pub fn construct(a: &ConstructArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let value = read_json(&a.objective)?;
    let (f, file_constraints) = if value.is_object() {
        let file = problem_from_value(&value).map_err(|e| Failure::User(format!("{}: {e}", a.objective.display())))?;
        (file.problem.objective().clone(), file.problem.constraints().to_vec())
    } else {
        (read_form(&a.objective, a.n)?, Vec::new())
    };
    let n = f.nvars();
    let g = if a.icecream {
        icecream(n)?
    } else if let Some(path) = &a.constraint {
        read_form(path, Some(n))?
    } else if file_constraints.len() == 1 {
        file_constraints[0].clone()
    } else {
        return Err(Failure::User(
            "pass --icecream or --constraint, or a problem file with one constraint".into(),
        ));
    };
    let lojasiewicz = match (a.loj_alpha, a.loj_c) {
        (Some(alpha), Some(c)) => Some(LojasiewiczData::new(alpha, c)?),
        _ => None,
    };
    let params = ConstructParams {
        grid_res: a.grid_res,
        anchor_res: a.anchor_res,
        u_cap: (!a.no_cap).then_some(a.u_cap),
        sphere_points: a.sphere_points,
        lojasiewicz,
        seed: a.seed,
    };
    let opts = a.solver.options();
    opts.validate()?;
    let st = build_f(&f, &g, a.eps, &params)?;
    if st.demonstration {
        writeln!(
            err,
            "note: u capped at {}; demonstration mode covers eps = {:e}",
            st.u, st.eps_achieved
        )?;
    }
    let search = match a.reznick_search {
        Some(cap) => Some(reznick_search(&st.big_f, cap, a.max_dim, &opts)?),
        None => None,
    };
    write_json(
        out,
        &json!({
            "seed": a.seed,
            "params": params,
            "state": st,
            "exponent_chain": is_icecream(&g).then(rate_exponent_icecream),
            "reznick_search": search,
        }),
    )?;
    Ok(EXIT_OK)
}

pub fn bernstein(a: &BernsteinArgs, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (prob, _) = builtin(&a.function)?;
    let n = prob.n;
    let objective = prob.clone();
    let f = SampledFunction::with_estimates(n, move |x: &[f64]| objective.objective(x), default_resolution(n))?;
    let (domain, stretch) = match a.domain {
        DomainArg::Unit => (Domain::Unit, 1.0),
        DomainArg::Symmetric => (Domain::Symmetric, 2.0),
    };
    let res = a.eval_res.unwrap_or(if n == 1 { 1001 } else { 61 });
    let grid: Vec<Vec<f64>> = sample_box(n, res)?
        .into_iter()
        .map(|x| match domain {
            Domain::Unit => x.into_iter().map(|t| 0.5 * (t + 1.0)).collect(),
            Domain::Symmetric => x,
        })
        .collect();
    let mut rows = Vec::new();
    for &k in &a.k {
        let approx = BernsteinApprox::build(&f, &vec![k; n], domain)?;
        let measured = grid
            .iter()
            .map(|x| (prob.objective(x) - approx.eval(x)).abs())
            .fold(0.0, f64::max);
        rows.push((k, bernstein_error_bound(stretch * f.lipschitz, n, k), measured));
    }
    if json {
        let rows: Vec<Value> = rows
            .iter()
            .map(|&(k, bound, measured)| json!({"k": k, "bound": bound, "measured_error": measured}))
            .collect();
        write_json(
            out,
            &json!({
                "seed": 0,
                "function": a.function,
                "n": n,
                "domain": format!("{domain:?}").to_lowercase(),
                "lipschitz_estimate": f.lipschitz,
                "rows": rows,
            }),
        )?;
    } else {
        writeln!(out, "k,bound,measured_error")?;
        for (k, bound, measured) in &rows {
            writeln!(out, "{k},{bound:.12e},{measured:.12e}")?;
        }
        note_seed(err, 0)?;
    }
    Ok(EXIT_OK)
}

pub fn continuous(a: &ContinuousArgs, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (prob, fstar) = builtin(&a.function)?;
    let kind = match a.kind {
        KindArg::Sdp => RelaxationKind::Sdp,
        KindArg::Qc => RelaxationKind::Qc,
    };
    let opts = a.solver.options();
    opts.validate()?;
    let entries = sweep(&prob, kind, &a.resolution, &a.k, a.eps, &opts)?;
    if json {
        write_json(
            out,
            &json!({
                "seed": 0,
                "function": a.function,
                "n": prob.n,
                "fstar": fstar,
                "kind": kind,
                "eps": a.eps,
                "entries": entries,
            }),
        )?;
    } else {
        write!(out, "{}", sweep_csv(&entries))?;
        note_seed(err, 0)?;
    }
    let failed = entries.iter().any(|e| {
        !e.result.bound.is_finite()
            || (e.result.status != SolveStatus::Optimal && !(e.result.residuals.max() <= ACCEPT_RESIDUAL))
    });
    Ok(if failed { EXIT_NUMERICAL } else { EXIT_OK })
}
