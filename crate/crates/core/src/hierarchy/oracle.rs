use crate::error::{Error, Result};
use crate::polyalg::{Polynomial, PopProblem};

const FEAS_TOL: f64 = 1e-9;
const MAX_GRID_POINTS: u128 = 10_000_000;

/// Brute-force upper bound on `f⋆`: grid search over `[−√L, √L]ⁿ` followed
/// by feasible descent from the best grid points.
pub fn grid_oracle(prob: &PopProblem, resolution: usize) -> Result<f64> {
    grid_oracle_point(prob, resolution).map(|(v, _)| v)
}

/// [`grid_oracle`] together with the best point found.
pub fn grid_oracle_point(prob: &PopProblem, resolution: usize) -> Result<(f64, Vec<f64>)> {
    let l = prob
        .ball_radius()
        .ok_or_else(|| Error::InvalidInput("grid oracle needs a ball constraint for a compact region".into()))?;
    if resolution < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    let n = prob.nvars();
    let count = (resolution as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > MAX_GRID_POINTS {
        return Err(Error::BudgetExceeded {
            count,
            limit: MAX_GRID_POINTS,
        });
    }
    let r = l.sqrt();
    let axis: Vec<f64> = (0..resolution)
        .map(|i| -r + 2.0 * r * i as f64 / (resolution - 1) as f64)
        .collect();
    let f = prob.objective();

    let keep = 8;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    loop {
        for (xi, &ii) in x.iter_mut().zip(&idx) {
            *xi = axis[ii];
        }
        if prob.is_feasible(&x, FEAS_TOL) {
            let v = f.eval(&x);
            if best.len() < keep || v < best[best.len() - 1].0 {
                best.push((v, x.clone()));
                best.sort_by(|a, b| a.0.total_cmp(&b.0));
                best.truncate(keep);
            }
        }
        let mut d = 0;
        loop {
            if d == n {
                break;
            }
            idx[d] += 1;
            if idx[d] < resolution {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == n {
            break;
        }
    }
    if best.is_empty() {
        return Err(Error::NoFeasibleSample(format!(
            "no grid point of resolution {resolution} satisfies the constraints; try a higher resolution"
        )));
    }
    let step = 2.0 * r / (resolution - 1) as f64;
    let feasible = |p: &[f64]| prob.is_feasible(p, 0.0);
    let mut out = best[0].clone();
    for (_, x0) in &best {
        let (p, v) = local_descent(f, &feasible, x0, step, 2000);
        if v < out.0 {
            out = (v, p);
        }
    }
    Ok(out)
}

/// Gradient descent with backtracking that only accepts feasible points
/// with strictly smaller objective.
pub fn local_descent(
    f: &Polynomial,
    feasible: &dyn Fn(&[f64]) -> bool,
    x0: &[f64],
    initial_step: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut fx = f.eval(&x);
    let mut step = initial_step.max(1e-12);
    for _ in 0..max_iter {
        let g = f.gradient(&x);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn < 1e-14 {
            break;
        }
        let mut t = step / gn;
        let mut moved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            if feasible(&trial) {
                let ft = f.eval(&trial);
                if ft < fx {
                    x = trial;
                    fx = ft;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
        step = (t * gn * 2.0).min(initial_step * 4.0);
    }
    (x, fx)
}
