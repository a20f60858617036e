//! Sampled relaxations for continuous objectives on `[−1,1]ⁿ`: the
//! semidefinite relaxation with shared Gram matrices and the convex
//! quadratically constrained relaxation over feasible samples.

use crate::clock::Stopwatch;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bernstein::BlackBox;
use crate::error::{Error, Result};
use crate::ipm::{self, Residuals, SolveStatus, SolverOptions};
use crate::momentsdp::{Constraint, LinearForm, SdpProblem, Sense, SymMatrix};
use crate::polyalg::{monomials_up_to, Monomial};

/// Largest sample set [`sample_box`] will build.
pub const MAX_SAMPLES: u128 = 1_000_000;
/// Samples with `g ≥ −FEAS_TOL` count as feasible.
pub const FEAS_TOL: f64 = 1e-9;

/// Minimize a deterministic `f` over `{gⱼ ≥ 0} ⊆ [−1,1]ⁿ`.
#[derive(Clone)]
pub struct ContinuousProblem {
    pub name: String,
    pub n: usize,
    f: BlackBox,
    constraints: Vec<BlackBox>,
}

impl fmt::Debug for ContinuousProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("constraints", &self.constraints.len())
            .finish_non_exhaustive()
    }
}

impl ContinuousProblem {
    pub fn new(name: impl Into<String>, n: usize, f: BlackBox, constraints: Vec<BlackBox>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "a continuous problem needs at least one variable".into(),
            ));
        }
        Ok(ContinuousProblem {
            name: name.into(),
            n,
            f,
            constraints,
        })
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn constraint(&self, j: usize, x: &[f64]) -> f64 {
        (self.constraints[j])(x)
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.constraints.iter().all(|g| g(x) >= -FEAS_TOL)
    }
}

/// Uniform grid over `[−1,1]ⁿ` with `resolution` points per axis, last axis
/// fastest.
pub fn sample_box(n: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || resolution < 2 {
        return Err(Error::InvalidInput(
            "sample_box needs n >= 1 and resolution >= 2".into(),
        ));
    }
    let count = (resolution as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > MAX_SAMPLES {
        return Err(Error::BudgetExceeded {
            count,
            limit: MAX_SAMPLES,
        });
    }
    let step = 2.0 / (resolution - 1) as f64;
    Ok((0..count as usize)
        .map(|mut idx| {
            let mut x = vec![0.0; n];
            for xi in x.iter_mut().rev() {
                *xi = -1.0 + step * (idx % resolution) as f64;
                idx /= resolution;
            }
            x
        })
        .collect())
}

/// Hausdorff distance from the [`sample_box`] grid to `[−1,1]ⁿ`.
pub fn hausdorff_distance(n: usize, resolution: usize) -> f64 {
    (n as f64).sqrt() / (resolution - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelaxationKind {
    Sdp,
    Qc,
}

impl fmt::Display for RelaxationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelaxationKind::Sdp => "sdp",
            RelaxationKind::Qc => "qc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationResult {
    pub kind: RelaxationKind,
    pub k: u32,
    pub eps: f64,
    pub samples: usize,
    pub bound: f64,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub time_ms: f64,
}

struct SampleData {
    basis: Vec<Monomial>,
    /// `v_k(x)` per sample.
    v: Vec<Vec<f64>>,
    fx: Vec<f64>,
    /// `gⱼ(x)` per sample, with `g₀ ≡ 1` first.
    gx: Vec<Vec<f64>>,
}

fn evaluate(prob: &ContinuousProblem, omega: &[Vec<f64>], k: u32) -> Result<SampleData> {
    if omega.is_empty() {
        return Err(Error::InvalidInput("sample set is empty".into()));
    }
    if let Some(x) = omega.iter().find(|x| x.len() != prob.n) {
        return Err(Error::DimensionMismatch {
            expected: prob.n,
            found: x.len(),
        });
    }
    let basis = monomials_up_to(prob.n, k);
    let row = |x: &Vec<f64>| {
        let v: Vec<f64> = basis.iter().map(|m| m.eval(x)).collect();
        let mut g = vec![1.0];
        g.extend(prob.constraints.iter().map(|c| c(x)));
        (v, prob.objective(x), g)
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<_> = {
        use rayon::prelude::*;
        omega.par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<_> = omega.iter().map(row).collect();
    let mut data = SampleData {
        basis,
        v: Vec::with_capacity(rows.len()),
        fx: Vec::with_capacity(rows.len()),
        gx: Vec::with_capacity(rows.len()),
    };
    for (v, f, g) in rows {
        if !f.is_finite() || g.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput(
                "black-box function returned a non-finite value".into(),
            ));
        }
        data.v.push(v);
        data.fx.push(f);
        data.gx.push(g);
    }
    Ok(data)
}

/// Checks that every weighted Gram matrix is pinned down by the feasible
/// samples; otherwise the relaxation has an unbounded face.
fn check_coverage(data: &SampleData, feasible: &[bool]) -> Result<()> {
    let dim = data.basis.len();
    for j in 0..data.gx[0].len() {
        let mut acc = SymMatrix::zeros(dim);
        for ((v, g), _) in data.v.iter().zip(&data.gx).zip(feasible).filter(|(_, ok)| **ok) {
            let w = g[j].max(0.0);
            for a in 0..dim {
                for b in 0..=a {
                    acc.add_to(a, b, w * v[a] * v[b]);
                }
            }
        }
        let scale = acc.max_abs();
        if !(scale > 0.0) || acc.min_eigenvalue() <= 1e-10 * scale {
            return Err(Error::InvalidInput(format!(
                "sample set too coarse for order {}: feasible samples do not determine multiplier {j}",
                data.basis.iter().map(|m| m.degree()).max().unwrap_or(0)
            )));
        }
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Standard-form program of the semidefinite relaxation: maximize `λ` with
/// `λ + Σⱼ gⱼ(x)⟨v vᵀ, Gⱼ⟩ + s_x = f(x) + ε` for each sample.
pub fn assemble_sdp_relaxation(prob: &ContinuousProblem, omega: &[Vec<f64>], k: u32, eps: f64) -> Result<SdpProblem> {
    check_eps(eps)?;
    let data = evaluate(prob, omega, k)?;
    let feasible: Vec<bool> = data.gx.iter().map(|g| g.iter().all(|a| *a >= -FEAS_TOL)).collect();
    if !feasible.iter().any(|b| *b) {
        return Err(Error::NoFeasibleSample("no sample satisfies every constraint".into()));
    }
    check_coverage(&data, &feasible)?;
    let dim = data.basis.len();
    let nb = data.gx[0].len();
    let mut sdp = SdpProblem::new(Sense::Maximize, vec![dim; nb], omega.len(), 1);
    sdp.objective.free.push((0, 1.0));
    for (s, ((v, g), f)) in data.v.iter().zip(&data.gx).zip(&data.fx).enumerate() {
        let mut lhs = LinearForm::default();
        for (j, &gj) in g.iter().enumerate() {
            if gj == 0.0 {
                continue;
            }
            for a in 0..dim {
                for b in 0..=a {
                    let c = gj * v[a] * v[b];
                    if c != 0.0 {
                        lhs.push_block(j, a, b, c);
                    }
                }
            }
        }
        lhs.nonneg.push((s, 1.0));
        lhs.free.push((0, 1.0));
        sdp.constraints.push(Constraint { lhs, rhs: f + eps });
    }
    Ok(sdp)
}

/// Standard-form program of the quadratically constrained relaxation. Each
/// term `gⱼ(x)(uⱼᵀv(x))²` becomes `gⱼ(x)·t` with a block
/// `[[1, uⱼᵀv(x)], [uⱼᵀv(x), t]] ⪰ 0`; terms with `gⱼ(x) = 0` are dropped.
pub fn assemble_qc_relaxation(prob: &ContinuousProblem, omega: &[Vec<f64>], k: u32, eps: f64) -> Result<SdpProblem> {
    check_eps(eps)?;
    let data = evaluate(prob, omega, k)?;
    if let Some(i) = data.gx.iter().position(|g| g.iter().any(|a| *a < -FEAS_TOL)) {
        return Err(Error::InvalidInput(format!(
            "sample {i} violates a constraint; the quadratic relaxation needs feasible samples"
        )));
    }
    check_coverage(&data, &vec![true; omega.len()])?;
    let dim = data.basis.len();
    let nb = data.gx[0].len();
    let terms: Vec<(usize, usize)> = (0..omega.len())
        .flat_map(|s| (0..nb).map(move |j| (s, j)))
        .filter(|&(s, j)| data.gx[s][j] > 0.0)
        .collect();
    // Free variables: λ, then u₀, …, u_m.
    let mut sdp = SdpProblem::new(Sense::Maximize, vec![2; terms.len()], omega.len(), 1 + nb * dim);
    sdp.objective.free.push((0, 1.0));
    let mut rows: Vec<LinearForm> = (0..omega.len())
        .map(|s| LinearForm {
            nonneg: vec![(s, 1.0)],
            free: vec![(0, 1.0)],
            ..LinearForm::default()
        })
        .collect();
    for (block, &(s, j)) in terms.iter().enumerate() {
        rows[s].push_block(block, 1, 1, data.gx[s][j]);
        let mut one = LinearForm::default();
        one.push_block(block, 0, 0, 1.0);
        sdp.constraints.push(Constraint { lhs: one, rhs: 1.0 });
        // Off-diagonal entries count twice in ⟨A, X⟩.
        let mut link = LinearForm::default();
        link.push_block(block, 1, 0, 0.5);
        for (a, va) in data.v[s].iter().enumerate() {
            if *va != 0.0 {
                link.free.push((1 + j * dim + a, -va));
            }
        }
        sdp.constraints.push(Constraint { lhs: link, rhs: 0.0 });
    }
    for (s, lhs) in rows.into_iter().enumerate() {
        sdp.constraints.push(Constraint {
            lhs,
            rhs: data.fx[s] + eps,
        });
    }
    Ok(sdp)
}

fn run(
    kind: RelaxationKind,
    sdp: &SdpProblem,
    k: u32,
    eps: f64,
    samples: usize,
    opts: &SolverOptions,
) -> Result<RelaxationResult> {
    let start = Stopwatch::start();
    let sol = ipm::solve(sdp, opts)?;
    Ok(RelaxationResult {
        kind,
        k,
        eps,
        samples,
        bound: sol.free[0],
        status: sol.status,
        residuals: sol.residuals,
        time_ms: start.elapsed_ms(),
    })
}

/// `ρ_k^{(ε)}(Ω)` of the semidefinite relaxation.
pub fn sdp_relaxation(
    prob: &ContinuousProblem,
    omega: &[Vec<f64>],
    k: u32,
    eps: f64,
    opts: &SolverOptions,
) -> Result<RelaxationResult> {
    let sdp = assemble_sdp_relaxation(prob, omega, k, eps)?;
    run(RelaxationKind::Sdp, &sdp, k, eps, omega.len(), opts)
}

/// `ρ_k^{(ε)}(Ω)` of the quadratically constrained relaxation; `Ω ⊆ S`.
pub fn qc_relaxation(
    prob: &ContinuousProblem,
    omega: &[Vec<f64>],
    k: u32,
    eps: f64,
    opts: &SolverOptions,
) -> Result<RelaxationResult> {
    let sdp = assemble_qc_relaxation(prob, omega, k, eps)?;
    run(RelaxationKind::Qc, &sdp, k, eps, omega.len(), opts)
}

/// Grid samples at `resolution`, restricted to feasible points for `Qc`.
pub fn samples_for(prob: &ContinuousProblem, kind: RelaxationKind, resolution: usize) -> Result<Vec<Vec<f64>>> {
    let all = sample_box(prob.n, resolution)?;
    Ok(match kind {
        RelaxationKind::Sdp => all,
        RelaxationKind::Qc => all.into_iter().filter(|x| prob.is_feasible(x)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub resolution: usize,
    pub hausdorff: f64,
    pub result: RelaxationResult,
}

/// Solves every `(resolution, k)` pair. Resolutions `r` and `2r − 1` give
/// nested grids.
pub fn sweep(
    prob: &ContinuousProblem,
    kind: RelaxationKind,
    resolutions: &[usize],
    ks: &[u32],
    eps: f64,
    opts: &SolverOptions,
) -> Result<Vec<SweepEntry>> {
    let jobs: Vec<(usize, u32)> = resolutions
        .iter()
        .flat_map(|&r| ks.iter().map(move |&k| (r, k)))
        .collect();
    let solve = |&(r, k): &(usize, u32)| -> Result<SweepEntry> {
        let omega = samples_for(prob, kind, r)?;
        let result = match kind {
            RelaxationKind::Sdp => sdp_relaxation(prob, &omega, k, eps, opts)?,
            RelaxationKind::Qc => qc_relaxation(prob, &omega, k, eps, opts)?,
        };
        Ok(SweepEntry {
            resolution: r,
            hausdorff: hausdorff_distance(prob.n, r),
            result,
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(solve).collect()
    }
    #[cfg(not(feature = "parallel"))]
    jobs.iter().map(solve).collect()
}

/// CSV with columns `kind,resolution,k,bound,status,time_ms`.
pub fn sweep_csv(entries: &[SweepEntry]) -> String {
    let mut out = String::from("kind,resolution,k,bound,status,time_ms\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{:.12e},{},{:.3}\n",
            e.result.kind, e.resolution, e.result.k, e.result.bound, e.result.status, e.result.time_ms
        ));
    }
    out
}

fn bb<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(f: F) -> BlackBox {
    Arc::new(f)
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 6] = ["abs", "neg-linear", "quad", "sqrt-abs", "ridge", "bowl"];

/// Built-in black-box test problems with their minima `f⋆`.
pub fn builtin(name: &str) -> Result<(ContinuousProblem, f64)> {
    let interval = || bb(|x: &[f64]| 0.25 - x[0] * x[0]);
    let disk = |r2: f64| bb(move |x: &[f64]| r2 - x[0] * x[0] - x[1] * x[1]);
    let (n, f, g, fstar): (usize, BlackBox, BlackBox, f64) = match name {
        "abs" => (1, bb(|x: &[f64]| (x[0] - 0.3).abs()), interval(), 0.0),
        "neg-linear" => (1, bb(|x: &[f64]| -x[0]), interval(), -0.5),
        "quad" => (1, bb(|x: &[f64]| x[0] * x[0]), bb(|x: &[f64]| 1.0 - x[0] * x[0]), 0.0),
        "sqrt-abs" => (2, bb(|x: &[f64]| (x[0].abs() + x[1].abs()).sqrt()), disk(1.0), 0.0),
        "ridge" => (2, bb(|x: &[f64]| (x[0] - x[1]).abs() + 0.5 * x[1]), disk(0.5), -0.25),
        "bowl" => (
            2,
            bb(|x: &[f64]| x[0] * x[0] + x[1] * x[1] + x[0].abs()),
            disk(1.0),
            0.0,
        ),
        _ => {
            return Err(Error::InvalidInput(format!(
                "unknown test function `{name}`; choose one of {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    Ok((ContinuousProblem::new(name, n, f, vec![g])?, fstar))
}

#[cfg(test)]
mod tests;
