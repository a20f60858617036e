//! Runs the hierarchy `ρ_k` over relaxation orders, extracts SOS certificates
//! from Gram matrices, and re-verifies them symbolically.

mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ipm::{self, SdpSolution, SolveStatus, SolverOptions};
use crate::momentsdp::{assemble_moment_form, assemble_sos_form, RelaxationLayout, SymMatrix};
use crate::polyalg::{monomials_up_to, Monomial, Polynomial, PopProblem};

pub use oracle::{grid_oracle, grid_oracle_point, local_descent};

/// Gram eigenvalues at or below this are dropped during factor extraction.
pub const EIGEN_FLOOR: f64 = 1e-10;
/// Gram matrices more indefinite than this are rejected.
pub const PSD_SLACK: f64 = 1e-6;

/// Weighted SOS certificate of `θ^k(f − λ + εθ^{d_f}) = σ₀ + Σⱼ σⱼ gⱼ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub k: u32,
    pub eps: f64,
    pub lambda: f64,
    /// Constraint index carried by each Gram block, `None` for `σ₀`.
    pub block_weights: Vec<Option<usize>>,
    /// Monomial basis degree of each Gram block.
    pub block_degrees: Vec<u32>,
    pub grams: Vec<SymMatrix>,
    /// Squared factors of each `σ`, in block order. Not serialized.
    #[serde(skip)]
    pub sos_factors: Vec<Vec<Polynomial>>,
    pub residual: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub k: u32,
    pub bound: f64,
    pub status: SolveStatus,
    pub time_ms: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Solver did not reach optimality; the certificate is still verified.
    pub degraded: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HierarchyTrace {
    pub entries: Vec<TraceEntry>,
    /// Orders `k` with `ρ_k > ρ_{k+1} + 1e-6`.
    pub monotonicity_violations: Vec<u32>,
}

impl HierarchyTrace {
    /// CSV with columns `k,bound,residual,time_ms`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,bound,residual,time_ms\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{:e},{:.3}\n", e.k, e.bound, e.residual, e.time_ms));
        }
        out
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.bound).collect()
    }
}

/// Solves the SOS form at order `k` and returns the verified certificate.
pub fn solve_level(prob: &PopProblem, k: u32, eps: f64, opts: &SolverOptions) -> Result<(Certificate, SdpSolution)> {
    let sdp = assemble_sos_form(prob, k, eps)?;
    let sol = ipm::solve(&sdp, opts)?;
    let layout = RelaxationLayout::new(prob, k);
    let lambda = sol.free[0];
    let mut cert = Certificate {
        k,
        eps,
        lambda,
        block_weights: layout.block_weights,
        block_degrees: layout.block_degrees,
        grams: sol.blocks.clone(),
        sos_factors: Vec::new(),
        residual: f64::NAN,
        status: sol.status,
    };
    let n = prob.nvars();
    cert.sos_factors = cert
        .grams
        .iter()
        .zip(&cert.block_degrees)
        .map(|(g, &d)| extract_sos(g, d, n).unwrap_or_default())
        .collect();
    cert.residual = verify_certificate(prob, &cert)?;
    Ok((cert, sol))
}

/// Optimal value of the moment form at order `k`.
pub fn solve_moment_level(prob: &PopProblem, k: u32, eps: f64, opts: &SolverOptions) -> Result<SdpSolution> {
    let sdp = assemble_moment_form(prob, k, eps)?;
    ipm::solve(&sdp, opts)
}

/// Solves orders `0..=k_max`. A failure at one order is recorded in the trace
/// and later orders are still attempted.
pub fn run_hierarchy(
    prob: &PopProblem,
    k_max: u32,
    eps: f64,
    opts: &SolverOptions,
) -> Result<(HierarchyTrace, Vec<Certificate>)> {
    if eps == 0.0 && prob.ball_radius().is_none() {
        return Err(Error::InvalidInput(
            "the unperturbed hierarchy (eps = 0) needs a ball constraint L - |x|^2".into(),
        ));
    }
    let levels: Vec<u32> = (0..=k_max).collect();
    let run = |k: &u32| solve_level(prob, *k, eps, opts);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(Certificate, SdpSolution)>> = {
        use rayon::prelude::*;
        levels.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(Certificate, SdpSolution)>> = levels.iter().map(run).collect();

    let mut trace = HierarchyTrace::default();
    let mut certs = Vec::new();
    for (k, r) in levels.iter().zip(results) {
        match r {
            Ok((cert, sol)) => {
                trace.entries.push(TraceEntry {
                    k: *k,
                    bound: cert.lambda,
                    status: sol.status,
                    time_ms: sol.solve_time_ms,
                    residual: cert.residual,
                    iterations: sol.iterations,
                    degraded: sol.status != SolveStatus::Optimal,
                });
                certs.push(cert);
            }
            Err(e) => {
                log::warn!("order {k} failed: {e}");
                trace.entries.push(TraceEntry {
                    k: *k,
                    bound: f64::NAN,
                    status: SolveStatus::NumericalFailure,
                    time_ms: 0.0,
                    residual: f64::NAN,
                    iterations: 0,
                    degraded: true,
                });
            }
        }
    }
    for w in trace.entries.windows(2) {
        if w[0].bound > w[1].bound + 1e-6 {
            trace.monotonicity_violations.push(w[0].k);
        }
    }
    Ok((trace, certs))
}

/// Factors `σ = v_tᵀ G v_t` as `Σᵢ (√λᵢ uᵢ·v_t)²` over eigenpairs with `λᵢ > 1e-10`.
pub fn extract_sos(gram: &SymMatrix, basis_degree: u32, n: usize) -> Result<Vec<Polynomial>> {
    let basis = monomials_up_to(n, basis_degree);
    extract_sos_in_basis(gram, &basis)
}

/// [`extract_sos`] for an arbitrary monomial basis.
pub fn extract_sos_in_basis(gram: &SymMatrix, basis: &[Monomial]) -> Result<Vec<Polynomial>> {
    if gram.dim() != basis.len() {
        return Err(Error::InvalidInput(format!(
            "Gram matrix of dimension {} does not match basis of length {}",
            gram.dim(),
            basis.len()
        )));
    }
    let n = basis.first().map_or(0, |m| m.nvars());
    let (vals, vecs) = gram.eigen();
    if let Some(&lo) = vals.first() {
        if lo < -PSD_SLACK {
            return Err(Error::NotPsd {
                min_eigenvalue: lo,
                threshold: -PSD_SLACK,
            });
        }
    }
    let mut out = Vec::new();
    for (i, &lam) in vals.iter().enumerate() {
        if lam <= EIGEN_FLOOR {
            continue;
        }
        let r = lam.sqrt();
        let mut p = Polynomial::zero(n);
        for (row, m) in basis.iter().enumerate() {
            p.add_term(m.clone(), r * vecs[(row, i)]);
        }
        out.push(p);
    }
    Ok(out)
}

/// `v_bᵀ G v_b` as a polynomial.
pub fn gram_polynomial(gram: &SymMatrix, basis: &[Monomial]) -> Polynomial {
    let n = basis.first().map_or(0, |m| m.nvars());
    let mut p = Polynomial::zero(n);
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().take(i + 1) {
            let f = if i == j { 1.0 } else { 2.0 };
            p.add_term(a.mul(b), f * gram.get(i, j));
        }
    }
    p
}

/// Recomputes `‖LHS − RHS‖∞ / (1 + ‖LHS‖∞)` from the Gram matrices, where
/// `LHS = θ^k(f − λ + εθ^{d_f})` and `RHS = Σ_b weight_b · v_bᵀ G_b v_b`.
pub fn verify_certificate(prob: &PopProblem, cert: &Certificate) -> Result<f64> {
    let n = prob.nvars();
    let t = cert.k + prob.d_f();
    let nb = cert.grams.len();
    if cert.block_weights.len() != nb || cert.block_degrees.len() != nb {
        return Err(Error::InvalidInput("certificate block layout is inconsistent".into()));
    }
    let mut rhs = Polynomial::zero(n);
    for ((gram, w), &deg) in cert.grams.iter().zip(&cert.block_weights).zip(&cert.block_degrees) {
        let weight = match w {
            None => Polynomial::constant(n, 1.0),
            Some(j) => prob
                .constraints()
                .get(*j)
                .ok_or_else(|| Error::InvalidInput(format!("certificate refers to missing constraint {j}")))?
                .clone(),
        };
        if 2 * deg as i64 + weight.degree().max(0) > 2 * t as i64 {
            return Err(Error::Degree(format!(
                "block of degree {deg} with weight of degree {} exceeds 2(k + d_f) = {}",
                weight.degree(),
                2 * t
            )));
        }
        let basis = monomials_up_to(n, deg);
        if gram.dim() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: gram.dim(),
            });
        }
        rhs = &rhs + &(&gram_polynomial(gram, &basis) * &weight);
    }
    let mut inner = prob.objective().clone();
    inner.add_term(Monomial::one(n), -cert.lambda);
    let mut lhs = inner.theta_pow_mul(cert.k);
    if cert.eps != 0.0 {
        lhs = &lhs + &Polynomial::constant(n, cert.eps).theta_pow_mul(t);
    }
    let diff = lhs.max_coeff_diff(&rhs)?;
    Ok(diff / (1.0 + lhs.max_abs_coeff()))
}

/// Least-squares slope of `log(f⋆ − ρ_k)` against `log k` over `k ≥ 1`.
///
/// Heuristic only; `None` when fewer than two usable points exist.
pub fn empirical_slope(trace: &HierarchyTrace, fstar: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = trace
        .entries
        .iter()
        .filter(|e| e.k >= 1 && e.bound.is_finite() && fstar - e.bound > 1e-12)
        .map(|e| ((e.k as f64).ln(), (fstar - e.bound).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
