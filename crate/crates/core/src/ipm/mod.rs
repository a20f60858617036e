//! Dense primal-dual interior-point method for [`SdpProblem`]s.
//!
//! Infeasible-start path following with HKM scaling and a Mehrotra
//! predictor-corrector. Free scalars are handled by eliminating them from an
//! augmented Schur complement `M + ρ A_f A_fᵀ`.

mod data;

use crate::clock::Stopwatch;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentsdp::{SdpProblem, SymMatrix};
use data::Scaled;

pub use crate::momentsdp::min_eigenvalue;

/// Iterations without a better merit value before giving up.
const STAGNATION_WINDOW: usize = 50;
/// Step length below which a centering direction is tried as well.
const CENTERING_TRIGGER: f64 = 0.1;
const CENTERING_SIGMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target for the relative primal, dual and gap residuals.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Per-iteration trace on standard error.
    pub verbose: bool,
    /// Static Schur complement regularization, relative to its diagonal.
    pub regularization: f64,
    /// Fraction-to-boundary factor for step lengths.
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-8,
            max_iter: 100,
            verbose: false,
            regularization: 1e-10,
            step_fraction: 0.98,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-2) {
            return Err(Error::InvalidInput(format!(
                "tolerance must lie in (0, 1e-2], got {}",
                self.tolerance
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::InvalidInput("step_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    InfeasiblePrimal,
    InfeasibleDual,
    NumericalFailure,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::InfeasiblePrimal => "infeasible_primal",
            SolveStatus::InfeasibleDual => "infeasible_dual",
            SolveStatus::NumericalFailure => "numerical_failure",
        };
        f.write_str(s)
    }
}

/// Relative residuals in the units of the original problem.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖A(X) − b‖∞ / (1 + ‖b‖∞)`.
    pub primal: f64,
    /// `‖C − Z − A*(y)‖∞ / (1 + ‖C‖∞)` over blocks and scalars.
    pub dual: f64,
    /// `|primal_obj − dual_obj| / (1 + |primal_obj|)`.
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Primal-dual result. Dual values follow the problem's own sense, so for a
/// maximization the dual problem is `min bᵀy` with `Z = A*(y) − C ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub message: String,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub blocks: Vec<SymMatrix>,
    pub dual_blocks: Vec<SymMatrix>,
    pub nonneg: Vec<f64>,
    pub free: Vec<f64>,
    pub dual: Vec<f64>,
    pub iterations: usize,
    pub residuals: Residuals,
    pub solve_time_ms: f64,
}

#[derive(Clone)]
struct Iterate {
    x: Vec<DMatrix<f64>>,
    z: Vec<DMatrix<f64>>,
    s: DVector<f64>,
    zs: DVector<f64>,
    w: DVector<f64>,
    y: DVector<f64>,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dz: Vec<DMatrix<f64>>,
    ds: DVector<f64>,
    dzs: DVector<f64>,
    dw: DVector<f64>,
    dy: DVector<f64>,
}

struct Residual {
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    rds: DVector<f64>,
    rdf: DVector<f64>,
}

/// Unregularized Schur complement with a factorization of its regularized
/// augmented form; solves are refined against the former.
struct Factor {
    schur: DMatrix<f64>,
    kind: FactorKind,
}

enum FactorKind {
    Chol {
        k: Cholesky<f64, Dyn>,
        kf: DMatrix<f64>,
        reduced: Option<LU<f64, Dyn, Dyn>>,
        rho: f64,
    },
    Saddle(LU<f64, Dyn, Dyn>),
}

/// Solves `sdp` from an infeasible start. Never fails for well-formed input:
/// divergence and breakdowns are reported through [`SolveStatus`].
pub fn solve(sdp: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    opts.validate()?;
    sdp.validate()?;
    let start = Stopwatch::start();
    let data = Scaled::new(sdp);
    let mut it = data.initial_point();
    let nu = (data.dims.iter().sum::<usize>() + data.ns) as f64;

    let mut best: Option<(f64, Iterate, Residuals, usize)> = None;
    let mut status = SolveStatus::MaxIter;
    let mut message = String::from("iteration limit reached");
    let mut stalls = 0;
    let mut iterations = 0;

    if opts.verbose {
        eprintln!(
            "{:>4} {:>14} {:>14} {:>9} {:>9} {:>9} {:>9} {:>6} {:>6}",
            "it", "primal", "dual", "pres", "dres", "gap", "mu", "ap", "ad"
        );
    }

    for iter in 0..=opts.max_iter {
        let res = data.residual(&it);
        let rel = data.relative(&it, &res);
        let merit = rel.max();
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, it.clone(), rel, iter));
        }
        if merit <= opts.tolerance {
            status = SolveStatus::Optimal;
            message = "converged".into();
            iterations = iter;
            break;
        }
        if iter == opts.max_iter {
            iterations = iter;
            break;
        }
        if best.as_ref().is_some_and(|b| iter >= b.3 + STAGNATION_WINDOW) {
            message = format!("no progress in {STAGNATION_WINDOW} iterations");
            iterations = iter;
            break;
        }
        if let Some((st, msg)) = data.infeasibility(&it) {
            status = st;
            message = msg;
            iterations = iter;
            break;
        }

        let mu = data.complementarity(&it) / nu;
        let zinv: Vec<DMatrix<f64>> = match it.z.iter().map(inverse_spd).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => {
                status = SolveStatus::NumericalFailure;
                message = format!("dual block lost positive definiteness at iteration {iter}");
                iterations = iter;
                break;
            }
        };
        let factor = match data.factor(&it, &zinv, opts.regularization) {
            Some(f) => f,
            None => {
                status = SolveStatus::NumericalFailure;
                message = format!("Schur complement factorization failed at iteration {iter}");
                iterations = iter;
                break;
            }
        };

        let aff = data.direction(&it, &res, &zinv, &factor, 0.0, None);
        let ap_aff = data.primal_step(&it, &aff, 1.0);
        let ad_aff = data.dual_step(&it, &aff, 1.0);
        let mu_aff = data.trial_complementarity(&it, &aff, ap_aff, ad_aff) / nu;
        let sigma = if mu > 0.0 {
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };

        let mut dir = data.direction(&it, &res, &zinv, &factor, sigma * mu, Some(&aff));
        let mut ap = data.primal_step(&it, &dir, opts.step_fraction);
        let mut ad = data.dual_step(&it, &dir, opts.step_fraction);
        // Poorly centered iterates block the corrected direction; fall back
        // to a centering step without the second-order term.
        if ap.min(ad) < CENTERING_TRIGGER {
            let alt = data.direction(&it, &res, &zinv, &factor, CENTERING_SIGMA * mu, None);
            let (bp, bd) = (
                data.primal_step(&it, &alt, opts.step_fraction),
                data.dual_step(&it, &alt, opts.step_fraction),
            );
            if bp.min(bd) > ap.min(ad) {
                (dir, ap, ad) = (alt, bp, bd);
            }
        }

        if opts.verbose {
            let (pobj, dobj) = data.objectives(&it);
            eprintln!(
                "{iter:>4} {pobj:>14.7e} {dobj:>14.7e} {:>9.2e} {:>9.2e} {:>9.2e} {mu:>9.2e} {ap:>6.3} {ad:>6.3}",
                rel.primal, rel.dual, rel.gap
            );
        }

        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                status = SolveStatus::NumericalFailure;
                message = format!("step lengths collapsed at iteration {iter}");
                iterations = iter;
                break;
            }
        } else {
            stalls = 0;
        }
        apply(&mut it, &dir, ap, ad);
        if it.x.iter().chain(&it.z).any(|m| m.iter().any(|v| !v.is_finite())) {
            status = SolveStatus::NumericalFailure;
            message = format!("non-finite iterate at iteration {iter}");
            iterations = iter + 1;
            break;
        }
    }

    let (_, best_it, best_res, best_iter) = best.expect("at least one iterate is evaluated");
    if status != SolveStatus::Optimal {
        message = format!("{message}; best iterate from iteration {best_iter}");
    }
    let mut sol = data.unscale(&best_it, status, message, iterations, best_res);
    sol.solve_time_ms = start.elapsed_ms();
    Ok(sol)
}

fn apply(it: &mut Iterate, d: &Direction, ap: f64, ad: f64) {
    for (x, dx) in it.x.iter_mut().zip(&d.dx) {
        *x += dx * ap;
    }
    it.s.axpy(ap, &d.ds, 1.0);
    it.w.axpy(ap, &d.dw, 1.0);
    for (z, dz) in it.z.iter_mut().zip(&d.dz) {
        *z += dz * ad;
    }
    it.zs.axpy(ad, &d.dzs, 1.0);
    it.y.axpy(ad, &d.dy, 1.0);
}

pub(crate) fn inverse_spd(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let c = Cholesky::new(a.clone())?;
    let inv = c.inverse();
    Some(symmetrize(&inv))
}

pub(crate) fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest `α` with `X + α ΔX ⪰ 0`, or `+∞` if every step is feasible.
fn max_step_psd(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = Cholesky::new(x.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let Some(t) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(m) = l.solve_lower_triangular(&t.transpose()) else {
        return 0.0;
    };
    let lam = symmetrize(&m)
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v));
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}
