//! Explicit degree bounds for Positivstellensätze and a sampling estimate of
//! the sphere ratio `Θ(h) = sup h / inf h` over `𝕊^{n−1}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyalg::Polynomial;

/// Observed extremes of a form on the unit sphere. Heuristic: the true sup
/// may be larger and the true inf smaller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub sup_val: f64,
    pub inf_val: f64,
    /// `sup_val / inf_val` when `inf_val > 0`, otherwise `+∞`.
    pub ratio: f64,
    pub sample_count: usize,
}

impl ThetaEstimate {
    /// False when some sample was non-positive.
    pub fn positive_definite(&self) -> bool {
        self.inf_val > 0.0
    }
}

/// Rounds a nonnegative real bound up to an integer, saturating at `u64::MAX`.
fn ceil_clamped(v: f64) -> u64 {
    if v.is_nan() || v <= 0.0 {
        0
    } else if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v.ceil() as u64
    }
}

/// Smallest `k` with `‖x‖^{2k} p` SOS for a positive definite form `p` of
/// degree `2d` in `n` variables with sphere ratio `theta`.
pub fn reznick_bound(n: usize, d: u32, theta: f64) -> Result<u64> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("reznick_bound needs n >= 1 and d >= 1".into()));
    }
    if !(theta >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "sphere ratio must be at least 1 for a positive definite form, got {theta}"
        )));
    }
    let (n, d) = (n as f64, d as f64);
    let v = 2.0 * n * d * (2.0 * d - 1.0) / (4.0 * std::f64::consts::LN_2) * theta - (n + 2.0 * d) / 2.0;
    Ok(ceil_clamped(v))
}

/// Smallest `k` with `(Σ xⱼ)^k p` having positive coefficients, for a form
/// `p` of degree `d` with [`polya_norm`] `norm_p` and minimum `min_simplex`
/// on the standard simplex.
pub fn polya_bound(d: u32, norm_p: f64, min_simplex: f64) -> Result<u64> {
    if d == 0 {
        return Err(Error::InvalidInput("polya_bound needs d >= 1".into()));
    }
    if !(norm_p > 0.0) {
        return Err(Error::InvalidInput(format!(
            "coefficient norm must be positive, got {norm_p}"
        )));
    }
    if !(min_simplex > 0.0) {
        return Err(Error::InvalidInput(format!(
            "polynomial is not positive on the simplex (minimum {min_simplex})"
        )));
    }
    let d = d as f64;
    Ok(ceil_clamped(d * (d - 1.0) * norm_p / (2.0 * min_simplex) - d))
}

/// `max_α |p_α| / c_α` with multinomial weights `c_α = |α|! / (α₁!⋯αₙ!)`.
pub fn polya_norm(p: &Polynomial) -> f64 {
    p.terms().map(|(m, c)| c.abs() / m.multinomial()).fold(0.0, f64::max)
}

fn check_fstar(fstar: f64, c: f64) -> Result<()> {
    if !(fstar > 0.0) {
        return Err(Error::InvalidInput(format!("f* must be positive, got {fstar}")));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("constant c must be positive, got {c}")));
    }
    Ok(())
}

fn complexity_ratio(n: usize, d_f: u32, norm_f: f64, fstar: f64) -> f64 {
    let df = d_f as f64;
    df * df * (n as f64).powi(d_f as i32) * norm_f / fstar
}

/// Preordering order from the Schmüdgen complexity estimate. The set
/// constant `c` is not constructive and must be supplied.
pub fn schmudgen_bound(n: usize, d_f: u32, norm_f: f64, fstar: f64, c: f64) -> Result<u64> {
    check_fstar(fstar, c)?;
    let df = d_f as f64;
    let r = complexity_ratio(n, d_f, norm_f, fstar);
    Ok(ceil_clamped(c * df * df * (1.0 + r.powf(c))))
}

/// `c · exp((d_f² n^{d_f} ‖f‖ / f⋆)^c)`; `+∞` on overflow.
pub fn nie_schweighofer_bound(n: usize, d_f: u32, norm_f: f64, fstar: f64, c: f64) -> Result<f64> {
    check_fstar(fstar, c)?;
    Ok(c * complexity_ratio(n, d_f, norm_f, fstar).powf(c).exp())
}

const REFINE_STEPS: usize = 100;
const REFINE_STEP: f64 = 1e-2;

/// Samples `samples` seeded uniform points on the sphere and refines each by
/// projected gradient ascent and descent.
pub fn estimate_theta(h: &Polynomial, samples: usize, seed: u64) -> Result<ThetaEstimate> {
    if samples == 0 {
        return Err(Error::InvalidInput("estimate_theta needs at least one sample".into()));
    }
    if h.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if !h.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    let n = h.nvars();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup_val = f64::NEG_INFINITY;
    let mut inf_val = f64::INFINITY;
    for _ in 0..samples {
        let x = loop {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|a| a / norm).collect::<Vec<f64>>();
            }
        };
        sup_val = sup_val.max(sphere_ascent(h, &x, 1.0));
        inf_val = inf_val.min(-sphere_ascent(h, &x, -1.0));
    }
    let ratio = if inf_val > 0.0 {
        sup_val / inf_val
    } else {
        f64::INFINITY
    };
    Ok(ThetaEstimate {
        sup_val,
        inf_val,
        ratio,
        sample_count: samples,
    })
}

/// Maximizes `sign·h` on the sphere from `x0`; returns the best value of `sign·h`.
pub(crate) fn sphere_ascent(h: &Polynomial, x0: &[f64], sign: f64) -> f64 {
    let mut x = x0.to_vec();
    let mut fx = sign * h.eval(&x);
    let mut step = REFINE_STEP;
    for _ in 0..REFINE_STEPS {
        let g = h.gradient(&x);
        let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        let tangent: Vec<f64> = g.iter().zip(&x).map(|(a, b)| sign * (a - radial * b)).collect();
        if tangent.iter().map(|a| a * a).sum::<f64>().sqrt() < 1e-14 {
            break;
        }
        let mut moved = false;
        for _ in 0..30 {
            let mut trial: Vec<f64> = x.iter().zip(&tangent).map(|(a, t)| a + step * t).collect();
            let norm = trial.iter().map(|a| a * a).sum::<f64>().sqrt();
            trial.iter_mut().for_each(|a| *a /= norm);
            let ft = sign * h.eval(&trial);
            if ft > fx {
                x = trial;
                fx = ft;
                moved = true;
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    fx
}
