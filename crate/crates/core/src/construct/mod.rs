//! Constructive positivity certificate for one constraint `g ≥ 0`: weight
//! function `ψ`, its Lipschitz extension `φ̄`, Bernstein approximation `q`,
//! the positive definite form `F` and its Reznick order.

pub mod chain;
mod sphere;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bernstein::{even_part, homogeneous_lift, BernsteinApprox, Domain, SampledFunction};
use crate::bounds::reznick_bound;
use crate::error::{Error, Result};
use crate::hierarchy::gram_polynomial;
use crate::ipm::{self, SolveStatus, SolverOptions};
use crate::momentsdp::assemble_reznick_gap;
use crate::polyalg::{monomials_of_degree, norm_sq_pow, Polynomial};

pub use chain::{
    constant_chain, rate_exponent_icecream, ChainInputs, ChainValue, ConstantChain, EpsOrder, ExponentChain,
    ExponentEntry, M_CONSTRAINTS,
};
pub use sphere::{sphere_grid, SphereGrid};

/// Samples with `g` at or below this value are not interior.
const INTERIOR_TOL: f64 = 1e-9;
const GRID_BUDGET: u128 = 10_000_000;
const DESCENT_STARTS: usize = 8;
const DESCENT_STEPS: usize = 200;

/// Exponent `α` and constant `C` of `dist(x, S)^α ≤ −C g(x)` for `g(x) < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczData {
    pub alpha: f64,
    pub c: f64,
    /// Only set for the ice-cream constraint, where `(α, C) = (2, 1/2)`.
    pub certified: bool,
}

impl LojasiewiczData {
    pub fn icecream() -> Self {
        LojasiewiczData {
            alpha: 2.0,
            c: 0.5,
            certified: true,
        }
    }

    /// Caller-supplied constants; never marked certified.
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha >= 1.0) || !(c > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Łojasiewicz constants need alpha >= 1 and C > 0, got {alpha} and {c}"
            )));
        }
        Ok(LojasiewiczData {
            alpha,
            c,
            certified: false,
        })
    }
}

/// The ice-cream form `xₙ² − ‖x′‖²` in `n ≥ 2` variables.
pub fn icecream(n: usize) -> Result<Polynomial> {
    if n < 2 {
        return Err(Error::InvalidInput("the ice-cream constraint needs n >= 2".into()));
    }
    let mut g = Polynomial::var(n, n - 1).pow(2);
    for i in 0..n - 1 {
        g = &g - &Polynomial::var(n, i).pow(2);
    }
    Ok(g)
}

pub fn is_icecream(g: &Polynomial) -> bool {
    icecream(g.nvars()).is_ok_and(|ic| ic == *g)
}

/// Squared distance from `x` to the cone `{xₙ² = ‖x′‖²}`.
pub fn icecream_dist(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput("the ice-cream cone needs n >= 2".into()));
    }
    let r = x[..n - 1].iter().map(|a| a * a).sum::<f64>().sqrt();
    let t = x[n - 1];
    Ok(0.5 * (t - r).powi(2).min((t + r).powi(2)))
}

/// Checks that `f` and `g` are forms of even degree in the same variables
/// and returns `(n, deg f / 2, deg g / 2)`.
fn check_forms(f: &Polynomial, g: &Polynomial) -> Result<(usize, u32, u32)> {
    if f.nvars() != g.nvars() {
        return Err(Error::DimensionMismatch {
            expected: f.nvars(),
            found: g.nvars(),
        });
    }
    for (name, p) in [("f", f), ("g", g)] {
        if p.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if !p.is_homogeneous() {
            return Err(Error::NotHomogeneous);
        }
        if p.degree() % 2 != 0 {
            return Err(Error::Degree(format!(
                "{name} must have even degree, got {}",
                p.degree()
            )));
        }
    }
    if g.degree() == 0 {
        return Err(Error::Degree("g must be nonconstant".into()));
    }
    Ok((f.nvars(), f.degree() as u32 / 2, g.degree() as u32 / 2))
}

/// Radius `√n + m` of the ball carrying the weight functions.
pub fn ball_radius(n: usize) -> f64 {
    (n as f64).sqrt() + M_CONSTRAINTS as f64
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn grid_points(n: usize, lo: f64, hi: f64, res: usize) -> Result<Vec<Vec<f64>>> {
    if res < 2 {
        return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
    }
    let count = (res as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > GRID_BUDGET {
        return Err(Error::BudgetExceeded {
            count,
            limit: GRID_BUDGET,
        });
    }
    let axis: Vec<f64> = (0..res).map(|i| lo + (hi - lo) * i as f64 / (res - 1) as f64).collect();
    Ok((0..count as usize)
        .map(|mut idx| {
            let mut x = vec![0.0; n];
            for xi in x.iter_mut().rev() {
                *xi = axis[idx % res];
                idx /= res;
            }
            x
        })
        .collect())
}

/// `(f + ε/2) / g` and its gradient.
fn quotient(f: &Polynomial, g: &Polynomial, eps: f64, x: &[f64]) -> (f64, Vec<f64>) {
    let (fv, gv) = (f.eval(x) + eps / 2.0, g.eval(x));
    let (gf, gg) = (f.gradient(x), g.gradient(x));
    let grad = gf.iter().zip(&gg).map(|(a, b)| (a * gv - fv * b) / (gv * gv)).collect();
    (fv / gv, grad)
}

/// Estimate of `M = inf (f + ε/2)/g` over `{g > 0} ∩ B(0, √n + 1)`: grid
/// search over the ball followed by feasible gradient descent from the best
/// grid points. The estimate is an upper bound on the true infimum.
pub fn compute_m(f: &Polynomial, g: &Polynomial, eps: f64, grid_res: usize) -> Result<f64> {
    let (n, _, _) = check_forms(f, g)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let r = ball_radius(n);
    let inside = |x: &[f64]| norm(x) <= r && g.eval(x) > INTERIOR_TOL;
    let mut best: Vec<(f64, Vec<f64>)> = grid_points(n, -r, r, grid_res)?
        .into_iter()
        .filter(|x| inside(x))
        .map(|x| ((f.eval(&x) + eps / 2.0) / g.eval(&x), x))
        .collect();
    if best.is_empty() {
        return Err(Error::NoFeasibleSample(format!(
            "no grid point with g > {INTERIOR_TOL:e} in the ball of radius {r:.4}"
        )));
    }
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    best.truncate(DESCENT_STARTS);
    let step0 = 2.0 * r / (grid_res - 1) as f64;
    Ok(best
        .into_iter()
        .map(|(v, x)| descend_quotient(f, g, eps, x, v, step0, &inside))
        .fold(f64::INFINITY, f64::min))
}

fn descend_quotient(
    f: &Polynomial,
    g: &Polynomial,
    eps: f64,
    mut x: Vec<f64>,
    mut v: f64,
    mut step: f64,
    inside: &dyn Fn(&[f64]) -> bool,
) -> f64 {
    for _ in 0..DESCENT_STEPS {
        let (_, grad) = quotient(f, g, eps, &x);
        let gn = norm(&grad);
        if gn < 1e-14 {
            break;
        }
        let mut moved = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, d)| a - step * d / gn).collect();
            if inside(&trial) {
                let tv = quotient(f, g, eps, &trial).0;
                if tv < v {
                    x = trial;
                    v = tv;
                    moved = true;
                    step *= 2.0;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    v
}

/// `ψ(x) = max(M, (f + ε/2)/g)` where `g(x) < 0`, and `M` elsewhere.
pub fn psi_value(x: &[f64], f: &Polynomial, g: &Polynomial, eps: f64, big_m: f64) -> f64 {
    let gv = g.eval(x);
    if gv < 0.0 {
        big_m.max((f.eval(x) + eps / 2.0) / gv)
    } else {
        big_m
    }
}

/// Discrete Kirszbraun extension `x ↦ min_y φ(y) + L‖x − y‖` over anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct KirszbraunExtension {
    anchors: Vec<Vec<f64>>,
    values: Vec<f64>,
    lipschitz: f64,
}

impl KirszbraunExtension {
    pub fn new(anchors: Vec<Vec<f64>>, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidInput(
                "Kirszbraun extension needs at least one anchor".into(),
            ));
        }
        if anchors.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: anchors.len(),
                found: values.len(),
            });
        }
        let n = anchors[0].len();
        if let Some(a) = anchors.iter().find(|a| a.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.len(),
            });
        }
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Lipschitz constant must be finite and >= 0, got {lipschitz}"
            )));
        }
        Ok(KirszbraunExtension {
            anchors,
            values,
            lipschitz,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.anchors
            .iter()
            .zip(&self.values)
            .map(|(y, v)| {
                let d = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                v + self.lipschitz * d
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest slope `|φ(y) − φ(y′)| / ‖y − y′‖` between anchors.
    pub fn discrete_lipschitz(&self) -> f64 {
        discrete_lipschitz(&self.anchors, &self.values)
    }
}

fn discrete_lipschitz(anchors: &[Vec<f64>], values: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..anchors.len() {
        for j in 0..i {
            let d = anchors[i]
                .iter()
                .zip(&anchors[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d > 0.0 {
                best = best.max((values[i] - values[j]).abs() / d);
            }
        }
    }
    best
}

/// Regular grid over `[−√n, √n]ⁿ` restricted to the ball `B(0, √n)`, with
/// its spacing.
pub fn anchor_grid(n: usize, res: usize) -> Result<(Vec<Vec<f64>>, f64)> {
    let r = (n as f64).sqrt();
    let pts = grid_points(n, -r, r, res)?;
    let spacing = 2.0 * r / (res - 1) as f64;
    Ok((
        pts.into_iter().filter(|x| norm(x) <= r * (1.0 + 1e-12)).collect(),
        spacing,
    ))
}

/// Settings of [`build_f`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructParams {
    /// Points per axis of the grid for `M`.
    pub grid_res: usize,
    /// Points per axis of the anchor grid; `None` picks by dimension.
    pub anchor_res: Option<usize>,
    /// Cap on `u`; when it binds the pipeline runs in demonstration mode.
    pub u_cap: Option<u64>,
    pub sphere_points: usize,
    /// Required unless `g` is the ice-cream form.
    pub lojasiewicz: Option<LojasiewiczData>,
    pub seed: u64,
}

impl Default for ConstructParams {
    fn default() -> Self {
        ConstructParams {
            grid_res: 101,
            anchor_res: None,
            u_cap: Some(40),
            sphere_points: 10_000,
            lojasiewicz: None,
            seed: 0,
        }
    }
}

fn default_anchor_res(n: usize) -> usize {
    match n {
        0..=2 => 41,
        3 => 15,
        _ => 7,
    }
}

/// Extremes of a form on a sphere grid, refined by local search from the
/// extreme grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereCheck {
    pub points: usize,
    pub spacing: f64,
    /// Largest gradient norm over the grid.
    pub lipschitz_estimate: f64,
    /// `lipschitz_estimate · spacing`.
    pub slack: f64,
    pub min: f64,
    pub argmin: Vec<f64>,
    pub max: f64,
    /// `ε / ((m+1) 2^m)`.
    pub lower_target: f64,
    /// `C_F` with the constants used in the build.
    pub upper_target: f64,
    pub lower_met: bool,
    pub upper_met: bool,
}

fn sphere_extremes(h: &Polynomial, grid: &SphereGrid) -> (f64, Vec<f64>, f64, f64) {
    let mut min = (f64::INFINITY, 0usize);
    let mut max = (f64::NEG_INFINITY, 0usize);
    let mut lip: f64 = 0.0;
    for (i, x) in grid.points.iter().enumerate() {
        let v = h.eval(x);
        if v < min.0 {
            min = (v, i);
        }
        if v > max.0 {
            max = (v, i);
        }
        lip = lip.max(norm(&h.gradient(x)));
    }
    let lo = -crate::bounds::sphere_ascent(h, &grid.points[min.1], -1.0);
    let hi = crate::bounds::sphere_ascent(h, &grid.points[max.1], 1.0);
    (min.0.min(lo), grid.points[min.1].clone(), max.0.max(hi), lip)
}

/// Everything computed by [`build_f`]. Constants named after the chain are
/// the formula values; `*_used` values are those the build actually used.
#[derive(Debug, Clone, Serialize)]
pub struct ConstructState {
    pub n: usize,
    pub eps: f64,
    pub f: Polynomial,
    pub g: Polynomial,
    pub lojasiewicz: LojasiewiczData,
    #[serde(rename = "M")]
    pub big_m: f64,
    /// Interior point `ā` on the unit sphere with `g(ā) > 0`.
    pub a_bar: Vec<f64>,
    pub delta: f64,
    pub lipschitz_f: f64,
    pub sup_f: f64,
    pub lipschitz_g: f64,
    pub sup_g: f64,
    #[serde(rename = "C_phi")]
    pub c_phi: f64,
    /// Formula Lipschitz constant `L_φ̄` of the extension.
    #[serde(rename = "L_phi")]
    pub l_phi: f64,
    pub w: f64,
    pub chain: BTreeMap<String, f64>,
    /// Formula value of `u` before any cap.
    pub u_formula: f64,
    pub u: u64,
    pub demonstration: bool,
    /// Smallest `ε` covered by the approximation actually built.
    pub eps_achieved: f64,
    pub lipschitz_used: f64,
    pub c_phi_bar_used: f64,
    #[serde(skip)]
    pub extension: Arc<KirszbraunExtension>,
    pub q: Polynomial,
    #[serde(rename = "F")]
    pub big_f: Polynomial,
    pub d_f: u32,
    pub d_g: u32,
    #[serde(rename = "D")]
    pub big_d: u32,
    pub sphere: SphereCheck,
    /// Measured `Θ(F) = max F / min F` on the sphere.
    pub theta: f64,
    #[serde(rename = "K_bar")]
    pub k_bar: u64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl ConstructState {
    pub fn psi(&self, x: &[f64]) -> f64 {
        psi_value(x, &self.f, &self.g, self.eps, self.big_m)
    }

    pub fn phi_bar(&self, x: &[f64]) -> f64 {
        self.extension.eval(x)
    }
}

/// Runs the construction for `f ≥ 0` on `{g ≥ 0}` with forms `f`, `g`.
///
/// When `u` is capped the Lipschitz extension uses the anchors' empirical
/// Lipschitz constant instead of the formula one, and `eps_achieved`
/// reports the `ε` matched by the approximation actually built.
pub fn build_f(f: &Polynomial, g: &Polynomial, eps: f64, params: &ConstructParams) -> Result<ConstructState> {
    let (n, d_f, d_g) = check_forms(f, g)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let loja = if is_icecream(g) {
        LojasiewiczData::icecream()
    } else {
        params.lojasiewicz.ok_or_else(|| {
            Error::InvalidInput(
                "Łojasiewicz constants are only certified for the ice-cream constraint; supply them for other g".into(),
            )
        })?
    };
    if params.sphere_points == 0 {
        return Err(Error::InvalidInput("sphere_points must be positive".into()));
    }
    let m_weight = (M_CONSTRAINTS as f64 + 1.0) * 2f64.powi(M_CONSTRAINTS as i32);
    let r = ball_radius(n);
    let grid = sphere_grid(n, params.sphere_points, params.seed)?;

    // Sup and gradient bounds on B(0, r) scale from the sphere by homogeneity.
    let scaled = |p: &Polynomial, deg: u32| -> (f64, f64) {
        let (lo, _, hi, lip) = sphere_extremes(p, &grid);
        let sup = lo.abs().max(hi.abs()) * r.powi(deg as i32);
        (sup, lip * r.powi(deg as i32 - 1))
    };
    let (sup_f, lipschitz_f) = scaled(f, 2 * d_f);
    let (sup_g, lipschitz_g) = scaled(g, 2 * d_g);
    if !(lipschitz_f > 0.0) {
        return Err(Error::InvalidInput("f has zero gradient on the sphere".into()));
    }

    let a_bar = grid
        .points
        .iter()
        .max_by(|a, b| g.eval(a).total_cmp(&g.eval(b)))
        .cloned()
        .unwrap_or_default();
    let g_a = g.eval(&a_bar);
    if !(g_a > INTERIOR_TOL) {
        return Err(Error::NoFeasibleSample("g is not positive at any sphere sample".into()));
    }
    let big_m = compute_m(f, g, eps, params.grid_res)?;

    let chain = constant_chain(&ChainInputs {
        eps,
        c_f: sup_f,
        l_f: lipschitz_f,
        c_g: sup_g,
        l_g: lipschitz_g,
        f_a: f.eval(&a_bar),
        g_a,
        alpha: loja.alpha,
        loja_c: loja.c,
        n,
        d_f,
        d_g,
    });
    let u_formula = chain.u;
    let (u, demonstration) = match params.u_cap {
        Some(cap) if (cap as f64) < u_formula => (cap, true),
        _ if u_formula >= u32::MAX as f64 => {
            return Err(Error::BudgetExceeded {
                count: u_formula.min(u128::MAX as f64) as u128,
                limit: u32::MAX as u128,
            })
        }
        _ => (u_formula as u64, false),
    };
    if u == 0 || u > u32::MAX as u64 / (2 * n as u64) {
        return Err(Error::InvalidInput(format!(
            "Bernstein parameter u = {u} is out of range"
        )));
    }

    let (anchors, spacing) = anchor_grid(n, params.anchor_res.unwrap_or_else(|| default_anchor_res(n)))?;
    let values: Vec<f64> = anchors.iter().map(|y| psi_value(y, f, g, eps, big_m).sqrt()).collect();
    let lipschitz_empirical = discrete_lipschitz(&anchors, &values);
    let lipschitz_used = if demonstration {
        lipschitz_empirical
    } else {
        chain.l_phi_bar.max(lipschitz_empirical)
    };
    let psi_branch_min = anchors
        .iter()
        .map(|y| f.eval(y) + eps / 2.0 - psi_value(y, f, g, eps, big_m) * g.eval(y))
        .fold(f64::INFINITY, f64::min);
    let extension = Arc::new(KirszbraunExtension::new(anchors, values, lipschitz_used)?);

    let ext = Arc::clone(&extension);
    let sampled = SampledFunction::new(
        n,
        move |x: &[f64]| ext.eval(x),
        lipschitz_used.max(f64::MIN_POSITIVE),
        extension.values().iter().fold(0.0, |a: f64, &b| a.max(b)),
    )?;
    let degree = 2 * u as u32;
    let approx = BernsteinApprox::build(&sampled, &vec![degree; n], Domain::Symmetric)?;
    let c_phi_bar_used = approx.node_values().iter().fold(0.0, |a: f64, &b| a.max(b.abs()));
    let q = homogeneous_lift(&even_part(&approx.to_polynomial()), u as u32)?;

    let two_nu = 2 * n as u32 * u as u32;
    let big_d = (two_nu + d_g).max(d_f);
    let lhs = &norm_sq_pow(n, big_d - d_f) * &(f + &norm_sq_pow(n, d_f).scale(eps));
    let big_f = &lhs - &(&(g * &q.pow(2)) * &norm_sq_pow(n, big_d - two_nu - d_g));

    let eps_bound = sup_g * c_phi_bar_used * lipschitz_used * m_weight * (2.0 * n as f64 / u as f64).sqrt();
    let eps_achieved = if demonstration { eps.max(eps_bound) } else { eps };
    let q_error = grid
        .points
        .iter()
        .step_by((grid.points.len() / 2000).max(1))
        .map(|x| (q.eval(x) - extension.eval(x)).abs())
        .fold(0.0, f64::max);

    let (min, argmin, max, lip_f) = sphere_extremes(&big_f, &grid);
    let slack = lip_f * grid.spacing;
    let lower_target = eps / m_weight;
    let upper_target = sup_f + eps + c_phi_bar_used.powi(2) * sup_g;
    let sphere = SphereCheck {
        points: grid.points.len(),
        spacing: grid.spacing,
        lipschitz_estimate: lip_f,
        slack,
        min,
        argmin: argmin.clone(),
        max,
        lower_target,
        upper_target,
        lower_met: min >= lower_target - slack,
        upper_met: max <= upper_target + slack,
    };
    if !(min > 0.0) || (!demonstration && !sphere.lower_met) {
        return Err(Error::PositivityViolation {
            point: argmin,
            value: min,
            threshold: if demonstration { 0.0 } else { lower_target - slack },
        });
    }
    let theta = max / min;
    let k_bar = reznick_bound(n, big_d, theta)?;

    let mut diagnostics = BTreeMap::new();
    for (k, v) in [
        ("M_lower_bracket", eps / (2.0 * sup_g)),
        ("M_upper_bracket", (f.eval(&a_bar) + eps / 2.0) / g_a),
        ("W_inflation_radius", chain.w),
        ("kirszbraun_lipschitz_formula", chain.l_phi_bar),
        ("kirszbraun_lipschitz_empirical", lipschitz_empirical),
        ("kirszbraun_lipschitz_used", lipschitz_used),
        ("anchor_count", extension.anchors().len() as f64),
        ("anchor_spacing", spacing),
        ("anchor_discretization_error", spacing * lipschitz_used),
        (
            "eps_achieved_formula",
            chain.c_phi_bar * chain.l_phi_bar * sup_g * m_weight * (2.0 * n as f64 / u as f64).sqrt(),
        ),
        ("q_error", q_error),
        (
            "q_error_target",
            eps_achieved / (2.0 * sup_g * c_phi_bar_used.max(f64::MIN_POSITIVE) * m_weight),
        ),
        ("psi_branch_min", psi_branch_min),
        ("K_bar_formula", chain.k_bar),
        ("C_F_formula", chain.c_big_f),
    ] {
        diagnostics.insert(k.to_string(), v);
    }
    let chain_map = chain.named().into_iter().map(|(k, v)| (k.to_string(), v)).collect();

    Ok(ConstructState {
        n,
        eps,
        f: f.clone(),
        g: g.clone(),
        lojasiewicz: loja,
        big_m,
        a_bar,
        delta: chain.delta,
        lipschitz_f,
        sup_f,
        lipschitz_g,
        sup_g,
        c_phi: chain.c_phi,
        l_phi: chain.l_phi_bar,
        w: chain.w,
        chain: chain_map,
        u_formula,
        u,
        demonstration,
        eps_achieved,
        lipschitz_used,
        c_phi_bar_used,
        extension,
        q,
        big_f,
        d_f,
        d_g,
        big_d,
        sphere,
        theta,
        k_bar,
        diagnostics,
    })
}

/// `K̄ = reznick_bound(n, D, Θ(F))` with the measured sphere ratio.
pub fn reznick_order(st: &ConstructState) -> Result<u64> {
    if !(st.sphere.min > 0.0) {
        return Err(Error::PositivityViolation {
            point: st.sphere.argmin.clone(),
            value: st.sphere.min,
            threshold: 0.0,
        });
    }
    reznick_bound(st.n, st.big_d, st.theta)
}

/// One SOS-feasibility solve for `‖x‖^{2K} F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReznickAttempt {
    pub k: u32,
    /// Largest `λ` with `‖x‖^{2K}F − λ‖x‖^{2(D+K)}` SOS.
    pub lambda: f64,
    pub residual: f64,
    pub min_eigenvalue: f64,
    pub status: SolveStatus,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReznickSearch {
    /// Smallest `K` certified, if any.
    pub k_found: Option<u32>,
    pub attempts: Vec<ReznickAttempt>,
    /// True when the search stopped because the Gram basis outgrew `max_dim`.
    pub size_limited: bool,
}

/// Residual bound accepted for a Reznick certificate.
pub const REZNICK_RESIDUAL_TOL: f64 = 1e-6;

/// Tries `K = 0, 1, …, k_cap` in turn and stops at the first `K` for which
/// `‖x‖^{2K} h` is certified SOS with a positive margin.
pub fn reznick_search(h: &Polynomial, k_cap: u32, max_dim: usize, opts: &SolverOptions) -> Result<ReznickSearch> {
    if !h.is_homogeneous() || h.degree() <= 0 || h.degree() % 2 != 0 {
        return Err(Error::NotHomogeneous);
    }
    let n = h.nvars();
    let d = h.degree() as u32 / 2;
    let mut out = ReznickSearch {
        k_found: None,
        attempts: Vec::new(),
        size_limited: false,
    };
    for k in 0..=k_cap {
        let basis = monomials_of_degree(n, d + k);
        if basis.len() > max_dim {
            out.size_limited = true;
            break;
        }
        let sdp = assemble_reznick_gap(h, k)?;
        let sol = ipm::solve(&sdp, opts)?;
        let lambda = sol.free[0];
        let gram = &sol.blocks[0];
        let target = &norm_sq_pow(n, k) * h;
        let recon = &gram_polynomial(gram, &basis) + &norm_sq_pow(n, d + k).scale(lambda);
        let residual = (&target - &recon).max_abs_coeff() / (1.0 + target.max_abs_coeff());
        let min_eigenvalue = gram.min_eigenvalue();
        let certified =
            lambda > 0.0 && residual <= REZNICK_RESIDUAL_TOL && min_eigenvalue >= -1e-9 * gram.max_abs().max(1.0);
        out.attempts.push(ReznickAttempt {
            k,
            lambda,
            residual,
            min_eigenvalue,
            status: sol.status,
            certified,
        });
        if certified {
            out.k_found = Some(k);
            break;
        }
    }
    Ok(out)
}
