//! Tensor-product Bernstein approximation on `[0,1]ⁿ` and `[−1,1]ⁿ`,
//! even symmetrization and homogeneous lifting to the unit sphere.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::polyalg::{norm_sq_pow, Monomial, Polynomial};

/// Largest number of function evaluations a single approximation may use.
pub const MAX_EVALUATIONS: u128 = 10_000_000;

pub type BlackBox = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Black-box function with caller-estimated Lipschitz constant and sup bound.
/// The closure may be called concurrently.
#[derive(Clone)]
pub struct SampledFunction {
    pub n: usize,
    eval: BlackBox,
    pub lipschitz: f64,
    pub sup_bound: f64,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("n", &self.n)
            .field("lipschitz", &self.lipschitz)
            .field("sup_bound", &self.sup_bound)
            .finish_non_exhaustive()
    }
}

impl SampledFunction {
    pub fn new<F>(n: usize, f: F, lipschitz: f64, sup_bound: f64) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if n == 0 {
            return Err(Error::InvalidInput(
                "a sampled function needs at least one variable".into(),
            ));
        }
        if !(lipschitz > 0.0) || !(sup_bound >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "need lipschitz > 0 and sup_bound >= 0, got {lipschitz} and {sup_bound}"
            )));
        }
        Ok(SampledFunction {
            n,
            eval: Arc::new(f),
            lipschitz,
            sup_bound,
        })
    }

    /// Builds the function with Lipschitz constant and sup bound estimated by
    /// [`estimate_lipschitz`] on a grid over `[−1,1]ⁿ`.
    pub fn with_estimates<F>(n: usize, f: F, resolution: usize) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let (l, sup) = estimate_lipschitz(&f, n, resolution)?;
        SampledFunction::new(n, f, l.max(f64::MIN_POSITIVE), sup)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }
}

/// Default grid resolution per axis for Lipschitz estimation.
pub fn default_resolution(n: usize) -> usize {
    if n == 1 {
        401
    } else {
        101
    }
}

/// Largest axis-neighbour finite-difference slope and largest `|f|` over a
/// uniform grid on `[−1,1]ⁿ`. Both are estimates from below.
pub fn estimate_lipschitz(f: &dyn Fn(&[f64]) -> f64, n: usize, resolution: usize) -> Result<(f64, f64)> {
    if n == 0 || resolution < 2 {
        return Err(Error::InvalidInput("need n >= 1 and resolution >= 2".into()));
    }
    let count = (resolution as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > MAX_EVALUATIONS {
        return Err(Error::BudgetExceeded {
            count,
            limit: MAX_EVALUATIONS,
        });
    }
    let h = 2.0 / (resolution - 1) as f64;
    let total = count as usize;
    let mut point = vec![0.0; n];
    let values: Vec<f64> = (0..total)
        .map(|idx| {
            let mut r = idx;
            for a in (0..n).rev() {
                point[a] = -1.0 + h * (r % resolution) as f64;
                r /= resolution;
            }
            f(&point)
        })
        .collect();
    let mut lip = 0.0f64;
    let mut sup = 0.0f64;
    let mut stride = 1;
    for a in (0..n).rev() {
        for (idx, &v) in values.iter().enumerate() {
            if a == n - 1 {
                sup = sup.max(v.abs());
            }
            if (idx / stride) % resolution + 1 < resolution {
                lip = lip.max((values[idx + stride] - v).abs() / h);
            }
        }
        stride *= resolution;
    }
    Ok((lip, sup))
}

/// Which cube the approximation lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `[0,1]ⁿ` with nodes `k/d`.
    Unit,
    /// `[−1,1]ⁿ` through `y = (x + e)/2`, nodes `2k/d − 1`.
    Symmetric,
}

/// Bernstein approximation stored by its node values, so it can be
/// evaluated stably in the Bernstein basis as well as expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinApprox {
    n: usize,
    degrees: Vec<u32>,
    domain: Domain,
    /// Node values in row-major order, last axis fastest.
    values: Vec<f64>,
}

impl BernsteinApprox {
    pub fn build(f: &SampledFunction, degrees: &[u32], domain: Domain) -> Result<Self> {
        let n = f.n;
        if degrees.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: degrees.len(),
            });
        }
        if degrees.contains(&0) {
            return Err(Error::InvalidInput("all Bernstein degrees must be at least 1".into()));
        }
        let count = degrees
            .iter()
            .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128 + 1))
            .unwrap_or(u128::MAX);
        if count > MAX_EVALUATIONS {
            return Err(Error::BudgetExceeded {
                count,
                limit: MAX_EVALUATIONS,
            });
        }
        let node = |idx: usize| -> Vec<f64> {
            let mut r = idx;
            let mut x = vec![0.0; n];
            for a in (0..n).rev() {
                let len = degrees[a] as usize + 1;
                let y = (r % len) as f64 / degrees[a] as f64;
                x[a] = match domain {
                    Domain::Unit => y,
                    Domain::Symmetric => 2.0 * y - 1.0,
                };
                r /= len;
            }
            x
        };
        let total = count as usize;
        #[cfg(feature = "parallel")]
        let values: Vec<f64> = {
            use rayon::prelude::*;
            (0..total).into_par_iter().map(|i| f.eval(&node(i))).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let values: Vec<f64> = (0..total).map(|i| f.eval(&node(i))).collect();
        Ok(BernsteinApprox {
            n,
            degrees: degrees.to_vec(),
            domain,
            values,
        })
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Node values in row-major order, last axis fastest.
    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// Evaluates in the Bernstein basis; no cancellation at high degree.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut cur = self.values.clone();
        for a in (0..self.n).rev() {
            let y = match self.domain {
                Domain::Unit => x[a],
                Domain::Symmetric => (x[a] + 1.0) / 2.0,
            };
            let basis = basis_values(self.degrees[a], y);
            let len = basis.len();
            cur = cur
                .chunks(len)
                .map(|c| c.iter().zip(&basis).map(|(v, b)| v * b).sum())
                .collect();
        }
        cur[0]
    }

    /// Expansion in the monomial basis by running the de Casteljau recurrence
    /// on coefficient vectors, one axis at a time. Constants and affine
    /// functions are reproduced exactly; in general the rounding error is
    /// relative to the intermediate coefficients rather than to `2^d`.
    pub fn to_polynomial(&self) -> Polynomial {
        let (a, b) = match self.domain {
            Domain::Unit => ([0.0, 1.0], [1.0, -1.0]),
            Domain::Symmetric => ([0.5, 0.5], [0.5, -0.5]),
        };
        let mut cur = self.values.clone();
        let mut stride = 1;
        for ax in (0..self.n).rev() {
            let len = self.degrees[ax] as usize + 1;
            let block = stride * len;
            let mut next = vec![0.0; cur.len()];
            let mut line = vec![0.0; len];
            for base in (0..cur.len()).step_by(block) {
                for off in 0..stride {
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = cur[base + k * stride + off];
                    }
                    for (j, c) in de_casteljau_coefficients(&line, a, b).into_iter().enumerate() {
                        next[base + j * stride + off] = c;
                    }
                }
            }
            cur = next;
            stride *= len;
        }
        let mut p = Polynomial::zero(self.n);
        for (idx, &c) in cur.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut r = idx;
            let mut e = vec![0u32; self.n];
            for ax in (0..self.n).rev() {
                let len = self.degrees[ax] as usize + 1;
                e[ax] = (r % len) as u32;
                r /= len;
            }
            p.add_term(Monomial::new(e), c);
        }
        p
    }
}

/// `C(d,k) y^k (1−y)^{d−k}` for `k = 0..=d` by the de Casteljau recurrence.
fn basis_values(d: u32, y: f64) -> Vec<f64> {
    let mut b = vec![0.0; d as usize + 1];
    b[0] = 1.0;
    for r in 1..=d as usize {
        for k in (0..=r).rev() {
            let left = if k > 0 { b[k - 1] } else { 0.0 };
            b[k] = (1.0 - y) * b[k] + y * left;
        }
    }
    b
}

/// Monomial coefficients of `Σₖ vₖ C(d,k) a^k b^{d−k}` for affine `a`, `b`
/// given as `[constant, slope]`.
fn de_casteljau_coefficients(values: &[f64], a: [f64; 2], b: [f64; 2]) -> Vec<f64> {
    let d = values.len() - 1;
    let mut polys: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    for r in 0..d {
        for k in 0..d - r {
            let deg = r + 1;
            let mut out = vec![0.0; deg + 1];
            for (j, (&lo, &hi)) in polys[k].iter().zip(&polys[k + 1]).enumerate() {
                out[j] += b[0] * lo + a[0] * hi;
                out[j + 1] += b[1] * lo + a[1] * hi;
            }
            polys[k] = out;
        }
    }
    polys.swap_remove(0)
}

/// `B_{f,d}` on `[0,1]ⁿ` in the monomial basis.
pub fn bernstein_poly(f: &SampledFunction, degrees: &[u32]) -> Result<Polynomial> {
    Ok(BernsteinApprox::build(f, degrees, Domain::Unit)?.to_polynomial())
}

/// Degree-`k`-per-axis approximation of `f` on `[−1,1]ⁿ` in the monomial basis.
pub fn bernstein_shifted(f: &SampledFunction, k: u32) -> Result<Polynomial> {
    Ok(BernsteinApprox::build(f, &vec![k; f.n], Domain::Symmetric)?.to_polynomial())
}

/// `L √(n/k)`: sup-error guarantee for an `L`-Lipschitz function at degree `k` per axis.
pub fn bernstein_error_bound(lipschitz: f64, n: usize, k: u32) -> f64 {
    lipschitz * (n as f64 / k as f64).sqrt()
}

/// `½(p(x) + p(−x))`: drops every odd-degree term.
pub fn even_part(p: &Polynomial) -> Polynomial {
    let mut out = Polynomial::zero(p.nvars());
    for (m, c) in p.terms() {
        if m.degree() % 2 == 0 {
            out.add_term(m.clone(), c);
        }
    }
    out
}

/// Multiplies each component of degree `2t` by `‖x‖^{2(nu − t)}`, giving a form
/// of degree `2nu` equal to `p` on the unit sphere.
pub fn homogeneous_lift(p: &Polynomial, u: u32) -> Result<Polynomial> {
    let n = p.nvars();
    let target = n as u32 * u;
    let mut out = Polynomial::zero(n);
    let deg = p.degree();
    if deg > 2 * target as i64 {
        return Err(Error::Degree(format!(
            "cannot lift degree {deg} to homogeneous degree {}",
            2 * target
        )));
    }
    if p.terms().any(|(m, _)| m.degree() % 2 == 1) {
        return Err(Error::Degree("homogeneous lift needs even-degree terms only".into()));
    }
    for t in 0..=target {
        let h = p.homogeneous_component(2 * t);
        if !h.is_zero() {
            out = &out + &(&h * &norm_sq_pow(n, target - t));
        }
    }
    Ok(out)
}

/// `⌈2 C_g² C_φ² n L_φ² (m+1)² 2^{2m} / ε²⌉`.
pub fn bernstein_degree_for(eps: f64, c_g: f64, c_phi: f64, l_phi: f64, n: usize, m: u32) -> Result<u64> {
    if !(eps > 0.0 && c_g > 0.0 && c_phi > 0.0 && l_phi > 0.0) || n == 0 {
        return Err(Error::InvalidInput("bernstein_degree_for needs positive inputs".into()));
    }
    let v = bernstein_degree_value(eps, c_g, c_phi, l_phi, n, m);
    Ok(if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v.ceil() as u64
    })
}

/// Unrounded value behind [`bernstein_degree_for`].
pub fn bernstein_degree_value(eps: f64, c_g: f64, c_phi: f64, l_phi: f64, n: usize, m: u32) -> f64 {
    let mf = m as f64;
    2.0 * c_g * c_g * c_phi * c_phi * n as f64 * l_phi * l_phi * (mf + 1.0).powi(2) * 4f64.powi(m as i32) / (eps * eps)
}
