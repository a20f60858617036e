use super::{Monomial, Polynomial};
use crate::error::{Error, Result};

/// Polynomial optimization problem `min f(x)` subject to `gⱼ(x) ≥ 0`.
///
/// When a constraint equals `L − ‖x‖₂²` coefficient-wise it is moved to the
/// front and `ball_radius` records `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopProblem {
    n: usize,
    objective: Polynomial,
    constraints: Vec<Polynomial>,
    ball_radius: Option<f64>,
    homogeneous: bool,
}

impl PopProblem {
    pub fn new(objective: Polynomial, constraints: Vec<Polynomial>) -> Result<Self> {
        let n = objective.nvars();
        for g in &constraints {
            if g.nvars() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.nvars(),
                });
            }
        }
        let mut constraints = constraints;
        let mut ball_radius = None;
        if let Some(pos) = constraints.iter().position(|g| ball_value(g).is_some()) {
            ball_radius = ball_value(&constraints[pos]);
            let g = constraints.remove(pos);
            constraints.insert(0, g);
        }
        let homogeneous = objective.is_homogeneous() && constraints.iter().all(Polynomial::is_homogeneous);
        Ok(PopProblem {
            n,
            objective,
            constraints,
            ball_radius,
            homogeneous,
        })
    }

    /// Like [`PopProblem::new`] but guarantees the ball constraint `L − ‖x‖₂²`.
    ///
    /// An existing ball constraint with a different radius is an error.
    pub fn with_ball(objective: Polynomial, constraints: Vec<Polynomial>, radius_sq: f64) -> Result<Self> {
        if !(radius_sq > 0.0 && radius_sq.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive and finite, got {radius_sq}"
            )));
        }
        let prob = PopProblem::new(objective, constraints)?;
        match prob.ball_radius {
            Some(l) if l == radius_sq => Ok(prob),
            Some(l) => Err(Error::InvalidInput(format!(
                "ball_radius {radius_sq} conflicts with constraint {l} - |x|^2"
            ))),
            None => {
                let mut cons = vec![Polynomial::ball(prob.n, radius_sq)];
                cons.extend(prob.constraints);
                PopProblem::new(prob.objective, cons)
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn objective(&self) -> &Polynomial {
        &self.objective
    }

    pub fn constraints(&self) -> &[Polynomial] {
        &self.constraints
    }

    pub fn ball_radius(&self) -> Option<f64> {
        self.ball_radius
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// `⌊deg f / 2⌋ + 1`, and `1` for the zero objective.
    pub fn d_f(&self) -> u32 {
        let d = self.objective.degree();
        if d < 0 {
            1
        } else {
            d as u32 / 2 + 1
        }
    }

    /// `⌈deg gⱼ / 2⌉`, and `0` for constant or zero constraints.
    pub fn d_g(&self, j: usize) -> u32 {
        let d = self.constraints[j].degree().max(0) as u32;
        d.div_ceil(2)
    }

    /// `x` satisfies every constraint up to `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|g| g.eval(x) >= -tol)
    }
}

/// Returns `L` when `g` is exactly `L − ‖x‖₂²` with `L > 0`.
pub fn ball_value(g: &Polynomial) -> Option<f64> {
    let n = g.nvars();
    if n == 0 || g.num_terms() != n + 1 {
        return None;
    }
    let l = g.coeff(&Monomial::one(n));
    if !(l > 0.0) {
        return None;
    }
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 2;
        if g.coeff(&Monomial::new(e)) != -1.0 {
            return None;
        }
    }
    Some(l)
}
