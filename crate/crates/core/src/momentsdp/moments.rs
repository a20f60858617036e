use std::collections::BTreeMap;

use super::SymMatrix;
use crate::error::{Error, Result};
use crate::polyalg::{monomials_up_to, Monomial, Polynomial};

/// Truncated pseudo-moment sequence `y = (y_α)` for `|α| ≤ order`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    n: usize,
    order: u32,
    values: BTreeMap<Monomial, f64>,
}

impl MomentVector {
    /// `values` lists `y_α` in graded-lex order over `|α| ≤ order`.
    pub fn from_values(n: usize, order: u32, values: &[f64]) -> Result<Self> {
        let basis = monomials_up_to(n, order);
        if basis.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "moment vector of order {order} in {n} variables needs {} entries, got {}",
                basis.len(),
                values.len()
            )));
        }
        Ok(MomentVector {
            n,
            order,
            values: basis.into_iter().zip(values.iter().copied()).collect(),
        })
    }

    /// Moments of the atomic measure `Σ wᵢ δ_{xᵢ}`.
    pub fn from_atoms(n: usize, order: u32, atoms: &[Vec<f64>], weights: &[f64]) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidInput("one weight per atom required".into()));
        }
        if let Some(a) = atoms.iter().find(|a| a.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.len(),
            });
        }
        let values = monomials_up_to(n, order)
            .into_iter()
            .map(|m| {
                let v = atoms.iter().zip(weights).map(|(a, w)| w * m.eval(a)).sum();
                (m, v)
            })
            .collect();
        Ok(MomentVector { n, order, values })
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn get(&self, alpha: &Monomial) -> Option<f64> {
        self.values.get(alpha).copied()
    }

    pub fn values(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.values.iter().map(|(m, v)| (m, *v))
    }

    /// Riesz functional `L_y(p) = Σ p_α y_α`.
    pub fn riesz(&self, p: &Polynomial) -> Result<f64> {
        if p.nvars() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.nvars(),
            });
        }
        if p.degree() > self.order as i64 {
            return Err(Error::Degree(format!(
                "polynomial degree {} exceeds moment order {}",
                p.degree(),
                self.order
            )));
        }
        Ok(p.terms().map(|(m, c)| c * self.values[m]).sum())
    }

    /// `M_d(y)` with entries `y_{α+β}` over `|α|, |β| ≤ d`.
    pub fn moment_matrix(&self, d: u32) -> Result<SymMatrix> {
        self.localizing_matrix(&Polynomial::constant(self.n, 1.0), d)
    }

    /// `M_d(g y)` with entries `Σ_γ g_γ y_{γ+α+β}`.
    pub fn localizing_matrix(&self, g: &Polynomial, d: u32) -> Result<SymMatrix> {
        if g.nvars() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: g.nvars(),
            });
        }
        let need = 2 * d as i64 + g.degree().max(0);
        if need > self.order as i64 {
            return Err(Error::Degree(format!(
                "localizing matrix of degree {d} needs moments up to {need}, have {}",
                self.order
            )));
        }
        let basis = monomials_up_to(self.n, d);
        let mut m = SymMatrix::zeros(basis.len());
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate().take(i + 1) {
                let ab = a.mul(b);
                let v: f64 = g.terms().map(|(gm, c)| c * self.values[&ab.mul(gm)]).sum();
                m.set(i, j, v);
            }
        }
        Ok(m)
    }
}
