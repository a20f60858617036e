use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::monomial::{binomial_f64, Monomial};
use crate::error::{Error, Result};

/// Coefficients below this magnitude are treated as exact zeros.
pub const ZERO_THRESHOLD: f64 = 1e-300;

/// Sparse multivariate polynomial over `f64` in `n` variables.
///
/// Terms are kept in graded-lex order and never store a zero coefficient.
#[derive(Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(n);
        p.add_term(Monomial::one(n), c);
        p
    }

    /// The variable `x_{i+1}`.
    pub fn var(n: usize, i: usize) -> Self {
        Polynomial::term(Monomial::var(n, i), 1.0)
    }

    pub fn term(m: Monomial, c: f64) -> Self {
        let mut p = Polynomial::zero(m.nvars());
        p.add_term(m, c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing repeats.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Polynomial::zero(n);
        for (exps, c) in terms {
            if exps.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: exps.len(),
                });
            }
            p.add_term(Monomial::new(exps), c);
        }
        Ok(p)
    }

    /// `‖x‖₂² = Σ xᵢ²`.
    pub fn norm_sq(n: usize) -> Self {
        let mut p = Polynomial::zero(n);
        for i in 0..n {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(Monomial::new(e), 1.0);
        }
        p
    }

    /// `θ = 1 + ‖x‖₂²`.
    pub fn theta(n: usize) -> Self {
        let mut p = Polynomial::norm_sq(n);
        p.add_term(Monomial::one(n), 1.0);
        p
    }

    /// `L − ‖x‖₂²`.
    pub fn ball(n: usize, radius_sq: f64) -> Self {
        let mut p = Polynomial::norm_sq(n).scale(-1.0);
        p.add_term(Monomial::one(n), radius_sq);
        p
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, c)| (m, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, with `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms.keys().next_back().map(|m| m.degree() as i64).unwrap_or(-1)
    }

    /// Lowest total degree among stored terms, `-1` for zero.
    pub fn min_degree(&self) -> i64 {
        self.terms.keys().next().map(|m| m.degree() as i64).unwrap_or(-1)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.min_degree() == self.degree()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    /// Adds `c·m` in place, keeping the normal form.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        debug_assert_eq!(m.nvars(), self.n);
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                if c.abs() >= ZERO_THRESHOLD {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.abs() < ZERO_THRESHOLD {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_dims(&self, other: &Polynomial) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -*c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dims(other)?;
        let mut out = Polynomial::zero(self.n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// `p^k` by repeated squaring.
    pub fn pow(&self, k: u32) -> Polynomial {
        let mut result = Polynomial::constant(self.n, 1.0);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// `Σ f_α x^α` at `point`.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: point.len(),
            });
        }
        Ok(self.eval(point))
    }

    /// Unchecked evaluation; `point` must have length `n`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval(point)).sum()
    }

    /// `∂p/∂x_{i+1}`.
    pub fn derivative(&self, i: usize) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, c) in &self.terms {
            let e = m.exponents()[i];
            if e == 0 {
                continue;
            }
            let mut exps = m.exponents().to_vec();
            exps[i] -= 1;
            out.add_term(Monomial::new(exps), c * e as f64);
        }
        out
    }

    /// Gradient at `point`, evaluated term by term.
    pub fn gradient(&self, point: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for (m, c) in &self.terms {
            let exps = m.exponents();
            for i in 0..self.n {
                if exps[i] == 0 {
                    continue;
                }
                let mut v = c * exps[i] as f64;
                for (j, (&e, &x)) in exps.iter().zip(point).enumerate() {
                    let e = if i == j { e - 1 } else { e };
                    if e > 0 {
                        v *= x.powi(e as i32);
                    }
                }
                g[i] += v;
            }
        }
        g
    }

    /// Degree-`t` homogenization in `n + 1` variables: `x_{n+1}^t p(x / x_{n+1})`.
    pub fn homogenize(&self, t: u32) -> Result<Polynomial> {
        if self.degree() > t as i64 {
            return Err(Error::Degree(format!(
                "homogenization degree {t} is below deg(p) = {}",
                self.degree()
            )));
        }
        let mut out = Polynomial::zero(self.n + 1);
        for (m, c) in &self.terms {
            out.add_term(m.extended(t - m.degree()), *c);
        }
        Ok(out)
    }

    /// Sets the last variable to 1 and drops it.
    pub fn dehomogenize(&self) -> Result<Polynomial> {
        if self.n == 0 {
            return Err(Error::InvalidInput(
                "cannot dehomogenize a polynomial in zero variables".into(),
            ));
        }
        let mut out = Polynomial::zero(self.n - 1);
        for (m, c) in &self.terms {
            let (rest, _) = m.split_last();
            out.add_term(rest, *c);
        }
        Ok(out)
    }

    /// `θ^k · p` with `θ = 1 + ‖x‖₂²`.
    pub fn theta_pow_mul(&self, k: u32) -> Polynomial {
        if k == 0 {
            return self.clone();
        }
        &Polynomial::theta(self.n).pow(k) * self
    }

    /// `max_α |f_α| / c_α` where `c_α` is the multinomial coefficient of `α`.
    pub fn weighted_norm(&self) -> Result<f64> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| c.abs() / m.multinomial())
            .fold(0.0, f64::max))
    }

    /// The degree-`d` homogeneous component.
    pub fn homogeneous_component(&self, d: u32) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, c) in &self.terms {
            if m.degree() == d {
                out.add_term(m.clone(), *c);
            }
        }
        out
    }

    /// `p(−x)`.
    pub fn reflect(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (m, c) in &self.terms {
            let s = if m.degree() % 2 == 1 { -1.0 } else { 1.0 };
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// `max_α |p_α − q_α|`.
    pub fn max_coeff_diff(&self, other: &Polynomial) -> Result<f64> {
        Ok(self.checked_sub(other)?.max_abs_coeff())
    }
}

/// `(x₁² + ⋯ + xₙ²)^k` expanded directly through multinomials.
pub fn norm_sq_pow(n: usize, k: u32) -> Polynomial {
    let mut out = Polynomial::zero(n);
    for m in super::monomial::monomials_of_degree(n, k) {
        let exps: Vec<u32> = m.exponents().iter().map(|e| 2 * e).collect();
        out.add_term(Monomial::new(exps), m.multinomial());
    }
    out
}

/// `C(n, k)` as `f64`.
pub fn binomial(n: u32, k: u32) -> f64 {
    binomial_f64(n, k)
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial(n={}, {})", self.n, self)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

macro_rules! forward_op {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&Polynomial> for &Polynomial {
            type Output = Polynomial;
            /// Panics when the variable counts differ; see the `checked_*` methods.
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                self.$checked(rhs).expect("polynomial variable counts differ")
            }
        }
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_op!(Add, add, checked_add);
forward_op!(Sub, sub, checked_sub);
forward_op!(Mul, mul, checked_mul);

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, terms: &[(&[u32], f64)]) -> Polynomial {
        Polynomial::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let a = p(1, &[(&[1], 1.0), (&[0], 1.0)]);
        let b = p(1, &[(&[1], 1.0), (&[0], -1.0)]);
        assert_eq!(&a * &b, p(1, &[(&[2], 1.0), (&[0], -1.0)]));
    }

    #[test]
    fn additive_identity_and_zero_normal_form() {
        let a = p(2, &[(&[1, 0], 3.0)]);
        assert_eq!(&a + &Polynomial::zero(2), a);
        let z = &a - &a;
        assert!(z.is_zero());
        assert_eq!(z.degree(), -1);
    }

    #[test]
    fn square_of_theta() {
        let t = Polynomial::theta(1);
        assert_eq!(&t * &t, p(1, &[(&[0], 1.0), (&[2], 2.0), (&[4], 1.0)]));
    }

    #[test]
    fn mismatched_dimensions_error() {
        let a = Polynomial::var(1, 0);
        let b = Polynomial::var(2, 0);
        assert!(matches!(a.checked_add(&b), Err(Error::DimensionMismatch { .. })));
        assert!(a.evaluate(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(Polynomial::norm_sq(2).evaluate(&[3.0, 4.0]).unwrap(), 25.0);
        assert_eq!(Polynomial::constant(3, 7.0).eval(&[1.0, -2.0, 9.0]), 7.0);
        let q = p(1, &[(&[0], 1.0), (&[2], 2.0), (&[4], 1.0)]);
        assert_eq!(q.eval(&[2.0]), 25.0);
    }

    #[test]
    fn homogenize_ball_gives_icecream() {
        let ball = Polynomial::ball(1, 1.0);
        let h = ball.homogenize(2).unwrap();
        assert_eq!(h, p(2, &[(&[0, 2], 1.0), (&[2, 0], -1.0)]));
        assert_eq!(h.dehomogenize().unwrap(), ball);
    }

    #[test]
    fn homogenize_linear() {
        let a = p(1, &[(&[1], 1.0), (&[0], 1.0)]);
        let h = a.homogenize(2).unwrap();
        assert_eq!(h, p(2, &[(&[1, 1], 1.0), (&[0, 2], 1.0)]));
        assert_eq!(h.dehomogenize().unwrap(), a);
        assert!(a.homogenize(0).is_err());
    }

    #[test]
    fn homogenize_homogeneous_keeps_terms() {
        let a = p(2, &[(&[2, 0], 1.0), (&[1, 1], -2.0)]);
        let h = a.homogenize(2).unwrap();
        assert_eq!(h, p(3, &[(&[2, 0, 0], 1.0), (&[1, 1, 0], -2.0)]));
    }

    #[test]
    fn theta_pow_examples() {
        let one = Polynomial::constant(1, 1.0);
        assert_eq!(one.theta_pow_mul(0), one);
        assert_eq!(one.theta_pow_mul(2), p(1, &[(&[0], 1.0), (&[2], 2.0), (&[4], 1.0)]));
        let x = Polynomial::var(1, 0);
        assert_eq!(x.theta_pow_mul(1), p(1, &[(&[1], 1.0), (&[3], 1.0)]));
    }

    #[test]
    fn weighted_norm_examples() {
        assert_eq!(p(2, &[(&[1, 1], 1.0)]).weighted_norm().unwrap(), 0.5);
        assert_eq!(Polynomial::constant(2, 5.0).weighted_norm().unwrap(), 5.0);
        assert_eq!(p(2, &[(&[2, 0], 1.0), (&[1, 1], 1.0)]).weighted_norm().unwrap(), 1.0);
        assert_eq!(Polynomial::zero(2).weighted_norm(), Err(Error::ZeroPolynomial));
    }

    #[test]
    fn derivative_and_gradient_agree() {
        let a = p(2, &[(&[3, 1], 2.0), (&[0, 2], -1.0), (&[1, 0], 4.0)]);
        let pt = [0.7, -1.3];
        let g = a.gradient(&pt);
        for i in 0..2 {
            assert!((a.derivative(i).eval(&pt) - g[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_sq_pow_matches_repeated_product() {
        for n in 1..4 {
            for k in 0..4 {
                let direct = norm_sq_pow(n, k);
                let slow = Polynomial::norm_sq(n).pow(k);
                assert!(direct.max_coeff_diff(&slow).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn display_is_readable() {
        let a = p(2, &[(&[0, 0], -1.0), (&[2, 0], 1.0), (&[1, 1], -2.5)]);
        assert_eq!(a.to_string(), "-1 + x1^2 - 2.5*x1*x2");
    }
}
