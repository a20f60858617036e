use std::cmp::Ordering;
use std::fmt;

/// Exponent vector `α ∈ ℕⁿ` of the monomial `x^α`.
///
/// Ordering is graded lexicographic: total degree first, then the exponent of
/// `x₁` descending, then `x₂`, and so on. For `n = 2` the basis up to degree
/// two therefore reads `1, x₁, x₂, x₁², x₁x₂, x₂²`. Every matrix row/column
/// and every SDP constraint row in this crate follows this order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    /// The single variable `x_i` (zero-based index).
    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `x^α · x^β = x^{α+β}`. Caller guarantees equal lengths.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `∏ xᵢ^{αᵢ}` at `point`.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(point)
            .filter(|(e, _)| **e > 0)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }

    /// Multinomial coefficient `|α|! / (α₁!⋯αₙ!)`.
    pub fn multinomial(&self) -> f64 {
        // product of binomials keeps intermediates small
        let mut acc = 1.0;
        let mut running = 0u32;
        for &e in &self.0 {
            running += e;
            acc *= binomial_f64(running, e);
        }
        acc
    }

    /// Appends a trailing exponent (used by homogenization).
    pub fn extended(&self, last: u32) -> Monomial {
        let mut e = self.0.clone();
        e.push(last);
        Monomial(e)
    }

    /// Drops the last exponent, returning it alongside the shortened monomial.
    pub fn split_last(&self) -> (Monomial, u32) {
        let (last, rest) = self.0.split_last().expect("monomial has at least one variable");
        (Monomial(rest.to_vec()), *last)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

/// All monomials of total degree exactly `d` in `n` variables, graded-lex order.
pub fn monomials_of_degree(n: usize, d: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(Monomial(Vec::new()));
        }
        return out;
    }
    let mut current = vec![0u32; n];
    fill_compositions(&mut current, 0, d, &mut out);
    out
}

fn fill_compositions(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Monomial>) {
    let n = current.len();
    if pos == n - 1 {
        current[pos] = remaining;
        out.push(Monomial(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_compositions(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}

/// The basis `v_t`: every monomial of degree `≤ t`, length `C(n+t, n)`.
pub fn monomials_up_to(n: usize, t: u32) -> Vec<Monomial> {
    (0..=t).flat_map(|d| monomials_of_degree(n, d)).collect()
}

/// `C(n+t, n)`, the length of `v_t`.
pub fn basis_len(n: usize, t: u32) -> usize {
    binomial_f64(n as u32 + t, n as u32).round() as usize
}

/// Binomial coefficient, exact while it fits in 128 bits.
pub(crate) fn binomial_f64(n: u32, k: u32) -> f64 {
    if let Some(v) = binomial_i128(n, k) {
        return v as f64;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact binomial in 128-bit integers; `None` on overflow.
pub(crate) fn binomial_i128(n: u32, k: u32) -> Option<i128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as i128)? / (i + 1) as i128;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order_two_vars() {
        let basis = monomials_up_to(2, 2);
        let exps: Vec<Vec<u32>> = basis.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(
            exps,
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        let mut sorted = basis.clone();
        sorted.sort();
        assert_eq!(sorted, basis);
    }

    #[test]
    fn basis_len_matches_enumeration() {
        for n in 1..4 {
            for t in 0..6 {
                assert_eq!(monomials_up_to(n, t).len(), basis_len(n, t));
            }
        }
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(Monomial::new(vec![1, 1]).multinomial(), 2.0);
        assert_eq!(Monomial::new(vec![2, 1, 1]).multinomial(), 12.0);
        assert_eq!(Monomial::new(vec![0, 0]).multinomial(), 1.0);
    }

    #[test]
    fn exact_binomials() {
        assert_eq!(binomial_i128(60, 30), Some(118264581564861424));
        assert_eq!(binomial_i128(5, 7), Some(0));
        assert_eq!(binomial_f64(10, 3), 120.0);
    }
}
