use std::collections::{BTreeMap, BTreeSet};

use super::sdp::{Constraint, LinearForm, SdpProblem, Sense};
use crate::error::{Error, Result};
use crate::polyalg::{monomials_up_to, norm_sq_pow, Monomial, Polynomial, PopProblem};

/// One weighted SOS term `w(x) · v(x)ᵀ G v(x)` of a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct GramTerm {
    pub weight: Polynomial,
    pub basis: Vec<Monomial>,
}

/// Block layout of a relaxation of order `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationLayout {
    pub k: u32,
    pub d_f: u32,
    /// `t = k + d_f`; certificates have degree at most `2t`.
    pub t: u32,
    /// Constraint index carried by each block, `None` for `σ₀`.
    pub block_weights: Vec<Option<usize>>,
    /// Monomial basis degree of each block.
    pub block_degrees: Vec<u32>,
}

impl RelaxationLayout {
    pub fn new(prob: &PopProblem, k: u32) -> Self {
        let d_f = prob.d_f();
        let t = k + d_f;
        let mut block_weights = vec![None];
        let mut block_degrees = vec![t];
        for j in 0..prob.constraints().len() {
            let dg = prob.d_g(j);
            if dg <= t && !prob.constraints()[j].is_zero() {
                block_weights.push(Some(j));
                block_degrees.push(t - dg);
            }
        }
        RelaxationLayout {
            k,
            d_f,
            t,
            block_weights,
            block_degrees,
        }
    }

    pub fn gram_terms(&self, prob: &PopProblem) -> Vec<GramTerm> {
        let n = prob.nvars();
        self.block_weights
            .iter()
            .zip(&self.block_degrees)
            .map(|(w, &d)| GramTerm {
                weight: match w {
                    None => Polynomial::constant(n, 1.0),
                    Some(j) => prob.constraints()[*j].clone(),
                },
                basis: monomials_up_to(n, d),
            })
            .collect()
    }
}

/// `θ^k (f + ε θ^{d_f})` and `θ^k`, the two sides of the hierarchy identity.
pub fn hierarchy_polynomials(prob: &PopProblem, k: u32, eps: f64) -> (Polynomial, Polynomial) {
    let n = prob.nvars();
    let mut target = prob.objective().theta_pow_mul(k);
    if eps != 0.0 {
        let pert = Polynomial::constant(n, eps).theta_pow_mul(k + prob.d_f());
        target = &target + &pert;
    }
    (target, Polynomial::constant(n, 1.0).theta_pow_mul(k))
}

fn check_order(prob: &PopProblem, eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "eps must be finite and nonnegative, got {eps}"
        )));
    }
    if eps == 0.0 && prob.ball_radius().is_none() {
        return Err(Error::InvalidInput(
            "eps = 0 requires a ball constraint L - |x|^2 among the constraints".into(),
        ));
    }
    Ok(())
}

/// SOS form: maximize `λ` subject to
/// `θ^k (f − λ + ε θ^{d_f}) = σ₀ + Σⱼ σⱼ gⱼ` with `deg ≤ 2(k + d_f)`.
///
/// Blocks follow [`RelaxationLayout`]; the free scalar `w₀` is `λ`. Row `β`
/// reads `Σ_b ⟨A^b_β, G_b⟩ + (θ^k)_β λ = (θ^k(f + εθ^{d_f}))_β`.
pub fn assemble_sos_form(prob: &PopProblem, k: u32, eps: f64) -> Result<SdpProblem> {
    check_order(prob, eps)?;
    let layout = RelaxationLayout::new(prob, k);
    let (target, theta_k) = hierarchy_polynomials(prob, k, eps);
    let rows = monomials_up_to(prob.nvars(), 2 * layout.t);
    Ok(assemble_sos_gap_on_rows(
        &target,
        &theta_k,
        &layout.gram_terms(prob),
        rows,
    ))
}

/// Moment form: minimize `L_y(θ^k(f + εθ^{d_f}))` subject to
/// `M_{t}(y) ⪰ 0`, `M_{t−d_gⱼ}(gⱼ y) ⪰ 0` and `L_y(θ^k) = 1`.
///
/// The free scalars are `y_α` for `|α| ≤ 2t` in graded-lex order; each
/// matrix inequality becomes a slack block tied to `y` entrywise.
pub fn assemble_moment_form(prob: &PopProblem, k: u32, eps: f64) -> Result<SdpProblem> {
    check_order(prob, eps)?;
    let layout = RelaxationLayout::new(prob, k);
    let (target, theta_k) = hierarchy_polynomials(prob, k, eps);
    let moments = monomials_up_to(prob.nvars(), 2 * layout.t);
    Ok(assemble_moment_dual_on(
        &target,
        &theta_k,
        &layout.gram_terms(prob),
        moments,
    ))
}

/// Generic SOS-gap program: maximize `λ` subject to
/// `target − λ·lambda_coeff = Σ_b weight_b · v_bᵀ G_b v_b`.
///
/// One equality row per monomial that appears anywhere in the identity.
pub fn assemble_sos_gap(target: &Polynomial, lambda_coeff: &Polynomial, terms: &[GramTerm]) -> SdpProblem {
    let rows = support(target, lambda_coeff, terms);
    assemble_sos_gap_on_rows(target, lambda_coeff, terms, rows)
}

/// Dual of [`assemble_sos_gap`]: minimize `L_y(target)` subject to
/// `L_y(lambda_coeff) = 1` and `L_y(weight_b · v_b v_bᵀ) ⪰ 0`.
pub fn assemble_moment_dual(target: &Polynomial, lambda_coeff: &Polynomial, terms: &[GramTerm]) -> SdpProblem {
    let moments = support(target, lambda_coeff, terms);
    assemble_moment_dual_on(target, lambda_coeff, terms, moments)
}

fn support(target: &Polynomial, lambda_coeff: &Polynomial, terms: &[GramTerm]) -> Vec<Monomial> {
    let mut set: BTreeSet<Monomial> = target.terms().map(|(m, _)| m.clone()).collect();
    set.extend(lambda_coeff.terms().map(|(m, _)| m.clone()));
    for term in terms {
        for (i, a) in term.basis.iter().enumerate() {
            for b in &term.basis[..=i] {
                let ab = a.mul(b);
                for (w, _) in term.weight.terms() {
                    set.insert(ab.mul(w));
                }
            }
        }
    }
    set.into_iter().collect()
}

fn assemble_sos_gap_on_rows(
    target: &Polynomial,
    lambda_coeff: &Polynomial,
    terms: &[GramTerm],
    rows: Vec<Monomial>,
) -> SdpProblem {
    let dims = terms.iter().map(|t| t.basis.len()).collect();
    let mut sdp = SdpProblem::new(Sense::Maximize, dims, 0, 1);
    sdp.objective.free.push((0, 1.0));
    let index: BTreeMap<Monomial, usize> = rows.iter().cloned().zip(0..).collect();
    let mut forms = vec![LinearForm::default(); rows.len()];
    for (b, term) in terms.iter().enumerate() {
        for (i, a) in term.basis.iter().enumerate() {
            for (j, c) in term.basis[..=i].iter().enumerate() {
                let ab = a.mul(c);
                for (w, coef) in term.weight.terms() {
                    if let Some(&r) = index.get(&ab.mul(w)) {
                        forms[r].push_block(b, i, j, coef);
                    }
                }
            }
        }
    }
    for (m, coef) in lambda_coeff.terms() {
        if let Some(&r) = index.get(m) {
            forms[r].free.push((0, coef));
        }
    }
    sdp.constraints = forms
        .into_iter()
        .zip(&rows)
        .map(|(lhs, m)| Constraint {
            lhs,
            rhs: target.coeff(m),
        })
        .collect();
    sdp.monomial_index = index;
    sdp.drop_empty_rows();
    sdp
}

fn assemble_moment_dual_on(
    target: &Polynomial,
    lambda_coeff: &Polynomial,
    terms: &[GramTerm],
    moments: Vec<Monomial>,
) -> SdpProblem {
    let dims: Vec<usize> = terms.iter().map(|t| t.basis.len()).collect();
    let mut sdp = SdpProblem::new(Sense::Minimize, dims, 0, moments.len());
    let index: BTreeMap<Monomial, usize> = moments.iter().cloned().zip(0..).collect();
    for (m, c) in target.terms() {
        if let Some(&a) = index.get(m) {
            sdp.objective.free.push((a, c));
        }
    }
    for (b, term) in terms.iter().enumerate() {
        for (i, a) in term.basis.iter().enumerate() {
            for (j, c) in term.basis[..=i].iter().enumerate() {
                let mut lhs = LinearForm::default();
                lhs.push_block(b, i, j, if i == j { 1.0 } else { 0.5 });
                let ab = a.mul(c);
                for (w, coef) in term.weight.terms() {
                    if let Some(&y) = index.get(&ab.mul(w)) {
                        lhs.free.push((y, -coef));
                    }
                }
                sdp.constraints.push(Constraint { lhs, rhs: 0.0 });
            }
        }
    }
    let mut norm = LinearForm::default();
    for (m, c) in lambda_coeff.terms() {
        if let Some(&a) = index.get(m) {
            norm.free.push((a, c));
        }
    }
    sdp.constraints.push(Constraint { lhs: norm, rhs: 1.0 });
    sdp
}

/// Homogeneous SOS-gap program used for Reznick-type checks: maximize `λ` with
/// `‖x‖^{2K} h − λ ‖x‖^{2(D+K)} = v_{D+K}ᵀ G v_{D+K}` for a form `h` of degree `2D`.
pub fn assemble_reznick_gap(h: &Polynomial, big_k: u32) -> Result<SdpProblem> {
    if !h.is_homogeneous() || h.degree() < 0 || h.degree() % 2 != 0 {
        return Err(Error::NotHomogeneous);
    }
    let n = h.nvars();
    let d = h.degree() as u32 / 2;
    let target = &norm_sq_pow(n, big_k) * h;
    let lambda = norm_sq_pow(n, d + big_k);
    let basis = crate::polyalg::monomials_of_degree(n, d + big_k);
    Ok(assemble_sos_gap(
        &target,
        &lambda,
        &[GramTerm {
            weight: Polynomial::constant(n, 1.0),
            basis,
        }],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::basis_len;

    fn min_x2_ball() -> PopProblem {
        PopProblem::with_ball(Polynomial::var(1, 0).pow(2), vec![], 1.0).unwrap()
    }

    #[test]
    fn sos_form_dimensions() {
        let sdp = assemble_sos_form(&min_x2_ball(), 0, 0.0).unwrap();
        // d_f = 2, t = 2: G₀ on {1,x,x²}, G₁ on {1,x}
        assert_eq!(sdp.block_dims, vec![3, 2]);
        assert_eq!(sdp.num_rows(), 5);
        assert_eq!(sdp.num_rows(), basis_len(1, 4));
    }

    #[test]
    fn sos_form_rows_are_exactly_the_monomials() {
        let prob = PopProblem::with_ball(&Polynomial::var(2, 0) * &Polynomial::var(2, 1), vec![], 2.0).unwrap();
        for k in 0..3 {
            let sdp = assemble_sos_form(&prob, k, 0.0).unwrap();
            let t = k + prob.d_f();
            let expect = monomials_up_to(2, 2 * t);
            assert_eq!(sdp.num_rows(), expect.len());
            let mut rows: Vec<usize> = expect.iter().map(|m| sdp.monomial_index[m]).collect();
            rows.sort();
            assert_eq!(rows, (0..expect.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn lambda_column_is_theta_power() {
        let prob = min_x2_ball();
        let sdp = assemble_sos_form(&prob, 2, 0.0).unwrap();
        let theta2 = Polynomial::constant(1, 1.0).theta_pow_mul(2);
        for (m, &r) in &sdp.monomial_index {
            let lam: f64 = sdp.constraints[r].lhs.free.iter().map(|(_, v)| v).sum();
            assert_eq!(-lam, -theta2.coeff(m));
        }
    }

    #[test]
    fn eps_zero_needs_ball() {
        let prob = PopProblem::new(Polynomial::var(1, 0).pow(2), vec![]).unwrap();
        assert!(assemble_sos_form(&prob, 0, 0.0).is_err());
        assert!(assemble_moment_form(&prob, 0, 0.0).is_err());
        assert!(assemble_sos_form(&prob, 0, 0.1).is_ok());
    }

    #[test]
    fn moment_form_normalization_row() {
        let prob = min_x2_ball();
        let sdp = assemble_moment_form(&prob, 1, 0.0).unwrap();
        let last = sdp.constraints.last().unwrap();
        assert_eq!(last.rhs, 1.0);
        // y₀ + y₂ = 1
        assert_eq!(last.lhs.free, vec![(0, 1.0), (2, 1.0)]);
    }

    #[test]
    fn moment_form_objective_entries() {
        let prob = min_x2_ball();
        let eps = 0.25;
        let sdp = assemble_moment_form(&prob, 1, eps).unwrap();
        let moments = monomials_up_to(1, 2 * (1 + prob.d_f()));
        let expect = &prob.objective().theta_pow_mul(1) + &Polynomial::constant(1, eps).theta_pow_mul(1 + prob.d_f());
        for (a, c) in &sdp.objective.free {
            assert_eq!(*c, expect.coeff(&moments[*a]));
        }
        assert_eq!(sdp.objective.free.len(), expect.num_terms());
    }

    #[test]
    fn feasible_gram_point_satisfies_rows() {
        // 1 + x = ½(1+x)² + ½(1−x²): G₀ = [[½,½],[½,½]], G₁ = [½], λ = −1
        let prob = PopProblem::with_ball(Polynomial::var(1, 0), vec![], 1.0).unwrap();
        let sdp = assemble_sos_form(&prob, 0, 0.0).unwrap();
        let g0 = super::super::SymMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let g1 = super::super::SymMatrix::from_rows(&[vec![0.5]]).unwrap();
        assert!(sdp.max_violation(&[g0, g1], &[], &[-1.0]) < 1e-15);
    }
}
