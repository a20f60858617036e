use proptest::prelude::*;
use pvh_core::polyalg::monomials_up_to;
use pvh_core::Polynomial;

fn poly(n: usize, max_deg: u32) -> impl Strategy<Value = Polynomial> {
    let basis = monomials_up_to(n, max_deg);
    let len = basis.len();
    prop::collection::vec((0..len, -10.0f64..10.0), 0..6).prop_map(move |terms| {
        Polynomial::from_terms(n, terms.into_iter().map(|(i, c)| (basis[i].exponents().to_vec(), c))).unwrap()
    })
}

fn close(a: &Polynomial, b: &Polynomial, rel: f64) -> bool {
    let scale = 1.0 + a.max_abs_coeff().max(b.max_abs_coeff());
    a.max_coeff_diff(b).unwrap() <= rel * scale
}

proptest! {
    #[test]
    fn ring_axioms(a in poly(2, 4), b in poly(2, 4), c in poly(2, 4)) {
        prop_assert!(close(&(&a + &b), &(&b + &a), 1e-12));
        prop_assert!(close(&(&a * &b), &(&b * &a), 1e-12));
        prop_assert!(close(&(&(&a + &b) + &c), &(&a + &(&b + &c)), 1e-12));
        prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-12));
        prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-12));
    }

    #[test]
    fn evaluation_is_multiplicative(a in poly(3, 4), b in poly(3, 4),
                                   x in prop::collection::vec(-1.5f64..1.5, 3)) {
        let lhs = (&a * &b).eval(&x);
        let rhs = a.eval(&x) * b.eval(&x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs().max(lhs.abs())) + 1e-9);
    }

    #[test]
    fn homogenization_matches_scaling(a in poly(2, 4), x in prop::collection::vec(-1.0f64..1.0, 3)) {
        let t = a.degree().max(0) as u32 + 1;
        let h = a.homogenize(t).unwrap();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let u: Vec<f64> = x.iter().map(|v| v / norm).collect();
        prop_assume!(u[2].abs() > 1e-2);
        let expect = u[2].powi(t as i32) * a.eval(&[u[0] / u[2], u[1] / u[2]]);
        let got = h.eval(&u);
        prop_assert!((got - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
        prop_assert!(close(&h.dehomogenize().unwrap(), &a, 1e-15));
        prop_assert!(h.is_zero() || h.is_homogeneous());
    }

    #[test]
    fn theta_powers_compose(a in poly(2, 3), j in 0u32..3, k in 0u32..3) {
        let lhs = a.theta_pow_mul(j + k);
        let rhs = a.theta_pow_mul(j).theta_pow_mul(k);
        prop_assert!(close(&lhs, &rhs, 1e-12));
        if !a.is_zero() {
            prop_assert_eq!(lhs.degree(), a.degree() + 2 * (j + k) as i64);
        }
    }
}
