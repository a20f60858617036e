use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

const TOL: f64 = 1e-6;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

/// `min f` over the samples, and over the feasible samples.
fn sample_minima(prob: &ContinuousProblem, omega: &[Vec<f64>]) -> (f64, f64) {
    let all = omega.iter().map(|x| prob.objective(x)).fold(f64::INFINITY, f64::min);
    let feas = omega
        .iter()
        .filter(|x| prob.is_feasible(x))
        .map(|x| prob.objective(x))
        .fold(f64::INFINITY, f64::min);
    (all, feas)
}

#[test]
fn sample_box_examples() {
    assert_eq!(sample_box(1, 3).unwrap(), vec![vec![-1.0], vec![0.0], vec![1.0]]);
    assert_eq!(sample_box(3, 4).unwrap().len(), 64);
    assert_eq!(sample_box(2, 3).unwrap()[1], vec![-1.0, 0.0]);
    assert!(sample_box(2, 1).is_err());
    assert!(matches!(sample_box(3, 101), Err(Error::BudgetExceeded { .. })));
}

#[test]
fn hausdorff_matches_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (n, r) in [(1, 5), (2, 7), (3, 4)] {
        let grid = sample_box(n, r).unwrap();
        let dist = |x: &[f64]| {
            grid.iter()
                .map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min)
        };
        let h = hausdorff_distance(n, r);
        for _ in 0..200 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(dist(&x) <= h + 1e-12);
        }
        let centre = vec![-1.0 + 1.0 / (r - 1) as f64; n];
        assert!((dist(&centre) - h).abs() < 1e-12);
    }
}

#[test]
fn constant_objective() {
    let prob = ContinuousProblem::new(
        "const",
        1,
        Arc::new(|_: &[f64]| 2.5),
        vec![Arc::new(|x: &[f64]| 1.0 - x[0] * x[0])],
    )
    .unwrap();
    let omega = sample_box(1, 9).unwrap();
    for k in [0, 1] {
        let r = sdp_relaxation(&prob, &omega, k, 0.1, &opts()).unwrap();
        assert!((r.bound - 2.6).abs() < TOL, "{r:?}");
        let r = qc_relaxation(&prob, &omega, k, 0.1, &opts()).unwrap();
        assert!((r.bound - 2.6).abs() < TOL, "{r:?}");
    }
}

#[test]
fn quad_sandwich() {
    let (prob, fstar) = builtin("quad").unwrap();
    let omega = sample_box(1, 41).unwrap();
    let eps = 0.01;
    let r = sdp_relaxation(&prob, &omega, 1, eps, &opts()).unwrap();
    assert!(r.bound >= -eps && r.bound <= 2.0 * eps);
    assert!(r.bound - fstar >= -TOL && r.bound - fstar <= eps + TOL);
}

#[test]
fn sdp_bracketed_by_sample_minima() {
    for name in ["neg-linear", "ridge"] {
        let (prob, _) = builtin(name).unwrap();
        let omega = sample_box(prob.n, 11).unwrap();
        let (lo, hi) = sample_minima(&prob, &omega);
        for k in 0..3 {
            let r = sdp_relaxation(&prob, &omega, k, 0.05, &opts()).unwrap();
            assert!(r.residuals.max() <= TOL, "{name} k={k}: {:?}", r.residuals);
            assert!(
                r.bound >= lo + 0.05 - TOL && r.bound <= hi + 0.05 + TOL,
                "{name} k={k}: {}",
                r.bound
            );
        }
    }
}

#[test]
fn monotone_in_k_and_omega() {
    for name in ["neg-linear", "abs", "ridge"] {
        let (prob, _) = builtin(name).unwrap();
        let r = if prob.n == 1 { 11 } else { 6 };
        let coarse = sample_box(prob.n, r).unwrap();
        let fine = sample_box(prob.n, 2 * r - 1).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..3 {
            let c = sdp_relaxation(&prob, &coarse, k, 0.05, &opts()).unwrap().bound;
            let f = sdp_relaxation(&prob, &fine, k, 0.05, &opts()).unwrap().bound;
            assert!(f <= c + TOL, "{name} k={k}: fine {f} coarse {c}");
            assert!(prev <= f + TOL, "{name} k={k}: {prev} then {f}");
            prev = f;
        }
    }
}

#[test]
fn qc_below_sdp_and_closed_form() {
    for name in ["abs", "sqrt-abs", "bowl"] {
        let (prob, _) = builtin(name).unwrap();
        let omega = samples_for(&prob, RelaxationKind::Qc, 9).unwrap();
        let (lo, _) = sample_minima(&prob, &omega);
        for k in 0..2 {
            let qc = qc_relaxation(&prob, &omega, k, 0.05, &opts()).unwrap();
            let sdp = sdp_relaxation(&prob, &omega, k, 0.05, &opts()).unwrap();
            assert!(qc.bound <= sdp.bound + TOL, "{name} k={k}");
            // Every subtracted term is nonnegative on feasible samples.
            assert!((qc.bound - (lo + 0.05)).abs() < TOL, "{name} k={k}: {}", qc.bound);
        }
    }
}

#[test]
fn qc_rejects_infeasible_samples() {
    let (prob, _) = builtin("neg-linear").unwrap();
    let omega = sample_box(1, 5).unwrap();
    assert!(matches!(
        qc_relaxation(&prob, &omega, 0, 0.1, &opts()),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn coarse_samples_and_bad_input_rejected() {
    let (prob, _) = builtin("quad").unwrap();
    assert!(sdp_relaxation(&prob, &[vec![0.5]], 2, 0.1, &opts()).is_err());
    assert!(sdp_relaxation(&prob, &[], 0, 0.1, &opts()).is_err());
    assert!(sdp_relaxation(&prob, &[vec![0.0]], 0, 0.0, &opts()).is_err());
    assert!(sdp_relaxation(&prob, &[vec![0.0, 1.0]], 0, 0.1, &opts()).is_err());
    assert!(builtin("nope").is_err());
}

#[test]
fn sweep_csv_layout() {
    let (prob, _) = builtin("abs").unwrap();
    let entries = sweep(&prob, RelaxationKind::Sdp, &[11, 21], &[0, 1], 0.1, &opts()).unwrap();
    assert_eq!(entries.len(), 4);
    let csv = sweep_csv(&entries);
    assert!(csv.starts_with("kind,resolution,k,bound,status,time_ms\n"));
    assert_eq!(csv.lines().count(), 5);
}
