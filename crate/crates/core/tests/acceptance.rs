//! Prints one PASS/FAIL line per acceptance criterion and exits nonzero if
//! any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pvh_core::bernstein::{BernsteinApprox, Domain, SampledFunction};
use pvh_core::bounds::{nie_schweighofer_bound, polya_bound, reznick_bound, schmudgen_bound};
use pvh_core::construct::{build_f, icecream, icecream_dist, rate_exponent_icecream, reznick_search, ConstructParams};
use pvh_core::contopt::{builtin, qc_relaxation, sample_box, samples_for, sdp_relaxation, RelaxationKind};
use pvh_core::hierarchy::{grid_oracle, solve_level, solve_moment_level};
use pvh_core::ipm::SolverOptions;
use pvh_core::polyalg::monomials_up_to;
use pvh_core::{Polynomial, PopProblem};

fn poly(n: usize, terms: &[(&[u32], f64)]) -> Polynomial {
    Polynomial::from_terms(n, terms.iter().map(|(a, c)| (a.to_vec(), *c))).unwrap()
}

fn ball_problem(f: Polynomial, extra: Vec<Polynomial>, l: f64) -> PopProblem {
    PopProblem::with_ball(f, extra, l).unwrap()
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, pass: bool, detail: String, took: Duration) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id:>2}: {} ({detail}; {:.1} s)",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn exact_small_certificates() -> (bool, String) {
    let x = Polynomial::var(1, 0);
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, f, target, tol) in [("min x", x.clone(), -1.0, 1e-6), ("min x^2", x.pow(2), 0.0, 1e-7)] {
        let start = Instant::now();
        let prob = ball_problem(f, vec![], 1.0);
        let (cert, _) = solve_level(&prob, 0, 0.0, &opts()).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let good = (cert.lambda - target).abs() <= tol && secs < 1.0 && cert.residual <= 1e-6;
        ok &= good;
        detail.push(format!(
            "{name}: {:.2e} off in {secs:.2} s",
            (cert.lambda - target).abs()
        ));
    }
    (ok, detail.join(", "))
}

struct SuiteProblem {
    name: &'static str,
    prob: PopProblem,
    kmax: u32,
    oracle_res: usize,
}

fn suite() -> Vec<SuiteProblem> {
    let p1 = |terms: &[(&[u32], f64)]| poly(1, terms);
    let p2 = |terms: &[(&[u32], f64)]| poly(2, terms);
    let p3 = |terms: &[(&[u32], f64)]| poly(3, terms);
    vec![
        SuiteProblem {
            name: "x",
            prob: ball_problem(p1(&[(&[1], 1.0)]), vec![], 1.0),
            kmax: 4,
            oracle_res: 2001,
        },
        SuiteProblem {
            name: "x^2 - x/2",
            prob: ball_problem(p1(&[(&[2], 1.0), (&[1], -0.5)]), vec![], 1.0),
            kmax: 4,
            oracle_res: 2001,
        },
        SuiteProblem {
            name: "double well",
            prob: ball_problem(p1(&[(&[4], 1.0), (&[2], -1.0), (&[1], 0.2)]), vec![], 2.0),
            kmax: 4,
            oracle_res: 2001,
        },
        SuiteProblem {
            name: "x1 + x2 on disk",
            prob: ball_problem(p2(&[(&[1, 0], 1.0), (&[0, 1], 1.0)]), vec![], 1.0),
            kmax: 4,
            oracle_res: 201,
        },
        SuiteProblem {
            name: "quartic",
            prob: ball_problem(p2(&[(&[4, 0], 1.0), (&[0, 4], 1.0), (&[1, 1], -2.0)]), vec![], 4.0),
            kmax: 3,
            oracle_res: 201,
        },
        SuiteProblem {
            name: "x1 x2 on half disk",
            prob: ball_problem(p2(&[(&[1, 1], 1.0)]), vec![p2(&[(&[1, 0], 1.0)])], 1.0),
            kmax: 4,
            oracle_res: 201,
        },
        SuiteProblem {
            name: "banana",
            prob: ball_problem(
                p2(&[
                    (&[4, 0], 1.0),
                    (&[2, 1], -2.0),
                    (&[0, 2], 1.0),
                    (&[2, 0], 1.0),
                    (&[1, 0], -2.0),
                    (&[0, 0], 1.0),
                ]),
                vec![],
                4.0,
            ),
            kmax: 3,
            oracle_res: 201,
        },
        SuiteProblem {
            name: "pairwise products on sphere ball",
            prob: ball_problem(
                p3(&[(&[1, 1, 0], 1.0), (&[0, 1, 1], 1.0), (&[1, 0, 1], 1.0)]),
                vec![],
                1.0,
            ),
            kmax: 2,
            oracle_res: 41,
        },
        SuiteProblem {
            name: "cubic in 3 variables",
            prob: ball_problem(
                p3(&[(&[3, 0, 0], 1.0), (&[0, 1, 1], 1.0), (&[0, 0, 1], -0.5)]),
                vec![p3(&[(&[0, 1, 0], 1.0), (&[0, 0, 0], 0.5)])],
                1.0,
            ),
            kmax: 2,
            oracle_res: 41,
        },
    ]
}

struct SuiteOutcome {
    monotone: (bool, String),
    duality: (bool, String),
    certificates: (bool, String),
}

fn run_suite() -> SuiteOutcome {
    let mut worst_mono = f64::NEG_INFINITY;
    let mut worst_oracle = f64::NEG_INFINITY;
    let mut worst_gap = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut degree_ok = true;
    let mut solved = 0;
    let mut notes = Vec::new();
    let problems = suite();
    for sp in &problems {
        let fstar = grid_oracle(&sp.prob, sp.oracle_res).unwrap();
        let d_f = sp.prob.d_f();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=sp.kmax {
            let (cert, _) = solve_level(&sp.prob, k, 0.0, &opts()).unwrap();
            let moment = solve_moment_level(&sp.prob, k, 0.0, &opts()).unwrap();
            solved += 1;
            worst_mono = worst_mono.max(prev - cert.lambda);
            worst_oracle = worst_oracle.max(cert.lambda - fstar);
            let gap = (cert.lambda - moment.primal_obj).abs();
            if gap > 1e-6 {
                notes.push(format!("{} k={k} gap {gap:.1e}", sp.name));
            }
            worst_gap = worst_gap.max(gap);
            worst_residual = worst_residual.max(cert.residual);
            let cap = 2 * (k + d_f) as i64;
            let n = sp.prob.nvars();
            for ((gram, w), &deg) in cert.grams.iter().zip(&cert.block_weights).zip(&cert.block_degrees) {
                let weight_deg = w.map_or(0, |j| sp.prob.constraints()[j].degree());
                let basis = monomials_up_to(n, deg);
                let sigma = pvh_core::hierarchy::gram_polynomial(gram, &basis);
                degree_ok &= 2 * deg as i64 + weight_deg <= cap && sigma.degree() + weight_deg <= cap;
            }
            prev = cert.lambda;
        }
    }
    SuiteOutcome {
        monotone: (
            worst_mono <= 1e-6 && worst_oracle <= 1e-6,
            format!(
                "{} problems, {solved} solves; worst decrease {worst_mono:.1e}, worst excess over oracle {worst_oracle:.1e}",
                problems.len()
            ),
        ),
        duality: (
            worst_gap <= 1e-6,
            format!("worst |SOS - moment| {worst_gap:.1e} over {solved} solves{}", if notes.is_empty() { String::new() } else { format!("; {}", notes.join(", ")) }),
        ),
        certificates: (
            worst_residual <= 1e-6 && degree_ok,
            format!("worst residual {worst_residual:.1e}, degree caps {}", if degree_ok { "hold" } else { "violated" }),
        ),
    }
}

fn perturbed_bracket() -> (bool, String) {
    let prob = PopProblem::new(Polynomial::var(1, 0).pow(2), vec![]).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for eps in [0.1, 0.01] {
        let (cert, _) = solve_level(&prob, 3, eps, &opts()).unwrap();
        ok &= cert.lambda >= -1e-6 && cert.lambda <= eps + 1e-6;
        detail.push(format!("eps {eps}: rho_3 = {:.6}", cert.lambda));
    }
    (ok, detail.join(", "))
}

fn motzkin() -> (bool, String) {
    let f = poly(2, &[(&[4, 2], 1.0), (&[2, 4], 1.0), (&[2, 2], -3.0), (&[0, 0], 1.0)]);
    let prob = ball_problem(f, vec![], 2.0);
    let fstar = grid_oracle(&prob, 401).unwrap();
    let mut best = f64::NEG_INFINITY;
    let mut reached = None;
    for k in 0..=4 {
        let (cert, _) = solve_level(&prob, k, 0.0, &opts()).unwrap();
        best = best.max(cert.lambda);
        if cert.lambda >= -1e-3 && reached.is_none() {
            reached = Some(k);
        }
    }
    (
        reached.is_some() && fstar.abs() <= 1e-6,
        format!("oracle f* = {fstar:.1e}, best rho_k = {best:.2e}, first k with rho_k >= -1e-3: {reached:?}"),
    )
}

fn bernstein_law() -> (bool, String) {
    let f = SampledFunction::new(1, |x: &[f64]| x[0].abs(), 1.0, 1.0).unwrap();
    let grid: Vec<f64> = (0..=20_000).map(|i| -1.0 + i as f64 / 10_000.0).collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for k in [4u32, 16, 64, 256] {
        let approx = BernsteinApprox::build(&f, &[k], Domain::Symmetric).unwrap();
        let err = grid
            .iter()
            .map(|&x| (x.abs() - approx.eval(&[x])).abs())
            .fold(0.0, f64::max);
        let sup = grid.iter().map(|&x| approx.eval(&[x]).abs()).fold(0.0, f64::max);
        ok &= err <= (1.0 / k as f64).sqrt() && sup <= 1.0 + 1e-9;
        detail.push(format!("k={k}: {err:.4} vs {:.4}", (1.0 / k as f64).sqrt()));
    }
    (ok, detail.join(", "))
}

fn icecream_lojasiewicz() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for n in 2..=4 {
        let g = icecream(n).unwrap();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let gap = icecream_dist(&x).unwrap() - g.eval(&x).abs() / 2.0;
            worst = worst.max(gap);
            checked += 1;
        }
    }
    (
        worst <= 1e-12,
        format!("{checked} random points over n = 2..4, worst dist^2 - |g|/2 = {worst:.1e}"),
    )
}

fn exponent_chain() -> (bool, String) {
    let chain = rate_exponent_icecream();
    let expected: [(&str, i64, i64); 12] = [
        ("delta", 2, 1),
        ("C_psi", -2, 1),
        ("C_phi", -1, 1),
        ("w", 5, 1),
        ("L_sqrt_xi", -9, 2),
        ("L_phi_bar", -6, 1),
        ("C_phi_bar", -6, 1),
        ("u", -26, 1),
        ("d", -26, 1),
        ("C_F", -12, 1),
        ("D", -26, 1),
        ("K_bar", -65, 1),
    ];
    let mismatches: Vec<String> = expected
        .iter()
        .filter(|(name, p, q)| chain.get(name) != Some(num_rational::Ratio::new(*p, *q)))
        .map(|(name, _, _)| name.to_string())
        .collect();
    (
        mismatches.is_empty() && chain.c == 65,
        format!("c = {}, mismatched entries: {mismatches:?}", chain.c),
    )
}

fn construct_smoke() -> (bool, String) {
    let f = Polynomial::norm_sq(2);
    let g = icecream(2).unwrap();
    let eps = 0.5;
    let params = ConstructParams {
        grid_res: 61,
        anchor_res: Some(21),
        u_cap: Some(2),
        ..ConstructParams::default()
    };
    let st = build_f(&f, &g, eps, &params).unwrap();
    let search = reznick_search(&st.big_f, 6, 400, &opts()).unwrap();
    let min_ok = st.sphere.min >= eps / 4.0 - st.sphere.slack;
    let k_ok = search.k_found.is_some_and(|k| k <= 6);
    (
        st.demonstration && min_ok && k_ok,
        format!(
            "demonstration {}, sphere min {:.4} vs {:.4} - slack {:.1e}, K_bar {}, smallest certified K {:?}",
            st.demonstration,
            st.sphere.min,
            eps / 4.0,
            st.sphere.slack,
            st.k_bar,
            search.k_found
        ),
    )
}

fn continuous_suite() -> (bool, String) {
    let opts = opts();
    let eps = 0.05;
    let mut worst = f64::NEG_INFINITY;
    let mut solves = 0;
    for name in ["abs", "neg-linear", "bowl", "ridge"] {
        let (prob, _) = builtin(name).unwrap();
        let r = if prob.n == 1 { 11 } else { 6 };
        let mut prev_fine = f64::NEG_INFINITY;
        for k in 0..=2 {
            let coarse = sample_box(prob.n, r).unwrap();
            let fine = sample_box(prob.n, 2 * r - 1).unwrap();
            let c = sdp_relaxation(&prob, &coarse, k, eps, &opts).unwrap().bound;
            let f = sdp_relaxation(&prob, &fine, k, eps, &opts).unwrap().bound;
            // Bounds rise with k and drop as the sample set grows.
            worst = worst.max(f - c).max(prev_fine - f);
            prev_fine = f;
            let feasible = samples_for(&prob, RelaxationKind::Qc, 2 * r - 1).unwrap();
            let qc = qc_relaxation(&prob, &feasible, k, eps, &opts).unwrap().bound;
            let sdp = sdp_relaxation(&prob, &feasible, k, eps, &opts).unwrap().bound;
            worst = worst.max(qc - sdp);
            solves += 5;
        }
    }
    (
        worst <= 1e-6,
        format!("{solves} solves, worst ordering violation {worst:.1e}"),
    )
}

fn calculators() -> (bool, String) {
    let ln2 = std::f64::consts::LN_2;
    let reznick = |n: f64, d: f64, t: f64| {
        (2.0 * n * d * (2.0 * d - 1.0) / (4.0 * ln2) * t - (n + 2.0 * d) / 2.0)
            .ceil()
            .max(0.0) as u64
    };
    let polya = |d: f64, p: f64, m: f64| (d * (d - 1.0) * p / (2.0 * m) - d).ceil().max(0.0) as u64;
    let schm = |n: f64, d: f64, nf: f64, fs: f64, c: f64| {
        (c * d * d * (1.0 + (d * d * n.powf(d) * nf / fs).powf(c))).ceil() as u64
    };
    let cases = [
        (reznick_bound(2, 1, 1.0).unwrap(), reznick(2.0, 1.0, 1.0), 0),
        (reznick_bound(3, 2, 10.0).unwrap(), reznick(3.0, 2.0, 10.0), 127),
        (polya_bound(1, 5.0, 0.1).unwrap(), polya(1.0, 5.0, 0.1), 0),
        (polya_bound(2, 1.0, 0.25).unwrap(), polya(2.0, 1.0, 0.25), 2),
        (polya_bound(3, 2.0, 1.0).unwrap(), polya(3.0, 2.0, 1.0), 3),
        (
            schmudgen_bound(1, 1, 1.0, 1.0, 1.0).unwrap(),
            schm(1.0, 1.0, 1.0, 1.0, 1.0),
            2,
        ),
        (
            schmudgen_bound(2, 1, 1.0, 1.0, 2.0).unwrap(),
            schm(2.0, 1.0, 1.0, 1.0, 2.0),
            10,
        ),
    ];
    let nie = nie_schweighofer_bound(1, 1, 1.0, 1.0, 1.0).unwrap();
    let series: f64 = (0..20)
        .scan(1.0, |t, k| {
            let term = *t;
            *t /= (k + 1) as f64;
            Some(term)
        })
        .sum();
    let nie_ok = (nie - series).abs() < 1e-12;
    let bad: Vec<usize> = cases
        .iter()
        .enumerate()
        .filter(|(_, (got, formula, table))| got != formula || got != table)
        .map(|(i, _)| i)
        .collect();
    (
        bad.is_empty() && nie_ok,
        format!(
            "{} integer examples, mismatches at {bad:?}; exponential estimate {nie:.6}",
            cases.len()
        ),
    )
}

fn main() {
    let mut report = Report { failures: 0 };
    let timed = |f: &dyn Fn() -> (bool, String)| {
        let start = Instant::now();
        let (ok, detail) = f();
        (ok, detail, start.elapsed())
    };

    let (ok, d, t) = timed(&exact_small_certificates);
    report.line(1, ok, d, t);

    let start = Instant::now();
    let suite = run_suite();
    let took = start.elapsed();
    report.line(
        2,
        suite.monotone.0 && took < Duration::from_secs(120),
        suite.monotone.1,
        took,
    );
    report.line(3, suite.duality.0, suite.duality.1, took);
    report.line(4, suite.certificates.0, suite.certificates.1, took);

    let (ok, d, t) = timed(&perturbed_bracket);
    report.line(5, ok, d, t);
    let (ok, d, t) = timed(&motzkin);
    report.line(6, ok && t < Duration::from_secs(300), d, t);
    let (ok, d, t) = timed(&bernstein_law);
    report.line(7, ok, d, t);
    let (ok, d, t) = timed(&icecream_lojasiewicz);
    report.line(8, ok, d, t);
    let (ok, d, t) = timed(&exponent_chain);
    report.line(9, ok, d, t);
    let (ok, d, t) = timed(&construct_smoke);
    report.line(10, ok && t < Duration::from_secs(300), d, t);
    let (ok, d, t) = timed(&continuous_suite);
    report.line(11, ok, d, t);
    let (ok, d, t) = timed(&calculators);
    report.line(12, ok, d, t);

    println!("{} of 12 criteria failed", report.failures);
    if report.failures > 0 {
        std::process::exit(1);
    }
}
