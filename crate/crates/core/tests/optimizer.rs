use faer::{Mat, Side};
use heatopt_core::optimizer::{
    bfgs_update, check_stop, line_search, optimize, solve_qp_subproblem, Decision, FnObjective, Objective,
    SqpConfig, SqpCounters, StopReason,
};
use heatopt_core::Result;
use proptest::prelude::*;

fn spd(n: usize, seed: &[f64]) -> Mat<f64> {
    // A A^T + n I
    let a = Mat::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()] * ((i + 2 * j) as f64).sin());
    let mut h = &a * a.transpose();
    for i in 0..n {
        h[(i, i)] += n as f64;
    }
    h
}

fn solve_dense(h: &Mat<f64>, g: &[f64]) -> Vec<f64> {
    use faer::linalg::solvers::Solve;
    let llt = h.llt(Side::Lower).unwrap();
    let mut b = Mat::from_fn(g.len(), 1, |i, _| -g[i]);
    llt.solve_in_place(b.as_mut());
    (0..g.len()).map(|i| b[(i, 0)]).collect()
}

proptest! {
    #[test]
    fn unconstrained_qp_matches_direct_solve(seed in prop::collection::vec(-1.0f64..1.0, 16), g in prop::collection::vec(-5.0f64..5.0, 4)) {
        let h = spd(4, &seed);
        let inf = vec![f64::INFINITY; 4];
        let lo: Vec<f64> = inf.iter().map(|v| -v).collect();
        let p = solve_qp_subproblem(&g, &h, &lo, &inf).unwrap();
        let q = solve_dense(&h, &g);
        for i in 0..4 {
            prop_assert!((p[i] - q[i]).abs() <= 1e-10 * (1.0 + q[i].abs()));
        }
    }

    #[test]
    fn bounded_qp_satisfies_kkt(seed in prop::collection::vec(-1.0f64..1.0, 25), g in prop::collection::vec(-5.0f64..5.0, 5), b in 0.01f64..1.0) {
        let h = spd(5, &seed);
        let lo = vec![-b; 5];
        let hi = vec![b; 5];
        let p = solve_qp_subproblem(&g, &h, &lo, &hi).unwrap();
        for i in 0..5 {
            let grad: f64 = g[i] + (0..5).map(|j| h[(i, j)] * p[j]).sum::<f64>();
            prop_assert!(p[i] >= -b - 1e-12 && p[i] <= b + 1e-12);
            let tol = 1e-9 * (1.0 + grad.abs());
            if (p[i] + b).abs() <= 1e-12 {
                prop_assert!(grad >= -tol, "lower multiplier {}", grad);
            } else if (p[i] - b).abs() <= 1e-12 {
                prop_assert!(grad <= tol, "upper multiplier {}", grad);
            } else {
                prop_assert!(grad.abs() <= 1e-8 * (1.0 + g.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
            }
        }
    }

    #[test]
    fn damped_update_stays_positive_definite(seed in prop::collection::vec(-1.0f64..1.0, 9), s in prop::collection::vec(-1.0f64..1.0, 3), y in prop::collection::vec(-1.0f64..1.0, 3)) {
        let mut h = spd(3, &seed);
        bfgs_update(&mut h, &s, &y);
        prop_assert!(h.llt(Side::Lower).is_ok());
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((h[(i, j)] - h[(j, i)]).abs() <= 1e-10 * (1.0 + h[(i, j)].abs()));
            }
        }
    }

    #[test]
    fn armijo_bound_holds_on_shifted_quadratic(c in 0.05f64..0.95) {
        let f = |a: f64| (a - c).powi(2);
        let (f0, slope) = (c * c, -2.0 * c);
        let (alpha, fa, _) = line_search(|a| Ok((f(a), ())), f0, slope, 1e-4, 1e-10).unwrap().unwrap();
        prop_assert!(fa <= f0 + 1e-4 * alpha * slope);
        prop_assert!(fa < f0);
    }
}

#[test]
fn secant_condition_without_damping() {
    let mut h = Mat::<f64>::identity(3, 3);
    let s = [0.3, -0.1, 0.2];
    let y = [0.5, -0.2, 0.4];
    bfgs_update(&mut h, &s, &y);
    for i in 0..3 {
        let hs: f64 = (0..3).map(|j| h[(i, j)] * s[j]).sum();
        assert!((hs - y[i]).abs() < 1e-10);
    }
}

#[test]
fn negative_curvature_is_damped() {
    let mut h = Mat::<f64>::identity(2, 2);
    bfgs_update(&mut h, &[1.0, 0.0], &[-1.0, 0.5]);
    assert!(h.llt(Side::Lower).is_ok());
}

#[test]
fn line_search_accepts_unit_step_on_quadratic() {
    // f(x + a p) with f = x^2, x = 1, p = -1
    let r = line_search(|a| Ok(((1.0 - a) * (1.0f64 - a), ())), 1.0, -2.0, 1e-4, 1e-10).unwrap();
    assert_eq!(r.unwrap().0, 1.0);
}

#[test]
fn line_search_reports_failure_on_ascent() {
    let mut calls = 0;
    let r = line_search(
        |a| {
            calls += 1;
            Ok((1.0 + a, ()))
        },
        1.0,
        -1.0,
        1e-4,
        1e-10,
    )
    .unwrap();
    assert!(r.is_none());
    assert!(calls > 30);
}

fn quadratic(h: Mat<f64>, b: Vec<f64>) -> impl FnMut(&[f64]) -> (f64, Vec<f64>) {
    move |x: &[f64]| {
        let n = x.len();
        let hx: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[(i, j)] * x[j]).sum()).collect();
        let f = 0.5 * x.iter().zip(&hx).map(|(a, c)| a * c).sum::<f64>() - x.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>();
        (f, hx.iter().zip(&b).map(|(a, c)| a - c).collect())
    }
}

#[test]
fn bfgs_converges_on_quadratic() {
    let n = 6;
    let h = spd(n, &[0.3, -0.7, 0.2, 0.9, -0.4]);
    let b: Vec<f64> = (0..n).map(|i| (i as f64 - 2.5) * 0.4).collect();
    let xstar = solve_dense(&h, &b.iter().map(|v| -v).collect::<Vec<_>>());
    let cfg = SqpConfig {
        objective_limit: f64::NEG_INFINITY,
        optimality_tolerance: 1e-12,
        reinit_every_iters: None,
        reinit_every_fevals: None,
        initial_step: 1.0,
        ..Default::default()
    };
    let r = optimize(&mut FnObjective(quadratic(h, b)), &vec![0.0; n], &cfg).unwrap();
    assert!(r.iterations <= 3 * n, "{} iterations", r.iterations);
    for i in 0..n {
        assert!((r.x[i] - xstar[i]).abs() < 1e-8, "{:?} vs {:?}", r.x, xstar);
    }
}

#[test]
fn active_bound_is_returned() {
    let cfg = SqpConfig { upper: 1.0, lower: -10.0, objective_limit: f64::NEG_INFINITY, ..Default::default() };
    let r = optimize(&mut FnObjective(|x: &[f64]| ((x[0] - 2.0).powi(2), vec![2.0 * (x[0] - 2.0)])), &[0.0], &cfg).unwrap();
    assert_eq!(r.x, vec![1.0]);
    assert_eq!(r.reason, StopReason::Optimality);
}

#[test]
fn stop_decisions() {
    let cfg = SqpConfig::default();
    let base = SqpCounters { value: 1.0, projected_gradient: 1.0, gradient_scale: 1.0, ..Default::default() };
    assert_eq!(check_stop(&SqpCounters { value: 1e-10, ..base }, &cfg), Decision::Stop(StopReason::ObjectiveLimit));
    assert_eq!(
        check_stop(&SqpCounters { step_failed: true, steptol_streak: 4, ..base }, &cfg),
        Decision::Stop(StopReason::StepTolerance)
    );
    assert_eq!(check_stop(&SqpCounters { step_failed: true, steptol_streak: 2, ..base }, &cfg), Decision::Reinitialize);
    assert_eq!(check_stop(&SqpCounters { fevals_since_reinit: 100, ..base }, &cfg), Decision::Reinitialize);
    assert_eq!(check_stop(&SqpCounters { iterations_since_reinit: 10, ..base }, &cfg), Decision::Reinitialize);
    assert_eq!(check_stop(&base, &cfg), Decision::Continue);
    assert_eq!(check_stop(&SqpCounters { projected_gradient: 1e-7, ..base }, &cfg), Decision::Stop(StopReason::Optimality));
}

/// Rosenbrock with a reinitialization that only counts calls.
struct Counting {
    reinits: usize,
}

impl Objective for Counting {
    fn eval(&mut self, x: &[f64]) -> Result<heatopt_core::optimizer::Evaluation> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Ok(heatopt_core::optimizer::Evaluation { value: f, gradient: g, parts: [f, 0.0, 0.0] })
    }

    fn reinitialize(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.reinits += 1;
        Ok(x.to_vec())
    }
}

#[test]
fn restarts_follow_schedule_and_history_is_deterministic() {
    let cfg = SqpConfig { objective_limit: 1e-14, ..Default::default() };
    let mut a = Counting { reinits: 0 };
    let ra = optimize(&mut a, &[-1.2, 1.0], &cfg).unwrap();
    assert!(a.reinits > 0);
    assert_eq!(ra.reinits, a.reinits);
    assert!(ra.value < 1e-8, "value {}", ra.value);
    let mut best = f64::INFINITY;
    for rec in &ra.history {
        best = best.min(rec.value);
    }
    assert_eq!(best, ra.value);
    let rb = optimize(&mut Counting { reinits: 0 }, &[-1.2, 1.0], &cfg).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn evaluation_failure_keeps_history() {
    struct Failing(usize);
    impl Objective for Failing {
        fn eval(&mut self, x: &[f64]) -> Result<heatopt_core::optimizer::Evaluation> {
            self.0 += 1;
            if self.0 > 3 {
                return Err(heatopt_core::Error::InvalidInput("broken".into()));
            }
            Ok(heatopt_core::optimizer::Evaluation { value: x[0] * x[0], gradient: vec![2.0 * x[0]], parts: [0.0; 3] })
        }
    }
    let r = optimize(&mut Failing(0), &[1.0], &SqpConfig { objective_limit: -1.0, ..Default::default() }).unwrap();
    assert!(matches!(r.reason, StopReason::EvaluationFailed(_)));
    assert!(!r.history.is_empty());
}
