//! Box-constrained quasi-Newton SQP with damped BFGS, a primal active-set QP,
//! Armijo backtracking and a reinitialize-and-restart policy.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Objective value, gradient and a three-term breakdown for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `(main, Tikhonov, volume)` terms, or `(value, 0, 0)` for plain functions.
    pub parts: [f64; 3],
}

pub trait Objective {
    fn eval(&mut self, x: &[f64]) -> Result<Evaluation>;

    /// Map the iterate to an equivalent, better conditioned one. Identity by default.
    fn reinitialize(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }
}

/// Plain closure objective returning `(f, grad f)`.
pub struct FnObjective<F>(pub F);

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Objective for FnObjective<F> {
    fn eval(&mut self, x: &[f64]) -> Result<Evaluation> {
        let (value, gradient) = (self.0)(x);
        Ok(Evaluation { value, gradient, parts: [value, 0.0, 0.0] })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpConfig {
    pub objective_limit: f64,
    /// Relative step tolerance: a step fails when `|s|_inf <= tol (1 + |x|_inf)`.
    pub step_tolerance: f64,
    /// Relative first-order tolerance on the projected gradient, scaled by `max(1, |g0|_inf)`.
    pub optimality_tolerance: f64,
    pub max_iterations: usize,
    pub max_function_evaluations: usize,
    pub lower: f64,
    pub upper: f64,
    /// Infinity norm of the first quasi-Newton step after every (re)start.
    pub initial_step: f64,
    pub reinit_every_iters: Option<usize>,
    pub reinit_every_fevals: Option<usize>,
    pub consecutive_steptol_stop: usize,
    pub armijo: f64,
    pub min_step: f64,
}

impl Default for SqpConfig {
    fn default() -> Self {
        Self {
            objective_limit: 1e-9,
            step_tolerance: 1e-8,
            optimality_tolerance: 1e-6,
            max_iterations: 500,
            max_function_evaluations: 5000,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            initial_step: 0.1,
            reinit_every_iters: Some(10),
            reinit_every_fevals: Some(100),
            consecutive_steptol_stop: 4,
            armijo: 1e-4,
            min_step: 1e-10,
        }
    }
}

impl SqpConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.step_tolerance, self.optimality_tolerance, self.initial_step, self.armijo, self.min_step];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("optimizer tolerances and step sizes must be positive".into()));
        }
        if !(self.lower <= self.upper) {
            return Err(Error::InvalidInput("lower bound exceeds upper bound".into()));
        }
        if self.consecutive_steptol_stop == 0 || self.max_iterations == 0 {
            return Err(Error::InvalidInput("iteration limits must be positive".into()));
        }
        Ok(())
    }

    fn reinit_enabled(&self) -> bool {
        self.reinit_every_iters.is_some() || self.reinit_every_fevals.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    ObjectiveLimit,
    Optimality,
    StepTolerance,
    MaxIterations,
    MaxFunctionEvaluations,
    /// Objective evaluation failed; the history up to the failure is kept.
    EvaluationFailed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub fevals: usize,
    pub parts: [f64; 3],
    pub value: f64,
    /// Infinity norm of the projected gradient.
    pub gradient_norm: f64,
    /// Infinity norm of the accepted step (0 on restarts).
    pub step: f64,
    pub reinitialized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqpResult {
    /// Best iterate seen.
    pub x: Vec<f64>,
    pub value: f64,
    pub parts: [f64; 3],
    pub reason: StopReason,
    pub iterations: usize,
    pub fevals: usize,
    pub reinits: usize,
    pub history: Vec<IterationRecord>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(b: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    (0..b.nrows()).map(|i| (0..b.ncols()).map(|j| b[(i, j)] * v[j]).sum()).collect()
}

/// Infinity norm of the gradient with components pushing into active bounds removed.
pub fn projected_gradient_norm(x: &[f64], g: &[f64], lower: f64, upper: f64) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            if (xi <= lower && gi > 0.0) || (xi >= upper && gi < 0.0) {
                0.0
            } else {
                gi.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Minimize `g^T p + p^T H p / 2` subject to `lo <= p <= hi` (with `lo <= 0 <= hi`)
/// by a primal active-set method started from `p = 0`.
pub fn solve_qp_subproblem(g: &[f64], h: &Mat<f64>, lo: &[f64], hi: &[f64]) -> Result<Vec<f64>> {
    let n = g.len();
    if lo.iter().zip(hi).any(|(l, u)| !(*l <= 0.0 && 0.0 <= *u)) {
        return Err(Error::InvalidInput("the zero step must be feasible".into()));
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Bound {
        Free,
        Lower,
        Upper,
    }
    let mut state = vec![Bound::Free; n];
    let mut p = vec![0.0; n];
    for _ in 0..(10 * n + 10) {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == Bound::Free).collect();
        let fixed: Vec<usize> = (0..n).filter(|&i| state[i] != Bound::Free).collect();
        let mut d = vec![0.0; n];
        if !free.is_empty() {
            let hff = Mat::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let mut rhs = Mat::from_fn(free.len(), 1, |a, _| {
                let i = free[a];
                -(g[i] + fixed.iter().map(|&j| h[(i, j)] * p[j]).sum::<f64>())
            });
            let llt = hff.llt(Side::Lower).map_err(|_| Error::Solver("QP Hessian is not positive definite".into()))?;
            llt.solve_in_place(rhs.as_mut());
            for (a, &i) in free.iter().enumerate() {
                d[i] = rhs[(a, 0)] - p[i];
            }
        }
        let scale = 1.0 + inf_norm(&p);
        if inf_norm(&d) <= 1e-14 * scale {
            // stationary on the working set: check multipliers of fixed bounds
            let grad: Vec<f64> = mat_vec(h, &p).iter().zip(g).map(|(hp, gi)| hp + gi).collect();
            let mut worst = None;
            let mut worst_val = 0.0;
            for &i in &fixed {
                let violation = match state[i] {
                    Bound::Lower => -grad[i],
                    Bound::Upper => grad[i],
                    Bound::Free => 0.0,
                };
                if violation > worst_val {
                    worst_val = violation;
                    worst = Some(i);
                }
            }
            match worst {
                Some(i) if worst_val > 1e-14 * (1.0 + inf_norm(&grad)) => state[i] = Bound::Free,
                _ => return Ok(p),
            }
            continue;
        }
        let mut tau = 1.0;
        let mut block = None;
        for &i in &free {
            if d[i] < 0.0 {
                let t = (lo[i] - p[i]) / d[i];
                if t < tau {
                    tau = t;
                    block = Some((i, Bound::Lower));
                }
            } else if d[i] > 0.0 {
                let t = (hi[i] - p[i]) / d[i];
                if t < tau {
                    tau = t;
                    block = Some((i, Bound::Upper));
                }
            }
        }
        let tau = tau.max(0.0);
        for &i in &free {
            p[i] += tau * d[i];
        }
        if let Some((i, b)) = block {
            p[i] = if b == Bound::Lower { lo[i] } else { hi[i] };
            state[i] = b;
        }
    }
    Err(Error::Solver("QP active-set iteration did not terminate".into()))
}

/// Backtracking from `alpha = 1`, halving until `f(alpha) <= f0 + c alpha slope`.
///
/// `trial` returns the objective and any payload at a step length. Gives
/// `None` when no step of at least `min_step` is accepted.
pub fn line_search<E>(
    mut trial: impl FnMut(f64) -> Result<(f64, E)>,
    f0: f64,
    slope: f64,
    c: f64,
    min_step: f64,
) -> Result<Option<(f64, f64, E)>> {
    if !(slope < 0.0) {
        return Ok(None);
    }
    let mut alpha = 1.0;
    while alpha >= min_step {
        let (f, e) = trial(alpha)?;
        if f.is_finite() && f <= f0 + c * alpha * slope {
            return Ok(Some((alpha, f, e)));
        }
        alpha *= 0.5;
    }
    Ok(None)
}

/// Damped BFGS update of the Hessian approximation `b` (Powell damping at 0.2).
pub fn bfgs_update(b: &mut Mat<f64>, s: &[f64], y: &[f64]) {
    let bs = mat_vec(b, s);
    let sbs = dot(s, &bs);
    if !(sbs > 0.0) {
        return;
    }
    let sy = dot(s, y);
    let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
    let r: Vec<f64> = y.iter().zip(&bs).map(|(yi, bi)| theta * yi + (1.0 - theta) * bi).collect();
    let sr = dot(s, &r);
    if !(sr > 0.0) {
        return;
    }
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] += r[i] * r[j] / sr - bs[i] * bs[j] / sbs;
        }
    }
}

fn scaled_identity(n: usize, g: &[f64], step: f64) -> Mat<f64> {
    let gn = inf_norm(g);
    let s = if gn > 0.0 { gn / step } else { 1.0 };
    Mat::from_fn(n, n, |i, j| if i == j { s } else { 0.0 })
}

/// What the driver should do next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Reinitialize,
    Stop(StopReason),
}

/// Counters consulted by [`check_stop`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SqpCounters {
    pub value: f64,
    pub projected_gradient: f64,
    pub gradient_scale: f64,
    pub iterations: usize,
    pub fevals: usize,
    pub iterations_since_reinit: usize,
    pub fevals_since_reinit: usize,
    /// Consecutive step-tolerance failures including the current one.
    pub steptol_streak: usize,
    /// The last step failed the step tolerance.
    pub step_failed: bool,
}

pub fn check_stop(c: &SqpCounters, cfg: &SqpConfig) -> Decision {
    if c.value <= cfg.objective_limit {
        return Decision::Stop(StopReason::ObjectiveLimit);
    }
    if c.projected_gradient <= cfg.optimality_tolerance * c.gradient_scale.max(1.0) {
        return Decision::Stop(StopReason::Optimality);
    }
    if c.step_failed {
        if c.steptol_streak >= cfg.consecutive_steptol_stop || !cfg.reinit_enabled() {
            return Decision::Stop(StopReason::StepTolerance);
        }
        return Decision::Reinitialize;
    }
    if c.iterations >= cfg.max_iterations {
        return Decision::Stop(StopReason::MaxIterations);
    }
    if c.fevals >= cfg.max_function_evaluations {
        return Decision::Stop(StopReason::MaxFunctionEvaluations);
    }
    let due_iter = cfg.reinit_every_iters.is_some_and(|k| c.iterations_since_reinit >= k);
    let due_feval = cfg.reinit_every_fevals.is_some_and(|k| c.fevals_since_reinit >= k);
    if due_iter || due_feval {
        return Decision::Reinitialize;
    }
    Decision::Continue
}

struct Best {
    x: Vec<f64>,
    value: f64,
    parts: [f64; 3],
}

impl Best {
    fn offer(&mut self, x: &[f64], e: &Evaluation) {
        if e.value < self.value {
            self.x = x.to_vec();
            self.value = e.value;
            self.parts = e.parts;
        }
    }
}

/// Run the SQP loop from `x0`, reinitializing and restarting on the configured schedule.
pub fn optimize(obj: &mut impl Objective, x0: &[f64], cfg: &SqpConfig) -> Result<SqpResult> {
    optimize_observed(obj, x0, cfg, |_, _| {})
}

/// [`optimize`] with a callback receiving every record and the current iterate.
pub fn optimize_observed(
    obj: &mut impl Objective,
    x0: &[f64],
    cfg: &SqpConfig,
    mut observe: impl FnMut(&IterationRecord, &[f64]),
) -> Result<SqpResult> {
    cfg.validate()?;
    let n = x0.len();
    let clamp = |x: &mut Vec<f64>| x.iter_mut().for_each(|v| *v = v.clamp(cfg.lower, cfg.upper));
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut e = obj.eval(&x)?;
    if e.gradient.len() != n {
        return Err(Error::InvalidInput("gradient length differs from the variable count".into()));
    }
    let mut c = SqpCounters {
        value: e.value,
        gradient_scale: inf_norm(&e.gradient),
        fevals: 1,
        fevals_since_reinit: 1,
        ..Default::default()
    };
    let mut best = Best { x: x.clone(), value: e.value, parts: e.parts };
    let mut b = scaled_identity(n, &e.gradient, cfg.initial_step);
    let mut reinits = 0;
    let first = IterationRecord {
        iteration: 0,
        fevals: 1,
        parts: e.parts,
        value: e.value,
        gradient_norm: projected_gradient_norm(&x, &e.gradient, cfg.lower, cfg.upper),
        step: 0.0,
        reinitialized: false,
    };
    observe(&first, &x);
    let mut history = vec![first];
    let finish = |reason, best: Best, c: &SqpCounters, reinits, history| SqpResult {
        x: best.x,
        value: best.value,
        parts: best.parts,
        reason,
        iterations: c.iterations,
        fevals: c.fevals,
        reinits,
        history,
    };

    loop {
        c.value = e.value;
        c.projected_gradient = projected_gradient_norm(&x, &e.gradient, cfg.lower, cfg.upper);
        match check_stop(&c, cfg) {
            Decision::Stop(r) => return Ok(finish(r, best, &c, reinits, history)),
            Decision::Reinitialize => {
                let mut xr = match obj.reinitialize(&x) {
                    Ok(v) => v,
                    Err(err) => {
                        let r = StopReason::EvaluationFailed(err.to_string());
                        return Ok(finish(r, best, &c, reinits, history));
                    }
                };
                clamp(&mut xr);
                match obj.eval(&xr) {
                    Ok(er) => {
                        x = xr;
                        e = er;
                    }
                    Err(err) => {
                        let r = StopReason::EvaluationFailed(err.to_string());
                        return Ok(finish(r, best, &c, reinits, history));
                    }
                }
                c.fevals += 1;
                reinits += 1;
                c.iterations_since_reinit = 0;
                c.fevals_since_reinit = 0;
                c.step_failed = false;
                best.offer(&x, &e);
                b = scaled_identity(n, &e.gradient, cfg.initial_step);
                let rec = IterationRecord {
                    iteration: c.iterations,
                    fevals: c.fevals,
                    parts: e.parts,
                    value: e.value,
                    gradient_norm: projected_gradient_norm(&x, &e.gradient, cfg.lower, cfg.upper),
                    step: 0.0,
                    reinitialized: true,
                };
                observe(&rec, &x);
                history.push(rec);
                continue;
            }
            Decision::Continue => {}
        }

        let lo: Vec<f64> = x.iter().map(|xi| cfg.lower - xi).collect();
        let hi: Vec<f64> = x.iter().map(|xi| cfg.upper - xi).collect();
        let mut p = solve_qp_subproblem(&e.gradient, &b, &lo, &hi)?;
        let mut slope = dot(&e.gradient, &p);
        if !(slope < 0.0) {
            // the model lost descent: fall back to a fresh scaled identity
            b = scaled_identity(n, &e.gradient, cfg.initial_step);
            p = solve_qp_subproblem(&e.gradient, &b, &lo, &hi)?;
            slope = dot(&e.gradient, &p);
        }
        let mut fevals = 0usize;
        let mut failure = None;
        let search = line_search(
            |alpha| {
                let xt: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| (xi + alpha * pi).clamp(cfg.lower, cfg.upper)).collect();
                fevals += 1;
                match obj.eval(&xt) {
                    Ok(et) => Ok((et.value, Some((xt, et)))),
                    Err(err) if err.is_numerical() => Ok((f64::INFINITY, None)),
                    Err(err) => {
                        failure = Some(err.to_string());
                        Err(err)
                    }
                }
            },
            e.value,
            slope,
            cfg.armijo,
            cfg.min_step,
        );
        c.fevals += fevals;
        c.fevals_since_reinit += fevals;
        c.iterations += 1;
        c.iterations_since_reinit += 1;
        let accepted = match search {
            Ok(Some((_, _, Some(v)))) => Some(v),
            Ok(_) => None,
            Err(err) => {
                let r = StopReason::EvaluationFailed(failure.unwrap_or_else(|| err.to_string()));
                return Ok(finish(r, best, &c, reinits, history));
            }
        };
        let mut step = 0.0;
        let step_ok = match accepted {
            Some((xn, en)) => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = en.gradient.iter().zip(&e.gradient).map(|(a, b)| a - b).collect();
                step = inf_norm(&s);
                let ok = step > cfg.step_tolerance * (1.0 + inf_norm(&x));
                bfgs_update(&mut b, &s, &y);
                x = xn;
                e = en;
                best.offer(&x, &e);
                ok
            }
            None => false,
        };
        if step_ok {
            c.steptol_streak = 0;
            c.step_failed = false;
        } else {
            c.steptol_streak += 1;
            c.step_failed = true;
        }
        let rec = IterationRecord {
            iteration: c.iterations,
            fevals: c.fevals,
            parts: e.parts,
            value: e.value,
            gradient_norm: projected_gradient_norm(&x, &e.gradient, cfg.lower, cfg.upper),
            step,
            reinitialized: false,
        };
        observe(&rec, &x);
        history.push(rec);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_hessian_gives_gradient_step() {
        let h = Mat::<f64>::identity(3, 3);
        let g = [1.0, -2.0, 0.5];
        let inf = [f64::INFINITY; 3];
        let p = solve_qp_subproblem(&g, &h, &inf.map(|v| -v), &inf).unwrap();
        for i in 0..3 {
            assert!((p[i] + g[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_step_leaves_hessian() {
        let mut b = Mat::<f64>::identity(2, 2);
        bfgs_update(&mut b, &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(b, Mat::<f64>::identity(2, 2));
    }

    #[test]
    fn stop_on_objective_limit() {
        let c = SqpCounters { value: 1e-10, projected_gradient: 1.0, gradient_scale: 1.0, ..Default::default() };
        assert_eq!(check_stop(&c, &SqpConfig::default()), Decision::Stop(StopReason::ObjectiveLimit));
    }
}
