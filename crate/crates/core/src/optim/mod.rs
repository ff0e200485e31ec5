//! Nonsmooth, nonconvex local minimization.
//!
//! Three phases share one evaluation budget:
//!
//! 1. BFGS with an inexact weak-Wolfe line search ([`bfgs_nonsmooth`]),
//!    which works well on nonsmooth functions even though its inverse
//!    Hessian approximation becomes very ill-conditioned near a kink.
//! 2. A lightweight bundle verifier ([`bundle_phase`]) that collects
//!    gradients near the incumbent and tests whether a convex combination of
//!    them is small.
//! 3. Gradient sampling ([`gradient_sampling`]) over decreasing radii.
//!
//! [`hanso`] chains them. Infeasible points are signalled by an objective
//! value of `+inf`; line searches shrink away from them and sampled points
//! there are discarded.
//!
//! The reported optimality measure is the norm of the smallest convex
//! combination of the gradients gathered around the final point. It is a
//! heuristic certificate, not a bound on distance to a minimizer.

mod bfgs;
mod bundle;
mod hull;
mod sampling;

use std::time::{Duration, Instant};

pub use bfgs::bfgs_nonsmooth;
pub use bundle::{bundle_phase, BundleStatus};
pub use hull::min_norm_convex_hull;
pub use sampling::gradient_sampling;

use crate::error::{Error, Result};

/// Function value and gradient at a point. `f = +inf` marks infeasibility,
/// in which case `grad` is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub f: f64,
    pub grad: Vec<f64>,
}

impl Evaluation {
    pub fn infeasible() -> Self {
        Self {
            f: f64::INFINITY,
            grad: Vec::new(),
        }
    }
}

/// Objective oracle: `x -> (f(x), grad f(x))`.
pub trait Objective {
    fn evaluate(&self, x: &[f64]) -> Evaluation;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> Evaluation,
{
    fn evaluate(&self, x: &[f64]) -> Evaluation {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptOptions {
    /// iteration cap for each phase
    pub max_iters: usize,
    /// wall-clock budget shared by all phases
    pub cpu_budget_seconds: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub grad_norm_tol: f64,
    /// sampling radii, each scaled by `1 + |x|`
    pub sampling_radii: Vec<f64>,
    /// defaults to `2 * dim`
    pub samples_per_iter: Option<usize>,
    /// defaults to `min(2 * dim, 100)`
    pub bundle_size: Option<usize>,
    pub rng_seed: u64,
    /// stop as soon as a point with `f < f_target` is found
    pub f_target: Option<f64>,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            cpu_budget_seconds: 300.0,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.5,
            grad_norm_tol: 1e-6,
            sampling_radii: vec![1e-3, 1e-4, 1e-5],
            samples_per_iter: None,
            bundle_size: None,
            rng_seed: 0,
            f_target: None,
        }
    }
}

impl OptOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidOption(msg.to_string()));
        if !(0.0 < self.wolfe_c1 && self.wolfe_c1 < self.wolfe_c2 && self.wolfe_c2 < 1.0) {
            return bad("Wolfe parameters must satisfy 0 < c1 < c2 < 1");
        }
        if !(self.cpu_budget_seconds > 0.0) || self.max_iters == 0 {
            return bad("budgets must be positive");
        }
        if !(self.grad_norm_tol >= 0.0) {
            return bad("grad_norm_tol must be nonnegative");
        }
        if self.sampling_radii.iter().any(|r| !(*r > 0.0)) {
            return bad("sampling radii must be positive");
        }
        Ok(())
    }

    fn samples(&self, dim: usize) -> usize {
        self.samples_per_iter.unwrap_or(2 * dim).max(1)
    }

    fn bundle_capacity(&self, dim: usize) -> usize {
        self.bundle_size.unwrap_or((2 * dim).min(100)).max(2)
    }
}

/// Furthest phase an optimization run reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    BfgsOnly,
    Bundle,
    GradientSampling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub optimality_measure: f64,
    pub phase_reached: Phase,
    pub iters: usize,
    pub evaluations: usize,
    pub elapsed_seconds: f64,
}

/// Wraps the oracle with budget accounting and best-point tracking.
pub(crate) struct Tracker<'a, O: Objective + ?Sized> {
    oracle: &'a O,
    start: Instant,
    deadline: Instant,
    target: Option<f64>,
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub best_grad: Vec<f64>,
    pub evaluations: usize,
    pub out_of_budget: bool,
}

impl<'a, O: Objective + ?Sized> Tracker<'a, O> {
    pub fn new(oracle: &'a O, opts: &OptOptions) -> Self {
        let start = Instant::now();
        let budget = Duration::try_from_secs_f64(opts.cpu_budget_seconds).unwrap_or(Duration::MAX);
        Self {
            oracle,
            start,
            deadline: start
                .checked_add(budget)
                .unwrap_or(start + Duration::from_secs(u32::MAX as u64)),
            target: opts.f_target,
            best_x: Vec::new(),
            best_f: f64::INFINITY,
            best_grad: Vec::new(),
            evaluations: 0,
            out_of_budget: false,
        }
    }

    /// Evaluates the oracle unless the budget is exhausted. NaN values are
    /// treated as infeasible.
    pub fn eval(&mut self, x: &[f64]) -> Option<Evaluation> {
        if self.out_of_budget || Instant::now() >= self.deadline {
            self.out_of_budget = true;
            return None;
        }
        let mut e = self.oracle.evaluate(x);
        self.evaluations += 1;
        if !e.f.is_finite() || e.grad.len() != x.len() || e.grad.iter().any(|g| !g.is_finite()) {
            e = Evaluation::infeasible();
        }
        if e.f < self.best_f {
            self.best_f = e.f;
            self.best_x = x.to_vec();
            self.best_grad = e.grad.clone();
        }
        Some(e)
    }

    pub fn target_reached(&self) -> bool {
        matches!(self.target, Some(t) if self.best_f < t)
    }

    /// True once no further work should be done.
    pub fn stopped(&self) -> bool {
        self.out_of_budget || self.target_reached()
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub fn result(&self, optimality_measure: f64, phase: Phase, iters: usize) -> OptResult {
        OptResult {
            x_best: self.best_x.clone(),
            f_best: self.best_f,
            optimality_measure,
            phase_reached: phase,
            iters,
            evaluations: self.evaluations,
            elapsed_seconds: self.elapsed(),
        }
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(x: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + t * di).collect()
}

fn check_start<O: Objective + ?Sized>(tracker: &mut Tracker<'_, O>, x0: &[f64]) -> Result<Evaluation> {
    match tracker.eval(x0) {
        Some(e) if e.f.is_finite() => Ok(e),
        Some(_) => Err(Error::InfeasibleStart),
        None => Err(Error::InvalidOption(
            "budget exhausted before the first evaluation".into(),
        )),
    }
}

/// BFGS from every start, then bundle verification of the best point, then
/// gradient sampling if verification fails. All phases share the budget.
pub fn hanso<O: Objective + ?Sized>(oracle: &O, starts: &[Vec<f64>], opts: &OptOptions) -> Result<OptResult> {
    opts.validate()?;
    let mut tracker = Tracker::new(oracle, opts);
    let mut best: Option<(Vec<f64>, Evaluation, bfgs::BfgsStop)> = None;
    let mut iters = 0;
    for x0 in starts {
        if tracker.stopped() {
            break;
        }
        let Some(e0) = tracker.eval(x0) else { break };
        if !e0.f.is_finite() {
            continue;
        }
        let run = bfgs::run(&mut tracker, x0.clone(), e0, opts);
        iters += run.iters;
        if best.as_ref().is_none_or(|b| run.eval.f < b.1.f) {
            best = Some((run.x, run.eval, run.stop));
        }
    }
    let Some((x, e, stop)) = best else {
        return Err(if tracker.out_of_budget {
            Error::InvalidOption("budget exhausted".into())
        } else {
            Error::AllStartsInfeasible
        });
    };
    if tracker.stopped() || stop == bfgs::BfgsStop::GradientTolerance {
        return Ok(tracker.result(norm2(&e.grad), Phase::BfgsOnly, iters));
    }

    let bundle = bundle::run(&mut tracker, x, e, opts);
    iters += bundle.iters;
    if bundle.status == BundleStatus::Verified || tracker.stopped() {
        return Ok(tracker.result(bundle.measure, Phase::Bundle, iters));
    }

    let gs = sampling::run(&mut tracker, bundle.x, bundle.eval, opts);
    iters += gs.iters;
    Ok(tracker.result(gs.measure, Phase::GradientSampling, iters))
}
