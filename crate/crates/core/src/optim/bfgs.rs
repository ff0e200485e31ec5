//! BFGS with a weak-Wolfe bracketing line search.

use super::{axpy, check_start, dot, norm2, Evaluation, Objective, OptOptions, OptResult, Phase, Tracker};
use crate::error::Result;

const MAX_BISECTIONS: usize = 30;
const MAX_DOUBLINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BfgsStop {
    GradientTolerance,
    LineSearchFailed,
    StepTooSmall,
    IterationLimit,
    Budget,
}

pub(crate) struct BfgsRun {
    pub x: Vec<f64>,
    pub eval: Evaluation,
    pub stop: BfgsStop,
    pub iters: usize,
}

enum LineSearch {
    Wolfe(f64, Evaluation),
    /// Wolfe conditions not met; carries the largest step that satisfied
    /// the sufficient-decrease condition, if any.
    Failed(Option<(f64, Evaluation)>),
}

/// Bracketing search for a step `t` with
/// `f(x + t p) < f(x) + c1 t g'p` and `g(x + t p)'p > c2 g'p`.
/// Steps landing on infeasible points shrink the bracket.
fn weak_wolfe<O: Objective + ?Sized>(
    tracker: &mut Tracker<'_, O>,
    x: &[f64],
    e0: &Evaluation,
    p: &[f64],
    c1: f64,
    c2: f64,
) -> LineSearch {
    let gp = dot(&e0.grad, p);
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut t = 1.0;
    let mut armijo: Option<(f64, Evaluation)> = None;
    let (mut nbisect, mut ndouble) = (0, 0);
    loop {
        let Some(e) = tracker.eval(&axpy(x, t, p)) else {
            return LineSearch::Failed(armijo);
        };
        if !(e.f < e0.f + c1 * t * gp) {
            hi = t;
        } else if dot(&e.grad, p) < c2 * gp {
            lo = t;
            armijo = Some((t, e));
        } else {
            return LineSearch::Wolfe(t, e);
        }
        if tracker.target_reached() {
            return LineSearch::Failed(armijo);
        }
        if hi.is_finite() {
            nbisect += 1;
            if nbisect > MAX_BISECTIONS {
                return LineSearch::Failed(armijo);
            }
            t = 0.5 * (lo + hi);
        } else {
            ndouble += 1;
            if ndouble > MAX_DOUBLINGS {
                return LineSearch::Failed(armijo);
            }
            t = 2.0 * lo;
        }
    }
}

/// Inverse-Hessian update `H <- (I - r s y') H (I - r y s') + r s s'`.
fn update_inverse(h: &mut [f64], n: usize, s: &[f64], y: &[f64], sy: f64) {
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    let c = rho * (1.0 + rho * yhy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += c * s[i] * s[j] - rho * (s[i] * hy[j] + hy[i] * s[j]);
        }
    }
}

fn identity(n: usize, scale: f64) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = scale;
    }
    h
}

pub(crate) fn run<O: Objective + ?Sized>(
    tracker: &mut Tracker<'_, O>,
    x0: Vec<f64>,
    e0: Evaluation,
    opts: &OptOptions,
) -> BfgsRun {
    let n = x0.len();
    let mut x = x0;
    let mut e = e0;
    let mut h = identity(n, 1.0);
    let mut first_update = true;
    let mut iters = 0;
    let stop = loop {
        if tracker.stopped() {
            break BfgsStop::Budget;
        }
        if norm2(&e.grad) <= opts.grad_norm_tol {
            break BfgsStop::GradientTolerance;
        }
        if iters >= opts.max_iters {
            break BfgsStop::IterationLimit;
        }
        iters += 1;
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &e.grad)).collect();
        if !(dot(&p, &e.grad) < 0.0) || p.iter().any(|v| !v.is_finite()) {
            // numerical breakdown: restart from steepest descent
            h = identity(n, 1.0);
            first_update = true;
            p = e.grad.iter().map(|g| -g).collect();
        }
        let (t, e_new) = match weak_wolfe(tracker, &x, &e, &p, opts.wolfe_c1, opts.wolfe_c2) {
            LineSearch::Wolfe(t, e_new) => (t, e_new),
            LineSearch::Failed(Some((t, e_new))) => {
                x = axpy(&x, t, &p);
                e = e_new;
                break BfgsStop::LineSearchFailed;
            }
            LineSearch::Failed(None) => break BfgsStop::LineSearchFailed,
        };
        let x_new = axpy(&x, t, &p);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = e_new.grad.iter().zip(&e.grad).map(|(a, b)| a - b).collect();
        let step = norm2(&s);
        x = x_new;
        e = e_new;
        if step <= f64::EPSILON * (1.0 + norm2(&x)) {
            break BfgsStop::StepTooSmall;
        }
        let sy = dot(&s, &y);
        if sy > 0.0 {
            if first_update {
                h = identity(n, sy / dot(&y, &y));
                first_update = false;
            }
            update_inverse(&mut h, n, &s, &y, sy);
        }
    };
    BfgsRun {
        x,
        eval: e,
        stop,
        iters,
    }
}

/// Runs BFGS from `x0`. The start must be feasible.
pub fn bfgs_nonsmooth<O: Objective + ?Sized>(oracle: &O, x0: &[f64], opts: &OptOptions) -> Result<OptResult> {
    opts.validate()?;
    let mut tracker = Tracker::new(oracle, opts);
    let e0 = check_start(&mut tracker, x0)?;
    let r = run(&mut tracker, x0.to_vec(), e0, opts);
    let measure = norm2(&tracker.best_grad);
    Ok(tracker.result(measure, Phase::BfgsOnly, r.iters))
}
