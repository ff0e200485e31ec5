//! Gradient sampling over a decreasing sequence of radii.

use super::hull::min_norm_convex_hull;
use super::{axpy, check_start, dot, norm2, Evaluation, Objective, OptOptions, OptResult, Phase, Tracker};
use crate::error::Result;
use crate::rng::{derive_seed, sample_ball, seeded};

const MAX_BACKTRACKS: usize = 50;

pub(crate) struct SamplingRun {
    pub measure: f64,
    pub iters: usize,
}

pub(crate) fn run<O: Objective + ?Sized>(
    tracker: &mut Tracker<'_, O>,
    x0: Vec<f64>,
    e0: Evaluation,
    opts: &OptOptions,
) -> SamplingRun {
    let dim = x0.len();
    let samples = opts.samples(dim);
    let mut rng = seeded(derive_seed(opts.rng_seed, 2));
    let mut x = x0;
    let mut e = e0;
    let mut measure = norm2(&e.grad);
    let mut iters = 0;

    for &r0 in &opts.sampling_radii {
        let radius = r0 * (1.0 + norm2(&x));
        for _ in 0..opts.max_iters {
            if tracker.stopped() {
                return SamplingRun { measure, iters };
            }
            iters += 1;
            let mut grads = vec![e.grad.clone()];
            for _ in 0..samples {
                let xs = sample_ball(&mut rng, &x, radius);
                match tracker.eval(&xs) {
                    Some(es) if es.f.is_finite() => grads.push(es.grad),
                    Some(_) => {}
                    None => return SamplingRun { measure, iters },
                }
            }
            let (d, _) = min_norm_convex_hull(&grads);
            measure = norm2(&d);
            if measure <= opts.grad_norm_tol {
                break;
            }
            let dd = dot(&d, &d);
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let xt = axpy(&x, -t, &d);
                let Some(et) = tracker.eval(&xt) else { break };
                if et.f < e.f - opts.wolfe_c1 * t * dd {
                    accepted = Some((xt, et));
                    break;
                }
                t *= 0.5;
            }
            match accepted {
                Some((xt, et)) => {
                    x = xt;
                    e = et;
                }
                None => break,
            }
        }
    }
    SamplingRun { measure, iters }
}

/// Runs only gradient sampling from `x0`.
pub fn gradient_sampling<O: Objective + ?Sized>(oracle: &O, x0: &[f64], opts: &OptOptions) -> Result<OptResult> {
    opts.validate()?;
    let mut tracker = Tracker::new(oracle, opts);
    let e0 = check_start(&mut tracker, x0)?;
    let r = run(&mut tracker, x0.to_vec(), e0, opts);
    Ok(tracker.result(r.measure, Phase::GradientSampling, r.iters))
}
