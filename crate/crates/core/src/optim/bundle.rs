//! Cheap local verification: gather gradients near the incumbent and look
//! for a small convex combination, taking descent steps when one is found.

use super::hull::min_norm_convex_hull;
use super::{axpy, check_start, dot, norm2, Evaluation, Objective, OptOptions, OptResult, Phase, Tracker};
use crate::error::Result;
use crate::rng::{derive_seed, sample_ball, seeded};

const MAX_BACKTRACKS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BundleStatus {
    /// a convex combination of nearby gradients is below tolerance
    Verified,
    /// the incumbent moved but was not verified
    Improved,
    Inconclusive,
}

pub(crate) struct BundleRun {
    pub x: Vec<f64>,
    pub eval: Evaluation,
    pub status: BundleStatus,
    pub measure: f64,
    pub iters: usize,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn run<O: Objective + ?Sized>(
    tracker: &mut Tracker<'_, O>,
    x0: Vec<f64>,
    e0: Evaluation,
    opts: &OptOptions,
) -> BundleRun {
    let dim = x0.len();
    let cap = opts.bundle_capacity(dim);
    let radius = opts.sampling_radii[0] * (1.0 + norm2(&x0));
    let mut rng = seeded(derive_seed(opts.rng_seed, 1));
    let mut x = x0;
    let mut e = e0;
    let mut bundle: Vec<(Vec<f64>, Vec<f64>)> = vec![(x.clone(), e.grad.clone())];
    while bundle.len() < cap && !tracker.stopped() {
        let xs = sample_ball(&mut rng, &x, radius);
        match tracker.eval(&xs) {
            Some(es) if es.f.is_finite() => bundle.push((xs, es.grad)),
            _ => {}
        }
    }
    let mut improved = false;
    let mut measure = norm2(&e.grad);
    let mut iters = 0;
    let mut verified = false;

    while iters < (3 * cap).min(opts.max_iters) && !tracker.stopped() {
        iters += 1;
        let grads: Vec<Vec<f64>> = bundle
            .iter()
            .filter(|(p, _)| distance(p, &x) <= radius)
            .map(|(_, g)| g.clone())
            .collect();
        let (d, _) = min_norm_convex_hull(&grads);
        measure = norm2(&d);
        if measure <= opts.grad_norm_tol {
            verified = true;
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
            if et.f.is_finite() && distance(&xt, &x) <= radius {
                bundle.push((xt, et.grad));
            }
            t *= 0.5;
        }
        match accepted {
            Some((xt, et)) => {
                x = xt;
                e = et;
                improved = true;
                bundle.retain(|(p, _)| distance(p, &x) <= radius);
                bundle.push((x.clone(), e.grad.clone()));
            }
            None => {
                let xs = sample_ball(&mut rng, &x, radius);
                if let Some(es) = tracker.eval(&xs) {
                    if es.f.is_finite() {
                        bundle.push((xs, es.grad));
                    }
                }
            }
        }
        while bundle.len() > cap {
            bundle.remove(0);
        }
    }
    let status = if verified {
        BundleStatus::Verified
    } else if improved {
        BundleStatus::Improved
    } else {
        BundleStatus::Inconclusive
    };
    BundleRun {
        x,
        eval: e,
        status,
        measure,
        iters,
    }
}

/// Runs only the bundle phase from `x0`.
pub fn bundle_phase<O: Objective + ?Sized>(
    oracle: &O,
    x0: &[f64],
    opts: &OptOptions,
) -> Result<(OptResult, BundleStatus)> {
    opts.validate()?;
    let mut tracker = Tracker::new(oracle, opts);
    let e0 = check_start(&mut tracker, x0)?;
    let r = run(&mut tracker, x0.to_vec(), e0, opts);
    Ok((tracker.result(r.measure, Phase::Bundle, r.iters), r.status))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verifies_kink_minimizer() {
        let f = |x: &[f64]| Evaluation {
            f: x[0].abs(),
            grad: vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }],
        };
        let (r, status) = bundle_phase(&f, &[1e-9], &OptOptions::default()).unwrap();
        assert_eq!(status, BundleStatus::Verified, "{r:?}");
        assert!(r.optimality_measure <= 1e-6);
    }

    #[test]
    fn verifies_infinity_norm_at_origin() {
        let f = |x: &[f64]| {
            let i = if x[0].abs() >= x[1].abs() { 0 } else { 1 };
            let mut g = vec![0.0; 2];
            g[i] = if x[i] >= 0.0 { 1.0 } else { -1.0 };
            Evaluation { f: x[i].abs(), grad: g }
        };
        let (r, status) = bundle_phase(&f, &[0.0, 0.0], &OptOptions::default()).unwrap();
        assert_eq!(status, BundleStatus::Verified, "{r:?}");
        assert!(r.optimality_measure <= 1e-6);
    }

    #[test]
    fn moves_away_from_non_stationary_point() {
        let f = |x: &[f64]| Evaluation {
            f: x[0],
            grad: vec![1.0],
        };
        let (r, status) = bundle_phase(&f, &[0.0], &OptOptions::default()).unwrap();
        assert_eq!(status, BundleStatus::Improved);
        assert!(r.f_best < 0.0);
    }
}
