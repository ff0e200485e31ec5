mod common;

use std::cell::RefCell;

use common::{face_enumeration_oracle, norm, simplex_grid_min};

use hinfsyn_core::optim::{
    bfgs_nonsmooth, bundle_phase, gradient_sampling, hanso, min_norm_convex_hull, Evaluation, OptOptions,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_points(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0 + 0.3).collect())
        .collect()
}

#[test]
fn min_norm_hull_matches_oracles_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..50 {
        let pts = random_points(&mut rng, 5, 3);
        let (d, w) = min_norm_convex_hull(&pts);
        let exact = face_enumeration_oracle(&pts);
        assert!(
            (norm(&d) - exact).abs() <= 1e-10,
            "trial {trial}: {} vs {exact}",
            norm(&d)
        );
        // brute force grid can only be worse than the true minimum
        let grid = simplex_grid_min(&pts, 50);
        assert!(norm(&d) <= grid + 1e-12, "trial {trial}");
        assert!((grid - norm(&d)).abs() <= 1e-1, "trial {trial}");
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        assert!(w.iter().all(|&x| x >= -1e-10));
    }
}

#[test]
fn min_norm_hull_of_opposite_pair_is_origin() {
    let g = vec![0.3, -1.2, 2.0];
    let neg: Vec<f64> = g.iter().map(|x| -x).collect();
    let (d, w) = min_norm_convex_hull(&[g, neg]);
    assert!(norm(&d) < 1e-15);
    assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn hull_output_is_on_simplex_and_no_longer_than_inputs(
        pts in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 4), 1..12)
    ) {
        let (d, w) = min_norm_convex_hull(&pts);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!(w.iter().all(|&x| x >= -1e-10));
        let nd = norm(&d);
        for p in &pts {
            prop_assert!(nd <= norm(p) * (1.0 + 1e-12) + 1e-14);
        }
    }
}

fn abs1(x: &[f64]) -> Evaluation {
    Evaluation {
        f: x[0].abs(),
        grad: vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }],
    }
}

fn inf_norm(x: &[f64]) -> Evaluation {
    let mut i = 0;
    for j in 1..x.len() {
        if x[j].abs() > x[i].abs() {
            i = j;
        }
    }
    let mut g = vec![0.0; x.len()];
    g[i] = if x[i] >= 0.0 { 1.0 } else { -1.0 };
    Evaluation { f: x[i].abs(), grad: g }
}

fn rosenbrock(x: &[f64]) -> Evaluation {
    let (a, b) = (x[0], x[1]);
    Evaluation {
        f: 100.0 * (b - a * a).powi(2) + (1.0 - a).powi(2),
        grad: vec![-400.0 * a * (b - a * a) - 2.0 * (1.0 - a), 200.0 * (b - a * a)],
    }
}

fn max_plus_quadratic(x: &[f64]) -> Evaluation {
    let q = 0.5 * (x[0] * x[0] + x[1] * x[1]);
    let (f, mut g) = if x[0] >= x[1] {
        (x[0], vec![1.0, 0.0])
    } else {
        (x[1], vec![0.0, 1.0])
    };
    g[0] += x[0];
    g[1] += x[1];
    Evaluation { f: f + q, grad: g }
}

#[test]
fn rosenbrock_reaches_minimizer() {
    let opts = OptOptions {
        grad_norm_tol: 1e-12,
        max_iters: 500,
        ..Default::default()
    };
    let r = bfgs_nonsmooth(&rosenbrock, &[-1.2, 1.0], &opts).unwrap();
    assert!(r.iters <= 500);
    assert!(r.x_best.iter().all(|v| (v - 1.0).abs() <= 1e-8), "{r:?}");
}

#[test]
fn quadratic_from_origin_in_few_iterations() {
    let f = |x: &[f64]| Evaluation {
        f: (x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2),
        grad: vec![2.0 * (x[0] - 1.0), 2.0 * (x[1] - 2.0)],
    };
    let r = bfgs_nonsmooth(&f, &[0.0, 0.0], &OptOptions::default()).unwrap();
    assert!(r.f_best <= 1e-12 && r.iters <= 50, "{r:?}");
}

#[test]
fn absolute_value_is_minimized_and_certified() {
    let r = hanso(&abs1, &[vec![1.0]], &OptOptions::default()).unwrap();
    assert!(r.f_best <= 1e-6, "{r:?}");
    assert!(r.optimality_measure <= 1e-4, "{r:?}");
}

#[test]
fn infinity_norm_is_minimized_and_certified() {
    let r = hanso(&inf_norm, &[vec![1.0, -0.6, 0.25]], &OptOptions::default()).unwrap();
    assert!(r.f_best <= 1e-6, "{r:?}");
    assert!(r.optimality_measure <= 1e-4, "{r:?}");
}

#[test]
fn gradient_sampling_on_quadratic_from_unit_ball() {
    let f = |x: &[f64]| Evaluation {
        f: x.iter().map(|v| v * v).sum(),
        grad: x.iter().map(|v| 2.0 * v).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let x0: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
        let r = gradient_sampling(&f, &x0, &OptOptions::default()).unwrap();
        assert!(r.f_best <= 1e-8, "{r:?}");
    }
}

#[test]
fn max_plus_quadratic_is_stationary_per_subgradient_grid() {
    let r = gradient_sampling(&max_plus_quadratic, &[1.0, 1.0 + 1e-4], &OptOptions::default()).unwrap();
    assert!(r.optimality_measure <= 1e-4, "{r:?}");
    // the subdifferential at x is conv{(1,0)+x, (0,1)+x} when x1 = x2; check
    // its distance to zero on a fine weight grid
    let x = &r.x_best;
    let best = (0..=1000)
        .map(|k| {
            let w = k as f64 / 1000.0;
            ((w + x[0]).powi(2) + (1.0 - w + x[1]).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best <= 1e-3, "{x:?} {best}");
}

#[test]
fn hanso_is_bitwise_deterministic() {
    let opts = OptOptions {
        rng_seed: 99,
        ..Default::default()
    };
    let starts = vec![vec![1.0, -0.6, 0.25], vec![-0.4, 0.9, 0.1]];
    let a = hanso(&inf_norm, &starts, &opts).unwrap();
    let b = hanso(&inf_norm, &starts, &opts).unwrap();
    assert_eq!(
        a.x_best.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.x_best.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(a.f_best.to_bits(), b.f_best.to_bits());
    assert_eq!(a.optimality_measure.to_bits(), b.optimality_measure.to_bits());
}

#[test]
fn best_value_bounds_every_visited_point_and_stays_feasible() {
    let log = RefCell::new(Vec::new());
    let f = |x: &[f64]| {
        let e = if x[0] + x[1] > 3.0 {
            Evaluation::infeasible()
        } else {
            max_plus_quadratic(x)
        };
        log.borrow_mut().push(e.f);
        e
    };
    let r = hanso(&f, &[vec![1.0, 1.5]], &OptOptions::default()).unwrap();
    assert!(r.f_best.is_finite());
    let min_seen = log.borrow().iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(r.f_best, min_seen);
}

#[test]
fn budget_is_respected() {
    let slow = |x: &[f64]| {
        std::thread::sleep(std::time::Duration::from_millis(5));
        max_plus_quadratic(x)
    };
    let opts = OptOptions {
        cpu_budget_seconds: 0.2,
        ..Default::default()
    };
    let r = hanso(&slow, &[vec![1.0, 1.0 + 1e-4]], &opts).unwrap();
    assert!(r.elapsed_seconds <= 0.2 + 0.05, "{}", r.elapsed_seconds);
}

/// Random convex piecewise-linear function `max_i (a_i x + b_i)`.
fn piecewise_linear(rng: &mut ChaCha8Rng, dim: usize, pieces: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let a = (0..pieces)
        .map(|_| (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
        .collect();
    let b = (0..pieces).map(|_| rng.random::<f64>()).collect();
    (a, b)
}

#[test]
fn bundle_and_sampling_measures_agree_on_piecewise_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let dim = 6;
    for trial in 0..20 {
        let (a, b) = piecewise_linear(&mut rng, dim, 8);
        let eval = |x: &[f64]| {
            let vals: Vec<f64> = a
                .iter()
                .zip(&b)
                .map(|(ai, bi)| ai.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + bi)
                .collect();
            let i = (0..vals.len()).max_by(|&p, &q| vals[p].total_cmp(&vals[q])).unwrap();
            Evaluation {
                f: vals[i],
                grad: a[i].clone(),
            }
        };
        // put x on the kink between the two leading pieces at a random point
        let mut x: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        let vals: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(ai, bi)| ai.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() + bi)
            .collect();
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&p, &q| vals[q].total_cmp(&vals[p]));
        let (i, j) = (order[0], order[1]);
        let diff: Vec<f64> = a[i].iter().zip(&a[j]).map(|(p, q)| p - q).collect();
        let gap = vals[i] - vals[j];
        let dd: f64 = diff.iter().map(|v| v * v).sum();
        for (xr, dr) in x.iter_mut().zip(&diff) {
            *xr -= gap / dd * dr;
        }
        let opts = OptOptions {
            max_iters: 1,
            rng_seed: trial,
            ..Default::default()
        };
        let (br, _) = bundle_phase(&eval, &x, &opts).unwrap();
        let gs = gradient_sampling(&eval, &x, &opts).unwrap();
        let ratio = br.optimality_measure / gs.optimality_measure;
        assert!(
            (0.1..=10.0).contains(&ratio),
            "trial {trial}: {} vs {}",
            br.optimality_measure,
            gs.optimality_measure
        );
    }
}
