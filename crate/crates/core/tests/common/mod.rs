//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use hinfsyn_core::linalg::{self, Matrix};
use hinfsyn_core::{analysis, lft_closed_loop, pack, unpack, Controller, Plant, PlantBlocks, StateSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random plant whose `A` has spectral abscissa at most `-margin`.
pub fn random_plant(rng: &mut ChaCha8Rng, n: usize, m1: usize, m2: usize, p1: usize, p2: usize, d22: bool) -> Plant {
    let mut a = randn(rng, n, n);
    let alpha = analysis::spectral_abscissa(a.as_ref()).unwrap().alpha;
    let shift = alpha + 0.5 + rng.random::<f64>();
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let d22 = if d22 {
        randn(rng, p2, m2) * faer::Scale(0.3)
    } else {
        Matrix::zeros(p2, m2)
    };
    Plant::new(PlantBlocks {
        a,
        b1: randn(rng, n, m1),
        b2: randn(rng, n, m2),
        c1: randn(rng, p1, n),
        c2: randn(rng, p2, n),
        d11: randn(rng, p1, m1) * faer::Scale(0.5),
        d12: randn(rng, p1, m2) * faer::Scale(0.5),
        d21: randn(rng, p2, m1) * faer::Scale(0.5),
        d22,
    })
    .unwrap()
}

/// Random controller of the given order with a stable `AK`.
pub fn random_controller(rng: &mut ChaCha8Rng, plant: &Plant, order: usize, scale: f64) -> Controller {
    let dims = plant.controller_dims(order);
    let mut v: Vec<f64> = (0..dims.num_params())
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    for i in 0..order {
        v[i * order + i] -= 2.0;
    }
    unpack(&v, dims).unwrap()
}

pub fn random_stable_system(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> StateSpace {
    let mut a = randn(rng, n, n);
    let alpha = analysis::spectral_abscissa(a.as_ref()).unwrap().alpha;
    let shift = alpha + 0.05 + rng.random::<f64>();
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    StateSpace::new(
        a,
        randn(rng, n, m),
        randn(rng, p, n),
        randn(rng, p, m) * faer::Scale(0.3),
    )
    .unwrap()
}

/// Central finite difference of `f` along `dir` with step `1e-6 (1 + |theta|)`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64], dir: &[f64]) -> f64 {
    let scale = theta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = 1e-6 * (1.0 + scale);
    let plus: Vec<f64> = theta.iter().zip(dir).map(|(t, d)| t + h * d).collect();
    let minus: Vec<f64> = theta.iter().zip(dir).map(|(t, d)| t - h * d).collect();
    (f(&plus) - f(&minus)) / (2.0 * h)
}

pub fn abscissa_of(plant: &Plant, k: &Controller) -> f64 {
    let cl = lft_closed_loop(plant, k).unwrap();
    analysis::spectral_abscissa(cl.a()).unwrap().alpha
}

pub fn hinf_of(plant: &Plant, k: &Controller) -> f64 {
    let cl = lft_closed_loop(plant, k).unwrap();
    analysis::hinf_norm(&cl, 1e-9).unwrap().gamma
}

pub fn unit_direction(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn params(k: &Controller) -> Vec<f64> {
    pack(k).0
}

/// Dense log grid on [1e-6, 1e6] plus golden-section refinement around the
/// largest grid-local maxima: an oracle for the H-infinity norm independent
/// of the Hamiltonian iteration.
pub fn grid_hinf_oracle(sys: &StateSpace, points: usize) -> f64 {
    let sigma = |w: f64| -> f64 {
        let g = hinfsyn_core::transfer_eval(sys, faer::c64::new(0.0, w)).unwrap();
        linalg::csigma_max(g.as_ref()).unwrap()
    };
    let (lo, hi) = (1e-6f64, 1e6f64);
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    let grid: Vec<f64> = (0..points).map(|k| lo * ratio.powi(k as i32)).collect();
    let values: Vec<f64> = grid.iter().map(|&w| sigma(w)).collect();
    let mut top = sigma(0.0).max(linalg::sigma_max(sys.d()).unwrap());
    top = values.iter().copied().fold(top, f64::max);

    let mut peaks: Vec<usize> = (0..points)
        .filter(|&k| (k == 0 || values[k] >= values[k - 1]) && (k + 1 == points || values[k] >= values[k + 1]))
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    peaks.truncate(5);
    let phi = 0.618_033_988_749_895;
    for k in peaks {
        let (mut a, mut b) = (grid[k] / ratio, grid[k] * ratio);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (sigma(x1), sigma(x2));
        while (b - a) > 1e-10 * b {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = sigma(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = sigma(x1);
            }
        }
        top = top.max(f1).max(f2);
    }
    top
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact min-norm point by enumerating every face of the simplex and
/// solving the equality-constrained problem on it with a KKT system.
pub fn face_enumeration_oracle(points: &[Vec<f64>]) -> f64 {
    let m = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        let mut kkt = nalgebra::DMatrix::<f64>::zeros(k + 1, k + 1);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                kkt[(a, b)] = points[i].iter().zip(&points[j]).map(|(x, y)| x * y).sum();
            }
            kkt[(a, k)] = 1.0;
            kkt[(k, a)] = 1.0;
        }
        let mut rhs = nalgebra::DVector::<f64>::zeros(k + 1);
        rhs[k] = 1.0;
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        if (0..k).any(|a| sol[a] < -1e-12) {
            continue;
        }
        let mut d = vec![0.0; points[0].len()];
        for (a, &i) in idx.iter().enumerate() {
            for (dr, pr) in d.iter_mut().zip(&points[i]) {
                *dr += sol[a] * pr;
            }
        }
        best = best.min(norm(&d));
    }
    best
}

/// Smallest norm over a uniform simplex grid with the given number of steps.
pub fn simplex_grid_min(points: &[Vec<f64>], steps: usize) -> f64 {
    fn rec(points: &[Vec<f64>], steps: usize, i: usize, left: usize, acc: &mut Vec<f64>, best: &mut f64) {
        let w = |c: usize| c as f64 / steps as f64;
        if i == points.len() - 1 {
            let d: Vec<f64> = acc.iter().zip(&points[i]).map(|(a, p)| a + w(left) * p).collect();
            *best = best.min(norm(&d));
            return;
        }
        for c in 0..=left {
            for (a, p) in acc.iter_mut().zip(&points[i]) {
                *a += w(c) * p;
            }
            rec(points, steps, i + 1, left - c, acc, best);
            for (a, p) in acc.iter_mut().zip(&points[i]) {
                *a -= w(c) * p;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(points, steps, 0, steps, &mut vec![0.0; points[0].len()], &mut best);
    best
}
