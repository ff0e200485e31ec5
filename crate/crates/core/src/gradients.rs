//! Analytic gradients of the closed-loop spectral abscissa and H-infinity
//! norm with respect to the packed controller parameters.
//!
//! Both functionals are nonsmooth where the active eigenvalue or the peak
//! singular value is not unique. At such points a deterministic choice is
//! made (first active eigenvalue by index, leading singular triplet, global
//! peak) and the report carries a [`Smoothness::NearTie`] hint. The
//! optimizers never branch on the hint.

use faer::c64;

use crate::analysis::{self, NormResult, DEFAULT_NORM_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Matrix, Resolvent};
use crate::statespace::{Controller, Interconnection, Plant, StateSpace, DEFAULT_ILLPOSED_CAP};

/// Relative gap below which a point is reported as a near tie.
pub const NEAR_TIE_GAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    NearTie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub value: f64,
    /// gradient in [`crate::ParamVector`] layout
    pub grad: Vec<f64>,
    pub hint: Smoothness,
    /// relative distance to the nearest competing active element
    pub tie_gap: f64,
}

impl GradientReport {
    fn new(value: f64, grad: Vec<f64>, tie_gap: f64) -> Self {
        let hint = if tie_gap < NEAR_TIE_GAP {
            Smoothness::NearTie
        } else {
            Smoothness::Smooth
        };
        Self {
            value,
            grad,
            hint,
            tie_gap,
        }
    }
}

/// `G[i][j] = Re(alpha_i beta_j)`, the real gradient of `Re(alpha^T dQ beta)`.
fn outer_re(alpha: &[c64], beta: &[c64]) -> Matrix {
    Matrix::from_fn(alpha.len(), beta.len(), |i, j| (alpha[i] * beta[j]).re)
}

/// Spectral abscissa of the closed loop and its gradient, from the
/// eigenvalue perturbation formula `d lambda = y^H dA x / (y^H x)`.
pub fn abscissa_gradient(plant: &Plant, k: &Controller) -> Result<GradientReport> {
    let ic = Interconnection::new(plant, k, DEFAULT_ILLPOSED_CAP)?;
    let a_cl = ic.closed.a();
    let eig = linalg::eigen_left_right(a_cl)?;
    let values = &eig.values;
    let alpha = values.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let tie = analysis::TIE_TOL * (1.0 + alpha.abs());
    let idx = values
        .iter()
        .position(|l| l.re >= alpha - tie)
        .ok_or(Error::EigenFailure)?;
    let lambda = values[idx];

    // competing eigenvalues exclude the selected one and its conjugate
    let gap = values
        .iter()
        .enumerate()
        .filter(|&(j, l)| j != idx && !(lambda.im != 0.0 && (*l - lambda.conj()).norm() <= tie))
        .map(|(_, l)| (lambda - *l).norm())
        .fold(f64::INFINITY, f64::min);
    let tie_gap = gap / (1.0 + lambda.norm());

    let n = a_cl.nrows();
    let x: Vec<c64> = (0..n).map(|i| eig.right[(i, idx)]).collect();
    let y: Vec<c64> = (0..n).map(|i| eig.left[(i, idx)]).collect();
    let yx: c64 = (0..n).map(|i| y[i].conj() * x[i]).sum();
    if yx.norm() == 0.0 || !yx.is_finite() {
        return Err(Error::EigenFailure);
    }
    let b2 = ic.b2_aug.as_ref();
    let c2 = ic.c2_aug.as_ref();
    let alpha_row: Vec<c64> = (0..b2.ncols())
        .map(|j| (0..n).map(|i| y[i].conj() * b2[(i, j)]).sum::<c64>() / yx)
        .collect();
    let beta: Vec<c64> = (0..c2.nrows())
        .map(|i| (0..n).map(|j| x[j] * c2[(i, j)]).sum())
        .collect();
    let grad = ic.chain_to_params(&outer_re(&alpha_row, &beta));
    Ok(GradientReport::new(lambda.re, grad, tie_gap))
}

/// Closed-loop H-infinity norm and its gradient at the peak frequency.
pub fn hinf_gradient(plant: &Plant, k: &Controller) -> Result<GradientReport> {
    hinf_gradient_with_tol(plant, k, DEFAULT_NORM_TOL)
}

pub fn hinf_gradient_with_tol(plant: &Plant, k: &Controller, rel_tol: f64) -> Result<GradientReport> {
    let ic = Interconnection::new(plant, k, DEFAULT_ILLPOSED_CAP)?;
    let cl = &ic.closed;
    let norm = analysis::hinf_norm(cl, rel_tol)?;
    hinf_gradient_at(&ic, &norm)
}

fn hinf_gradient_at(ic: &Interconnection, norm: &NormResult) -> Result<GradientReport> {
    let cl = &ic.closed;
    let d12 = linalg::to_complex(ic.d12_aug.as_ref());
    let d21 = linalg::to_complex(ic.d21_aug.as_ref());
    let (t, p_left, p_right) = if norm.attained_at_infinity {
        (linalg::to_complex(cl.d()), d12, d21)
    } else {
        let res = Resolvent::new(cl.a(), c64::new(0.0, norm.omega_peak))?;
        let b_cl = linalg::to_complex(cl.b());
        let c_cl = linalg::to_complex(cl.c());
        let x = res.solve(b_cl.as_ref());
        let t = linalg::cmul(c_cl.as_ref(), x.as_ref()) + linalg::to_complex(cl.d());
        let p_right = linalg::cmul(linalg::to_complex(ic.c2_aug.as_ref()).as_ref(), x.as_ref()) + d21;
        let w_t = res.solve_transpose(c_cl.transpose().to_owned().as_ref());
        let p_left = d12 + linalg::cmul(w_t.transpose(), linalg::to_complex(ic.b2_aug.as_ref()).as_ref());
        (t, p_left, p_right)
    };
    let (s1, u, v, s2) = linalg::top_singular_triplet(t.as_ref())?;
    let alpha_row = row_times(&u, &p_left);
    let beta = mat_times(&p_right, &v);
    let grad = ic.chain_to_params(&outer_re(&alpha_row, &beta));

    let mut tie_gap = if s1 > 0.0 { (s1 - s2) / s1 } else { 0.0 };
    if !norm.attained_at_infinity {
        tie_gap = tie_gap.min(analysis::competing_peak_gap(cl, norm, NEAR_TIE_GAP)?);
    }
    Ok(GradientReport::new(norm.gamma, grad, tie_gap))
}

/// `u^H M`
fn row_times(u: &[c64], m: &CMatrix) -> Vec<c64> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| u[i].conj() * m[(i, j)]).sum())
        .collect()
}

/// `M v`
fn mat_times(m: &CMatrix, v: &[c64]) -> Vec<c64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// Closed-loop state-space realization, re-exported here for callers that
/// evaluate the objective and its gradient at the same point.
pub fn closed_loop(plant: &Plant, k: &Controller) -> Result<StateSpace> {
    Ok(Interconnection::new(plant, k, DEFAULT_ILLPOSED_CAP)?.closed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;
    use crate::statespace::{pack, unpack, PlantBlocks};

    fn scalar(v: f64) -> Matrix {
        from_rows(1, 1, &[vec![v]])
    }

    #[test]
    fn diagonal_plant_abscissa_gradient_is_indicator() {
        let eye = Matrix::identity(2, 2);
        let plant = Plant::new(PlantBlocks {
            a: from_rows(2, 2, &[vec![-1.0, 0.0], vec![0.0, -3.0]]),
            b1: eye.clone(),
            b2: eye.clone(),
            c1: eye.clone(),
            c2: eye.clone(),
            d11: Matrix::zeros(2, 2),
            d12: Matrix::zeros(2, 2),
            d21: Matrix::zeros(2, 2),
            d22: Matrix::zeros(2, 2),
        })
        .unwrap();
        let k = Controller::zeros(plant.controller_dims(0));
        let r = abscissa_gradient(&plant, &k).unwrap();
        assert_eq!(r.value, -1.0);
        assert_eq!(r.hint, Smoothness::Smooth);
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (g, e) in r.grad.iter().zip(expected) {
            assert!((g - e).abs() < 1e-14, "{:?}", r.grad);
        }
    }

    #[test]
    fn memoryless_loop_gradient_is_d_path() {
        let (d11, d12, d21, dk) = (0.5, 2.0, 3.0, 0.25);
        let plant = Plant::new(PlantBlocks {
            a: scalar(-1.0),
            b1: scalar(1.0),
            b2: scalar(1.0),
            c1: scalar(0.0),
            c2: scalar(0.0),
            d11: scalar(d11),
            d12: scalar(d12),
            d21: scalar(d21),
            d22: scalar(0.0),
        })
        .unwrap();
        let k = Controller::static_gain(scalar(dk)).unwrap();
        let r = hinf_gradient(&plant, &k).unwrap();
        let d_cl: f64 = d11 + d12 * dk * d21;
        assert!((r.value - d_cl.abs()).abs() < 1e-14);
        assert!((r.grad[0] - d12 * d21 * d_cl.signum()).abs() < 1e-12);
    }

    #[test]
    fn decoupled_controller_states_have_zero_gradient() {
        let plant = Plant::new(PlantBlocks {
            a: from_rows(2, 2, &[vec![-1.0, 2.0], vec![0.0, -3.0]]),
            b1: from_rows(2, 1, &[vec![1.0], vec![1.0]]),
            b2: from_rows(2, 1, &[vec![0.0], vec![1.0]]),
            c1: from_rows(1, 2, &[vec![1.0, 0.5]]),
            c2: from_rows(1, 2, &[vec![1.0, 1.0]]),
            d11: scalar(0.0),
            d12: scalar(0.1),
            d21: scalar(0.2),
            d22: scalar(0.0),
        })
        .unwrap();
        let dims = plant.controller_dims(2);
        let mut v = pack(&Controller::zeros(dims)).0;
        // AK entries (first four) stable, BK = CK = 0, DK fixed
        v[0] = -2.0;
        v[1] = 0.3;
        v[2] = -0.4;
        v[3] = -1.5;
        *v.last_mut().unwrap() = -0.3;
        let k = unpack(&v, dims).unwrap();
        let r = hinf_gradient(&plant, &k).unwrap();
        for g in &r.grad[0..4] {
            assert!(g.abs() < 1e-12, "{:?}", r.grad);
        }
    }

    #[test]
    fn unstable_loop_is_rejected_by_hinf_gradient() {
        let plant = Plant::new(PlantBlocks {
            a: scalar(1.0),
            b1: scalar(1.0),
            b2: scalar(1.0),
            c1: scalar(1.0),
            c2: scalar(1.0),
            d11: scalar(0.0),
            d12: scalar(0.0),
            d21: scalar(0.0),
            d22: scalar(0.0),
        })
        .unwrap();
        let k = Controller::static_gain(scalar(0.0)).unwrap();
        assert!(matches!(hinf_gradient(&plant, &k), Err(Error::UnstableSystem(_))));
        let r = abscissa_gradient(&plant, &k).unwrap();
        assert_eq!(r.value, 1.0);
        assert!((r.grad[0] - 1.0).abs() < 1e-14);
    }
}
