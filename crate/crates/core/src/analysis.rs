//! Stability and performance functionals: spectral abscissa and H-infinity
//! norm.
//!
//! The norm uses the two-step level-set iteration: for a level `gamma`
//! above `sigma_max(D)` the imaginary-axis eigenvalues of the associated
//! Hamiltonian matrix are exactly the frequencies where some singular value
//! of `G(jw)` equals `gamma`. Evaluating `G` at the midpoints of the
//! resulting intervals gives a new, larger level, and the iteration stops once
//! the Hamiltonian has no imaginary eigenvalues at `(1 + 2 tol) gamma`. The
//! peak frequency is then polished with a bracketed secant search on
//! `d sigma_max / d omega` so that the returned value is accurate to working
//! precision at smooth peaks.

use faer::{c64, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Matrix, Resolvent};
use crate::statespace::{transfer_with, StateSpace};

/// Default relative tolerance of [`hinf_norm`].
pub const DEFAULT_NORM_TOL: f64 = 1e-7;

/// Relative tie tolerance used to report active eigenvalues.
pub const TIE_TOL: f64 = 1e-8;

const MAX_LEVEL_ITERS: usize = 60;

/// Levels within this relative distance of `sigma_max(D)` use the extended
/// pencil instead of the Hamiltonian.
const NEAR_FEEDTHROUGH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct AbscissaResult {
    /// maximum real part of the eigenvalues
    pub alpha: f64,
    /// indices (into `eigenvalues`) within the tie tolerance of `alpha`
    pub active_indices: Vec<usize>,
    pub eigenvalues: Vec<c64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormResult {
    pub gamma: f64,
    /// frequency (rad/s) of the peak; 0 when the peak is at infinity
    pub omega_peak: f64,
    /// the supremum is approached as omega -> infinity, i.e. set by `D`
    pub attained_at_infinity: bool,
}

pub fn spectral_abscissa(a: MatRef<'_, f64>) -> Result<AbscissaResult> {
    if a.nrows() != a.ncols() {
        return Err(Error::dims("A", (a.nrows(), a.nrows()), (a.nrows(), a.ncols())));
    }
    let eigenvalues = linalg::eigenvalues(a)?;
    Ok(abscissa_from_eigenvalues(eigenvalues))
}

pub(crate) fn abscissa_from_eigenvalues(eigenvalues: Vec<c64>) -> AbscissaResult {
    let alpha = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let tie = TIE_TOL * (1.0 + alpha.abs());
    let active_indices = eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| l.re >= alpha - tie)
        .map(|(i, _)| i)
        .collect();
    AbscissaResult {
        alpha,
        active_indices,
        eigenvalues,
    }
}

/// True iff every eigenvalue has strictly negative real part.
pub fn is_stable(a: MatRef<'_, f64>) -> Result<bool> {
    Ok(a.nrows() == 0 || spectral_abscissa(a)?.alpha < 0.0)
}

/// Value and frequency derivative of `sigma_max(G(j omega))`.
struct FreqEval {
    sigma: f64,
    slope: f64,
}

struct Evaluator<'a> {
    sys: &'a StateSpace,
    b: CMatrix,
    c: CMatrix,
}

impl<'a> Evaluator<'a> {
    fn new(sys: &'a StateSpace) -> Self {
        Self {
            sys,
            b: linalg::to_complex(sys.b()),
            c: linalg::to_complex(sys.c()),
        }
    }

    fn sigma(&self, omega: f64) -> Result<f64> {
        let res = Resolvent::new(self.sys.a(), c64::new(0.0, omega))?;
        linalg::csigma_max(transfer_with(self.sys, &res).as_ref())
    }

    fn sigma_and_slope(&self, omega: f64) -> Result<FreqEval> {
        let res = Resolvent::new(self.sys.a(), c64::new(0.0, omega))?;
        let x = res.solve(self.b.as_ref());
        let g = linalg::cmul(self.c.as_ref(), x.as_ref()) + linalg::to_complex(self.sys.d());
        let (sigma, u, v, _) = linalg::top_singular_triplet(g.as_ref())?;
        // dG/domega = -j C R^2 B
        let y = res.solve(x.as_ref());
        let cy = linalg::cmul(self.c.as_ref(), y.as_ref());
        let mut acc = c64::new(0.0, 0.0);
        for i in 0..cy.nrows() {
            let mut row = c64::new(0.0, 0.0);
            for j in 0..cy.ncols() {
                row += cy[(i, j)] * v[j];
            }
            acc += u[i].conj() * row;
        }
        let slope = (c64::new(0.0, -1.0) * acc).re;
        Ok(FreqEval { sigma, slope })
    }
}

/// H-infinity norm of a stable system to relative accuracy `rel_tol`.
pub fn hinf_norm(sys: &StateSpace, rel_tol: f64) -> Result<NormResult> {
    if !(rel_tol > 0.0 && rel_tol <= 1e-2) {
        return Err(Error::InvalidOption(format!(
            "rel_tol must lie in (0, 1e-2], got {rel_tol}"
        )));
    }
    let abscissa = spectral_abscissa(sys.a())?;
    if sys.order() > 0 && abscissa.alpha >= 0.0 {
        return Err(Error::UnstableSystem(abscissa.alpha));
    }
    let sigma_d = linalg::sigma_max(sys.d())?;
    let at_infinity = NormResult {
        gamma: sigma_d,
        omega_peak: 0.0,
        attained_at_infinity: true,
    };
    if sys.order() == 0 || linalg::is_zero(sys.b()) || linalg::is_zero(sys.c()) {
        return Ok(at_infinity);
    }

    let eval = Evaluator::new(sys);
    let mut best = at_infinity;
    let consider = |omega: f64, best: &mut NormResult| -> Result<()> {
        let s = eval.sigma(omega)?;
        if s > best.gamma {
            *best = NormResult {
                gamma: s,
                omega_peak: omega,
                attained_at_infinity: false,
            };
        }
        Ok(())
    };
    for omega in initial_frequencies(&abscissa.eigenvalues) {
        consider(omega, &mut best)?;
    }
    if best.gamma == 0.0 {
        return Ok(best);
    }

    let mut converged = false;
    for _ in 0..MAX_LEVEL_ITERS {
        let level = (1.0 + 2.0 * rel_tol) * best.gamma;
        let crossings = match imaginary_crossings(sys, level) {
            Ok(c) => c,
            Err(_) => {
                grid_search(&eval, &abscissa.eigenvalues, &mut best)?;
                converged = true;
                break;
            }
        };
        let crossings: Vec<f64> = crossings
            .into_iter()
            .filter(|&w| is_genuine_crossing(sys, w, level))
            .collect();
        if crossings.is_empty() {
            converged = true;
            break;
        }
        let before = best.gamma;
        let mut nodes = Vec::with_capacity(crossings.len() + 1);
        nodes.push(0.0);
        nodes.extend(crossings);
        for pair in nodes.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
            consider(mid, &mut best)?;
        }
        if best.gamma <= before {
            // midpoints missed the peak; search inside the intervals
            for pair in nodes.windows(2) {
                golden_max(&eval, pair[0], pair[1], 40, &mut best)?;
            }
            if best.gamma <= before {
                // crossings are eigen-solver noise around an already located
                // peak; the polish step below settles it
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::ToleranceNotMet {
            lower: best.gamma,
            upper: f64::INFINITY,
            omega: best.omega_peak,
        });
    }
    if !best.attained_at_infinity {
        polish_peak(&eval, &mut best)?;
    }
    Ok(best)
}

/// Relative height gap between the peak in `norm` and the highest competing
/// local peak, when one lies within `window * gamma` of it. Returns 1 when
/// there is no competitor in the window.
pub(crate) fn competing_peak_gap(sys: &StateSpace, norm: &NormResult, window: f64) -> Result<f64> {
    let gamma = norm.gamma;
    let level = (1.0 - window) * gamma;
    let sigma_d = linalg::sigma_max(sys.d())?;
    let mut gap: f64 = 1.0;
    if sigma_d >= level {
        gap = gap.min((gamma - sigma_d) / gamma);
        return Ok(gap);
    }
    let Ok(crossings) = imaginary_crossings(sys, level) else {
        return Ok(0.0);
    };
    let eval = Evaluator::new(sys);
    let mut nodes = vec![0.0];
    nodes.extend(crossings.into_iter().filter(|&w| is_genuine_crossing(sys, w, level)));
    for pair in nodes.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if lo <= norm.omega_peak && norm.omega_peak <= hi {
            continue;
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if eval.sigma(mid)? > level {
            let mut local = NormResult {
                gamma: 0.0,
                omega_peak: mid,
                attained_at_infinity: false,
            };
            golden_max(&eval, lo, hi, 30, &mut local)?;
            gap = gap.min(((gamma - local.gamma) / gamma).max(0.0));
        }
    }
    Ok(gap)
}

/// Zero, the most lightly damped pole frequency and a few other resonant
/// frequencies as initial lower-bound probes.
fn initial_frequencies(eigenvalues: &[c64]) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut resonant: Vec<(f64, f64)> = eigenvalues
        .iter()
        .filter(|l| l.im > 0.0)
        .map(|l| ((l.im / l.re).abs() / l.norm().max(f64::MIN_POSITIVE), l.norm()))
        .collect();
    resonant.sort_by(|a, b| b.0.total_cmp(&a.0));
    out.extend(resonant.iter().take(8).map(|r| r.1));
    if resonant.is_empty() {
        if let Some(slowest) = eigenvalues
            .iter()
            .map(|l| l.norm())
            .filter(|m| *m > 0.0)
            .reduce(f64::min)
        {
            out.push(slowest);
        }
    }
    out
}

/// Nonnegative imaginary parts of the imaginary-axis eigenvalues of the
/// Hamiltonian at level `gamma`, sorted ascending.
fn imaginary_crossings(sys: &StateSpace, gamma: f64) -> Result<Vec<f64>> {
    let sigma_d = linalg::sigma_max(sys.d())?;
    let (scale, values) = if gamma <= (1.0 + NEAR_FEEDTHROUGH) * sigma_d {
        let (m, e) = extended_pencil(sys, gamma);
        (
            frobenius(m.as_ref()).max(1.0),
            linalg::generalized_eigenvalues(m.as_ref(), e.as_ref())?,
        )
    } else {
        let h = hamiltonian(sys, gamma)?;
        (frobenius(h.as_ref()).max(1.0), linalg::eigenvalues(h.as_ref())?)
    };
    let mut out: Vec<f64> = values
        .iter()
        .filter(|l| l.im >= 0.0 && l.re.abs() <= 1e-7 * l.norm().max(1e-6 * scale) + 1e-13 * scale)
        .map(|l| l.im)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
    Ok(out)
}

fn frobenius(m: MatRef<'_, f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    s.sqrt()
}

/// Pencil `(M, E)` with the same finite spectrum as the Hamiltonian but no
/// inverse of `D^T D - gamma^2 I`, which is ill-conditioned near
/// `sigma_max(D)`.
fn extended_pencil(sys: &StateSpace, gamma: f64) -> (Matrix, Matrix) {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let (n, m, p) = (sys.order(), sys.inputs(), sys.outputs());
    let size = 2 * n + m + p;
    let (y0, u0, v0) = (n, 2 * n, 2 * n + m);
    let mut mm = Matrix::zeros(size, size);
    for i in 0..n {
        for j in 0..n {
            mm[(i, j)] = a[(i, j)];
            mm[(y0 + i, y0 + j)] = -a[(j, i)];
        }
        for j in 0..m {
            mm[(i, u0 + j)] = b[(i, j)];
            mm[(u0 + j, y0 + i)] = b[(i, j)];
        }
        for j in 0..p {
            mm[(y0 + i, v0 + j)] = -c[(j, i)];
            mm[(v0 + j, i)] = c[(j, i)];
        }
    }
    for i in 0..p {
        for j in 0..m {
            mm[(v0 + i, u0 + j)] = d[(i, j)];
            mm[(u0 + j, v0 + i)] = d[(i, j)];
        }
        mm[(v0 + i, v0 + i)] = -gamma;
    }
    for j in 0..m {
        mm[(u0 + j, u0 + j)] = -gamma;
    }
    let mut e = Matrix::zeros(size, size);
    for i in 0..2 * n {
        e[(i, i)] = 1.0;
    }
    (mm, e)
}

/// Hamiltonian whose imaginary eigenvalues `j w` mark `gamma` as a singular
/// value of `G(j w)`. Requires `gamma > sigma_max(D)`.
pub(crate) fn hamiltonian(sys: &StateSpace, gamma: f64) -> Result<Matrix> {
    let (a, b, c, d) = (sys.a(), sys.b(), sys.c(), sys.d());
    let n = sys.order();
    let (m, p) = (sys.inputs(), sys.outputs());
    let g2 = gamma * gamma;
    let r = linalg::mul(d.transpose(), d) - Matrix::identity(m, m) * faer::Scale(g2);
    let s = linalg::mul(d, d.transpose()) - Matrix::identity(p, p) * faer::Scale(g2);
    let r_inv = linalg::inverse(r.as_ref()).ok_or(Error::EigenFailure)?;
    let s_inv = linalg::inverse(s.as_ref()).ok_or(Error::EigenFailure)?;
    let b_rinv = linalg::mul(b, r_inv.as_ref());
    let h11 = a.to_owned() - linalg::mul(linalg::mul(b_rinv.as_ref(), d.transpose()).as_ref(), c);
    let h12 = linalg::mul(b_rinv.as_ref(), b.transpose()) * faer::Scale(-gamma);
    let h21 = linalg::mul(linalg::mul(c.transpose(), s_inv.as_ref()).as_ref(), c) * faer::Scale(gamma);
    let h22 = linalg::mul(linalg::mul(c.transpose(), d).as_ref(), b_rinv.transpose()) - a.transpose();
    Ok(Matrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => h11[(i, j)],
        (true, false) => h12[(i, j - n)],
        (false, true) => h21[(i - n, j)],
        (false, false) => h22[(i - n, j - n)],
    }))
}

/// A crossing is genuine when `gamma` is (nearly) a singular value of `G(jw)`.
fn is_genuine_crossing(sys: &StateSpace, omega: f64, gamma: f64) -> bool {
    let Ok(res) = Resolvent::new(sys.a(), c64::new(0.0, omega)) else {
        return false;
    };
    let g = transfer_with(sys, &res);
    match g.singular_values() {
        Ok(s) => s.iter().any(|&si| (si - gamma).abs() <= 1e-3 * gamma),
        Err(_) => true,
    }
}

fn golden_max(eval: &Evaluator<'_>, lo: f64, hi: f64, iters: usize, best: &mut NormResult) -> Result<()> {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval.sigma(x1)?;
    let mut f2 = eval.sigma(x2)?;
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval.sigma(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval.sigma(x1)?;
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best.gamma {
            *best = NormResult {
                gamma: f,
                omega_peak: x,
                attained_at_infinity: false,
            };
        }
    }
    Ok(())
}

/// Fallback when the Hamiltonian eigenproblem fails: dense logarithmic grid
/// around the pole magnitudes followed by golden-section refinement.
fn grid_search(eval: &Evaluator<'_>, eigenvalues: &[c64], best: &mut NormResult) -> Result<()> {
    let mags: Vec<f64> = eigenvalues.iter().map(|l| l.norm()).filter(|m| *m > 0.0).collect();
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min).min(1.0) * 1e-3;
    let hi = mags.iter().copied().fold(0.0, f64::max).max(1.0) * 1e3;
    const POINTS: usize = 2000;
    let ratio = (hi / lo).powf(1.0 / (POINTS - 1) as f64);
    let grid: Vec<f64> = (0..POINTS).map(|k| lo * ratio.powi(k as i32)).collect();
    let mut values = Vec::with_capacity(POINTS);
    for &w in &grid {
        values.push(eval.sigma(w)?);
    }
    let k = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    if values[k] > best.gamma {
        *best = NormResult {
            gamma: values[k],
            omega_peak: grid[k],
            attained_at_infinity: false,
        };
    }
    let a = if k == 0 { 0.0 } else { grid[k - 1] };
    let b = grid[(k + 1).min(POINTS - 1)];
    golden_max(eval, a, b, 60, best)
}

/// Locates the stationary point of `sigma_max(G(jw))` near the current peak
/// and keeps it when it is higher.
fn polish_peak(eval: &Evaluator<'_>, best: &mut NormResult) -> Result<()> {
    let mut w0 = best.omega_peak;
    let mut f0 = eval.sigma_and_slope(w0)?;
    if w0 == 0.0 {
        // zero is stationary by symmetry; a rising slope just to the right
        // means the peak lies further out
        w0 = 1e-6;
        f0 = eval.sigma_and_slope(w0)?;
        if f0.slope <= 0.0 {
            return Ok(());
        }
    }
    if f0.slope == 0.0 {
        return Ok(());
    }
    let scale = w0.max(1e-8);
    let mut step = 1e-4 * scale;
    let (mut a, mut fa) = (w0, f0.slope);
    let mut b;
    let mut fb;
    let mut bracketed = false;
    let mut iters = 0;
    loop {
        iters += 1;
        b = if f0.slope > 0.0 { a + step } else { (a - step).max(0.0) };
        let e = eval.sigma_and_slope(b)?;
        if e.sigma > best.gamma {
            *best = NormResult {
                gamma: e.sigma,
                omega_peak: b,
                attained_at_infinity: false,
            };
        }
        fb = e.slope;
        if b == 0.0 {
            // the slope vanishes at zero by symmetry, so zero is no bracket end
            break;
        }
        if fb == 0.0 {
            return Ok(());
        }
        if fb.signum() != fa.signum() {
            bracketed = true;
            break;
        }
        if iters > 60 {
            break;
        }
        a = b;
        fa = fb;
        step *= 2.0;
    }
    if !bracketed {
        if b == 0.0 {
            let s0 = eval.sigma(0.0)?;
            if s0 > best.gamma {
                *best = NormResult {
                    gamma: s0,
                    omega_peak: 0.0,
                    attained_at_infinity: false,
                };
            }
            golden_max(eval, 0.0, a, 100, best)?;
        }
        return Ok(());
    }
    // Illinois variant of regula falsi on the slope
    let mut side = 0i8;
    for _ in 0..80 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if c.is_finite() && c > a.min(b) && c < a.max(b) {
            c
        } else {
            0.5 * (a + b)
        };
        let e = eval.sigma_and_slope(c)?;
        // ties move the peak to the slope root; the value is flat there
        if e.sigma >= best.gamma {
            *best = NormResult {
                gamma: e.sigma,
                omega_peak: c,
                attained_at_infinity: false,
            };
        }
        if e.slope == 0.0 {
            break;
        }
        if e.slope.signum() == fb.signum() {
            b = c;
            fb = e.slope;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = e.slope;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(())
}
