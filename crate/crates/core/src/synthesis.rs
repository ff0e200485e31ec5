//! Two-stage fixed-order synthesis: drive the closed-loop spectral abscissa
//! negative, then locally minimize the closed-loop H-infinity norm with
//! instability treated as an infinite barrier.

use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{self, AbscissaResult, NormResult};
use crate::error::{Error, Result};
use crate::gradients::{abscissa_gradient, hinf_gradient_with_tol};
use crate::optim::{hanso, Evaluation, OptOptions};
use crate::rng::{derive_seed, seeded, standard_normal_vec, SeededRng};
use crate::statespace::{lft_closed_loop, pack, unpack, Controller, ControllerDims, Plant};

/// Tolerance used when re-certifying a final controller.
pub const CERTIFY_TOL: f64 = 1e-10;

/// Budgets below this are treated as exhausted.
const MIN_STAGE_SECONDS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub order: usize,
    pub runs: usize,
    /// wall-clock budget for each run, both stages combined
    pub cpumax_seconds: f64,
    pub init_scale: f64,
    /// stage 1 stops once the abscissa is below `-stabilization_margin`
    pub stabilization_margin: f64,
    pub norm_rel_tol: f64,
    pub rng_seed: u64,
    /// used as the starting point of the first run
    pub warm_start: Option<Controller>,
    /// iteration cap for each optimizer phase
    pub max_iters: usize,
    pub parallel: bool,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            order: 0,
            runs: 10,
            cpumax_seconds: 300.0,
            init_scale: 1.0,
            stabilization_margin: 0.0,
            norm_rel_tol: analysis::DEFAULT_NORM_TOL,
            rng_seed: 0,
            warm_start: None,
            max_iters: 1000,
            parallel: true,
        }
    }
}

impl SynthesisOptions {
    fn validate(&self, plant: &Plant) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidOption("runs must be at least 1".into()));
        }
        if !(self.cpumax_seconds > 0.0) {
            return Err(Error::InvalidOption("cpumax must be positive".into()));
        }
        if !(self.init_scale >= 0.0) || !(self.stabilization_margin >= 0.0) {
            return Err(Error::InvalidOption("init_scale and margin must be nonnegative".into()));
        }
        if !(self.norm_rel_tol > 0.0 && self.norm_rel_tol <= 1e-2) {
            return Err(Error::InvalidOption("norm_rel_tol must lie in (0, 1e-2]".into()));
        }
        if let Some(k) = &self.warm_start {
            if k.dims() != plant.controller_dims(self.order) {
                return Err(Error::InvalidOption(format!(
                    "warm start has shape {:?}, expected {:?}",
                    k.dims(),
                    plant.controller_dims(self.order)
                )));
            }
        }
        if self.order > plant.dims().n {
            log::warn!("controller order {} exceeds plant order {}", self.order, plant.dims().n);
        }
        Ok(())
    }

    fn optimizer(&self, budget: f64, seed: u64, f_target: Option<f64>) -> OptOptions {
        OptOptions {
            max_iters: self.max_iters,
            cpu_budget_seconds: budget,
            rng_seed: seed,
            f_target,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NoStabilizingController,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub stage1_abscissa: f64,
    /// `+inf` when stage 1 failed
    pub stage2_norm: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub best: Controller,
    pub best_norm: f64,
    pub best_abscissa: f64,
    pub omega_peak: f64,
    pub per_run: Vec<RunRecord>,
    pub status: Status,
}

/// Controller with i.i.d. standard normal entries times `scale`.
pub fn random_controller(dims: ControllerDims, scale: f64, rng: &mut SeededRng) -> Controller {
    let values: Vec<f64> = standard_normal_vec(rng, dims.num_params())
        .into_iter()
        .map(|v| v * scale)
        .collect();
    unpack(&values, dims).expect("length matches dims")
}

fn closed_loop_abscissa(plant: &Plant, k: &Controller) -> Result<AbscissaResult> {
    analysis::spectral_abscissa(lft_closed_loop(plant, k)?.a())
}

fn minimize_abscissa(
    plant: &Plant,
    k0: &Controller,
    opts: &SynthesisOptions,
    budget: f64,
    seed: u64,
) -> Result<(Controller, AbscissaResult)> {
    let dims = k0.dims();
    let start = closed_loop_abscissa(plant, k0);
    if let Ok(a) = &start {
        if a.alpha < -opts.stabilization_margin {
            return Ok((k0.clone(), a.clone()));
        }
    }
    let objective = |theta: &[f64]| match unpack(theta, dims).and_then(|k| abscissa_gradient(plant, &k)) {
        Ok(r) => Evaluation {
            f: r.value,
            grad: r.grad,
        },
        Err(_) => Evaluation::infeasible(),
    };
    let best_alpha = start.as_ref().map(|a| a.alpha).unwrap_or(f64::INFINITY);
    let result = if budget > MIN_STAGE_SECONDS {
        let opt = opts.optimizer(budget, seed, Some(-opts.stabilization_margin));
        match hanso(&objective, &[pack(k0).0], &opt) {
            Ok(r) => Some(r),
            Err(Error::AllStartsInfeasible) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    match result {
        Some(r) if r.f_best < 0.0 => {
            let k = unpack(&r.x_best, dims)?;
            let a = closed_loop_abscissa(plant, &k)?;
            Ok((k, a))
        }
        Some(r) => Err(Error::NoStabilizingController(r.f_best.min(best_alpha))),
        None => Err(Error::NoStabilizingController(best_alpha)),
    }
}

/// Stage 1 from the warm start, or from a random controller drawn with
/// `opts.rng_seed`.
pub fn stabilize(plant: &Plant, opts: &SynthesisOptions) -> Result<(Controller, AbscissaResult)> {
    opts.validate(plant)?;
    let dims = plant.controller_dims(opts.order);
    let k0 = match &opts.warm_start {
        Some(k) => k.clone(),
        None => random_controller(dims, opts.init_scale, &mut seeded(opts.rng_seed)),
    };
    minimize_abscissa(plant, &k0, opts, opts.cpumax_seconds, derive_seed(opts.rng_seed, 1))
}

fn minimize_norm(
    plant: &Plant,
    k0: &Controller,
    opts: &SynthesisOptions,
    budget: f64,
    seed: u64,
) -> Result<(Controller, NormResult)> {
    let a0 = closed_loop_abscissa(plant, k0)?;
    if a0.alpha >= 0.0 {
        return Err(Error::NotStabilizing(a0.alpha));
    }
    let dims = k0.dims();
    let tol = opts.norm_rel_tol;
    let objective = |theta: &[f64]| match unpack(theta, dims).and_then(|k| hinf_gradient_with_tol(plant, &k, tol)) {
        Ok(r) => Evaluation {
            f: r.value,
            grad: r.grad,
        },
        Err(_) => Evaluation::infeasible(),
    };
    let opt = opts.optimizer(budget.max(MIN_STAGE_SECONDS), seed, None);
    let k = match hanso(&objective, &[pack(k0).0], &opt) {
        Ok(r) => unpack(&r.x_best, dims)?,
        // the norm itself could not be evaluated at the start
        Err(Error::AllStartsInfeasible) => k0.clone(),
        Err(e) => return Err(e),
    };
    let norm = analysis::hinf_norm(&lft_closed_loop(plant, &k)?, CERTIFY_TOL)?;
    Ok((k, norm))
}

/// Stage 2 from a stabilizing controller. The returned norm is recomputed
/// at [`CERTIFY_TOL`].
pub fn optimize_performance(
    plant: &Plant,
    k0: &Controller,
    opts: &SynthesisOptions,
) -> Result<(Controller, NormResult)> {
    opts.validate(plant)?;
    minimize_norm(plant, k0, opts, opts.cpumax_seconds, derive_seed(opts.rng_seed, 2))
}

struct RunOutcome {
    record: RunRecord,
    controller: Controller,
    abscissa: f64,
    omega_peak: f64,
}

fn single_run(plant: &Plant, opts: &SynthesisOptions, index: usize) -> Result<RunOutcome> {
    let start = Instant::now();
    let seed = derive_seed(opts.rng_seed, index as u64);
    let dims = plant.controller_dims(opts.order);
    let k0 = match (&opts.warm_start, index) {
        (Some(k), 0) => k.clone(),
        _ => random_controller(dims, opts.init_scale, &mut seeded(seed)),
    };
    let stage1 = minimize_abscissa(plant, &k0, opts, opts.cpumax_seconds, derive_seed(seed, 1));
    let (k1, a1) = match stage1 {
        Ok(v) => v,
        Err(Error::NoStabilizingController(alpha)) => {
            return Ok(RunOutcome {
                record: RunRecord {
                    seed,
                    stage1_abscissa: alpha,
                    stage2_norm: f64::INFINITY,
                    elapsed_seconds: start.elapsed().as_secs_f64(),
                },
                controller: k0,
                abscissa: alpha,
                omega_peak: 0.0,
            });
        }
        Err(e) => return Err(e),
    };
    let remaining = opts.cpumax_seconds - start.elapsed().as_secs_f64();
    let (k2, norm) = minimize_norm(plant, &k1, opts, remaining, derive_seed(seed, 2))?;
    let a2 = closed_loop_abscissa(plant, &k2)?;
    Ok(RunOutcome {
        record: RunRecord {
            seed,
            stage1_abscissa: a1.alpha,
            stage2_norm: norm.gamma,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
        controller: k2,
        abscissa: a2.alpha,
        omega_peak: norm.omega_peak,
    })
}

/// Independent randomized runs of both stages; returns the controller with
/// the smallest certified norm. Runs are ordered by index in `per_run`
/// whether or not they execute in parallel.
pub fn synthesize(plant: &Plant, opts: &SynthesisOptions) -> Result<SynthesisResult> {
    opts.validate(plant)?;
    let outcomes: Vec<Result<RunOutcome>> = if opts.parallel {
        (0..opts.runs)
            .into_par_iter()
            .map(|r| single_run(plant, opts, r))
            .collect()
    } else {
        (0..opts.runs).map(|r| single_run(plant, opts, r)).collect()
    };
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let best_idx = (0..outcomes.len())
        .filter(|&i| outcomes[i].record.stage2_norm.is_finite())
        .min_by(|&i, &j| {
            outcomes[i]
                .record
                .stage2_norm
                .total_cmp(&outcomes[j].record.stage2_norm)
        });
    let (idx, status) = match best_idx {
        Some(i) => (i, Status::Success),
        None => {
            let i = (0..outcomes.len())
                .min_by(|&i, &j| outcomes[i].abscissa.total_cmp(&outcomes[j].abscissa))
                .unwrap_or(0);
            (i, Status::NoStabilizingController)
        }
    };
    let best = &outcomes[idx];
    Ok(SynthesisResult {
        best: best.controller.clone(),
        best_norm: best.record.stage2_norm,
        best_abscissa: best.abscissa,
        omega_peak: best.omega_peak,
        per_run: outcomes.iter().map(|o| o.record.clone()).collect(),
        status,
    })
}
