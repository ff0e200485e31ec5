//! Benchmark cases with published reference values, and the harness that
//! runs synthesis on them and re-certifies every result.
//!
//! Plant data is not bundled. A case whose plant file is missing from the
//! suite directory is reported as `data-unavailable` and does not count as
//! a failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis;
use crate::error::{Error, Result};
use crate::io;
use crate::statespace::{lft_closed_loop, pack, Controller, Plant};
use crate::synthesis::{synthesize, Status, SynthesisOptions};

/// Environment variable naming the default suite directory.
pub const SUITE_DIR_ENV: &str = "HINFSYN_SUITE_DIR";
pub const DEFAULT_SUITE_DIR: &str = "data/plants";
pub const DEFAULT_TOLERANCE: f64 = 0.05;
/// Tolerance of the independent re-check.
pub const RECHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Quick,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceValue {
    /// published result set the value belongs to, e.g. "compleib"
    pub source: &'static str,
    pub order: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkCase {
    pub name: &'static str,
    /// file name inside the suite directory
    pub plant_file: String,
    pub plant_order: usize,
    pub orders: Vec<usize>,
    pub reference_values: Vec<ReferenceValue>,
    pub tolerance_policy: f64,
    pub tier: Tier,
    /// `(order, controller file)` starting points that the case requires
    pub warm_starts: Vec<(usize, String)>,
}

impl BenchmarkCase {
    fn new(name: &'static str, plant_order: usize, tier: Tier, refs: &[(&'static str, usize, f64)]) -> Self {
        let reference_values: Vec<ReferenceValue> = refs
            .iter()
            .map(|&(source, order, norm)| ReferenceValue { source, order, norm })
            .collect();
        let mut orders: Vec<usize> = reference_values.iter().map(|r| r.order).collect();
        orders.sort_unstable();
        orders.dedup();
        Self {
            name,
            plant_file: format!("{name}.json"),
            plant_order,
            orders,
            reference_values,
            tolerance_policy: DEFAULT_TOLERANCE,
            tier,
            warm_starts: Vec::new(),
        }
    }

    fn with_warm_starts(mut self) -> Self {
        self.warm_starts = self
            .orders
            .iter()
            .map(|&k| (k, format!("{}_K{k}.json", self.name)))
            .collect();
        self
    }

    pub fn reference(&self, order: usize) -> Option<&ReferenceValue> {
        self.reference_values.iter().find(|r| r.order == order)
    }
}

/// All cases with their published fixed-order results.
pub fn builtin_cases() -> Vec<BenchmarkCase> {
    use Tier::{Large, Quick};
    vec![
        BenchmarkCase::new("AC8", 9, Quick, &[("compleib", 0, 2.005)]),
        BenchmarkCase::new("HE1", 4, Quick, &[("compleib", 0, 0.154)]),
        BenchmarkCase::new("REA2", 4, Quick, &[("compleib", 0, 1.149)]),
        BenchmarkCase::new("AC10", 55, Large, &[("compleib", 0, 12.83), ("compleib", 1, 10.338)]).with_warm_starts(),
        BenchmarkCase::new("BDT2", 82, Large, &[("compleib", 0, 0.6515)]),
        BenchmarkCase::new("HF1", 130, Large, &[("compleib", 0, 0.447)]),
        BenchmarkCase::new("CM4", 240, Large, &[("compleib", 0, 0.816)]),
        BenchmarkCase::new("VTOL", 4, Quick, &[("textbook", 0, 0.154)]),
        BenchmarkCase::new("CR", 4, Quick, &[("textbook", 0, 1.168)]),
        BenchmarkCase::new("PA", 5, Quick, &[("textbook", 0, 1.18e-4)]),
        BenchmarkCase::new(
            "Enns",
            8,
            Quick,
            &[
                ("enns", 7, 1.1655),
                ("enns", 6, 1.1447),
                ("enns", 5, 1.1508),
                ("enns", 4, 1.1923),
                ("enns", 3, 1.1921),
                ("enns", 2, 1.2438),
                ("enns", 1, 1.4256),
            ],
        ),
        BenchmarkCase::new(
            "HIMAT",
            20,
            Large,
            &[
                ("himat", 16, 1.01),
                ("himat", 15, 1.01),
                ("himat", 14, 1.01),
                ("himat", 13, 1.01),
                ("himat", 12, 1.01),
                ("himat", 11, 1.02),
                ("himat", 10, 1.03),
                ("himat", 7, 1.06),
                ("himat", 6, 1.07),
            ],
        ),
        BenchmarkCase::new("VSC", 4, Quick, &[("vsc", 0, 3.975)]),
        BenchmarkCase::new("AUV-speed", 3, Quick, &[("auv", 1, 0.9543)]),
        BenchmarkCase::new(
            "AUV-heading",
            5,
            Quick,
            &[("auv", 2, 0.9540), ("auv", 1, 0.9545), ("auv", 0, 0.9548)],
        ),
        BenchmarkCase::new("AUV-depth", 6, Quick, &[("auv", 1, 0.9621)]),
        BenchmarkCase::new(
            "Wang",
            4,
            Quick,
            &[("wang", 2, 50.642), ("wang", 1, 50.645), ("wang", 0, 50.879)],
        ),
    ]
}

/// Picks cases by name (case-insensitive) or by tier name (`quick`, `large`,
/// `all`).
pub fn select_cases(selectors: &[String]) -> Result<Vec<BenchmarkCase>> {
    let all = builtin_cases();
    if selectors.is_empty() {
        return Ok(all.into_iter().filter(|c| c.tier == Tier::Quick).collect());
    }
    let mut chosen: Vec<BenchmarkCase> = Vec::new();
    for s in selectors {
        let picked: Vec<BenchmarkCase> = match s.to_ascii_lowercase().as_str() {
            "all" => all.clone(),
            "quick" => all.iter().filter(|c| c.tier == Tier::Quick).cloned().collect(),
            "large" => all.iter().filter(|c| c.tier == Tier::Large).cloned().collect(),
            _ => {
                let c = all
                    .iter()
                    .find(|c| c.name.eq_ignore_ascii_case(s))
                    .ok_or_else(|| Error::InvalidOption(format!("unknown benchmark case {s:?}")))?;
                vec![c.clone()]
            }
        };
        for c in picked {
            if !chosen.iter().any(|x| x.name == c.name) {
                chosen.push(c);
            }
        }
    }
    Ok(chosen)
}

/// Suite directory from the environment, falling back to [`DEFAULT_SUITE_DIR`].
pub fn default_suite_dir() -> PathBuf {
    std::env::var_os(SUITE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_SUITE_DIR))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub runs: usize,
    pub cpumax_seconds: f64,
    pub rng_seed: u64,
    pub parallel: bool,
    /// restricts each case to these orders when set
    pub orders: Option<Vec<usize>>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            runs: 10,
            cpumax_seconds: 300.0,
            rng_seed: 0,
            parallel: true,
            orders: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryStatus {
    Pass,
    Fail,
    NoStabilizingController,
    RecheckFailed,
}

/// Independent re-check of a synthesized controller.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recheck {
    pub stable: bool,
    pub abscissa: f64,
    pub norm: f64,
    pub agrees: bool,
}

/// Rebuilds the closed loop from scratch and recomputes abscissa and norm.
pub fn recheck(plant: &Plant, k: &Controller, reported_norm: f64) -> Result<Recheck> {
    let cl = lft_closed_loop(plant, k)?;
    let abscissa = analysis::spectral_abscissa(cl.a())?.alpha;
    let stable = abscissa < 0.0;
    let norm = if stable {
        analysis::hinf_norm(&cl, RECHECK_TOL)?.gamma
    } else {
        f64::INFINITY
    };
    let agrees = stable && (norm - reported_norm).abs() <= 1e-6 * (1.0 + reported_norm);
    Ok(Recheck {
        stable,
        abscissa,
        norm,
        agrees,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEntry {
    pub order: usize,
    pub reference: Option<ReferenceValue>,
    /// largest norm accepted as a pass
    pub threshold: Option<f64>,
    pub achieved: Option<f64>,
    pub recheck: Option<Recheck>,
    pub status: EntryStatus,
    pub seeds: Vec<u64>,
    pub controller: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseStatus {
    Ran,
    DataUnavailable,
    InputError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub tier: Tier,
    pub status: CaseStatus,
    pub message: Option<String>,
    pub entries: Vec<OrderEntry>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.status == CaseStatus::Ran && self.entries.iter().all(|e| e.status == EntryStatus::Pass)
    }
}

fn unavailable(case: &BenchmarkCase, status: CaseStatus, message: String) -> CaseReport {
    CaseReport {
        name: case.name.to_string(),
        tier: case.tier,
        status,
        message: Some(message),
        entries: Vec::new(),
    }
}

/// Synthesizes every order of one case and compares against the reference.
pub fn run_benchmark(case: &BenchmarkCase, suite_dir: &Path, opts: &BenchOptions) -> CaseReport {
    let path = suite_dir.join(&case.plant_file);
    if !path.exists() {
        return unavailable(
            case,
            CaseStatus::DataUnavailable,
            format!("{} not found", path.display()),
        );
    }
    let plant = match io::load_plant(&path) {
        Ok(p) => p,
        Err(e) => return unavailable(case, CaseStatus::InputError, e.to_string()),
    };
    let orders: Vec<usize> = match &opts.orders {
        Some(o) => o.clone(),
        None => case.orders.clone(),
    };
    let mut entries = Vec::new();
    for order in orders {
        let warm = case
            .warm_starts
            .iter()
            .find(|(k, _)| *k == order)
            .map(|(_, f)| suite_dir.join(f));
        let warm_start = match warm {
            Some(p) if p.exists() => match io::load_controller(&p) {
                Ok(k) => Some(k),
                Err(e) => return unavailable(case, CaseStatus::InputError, e.to_string()),
            },
            Some(p) => {
                return unavailable(
                    case,
                    CaseStatus::DataUnavailable,
                    format!("warm start {} not found", p.display()),
                )
            }
            None => None,
        };
        let sopts = SynthesisOptions {
            order,
            runs: opts.runs,
            cpumax_seconds: opts.cpumax_seconds,
            rng_seed: opts.rng_seed,
            warm_start,
            parallel: opts.parallel,
            ..Default::default()
        };
        let reference = case.reference(order).cloned();
        let threshold = reference.as_ref().map(|r| r.norm * (1.0 + case.tolerance_policy));
        let result = match synthesize(&plant, &sopts) {
            Ok(r) => r,
            Err(e) => return unavailable(case, CaseStatus::InputError, e.to_string()),
        };
        let seeds = result.per_run.iter().map(|r| r.seed).collect();
        let entry = if result.status == Status::NoStabilizingController {
            OrderEntry {
                order,
                reference,
                threshold,
                achieved: None,
                recheck: None,
                status: EntryStatus::NoStabilizingController,
                seeds,
                controller: None,
            }
        } else {
            let check = recheck(&plant, &result.best, result.best_norm).ok();
            let status = match (&check, threshold) {
                (Some(c), _) if !c.agrees => EntryStatus::RecheckFailed,
                (None, _) => EntryStatus::RecheckFailed,
                (Some(_), Some(t)) if result.best_norm <= t => EntryStatus::Pass,
                (Some(_), None) => EntryStatus::Pass,
                _ => EntryStatus::Fail,
            };
            OrderEntry {
                order,
                reference,
                threshold,
                achieved: Some(result.best_norm),
                recheck: check,
                status,
                seeds,
                controller: Some(pack(&result.best).0),
            }
        };
        entries.push(entry);
    }
    CaseReport {
        name: case.name.to_string(),
        tier: case.tier,
        status: CaseStatus::Ran,
        message: None,
        entries,
    }
}

/// Machine-readable report: a JSON array with one object per case.
pub fn report_json(reports: &[CaseReport]) -> String {
    serde_json::to_string_pretty(reports).expect("report serializes")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

/// Human-readable table.
pub fn report_table(reports: &[CaseReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>5} {:>12} {:>12} {:>12}  status",
        "case", "order", "reference", "threshold", "achieved"
    );
    for r in reports {
        match r.status {
            CaseStatus::Ran => {
                for e in &r.entries {
                    let status = serde_json::to_value(e.status)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from));
                    let _ = writeln!(
                        out,
                        "{:<12} {:>5} {:>12} {:>12} {:>12}  {}",
                        r.name,
                        e.order,
                        fmt_opt(e.reference.as_ref().map(|x| x.norm)),
                        fmt_opt(e.threshold),
                        fmt_opt(e.achieved),
                        status.unwrap_or_default()
                    );
                }
            }
            CaseStatus::DataUnavailable | CaseStatus::InputError => {
                let label = if r.status == CaseStatus::DataUnavailable {
                    "data-unavailable"
                } else {
                    "input-error"
                };
                let _ = writeln!(
                    out,
                    "{:<12} {:>5} {:>12} {:>12} {:>12}  {label}",
                    r.name, "-", "-", "-", "-"
                );
            }
        }
    }
    out
}
