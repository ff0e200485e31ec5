//! `hinfsyn`: norms, abscissas, synthesis and benchmarks from the shell.
//!
//! Exit status is 0 on success, 1 when synthesis finds no stabilizing
//! controller or a benchmark entry fails, and 2 on input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hinfsyn_core::analysis::{self, DEFAULT_NORM_TOL};
use hinfsyn_core::bench::{self, BenchOptions, CaseStatus};
use hinfsyn_core::io::{self, SystemData};
use hinfsyn_core::synthesis::Status;
use hinfsyn_core::{
    lft_closed_loop, plant_subsystem, synthesize, Channel, Controller, Error, Plant, StateSpace, SynthesisOptions,
};

#[derive(Parser)]
#[command(name = "hinfsyn", version, about = "Fixed-order H-infinity controller synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// H-infinity norm and peak frequency of a system, or of a plant's
    /// performance channel (closed with `--controller` when given)
    Norm {
        file: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_NORM_TOL)]
        tol: f64,
    },
    /// Spectral abscissa of a system's A, a plant's A, or the closed loop
    Abscissa {
        file: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
    },
    /// Synthesize a controller of fixed order
    Synth {
        #[arg(long)]
        plant: PathBuf,
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// wall-clock budget per run in seconds
        #[arg(long, default_value_t = 300.0)]
        cpumax: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        warm_start: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        /// run the independent starts one after another
        #[arg(long)]
        serial: bool,
    },
    /// Run benchmark cases against their reference values
    Bench {
        /// directory with the plant files (default: $HINFSYN_SUITE_DIR or data/plants)
        #[arg(long)]
        suite: Option<PathBuf>,
        /// case names or tiers (quick, large, all), comma separated
        #[arg(long, value_delimiter = ',')]
        cases: Vec<String>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 300.0)]
        cpumax: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// restrict every case to these orders
        #[arg(long, value_delimiter = ',')]
        orders: Vec<usize>,
        #[arg(long)]
        serial: bool,
    },
    /// Check that a plant, controller or system file loads
    Validate { file: PathBuf },
}

enum Failure {
    Synthesis(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoStabilizingController(_) | Error::NotStabilizing(_) => Failure::Synthesis(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn load_controller(path: &Option<PathBuf>) -> Result<Option<Controller>, Failure> {
    Ok(match path {
        Some(p) => Some(io::load_controller(p)?),
        None => None,
    })
}

/// The system a `norm` or `abscissa` command acts on.
fn target_system(file: &Path, controller: &Option<PathBuf>) -> Result<StateSpace, Failure> {
    let k = load_controller(controller)?;
    match (io::load_system(file)?, k) {
        (SystemData::Plant(p), Some(k)) => Ok(lft_closed_loop(&p, &k)?),
        (SystemData::Plant(p), None) => Ok(plant_subsystem(&p, Channel::Exogenous, Channel::Exogenous)),
        (SystemData::StateSpace(s), None) => Ok(s),
        (SystemData::StateSpace(_), Some(_)) => Err(Failure::Input(
            "--controller needs a plant file, not a plain system".into(),
        )),
    }
}

fn norm(file: &Path, controller: &Option<PathBuf>, tol: f64) -> Result<(), Failure> {
    let sys = target_system(file, controller)?;
    let r = analysis::hinf_norm(&sys, tol)?;
    println!("hinf_norm {}", num(r.gamma));
    if r.attained_at_infinity {
        println!("omega_peak inf");
    } else {
        println!("omega_peak {}", num(r.omega_peak));
    }
    Ok(())
}

fn abscissa(file: &Path, controller: &Option<PathBuf>) -> Result<(), Failure> {
    let a = match (io::load_system(file)?, load_controller(controller)?) {
        (SystemData::Plant(p), None) => p.a().to_owned(),
        _ => target_system(file, controller)?.a().to_owned(),
    };
    let r = analysis::spectral_abscissa(a.as_ref())?;
    println!("abscissa {}", num(r.alpha));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn synth(
    plant: &Path,
    order: usize,
    runs: usize,
    cpumax: f64,
    seed: u64,
    warm_start: &Option<PathBuf>,
    out: &Option<PathBuf>,
    max_iters: usize,
    serial: bool,
) -> Result<(), Failure> {
    let plant: Plant = io::load_plant(plant)?;
    let opts = SynthesisOptions {
        order,
        runs,
        cpumax_seconds: cpumax,
        rng_seed: seed,
        warm_start: load_controller(warm_start)?,
        max_iters,
        parallel: !serial,
        ..Default::default()
    };
    let r = synthesize(&plant, &opts)?;
    for (i, run) in r.per_run.iter().enumerate() {
        println!(
            "run {i} seed {} abscissa {} norm {}",
            run.seed,
            num(run.stage1_abscissa),
            num(run.stage2_norm)
        );
    }
    if r.status == Status::NoStabilizingController {
        return Err(Failure::Synthesis(format!(
            "no stabilizing controller found (best spectral abscissa {})",
            num(r.best_abscissa)
        )));
    }
    println!("best_norm {}", num(r.best_norm));
    println!("abscissa {}", num(r.best_abscissa));
    println!("omega_peak {}", num(r.omega_peak));
    if let Some(path) = out {
        io::save_controller(path, &r.best)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_bench(
    suite: &Option<PathBuf>,
    cases: &[String],
    report: &Option<PathBuf>,
    runs: usize,
    cpumax: f64,
    seed: u64,
    orders: &[usize],
    serial: bool,
) -> Result<(), Failure> {
    let dir = suite.clone().unwrap_or_else(bench::default_suite_dir);
    if !dir.is_dir() {
        return Err(Failure::Input(format!("suite directory {} not found", dir.display())));
    }
    let selected = bench::select_cases(cases)?;
    let opts = BenchOptions {
        runs,
        cpumax_seconds: cpumax,
        rng_seed: seed,
        parallel: !serial,
        orders: if orders.is_empty() { None } else { Some(orders.to_vec()) },
    };
    let reports: Vec<_> = selected.iter().map(|c| bench::run_benchmark(c, &dir, &opts)).collect();
    print!("{}", bench::report_table(&reports));
    if let Some(path) = report {
        fs::write(path, bench::report_json(&reports))
            .map_err(|e| Failure::Input(format!("i/o error on {}: {e}", path.display())))?;
    }
    if reports.iter().any(|r| r.status == CaseStatus::InputError) {
        return Err(Failure::Input("some cases could not be loaded".into()));
    }
    if reports.iter().any(|r| r.status == CaseStatus::Ran && !r.passed()) {
        return Err(Failure::Synthesis("some benchmark entries failed".into()));
    }
    Ok(())
}

fn validate(file: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(file).map_err(|e| Failure::Input(format!("i/o error on {}: {e}", file.display())))?;
    if text.contains("\"DK\"") {
        let k = io::controller_from_json(&text)?;
        let d = k.dims();
        println!("controller order {} inputs {} outputs {}", d.order, d.inputs, d.outputs);
        return Ok(());
    }
    match io::load_system(file)? {
        SystemData::Plant(p) => {
            let d = p.dims();
            println!("plant n {} m1 {} m2 {} p1 {} p2 {}", d.n, d.m1, d.m2, d.p1, d.p2);
        }
        SystemData::StateSpace(s) => {
            println!("system n {} inputs {} outputs {}", s.order(), s.inputs(), s.outputs());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Norm { file, controller, tol } => norm(file, controller, *tol),
        Command::Abscissa { file, controller } => abscissa(file, controller),
        Command::Synth {
            plant,
            order,
            runs,
            cpumax,
            seed,
            warm_start,
            out,
            max_iters,
            serial,
        } => synth(
            plant, *order, *runs, *cpumax, *seed, warm_start, out, *max_iters, *serial,
        ),
        Command::Bench {
            suite,
            cases,
            report,
            runs,
            cpumax,
            seed,
            orders,
            serial,
        } => run_bench(suite, cases, report, *runs, *cpumax, *seed, orders, *serial),
        Command::Validate { file } => validate(file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Synthesis(msg)) => {
            eprintln!("hinfsyn: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("hinfsyn: {msg}");
            ExitCode::from(2)
        }
    }
}
