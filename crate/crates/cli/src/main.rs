//! Batch driver: geometry in, CSV out.
//!
//! Every setting can come from a flag or from a `key=value` config file;
//! flags win over the file, the file wins over defaults. Identical
//! invocations with identical seeds produce byte-identical CSVs, so none
//! of the emitted tables contain timings.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use ballschwarz::diagnostics::{scaling_sweep, verify_eigen_bound, verify_pou, verify_overlap_inequalities, VerifyReport};
use ballschwarz::generators::parse_geometry_spec;
use ballschwarz::geometry::{BallUnion, DEFAULT_SPHERE_SAMPLES};
use ballschwarz::grid::{assemble_rhs, build_grid, DEFAULT_DOF_CAP};
use ballschwarz::indicators::{compute_report, default_lambda_grid, IndicatorConfig, IndicatorReport};
use ballschwarz::schwarz::{solve, Method};
use ballschwarz::{Error, Result};
use clap::{Args, Parser, Subcommand};

const DEFAULT_TOL: f64 = 1e-8;
const DEFAULT_MAX_ITERS: usize = 400;
const DEFAULT_VERIFY_SAMPLES: usize = 10_000;

#[derive(Parser)]
#[command(
    name = "ballschwarz",
    version,
    about = "Overlapping Schwarz solvers and geometry diagnostics on unions of balls"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Computes the indicator table (multiplicities, overlap constants,
    /// fatness, condition bounds) for one geometry.
    Indicators(CommonArgs),
    /// Solves the Poisson problem with unit load on one geometry.
    Solve(CommonArgs),
    /// Measures iteration scaling over a list of lattice sizes.
    Sweep(SweepArgs),
    /// Runs the sampled partition-of-unity and overlap-inequality checks.
    Verify(CommonArgs),
    /// Compares the smallest Laplacian eigenvalue against its lower bound.
    Eig(CommonArgs),
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Geometry: `lattice:nx,ny,nz,r`, `chain:M,spacing,r`, or an xyzr
    /// file path.
    #[arg(long)]
    geometry: Option<String>,

    /// Grid spacing; defaults to r_min/6 of the geometry.
    #[arg(long)]
    h: Option<f64>,

    /// Solver: ms, ms+coarse, pcg-as, pcg-as+coarse, gmres-ms,
    /// gmres-ms+coarse.
    #[arg(long)]
    method: Option<String>,

    /// Relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,

    /// Iteration cap for the solver.
    #[arg(long)]
    max_iters: Option<usize>,

    /// Seed for every sampled quantity.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,

    /// Write the CSV here instead of standard output.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Comma-separated probe scale factors for the fatness sweep.
    #[arg(long)]
    lambda_grid: Option<String>,

    /// Monte Carlo sample budget (indicators) or check sample count
    /// (verify).
    #[arg(long)]
    mc_samples: Option<usize>,

    /// Boundary sphere samples used to classify interior balls.
    #[arg(long)]
    sphere_samples: Option<usize>,

    /// Key=value file supplying any of the long flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Scaling family: 1 grows a bar (1,1,n), 2 a pillar (4,4,n), 3 a
    /// cube (n,n,n).
    #[arg(long)]
    case: Option<u8>,

    /// Comma-separated lattice sizes.
    #[arg(long)]
    n: Option<String>,
}

/// Flag values merged with the config file; every accessor applies the
/// final default.
struct Settings {
    flags: CommonArgs,
    file: HashMap<String, String>,
}

impl Settings {
    fn load(flags: CommonArgs) -> Result<Settings> {
        let file = match &flags.config {
            Some(path) => parse_config_file(path)?,
            None => HashMap::new(),
        };
        Ok(Settings { flags, file })
    }

    fn from_file<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.file.get(key) {
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::invalid_argument(format!("config key {key} has unusable value \"{raw}\""))
            }),
            None => Ok(None),
        }
    }

    fn geometry(&self) -> Result<String> {
        match self.flags.geometry.clone().or(self.file.get("geometry").cloned()) {
            Some(g) => Ok(g),
            None => Err(Error::invalid_argument(
                "--geometry is required (lattice:nx,ny,nz,r, chain:M,spacing,r, or an xyzr path)",
            )),
        }
    }

    fn h(&self) -> Result<Option<f64>> {
        Ok(self.flags.h.or(self.from_file("h")?))
    }

    fn method(&self) -> Result<Method> {
        match self.flags.method.clone().or(self.file.get("method").cloned()) {
            Some(s) => s.parse(),
            None => Ok(Method::GmresMs),
        }
    }

    fn tol(&self) -> Result<f64> {
        Ok(self.flags.tol.or(self.from_file("tol")?).unwrap_or(DEFAULT_TOL))
    }

    fn max_iters(&self) -> Result<usize> {
        Ok(self
            .flags
            .max_iters
            .or(self.from_file("max-iters")?)
            .unwrap_or(DEFAULT_MAX_ITERS))
    }

    fn seed(&self) -> Result<u64> {
        Ok(self.flags.seed.or(self.from_file("seed")?).unwrap_or(0))
    }

    fn threads(&self) -> Result<Option<usize>> {
        Ok(self.flags.threads.or(self.from_file("threads")?))
    }

    fn csv(&self) -> Result<Option<PathBuf>> {
        Ok(self.flags.csv.clone().or(self.from_file("csv")?))
    }

    fn lambda_grid(&self) -> Result<Vec<f64>> {
        let raw = self
            .flags
            .lambda_grid
            .clone()
            .or(self.file.get("lambda-grid").cloned());
        match raw {
            Some(list) => parse_list(&list, "lambda grid entry"),
            None => Ok(default_lambda_grid()),
        }
    }

    fn mc_samples(&self, default: usize) -> Result<usize> {
        Ok(self
            .flags
            .mc_samples
            .or(self.from_file("mc-samples")?)
            .unwrap_or(default))
    }

    fn sphere_samples(&self) -> Result<usize> {
        Ok(self
            .flags
            .sphere_samples
            .or(self.from_file("sphere-samples")?)
            .unwrap_or(DEFAULT_SPHERE_SAMPLES))
    }

    fn union(&self) -> Result<BallUnion> {
        parse_geometry_spec(&self.geometry()?, self.sphere_samples()?)
    }

    fn grid_h(&self, union: &BallUnion) -> Result<f64> {
        Ok(self.h()?.unwrap_or(union.r_min() / 6.0))
    }

    fn indicator_config(&self, samples_default: usize) -> Result<IndicatorConfig> {
        Ok(IndicatorConfig {
            h: self.h()?,
            lambda_grid: self.lambda_grid()?,
            mc_samples: self.mc_samples(samples_default)?,
            seed: self.seed()?,
            ..IndicatorConfig::default()
        })
    }
}

fn parse_config_file(path: &PathBuf) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::invalid_argument(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::invalid_argument(format!(
                "config line {} is not key=value: \"{line}\"",
                lineno + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::invalid_argument(format!(
                "unknown config key \"{key}\" on line {}; known keys: {}",
                lineno + 1,
                KNOWN_KEYS.join(", ")
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

const KNOWN_KEYS: [&str; 13] = [
    "geometry",
    "h",
    "method",
    "tol",
    "max-iters",
    "seed",
    "threads",
    "csv",
    "lambda-grid",
    "mc-samples",
    "sphere-samples",
    "case",
    "n",
];

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| Error::invalid_argument(format!("bad {what} \"{s}\"")))
        })
        .collect()
}

/// Writes to `--csv` when given, standard output otherwise.
fn emit(settings: &Settings, text: &str) -> Result<()> {
    match settings.csv()? {
        Some(path) => std::fs::write(&path, text).map_err(|e| {
            Error::invalid_argument(format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads(settings: &Settings) -> Result<()> {
    if let Some(n) = settings.threads()? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid_argument(format!("thread pool setup failed: {e}")))?;
    }
    Ok(())
}

fn indicator_csv(report: &IndicatorReport) -> String {
    format!("{}\n{}\n", IndicatorReport::csv_header(), report.csv_row())
}

fn run_indicators(settings: &Settings) -> Result<u8> {
    let union = settings.union()?;
    let report = compute_report(&union, &settings.indicator_config(100_000)?)?;
    emit(settings, &indicator_csv(&report))?;
    Ok(0)
}

fn run_solve(settings: &Settings) -> Result<u8> {
    let union = settings.union()?;
    let h = settings.grid_h(&union)?;
    let grid = build_grid(&union, h, DEFAULT_DOF_CAP)?;
    let b = assemble_rhs(&grid, |_| 1.0)?;
    let out = solve(
        &grid,
        &union,
        &b,
        settings.method()?,
        settings.tol()?,
        settings.max_iters()?,
    )?;
    let r = &out.report;
    let final_residual = r.residual_history.last().copied().unwrap_or(0.0);
    let mut text = String::from("method,h,tol,dofs,iterations,final_residual,coarse_dim,converged\n");
    let _ = writeln!(
        text,
        "{},{},{},{},{},{},{},{}",
        r.method,
        h,
        settings.tol()?,
        grid.num_dofs(),
        r.iterations,
        final_residual,
        r.coarse_dim,
        r.converged
    );
    emit(settings, &text)?;
    Ok(if r.converged { 0 } else { 1 })
}

fn run_sweep(settings: &Settings, case: Option<u8>, n: Option<String>) -> Result<u8> {
    let case = match case.or(settings.from_file("case")?) {
        Some(c) => c,
        None => return Err(Error::invalid_argument("--case is required (1, 2, or 3)")),
    };
    let n_raw = match n.or(settings.file.get("n").cloned()) {
        Some(raw) => raw,
        None => {
            return Err(Error::invalid_argument(
                "--n is required (comma-separated lattice sizes)",
            ))
        }
    };
    let n_list: Vec<usize> = parse_list(&n_raw, "lattice size")?;
    // sweeps fix the radius at 0.9, so the default spacing is known up front
    let h = settings.h()?.unwrap_or(0.15);
    let result = scaling_sweep(
        case,
        &n_list,
        settings.method()?,
        settings.tol()?,
        h,
        settings.seed()?,
    )?;
    emit(settings, &result.to_csv())?;
    Ok(0)
}

fn verify_csv(reports: &[&VerifyReport]) -> String {
    let mut text = String::from("check,passed,samples,worst_ratio\n");
    for report in reports {
        for c in &report.checks {
            let _ = writeln!(text, "{},{},{},{:.6}", c.name, c.passed, c.samples, c.worst_ratio);
        }
    }
    text
}

fn run_verify(settings: &Settings) -> Result<u8> {
    let union = settings.union()?;
    let samples = settings.mc_samples(DEFAULT_VERIFY_SAMPLES)?;
    let seed = settings.seed()?;
    let pou = verify_pou(&union, samples, seed)?;
    let overlap = verify_overlap_inequalities(&union, samples, seed)?;
    for line in pou.lines().into_iter().chain(overlap.lines()) {
        println!("{line}");
    }
    if settings.csv()?.is_some() {
        emit(settings, &verify_csv(&[&pou, &overlap]))?;
    }
    Ok(if pou.all_passed() && overlap.all_passed() { 0 } else { 1 })
}

fn run_eig(settings: &Settings) -> Result<u8> {
    let union = settings.union()?;
    let h = settings.grid_h(&union)?;
    let grid = build_grid(&union, h, DEFAULT_DOF_CAP)?;
    let indicators = compute_report(&union, &settings.indicator_config(100_000)?)?;
    let report = verify_eigen_bound(&grid, &indicators)?;
    for line in report.lines() {
        println!("{line}");
    }
    if settings.csv()?.is_some() {
        emit(settings, &verify_csv(&[&report]))?;
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Indicators(common) => {
            let settings = Settings::load(common)?;
            configure_threads(&settings)?;
            run_indicators(&settings)
        }
        Command::Solve(common) => {
            let settings = Settings::load(common)?;
            configure_threads(&settings)?;
            run_solve(&settings)
        }
        Command::Sweep(args) => {
            let SweepArgs { common, case, n } = args;
            let settings = Settings::load(common)?;
            configure_threads(&settings)?;
            run_sweep(&settings, case, n)
        }
        Command::Verify(common) => {
            let settings = Settings::load(common)?;
            configure_threads(&settings)?;
            run_verify(&settings)
        }
        Command::Eig(common) => {
            let settings = Settings::load(common)?;
            configure_threads(&settings)?;
            run_eig(&settings)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 for help/version on its own
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
