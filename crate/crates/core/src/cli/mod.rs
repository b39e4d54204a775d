//! Command-line front end.
//!
//! Settings resolve in three layers: built-in defaults for the chosen
//! experiment, then an optional flat `key = value` file (`--config`), then
//! flags. Every run writes its CSV tables and a `summary.json` into the
//! output directory. All results are computed before the first file is
//! written, and files already written are removed if a later write fails.
//!
//! Exit codes: `0` success, `2` configuration error, `3` numerical failure.

mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

pub use config::{parse_config_file, ConfigError, Experiment, RunConfig, KNOWN_KEYS};

use crate::control::{ControlField, ControlKind};
use crate::error::Error;
use crate::experiments::{
    asymmetric_crossover_experiment, control_scan, control_shape_experiment, default_crossover_windows,
    derivative_sign_changes, linear_grid, lz_check, separability_sweep, spectrum_scan, tail_exponent_experiment,
    Check, Summary, SweepOptions,
};
use crate::models::{Model, ThreeLevelModel, TwoLevelModel};
use crate::propagate::{
    default_step, default_window, diabatic_populations, evolve, instantaneous_eigenstate, nonadiabaticity_of_level,
    write_csv, EvolveOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "superadiabatic", version, about = "Counterdiabatic control of Landau-Zener ladders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Instantaneous eigenvalues of H0 on a tau grid
    Spectrum(Options),
    /// Control-field entries on a tau grid (peak checks for the exact control)
    Controls(Options),
    /// Power-law fits of the exact control's long-time tails
    Tails(Options),
    /// Propagate one state and record non-adiabaticity and populations
    Evolve(Options),
    /// Residual non-adiabaticity of separated controls versus epsilon
    SweepEps(Options),
    /// Tau^-4 to tau^-3 crossover of the (1,3) entry for unequal sweep rates
    AsymTails(Options),
    /// Two-level run compared with the Landau-Zener formula
    LzCheck(Options),
}

impl Command {
    fn split(&self) -> (Experiment, &Options) {
        match self {
            Command::Spectrum(o) => (Experiment::Spectrum, o),
            Command::Controls(o) => (Experiment::Controls, o),
            Command::Tails(o) => (Experiment::Tails, o),
            Command::Evolve(o) => (Experiment::Evolve, o),
            Command::SweepEps(o) => (Experiment::SweepEps, o),
            Command::AsymTails(o) => (Experiment::AsymTails, o),
            Command::LzCheck(o) => (Experiment::LzCheck, o),
        }
    }
}

/// Flags shared by all subcommands. Values are validated during resolution
/// so that errors name the offending key.
#[derive(Args, Debug, Default)]
pub struct Options {
    /// Flat `key = value` file applied before flags
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(short, long)]
    pub output: Option<String>,
    /// two-level or three-level
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta_alpha: Option<String>,
    /// exact, separated-matrix, separated-field, perturbative-small-delta, perturbative-long-time, none
    #[arg(long)]
    pub control: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau_start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau_end: Option<String>,
    #[arg(long)]
    pub step: Option<String>,
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long)]
    pub fit_start: Option<String>,
    #[arg(long)]
    pub fit_end: Option<String>,
    #[arg(long)]
    pub late_fit_start: Option<String>,
    #[arg(long)]
    pub late_fit_end: Option<String>,
    /// Comma-separated epsilon list
    #[arg(long)]
    pub epsilons: Option<String>,
    #[arg(long)]
    pub eps_from: Option<String>,
    #[arg(long)]
    pub eps_to: Option<String>,
    #[arg(long)]
    pub eps_count: Option<String>,
    /// Extra epsilon for the threshold check, or `none`
    #[arg(long)]
    pub threshold_eps: Option<String>,
    #[arg(long)]
    pub oscillation_from: Option<String>,
    #[arg(long)]
    pub oscillation_to: Option<String>,
    /// Points of the fine small-epsilon scan; 0 disables it
    #[arg(long)]
    pub oscillation_count: Option<String>,
    /// Also sweep the other separated construction
    #[arg(long)]
    pub compare: Option<String>,
    #[arg(long)]
    pub tolerance: Option<String>,
    #[arg(long)]
    pub record_every: Option<String>,
    #[arg(long)]
    pub initial_level: Option<String>,
    #[arg(long)]
    pub verify_step_halving: Option<String>,
}

impl Options {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("output", &self.output),
            ("model", &self.model),
            ("epsilon", &self.epsilon),
            ("alpha", &self.alpha),
            ("delta", &self.delta),
            ("delta_delta", &self.delta_delta),
            ("delta_alpha", &self.delta_alpha),
            ("control", &self.control),
            ("tau_start", &self.tau_start),
            ("tau_end", &self.tau_end),
            ("step", &self.step),
            ("points", &self.points),
            ("fit_start", &self.fit_start),
            ("fit_end", &self.fit_end),
            ("late_fit_start", &self.late_fit_start),
            ("late_fit_end", &self.late_fit_end),
            ("epsilons", &self.epsilons),
            ("eps_from", &self.eps_from),
            ("eps_to", &self.eps_to),
            ("eps_count", &self.eps_count),
            ("threshold_eps", &self.threshold_eps),
            ("oscillation_from", &self.oscillation_from),
            ("oscillation_to", &self.oscillation_to),
            ("oscillation_count", &self.oscillation_count),
            ("compare", &self.compare),
            ("tolerance", &self.tolerance),
            ("record_every", &self.record_every),
            ("initial_level", &self.initial_level),
            ("verify_step_halving", &self.verify_step_halving),
        ]
    }

    /// Config-file entries overlaid with flags.
    pub fn overrides(&self) -> Result<BTreeMap<String, String>, ConfigError> {
        let mut kv = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        for (key, value) in self.flags() {
            if let Some(v) = value {
                kv.insert(key.to_string(), v.clone());
            }
        }
        Ok(kv)
    }
}

/// Why a run stopped.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(Error),
    Output(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Numerical(_) => EXIT_NUMERICAL,
            RunError::Config(_) | RunError::Output(_) => EXIT_CONFIG,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) | RunError::Output(m) => f.write_str(m),
            RunError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical(e)
        } else {
            RunError::Config(e.to_string())
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

/// One output file held in memory until the run has succeeded.
struct Artifact {
    name: &'static str,
    bytes: Vec<u8>,
}

fn table(name: &'static str, header: &[String], columns: &[Vec<f64>]) -> Artifact {
    let mut bytes = Vec::new();
    write_csv(&mut bytes, header, columns).expect("in-memory CSV");
    Artifact { name, bytes }
}

/// Result of a successful run.
#[derive(Debug)]
pub struct Outcome {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

/// Parses `args` (including the program name), runs, reports and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (experiment, options) = cli.command.split();
    let result = options
        .overrides()
        .and_then(|kv| RunConfig::resolve(experiment, &kv))
        .map_err(RunError::from)
        .and_then(|config| run(&config));
    match result {
        Ok(outcome) => {
            for check in &outcome.summary.checks {
                let verdict = if check.pass { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {}: {} (target {}, tolerance {})",
                    check.name,
                    number(check.value),
                    number(check.target),
                    number(check.tolerance)
                );
            }
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Compact console form: plain decimals for moderate magnitudes.
fn number(x: f64) -> String {
    if x == 0.0 || (1e-3..1e5).contains(&x.abs()) {
        format!("{}", (x * 1e9).round() / 1e9)
    } else {
        format!("{x:.6e}")
    }
}

/// Runs one resolved configuration and writes its artifacts.
pub fn run(config: &RunConfig) -> Result<Outcome, RunError> {
    let (summary, mut artifacts) = execute(config)?;
    let mut json = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    json.push(b'\n');
    artifacts.push(Artifact { name: "summary.json", bytes: json });
    let files = write_artifacts(&config.output, &artifacts)?;
    Ok(Outcome { summary, files })
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, RunError> {
    let fail = |written: &[PathBuf], what: String| {
        for path in written {
            let _ = fs::remove_file(path);
        }
        RunError::Output(what)
    };
    fs::create_dir_all(dir)
        .map_err(|e| RunError::Output(format!("cannot create output directory `{}`: {e}", dir.display())))?;
    let mut written = Vec::new();
    for artifact in artifacts {
        let path = dir.join(artifact.name);
        if let Err(e) = fs::write(&path, &artifact.bytes) {
            return Err(fail(&written, format!("cannot write `{}`: {e}", path.display())));
        }
        written.push(path);
    }
    Ok(written)
}

fn three_level(model: &Model) -> Result<ThreeLevelModel, RunError> {
    match model {
        Model::ThreeLevel(m) => Ok(*m),
        Model::TwoLevel(_) => Err(RunError::Config("invalid value for `model`: needs the three-level model".into())),
    }
}

fn two_level(model: &Model) -> Result<TwoLevelModel, RunError> {
    match model {
        Model::TwoLevel(m) => Ok(*m),
        Model::ThreeLevel(_) => Err(RunError::Config("invalid value for `model`: needs the two-level model".into())),
    }
}

fn execute(config: &RunConfig) -> Result<(Summary, Vec<Artifact>), RunError> {
    let mut params = config.params();
    let mut fits = Vec::new();
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();
    let grid = |config: &RunConfig| {
        let (lo, hi) = config.window.unwrap_or_else(|| default_window(&config.model));
        linear_grid(lo, hi, config.points)
    };

    match config.experiment {
        Experiment::Spectrum => {
            let scan = spectrum_scan(&config.model, &grid(config))?;
            let (header, columns) = scan.table();
            artifacts.push(table("spectrum.csv", &header, &columns));
        }
        Experiment::Controls => {
            let taus = grid(config);
            let scan = match (&config.model, config.control) {
                (Model::ThreeLevel(m), ControlKind::ExactCd) => {
                    let report = control_shape_experiment(m, &taus)?;
                    checks.extend(report.checks);
                    report.scan
                }
                (model, kind) => control_scan(&ControlField::new(kind, *model)?, &taus)?,
            };
            let (header, columns) = scan.table();
            artifacts.push(table("controls.csv", &header, &columns));
        }
        Experiment::Tails => {
            let model = three_level(&config.model)?;
            let window = config.fit_window.expect("tails has a default fit window");
            let report = tail_exponent_experiment(&model, window, config.points)?;
            fits.extend(report.fits);
            checks.extend(report.checks.iter().cloned());
            let (header, columns) = report.table();
            artifacts.push(table("tails.csv", &header, &columns));
        }
        Experiment::Evolve => {
            let control = ControlField::new(config.control, config.model)?;
            let (lo, hi) = config.window.unwrap_or_else(|| default_window(&config.model));
            let step = match config.step {
                Some(step) => step,
                None => default_step(&control, lo, hi)?,
            };
            let psi0 = instantaneous_eigenstate(&config.model, lo, config.initial_level)?;
            let opts = EvolveOptions { record_every: config.record_every, verify_step_halving: config.verify_step_halving };
            let trajectory = evolve(&control, &psi0, lo, hi, step, opts)?;
            params.insert("window".into(), json!([lo, hi]));
            params.insert("step".into(), json!(trajectory.step));

            let p = nonadiabaticity_of_level(&trajectory, config.initial_level)?;
            let drift = trajectory.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
            checks.push(Check::below("norm drift", drift, crate::propagate::NORM_TOLERANCE));
            if config.control == ControlKind::ExactCd {
                checks.push(Check::below("exact control max nonadiabaticity", p.max(), 1e-8));
            }
            artifacts.push(table("nonadiabaticity.csv", &["tau".into(), "nonadiabaticity".into()], &[p.taus.clone(), p.values.clone()]));
            let pops = diabatic_populations(&trajectory);
            let mut header = vec!["tau".to_string()];
            let mut columns = vec![trajectory.taus.clone()];
            for (k, series) in pops.into_iter().enumerate() {
                header.push(format!("p{}", k + 1));
                columns.push(series.values);
            }
            artifacts.push(table("populations.csv", &header, &columns));
            let (header, columns) = trajectory.table();
            artifacts.push(table("states.csv", &header, &columns));
        }
        Experiment::SweepEps => sweep(config, &mut params, &mut fits, &mut checks, &mut artifacts)?,
        Experiment::AsymTails => {
            let model = three_level(&config.model)?;
            let (early_default, late_default) = default_crossover_windows(&model);
            let windows = (config.fit_window.unwrap_or(early_default), config.late_fit_window.unwrap_or(late_default));
            params.insert("fit_window".into(), json!([windows.0 .0, windows.0 .1]));
            params.insert("late_fit_window".into(), json!([windows.1 .0, windows.1 .1]));
            let report = asymmetric_crossover_experiment(&model, Some(windows), config.points)?;
            fits.extend([report.early, report.late]);
            checks.extend(report.checks.iter().cloned());
            let (header, columns) = report.table();
            artifacts.push(table("asym_tails.csv", &header, &columns));
        }
        Experiment::LzCheck => {
            let model = two_level(&config.model)?;
            let window = config.window.expect("lz-check has a default window");
            let report = lz_check(&model, window, config.control, config.step, config.tolerance)?;
            params.insert("step".into(), json!(report.step));
            checks.extend(report.checks.iter().cloned());
            artifacts.push(report_series(&report.series));
        }
    }
    let summary = Summary { experiment: config.experiment.to_string(), params, fits, checks };
    Ok((summary, artifacts))
}

fn report_series(series: &crate::propagate::ObservableSeries) -> Artifact {
    table("lz.csv", &["tau".into(), "nonadiabaticity".into()], &[series.taus.clone(), series.values.clone()])
}

fn sweep(
    config: &RunConfig,
    params: &mut serde_json::Map<String, Value>,
    fits: &mut Vec<crate::experiments::PowerLawFit>,
    checks: &mut Vec<Check>,
    artifacts: &mut Vec<Artifact>,
) -> Result<(), RunError> {
    let base = three_level(&config.model)?;
    let options = SweepOptions {
        fit_window: config.fit_window.expect("sweep has a default fit window"),
        step: config.step,
        record_every: config.record_every,
        ..SweepOptions::default()
    };
    let mut epsilons = config.epsilons.clone();
    if let Some(t) = config.threshold_epsilon {
        if !epsilons.contains(&t) {
            epsilons.push(t);
        }
    }
    let main = separability_sweep(&base, &epsilons, config.control, options)?;
    params.insert("steps".into(), json!(main.points.iter().map(|p| p.step).collect::<Vec<_>>()));
    fits.extend(main.fit);
    checks.extend(main.checks());

    let mut header = vec!["epsilon".to_string(), config.control.as_str().to_string()];
    let mut columns = vec![main.epsilons(), main.probabilities()];
    if config.compare {
        let other_kind = match config.control {
            ControlKind::SeparatedMatrix => ControlKind::SeparatedSingleField,
            _ => ControlKind::SeparatedMatrix,
        };
        let other = separability_sweep(&base, &epsilons, other_kind, options)?;
        if let (Some(a), Some(b)) = (main.fit, other.fit) {
            checks.push(Check::within(format!("{other_kind} eps exponent"), b.exponent, -2.0, 0.15));
            checks.push(Check::within("separated constructions exponent agreement", a.exponent - b.exponent, 0.0, 0.1));
        }
        fits.extend(other.fit);
        header.push(other_kind.as_str().to_string());
        columns.push(other.probabilities());
    }
    artifacts.push(table("sweep.csv", &header, &columns));

    if let Some((from, to, count)) = config.oscillation {
        let scan = separability_sweep(&base, &linear_grid(from, to, count), config.control, options)?;
        let changes = derivative_sign_changes(&scan.probabilities());
        checks.push(Check::above("small-eps oscillation sign changes", changes as f64, 2.0));
        let (header, columns) = scan.table();
        artifacts.push(table("oscillation.csv", &header, &columns));
    }
    Ok(())
}
