//! Command-line front end.
//!
//! Parameters resolve as preset < config file < `--set key=value` < the
//! per-command flags (`--l0`, `--n`). Data files never contain timestamps;
//! when `--output` is given, run metadata goes to `<output>.meta.json`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::adiabatic::{self, ShiftConvention};
use crate::config::{self, ParamOverrides};
use crate::entangle::{self, Engine, FieldBasisKind, PrepMode, Scenario};
use crate::error::{exit_code, invalid, Error, Result};
use crate::ladder::{self, Direction, EvolveOptions, LadderRange};
use crate::params::{self, PhysicalParams, RegimeThresholds, RegimeVerdict};
use crate::validation::{self, SweepVar, ValidationOptions};

#[derive(Debug, Parser)]
#[command(name = "bragg", version, about = "Momentum-state entanglement by cavity Bragg deflection")]
pub struct Cli {
    /// Parameter file with `key = value` lines.
    #[arg(long, global = true, env = "BRAGG_CONFIG")]
    pub config: Option<PathBuf>,

    /// Base parameter preset (default: rubidium).
    #[arg(long, global = true)]
    pub preset: Option<String>,

    /// Parameter override `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Upper bound of χn/w_rec for a "good" regime verdict.
    #[arg(long, global = true, default_value_t = 0.05)]
    pub good_ratio: f64,

    /// Upper bound of χn/w_rec for a "marginal" regime verdict.
    #[arg(long, global = true, default_value_t = 0.2)]
    pub marginal_ratio: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List or show parameter presets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Two-level coefficients A_n, B_n and π-pulse times.
    Coeffs(CoeffsArgs),
    /// Ladder time series as CSV.
    Simulate(SimulateArgs),
    /// Two-atom Bell-state preparation report.
    Bell(BellArgs),
    /// k-atom GHZ preparation report.
    Ghz(GhzArgs),
    /// Compare ladder numerics with the two-level model.
    Validate(ValidateArgs),
    /// Repeat validation over a list of values.
    Sweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum PresetAction {
    List,
    Show { name: String },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum ShiftArg {
    Literal,
    #[default]
    Corrected,
}

impl From<ShiftArg> for ShiftConvention {
    fn from(s: ShiftArg) -> Self {
        match s {
            ShiftArg::Literal => ShiftConvention::Literal,
            ShiftArg::Corrected => ShiftConvention::Corrected,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DirectionArg {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Opposite,
    Same,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EngineArg {
    Adiabatic,
    Ladder,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum BasisArg {
    #[default]
    Superposition,
    Computational,
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// Bragg orders, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub l0: Vec<u32>,
    /// Photon numbers, comma separated (default: 0 and n0).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u32>,
    #[arg(long, value_enum, default_value_t = ShiftArg::Corrected)]
    pub shift: ShiftArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub l0: Option<u32>,
    /// Photon number of the simulated branch (default: n0).
    #[arg(long)]
    pub n: Option<u32>,
    /// Interaction time, s.
    #[arg(long, conflicts_with = "pi_pulses")]
    pub duration: Option<f64>,
    /// Interaction time in units of π/|B_n|.
    #[arg(long)]
    pub pi_pulses: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = DirectionArg::Plus)]
    pub direction: DirectionArg,
    /// Keep the constant −χn light shift on the diagonal.
    #[arg(long)]
    pub stark: bool,
    #[arg(long)]
    pub allow_violated: bool,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Odd pulse number: atoms interact for sπ/|B_n0|.
    #[arg(long, default_value_t = 1)]
    pub s: u32,
    /// The last atom interacts 2rπ/|B_n0| longer.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub r: i64,
    #[arg(long, value_enum, default_value_t = EngineArg::Adiabatic)]
    pub engine: EngineArg,
    /// Field measurement basis.
    #[arg(long, value_enum, default_value_t = BasisArg::Superposition)]
    pub basis: BasisArg,
    #[arg(long, value_enum, default_value_t = ShiftArg::Corrected)]
    pub shift: ShiftArg,
    #[arg(long)]
    pub stark: bool,
    /// Score against the target with the measured relative phase.
    #[arg(long)]
    pub fit_phase: bool,
    #[arg(long)]
    pub allow_violated: bool,
}

#[derive(Debug, Args)]
pub struct BellArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Opposite)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct GhzArgs {
    /// Number of atoms (3..=10).
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub l0: Option<u32>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, default_value_t = 2001)]
    pub samples: usize,
    #[arg(long)]
    pub stark: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// chi_ratio, l0, n0 or s.
    #[arg(long)]
    pub var: SweepVar,
    /// Comma-separated values.
    #[arg(long)]
    pub values: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 2001)]
    pub samples: usize,
    #[arg(long)]
    pub stark: bool,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit_code::USAGE } else { exit_code::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, &args) {
        Ok(()) => exit_code::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thresholds(cli: &Cli) -> Result<RegimeThresholds> {
    if !(cli.good_ratio > 0.0 && cli.marginal_ratio >= cli.good_ratio) {
        return Err(invalid("regime thresholds must satisfy 0 < good <= marginal"));
    }
    Ok(RegimeThresholds {
        good: cli.good_ratio,
        marginal: cli.marginal_ratio,
    })
}

/// Resolves parameters from preset, config file and `--set` overrides.
pub fn resolve_params(cli: &Cli) -> Result<PhysicalParams> {
    let file = match &cli.config {
        Some(path) => Some(config::parse_config(&fs::read_to_string(path)?)?),
        None => None,
    };
    let mut overrides = config::parse_overrides(&cli.overrides)?;
    if let Some(name) = &cli.preset {
        if overrides.preset.is_some() {
            return Err(invalid("preset given both as --preset and --set preset=..."));
        }
        overrides.preset = Some(name.clone());
    }
    config::resolve(file.as_ref(), &overrides)
}

fn with_command_overrides(p: PhysicalParams, l0: Option<u32>) -> Result<PhysicalParams> {
    let layer = ParamOverrides {
        l0,
        ..ParamOverrides::default()
    };
    let p = layer.apply(p)?;
    p.validate()?;
    Ok(p)
}

fn execute(cli: &Cli, args: &[std::ffi::OsString]) -> Result<()> {
    let body = match &cli.command {
        Command::Preset { action } => cmd_preset(action)?,
        Command::Coeffs(a) => cmd_coeffs(&resolve_params(cli)?, a)?,
        Command::Simulate(a) => cmd_simulate(&resolve_params(cli)?, a, &thresholds(cli)?)?,
        Command::Bell(a) => {
            let p = resolve_params(cli)?;
            let mode = match a.mode {
                ModeArg::Opposite => PrepMode::Opposite,
                ModeArg::Same => PrepMode::Same,
            };
            let sc = scenario(Scenario::bell(p, mode, 1, 0, Engine::Adiabatic), &a.scenario, cli)?;
            json(&entangle::run_scenario(&sc)?)?
        }
        Command::Ghz(a) => {
            let p = resolve_params(cli)?;
            if !(3..=entangle::MAX_ATOMS).contains(&a.k) {
                return Err(invalid(format!(
                    "--k must be in 3..={}, got {}",
                    entangle::MAX_ATOMS,
                    a.k
                )));
            }
            let sc = scenario(Scenario::ghz(p, a.k, 1, 0, Engine::Adiabatic), &a.scenario, cli)?;
            json(&entangle::run_scenario(&sc)?)?
        }
        Command::Validate(a) => cmd_validate(&resolve_params(cli)?, a, &thresholds(cli)?)?,
        Command::Sweep(a) => cmd_sweep(&resolve_params(cli)?, a, &thresholds(cli)?)?,
    };
    emit(cli, args, &body)
}

fn emit(cli: &Cli, args: &[std::ffi::OsString], body: &[u8]) -> Result<()> {
    match &cli.output {
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body)?;
            out.flush()?;
        }
        Some(path) => {
            fs::write(path, body)?;
            write_sidecar(path, args)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RunMetadata {
    program: &'static str,
    version: &'static str,
    args: Vec<String>,
    unix_time_s: u64,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn write_sidecar(path: &Path, args: &[std::ffi::OsString]) -> Result<()> {
    let meta = RunMetadata {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        args: args.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        unix_time_s: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    fs::write(sidecar_path(path), json(&meta)?)?;
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

fn scenario(mut sc: Scenario, a: &ScenarioArgs, cli: &Cli) -> Result<Scenario> {
    sc.s = a.s;
    sc.r = a.r;
    sc.engine = match a.engine {
        EngineArg::Adiabatic => Engine::Adiabatic,
        EngineArg::Ladder => Engine::Ladder,
    };
    sc.basis = match a.basis {
        BasisArg::Superposition => FieldBasisKind::Superposition,
        BasisArg::Computational => FieldBasisKind::Computational,
    };
    sc.convention = a.shift.into();
    sc.include_stark = a.stark;
    sc.fit_phase = a.fit_phase;
    sc.allow_violated = a.allow_violated;
    sc.thresholds = thresholds(cli)?;
    Ok(sc)
}

#[derive(Serialize)]
struct PresetView<'a> {
    name: &'a str,
    description: &'a str,
    params: PhysicalParams,
    derived: params::DerivedParams,
}

fn cmd_preset(action: &PresetAction) -> Result<Vec<u8>> {
    match action {
        PresetAction::List => {
            let mut out = String::new();
            for (name, description, _) in params::presets() {
                out.push_str(&format!("{name}\t{description}\n"));
            }
            Ok(out.into_bytes())
        }
        PresetAction::Show { name } => {
            let (name, description, p) = params::presets()
                .into_iter()
                .find(|(n, _, _)| n == name)
                .ok_or_else(|| Error::UnknownPreset(name.clone()))?;
            json(&PresetView {
                name,
                description,
                params: p,
                derived: p.derive()?,
            })
        }
    }
}

#[derive(Serialize)]
struct CoeffsRow {
    n: u32,
    l0: u32,
    a_n_rad_s: f64,
    b_n_rad_s: f64,
    pi_pulse_s: Option<f64>,
}

fn cmd_coeffs(p: &PhysicalParams, a: &CoeffsArgs) -> Result<Vec<u8>> {
    let d = p.derive()?;
    let orders = if a.l0.is_empty() { vec![p.l0] } else { a.l0.clone() };
    let photons = if a.n.is_empty() { vec![0, p.n0] } else { a.n.clone() };
    let mut rows = Vec::with_capacity(orders.len() * photons.len());
    for &l0 in &orders {
        for &n in &photons {
            rows.push(adiabatic::coeffs(n, l0, &d, a.shift.into())?);
        }
    }
    match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            adiabatic::write_coeffs_csv(&rows, &mut buf)?;
            Ok(buf)
        }
        Format::Json => json(
            &rows
                .iter()
                .map(|c| CoeffsRow {
                    n: c.n,
                    l0: c.l0,
                    a_n_rad_s: c.a_n,
                    b_n_rad_s: c.b_n,
                    pi_pulse_s: (c.b_n > 0.0).then(|| c.pi_pulse()),
                })
                .collect::<Vec<_>>(),
        ),
    }
}

fn cmd_simulate(p: &PhysicalParams, a: &SimulateArgs, th: &RegimeThresholds) -> Result<Vec<u8>> {
    let p = with_command_overrides(*p, a.l0)?;
    let d = p.derive()?;
    let n = a.n.unwrap_or(p.n0);
    if !a.allow_violated && params::validate_bragg_regime(&d, n, th) == RegimeVerdict::Violated {
        return Err(Error::RegimeViolated {
            ratio: d.ratio_for(n),
        });
    }
    let duration = match (a.duration, a.pi_pulses) {
        (Some(t), None) => t,
        (None, Some(k)) => {
            // the vacuum branch has no pulse of its own; time it by the Fock branch
            let branch = if n == 0 { p.n0 } else { n };
            let b = adiabatic::coupling_magnitude(branch, p.l0, &d);
            if !(b > 0.0) {
                return Err(invalid("--pi-pulses needs a nonzero coupling"));
            }
            k * std::f64::consts::PI / b
        }
        _ => return Err(invalid("give exactly one of --duration or --pi-pulses")),
    };
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(invalid(format!("duration must be >= 0, got {duration}")));
    }
    let direction = match a.direction {
        DirectionArg::Plus => Direction::Plus,
        DirectionArg::Minus => Direction::Minus,
    };
    let range = LadderRange::default_for(p.l0);
    let h = ladder::build_hamiltonian(n, p.l0, range, &d, a.stark)?;
    let s0 = ladder::initial_state_in(p.l0, direction, n, range)?;
    let ts = ladder::time_series(&s0, &h, duration, a.samples, &EvolveOptions::default())?;
    let mut buf = Vec::new();
    ts.write_csv(&mut buf)?;
    Ok(buf)
}

fn validation_options(samples: usize, stark: bool, th: &RegimeThresholds) -> ValidationOptions {
    ValidationOptions {
        samples,
        include_stark: stark,
        thresholds: *th,
        ..ValidationOptions::default()
    }
}

fn cmd_validate(p: &PhysicalParams, a: &ValidateArgs, th: &RegimeThresholds) -> Result<Vec<u8>> {
    let p = with_command_overrides(*p, a.l0)?;
    let n = a.n.unwrap_or(p.n0);
    json(&validation::validate(&p, n, &validation_options(a.samples, a.stark, th))?)
}

fn cmd_sweep(p: &PhysicalParams, a: &SweepArgs, th: &RegimeThresholds) -> Result<Vec<u8>> {
    let values = config::parse_value_list(&a.values)?;
    let rows = validation::sweep(p, a.var, &values, &validation_options(a.samples, a.stark, th))?;
    match a.format {
        Format::Csv => {
            let mut buf = Vec::new();
            validation::write_sweep_csv(&rows, &mut buf)?;
            Ok(buf)
        }
        Format::Json => json(&rows),
    }
}
