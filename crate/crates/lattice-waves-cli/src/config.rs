//! Run configuration: command-line flags layered over an optional TOML file.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file,
//! `--set section.key=value` overrides, and the named flags.  All layers are
//! merged into one TOML table before it is deserialized, so unknown keys are
//! rejected no matter where they come from.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lattice_waves::{DimerKind, DimerParams};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

/// Default seed of the random test vectors embedded in the pipelines.
pub const DEFAULT_SEED: u64 = 0xD1EE4;

/// Long-wave traveling waves in diatomic FPUT lattices: batch analyses with
/// CSV/JSON artifacts and a manifest of embedded checks.
///
/// Exit status: 0 when every embedded check passes, 2 for invalid
/// configuration, 3 for numerical failures or failed checks.
#[derive(Debug, Parser)]
#[command(name = "lattice-waves", version = env!("LATTICE_WAVES_VERSION"))]
pub struct Cli {
    /// Analysis to run.
    #[command(subcommand)]
    pub command: Command,
    /// Configuration overrides.
    #[command(flatten)]
    pub flags: Flags,
}

/// Analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Dispersion relation: sound speed, critical frequency, root multiplicities.
    Dispersion,
    /// Generalized kernel: Jordan chain, reversibility, spectral-projection checks.
    Spectral,
    /// Nondegeneracy constants of the reduced dynamics.
    Nondegeneracy,
    /// Leading-order solitary and nanopteron profiles (mass or spring dimers).
    Profile,
    /// Fourier-collocation nanopterons and ripple-amplitude scan (mass or spring dimers).
    Beale,
    /// Lattice simulation of a computed nanopteron and the KdV residual scan (mass or spring dimers).
    Simulate,
    /// Every analysis, one subdirectory each, plus a summary table.
    FullReport,
}

impl Command {
    /// Name used for directories and messages.
    pub fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Spectral => "spectral",
            Command::Nondegeneracy => "nondegeneracy",
            Command::Profile => "profile",
            Command::Beale => "beale",
            Command::Simulate => "simulate",
            Command::FullReport => "full-report",
        }
    }

    /// Whether the command needs the reversibility of a mass or spring dimer.
    pub fn needs_symmetry(self) -> bool {
        matches!(self, Command::Profile | Command::Beale | Command::Simulate | Command::FullReport)
    }
}

/// Which special dimer to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimerChoice {
    /// Identical springs (`kappa = beta = 1`), alternating masses.
    Mass,
    /// Unit masses (`w = 1`), alternating springs.
    Spring,
}

/// Artifact formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// CSV tables only.
    Csv,
    /// JSON documents only.
    Json,
    /// Both.
    #[default]
    Both,
}

impl Format {
    /// Whether CSV tables are written.
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    /// Whether JSON documents are written.
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Named flags; each maps onto one or more configuration keys.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML configuration file (sections: params, dispersion, spectral, profile, beale, simulate).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Linear stiffness ratio (params.kappa) [default: 1, or 2 for --dimer spring].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Quadratic coefficient of the even spring (params.beta) [default: 1].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Mass ratio (params.w) [default: 2, or 1 for --dimer spring].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub w: Option<f64>,
    /// Special dimer (params.dimer); fixes kappa = beta = 1 (mass) or w = 1 (spring).
    #[arg(long, global = true, value_enum)]
    pub dimer: Option<DimerChoice>,
    /// Comma-separated, strictly decreasing long-wave parameters (beale.nu_list) [default: 0.4,0.3,0.25,0.2].
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub nu_list: Option<Vec<f64>>,
    /// Comma-separated long-wave parameters (profile.eps_list and simulate.eps_list)
    /// [default: 0.1,0.2,0.3 and 0.4,0.3,0.2].
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub eps_list: Option<Vec<f64>>,
    /// Ripple amplitude of the leading-order profile (profile.alpha) [default: 0].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Fourier modes of the collocation solver (beale.modes, simulate.modes) [default: automatic].
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// Half-length of the periodic domain (beale.domain_half_length, simulate.domain_half_length)
    /// [default: 30/nu and 130].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub domain_half_length: Option<f64>,
    /// Residual tolerance of the Newton solvers (tol) [default: 1e-11].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Output directory (out) [default: lattice-waves-out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Artifact format (format) [default: both].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed of the random test vectors, decimal or 0x-hex (seed) [default: 0xD1EE4].
    #[arg(long, global = true, value_parser = parse_seed)]
    pub seed: Option<u64>,
    /// Override any configuration key by its dotted path, e.g. `simulate.dt=0.005`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

/// Dimer parameters as configured.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    /// Special dimer, if any.
    pub dimer: Option<DimerChoice>,
    /// Linear stiffness ratio.
    pub kappa: Option<f64>,
    /// Quadratic coefficient of the even spring.
    pub beta: Option<f64>,
    /// Mass ratio.
    pub w: Option<f64>,
}

/// Knobs of the dispersion analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionSection {
    /// Wavenumbers sampled on `[0, pi]` for the branch table.
    pub points: usize,
    /// Supersonic offset `c^2 - c_s^2` used for the off-sonic multiplicities, in `(0, 0.25]`.
    pub supersonic_offset: f64,
}

impl Default for DispersionSection {
    fn default() -> Self {
        Self { points: 201, supersonic_offset: 0.1 }
    }
}

/// Knobs of the generalized-kernel analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSection {
    /// Number of random states in the projection checks.
    pub samples: usize,
    /// Threshold of the projection and chain checks.
    pub check_tol: f64,
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self { samples: 8, check_tol: 1e-8 }
    }
}

/// Knobs of the leading-order profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    /// Long-wave parameters.
    pub eps_list: Vec<f64>,
    /// Ripple amplitude.
    pub alpha: f64,
    /// Ripple phase shift.
    pub theta: f64,
    /// Half-length of the grid in the long-wave variable.
    pub half_length: f64,
    /// Grid points.
    pub points: usize,
    /// Threshold of the normal-form residual check.
    pub check_tol: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self { eps_list: vec![0.1, 0.2, 0.3], alpha: 0.0, theta: 0.0, half_length: 20.0, points: 801, check_tol: 1e-10 }
    }
}

/// Knobs of the collocation solver and amplitude scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BealeSection {
    /// Strictly decreasing long-wave parameters.
    pub nu_list: Vec<f64>,
    /// Fourier modes (automatic when absent).
    pub modes: Option<usize>,
    /// Half-length of the single-domain solves (`length_factor / nu` when absent).
    pub domain_half_length: Option<f64>,
    /// Base half-length of the scan domains, in units of `1 / nu`.
    pub length_factor: f64,
    /// Domains per scan point.
    pub domains: usize,
    /// Whether to run the amplitude scan (needs at least two values of `nu`).
    pub scan: bool,
    /// Threshold of the symmetry check.
    pub check_tol: f64,
}

impl Default for BealeSection {
    fn default() -> Self {
        Self {
            nu_list: vec![0.4, 0.3, 0.25, 0.2],
            modes: None,
            domain_half_length: None,
            length_factor: 30.0,
            domains: 8,
            scan: true,
            check_tol: 1e-10,
        }
    }
}

/// Knobs of the lattice simulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Long-wave parameter of the simulated nanopteron.
    pub nu: f64,
    /// Half-length of its domain; the chain has `2 L` sites.
    pub domain_half_length: f64,
    /// Fourier modes (automatic when absent).
    pub modes: Option<usize>,
    /// Time step.
    pub dt: f64,
    /// Final time (`50 / c` when absent).
    pub t_end: Option<f64>,
    /// Keep every `stride`-th step.
    pub stride: usize,
    /// Write every `site_stride`-th site to the trace.
    pub site_stride: usize,
    /// Largest admissible relative energy drift.
    pub energy_tol: f64,
    /// Largest admissible deviation from the seeding profile, relative to the
    /// peak.
    pub shape_tol: f64,
    /// Long-wave parameters of the KdV residual scan.
    pub eps_list: Vec<f64>,
    /// KdV time scale: runs last `t0 / eps^3`.
    pub t0: f64,
    /// Time step of the KdV runs.
    pub kdv_dt: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            nu: 0.25,
            domain_half_length: 130.0,
            modes: None,
            dt: 0.01,
            t_end: None,
            stride: 100,
            site_stride: 1,
            energy_tol: 1e-6,
            shape_tol: 1e-3,
            eps_list: vec![0.4, 0.3, 0.2],
            t0: 1.0,
            kdv_dt: 0.02,
        }
    }
}

/// Complete configuration (echoed verbatim into the manifest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Output directory.
    pub out: PathBuf,
    /// Artifact format.
    pub format: Format,
    /// Seed of the random test vectors.
    pub seed: u64,
    /// Residual tolerance of the Newton solvers.
    pub tol: f64,
    /// Dimer parameters.
    pub params: ParamsSection,
    /// Dispersion knobs.
    pub dispersion: DispersionSection,
    /// Generalized-kernel knobs.
    pub spectral: SpectralSection,
    /// Leading-order profile knobs.
    pub profile: ProfileSection,
    /// Collocation knobs.
    pub beale: BealeSection,
    /// Simulation knobs.
    pub simulate: SimulateSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            out: PathBuf::from("lattice-waves-out"),
            format: Format::Both,
            seed: DEFAULT_SEED,
            tol: 1e-11,
            params: ParamsSection::default(),
            dispersion: DispersionSection::default(),
            spectral: SpectralSection::default(),
            profile: ProfileSection::default(),
            beale: BealeSection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

/// A validated run: command, configuration and resolved dimer.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Analysis to run.
    pub command: Command,
    /// All knobs.
    pub config: Config,
    /// Resolved dimer parameters.
    pub params: DimerParams,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Insert `value` at a dotted `path`, creating sections as needed.
fn set_dotted(table: &mut Table, path: &str, value: Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| config_err(format!("empty key in {path:?}")))?;
    let mut cur = table;
    for part in parts {
        let entry = cur.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| config_err(format!("{part:?} in {path:?} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parse the value of a `--set` override as a TOML value, falling back to a
/// bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::Float(x)).collect())
}

fn enum_value<T: Serialize>(v: &T) -> Value {
    Value::try_from(v).expect("enum serializes to a string")
}

fn file_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config file {}: {e}", path.display())))?;
    text.parse::<Table>().map_err(|e| config_err(format!("config file {}: {e}", path.display())))
}

/// Merge the configuration layers into one table.
pub fn merged_table(flags: &Flags) -> Result<Table, CliError> {
    let mut t = match &flags.config {
        Some(path) => file_table(path)?,
        None => Table::new(),
    };
    for item in &flags.set {
        let (key, raw) =
            item.split_once('=').ok_or_else(|| config_err(format!("--set expects KEY=VALUE, got {item:?}")))?;
        set_dotted(&mut t, key.trim(), parse_value(raw.trim()))?;
    }
    let mut named: Vec<(&str, Value)> = Vec::new();
    if let Some(v) = flags.kappa {
        named.push(("params.kappa", Value::Float(v)));
    }
    if let Some(v) = flags.beta {
        named.push(("params.beta", Value::Float(v)));
    }
    if let Some(v) = flags.w {
        named.push(("params.w", Value::Float(v)));
    }
    if let Some(v) = flags.dimer {
        named.push(("params.dimer", enum_value(&v)));
    }
    if let Some(v) = &flags.nu_list {
        named.push(("beale.nu_list", floats(v)));
    }
    if let Some(v) = &flags.eps_list {
        named.push(("profile.eps_list", floats(v)));
        named.push(("simulate.eps_list", floats(v)));
    }
    if let Some(v) = flags.alpha {
        named.push(("profile.alpha", Value::Float(v)));
    }
    if let Some(v) = flags.modes {
        let v = Value::Integer(i64::try_from(v).map_err(|_| config_err("modes out of range"))?);
        named.push(("beale.modes", v.clone()));
        named.push(("simulate.modes", v));
    }
    if let Some(v) = flags.domain_half_length {
        named.push(("beale.domain_half_length", Value::Float(v)));
        named.push(("simulate.domain_half_length", Value::Float(v)));
    }
    if let Some(v) = flags.tol {
        named.push(("tol", Value::Float(v)));
    }
    if let Some(v) = &flags.out {
        named.push(("out", Value::String(v.to_string_lossy().into_owned())));
    }
    if let Some(v) = flags.format {
        named.push(("format", enum_value(&v)));
    }
    if let Some(v) = flags.seed {
        let v = i64::try_from(v).map_err(|_| config_err("seed must be below 2^63"))?;
        named.push(("seed", Value::Integer(v)));
    }
    for (key, value) in named {
        set_dotted(&mut t, key, value)?;
    }
    Ok(t)
}

/// Build and validate the run configuration.
///
/// # Errors
/// [`CliError::Config`] for unreadable or malformed files, unknown keys,
/// invalid values and commands the dimer does not support.
pub fn parse_config(command: Command, flags: &Flags) -> Result<RunConfig, CliError> {
    let table = merged_table(flags)?;
    let config: Config = Value::Table(table).try_into().map_err(|e: toml::de::Error| config_err(e.to_string().trim_end()))?;
    validate(&config)?;
    let params = resolve_params(&config.params)?;
    if command.needs_symmetry() && params.kind() == DimerKind::General {
        return Err(config_err(format!(
            "`{}` requires a mass dimer (kappa = 1, beta = 1) or a spring dimer (w = 1); \
             the general dimer kappa = {}, beta = {}, w = {} has no reversibility symmetry",
            command.name(),
            params.kappa,
            params.beta,
            params.w
        )));
    }
    Ok(RunConfig { command, config, params })
}

/// Turn the parameter section into a dimer.
///
/// # Errors
/// [`CliError::Config`] when the values contradict the chosen special dimer
/// or violate the parameter invariants.
pub fn resolve_params(s: &ParamsSection) -> Result<DimerParams, CliError> {
    let fixed = |name: &str, given: Option<f64>, required: f64, dimer: &str| -> Result<f64, CliError> {
        match given {
            Some(v) if v != required => {
                Err(config_err(format!("a {dimer} dimer requires {name} = {required}, got {name} = {v}")))
            }
            _ => Ok(required),
        }
    };
    let (kappa, beta, w) = match s.dimer {
        Some(DimerChoice::Mass) => {
            (fixed("kappa", s.kappa, 1.0, "mass")?, fixed("beta", s.beta, 1.0, "mass")?, s.w.unwrap_or(2.0))
        }
        Some(DimerChoice::Spring) => (s.kappa.unwrap_or(2.0), s.beta.unwrap_or(1.0), fixed("w", s.w, 1.0, "spring")?),
        None => (s.kappa.unwrap_or(1.0), s.beta.unwrap_or(1.0), s.w.unwrap_or(2.0)),
    };
    for (name, v) in [("kappa", kappa), ("w", w)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(config_err(format!("{name} must be a finite number > 0, got {v}")));
        }
    }
    DimerParams::new(kappa, beta, w).map_err(|e| config_err(e.to_string()))
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be a finite number > 0, got {v}")))
    }
}

fn nonempty_positive(name: &str, xs: &[f64]) -> Result<(), CliError> {
    if xs.is_empty() {
        return Err(config_err(format!("{name} must not be empty")));
    }
    xs.iter().try_for_each(|&x| positive(&format!("every entry of {name}"), x))
}

fn at_least(name: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be >= {min}, got {v}")))
    }
}

/// Check the documented invariants of every knob.
pub fn validate(c: &Config) -> Result<(), CliError> {
    positive("tol", c.tol)?;
    at_least("dispersion.points", c.dispersion.points, 2)?;
    let delta = c.dispersion.supersonic_offset;
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(config_err(format!("dispersion.supersonic_offset must lie in (0, 0.25], got {delta}")));
    }
    at_least("spectral.samples", c.spectral.samples, 1)?;
    positive("spectral.check_tol", c.spectral.check_tol)?;
    nonempty_positive("profile.eps_list", &c.profile.eps_list)?;
    if !(c.profile.alpha >= 0.0 && c.profile.alpha.is_finite()) {
        return Err(config_err(format!("profile.alpha must be >= 0, got {}", c.profile.alpha)));
    }
    if !c.profile.theta.is_finite() {
        return Err(config_err("profile.theta must be finite"));
    }
    positive("profile.half_length", c.profile.half_length)?;
    at_least("profile.points", c.profile.points, 2)?;
    positive("profile.check_tol", c.profile.check_tol)?;
    nonempty_positive("beale.nu_list", &c.beale.nu_list)?;
    if c.beale.nu_list.windows(2).any(|p| p[1] >= p[0]) {
        return Err(config_err("beale.nu_list must be strictly decreasing"));
    }
    if let Some(m) = c.beale.modes {
        at_least("beale.modes", m, 8)?;
    }
    if let Some(l) = c.beale.domain_half_length {
        positive("beale.domain_half_length", l)?;
    }
    positive("beale.length_factor", c.beale.length_factor)?;
    at_least("beale.domains", c.beale.domains, 3)?;
    positive("beale.check_tol", c.beale.check_tol)?;
    let s = &c.simulate;
    positive("simulate.nu", s.nu)?;
    positive("simulate.domain_half_length", s.domain_half_length)?;
    if let Some(m) = s.modes {
        at_least("simulate.modes", m, 8)?;
    }
    positive("simulate.dt", s.dt)?;
    if let Some(t) = s.t_end {
        positive("simulate.t_end", t)?;
    }
    at_least("simulate.stride", s.stride, 1)?;
    at_least("simulate.site_stride", s.site_stride, 1)?;
    positive("simulate.energy_tol", s.energy_tol)?;
    positive("simulate.shape_tol", s.shape_tol)?;
    nonempty_positive("simulate.eps_list", &s.eps_list)?;
    positive("simulate.t0", s.t0)?;
    positive("simulate.kdv_dt", s.kdv_dt)?;
    Ok(())
}
