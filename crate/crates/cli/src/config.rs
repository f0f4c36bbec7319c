//! Layered run configuration: command-line flags over a JSON config file over defaults.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nhssh_core::lattice::ModelParams;
use nhssh_core::realspace::DEFAULT_SITE_CAP;
use nhssh_core::topology::{MIN_CLASSIFY_POINTS, MIN_TRACK_POINTS};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 12345;
pub const SEED_ENV: &str = "NHSSH_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Closed-form Bloch bands z_n(k) over [-pi, pi]
    Bands,
    /// Biorthogonal Wilson-loop Zak phase (all bands and the occupied pair)
    Zak,
    /// TR / NTR / GL labels over a theta-u grid
    PhaseDiagram,
    /// Open-chain spectra with edge-mode markers over a u axis
    Obc,
    /// Open, periodic and k-sampled Bloch spectra at one (theta, u)
    ComparePbcObc,
    /// Edge-mode IPR per class over a u axis
    Ipr,
    /// Edge-mode survival under Gaussian disorder
    Robustness,
    /// EP1 / EP2 wavenumbers over a u axis
    EpTrace,
    /// u1c, um, u2c at one theta
    CriticalPoints,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Zak => "zak",
            Command::PhaseDiagram => "phase-diagram",
            Command::Obc => "obc",
            Command::ComparePbcObc => "compare-pbc-obc",
            Command::Ipr => "ipr",
            Command::Robustness => "robustness",
            Command::EpTrace => "ep-trace",
            Command::CriticalPoints => "critical-points",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One configuration layer. Every field is optional; the JSON config file uses the same keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Only meaningful in a config file; must match the subcommand if given.
    #[arg(skip)]
    pub subcommand: Option<Command>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub w: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Phase angle in radians
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Phase angle as a multiple of pi (0.25 means pi/4)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta_pi: Option<f64>,
    /// Gain/loss strength
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// Brillouin-zone points
    #[arg(long, global = true)]
    pub n_k: Option<usize>,
    /// Unit cells in the finite chain
    #[arg(long, global = true)]
    pub n_cells: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub u_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub u_max: Option<f64>,
    #[arg(long, global = true)]
    pub n_u: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub theta_max: Option<f64>,
    #[arg(long, global = true)]
    pub n_theta: Option<usize>,
    /// Relative disorder strength
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub zero_tol: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub edge_fraction: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub ipr_floor: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "nhssh", version, about = "Staggered non-Hermitian SSH chain toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON file with any of the flag names (underscored) as keys
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

/// Fully resolved configuration, echoed into every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: Command,
    pub w: f64,
    pub delta: f64,
    pub theta: f64,
    pub u: f64,
    pub n_k: usize,
    pub n_cells: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub n_u: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub n_theta: usize,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub zero_tol: f64,
    pub edge_fraction: f64,
    pub ipr_floor: f64,
    pub format: Format,
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config file {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0} sets both theta and theta_pi")]
    ThetaConflict(&'static str),
    #[error("config file names subcommand `{file}` but `{cli}` was invoked")]
    SubcommandMismatch { file: &'static str, cli: &'static str },
    #[error("{SEED_ENV}={0:?} is not an unsigned 64-bit integer")]
    BadSeedEnv(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

pub fn read_config_file(path: &Path) -> Result<Settings, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
}

fn layer_theta(s: &Settings, layer: &'static str) -> Result<Option<f64>, ConfigError> {
    match (s.theta, s.theta_pi) {
        (Some(_), Some(_)) => Err(ConfigError::ThetaConflict(layer)),
        (t, tp) => Ok(t.or(tp.map(|x| x * PI))),
    }
}

fn invalid(msg: String) -> ConfigError {
    ConfigError::Invalid(msg)
}

/// Merge flags over the file layer over defaults, then validate every range.
///
/// The seed follows flag, then `NHSSH_SEED`, then the file, then the default.
pub fn resolve(
    command: Command,
    flags: &Settings,
    file: Option<&Settings>,
    env_seed: Option<&str>,
) -> Result<RunConfig, ConfigError> {
    let empty = Settings::default();
    let file = file.unwrap_or(&empty);
    if let Some(sc) = file.subcommand {
        if sc != command {
            return Err(ConfigError::SubcommandMismatch { file: sc.name(), cli: command.name() });
        }
    }
    macro_rules! pick {
        ($field:ident, $default:expr) => {
            flags.$field.clone().or(file.$field.clone()).unwrap_or($default)
        };
    }
    let theta = match layer_theta(flags, "the command line")? {
        Some(t) => t,
        None => layer_theta(file, "the config file")?.unwrap_or(PI / 4.0),
    };
    let env_seed = env_seed
        .map(|s| s.trim().parse::<u64>().map_err(|_| ConfigError::BadSeedEnv(s.to_string())))
        .transpose()?;
    let seed = flags.seed.or(env_seed).or(file.seed).unwrap_or(DEFAULT_SEED);
    let default_n_k = if command == Command::PhaseDiagram { 256 } else { 512 };
    let default_n_u = match command {
        Command::PhaseDiagram => 101,
        Command::EpTrace => 401,
        _ => 41,
    };
    let cfg = RunConfig {
        subcommand: command,
        w: pick!(w, 1.0),
        delta: pick!(delta, 0.3),
        theta,
        u: pick!(u, 0.5),
        n_k: pick!(n_k, default_n_k),
        n_cells: pick!(n_cells, 50),
        u_min: pick!(u_min, 0.0),
        u_max: pick!(u_max, 4.0),
        n_u: pick!(n_u, default_n_u),
        theta_min: pick!(theta_min, -PI),
        theta_max: pick!(theta_max, PI),
        n_theta: pick!(n_theta, 101),
        sigma: pick!(sigma, 0.2),
        trials: pick!(trials, 20),
        seed,
        zero_tol: pick!(zero_tol, 1e-3),
        edge_fraction: pick!(edge_fraction, 0.1),
        ipr_floor: pick!(ipr_floor, 0.05),
        format: pick!(format, Format::Csv),
        output: flags.output.clone().or(file.output.clone()),
    };
    validate(&cfg)?;
    Ok(cfg)
}

pub fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    ModelParams::new(c.w, c.delta, c.theta, c.u).map_err(|e| invalid(e.to_string()))?;
    let min_nk = match c.subcommand {
        Command::Zak => MIN_TRACK_POINTS,
        Command::PhaseDiagram => MIN_CLASSIFY_POINTS,
        _ => 1,
    };
    if c.n_k < min_nk {
        return Err(invalid(format!("n_k must satisfy n_k >= {min_nk} (got {})", c.n_k)));
    }
    let max_cells = DEFAULT_SITE_CAP / 4;
    if !(2..=max_cells).contains(&c.n_cells) {
        return Err(invalid(format!("n_cells must satisfy 2 <= n_cells <= {max_cells} (got {})", c.n_cells)));
    }
    if !(c.u_min.is_finite() && c.u_max.is_finite() && 0.0 <= c.u_min && c.u_min <= c.u_max) {
        return Err(invalid(format!("u axis must satisfy 0 <= u_min <= u_max (got {}..{})", c.u_min, c.u_max)));
    }
    if !(-PI <= c.theta_min && c.theta_min <= c.theta_max && c.theta_max <= PI) {
        return Err(invalid(format!(
            "theta axis must satisfy -pi <= theta_min <= theta_max <= pi (got {}..{})",
            c.theta_min, c.theta_max
        )));
    }
    if c.n_u == 0 {
        return Err(invalid("n_u must satisfy n_u >= 1 (got 0)".into()));
    }
    if c.n_theta == 0 {
        return Err(invalid("n_theta must satisfy n_theta >= 1 (got 0)".into()));
    }
    if !(c.sigma.is_finite() && c.sigma >= 0.0) {
        return Err(invalid(format!("sigma must satisfy sigma >= 0 (got {})", c.sigma)));
    }
    if c.trials == 0 {
        return Err(invalid("trials must satisfy trials >= 1 (got 0)".into()));
    }
    if !(c.zero_tol > 0.0 && c.zero_tol.is_finite()) {
        return Err(invalid(format!("zero_tol must satisfy zero_tol > 0 (got {})", c.zero_tol)));
    }
    if !(c.edge_fraction > 0.0 && c.edge_fraction <= 0.5) {
        return Err(invalid(format!("edge_fraction must satisfy 0 < edge_fraction <= 0.5 (got {})", c.edge_fraction)));
    }
    if !(0.0..=1.0).contains(&c.ipr_floor) {
        return Err(invalid(format!("ipr_floor must satisfy 0 <= ipr_floor <= 1 (got {})", c.ipr_floor)));
    }
    Ok(())
}

/// Parse argv and the optional config file into a RunConfig.
pub fn parse_config<I, T>(argv: I, env_seed: Option<&str>) -> Result<RunConfig, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ParseFailure::Usage)?;
    let file = cli.config.as_deref().map(read_config_file).transpose()?;
    Ok(resolve(cli.command, &cli.settings, file.as_ref(), env_seed)?)
}

#[derive(Debug, thiserror::Error)]
pub enum ParseFailure {
    #[error(transparent)]
    Usage(clap::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
