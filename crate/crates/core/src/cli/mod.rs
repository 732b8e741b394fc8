//! Command-line front end: `eelab <command> [--config FILE] [--key value ...]`.
//!
//! A config file holds one `key = value` per line; `#` starts a comment.
//! Flags override file values, and file values override the defaults listed
//! in [`KEYS`].

mod run;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction};

use crate::densities::{DensityModel, TabulatedDensity};
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::lattice::BoxGeometry;
use crate::resolvent::SpectralParameter;

pub use run::{execute, write_manifest, RunReport};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "EELAB_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGRADED: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_IO: i32 = 1;

#[derive(Clone, Copy, Debug)]
pub struct KeySpec {
    pub name: &'static str,
    pub flag: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(
    name: &'static str,
    flag: &'static str,
    default: &'static str,
    help: &'static str,
) -> KeySpec {
    KeySpec {
        name,
        flag,
        default,
        help,
    }
}

pub const KEYS: &[KeySpec] = &[
    key(
        "dimension",
        "dimension",
        "1",
        "lattice dimension d (1 or 2)",
    ),
    key("half_width", "half-width", "256", "box is [-N, N]^d"),
    key(
        "block_half_width",
        "block-half-width",
        "0",
        "default block half width M (must be <= N)",
    ),
    key(
        "density",
        "density",
        "exponential",
        "exponential | shifted_exponential | half_gaussian | tabulated | point_mass",
    ),
    key(
        "density_rate",
        "density-rate",
        "1",
        "rate a of the exponential kinds",
    ),
    key(
        "density_offset",
        "density-offset",
        "0",
        "offset of shifted_exponential",
    ),
    key(
        "density_scale",
        "density-scale",
        "1",
        "scale of half_gaussian",
    ),
    key(
        "density_at",
        "density-at",
        "0",
        "location of point_mass (deterministic potential)",
    ),
    key(
        "density_file",
        "density-file",
        "",
        "two-column table (v, f(v)) for the tabulated kind",
    ),
    key(
        "kappa",
        "kappa",
        "auto",
        "declared finite-moment exponent; auto picks the kind's default",
    ),
    key("fermi_energy", "fermi-energy", "1", "Fermi energy E > 0"),
    key(
        "realizations",
        "realizations",
        "2000",
        "number of disorder realizations n >= 2",
    ),
    key(
        "master_seed",
        "master-seed",
        "20240917",
        "seed of the whole run",
    ),
    key("shift_t", "shift-t", "0", "shift t >= 0 added to V(0)"),
    key(
        "threads",
        "threads",
        "",
        "worker threads; empty uses $EELAB_THREADS, else all cores",
    ),
    key("m_list", "m-list", "25,50,100", "block half widths M"),
    key("t_list", "t-list", "2,5,10,20,50", "origin shifts t > E"),
    key(
        "t_grid",
        "t-grid",
        "0.5,1,2,5",
        "t values for density checks and the eps = 0 bound",
    ),
    key(
        "mean_s_minus",
        "mean-s-minus",
        "",
        "hcr-bound: use this E{S-} with eps = 0 instead of measuring",
    ),
    key("s", "s", "0.5", "fractional exponent s in (0, 1)"),
    key("lambda", "lambda", "0.5", "real part of z"),
    key("eta", "eta", "0.1", "imaginary part of z (nonzero)"),
    key(
        "pairs",
        "pairs",
        "1:-1,2:-1,3:-1,4:-1,5:-1,6:-1,7:-1,8:-1,9:-1,10:-1,11:-1,12:-1,13:-1,14:-1,15:-1",
        "site pairs x:y",
    ),
    key(
        "rank_one_t",
        "rank-one-t",
        "50",
        "shift used by the rank-one identity check",
    ),
    key(
        "alpha",
        "alpha",
        "0.5",
        "exponent of the entropy upper-bound sum, in (0, 1)",
    ),
    key(
        "r_max",
        "r-max",
        "20",
        "largest distance in the projection decay profile",
    ),
    key(
        "hcr_samples",
        "hcr-samples",
        "100000",
        "samples in the HCR toy check",
    ),
    key(
        "output_dir",
        "output-dir",
        ".",
        "directory for CSV files and the manifest",
    ),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    VarianceScan,
    ShiftDecay,
    HcrBound,
    Splitting,
    ProjectionDecay,
    ResolventCheck,
    FractionalMoments,
    AreaLaw2d,
    DensityCheck,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::VarianceScan,
        Command::ShiftDecay,
        Command::HcrBound,
        Command::Splitting,
        Command::ProjectionDecay,
        Command::ResolventCheck,
        Command::FractionalMoments,
        Command::AreaLaw2d,
        Command::DensityCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VarianceScan => "variance-scan",
            Command::ShiftDecay => "shift-decay",
            Command::HcrBound => "hcr-bound",
            Command::Splitting => "splitting",
            Command::ProjectionDecay => "projection-decay",
            Command::ResolventCheck => "resolvent-check",
            Command::FractionalMoments => "fractional-moments",
            Command::AreaLaw2d => "area-law-2d",
            Command::DensityCheck => "density-check",
        }
    }

    fn about(self) -> &'static str {
        match self {
            Command::VarianceScan => "block-entropy mean/variance per M, 2 Var{S-} and the bound A",
            Command::ShiftDecay => "E{S-} under an origin shift t, with eps(t)",
            Command::HcrBound => "the curve A(t) and its maximum",
            Command::Splitting => "block entropy minus its two single-cut parts, per M",
            Command::ProjectionDecay => "mean |P(0, r)| and its exponential fit",
            Command::ResolventCheck => "rank-one, Weyl and half-line resolvent identities",
            Command::FractionalMoments => "E{|G(x, y; z)|^s} over pairs and over shifts",
            Command::AreaLaw2d => "S / L statistics for square blocks in d = 2",
            Command::DensityCheck => "F(t), J(t), the Jensen bound and the HCR toy check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Fully validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Every key with its resolved textual value.
    pub values: BTreeMap<String, String>,
    pub ensemble: EnsembleConfig,
    pub m_list: Vec<usize>,
    pub t_list: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub mean_s_minus: Option<f64>,
    pub s: f64,
    pub z: SpectralParameter,
    pub pairs: Vec<(i64, i64)>,
    pub rank_one_t: f64,
    pub alpha: f64,
    pub r_max: usize,
    pub hcr_samples: usize,
    pub output_dir: PathBuf,
}

fn key_spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// Parses `key = value` lines. Unknown keys are rejected.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let k = k.trim();
        if key_spec(k).is_none() {
            return Err(Error::Config(format!(
                "unknown key `{k}` on line {}",
                lineno + 1
            )));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("invalid value {value:?} for key `{key}`: {what}"))
}

fn number<T: std::str::FromStr>(values: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let v = &values[key];
    v.parse()
        .map_err(|_| bad(key, v, "not a number of the expected type"))
}

fn list<T: std::str::FromStr>(values: &BTreeMap<String, String>, key: &str) -> Result<Vec<T>> {
    let v = &values[key];
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| bad(key, v, "expected a comma-separated list"))
        })
        .collect()
}

fn pairs(values: &BTreeMap<String, String>) -> Result<Vec<(i64, i64)>> {
    let v = &values["pairs"];
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            let (x, y) = p
                .split_once(':')
                .ok_or_else(|| bad("pairs", v, "expected x:y entries"))?;
            let parse = |s: &str| {
                s.trim()
                    .parse()
                    .map_err(|_| bad("pairs", v, "expected integers"))
            };
            Ok((parse(x)?, parse(y)?))
        })
        .collect()
}

/// Tags a constraint violation with the key responsible for it.
fn blame(key: &str, e: Error) -> Error {
    match e {
        Error::Config(m) | Error::Domain(m) | Error::Range(m) if !m.contains(key) => {
            Error::Config(format!("key `{key}`: {m}"))
        }
        Error::Domain(m) | Error::Range(m) => Error::Config(m),
        e => e,
    }
}

fn density_from(values: &BTreeMap<String, String>) -> Result<DensityModel> {
    let kind = values["density"].as_str();
    let model = match kind {
        "exponential" => DensityModel::exponential(number(values, "density_rate")?),
        "shifted_exponential" => DensityModel::shifted_exponential(
            number(values, "density_rate")?,
            number(values, "density_offset")?,
        ),
        "half_gaussian" => DensityModel::half_gaussian(number(values, "density_scale")?),
        "point_mass" => DensityModel::point_mass(number(values, "density_at")?),
        "tabulated" => {
            let path = &values["density_file"];
            if path.is_empty() {
                return Err(Error::Config(
                    "key `density_file` is required for the tabulated density".into(),
                ));
            }
            let (table, _) = TabulatedDensity::load(path).map_err(|e| blame("density_file", e))?;
            DensityModel::tabulated(table)
        }
        other => return Err(bad("density", other, "unknown density kind")),
    };
    let model = match values["kappa"].as_str() {
        "auto" => model,
        _ => model.with_kappa(number(values, "kappa")?),
    };
    model.validate()?;
    Ok(model)
}

/// Resolves defaults, file values and flag values into a validated config.
pub fn resolve(
    command: Command,
    file: &BTreeMap<String, String>,
    flags: &BTreeMap<String, String>,
) -> Result<ExperimentConfig> {
    let mut values: BTreeMap<String, String> = KEYS
        .iter()
        .map(|k| (k.name.to_string(), k.default.to_string()))
        .collect();
    if let Ok(t) = std::env::var(THREADS_ENV) {
        values.insert("threads".into(), t);
    }
    for (k, v) in file.iter().chain(flags) {
        if key_spec(k).is_none() {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        values.insert(k.clone(), v.clone());
    }
    if values["threads"].is_empty() {
        values.insert("threads".into(), "0".into());
    }

    let dimension: usize = number(&values, "dimension")?;
    let half_width: usize = number(&values, "half_width")?;
    let block: usize = number(&values, "block_half_width")?;
    let geometry = BoxGeometry::new(dimension, half_width, block)?;
    let density = density_from(&values)?;
    let mut ensemble = EnsembleConfig::new(
        geometry,
        density,
        number(&values, "fermi_energy")?,
        number(&values, "realizations")?,
        number(&values, "master_seed")?,
    );
    ensemble.shift_t = number(&values, "shift_t")?;
    ensemble.threads = number(&values, "threads")?;
    ensemble.validate()?;

    let z = SpectralParameter::new(number(&values, "lambda")?, number(&values, "eta")?)
        .map_err(|e| blame("eta", e))?;
    let s: f64 = number(&values, "s")?;
    if !(s > 0.0 && s < 1.0) {
        return Err(bad("s", &values["s"], "must lie in (0, 1)"));
    }
    let alpha: f64 = number(&values, "alpha")?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(bad("alpha", &values["alpha"], "must lie in (0, 1)"));
    }
    let m_list: Vec<usize> = list(&values, "m_list")?;
    if let Some(m) = m_list.iter().find(|&&m| m > half_width) {
        return Err(bad(
            "m_list",
            &values["m_list"],
            &format!("entry {m} exceeds half_width"),
        ));
    }
    let t_list: Vec<f64> = list(&values, "t_list")?;
    if t_list.iter().any(|t| !(*t >= 0.0)) {
        return Err(bad("t_list", &values["t_list"], "shifts must be >= 0"));
    }
    let t_grid: Vec<f64> = list(&values, "t_grid")?;
    if t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(bad("t_grid", &values["t_grid"], "grid points must be > 0"));
    }
    let mean_s_minus = match values["mean_s_minus"].as_str() {
        "" => None,
        _ => Some(number(&values, "mean_s_minus")?),
    };
    let rank_one_t: f64 = number(&values, "rank_one_t")?;
    if !(rank_one_t >= 0.0) {
        return Err(bad("rank_one_t", &values["rank_one_t"], "must be >= 0"));
    }
    let r_max: usize = number(&values, "r_max")?;
    if command == Command::ProjectionDecay && r_max > half_width {
        return Err(bad("r_max", &values["r_max"], "exceeds half_width"));
    }
    let hcr_samples: usize = number(&values, "hcr_samples")?;
    if hcr_samples < 1000 {
        return Err(bad(
            "hcr_samples",
            &values["hcr_samples"],
            "need at least 1000",
        ));
    }
    let pairs = pairs(&values)?;
    let output_dir = PathBuf::from(&values["output_dir"]);

    Ok(ExperimentConfig {
        command,
        ensemble,
        m_list,
        t_list,
        t_grid,
        mean_s_minus,
        s,
        z,
        pairs,
        rank_one_t,
        alpha,
        r_max,
        hcr_samples,
        output_dir,
        values,
    })
}

fn cli_definition() -> clap::Command {
    let mut keys_help = String::from("Keys (config file `key = value`, or flag `--key value`):\n");
    for k in KEYS {
        let default = if k.default.is_empty() {
            "\"\""
        } else {
            k.default
        };
        keys_help.push_str(&format!(
            "  {:<18} default {:<10} {}\n",
            k.name, default, k.help
        ));
    }
    let mut cmd = clap::Command::new("eelab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Disorder-ensemble experiments on free-fermion entanglement entropy")
        .subcommand_required(true)
        .after_help(keys_help);
    for c in Command::ALL {
        let mut sub = clap::Command::new(c.name()).about(c.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value file; flags override it"),
        );
        for k in KEYS {
            let default = if k.default.is_empty() {
                "\"\""
            } else {
                k.default
            };
            sub = sub.arg(
                Arg::new(k.name)
                    .long(k.flag)
                    .alias(k.name)
                    .value_name("VALUE")
                    .action(ArgAction::Set)
                    .allow_hyphen_values(true)
                    .help(format!("{} [default: {default}]", k.help)),
            );
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Parses a full argument vector (program name first).
pub fn parse_args<I, T>(args: I) -> std::result::Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = cli_definition()
        .try_get_matches_from(args)
        .map_err(CliError::Usage)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let command = Command::from_name(name).expect("subcommands mirror Command::ALL");
    let file = match sub.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Run(Error::Config(format!("cannot read config {path}: {e}")))
            })?;
            parse_config_text(&text).map_err(CliError::Run)?
        }
        None => BTreeMap::new(),
    };
    let flags: BTreeMap<String, String> = KEYS
        .iter()
        .filter_map(|k| {
            sub.get_one::<String>(k.name)
                .map(|v| (k.name.to_string(), v.clone()))
        })
        .collect();
    resolve(command, &file, &flags).map_err(CliError::Run)
}

#[derive(Debug)]
pub enum CliError {
    Usage(clap::Error),
    Run(Error),
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Range(_) => EXIT_CONFIG,
        Error::Degraded { .. } => EXIT_DEGRADED,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

/// Parses, runs and reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match parse_args(args) {
        Ok(c) => c,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let started = std::time::SystemTime::now();
    match execute(&config) {
        Ok(report) => match write_manifest(&config, &report, started) {
            Ok(path) => {
                for f in &report.outputs {
                    println!("wrote {}", f.display());
                }
                println!("wrote {}", path.display());
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
