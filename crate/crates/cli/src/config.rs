//! Run configuration: a flat `key = value` file merged with command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fracdiff::analysis::geometric_times;
use fracdiff::representation::{Exponent, Quantity};
use fracdiff::{FracOrder, InitialDatum};
use thiserror::Error;

pub const DEFAULT_ALPHA: &str = "0.5";
pub const VERIFY_ALPHAS: &str = "0.25,0.5,0.75";
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_X_MAX: f64 = 20.0;
pub const DEFAULT_NODES: usize = 20_000;
pub const DEFAULT_GRADING: f64 = 2.0;
pub const DEFAULT_DATUM: &str = "indicator:0:1";
pub const VERIFY_DATA: &str = "indicator:0:1,bump:0:1";
pub const DEFAULT_TIMES: &str = "2^0..2^10";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config file {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "fracdiff",
    version,
    about = "Fractional half-line diffusion: profiles, kernels and decay checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    Profile,
    Fundsol,
    Evolve,
    Verify,
    Decay,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the similarity profile and its derivative.
    Profile(Flags),
    /// Tabulate the fundamental solution at the given times.
    Fundsol(Flags),
    /// Evaluate w1, w2 or v+/- for an initial datum.
    Evolve(Flags),
    /// Run the full verification suite and write a JSON report.
    Verify(Flags),
    /// Fit decay exponents of the Dirichlet and Neumann solutions.
    Decay(Flags),
}

/// Options shared by every subcommand. Each one may also be given as a key in
/// the config file (with dashes written as underscores); flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated orders in (0,1).
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub x_max: Option<String>,
    /// Number of grid intervals of the profile table.
    #[arg(long)]
    pub nodes: Option<String>,
    #[arg(long)]
    pub grading: Option<String>,
    /// `indicator:a:b`, `triangle:a:b`, `bump:a:b` or `file:path`; comma-separated.
    #[arg(long)]
    pub datum: Option<String>,
    /// Comma-separated times, or `2^k0..2^k1`.
    #[arg(long, alias = "t")]
    pub times: Option<String>,
    /// Quantities: v_plus, v_minus, w1, w2, v_plus_minus_mE, v_minus_minus_mE, w2_minus_2mE, E.
    #[arg(long)]
    pub which: Option<String>,
    /// Lebesgue exponents (> 1 or `inf`).
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

const KEYS: [&str; 10] = [
    "alpha", "tol", "x_max", "nodes", "grading", "datum", "times", "which", "p", "out_dir",
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub orders: Vec<FracOrder>,
    pub tol: f64,
    pub x_max: f64,
    pub nodes: usize,
    pub grading: f64,
    pub data: Vec<(String, InitialDatum)>,
    pub times: Vec<f64>,
    pub which: Vec<Quantity>,
    pub p: Vec<Exponent>,
    pub out_dir: PathBuf,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                msg: "expected `key = value`".into(),
            });
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(map)
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn parse_f64(key: &str, s: &str) -> Result<f64, ConfigError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| invalid(format!("{key}: `{s}` is not a finite number")))
}

fn split(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

pub fn parse_orders(s: &str) -> Result<Vec<FracOrder>, ConfigError> {
    let v: Vec<FracOrder> = split(s)
        .map(|a| {
            let x = parse_f64("alpha", a)?;
            FracOrder::new(x).map_err(|e| invalid(format!("alpha: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(invalid("alpha: empty list"));
    }
    Ok(v)
}

pub fn parse_times(s: &str) -> Result<Vec<f64>, ConfigError> {
    if let Some((lo, hi)) = s.split_once("..") {
        let exp = |part: &str| -> Result<i32, ConfigError> {
            part.trim()
                .strip_prefix("2^")
                .and_then(|k| k.parse::<i32>().ok())
                .ok_or_else(|| invalid(format!("times: expected `2^k0..2^k1`, got `{s}`")))
        };
        let (k0, k1) = (exp(lo)?, exp(hi)?);
        if k1 < k0 {
            return Err(invalid("times: empty range"));
        }
        return Ok(geometric_times(k0, k1));
    }
    let v: Vec<f64> = split(s)
        .map(|t| parse_f64("times", t))
        .collect::<Result<_, _>>()?;
    if v.is_empty() || v.iter().any(|&t| !(t > 0.0)) {
        return Err(invalid("times: need a non-empty list of positive times"));
    }
    Ok(v)
}

fn parse_data(s: &str) -> Result<Vec<(String, InitialDatum)>, ConfigError> {
    let v: Vec<_> = split(s)
        .map(|d| {
            InitialDatum::parse(d)
                .map(|g| (d.to_string(), g))
                .map_err(|e| invalid(format!("datum `{d}`: {e}")))
        })
        .collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(invalid("datum: empty list"));
    }
    Ok(v)
}

fn parse_which(s: &str) -> Result<Vec<Quantity>, ConfigError> {
    split(s)
        .map(|w| {
            Quantity::ALL
                .into_iter()
                .find(|q| q.as_str() == w)
                .ok_or_else(|| invalid(format!("which: unknown quantity `{w}`")))
        })
        .collect()
}

fn parse_exponents(s: &str) -> Result<Vec<Exponent>, ConfigError> {
    split(s)
        .map(|p| Exponent::parse(p).map_err(|e| invalid(format!("p: {e}"))))
        .collect()
}

impl RunConfig {
    /// Merges flags over the optional config file and applies defaults.
    pub fn from_flags(command: CommandKind, flags: &Flags) -> Result<Self, ConfigError> {
        let file = match &flags.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let pick = |flag: &Option<String>, key: &str| -> Option<String> {
            flag.clone().or_else(|| file.get(key).cloned())
        };
        let verify = command == CommandKind::Verify;

        let orders =
            parse_orders(&pick(&flags.alpha, "alpha").unwrap_or_else(|| {
                if verify { VERIFY_ALPHAS } else { DEFAULT_ALPHA }.to_string()
            }))?;
        let tol = match pick(&flags.tol, "tol") {
            Some(s) => parse_f64("tol", &s)?,
            None => DEFAULT_TOL,
        };
        if !(tol > 0.0) {
            return Err(invalid(format!("tol must be positive, got {tol}")));
        }
        let x_max = match pick(&flags.x_max, "x_max") {
            Some(s) => parse_f64("x_max", &s)?,
            None => DEFAULT_X_MAX,
        };
        if !(x_max > 1.0) {
            return Err(invalid(format!("x_max must exceed 1, got {x_max}")));
        }
        let nodes = match pick(&flags.nodes, "nodes") {
            Some(s) => s
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 16)
                .ok_or_else(|| invalid(format!("nodes: `{s}` is not an integer >= 16")))?,
            None => DEFAULT_NODES,
        };
        let grading = match pick(&flags.grading, "grading") {
            Some(s) => parse_f64("grading", &s)?,
            None => DEFAULT_GRADING,
        };
        if !(grading >= 1.0) {
            return Err(invalid(format!("grading must be >= 1, got {grading}")));
        }
        let data = parse_data(
            &pick(&flags.datum, "datum")
                .unwrap_or_else(|| if verify { VERIFY_DATA } else { DEFAULT_DATUM }.to_string()),
        )?;
        let default_times = match command {
            CommandKind::Fundsol | CommandKind::Evolve => "1",
            _ => DEFAULT_TIMES,
        };
        let times =
            parse_times(&pick(&flags.times, "times").unwrap_or_else(|| default_times.into()))?;
        if matches!(command, CommandKind::Decay | CommandKind::Verify)
            && times.iter().any(|&t| t < 1.0)
        {
            return Err(invalid("times: decay runs need t >= 1"));
        }
        let default_which = match command {
            CommandKind::Evolve => "w1",
            _ => "w1,w2_minus_2mE",
        };
        let which =
            parse_which(&pick(&flags.which, "which").unwrap_or_else(|| default_which.into()))?;
        let p = parse_exponents(&pick(&flags.p, "p").unwrap_or_else(|| "2,inf".into()))?;
        let out_dir = flags
            .out_dir
            .clone()
            .or_else(|| file.get("out_dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self {
            command,
            orders,
            tol,
            x_max,
            nodes,
            grading,
            data,
            times,
            which,
            p,
            out_dir,
        })
    }
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}
