//! Run configuration: command-line flags layered over an optional TOML file.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use quasiflow::experiments::RecordFormat;
use serde::{Deserialize, Deserializer, Serialize};

/// Errors that stop a run before dispatch, or during it.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// `--help` or `--version`; the rendered text goes to stdout.
    #[error("{0}")]
    Help(String),
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] quasiflow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => 0,
            CliError::Run(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Separation,
    SystemSeparation,
    Feasibility,
    WwSymbols,
    ParadiffCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Separation => "separation",
            Command::SystemSeparation => "system-separation",
            Command::Feasibility => "feasibility",
            Command::WwSymbols => "ww-symbols",
            Command::ParadiffCheck => "paradiff-check",
        }
    }
}

/// Grid size: a fixed number of points, or chosen per command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSize {
    Auto,
    Points(usize),
}

impl GridSize {
    pub fn or(self, default: usize) -> usize {
        match self {
            GridSize::Auto => default,
            GridSize::Points(n) => n,
        }
    }
}

impl fmt::Display for GridSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSize::Auto => f.write_str("auto"),
            GridSize::Points(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for GridSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(GridSize::Auto);
        }
        s.parse().map(GridSize::Points).map_err(|_| format!("expected \"auto\" or a point count, got {s:?}"))
    }
}

impl<'de> Deserialize<'de> for GridSize {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(GridSize::Points(n)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Initial data for `solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialPreset {
    Cos,
    Sin,
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for RecordFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => RecordFormat::Csv,
            FormatArg::Jsonl => RecordFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: f64,
    pub s: f64,
    pub eps_prime: f64,
    /// Use the regime whose weak ratio grows (needs `eps_prime > 0`).
    pub c1_regime: bool,
    pub n_lo: u32,
    pub n_hi: u32,
    pub grid_n: GridSize,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub emit_svg: bool,
    pub format: RecordFormat,
    /// Final time for `solve`.
    pub t: f64,
    /// Amplitude of the initial data (`solve`) or of the surface (`ww-symbols`).
    pub amplitude: Option<f64>,
    pub u0: InitialPreset,
    /// Drop the quadratic term in `solve`.
    pub linear: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Separation,
            alpha: 1.0,
            s: 2.6,
            eps_prime: 0.5,
            c1_regime: true,
            n_lo: 3,
            n_hi: 7,
            grid_n: GridSize::Auto,
            out_dir: PathBuf::from("out"),
            seed: 0,
            emit_svg: false,
            format: RecordFormat::Csv,
            t: 0.3,
            amplitude: None,
            u0: InitialPreset::Cos,
            linear: false,
        }
    }
}

/// Keys accepted in a config file; every one is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    alpha: Option<f64>,
    s: Option<f64>,
    eps_prime: Option<f64>,
    c1_regime: Option<bool>,
    n_lo: Option<u32>,
    n_hi: Option<u32>,
    grid_n: Option<GridSize>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    emit_svg: Option<bool>,
    format: Option<RecordFormat>,
    t: Option<f64>,
    amplitude: Option<f64>,
    u0: Option<InitialPreset>,
    linear: Option<bool>,
}

#[derive(Debug, Parser)]
#[command(name = "quasiflow", version, about = "Flow-map separation experiments for dispersive Burgers equations")]
struct Args {
    /// Command to run (may also come from the config file).
    #[arg(value_enum)]
    command: Option<Command>,
    /// TOML file with flat `key = value` settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dispersive order (the order of γ for system-separation). Default 1.0.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Sobolev index. Default 2.6.
    #[arg(long, allow_negative_numbers = true)]
    s: Option<f64>,
    /// Regime margin ε'. Default 0.5.
    #[arg(long, allow_negative_numbers = true)]
    eps_prime: Option<f64>,
    /// Use (true) or skip (false) the growing-weak-ratio constraint. Default true.
    #[arg(long)]
    c1_regime: Option<bool>,
    /// First index of λ = 2^n. Default 3.
    #[arg(long)]
    n_lo: Option<u32>,
    /// Last index of λ = 2^n. Default 7.
    #[arg(long)]
    n_hi: Option<u32>,
    /// Grid points, or "auto".
    #[arg(long)]
    grid_n: Option<GridSize>,
    /// Output directory. Default ./out.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    emit_svg: bool,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Final time for solve. Default 0.3.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    #[arg(long, value_enum)]
    u0: Option<InitialPreset>,
    /// Solve the linear equation only.
    #[arg(long)]
    linear: bool,
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
}

/// Parses `argv` (program name first). `file` is read before a `--config`
/// flag, so the flag's file wins; explicit flags win over both.
pub fn parse_config<I, T>(argv: I, file: Option<&Path>) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = Args::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;

    let mut cfg = RunConfig::default();
    let mut command = None;
    for path in file.into_iter().chain(args.config.as_deref()) {
        let f = read_file(path)?;
        command = f.command.or(command);
        macro_rules! take {
            ($($k:ident),*) => { $( if let Some(v) = f.$k { cfg.$k = v; } )* };
        }
        take!(alpha, s, eps_prime, c1_regime, n_lo, n_hi, grid_n, out_dir, seed, emit_svg, format, t, u0, linear);
        if f.amplitude.is_some() {
            cfg.amplitude = f.amplitude;
        }
    }

    macro_rules! flag {
        ($($k:ident),*) => { $( if let Some(v) = args.$k { cfg.$k = v; } )* };
    }
    flag!(alpha, s, eps_prime, c1_regime, n_lo, n_hi, grid_n, out_dir, seed, t, u0);
    if args.amplitude.is_some() {
        cfg.amplitude = args.amplitude;
    }
    if let Some(f) = args.format {
        cfg.format = f.into();
    }
    cfg.emit_svg |= args.emit_svg;
    cfg.linear |= args.linear;
    cfg.command = args
        .command
        .or(command)
        .ok_or_else(|| CliError::Usage("missing command (try --help)".into()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Checks the parameters against the preconditions of the mapped pipeline.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        let finite = [self.alpha, self.s, self.eps_prime, self.t];
        if finite.iter().any(|v| !v.is_finite()) || self.amplitude.is_some_and(|a| !a.is_finite()) {
            return bad("parameters must be finite".into());
        }
        let order_used = matches!(self.command, Command::Solve | Command::Separation | Command::SystemSeparation);
        if order_used && !(0.0..2.0).contains(&self.alpha) {
            return bad(format!("alpha = {} outside [0, 2)", self.alpha));
        }
        if matches!(self.command, Command::Separation | Command::SystemSeparation) {
            if self.s <= 2.5 {
                return bad(format!("s = {} must exceed 2.5", self.s));
            }
            if !(2 <= self.n_lo && self.n_lo < self.n_hi && self.n_hi <= 8) {
                return bad(format!("need 2 <= n_lo < n_hi <= 8, got [{}, {}]", self.n_lo, self.n_hi));
            }
        }
        if self.eps_prime < 0.0 {
            return bad(format!("eps_prime = {} is negative", self.eps_prime));
        }
        if self.command == Command::Solve && self.t <= 0.0 {
            return bad(format!("t = {} must be positive", self.t));
        }
        if let GridSize::Points(n) = self.grid_n {
            quasiflow::TorusGrid::new(n).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        self.check_out_dir()
    }

    fn check_out_dir(&self) -> Result<(), CliError> {
        let fail = |e: std::io::Error| CliError::Config(format!("out_dir {}: {e}", self.out_dir.display()));
        std::fs::create_dir_all(&self.out_dir).map_err(fail)?;
        tempfile::tempfile_in(&self.out_dir).map_err(fail)?;
        Ok(())
    }
}
