//! Command-line front end: configuration, subcommands, and table output.
//!
//! Exit codes: 0 on success, 1 on runtime failures (I/O, failed
//! acceptance criteria), 2 on bad configuration or usage, 3 on numerical
//! non-convergence.

use crate::acceptance::{self, SuiteOptions, CRITERIA, SUITE_SEED};
use crate::compensation::{valid_window, CompensationError, Harmonic, Transforms};
use crate::greens::{Greens, GreensError, QuadratureSpec};
use crate::model::{normalize, validate, ModelError, ModelParams, NormalizedModel, SpaceTimeMap};
use crate::montecarlo::{
    check_harmonic, estimate_boundary_density, estimate_green_box, estimate_laplace, hitting_distribution_arc, Axis,
    Dynamics, LaplaceTarget, McConfig, McError, Rect, Scheme, Simulator,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use thiserror::Error;

/// Configuration keys accepted in files and as flags.
pub const CONFIG_KEYS: [&str; 8] = ["sigma1", "sigma2", "mu1", "mu2", "r1", "r2", "z0_x", "z0_y"];

#[derive(Error, Debug, Clone, PartialEq)]
pub enum CliError {
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{quantity} did not converge: {detail}")]
    NotConverged { quantity: String, detail: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::NotConverged { .. } => 3,
            CliError::Runtime(_) => 1,
        }
    }

    fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), message: message.into() }
    }
}

/// Key named by a failed validation check.
fn check_key(check: &str) -> &'static str {
    match check {
        "sigma1_positive" => "sigma1",
        "sigma2_positive" => "sigma2",
        "mu1_positive" => "mu1",
        "mu2_positive" => "mu2",
        "r1_above_bound" => "r1",
        "r2_above_bound" => "r2",
        _ => "r1, r2",
    }
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::NonFinite(key) => CliError::config(key, "not a finite number"),
        ModelError::Invalid(msg) => {
            let check = msg.split(':').next().unwrap_or("");
            CliError::config(check_key(check), msg.clone())
        }
        ModelError::NegativeCoordinate(x, y) => {
            CliError::config(if x < 0.0 { "z0_x" } else { "z0_y" }, format!("({x}, {y}) is outside the quadrant"))
        }
        ModelError::AngleOutOfRange(a) => CliError::config("alpha", format!("{a} is outside [0, pi/2]")),
    }
}

fn compensation_error(quantity: &str, e: CompensationError) -> CliError {
    match e {
        CompensationError::AngleOutside { alpha, lo, hi } => {
            CliError::config("alpha", format!("{alpha} is outside [{lo}, {hi}]"))
        }
        CompensationError::OutsideWindow { s, lo, hi } => {
            CliError::config("s", format!("{s} is outside the valid window ({lo}, {hi})"))
        }
        CompensationError::Kernel(k) => CliError::config(quantity, k.to_string()),
        other => CliError::NotConverged { quantity: quantity.into(), detail: other.to_string() },
    }
}

fn greens_error(quantity: &str, e: GreensError) -> CliError {
    match e {
        GreensError::NoI3Form { .. } => CliError::config("a, b", e.to_string()),
        GreensError::InvalidSpec(m) => CliError::config("quadrature", m),
        GreensError::Kernel(k) => CliError::config("alpha", k.to_string()),
        GreensError::Compensation(c) => compensation_error(quantity, c),
        GreensError::MonteCarlo(m) => mc_error(m),
        GreensError::OutOfScope(_) => CliError::Runtime(e.to_string()),
        other => CliError::NotConverged { quantity: quantity.into(), detail: other.to_string() },
    }
}

fn mc_error(e: McError) -> CliError {
    match e {
        McError::TooFewPaths(_) => CliError::config("n-paths", e.to_string()),
        McError::InvalidConfig(m) => CliError::config("simulate", m),
        McError::OutsideArc(..) => CliError::config("z0_x, z0_y", e.to_string()),
        McError::Model(m) => model_error(m),
        McError::ZeroReference => CliError::config("alpha", e.to_string()),
        McError::Infeasible(..) => CliError::Runtime(e.to_string()),
    }
}

/// Parses a configuration file: a JSON object, or `key = value` lines with
/// `#` comments.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    let mut insert = |key: &str, value: f64| -> Result<(), CliError> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(CliError::config(key, format!("unknown key; expected one of {}", CONFIG_KEYS.join(", "))));
        }
        if !value.is_finite() {
            return Err(CliError::config(key, "not a finite number"));
        }
        if out.insert(key.to_string(), value).is_some() {
            return Err(CliError::config(key, "given more than once"));
        }
        Ok(())
    };
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let v: Value = serde_json::from_str(trimmed).map_err(|e| CliError::config("config", e.to_string()))?;
        let obj = v.as_object().ok_or_else(|| CliError::config("config", "expected a JSON object"))?;
        for (k, val) in obj {
            let x = match val {
                Value::Number(n) => n.as_f64(),
                Value::String(s) => s.trim().parse::<f64>().ok(),
                _ => None,
            };
            insert(k, x.ok_or_else(|| CliError::config(k.as_str(), format!("`{val}` is not a number")))?)?;
        }
        return Ok(out);
    }
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {}", lineno + 1), format!("`{line}` is not key=value")))?;
        let (k, v) = (k.trim(), v.trim());
        let x = v.parse::<f64>().map_err(|_| CliError::config(k, format!("`{v}` is not a number")))?;
        insert(k, x)?;
    }
    Ok(out)
}

/// Resolved configuration with the origin of every value.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: ModelParams,
    pub z0: (f64, f64),
    /// `key -> "flag" | "file" | "default"`.
    pub sources: BTreeMap<String, &'static str>,
}

impl Config {
    fn defaults() -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("sigma1", 1.0),
            ("sigma2", 1.0),
            ("mu1", 0.5),
            ("mu2", 0.5),
            ("r1", 0.0),
            ("r2", 0.0),
            ("z0_x", 1.0),
            ("z0_y", 1.0),
        ])
    }

    /// Flag > file > default.
    pub fn resolve(flags: &ModelFlags, file: Option<&BTreeMap<String, f64>>) -> Result<Self, CliError> {
        let flag_values = flags.values();
        let mut vals = BTreeMap::new();
        let mut sources = BTreeMap::new();
        for (key, default) in Self::defaults() {
            let (v, src) = if let Some(v) = flag_values.get(key).copied().flatten() {
                (v, "flag")
            } else if let Some(v) = file.and_then(|f| f.get(key)) {
                (*v, "file")
            } else {
                (default, "default")
            };
            if !v.is_finite() {
                return Err(CliError::config(key, "not a finite number"));
            }
            vals.insert(key, v);
            sources.insert(key.to_string(), src);
        }
        let params = ModelParams::new(vals["sigma1"], vals["sigma2"], vals["mu1"], vals["mu2"], vals["r1"], vals["r2"]);
        let z0 = (vals["z0_x"], vals["z0_y"]);
        if z0.0 < 0.0 {
            return Err(CliError::config("z0_x", format!("{} must be nonnegative", z0.0)));
        }
        if z0.1 < 0.0 {
            return Err(CliError::config("z0_y", format!("{} must be nonnegative", z0.1)));
        }
        Ok(Self { params, z0, sources })
    }

    /// Normalized model, map, and `z0` in normalized coordinates.
    fn normalized(&self) -> Result<(NormalizedModel, SpaceTimeMap, (f64, f64)), CliError> {
        let (m, map) = normalize(&self.params).map_err(model_error)?;
        let z = map.map_point(self.z0).map_err(model_error)?;
        Ok((m, map, z))
    }

    fn metadata(&self) -> BTreeMap<String, String> {
        let p = &self.params;
        let mut md = BTreeMap::new();
        for (k, v) in [
            ("sigma1", p.sigma1),
            ("sigma2", p.sigma2),
            ("mu1", p.mu1),
            ("mu2", p.mu2),
            ("r1", p.r1),
            ("r2", p.r2),
            ("z0_x", self.z0.0),
            ("z0_y", self.z0.1),
        ] {
            md.insert(k.to_string(), format!("{} ({})", fmt_num(v), self.sources[k]));
        }
        md
    }
}

/// Table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(i64::from(v))
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Canonical number formatting: 17 significant digits, which round-trips
/// every `f64`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Rectangular result table with run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: BTreeMap<String, String>,
}

impl OutputTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new(), metadata: BTreeMap::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// CSV with metadata as leading `# key = value` comment lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(*v),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(t) => csv_text(t),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|c| match c {
                            Cell::Num(v) if v.is_finite() => json!(v),
                            Cell::Num(v) => json!(fmt_num(*v)),
                            Cell::Int(i) => json!(i),
                            Cell::Text(t) => json!(t),
                        })
                        .collect(),
                )
            })
            .collect();
        let md: Map<String, Value> = self.metadata.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        let v = json!({ "header": self.header, "rows": rows, "metadata": md });
        let mut s = serde_json::to_string_pretty(&v).expect("table serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Model and starting-point flags; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelFlags {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu2: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub r1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub r2: Option<f64>,
    #[arg(long = "z0-x", alias = "z0_x", global = true, allow_hyphen_values = true)]
    pub z0_x: Option<f64>,
    #[arg(long = "z0-y", alias = "z0_y", global = true, allow_hyphen_values = true)]
    pub z0_y: Option<f64>,
}

impl ModelFlags {
    fn values(&self) -> BTreeMap<&'static str, Option<f64>> {
        BTreeMap::from([
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("r1", self.r1),
            ("r2", self.r2),
            ("z0_x", self.z0_x),
            ("z0_y", self.z0_y),
        ])
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "drbm",
    version,
    about = "Degenerate obliquely reflected Brownian motion in the quadrant",
    long_about = "Degenerate obliquely reflected Brownian motion in the quadrant.\n\n\
        Configuration keys (file or flags): sigma1, sigma2, mu1, mu2, r1, r2, z0_x, z0_y. \
        Precedence: flag > file > default (sigma = 1, mu = 0.5, r = 0, z0 = (1, 1)).\n\
        Analytic subcommands work on the normalized model; z0 is mapped to normalized \
        coordinates and angles and target points are normalized ones. `simulate` runs the \
        raw dynamics from the raw z0.\n\n\
        Exit codes: 0 success; 1 runtime failure or failed criteria; 2 bad configuration; \
        3 numerical non-convergence."
)]
pub struct Cli {
    /// Configuration file: `key = value` lines or a JSON object.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the table to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    GreenBox,
    Boundary,
    Laplace,
    Harmonicity,
    Arc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    /// The face x = 0 (local time L1).
    X0,
    /// The face y = 0 (local time L2).
    Y0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LaplaceArg {
    /// E int exp(x Z1 + y Z2) dt.
    Interior,
    /// E int exp(y Z2) dL1.
    Face1,
    /// E int exp(x Z1) dL2.
    Face2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Bridge,
    Projected,
}

/// Angle list or grid.
#[derive(Debug, Clone, Args)]
pub struct AngleGrid {
    /// Explicit angles (comma separated); overrides the grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Vec<f64>,
    /// Number of grid points.
    #[arg(long, default_value_t = 19)]
    pub n: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissibility checks. Columns: check, passed, detail.
    Validate,
    /// Normalized model and space-time map. Columns: quantity, value.
    Normalize,
    /// Parabola scan. Columns: s, x, y, zeta_s, eta_s, gamma1, gamma2, residual.
    KernelScan {
        #[arg(long, allow_hyphen_values = true)]
        s_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s_max: Option<f64>,
        #[arg(long, default_value_t = 21)]
        n: usize,
    },
    /// Critical data. Columns: s_star, s_star2, x_star, y_star, x_star2, y_star2,
    /// alpha_star, alpha_star2, pole_phi2, pole_phi1, x_max, y_max, alpha_mu.
    Critical,
    /// Boundary transforms on the valid window. Columns: s, x, y, phi2, phi1,
    /// terms2, terms1, tail2, tail1.
    Transforms {
        /// Explicit parameters; default is an interior grid of the window.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s: Vec<f64>,
        #[arg(long, default_value_t = 11)]
        n: usize,
    },
    /// Martin harmonic functions at z0. Columns: alpha, h, case, terms, tail.
    Harmonic {
        #[command(flatten)]
        grid: AngleGrid,
    },
    /// Directional asymptotics of the Green density. Columns: alpha, regime,
    /// rho, power, constant, harmonic, case, secondary_power, secondary_constant.
    Asymptotics {
        #[command(flatten)]
        grid: AngleGrid,
    },
    /// Green density by contour inversion on the grid a x b. Columns: a, b,
    /// g, imag, error, tail, subdivisions.
    Green {
        #[arg(long, value_delimiter = ',', default_values_t = [3.0])]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0])]
        b: Vec<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        rel_tol: Option<f64>,
        #[arg(long)]
        abs_tol: Option<f64>,
        /// Subdivision budget of the adaptive quadrature.
        #[arg(long)]
        max_subdiv: Option<usize>,
    },
    /// Martin kernel limit h_a(z0)/h_a(0). Columns: alpha, kernel.
    MartinScan {
        #[command(flatten)]
        grid: AngleGrid,
    },
    /// Monte Carlo experiments on the raw dynamics. Columns depend on the
    /// experiment and end with mean, se, n.
    ///
    /// green-box: a, b, side, censored, mean (occupation / area), se, n.
    /// boundary: axis, lo, hi, censored, mean (density), se, n.
    /// laplace: target, x, y, censored, mean, se, n.
    /// harmonicity: alpha, t, mean (E h(Z_t) / h(z0)), se, n.
    /// arc: alpha, h_z0, excluded, mean (arc average of h), se, n.
    Simulate {
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        n_paths: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 40.0)]
        t_max: f64,
        #[arg(long, value_enum, default_value = "bridge")]
        scheme: SchemeArg,
        /// Disable adaptive steps away from faces and features.
        #[arg(long)]
        fixed_step: bool,
        /// Box centre or boundary position (first coordinate).
        #[arg(long, default_value_t = 3.0)]
        a: f64,
        /// Box centre (second coordinate).
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        #[arg(long, default_value_t = 0.5)]
        side: f64,
        #[arg(long, value_enum, default_value = "y0")]
        axis: AxisArg,
        #[arg(long, default_value_t = 0.2)]
        half_width: f64,
        #[arg(long, value_enum, default_value = "face2")]
        target: LaplaceArg,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        y: f64,
        /// Normalized angle of the harmonic function.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        alpha: f64,
        /// Horizon of the harmonicity check, in raw time.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Acceptance suite. Columns: criterion, name, passed, check, measured,
    /// bound, seconds.
    Verify {
        /// Reduced Monte Carlo scale.
        #[arg(long)]
        quick: bool,
        /// Suite seed (default pinned).
        #[arg(long)]
        seed: Option<u64>,
        /// Subset of criteria (comma separated).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
}

/// Runs the program; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli, err) {
        Ok(table) => {
            let text = match cli.format {
                Format::Csv => table.to_csv(),
                Format::Json => table.to_json(),
            };
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
                None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(err, "error: {e}");
                return 1;
            }
            if let Command::Verify { .. } = cli.command {
                let failed: Vec<String> = table
                    .rows
                    .iter()
                    .filter(|r| r[2] == Cell::Int(0))
                    .map(|r| match &r[0] {
                        Cell::Int(i) => i.to_string(),
                        _ => String::new(),
                    })
                    .collect();
                if !failed.is_empty() {
                    let _ = writeln!(err, "error: failed criteria: {}", failed.join(", "));
                    return 1;
                }
            }
            if let Command::Validate = cli.command {
                if let Some(row) = table.rows.iter().find(|r| r[1] == Cell::Int(0)) {
                    let key = match &row[0] {
                        Cell::Text(t) => check_key(t),
                        _ => "model",
                    };
                    let e = CliError::config(key, "admissibility check failed");
                    let _ = writeln!(err, "error: {e}");
                    return e.exit_code();
                }
            }
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, err: &mut dyn Write) -> Result<OutputTable, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("threads", "must be positive"));
        }
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
            Some(parse_config(&text)?)
        }
        None => None,
    };
    let config = Config::resolve(&cli.model, file.as_ref())?;
    let mut table = match &cli.command {
        Command::Validate => cmd_validate(&config)?,
        Command::Normalize => cmd_normalize(&config)?,
        Command::KernelScan { s_min, s_max, n } => cmd_kernel_scan(&config, *s_min, *s_max, *n)?,
        Command::Critical => cmd_critical(&config)?,
        Command::Transforms { s, n } => cmd_transforms(&config, s, *n)?,
        Command::Harmonic { grid } => cmd_harmonic(&config, grid)?,
        Command::Asymptotics { grid } => cmd_asymptotics(&config, grid)?,
        Command::Green { a, b, epsilon, rel_tol, abs_tol, max_subdiv } => {
            cmd_green(&config, a, b, *epsilon, *rel_tol, *abs_tol, *max_subdiv)?
        }
        Command::MartinScan { grid } => cmd_martin(&config, grid)?,
        Command::Simulate { .. } => cmd_simulate(&config, &cli.command)?,
        Command::Verify { quick, seed, criteria } => cmd_verify(*quick, *seed, criteria, err)?,
    };
    let mut md = config.metadata();
    md.insert("command".into(), command_name(&cli.command).into());
    md.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    md.append(&mut table.metadata);
    table.metadata = md;
    Ok(table)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate => "validate",
        Command::Normalize => "normalize",
        Command::KernelScan { .. } => "kernel-scan",
        Command::Critical => "critical",
        Command::Transforms { .. } => "transforms",
        Command::Harmonic { .. } => "harmonic",
        Command::Asymptotics { .. } => "asymptotics",
        Command::Green { .. } => "green",
        Command::MartinScan { .. } => "martin-scan",
        Command::Simulate { .. } => "simulate",
        Command::Verify { .. } => "verify",
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn angles(grid: &AngleGrid, lo: f64, hi: f64) -> Result<Vec<f64>, CliError> {
    if !grid.alpha.is_empty() {
        for &a in &grid.alpha {
            if !(0.0..=FRAC_PI_2).contains(&a) {
                return Err(CliError::config("alpha", format!("{a} is outside [0, pi/2]")));
            }
        }
        return Ok(grid.alpha.clone());
    }
    if grid.n == 0 {
        return Err(CliError::config("n", "must be positive"));
    }
    Ok(linspace(lo, hi, grid.n))
}

fn cmd_validate(config: &Config) -> Result<OutputTable, CliError> {
    let report = validate(&config.params).map_err(model_error)?;
    let mut t = OutputTable::new(&["check", "passed", "detail"]);
    for c in &report.checks {
        t.push(vec![c.name.into(), c.passed.into(), c.detail.clone().into()]);
    }
    Ok(t)
}

fn cmd_normalize(config: &Config) -> Result<OutputTable, CliError> {
    let (m, map, z) = config.normalized()?;
    let mut t = OutputTable::new(&["quantity", "value"]);
    for (k, v) in [
        ("mu1", m.mu1),
        ("mu2", m.mu2),
        ("r1", m.r1),
        ("r2", m.r2),
        ("lambda", map.lambda),
        ("scale_x", map.scale_x),
        ("scale_y", map.scale_y),
        ("time_factor", map.time_factor),
        ("z0_x", z.0),
        ("z0_y", z.1),
    ] {
        t.push(vec![k.into(), v.into()]);
    }
    Ok(t)
}

fn cmd_kernel_scan(config: &Config, s_min: Option<f64>, s_max: Option<f64>, n: usize) -> Result<OutputTable, CliError> {
    let (m, _, _) = config.normalized()?;
    let lo = s_min.unwrap_or(m.s_min() - 1.0);
    let hi = s_max.unwrap_or(m.s_max() + 1.0);
    if !(hi > lo) {
        return Err(CliError::config("s-max", format!("{hi} must exceed s-min {lo}")));
    }
    if n < 2 {
        return Err(CliError::config("n", "at least 2 points"));
    }
    let mut t = OutputTable::new(&["s", "x", "y", "zeta_s", "eta_s", "gamma1", "gamma2", "residual"]);
    for s in linspace(lo, hi, n) {
        let (x, y) = (m.x_of_s(s), m.y_of_s(s));
        let residual = m.gamma(x.into(), y.into()).norm();
        t.push(vec![
            s.into(),
            x.into(),
            y.into(),
            m.zeta(s).into(),
            m.eta(s).into(),
            m.gamma1_s(s).into(),
            m.gamma2_s(s).into(),
            residual.into(),
        ]);
    }
    Ok(t)
}

fn cmd_critical(config: &Config) -> Result<OutputTable, CliError> {
    let (m, _, _) = config.normalized()?;
    let c = m.critical_points();
    let mut t = OutputTable::new(&[
        "s_star",
        "s_star2",
        "x_star",
        "y_star",
        "x_star2",
        "y_star2",
        "alpha_star",
        "alpha_star2",
        "pole_phi2",
        "pole_phi1",
        "x_max",
        "y_max",
        "alpha_mu",
    ]);
    t.push(vec![
        c.s_star.into(),
        c.s_star2.into(),
        c.x_star.into(),
        c.y_star.into(),
        c.x_star2.into(),
        c.y_star2.into(),
        c.alpha_star.into(),
        c.alpha_star2.into(),
        c.pole_phi2.into(),
        c.pole_phi1.into(),
        c.x_max.into(),
        c.y_max.into(),
        c.alpha_mu.into(),
    ]);
    Ok(t)
}

fn cmd_transforms(config: &Config, s_list: &[f64], n: usize) -> Result<OutputTable, CliError> {
    let (m, _, z) = config.normalized()?;
    let tr = Transforms::new(m, z);
    let (lo, hi) = valid_window(&m);
    let grid = if s_list.is_empty() {
        if n == 0 {
            return Err(CliError::config("n", "must be positive"));
        }
        (1..=n).map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64).collect()
    } else {
        s_list.to_vec()
    };
    let mut t = OutputTable::new(&["s", "x", "y", "phi2", "phi1", "terms2", "terms1", "tail2", "tail1"]);
    for s in grid {
        let f2 = tr.phi2_series(s).map_err(|e| compensation_error("phi2", e))?;
        let f1 = tr.phi1_series(s).map_err(|e| compensation_error("phi1", e))?;
        for (what, v) in [("phi2", &f2), ("phi1", &f1)] {
            if !v.converged {
                return Err(CliError::NotConverged {
                    quantity: format!("{what}(s = {s})"),
                    detail: format!("tail bound {:e} after {} terms", v.tail_bound, v.n_terms),
                });
            }
        }
        t.push(vec![
            s.into(),
            m.x_of_s(s).into(),
            m.y_of_s(s).into(),
            f2.re().into(),
            f1.re().into(),
            f2.n_terms.into(),
            f1.n_terms.into(),
            f2.tail_bound.into(),
            f1.tail_bound.into(),
        ]);
    }
    t.metadata.insert("window".into(), format!("({}, {})", fmt_num(lo), fmt_num(hi)));
    Ok(t)
}

fn cmd_harmonic(config: &Config, grid: &AngleGrid) -> Result<OutputTable, CliError> {
    let (m, _, z) = config.normalized()?;
    let cd = m.critical_points();
    let h = Harmonic::new(m);
    let mut t = OutputTable::new(&["alpha", "h", "case", "terms", "tail"]);
    for alpha in angles(grid, cd.alpha_star, cd.alpha_star2)? {
        let ev = h.h_alpha(z, alpha).map_err(|e| compensation_error("h_alpha", e))?;
        if !ev.series.converged {
            return Err(CliError::NotConverged {
                quantity: format!("h_alpha(alpha = {alpha})"),
                detail: format!("tail bound {:e}", ev.series.tail_bound),
            });
        }
        t.push(vec![
            alpha.into(),
            ev.value.into(),
            ev.case_tag.as_str().into(),
            ev.series.n_terms.into(),
            ev.series.tail_bound.into(),
        ]);
    }
    Ok(t)
}

fn cmd_asymptotics(config: &Config, grid: &AngleGrid) -> Result<OutputTable, CliError> {
    let (m, _, z) = config.normalized()?;
    let gr = Greens::new(m);
    let mut t = OutputTable::new(&[
        "alpha",
        "regime",
        "rho",
        "power",
        "constant",
        "harmonic",
        "case",
        "secondary_power",
        "secondary_constant",
    ]);
    for alpha in angles(grid, 0.0, FRAC_PI_2)? {
        let a = gr.asymptotic_g(z, alpha).map_err(|e| greens_error("asymptotic_g", e))?;
        let (sp, sc) = a.secondary.unwrap_or((f64::NAN, f64::NAN));
        t.push(vec![
            alpha.into(),
            a.regime.as_str().into(),
            a.decay_rate.into(),
            a.power.into(),
            a.constant.into(),
            a.harmonic.into(),
            a.harmonic_case.as_str().into(),
            sp.into(),
            sc.into(),
        ]);
    }
    Ok(t)
}

fn cmd_green(
    config: &Config,
    a_list: &[f64],
    b_list: &[f64],
    epsilon: Option<f64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_subdiv: Option<usize>,
) -> Result<OutputTable, CliError> {
    let (m, _, z) = config.normalized()?;
    let gr = Greens::new(m);
    let mut t = OutputTable::new(&["a", "b", "g", "imag", "error", "tail", "subdivisions"]);
    for &a in a_list {
        for &b in b_list {
            if !(a > 0.0 && b > 0.0) {
                return Err(CliError::config("a, b", format!("({a}, {b}) must lie in the open quadrant")));
            }
            let mut spec = QuadratureSpec::auto(&m, z, a, b).map_err(|e| greens_error("green", e))?;
            if let Some(e) = epsilon {
                spec.epsilon = e;
            }
            if let Some(r) = rel_tol {
                spec.rel_tol = r;
            }
            if let Some(r) = abs_tol {
                spec.abs_tol = r;
            }
            if let Some(n) = max_subdiv {
                spec.max_subdiv = n;
            }
            let g = gr.green_numeric(z, a, b, &spec).map_err(|e| greens_error(&format!("g({a}, {b})"), e))?;
            t.push(vec![
                a.into(),
                b.into(),
                g.value.into(),
                g.imag.into(),
                g.error.into(),
                g.tail.into(),
                g.subdivisions.into(),
            ]);
        }
    }
    Ok(t)
}

fn cmd_martin(config: &Config, grid: &AngleGrid) -> Result<OutputTable, CliError> {
    let (m, _, z) = config.normalized()?;
    let gr = Greens::new(m);
    let mut t = OutputTable::new(&["alpha", "kernel"]);
    for alpha in angles(grid, 0.0, FRAC_PI_2)? {
        let k = gr.martin_kernel_limit(z, alpha).map_err(|e| greens_error(&format!("K(alpha = {alpha})"), e))?;
        t.push(vec![alpha.into(), k.into()]);
    }
    Ok(t)
}

fn cmd_simulate(config: &Config, cmd: &Command) -> Result<OutputTable, CliError> {
    let Command::Simulate {
        experiment,
        seed,
        n_paths,
        dt,
        t_max,
        scheme,
        fixed_step,
        a,
        b,
        side,
        axis,
        half_width,
        target,
        x,
        y,
        alpha,
        t,
    } = cmd
    else {
        unreachable!("cmd_simulate is called for simulate only");
    };
    let dynamics = Dynamics::from_params(&config.params).map_err(mc_error)?;
    let mut mc = McConfig::new(*n_paths, *dt, *t_max, *seed).with_scheme(match scheme {
        SchemeArg::Bridge => Scheme::Bridge,
        SchemeArg::Projected => Scheme::Projected,
    });
    if *fixed_step {
        mc = mc.fixed_step();
    }
    let sim = Simulator::new(dynamics, mc).map_err(mc_error)?;
    let z0 = config.z0;
    let mut table = match experiment {
        Experiment::GreenBox => {
            if !(*side > 0.0) {
                return Err(CliError::config("side", "must be positive"));
            }
            let rect = Rect::centered((*a, *b), *side);
            let est = estimate_green_box(&sim, z0, rect).map_err(mc_error)?.scaled(1.0 / rect.area());
            let mut t = OutputTable::new(&["a", "b", "side", "censored", "mean", "se", "n"]);
            t.push(vec![
                (*a).into(),
                (*b).into(),
                (*side).into(),
                est.censored.into(),
                est.mean.into(),
                est.std_error.into(),
                est.n.into(),
            ]);
            t
        }
        Experiment::Boundary => {
            let ax = match axis {
                AxisArg::X0 => Axis::X0,
                AxisArg::Y0 => Axis::Y0,
            };
            let (lo, hi) = (a - half_width, a + half_width);
            let est = estimate_boundary_density(&sim, z0, ax, (lo, hi)).map_err(mc_error)?;
            let mut t = OutputTable::new(&["axis", "lo", "hi", "censored", "mean", "se", "n"]);
            let name = if ax == Axis::X0 { "x0" } else { "y0" };
            t.push(vec![
                name.into(),
                lo.into(),
                hi.into(),
                est.censored.into(),
                est.mean.into(),
                est.std_error.into(),
                est.n.into(),
            ]);
            t
        }
        Experiment::Laplace => {
            let (tgt, name) = match target {
                LaplaceArg::Interior => (LaplaceTarget::Interior { x: *x, y: *y }, "interior"),
                LaplaceArg::Face1 => (LaplaceTarget::Face1 { y: *y }, "face1"),
                LaplaceArg::Face2 => (LaplaceTarget::Face2 { x: *x }, "face2"),
            };
            let est = estimate_laplace(&sim, z0, tgt).map_err(mc_error)?;
            let mut t = OutputTable::new(&["target", "x", "y", "censored", "mean", "se", "n"]);
            t.push(vec![
                name.into(),
                (*x).into(),
                (*y).into(),
                est.censored.into(),
                est.mean.into(),
                est.std_error.into(),
                est.n.into(),
            ]);
            t
        }
        Experiment::Harmonicity | Experiment::Arc => {
            let (m, map) = normalize(&config.params).map_err(model_error)?;
            let h = Harmonic::new(m);
            let f = move |z: (f64, f64)| {
                map.map_point(z).ok().and_then(|w| h.h_alpha(w, *alpha).ok()).map_or(f64::NAN, |e| e.value)
            };
            let hz = h
                .h_alpha(map.map_point(z0).map_err(model_error)?, *alpha)
                .map_err(|e| compensation_error("h_alpha", e))?;
            if *experiment == Experiment::Harmonicity {
                let est = check_harmonic(&sim, &f, z0, *t).map_err(mc_error)?;
                let mut tb = OutputTable::new(&["alpha", "t", "mean", "se", "n"]);
                tb.push(vec![(*alpha).into(), (*t).into(), est.mean.into(), est.std_error.into(), est.n.into()]);
                tb
            } else {
                let sample = hitting_distribution_arc(&sim, z0).map_err(mc_error)?;
                let est = sample.average(f).map_err(mc_error)?;
                let mut tb = OutputTable::new(&["alpha", "h_z0", "excluded", "mean", "se", "n"]);
                tb.push(vec![
                    (*alpha).into(),
                    hz.value.into(),
                    sample.excluded.into(),
                    est.mean.into(),
                    est.std_error.into(),
                    est.n.into(),
                ]);
                tb
            }
        }
    };
    for (k, v) in [
        ("seed", seed.to_string()),
        ("n_paths", n_paths.to_string()),
        ("dt", fmt_num(*dt)),
        ("t_max", fmt_num(*t_max)),
        ("scheme", format!("{scheme:?}").to_lowercase()),
        ("adaptive", (!fixed_step).to_string()),
    ] {
        table.metadata.insert(k.into(), v);
    }
    Ok(table)
}

fn cmd_verify(quick: bool, seed: Option<u64>, criteria: &[u8], err: &mut dyn Write) -> Result<OutputTable, CliError> {
    let seed = seed.unwrap_or(SUITE_SEED);
    let opts = if quick { SuiteOptions::quick(seed) } else { SuiteOptions::full(seed) };
    let ids: Vec<u8> = if criteria.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { criteria.to_vec() };
    for id in &ids {
        if !CRITERIA.iter().any(|c| c.0 == *id) {
            return Err(CliError::config("criteria", format!("no criterion {id}")));
        }
    }
    let mut t = OutputTable::new(&["criterion", "name", "passed", "check", "measured", "bound", "seconds"]);
    for id in ids {
        let r = acceptance::run_criterion(id, &opts);
        let _ = writeln!(err, "{}", r.line());
        for n in &r.notes {
            let _ = writeln!(err, "    {n}");
        }
        let (label, measured, bound) =
            r.headline().map_or((String::new(), f64::NAN, f64::NAN), |c| (c.label.clone(), c.measured, c.bound));
        t.push(vec![
            (r.id as usize).into(),
            r.name.into(),
            r.passed.into(),
            label.into(),
            measured.into(),
            bound.into(),
            r.seconds.into(),
        ]);
    }
    t.metadata.insert("seed".into(), seed.to_string());
    t.metadata.insert("n_paths".into(), opts.n_paths.to_string());
    Ok(t)
}
