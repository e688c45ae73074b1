//! Command-line front end. Every subcommand reads one JSON configuration,
//! runs a library routine and writes its outputs into `--out` only after the
//! whole computation has succeeded.

use crate::dispersion::{dispersion_at, find_bifurcation_points, BifurcationPoint, DispersionError, ScanOptions};
use crate::model::{FlowParameters, JetModel, ModelError, SwirlFunction, VorticityFunction};
use crate::output::{csv_table, write_atomic};
use crate::spectral::{cross_validate_with_dispersion, spectrum_of, DEFAULT_N};
use crate::trivial_flow::{check_condition_h, solve_trivial, ShootingOptions};
use crate::validation::validate_all;
use crate::wave::{continue_branch, BranchOptions, WaveConfig};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "capjet", version, about = "Laminar and wavy capillary jets with vorticity and swirl")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Laminar profile and its boundary coefficients.
    Trivial,
    /// Dispersion function along a lambda sweep.
    Dispersion,
    /// Certified bifurcation points.
    BifurcationPoints,
    /// Spectrum of the linearized pencil.
    Spectrum,
    /// Continuation of a branch from a bifurcation point.
    Branch,
    /// Certificates and oracle-equivalence checks.
    ValidatePaper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Computation,
    Io,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn config(m: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            message: m.into(),
        }
    }

    fn computation(e: impl std::fmt::Display) -> Self {
        Self {
            kind: ErrorKind::Computation,
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Computation | ErrorKind::Io => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::config(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaConfig {
    #[default]
    Zero,
    Constant(f64),
    Polynomial(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: f64,
    pub sigma: f64,
    /// Exactly one of `nu` and `period`.
    pub nu: Option<f64>,
    pub period: Option<f64>,
    #[serde(default)]
    pub gamma: GammaConfig,
    /// Coefficients of `F`, lowest degree first.
    #[serde(default)]
    pub swirl: Vec<f64>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<JetModel, CliError> {
        let params = match (self.nu, self.period) {
            (Some(nu), None) => FlowParameters::from_nu(self.d, self.sigma, nu)?,
            (None, Some(l)) => FlowParameters::new(self.d, self.sigma, l)?,
            _ => return Err(CliError::config("model: give exactly one of nu and period")),
        };
        let gamma = match &self.gamma {
            GammaConfig::Zero => VorticityFunction::Zero,
            GammaConfig::Constant(g) if g.is_finite() => VorticityFunction::Constant(*g),
            GammaConfig::Constant(g) => return Err(CliError::config(format!("gamma constant {g} is not finite"))),
            GammaConfig::Polynomial(c) => VorticityFunction::polynomial(c.clone())?,
        };
        Ok(JetModel::new(params, gamma, SwirlFunction::new(self.swirl.clone())?))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrivialConfig {
    pub lambda: f64,
    pub n_samples: usize,
}

impl Default for TrivialConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            n_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    pub k: Vec<u32>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n: usize,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            k: vec![1],
            lambda_min: 0.1,
            lambda_max: 1.0,
            n: 91,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BifurcationConfig {
    pub k_min: u32,
    pub k_max: u32,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_scan: usize,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        Self {
            k_min: 1,
            k_max: 1,
            lambda_min: 0.1,
            lambda_max: 1.0,
            n_scan: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub lambda: f64,
    pub n: usize,
    /// Window half-width for the comparison with the roots of `D`; none skips it.
    pub cross_validate_mu_max: Option<f64>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            n: DEFAULT_N,
            cross_validate_mu_max: Some(60.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    /// Output of `bifurcation-points`; relative paths start at the config file.
    pub points_file: PathBuf,
    #[serde(default)]
    pub point_index: usize,
    #[serde(rename = "N_s", default = "default_n_s")]
    pub n_s: usize,
    #[serde(rename = "N_z", default = "default_n_z")]
    pub n_z: usize,
    #[serde(default = "default_ds")]
    pub ds: f64,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_eps_dom")]
    pub eps_dom: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default)]
    pub dump_states: bool,
}

fn default_n_s() -> usize {
    WaveConfig::default().n_s
}
fn default_n_z() -> usize {
    WaveConfig::default().n_z
}
fn default_ds() -> f64 {
    BranchOptions::default().ds
}
fn default_n_steps() -> usize {
    BranchOptions::default().n_steps
}
fn default_eps_dom() -> f64 {
    WaveConfig::default().eps_dom
}
fn default_newton_tol() -> f64 {
    BranchOptions::default().newton_tol
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub trivial: TrivialConfig,
    #[serde(default)]
    pub dispersion: DispersionConfig,
    #[serde(default)]
    pub bifurcation: BifurcationConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    pub branch: Option<BranchConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))
    }

    fn model(&self) -> Result<JetModel, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::config("config has no model block"))?
            .build()
    }
}

/// File read by `branch`; extra fields of the scan output are ignored.
#[derive(Debug, Deserialize)]
struct PointsFile {
    points: Vec<BifurcationPoint>,
}

#[derive(Serialize)]
struct PointsOutput<'a> {
    points: &'a [BifurcationPoint],
    pole_brackets: &'a [crate::dispersion::PoleBracket],
    cutoff_active: bool,
}

/// Files produced by a command, written only once everything succeeded.
pub type Outputs = Vec<(String, Vec<u8>)>;

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s.into_bytes()
}

fn log(verbose: bool, msg: impl AsRef<str>) {
    if verbose {
        eprintln!("capjet: {}", msg.as_ref());
    }
}

fn cmd_trivial(cfg: &RunConfig, verbose: bool) -> Result<Outputs, CliError> {
    let model = cfg.model()?;
    let t = &cfg.trivial;
    if t.n_samples < 1 {
        return Err(CliError::config("trivial.n_samples must be positive"));
    }
    log(verbose, format!("laminar profile at lambda = {}", t.lambda));
    let p = solve_trivial(&model, t.lambda).map_err(CliError::computation)?;
    let summary = serde_json::json!({
        "summary": p.summary(),
        "condition_h": check_condition_h(&p),
    });
    Ok(vec![
        ("profile.csv".into(), p.to_csv(t.n_samples).into_bytes()),
        ("summary.json".into(), json_bytes(&summary)),
    ])
}

fn cmd_dispersion(cfg: &RunConfig, verbose: bool) -> Result<Outputs, CliError> {
    let model = cfg.model()?;
    let c = &cfg.dispersion;
    if c.n < 2 || !(c.lambda_min < c.lambda_max) || c.k.is_empty() || c.k.contains(&0) {
        return Err(CliError::config("dispersion: need n >= 2, lambda_min < lambda_max and positive k"));
    }
    let mut rows = Vec::new();
    for &k in &c.k {
        log(verbose, format!("sweep k = {k}"));
        for i in 0..c.n {
            let lambda = c.lambda_min + (c.lambda_max - c.lambda_min) * i as f64 / (c.n - 1) as f64;
            let speed = solve_trivial(&model, lambda).map_err(CliError::computation)?.c;
            let v = match dispersion_at(&model, k, lambda, ShootingOptions::default()) {
                Ok(v) => v.as_f64(),
                Err(DispersionError::DegenerateSurfaceSpeed(_)) => f64::NAN,
                Err(e) => return Err(CliError::computation(e)),
            };
            rows.push(vec![k as f64, lambda, speed, v]);
        }
    }
    let mut roots = Vec::new();
    for &k in &c.k {
        let scan = find_bifurcation_points(&model, &ScanOptions::new(k, k, c.lambda_min, c.lambda_max, c.n))
            .map_err(CliError::computation)?;
        roots.extend(scan.points.iter().map(|p| vec![k as f64, p.lambda0, p.c0, p.d_lambda]));
    }
    Ok(vec![
        ("dispersion.csv".into(), csv_table(&["k", "lambda", "c", "D"], rows).into_bytes()),
        ("roots.csv".into(), csv_table(&["k", "lambda0", "c0", "D_lambda"], roots).into_bytes()),
    ])
}

fn cmd_bifurcation_points(cfg: &RunConfig, verbose: bool) -> Result<Outputs, CliError> {
    let model = cfg.model()?;
    let b = &cfg.bifurcation;
    let opts = ScanOptions::new(b.k_min, b.k_max, b.lambda_min, b.lambda_max, b.n_scan);
    let scan = find_bifurcation_points(&model, &opts).map_err(|e| match e {
        DispersionError::InvalidRange(m) => CliError::config(format!("bifurcation: {m}")),
        e => CliError::computation(e),
    })?;
    log(verbose, format!("{} points found", scan.points.len()));
    let out = PointsOutput {
        points: &scan.points,
        pole_brackets: &scan.pole_brackets,
        cutoff_active: scan.cutoff_active,
    };
    Ok(vec![
        ("bifurcation_points.json".into(), json_bytes(&out)),
        ("dispersion_diagram.csv".into(), scan.diagram_csv().into_bytes()),
    ])
}

fn cmd_spectrum(cfg: &RunConfig, verbose: bool) -> Result<Outputs, CliError> {
    let model = cfg.model()?;
    let s = &cfg.spectrum;
    let p = solve_trivial(&model, s.lambda).map_err(CliError::computation)?;
    log(verbose, format!("pencil of size {}", s.n));
    let res = spectrum_of(&p, s.n).map_err(|e| match e {
        crate::spectral::SpectralError::GridTooSmall(n) => CliError::config(format!("spectrum.n = {n} is too small")),
        e => CliError::computation(e),
    })?;
    let cross = match s.cross_validate_mu_max {
        Some(mu) => Some(cross_validate_with_dispersion(&res, &p, mu, 400).map_err(CliError::computation)?),
        None => None,
    };
    let rows = res.eigenvalues.iter().map(|e| vec![e.re, e.im, e.residual]);
    let report = serde_json::json!({
        "lambda": s.lambda,
        "n": s.n,
        "condition_h": check_condition_h(&p),
        "spectrum": res.report(),
        "cross_validation": cross,
    });
    Ok(vec![
        ("spectrum.json".into(), json_bytes(&report)),
        ("eigenvalues.csv".into(), csv_table(&["re", "im", "residual"], rows).into_bytes()),
    ])
}

fn cmd_branch(cfg: &RunConfig, base: &Path, verbose: bool) -> Result<Outputs, CliError> {
    let model = cfg.model()?;
    let b = cfg
        .branch
        .as_ref()
        .ok_or_else(|| CliError::config("config has no branch block"))?;
    if b.n_s < 4 || b.n_z < 4 || b.n_steps == 0 || !(b.ds.is_finite() && b.ds != 0.0) {
        return Err(CliError::config("branch: need N_s, N_z >= 4, n_steps >= 1 and nonzero ds"));
    }
    if !(b.eps_dom > 0.0 && b.newton_tol > 0.0) {
        return Err(CliError::config("branch: eps_dom and newton_tol must be positive"));
    }
    let path = if b.points_file.is_absolute() {
        b.points_file.clone()
    } else {
        base.join(&b.points_file)
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::config(format!("points file {}: {e}", path.display())))?;
    let points: PointsFile = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("points file {}: {e}", path.display())))?;
    let point = points
        .points
        .get(b.point_index)
        .ok_or_else(|| CliError::config(format!("points file has no entry {}", b.point_index)))?;
    let opts = BranchOptions {
        ds: b.ds,
        n_steps: b.n_steps,
        config: WaveConfig {
            n_s: b.n_s,
            n_z: b.n_z,
            eps_dom: b.eps_dom,
        },
        newton_tol: b.newton_tol,
        ..BranchOptions::default()
    };
    log(verbose, format!("continuing from lambda0 = {}, k0 = {}", point.lambda0, point.k0));
    let branch = continue_branch(&model, point, &opts).map_err(CliError::computation)?;
    log(verbose, format!("{} steps, {}", branch.points.len(), branch.termination.label()));
    let summary = serde_json::json!({
        "point": point,
        "options": opts,
        "accepted_steps": branch.points.len(),
        "termination": branch.termination,
        "termination_label": branch.termination.label(),
    });
    let mut out: Outputs = vec![
        ("branch.csv".into(), branch.to_csv().into_bytes()),
        ("branch_summary.json".into(), json_bytes(&summary)),
    ];
    if b.dump_states {
        out.push(("branch_states.json".into(), json_bytes(&branch)));
    }
    Ok(out)
}

fn cmd_validate(verbose: bool) -> Result<(Outputs, bool, String), CliError> {
    log(verbose, "running certificates and criteria");
    let report = validate_all();
    let table = report.table();
    Ok((
        vec![("validation.json".into(), json_bytes(&report))],
        report.all_passed(),
        table,
    ))
}

fn write_outputs(dir: &Path, files: &Outputs) -> Result<(), CliError> {
    for (name, bytes) in files {
        write_atomic(&dir.join(name), bytes).map_err(|e| CliError {
            kind: ErrorKind::Io,
            message: format!("{}: {e}", dir.join(name).display()),
        })?;
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("CAPJET_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::config(format!("CAPJET_THREADS = {v:?} is not a positive integer")))?;
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs a parsed command; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let (cfg, base) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (RunConfig::from_json(&text)?, base)
        }
        None if cli.command == Command::ValidatePaper => (RunConfig::default(), PathBuf::new()),
        None => return Err(CliError::config("--config is required for this command")),
    };
    let v = cli.verbose;
    let files = match cli.command {
        Command::Trivial => cmd_trivial(&cfg, v)?,
        Command::Dispersion => cmd_dispersion(&cfg, v)?,
        Command::BifurcationPoints => cmd_bifurcation_points(&cfg, v)?,
        Command::Spectrum => cmd_spectrum(&cfg, v)?,
        Command::Branch => cmd_branch(&cfg, &base, v)?,
        Command::ValidatePaper => {
            let (files, ok, table) = cmd_validate(v)?;
            write_outputs(&cli.out, &files)?;
            print!("{table}");
            return Ok(if ok { 0 } else { 1 });
        }
    };
    write_outputs(&cli.out, &files)?;
    for (name, _) in &files {
        log(v, format!("wrote {}", cli.out.join(name).display()));
    }
    Ok(0)
}

/// Parses `args` and runs; clap usage errors exit with code 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}

