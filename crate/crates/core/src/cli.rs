//! Config-driven experiment runner: JSON config in, CSV table, JSON summary
//! and optional xy plot files out.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::adiabatic::{
    cancellation_times, predictions, sweep, verify_bfk_corollary, verify_lemma_cancellation,
    verify_smalltime_largetime_split, verify_theorem_dn, verify_theorem_main, LimitCheck,
    SweepResult,
};
use crate::fit::linear_fit;
use crate::glue::{trace_perp_inverse_diff, GlueGeometry};
use crate::scattering::{
    dn_zero_mode_asymptotics, det_l_identity, model_identities, model_logdet,
    model_logdet_numeric, residual_rate, svalue_match, svalues_exact, Piece, SValueReport,
    SmallOperator,
};
use crate::spectral::fiber::FiberSpectrum;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "ADIABATIC_ZETA_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Bfk,
    TheoremMain,
    TheoremDn,
    Svalues,
    DnAsymptotics,
    HeatCancellation,
    TracePerp,
    ModelIdentities,
    Split,
}

pub struct RegistryEntry {
    pub experiment: Experiment,
    pub name: &'static str,
    pub entry_point: &'static str,
    pub description: &'static str,
    pub claim: &'static str,
}

pub const REGISTRY: [RegistryEntry; 9] = [
    RegistryEntry {
        experiment: Experiment::Bfk,
        name: "bfk",
        entry_point: "adiabatic::verify_bfk_corollary",
        description: "per-R ratio det Δ_R / (det Δ₁ det Δ₂ det R_R)",
        claim: "gluing constant C(Y) = 2^{-ζ_Y(0) - h_Y} for every R",
    },
    RegistryEntry {
        experiment: Experiment::TheoremMain,
        name: "theorem-main",
        entry_point: "adiabatic::verify_theorem_main",
        description: "extrapolated R^{h_Y} det Δ_R / (det Δ₁ det Δ₂)",
        claim: "limit 2^{-h_Y} √det*Δ_Y · det((Id - C₁₂)/2)",
    },
    RegistryEntry {
        experiment: Experiment::TheoremDn,
        name: "theorem-dn",
        entry_point: "adiabatic::verify_theorem_dn",
        description: "extrapolated R^{h_Y} det R_R",
        claim: "limit 2^{ζ_Y(0)} det*√Δ_Y · det((Id - C₁₂)/2)",
    },
    RegistryEntry {
        experiment: Experiment::Svalues,
        name: "svalues",
        entry_point: "scattering::svalue_match",
        description: "small eigenvalues against the model operators, with residual rate",
        claim: "R²λ² ~ spec Δ(C̄_i) on pieces, 4R²λ² ~ spec ¼Δ(C₁₂) on M_R",
    },
    RegistryEntry {
        experiment: Experiment::DnAsymptotics,
        name: "dn-asymptotics",
        entry_point: "scattering::dn_zero_mode_asymptotics",
        description: "zero-mode Dirichlet-to-Neumann forms on C_i(0) eigenvectors",
        claim: "⟨N_i φ₋, φ₋⟩ = (1/R)(1 - α/2R)^{-1}, zero on the +1 direction",
    },
    RegistryEntry {
        experiment: Experiment::HeatCancellation,
        name: "heat-cancellation",
        entry_point: "adiabatic::verify_lemma_cancellation",
        description: "relative heat trace against half the cross-section trace",
        claim: "deviation ≤ c₁ e^{-c₂ R²/t}",
    },
    RegistryEntry {
        experiment: Experiment::TracePerp,
        name: "trace-perp",
        entry_point: "glue::trace_perp_inverse_diff",
        description: "nonzero-mode trace of R_R⁻¹ - (2√Δ_Y)⁻¹",
        claim: "exponential decay at rate 4μ_min in R",
    },
    RegistryEntry {
        experiment: Experiment::ModelIdentities,
        name: "model-identities",
        entry_point: "scattering::model_identities",
        description: "model determinants, their truncated-ζ numerics, and det L(R)",
        claim: "det Δ(U) = 4^d ∏ sin²(α/2); det L(R) = R^{-h_Y} det((Id - C₁₂)/2)",
    },
    RegistryEntry {
        experiment: Experiment::Split,
        name: "split",
        entry_point: "adiabatic::verify_smalltime_largetime_split",
        description: "small/large-time Mellin halves of the relative ζ′(0)",
        claim: "halves tend to ½ζ′_Y(0) and the model-operator terms; sum matches the limit",
    },
];

impl Experiment {
    pub fn entry(&self) -> &'static RegistryEntry {
        REGISTRY.iter().find(|e| e.experiment == *self).expect("every experiment is registered")
    }
}

pub fn list_experiments() -> String {
    let mut out = String::new();
    for e in &REGISTRY {
        let _ = writeln!(out, "{:<18} {}", e.name, e.description);
        let _ = writeln!(out, "{:<18}   checks: {}", "", e.claim);
        let _ = writeln!(out, "{:<18}   entry:  {}", "", e.entry_point);
    }
    out
}

/// A phase in radians, or as a multiple of π: `{"pi": 0.5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Phase {
    Radians(f64),
    PiMultiple { pi: f64 },
}

impl Phase {
    pub fn radians(&self) -> f64 {
        match *self {
            Phase::Radians(x) => x,
            Phase::PiMultiple { pi } => pi * PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FiberConfig {
    /// (eigenvalue, multiplicity) pairs.
    Eigenvalues(Vec<(f64, u32)>),
    /// (frequency, multiplicity) pairs, frequency = √eigenvalue.
    Frequencies(Vec<(f64, u32)>),
    Circle { circumference: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub a1: f64,
    pub a2: f64,
    pub holonomy: Vec<Phase>,
}

/// Config file as written by the user; omitted fields take per-experiment defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub fiber: FiberConfig,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub r_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Window exponent κ in λ ≤ R^{-κ} (svalues).
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Split exponent ε in t = R^{2-ε} (split).
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Accepted band for the fitted convergence exponent (theorem-*).
    #[serde(default)]
    pub exponent_band: Option<[f64; 2]>,
    /// Minimal fitted decay constant c₂ (heat-cancellation).
    #[serde(default)]
    pub min_decay: Option<f64>,
    /// (R, bound) on |value| at one radius (trace-perp).
    #[serde(default)]
    pub value_bound: Option<[f64; 2]>,
    /// Model phases for the determinant formula check (model-identities).
    #[serde(default)]
    pub alphas: Option<Vec<Phase>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub xy: Option<bool>,
}

/// Config with every default filled in; this is what gets hashed and echoed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub fiber: FiberConfig,
    pub geometry: GeometryConfig,
    pub r_grid: Vec<f64>,
    pub tolerance: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub exponent_band: [f64; 2],
    pub min_decay: f64,
    pub value_bound: [f64; 2],
    pub alphas: Vec<f64>,
    /// Destination only; kept out of the hash so output bytes do not depend on it.
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub xy: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub rmax: Option<f64>,
    pub tol: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numeric failure ({context}): {source}")]
    Numeric {
        context: String,
        #[source]
        source: crate::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 2,
            CliError::Numeric { .. } => 3,
        }
    }

    fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

fn numeric(context: impl Into<String>) -> impl FnOnce(crate::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Numeric { context, source }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(path, e.into_inner().to_string())
    })
}

fn default_grid(e: Experiment) -> Vec<f64> {
    match e {
        Experiment::Bfk => vec![2.0, 4.0, 8.0, 16.0, 32.0],
        Experiment::TheoremMain | Experiment::TheoremDn => vec![4.0, 8.0, 16.0, 32.0, 64.0],
        Experiment::Svalues => vec![10.0, 20.0, 40.0, 80.0],
        Experiment::DnAsymptotics => vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
        Experiment::HeatCancellation => vec![4.0, 6.0, 8.0],
        Experiment::TracePerp => (3..=10).map(f64::from).collect(),
        Experiment::ModelIdentities => vec![2.0, 4.0, 8.0],
        Experiment::Split => vec![64.0],
    }
}

fn default_tolerance(e: Experiment) -> f64 {
    match e {
        Experiment::Bfk => 1e-9,
        Experiment::TheoremMain | Experiment::TheoremDn => 1e-4,
        // half-width of the accepted band around 2 for the residual ratio
        Experiment::Svalues => 0.4,
        Experiment::DnAsymptotics => 1e-14,
        Experiment::HeatCancellation => 2.0,
        Experiment::TracePerp => 0.1,
        Experiment::ModelIdentities => 1e-8,
        Experiment::Split => 0.02,
    }
}

impl ExperimentConfig {
    pub fn resolve(self, ov: &Overrides) -> Result<ResolvedConfig, CliError> {
        let e = self.experiment;
        let mut r_grid = self.r_grid.unwrap_or_else(|| default_grid(e));
        if let Some(rmax) = ov.rmax {
            if !(rmax > 0.0) {
                return Err(CliError::config("--rmax", format!("must be positive, got {rmax}")));
            }
            r_grid.retain(|&r| r <= rmax);
        }
        r_grid.sort_by(f64::total_cmp);
        r_grid.dedup();
        for (i, &r) in r_grid.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::config(format!("r_grid[{i}]"), format!("must be positive, got {r}")));
            }
        }
        if r_grid.is_empty() {
            return Err(CliError::config("r_grid", "no radii left"));
        }
        let tolerance = ov.tol.or(self.tolerance).unwrap_or_else(|| default_tolerance(e));
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(CliError::config("tolerance", format!("must be ≥ 0, got {tolerance}")));
        }
        let kappa = self.kappa.unwrap_or(0.75);
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(CliError::config("kappa", format!("must be in (0, 1], got {kappa}")));
        }
        let epsilon = self.epsilon.unwrap_or(0.25);
        if !(epsilon > 0.0 && epsilon < 2.0) {
            return Err(CliError::config("epsilon", format!("must be in (0, 2), got {epsilon}")));
        }
        validate_fiber(&self.fiber)?;
        for (name, v) in [("geometry.a1", self.geometry.a1), ("geometry.a2", self.geometry.a2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(name, format!("must be positive, got {v}")));
            }
        }
        for (i, p) in self.geometry.holonomy.iter().enumerate() {
            if !p.radians().is_finite() {
                return Err(CliError::config(format!("geometry.holonomy[{i}]"), "must be finite"));
            }
        }
        Ok(ResolvedConfig {
            experiment: e,
            fiber: self.fiber,
            geometry: self.geometry,
            r_grid,
            tolerance,
            kappa,
            epsilon,
            exponent_band: self.exponent_band.unwrap_or([0.8, 1.2]),
            min_decay: self.min_decay.unwrap_or(0.5),
            value_bound: self.value_bound.unwrap_or([5.0, 1e-8]),
            alphas: self
                .alphas
                .unwrap_or_else(|| vec![Phase::PiMultiple { pi: 1.0 / 3.0 }, Phase::PiMultiple { pi: 0.5 }, Phase::PiMultiple { pi: 1.0 }])
                .iter()
                .map(Phase::radians)
                .collect(),
            output_dir: ov
                .out
                .clone()
                .or(self.output_dir)
                .unwrap_or_else(|| PathBuf::from("out")),
            xy: self.xy.unwrap_or(true),
        })
    }
}

fn validate_fiber(f: &FiberConfig) -> Result<(), CliError> {
    let (key, pairs) = match f {
        FiberConfig::Eigenvalues(p) => ("eigenvalues", p),
        FiberConfig::Frequencies(p) => ("frequencies", p),
        FiberConfig::Circle { circumference } => {
            return if *circumference > 0.0 && circumference.is_finite() {
                Ok(())
            } else {
                Err(CliError::config(
                    "fiber.circle.circumference",
                    format!("must be positive, got {circumference}"),
                ))
            };
        }
    };
    if pairs.is_empty() {
        return Err(CliError::config(format!("fiber.{key}"), "empty spectrum"));
    }
    for (i, &(v, m)) in pairs.iter().enumerate() {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CliError::config(
                format!("fiber.{key}[{i}][0]"),
                format!("must be finite and ≥ 0, got {v}"),
            ));
        }
        if m == 0 {
            return Err(CliError::config(format!("fiber.{key}[{i}][1]"), "multiplicity must be ≥ 1"));
        }
    }
    Ok(())
}

impl ResolvedConfig {
    pub fn fiber_spectrum(&self) -> Result<FiberSpectrum, CliError> {
        match &self.fiber {
            FiberConfig::Eigenvalues(p) => FiberSpectrum::from_eigenvalues(p),
            FiberConfig::Frequencies(p) => FiberSpectrum::finite(p),
            FiberConfig::Circle { circumference } => FiberSpectrum::circle(*circumference),
        }
        .map_err(|e| CliError::config("fiber", e.to_string()))
    }

    /// Geometry at the first grid radius.
    pub fn geometry(&self) -> Result<GlueGeometry, CliError> {
        let phases = self.geometry.holonomy.iter().map(Phase::radians).collect();
        GlueGeometry::new(self.geometry.a1, self.geometry.a2, self.r_grid[0], phases)
            .map_err(|e| CliError::config("geometry", e.to_string()))
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        format!("{:x}", Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn provenance_header(&self) -> String {
        format!(
            "# adiabatic-zeta {VERSION} config-sha256={}\n# config {}\n",
            self.sha256(),
            self.canonical_json()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Fixed formatting: 17 significant digits for floats.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(Cell::from($x)),*] };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// Two-column whitespace data for the numeric rows.
    pub fn xy(&self, x: &str, y: &str) -> String {
        let ix = self.columns.iter().position(|c| *c == x).expect("x column");
        let iy = self.columns.iter().position(|c| *c == y).expect("y column");
        let mut out = String::new();
        for r in &self.rows {
            if let (Some(a), Some(b)) = (r[ix].as_f64(), r[iy].as_f64()) {
                let _ = writeln!(out, "{a:.16e} {b:.16e}");
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub table: Table,
    pub summary: Value,
    pub pass: bool,
    /// (x column, y column) pairs written as xy files.
    pub plots: Vec<(&'static str, &'static str)>,
}

/// Run the configured experiment without touching the filesystem.
pub fn execute(cfg: &ResolvedConfig) -> Result<ExperimentOutput, CliError> {
    let fiber = cfg.fiber_spectrum()?;
    let geom = cfg.geometry()?;
    match cfg.experiment {
        Experiment::Bfk => run_bfk(cfg, &geom, &fiber),
        Experiment::TheoremMain => run_theorem(cfg, &geom, &fiber, false),
        Experiment::TheoremDn => run_theorem(cfg, &geom, &fiber, true),
        Experiment::Svalues => run_svalues(cfg, &geom, &fiber),
        Experiment::DnAsymptotics => run_dn_asymptotics(cfg, &geom, &fiber),
        Experiment::HeatCancellation => run_heat_cancellation(cfg, &geom, &fiber),
        Experiment::TracePerp => run_trace_perp(cfg, &geom, &fiber),
        Experiment::ModelIdentities => run_model_identities(cfg, &geom, &fiber),
        Experiment::Split => run_split(cfg, &geom, &fiber),
    }
}

fn checked_sweep(cfg: &ResolvedConfig, geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<SweepResult, CliError> {
    let s = sweep(geom, fiber, &cfg.r_grid).map_err(numeric("sweep"))?;
    if let Some((r, msg)) = s.failures.first() {
        return Err(CliError::Numeric {
            context: format!("sweep row R = {r}"),
            source: crate::Error::Quadrature(msg.clone()),
        });
    }
    Ok(s)
}

fn run_bfk(cfg: &ResolvedConfig, geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<ExperimentOutput, CliError> {
    let s = checked_sweep(cfg, geom, fiber)?;
    let check = verify_bfk_corollary(&s, cfg.tolerance).map_err(numeric("bfk"))?;
    let mut table = Table::new(&[
        "r", "log_det_m", "log_det_m1", "log_det_m2", "log_det_r", "bfk_ratio", "relative_deviation",
    ]);
    for (row, (_, ratio, dev)) in s.rows.iter().zip(&check.rows) {
        table.push(row![row.r, row.log_det_m, row.log_det_m1, row.log_det_m2, row.log_det_r, *ratio, *dev]);
    }
    Ok(ExperimentOutput {
        table,
        summary: json!({
            "predicted_constant": check.predicted,
            "worst_relative_deviation": check.worst(),
            "spread": check.spread(),
            "h_y": s.h_y,
            "zeta_y_at_zero": s.zeta_y_at_zero,
        }),
        pass: check.pass,
        plots: vec![("r", "bfk_ratio")],
    })
}

fn limit_summary(check: &LimitCheck, band: [f64; 2]) -> Value {
    json!({
        "predicted_limit": check.predicted,
        "extrapolated_limit": check.fit.limit,
        "fit_error": check.fit_error(),
        "fit_model": check.fit.model,
        "fit_coefficients": check.fit.coefficients,
        "fit_residual_norm": check.fit.residual_norm,
        "fit_uncertainty": check.fit.uncertainty,
        "direct_fit_limit": check.direct_fit_limit,
        "convergence_exponent": check.convergence_exponent,
        "exponent_band": band,
    })
}

fn run_theorem(
    cfg: &ResolvedConfig,
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
    dn: bool,
) -> Result<ExperimentOutput, CliError> {
    let s = checked_sweep(cfg, geom, fiber)?;
    let check = if dn {
        verify_theorem_dn(&s, cfg.tolerance)
    } else {
        verify_theorem_main(&s, cfg.tolerance)
    }
    .map_err(numeric("limit fit"))?;
    let p = predictions(geom, fiber).map_err(numeric("predictions"))?;
    let mut table = Table::new(&["r", "scaled_value", "fitted", "relative_deviation"]);
    for (pt, (_, dev)) in check.fit.points.iter().zip(&check.pointwise) {
        table.push(row![pt.r, pt.value, pt.fitted, *dev]);
    }
    let [lo, hi] = cfg.exponent_band;
    let exponent_ok = (lo..=hi).contains(&check.convergence_exponent);
    let mut summary = limit_summary(&check, cfg.exponent_band);
    summary["exponent_in_band"] = json!(exponent_ok);
    summary["triangle_gap"] = json!(p.triangle_gap());
    summary["predictions"] = serde_json::to_value(p).expect("serializable");
    Ok(ExperimentOutput {
        table,
        summary,
        pass: check.pass && exponent_ok,
        plots: vec![("r", "scaled_value"), ("r", "relative_deviation")],
    })
}

fn operator_name(op: SmallOperator) -> &'static str {
    match op {
        SmallOperator::Closed => "closed",
        SmallOperator::Piece(Piece::One) => "piece1",
        SmallOperator::Piece(Piece::Two) => "piece2",
    }
}

fn run_svalues(cfg: &ResolvedConfig, geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<ExperimentOutput, CliError> {
    let ops = [
        SmallOperator::Piece(Piece::One),
        SmallOperator::Piece(Piece::Two),
        SmallOperator::Closed,
    ];
    let mut table = Table::new(&[
        "operator", "r", "exact_count", "model_count", "worst_residual", "flagged", "bijective", "boundary_shift",
    ]);
    let mut per_op = serde_json::Map::new();
    let mut pass = true;
    let (lo, hi) = (2.0 - cfg.tolerance, 2.0 + cfg.tolerance);
    for op in ops {
        let phases = op.model_phases(geom, fiber).map_err(numeric("model phases"))?;
        let mut reports: Vec<SValueReport> = Vec::new();
        for &r in &cfg.r_grid {
            let g = geom.with_r(r).map_err(numeric(format!("R = {r}")))?;
            let exact = svalues_exact(op, &g, fiber, cfg.kappa).map_err(numeric(format!("R = {r}")))?;
            reports.push(svalue_match(&exact, &phases, op.scale(), r, cfg.kappa));
        }
        // ĉ from the largest radius
        let last = reports.last().expect("non-empty grid");
        let c_hat = last.worst_residual() / last.r.powf(1.0 - 2.0 * cfg.kappa);
        for rep in &reports {
            table.push(row![
                operator_name(op),
                rep.r,
                rep.pairs.len(),
                rep.model_count,
                rep.worst_residual(),
                rep.flagged(c_hat).len(),
                rep.bijective,
                rep.boundary_shift_used,
            ]);
            pass &= rep.bijective;
        }
        let rates = residual_rate(&reports);
        pass &= !rates.is_empty() && rates.iter().all(|s| (lo..=hi).contains(&s.ratio));
        per_op.insert(
            operator_name(op).into(),
            json!({ "c_hat": c_hat, "rates": rates, "model_phases": phases }),
        );
    }
    Ok(ExperimentOutput {
        table,
        summary: json!({ "kappa": cfg.kappa, "rate_band": [lo, hi], "operators": per_op }),
        pass,
        plots: vec![("r", "worst_residual")],
    })
}

fn run_dn_asymptotics(
    cfg: &ResolvedConfig,
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
) -> Result<ExperimentOutput, CliError> {
    let mut table = Table::new(&[
        "r", "piece", "mode", "alpha", "on_minus", "exact", "model", "relative_gap", "on_plus",
    ]);
    let mut worst_gap: f64 = 0.0;
    let mut worst_plus: f64 = 0.0;
    for &r in &cfg.r_grid {
        let g = geom.with_r(r).map_err(numeric(format!("R = {r}")))?;
        let rows = dn_zero_mode_asymptotics(&g, fiber).map_err(numeric(format!("R = {r}")))?;
        let lengths = g.lengths();
        for row in rows {
            let exact = 2.0 / lengths[row.piece - 1];
            let gap = ((row.on_minus - row.model).abs() / row.model)
                .max((row.on_minus - exact).abs() / exact);
            worst_gap = worst_gap.max(gap);
            worst_plus = worst_plus.max(row.on_plus.abs());
            table.push(row![r, row.piece, row.mode, row.alpha, row.on_minus, exact, row.model, gap, row.on_plus]);
        }
    }
    Ok(ExperimentOutput {
        table,
        summary: json!({ "worst_relative_gap": worst_gap, "worst_plus_direction": worst_plus }),
        pass: worst_gap <= cfg.tolerance && worst_plus <= cfg.tolerance,
        plots: vec![("r", "on_minus")],
    })
}

fn run_heat_cancellation(
    cfg: &ResolvedConfig,
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
) -> Result<ExperimentOutput, CliError> {
    let fit_r = *cfg.r_grid.last().expect("non-empty grid");
    let rep = verify_lemma_cancellation(geom, fiber, &cfg.r_grid, fit_r, cfg.min_decay)
        .map_err(numeric("heat cancellation"))?;
    let log_c1 = rep.c1.ln();
    let mut table = Table::new(&[
        "r", "t", "r2_over_t", "relative_trace", "half_fiber_trace", "log_abs_deviation", "log_bound",
    ]);
    for p in &rep.points {
        table.push(row![p.r, p.t, p.x, p.value, p.half_fiber_trace, p.log_abs_deviation, log_c1 - rep.c2 * p.x]);
    }
    // tolerance is the accepted factor over the fitted envelope
    let factor_ok = rep
        .validation
        .iter()
        .all(|v| v.2 <= cfg.tolerance.max(1.0).ln());
    Ok(ExperimentOutput {
        table,
        summary: json!({
            "fit_r": fit_r,
            "c1": rep.c1,
            "c2": rep.c2,
            "min_decay": cfg.min_decay,
            "times": cfg.r_grid.iter().map(|&r| cancellation_times(r)).collect::<Vec<_>>(),
            "worst_log_margin": rep.validation.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max),
        }),
        pass: rep.c2 >= cfg.min_decay && factor_ok,
        plots: vec![("r2_over_t", "log_abs_deviation")],
    })
}

fn run_trace_perp(cfg: &ResolvedConfig, geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<ExperimentOutput, CliError> {
    let mu_min = fiber
        .mu_min()
        .ok_or_else(|| CliError::config("fiber", "needs a nonzero mode"))?;
    let mut table = Table::new(&["r", "trace_perp", "log_abs"]);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut at_check = None;
    for &r in &cfg.r_grid {
        let g = geom.with_r(r).map_err(numeric(format!("R = {r}")))?;
        let v = trace_perp_inverse_diff(&g, fiber).map_err(numeric(format!("R = {r}")))?;
        table.push(row![r, v, v.abs().ln()]);
        xs.push(r);
        ys.push(v.abs().ln());
        if r == cfg.value_bound[0] {
            at_check = Some(v.abs());
        }
    }
    let (slope, _) = linear_fit(&xs, &ys).map_err(numeric("slope fit"))?;
    let predicted = -4.0 * mu_min;
    let rel = (slope / predicted - 1.0).abs();
    let bound_ok = at_check.is_none_or(|v| v <= cfg.value_bound[1]);
    Ok(ExperimentOutput {
        table,
        summary: json!({
            "fitted_slope": slope,
            "predicted_slope": predicted,
            "relative_slope_error": rel,
            "value_bound": cfg.value_bound,
            "value_at_bound_radius": at_check,
        }),
        pass: rel <= cfg.tolerance && bound_ok,
        plots: vec![("r", "log_abs")],
    })
}

/// Exact identities are held to this absolute gap.
const EXACT_IDENTITY_TOL: f64 = 1e-12;

fn run_model_identities(
    cfg: &ResolvedConfig,
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
) -> Result<ExperimentOutput, CliError> {
    let mut table = Table::new(&["kind", "parameter", "lhs", "rhs", "gap"]);
    let mut pass = true;
    for &alpha in &cfg.alphas {
        let formula = model_logdet(&[alpha]).map_err(numeric(format!("alpha = {alpha}")))?;
        let numeric_ld = model_logdet_numeric(&[alpha])
            .map_err(numeric(format!("alpha = {alpha}")))?
            .log_det;
        let (d_num, d_formula) = (numeric_ld.exp(), formula.exp());
        let gap = (d_num - d_formula).abs();
        pass &= gap <= cfg.tolerance;
        table.push(row!["model_det", alpha, d_num, d_formula, gap]);
    }
    let ids = model_identities(geom, fiber).map_err(numeric("model identities"))?;
    let c12_gap = (ids.c12_formula - ids.c12_identity_rhs).abs();
    let cbar_gap = (ids.cbar_formula - ids.cbar_identity_rhs).abs();
    table.push(row!["log_det_quarter_c12", ids.h_y, ids.c12_formula, ids.c12_identity_rhs, c12_gap]);
    table.push(row!["log_det_star_cbar", ids.h_y, ids.cbar_formula, ids.cbar_identity_rhs, cbar_gap]);
    pass &= c12_gap <= EXACT_IDENTITY_TOL && cbar_gap <= EXACT_IDENTITY_TOL;
    pass &= ids.max_numeric_gap() <= cfg.tolerance;
    for &r in &cfg.r_grid {
        let g = geom.with_r(r).map_err(numeric(format!("R = {r}")))?;
        let d = det_l_identity(&g, fiber).map_err(numeric(format!("R = {r}")))?;
        let gap = d.relative_gap();
        pass &= gap <= EXACT_IDENTITY_TOL;
        table.push(row!["det_l", r, d.det_l, d.rhs, gap]);
    }
    Ok(ExperimentOutput {
        table,
        summary: json!({
            "identities": ids,
            "max_identity_gap": ids.max_identity_gap(),
            "max_numeric_gap": ids.max_numeric_gap(),
            "exact_identity_tolerance": EXACT_IDENTITY_TOL,
        }),
        pass,
        plots: vec![],
    })
}

/// The closed-form and heat routes to ζ′(0) must agree to this.
const ROUTE_TOL: f64 = 1e-6;

fn run_split(cfg: &ResolvedConfig, geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<ExperimentOutput, CliError> {
    let mut table = Table::new(&[
        "r", "split_time", "small_time", "large_time", "small_corrected", "small_limit",
        "large_corrected", "large_limit", "heat_zeta_prime", "closed_zeta_prime",
        "asymptotic_zeta_prime", "asymptotic_gap",
    ]);
    let mut pass = true;
    let mut worst_route: f64 = 0.0;
    for &r in &cfg.r_grid {
        let g = geom.with_r(r).map_err(numeric(format!("R = {r}")))?;
        let s = verify_smalltime_largetime_split(&g, fiber, cfg.epsilon)
            .map_err(numeric(format!("R = {r}")))?;
        pass &= s.asymptotic_gap() <= cfg.tolerance && s.route_gap() <= ROUTE_TOL;
        worst_route = worst_route.max(s.route_gap());
        table.push(row![
            r, s.split_time, s.small_time, s.large_time, s.small_corrected, s.small_limit,
            s.large_corrected, s.large_limit, s.heat_zeta_prime(), s.closed_zeta_prime,
            s.asymptotic_zeta_prime, s.asymptotic_gap(),
        ]);
    }
    Ok(ExperimentOutput {
        table,
        summary: json!({ "epsilon": cfg.epsilon, "worst_route_gap": worst_route, "route_tolerance": ROUTE_TOL }),
        pass,
        plots: vec![("r", "asymptotic_gap")],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Execute a resolved config and write its artifacts.
pub fn run_resolved(cfg: &ResolvedConfig) -> Result<RunOutcome, CliError> {
    let out = execute(cfg)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let name = cfg.experiment.entry().name;
    let header = cfg.provenance_header();
    let mut files = Vec::new();

    let csv = dir.join(format!("{name}.csv"));
    write(&csv, &format!("{header}{}", out.table.to_csv()))?;
    files.push(csv);

    if cfg.xy {
        for (x, y) in &out.plots {
            let p = dir.join(format!("{name}_{y}_vs_{x}.xy"));
            write(&p, &format!("{header}{}", out.table.xy(x, y)))?;
            files.push(p);
        }
    }

    let summary = json!({
        "experiment": name,
        "entry_point": cfg.experiment.entry().entry_point,
        "pass": out.pass,
        "tolerance": cfg.tolerance,
        "results": out.summary,
        "provenance": { "version": VERSION, "config_sha256": cfg.sha256() },
        "config": cfg,
        "output_dir": cfg.output_dir,
    });
    let sp = dir.join("summary.json");
    write(&sp, &(serde_json::to_string_pretty(&summary).expect("serializable") + "\n"))?;
    files.push(sp);
    Ok(RunOutcome {
        pass: out.pass,
        files,
        summary,
    })
}

pub fn load_config(path: &Path, ov: &Overrides) -> Result<ResolvedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)?.resolve(ov)
}

/// Whole `run` subcommand; returns the process exit code.
pub fn run(path: &Path, ov: &Overrides) -> i32 {
    match load_config(path, ov).and_then(|c| run_resolved(&c)) {
        Ok(o) => {
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            println!("{}", if o.pass { "PASS" } else { "FAIL" });
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Reads the thread count from the environment; `None` leaves rayon's default.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::config(THREADS_ENV, format!("expected a positive integer, got {s:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BFK: &str = r#"{
        "experiment": "bfk",
        "fiber": {"eigenvalues": [[0, 1], [1, 1]]},
        "geometry": {"a1": 1, "a2": 2, "holonomy": [{"pi": 0.5}]}
    }"#;

    #[test]
    fn defaults_are_explicit() {
        let c = parse_config(BFK).unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(c.r_grid, vec![2.0, 4.0, 8.0, 16.0, 32.0]);
        assert_eq!(c.tolerance, 1e-9);
        let j = c.canonical_json();
        for key in ["r_grid", "tolerance", "kappa", "epsilon", "alphas", "xy"] {
            assert!(j.contains(key), "{key} missing from {j}");
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = BFK.replace("\"a1\"", "\"a3\": 1, \"a1\"");
        let err = parse_config(&bad).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("geometry"), "{err}");
    }

    #[test]
    fn negative_eigenvalue_names_the_field() {
        let bad = BFK.replace("[1, 1]]", "[-1, 1]]");
        let err = parse_config(&bad).unwrap().resolve(&Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("fiber.eigenvalues[1][0]"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let ov = Overrides {
            rmax: Some(8.0),
            tol: Some(1e-3),
            out: Some("elsewhere".into()),
        };
        let c = parse_config(BFK).unwrap().resolve(&ov).unwrap();
        assert_eq!(c.r_grid, vec![2.0, 4.0, 8.0]);
        assert_eq!(c.tolerance, 1e-3);
        assert_eq!(c.output_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn bfk_executes() {
        let c = parse_config(BFK).unwrap().resolve(&Overrides::default()).unwrap();
        let out = execute(&c).unwrap();
        assert!(out.pass);
        assert_eq!(out.summary["predicted_constant"], json!(0.0625));
        assert_eq!(out.table.rows.len(), 5);
    }

    #[test]
    fn float_cells_have_seventeen_digits() {
        assert_eq!(Cell::Num(0.1).render(), "1.0000000000000001e-1");
        assert_eq!(Cell::Num(1.0 / 16.0).render(), "6.2500000000000000e-2");
    }

    #[test]
    fn registry_is_complete() {
        assert_eq!(REGISTRY.len(), 9);
        let listing = list_experiments();
        for e in &REGISTRY {
            assert!(listing.contains(e.name) && listing.contains(e.entry_point));
        }
    }
}
