//! Run configuration: defaults, config file, and flag overrides.
//!
//! The config file is a flat `key = value` format with dotted section keys
//! (`bath.gamma = 5.0`); `#` starts a comment. Precedence is
//! flags > file > defaults, and the effective configuration is echoed into
//! the output metadata. Validation is aggregated: every problem is reported
//! in one error instead of failing on the first.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cohtrap_core::dynamics::CoefficientFlavor;
use cohtrap_core::sweeps::{format_float, Metadata, OutputFormat, DEFAULT_INITIAL_STATES};
use cohtrap_core::{BathSpec, ModelConfig, QuadratureConfig, SpectrumKind};

/// Coupling constant: fixed by the user or solved from the trapping
/// condition before the run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaSetting {
    Fixed(f64),
    Auto,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub gamma: f64,
    pub omega0: f64,
    pub temperature: f64,
    pub kind: SpectrumKind,
    pub omega: f64,
    pub lambda: LambdaSetting,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub omega_max: Option<f64>,
    pub max_subdivisions: usize,
    pub ode_tol: f64,
    /// Integration horizon; `None` resolves to 50 asymptotic relaxation
    /// times once the coupling is known.
    pub t_end: Option<f64>,
    /// Two-stage anchor; `None` resolves to ten bath memory times.
    pub t0: Option<f64>,
    pub grid_n: usize,
    pub rwa: bool,
    pub initials: Vec<(f64, f64)>,
    pub curve_t_min: f64,
    pub curve_t_max: f64,
    pub curve_points: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub workers: Option<usize>,
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma: 5.0,
            omega0: 10.0,
            temperature: 100.0,
            kind: SpectrumKind::ExactCoth,
            omega: 1.0,
            lambda: LambdaSetting::Auto,
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            omega_max: None,
            max_subdivisions: 2000,
            ode_tol: 1e-10,
            t_end: None,
            t0: None,
            grid_n: 41,
            rwa: false,
            initials: DEFAULT_INITIAL_STATES.to_vec(),
            curve_t_min: 0.01,
            curve_t_max: 100.0,
            curve_points: 41,
            out: None,
            format: OutputFormat::Csv,
            workers: None,
            strict: false,
        }
    }
}

impl RunConfig {
    pub fn flavor(&self) -> CoefficientFlavor {
        if self.rwa {
            CoefficientFlavor::Rwa
        } else {
            CoefficientFlavor::Full
        }
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            omega_max: self.omega_max,
            max_subdivisions: self.max_subdivisions,
        }
    }

    /// Validate and build the bath; problems are collected by the caller.
    pub fn bath(&self) -> Result<BathSpec, String> {
        BathSpec::new(self.gamma, self.omega0, self.temperature, self.kind)
            .map_err(|e| e.to_string())
    }

    pub fn model(&self, lambda: f64) -> Result<ModelConfig, String> {
        ModelConfig::with_omega(self.omega, lambda).map_err(|e| e.to_string())
    }

    /// Aggregate all validation problems into one report.
    pub fn validate(&self) -> Result<(), String> {
        let mut problems = Vec::new();
        if let Err(e) = self.bath() {
            problems.push(e);
        }
        if let LambdaSetting::Fixed(l) = self.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                problems.push(format!("model.lambda must be nonnegative, got {l}"));
            }
        }
        if !(self.omega > 0.0) {
            problems.push(format!("model.omega must be positive, got {}", self.omega));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            problems.push("quadrature tolerances must be positive".into());
        }
        if self.max_subdivisions < 10 {
            problems.push(format!(
                "quadrature.max_subdivisions must be at least 10, got {}",
                self.max_subdivisions
            ));
        }
        if let Some(w) = self.omega_max {
            if !(w > self.omega.max(self.omega0)) {
                problems.push(format!(
                    "quadrature.omega_max = {w} must exceed max(model.omega, bath.omega0)"
                ));
            }
        }
        if !(self.ode_tol > 0.0) {
            problems.push(format!("ode.tol must be positive, got {}", self.ode_tol));
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0) {
                problems.push(format!("run.t_end must be positive, got {t}"));
            }
        }
        if let Some(t0) = self.t0 {
            if !(t0 >= 0.0) {
                problems.push(format!("run.t0 must be nonnegative, got {t0}"));
            }
        }
        if self.grid_n < 3 || self.grid_n % 2 == 0 {
            problems.push(format!("run.grid_n must be odd and >= 3, got {}", self.grid_n));
        }
        for &(x, y) in &self.initials {
            if x * x + y * y > 1.0 + 1e-12 {
                problems.push(format!("initial state ({x}, {y}) outside the unit disk"));
            }
        }
        if self.initials.is_empty() {
            problems.push("run.initials must not be empty".into());
        }
        if !(self.curve_t_min > 0.0) || !(self.curve_t_max > self.curve_t_min) {
            problems.push(format!(
                "curve range [{}, {}] must be positive and increasing",
                self.curve_t_min, self.curve_t_max
            ));
        }
        if self.curve_points < 2 {
            problems.push(format!("curve.points must be at least 2, got {}", self.curve_points));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            let mut msg = format!("invalid configuration ({} problems):", problems.len());
            for p in &problems {
                let _ = write!(msg, "\n  - {p}");
            }
            Err(msg)
        }
    }

    /// Apply a parsed config file on top of the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut problems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected key = value", lineno + 1));
                continue;
            };
            if let Err(e) = self.apply_key(key.trim(), value.trim()) {
                problems.push(format!("line {}: {e}", lineno + 1));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(format!(
                "config {}: {}",
                path.display(),
                problems.join("; ")
            ))
        }
    }

    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn float(value: &str) -> Result<f64, String> {
            value.parse().map_err(|_| format!("not a number: {value:?}"))
        }
        fn count(value: &str) -> Result<usize, String> {
            value.parse().map_err(|_| format!("not a count: {value:?}"))
        }
        fn flag(value: &str) -> Result<bool, String> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(format!("not a boolean: {value:?}")),
            }
        }
        match key {
            "bath.gamma" => self.gamma = float(value)?,
            "bath.omega0" => self.omega0 = float(value)?,
            "bath.temperature" => self.temperature = float(value)?,
            "bath.kind" => {
                self.kind = parse_kind(value)?;
            }
            "model.omega" => self.omega = float(value)?,
            "model.lambda" => {
                self.lambda = if value == "auto" {
                    LambdaSetting::Auto
                } else {
                    LambdaSetting::Fixed(float(value)?)
                };
            }
            "quadrature.rel_tol" => self.rel_tol = float(value)?,
            "quadrature.abs_tol" => self.abs_tol = float(value)?,
            "quadrature.omega_max" => {
                self.omega_max = if value == "auto" { None } else { Some(float(value)?) };
            }
            "quadrature.max_subdivisions" => self.max_subdivisions = count(value)?,
            "ode.tol" => self.ode_tol = float(value)?,
            "run.t_end" => {
                self.t_end = if value == "auto" { None } else { Some(float(value)?) };
            }
            "run.t0" => {
                self.t0 = if value == "auto" { None } else { Some(float(value)?) };
            }
            "run.grid_n" => self.grid_n = count(value)?,
            "run.rwa" => self.rwa = flag(value)?,
            "run.initials" => self.initials = parse_initials(value)?,
            "run.workers" => self.workers = Some(count(value)?),
            "run.strict" => self.strict = flag(value)?,
            "curve.t_min" => self.curve_t_min = float(value)?,
            "curve.t_max" => self.curve_t_max = float(value)?,
            "curve.points" => self.curve_points = count(value)?,
            "output.path" => self.out = Some(PathBuf::from(value)),
            "output.format" => self.format = parse_format(value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Effective configuration as metadata entries (echoed into outputs).
    pub fn metadata(&self, lambda: f64, t_end: Option<f64>) -> Metadata {
        let mut m = Metadata::new();
        m.insert("code.version".into(), env!("CARGO_PKG_VERSION").into());
        m.insert("bath.gamma".into(), format_float(self.gamma));
        m.insert("bath.omega0".into(), format_float(self.omega0));
        m.insert("bath.temperature".into(), format_float(self.temperature));
        m.insert(
            "bath.kind".into(),
            match self.kind {
                SpectrumKind::ExactCoth => "exact-coth".into(),
                SpectrumKind::HighTemperatureLimit => "high-temperature-limit".into(),
            },
        );
        m.insert("model.omega".into(), format_float(self.omega));
        m.insert("model.lambda".into(), format_float(lambda));
        m.insert(
            "model.lambda_mode".into(),
            match self.lambda {
                LambdaSetting::Auto => "auto".into(),
                LambdaSetting::Fixed(_) => "fixed".into(),
            },
        );
        m.insert("quadrature.rel_tol".into(), format_float(self.rel_tol));
        m.insert("quadrature.abs_tol".into(), format_float(self.abs_tol));
        if let Some(w) = self.omega_max {
            m.insert("quadrature.omega_max".into(), format_float(w));
        } else {
            m.insert(
                "quadrature.omega_max".into(),
                format_float(self.omega0 + 40.0 * self.gamma),
            );
        }
        m.insert(
            "quadrature.max_subdivisions".into(),
            self.max_subdivisions.to_string(),
        );
        m.insert("ode.tol".into(), format_float(self.ode_tol));
        if let Some(t) = t_end {
            m.insert("run.t_end".into(), format_float(t));
        }
        m.insert("run.t0".into(), format_float(self.resolved_t0()));
        m.insert("run.rwa".into(), self.rwa.to_string());
        m.insert(
            "output.format".into(),
            match self.format {
                OutputFormat::Csv => "csv".into(),
                OutputFormat::Json => "json".into(),
            },
        );
        m
    }

    pub fn resolved_t0(&self) -> f64 {
        self.t0.unwrap_or(10.0 / self.gamma)
    }
}

pub fn parse_kind(value: &str) -> Result<SpectrumKind, String> {
    match value {
        "exact-coth" => Ok(SpectrumKind::ExactCoth),
        "high-temperature-limit" => Ok(SpectrumKind::HighTemperatureLimit),
        other => Err(format!(
            "unknown bath.kind {other:?} (expected exact-coth or high-temperature-limit)"
        )),
    }
}

pub fn parse_format(value: &str) -> Result<OutputFormat, String> {
    match value {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(format!("unknown output format {other:?} (expected csv or json)")),
    }
}

/// `x,y;x,y;...` pairs.
pub fn parse_initials(value: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for pair in value.split(';') {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let (x, y) = pair
            .split_once(',')
            .ok_or_else(|| format!("initial state {pair:?} must be x,y"))?;
        let x: f64 = x.trim().parse().map_err(|_| format!("bad x in {pair:?}"))?;
        let y: f64 = y.trim().parse().map_err(|_| format!("bad y in {pair:?}"))?;
        out.push((x, y));
    }
    if out.is_empty() {
        return Err("no initial states given".into());
    }
    Ok(out)
}

/// Log-spaced temperatures for the curve command.
pub fn log_spaced(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    let (a, b) = (t_min.ln(), t_max.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Key-value dump used to echo the effective config for CSV runs.
pub fn echo_metadata(meta: &BTreeMap<String, String>) -> String {
    let mut out = String::from("effective configuration:\n");
    for (k, v) in meta {
        let _ = writeln!(out, "  {k} = {v}");
    }
    out
}
