//! Batch drivers for the data products and their file formats.
//!
//! Four products exist: coefficient series, trajectories, the initial-state
//! map of the steady coherence, and coupling-versus-temperature curves. Each
//! writes to CSV (fixed column order, header row, no comments) or JSON (a
//! `{schema_version, product, metadata, data}` envelope). Floats are
//! rendered with nine significant digits through a single formatter, so
//! identical inputs produce byte-identical files; absent values are an empty
//! CSV field or a JSON `null`, never zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::dynamics::{build_coefficient_table, evolve, BlochXY, CoefficientFlavor, CoefficientTable, Trajectory};
use crate::error::{Error, Result};
use crate::kernels::QuadratureConfig;
use crate::spectral::{BathSpec, ModelConfig, SpectrumKind};
use crate::trapping::CurvePoint;

/// Deterministic (sorted) key-value metadata attached to every product.
pub type Metadata = BTreeMap<String, String>;

/// Solver settings shared by the batch drivers.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub ode_tol: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { ode_tol: 1e-10, quadrature: QuadratureConfig::default() }
    }
}

/// The default preset of trajectory initial states.
pub const DEFAULT_INITIAL_STATES: [(f64, f64); 3] = [(0.8, 0.4), (0.6, 0.4), (0.8, 0.2)];

/// Initial-state map of the steady coherence on a square grid over the
/// Bloch disk.
#[derive(Clone, Debug)]
pub struct GridScanResult {
    pub x0_axis: Vec<f64>,
    pub y0_axis: Vec<f64>,
    /// Row-major over `x0` (outer) then `y0` (inner). `None` marks grid
    /// points outside the unit disk or points whose integration failed.
    pub c_inf: Vec<Option<f64>>,
    pub metadata: Metadata,
}

impl GridScanResult {
    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> Option<f64> {
        self.c_inf[ix * self.y0_axis.len() + iy]
    }

    /// Largest asymmetry `|C(u) - C(-u)|` over grid pairs where both cells
    /// are defined.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.x0_axis.len();
        let m = self.y0_axis.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..m {
                if let (Some(a), Some(b)) = (self.at(i, j), self.at(n - 1 - i, m - 1 - j)) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

/// Render a float with nine significant digits; the one formatter every
/// writer uses.
pub fn format_float(v: f64) -> String {
    format!("{v:.8e}")
}

/// Base metadata block: model, bath, and solver settings plus the crate
/// version.
pub fn run_metadata(
    model: &ModelConfig,
    bath: &BathSpec,
    q: &QuadratureConfig,
    ode_tol: Option<f64>,
) -> Metadata {
    let mut m = Metadata::new();
    m.insert("code.version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert("model.omega".into(), format_float(model.omega));
    m.insert("model.lambda".into(), format_float(model.lambda));
    m.insert("bath.gamma".into(), format_float(bath.gamma));
    m.insert("bath.omega0".into(), format_float(bath.omega0));
    m.insert("bath.temperature".into(), format_float(bath.temperature));
    m.insert(
        "bath.kind".into(),
        match bath.kind {
            SpectrumKind::ExactCoth => "exact-coth".into(),
            SpectrumKind::HighTemperatureLimit => "high-temperature-limit".into(),
        },
    );
    m.insert("quadrature.rel_tol".into(), format_float(q.rel_tol));
    m.insert("quadrature.abs_tol".into(), format_float(q.abs_tol));
    m.insert("quadrature.omega_max".into(), format_float(q.resolve_omega_max(bath)));
    m.insert("quadrature.max_subdivisions".into(), q.max_subdivisions.to_string());
    if let Some(tol) = ode_tol {
        m.insert("ode.tol".into(), format_float(tol));
    }
    m
}

/// Coefficient series over `[0, t_end]` (the dense tabulation grid).
pub fn coefficient_series(
    model: &ModelConfig,
    bath: &BathSpec,
    t_end: f64,
    q: &QuadratureConfig,
    flavor: CoefficientFlavor,
) -> Result<CoefficientTable> {
    build_coefficient_table(model, bath, t_end, q, flavor)
}

/// Trajectories from a list of initial states against one shared table.
pub fn trajectory_series(
    model: &ModelConfig,
    bath: &BathSpec,
    initials: &[BlochXY],
    t_end: f64,
    tol: &Tolerances,
    flavor: CoefficientFlavor,
) -> Result<Vec<Trajectory>> {
    let table = build_coefficient_table(model, bath, t_end, &tol.quadrature, flavor)?;
    initials
        .par_iter()
        .map(|&r0| evolve(r0, &table, t_end, tol.ode_tol))
        .collect()
}

/// Evolve every admissible point of an odd `grid_n x grid_n` grid over
/// `[-1, 1]^2` to its steady coherence.
///
/// The coefficient table is built once and shared; the expensive quadrature
/// does not depend on the initial state. Failed points are carried as
/// absent cells and listed in the metadata.
pub fn scan_initial_states(
    model: &ModelConfig,
    bath: &BathSpec,
    grid_n: usize,
    t_end: f64,
    tol: &Tolerances,
    flavor: CoefficientFlavor,
) -> Result<GridScanResult> {
    if grid_n < 3 || grid_n % 2 == 0 {
        return Err(Error::contract(format!(
            "grid_n must be odd and at least 3, got {grid_n}"
        )));
    }
    let axis: Vec<f64> = (0..grid_n)
        .map(|i| -1.0 + 2.0 * i as f64 / (grid_n - 1) as f64)
        .collect();
    let table = build_coefficient_table(model, bath, t_end, &tol.quadrature, flavor)?;

    let cells: Vec<(Option<f64>, Option<String>)> = (0..grid_n * grid_n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid_n, idx % grid_n);
            let (x0, y0) = (axis[i], axis[j]);
            if x0 * x0 + y0 * y0 > 1.0 + 1e-12 {
                return (None, None);
            }
            match evolve(BlochXY { x: x0, y: y0 }, &table, t_end, tol.ode_tol) {
                Ok(traj) => {
                    let c = match traj.steady {
                        Some(s) => (s.x_inf * s.x_inf + s.y_inf * s.y_inf).sqrt(),
                        None => *traj.coherence.last().unwrap(),
                    };
                    (Some(c), None)
                }
                Err(e) => (None, Some(format!("({x0}, {y0}): {e}"))),
            }
        })
        .collect();

    let c_inf: Vec<Option<f64>> = cells.iter().map(|c| c.0).collect();
    let failures: Vec<String> = cells.into_iter().filter_map(|c| c.1).collect();

    let mut metadata = run_metadata(model, bath, &tol.quadrature, Some(tol.ode_tol));
    metadata.insert("scan.grid_n".into(), grid_n.to_string());
    metadata.insert("scan.t_end".into(), format_float(t_end));
    metadata.insert("scan.failures".into(), failures.len().to_string());
    if !failures.is_empty() {
        metadata.insert("scan.failure_list".into(), failures.join("; "));
    }

    let mut result = GridScanResult { x0_axis: axis.clone(), y0_axis: axis, c_inf, metadata };
    let asym = result.max_asymmetry();
    result
        .metadata
        .insert("scan.max_asymmetry".into(), format_float(asym));
    Ok(result)
}

/// Output format of the data products.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A product ready to be written.
pub enum SweepData<'a> {
    Coefficients { table: &'a CoefficientTable, metadata: &'a Metadata },
    Trajectory { trajectory: &'a Trajectory, metadata: &'a Metadata },
    Grid(&'a GridScanResult),
    Curve { points: &'a [CurvePoint], metadata: &'a Metadata },
}

/// Schema version stamped into every JSON envelope.
pub const SCHEMA_VERSION: u32 = 1;

/// Flat row form of a curve point, as serialized.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct CurveRow {
    pub temperature: f64,
    pub lambda: Option<f64>,
    /// `None` when the point failed to evaluate.
    pub feasible: Option<bool>,
    pub pv_integral: Option<f64>,
    pub error: Option<f64>,
}

impl From<&CurvePoint> for CurveRow {
    fn from(p: &CurvePoint) -> Self {
        match p.trap() {
            Some(t) => CurveRow {
                temperature: p.temperature,
                lambda: t.lambda_star,
                feasible: Some(t.feasible),
                pv_integral: Some(t.pv_integral),
                error: Some(t.error_estimate),
            },
            None => CurveRow {
                temperature: p.temperature,
                lambda: None,
                feasible: None,
                pv_integral: None,
                error: None,
            },
        }
    }
}

/// Owned column data of a JSON document; the canonical serialized layout.
#[derive(Clone, Debug, PartialEq)]
pub enum DataColumns {
    Coefficients { t: Vec<f64>, delta: Vec<f64>, gamma_rate: Vec<f64> },
    Trajectory { t: Vec<f64>, x: Vec<f64>, y: Vec<f64>, coherence: Vec<f64> },
    Grid { x0_axis: Vec<f64>, y0_axis: Vec<f64>, c_inf: Vec<Option<f64>> },
    Curve { points: Vec<CurveRow> },
}

/// A parsed or freshly built JSON product document.
#[derive(Clone, Debug, PartialEq)]
pub struct JsonDocument {
    pub schema_version: u32,
    pub metadata: Metadata,
    pub data: DataColumns,
}

impl<'a> SweepData<'a> {
    fn product(&self) -> &'static str {
        match self {
            SweepData::Coefficients { .. } => "coefficients",
            SweepData::Trajectory { .. } => "trajectory",
            SweepData::Grid(_) => "grid",
            SweepData::Curve { .. } => "curve",
        }
    }

    fn metadata(&self) -> &Metadata {
        match self {
            SweepData::Coefficients { metadata, .. } => metadata,
            SweepData::Trajectory { metadata, .. } => metadata,
            SweepData::Grid(g) => &g.metadata,
            SweepData::Curve { metadata, .. } => metadata,
        }
    }

    fn to_columns(&self) -> DataColumns {
        match self {
            SweepData::Coefficients { table, .. } => DataColumns::Coefficients {
                t: table.times().to_vec(),
                delta: table.delta_samples().to_vec(),
                gamma_rate: table.gamma_samples().to_vec(),
            },
            SweepData::Trajectory { trajectory, .. } => DataColumns::Trajectory {
                t: trajectory.times.clone(),
                x: trajectory.states.iter().map(|s| s.x).collect(),
                y: trajectory.states.iter().map(|s| s.y).collect(),
                coherence: trajectory.coherence.clone(),
            },
            SweepData::Grid(g) => DataColumns::Grid {
                x0_axis: g.x0_axis.clone(),
                y0_axis: g.y0_axis.clone(),
                c_inf: g.c_inf.clone(),
            },
            SweepData::Curve { points, .. } => DataColumns::Curve {
                points: points.iter().map(CurveRow::from).collect(),
            },
        }
    }
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn render_csv(data: &SweepData) -> String {
    let mut out = String::new();
    match data {
        SweepData::Coefficients { table, .. } => {
            out.push_str("t,delta,gamma_rate\n");
            for i in 0..table.times().len() {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    format_float(table.times()[i]),
                    format_float(table.delta_samples()[i]),
                    format_float(table.gamma_samples()[i]),
                );
            }
        }
        SweepData::Trajectory { trajectory, .. } => {
            out.push_str("t,x,y,coherence\n");
            for i in 0..trajectory.times.len() {
                let s = trajectory.states[i];
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    format_float(trajectory.times[i]),
                    format_float(s.x),
                    format_float(s.y),
                    format_float(trajectory.coherence[i]),
                );
            }
        }
        SweepData::Grid(g) => {
            out.push_str("x0,y0,c_inf\n");
            for (i, &x0) in g.x0_axis.iter().enumerate() {
                for (j, &y0) in g.y0_axis.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{}",
                        format_float(x0),
                        format_float(y0),
                        opt_float(g.at(i, j)),
                    );
                }
            }
        }
        SweepData::Curve { points, .. } => {
            out.push_str("T,lambda,feasible,pv_integral,error\n");
            for p in points.iter() {
                let row = CurveRow::from(p);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    format_float(row.temperature),
                    opt_float(row.lambda),
                    row.feasible.map(|b| b.to_string()).unwrap_or_default(),
                    opt_float(row.pv_integral),
                    opt_float(row.error),
                );
            }
        }
    }
    out
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn push_float_array(out: &mut String, name: &str, values: &[f64]) {
    let _ = write!(out, "    \"{name}\": [");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format_float(*v));
    }
    out.push(']');
}

/// Render the canonical JSON form; `read_json` followed by this function
/// reproduces a written file byte for byte.
pub fn render_json(product: &str, metadata: &Metadata, data: &DataColumns) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"schema_version\": {SCHEMA_VERSION},");
    let _ = writeln!(out, "  \"product\": \"{}\",", json_escape(product));
    out.push_str("  \"metadata\": {");
    for (i, (k, v)) in metadata.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "\n    \"{}\": \"{}\"", json_escape(k), json_escape(v));
    }
    if metadata.is_empty() {
        out.push_str("},\n");
    } else {
        out.push_str("\n  },\n");
    }
    out.push_str("  \"data\": {\n");
    match data {
        DataColumns::Coefficients { t, delta, gamma_rate } => {
            push_float_array(&mut out, "t", t);
            out.push_str(",\n");
            push_float_array(&mut out, "delta", delta);
            out.push_str(",\n");
            push_float_array(&mut out, "gamma_rate", gamma_rate);
            out.push('\n');
        }
        DataColumns::Trajectory { t, x, y, coherence } => {
            push_float_array(&mut out, "t", t);
            out.push_str(",\n");
            push_float_array(&mut out, "x", x);
            out.push_str(",\n");
            push_float_array(&mut out, "y", y);
            out.push_str(",\n");
            push_float_array(&mut out, "coherence", coherence);
            out.push('\n');
        }
        DataColumns::Grid { x0_axis, y0_axis, c_inf } => {
            push_float_array(&mut out, "x0_axis", x0_axis);
            out.push_str(",\n");
            push_float_array(&mut out, "y0_axis", y0_axis);
            out.push_str(",\n");
            out.push_str("    \"c_inf\": [");
            for (i, v) in c_inf.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                match v {
                    Some(v) => out.push_str(&format_float(*v)),
                    None => out.push_str("null"),
                }
            }
            out.push_str("]\n");
        }
        DataColumns::Curve { points } => {
            out.push_str("    \"points\": [");
            for (i, p) in points.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(
                    out,
                    "\n      {{\"temperature\": {}, \"lambda\": {}, \"feasible\": {}, \"pv_integral\": {}, \"error\": {}}}",
                    format_float(p.temperature),
                    p.lambda.map(format_float).unwrap_or_else(|| "null".into()),
                    p.feasible.map(|b| b.to_string()).unwrap_or_else(|| "null".into()),
                    p.pv_integral.map(format_float).unwrap_or_else(|| "null".into()),
                    p.error.map(format_float).unwrap_or_else(|| "null".into()),
                );
            }
            if points.is_empty() {
                out.push_str("]\n");
            } else {
                out.push_str("\n    ]\n");
            }
        }
    }
    out.push_str("  }\n}\n");
    out
}

/// Write a product to `path` in the requested format.
pub fn write_results(data: &SweepData, path: &Path, format: OutputFormat) -> Result<()> {
    let contents = match format {
        OutputFormat::Csv => render_csv(data),
        OutputFormat::Json => render_json(data.product(), data.metadata(), &data.to_columns()),
    };
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

#[derive(Deserialize)]
struct RawEnvelope {
    schema_version: u32,
    product: String,
    metadata: Metadata,
    data: serde_json::Value,
}

/// Read a JSON product file back into its canonical document form.
pub fn read_json(path: &Path) -> Result<(String, JsonDocument)> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let raw: RawEnvelope = serde_json::from_str(&text)
        .map_err(|e| Error::contract(format!("{}: invalid product JSON: {e}", path.display())))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::contract(format!(
            "{}: unsupported schema version {}",
            path.display(),
            raw.schema_version
        )));
    }

    #[derive(Deserialize)]
    struct RawCoefficients {
        t: Vec<f64>,
        delta: Vec<f64>,
        gamma_rate: Vec<f64>,
    }
    #[derive(Deserialize)]
    struct RawTrajectory {
        t: Vec<f64>,
        x: Vec<f64>,
        y: Vec<f64>,
        coherence: Vec<f64>,
    }
    #[derive(Deserialize)]
    struct RawGrid {
        x0_axis: Vec<f64>,
        y0_axis: Vec<f64>,
        c_inf: Vec<Option<f64>>,
    }
    #[derive(Deserialize)]
    struct RawCurve {
        points: Vec<CurveRow>,
    }

    let bad = |e: serde_json::Error| {
        Error::contract(format!("{}: malformed data section: {e}", path.display()))
    };
    let data = match raw.product.as_str() {
        "coefficients" => {
            let d: RawCoefficients = serde_json::from_value(raw.data).map_err(bad)?;
            DataColumns::Coefficients { t: d.t, delta: d.delta, gamma_rate: d.gamma_rate }
        }
        "trajectory" => {
            let d: RawTrajectory = serde_json::from_value(raw.data).map_err(bad)?;
            DataColumns::Trajectory { t: d.t, x: d.x, y: d.y, coherence: d.coherence }
        }
        "grid" => {
            let d: RawGrid = serde_json::from_value(raw.data).map_err(bad)?;
            DataColumns::Grid { x0_axis: d.x0_axis, y0_axis: d.y0_axis, c_inf: d.c_inf }
        }
        "curve" => {
            let d: RawCurve = serde_json::from_value(raw.data).map_err(bad)?;
            DataColumns::Curve { points: d.points }
        }
        other => {
            return Err(Error::contract(format!(
                "{}: unknown product kind {other:?}",
                path.display()
            )))
        }
    };
    Ok((
        raw.product,
        JsonDocument { schema_version: raw.schema_version, metadata: raw.metadata, data },
    ))
}
