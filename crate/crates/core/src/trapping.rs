//! Solving the coherence-trapping condition for the coupling constant.
//!
//! Trapping requires the long-time Lamb shift to equal minus the transition
//! frequency. With `Delta(inf) = -4 l^2 W I` this is exactly quadratic in
//! the coupling: a solution exists iff the principal-value integral `I` is
//! positive, and then `l* = 1 / (2 sqrt(I))`. No iteration is involved; the
//! only numerics live in `I` itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{pv_integral, QuadratureConfig};
use crate::spectral::{BathSpec, ModelConfig};

/// Outcome of the trapping-condition solve at one parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrapResult {
    /// `I = P Int_0^inf dw J_eff / (w^2 - W^2)`.
    pub pv_integral: f64,
    /// Error bound on `pv_integral`.
    pub error_estimate: f64,
    /// Whether a trapping coupling exists (`pv_integral > 0`).
    pub feasible: bool,
    /// Set when `|I|` is within ten error bounds of zero: the feasibility
    /// branch should not be trusted. Near this threshold the solved coupling
    /// diverges, which is how feasibility is lost as temperature grows.
    pub indeterminate: bool,
    /// `1 / (2 sqrt(I))`, present iff feasible.
    pub lambda_star: Option<f64>,
    /// First-order error propagated onto `lambda_star`.
    pub lambda_error: Option<f64>,
}

/// Solve the trapping condition for the coupling constant.
pub fn solve_lambda(
    bath: &BathSpec,
    model_omega: f64,
    q: &QuadratureConfig,
) -> Result<TrapResult> {
    // The principal-value integral does not involve the coupling.
    let probe = ModelConfig::with_omega(model_omega, 0.0)?;
    let pv = pv_integral(&probe, bath, q)?;
    let feasible = pv.value > 0.0;
    let indeterminate = pv.value.abs() <= 10.0 * pv.error_estimate;
    let (lambda_star, lambda_error) = if feasible {
        let l = 1.0 / (2.0 * pv.value.sqrt());
        // dl = l * dI / (2 I)
        (Some(l), Some(l * pv.error_estimate / (2.0 * pv.value)))
    } else {
        (None, None)
    };
    Ok(TrapResult {
        pv_integral: pv.value,
        error_estimate: pv.error_estimate,
        feasible,
        indeterminate,
        lambda_star,
        lambda_error,
    })
}

/// One temperature sample of a coupling-versus-temperature curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurvePoint {
    pub temperature: f64,
    /// The solve outcome; quadrature failures are carried per point rather
    /// than aborting the rest of the curve.
    pub result: std::result::Result<TrapResult, String>,
}

impl CurvePoint {
    pub fn trap(&self) -> Option<&TrapResult> {
        self.result.as_ref().ok()
    }
}

/// Solve the trapping condition across a sorted list of temperatures,
/// sharing the spectral parameters of `bath_template`.
pub fn lambda_curve(
    bath_template: &BathSpec,
    temperatures: &[f64],
    model_omega: f64,
    q: &QuadratureConfig,
) -> Result<Vec<CurvePoint>> {
    if temperatures.is_empty() {
        return Err(Error::contract("lambda_curve needs at least one temperature"));
    }
    if temperatures.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::contract("lambda_curve temperatures must be positive"));
    }
    if temperatures.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::contract("lambda_curve temperatures must be strictly increasing"));
    }

    use rayon::prelude::*;
    Ok(temperatures
        .par_iter()
        .map(|&temperature| {
            let result = BathSpec::new(
                bath_template.gamma,
                bath_template.omega0,
                temperature,
                bath_template.kind,
            )
            .and_then(|bath| solve_lambda(&bath, model_omega, q))
            .map_err(|e| e.to_string());
            CurvePoint { temperature, result }
        })
        .collect())
}

/// Temperature of the interior maximum of `l*(T)`, if one exists.
///
/// Requires at least three feasible points; returns `None` when the maximal
/// coupling sits at either end of the feasible range.
pub fn nonmonotonic_turning_point(curve: &[CurvePoint]) -> Result<Option<f64>> {
    let feasible: Vec<(f64, f64)> = curve
        .iter()
        .filter_map(|p| {
            p.trap()
                .and_then(|t| t.lambda_star.map(|l| (p.temperature, l)))
        })
        .collect();
    if feasible.len() < 3 {
        return Err(Error::contract(format!(
            "turning-point search needs >= 3 feasible points, got {}",
            feasible.len()
        )));
    }
    let (idx, _) = feasible
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    if idx == 0 || idx == feasible.len() - 1 {
        return Ok(None);
    }
    Ok(Some(feasible[idx].0))
}
