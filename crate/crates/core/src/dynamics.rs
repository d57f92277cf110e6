//! Transverse Bloch dynamics under the time-local master equation.
//!
//! The coherence vector `r = [x, y]` obeys `dr/dt = M(t) r` with
//!
//! ```text
//! M(t) = | 0            -W       |        (full interaction)
//!        | W + Delta(t) -Gamma(t)|
//! ```
//!
//! or, under the rotating-wave approximation,
//!
//! ```text
//! M(t) = | -Gamma/2        -(W + Delta/2) |
//!        | W + Delta/2     -Gamma/2       |
//! ```
//!
//! The coefficients are adaptive quadratures and therefore expensive; they
//! are tabulated once on a dense-then-sparse time grid and interpolated with
//! a not-a-knot cubic spline during integration.

mod ode;
mod spline;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    decay_rate, decay_rate_infinity, lamb_shift, rwa_coefficients, QuadratureConfig,
};
use crate::spectral::{BathSpec, ModelConfig};
use spline::CubicSpline;

/// Transverse Bloch vector; `x` and `y` are the real and imaginary parts of
/// the coherence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochXY {
    pub x: f64,
    pub y: f64,
}

impl BlochXY {
    /// Requires `x^2 + y^2 <= 1` (physical state with zero population
    /// imbalance).
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let n2 = x * x + y * y;
        if !n2.is_finite() || n2 > 1.0 + 1e-12 {
            return Err(Error::domain(format!(
                "Bloch vector ({x}, {y}) lies outside the unit disk"
            )));
        }
        Ok(BlochXY { x, y })
    }

    /// Coherence `C = sqrt(x^2 + y^2)`.
    #[inline]
    pub fn coherence(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }
}

/// Which pair of coefficients a table holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoefficientFlavor {
    /// Full interaction: counter-rotating terms included.
    Full,
    /// Rotating-wave approximation.
    Rwa,
}

/// Sampled, spline-interpolated coefficients on `[0, t_end]`.
#[derive(Clone, Debug)]
pub struct CoefficientTable {
    times: Vec<f64>,
    delta: Vec<f64>,
    gamma_rate: Vec<f64>,
    flavor: CoefficientFlavor,
    omega: f64,
    delta_spline: CubicSpline,
    gamma_spline: CubicSpline,
}

impl CoefficientTable {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn delta_samples(&self) -> &[f64] {
        &self.delta
    }

    pub fn gamma_samples(&self) -> &[f64] {
        &self.gamma_rate
    }

    pub fn flavor(&self) -> CoefficientFlavor {
        self.flavor
    }

    /// Transition frequency the table was built for.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Last tabulated time.
    pub fn coverage(&self) -> f64 {
        *self.times.last().expect("table is never empty")
    }

    /// Interpolated Lamb shift (or its RWA counterpart).
    #[inline]
    pub fn delta_at(&self, t: f64) -> f64 {
        self.delta_spline.eval(t)
    }

    /// Interpolated decoherence rate (or its RWA counterpart).
    #[inline]
    pub fn gamma_at(&self, t: f64) -> f64 {
        self.gamma_spline.eval(t)
    }

    /// Coefficient matrix of the Bloch equation at time `t`.
    #[inline]
    pub fn m_at(&self, t: f64) -> [[f64; 2]; 2] {
        let d = self.delta_at(t);
        let g = self.gamma_at(t);
        match self.flavor {
            CoefficientFlavor::Full => [[0.0, -self.omega], [self.omega + d, -g]],
            CoefficientFlavor::Rwa => {
                let shifted = self.omega + 0.5 * d;
                [[-0.5 * g, -shifted], [shifted, -0.5 * g]]
            }
        }
    }

    /// Discriminant `tr^2 - 4 det` of `M(t)`; for the full flavor this is
    /// `Gamma^2 - 4 W (W + Delta)`.
    pub fn discriminant_at(&self, t: f64) -> f64 {
        let m = self.m_at(t);
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        tr * tr - 4.0 * det
    }
}

/// Eigenvalue character of the coefficient matrix at a given time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Real eigenvalues: the components decay biexponentially.
    Biexponential,
    /// Complex eigenvalues: damped oscillation. `degenerate` marks an
    /// exactly vanishing discriminant.
    Oscillatory { degenerate: bool },
}

/// Tabulate the coefficients on `[0, t_end]`.
///
/// The grid spacing is `min(1/g, 2 pi / W) / 50` out to `20 / g` (where the
/// transient lives) and ten times coarser beyond, where only a slow residual
/// oscillation at the transition frequency remains.
pub fn build_coefficient_table(
    model: &ModelConfig,
    bath: &BathSpec,
    t_end: f64,
    q: &QuadratureConfig,
    flavor: CoefficientFlavor,
) -> Result<CoefficientTable> {
    if !(t_end > 0.0) {
        return Err(Error::contract(format!("table horizon must be positive, got {t_end}")));
    }
    let h = (1.0 / bath.gamma).min(std::f64::consts::TAU / model.omega) / 50.0;
    let t_dense = t_end.min(20.0 / bath.gamma);

    let n_dense = ((t_dense / h).ceil() as usize).max(7);
    let h_dense = t_dense / n_dense as f64;
    let mut times: Vec<f64> = (0..=n_dense).map(|i| i as f64 * h_dense).collect();
    if t_end > t_dense {
        let n_sparse = (((t_end - t_dense) / (10.0 * h)).ceil() as usize).max(1);
        let h_sparse = (t_end - t_dense) / n_sparse as f64;
        times.extend((1..=n_sparse).map(|j| t_dense + j as f64 * h_sparse));
    }
    let last = times.len() - 1;
    times[last] = t_end;

    let pairs: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| -> Result<(f64, f64)> {
            if t == 0.0 {
                return Ok((0.0, 0.0));
            }
            match flavor {
                CoefficientFlavor::Full => {
                    let d = lamb_shift(model, bath, t, q)?;
                    let g = decay_rate(model, bath, t, q)?;
                    Ok((d.value, g.value))
                }
                CoefficientFlavor::Rwa => {
                    let (d, g) = rwa_coefficients(model, bath, t, q)?;
                    Ok((d.value, g.value))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let delta: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let gamma_rate: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let delta_spline = CubicSpline::new(times.clone(), delta.clone());
    let gamma_spline = CubicSpline::new(times.clone(), gamma_rate.clone());
    Ok(CoefficientTable {
        times,
        delta,
        gamma_rate,
        flavor,
        omega: model.omega,
        delta_spline,
        gamma_spline,
    })
}

/// Steady-state record produced by the derivative-window detector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Time at which the window criterion was met.
    pub t_detect: f64,
    pub x_inf: f64,
    pub y_inf: f64,
}

/// Time series of the transverse Bloch vector.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlochXY>,
    /// `sqrt(x^2 + y^2)` per sample.
    pub coherence: Vec<f64>,
    pub steady: Option<SteadyState>,
}

impl Trajectory {
    /// Linear interpolation of the state at `t` (within the sampled range).
    pub fn state_at(&self, t: f64) -> Result<BlochXY> {
        let (t0, t1) = (self.times[0], *self.times.last().unwrap());
        if !(t >= t0 && t <= t1) {
            return Err(Error::contract(format!(
                "t = {t} outside the trajectory range [{t0}, {t1}]"
            )));
        }
        let i = self.times.partition_point(|&ti| ti <= t).clamp(1, self.times.len() - 1) - 1;
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let w = if tb > ta { (t - ta) / (tb - ta) } else { 0.0 };
        let (a, b) = (self.states[i], self.states[i + 1]);
        Ok(BlochXY { x: a.x + w * (b.x - a.x), y: a.y + w * (b.y - a.y) })
    }
}

/// Number of uniform output intervals recorded per trajectory.
const OUTPUT_INTERVALS: usize = 2000;
/// Derivative threshold (in units of the transition frequency) below which
/// the state counts as quiet for steady-state detection.
const STEADY_DERIV_TOL: f64 = 1e-8;
/// Quiet-window length in units of the asymptotic relaxation time.
const STEADY_WINDOW_RELAX_TIMES: f64 = 5.0;

/// Integrate the Bloch equation from `initial` to `t_end` against a
/// coefficient table.
///
/// A steady state is recorded once `max(|dx/dt|, |dy/dt|)` stays below
/// `1e-8 W` over a window of five asymptotic relaxation times (the window is
/// taken from the last tabulated decoherence rate; detection is skipped when
/// that rate vanishes, e.g. at zero coupling).
pub fn evolve(
    initial: BlochXY,
    table: &CoefficientTable,
    t_end: f64,
    ode_tol: f64,
) -> Result<Trajectory> {
    let n2 = initial.x * initial.x + initial.y * initial.y;
    if !n2.is_finite() || n2 > 1.0 + 1e-12 {
        return Err(Error::contract(format!(
            "initial state ({}, {}) violates x^2 + y^2 <= 1",
            initial.x, initial.y
        )));
    }
    if !(t_end >= 0.0) {
        return Err(Error::contract(format!("t_end must be nonnegative, got {t_end}")));
    }
    if t_end > table.coverage() * (1.0 + 1e-12) {
        return Err(Error::contract(format!(
            "t_end = {t_end} exceeds table coverage {}",
            table.coverage()
        )));
    }

    let outputs: Vec<f64> = if t_end == 0.0 {
        vec![0.0]
    } else {
        (0..=OUTPUT_INTERVALS)
            .map(|i| t_end * i as f64 / OUTPUT_INTERVALS as f64)
            .collect()
    };

    let rhs = |t: f64, y: &[f64; 2]| -> [f64; 2] {
        let m = table.m_at(t);
        [
            m[0][0] * y[0] + m[0][1] * y[1],
            m[1][0] * y[0] + m[1][1] * y[1],
        ]
    };

    let gamma_last = *table.gamma_rate.last().unwrap();
    let window = if gamma_last > 0.0 {
        Some(STEADY_WINDOW_RELAX_TIMES / gamma_last)
    } else {
        None
    };
    let deriv_tol = STEADY_DERIV_TOL * table.omega;

    let mut steady: Option<SteadyState> = None;
    let mut quiet_since: Option<f64> = None;
    let states_raw = ode::dopri5(rhs, 0.0, [initial.x, initial.y], &outputs, ode_tol, |t, y, dy| {
        if steady.is_some() {
            return;
        }
        let Some(window) = window else { return };
        if dy[0].abs().max(dy[1].abs()) < deriv_tol {
            let since = *quiet_since.get_or_insert(t);
            if t - since >= window {
                steady = Some(SteadyState { t_detect: t, x_inf: y[0], y_inf: y[1] });
            }
        } else {
            quiet_since = None;
        }
    })?;

    let states: Vec<BlochXY> = states_raw.iter().map(|y| BlochXY { x: y[0], y: y[1] }).collect();
    let coherence: Vec<f64> = states.iter().map(BlochXY::coherence).collect();
    Ok(Trajectory { times: outputs, states, coherence, steady })
}

/// Classify the eigenvalue regime of `M(t)`.
pub fn classify_regime(table: &CoefficientTable, t: f64) -> Result<Regime> {
    if !(t >= 0.0 && t <= table.coverage() * (1.0 + 1e-12)) {
        return Err(Error::contract(format!(
            "t = {t} outside table coverage [0, {}]",
            table.coverage()
        )));
    }
    let disc = table.discriminant_at(t);
    Ok(if disc > 0.0 {
        Regime::Biexponential
    } else {
        Regime::Oscillatory { degenerate: disc == 0.0 }
    })
}

/// Two-timescale residue-coherence estimate `|x(t0) - W y(t0) tau_S|`, with
/// `tau_S` the inverse golden-rule rate.
pub fn residue_estimate(
    traj: &Trajectory,
    table: &CoefficientTable,
    t0: f64,
    model: &ModelConfig,
    bath: &BathSpec,
) -> Result<f64> {
    let at = traj.state_at(t0)?;
    let gamma_inf = decay_rate_infinity(model, bath);
    if !(gamma_inf > 0.0) {
        return Err(Error::contract(
            "residue estimate needs a positive asymptotic decay rate",
        ));
    }
    let tau_s = 1.0 / gamma_inf;
    Ok((at.x - table.omega() * at.y * tau_s).abs())
}

/// Closed-form second-stage predictors anchored at `t0`.
///
/// `y(t) = y(t0) exp(-(t - t0)/tau_S)` and
/// `x(t) = x(t0) - W [y(t0) - y(t)] tau_S`.
#[derive(Clone, Copy, Debug)]
pub struct StationaryStage {
    pub t0: f64,
    pub x0: f64,
    pub y0: f64,
    pub tau_s: f64,
    pub omega: f64,
}

impl StationaryStage {
    pub fn y(&self, t: f64) -> f64 {
        self.y0 * (-(t - self.t0) / self.tau_s).exp()
    }

    pub fn x(&self, t: f64) -> f64 {
        self.x0 - self.omega * (self.y0 - self.y(t)) * self.tau_s
    }
}

/// Build the second-stage predictors from a trajectory at anchor `t0`.
pub fn stationary_stage_model(
    traj: &Trajectory,
    t0: f64,
    model: &ModelConfig,
    bath: &BathSpec,
) -> Result<StationaryStage> {
    let at = traj.state_at(t0)?;
    let gamma_inf = decay_rate_infinity(model, bath);
    if !(gamma_inf > 0.0) {
        return Err(Error::contract(
            "stationary-stage model needs a positive asymptotic decay rate",
        ));
    }
    Ok(StationaryStage {
        t0,
        x0: at.x,
        y0: at.y,
        tau_s: 1.0 / gamma_inf,
        omega: model.omega,
    })
}
