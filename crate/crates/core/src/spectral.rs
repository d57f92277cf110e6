//! Bath spectral densities and the system parameters.
//!
//! The bath couples to the two-level system through an Ohmic spectrum with a
//! Lorentzian cutoff,
//!
//! ```text
//! J(w) = w g^2 / [(w - w0)^2 + g^2]
//! ```
//!
//! with `g` the Lorentzian width (the inverse bath memory time) and `w0` the
//! peak frequency. At temperature `T` every integral in the crate uses the
//! effective spectrum `J_eff(w; T) = J(w) coth(w / 2T)`, or its
//! high-temperature limit `J_H(w) = 2 T g^2 / [(w - w0)^2 + g^2]`.
//!
//! The system transition frequency is the unit of every quantity here: all
//! frequencies and temperatures are expressed in units of the transition
//! frequency, all times in units of its inverse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which finite-temperature spectrum to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumKind {
    /// `J(w) coth(w / 2T)`, exact at every temperature (the default).
    ExactCoth,
    /// `2 T g^2 / [(w - w0)^2 + g^2]`, the `T -> inf` limit of the above.
    HighTemperatureLimit,
}

/// Parameters of the bosonic bath: Lorentzian width and peak of the Ohmic
/// spectrum, temperature, and which finite-temperature form to use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Lorentzian width `g` (> 0). Its inverse sets the bath memory time.
    pub gamma: f64,
    /// Lorentzian peak frequency `w0` (>= 0). Zero gives the Drude form.
    pub omega0: f64,
    /// Temperature (>= 0); zero selects the vacuum spectrum.
    pub temperature: f64,
    pub kind: SpectrumKind,
}

impl BathSpec {
    pub fn new(gamma: f64, omega0: f64, temperature: f64, kind: SpectrumKind) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::domain(format!("bath gamma must be positive, got {gamma}")));
        }
        if !(omega0 >= 0.0) || !omega0.is_finite() {
            return Err(Error::domain(format!("bath omega0 must be nonnegative, got {omega0}")));
        }
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::domain(format!(
                "bath temperature must be nonnegative, got {temperature}"
            )));
        }
        if kind == SpectrumKind::HighTemperatureLimit && temperature == 0.0 {
            return Err(Error::domain(
                "the high-temperature spectrum requires temperature > 0",
            ));
        }
        Ok(BathSpec { gamma, omega0, temperature, kind })
    }

    /// Vacuum (zero-temperature) spectrum evaluated without argument checks.
    #[inline]
    pub(crate) fn j_unchecked(&self, omega_f: f64) -> f64 {
        let d = omega_f - self.omega0;
        omega_f * self.gamma * self.gamma / (d * d + self.gamma * self.gamma)
    }

    /// Effective spectrum for quadrature loops; `omega_f` must be >= 0.
    ///
    /// At `omega_f = 0` with the exact-coth kind and `T > 0` this returns the
    /// finite limit `2 T g^2 / (w0^2 + g^2)` (the pole of coth cancels the
    /// Ohmic zero).
    #[inline]
    pub(crate) fn j_eff_unchecked(&self, omega_f: f64) -> f64 {
        match self.kind {
            SpectrumKind::HighTemperatureLimit => {
                let d = omega_f - self.omega0;
                2.0 * self.temperature * self.gamma * self.gamma
                    / (d * d + self.gamma * self.gamma)
            }
            SpectrumKind::ExactCoth => {
                if self.temperature == 0.0 {
                    return self.j_unchecked(omega_f);
                }
                if omega_f == 0.0 {
                    let d = self.omega0;
                    return 2.0 * self.temperature * self.gamma * self.gamma
                        / (d * d + self.gamma * self.gamma);
                }
                self.j_unchecked(omega_f) * coth(omega_f / (2.0 * self.temperature))
            }
        }
    }

    /// d/dw of the effective spectrum (used by the principal-value patch).
    pub(crate) fn j_eff_derivative(&self, omega_f: f64) -> f64 {
        let g2 = self.gamma * self.gamma;
        let d = omega_f - self.omega0;
        let den = d * d + g2;
        match self.kind {
            SpectrumKind::HighTemperatureLimit => {
                -2.0 * self.temperature * g2 * 2.0 * d / (den * den)
            }
            SpectrumKind::ExactCoth => {
                let j = omega_f * g2 / den;
                let jp = g2 * (den - omega_f * 2.0 * d) / (den * den);
                if self.temperature == 0.0 {
                    return jp;
                }
                let x = omega_f / (2.0 * self.temperature);
                jp * coth(x) + j * (-csch2(x) / (2.0 * self.temperature))
            }
        }
    }
}

/// System parameters: transition frequency (the internal unit scale) and the
/// dimensionless coupling constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Transition frequency; fixed to 1 by the unit convention.
    pub omega: f64,
    /// Dimensionless system-bath coupling constant (>= 0).
    pub lambda: f64,
}

impl ModelConfig {
    /// Model with the conventional unit transition frequency.
    pub fn new(lambda: f64) -> Result<Self> {
        Self::with_omega(1.0, lambda)
    }

    pub fn with_omega(omega: f64, lambda: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::domain(format!("omega must be positive, got {omega}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::domain(format!("lambda must be nonnegative, got {lambda}")));
        }
        Ok(ModelConfig { omega, lambda })
    }
}

/// Vacuum-field spectrum `J(w) = w g^2 / [(w - w0)^2 + g^2]`.
pub fn vacuum_spectrum(bath: &BathSpec, omega_f: f64) -> Result<f64> {
    if !(omega_f >= 0.0) {
        return Err(Error::domain(format!(
            "vacuum_spectrum requires omega_f >= 0, got {omega_f}"
        )));
    }
    Ok(bath.j_unchecked(omega_f))
}

/// Effective finite-temperature spectrum `J_eff(w; T)`.
///
/// For the exact-coth kind at `T > 0` the value at `w = 0` is the removable
/// limit `2 T g^2 / (w0^2 + g^2)`, not an error.
pub fn effective_spectrum(bath: &BathSpec, omega_f: f64) -> Result<f64> {
    if !(omega_f >= 0.0) {
        return Err(Error::domain(format!(
            "effective_spectrum requires omega_f >= 0, got {omega_f}"
        )));
    }
    Ok(bath.j_eff_unchecked(omega_f))
}

/// Hyperbolic cotangent, stable down to tiny arguments.
///
/// Below `x = 1e-8` the Laurent series `1/x + x/3` is used; `1/tanh`
/// evaluates the rest of the range without cancellation.
#[inline]
pub(crate) fn coth(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 / x + x / 3.0
    } else {
        1.0 / x.tanh()
    }
}

/// `1 / sinh^2(x)` with a series for small arguments.
#[inline]
pub(crate) fn csch2(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // 1/x^2 - 1/3 + x^2/15 - 2 x^4/189 ...
        1.0 / (x * x) - 1.0 / 3.0 + x * x / 15.0
    } else {
        let s = x.sinh();
        1.0 / (s * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_bath() -> BathSpec {
        BathSpec::new(5.0, 10.0, 100.0, SpectrumKind::ExactCoth).unwrap()
    }

    #[test]
    fn vacuum_vanishes_at_zero_frequency() {
        assert_eq!(vacuum_spectrum(&fig1_bath(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn vacuum_at_peak_equals_peak_frequency() {
        // At w = w0 the Lorentzian factor is g^2/g^2, leaving J = w0.
        let j = vacuum_spectrum(&fig1_bath(), 10.0).unwrap();
        assert!((j - 10.0).abs() < 1e-14);
    }

    #[test]
    fn vacuum_closed_form_value() {
        // 1 * 25 / ((1-10)^2 + 25) = 25/106
        let j = vacuum_spectrum(&fig1_bath(), 1.0).unwrap();
        assert!((j - 25.0 / 106.0).abs() < 1e-15);
    }

    #[test]
    fn vacuum_rejects_negative_frequency() {
        assert!(matches!(vacuum_spectrum(&fig1_bath(), -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_temperature_effective_equals_vacuum() {
        let bath = BathSpec::new(5.0, 10.0, 0.0, SpectrumKind::ExactCoth).unwrap();
        for w in [0.1, 1.0, 7.0, 30.0] {
            assert_eq!(
                effective_spectrum(&bath, w).unwrap(),
                vacuum_spectrum(&bath, w).unwrap()
            );
        }
    }

    #[test]
    fn high_temperature_limit_at_peak() {
        let bath = BathSpec::new(5.0, 10.0, 100.0, SpectrumKind::HighTemperatureLimit).unwrap();
        // 2 T g^2 / g^2 = 2T at the peak.
        assert!((effective_spectrum(&bath, 10.0).unwrap() - 200.0).abs() < 1e-12);
    }

    #[test]
    fn exact_coth_fig1_value() {
        // (25/106) * coth(0.005), evaluated through an independent series for
        // coth: 1/x + x/3 - x^3/45.
        let x: f64 = 0.005;
        let coth_ref = 1.0 / x + x / 3.0 - x.powi(3) / 45.0;
        let expected = 25.0 / 106.0 * coth_ref;
        let got = effective_spectrum(&fig1_bath(), 1.0).unwrap();
        assert!((got - expected).abs() / expected < 1e-12);
        assert!((got - 47.170).abs() < 2e-3);
    }

    #[test]
    fn exact_coth_zero_frequency_is_removable_limit() {
        let bath = fig1_bath();
        let limit = 2.0 * 100.0 * 25.0 / (100.0 + 25.0);
        assert!((effective_spectrum(&bath, 0.0).unwrap() - limit).abs() < 1e-12);
        // Nearby values approach the limit smoothly.
        let near = effective_spectrum(&bath, 1e-9).unwrap();
        assert!((near - limit).abs() < 1e-6);
    }

    #[test]
    fn drude_reduction_at_zero_peak() {
        let bath = BathSpec::new(5.0, 0.0, 0.0, SpectrumKind::ExactCoth).unwrap();
        for w in [0.3, 1.0, 4.0, 22.0] {
            let expect = w * 25.0 / (w * w + 25.0);
            assert!((vacuum_spectrum(&bath, w).unwrap() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn high_temperature_kind_requires_positive_temperature() {
        assert!(BathSpec::new(5.0, 10.0, 0.0, SpectrumKind::HighTemperatureLimit).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(BathSpec::new(0.0, 10.0, 1.0, SpectrumKind::ExactCoth).is_err());
        assert!(BathSpec::new(-1.0, 10.0, 1.0, SpectrumKind::ExactCoth).is_err());
        assert!(BathSpec::new(5.0, -0.1, 1.0, SpectrumKind::ExactCoth).is_err());
        assert!(BathSpec::new(5.0, 10.0, -1.0, SpectrumKind::ExactCoth).is_err());
        assert!(ModelConfig::with_omega(0.0, 0.1).is_err());
        assert!(ModelConfig::new(-0.1).is_err());
    }

    #[test]
    fn j_eff_derivative_matches_finite_difference() {
        for bath in [
            fig1_bath(),
            BathSpec::new(5.0, 0.0, 100.0, SpectrumKind::HighTemperatureLimit).unwrap(),
            BathSpec::new(2.0, 3.0, 0.0, SpectrumKind::ExactCoth).unwrap(),
        ] {
            for w in [0.5, 1.0, 2.5, 9.0] {
                let h = 1e-5;
                let fd = (bath.j_eff_unchecked(w + h) - bath.j_eff_unchecked(w - h)) / (2.0 * h);
                let an = bath.j_eff_derivative(w);
                assert!(
                    (fd - an).abs() <= 1e-6 * (1.0 + an.abs()),
                    "kind {:?} w {w}: fd {fd} vs analytic {an}",
                    bath.kind
                );
            }
        }
    }

    #[test]
    fn coth_branches_agree_near_switch() {
        // Both the series and 1/tanh are accurate around x = 1e-8; they must
        // agree there regardless of which side of the switch evaluates.
        for x in [3e-9f64, 1e-8, 3e-8] {
            let series = 1.0 / x + x / 3.0;
            let direct = 1.0 / x.tanh();
            assert!(
                (series - direct).abs() / direct.abs() < 1e-12,
                "x = {x}: {series} vs {direct}"
            );
            let got = coth(x);
            assert!((got - series).abs() / series.abs() < 1e-12);
        }
    }
}
