//! Conversion between laboratory units (MHz, ns) and the internal Δ = 1 scale.
//!
//! Frequencies given in MHz are cyclic, so Δ = 2π·Δ_MHz·10⁶ rad/s. Ratios of
//! two frequencies are formed directly from the MHz values; the 2π cancels.

use std::f64::consts::PI;

use thiserror::Error;

/// Significant digits kept when a physical input is reduced to a
/// dimensionless ratio.
pub const NORMALIZED_DIGITS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("anharmonicity must be > 0 MHz, got {0}")]
pub struct ScaleError(pub f64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalScale {
    /// Δ/2π in MHz.
    pub delta_mhz: f64,
}

impl PhysicalScale {
    pub fn new(delta_mhz: f64) -> Result<Self, ScaleError> {
        if !(delta_mhz > 0.0 && delta_mhz.is_finite()) {
            return Err(ScaleError(delta_mhz));
        }
        Ok(PhysicalScale { delta_mhz })
    }

    /// Δ in rad/ns.
    pub fn delta_rad_per_ns(&self) -> f64 {
        2.0 * PI * self.delta_mhz * 1e-3
    }

    /// Ω/Δ for a drive amplitude Ω/2π given in MHz.
    pub fn omega_over_delta(&self, omega_mhz: f64) -> f64 {
        normalize(omega_mhz / self.delta_mhz)
    }

    /// γ̃ = 2πΓ/Δ for a rate Γ given in MHz.
    pub fn gamma_tilde(&self, gamma_mhz: f64) -> f64 {
        normalize(gamma_mhz / self.delta_mhz)
    }

    /// σ·Δ for a duration given in ns.
    pub fn time_times_delta(&self, t_ns: f64) -> f64 {
        normalize(t_ns * self.delta_rad_per_ns())
    }

    /// Ω/2π in MHz from Ω/Δ.
    pub fn frequency_mhz(&self, omega_over_delta: f64) -> f64 {
        omega_over_delta * self.delta_mhz
    }

    /// Duration in ns from t·Δ.
    pub fn time_ns(&self, t_times_delta: f64) -> f64 {
        t_times_delta / self.delta_rad_per_ns()
    }
}

/// Rounds to [`NORMALIZED_DIGITS`] significant digits so that inputs which
/// differ only by a common unit scale map to the same dimensionless value.
pub fn normalize(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", NORMALIZED_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}
