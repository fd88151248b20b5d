//! Driven three-level ladder: Gaussian pulses, the three Hamiltonian views
//! and the analytic adiabatic quantities.
//!
//! Units: ħ = 1, so Hamiltonians are returned in angular-frequency units.
//! Any consistent time unit works; the experiments use Δ = 1.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::smallmat::ComplexMat3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("mixing angle undefined: both drive envelopes vanish")]
    UndefinedAngle,
}

/// Pulse amplitudes, timing and detunings of the two drive tones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveConfig {
    /// Ω₀₁ peak (rad/time).
    pub omega01_peak: f64,
    /// Ω₁₂ peak (rad/time).
    pub omega12_peak: f64,
    /// Gaussian width σ.
    pub sigma: f64,
    /// Centre of the Ω₁₂ pulse; the Ω₀₁ pulse is centred at t = 0.
    pub t_s: f64,
    /// δ₀₁ = ω₀₁⁽ᵈ⁾ − ω₀₁
    pub delta01: f64,
    /// δ₁₂ = ω₁₂⁽ᵈ⁾ − ω₁₂
    pub delta12: f64,
}

impl DriveConfig {
    pub fn new(
        omega01_peak: f64,
        omega12_peak: f64,
        sigma: f64,
        t_s: f64,
        delta01: f64,
        delta12: f64,
    ) -> Result<Self, ModelError> {
        let d = DriveConfig {
            omega01_peak,
            omega12_peak,
            sigma,
            t_s,
            delta01,
            delta12,
        };
        d.validate()?;
        Ok(d)
    }

    /// Equal amplitudes Ω, σ = a/Ω and t_s = (t_s/σ)·σ, resonant drives.
    pub fn symmetric(omega: f64, a_param: f64, t_s_over_sigma: f64) -> Result<Self, ModelError> {
        if !(omega > 0.0) {
            return Err(ModelError::Config(format!(
                "drive amplitude must be > 0 to derive sigma = a/omega, got {omega}"
            )));
        }
        let sigma = a_param / omega;
        Self::new(omega, omega, sigma, t_s_over_sigma * sigma, 0.0, 0.0)
    }

    pub fn with_detunings(mut self, delta01: f64, delta12: f64) -> Result<Self, ModelError> {
        self.delta01 = delta01;
        self.delta12 = delta12;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [
            self.omega01_peak,
            self.omega12_peak,
            self.sigma,
            self.t_s,
            self.delta01,
            self.delta12,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::Config("drive parameters must be finite".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(ModelError::Config(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.omega01_peak < 0.0 || self.omega12_peak < 0.0 {
            return Err(ModelError::Config(format!(
                "peak amplitudes must be >= 0, got ({}, {})",
                self.omega01_peak, self.omega12_peak
            )));
        }
        Ok(())
    }

    pub fn is_two_photon_resonant(&self) -> bool {
        self.delta01 + self.delta12 == 0.0
    }
}

/// Coherence loss channel used alongside the coherent evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Dissipator {
    /// Population cascade 2 → 1 → 0 acting on the diagonal only.
    #[default]
    PopulationCascade,
    /// Lindblad form with jump operators |1⟩⟨2| and |0⟩⟨1|.
    LindbladCascade,
}

/// Sign in front of the commutator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CommutatorSign {
    /// ρ̇ = −i[H, ρ]
    #[default]
    Standard,
    /// ρ̇ = −i[ρ, H]
    Reversed,
}

/// Fixed-step resolution rule for the integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtPolicy {
    /// Steps per Gaussian width σ.
    pub steps_per_sigma: f64,
    /// Steps per period 2π/(|Δ_d| + Ω₀₁ + Ω₁₂) of the fastest cross-term
    /// oscillation, with peak amplitudes (only when cross terms are on).
    pub steps_per_cross_period: f64,
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy {
            steps_per_sigma: 200.0,
            steps_per_cross_period: 160.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig {
    /// Anharmonicity Δ (rad/time).
    pub delta_anh: f64,
    /// Dissipator rate in units of Δ.
    pub gamma_tilde: f64,
    pub cross_coupling: bool,
    pub two_photon_resonance: bool,
    /// Half-width of the integration window in units of σ.
    pub window_mult: f64,
    pub dt_policy: DtPolicy,
    pub dissipator: Dissipator,
    pub commutator_sign: CommutatorSign,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            delta_anh: 1.0,
            gamma_tilde: 0.0,
            cross_coupling: true,
            two_photon_resonance: true,
            window_mult: 5.0,
            dt_policy: DtPolicy::default(),
            dissipator: Dissipator::default(),
            commutator_sign: CommutatorSign::default(),
        }
    }
}

impl SystemConfig {
    pub fn new(delta_anh: f64, gamma_tilde: f64, cross_coupling: bool) -> Result<Self, ModelError> {
        let s = SystemConfig {
            delta_anh,
            gamma_tilde,
            cross_coupling,
            ..Default::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.delta_anh > 0.0) || !self.delta_anh.is_finite() {
            return Err(ModelError::Config(format!(
                "anharmonicity must be > 0, got {}",
                self.delta_anh
            )));
        }
        if !(self.gamma_tilde >= 0.0) || !self.gamma_tilde.is_finite() {
            return Err(ModelError::Config(format!(
                "gamma_tilde must be >= 0, got {}",
                self.gamma_tilde
            )));
        }
        if !(self.window_mult >= 3.0) || !self.window_mult.is_finite() {
            return Err(ModelError::Config(format!(
                "window_mult must be >= 3, got {}",
                self.window_mult
            )));
        }
        if !(self.dt_policy.steps_per_sigma > 0.0 && self.dt_policy.steps_per_cross_period > 0.0) {
            return Err(ModelError::Config("dt policy step counts must be > 0".into()));
        }
        Ok(())
    }

    /// Dissipator rate γ = γ̃·Δ.
    pub fn gamma(&self) -> f64 {
        self.gamma_tilde * self.delta_anh
    }

    /// False for the population cascade at γ > 0, which leaves coherences
    /// untouched while populations drain and so can drive ρ out of the PSD cone.
    pub fn preserves_positivity(&self) -> bool {
        self.gamma_tilde == 0.0 || self.dissipator == Dissipator::LindbladCascade
    }

    /// Checks the joint constraints between a drive and this system.
    pub fn check_drive(&self, d: &DriveConfig) -> Result<(), ModelError> {
        self.validate()?;
        d.validate()?;
        if self.two_photon_resonance && !d.is_two_photon_resonant() {
            return Err(ModelError::Config(format!(
                "two-photon resonance requires delta01 + delta12 = 0, got {} + {}",
                d.delta01, d.delta12
            )));
        }
        Ok(())
    }
}

/// Drive-frequency difference Δ_d = Δ + δ₀₁ − δ₁₂.
pub fn drive_frequency_difference(d: &DriveConfig, s: &SystemConfig) -> f64 {
    s.delta_anh + d.delta01 - d.delta12
}

/// peak · exp(−(t − center)² / 2σ²)
pub fn gaussian_envelope(t: f64, peak: f64, center: f64, sigma: f64) -> Result<f64, ModelError> {
    if !(sigma > 0.0) {
        return Err(ModelError::Config(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(envelope(t, peak, center, sigma))
}

#[inline]
fn envelope(t: f64, peak: f64, center: f64, sigma: f64) -> f64 {
    let x = (t - center) / sigma;
    peak * (-0.5 * x * x).exp()
}

/// (Ω₀₁(t), Ω₁₂(t)); Ω₀₁ is centred at 0 and Ω₁₂ at t_s.
#[inline]
pub fn pulse_pair(t: f64, d: &DriveConfig) -> (f64, f64) {
    (
        envelope(t, d.omega01_peak, 0.0, d.sigma),
        envelope(t, d.omega12_peak, d.t_s, d.sigma),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingAngles {
    /// Θ ∈ [0, π/2]
    pub theta: f64,
    /// Φ ∈ [0, π/2]
    pub phi: f64,
}

/// tan Θ = Ω₀₁/Ω₁₂ and tan Φ = Ω_rms / (√(Ω_rms² + δ₀₁²) + δ₀₁).
///
/// Φ uses the principal branch for every sign of δ₀₁.
pub fn mixing_angles(omega01_t: f64, omega12_t: f64, delta01: f64) -> Result<MixingAngles, ModelError> {
    if omega01_t == 0.0 && omega12_t == 0.0 {
        return Err(ModelError::UndefinedAngle);
    }
    let theta = omega01_t.atan2(omega12_t);
    let rms = omega01_t.hypot(omega12_t);
    let phi = rms.atan2(rms.hypot(delta01) + delta01);
    Ok(MixingAngles { theta, phi })
}

/// Θ(t) for a drive, with the limiting values outside the pulse window where
/// both envelopes have underflowed.
pub fn mixing_angle_at(t: f64, d: &DriveConfig) -> f64 {
    let (o01, o12) = pulse_pair(t, d);
    match mixing_angles(o01, o12, d.delta01) {
        Ok(a) => a.theta,
        Err(_) if t < 0.5 * d.t_s => 0.0,
        Err(_) => FRAC_PI_2,
    }
}

/// Instantaneous eigenbasis of the resonant (δ₀₁ + δ₁₂ = 0) RWA Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticEigensystem {
    pub theta: f64,
    pub phi: f64,
    pub dark: [C64; 3],
    pub plus: [C64; 3],
    pub minus: [C64; 3],
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub omega_dark: f64,
}

impl AdiabaticEigensystem {
    /// sin Θ|0⟩ + cos Θ|2⟩
    pub fn bright(&self) -> [C64; 3] {
        real_vec([self.theta.sin(), 0.0, self.theta.cos()])
    }
}

fn real_vec(v: [f64; 3]) -> [C64; 3] {
    v.map(|x| C64::new(x, 0.0))
}

pub fn adiabatic_eigensystem(
    omega01_t: f64,
    omega12_t: f64,
    delta01: f64,
) -> Result<AdiabaticEigensystem, ModelError> {
    let MixingAngles { theta, phi } = mixing_angles(omega01_t, omega12_t, delta01)?;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let root = (delta01 * delta01 + omega01_t * omega01_t + omega12_t * omega12_t).sqrt();
    Ok(AdiabaticEigensystem {
        theta,
        phi,
        dark: real_vec([ct, 0.0, -st]),
        plus: real_vec([sp * st, cp, sp * ct]),
        minus: real_vec([cp * st, -sp, cp * ct]),
        omega_plus: 0.5 * (delta01 + root),
        omega_minus: 0.5 * (delta01 - root),
        omega_dark: 0.0,
    })
}

fn ladder(diag: [f64; 3], h10: C64, h21: C64) -> ComplexMat3 {
    let z = C64::new(0.0, 0.0);
    let mut h = ComplexMat3::from_real_diag(diag);
    h[(1, 0)] = h10;
    h[(0, 1)] = h10.conj();
    h[(2, 1)] = h21;
    h[(1, 2)] = h21.conj();
    h[(0, 2)] = z;
    h[(2, 0)] = z;
    h
}

/// Doubly-rotating-frame Hamiltonian with resonant couplings only.
pub fn h_rwa(t: f64, d: &DriveConfig) -> ComplexMat3 {
    let (o01, o12) = pulse_pair(t, d);
    ladder(
        [0.0, d.delta01, d.delta01 + d.delta12],
        C64::new(0.5 * o01, 0.0),
        C64::new(0.5 * o12, 0.0),
    )
}

/// The parasitic couplings alone, in the frame of the parasitic drives:
/// a reverse STIRAP with the roles of the two tones exchanged.
pub fn h_parasitic(t: f64, d: &DriveConfig, s: &SystemConfig) -> ComplexMat3 {
    let (o01, o12) = pulse_pair(t, d);
    ladder(
        [0.0, -s.delta_anh + d.delta12, d.delta01 + d.delta12],
        C64::new(0.5 * o12, 0.0),
        C64::new(0.5 * o01, 0.0),
    )
}

/// Full three-level Hamiltonian in the frame rotating with both drives.
///
/// Each tone drives both transitions. The resonant couplings are static in
/// this frame; the cross couplings rotate at ±Δ_d and are kept exactly. With
/// `cross_coupling` off this is bit-identical to [`h_rwa`].
pub fn h_rotating_full(t: f64, d: &DriveConfig, s: &SystemConfig) -> ComplexMat3 {
    if !s.cross_coupling {
        return h_rwa(t, d);
    }
    let (o01, o12) = pulse_pair(t, d);
    let phase = C64::from_polar(1.0, drive_frequency_difference(d, s) * t);
    ladder(
        [0.0, d.delta01, d.delta01 + d.delta12],
        (C64::new(o01, 0.0) + phase * o12) * 0.5,
        (C64::new(o12, 0.0) + phase.conj() * o01) * 0.5,
    )
}

/// Adiabaticity measures built from the peak amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adiabaticity {
    /// √(Ω₀₁² + Ω₁₂²)·σ
    pub combined: f64,
    /// Ωσ when Ω₀₁ = Ω₁₂ = Ω.
    pub symmetric: Option<f64>,
}

impl Adiabaticity {
    /// The symmetric Ωσ when defined, otherwise the combined value.
    pub fn value(&self) -> f64 {
        self.symmetric.unwrap_or(self.combined)
    }
}

pub fn adiabaticity_parameter(d: &DriveConfig) -> Adiabaticity {
    Adiabaticity {
        combined: d.omega01_peak.hypot(d.omega12_peak) * d.sigma,
        symmetric: (d.omega01_peak == d.omega12_peak).then_some(d.omega01_peak * d.sigma),
    }
}

/// Default adiabaticity target a = Ωσ = 3π.
pub const DEFAULT_A_PARAM: f64 = 3.0 * PI;
/// Default pulse separation in units of σ (Ω₁₂ first).
pub const DEFAULT_T_S_OVER_SIGMA: f64 = -1.5;
