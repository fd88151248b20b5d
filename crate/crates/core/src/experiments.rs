//! Amplitude sweeps at fixed adiabaticity and the decoherence-dependent
//! optimal drive amplitude.
//!
//! Everything here works in units of the anharmonicity (Δ = 1): amplitudes are
//! Ω/Δ, rates are γ̃ = γ/Δ and times are t·Δ.

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{simulate, DynamicsError};
use crate::model::{
    Dissipator, DriveConfig, ModelError, SystemConfig, DEFAULT_A_PARAM, DEFAULT_T_S_OVER_SIGMA,
};
use crate::search::golden_section_max;
use crate::units::PhysicalScale;

/// Decoherence rates γ̃ of the reference figure, ×10⁻⁴.
pub const REFERENCE_GAMMA_TILDES: [f64; 6] = [1e-4, 10e-4, 20e-4, 30e-4, 50e-4, 100e-4];
/// p₂ differences below this are treated as simulation noise.
pub const NOISE_FLOOR: f64 = 1e-6;
/// Number of log-spaced points in the optimizer's coarse scan.
pub const COARSE_SCAN_POINTS: usize = 31;
/// Default optimizer bracket in Ω/Δ.
pub const DEFAULT_BRACKET: (f64, f64) = (0.02, 1.0);
pub const DEFAULT_TOL: f64 = 1e-3;
/// Transmon example: Δ/2π = 300 MHz, Γ = 0.5 MHz.
pub const TRANSMON_DELTA_MHZ: f64 = 300.0;
pub const TRANSMON_GAMMA_MHZ: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid sweep specification: {0}")]
    Spec(String),
    #[error("run at omega/delta = {omega_over_delta}, gamma_tilde = {gamma_tilde}, cross = {cross} failed: {source}")]
    Row {
        omega_over_delta: f64,
        gamma_tilde: f64,
        cross: bool,
        #[source]
        source: DynamicsError,
    },
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| match k {
                    0 => lo,
                    k if k == n - 1 => hi,
                    k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// a = Ωσ
    pub a_param: f64,
    pub omega_over_delta_grid: Vec<f64>,
    pub gamma_tilde_list: Vec<f64>,
    pub cross_variants: Vec<bool>,
    pub t_s_over_sigma: f64,
    /// (δ₀₁/Δ, δ₁₂/Δ)
    pub detunings: (f64, f64),
    pub window_mult: f64,
    pub dissipator: Dissipator,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            a_param: DEFAULT_A_PARAM,
            omega_over_delta_grid: log_grid(0.02, 1.2, 60),
            gamma_tilde_list: REFERENCE_GAMMA_TILDES.to_vec(),
            cross_variants: vec![true, false],
            t_s_over_sigma: DEFAULT_T_S_OVER_SIGMA,
            detunings: (0.0, 0.0),
            window_mult: 5.0,
            dissipator: Dissipator::PopulationCascade,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let err = |m: String| Err(ExperimentError::Spec(m));
        if !(self.a_param > 0.0 && self.a_param.is_finite()) {
            return err(format!("a_param must be > 0, got {}", self.a_param));
        }
        if self.omega_over_delta_grid.is_empty() {
            return err("omega/delta grid is empty".into());
        }
        if let Some(x) = self
            .omega_over_delta_grid
            .iter()
            .find(|&&x| !(x > 0.0 && x <= 2.0))
        {
            return err(format!("omega/delta grid value {x} outside (0, 2]"));
        }
        if self.omega_over_delta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return err("omega/delta grid must be strictly increasing".into());
        }
        if self.gamma_tilde_list.is_empty() {
            return err("gamma_tilde list is empty".into());
        }
        if let Some(g) = self.gamma_tilde_list.iter().find(|&&g| !(g >= 0.0 && g.is_finite())) {
            return err(format!("gamma_tilde {g} must be >= 0"));
        }
        if self.gamma_tilde_list.windows(2).any(|w| w[0] >= w[1]) {
            return err("gamma_tilde list must be strictly increasing".into());
        }
        if self.cross_variants.is_empty() {
            return err("no cross-coupling variants selected".into());
        }
        if !self.t_s_over_sigma.is_finite() {
            return err("t_s/sigma must be finite".into());
        }
        if !(self.window_mult >= 3.0) {
            return err(format!("window_mult must be >= 3, got {}", self.window_mult));
        }
        Ok(())
    }

    /// Drive and system for one point, in units where Δ = 1.
    pub fn configs(
        &self,
        omega_over_delta: f64,
        gamma_tilde: f64,
        cross: bool,
    ) -> Result<(DriveConfig, SystemConfig), ModelError> {
        let (d01, d12) = self.detunings;
        let d = DriveConfig::symmetric(omega_over_delta, self.a_param, self.t_s_over_sigma)?
            .with_detunings(d01, d12)?;
        let s = SystemConfig {
            delta_anh: 1.0,
            gamma_tilde,
            cross_coupling: cross,
            two_photon_resonance: d01 + d12 == 0.0,
            window_mult: self.window_mult,
            dissipator: self.dissipator,
            ..Default::default()
        };
        s.check_drive(&d)?;
        Ok((d, s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub omega_over_delta: f64,
    pub gamma_tilde: f64,
    pub cross: bool,
    pub a_param: f64,
    pub populations: [f64; 3],
    pub p1_max: f64,
    pub trace_drift: f64,
}

impl SweepRow {
    pub fn p2(&self) -> f64 {
        self.populations[2]
    }
}

pub fn run_single(
    omega_over_delta: f64,
    gamma_tilde: f64,
    cross: bool,
    spec: &SweepSpec,
) -> Result<SweepRow, ExperimentError> {
    let wrap = |source: DynamicsError| ExperimentError::Row {
        omega_over_delta,
        gamma_tilde,
        cross,
        source,
    };
    let (d, s) = spec
        .configs(omega_over_delta, gamma_tilde, cross)
        .map_err(|e| wrap(e.into()))?;
    let res = simulate(&d, &s).map_err(wrap)?;
    Ok(SweepRow {
        omega_over_delta,
        gamma_tilde,
        cross,
        a_param: spec.a_param,
        populations: res.populations,
        p1_max: res.max_p1,
        trace_drift: res.trace_drift,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

/// All grid × rate × cross combinations, grid-major.
pub fn sweep_amplitude(spec: &SweepSpec) -> Result<Vec<SweepRow>, ExperimentError> {
    sweep_amplitude_with(spec, Execution::Parallel)
}

pub fn sweep_amplitude_with(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepRow>, ExperimentError> {
    spec.validate()?;
    let points: Vec<(f64, f64, bool)> = spec
        .omega_over_delta_grid
        .iter()
        .flat_map(|&x| {
            spec.gamma_tilde_list
                .iter()
                .flat_map(move |&g| spec.cross_variants.iter().map(move |&c| (x, g, c)))
        })
        .collect();
    let run = |&(x, g, c): &(f64, f64, bool)| run_single(x, g, c, spec);
    let results: Vec<_> = match exec {
        Execution::Parallel => points.par_iter().map(run).collect(),
        Execution::Serial => points.iter().map(run).collect(),
    };
    // First failure in row order, independent of scheduling.
    results.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimumResult {
    pub gamma_tilde: f64,
    pub omega_star_over_delta: f64,
    pub p2_star: f64,
    /// σ*·Δ = a / (Ω*/Δ)
    pub sigma_star_times_delta: f64,
    /// The optimum sits on the edge of the searched bracket.
    pub boundary: bool,
    /// The coarse scan found more than one local maximum above the noise floor.
    pub multimodal: bool,
}

/// Indices of interior grid points that beat both neighbours by more than
/// the noise floor.
pub fn interior_local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| {
            values[i] > values[i - 1] + NOISE_FLOOR && values[i] > values[i + 1] + NOISE_FLOOR
        })
        .collect()
}

/// Maximizes p₂(Ω/Δ) with cross-coupling on: log-spaced coarse scan, then
/// golden-section refinement between the neighbours of the best grid point.
pub fn find_optimal_amplitude(
    gamma_tilde: f64,
    spec: &SweepSpec,
    bracket: (f64, f64),
    tol: f64,
) -> Result<OptimumResult, ExperimentError> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi <= 2.0 && lo < hi) {
        return Err(ExperimentError::Spec(format!(
            "bracket ({lo}, {hi}) must satisfy 0 < lo < hi <= 2"
        )));
    }
    if !(tol >= 1e-4) {
        return Err(ExperimentError::Spec(format!("tolerance must be >= 1e-4, got {tol}")));
    }
    let scan_spec = SweepSpec {
        omega_over_delta_grid: log_grid(lo, hi, COARSE_SCAN_POINTS),
        gamma_tilde_list: vec![gamma_tilde],
        cross_variants: vec![true],
        ..spec.clone()
    };
    let rows = sweep_amplitude(&scan_spec)?;
    let xs = &scan_spec.omega_over_delta_grid;
    let p2: Vec<f64> = rows.iter().map(SweepRow::p2).collect();

    let best = p2
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > p2[b] { i } else { b });
    let multimodal = interior_local_maxima(&p2).len() > 1;
    let last = xs.len() - 1;

    let (x_star, p_star, boundary) = if best == 0 || best == last {
        (xs[best], p2[best], true)
    } else {
        let objective = |x: f64| -> Result<f64, ExperimentError> {
            Ok(run_single(x, gamma_tilde, true, spec)?.p2())
        };
        let (x, p) = golden_section_max(objective, xs[best - 1], xs[best + 1], tol)?;
        if p >= p2[best] {
            (x, p, false)
        } else {
            (xs[best], p2[best], false)
        }
    };

    Ok(OptimumResult {
        gamma_tilde,
        omega_star_over_delta: x_star,
        p2_star: p_star,
        sigma_star_times_delta: spec.a_param / x_star,
        boundary,
        multimodal,
    })
}

/// Optimum converted to laboratory units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalOptimum {
    pub optimum: OptimumResult,
    pub scale: PhysicalScale,
    /// Ω*/2π in MHz.
    pub omega_star_mhz: f64,
    /// σ* in ns.
    pub sigma_star_ns: f64,
}

impl PhysicalOptimum {
    pub fn new(optimum: OptimumResult, scale: PhysicalScale) -> Self {
        PhysicalOptimum {
            omega_star_mhz: scale.frequency_mhz(optimum.omega_star_over_delta),
            sigma_star_ns: scale.time_ns(optimum.sigma_star_times_delta),
            optimum,
            scale,
        }
    }
}

/// Optimal amplitude for a transmon with Δ/2π = 300 MHz and Γ = 0.5 MHz.
pub fn transmon_checkpoint() -> Result<PhysicalOptimum, ExperimentError> {
    let scale = PhysicalScale::new(TRANSMON_DELTA_MHZ)
        .map_err(|e| ExperimentError::Spec(e.to_string()))?;
    let gamma_tilde = scale.gamma_tilde(TRANSMON_GAMMA_MHZ);
    let spec = SweepSpec::default();
    let opt = find_optimal_amplitude(gamma_tilde, &spec, DEFAULT_BRACKET, DEFAULT_TOL)?;
    Ok(PhysicalOptimum::new(opt, scale))
}
