//! Density-matrix evolution: fixed-step RK4 on the master equation, and an
//! independent propagator built from exponentials of the 9×9 Liouvillian.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::{
    adiabaticity_parameter, drive_frequency_difference, h_rotating_full, CommutatorSign,
    Dissipator, DriveConfig, ModelError, SystemConfig,
};
use crate::smallmat::{commutator, expm_taylor, herm_eig, ComplexMat3, ComplexMat9, MatError};

/// |trace − 1| allowed at any point of a run.
pub const TRACE_TOL: f64 = 1e-8;
/// Hermiticity defect allowed before re-symmetrization.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Most negative eigenvalue allowed in a returned state.
pub const MIN_EIGENVALUE_TOL: f64 = -1e-7;
/// Resolution floor behind [`EvolutionGrid::resolution_bound`].
pub const MIN_STEPS_PER_SIGMA: f64 = 200.0;
pub const MIN_STEPS_PER_CROSS_PERIOD: f64 = 40.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Matrix(#[from] MatError),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid evolution grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite state at t = {t}")]
    NumericalError { t: f64 },
    #[error("evolution diverged at t = {t}: {reason}")]
    EvolutionDiverged { t: f64, reason: String },
}

/// A validated 3×3 density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMat3);

impl DensityMatrix {
    pub fn new(rho: ComplexMat3) -> Result<Self, DynamicsError> {
        if !rho.is_finite() {
            return Err(DynamicsError::InvalidState("non-finite entries".into()));
        }
        let defect = rho.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(DynamicsError::InvalidState(format!(
                "hermiticity defect {defect:e}"
            )));
        }
        let rho = rho.hermitian_part();
        let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
        if drift > TRACE_TOL {
            return Err(DynamicsError::InvalidState(format!("trace off by {drift:e}")));
        }
        let dm = DensityMatrix(rho);
        let min_eig = dm.min_eigenvalue()?;
        if min_eig < MIN_EIGENVALUE_TOL {
            return Err(DynamicsError::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(dm)
    }

    /// |k⟩⟨k|
    pub fn basis(k: usize) -> Self {
        let mut diag = [0.0; 3];
        diag[k] = 1.0;
        DensityMatrix(ComplexMat3::from_real_diag(diag))
    }

    pub fn ground() -> Self {
        Self::basis(0)
    }

    pub fn from_pure(psi: &[C64; 3]) -> Result<Self, DynamicsError> {
        let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let v = psi.map(|z| z / n);
        Self::new(ComplexMat3::outer(&v, &v))
    }

    pub fn matrix(&self) -> &ComplexMat3 {
        &self.0
    }

    pub fn populations(&self) -> [f64; 3] {
        populations(&self.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// tr ρ²
    pub fn purity(&self) -> f64 {
        self.0.matmul(&self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> Result<f64, DynamicsError> {
        Ok(herm_eig(&self.0.hermitian_part())?.values[0])
    }

    /// Unvalidated wrapper for integrator output.
    fn raw(m: ComplexMat3) -> Self {
        DensityMatrix(m)
    }
}

/// Diagonal real parts (p₀, p₁, p₂).
pub fn populations(rho: &ComplexMat3) -> [f64; 3] {
    [rho[(0, 0)].re, rho[(1, 1)].re, rho[(2, 2)].re]
}

/// Uniform time grid over [t_start, t_end].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Record every n-th step into the trajectory; `None` disables recording.
    pub sample_stride: Option<usize>,
    steps: usize,
}

impl EvolutionGrid {
    /// Splits [t_start, t_end] into the fewest equal steps no longer than `max_dt`.
    pub fn new(t_start: f64, t_end: f64, max_dt: f64) -> Result<Self, DynamicsError> {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(DynamicsError::InvalidGrid(format!(
                "need t_start < t_end, got [{t_start}, {t_end}]"
            )));
        }
        if !(max_dt > 0.0) {
            return Err(DynamicsError::InvalidGrid(format!("dt must be > 0, got {max_dt}")));
        }
        let steps = ((t_end - t_start) / max_dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok(EvolutionGrid {
            t_start,
            t_end,
            dt: (t_end - t_start) / steps as f64,
            sample_stride: None,
            steps,
        })
    }

    /// The largest step allowed by the system's dt policy for this drive.
    pub fn max_dt(d: &DriveConfig, s: &SystemConfig) -> f64 {
        let by_sigma = d.sigma / s.dt_policy.steps_per_sigma;
        if s.cross_coupling {
            let fastest = drive_frequency_difference(d, s).abs() + d.omega01_peak.abs() + d.omega12_peak.abs();
            by_sigma.min(2.0 * PI / fastest / s.dt_policy.steps_per_cross_period)
        } else {
            by_sigma
        }
    }

    /// Window [t_s − mσ, +mσ] with m = `window_mult`, at the policy step.
    pub fn for_run(d: &DriveConfig, s: &SystemConfig) -> Result<Self, DynamicsError> {
        s.check_drive(d)?;
        let m = s.window_mult;
        Self::new(d.t_s.min(0.0) - m * d.sigma, d.t_s.max(0.0) + m * d.sigma, Self::max_dt(d, s))
    }

    /// Same window with every step split into `factor` substeps.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        EvolutionGrid {
            dt: self.dt / factor as f64,
            steps: self.steps * factor,
            sample_stride: self.sample_stride.map(|s| s * factor),
            ..*self
        }
    }

    pub fn with_sample_stride(mut self, stride: usize) -> Self {
        self.sample_stride = (stride > 0).then_some(stride);
        self
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Time at step k, computed from the start to avoid accumulating rounding.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt
        }
    }

    /// Coarsest step any run may use: σ/200, and 2π/(40·Δ_d) with cross terms.
    pub fn resolution_bound(d: &DriveConfig, s: &SystemConfig) -> f64 {
        let by_sigma = d.sigma / MIN_STEPS_PER_SIGMA;
        if s.cross_coupling {
            let period = 2.0 * PI / drive_frequency_difference(d, s).abs();
            by_sigma.min(period / MIN_STEPS_PER_CROSS_PERIOD)
        } else {
            by_sigma
        }
    }

    /// Whether this grid honours the resolution bound for the given configuration.
    pub fn check_resolution(&self, d: &DriveConfig, s: &SystemConfig) -> Result<(), DynamicsError> {
        let bound = Self::resolution_bound(d, s);
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(DynamicsError::InvalidGrid(format!(
                "dt = {} exceeds the resolution bound {bound}",
                self.dt
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub populations: [f64; 3],
    pub rho02: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StirapResult {
    pub rho_final: DensityMatrix,
    pub populations: [f64; 3],
    /// |tr ρ_final − 1|
    pub trace_drift: f64,
    /// Largest |tr ρ(t) − 1| seen during the run.
    pub max_trace_drift: f64,
    /// Largest Hermiticity defect before re-symmetrization.
    pub max_hermiticity_defect: f64,
    /// Peak intermediate-state population.
    pub max_p1: f64,
    /// Smallest eigenvalue of ρ_final. Only checked against the tolerance when
    /// the generator preserves positivity.
    pub min_eigenvalue: f64,
    pub a_param: f64,
    pub trajectory: Option<Vec<TrajectorySample>>,
}

impl StirapResult {
    pub fn p2(&self) -> f64 {
        self.populations[2]
    }
}

/// Population-cascade generator acting on the diagonal only:
/// −γρ₂₂|2⟩⟨2| − γ(ρ₁₁ − ρ₂₂)|1⟩⟨1| + γρ₁₁|0⟩⟨0|.
pub fn population_cascade_dissipator(rho: &ComplexMat3, gamma: f64) -> Result<ComplexMat3, DynamicsError> {
    if !(gamma >= 0.0) {
        return Err(ModelError::Config(format!("dissipator rate must be >= 0, got {gamma}")).into());
    }
    Ok(cascade_populations(rho, gamma))
}

#[inline]
fn cascade_populations(rho: &ComplexMat3, gamma: f64) -> ComplexMat3 {
    let r11 = rho[(1, 1)];
    let r22 = rho[(2, 2)];
    ComplexMat3::from_diag([r11 * gamma, (r22 - r11) * gamma, -r22 * gamma])
}

/// Σ_k L_k ρ L_k† − ½{L_k†L_k, ρ} with L = √γ|1⟩⟨2| and √γ|0⟩⟨1|.
pub fn lindblad_cascade_dissipator(rho: &ComplexMat3, gamma: f64) -> ComplexMat3 {
    let mut out = ComplexMat3::zeros();
    for (lo, hi) in [(1usize, 2usize), (0, 1)] {
        out[(lo, lo)] += rho[(hi, hi)] * gamma;
        for k in 0..3 {
            out[(hi, k)] -= rho[(hi, k)] * (0.5 * gamma);
            out[(k, hi)] -= rho[(k, hi)] * (0.5 * gamma);
        }
    }
    out
}

fn dissipator(rho: &ComplexMat3, s: &SystemConfig) -> ComplexMat3 {
    let gamma = s.gamma();
    if gamma == 0.0 {
        return ComplexMat3::zeros();
    }
    match s.dissipator {
        Dissipator::PopulationCascade => cascade_populations(rho, gamma),
        Dissipator::LindbladCascade => lindblad_cascade_dissipator(rho, gamma),
    }
}

/// ρ̇ = −i[H(t), ρ] + D[ρ] with H the rotating-frame Hamiltonian.
pub fn rhs(t: f64, rho: &ComplexMat3, d: &DriveConfig, s: &SystemConfig) -> ComplexMat3 {
    let h = h_rotating_full(t, d, s);
    let sign = match s.commutator_sign {
        CommutatorSign::Standard => C64::new(0.0, -1.0),
        CommutatorSign::Reversed => C64::new(0.0, 1.0),
    };
    commutator(&h, rho).scale(sign) + dissipator(rho, s)
}

/// One classical RK4 step followed by re-Hermitization.
///
/// Returns the new state and the Hermiticity defect it had before
/// symmetrization.
pub fn step_rk4_raw(
    t: f64,
    rho: &ComplexMat3,
    dt: f64,
    d: &DriveConfig,
    s: &SystemConfig,
) -> Result<(ComplexMat3, f64), DynamicsError> {
    let half = 0.5 * dt;
    let k1 = rhs(t, rho, d, s);
    let k2 = rhs(t + half, &(*rho + k1 * half), d, s);
    let k3 = rhs(t + half, &(*rho + k2 * half), d, s);
    let k4 = rhs(t + dt, &(*rho + k3 * dt), d, s);
    let next = *rho + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
    if !next.is_finite() {
        return Err(DynamicsError::NumericalError { t: t + dt });
    }
    Ok((next.hermitian_part(), next.hermiticity_defect()))
}

pub fn step_rk4(
    t: f64,
    rho: &DensityMatrix,
    dt: f64,
    d: &DriveConfig,
    s: &SystemConfig,
) -> Result<DensityMatrix, DynamicsError> {
    step_rk4_raw(t, &rho.0, dt, d, s).map(|(m, _)| DensityMatrix::raw(m))
}

/// Running diagnostics shared by both propagators.
struct Monitor {
    max_trace_drift: f64,
    max_hermiticity_defect: f64,
    max_p1: f64,
    trajectory: Option<Vec<TrajectorySample>>,
    stride: Option<usize>,
}

impl Monitor {
    fn new(grid: &EvolutionGrid) -> Self {
        Monitor {
            max_trace_drift: 0.0,
            max_hermiticity_defect: 0.0,
            max_p1: f64::NEG_INFINITY,
            trajectory: grid.sample_stride.map(|_| Vec::new()),
            stride: grid.sample_stride,
        }
    }

    fn observe(&mut self, k: usize, t: f64, rho: &ComplexMat3, defect: f64, last: bool) -> Result<(), DynamicsError> {
        let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
        self.max_trace_drift = self.max_trace_drift.max(drift);
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(defect);
        let p = populations(rho);
        self.max_p1 = self.max_p1.max(p[1]);
        if drift > TRACE_TOL {
            return Err(DynamicsError::EvolutionDiverged {
                t,
                reason: format!("trace drift {drift:e} exceeds {TRACE_TOL:e}"),
            });
        }
        if defect > HERMITICITY_TOL {
            return Err(DynamicsError::EvolutionDiverged {
                t,
                reason: format!("hermiticity defect {defect:e} exceeds {HERMITICITY_TOL:e}"),
            });
        }
        if let (Some(traj), Some(stride)) = (self.trajectory.as_mut(), self.stride) {
            if k % stride == 0 || last {
                traj.push(TrajectorySample {
                    t,
                    populations: p,
                    rho02: rho[(0, 2)],
                });
            }
        }
        Ok(())
    }

    fn finish(
        self,
        rho: ComplexMat3,
        d: &DriveConfig,
        s: &SystemConfig,
        t_end: f64,
    ) -> Result<StirapResult, DynamicsError> {
        let rho_final = DensityMatrix::raw(rho);
        let min_eig = rho_final.min_eigenvalue()?;
        if s.preserves_positivity() && min_eig < MIN_EIGENVALUE_TOL {
            return Err(DynamicsError::EvolutionDiverged {
                t: t_end,
                reason: format!("final state has eigenvalue {min_eig:e}"),
            });
        }
        Ok(StirapResult {
            populations: rho_final.populations(),
            trace_drift: (rho_final.trace() - 1.0).abs(),
            rho_final,
            max_trace_drift: self.max_trace_drift,
            max_hermiticity_defect: self.max_hermiticity_defect,
            max_p1: self.max_p1,
            min_eigenvalue: min_eig,
            a_param: adiabaticity_parameter(d).value(),
            trajectory: self.trajectory,
        })
    }
}

/// Integrates the master equation with fixed-step RK4 over `grid`.
pub fn evolve(
    d: &DriveConfig,
    s: &SystemConfig,
    grid: &EvolutionGrid,
    rho0: &DensityMatrix,
) -> Result<StirapResult, DynamicsError> {
    s.check_drive(d)?;
    grid.check_resolution(d, s)?;
    let mut rho = rho0.0;
    let mut mon = Monitor::new(grid);
    let n = grid.steps();
    mon.observe(0, grid.t_start, &rho, 0.0, n == 0)?;
    for k in 0..n {
        let t = grid.time(k);
        let (next, defect) = step_rk4_raw(t, &rho, grid.dt, d, s)?;
        rho = next;
        mon.observe(k + 1, grid.time(k + 1), &rho, defect, k + 1 == n)?;
    }
    mon.finish(rho, d, s, grid.t_end)
}

/// [`evolve`] from |0⟩⟨0| on the default window and step.
pub fn simulate(d: &DriveConfig, s: &SystemConfig) -> Result<StirapResult, DynamicsError> {
    let grid = EvolutionGrid::for_run(d, s)?;
    evolve(d, s, &grid, &DensityMatrix::ground())
}

/// Generator L(t) acting on row-major vec(ρ), built directly from the
/// Kronecker structure of the commutator and the dissipator's matrix elements.
pub fn liouvillian(t: f64, d: &DriveConfig, s: &SystemConfig) -> ComplexMat9 {
    let h = h_rotating_full(t, d, s);
    let id = ComplexMat3::identity();
    // vec(Hρ) = (H ⊗ I) vec ρ,  vec(ρH) = (I ⊗ Hᵀ) vec ρ
    let comm = h.kron(&id) - id.kron(&h.transpose());
    let sign = match s.commutator_sign {
        CommutatorSign::Standard => C64::new(0.0, -1.0),
        CommutatorSign::Reversed => C64::new(0.0, 1.0),
    };
    let mut l = comm.scale(sign);
    let g = s.gamma();
    let idx = |i: usize, j: usize| 3 * i + j;
    match s.dissipator {
        Dissipator::PopulationCascade => {
            l[(idx(0, 0), idx(1, 1))] += g;
            l[(idx(1, 1), idx(1, 1))] -= g;
            l[(idx(1, 1), idx(2, 2))] += g;
            l[(idx(2, 2), idx(2, 2))] -= g;
        }
        Dissipator::LindbladCascade => {
            for (lo, hi) in [(1usize, 2usize), (0, 1)] {
                l[(idx(lo, lo), idx(hi, hi))] += g;
                for k in 0..3 {
                    l[(idx(hi, k), idx(hi, k))] -= 0.5 * g;
                    l[(idx(k, hi), idx(k, hi))] -= 0.5 * g;
                }
            }
        }
    }
    l
}

/// Piecewise-constant propagation ρ ← exp(L(t + dt/2)·dt) ρ over `grid`,
/// starting from |0⟩⟨0|.
pub fn liouvillian_oracle(
    d: &DriveConfig,
    s: &SystemConfig,
    grid: &EvolutionGrid,
) -> Result<StirapResult, DynamicsError> {
    liouvillian_oracle_from(d, s, grid, &DensityMatrix::ground())
}

pub fn liouvillian_oracle_from(
    d: &DriveConfig,
    s: &SystemConfig,
    grid: &EvolutionGrid,
    rho0: &DensityMatrix,
) -> Result<StirapResult, DynamicsError> {
    s.check_drive(d)?;
    let mut v = rho0.0.vectorize();
    let mut mon = Monitor::new(grid);
    let n = grid.steps();
    mon.observe(0, grid.t_start, &rho0.0, 0.0, n == 0)?;
    for k in 0..n {
        let t_mid = grid.t_start + (k as f64 + 0.5) * grid.dt;
        let prop = expm_taylor(&liouvillian(t_mid, d, s).scale_re(grid.dt))
            .map_err(|_| DynamicsError::NumericalError { t: t_mid })?;
        v = prop.mat_vec(&v);
        let rho = ComplexMat3::from_vectorized(&v);
        if !rho.is_finite() {
            return Err(DynamicsError::NumericalError { t: grid.time(k + 1) });
        }
        let defect = rho.hermiticity_defect();
        let rho = rho.hermitian_part();
        v = rho.vectorize();
        mon.observe(k + 1, grid.time(k + 1), &rho, defect, k + 1 == n)?;
    }
    mon.finish(ComplexMat3::from_vectorized(&v), d, s, grid.t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DEFAULT_A_PARAM, DEFAULT_T_S_OVER_SIGMA};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn drives_off() -> DriveConfig {
        DriveConfig::new(0.0, 0.0, 10.0, -15.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn dissipator_examples() {
        let g = 0.3;
        let z = population_cascade_dissipator(DensityMatrix::ground().matrix(), g).unwrap();
        assert_eq!(z, ComplexMat3::zeros());
        let two = population_cascade_dissipator(DensityMatrix::basis(2).matrix(), g).unwrap();
        assert_eq!(two, ComplexMat3::from_real_diag([0.0, g, -g]));
        let one = population_cascade_dissipator(DensityMatrix::basis(1).matrix(), g).unwrap();
        assert_eq!(one, ComplexMat3::from_real_diag([g, -g, 0.0]));
        assert!(population_cascade_dissipator(DensityMatrix::ground().matrix(), -1e-3).is_err());
    }

    #[test]
    fn lindblad_dissipator_matches_jump_form() {
        let rho = ComplexMat3::from_fn(|i, j| c((i + 2 * j) as f64 * 0.1, i as f64 - j as f64)).hermitian_part();
        let g: f64 = 0.7;
        let mut want = ComplexMat3::zeros();
        for (lo, hi) in [(1, 2), (0, 1)] {
            let mut l = ComplexMat3::zeros();
            l[(lo, hi)] = c(g.sqrt(), 0.0);
            let ld = l.adjoint();
            let ldl = ld.matmul(&l);
            want += l.matmul(&rho).matmul(&ld) - (ldl.matmul(&rho) + rho.matmul(&ldl)) * 0.5;
        }
        assert!(lindblad_cascade_dissipator(&rho, g).approx_eq(&want, 1e-15));
    }

    #[test]
    fn rhs_stationary_without_drives() {
        let s = SystemConfig::default();
        let rho = ComplexMat3::from_real_diag([0.2, 0.5, 0.3]);
        assert_eq!(rhs(0.3, &rho, &drives_off(), &s), ComplexMat3::zeros());
    }

    #[test]
    fn free_coherence_rotates_at_detuning() {
        let delta = 0.02;
        let d = DriveConfig::new(0.0, 0.0, 10.0, -15.0, delta, -delta).unwrap();
        let s = SystemConfig::default();
        let psi = [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let rho0 = DensityMatrix::from_pure(&psi).unwrap();
        let grid = EvolutionGrid::new(0.0, 200.0, 0.05).unwrap();
        let res = evolve(&d, &s, &grid, &rho0).unwrap();
        // H = diag(0, δ, 0): ρ₀₁(t) = ρ₀₁(0)·e^{+iδt}
        let want = c(0.5, 0.0) * c(0.0, delta * 200.0).exp();
        assert!((res.rho_final.matrix()[(0, 1)] - want).norm() < 1e-10);
        for (p, w) in res.populations.iter().zip([0.5, 0.5, 0.0]) {
            assert!((p - w).abs() < 1e-14);
        }
    }

    #[test]
    fn rk4_step_leaves_stationary_state() {
        let s = SystemConfig::default();
        let rho = DensityMatrix::ground();
        let next = step_rk4(0.0, &rho, 0.1, &drives_off(), &s).unwrap();
        assert_eq!(next, rho);
    }

    #[test]
    fn rabi_pi_pulse() {
        let om = 0.2;
        // σ huge: envelopes are constant to far below 1e-12 over the pulse.
        let d = DriveConfig::new(om, 0.0, 1e9, 0.0, 0.0, 0.0).unwrap();
        let s = SystemConfig {
            cross_coupling: false,
            ..Default::default()
        };
        let grid = EvolutionGrid::new(0.0, PI / om, PI / om / 2000.0).unwrap();
        let res = evolve(&d, &s, &grid, &DensityMatrix::ground()).unwrap();
        assert!((res.populations[1] - 1.0).abs() < 1e-8, "{:?}", res.populations);
    }

    #[test]
    fn drives_off_closed_system_is_frozen() {
        let s = SystemConfig::default();
        let rho0 = DensityMatrix::from_pure(&[c(0.6, 0.0), c(0.0, 0.0), c(0.0, 0.8)]).unwrap();
        let grid = EvolutionGrid::new(-50.0, 50.0, 0.05).unwrap();
        let res = evolve(&drives_off(), &s, &grid, &rho0).unwrap();
        assert!(res.rho_final.matrix().approx_eq(rho0.matrix(), 1e-12));
    }

    fn cascade_closed_form(g: f64, t: f64) -> [f64; 3] {
        // ṗ₂ = −γp₂, ṗ₁ = γp₂ − γp₁, ṗ₀ = γp₁ with p(0) = (0, 0, 1)
        let e = (-g * t).exp();
        let p2 = e;
        let p1 = g * t * e;
        [1.0 - p1 - p2, p1, p2]
    }

    #[test]
    fn cascade_decay_matches_closed_form() {
        let g = 0.01;
        let s = SystemConfig {
            gamma_tilde: g,
            ..Default::default()
        };
        let grid = EvolutionGrid::new(0.0, 400.0, 0.05).unwrap().with_sample_stride(100);
        let res = evolve(&drives_off(), &s, &grid, &DensityMatrix::basis(2)).unwrap();
        let traj = res.trajectory.as_ref().unwrap();
        let mut prev_purity = f64::INFINITY;
        for sample in traj {
            let want = cascade_closed_form(g, sample.t);
            for (p, w) in sample.populations.iter().zip(want) {
                assert!((p - w).abs() < 1e-7);
            }
            // Purity falls while the excitation spreads down the ladder.
            if g * sample.t <= 1.0 {
                let purity: f64 = sample.populations.iter().map(|p| p * p).sum();
                assert!(purity <= prev_purity + 1e-15);
                prev_purity = purity;
            }
        }
        let last = traj.last().unwrap();
        assert_eq!(last.t, 400.0);
        assert_eq!(last.populations, res.populations);
    }

    #[test]
    fn evolution_rejects_coarse_grid() {
        let d = DriveConfig::symmetric(0.3, DEFAULT_A_PARAM, DEFAULT_T_S_OVER_SIGMA).unwrap();
        let s = SystemConfig::default();
        let grid = EvolutionGrid::new(-100.0, 100.0, 1.0).unwrap();
        assert!(matches!(
            evolve(&d, &s, &grid, &DensityMatrix::ground()),
            Err(DynamicsError::InvalidGrid(_))
        ));
    }

    #[test]
    fn grid_window_and_step() {
        let d = DriveConfig::symmetric(0.5, DEFAULT_A_PARAM, DEFAULT_T_S_OVER_SIGMA).unwrap();
        let s = SystemConfig::default();
        let g = EvolutionGrid::for_run(&d, &s).unwrap();
        assert!((g.t_start - (d.t_s - 5.0 * d.sigma)).abs() < 1e-12);
        assert!((g.t_end - 5.0 * d.sigma).abs() < 1e-12);
        assert!(g.dt <= (d.sigma / 200.0).min(2.0 * PI / (160.0 * 2.0)) * (1.0 + 1e-12));
        assert!(g.check_resolution(&d, &s).is_ok());
        assert_eq!(g.time(g.steps()), g.t_end);
        let off = SystemConfig {
            cross_coupling: false,
            ..s
        };
        let g2 = EvolutionGrid::for_run(&d, &off).unwrap();
        assert!(g2.dt <= d.sigma / 200.0 * (1.0 + 1e-12));
        assert!(g2.steps() <= g.steps());
        assert!(EvolutionGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(EvolutionGrid::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ComplexMat3::from_real_diag([0.5, 0.5, 0.1])).is_err());
        assert!(DensityMatrix::new(ComplexMat3::from_real_diag([1.5, -0.5, 0.0])).is_err());
        let mut m = ComplexMat3::from_real_diag([0.5, 0.5, 0.0]);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        let mixed = DensityMatrix::new(ComplexMat3::from_real_diag([1.0 / 3.0; 3])).unwrap();
        assert!((mixed.purity() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn populations_examples() {
        assert_eq!(DensityMatrix::ground().populations(), [1.0, 0.0, 0.0]);
        let half = ComplexMat3::from_real_diag([0.5, 0.0, 0.5]);
        assert_eq!(populations(&half), [0.5, 0.0, 0.5]);
        let mixed = ComplexMat3::from_real_diag([1.0 / 3.0; 3]);
        assert_eq!(populations(&mixed), [1.0 / 3.0; 3]);
    }

    #[test]
    fn liouvillian_matches_rhs() {
        let d = DriveConfig::symmetric(0.4, DEFAULT_A_PARAM, DEFAULT_T_S_OVER_SIGMA)
            .unwrap()
            .with_detunings(0.01, -0.01)
            .unwrap();
        let rho = ComplexMat3::from_fn(|i, j| c(0.1 * (i * 3 + j) as f64, 0.05 * i as f64 - 0.02 * j as f64));
        for dissipator in [Dissipator::PopulationCascade, Dissipator::LindbladCascade] {
            for cross in [false, true] {
                let s = SystemConfig {
                    gamma_tilde: 0.03,
                    cross_coupling: cross,
                    dissipator,
                    ..Default::default()
                };
                let t = -7.3;
                let via_l = ComplexMat3::from_vectorized(&liouvillian(t, &d, &s).mat_vec(&rho.vectorize()));
                assert!(via_l.approx_eq(&rhs(t, &rho, &d, &s), 1e-14));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn rhs_is_traceless_and_hermitian(
            vals in proptest::collection::vec(-1.0f64..1.0, 18),
            t in -40.0f64..20.0, cross: bool, lindblad: bool,
        ) {
            let a = ComplexMat3::from_fn(|i, j| c(vals[6 * i + 2 * j], vals[6 * i + 2 * j + 1]));
            let pos = a.matmul(&a.adjoint());
            let rho = pos.scale_re(1.0 / pos.trace().re);
            let d = DriveConfig::symmetric(0.35, DEFAULT_A_PARAM, DEFAULT_T_S_OVER_SIGMA).unwrap();
            let s = SystemConfig {
                gamma_tilde: 0.01,
                cross_coupling: cross,
                dissipator: if lindblad { Dissipator::LindbladCascade } else { Dissipator::PopulationCascade },
                ..Default::default()
            };
            let r = rhs(t, &rho, &d, &s);
            prop_assert!(r.trace().norm() <= 1e-12);
            prop_assert!(r.hermiticity_defect() <= 1e-12);
        }
    }
}
