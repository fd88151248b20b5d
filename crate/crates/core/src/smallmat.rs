//! Dense complex matrices of small fixed size.
//!
//! Only what the three-level model and its 9×9 Liouvillian need: products,
//! commutators, a Jacobi Hermitian eigensolver and the matrix exponential.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Absolute floor for every norm-relative tolerance in this module.
pub const ABS_FLOOR: f64 = 1e-14;
/// Relative Hermiticity tolerance (w.r.t. the Frobenius norm).
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix is not Hermitian: max |A_ij - conj(A_ji)| = {defect:e} exceeds {tol:e}")]
    HermiticityViolation { defect: f64, tol: f64 },
    #[error("non-finite entry encountered in {0}")]
    NumericalError(&'static str),
}

/// Square complex matrix with compile-time dimension, stored row-major.
///
/// The dimension is a const parameter, so mixing 3×3 and 9×9 operands is a
/// type error rather than a runtime one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat<const N: usize>(pub [[C64; N]; N]);

/// 3×3 carrier for Hamiltonians and density matrices.
pub type ComplexMat3 = Mat<3>;
/// 9×9 carrier for vectorized superoperators.
pub type ComplexMat9 = Mat<9>;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

impl<const N: usize> Default for Mat<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Mat<N> {
    pub const DIM: usize = N;

    pub fn zeros() -> Self {
        Mat([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn from_real_diag(diag: [f64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, d) in diag.into_iter().enumerate() {
            m.0[i][i] = C64::new(d, 0.0);
        }
        m
    }

    pub fn from_diag(diag: [C64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, d) in diag.into_iter().enumerate() {
            m.0[i][i] = d;
        }
        m
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: &[C64; N], v: &[C64; N]) -> Self {
        Self::from_fn(|i, j| u[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        N
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn diag(&self) -> [C64; N] {
        std::array::from_fn(|i| self.0[i][i])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Induced 1-norm (max column sum).
    pub fn one_norm(&self) -> f64 {
        (0..N)
            .map(|j| (0..N).map(|i| self.0[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// max |A_ij − conj(A_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..N {
            for j in i..N {
                worst = worst.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    /// max |A_ij + conj(A_ji)|.
    pub fn anti_hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..N {
            for j in i..N {
                worst = worst.max((self.0[i][j] + self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    /// Tolerance used for the Hermitian tag of this matrix.
    pub fn hermitian_tol(&self) -> f64 {
        (HERMITIAN_TOL * self.frobenius_norm()).max(ABS_FLOOR)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= self.hermitian_tol()
    }

    /// (A + A†)/2
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(|i, j| (self.0[i][j] + self.0[j][i].conj()) * 0.5)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[C64; N]) -> [C64; N] {
        std::array::from_fn(|i| (0..N).map(|k| self.0[i][k] * v[k]).sum())
    }

    pub fn column(&self, j: usize) -> [C64; N] {
        std::array::from_fn(|i| self.0[i][j])
    }

    /// Entrywise comparison with an absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (*self - *other).max_abs() <= tol
    }
}

impl Mat<3> {
    /// A ⊗ B for 3×3 factors, with row-major index convention (i,j) ↦ 3i + j.
    pub fn kron(&self, other: &Mat<3>) -> Mat<9> {
        Mat::<9>::from_fn(|r, c| self.0[r / 3][c / 3] * other.0[r % 3][c % 3])
    }

    /// Row-major vectorization: ρ_ij ↦ v[3i + j].
    pub fn vectorize(&self) -> [C64; 9] {
        std::array::from_fn(|k| self.0[k / 3][k % 3])
    }

    pub fn from_vectorized(v: &[C64; 9]) -> Self {
        Self::from_fn(|i, j| v[3 * i + j])
    }
}

impl<const N: usize> Index<(usize, usize)> for Mat<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Mat<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Add for Mat<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<const N: usize> AddAssign for Mat<N> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl<const N: usize> Sub for Mat<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl<const N: usize> Neg for Mat<N> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::from_fn(|i, j| -self.0[i][j])
    }
}

impl<const N: usize> Mul for Mat<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.matmul(&rhs)
    }
}

impl<const N: usize> Mul<C64> for Mat<N> {
    type Output = Self;
    fn mul(self, rhs: C64) -> Self {
        self.scale(rhs)
    }
}

impl<const N: usize> Mul<f64> for Mat<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale_re(rhs)
    }
}

/// AB − BA.
pub fn commutator<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Mat<N> {
    a.matmul(b) - b.matmul(a)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig<const N: usize> {
    /// Ascending.
    pub values: [f64; N],
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Mat<N>,
}

impl<const N: usize> HermEig<N> {
    pub fn vector(&self, k: usize) -> [C64; N] {
        self.vectors.column(k)
    }

    /// V diag(f(λ)) V†
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> C64) -> Mat<N> {
        let v = &self.vectors;
        let fl: [C64; N] = std::array::from_fn(|k| f(self.values[k]));
        Mat::from_fn(|i, j| (0..N).map(|k| v.0[i][k] * fl[k] * v.0[j][k].conj()).sum())
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Eigenvalues are sorted ascending (stable, so ties keep the order in which
/// Jacobi produced them); the sorted vectors then get one Gram–Schmidt pass
/// and a phase fix making the first non-negligible component real positive.
pub fn herm_eig<const N: usize>(a: &Mat<N>) -> Result<HermEig<N>, MatError> {
    if !a.is_finite() {
        return Err(MatError::NumericalError("herm_eig"));
    }
    let tol = a.hermitian_tol();
    let defect = a.hermiticity_defect();
    if defect > tol {
        return Err(MatError::HermiticityViolation { defect, tol });
    }

    let mut m = a.hermitian_part();
    let mut v = Mat::<N>::identity();
    let scale = a.frobenius_norm().max(ABS_FLOOR);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.0[i][j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                jacobi_rotate(&mut m, &mut v, p, q, scale);
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|k| k);
    order.sort_by(|&x, &y| m.0[x][x].re.total_cmp(&m.0[y][y].re));
    let values = order.map(|k| m.0[k][k].re);
    let mut cols: [[C64; N]; N] = order.map(|k| v.column(k));

    // Gram–Schmidt in sorted order.
    for k in 0..N {
        for prev in 0..k {
            let proj: C64 = (0..N).map(|i| cols[prev][i].conj() * cols[k][i]).sum();
            for i in 0..N {
                let c = cols[prev][i];
                cols[k][i] -= proj * c;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let lead = cols[k]
            .iter()
            .find(|z| z.norm() > 1e-8)
            .copied()
            .unwrap_or(ONE);
        let phase = lead.conj() / lead.norm();
        for z in cols[k].iter_mut() {
            *z = *z * phase / norm;
        }
    }

    let vectors = Mat::from_fn(|i, k| cols[k][i]);
    Ok(HermEig { values, vectors })
}

fn jacobi_rotate<const N: usize>(m: &mut Mat<N>, v: &mut Mat<N>, p: usize, q: usize, scale: f64) {
    let apq = m.0[p][q];
    let mag = apq.norm();
    if mag <= 1e-300 || mag <= 1e-18 * scale {
        m.0[p][q] = ZERO;
        m.0[q][p] = ZERO;
        return;
    }
    let app = m.0[p][p].re;
    let aqq = m.0[q][q].re;
    let phase = apq / mag; // e^{iφ}
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = diag-phase · real rotation, acting on the (p, q) plane.
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    // A ← A J
    for k in 0..N {
        let akp = m.0[k][p];
        let akq = m.0[k][q];
        m.0[k][p] = akp * jpp + akq * jqp;
        m.0[k][q] = akp * jpq + akq * jqq;
    }
    // A ← J† A
    for k in 0..N {
        let apk = m.0[p][k];
        let aqk = m.0[q][k];
        m.0[p][k] = jpp.conj() * apk + jqp.conj() * aqk;
        m.0[q][k] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    m.0[p][q] = ZERO;
    m.0[q][p] = ZERO;
    m.0[p][p].im = 0.0;
    m.0[q][q].im = 0.0;
    // V ← V J
    for k in 0..N {
        let vkp = v.0[k][p];
        let vkq = v.0[k][q];
        v.0[k][p] = vkp * jpp + vkq * jqp;
        v.0[k][q] = vkp * jpq + vkq * jqq;
    }
}

/// Matrix exponential.
///
/// Hermitian and anti-Hermitian inputs go through the spectral decomposition;
/// anything else uses scaling and squaring around a truncated Taylor series.
pub fn expm<const N: usize>(a: &Mat<N>) -> Result<Mat<N>, MatError> {
    if !a.is_finite() {
        return Err(MatError::NumericalError("expm"));
    }
    let tol = a.hermitian_tol();
    if a.hermiticity_defect() <= tol {
        let eig = herm_eig(a)?;
        return Ok(eig.reconstruct_with(|l| C64::new(l.exp(), 0.0)));
    }
    if a.anti_hermiticity_defect() <= tol {
        // A = −iK with K = iA Hermitian.
        let k = a.scale(C64::new(0.0, 1.0)).hermitian_part();
        let eig = herm_eig(&k)?;
        return Ok(eig.reconstruct_with(|l| C64::new(0.0, -l).exp()));
    }
    expm_taylor(a)
}

/// Scaling-and-squaring exponential with a Taylor core, valid for any input.
pub fn expm_taylor<const N: usize>(a: &Mat<N>) -> Result<Mat<N>, MatError> {
    if !a.is_finite() {
        return Err(MatError::NumericalError("expm"));
    }
    let norm = a.one_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = a.scale_re(0.5f64.powi(squarings));

    let mut sum = Mat::<N>::identity();
    let mut term = Mat::<N>::identity();
    for k in 1..=30 {
        term = term.matmul(&b).scale_re(1.0 / k as f64);
        sum += term;
        if term.max_abs() <= 1e-18 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    if !sum.is_finite() {
        return Err(MatError::NumericalError("expm"));
    }
    Ok(sum)
}
