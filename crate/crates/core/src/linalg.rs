//! Dense complex linear algebra for one, two and three qubits.
//!
//! Kets and operators live in 2-, 4- or 8-dimensional spaces. Multi-qubit
//! basis states follow the left-to-right label order, so `|abc⟩` sits at
//! index `4a + 2b + c`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type Complex = Complex64;

/// Tolerance on the squared norm of a state-role ket.
pub const NORM_TOL: f64 = 1e-12;
/// Default tolerance for entrywise comparisons.
pub const CMP_TOL: f64 = 1e-10;
/// Norm deviation accepted by operations that require a normalized input.
pub const INPUT_NORM_TOL: f64 = 1e-9;

const ALLOWED_DIMS: [usize; 3] = [2, 4, 8];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("unsupported dimension {0} (expected 2, 4 or 8)")]
    BadDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("tensor product of dimension {0} exceeds the 8-dimensional limit")]
    DimensionOverflow(usize),
    #[error("ket is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("vectors are linearly dependent (rank {rank} of {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("target lies inside the span of the excluded vectors (residual {residual:e})")]
    TargetInSpan { residual: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

fn check_dim(dim: usize) -> Result<()> {
    if ALLOWED_DIMS.contains(&dim) {
        Ok(())
    } else if dim > 8 {
        Err(LinalgError::DimensionOverflow(dim))
    } else {
        Err(LinalgError::BadDimension(dim))
    }
}

/// A column vector in a 2-, 4- or 8-dimensional Hilbert space.
///
/// Kets are not normalized automatically. Code that needs a physical state
/// calls [`Ket::normalized`] or [`Ket::ensure_normalized`].
#[derive(Clone, PartialEq)]
pub struct Ket {
    amps: Vec<Complex>,
}

impl fmt::Debug for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amps.iter()).finish()
    }
}

impl Ket {
    pub fn new(amps: Vec<Complex>) -> Result<Self> {
        check_dim(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| Complex::new(a, 0.0)).collect())
    }

    /// Single-qubit ket `a|0⟩ + b|1⟩`.
    pub fn qubit(a: Complex, b: Complex) -> Self {
        Self { amps: vec![a, b] }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut amps = vec![Complex::new(0.0, 0.0); dim];
        amps[index] = Complex::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn zero() -> Self {
        Self::qubit(Complex::new(1.0, 0.0), Complex::new(0.0, 0.0))
    }

    pub fn one() -> Self {
        Self::qubit(Complex::new(0.0, 0.0), Complex::new(1.0, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Fails unless the norm is within [`INPUT_NORM_TOL`] of one.
    pub fn ensure_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > INPUT_NORM_TOL {
            Err(LinalgError::NotNormalized { norm })
        } else {
            Ok(())
        }
    }

    /// Unit vector along `self` with the global phase fixed (see [`Ket::phase_fixed`]).
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm < 1e-300 {
            return Err(LinalgError::ZeroVector);
        }
        Ok(self.scale(Complex::new(1.0 / norm, 0.0)).phase_fixed())
    }

    /// Rotates the global phase so the first non-negligible amplitude is real
    /// and non-negative.
    pub fn phase_fixed(&self) -> Self {
        let scale = self.norm().max(f64::MIN_POSITIVE);
        match self.amps.iter().find(|a| a.norm() > 1e-14 * scale) {
            Some(first) => {
                let phase = Complex::from_polar(1.0, -first.arg());
                let mut out = self.scale(phase);
                let idx = self.amps.iter().position(|a| a.norm() > 1e-14 * scale).unwrap();
                out.amps[idx] = Complex::new(out.amps[idx].norm(), 0.0);
                out
            }
            None => self.clone(),
        }
    }

    pub fn scale(&self, factor: Complex) -> Self {
        Self { amps: self.amps.iter().map(|a| a * factor).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { amps: self.amps.iter().map(|a| a.conj()).collect() }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Complex {
        assert_eq!(self.dim(), other.dim(), "inner product of kets with different dimensions");
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Ket) -> Result<Ket> {
        let dim = self.dim() * other.dim();
        check_dim(dim)?;
        let mut amps = Vec::with_capacity(dim);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Ket { amps })
    }

    /// Orthogonal single-qubit ket `(-b*, a*)` for `a|0⟩ + b|1⟩`.
    pub fn qubit_perp(&self) -> Ket {
        assert_eq!(self.dim(), 2, "qubit_perp needs a single-qubit ket");
        Ket::qubit(-self.amps[1].conj(), self.amps[0].conj())
    }

    pub fn max_abs_diff(&self, other: &Ket) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `|⟨self|other⟩|²` for normalized kets.
    pub fn fidelity(&self, other: &Ket) -> f64 {
        self.inner(other).norm_sqr()
    }
}

/// Serialized as a list of `[re, im]` pairs.
impl serde::Serialize for Ket {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.amps.len()))?;
        for a in &self.amps {
            seq.serialize_element(&[a.re, a.im])?;
        }
        seq.end()
    }
}

impl<'de> serde::Deserialize<'de> for Ket {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        Ket::new(pairs.into_iter().map(|[re, im]| Complex::new(re, im)).collect()).map_err(serde::de::Error::custom)
    }
}

impl Add for &Ket {
    type Output = Ket;
    fn add(self, rhs: &Ket) -> Ket {
        assert_eq!(self.dim(), rhs.dim());
        Ket { amps: self.amps.iter().zip(&rhs.amps).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Ket {
    type Output = Ket;
    fn sub(self, rhs: &Ket) -> Ket {
        assert_eq!(self.dim(), rhs.dim());
        Ket { amps: self.amps.iter().zip(&rhs.amps).map(|(a, b)| a - b).collect() }
    }
}

/// `a ⊗ b ⊗ c` for three single-qubit kets.
pub fn tensor3(a: &Ket, b: &Ket, c: &Ket) -> Ket {
    a.tensor(b).and_then(|ab| ab.tensor(c)).expect("three qubits fit in eight dimensions")
}

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<_> = self.data.chunks(self.dim).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl Operator {
    pub fn from_rows(dim: usize, data: Vec<Complex>) -> Result<Self> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch { left: dim * dim, right: data.len() });
        }
        if data.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: vec![Complex::new(0.0, 0.0); dim * dim] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut out = Self::zeros(dim)?;
        for i in 0..dim {
            out.data[i * dim + i] = Complex::new(1.0, 0.0);
        }
        Ok(out)
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &Ket, bra: &Ket) -> Result<Self> {
        if ket.dim() != bra.dim() {
            return Err(LinalgError::DimensionMismatch { left: ket.dim(), right: bra.dim() });
        }
        let dim = ket.dim();
        let mut data = Vec::with_capacity(dim * dim);
        for a in ket.amplitudes() {
            for b in bra.amplitudes() {
                data.push(a * b.conj());
            }
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.data[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = vec![Complex::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Self { dim: n, data }
    }

    pub fn scale(&self, factor: Complex) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a * factor).collect() }
    }

    pub fn trace(&self) -> Complex {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        assert_eq!(self.dim, ket.dim(), "operator/ket dimension mismatch");
        let amps = self
            .data
            .chunks(self.dim)
            .map(|row| row.iter().zip(ket.amplitudes()).map(|(m, a)| m * a).sum())
            .collect();
        Ket { amps }
    }

    /// Real part of `⟨ket|self|ket⟩`.
    pub fn expectation(&self, ket: &Ket) -> f64 {
        ket.inner(&self.apply(ket)).re
    }

    pub fn tensor(&self, other: &Operator) -> Result<Operator> {
        let dim = self.dim * other.dim;
        check_dim(dim)?;
        let mut data = vec![Complex::new(0.0, 0.0); dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = self.get(i, j);
                for k in 0..other.dim {
                    for l in 0..other.dim {
                        data[(i * other.dim + k) * dim + j * other.dim + l] = a * other.get(k, l);
                    }
                }
            }
        }
        Ok(Operator { dim, data })
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation `|M − M†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol && (self * self).max_abs_diff(self) <= tol
    }

    /// Positive semidefinite up to `tol`: `M + tol·I` admits a Cholesky factor.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let n = self.dim;
        let mut l = vec![Complex::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut diag = self.get(j, j).re + tol;
            for k in 0..j {
                diag -= l[j * n + k].norm_sqr();
            }
            if diag <= 0.0 {
                return false;
            }
            let djj = diag.sqrt();
            l[j * n + j] = Complex::new(djj, 0.0);
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        true
    }

    /// Hermitian, positive semidefinite (≥ −1e-10) and unit trace (1e-12).
    pub fn is_density(&self) -> bool {
        self.hermitian_deviation() <= NORM_TOL
            && (self.trace() - Complex::new(1.0, 0.0)).norm() <= NORM_TOL
            && self.is_positive_semidefinite(1e-10)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut data = vec![Complex::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Operator { dim: n, data }
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        Operator { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

/// `|k⟩⟨k|` for a normalized ket.
pub fn projector(k: &Ket) -> Result<Operator> {
    k.ensure_normalized()?;
    Operator::outer(k, k)
}

/// Schmidt form `a|u₀⟩|v₀⟩ + b|u₁⟩|v₁⟩` of a two-qubit pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    /// `(a, b)` with `a ≥ b ≥ 0`.
    pub coefficients: (f64, f64),
    pub basis_a: [Ket; 2],
    pub basis_b: [Ket; 2],
}

impl SchmidtDecomposition {
    pub fn reconstruct(&self) -> Ket {
        let (a, b) = self.coefficients;
        let t0 = self.basis_a[0].tensor(&self.basis_b[0]).unwrap();
        let t1 = self.basis_a[1].tensor(&self.basis_b[1]).unwrap();
        &t0.scale(Complex::new(a, 0.0)) + &t1.scale(Complex::new(b, 0.0))
    }

    /// Local kets on the two qubits, rotated from Schmidt-basis coefficients
    /// into the computational basis.
    pub fn from_schmidt_a(&self, c0: Complex, c1: Complex) -> Ket {
        &self.basis_a[0].scale(c0) + &self.basis_a[1].scale(c1)
    }

    pub fn from_schmidt_b(&self, c0: Complex, c1: Complex) -> Ket {
        &self.basis_b[0].scale(c0) + &self.basis_b[1].scale(c1)
    }
}

/// Eigen-decomposition of the Hermitian matrix `[[p, q], [q*, r]]`.
///
/// Returns eigenvalues in descending order with matching orthonormal
/// eigenvectors.
pub fn hermitian_eigen2(p: f64, q: Complex, r: f64) -> ([f64; 2], [Ket; 2]) {
    let mean = 0.5 * (p + r);
    let half_gap = (0.25 * (p - r) * (p - r) + q.norm_sqr()).sqrt();
    let hi = mean + half_gap;
    let lo = mean - half_gap;
    let c1 = Ket::qubit(q, Complex::new(hi - p, 0.0));
    let c2 = Ket::qubit(Complex::new(hi - r, 0.0), q.conj());
    let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
    let v0 = if v.norm() < 1e-300 {
        if p >= r { Ket::zero() } else { Ket::one() }
    } else {
        v.normalized().unwrap()
    };
    let v1 = v0.qubit_perp().phase_fixed();
    ([hi, lo], [v0, v1])
}

/// Schmidt decomposition of a normalized two-qubit ket through the closed-form
/// SVD of its coefficient matrix `M[a][b] = ⟨ab|state⟩`.
pub fn schmidt2q(state: &Ket) -> Result<SchmidtDecomposition> {
    if state.dim() != 4 {
        return Err(LinalgError::DimensionMismatch { left: 4, right: state.dim() });
    }
    state.ensure_normalized()?;
    let m = state.amplitudes();
    // H = M†M
    let p = m[0].norm_sqr() + m[2].norm_sqr();
    let r = m[1].norm_sqr() + m[3].norm_sqr();
    let q = m[0].conj() * m[1] + m[2].conj() * m[3];
    let (vals, w) = hermitian_eigen2(p, q, r);
    let s0 = vals[0].max(0.0).sqrt();
    let s1 = vals[1].max(0.0).sqrt();

    let apply_m = |v: &Ket| {
        let x = v.amplitudes();
        Ket::qubit(m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1])
    };
    let u0_raw = apply_m(&w[0]).scale(Complex::new(1.0 / s0, 0.0));
    // Fix u₀'s phase and push the compensating phase into v₀.
    let u0 = u0_raw.phase_fixed();
    let phase0 = u0_raw.inner(&u0);
    let perp = u0.qubit_perp();
    let mw1 = apply_m(&w[1]);
    let overlap = perp.inner(&mw1);
    let u1 = if overlap.norm() > 1e-300 {
        perp.scale(Complex::from_polar(1.0, overlap.arg()))
    } else {
        perp
    };
    let u1_fixed = u1.phase_fixed();
    let phase1 = u1.inner(&u1_fixed);

    // M = Σ s_k u_k w_k†, so v_k = conj(w_k) with compensated phases.
    let v0 = w[0].conj().scale(phase0.conj());
    let v1 = w[1].conj().scale(phase1.conj());

    Ok(SchmidtDecomposition { coefficients: (s0, s1), basis_a: [u0, u1_fixed], basis_b: [v0, v1] })
}

/// Unit ket orthogonal to every vector in `zeros` with non-zero overlap with
/// `target`: the projection of `target` onto the orthogonal complement of
/// `span(zeros)`, normalized.
pub fn orthogonal_complement_pick(zeros: &[Ket], target: &Ket) -> Result<Ket> {
    let dim = target.dim();
    let mut basis: Vec<Ket> = Vec::with_capacity(zeros.len());
    for z in zeros {
        if z.dim() != dim {
            return Err(LinalgError::DimensionMismatch { left: dim, right: z.dim() });
        }
        let scale = z.norm();
        let mut v = z.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                v = &v - &q.scale(q.inner(&v));
            }
        }
        if scale == 0.0 || v.norm() < 1e-10 * scale {
            return Err(LinalgError::RankDeficient { rank: basis.len(), expected: zeros.len() });
        }
        basis.push(v.scale(Complex::new(1.0 / v.norm(), 0.0)));
    }
    let mut residual = target.clone();
    for _ in 0..2 {
        for q in &basis {
            residual = &residual - &q.scale(q.inner(&residual));
        }
    }
    let norm = residual.norm();
    if norm < 1e-10 * target.norm().max(f64::MIN_POSITIVE) {
        return Err(LinalgError::TargetInSpan { residual: norm });
    }
    residual.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn random_ket(dim: usize, seed: &[f64]) -> Ket {
        let amps = (0..dim).map(|i| c(seed[2 * i], seed[2 * i + 1])).collect();
        Ket::new(amps).unwrap()
    }

    #[test]
    fn tensor_basis_indices() {
        let k = tensor3(&Ket::zero(), &Ket::zero(), &Ket::zero());
        assert_eq!(k.amplitude(0), c(1.0, 0.0));
        let k = tensor3(&Ket::one(), &Ket::zero(), &Ket::one());
        assert_eq!(k.amplitude(5), c(1.0, 0.0));
        assert!((k.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ghz_construction() {
        let a = tensor3(&Ket::zero(), &Ket::zero(), &Ket::zero());
        let b = tensor3(&Ket::one(), &Ket::one(), &Ket::one());
        let ghz = (&a + &b).scale(c(FRAC_1_SQRT_2, 0.0));
        for i in 0..8 {
            let expect = if i == 0 || i == 7 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!((ghz.amplitude(i) - c(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn tensor_rejects_overflow() {
        let k4 = Ket::basis(4, 0).unwrap();
        assert_eq!(k4.tensor(&k4), Err(LinalgError::DimensionOverflow(16)));
        assert!(Ket::new(vec![c(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn projector_examples() {
        let p = projector(&Ket::zero()).unwrap();
        assert_eq!(p.entries(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let plus = Ket::qubit(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0));
        let p = projector(&plus).unwrap();
        assert!(p.entries().iter().all(|e| (e - c(0.5, 0.0)).norm() < 1e-15));
        let plus_i = Ket::qubit(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2));
        let p = projector(&plus_i).unwrap();
        assert!((p.get(0, 0) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((p.get(1, 1) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((p.get(0, 1) - c(0.0, -0.5)).norm() < 1e-15);
        assert!((p.get(1, 0) - c(0.0, 0.5)).norm() < 1e-15);
        assert!(p.is_projector(1e-12));
        assert!((p.trace() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn projector_rejects_unnormalized() {
        let k = Ket::qubit(c(1.0, 0.0), c(1.0, 0.0));
        assert!(matches!(projector(&k), Err(LinalgError::NotNormalized { .. })));
    }

    #[test]
    fn schmidt_bell_and_product() {
        let bell = Ket::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap();
        let s = schmidt2q(&bell).unwrap();
        assert!((s.coefficients.0 - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((s.coefficients.1 - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(s.reconstruct().max_abs_diff(&bell) < 1e-12);

        let prod = Ket::basis(4, 1).unwrap();
        let s = schmidt2q(&prod).unwrap();
        assert!((s.coefficients.0 - 1.0).abs() < 1e-12);
        assert!(s.coefficients.1.abs() < 1e-12);
        assert!(s.reconstruct().max_abs_diff(&prod) < 1e-12);
    }

    /// Squared singular values against eigenvalues of the reduced density
    /// matrix ρ_A = M M†, diagonalized by nalgebra.
    fn reduced_eigenvalues(state: &Ket) -> [f64; 2] {
        let m = state.amplitudes();
        let mm = DMatrix::from_row_slice(2, 2, &[m[0], m[1], m[2], m[3]]);
        let rho = &mm * mm.adjoint();
        let eig = SymmetricEigen::new(rho);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        [vals[0], vals[1]]
    }

    #[test]
    fn schmidt_matches_reduced_density_oracle() {
        let h = (0.2f64 / 2.0).sqrt();
        let state = Ket::from_real(&[0.8f64.sqrt(), 0.0, h, h]).unwrap();
        let s = schmidt2q(&state).unwrap();
        let eig = reduced_eigenvalues(&state);
        assert!((s.coefficients.0.powi(2) - eig[0]).abs() < 1e-12);
        assert!((s.coefficients.1.powi(2) - eig[1]).abs() < 1e-12);
        assert!(s.reconstruct().fidelity(&state) > 1.0 - 1e-10);
        assert!(s.reconstruct().max_abs_diff(&state) < 1e-12);
    }

    #[test]
    fn complement_pick_examples() {
        let zeros: Vec<Ket> = (0..4).map(|i| Ket::basis(8, i).unwrap()).collect();
        let target = Ket::basis(8, 7).unwrap();
        let picked = orthogonal_complement_pick(&zeros, &target).unwrap();
        assert!(picked.max_abs_diff(&target) < 1e-15);

        let ghz = Ket::from_real(&[FRAC_1_SQRT_2, 0., 0., 0., 0., 0., 0., FRAC_1_SQRT_2]).unwrap();
        let picked = orthogonal_complement_pick(&[Ket::basis(8, 0).unwrap()], &ghz).unwrap();
        assert!(picked.max_abs_diff(&Ket::basis(8, 7).unwrap()) < 1e-15);
    }

    #[test]
    fn complement_pick_errors() {
        let z = Ket::basis(8, 0).unwrap();
        let err = orthogonal_complement_pick(&[z.clone(), z.scale(c(0.0, 2.0))], &Ket::basis(8, 1).unwrap());
        assert!(matches!(err, Err(LinalgError::RankDeficient { rank: 1, expected: 2 })));
        let err = orthogonal_complement_pick(std::slice::from_ref(&z), &z.scale(c(0.5, 0.5)));
        assert!(matches!(err, Err(LinalgError::TargetInSpan { .. })));
    }

    #[test]
    fn phase_convention() {
        let k = Ket::qubit(c(0.0, -0.6), c(0.8, 0.0)).normalized().unwrap();
        assert!(k.amplitude(0).im.abs() < 1e-15 && k.amplitude(0).re > 0.0);
        let k = Ket::qubit(c(0.0, 0.0), c(0.0, 1.0)).normalized().unwrap();
        assert_eq!(k.amplitude(1), c(1.0, 0.0));
    }

    #[test]
    fn density_checks() {
        let id = Operator::identity(8).unwrap().scale(c(0.125, 0.0));
        assert!(id.is_density());
        let bad = Operator::identity(2).unwrap().scale(c(0.5, 0.0));
        let mut data = bad.entries().to_vec();
        data[0] = c(1.5, 0.0);
        data[3] = c(-0.5, 0.0);
        let bad = Operator::from_rows(2, data).unwrap();
        assert!(!bad.is_density());
    }

    fn arb_ket(dim: usize) -> impl Strategy<Value = Ket> {
        proptest::collection::vec(-1.0f64..1.0, 2 * dim).prop_map(move |v| random_ket(dim, &v))
    }

    fn arb_op(dim: usize) -> impl Strategy<Value = Operator> {
        proptest::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
            let data = v.chunks(2).map(|p| c(p[0], p[1])).collect();
            Operator::from_rows(dim, data).unwrap()
        })
    }

    proptest! {
        #[test]
        fn tensor_is_associative(a in arb_ket(2), b in arb_ket(2), d in arb_ket(2)) {
            let left = a.tensor(&b).unwrap().tensor(&d).unwrap();
            let right = a.tensor(&b.tensor(&d).unwrap()).unwrap();
            prop_assert!(left.max_abs_diff(&right) <= 1e-12);
        }

        #[test]
        fn operator_tensor_is_associative(a in arb_op(2), b in arb_op(2), d in arb_op(2)) {
            let left = a.tensor(&b).unwrap().tensor(&d).unwrap();
            let right = a.tensor(&b.tensor(&d).unwrap()).unwrap();
            prop_assert!(left.max_abs_diff(&right) <= 1e-12);
        }

        #[test]
        fn tensor_is_bilinear(a in arb_ket(2), a2 in arb_ket(2), b in arb_ket(4),
                              re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let s = c(re, im);
            let lhs = (&a.scale(s) + &a2).tensor(&b).unwrap();
            let rhs = &a.tensor(&b).unwrap().scale(s) + &a2.tensor(&b).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
            let lhs = b.tensor(&(&a.scale(s) + &a2)).unwrap();
            let rhs = &b.tensor(&a).unwrap().scale(s) + &b.tensor(&a2).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }

        #[test]
        fn schmidt_squares_are_reduced_eigenvalues(k in arb_ket(4)) {
            prop_assume!(k.norm() > 1e-3);
            let state = k.normalized().unwrap();
            let s = schmidt2q(&state).unwrap();
            let eig = reduced_eigenvalues(&state);
            prop_assert!((s.coefficients.0.powi(2) - eig[0]).abs() <= 1e-10);
            prop_assert!((s.coefficients.1.powi(2) - eig[1]).abs() <= 1e-10);
            prop_assert!(s.coefficients.0 >= s.coefficients.1 && s.coefficients.1 >= 0.0);
            let sum = s.coefficients.0.powi(2) + s.coefficients.1.powi(2);
            prop_assert!((sum - 1.0).abs() <= 1e-12);
            prop_assert!(s.reconstruct().fidelity(&state) >= 1.0 - 1e-10);
            for basis in [&s.basis_a, &s.basis_b] {
                prop_assert!(basis[0].inner(&basis[1]).norm() <= 1e-12);
                prop_assert!(basis[0].is_normalized(1e-12) && basis[1].is_normalized(1e-12));
            }
        }

        #[test]
        fn projector_fixes_its_ket(k in arb_ket(8)) {
            prop_assume!(k.norm() > 1e-3);
            let k = k.normalized().unwrap();
            let p = projector(&k).unwrap();
            prop_assert!(p.apply(&k).max_abs_diff(&k) <= 1e-12);
            prop_assert!(p.is_projector(1e-12));
        }
    }

    #[test]
    fn complement_pick_random_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let random = |rng: &mut rand_chacha::ChaCha8Rng| {
            let amps = (0..8).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            Ket::new(amps).unwrap()
        };
        for _ in 0..1000 {
            let count = rng.gen_range(1..=4);
            let zeros: Vec<Ket> = (0..count).map(|_| random(&mut rng)).collect();
            let target = random(&mut rng);
            let out = orthogonal_complement_pick(&zeros, &target).unwrap();
            assert!(out.is_normalized(1e-12));
            for z in &zeros {
                assert!(z.inner(&out).norm() / z.norm() <= 1e-10);
            }
            assert!(out.inner(&target).norm() > 0.0);
        }
    }
}
