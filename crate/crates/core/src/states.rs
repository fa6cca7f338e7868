//! Three-qubit pure states in canonical form
//! `λ₀|000⟩ + λ₁e^{iφ}|100⟩ + λ₂|101⟩ + λ₃|110⟩ + λ₄|111⟩`, their
//! classification into the 25 sub-classes A.1–D.14, and white-noise mixtures.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Complex, Ket, LinalgError, Operator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("invalid canonical state: {0}")]
    Invalid(String),
    #[error("no classification row matched lambda = {lambda:?}, phi = {phi}")]
    ClassificationGap { lambda: [f64; 5], phi: f64 },
    #[error("classification rows overlap for lambda = {lambda:?}, phi = {phi}: {matched:?}")]
    ClassificationOverlap { lambda: [f64; 5], phi: f64, matched: Vec<StateClass> },
    #[error("visibility {0} outside [0, 1]")]
    VisibilityOutOfRange(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Canonical parameters `λ₀..λ₄ ≥ 0`, `Σλ² = 1`, `φ ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalState {
    lambda: [f64; 5],
    phi: f64,
}

impl CanonicalState {
    pub fn new(lambda: [f64; 5], phi: f64) -> Result<Self, StateError> {
        if lambda.iter().chain(std::iter::once(&phi)).any(|x| !x.is_finite()) {
            return Err(StateError::Invalid("non-finite parameter".into()));
        }
        if let Some(neg) = lambda.iter().find(|&&l| l < 0.0) {
            return Err(StateError::Invalid(format!("negative amplitude {neg}")));
        }
        let norm: f64 = lambda.iter().map(|l| l * l).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(StateError::Invalid(format!("sum of squared amplitudes is {norm}, expected 1")));
        }
        if !(0.0..=PI).contains(&phi) {
            return Err(StateError::Invalid(format!("phase {phi} outside [0, pi]")));
        }
        Ok(Self { lambda, phi })
    }

    /// Rescales `lambda` to unit norm first. Returns the state and the
    /// applied factor.
    pub fn normalized(lambda: [f64; 5], phi: f64) -> Result<(Self, f64), StateError> {
        let norm: f64 = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StateError::Invalid("amplitudes cannot be normalized".into()));
        }
        let factor = 1.0 / norm;
        Ok((Self::new(lambda.map(|l| l * factor), phi)?, factor))
    }

    pub fn lambda(&self) -> [f64; 5] {
        self.lambda
    }

    pub fn l(&self, j: usize) -> f64 {
        self.lambda[j]
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Phase with the convention that it is unobservable (taken as 0) when
    /// `λ₁ < eps`.
    pub fn effective_phi(&self, eps: f64) -> f64 {
        if self.lambda[1] < eps {
            0.0
        } else {
            self.phi
        }
    }

    pub fn to_ket(&self) -> Ket {
        let [l0, l1, l2, l3, l4] = self.lambda;
        let mut amps = vec![Complex::new(0.0, 0.0); 8];
        amps[0] = Complex::new(l0, 0.0);
        amps[4] = Complex::from_polar(l1, self.phi);
        amps[5] = Complex::new(l2, 0.0);
        amps[6] = Complex::new(l3, 0.0);
        amps[7] = Complex::new(l4, 0.0);
        Ket::new(amps).expect("canonical amplitudes are finite")
    }

    /// `√2·[[λ₁e^{iφ}, λ₂], [λ₃, λ₄]]`, the coefficient matrix of qubits 2, 3
    /// when `λ₀ = 0`.
    pub fn pair_matrix(&self, eps: f64) -> [Complex; 4] {
        let s = std::f64::consts::SQRT_2;
        let [_, l1, l2, l3, l4] = self.lambda;
        [
            Complex::from_polar(s * l1, self.effective_phi(eps)),
            Complex::new(s * l2, 0.0),
            Complex::new(s * l3, 0.0),
            Complex::new(s * l4, 0.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Major {
    A,
    B,
    C,
    D,
}

/// One row of the classification table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateClass {
    A1,
    A2,
    A3,
    B1,
    B2,
    B3,
    B4,
    B5,
    C1,
    C2,
    C3,
    D1,
    D2,
    D3,
    D4,
    D5,
    D6,
    D7,
    D8,
    D9,
    D10,
    D11,
    D12,
    D13,
    D14,
}

impl StateClass {
    pub const ALL: [StateClass; 25] = [
        Self::A1,
        Self::A2,
        Self::A3,
        Self::B1,
        Self::B2,
        Self::B3,
        Self::B4,
        Self::B5,
        Self::C1,
        Self::C2,
        Self::C3,
        Self::D1,
        Self::D2,
        Self::D3,
        Self::D4,
        Self::D5,
        Self::D6,
        Self::D7,
        Self::D8,
        Self::D9,
        Self::D10,
        Self::D11,
        Self::D12,
        Self::D13,
        Self::D14,
    ];

    pub fn major(self) -> Major {
        use StateClass::*;
        match self {
            A1 | A2 | A3 => Major::A,
            B1 | B2 | B3 | B4 | B5 => Major::B,
            C1 | C2 | C3 => Major::C,
            _ => Major::D,
        }
    }

    /// Sub-case number within the major class, e.g. 14 for D.14.
    pub fn minor(self) -> usize {
        let idx = Self::ALL.iter().position(|&c| c == self).unwrap();
        match self.major() {
            Major::A => idx + 1,
            Major::B => idx - 2,
            Major::C => idx - 7,
            Major::D => idx - 10,
        }
    }

    pub fn label(self) -> String {
        format!("{:?}.{}", self.major(), self.minor())
    }

    pub fn of_major(major: Major) -> impl Iterator<Item = StateClass> {
        Self::ALL.into_iter().filter(move |c| c.major() == major)
    }
}

impl fmt::Display for StateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for StateClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|c| c.label() == s).ok_or_else(|| format!("unknown class label {s:?}"))
    }
}

impl Serialize for StateClass {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for StateClass {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// `λ < eps` counts as zero and `|x − y| < eps` as equal.
    pub eps: f64,
    /// Evaluate every table row independently and fail if the matches are
    /// not exactly the decision-tree result.
    pub audit: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { eps: 1e-9, audit: cfg!(debug_assertions) }
    }
}

/// Derived quantities the table conditions are phrased in.
struct Probe {
    nz: [bool; 5],
    eps: f64,
    lambda: [f64; 5],
    phi_zero: bool,
    singular: bool,
    unitary: bool,
}

impl Probe {
    fn new(s: &CanonicalState, eps: f64) -> Self {
        let lambda = s.lambda();
        let m = s.pair_matrix(eps);
        let det = m[0] * m[3] - m[1] * m[2];
        // M†M − I
        let g00 = m[0].norm_sqr() + m[2].norm_sqr() - 1.0;
        let g11 = m[1].norm_sqr() + m[3].norm_sqr() - 1.0;
        let g01 = (m[0].conj() * m[1] + m[2].conj() * m[3]).norm();
        let unitary_dev = g00.abs().max(g11.abs()).max(g01);
        Self {
            nz: lambda.map(|l| l >= eps),
            eps,
            lambda,
            phi_zero: s.effective_phi(eps).abs() < eps,
            singular: det.norm() < eps,
            unitary: unitary_dev < eps,
        }
    }

    fn eq(&self, x: f64, y: f64) -> bool {
        (x - y).abs() < self.eps
    }

    /// Non-zero pattern equals exactly the given set of indices.
    fn support(&self, idx: &[usize]) -> bool {
        (0..5).all(|j| self.nz[j] == idx.contains(&j))
    }

    fn l(&self, j: usize) -> f64 {
        self.lambda[j]
    }
}

/// Every table row as a standalone predicate, for the exclusivity audit.
fn row_matches(p: &Probe, class: StateClass) -> bool {
    use StateClass::*;
    let z0 = !p.nz[0];
    let half = 0.5;
    match class {
        A1 => p.support(&[0, 1]),
        A2 => p.support(&[0]),
        A3 => z0 && p.singular,
        B1 => p.support(&[0, 1, 2]),
        B2 => p.support(&[0, 1, 3]),
        B3 => p.support(&[0, 2]) && p.l(0) * p.l(2) < half && !p.eq(p.l(0) * p.l(2), half),
        B4 => p.support(&[0, 3]) && p.l(0) * p.l(3) < half && !p.eq(p.l(0) * p.l(3), half),
        B5 => z0 && !p.singular && !p.unitary,
        C1 => p.eq(p.l(0) * p.l(2), half) && !p.nz[1] && !p.nz[3] && !p.nz[4],
        C2 => p.eq(p.l(0) * p.l(3), half) && !p.nz[1] && !p.nz[2] && !p.nz[4],
        C3 => z0 && p.unitary,
        D1 => p.support(&[0, 1, 2, 3, 4]) && !p.phi_zero,
        D2 => p.support(&[0, 1, 2, 3, 4]) && p.phi_zero && !p.eq(p.l(2) * p.l(3), p.l(1) * p.l(4)),
        D3 => p.support(&[0, 1, 2, 3, 4]) && p.phi_zero && p.eq(p.l(2) * p.l(3), p.l(1) * p.l(4)),
        D4 => p.support(&[0, 1, 2, 3]),
        D5 => p.support(&[0, 1, 2, 4]),
        D6 => p.support(&[0, 1, 3, 4]) && !p.eq(p.l(0), p.l(4)),
        D7 => p.support(&[0, 1, 3, 4]) && p.eq(p.l(0), p.l(4)),
        D8 => p.support(&[0, 1, 4]),
        D9 => p.support(&[0, 3, 4]),
        D10 => p.support(&[0, 2, 3, 4]) && !p.eq(p.l(2), p.l(4)),
        D11 => p.support(&[0, 2, 3, 4]) && p.eq(p.l(2), p.l(4)),
        D12 => p.support(&[0, 2, 3]),
        D13 => p.support(&[0, 2, 4]),
        D14 => p.support(&[0, 4]),
    }
}

/// Decision tree: `λ₀ = 0` rows first (singular, unitary, otherwise B.5),
/// then the zero pattern of `λ₁..λ₄`, then the row-specific equality tests.
fn decide(p: &Probe) -> Option<StateClass> {
    use StateClass::*;
    if !p.nz[0] {
        return Some(if p.singular {
            A3
        } else if p.unitary {
            C3
        } else {
            B5
        });
    }
    let pattern = (p.nz[1], p.nz[2], p.nz[3], p.nz[4]);
    let class = match pattern {
        (false, false, false, false) => A2,
        (true, false, false, false) => A1,
        (false, true, false, false) => {
            let prod = p.l(0) * p.l(2);
            if p.eq(prod, 0.5) {
                C1
            } else if prod < 0.5 {
                B3
            } else {
                return None;
            }
        }
        (false, false, true, false) => {
            let prod = p.l(0) * p.l(3);
            if p.eq(prod, 0.5) {
                C2
            } else if prod < 0.5 {
                B4
            } else {
                return None;
            }
        }
        (false, false, false, true) => D14,
        (true, true, false, false) => B1,
        (true, false, true, false) => B2,
        (true, false, false, true) => D8,
        (false, true, true, false) => D12,
        (false, true, false, true) => D13,
        (false, false, true, true) => D9,
        (true, true, true, false) => D4,
        (true, true, false, true) => D5,
        (true, false, true, true) => {
            if p.eq(p.l(0), p.l(4)) {
                D7
            } else {
                D6
            }
        }
        (false, true, true, true) => {
            if p.eq(p.l(2), p.l(4)) {
                D11
            } else {
                D10
            }
        }
        (true, true, true, true) => {
            if !p.phi_zero {
                D1
            } else if p.eq(p.l(2) * p.l(3), p.l(1) * p.l(4)) {
                D3
            } else {
                D2
            }
        }
    };
    Some(class)
}

pub fn classify(s: &CanonicalState) -> Result<StateClass, StateError> {
    classify_with(s, &ClassifyOptions::default())
}

pub fn classify_with(s: &CanonicalState, opts: &ClassifyOptions) -> Result<StateClass, StateError> {
    let probe = Probe::new(s, opts.eps);
    let decided = decide(&probe);
    if opts.audit {
        let matched: Vec<StateClass> = StateClass::ALL.into_iter().filter(|&c| row_matches(&probe, c)).collect();
        let consistent = match decided {
            Some(c) => matched == [c],
            None => matched.is_empty(),
        };
        if !consistent {
            return Err(StateError::ClassificationOverlap { lambda: s.lambda(), phi: s.phi(), matched });
        }
    }
    decided.ok_or(StateError::ClassificationGap { lambda: s.lambda(), phi: s.phi() })
}

/// A pure state given either canonically or as raw amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub enum PureState {
    Canonical(CanonicalState),
    Amplitudes(Ket),
}

impl PureState {
    pub fn to_ket(&self) -> Ket {
        match self {
            Self::Canonical(s) => s.to_ket(),
            Self::Amplitudes(k) => k.clone(),
        }
    }

    pub fn canonical(&self) -> Option<&CanonicalState> {
        match self {
            Self::Canonical(s) => Some(s),
            Self::Amplitudes(_) => None,
        }
    }
}

/// `v|ψ⟩⟨ψ| + (1 − v)/8 · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyState {
    pub psi: PureState,
    pub visibility: f64,
}

impl NoisyState {
    pub fn new(psi: PureState, visibility: f64) -> Result<Self, StateError> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(StateError::VisibilityOutOfRange(visibility));
        }
        Ok(Self { psi, visibility })
    }

    pub fn density(&self) -> Operator {
        mix_with_white_noise(&self.psi.to_ket(), self.visibility).expect("validated on construction")
    }
}

pub fn mix_with_white_noise(psi: &Ket, v: f64) -> Result<Operator, StateError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(StateError::VisibilityOutOfRange(v));
    }
    if psi.dim() != 8 {
        return Err(LinalgError::DimensionMismatch { left: 8, right: psi.dim() }.into());
    }
    psi.ensure_normalized()?;
    let pure = Operator::outer(psi, psi)?.scale(Complex::new(v, 0.0));
    let noise = Operator::identity(8)?.scale(Complex::new((1.0 - v) / 8.0, 0.0));
    Ok(&pure + &noise)
}

/// Random canonical states, uniform or constrained to a given table row.
pub mod draws {
    use super::*;
    use rand::Rng;

    /// Nonzero amplitudes are drawn from `[0.1, 1]` before normalization.
    fn nonzero<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.gen_range(0.1..1.0)
    }

    fn with_support<R: Rng + ?Sized>(rng: &mut R, support: &[usize]) -> [f64; 5] {
        let mut l = [0.0; 5];
        for &j in support {
            l[j] = nonzero(rng);
        }
        l
    }

    fn finish(lambda: [f64; 5], phi: f64) -> CanonicalState {
        CanonicalState::normalized(lambda, phi).expect("drawn parameters are valid").0
    }

    /// λ uniform on the unit 4-sphere restricted to the positive orthant,
    /// φ uniform on `[0, π]`.
    pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> CanonicalState {
        let lambda = [0; 5].map(|_| gaussian(rng).abs());
        finish(lambda, rng.gen_range(0.0..=PI))
    }

    /// Box-Muller standard normal.
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    fn candidate<R: Rng + ?Sized>(class: StateClass, rng: &mut R) -> CanonicalState {
        use StateClass::*;
        let phi = rng.gen_range(0.0..=PI);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match class {
            A1 => finish(with_support(rng, &[0, 1]), phi),
            A2 => finish([1.0, 0.0, 0.0, 0.0, 0.0], 0.0),
            A3 => {
                if rng.gen_bool(0.5) {
                    // |1⟩ ⊗ (x₀|0⟩ + x₁|1⟩) ⊗ (y₀|0⟩ + y₁|1⟩) with real factors
                    let (x0, x1, y0, y1) = (nonzero(rng), nonzero(rng), nonzero(rng), nonzero(rng));
                    finish([0.0, x0 * y0, x0 * y1, x1 * y0, x1 * y1], 0.0)
                } else {
                    let mut l = with_support(rng, &[1, 2, 3]);
                    l[if rng.gen_bool(0.5) { 2 } else { 3 }] = 0.0;
                    finish(l, phi)
                }
            }
            B1 => finish(with_support(rng, &[0, 1, 2]), phi),
            B2 => finish(with_support(rng, &[0, 1, 3]), phi),
            B3 | B4 => {
                let t = loop {
                    let t = rng.gen_range(0.05..(PI / 2.0 - 0.05));
                    if (t - PI / 4.0).abs() > 0.02 {
                        break t;
                    }
                };
                let j = if class == B3 { 2 } else { 3 };
                let mut l = [0.0; 5];
                l[0] = t.cos();
                l[j] = t.sin();
                finish(l, 0.0)
            }
            B5 => finish(with_support(rng, &[1, 2, 3, 4]), phi),
            C1 => finish([r, 0.0, r, 0.0, 0.0], 0.0),
            C2 => finish([r, 0.0, 0.0, r, 0.0], 0.0),
            C3 => match rng.gen_range(0..3) {
                0 => {
                    // √2·M = [[−cos θ, sin θ], [sin θ, cos θ]]
                    let t = rng.gen_range(0.05..(PI / 2.0 - 0.05));
                    finish([0.0, t.cos() * r, t.sin() * r, t.sin() * r, t.cos() * r], PI)
                }
                1 => finish([0.0, r, 0.0, 0.0, r], phi),
                _ => finish([0.0, 0.0, r, r, 0.0], 0.0),
            },
            D1 => finish(with_support(rng, &[0, 1, 2, 3, 4]), rng.gen_range(0.01..=PI)),
            D2 => finish(with_support(rng, &[0, 1, 2, 3, 4]), 0.0),
            D3 => {
                let mut l = with_support(rng, &[0, 1, 2, 3]);
                l[4] = l[2] * l[3] / l[1];
                finish(l, 0.0)
            }
            D4 => finish(with_support(rng, &[0, 1, 2, 3]), phi),
            D5 => finish(with_support(rng, &[0, 1, 2, 4]), phi),
            D6 => finish(with_support(rng, &[0, 1, 3, 4]), phi),
            D7 => {
                let mut l = with_support(rng, &[0, 1, 3]);
                l[4] = l[0];
                finish(l, phi)
            }
            D8 => finish(with_support(rng, &[0, 1, 4]), phi),
            D9 => finish(with_support(rng, &[0, 3, 4]), 0.0),
            D10 => finish(with_support(rng, &[0, 2, 3, 4]), 0.0),
            D11 => {
                let mut l = with_support(rng, &[0, 2, 3]);
                l[4] = l[2];
                finish(l, 0.0)
            }
            D12 => finish(with_support(rng, &[0, 2, 3]), 0.0),
            D13 => finish(with_support(rng, &[0, 2, 4]), 0.0),
            D14 => finish(with_support(rng, &[0, 4]), 0.0),
        }
    }

    /// Random state whose classification is `class`. Candidates landing on a
    /// neighbouring row (an accidental equality) are redrawn.
    pub fn in_class<R: Rng + ?Sized>(class: StateClass, rng: &mut R) -> CanonicalState {
        loop {
            let s = candidate(class, rng);
            if classify(&s).ok() == Some(class) {
                return s;
            }
        }
    }
}
