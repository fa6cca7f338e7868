//! Joint probabilities of the Hardy terms, the Bell-type expression built
//! from them, the deterministic local-hidden-variable bound, and finite-shot
//! sampling.
//!
//! Every five-term vector in this crate uses the inequality's term order:
//!
//! | index | term                         | sign |
//! |-------|------------------------------|------|
//! | 0     | `P(D₁=−1, D₂=−1, D₃=−1)`     | `+`  |
//! | 1     | `P(D₁=+1, U₂=+1, U₃=+1)`     | `+`  |
//! | 2     | `P(U₁=+1, D₂=+1, U₃=+1)`     | `+`  |
//! | 3     | `P(U₁=+1, U₂=+1, D₃=+1)`     | `+`  |
//! | 4     | `P(U₁=+1, U₂=+1, U₃=+1)`     | `−`  |
//!
//! Indices 0–3 are the four Hardy zero conditions, index 4 the success
//! probability.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hardy::{DichotomicObservable, MeasurementSettings};
use crate::linalg::{Complex, Ket, Operator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BellError {
    #[error("state has dimension {0}, expected 8")]
    Dimension(usize),
    #[error("at least one shot is required")]
    NoShots,
}

/// Bell value of the maximally mixed state `I/8`: four `+1/8` terms and one `−1/8`.
pub const WHITE_NOISE_BELL_VALUE: f64 = 3.0 / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    U,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HardyTerm {
    AllDMinus,
    D1U2U3,
    U1D2U3,
    U1U2D3,
    AllU,
}

impl HardyTerm {
    pub const ORDER: [HardyTerm; 5] = [Self::AllDMinus, Self::D1U2U3, Self::U1D2U3, Self::U1U2D3, Self::AllU];

    /// Observable and outcome on qubits 1, 2, 3.
    pub fn picks(self) -> [(Setting, Sign); 3] {
        use Setting::{D, U};
        use Sign::{Minus, Plus};
        match self {
            Self::AllDMinus => [(D, Minus), (D, Minus), (D, Minus)],
            Self::D1U2U3 => [(D, Plus), (U, Plus), (U, Plus)],
            Self::U1D2U3 => [(U, Plus), (D, Plus), (U, Plus)],
            Self::U1U2D3 => [(U, Plus), (U, Plus), (D, Plus)],
            Self::AllU => [(U, Plus), (U, Plus), (U, Plus)],
        }
    }

    pub fn context(self) -> [Setting; 3] {
        self.picks().map(|(s, _)| s)
    }

    pub fn coefficient(self) -> f64 {
        if self == Self::AllU {
            -1.0
        } else {
            1.0
        }
    }
}

/// Something with a product-projector expectation value on three qubits.
pub trait ThreeQubitState {
    /// `Tr[ρ |k⟩⟨k|]` for `k = k₁ ⊗ k₂ ⊗ k₃`.
    fn product_probability(&self, kets: [&Ket; 3]) -> f64;
    fn dim(&self) -> usize;
}

fn product_amplitude(psi: &[Complex], kets: [&Ket; 3]) -> Complex {
    let [a, b, c] = kets.map(|k| [k.amplitude(0).conj(), k.amplitude(1).conj()]);
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            let ab = a[i] * b[j];
            let base = 4 * i + 2 * j;
            acc += ab * (c[0] * psi[base] + c[1] * psi[base + 1]);
        }
    }
    acc
}

impl ThreeQubitState for Ket {
    fn product_probability(&self, kets: [&Ket; 3]) -> f64 {
        product_amplitude(self.amplitudes(), kets).norm_sqr()
    }
    fn dim(&self) -> usize {
        Ket::dim(self)
    }
}

impl ThreeQubitState for Operator {
    fn product_probability(&self, kets: [&Ket; 3]) -> f64 {
        let k = crate::linalg::tensor3(kets[0], kets[1], kets[2]);
        self.expectation(&k)
    }
    fn dim(&self) -> usize {
        Operator::dim(self)
    }
}

fn check_dim<S: ThreeQubitState + ?Sized>(state: &S) -> Result<(), BellError> {
    if state.dim() == 8 {
        Ok(())
    } else {
        Err(BellError::Dimension(state.dim()))
    }
}

/// Probability of the outcome pattern `(sign₁, sign₂, sign₃)` for the three
/// chosen observables.
pub fn joint_probability<S: ThreeQubitState + ?Sized>(
    state: &S,
    picks: [(&DichotomicObservable, Sign); 3],
) -> Result<f64, BellError> {
    check_dim(state)?;
    Ok(state.product_probability(picks.map(|(obs, sign)| obs.eigenket(sign))))
}

pub fn term_probability<S: ThreeQubitState + ?Sized>(state: &S, settings: &MeasurementSettings, term: HardyTerm) -> f64 {
    let picks = term.picks();
    let kets: [&Ket; 3] = std::array::from_fn(|j| {
        let (setting, sign) = picks[j];
        settings.observable(j, setting).eigenket(sign)
    });
    state.product_probability(kets)
}

/// The five term probabilities in inequality order, unclamped.
pub fn hardy_probabilities<S: ThreeQubitState + ?Sized>(state: &S, settings: &MeasurementSettings) -> [f64; 5] {
    HardyTerm::ORDER.map(|t| term_probability(state, settings, t))
}

/// Unclamped Bell expression; negative values violate the local bound.
pub fn bell_expression<S: ThreeQubitState + ?Sized>(state: &S, settings: &MeasurementSettings) -> f64 {
    let p = hardy_probabilities(state, settings);
    p[0] + p[1] + p[2] + p[3] - p[4]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellReport {
    /// Clamped to `[0, 1]`, inequality order.
    pub probabilities: [f64; 5],
    pub bell_value: f64,
    pub lhv_bound_satisfied: bool,
    pub settings: MeasurementSettings,
    pub state: StateKind,
}

pub trait Described {
    fn kind(&self) -> StateKind;
}

impl Described for Ket {
    fn kind(&self) -> StateKind {
        StateKind::Pure
    }
}

impl Described for Operator {
    fn kind(&self) -> StateKind {
        StateKind::Mixed
    }
}

pub fn bell_value<S: ThreeQubitState + Described + ?Sized>(
    state: &S,
    settings: &MeasurementSettings,
) -> Result<BellReport, BellError> {
    check_dim(state)?;
    let raw = hardy_probabilities(state, settings);
    let value = raw[0] + raw[1] + raw[2] + raw[3] - raw[4];
    Ok(BellReport {
        probabilities: raw.map(|p| p.clamp(0.0, 1.0)),
        bell_value: value,
        lhv_bound_satisfied: value >= -1e-12,
        settings: settings.clone(),
        state: state.kind(),
    })
}

/// Deterministic value assignment to the six observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LhvAssignment {
    pub u: [Sign; 3],
    pub d: [Sign; 3],
}

impl LhvAssignment {
    /// Bits 0–2 set `U₁..U₃ = −1`, bits 3–5 set `D₁..D₃ = −1`.
    pub fn from_bits(bits: u8) -> Self {
        let sign = |b: u8| if bits >> b & 1 == 1 { Sign::Minus } else { Sign::Plus };
        Self { u: [sign(0), sign(1), sign(2)], d: [sign(3), sign(4), sign(5)] }
    }

    pub fn all() -> impl Iterator<Item = LhvAssignment> {
        (0u8..64).map(Self::from_bits)
    }

    fn indicator(&self, qubit: usize, setting: Setting, sign: Sign) -> i32 {
        let v = match setting {
            Setting::U => self.u[qubit],
            Setting::D => self.d[qubit],
        };
        i32::from(v == sign)
    }

    /// Indicator product of each term, inequality order.
    pub fn term_indicators(&self) -> [i32; 5] {
        HardyTerm::ORDER.map(|t| {
            let picks = t.picks();
            (0..3).map(|j| self.indicator(j, picks[j].0, picks[j].1)).product()
        })
    }

    /// `B(ω)`: the Bell expression with each probability replaced by an
    /// indicator.
    pub fn bell_value(&self) -> i32 {
        let t = self.term_indicators();
        t[0] + t[1] + t[2] + t[3] - t[4]
    }

    /// Four zero indicators and a unit success indicator.
    pub fn realizes_hardy_pattern(&self) -> bool {
        let t = self.term_indicators();
        t[..4].iter().all(|&x| x == 0) && t[4] == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhvSummary {
    pub minimum: i32,
    pub minimizers: Vec<LhvAssignment>,
    pub values: Vec<(LhvAssignment, i32)>,
    pub hardy_pattern_realizable: bool,
}

/// Exhaustive enumeration of all 2⁶ deterministic assignments.
pub fn lhv_minimum() -> LhvSummary {
    let values: Vec<(LhvAssignment, i32)> = LhvAssignment::all().map(|a| (a, a.bell_value())).collect();
    let minimum = values.iter().map(|(_, v)| *v).min().expect("64 assignments");
    let minimizers = values.iter().filter(|(_, v)| *v == minimum).map(|(a, _)| *a).collect();
    let hardy_pattern_realizable = values.iter().any(|(a, _)| a.realizes_hardy_pattern());
    LhvSummary { minimum, minimizers, values, hardy_pattern_realizable }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStatistics {
    pub shots: u64,
    pub seed: u64,
    pub counts: [u64; 5],
    pub frequencies: [f64; 5],
    pub standard_errors: [f64; 5],
}

/// Eight-outcome distribution of one measurement context, outcomes indexed
/// by `4s₁ + 2s₂ + s₃` with `s = 1` for a `−1` result.
pub fn context_distribution<S: ThreeQubitState + ?Sized>(
    state: &S,
    settings: &MeasurementSettings,
    context: [Setting; 3],
) -> [f64; 8] {
    std::array::from_fn(|idx| {
        let kets: [&Ket; 3] = std::array::from_fn(|j| {
            let sign = if idx >> (2 - j) & 1 == 1 { Sign::Minus } else { Sign::Plus };
            settings.observable(j, context[j]).eigenket(sign)
        });
        state.product_probability(kets)
    })
}

fn outcome_index(signs: [Sign; 3]) -> usize {
    signs.iter().fold(0, |acc, s| 2 * acc + usize::from(*s == Sign::Minus))
}

/// Simulates `shots` runs of each of the five measurement contexts and
/// reports the relative frequency of each term's outcome pattern.
pub fn sample_statistics<S: ThreeQubitState + ?Sized>(
    state: &S,
    settings: &MeasurementSettings,
    shots: u64,
    seed: u64,
) -> Result<SampleStatistics, BellError> {
    check_dim(state)?;
    if shots == 0 {
        return Err(BellError::NoShots);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 5];
    for (slot, term) in HardyTerm::ORDER.into_iter().enumerate() {
        let dist = context_distribution(state, settings, term.context()).map(|p| p.max(0.0));
        let target = outcome_index(term.picks().map(|(_, s)| s));
        let sampler = WeightedIndex::new(dist).expect("outcome probabilities sum to one");
        counts[slot] = (0..shots).filter(|_| sampler.sample(&mut rng) == target).count() as u64;
    }
    let n = shots as f64;
    let frequencies = counts.map(|c| c as f64 / n);
    let standard_errors = frequencies.map(|p| (p * (1.0 - p) / n).sqrt());
    Ok(SampleStatistics { shots, seed, counts, frequencies, standard_errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::ObservablePair;
    use crate::states::{mix_with_white_noise, CanonicalState};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn ghz() -> Ket {
        CanonicalState::new([FRAC_1_SQRT_2, 0.0, 0.0, 0.0, FRAC_1_SQRT_2], 0.0).unwrap().to_ket()
    }

    fn obs(a: Complex, b: Complex) -> DichotomicObservable {
        DichotomicObservable::new(&Ket::qubit(a, b)).unwrap()
    }

    fn some_settings() -> MeasurementSettings {
        let pair = |t: f64| {
            ObservablePair::new(obs(c(t.cos(), 0.0), c(t.sin(), 0.1)), obs(c(0.3, 0.0), c(0.9, -0.2)))
        };
        MeasurementSettings::new([pair(0.3), pair(1.1), pair(-0.4)], 1e-9).unwrap()
    }

    #[test]
    fn ghz_all_zero_outcome() {
        let z = obs(c(1.0, 0.0), c(0.0, 0.0));
        let p = joint_probability(&ghz(), [(&z, Sign::Plus), (&z, Sign::Plus), (&z, Sign::Plus)]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn white_noise_is_one_eighth() {
        let rho = mix_with_white_noise(&ghz(), 0.0).unwrap();
        let s = some_settings();
        for p in hardy_probabilities(&rho, &s) {
            assert!((p - 0.125).abs() < 1e-15);
        }
        let report = bell_value(&rho, &s).unwrap();
        assert!((report.bell_value - 0.375).abs() < 1e-15);
        assert!(report.lhv_bound_satisfied);
        assert_eq!(report.state, StateKind::Mixed);
    }

    #[test]
    fn dimension_mismatch() {
        let z = obs(c(1.0, 0.0), c(0.0, 0.0));
        let two = Ket::basis(4, 0).unwrap();
        assert_eq!(
            joint_probability(&two, [(&z, Sign::Plus), (&z, Sign::Plus), (&z, Sign::Plus)]),
            Err(BellError::Dimension(4))
        );
    }

    #[test]
    fn outcome_distribution_normalized() {
        let s = some_settings();
        let k = Ket::new((0..8).map(|i| c(i as f64 * 0.1 - 0.3, 0.05 * i as f64)).collect()).unwrap().normalized().unwrap();
        for term in HardyTerm::ORDER {
            let total: f64 = context_distribution(&k, &s, term.context()).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lhv_enumeration() {
        let summary = lhv_minimum();
        assert_eq!(summary.values.len(), 64);
        assert_eq!(summary.minimum, 0);
        assert!(!summary.hardy_pattern_realizable);
        let all_plus = LhvAssignment { u: [Sign::Plus; 3], d: [Sign::Plus; 3] };
        assert_eq!(all_plus.bell_value(), 2);
        assert_eq!(all_plus.term_indicators(), [0, 1, 1, 1, 1]);
        assert!(summary.minimizers.iter().all(|a| a.bell_value() == 0));
        assert_eq!(summary, lhv_minimum());
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = some_settings();
        let a = sample_statistics(&ghz(), &s, 2000, 17).unwrap();
        let b = sample_statistics(&ghz(), &s, 2000, 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_statistics(&ghz(), &s, 2000, 18).unwrap());
        assert_eq!(sample_statistics(&ghz(), &s, 0, 1), Err(BellError::NoShots));
    }
}
