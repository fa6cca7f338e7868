//! Observables realizing the three-qubit Hardy conditions
//!
//! ```text
//! P(D₁=+1, U₂=+1, U₃=+1) = 0    P(U₁=+1, D₂=+1, U₃=+1) = 0
//! P(U₁=+1, U₂=+1, D₃=+1) = 0    P(D₁=−1, D₂=−1, D₃=−1) = 0
//! P(U₁=+1, U₂=+1, U₃=+1) > 0
//! ```
//!
//! Class-D states use closed-form coefficient tables, class-B states lift
//! the two-qubit Hardy construction through a Schmidt decomposition of the
//! entangled pair, and class-C states (where the conditions cannot hold)
//! get fixed settings that still violate the Bell-type inequality. Every
//! construction is re-verified; a construction that fails verification
//! falls back to a numerical search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bell::{self, Setting, Sign, ThreeQubitState};
use crate::linalg::{hermitian_eigen2, orthogonal_complement_pick, schmidt2q, tensor3, Complex, Ket, LinalgError};
use crate::simplex::NelderMead;
use crate::states::{classify_with, CanonicalState, ClassifyOptions, Major, StateClass, StateError};
use crate::visibility::BlochAngles;

/// Default non-commutation window tolerance.
pub const WINDOW_TOL: f64 = 1e-9;
/// Default zero tolerance of a Hardy certificate.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HardyError {
    #[error("coefficient vector is zero")]
    ZeroVector,
    #[error("observables on qubit {} commute or nearly so (|<U+|D+>| = {overlap})", .qubit + 1)]
    WindowViolation { qubit: usize, overlap: f64 },
    #[error("no witness: fully product state ({0})")]
    ProductState(StateClass),
    #[error("construction for {expected} applied to a state classified as {actual}")]
    WrongClass { expected: String, actual: StateClass },
    #[error("{class}: Schmidt coefficients of the entangled pair are equal within eps")]
    DegenerateSchmidt { class: StateClass },
    #[error("state is not a product across qubit {}", .qubit + 1)]
    NotBiseparable { qubit: usize },
    #[error("{class}: maximal-pair settings unexpectedly satisfy the Hardy conditions")]
    UnexpectedCertificate { class: StateClass },
    #[error("construction failed for {class}: {diagnostics}")]
    ConstructionFailure { class: StateClass, diagnostics: String },
    #[error("no Hardy settings found after {attempts} attempts")]
    NotFound { attempts: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A ±1-valued qubit observable fixed by its +1 eigenket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomicObservable {
    plus: Ket,
    minus: Ket,
}

impl DichotomicObservable {
    pub fn new(plus: &Ket) -> Result<Self, HardyError> {
        if plus.dim() != 2 {
            return Err(LinalgError::DimensionMismatch { left: 2, right: plus.dim() }.into());
        }
        let plus = plus.normalized().map_err(|_| HardyError::ZeroVector)?;
        let minus = plus.qubit_perp().phase_fixed();
        Ok(Self { plus, minus })
    }

    /// Observable with `+1` eigenket `∝ a|0⟩ + b|1⟩`.
    pub fn from_coefficients(a: Complex, b: Complex) -> Result<Self, HardyError> {
        Self::new(&Ket::qubit(a, b))
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        let plus = Ket::qubit(Complex::new(c, 0.0), Complex::from_polar(s, phi)).phase_fixed();
        let minus = plus.qubit_perp().phase_fixed();
        Self { plus, minus }
    }

    pub fn plus(&self) -> &Ket {
        &self.plus
    }

    pub fn minus(&self) -> &Ket {
        &self.minus
    }

    pub fn eigenket(&self, sign: Sign) -> &Ket {
        match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }

    /// Bloch angles `(θ, φ)` of the +1 eigenket.
    pub fn bloch_angles(&self) -> (f64, f64) {
        let a = self.plus.amplitude(0);
        let b = self.plus.amplitude(1);
        let theta = 2.0 * b.norm().atan2(a.norm());
        let phi = if b.norm() < 1e-15 { 0.0 } else { (b.arg() - a.arg()).rem_euclid(2.0 * std::f64::consts::PI) };
        (theta, phi)
    }
}

/// The `(Û_j, D̂_j)` pair measured on one qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservablePair {
    pub u: DichotomicObservable,
    pub d: DichotomicObservable,
}

impl ObservablePair {
    pub fn new(u: DichotomicObservable, d: DichotomicObservable) -> Self {
        Self { u, d }
    }

    /// `|⟨U=+1|D=+1⟩|`.
    pub fn overlap(&self) -> f64 {
        self.u.plus().inner(self.d.plus()).norm()
    }

    pub fn in_window(&self, tol: f64) -> bool {
        let o = self.overlap();
        o > tol && o < 1.0 - tol
    }
}

/// `k(α|0⟩ + β|1⟩)` and `l(γ|0⟩ + δ|1⟩)` as the +1 eigenkets of `Û` and `D̂`.
pub fn observable_from_coefficients(
    alpha: Complex,
    beta: Complex,
    gamma: Complex,
    delta: Complex,
    window_tol: f64,
) -> Result<ObservablePair, HardyError> {
    let pair = ObservablePair::new(
        DichotomicObservable::from_coefficients(alpha, beta)?,
        DichotomicObservable::from_coefficients(gamma, delta)?,
    );
    if !pair.in_window(window_tol) {
        return Err(HardyError::WindowViolation { qubit: 0, overlap: pair.overlap() });
    }
    Ok(pair)
}

/// Three observable pairs, one per qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSettings {
    pairs: [ObservablePair; 3],
}

impl MeasurementSettings {
    /// Validates that every pair is non-commuting within `window_tol`.
    pub fn new(pairs: [ObservablePair; 3], window_tol: f64) -> Result<Self, HardyError> {
        let s = Self { pairs };
        match s.window_violation(window_tol) {
            Some((qubit, overlap)) => Err(HardyError::WindowViolation { qubit, overlap }),
            None => Ok(s),
        }
    }

    /// No window check, for optimizer candidates that are penalized instead.
    pub fn new_unchecked(pairs: [ObservablePair; 3]) -> Self {
        Self { pairs }
    }

    pub fn from_coefficients(rows: [[Complex; 4]; 3], window_tol: f64) -> Result<Self, HardyError> {
        let mut pairs = Vec::with_capacity(3);
        for (qubit, [a, b, g, d]) in rows.into_iter().enumerate() {
            let pair = observable_from_coefficients(a, b, g, d, window_tol).map_err(|e| match e {
                HardyError::WindowViolation { overlap, .. } => HardyError::WindowViolation { qubit, overlap },
                other => other,
            })?;
            pairs.push(pair);
        }
        Ok(Self { pairs: pairs.try_into().expect("three pairs") })
    }

    pub fn pair(&self, qubit: usize) -> &ObservablePair {
        &self.pairs[qubit]
    }

    pub fn pairs(&self) -> &[ObservablePair; 3] {
        &self.pairs
    }

    pub fn observable(&self, qubit: usize, setting: Setting) -> &DichotomicObservable {
        match setting {
            Setting::U => &self.pairs[qubit].u,
            Setting::D => &self.pairs[qubit].d,
        }
    }

    /// First pair outside the window, with its overlap.
    pub fn window_violation(&self, tol: f64) -> Option<(usize, f64)> {
        self.pairs.iter().enumerate().find(|(_, p)| !p.in_window(tol)).map(|(j, p)| (j, p.overlap()))
    }

    /// The five product kets of the Hardy terms, inequality order.
    pub fn product_vectors(&self) -> [Ket; 5] {
        bell::HardyTerm::ORDER.map(|t| {
            let picks = t.picks();
            let k: [&Ket; 3] = std::array::from_fn(|j| self.observable(j, picks[j].0).eigenket(picks[j].1));
            tensor3(k[0], k[1], k[2])
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyCertificate {
    pub settings: MeasurementSettings,
    /// Inequality order: the four zero conditions, then the success probability.
    pub probabilities: [f64; 5],
    pub satisfied: bool,
    pub zero_tolerance: f64,
}

impl HardyCertificate {
    pub fn success_probability(&self) -> f64 {
        self.probabilities[4]
    }

    pub fn max_zero_term(&self) -> f64 {
        self.probabilities[..4].iter().copied().fold(0.0, f64::max)
    }

    pub fn bell_value(&self) -> f64 {
        let p = &self.probabilities;
        p[0] + p[1] + p[2] + p[3] - p[4]
    }
}

pub fn verify_hardy<S: ThreeQubitState + ?Sized>(state: &S, settings: &MeasurementSettings, tol: f64) -> HardyCertificate {
    let raw = bell::hardy_probabilities(state, settings);
    let satisfied = raw[..4].iter().all(|&p| p <= tol) && raw[4] > tol;
    HardyCertificate {
        settings: settings.clone(),
        probabilities: raw.map(|p| p.clamp(0.0, 1.0)),
        satisfied,
        zero_tolerance: tol,
    }
}

/// A state satisfying the Hardy conditions for the given settings: the
/// component of the success product ket orthogonal to the four zero-term
/// product kets.
pub fn hardy_state_for_settings(settings: &MeasurementSettings) -> Result<Ket, HardyError> {
    let [z0, z1, z2, z3, target] = settings.product_vectors();
    Ok(orthogonal_complement_pick(&[z0, z1, z2, z3], &target)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessSource {
    /// Closed-form coefficient table; `root` indexes the quadratic root used.
    Table { root: Option<usize> },
    /// Two-qubit Hardy observables in the Schmidt bases of the entangled pair.
    SchmidtLift,
    /// Fixed violating settings for a maximally entangled pair.
    MaximalPair,
    /// Numerical search; `attempt` is the successful multistart index.
    Search { attempt: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub class: StateClass,
    pub settings: MeasurementSettings,
    pub certificate: HardyCertificate,
    pub bell_value: f64,
    pub source: WitnessSource,
    /// Why the closed-form construction was abandoned, when it was.
    pub fallback_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    pub attempts: usize,
    pub seed: u64,
    pub zero_tol: f64,
    pub window_tol: f64,
    /// Success probability above which the objective stops rewarding it.
    pub cap: f64,
    pub mu: f64,
    /// Stage over all twelve Bloch angles.
    pub coarse: NelderMead,
    /// Stage over the three `Û` kets, with each `D̂` solved in closed form.
    pub polish: NelderMead,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            attempts: 64,
            seed: 0,
            zero_tol: ZERO_TOL,
            window_tol: WINDOW_TOL,
            cap: 1e-3,
            mu: 1.0,
            coarse: NelderMead { max_evals: 3_000, ftol: 1e-12, initial_step: 0.5, restarts: 0 },
            polish: NelderMead { max_evals: 12_000, ftol: 1e-20, initial_step: 0.3, restarts: 2 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub settings: MeasurementSettings,
    pub certificate: HardyCertificate,
    pub attempt: usize,
}

const PENALTY: f64 = 10.0;

fn hardy_objective(psi: &Ket, settings: &MeasurementSettings, opts: &SearchOptions) -> f64 {
    let mut penalty = 0.0;
    if settings.window_violation(opts.window_tol).is_some() {
        penalty = PENALTY;
    }
    let p = bell::hardy_probabilities(psi, settings);
    p[0] + p[1] + p[2] + p[3] - opts.mu * p[4].min(opts.cap) + penalty
}

/// `w_j = ⟨U_k U_l|ψ⟩` on the two other qubits; `D̂_j`'s +1 ket must be
/// orthogonal to it for the zero term with `D_j = +1` to vanish, and the
/// all-`D = −1` term then reduces to `⟨w₁ w₂ w₃|ψ⟩`.
fn partial_contraction(psi: &Ket, kets: [&Ket; 3], open: usize) -> Ket {
    let amps = psi.amplitudes();
    let mut w = [Complex::new(0.0, 0.0); 2];
    for (idx, amp) in amps.iter().enumerate() {
        let bits = [idx >> 2 & 1, idx >> 1 & 1, idx & 1];
        let mut coeff = *amp;
        for q in 0..3 {
            if q != open {
                coeff *= kets[q].amplitude(bits[q]).conj();
            }
        }
        w[bits[open]] += coeff;
    }
    Ket::qubit(w[0], w[1])
}

fn settings_from_u(psi: &Ket, u: [DichotomicObservable; 3]) -> Option<MeasurementSettings> {
    let kets = [u[0].plus(), u[1].plus(), u[2].plus()];
    let mut d = Vec::with_capacity(3);
    for q in 0..3 {
        let w = partial_contraction(psi, kets, q);
        if w.norm() < 1e-12 {
            return None;
        }
        d.push(DichotomicObservable::new(&w.qubit_perp()).ok()?);
    }
    let [d0, d1, d2]: [DichotomicObservable; 3] = d.try_into().ok()?;
    let [u0, u1, u2] = u;
    Some(MeasurementSettings::new_unchecked([
        ObservablePair::new(u0, d0),
        ObservablePair::new(u1, d1),
        ObservablePair::new(u2, d2),
    ]))
}

fn u_from_angles(x: &[f64]) -> [DichotomicObservable; 3] {
    std::array::from_fn(|j| DichotomicObservable::from_bloch(x[2 * j], x[2 * j + 1]))
}

/// Multistart numerical search for settings satisfying the Hardy
/// conditions on `psi`.
///
/// Each attempt starts from seeded random Bloch angles, descends on
/// `Σ zero terms − μ·min(P₅, cap)` over all twelve angles, then polishes
/// the three `Û` kets with every `D̂` solved in closed form so three of the
/// zero terms vanish identically. Attempts are tried in index order and the
/// first certified one is returned.
pub fn search_hardy_observables(psi: &Ket, opts: &SearchOptions) -> Result<SearchHit, HardyError> {
    if psi.dim() != 8 {
        return Err(LinalgError::DimensionMismatch { left: 8, right: psi.dim() }.into());
    }
    psi.ensure_normalized()?;
    for attempt in 0..opts.attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(attempt as u64);
        let start = BlochAngles::random(&mut rng);

        let coarse = opts.coarse.minimize(|x| hardy_objective(psi, &BlochAngles::from_slice(x).to_settings(), opts), start.as_slice());
        let coarse_angles = coarse.x;
        let u0: Vec<f64> = (0..3).flat_map(|j| [coarse_angles[4 * j], coarse_angles[4 * j + 1]]).collect();

        let reduced = |x: &[f64]| match settings_from_u(psi, u_from_angles(x)) {
            Some(s) => hardy_objective(psi, &s, opts),
            None => PENALTY,
        };
        let polished = opts.polish.minimize(reduced, &u0);
        let Some(settings) = settings_from_u(psi, u_from_angles(&polished.x)) else {
            continue;
        };
        if settings.window_violation(opts.window_tol).is_some() {
            continue;
        }
        let certificate = verify_hardy(psi, &settings, opts.zero_tol);
        if certificate.satisfied {
            return Ok(SearchHit { settings, certificate, attempt });
        }
    }
    Err(HardyError::NotFound { attempts: opts.attempts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructOptions {
    /// `eps` for classification checks and Schmidt degeneracy.
    pub eps: f64,
    pub window_tol: f64,
    /// Zero tolerance the self-validation certificate is checked at.
    pub zero_tol: f64,
    pub search: SearchOptions,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        Self { eps: 1e-9, window_tol: WINDOW_TOL, zero_tol: 1e-9, search: SearchOptions::default() }
    }
}

fn require_class(s: &CanonicalState, cls: StateClass, major: Major, eps: f64) -> Result<(), HardyError> {
    if cls.major() != major {
        return Err(HardyError::WrongClass { expected: format!("{major:?}"), actual: cls });
    }
    let actual = classify_with(s, &ClassifyOptions { eps, ..Default::default() })?;
    if actual != cls {
        return Err(HardyError::WrongClass { expected: cls.label(), actual });
    }
    Ok(())
}

/// Roots of `a z² + b z + c` over the complex numbers.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> [Complex; 2] {
    let disc = Complex::new(b * b - 4.0 * a * c, 0.0).sqrt();
    let b = Complex::new(b, 0.0);
    // choose the sign that avoids cancellation
    let q = if (b + disc).norm() >= (b - disc).norm() { -(b + disc) * 0.5 } else { -(b - disc) * 0.5 };
    if q.norm() == 0.0 {
        return [Complex::new(0.0, 0.0); 2];
    }
    [q / a, Complex::new(c, 0.0) / q]
}

/// Coefficient rows `[α_j, β_j, γ_j, δ_j]` for each qubit, one candidate per
/// quadratic root where the row needs one.
pub fn table_coefficients(s: &CanonicalState, cls: StateClass, eps: f64) -> Vec<[[Complex; 4]; 3]> {
    use StateClass::*;
    let [l0, l1, l2, l3, l4] = s.lambda();
    let phi = s.effective_phi(eps);
    let r = |x: f64| Complex::new(x, 0.0);
    let e = Complex::from_polar(1.0, phi);
    let em = e.conj();
    let i = Complex::new(0.0, 1.0);
    let (zero, one) = (r(0.0), r(1.0));
    match cls {
        D1 | D2 | D4 | D5 => vec![[
            [r(l1), -l0 * e, zero, one],
            [one, zero, l2 * l3 * e - l1 * l4, r(l1 * l2)],
            [l2 * e, r(-l1), one, zero],
        ]],
        D3 => {
            let tau = l0 * l0 * l3 * (l1 + l2);
            let eps3 = l0 * l0 * l1 * (l1 + l2) + (1.0 - l0 * l0);
            vec![[
                [zero, one, r(l0 * l1), r(1.0 - l0 * l0)],
                [r(l1 * tau - l3 * eps3), r(l3 * tau + l1 * eps3), r(l3), r(-l1)],
                [r(l1 + l2), r(l2 - l1), r(l2), r(-l1)],
            ]]
        }
        D6 => vec![[
            [zero, one, l1 * em * (l4 * l4 - l0 * l0), r(-l0 * (1.0 - l0 * l0))],
            [r(l3 * (1.0 - l0 * l0)), -l1 * em * (1.0 - l4 * l4), r(l3), -l1 * em],
            [one, zero, r(l4 * (1.0 - l4 * l4)), r(l3 * (l4 * l4 - l0 * l0))],
        ]],
        D7 => vec![[[l1 * em, r(-l0), zero, one], [r(l3), -l1 * em, one, zero], [one, zero, r(l0), r(-l3)]]],
        D8 => quadratic_roots(1.0 - l4 * l4, l4 * (1.0 - l0 * l0), l4.powi(4))
            .into_iter()
            .map(|z| {
                [
                    [zero, one, l1 * em * (z + l4), -l0 * z],
                    [one, one, r(l4), -z],
                    [z, l1 * em, r(l4), -l1 * em],
                ]
            })
            .collect(),
        D9 | D10 => vec![[
            [r(l2 * (l2 * l2 + l4 * l4) + l4 * (1.0 - l0 * l0)), r(-l0 * l3 * l4), one, zero],
            [one, one, r(l4), r(-l2)],
            [zero, one, r(l3 * l4), r(l2 * l2 + l4 * l4)],
        ]],
        D11 => vec![[
            [zero, one, r(l2 * l2 * l3), r(l0 * (l2 * l2 + l3 * l3))],
            [r(l2 * l2 + l3 * l3), r(-l2 * l2), one, zero],
            [one, zero, r(l3), r(l2)],
        ]],
        D12 => quadratic_roots(l2.powi(4), l2 * l3, l3.powi(4))
            .into_iter()
            .map(|z| {
                [
                    [zero, one, z * (l0 * l2 * l3), z * l2.powi(3) + l3.powi(3)],
                    [one, one, r(l3), -z * l2],
                    [one, z, r(l2), r(-l3)],
                ]
            })
            .collect(),
        D13 => quadratic_roots(l0.powi(4), l0 * l2 * (l0 * l0 + l2 * l2), l2 * l2 * (l2 * l2 + l4 * l4))
            .into_iter()
            .map(|z| {
                [
                    [one, one, r(l2), -z * l0],
                    [one, zero, r(l4), -(z * l0 + l2)],
                    [z, one, r(l2), r(-l0)],
                ]
            })
            .collect(),
        D14 => vec![[
            [one, one, i * l0, r(-l4)],
            [one, one, i * l0, r(-l4)],
            [r(l4 * l4), i * (l0 * l0), r(l4), r(-l0)],
        ]],
        _ => Vec::new(),
    }
}

fn fallback(
    class: StateClass,
    psi: &Ket,
    reason: String,
    opts: &ConstructOptions,
) -> Result<Witness, HardyError> {
    log::warn!("{class}: closed-form construction rejected ({reason}); running numerical search");
    let mut search = opts.search.clone();
    search.zero_tol = opts.zero_tol;
    search.window_tol = opts.window_tol;
    match search_hardy_observables(psi, &search) {
        Ok(hit) => Ok(Witness {
            class,
            bell_value: hit.certificate.bell_value(),
            settings: hit.settings,
            certificate: hit.certificate,
            source: WitnessSource::Search { attempt: hit.attempt },
            fallback_reason: Some(reason),
        }),
        Err(e) => Err(HardyError::ConstructionFailure { class, diagnostics: format!("{reason}; search: {e}") }),
    }
}

/// Settings for a genuinely tripartite entangled state from its class's
/// coefficient row.
pub fn construct_d(s: &CanonicalState, cls: StateClass, opts: &ConstructOptions) -> Result<Witness, HardyError> {
    require_class(s, cls, Major::D, opts.eps)?;
    let psi = s.to_ket();
    let candidates = table_coefficients(s, cls, opts.eps);
    let multi = candidates.len() > 1;
    let mut best: Option<(usize, MeasurementSettings, HardyCertificate)> = None;
    let mut problems = Vec::new();
    for (idx, rows) in candidates.into_iter().enumerate() {
        let settings = match MeasurementSettings::from_coefficients(rows, opts.window_tol) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("candidate {idx}: {e}"));
                continue;
            }
        };
        let cert = verify_hardy(&psi, &settings, opts.zero_tol);
        if !cert.satisfied {
            problems.push(format!(
                "candidate {idx}: probabilities {:?} fail the Hardy conditions at tolerance {:e}",
                cert.probabilities, opts.zero_tol
            ));
            continue;
        }
        let better = best.as_ref().is_none_or(|(_, _, b)| cert.success_probability() > b.success_probability());
        if better {
            best = Some((idx, settings, cert));
        }
    }
    match best {
        Some((idx, settings, certificate)) => Ok(Witness {
            class: cls,
            bell_value: certificate.bell_value(),
            settings,
            certificate,
            source: WitnessSource::Table { root: multi.then_some(idx) },
            fallback_reason: None,
        }),
        None => fallback(cls, &psi, problems.join("; "), opts),
    }
}

/// Which qubit is in a product with the other two, for classes B and C.
pub fn bipartition(cls: StateClass) -> Option<(usize, [usize; 2])> {
    use StateClass::*;
    match cls {
        B1 | B3 | C1 => Some((1, [0, 2])),
        B2 | B4 | C2 => Some((2, [0, 1])),
        B5 | C3 => Some((0, [1, 2])),
        _ => None,
    }
}

/// Splits `psi = |χ⟩_q ⊗ |η⟩_pair`. `η` is indexed `2a + b` with `a` the
/// lower-numbered pair qubit.
pub fn split_product_qubit(psi: &Ket, qubit: usize, pair: [usize; 2]) -> Result<(Ket, Ket), HardyError> {
    let amps = psi.amplitudes();
    let bit = |idx: usize, q: usize| idx >> (2 - q) & 1;
    // reduced density matrix of the product qubit
    let mut rho = [[Complex::new(0.0, 0.0); 2]; 2];
    for i in 0..8 {
        for j in 0..8 {
            if bit(i, pair[0]) == bit(j, pair[0]) && bit(i, pair[1]) == bit(j, pair[1]) {
                rho[bit(i, qubit)][bit(j, qubit)] += amps[i] * amps[j].conj();
            }
        }
    }
    let (_, vecs) = hermitian_eigen2(rho[0][0].re, rho[0][1], rho[1][1].re);
    let chi = vecs[0].clone();
    let mut eta = [Complex::new(0.0, 0.0); 4];
    for (idx, amp) in amps.iter().enumerate() {
        let slot = 2 * bit(idx, pair[0]) + bit(idx, pair[1]);
        eta[slot] += chi.amplitude(bit(idx, qubit)).conj() * amp;
    }
    let eta = Ket::new(eta.to_vec())?;
    if eta.norm_sqr() < 1.0 - 1e-9 {
        return Err(HardyError::NotBiseparable { qubit });
    }
    Ok((chi, eta.normalized()?))
}

fn product_qubit_pair(chi: &Ket) -> ObservablePair {
    let perp = chi.qubit_perp();
    let u = (chi + &perp).scale(Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    ObservablePair::new(DichotomicObservable::new(&u).unwrap(), DichotomicObservable::new(&perp).unwrap())
}

fn assemble(qubit: usize, pair: [usize; 2], product: ObservablePair, first: ObservablePair, second: ObservablePair) -> [ObservablePair; 3] {
    let mut slots: [Option<ObservablePair>; 3] = [None, None, None];
    slots[qubit] = Some(product);
    slots[pair[0]] = Some(first);
    slots[pair[1]] = Some(second);
    slots.map(|p| p.expect("all three qubits assigned"))
}

/// Two-qubit Hardy observables on a pair with Schmidt coefficients `a > b`,
/// as coefficients in the pair's Schmidt bases:
/// `D₁ ∝ (√a, −√b)`, `D₂ ∝ (√a, √b)`, `U₁ ∝ (b^{3/2}, −a^{3/2})`, `U₂ ∝ (b^{3/2}, a^{3/2})`.
pub fn two_qubit_hardy_coefficients(a: f64, b: f64) -> [[f64; 2]; 4] {
    [
        [b.powf(1.5), -a.powf(1.5)],
        [a.sqrt(), -b.sqrt()],
        [b.powf(1.5), a.powf(1.5)],
        [a.sqrt(), b.sqrt()],
    ]
}

/// Hardy success probability `P(U₁=+1, U₂=+1)` of the two-qubit construction.
pub fn two_qubit_hardy_probability(a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    a2 * b2 * (a2 - b2).powi(2) / (a.powi(3) + b.powi(3)).powi(2)
}

/// Settings for a state with non-maximal entanglement between two qubits
/// and the third in a product.
pub fn construct_b(s: &CanonicalState, cls: StateClass, opts: &ConstructOptions) -> Result<Witness, HardyError> {
    require_class(s, cls, Major::B, opts.eps)?;
    let psi = s.to_ket();
    let (qubit, pair) = bipartition(cls).expect("class B has a bipartition");
    let (chi, eta) = split_product_qubit(&psi, qubit, pair)?;
    let sd = schmidt2q(&eta)?;
    let (a, b) = sd.coefficients;
    if a - b < opts.eps {
        return Err(HardyError::DegenerateSchmidt { class: cls });
    }
    if b < opts.eps {
        return Err(HardyError::ConstructionFailure { class: cls, diagnostics: "entangled pair is a product".into() });
    }
    let r = |x: f64| Complex::new(x, 0.0);
    let [u1, d1, u2, d2] = two_qubit_hardy_coefficients(a, b);
    let first = ObservablePair::new(
        DichotomicObservable::new(&sd.from_schmidt_a(r(u1[0]), r(u1[1])))?,
        DichotomicObservable::new(&sd.from_schmidt_a(r(d1[0]), r(d1[1])))?,
    );
    let second = ObservablePair::new(
        DichotomicObservable::new(&sd.from_schmidt_b(r(u2[0]), r(u2[1])))?,
        DichotomicObservable::new(&sd.from_schmidt_b(r(d2[0]), r(d2[1])))?,
    );
    let pairs = assemble(qubit, pair, product_qubit_pair(&chi), first, second);
    let settings = match MeasurementSettings::new(pairs, opts.window_tol) {
        Ok(s) => s,
        Err(e) => return fallback(cls, &psi, e.to_string(), opts),
    };
    let certificate = verify_hardy(&psi, &settings, opts.zero_tol);
    if !certificate.satisfied {
        let reason = format!("Schmidt-lift probabilities {:?} fail the Hardy conditions", certificate.probabilities);
        return fallback(cls, &psi, reason, opts);
    }
    Ok(Witness {
        class: cls,
        bell_value: certificate.bell_value(),
        settings,
        certificate,
        source: WitnessSource::SchmidtLift,
        fallback_reason: None,
    })
}

/// `|Û₁=+1⟩ = √0.96|0⟩ + 0.2|1⟩`, `|D̂₁=+1⟩ = |0⟩`, `|Û₂=+1⟩ = 0.2|0⟩ + √0.96|1⟩`,
/// `|D̂₂=+1⟩ = |1⟩` for a pair in `(|00⟩ + |11⟩)/√2`.
pub const MAXIMAL_PAIR_COEFFICIENTS: [[f64; 2]; 4] = [[0.979_795_897_113_271_2, 0.2], [1.0, 0.0], [0.2, 0.979_795_897_113_271_2], [0.0, 1.0]];

/// Settings violating the Bell-type inequality for a maximally entangled
/// pair times a product qubit, where the Hardy conditions cannot hold.
pub fn construct_c(s: &CanonicalState, cls: StateClass, opts: &ConstructOptions) -> Result<Witness, HardyError> {
    require_class(s, cls, Major::C, opts.eps)?;
    let psi = s.to_ket();
    let (qubit, pair) = bipartition(cls).expect("class C has a bipartition");
    let (chi, eta) = split_product_qubit(&psi, qubit, pair)?;
    let sd = schmidt2q(&eta)?;
    let r = |x: f64| Complex::new(x, 0.0);
    let [u1, d1, u2, d2] = MAXIMAL_PAIR_COEFFICIENTS;
    let first = ObservablePair::new(
        DichotomicObservable::new(&sd.from_schmidt_a(r(u1[0]), r(u1[1])))?,
        DichotomicObservable::new(&sd.from_schmidt_a(r(d1[0]), r(d1[1])))?,
    );
    let second = ObservablePair::new(
        DichotomicObservable::new(&sd.from_schmidt_b(r(u2[0]), r(u2[1])))?,
        DichotomicObservable::new(&sd.from_schmidt_b(r(d2[0]), r(d2[1])))?,
    );
    let settings = MeasurementSettings::new(assemble(qubit, pair, product_qubit_pair(&chi), first, second), opts.window_tol)?;
    let certificate = verify_hardy(&psi, &settings, opts.zero_tol);
    if certificate.satisfied {
        return Err(HardyError::UnexpectedCertificate { class: cls });
    }
    let bell_value = bell::bell_expression(&psi, &settings);
    if bell_value >= 0.0 {
        return Err(HardyError::ConstructionFailure {
            class: cls,
            diagnostics: format!("maximal-pair settings give Bell value {bell_value}"),
        });
    }
    Ok(Witness { class: cls, settings, certificate, bell_value, source: WitnessSource::MaximalPair, fallback_reason: None })
}

/// Classifies `s` and dispatches to the construction for its class.
pub fn construct_witness(s: &CanonicalState, opts: &ConstructOptions) -> Result<Witness, HardyError> {
    let cls = classify_with(s, &ClassifyOptions { eps: opts.eps, ..Default::default() })?;
    construct_for_class(s, cls, opts)
}

pub fn construct_for_class(s: &CanonicalState, cls: StateClass, opts: &ConstructOptions) -> Result<Witness, HardyError> {
    match cls.major() {
        Major::A => Err(HardyError::ProductState(cls)),
        Major::B => construct_b(s, cls, opts),
        Major::C => construct_c(s, cls, opts),
        Major::D => construct_d(s, cls, opts),
    }
}

/// Random settings with every pair inside the window.
pub fn random_settings<R: Rng + ?Sized>(rng: &mut R, window_tol: f64) -> MeasurementSettings {
    loop {
        let s = BlochAngles::random(rng).to_settings();
        if s.window_violation(window_tol).is_none() {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::draws;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn cs(lambda: [f64; 5], phi: f64) -> CanonicalState {
        CanonicalState::new(lambda, phi).unwrap()
    }

    fn ghz() -> CanonicalState {
        cs([FRAC_1_SQRT_2, 0.0, 0.0, 0.0, FRAC_1_SQRT_2], 0.0)
    }

    fn w_canonical() -> CanonicalState {
        let r = 1.0 / 3f64.sqrt();
        cs([r, 0.0, r, r, 0.0], 0.0)
    }

    #[test]
    fn coefficient_pairs() {
        let p = observable_from_coefficients(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), WINDOW_TOL).unwrap();
        assert!(p.u.plus().max_abs_diff(&Ket::zero()) < 1e-15);
        assert!((p.d.plus().amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((p.overlap() - FRAC_1_SQRT_2).abs() < 1e-15);

        let err = observable_from_coefficients(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), WINDOW_TOL);
        assert!(matches!(err, Err(HardyError::WindowViolation { overlap, .. }) if overlap == 0.0));

        let zero = observable_from_coefficients(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), WINDOW_TOL);
        assert_eq!(zero, Err(HardyError::ZeroVector));
    }

    #[test]
    fn ghz_row_pair_overlap() {
        // α₁ = 1, β₁ = 1, γ₁ = i/√2, δ₁ = −1/√2: direct inner product of the
        // normalized kets (1, 1)/√2 and (i, −1)/√2 is (−i − 1)/2... in modulus 1/√2.
        let h = FRAC_1_SQRT_2;
        let p = observable_from_coefficients(c(1.0, 0.0), c(1.0, 0.0), c(0.0, h), c(-h, 0.0), WINDOW_TOL).unwrap();
        let u = [c(h, 0.0), c(h, 0.0)];
        let d = [c(0.0, h), c(-h, 0.0)];
        let direct = (u[0].conj() * d[0] + u[1].conj() * d[1]).norm();
        assert!((p.overlap() - direct).abs() < 1e-15);
        assert!((direct - h).abs() < 1e-15);
    }

    #[test]
    fn ghz_table_witness() {
        let w = construct_d(&ghz(), StateClass::D14, &ConstructOptions::default()).unwrap();
        assert_eq!(w.source, WitnessSource::Table { root: None });
        assert!(w.certificate.satisfied);
        assert!(w.certificate.max_zero_term() <= 1e-10);
        assert!(w.certificate.success_probability() > 0.0);
        assert!((w.bell_value + w.certificate.success_probability()).abs() < 1e-12);
    }

    #[test]
    fn w_state_uses_quadratic_root() {
        let w = construct_d(&w_canonical(), StateClass::D12, &ConstructOptions::default()).unwrap();
        assert!(matches!(w.source, WitnessSource::Table { root: Some(_) }));
        assert!(w.certificate.satisfied);
    }

    #[test]
    fn quadratic_roots_solve() {
        for (a, b, c) in [(1.0, 0.5, 0.2), (0.3, 2.0, 0.1), (2.0, -1.0, -3.0)] {
            for z in quadratic_roots(a, b, c) {
                assert!((z * z * a + z * b + c).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_class_rejected() {
        let err = construct_d(&ghz(), StateClass::D12, &ConstructOptions::default());
        assert!(matches!(err, Err(HardyError::WrongClass { actual: StateClass::D14, .. })));
        let err = construct_b(&ghz(), StateClass::D14, &ConstructOptions::default());
        assert!(matches!(err, Err(HardyError::WrongClass { .. })));
    }

    #[test]
    fn product_state_has_no_witness() {
        let s = cs([1.0, 0.0, 0.0, 0.0, 0.0], 0.0);
        assert_eq!(construct_witness(&s, &ConstructOptions::default()), Err(HardyError::ProductState(StateClass::A2)));
    }

    #[test]
    fn two_qubit_recipe_zeroes_constraints() {
        // Oracle: direct evaluation of the three two-qubit zero conditions on
        // a|00⟩ + b|11⟩ in the computational basis.
        for &(a2, _) in &[(0.8, 0.2), (0.6, 0.4), (0.95, 0.05)] {
            let a: f64 = f64::sqrt(a2);
            let b: f64 = (1.0 - a2).sqrt();
            let [u1, d1, u2, d2] = two_qubit_hardy_coefficients(a, b);
            let n = |v: [f64; 2]| {
                let l = (v[0] * v[0] + v[1] * v[1]).sqrt();
                [v[0] / l, v[1] / l]
            };
            let amp = |x: [f64; 2], y: [f64; 2]| a * x[0] * y[0] + b * x[1] * y[1];
            let perp = |v: [f64; 2]| [-v[1], v[0]];
            let (u1, d1, u2, d2) = (n(u1), n(d1), n(u2), n(d2));
            assert!(amp(d1, u2).abs() < 1e-15);
            assert!(amp(u1, d2).abs() < 1e-15);
            assert!(amp(perp(d1), perp(d2)).abs() < 1e-15);
            assert!((amp(u1, u2).powi(2) - two_qubit_hardy_probability(a, b)).abs() < 1e-15);
        }
        assert!((two_qubit_hardy_probability(0.8f64.sqrt(), 0.2f64.sqrt()) - 0.08 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn b3_example() {
        let s = cs([0.8f64.sqrt(), 0.0, 0.2f64.sqrt(), 0.0, 0.0], 0.0);
        let w = construct_b(&s, StateClass::B3, &ConstructOptions::default()).unwrap();
        assert_eq!(w.source, WitnessSource::SchmidtLift);
        assert!(w.certificate.satisfied);
        assert!(w.certificate.max_zero_term() <= 1e-12);
        // success probability carries |⟨U₃=+1|χ⟩|² = 1/2 on the product qubit
        let pair_p = two_qubit_hardy_probability(0.8f64.sqrt(), 0.2f64.sqrt());
        assert!((pair_p - 0.088_888_888_888_888_9).abs() < 1e-12);
        assert!((w.certificate.success_probability() - 0.5 * pair_p).abs() < 1e-12);
    }

    #[test]
    fn b5_example() {
        let s = CanonicalState::normalized([0.0, 0.8, 0.3, 0.2, 0.5], 0.7).unwrap().0;
        assert_eq!(crate::states::classify(&s).unwrap(), StateClass::B5);
        let w = construct_b(&s, StateClass::B5, &ConstructOptions::default()).unwrap();
        assert!(w.certificate.satisfied);
        let (chi, _) = split_product_qubit(&s.to_ket(), 0, [1, 2]).unwrap();
        assert!(chi.fidelity(&Ket::one()) > 1.0 - 1e-12);
    }

    /// Direct contraction over the eight basis amplitudes, independent of
    /// the settings plumbing.
    fn contract(psi: &[f64; 8], k: [[f64; 2]; 3]) -> f64 {
        let mut acc = 0.0;
        for idx in 0..8 {
            acc += k[0][idx >> 2 & 1] * k[1][idx >> 1 & 1] * k[2][idx & 1] * psi[idx];
        }
        acc * acc
    }

    #[test]
    fn maximal_pair_example_values() {
        let h = FRAC_1_SQRT_2;
        let psi = [h, 0.0, 0.0, 0.0, 0.0, 0.0, h, 0.0];
        let s96 = 0.96f64.sqrt();
        let (u1, d1, u2, d2, u3, d3) = ([s96, 0.2], [1.0, 0.0], [0.2, s96], [0.0, 1.0], [h, h], [0.0, 1.0]);
        let minus = |v: [f64; 2]| [-v[1], v[0]];
        let oracle = [
            contract(&psi, [minus(d1), minus(d2), minus(d3)]),
            contract(&psi, [d1, u2, u3]),
            contract(&psi, [u1, d2, u3]),
            contract(&psi, [u1, u2, d3]),
            contract(&psi, [u1, u2, u3]),
        ];
        let expected = [0.0, 0.01, 0.01, 0.0, 0.0384];
        for (o, e) in oracle.iter().zip(expected) {
            assert!((o - e).abs() < 1e-15);
        }

        let s = cs([h, 0.0, 0.0, h, 0.0], 0.0);
        let w = construct_c(&s, StateClass::C2, &ConstructOptions::default()).unwrap();
        for (p, e) in w.certificate.probabilities.iter().zip(expected) {
            assert!((p - e).abs() < 1e-12, "{:?}", w.certificate.probabilities);
        }
        assert!((w.bell_value + 0.0184).abs() < 1e-12);
        assert!(!w.certificate.satisfied);
    }

    #[test]
    fn all_maximal_pair_classes_violate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for cls in [StateClass::C1, StateClass::C2, StateClass::C3] {
            for _ in 0..20 {
                let s = draws::in_class(cls, &mut rng);
                let w = construct_c(&s, cls, &ConstructOptions::default()).unwrap();
                assert!((w.bell_value + 0.0184).abs() < 1e-12);
                assert!(!w.certificate.satisfied);
            }
        }
    }

    #[test]
    fn forward_state_from_settings() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let settings = random_settings(&mut rng, 1e-3);
            let psi = hardy_state_for_settings(&settings).unwrap();
            let cert = verify_hardy(&psi, &settings, 1e-10);
            assert!(cert.satisfied, "{:?}", cert.probabilities);
        }
    }

    #[test]
    fn white_noise_never_certifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = crate::states::mix_with_white_noise(&ghz().to_ket(), 0.0).unwrap();
        let settings = random_settings(&mut rng, WINDOW_TOL);
        let cert = verify_hardy(&rho, &settings, ZERO_TOL);
        assert!(!cert.satisfied);
        assert!(cert.probabilities.iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn search_finds_ghz_witness() {
        let hit = search_hardy_observables(&ghz().to_ket(), &SearchOptions { attempts: 8, ..Default::default() }).unwrap();
        assert!(hit.certificate.satisfied);
        let again = search_hardy_observables(&ghz().to_ket(), &SearchOptions { attempts: 8, ..Default::default() }).unwrap();
        assert_eq!(hit, again);
    }

    #[test]
    fn search_rejects_product_state() {
        let psi = Ket::basis(8, 0).unwrap();
        let err = search_hardy_observables(&psi, &SearchOptions { attempts: 5, ..Default::default() });
        assert_eq!(err, Err(HardyError::NotFound { attempts: 5 }));
    }

    #[test]
    fn partial_contraction_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = draws::uniform(&mut rng).to_ket();
        let s = random_settings(&mut rng, 1e-3);
        let kets = [s.pair(0).u.plus(), s.pair(1).u.plus(), s.pair(2).u.plus()];
        for open in 0..3 {
            let w = partial_contraction(&psi, kets, open);
            for x in 0..2 {
                let mut ks = kets.map(|k| k.clone());
                ks[open] = Ket::basis(2, x).unwrap();
                let direct = tensor3(&ks[0], &ks[1], &ks[2]).inner(&psi);
                assert!((w.amplitude(x) - direct).norm() < 1e-14);
            }
        }
    }
}
