//! Bell-value minimization over measurement settings and white-noise
//! threshold visibility.
//!
//! With `ρ(v) = v|ψ⟩⟨ψ| + (1 − v)I/8` every joint probability is affine in
//! `v`, and each of the five terms equals `1/8` on the identity part, so
//! `B(ρ(v)) = v·B(ψ) + (1 − v)·3/8`. The smallest `v` that still gives
//! `B < 0` is therefore `(3/8)/(3/8 − B(ψ))` at fixed settings, minimized
//! by the settings that minimize `B(ψ)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bell::{self, ThreeQubitState, WHITE_NOISE_BELL_VALUE};
use crate::hardy::{self, ConstructOptions, DichotomicObservable, MeasurementSettings, ObservablePair, WINDOW_TOL};
use crate::linalg::Ket;
use crate::simplex::NelderMead;
use crate::states::{self, CanonicalState, Major, StateClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VisibilityError {
    #[error("Bell value {0} is not negative; threshold visibility is undefined")]
    NoViolation(f64),
    #[error("grid needs at least one step and finite bounds")]
    BadGrid,
    #[error(transparent)]
    State(#[from] states::StateError),
}

/// `(θ, φ)` for the +1 eigenkets of `U₁, D₁, U₂, D₂, U₃, D₃`, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles(pub [f64; 12]);

impl BlochAngles {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        // uniform on the sphere: cos θ uniform
        let mut a = [0.0; 12];
        for k in 0..6 {
            a[2 * k] = rng.gen_range(-1.0f64..1.0).acos();
            a[2 * k + 1] = rng.gen_range(0.0..2.0 * PI);
        }
        Self(a)
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self(x.try_into().expect("twelve angles"))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Settings without the window check; the optimizer penalizes instead.
    pub fn to_settings(&self) -> MeasurementSettings {
        let a = &self.0;
        let obs = |k: usize| DichotomicObservable::from_bloch(a[2 * k], a[2 * k + 1]);
        MeasurementSettings::new_unchecked([
            ObservablePair::new(obs(0), obs(1)),
            ObservablePair::new(obs(2), obs(3)),
            ObservablePair::new(obs(4), obs(5)),
        ])
    }

    pub fn from_settings(settings: &MeasurementSettings) -> Self {
        let mut a = [0.0; 12];
        for j in 0..3 {
            let p = settings.pair(j);
            let (tu, pu) = p.u.bloch_angles();
            let (td, pd) = p.d.bloch_angles();
            a[4 * j..4 * j + 4].copy_from_slice(&[tu, pu, td, pd]);
        }
        Self(a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_value: f64,
    pub best_settings: MeasurementSettings,
    /// `None` when no violation was found.
    pub threshold_visibility: Option<f64>,
    pub starts: usize,
    /// Whether the start that produced the best value met the tolerance.
    pub converged: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub starts: usize,
    pub seed: u64,
    /// Objective spread at which a simplex is declared converged.
    pub tol: f64,
    pub window_tol: f64,
    /// Extra starting points tried before the random ones, e.g. a witness.
    pub warm_starts: Vec<MeasurementSettings>,
    pub max_evals: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { starts: 64, seed: 0, tol: 1e-10, window_tol: WINDOW_TOL, warm_starts: Vec::new(), max_evals: 20_000 }
    }
}

const PENALTY: f64 = 10.0;

/// `B` at the given angles, plus a penalty outside the non-commutation
/// window.
pub fn penalized_bell<S: ThreeQubitState + ?Sized>(state: &S, angles: &BlochAngles, window_tol: f64) -> f64 {
    let settings = angles.to_settings();
    let b = bell::bell_expression(state, &settings);
    if settings.window_violation(window_tol).is_some() {
        b + PENALTY
    } else {
        b
    }
}

struct Run {
    value: f64,
    angles: BlochAngles,
    converged: bool,
}

/// Multistart simplex minimization of `B` over the twelve Bloch angles.
///
/// Start `k` draws from its own ChaCha stream, so the result for `n`
/// starts is the best over a prefix of the runs for any `m > n` starts.
pub fn minimize_bell<S: ThreeQubitState + Sync + ?Sized>(state: &S, opts: &MinimizeOptions) -> OptimizationResult {
    let nm = NelderMead { max_evals: opts.max_evals, ftol: opts.tol, initial_step: 0.5, restarts: 2 };
    let mut starts: Vec<BlochAngles> = opts.warm_starts.iter().map(BlochAngles::from_settings).collect();
    starts.extend((0..opts.starts).map(|k| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        BlochAngles::random(&mut rng)
    }));

    let runs: Vec<Run> = starts
        .par_iter()
        .map(|x0| {
            let m = nm.minimize(|x| penalized_bell(state, &BlochAngles::from_slice(x), opts.window_tol), x0.as_slice());
            Run { value: m.value, angles: BlochAngles::from_slice(&m.x), converged: m.converged }
        })
        .collect();

    // first index wins ties, keeping the reduction independent of scheduling
    let best = runs.iter().reduce(|a, b| if b.value < a.value { b } else { a }).expect("at least one start");
    let best_settings = best.angles.to_settings();
    let best_value = bell::bell_expression(state, &best_settings);
    OptimizationResult {
        best_value,
        threshold_visibility: threshold_visibility(best_value).ok(),
        best_settings,
        starts: opts.starts,
        converged: best.converged,
        seed: opts.seed,
    }
}

/// `(3/8)/(3/8 − B)` for `B < 0`.
pub fn threshold_visibility(best_value: f64) -> Result<f64, VisibilityError> {
    if !(best_value < 0.0) {
        return Err(VisibilityError::NoViolation(best_value));
    }
    Ok(WHITE_NOISE_BELL_VALUE / (WHITE_NOISE_BELL_VALUE - best_value))
}

/// Threshold visibility found by bisecting `v ↦ B(ρ(v))` at fixed settings,
/// independent of the closed form.
pub fn threshold_by_bisection(psi: &Ket, settings: &MeasurementSettings) -> Result<f64, VisibilityError> {
    let at = |v: f64| -> Result<f64, VisibilityError> {
        let rho = states::mix_with_white_noise(psi, v)?;
        Ok(bell::bell_expression(&rho, settings))
    };
    let top = at(1.0)?;
    if !(top < 0.0) {
        return Err(VisibilityError::NoViolation(top));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `steps` evenly spaced points from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>, VisibilityError> {
        if self.steps == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(VisibilityError::BadGrid);
        }
        if self.steps == 1 {
            return Ok(vec![self.start]);
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        Ok((0..self.steps).map(|i| if i + 1 == self.steps { self.stop } else { self.start + h * i as f64 }).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub lambda: Option<[f64; 5]>,
    pub phi: Option<f64>,
    pub class: Option<StateClass>,
    /// Bell value at the constructed witness settings.
    pub certificate_b: Option<f64>,
    pub certificate_satisfied: Option<bool>,
    pub optimized_b: Option<f64>,
    pub threshold: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanOptions {
    pub construct: ConstructOptions,
    /// `None` skips the optimizer and reports only the witness.
    pub optimize: Option<MinimizeOptions>,
}

/// Evaluates a one-parameter family on a grid: classification, witness
/// Bell value, and optionally the optimized value and threshold. Errors at a
/// point land in its row and do not stop the scan.
pub fn scan_family<F>(family: F, grid: &GridSpec, opts: &ScanOptions) -> Result<Vec<ScanRow>, VisibilityError>
where
    F: Fn(f64) -> Result<CanonicalState, states::StateError> + Sync,
{
    let points = grid.points()?;
    Ok(points.par_iter().map(|&t| scan_point(&family, t, opts)).collect())
}

fn scan_point<F>(family: &F, t: f64, opts: &ScanOptions) -> ScanRow
where
    F: Fn(f64) -> Result<CanonicalState, states::StateError>,
{
    let mut row = ScanRow {
        t,
        lambda: None,
        phi: None,
        class: None,
        certificate_b: None,
        certificate_satisfied: None,
        optimized_b: None,
        threshold: None,
        error: None,
    };
    let s = match family(t) {
        Ok(s) => s,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.lambda = Some(s.lambda());
    row.phi = Some(s.phi());
    let cls = match states::classify_with(&s, &states::ClassifyOptions { eps: opts.construct.eps, ..Default::default() }) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.class = Some(cls);
    let mut warm = Vec::new();
    if cls.major() != Major::A {
        match hardy::construct_for_class(&s, cls, &opts.construct) {
            Ok(w) => {
                row.certificate_b = Some(w.bell_value);
                row.certificate_satisfied = Some(w.certificate.satisfied);
                warm.push(w.settings);
            }
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    if let Some(mopts) = &opts.optimize {
        let mut mopts = mopts.clone();
        mopts.warm_starts.extend(warm);
        let r = minimize_bell(&s.to_ket(), &mopts);
        row.optimized_b = Some(r.best_value);
        row.threshold = r.threshold_visibility;
    }
    row
}

/// `cos t |000⟩ + sin t |111⟩`.
pub fn ghz_family(t: f64) -> Result<CanonicalState, states::StateError> {
    CanonicalState::new([t.cos().abs(), 0.0, 0.0, 0.0, t.sin().abs()], 0.0)
}

/// `cos t |000⟩ + sin t |101⟩`, a pair with a product qubit; `t = π/4` is
/// the maximally entangled point.
pub fn b3_family(t: f64) -> Result<CanonicalState, states::StateError> {
    CanonicalState::new([t.cos().abs(), 0.0, t.sin().abs(), 0.0, 0.0], 0.0)
}

/// `(|000⟩ + |101⟩ + |110⟩)` weighted toward the W state at `t = 1/√3`.
pub fn w_family(t: f64) -> Result<CanonicalState, states::StateError> {
    let rest = ((1.0 - t * t) / 2.0).max(0.0).sqrt();
    CanonicalState::new([t.abs(), 0.0, rest, rest, 0.0], 0.0)
}
