//! Hardy-type nonlocality for three-qubit pure states: canonical-form
//! classification, per-class witness observables, Bell-value evaluation,
//! local-hidden-variable enumeration, and threshold-visibility optimization.

pub mod bell;
pub mod cli;
pub mod hardy;
pub mod linalg;
pub mod simplex;
pub mod states;
pub mod visibility;

pub use bell::{bell_expression, bell_value, hardy_probabilities, lhv_minimum, BellReport, HardyTerm, Setting, Sign};
pub use hardy::{
    construct_witness, search_hardy_observables, verify_hardy, DichotomicObservable, HardyCertificate, HardyError,
    MeasurementSettings, ObservablePair, Witness,
};
pub use linalg::{Complex, Ket, Operator};
pub use states::{classify, mix_with_white_noise, CanonicalState, StateClass};
pub use visibility::{minimize_bell, threshold_visibility, OptimizationResult};
