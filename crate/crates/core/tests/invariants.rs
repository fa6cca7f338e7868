use hardy_bell::bell;
use hardy_bell::hardy::{self, hardy_state_for_settings, random_settings, verify_hardy, ConstructOptions, Witness};
use hardy_bell::linalg::{Complex, Ket, Operator};
use hardy_bell::states::{draws, CanonicalState, Major, StateClass};
use hardy_bell::visibility::{minimize_bell, BlochAngles, MinimizeOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_unitary<R: Rng>(rng: &mut R) -> Operator {
    let mut g = || Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (a, b) = (g(), g());
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    Operator::from_rows(2, vec![a, -b.conj(), b, a.conj()]).unwrap()
}

fn locally_rotated(psi: &Ket, rng: &mut ChaCha8Rng) -> Ket {
    let u = random_unitary(rng).tensor(&random_unitary(rng)).unwrap().tensor(&random_unitary(rng)).unwrap();
    u.apply(psi)
}

fn ghz() -> Ket {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ket::from_real(&[h, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, h]).unwrap()
}

fn w() -> Ket {
    let r = 1.0 / 3f64.sqrt();
    Ket::from_real(&[0.0, r, r, 0.0, r, 0.0, 0.0, 0.0]).unwrap()
}

#[test]
fn optimum_invariant_under_local_unitaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let opts = MinimizeOptions::default();
    for psi in [ghz(), w()] {
        let base = minimize_bell(&psi, &opts).best_value;
        for _ in 0..3 {
            let rotated = locally_rotated(&psi, &mut rng);
            assert!(rotated.is_normalized(1e-12));
            let b = minimize_bell(&rotated, &opts).best_value;
            assert!((b - base).abs() <= 2e-3, "{b} vs {base}");
        }
    }
}

#[test]
fn optimizer_at_least_matches_witness() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let classes: Vec<StateClass> = StateClass::ALL.into_iter().filter(|c| matches!(c.major(), Major::B | Major::D)).collect();
    for cls in classes {
        let s = draws::in_class(cls, &mut rng);
        let w = hardy::construct_witness(&s, &ConstructOptions::default()).unwrap();
        assert!(w.certificate.satisfied, "{cls}");
        let r = minimize_bell(&s.to_ket(), &MinimizeOptions { starts: 4, warm_starts: vec![w.settings.clone()], ..Default::default() });
        assert!(r.best_value <= -w.certificate.success_probability() + 1e-9, "{cls}: {} vs {:?}", r.best_value, w.certificate);
        let t = r.threshold_visibility.unwrap();
        assert!(t > 0.0 && t < 1.0);
    }
}

#[test]
fn witness_round_trips_through_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for cls in [StateClass::D1, StateClass::D3, StateClass::B5, StateClass::C3, StateClass::D12] {
        let s = draws::in_class(cls, &mut rng);
        let w = hardy::construct_witness(&s, &ConstructOptions::default()).unwrap();
        let text = serde_json::to_string(&w).unwrap();
        let back: Witness = serde_json::from_str(&text).unwrap();
        assert_eq!(back, w);
        let s2: CanonicalState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s2, s);
    }
}

#[test]
fn search_recovers_witness_for_table_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for cls in [StateClass::D2, StateClass::D9, StateClass::D14] {
        let psi = draws::in_class(cls, &mut rng).to_ket();
        let hit = hardy::search_hardy_observables(&psi, &Default::default()).unwrap();
        assert!(hit.certificate.satisfied);
        assert!(hit.settings.window_violation(1e-9).is_none());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_construction_certifies(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let settings = random_settings(&mut rng, 1e-2);
        let psi = hardy_state_for_settings(&settings).unwrap();
        let cert = verify_hardy(&psi, &settings, 1e-10);
        prop_assert!(cert.satisfied, "{:?}", cert.probabilities);
        prop_assert!((cert.bell_value() + cert.success_probability()).abs() < 1e-10);
    }

    #[test]
    fn probabilities_are_a_distribution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = draws::uniform(&mut rng).to_ket();
        let settings = BlochAngles::random(&mut rng).to_settings();
        for ctx in bell::HardyTerm::ORDER.map(|t| t.context()) {
            let d = bell::context_distribution(&psi, &settings, ctx);
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(d.iter().all(|&p| p >= -1e-15));
        }
    }

    #[test]
    fn bell_value_in_range(seed in any::<u64>()) {
        // B never drops below −1: the fifth term is one probability.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = draws::uniform(&mut rng).to_ket();
        let settings = BlochAngles::random(&mut rng).to_settings();
        let b = bell::bell_expression(&psi, &settings);
        prop_assert!((-1.0 - 1e-12..=4.0 + 1e-12).contains(&b));
    }
}
