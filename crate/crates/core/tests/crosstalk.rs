use crosstalk::algebra::flatten;
use crosstalk::crosstalk::{characterise, classify, detect, CrosstalkCategory, DEFAULT_THRESHOLD};
use crosstalk::ctmc::{self, Ctmc};
use crosstalk::stdlib;

fn fixture(name: &str) -> Ctmc {
    let f = stdlib::load_fixture(name).unwrap();
    ctmc::build(&flatten(&f.system, &f.model).unwrap()).unwrap()
}

#[test]
fn every_crosstalk_fixture_is_detected() {
    let base = fixture("independent");
    assert!(!detect(&base, &base, DEFAULT_THRESHOLD).unwrap().detected);
    for name in &stdlib::FIXTURE_NAMES[1..] {
        let r = detect(&base, &fixture(name), DEFAULT_THRESHOLD).unwrap();
        assert!(r.detected, "{name}");
    }
}

#[test]
fn signal_flow_deltas() {
    let r = detect(&fixture("independent"), &fixture("signal-flow"), DEFAULT_THRESHOLD).unwrap();
    let d: Vec<f64> = r.rows.iter().map(|row| row.delta).collect();
    assert!((d[0] - 0.138).abs() < 5e-4, "{d:?}");
    assert!((d[1] - 0.120).abs() < 5e-4, "{d:?}");
    assert!(d[2].abs() < 1e-7, "{d:?}");
}

#[test]
fn intracellular_effect_is_marginal() {
    let r = detect(&fixture("independent"), &fixture("intracellular-communication"), DEFAULT_THRESHOLD).unwrap();
    assert!(r.rows[0].delta.abs() < 1e-7 && r.rows[1].delta.abs() < 1e-7);
    assert!(r.rows[2].delta > 1e-5 && r.rows[2].delta < 1e-4, "{}", r.rows[2].delta);
    assert!(r.detected);
    assert!(!detect(&fixture("independent"), &fixture("intracellular-communication"), 1e-3).unwrap().detected);
}

#[test]
fn threshold_monotonicity() {
    let base = fixture("independent");
    for name in stdlib::FIXTURE_NAMES {
        let c = fixture(name);
        let mut was = true;
        for t in [0.0, 1e-7, 1e-5, 1e-4, 1e-3, 0.05, 0.2, 1.0] {
            let now = detect(&base, &c, t).unwrap().detected;
            assert!(was || !now, "{name} at {t}");
            was = now;
        }
    }
}

#[test]
fn characterisation_examples() {
    assert_eq!(characterise(&fixture("receptor-function")).unwrap().holding(), ["receptor_function"]);
    let ind = characterise(&fixture("independent")).unwrap();
    assert!(ind.holding().is_empty());
    assert!(ind.independence);
    assert!(characterise(&fixture("substrate-availability")).unwrap().verdict("substrate_availability").unwrap());
    assert!(!characterise(&fixture("signal-flow")).unwrap().independence);
}

#[test]
fn classification_agreement() {
    let want = [
        CrosstalkCategory::Independent,
        CrosstalkCategory::SignalFlow,
        CrosstalkCategory::SubstrateAvailability,
        CrosstalkCategory::ReceptorFunction,
        CrosstalkCategory::GeneExpression,
        CrosstalkCategory::IntracellularCommunication,
    ];
    for (name, cat) in stdlib::FIXTURE_NAMES.iter().zip(want) {
        let f = stdlib::load_fixture(name).unwrap();
        let (l, r) = f.operands().unwrap();
        assert_eq!(classify(l, r, &f.model).unwrap().category, cat, "{name}");
    }
}
