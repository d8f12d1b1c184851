//! Uniformization against a dense matrix exponential, and the iterative
//! reachability solver against LU, on small random chains.

mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dense_bounded_until, dense_until, expm, random_chain, random_set};
use crosstalk::csl::{self, CheckOptions, SolverKind, StateSet};
use crosstalk::ctmc::{Ctmc, State, Transition};
use crosstalk::lang::VarDecl;

#[test]
fn expm_matches_closed_form() {
    let q = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.0]);
    let p = expm(&(q * 3.0));
    assert!((p[(0, 1)] - (1.0 - (-3.0f64).exp())).abs() < 1e-14);
}

#[test]
fn uniformization_matches_matrix_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for case in 0..40 {
        let n = rng.gen_range(2..=6);
        let c = random_chain(&mut rng, n, 0.5);
        let phi1 = if case % 3 == 0 { random_set(&mut rng, n, 0.7) } else { StateSet::full(n) };
        let phi2 = random_set(&mut rng, n, 0.3);
        for t in [0.0, 0.1, 1.0, 3.0, 7.5] {
            let got = csl::prob_bounded_until(&c, &phi1, &phi2, t);
            let want = dense_bounded_until(&c, &phi1, &phi2, t);
            for s in 0..n {
                let d = (got[s] - want[s]).abs();
                worst = worst.max(d);
                assert!(d < 1e-7, "case {case} t {t} state {s}: {} vs {}", got[s], want[s]);
            }
        }
    }
    assert!(worst < 1e-7);
}

#[test]
fn gauss_seidel_matches_lu() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let iterative = CheckOptions { direct_threshold: 0, ..CheckOptions::default() };
    let direct = CheckOptions { solver: SolverKind::Direct, ..CheckOptions::default() };
    for case in 0..60 {
        let n = rng.gen_range(2..=8);
        let c = random_chain(&mut rng, n, 0.4);
        let phi1 = random_set(&mut rng, n, 0.8);
        let phi2 = random_set(&mut rng, n, 0.25);
        let want = dense_until(&c, &phi1, &phi2);
        let (gs, stats) = csl::unbounded_until_with(&c, &phi1, &phi2, &iterative).unwrap();
        assert!(!stats.direct);
        let (de, _) = csl::unbounded_until_with(&c, &phi1, &phi2, &direct).unwrap();
        for s in 0..n {
            assert!((gs[s] - want[s]).abs() < 1e-9, "case {case} state {s}: {} vs {}", gs[s], want[s]);
            assert!((de[s] - want[s]).abs() < 1e-9, "case {case} state {s}");
        }
    }
}

#[test]
fn two_state_exponential() {
    let var = VarDecl { name: "s".into(), lower: 0, upper: 1, init: 0 };
    let c = Ctmc::from_parts(
        vec![var],
        vec![State(vec![0]), State(vec![1])],
        0,
        vec![Transition { source: 0, label: "go".into(), rate: 1.0, target: 1 }],
    );
    let goal = StateSet::from_fn(2, |s| s == 1);
    let p = csl::prob_bounded_until(&c, &StateSet::full(2), &goal, 3.0);
    assert!((p[0] - (1.0 - (-3.0f64).exp())).abs() < 1e-9);
    assert!((p[0] - 0.950213).abs() < 1e-6);
}
