//! Small random chains and dense reference solutions.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crosstalk::csl::StateSet;
use crosstalk::ctmc::{Ctmc, State, Transition};
use crosstalk::lang::VarDecl;

pub fn random_chain(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Ctmc {
    let var = VarDecl { name: "s".into(), lower: 0, upper: n as i64 - 1, init: 0 };
    let states = (0..n as i64).map(|i| State(vec![i])).collect();
    let mut ts = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.gen_bool(density) {
                ts.push(Transition { source: s, label: format!("a{s}{t}"), rate: rng.gen_range(0.1..5.0), target: t });
            }
        }
    }
    Ctmc::from_parts(vec![var], states, 0, ts)
}

pub fn random_set(rng: &mut ChaCha8Rng, n: usize, p: f64) -> StateSet {
    let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(p)).collect();
    StateSet::from_fn(n, |s| bits[s])
}

/// exp(A) by scaling and squaring with a Taylor core.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * a.nrows() as f64;
    let mut k = 0;
    while norm / 2f64.powi(k) > 0.25 {
        k += 1;
    }
    let b = a / 2f64.powi(k);
    let n = a.nrows();
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for i in 1..30 {
        term = &term * &b / i as f64;
        sum += &term;
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

/// `P(phi1 U<=t phi2)` from the generator with goal and dead states made absorbing.
pub fn dense_bounded_until(c: &Ctmc, phi1: &StateSet, phi2: &StateSet, t: f64) -> Vec<f64> {
    let n = c.num_states();
    let mut q = DMatrix::zeros(n, n);
    for tr in &c.transitions {
        let s = tr.source;
        if phi2.contains(s) || !phi1.contains(s) {
            continue;
        }
        q[(s, tr.target)] += tr.rate;
        q[(s, s)] -= tr.rate;
    }
    let p = expm(&(q * t));
    (0..n).map(|s| (0..n).filter(|&j| phi2.contains(j)).map(|j| p[(s, j)]).sum()).collect()
}

/// Reachability by LU on the states that can reach `phi2` through `phi1`.
pub fn dense_until(c: &Ctmc, phi1: &StateSet, phi2: &StateSet) -> Vec<f64> {
    let n = c.num_states();
    let mut can = phi2.clone();
    loop {
        let mut grew = false;
        for tr in &c.transitions {
            if !can.contains(tr.source) && phi1.contains(tr.source) && can.contains(tr.target) {
                can.insert(tr.source);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let idx: Vec<usize> = (0..n).filter(|&s| can.contains(s) && !phi2.contains(s)).collect();
    let pos = |s: usize| idx.iter().position(|&x| x == s);
    let m = idx.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    let mut b = DMatrix::<f64>::zeros(m, 1);
    for (i, &s) in idx.iter().enumerate() {
        let e = c.exit_rate(s);
        for tr in c.outgoing(s) {
            if phi2.contains(tr.target) {
                b[(i, 0)] += tr.rate / e;
            } else if let Some(j) = pos(tr.target) {
                a[(i, j)] -= tr.rate / e;
            }
        }
    }
    let x = if m == 0 { b } else { a.lu().solve(&b).expect("nonsingular") };
    (0..n)
        .map(|s| if phi2.contains(s) { 1.0 } else { pos(s).map_or(0.0, |i| x[(i, 0)]) })
        .collect()
}
