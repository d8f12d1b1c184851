//! Exact qualitative analysis on the transition graph.

use crate::ctmc::Ctmc;
use crate::lang::Qualitative;

use super::StateSet;

/// States with a path to `goal` that stays in `through` until it gets there.
pub fn reach_backward(pred: &[Vec<usize>], through: &StateSet, goal: &StateSet) -> StateSet {
    let mut seen = goal.clone();
    let mut stack: Vec<usize> = goal.iter_ones().collect();
    while let Some(t) = stack.pop() {
        for &s in &pred[t] {
            if !seen.contains(s) && through.contains(s) {
                seen.insert(s);
                stack.push(s);
            }
        }
    }
    seen
}

/// `P(phi1 U phi2) = 0`.
pub fn prob0(pred: &[Vec<usize>], phi1: &StateSet, phi2: &StateSet) -> StateSet {
    reach_backward(pred, phi1, phi2).complement()
}

/// `P(phi1 U phi2) = 1`: no path through `phi1 & !phi2` to a state from
/// which `phi2` is unreachable.
pub fn prob1(pred: &[Vec<usize>], phi1: &StateSet, phi2: &StateSet) -> StateSet {
    let zero = prob0(pred, phi1, phi2);
    let through = phi1.and(&phi2.complement());
    reach_backward(pred, &through, &zero).complement()
}

/// Per-state verdict of a qualitative bound on `phi1 U phi2`.
pub fn qualitative_until(
    ctmc: &Ctmc,
    q: Qualitative,
    phi1: &StateSet,
    phi2: &StateSet,
) -> StateSet {
    let pred = ctmc.predecessors();
    match q {
        Qualitative::Zero => prob0(&pred, phi1, phi2),
        Qualitative::Positive => prob0(&pred, phi1, phi2).complement(),
        Qualitative::One => prob1(&pred, phi1, phi2),
        Qualitative::BelowOne => prob1(&pred, phi1, phi2).complement(),
    }
}

/// Qualitative bound on `phi1 U<=t phi2`. For a CTMC every finite path
/// prefix has positive probability within any `t > 0`, so `> 0` reduces to
/// the unbounded case; probability one is never reached in finite time
/// unless `phi2` already holds.
pub fn qualitative_bounded_until(
    ctmc: &Ctmc,
    q: Qualitative,
    phi1: &StateSet,
    phi2: &StateSet,
    t: f64,
) -> StateSet {
    if t == 0.0 {
        return match q {
            Qualitative::Zero | Qualitative::BelowOne => phi2.complement(),
            Qualitative::Positive | Qualitative::One => phi2.clone(),
        };
    }
    match q {
        Qualitative::Zero | Qualitative::Positive => qualitative_until(ctmc, q, phi1, phi2),
        Qualitative::One => phi2.clone(),
        Qualitative::BelowOne => phi2.complement(),
    }
}
