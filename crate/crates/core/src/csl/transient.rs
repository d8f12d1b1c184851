//! Time-bounded reachability by uniformization.

use crate::ctmc::Ctmc;

use super::{CheckOptions, StateSet};

/// Truncated Poisson(λ) weights: `weights[i]` is the probability of `left + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonWeights {
    pub left: usize,
    pub right: usize,
    pub weights: Vec<f64>,
}

impl PoissonWeights {
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Poisson probabilities from `left` to `right` such that the mass outside is
/// below `epsilon`. Terms are computed in log space from the mode outwards,
/// with geometric bounds on both tails deciding where to stop.
pub fn poisson_weights(lambda: f64, epsilon: f64) -> PoissonWeights {
    assert!(lambda >= 0.0 && lambda.is_finite(), "bad Poisson rate {lambda}");
    if lambda == 0.0 {
        return PoissonWeights { left: 0, right: 0, weights: vec![1.0] };
    }
    let mode = lambda.floor() as usize;
    let ln_lambda = lambda.ln();
    let ln_fact_mode = ln_factorial(mode);
    let ln_p_mode = -lambda + mode as f64 * ln_lambda - ln_fact_mode;
    let half = epsilon / 2.0;

    // right tail: for k > λ the ratio p_{k+1}/p_k = λ/(k+1) < 1 decreases
    let mut right_terms = Vec::new();
    let mut ln_p = ln_p_mode;
    let mut k = mode;
    loop {
        right_terms.push(ln_p);
        let next = ln_p + ln_lambda - ((k + 1) as f64).ln();
        let ratio = lambda / (k + 2) as f64;
        if (k + 1) as f64 > lambda && ratio < 1.0 && next.exp() / (1.0 - ratio) < half {
            break;
        }
        ln_p = next;
        k += 1;
    }
    let right = k;

    // left tail: for k <= λ the ratio p_{k-1}/p_k = k/λ <= 1
    let mut left_terms = Vec::new();
    let mut ln_p = ln_p_mode;
    let mut k = mode;
    while k > 0 {
        let prev = ln_p + (k as f64).ln() - ln_lambda;
        let ratio = (k - 1) as f64 / lambda;
        if ratio < 1.0 && prev.exp() / (1.0 - ratio) < half {
            break;
        }
        ln_p = prev;
        k -= 1;
        left_terms.push(ln_p);
    }
    let left = k;
    let weights = left_terms.iter().rev().chain(right_terms.iter()).map(|l| l.exp()).collect();
    PoissonWeights { left, right, weights }
}

fn ln_factorial(n: usize) -> f64 {
    if n < 32 {
        return (2..=n).map(|i| (i as f64).ln()).sum();
    }
    // Stirling series; the first omitted term is below 1e-16 for n >= 32
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransientStats {
    pub uniformization_rate: f64,
    pub left: usize,
    pub right: usize,
}

/// `P(phi1 U<=t phi2)` for every state.
pub fn bounded_until(
    ctmc: &Ctmc,
    phi1: &StateSet,
    phi2: &StateSet,
    t: f64,
    opts: &CheckOptions,
) -> (Vec<f64>, TransientStats) {
    let n = ctmc.num_states();
    let indicator: Vec<f64> = (0..n).map(|s| if phi2.contains(s) { 1.0 } else { 0.0 }).collect();
    // phi2 and (!phi1 & !phi2) states are absorbing
    let live: Vec<bool> = (0..n).map(|s| phi1.contains(s) && !phi2.contains(s)).collect();
    let max_exit = (0..n).filter(|&s| live[s]).map(|s| ctmc.exit_rate(s)).fold(0.0, f64::max);
    if t == 0.0 || max_exit == 0.0 {
        return (indicator, TransientStats::default());
    }
    let q = opts.uniformization_factor * max_exit;
    let pw = poisson_weights(q * t, opts.transient_epsilon);

    let mut v = indicator;
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; n];
    for k in 0..=pw.right {
        if k >= pw.left {
            let w = pw.weights[k - pw.left];
            for s in 0..n {
                acc[s] += w * v[s];
            }
        }
        if k == pw.right {
            break;
        }
        // v <- P v with P = I + Q/q on live rows
        for s in 0..n {
            if !live[s] {
                next[s] = v[s];
                continue;
            }
            let mut x = v[s];
            for tr in ctmc.outgoing(s) {
                x += tr.rate / q * (v[tr.target] - v[s]);
            }
            next[s] = x;
        }
        std::mem::swap(&mut v, &mut next);
    }
    // absorbing rows are exact; only live rows carry truncation error
    for s in (0..n).filter(|&s| !live[s]) {
        acc[s] = if phi2.contains(s) { 1.0 } else { 0.0 };
    }
    (acc, TransientStats { uniformization_rate: q, left: pw.left, right: pw.right })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_exact(lambda: f64, k: usize) -> f64 {
        let mut p = (-lambda).exp();
        for i in 1..=k {
            p *= lambda / i as f64;
        }
        p
    }

    #[test]
    fn weights_match_direct_formula() {
        for &lambda in &[0.3, 1.0, 4.2, 30.6, 150.0] {
            let pw = poisson_weights(lambda, 1e-12);
            for (i, w) in pw.weights.iter().enumerate() {
                let exact = poisson_exact(lambda, pw.left + i);
                assert!((w - exact).abs() <= 1e-12 * exact.max(1e-300) + 1e-15, "λ={lambda} k={}", pw.left + i);
            }
            assert!(1.0 - pw.mass() < 1e-12, "λ={lambda} mass {}", pw.mass());
        }
    }

    #[test]
    fn large_rate_does_not_underflow() {
        let pw = poisson_weights(5000.0, 1e-9);
        assert!(pw.left > 4000 && pw.right < 6000);
        // each tail may hold up to epsilon/2
        assert!(1.0 - pw.mass() < 1e-9 + 1e-12, "{} {} {}", pw.left, pw.right, pw.mass());
    }

    #[test]
    fn stirling_agrees_with_summation() {
        for n in [32usize, 100, 1000] {
            let sum: f64 = (2..=n).map(|i| (i as f64).ln()).sum();
            assert!((ln_factorial(n) - sum).abs() < 1e-9 * sum);
        }
    }

    #[test]
    fn zero_rate_is_point_mass() {
        let pw = poisson_weights(0.0, 1e-9);
        assert_eq!((pw.left, pw.right, pw.weights.clone()), (0, 0, vec![1.0]));
    }
}
