//! Reachability probabilities of the embedded jump chain.

use crate::ctmc::Ctmc;

use super::{CheckError, CheckOptions, SolverKind, StateSet};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveStats {
    pub unknowns: usize,
    pub iterations: usize,
    pub residual: f64,
    pub direct: bool,
}

/// Sparse rows of the jump chain restricted to `maybe` states:
/// `x_s = sum_t w(s,t) x_t + b_s`.
struct System {
    unknown: Vec<usize>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

fn system(ctmc: &Ctmc, yes: &StateSet, maybe: &StateSet) -> System {
    let mut slot = vec![usize::MAX; ctmc.num_states()];
    let unknown: Vec<usize> = maybe.iter_ones().collect();
    for (k, &s) in unknown.iter().enumerate() {
        slot[s] = k;
    }
    let mut rows = Vec::with_capacity(unknown.len());
    let mut rhs = Vec::with_capacity(unknown.len());
    for &s in &unknown {
        let exit = ctmc.exit_rate(s);
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut b = 0.0;
        for t in ctmc.outgoing(s) {
            let w = t.rate / exit;
            if yes.contains(t.target) {
                b += w;
            } else if slot[t.target] != usize::MAX {
                match row.iter_mut().find(|(j, _)| *j == slot[t.target]) {
                    Some(e) => e.1 += w,
                    None => row.push((slot[t.target], w)),
                }
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    System { unknown, rows, rhs }
}

/// Probability of reaching `yes` for every state, with `yes` fixed at 1,
/// `no` at 0 and `maybe` solved.
pub fn reach_probabilities(
    ctmc: &Ctmc,
    yes: &StateSet,
    maybe: &StateSet,
    opts: &CheckOptions,
) -> Result<(Vec<f64>, SolveStats), CheckError> {
    let sys = system(ctmc, yes, maybe);
    let n = sys.unknown.len();
    let mut stats = SolveStats { unknowns: n, ..Default::default() };
    let x = if n == 0 {
        Vec::new()
    } else {
        match opts.solver {
            SolverKind::Direct => {
                stats.direct = true;
                direct(&sys)
            }
            SolverKind::Iterative => match gauss_seidel(&sys, opts) {
                Ok((x, it, res)) => {
                    stats.iterations = it;
                    stats.residual = res;
                    x
                }
                Err((it, res)) if n < opts.direct_threshold => {
                    stats.iterations = it;
                    stats.residual = res;
                    stats.direct = true;
                    direct(&sys)
                }
                Err((iterations, residual)) => {
                    return Err(CheckError::NonConvergence { iterations, residual })
                }
            },
        }
    };
    let mut out: Vec<f64> = (0..ctmc.num_states()).map(|s| if yes.contains(s) { 1.0 } else { 0.0 }).collect();
    for (k, &s) in sys.unknown.iter().enumerate() {
        out[s] = x[k];
    }
    Ok((out, stats))
}

fn gauss_seidel(sys: &System, opts: &CheckOptions) -> Result<(Vec<f64>, usize, f64), (usize, f64)> {
    let n = sys.rows.len();
    let mut x = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        residual = 0.0;
        for i in 0..n {
            let mut diag = 0.0;
            let mut acc = sys.rhs[i];
            for &(j, w) in &sys.rows[i] {
                if j == i {
                    diag += w;
                } else {
                    acc += w * x[j];
                }
            }
            let new = acc / (1.0 - diag);
            residual = f64::max(residual, (new - x[i]).abs());
            x[i] = new;
        }
        if residual < opts.tolerance {
            return Ok((x, it, residual));
        }
    }
    Err((opts.max_iterations, residual))
}

/// Dense Gaussian elimination with partial pivoting on `(I - W) x = b`.
fn direct(sys: &System) -> Vec<f64> {
    let n = sys.rows.len();
    let mut a = vec![0.0; n * n];
    let mut b = sys.rhs.clone();
    for (i, row) in sys.rows.iter().enumerate() {
        a[i * n + i] = 1.0;
        for &(j, w) in row {
            a[i * n + j] -= w;
        }
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p * n + col].abs().total_cmp(&a[q * n + col].abs()))
            .expect("non-empty");
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f != 0.0 {
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for k in i + 1..n {
            acc -= a[i * n + k] * x[k];
        }
        x[i] = acc / a[i * n + i];
    }
    x
}
