//! CSL model checking over explicit CTMCs.
//!
//! Qualitative bounds (`<=0`, `>0`, `>=1`, `<1`) are decided on the graph.
//! Unbounded until solves the embedded jump chain; time-bounded until uses
//! uniformization.

pub mod graph;
pub mod linear;
pub mod transient;

use serde::Serialize;
use thiserror::Error;

use crate::ctmc::Ctmc;
use crate::lang::{Bound, CslFormula, PathFormula};

pub use linear::SolveStats;
pub use transient::{poisson_weights, PoissonWeights, TransientStats};

/// Tolerances are kept here rather than in constants so the CLI can override them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOptions {
    pub solver: SolverKind,
    /// Gauss-Seidel stops once the largest update of a sweep is below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Gauss-Seidel failures below this many unknowns fall back to elimination.
    pub direct_threshold: usize,
    /// Poisson mass allowed outside the truncation window.
    pub transient_epsilon: f64,
    pub uniformization_factor: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            solver: SolverKind::Iterative,
            tolerance: 1e-10,
            max_iterations: 1_000_000,
            direct_threshold: 2000,
            transient_epsilon: 1e-9,
            uniformization_factor: 1.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Iterative,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`P=?` cannot be nested inside a state formula")]
    NestedQuery,
    #[error("filter matches {0} states; a `=?` query with a filter needs exactly one")]
    FilterNotSingleton(usize),
    #[error("Gauss-Seidel did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

/// Membership vector over the states of one CTMC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateSet(Vec<bool>);

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet(vec![false; n])
    }

    pub fn full(n: usize) -> Self {
        StateSet(vec![true; n])
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Self {
        StateSet((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, s: usize) -> bool {
        self.0[s]
    }

    pub fn insert(&mut self, s: usize) {
        self.0[s] = true;
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn complement(&self) -> Self {
        StateSet(self.0.iter().map(|b| !b).collect())
    }

    pub fn and(&self, o: &Self) -> Self {
        StateSet(self.0.iter().zip(&o.0).map(|(a, b)| *a && *b).collect())
    }

    pub fn or(&self, o: &Self) -> Self {
        StateSet(self.0.iter().zip(&o.0).map(|(a, b)| *a || *b).collect())
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `graph`, `linear`, `uniformization` or `state`.
    pub method: String,
    pub iterations: usize,
    pub unknowns: usize,
    pub direct: bool,
    pub uniformization_rate: f64,
    pub poisson_left: usize,
    pub poisson_right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bool(bool),
    Probability(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub value: Verdict,
    /// Per-state probabilities of the top-level path formula, when computed numerically.
    #[serde(skip)]
    pub per_state: Option<Vec<f64>>,
    pub warnings: Vec<String>,
    pub diagnostics: Diagnostics,
}

impl CheckResult {
    pub fn as_bool(&self) -> Option<bool> {
        match self.value {
            Verdict::Bool(b) => Some(b),
            Verdict::Probability(_) => None,
        }
    }

    pub fn as_probability(&self) -> Option<f64> {
        match self.value {
            Verdict::Probability(p) => Some(p),
            Verdict::Bool(_) => None,
        }
    }
}

fn clamp(v: &mut [f64]) {
    for x in v {
        *x = x.clamp(0.0, 1.0);
    }
}

/// Satisfaction set of a state formula.
pub fn eval_state_formula(ctmc: &Ctmc, phi: &CslFormula) -> Result<StateSet, CheckError> {
    eval_with(ctmc, phi, &CheckOptions::default())
}

pub fn eval_with(ctmc: &Ctmc, phi: &CslFormula, opts: &CheckOptions) -> Result<StateSet, CheckError> {
    let n = ctmc.num_states();
    Ok(match phi {
        CslFormula::True => StateSet::full(n),
        CslFormula::False => StateSet::empty(n),
        CslFormula::Atomic { var, op, value } => {
            let i = ctmc.var_index(var).ok_or_else(|| CheckError::UnknownVariable(var.clone()))?;
            StateSet::from_fn(n, |s| op.compare(ctmc.value(s, i), *value))
        }
        CslFormula::Not(a) => eval_with(ctmc, a, opts)?.complement(),
        CslFormula::And(a, b) => eval_with(ctmc, a, opts)?.and(&eval_with(ctmc, b, opts)?),
        CslFormula::Or(a, b) => eval_with(ctmc, a, opts)?.or(&eval_with(ctmc, b, opts)?),
        CslFormula::Prob { bound, path, filter } => {
            if bound.is_query() {
                return Err(CheckError::NestedQuery);
            }
            let per_state = prob_operator_states(ctmc, *bound, path, opts)?.0;
            match filter {
                // filtered operator inside a larger formula: constant over states
                Some(f) => {
                    let fs = eval_with(ctmc, f, opts)?;
                    let all = fs.iter_ones().all(|s| per_state.contains(s));
                    if all { StateSet::full(n) } else { StateSet::empty(n) }
                }
                None => per_state,
            }
        }
    })
}

/// Verdict of `P bound [path]` per state, plus probabilities when computed numerically.
fn prob_operator_states(
    ctmc: &Ctmc,
    bound: Bound,
    path: &PathFormula,
    opts: &CheckOptions,
) -> Result<(StateSet, Option<Vec<f64>>, Diagnostics), CheckError> {
    let (l, r, t) = path.as_until();
    let phi1 = eval_with(ctmc, l, opts)?;
    let phi2 = eval_with(ctmc, r, opts)?;
    if let Some(q) = bound.qualitative() {
        let set = match t {
            None => graph::qualitative_until(ctmc, q, &phi1, &phi2),
            Some(t) => graph::qualitative_bounded_until(ctmc, q, &phi1, &phi2, t),
        };
        let diag = Diagnostics { method: "graph".into(), ..Default::default() };
        return Ok((set, None, diag));
    }
    let (probs, diag) = path_probabilities(ctmc, &phi1, &phi2, t, opts)?;
    let set = StateSet::from_fn(ctmc.num_states(), |s| bound.holds(probs[s]));
    Ok((set, Some(probs), diag))
}

fn path_probabilities(
    ctmc: &Ctmc,
    phi1: &StateSet,
    phi2: &StateSet,
    t: Option<f64>,
    opts: &CheckOptions,
) -> Result<(Vec<f64>, Diagnostics), CheckError> {
    match t {
        None => {
            let (p, stats) = unbounded_until_with(ctmc, phi1, phi2, opts)?;
            let diag = Diagnostics {
                method: "linear".into(),
                iterations: stats.iterations,
                unknowns: stats.unknowns,
                direct: stats.direct,
                ..Default::default()
            };
            Ok((p, diag))
        }
        Some(t) => {
            let (p, stats) = bounded_until_with(ctmc, phi1, phi2, t, opts);
            let diag = Diagnostics {
                method: "uniformization".into(),
                uniformization_rate: stats.uniformization_rate,
                poisson_left: stats.left,
                poisson_right: stats.right,
                ..Default::default()
            };
            Ok((p, diag))
        }
    }
}

/// `P(phi1 U phi2)` for every state.
pub fn prob_unbounded_until(ctmc: &Ctmc, phi1: &StateSet, phi2: &StateSet) -> Result<Vec<f64>, CheckError> {
    unbounded_until_with(ctmc, phi1, phi2, &CheckOptions::default()).map(|r| r.0)
}

pub fn unbounded_until_with(
    ctmc: &Ctmc,
    phi1: &StateSet,
    phi2: &StateSet,
    opts: &CheckOptions,
) -> Result<(Vec<f64>, SolveStats), CheckError> {
    let pred = ctmc.predecessors();
    let no = graph::prob0(&pred, phi1, phi2);
    let yes = graph::prob1(&pred, phi1, phi2);
    let maybe = no.or(&yes).complement();
    let (mut p, stats) = linear::reach_probabilities(ctmc, &yes, &maybe, opts)?;
    clamp(&mut p);
    Ok((p, stats))
}

/// `P(phi1 U<=t phi2)` for every state.
pub fn prob_bounded_until(ctmc: &Ctmc, phi1: &StateSet, phi2: &StateSet, t: f64) -> Vec<f64> {
    bounded_until_with(ctmc, phi1, phi2, t, &CheckOptions::default()).0
}

pub fn bounded_until_with(
    ctmc: &Ctmc,
    phi1: &StateSet,
    phi2: &StateSet,
    t: f64,
    opts: &CheckOptions,
) -> (Vec<f64>, TransientStats) {
    let (mut p, stats) = transient::bounded_until(ctmc, phi1, phi2, t, opts);
    clamp(&mut p);
    (p, stats)
}

/// Per-state verdict of a qualitative `P` operator, decided without arithmetic.
/// Returns `None` when the bound is not one of `<=0`, `>0`, `>=1`, `<1`.
pub fn qualitative_check(ctmc: &Ctmc, bound: Bound, path: &PathFormula) -> Result<Option<StateSet>, CheckError> {
    let Some(q) = bound.qualitative() else { return Ok(None) };
    let (l, r, t) = path.as_until();
    let phi1 = eval_state_formula(ctmc, l)?;
    let phi2 = eval_state_formula(ctmc, r)?;
    Ok(Some(match t {
        None => graph::qualitative_until(ctmc, q, &phi1, &phi2),
        Some(t) => graph::qualitative_bounded_until(ctmc, q, &phi1, &phi2, t),
    }))
}

pub fn check_property(ctmc: &Ctmc, prop: &CslFormula) -> Result<CheckResult, CheckError> {
    check_with(ctmc, prop, &CheckOptions::default())
}

/// Evaluate a property at the initial state, or over its filter states when
/// the top-level `P` operator carries a filter.
pub fn check_with(ctmc: &Ctmc, prop: &CslFormula, opts: &CheckOptions) -> Result<CheckResult, CheckError> {
    let CslFormula::Prob { bound, path, filter } = prop else {
        let set = eval_with(ctmc, prop, opts)?;
        return Ok(CheckResult {
            value: Verdict::Bool(set.contains(ctmc.initial)),
            per_state: None,
            warnings: Vec::new(),
            diagnostics: Diagnostics { method: "state".into(), ..Default::default() },
        });
    };
    let mut warnings = Vec::new();
    let (verdicts, probs, diagnostics) = if bound.is_query() {
        let (l, r, t) = path.as_until();
        let phi1 = eval_with(ctmc, l, opts)?;
        let phi2 = eval_with(ctmc, r, opts)?;
        let (p, d) = path_probabilities(ctmc, &phi1, &phi2, t, opts)?;
        (None, Some(p), d)
    } else {
        let (set, p, d) = prob_operator_states(ctmc, *bound, path, opts)?;
        (Some(set), p, d)
    };
    let value = match filter {
        None => {
            let s = ctmc.initial;
            match (&verdicts, &probs) {
                (Some(v), _) => Verdict::Bool(v.contains(s)),
                (None, Some(p)) => Verdict::Probability(p[s]),
                (None, None) => unreachable!("queries are always computed numerically"),
            }
        }
        Some(f) => {
            // every state is reachable by construction
            let fs = eval_with(ctmc, f, opts)?;
            let count = fs.count();
            match &verdicts {
                Some(v) => {
                    if count == 0 {
                        warnings.push("filter matches no reachable state; verdict is vacuously true".to_string());
                    }
                    Verdict::Bool(fs.iter_ones().all(|s| v.contains(s)))
                }
                None => {
                    if count != 1 {
                        return Err(CheckError::FilterNotSingleton(count));
                    }
                    let s = fs.iter_ones().next().expect("one state");
                    Verdict::Probability(probs.as_ref().expect("query")[s])
                }
            }
        }
    };
    Ok(CheckResult { value, per_state: probs, warnings, diagnostics })
}
