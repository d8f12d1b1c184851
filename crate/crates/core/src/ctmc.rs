//! Explicit-state CTMC construction from a flattened system.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::FlatSystem;
use crate::lang::{BinOp, Expr, VarDecl};

pub const DEFAULT_STATE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("state space exceeds the cap of {cap} states")]
    StateCapExceeded { cap: usize },
    #[error("action `{label}` writes `{var}` twice in one joint update")]
    DoubleWrite { label: String, var: String },
    #[error("rate of a `{label}` command evaluates to {rate} < 0")]
    NegativeRate { label: String, rate: i64 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("type error in `{0}`")]
    Type(String),
}

/// Variable valuation in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct State(pub Vec<i64>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub source: usize,
    pub label: String,
    pub rate: f64,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ctmc {
    pub variables: Vec<VarDecl>,
    pub states: Vec<State>,
    pub initial: usize,
    /// Sorted by source; see [`Ctmc::outgoing`].
    pub transitions: Vec<Transition>,
    row_start: Vec<usize>,
}

impl Ctmc {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn outgoing(&self, s: usize) -> &[Transition] {
        &self.transitions[self.row_start[s]..self.row_start[s + 1]]
    }

    pub fn exit_rate(&self, s: usize) -> f64 {
        self.outgoing(s).iter().map(|t| t.rate).sum()
    }

    pub fn label_transitions(&self, label: &str) -> Vec<&Transition> {
        self.transitions.iter().filter(|t| t.label == label).collect()
    }

    /// Value of a variable in a state.
    pub fn value(&self, s: usize, var: usize) -> i64 {
        self.states[s].0[var]
    }

    /// Reverse adjacency: predecessors of each state.
    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.num_states()];
        for t in &self.transitions {
            if !pred[t.target].contains(&t.source) {
                pred[t.target].push(t.source);
            }
        }
        pred
    }

    /// Build directly from explicit parts (used by tests and by hand-written chains).
    pub fn from_parts(
        variables: Vec<VarDecl>,
        states: Vec<State>,
        initial: usize,
        mut transitions: Vec<Transition>,
    ) -> Ctmc {
        transitions.retain(|t| t.source != t.target && t.rate > 0.0);
        transitions.sort_by(|a, b| a.source.cmp(&b.source));
        let row_start = row_offsets(states.len(), &transitions);
        Ctmc { variables, states, initial, transitions, row_start }
    }

    /// `index v1 v2 ...` per line, preceded by a header naming the variables.
    pub fn states_table(&self) -> String {
        let mut out = String::from("index");
        for v in &self.variables {
            out.push(' ');
            out.push_str(&v.name);
        }
        out.push('\n');
        for (i, s) in self.states.iter().enumerate() {
            let _ = write!(out, "{i}");
            for x in &s.0 {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    /// `source label rate target` per line.
    pub fn transitions_table(&self) -> String {
        let mut out = String::from("source label rate target\n");
        for t in &self.transitions {
            let label = if t.label.is_empty() { "-" } else { &t.label };
            let _ = writeln!(out, "{} {} {} {}", t.source, label, t.rate, t.target);
        }
        out
    }

    pub fn export(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("states.txt"), self.states_table())?;
        fs::write(dir.join("transitions.txt"), self.transitions_table())
    }
}

fn row_offsets(n: usize, transitions: &[Transition]) -> Vec<usize> {
    let mut row = vec![0usize; n + 1];
    for t in transitions {
        row[t.source + 1] += 1;
    }
    for i in 0..n {
        row[i + 1] += row[i];
    }
    row
}

/// Expression with variables resolved to state-vector slots.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Int(i64),
    Bool(bool),
    Var(usize),
    Not(Box<Compiled>),
    Neg(Box<Compiled>),
    Bin(BinOp, Box<Compiled>, Box<Compiled>),
}

impl Compiled {
    pub(crate) fn new(e: &Expr, slot: &impl Fn(&str) -> Option<usize>) -> Result<Compiled, BuildError> {
        Ok(match e {
            Expr::Int(n) => Compiled::Int(*n),
            Expr::Bool(b) => Compiled::Bool(*b),
            Expr::Var(v) => Compiled::Var(slot(v).ok_or_else(|| BuildError::UnknownVariable(v.clone()))?),
            Expr::Not(a) => Compiled::Not(Box::new(Compiled::new(a, slot)?)),
            Expr::Neg(a) => Compiled::Neg(Box::new(Compiled::new(a, slot)?)),
            Expr::Bin(op, a, b) => {
                Compiled::Bin(*op, Box::new(Compiled::new(a, slot)?), Box::new(Compiled::new(b, slot)?))
            }
        })
    }

    pub(crate) fn int(&self, s: &[i64]) -> i64 {
        match self {
            Compiled::Int(n) => *n,
            Compiled::Var(i) => s[*i],
            Compiled::Neg(a) => -a.int(s),
            Compiled::Bin(BinOp::Add, a, b) => a.int(s) + b.int(s),
            Compiled::Bin(BinOp::Sub, a, b) => a.int(s) - b.int(s),
            Compiled::Bin(BinOp::Mul, a, b) => a.int(s) * b.int(s),
            other => other.bool(s) as i64,
        }
    }

    pub(crate) fn bool(&self, s: &[i64]) -> bool {
        match self {
            Compiled::Bool(b) => *b,
            Compiled::Not(a) => !a.bool(s),
            Compiled::Bin(BinOp::And, a, b) => a.bool(s) && b.bool(s),
            Compiled::Bin(BinOp::Or, a, b) => a.bool(s) || b.bool(s),
            Compiled::Bin(op, a, b) if op.is_comparison() => op.compare(a.int(s), b.int(s)),
            other => other.int(s) != 0,
        }
    }
}

struct CompiledCommand {
    guard: Compiled,
    rate: Compiled,
    updates: Vec<(usize, Compiled)>,
}

struct CompiledAction {
    label: String,
    /// One list of candidate commands per participant.
    participants: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub state_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { state_cap: DEFAULT_STATE_CAP }
    }
}

pub fn build(flat: &FlatSystem) -> Result<Ctmc, BuildError> {
    build_with(flat, BuildOptions::default())
}

/// Breadth-first exploration from the initial valuation. Successors of each
/// state are sorted by (label, target valuation) before new states are
/// numbered, so state indices are canonical for a given system.
pub fn build_with(flat: &FlatSystem, opts: BuildOptions) -> Result<Ctmc, BuildError> {
    let variables: Vec<VarDecl> = flat.variables().cloned().collect();
    let slots: HashMap<&str, usize> = variables.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let slot = |n: &str| slots.get(n).copied();

    // commands of every component, with a global id
    let mut commands = Vec::new();
    let mut by_label: HashMap<(usize, &str), Vec<usize>> = HashMap::new();
    for (ci, comp) in flat.components.iter().enumerate() {
        for c in &comp.module.commands {
            let updates = c
                .updates
                .iter()
                .map(|u| Ok((slot(&u.var).ok_or_else(|| BuildError::UnknownVariable(u.var.clone()))?, Compiled::new(&u.value, &slot)?)))
                .collect::<Result<Vec<_>, BuildError>>()?;
            by_label.entry((ci, c.label.as_str())).or_default().push(commands.len());
            commands.push(CompiledCommand {
                guard: Compiled::new(&c.guard, &slot)?,
                rate: Compiled::new(&c.rate, &slot)?,
                updates,
            });
        }
    }
    let actions: Vec<CompiledAction> = flat
        .actions
        .iter()
        .filter(|a| !a.participants.is_empty())
        .map(|a| CompiledAction {
            label: a.label.clone(),
            participants: a
                .participants
                .iter()
                .map(|p| by_label.get(&(p.component, p.local_label.as_str())).cloned().unwrap_or_default())
                .collect(),
        })
        .collect();

    let lower: Vec<i64> = variables.iter().map(|v| v.lower).collect();
    let upper: Vec<i64> = variables.iter().map(|v| v.upper).collect();
    let init = State(variables.iter().map(|v| v.init).collect());

    let mut index: HashMap<State, usize> = HashMap::new();
    let mut states = vec![init.clone()];
    index.insert(init, 0);
    let mut queue = VecDeque::from([0usize]);
    let mut transitions = Vec::new();
    let mut succ: Vec<(String, State, f64)> = Vec::new();
    let mut written = vec![false; variables.len()];

    while let Some(s) = queue.pop_front() {
        let src = states[s].0.clone();
        succ.clear();
        for action in &actions {
            let mut enabled: Vec<Vec<(usize, f64)>> = Vec::with_capacity(action.participants.len());
            for cands in &action.participants {
                let mut en = Vec::new();
                for &ci in cands {
                    let c = &commands[ci];
                    if c.guard.bool(&src) {
                        let r = c.rate.int(&src);
                        if r < 0 {
                            return Err(BuildError::NegativeRate { label: action.label.clone(), rate: r });
                        }
                        if r > 0 {
                            en.push((ci, r as f64));
                        }
                    }
                }
                if en.is_empty() {
                    break;
                }
                enabled.push(en);
            }
            if enabled.len() != action.participants.len() {
                continue;
            }
            // every combination of one enabled command per participant
            let mut choice = vec![0usize; enabled.len()];
            'combos: loop {
                let mut target = src.clone();
                let mut rate = 1.0;
                written.iter_mut().for_each(|w| *w = false);
                let mut in_range = true;
                for (k, &j) in choice.iter().enumerate() {
                    let (ci, r) = enabled[k][j];
                    rate *= r;
                    for (var, value) in &commands[ci].updates {
                        if written[*var] {
                            return Err(BuildError::DoubleWrite {
                                label: action.label.clone(),
                                var: variables[*var].name.clone(),
                            });
                        }
                        written[*var] = true;
                        let x = value.int(&src);
                        if x < lower[*var] || x > upper[*var] {
                            in_range = false;
                        }
                        target[*var] = x;
                    }
                }
                if in_range && target != src {
                    succ.push((action.label.clone(), State(target), rate));
                }
                // advance the odometer
                let mut k = 0;
                loop {
                    if k == choice.len() {
                        break 'combos;
                    }
                    choice[k] += 1;
                    if choice[k] < enabled[k].len() {
                        break;
                    }
                    choice[k] = 0;
                    k += 1;
                }
            }
        }
        succ.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        for (label, target, rate) in succ.drain(..) {
            let t = match index.get(&target) {
                Some(&t) => t,
                None => {
                    if states.len() >= opts.state_cap {
                        return Err(BuildError::StateCapExceeded { cap: opts.state_cap });
                    }
                    let t = states.len();
                    index.insert(target.clone(), t);
                    states.push(target);
                    queue.push_back(t);
                    t
                }
            };
            transitions.push(Transition { source: s, label, rate, target: t });
        }
    }
    let row_start = row_offsets(states.len(), &transitions);
    Ok(Ctmc { variables, states, initial: 0, transitions, row_start })
}
