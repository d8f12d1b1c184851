//! Composition expressions: instantiation, renaming, hiding and synchronising
//! parallel composition.
//!
//! Flattening evaluates an expression bottom-up. Every visible label of a node
//! maps to a list of *alternatives*; an alternative is a set of component
//! commands that must fire together. Interleaving concatenates alternatives,
//! synchronisation takes their cross product, and a synchronised label with
//! alternatives on only one side is blocked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::lang::{Annotations, Command, Model, ModuleDef, Update, VarDecl};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CompositionExpr {
    /// A module of the model; `index` selects an instance of a generic module.
    Instance { generic: String, index: Option<u32> },
    /// Relabelling, as `(old, new)` pairs.
    Rename { child: Box<CompositionExpr>, map: Vec<(String, String)> },
    Hide { child: Box<CompositionExpr>, labels: Vec<String> },
    Par { left: Box<CompositionExpr>, right: Box<CompositionExpr>, sync: Vec<String> },
    /// `||`: synchronise on the labels both sides share.
    ParAuto { left: Box<CompositionExpr>, right: Box<CompositionExpr> },
}

impl CompositionExpr {
    pub fn instance(generic: &str, index: u32) -> Self {
        CompositionExpr::Instance { generic: generic.to_string(), index: Some(index) }
    }

    pub fn module(name: &str) -> Self {
        CompositionExpr::Instance { generic: name.to_string(), index: None }
    }

    pub fn rename(self, pairs: &[(&str, &str)]) -> Self {
        CompositionExpr::Rename {
            child: Box::new(self),
            map: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }

    pub fn hide(self, labels: &[&str]) -> Self {
        CompositionExpr::Hide {
            child: Box::new(self),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn par(self, right: Self, sync: &[&str]) -> Self {
        CompositionExpr::Par {
            left: Box::new(self),
            right: Box::new(right),
            sync: sync.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn par_auto(self, right: Self) -> Self {
        CompositionExpr::ParAuto { left: Box::new(self), right: Box::new(right) }
    }

    /// The two operands of a top-level parallel node.
    pub fn split_par(&self) -> Option<(&CompositionExpr, &CompositionExpr)> {
        match self {
            CompositionExpr::Par { left, right, .. } | CompositionExpr::ParAuto { left, right } => {
                Some((left, right))
            }
            _ => None,
        }
    }

    /// Leaf instances, left to right.
    pub fn instances(&self) -> Vec<(&str, Option<u32>)> {
        let mut out = Vec::new();
        self.walk_instances(&mut out);
        out
    }

    fn walk_instances<'a>(&'a self, out: &mut Vec<(&'a str, Option<u32>)>) {
        match self {
            CompositionExpr::Instance { generic, index } => out.push((generic, *index)),
            CompositionExpr::Rename { child, .. } | CompositionExpr::Hide { child, .. } => {
                child.walk_instances(out)
            }
            CompositionExpr::Par { left, right, .. } | CompositionExpr::ParAuto { left, right } => {
                left.walk_instances(out);
                right.walk_instances(out);
            }
        }
    }

    fn is_parallel(&self) -> bool {
        self.split_par().is_some()
    }
}

impl fmt::Display for CompositionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompositionExpr::Instance { generic, index: Some(i) } => write!(f, "{generic}_{i}"),
            CompositionExpr::Instance { generic, index: None } => f.write_str(generic),
            CompositionExpr::Rename { child, map } => {
                fmt_operand(f, child)?;
                let pairs: Vec<String> = map.iter().map(|(a, b)| format!("{a} <- {b}")).collect();
                write!(f, " {{{}}}", pairs.join(", "))
            }
            CompositionExpr::Hide { child, labels } => {
                fmt_operand(f, child)?;
                write!(f, " / {{{}}}", labels.join(", "))
            }
            CompositionExpr::Par { left, right, sync } => {
                write!(f, "{left} |[{}]| ", sync.join(", "))?;
                fmt_operand(f, right)
            }
            CompositionExpr::ParAuto { left, right } => {
                write!(f, "{left} || ")?;
                fmt_operand(f, right)
            }
        }
    }
}

fn fmt_operand(f: &mut fmt::Formatter<'_>, e: &CompositionExpr) -> fmt::Result {
    if e.is_parallel() {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("unknown module `{0}`")]
    UnknownModule(String),
    #[error("instance {generic}_{index} is used more than once")]
    DuplicateInstance { generic: String, index: u32 },
    #[error("variable `{var}` is declared by both `{first}` and `{second}`")]
    VariableClash { var: String, first: String, second: String },
    #[error("renaming `{old}` which is not in the alphabet {{{}}}", alphabet.join(", "))]
    UnknownLabel { old: String, alphabet: Vec<String> },
    #[error("renaming is not injective: `{label}` would be produced twice")]
    RenameCollision { label: String },
}

/// Set of external (synchronisable) labels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Alphabet(pub BTreeSet<String>);

impl Alphabet {
    pub fn contains(&self, label: &str) -> bool {
        self.0.contains(label)
    }

    pub fn intersection(&self, other: &Alphabet) -> Alphabet {
        Alphabet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Alphabet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Alphabet(iter.into_iter().map(Into::into).collect())
    }
}

/// Maps the identifiers of a generic module onto one of its instances.
///
/// The generic's own index is the `_<k>` suffix shared by all of its labels
/// (the published listings are written as instance 1). Labels swap that
/// suffix; variables swap the digit run equal to `k` (`X1Inactive` becomes
/// `X2Inactive`). Identifiers without the marker get `_<index>` appended.
#[derive(Debug, Clone)]
pub struct Reindex {
    base: Option<String>,
    target: String,
}

impl Reindex {
    pub fn new(generic: &ModuleDef, index: u32) -> Self {
        Reindex { base: base_index(generic).map(|b| b.to_string()), target: index.to_string() }
    }

    pub fn label(&self, label: &str) -> String {
        if label.is_empty() {
            return String::new();
        }
        if let Some(base) = &self.base {
            if let Some(stem) = label.strip_suffix(base.as_str()).and_then(|s| s.strip_suffix('_')) {
                return format!("{stem}_{}", self.target);
            }
        }
        format!("{label}_{}", self.target)
    }

    pub fn var(&self, var: &str) -> String {
        if let Some(base) = &self.base {
            if let Some((start, end)) = last_digit_run_equal(var, base) {
                return format!("{}{}{}", &var[..start], self.target, &var[end..]);
            }
        }
        format!("{var}_{}", self.target)
    }
}

fn base_index(m: &ModuleDef) -> Option<&str> {
    let labels = m.labels();
    let mut base: Option<&str> = None;
    for l in labels {
        let (_, suffix) = l.rsplit_once('_')?;
        if suffix.is_empty() || !suffix.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        match base {
            None => base = Some(suffix),
            Some(b) if b == suffix => {}
            Some(_) => return None,
        }
    }
    base
}

fn last_digit_run_equal(s: &str, digits: &str) -> Option<(usize, usize)> {
    let bytes = s.as_bytes();
    let mut found = None;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if &s[start..i] == digits {
                found = Some((start, i));
            }
        } else {
            i += 1;
        }
    }
    found
}

/// Copy of a generic module with every variable and label moved to `index`.
pub fn instantiate(generic: &ModuleDef, index: u32) -> ModuleDef {
    let r = Reindex::new(generic, index);
    let var = |v: &str| r.var(v);
    ModuleDef {
        name: format!("{}_{index}", generic.name),
        variables: generic
            .variables
            .iter()
            .map(|v| VarDecl { name: r.var(&v.name), ..v.clone() })
            .collect(),
        commands: generic
            .commands
            .iter()
            .map(|c| Command {
                label: r.label(&c.label),
                guard: c.guard.rename_vars(&var),
                rate: c.rate.rename_vars(&var),
                updates: c
                    .updates
                    .iter()
                    .map(|u| Update { var: r.var(&u.var), value: u.value.rename_vars(&var) })
                    .collect(),
            })
            .collect(),
    }
}

pub fn instantiate_annotations(generic: &ModuleDef, ann: &Annotations, index: u32) -> Annotations {
    let r = Reindex::new(generic, index);
    Annotations {
        module: format!("{}_{index}", ann.module),
        kind: ann.kind,
        roles: ann.roles.iter().map(|(l, role)| (r.label(l), *role)).collect(),
    }
}

fn resolve_instance(model: &Model, generic: &str, index: Option<u32>) -> Result<ModuleDef, AlgebraError> {
    let m = model.module(generic).ok_or_else(|| AlgebraError::UnknownModule(generic.to_string()))?;
    Ok(match index {
        Some(i) => instantiate(m, i),
        None => m.clone(),
    })
}

/// External labels of an expression.
pub fn alphabet(expr: &CompositionExpr, model: &Model) -> Result<Alphabet, AlgebraError> {
    Ok(match expr {
        CompositionExpr::Instance { generic, index } => {
            let m = resolve_instance(model, generic, *index)?;
            m.labels().into_iter().collect()
        }
        CompositionExpr::Rename { child, map } => {
            let a = alphabet(child, model)?;
            a.iter()
                .map(|l| map.iter().find(|(old, _)| old == l).map_or(l, |(_, new)| new.as_str()))
                .collect()
        }
        CompositionExpr::Hide { child, labels } => {
            let mut a = alphabet(child, model)?;
            a.0.retain(|l| !labels.contains(l));
            a
        }
        CompositionExpr::Par { left, right, .. } | CompositionExpr::ParAuto { left, right } => {
            let mut a = alphabet(left, model)?;
            a.0.extend(alphabet(right, model)?.0);
            a
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Independence {
    Independent,
    Crosstalk(BTreeSet<String>),
}

/// Two pathways are independent iff their external alphabets are disjoint.
pub fn independence_check(
    p1: &CompositionExpr,
    p2: &CompositionExpr,
    model: &Model,
) -> Result<Independence, AlgebraError> {
    let shared = alphabet(p1, model)?.intersection(&alphabet(p2, model)?);
    Ok(if shared.is_empty() { Independence::Independent } else { Independence::Crosstalk(shared.0) })
}

/// One component command set taking part in an action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Participant {
    pub component: usize,
    /// The label as written in the (instantiated) component; empty for unlabelled commands.
    pub local_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub module: ModuleDef,
    pub generic: String,
    pub index: Option<u32>,
    pub annotations: Option<Annotations>,
}

/// A joint move: every participant fires one enabled command simultaneously.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Action {
    pub label: String,
    /// Hidden and unlabelled actions never synchronise above their hiding point.
    pub hidden: bool,
    pub participants: Vec<Participant>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlatSystem {
    pub components: Vec<Component>,
    pub actions: Vec<Action>,
    pub blocked: BTreeSet<String>,
    pub alphabet: Alphabet,
}

impl FlatSystem {
    /// Every participant of any action carrying `label`.
    pub fn participation(&self, label: &str) -> BTreeSet<&Participant> {
        self.actions
            .iter()
            .filter(|a| a.label == label)
            .flat_map(|a| a.participants.iter())
            .collect()
    }

    /// Participating component names for `label`.
    pub fn participant_modules(&self, label: &str) -> BTreeSet<&str> {
        self.participation(label)
            .into_iter()
            .map(|p| self.components[p.component].module.name.as_str())
            .collect()
    }

    pub fn variables(&self) -> impl Iterator<Item = &VarDecl> {
        self.components.iter().flat_map(|c| c.module.variables.iter())
    }
}

type Alternatives = Vec<Vec<Participant>>;

struct Node {
    visible: BTreeMap<String, Alternatives>,
    hidden: Vec<(String, Vec<Participant>)>,
}

struct Flattener<'m> {
    model: &'m Model,
    components: Vec<Component>,
    blocked: BTreeSet<String>,
}

impl Flattener<'_> {
    fn leaf(&mut self, generic: &str, index: Option<u32>) -> Result<Node, AlgebraError> {
        let module = resolve_instance(self.model, generic, index)?;
        if self.components.iter().any(|c| c.generic == generic && c.index == index) {
            return Err(AlgebraError::DuplicateInstance {
                generic: generic.to_string(),
                index: index.unwrap_or(0),
            });
        }
        for c in &self.components {
            if let Some(v) = module.variables.iter().find(|v| c.module.var(&v.name).is_some()) {
                return Err(AlgebraError::VariableClash {
                    var: v.name.clone(),
                    first: c.module.name.clone(),
                    second: module.name.clone(),
                });
            }
        }
        let annotations = self.model.annotations_for(generic).map(|a| match index {
            Some(i) => instantiate_annotations(self.model.module(generic).expect("resolved"), a, i),
            None => a.clone(),
        });
        let id = self.components.len();
        let mut visible = BTreeMap::new();
        for l in module.labels() {
            visible.insert(
                l.to_string(),
                vec![vec![Participant { component: id, local_label: l.to_string() }]],
            );
        }
        let mut hidden = Vec::new();
        if module.commands.iter().any(|c| !c.is_labelled()) {
            hidden.push((String::new(), vec![Participant { component: id, local_label: String::new() }]));
        }
        self.components.push(Component { module, generic: generic.to_string(), index, annotations });
        Ok(Node { visible, hidden })
    }

    fn eval(&mut self, e: &CompositionExpr) -> Result<Node, AlgebraError> {
        match e {
            CompositionExpr::Instance { generic, index } => self.leaf(generic, *index),
            CompositionExpr::Rename { child, map } => {
                let node = self.eval(child)?;
                for (old, _) in map {
                    if !node.visible.contains_key(old) {
                        return Err(AlgebraError::UnknownLabel {
                            old: old.clone(),
                            alphabet: node.visible.keys().cloned().collect(),
                        });
                    }
                }
                let mut visible = BTreeMap::new();
                for (label, alts) in node.visible {
                    let new = map
                        .iter()
                        .find(|(old, _)| *old == label)
                        .map_or(label, |(_, new)| new.clone());
                    if visible.insert(new.clone(), alts).is_some() {
                        return Err(AlgebraError::RenameCollision { label: new });
                    }
                }
                Ok(Node { visible, hidden: node.hidden })
            }
            CompositionExpr::Hide { child, labels } => {
                let mut node = self.eval(child)?;
                for l in labels {
                    if let Some(alts) = node.visible.remove(l) {
                        node.hidden.extend(alts.into_iter().map(|a| (l.clone(), a)));
                    }
                }
                Ok(node)
            }
            CompositionExpr::Par { left, right, sync } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                let sync: BTreeSet<&str> = sync.iter().map(String::as_str).collect();
                Ok(self.compose(l, r, &sync))
            }
            CompositionExpr::ParAuto { left, right } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                let shared: Vec<String> =
                    l.visible.keys().filter(|k| r.visible.contains_key(*k)).cloned().collect();
                let sync: BTreeSet<&str> = shared.iter().map(String::as_str).collect();
                Ok(self.compose(l, r, &sync))
            }
        }
    }

    fn compose(&mut self, mut l: Node, mut r: Node, sync: &BTreeSet<&str>) -> Node {
        let labels: BTreeSet<String> = l.visible.keys().chain(r.visible.keys()).cloned().collect();
        let mut visible = BTreeMap::new();
        for label in labels {
            let la = l.visible.remove(&label);
            let ra = r.visible.remove(&label);
            let alts = if sync.contains(label.as_str()) {
                let la = la.unwrap_or_default();
                let ra = ra.unwrap_or_default();
                if la.is_empty() != ra.is_empty() {
                    self.blocked.insert(label.clone());
                }
                let mut prod = Vec::new();
                for a in &la {
                    for b in &ra {
                        let mut joint = a.clone();
                        joint.extend(b.iter().cloned());
                        joint.sort();
                        prod.push(joint);
                    }
                }
                prod
            } else {
                let mut alts = la.unwrap_or_default();
                alts.extend(ra.unwrap_or_default());
                alts
            };
            visible.insert(label, alts);
        }
        let mut hidden = l.hidden;
        hidden.append(&mut r.hidden);
        Node { visible, hidden }
    }
}

/// Resolve an expression into components, joint actions and blocked labels.
pub fn flatten(expr: &CompositionExpr, model: &Model) -> Result<FlatSystem, AlgebraError> {
    let mut f = Flattener { model, components: Vec::new(), blocked: BTreeSet::new() };
    let root = f.eval(expr)?;
    let alphabet: Alphabet = root.visible.keys().cloned().collect();
    let mut actions = Vec::new();
    for (label, alts) in root.visible {
        for participants in alts {
            actions.push(Action { label: label.clone(), hidden: false, participants });
        }
    }
    for (label, participants) in root.hidden {
        actions.push(Action { label, hidden: true, participants });
    }
    Ok(FlatSystem { components: f.components, actions, blocked: f.blocked, alphabet })
}

/// Sync-set entries that neither operand can ever offer.
pub fn vacuous_sync_labels(expr: &CompositionExpr, model: &Model) -> Result<Vec<String>, AlgebraError> {
    let mut out = Vec::new();
    collect_vacuous(expr, model, &mut out)?;
    Ok(out)
}

fn collect_vacuous(expr: &CompositionExpr, model: &Model, out: &mut Vec<String>) -> Result<(), AlgebraError> {
    match expr {
        CompositionExpr::Instance { .. } => {}
        CompositionExpr::Rename { child, .. } | CompositionExpr::Hide { child, .. } => {
            collect_vacuous(child, model, out)?
        }
        CompositionExpr::Par { left, right, sync } => {
            collect_vacuous(left, model, out)?;
            collect_vacuous(right, model, out)?;
            let (a, b) = (alphabet(left, model)?, alphabet(right, model)?);
            for l in sync {
                if !a.contains(l) && !b.contains(l) && !out.contains(l) {
                    out.push(l.clone());
                }
            }
        }
        CompositionExpr::ParAuto { left, right } => {
            collect_vacuous(left, model, out)?;
            collect_vacuous(right, model, out)?;
        }
    }
    Ok(())
}
