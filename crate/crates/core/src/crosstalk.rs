//! Classification, detection and characterisation of cross-talk between two pathways.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{self, AlgebraError, CompositionExpr, FlatSystem};
use crate::csl::{self, CheckError, CheckOptions};
use crate::ctmc::Ctmc;
use crate::lang::{parse_property_file, ModuleKind, Model, NamedProperty, Role};
use crate::stdlib::{CHARACTERISATION_CSL, DETECTION_CSL};

pub const DEFAULT_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CrosstalkCategory {
    Independent,
    SignalFlow,
    SubstrateAvailability,
    ReceptorFunction,
    GeneExpression,
    IntracellularCommunication,
    Unclassified(BTreeSet<String>),
}

impl CrosstalkCategory {
    /// Kebab-case name, matching the fixture names.
    pub fn keyword(&self) -> &'static str {
        match self {
            CrosstalkCategory::Independent => "independent",
            CrosstalkCategory::SignalFlow => "signal-flow",
            CrosstalkCategory::SubstrateAvailability => "substrate-availability",
            CrosstalkCategory::ReceptorFunction => "receptor-function",
            CrosstalkCategory::GeneExpression => "gene-expression",
            CrosstalkCategory::IntracellularCommunication => "intracellular-communication",
            CrosstalkCategory::Unclassified(_) => "unclassified",
        }
    }
}

impl fmt::Display for CrosstalkCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrosstalkCategory::Unclassified(e) => {
                write!(f, "unclassified {{{}}}", e.iter().cloned().collect::<Vec<_>>().join(", "))
            }
            c => f.write_str(c.keyword()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrosstalkError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("shared label `{label}`: `{local}` in `{module}` has no role annotation")]
    MissingAnnotation { label: String, module: String, local: String },
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// What one pathway contributes to a shared label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct LabelUse {
    pub module: String,
    pub kind: ModuleKind,
    pub local_label: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SharedLabel {
    pub label: String,
    pub left: Vec<LabelUse>,
    pub right: Vec<LabelUse>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub category: CrosstalkCategory,
    pub shared: Vec<SharedLabel>,
}

impl Classification {
    pub fn shared_labels(&self) -> BTreeSet<&str> {
        self.shared.iter().map(|s| s.label.as_str()).collect()
    }
}

fn uses(flat: &FlatSystem, label: &str) -> Result<Vec<LabelUse>, CrosstalkError> {
    let mut out = Vec::new();
    for p in flat.participation(label) {
        let c = &flat.components[p.component];
        let missing = || CrosstalkError::MissingAnnotation {
            label: label.to_string(),
            module: c.module.name.clone(),
            local: p.local_label.clone(),
        };
        let ann = c.annotations.as_ref().ok_or_else(missing)?;
        let role = ann.role_of(&p.local_label).ok_or_else(missing)?;
        out.push(LabelUse { module: c.module.name.clone(), kind: ann.kind, local_label: p.local_label.clone(), role });
    }
    out.sort();
    Ok(out)
}

/// Shared external labels with the annotated roles each side plays in them.
pub fn shared_labels(p1: &CompositionExpr, p2: &CompositionExpr, model: &Model) -> Result<Vec<SharedLabel>, CrosstalkError> {
    let f1 = algebra::flatten(p1, model)?;
    let f2 = algebra::flatten(p2, model)?;
    let common = f1.alphabet.intersection(&f2.alphabet);
    common
        .iter()
        .map(|l| Ok(SharedLabel { label: l.to_string(), left: uses(&f1, l)?, right: uses(&f2, l)? }))
        .collect()
}

fn all(side: &[LabelUse], f: impl Fn(&LabelUse) -> bool) -> bool {
    !side.is_empty() && side.iter().all(f)
}

fn intracellular(s: &SharedLabel) -> bool {
    let deg = |u: &LabelUse| u.kind == ModuleKind::GeneExpression && u.role == Role::Degradation;
    let lig = |u: &LabelUse| u.kind == ModuleKind::Receptor && u.role == Role::LigandProduction;
    (all(&s.left, deg) && all(&s.right, lig)) || (all(&s.left, lig) && all(&s.right, deg))
}

fn receptor(s: &SharedLabel) -> bool {
    let rec = |u: &LabelUse| u.kind == ModuleKind::Receptor;
    let modulator = |u: &LabelUse| {
        u.role.is_modulating() && (u.kind == ModuleKind::Receptor || intermediate(u.kind))
    };
    (all(&s.left, rec) && all(&s.right, modulator)) || (all(&s.left, modulator) && all(&s.right, rec))
}

/// Intermediate signalling modules between receptor and gene expression.
fn intermediate(kind: ModuleKind) -> bool {
    matches!(
        kind,
        ModuleKind::Cascade | ModuleKind::ProteinActivation | ModuleKind::Translocation | ModuleKind::ProteinBinding
    )
}

fn cascade_flow(u: &LabelUse) -> bool {
    intermediate(u.kind) || (u.kind == ModuleKind::Receptor && u.role.is_modulating())
}

/// A degradation on one side fused with a production on the other: both
/// pathways draw on the same protein.
fn competes(s: &SharedLabel) -> bool {
    let deg = |side: &[LabelUse]| side.iter().any(|u| u.role == Role::Degradation);
    let prod = |side: &[LabelUse]| side.iter().any(|u| u.role.is_productive());
    (deg(&s.left) && prod(&s.right)) || (deg(&s.right) && prod(&s.left))
}

/// Rule-ordered classification of the shared labels.
pub fn categorise(shared: &[SharedLabel]) -> CrosstalkCategory {
    if shared.is_empty() {
        return CrosstalkCategory::Independent;
    }
    if shared.iter().all(intracellular) {
        return CrosstalkCategory::IntracellularCommunication;
    }
    let every: Vec<&LabelUse> = shared.iter().flat_map(|s| s.left.iter().chain(&s.right)).collect();
    let is_gene = |u: &&LabelUse| u.kind == ModuleKind::GeneExpression;
    if every.iter().any(is_gene)
        && every.iter().filter(|u| !is_gene(u)).all(|u| intermediate(u.kind) && u.role.is_modulating())
    {
        return CrosstalkCategory::GeneExpression;
    }
    if shared.iter().all(receptor) {
        return CrosstalkCategory::ReceptorFunction;
    }
    if every.iter().all(|u| cascade_flow(u)) {
        return if shared.iter().any(competes) {
            CrosstalkCategory::SubstrateAvailability
        } else {
            CrosstalkCategory::SignalFlow
        };
    }
    CrosstalkCategory::Unclassified(shared.iter().map(|s| s.label.clone()).collect())
}

pub fn classify(p1: &CompositionExpr, p2: &CompositionExpr, model: &Model) -> Result<Classification, CrosstalkError> {
    let shared = shared_labels(p1, p2, model)?;
    Ok(Classification { category: categorise(&shared), shared })
}

pub fn detection_properties() -> Vec<NamedProperty> {
    parse_property_file(DETECTION_CSL).expect("shipped detection properties parse")
}

/// The five signatures, in category order, followed by `independence`.
pub fn characterisation_properties() -> Vec<NamedProperty> {
    parse_property_file(CHARACTERISATION_CSL).expect("shipped characterisation properties parse")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRow {
    pub property: String,
    pub baseline: f64,
    pub model: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub rows: Vec<DetectionRow>,
    pub threshold: f64,
    pub detected: bool,
}

pub fn detect(baseline: &Ctmc, model: &Ctmc, threshold: f64) -> Result<DetectionReport, CrosstalkError> {
    detect_with(baseline, model, threshold, &CheckOptions::default())
}

pub fn detect_with(
    baseline: &Ctmc,
    model: &Ctmc,
    threshold: f64,
    opts: &CheckOptions,
) -> Result<DetectionReport, CrosstalkError> {
    let mut rows = Vec::new();
    for p in detection_properties() {
        let prob = |c: &Ctmc| -> Result<f64, CrosstalkError> {
            Ok(csl::check_with(c, &p.formula, opts)?.as_probability().expect("detection properties are queries"))
        };
        let (b, m) = (prob(baseline)?, prob(model)?);
        rows.push(DetectionRow { property: p.name.clone(), baseline: b, model: m, delta: m - b });
    }
    let detected = rows.iter().any(|r| r.delta.abs() > threshold);
    Ok(DetectionReport { rows, threshold, detected })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacterisationReport {
    /// (signature name, verdict) for the five signatures.
    pub verdicts: Vec<(String, bool)>,
    pub independence: bool,
}

impl CharacterisationReport {
    pub fn holding(&self) -> Vec<&str> {
        self.verdicts.iter().filter(|(_, v)| *v).map(|(n, _)| n.as_str()).collect()
    }

    pub fn verdict(&self, name: &str) -> Option<bool> {
        self.verdicts.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

pub fn characterise(model: &Ctmc) -> Result<CharacterisationReport, CrosstalkError> {
    let mut verdicts = Vec::new();
    let mut independence = false;
    for p in characterisation_properties() {
        let v = csl::check_property(model, &p.formula)?.as_bool().expect("signatures are bounded");
        if p.name == "independence" {
            independence = v;
        } else {
            verdicts.push((p.name, v));
        }
    }
    Ok(CharacterisationReport { verdicts, independence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stdlib::{load_fixture, FIXTURE_NAMES};

    fn classify_fixture(name: &str) -> Classification {
        let f = load_fixture(name).unwrap();
        let (a, b) = f.operands().unwrap();
        classify(a, b, &f.model).unwrap()
    }

    #[test]
    fn fixtures_classify_as_intended() {
        for name in FIXTURE_NAMES {
            assert_eq!(classify_fixture(name).category.keyword(), name);
        }
    }

    #[test]
    fn shared_sets() {
        let e = |n| classify_fixture(n).shared_labels().into_iter().map(String::from).collect::<Vec<_>>();
        assert!(e("independent").is_empty());
        assert_eq!(e("signal-flow"), ["e7_1"]);
        assert_eq!(e("substrate-availability"), ["e9_2"]);
        assert_eq!(e("receptor-function"), ["e3_2"]);
        assert_eq!(e("gene-expression"), ["e13_1"]);
        assert_eq!(e("intracellular-communication"), ["e4_2"]);
    }

    #[test]
    fn substrate_fuses_degradation_with_activation() {
        let c = classify_fixture("substrate-availability");
        let s = &c.shared[0];
        assert!(s.left.iter().any(|u| u.role == Role::Degradation && u.local_label == "e12_1"));
        assert!(s.right.iter().any(|u| u.role == Role::Activation && u.local_label == "e9_2"));
    }

    #[test]
    fn unannotated_shared_label_is_an_error() {
        let mut f = load_fixture("signal-flow").unwrap();
        f.model.annotations.retain(|a| a.module != "Cascade3");
        let (a, b) = f.operands().unwrap();
        assert!(matches!(classify(a, b, &f.model), Err(CrosstalkError::MissingAnnotation { .. })));
    }

    #[test]
    fn case_study_cross_talk_groups() {
        use crate::stdlib::case_study_skeleton;
        let cs = case_study_skeleton();
        let m = &cs.model;
        let sys = |name: &str| {
            let c = &cs.model.composition(name).unwrap().expr;
            c.split_par().map(|(l, r)| (l.clone(), r.clone())).unwrap()
        };
        let (tgf_mapk, wnt) = sys("combined");
        let (tgf, mapk) = tgf_mapk.split_par().unwrap();
        // signal flow and gene expression mixed: no single category
        let c = classify(tgf, mapk, m).unwrap();
        assert!(matches!(c.category, CrosstalkCategory::Unclassified(_)));
        assert_eq!(c.shared_labels().len(), 4);
        // Axin degrading Smad7 alone: catalysis against degradation, signal flow
        let c = classify(&tgf_mapk, &wnt, m).unwrap();
        let smad7 = c.shared.iter().find(|s| s.label == "pa4_4").unwrap();
        assert_eq!(categorise(std::slice::from_ref(smad7)), CrosstalkCategory::SignalFlow);
        let ligand = c.shared.iter().find(|s| s.label == "e4_1").unwrap();
        assert_eq!(categorise(std::slice::from_ref(ligand)), CrosstalkCategory::IntracellularCommunication);
        let beta = c.shared.iter().find(|s| s.label == "tg4").unwrap();
        assert_eq!(categorise(std::slice::from_ref(beta)), CrosstalkCategory::GeneExpression);
    }

    #[test]
    fn mixed_labels_are_unclassified() {
        let rec = LabelUse { module: "R".into(), kind: ModuleKind::Receptor, local_label: "e4_1".into(), role: Role::LigandProduction };
        let gene = LabelUse { module: "G".into(), kind: ModuleKind::GeneExpression, local_label: "e13_1".into(), role: Role::Expression };
        let s = SharedLabel { label: "x".into(), left: vec![rec], right: vec![gene] };
        assert!(matches!(categorise(&[s]), CrosstalkCategory::Unclassified(_)));
    }
}
