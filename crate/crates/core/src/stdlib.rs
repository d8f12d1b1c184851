//! Shipped fixtures: the generic modules, the two pathways, the independent
//! and five cross-talk systems, their property suites and expected values,
//! plus a case-study skeleton with the extended module kinds.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::CompositionExpr;
use crate::lang::{parse_model, parse_property_file, Model, NamedProperty, ParseError};

pub const PATHWAYS_CTK: &str = include_str!("../fixtures/pathways.ctk");
pub const DETECTION_CSL: &str = include_str!("../fixtures/detection.csl");
pub const CHARACTERISATION_CSL: &str = include_str!("../fixtures/characterisation.csl");
pub const EXPECTED_TSV: &str = include_str!("../fixtures/expected.tsv");
pub const CASE_STUDY_CTK: &str = include_str!("../fixtures/case_study.ctk");
pub const CASE_STUDY_CSL: &str = include_str!("../fixtures/case_study.csl");

/// The independent system first, then the five cross-talk systems.
pub const FIXTURE_NAMES: [&str; 6] = [
    "independent",
    "signal-flow",
    "substrate-availability",
    "receptor-function",
    "gene-expression",
    "intracellular-communication",
];

pub const CASE_STUDY_SYSTEMS: [&str; 5] = ["independent", "mapk", "wnt", "combined", "no_failure"];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}` (known: {known})", known = FIXTURE_NAMES.join(", "))]
    Unknown(String),
    #[error("{file}: {err}")]
    Parse { file: String, err: ParseError },
    #[error("{file}: {msg}")]
    Malformed { file: String, msg: String },
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Published to three decimals.
    Published3,
    /// Published to five decimals.
    Published5,
    /// Follows from the model structure alone.
    Derived,
}

impl Source {
    pub fn keyword(self) -> &'static str {
        match self {
            Source::Published3 => "published-3dp",
            Source::Published5 => "published-5dp",
            Source::Derived => "derived",
        }
    }

    /// Acceptance tolerance matching the printed precision.
    pub fn tolerance(self) -> f64 {
        match self {
            Source::Published3 => 5e-4,
            Source::Published5 => 5e-6,
            Source::Derived => 0.0,
        }
    }

    /// Decimals the value was printed with, if any.
    pub fn decimals(self) -> Option<usize> {
        match self {
            Source::Published3 => Some(3),
            Source::Published5 => Some(5),
            Source::Derived => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ExpectedValue {
    Probability(f64),
    Bool(bool),
}

impl fmt::Display for ExpectedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpectedValue::Probability(p) => write!(f, "{p}"),
            ExpectedValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expected {
    pub fixture: String,
    pub property: String,
    pub value: ExpectedValue,
    pub source: Source,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub model_text: String,
    pub model: Model,
    /// The system this fixture checks.
    pub system: CompositionExpr,
    pub properties: Vec<NamedProperty>,
    pub expected: Vec<Expected>,
}

impl Fixture {
    pub fn expected_for(&self, property: &str) -> Option<&Expected> {
        self.expected.iter().find(|e| e.property == property)
    }

    pub fn property(&self, name: &str) -> Option<&NamedProperty> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// A named pathway of the fixture model (`P1`, `P2`, ...), as a composition.
    pub fn pathway(&self, name: &str) -> Option<&CompositionExpr> {
        self.model.composition(name).map(|c| &c.expr)
    }

    /// The two pathway operands of the system, after inlining.
    pub fn operands(&self) -> Option<(&CompositionExpr, &CompositionExpr)> {
        self.system.split_par()
    }
}

/// Fixture name to the system it selects in `pathways.ctk`.
pub fn system_name(fixture: &str) -> String {
    fixture.replace('-', "_")
}

struct Sources<'a> {
    model: &'a str,
    detection: &'a str,
    characterisation: &'a str,
    expected: &'a str,
}

const EMBEDDED: Sources<'static> = Sources {
    model: PATHWAYS_CTK,
    detection: DETECTION_CSL,
    characterisation: CHARACTERISATION_CSL,
    expected: EXPECTED_TSV,
};

/// Load one of the shipped fixtures.
pub fn load_fixture(name: &str) -> Result<Fixture, FixtureError> {
    assemble(name, &EMBEDDED)
}

/// Load a fixture from a directory holding `pathways.ctk`, `detection.csl`,
/// `characterisation.csl` and `expected.tsv`.
pub fn load_fixture_from(dir: &Path, name: &str) -> Result<Fixture, FixtureError> {
    let read = |f: &str| {
        let p = dir.join(f);
        std::fs::read_to_string(&p).map_err(|e| FixtureError::Io(p.display().to_string(), e))
    };
    let model = read("pathways.ctk")?;
    let detection = read("detection.csl")?;
    let characterisation = read("characterisation.csl")?;
    let expected = read("expected.tsv")?;
    assemble(name, &Sources { model: &model, detection: &detection, characterisation: &characterisation, expected: &expected })
}

fn assemble(name: &str, src: &Sources) -> Result<Fixture, FixtureError> {
    if !FIXTURE_NAMES.contains(&name) {
        return Err(FixtureError::Unknown(name.to_string()));
    }
    let model = parse_model(src.model).map_err(|err| FixtureError::Parse { file: "pathways.ctk".into(), err })?;
    let system = model
        .composition(&system_name(name))
        .ok_or_else(|| FixtureError::Malformed {
            file: "pathways.ctk".into(),
            msg: format!("no system `{}`", system_name(name)),
        })?
        .expr
        .clone();
    let mut properties =
        parse_property_file(src.detection).map_err(|err| FixtureError::Parse { file: "detection.csl".into(), err })?;
    properties.extend(
        parse_property_file(src.characterisation)
            .map_err(|err| FixtureError::Parse { file: "characterisation.csl".into(), err })?,
    );
    let expected = parse_expected(src.expected)?.into_iter().filter(|e| e.fixture == name).collect();
    Ok(Fixture { name: name.to_string(), model_text: src.model.to_string(), model, system, properties, expected })
}

/// Parse the tab-separated expectations table: fixture, property, value, source.
pub fn parse_expected(text: &str) -> Result<Vec<Expected>, FixtureError> {
    let bad = |line: usize, msg: String| FixtureError::Malformed { file: "expected.tsv".into(), msg: format!("line {line}: {msg}") };
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if n == 0 || line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [fixture, property, value, source] = cols[..] else {
            return Err(bad(n + 1, format!("expected 4 columns, found {}", cols.len())));
        };
        let value = match value {
            "true" => ExpectedValue::Bool(true),
            "false" => ExpectedValue::Bool(false),
            v => ExpectedValue::Probability(v.parse().map_err(|_| bad(n + 1, format!("bad value `{v}`")))?),
        };
        let source = match source {
            "published-3dp" => Source::Published3,
            "published-5dp" => Source::Published5,
            "derived" => Source::Derived,
            s => return Err(bad(n + 1, format!("unknown source `{s}`"))),
        };
        out.push(Expected { fixture: fixture.to_string(), property: property.to_string(), value, source });
    }
    Ok(out)
}

/// The whole expectations table.
pub fn expected_table() -> Vec<Expected> {
    parse_expected(EXPECTED_TSV).expect("shipped table parses")
}

/// Case-study model with the seven module kinds and the TGF-beta/BMP, WNT and
/// MAPK systems. Reaction wiring is reconstructed, so its values are indicative.
#[derive(Debug, Clone)]
pub struct CaseStudy {
    pub model: Model,
    pub properties: Vec<NamedProperty>,
}

impl CaseStudy {
    pub fn system(&self, name: &str) -> Option<&CompositionExpr> {
        self.model.composition(name).map(|c| &c.expr)
    }
}

pub fn case_study_skeleton() -> CaseStudy {
    let model = parse_model(CASE_STUDY_CTK).expect("case study model parses");
    let properties = parse_property_file(CASE_STUDY_CSL).expect("case study properties parse");
    CaseStudy { model, properties }
}

/// Informational targets for the case study: (system, psi2). Not gated.
pub const CASE_STUDY_PSI2_TARGETS: [(&str, f64); 4] =
    [("independent", 0.47), ("mapk", 0.73), ("wnt", 0.76), ("combined", 0.88)];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_loads() {
        for name in FIXTURE_NAMES {
            let f = load_fixture(name).unwrap();
            assert_eq!(f.properties.len(), 9);
            assert!(f.operands().is_some());
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(load_fixture(""), Err(FixtureError::Unknown(_))));
        assert!(matches!(load_fixture("crosstalk"), Err(FixtureError::Unknown(_))));
    }

    #[test]
    fn independent_blocks_eighteen_labels() {
        let f = load_fixture("independent").unwrap();
        let CompositionExpr::Par { sync, .. } = &f.system else { panic!("not a sync par") };
        assert_eq!(sync.len(), 18);
    }

    #[test]
    fn substrate_uses_primed_second_pathway() {
        let f = load_fixture("substrate-availability").unwrap();
        let p2 = f.pathway("P2prime").unwrap();
        let text = p2.to_string();
        assert!(text.contains("e2_2 <- e9_2"), "{text}");
        assert!(text.contains("|[e5_2, e9_2]|"), "{text}");
    }

    #[test]
    fn expected_table_covers_every_fixture() {
        let t = expected_table();
        for name in FIXTURE_NAMES {
            assert!(t.iter().filter(|e| e.fixture == name).count() >= 3, "{name}");
        }
    }

    #[test]
    fn case_study_has_all_systems() {
        let cs = case_study_skeleton();
        for s in CASE_STUDY_SYSTEMS {
            assert!(cs.system(s).is_some(), "{s}");
        }
    }
}
