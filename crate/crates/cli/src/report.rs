//! Report model and its text, csv and tree renderings.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

/// Six significant digits; scientific for very small magnitudes.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if mag < -4 {
        return format!("{x:.5e}");
    }
    let prec = (5 - mag).max(0) as usize;
    format!("{x:.prec$}")
}

/// Round half away from zero at `decimals`, as printed tables do.
pub fn round_to(x: f64, decimals: usize) -> String {
    format!("{x:.decimals$}")
}

pub fn truncate_to(x: f64, decimals: usize) -> String {
    let s = 10f64.powi(decimals as i32);
    format!("{:.decimals$}", (x * s + 1e-9).floor() / s)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub file: String,
    pub system: String,
    pub states: usize,
    pub transitions: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub formula: String,
    pub value: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverInfo {
    pub property: String,
    pub method: String,
    pub iterations: usize,
    pub unknowns: usize,
    pub direct: bool,
    pub uniformization_rate: String,
    pub poisson_left: usize,
    pub poisson_right: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaRow {
    pub property: String,
    pub baseline: String,
    pub candidate: String,
    pub delta: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Detection {
    pub baseline: ModelInfo,
    pub candidate: ModelInfo,
    pub threshold: String,
    pub rows: Vec<DeltaRow>,
    pub detected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SharedRow {
    pub label: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub file: String,
    pub left: String,
    pub right: String,
    pub category: String,
    pub shared: Vec<SharedRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Characterisation {
    pub verdicts: Vec<(String, bool)>,
    pub independence: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub fixture: String,
    pub property: String,
    pub published: String,
    pub computed: String,
    pub rounded: String,
    pub truncated: String,
    pub within_tolerance: bool,
}

/// Everything that must be byte-identical between runs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Canonical {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelInfo>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<PropertyResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<Detection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub characterisation: Option<Characterisation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<TableRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solver: Vec<SolverInfo>,
}

pub struct Report {
    pub canonical: Canonical,
    pub wall_ms: f64,
}

impl Report {
    pub fn tree(&self) -> String {
        let v = json!({
            "canonical": serde_json::to_value(&self.canonical).expect("serialisable"),
            "timing": { "wall_ms": sig6(self.wall_ms) },
        });
        let mut s = serde_json::to_string_pretty(&v).expect("serialisable");
        s.push('\n');
        s
    }

    pub fn csv(&self) -> String {
        let c = &self.canonical;
        let mut out = String::new();
        let q = |s: &str| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_string()
            }
        };
        if !c.results.is_empty() {
            out.push_str("property,value,formula\n");
            for r in &c.results {
                let _ = writeln!(out, "{},{},{}", q(&r.name), r.value, q(&r.formula));
            }
        }
        if let Some(d) = &c.detection {
            out.push_str("property,baseline,candidate,delta\n");
            for r in &d.rows {
                let _ = writeln!(out, "{},{},{},{}", r.property, r.baseline, r.candidate, r.delta);
            }
            let _ = writeln!(out, "detected,{},threshold,{}", d.detected, d.threshold);
        }
        if let Some(cl) = &c.classification {
            out.push_str("category,label,left,right\n");
            if cl.shared.is_empty() {
                let _ = writeln!(out, "{},,,", cl.category);
            }
            for s in &cl.shared {
                let _ = writeln!(out, "{},{},{},{}", q(&cl.category), s.label, q(&s.left), q(&s.right));
            }
        }
        if let Some(ch) = &c.characterisation {
            out.push_str("signature,holds\n");
            for (n, v) in &ch.verdicts {
                let _ = writeln!(out, "{n},{v}");
            }
            let _ = writeln!(out, "independence,{}", ch.independence);
        }
        if !c.table.is_empty() {
            out.push_str("fixture,property,published,computed,rounded,truncated,within_tolerance\n");
            for r in &c.table {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.fixture, r.property, r.published, r.computed, r.rounded, r.truncated, r.within_tolerance
                );
            }
        }
        out
    }

    pub fn text(&self) -> String {
        let c = &self.canonical;
        let mut out = String::new();
        if let Some(m) = &c.model {
            let _ = writeln!(out, "model   {} : {}", m.file, m.system);
            let _ = writeln!(out, "states  {}  transitions {}", m.states, m.transitions);
        }
        if !c.results.is_empty() {
            out.push('\n');
            let rows: Vec<Vec<String>> =
                c.results.iter().map(|r| vec![r.name.clone(), r.value.clone(), r.formula.clone()]).collect();
            out.push_str(&table(&["property", "value", "formula"], &rows));
            for r in &c.results {
                for w in &r.warnings {
                    let _ = writeln!(out, "warning: {}: {w}", r.name);
                }
            }
        }
        if let Some(d) = &c.detection {
            let _ = writeln!(out, "baseline   {} : {} ({} states)", d.baseline.file, d.baseline.system, d.baseline.states);
            let _ = writeln!(out, "candidate  {} : {} ({} states)", d.candidate.file, d.candidate.system, d.candidate.states);
            out.push('\n');
            let rows: Vec<Vec<String>> = d
                .rows
                .iter()
                .map(|r| vec![r.property.clone(), r.baseline.clone(), r.candidate.clone(), r.delta.clone()])
                .collect();
            out.push_str(&table(&["property", "baseline", "candidate", "delta"], &rows));
            let _ = writeln!(out, "\ncross-talk detected: {} (threshold {})", if d.detected { "yes" } else { "no" }, d.threshold);
        }
        if let Some(cl) = &c.classification {
            let _ = writeln!(out, "model     {}", cl.file);
            let _ = writeln!(out, "left      {}", cl.left);
            let _ = writeln!(out, "right     {}", cl.right);
            let _ = writeln!(out, "category  {}", cl.category);
            if !cl.shared.is_empty() {
                out.push('\n');
                let rows: Vec<Vec<String>> =
                    cl.shared.iter().map(|s| vec![s.label.clone(), s.left.clone(), s.right.clone()]).collect();
                out.push_str(&table(&["shared label", "left", "right"], &rows));
            }
        }
        if let Some(ch) = &c.characterisation {
            out.push('\n');
            let mut rows: Vec<Vec<String>> =
                ch.verdicts.iter().map(|(n, v)| vec![n.clone(), v.to_string()]).collect();
            rows.push(vec!["independence".into(), ch.independence.to_string()]);
            out.push_str(&table(&["signature", "holds"], &rows));
        }
        if !c.table.is_empty() {
            let rows: Vec<Vec<String>> = c
                .table
                .iter()
                .map(|r| {
                    vec![
                        r.fixture.clone(),
                        r.property.clone(),
                        r.published.clone(),
                        r.rounded.clone(),
                        r.truncated.clone(),
                        r.computed.clone(),
                        if r.within_tolerance { "ok".into() } else { "MISS".into() },
                    ]
                })
                .collect();
            out.push_str(&table(&["fixture", "property", "published", "rounded", "truncated", "computed", "tol"], &rows));
        }
        if !c.solver.is_empty() {
            out.push('\n');
            let rows: Vec<Vec<String>> = c
                .solver
                .iter()
                .map(|s| {
                    let detail = match s.method.as_str() {
                        "linear" => format!(
                            "{} unknowns, {} iterations{}",
                            s.unknowns,
                            s.iterations,
                            if s.direct { ", direct" } else { "" }
                        ),
                        "uniformization" => {
                            format!("q = {}, poisson [{}, {}]", s.uniformization_rate, s.poisson_left, s.poisson_right)
                        }
                        _ => String::new(),
                    };
                    vec![s.property.clone(), s.method.clone(), detail]
                })
                .collect();
            out.push_str(&table(&["property", "method", "detail"], &rows));
        }
        let _ = writeln!(out, "\nwall time {} ms", sig6(self.wall_ms));
        out
    }
}

fn table(head: &[&str], rows: &[Vec<String>]) -> String {
    let mut w: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            w[i] = w[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i + 1 == cells.len() {
                s.push_str(c);
            } else {
                let _ = write!(s, "{c:<width$}  ", width = w[i]);
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(head.to_vec());
    out += &line(w.iter().map(|n| "-".repeat(*n)).collect::<Vec<_>>().iter().map(String::as_str).collect());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}
