//! Browser bindings: check a property, plot a time-bounded curve, and run the
//! cross-talk analysis on a shipped fixture.
//!
//! Every export returns a JSON string, `{"ok": ...}` or `{"error": "..."}`.

use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use crosstalk::algebra;
use crosstalk::crosstalk as xt;
use crosstalk::csl::{self, Verdict};
use crosstalk::ctmc::{self, BuildOptions, Ctmc};
use crosstalk::lang::{parse_composition, parse_model, parse_property, CslFormula, PathFormula};
use crosstalk::stdlib;

/// Interactive use gets a smaller cap than the CLI.
const STATE_CAP: usize = 200_000;

fn reply<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => json!({ "ok": v }).to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn build(model_text: &str, system: &str) -> Result<Ctmc, String> {
    let model = parse_model(model_text).map_err(|e| format!("model: {e}"))?;
    let expr = parse_composition(system, &model).map_err(|e| format!("system: {e}"))?.expr;
    let flat = algebra::flatten(&expr, &model).map_err(|e| e.to_string())?;
    ctmc::build_with(&flat, BuildOptions { state_cap: STATE_CAP }).map_err(|e| e.to_string())
}

pub fn check_json(model_text: &str, system: &str, property: &str) -> Result<Value, String> {
    let c = build(model_text, system)?;
    let f = parse_property(property).map_err(|e| format!("property: {e}"))?;
    let r = csl::check_property(&c, &f).map_err(|e| e.to_string())?;
    let value = match r.value {
        Verdict::Bool(b) => json!(b),
        Verdict::Probability(p) => json!(p),
    };
    Ok(json!({
        "states": c.num_states(),
        "transitions": c.transitions.len(),
        "formula": f.to_string(),
        "value": value,
        "method": r.diagnostics.method,
        "warnings": r.warnings,
    }))
}

/// `P(F<=t goal)` at `steps + 1` evenly spaced times in `[0, t_max]`.
pub fn curve_json(model_text: &str, system: &str, goal: &str, t_max: f64, steps: usize) -> Result<Value, String> {
    if !(t_max > 0.0 && t_max.is_finite()) || steps == 0 || steps > 1000 {
        return Err("need t_max > 0 and 1..=1000 steps".into());
    }
    let c = build(model_text, system)?;
    let goal_f = parse_property(goal).map_err(|e| format!("goal: {e}"))?;
    let phi2 = csl::eval_state_formula(&c, &goal_f).map_err(|e| e.to_string())?;
    let phi1 = csl::StateSet::full(c.num_states());
    let points: Vec<[f64; 2]> = (0..=steps)
        .map(|i| {
            let t = t_max * i as f64 / steps as f64;
            [t, csl::prob_bounded_until(&c, &phi1, &phi2, t)[c.initial]]
        })
        .collect();
    let eventually = csl::prob_unbounded_until(&c, &phi1, &phi2).map_err(|e| e.to_string())?[c.initial];
    let shown = CslFormula::prob(crosstalk::lang::Bound::Query, PathFormula::Eventually(Box::new(goal_f)));
    Ok(json!({ "formula": shown.to_string(), "points": points, "eventually": eventually }))
}

/// Detection against the independent system, classification and signatures.
pub fn fixture_json(name: &str) -> Result<Value, String> {
    let f = stdlib::load_fixture(name).map_err(|e| e.to_string())?;
    let base = stdlib::load_fixture("independent").map_err(|e| e.to_string())?;
    let built = |fx: &stdlib::Fixture| -> Result<Ctmc, String> {
        let flat = algebra::flatten(&fx.system, &fx.model).map_err(|e| e.to_string())?;
        ctmc::build(&flat).map_err(|e| e.to_string())
    };
    let (cb, cm) = (built(&base)?, built(&f)?);
    let det = xt::detect(&cb, &cm, xt::DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    let (l, r) = f.operands().ok_or("fixture system is not a parallel composition")?;
    let cls = xt::classify(l, r, &f.model).map_err(|e| e.to_string())?;
    let ch = xt::characterise(&cm).map_err(|e| e.to_string())?;
    Ok(json!({
        "name": name,
        "system": f.system.to_string(),
        "states": cm.num_states(),
        "category": cls.category.to_string(),
        "shared": cls.shared_labels(),
        "detection": det,
        "signatures": ch.verdicts,
        "independence": ch.independence,
    }))
}

#[wasm_bindgen]
pub fn check(model_text: &str, system: &str, property: &str) -> String {
    reply(check_json(model_text, system, property))
}

#[wasm_bindgen]
pub fn transient_curve(model_text: &str, system: &str, goal: &str, t_max: f64, steps: usize) -> String {
    reply(curve_json(model_text, system, goal, t_max, steps))
}

#[wasm_bindgen]
pub fn analyse_fixture(name: &str) -> String {
    reply(fixture_json(name))
}

/// The shipped pathway model, to seed the editor.
#[wasm_bindgen]
pub fn pathways_model() -> String {
    stdlib::PATHWAYS_CTK.to_string()
}

#[wasm_bindgen]
pub fn fixture_names() -> String {
    json!(stdlib::FIXTURE_NAMES).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(s: &str) -> Value {
        let v: Value = serde_json::from_str(s).unwrap();
        v.get("ok").cloned().unwrap_or_else(|| panic!("{s}"))
    }

    #[test]
    fn check_on_shipped_model() {
        let v = ok(&check(&pathways_model(), "signal_flow", "P=? [ F (Protein1 = 1 & Protein2 = 0) ]"));
        assert!((v["value"].as_f64().unwrap() - 0.637997).abs() < 1e-6);
        assert_eq!(v["states"], 60);
    }

    #[test]
    fn curve_is_monotone_and_ends_below_eventual() {
        let v = ok(&transient_curve(&pathways_model(), "P1", "Protein1 = 1", 10.0, 20));
        let pts = v["points"].as_array().unwrap();
        assert_eq!(pts.len(), 21);
        let ys: Vec<f64> = pts.iter().map(|p| p[1].as_f64().unwrap()).collect();
        assert_eq!(ys[0], 0.0);
        assert!(ys.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(ys[20] <= v["eventually"].as_f64().unwrap() + 1e-9);
    }

    #[test]
    fn fixture_analysis() {
        let v = ok(&analyse_fixture("gene-expression"));
        assert_eq!(v["category"], "gene-expression");
        assert_eq!(v["detection"]["detected"], true);
        assert_eq!(v["shared"], json!(["e13_1"]));
    }

    #[test]
    fn errors_are_reported_not_thrown() {
        let v: Value = serde_json::from_str(&check("module M endmodule", "Nope", "P=? [ F x = 1 ]")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("system"));
        let v: Value = serde_json::from_str(&transient_curve("", "x", "true", -1.0, 5)).unwrap();
        assert!(v.get("error").is_some());
        let v: Value = serde_json::from_str(&analyse_fixture("")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("unknown fixture"));
    }
}
