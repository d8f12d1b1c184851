//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Cells listed in `KNOWN_FAILURES` are reported as FAIL but do not fail the
//! run; anything else failing, or a known failure starting to pass, does.

mod common;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dense_bounded_until, dense_until, random_chain, random_set};
use crosstalk::algebra::{alphabet, flatten};
use crosstalk::csl::{self, CheckOptions, SolverKind};
use crosstalk::ctmc::{self, Ctmc};
use crosstalk::lang::{parse_composition, parse_model, Model};
use crosstalk::stdlib::{self, ExpectedValue};

/// Published detection values that differ from the computed ones by more
/// than their printed precision, and signature cells off the diagonal.
const KNOWN_FAILURES: [&str; 12] = [
    "1:independent/time_p1",
    "1:independent/time_p2",
    "1:signal-flow/time_p1",
    "1:signal-flow/time_p2",
    "1:substrate-availability/time_p2",
    "1:receptor-function/competitive_p1",
    "1:receptor-function/time_p1",
    "1:gene-expression/time_p2",
    "1:intracellular-communication/time_p1",
    "1:intracellular-communication/time_p2",
    "2:substrate-availability/gene_expression",
    "2:intracellular-communication/receptor_function",
];

struct Outcome {
    title: &'static str,
    failures: Vec<String>,
    detail: String,
    canonical: String,
}

fn build(model: &Model, system: &str) -> Ctmc {
    let e = parse_composition(system, model).unwrap().expr;
    ctmc::build(&flatten(&e, model).unwrap()).unwrap()
}

fn fixture_ctmc(name: &str) -> Ctmc {
    let f = stdlib::load_fixture(name).unwrap();
    ctmc::build(&flatten(&f.system, &f.model).unwrap()).unwrap()
}

fn truncate(x: f64, d: usize) -> String {
    let s = 10f64.powi(d as i32);
    format!("{:.d$}", (x * s + 1e-9).floor() / s)
}

fn detection_table() -> Outcome {
    let mut o = Outcome { title: "detection table", failures: vec![], detail: String::new(), canonical: String::new() };
    let _ = writeln!(o.detail, "    {:<28} {:<15} {:>9} {:>9} {:>9} {:>10}  ", "fixture", "property", "published", "rounded", "truncated", "computed");
    for name in stdlib::FIXTURE_NAMES {
        let f = stdlib::load_fixture(name).unwrap();
        let c = fixture_ctmc(name);
        for prop in ["competitive_p1", "time_p1", "time_p2"] {
            let exp = f.expected_for(prop).unwrap();
            let ExpectedValue::Probability(want) = exp.value else { panic!("{name}/{prop}") };
            let got = csl::check_property(&c, &f.property(prop).unwrap().formula).unwrap().as_probability().unwrap();
            let d = exp.source.decimals().unwrap();
            let ok = (got - want).abs() <= exp.source.tolerance();
            let trunc = truncate(got, d);
            let note = if ok {
                "ok"
            } else if trunc == format!("{want:.d$}") {
                "MISS (matches truncation)"
            } else {
                "MISS"
            };
            if !ok {
                o.failures.push(format!("1:{name}/{prop}"));
            }
            let _ = writeln!(
                o.detail,
                "    {name:<28} {prop:<15} {want:>9.d$} {got:>9.d$} {trunc:>9} {got:>10.6}  {note}"
            );
            let _ = writeln!(o.canonical, "{name} {prop} {got:.12}");
        }
    }
    o
}

const SIGNATURES: [&str; 5] =
    ["signal_flow", "substrate_availability", "receptor_function", "gene_expression", "intracellular_communication"];

fn characterisation_diagonal() -> Outcome {
    let mut o =
        Outcome { title: "characterisation diagonal", failures: vec![], detail: String::new(), canonical: String::new() };
    let _ = write!(o.detail, "    {:<28}", "");
    for s in SIGNATURES {
        let _ = write!(o.detail, " {:>5}", &s[..5]);
    }
    o.detail.push('\n');
    for (i, name) in stdlib::FIXTURE_NAMES[1..].iter().enumerate() {
        let r = crosstalk::crosstalk::characterise(&fixture_ctmc(name)).unwrap();
        let _ = write!(o.detail, "    {name:<28}");
        for (j, sig) in SIGNATURES.iter().enumerate() {
            let v = r.verdict(sig).unwrap();
            if v != (i == j) {
                o.failures.push(format!("2:{name}/{sig}"));
            }
            let _ = write!(o.detail, " {:>5}", if v { "T" } else { "." });
            let _ = write!(o.canonical, "{}", v as u8);
        }
        o.detail.push('\n');
        o.canonical.push('\n');
    }
    let ind = crosstalk::crosstalk::characterise(&fixture_ctmc("independent")).unwrap();
    let _ = writeln!(o.detail, "    independence property on the independent model: {}", ind.independence);
    let _ = writeln!(o.canonical, "independence {}", ind.independence);
    if !ind.independence {
        o.failures.push("2:independent/independence".into());
    }
    o
}

fn oracle_equivalence() -> Outcome {
    let mut o = Outcome { title: "oracle equivalence", failures: vec![], detail: String::new(), canonical: String::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_t, mut worst_r) = (0.0f64, 0.0f64);
    let chains = 16;
    for _ in 0..chains {
        let n = rng.gen_range(2..=6);
        let c = random_chain(&mut rng, n, 0.5);
        let phi1 = random_set(&mut rng, n, 0.8);
        let phi2 = random_set(&mut rng, n, 0.3);
        for t in [0.5, 2.0, 6.0] {
            let got = csl::prob_bounded_until(&c, &phi1, &phi2, t);
            let want = dense_bounded_until(&c, &phi1, &phi2, t);
            worst_t = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(worst_t, f64::max);
        }
        let iterative = CheckOptions { direct_threshold: 0, ..CheckOptions::default() };
        let direct = CheckOptions { solver: SolverKind::Direct, ..CheckOptions::default() };
        let gs = csl::unbounded_until_with(&c, &phi1, &phi2, &iterative).unwrap().0;
        let de = csl::unbounded_until_with(&c, &phi1, &phi2, &direct).unwrap().0;
        let lu = dense_until(&c, &phi1, &phi2);
        for s in 0..n {
            worst_r = worst_r.max((gs[s] - de[s]).abs()).max((gs[s] - lu[s]).abs());
        }
    }
    if worst_t >= 1e-7 {
        o.failures.push("3:uniformization".into());
    }
    if worst_r >= 1e-9 {
        o.failures.push("3:gauss-seidel".into());
    }
    let _ = writeln!(o.detail, "    {chains} chains: transient max error {worst_t:.2e}, reachability max error {worst_r:.2e}");
    let _ = writeln!(o.canonical, "{worst_t:e} {worst_r:e}");
    o
}

fn canonical_transitions(c: &Ctmc) -> Vec<String> {
    let name = |s: usize| {
        let mut kv: Vec<String> =
            c.variables.iter().enumerate().map(|(i, v)| format!("{}={}", v.name, c.value(s, i))).collect();
        kv.sort();
        kv.join(",")
    };
    let mut out: Vec<String> =
        c.transitions.iter().map(|t| format!("{} {} {} {}", name(t.source), t.label, t.rate, name(t.target))).collect();
    out.sort();
    out
}

fn algebraic_invariants() -> Outcome {
    let mut o = Outcome { title: "algebraic invariants", failures: vec![], detail: String::new(), canonical: String::new() };
    let m = parse_model(stdlib::PATHWAYS_CTK).unwrap();

    let ind = fixture_ctmc("independent");
    let u = m.label_set("U_independent").unwrap();
    let fired: Vec<&String> = u.iter().filter(|l| !ind.label_transitions(l).is_empty()).collect();
    if !fired.is_empty() {
        o.failures.push("4:blocking".into());
    }
    let _ = writeln!(o.detail, "    blocking: {} of {} labels in U fire", fired.len(), u.len());

    let labels: Vec<String> = alphabet(&parse_composition("P1", &m).unwrap().expr, &m).unwrap().0.into_iter().collect();
    let base = build(&m, "P1");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = 12;
    let (mut rename_bad, mut hide_bad, mut par_bad) = (0, 0, 0);
    for _ in 0..samples {
        let pick: Vec<&String> = labels.iter().filter(|_| rng.gen_bool(0.4)).collect();
        if pick.is_empty() {
            continue;
        }
        let renames: Vec<String> = pick.iter().map(|l| format!("{l} <- r_{l}")).collect();
        let r = build(&m, &format!("P1 {{{}}}", renames.join(", ")));
        if r.transitions.len() != base.transitions.len() {
            rename_bad += 1;
        }
        let hidden: Vec<&str> = pick.iter().map(|s| s.as_str()).collect();
        let h = build(&m, &format!("P1 / {{{}}}", hidden.join(", ")));
        if h.num_states() != base.num_states() {
            hide_bad += 1;
        }
        let sync = hidden.join(", ");
        let ab = build(&m, &format!("P1 |[{sync}]| P2"));
        let ba = build(&m, &format!("P2 |[{sync}]| P1"));
        if canonical_transitions(&ab) != canonical_transitions(&ba) {
            par_bad += 1;
        }
    }
    for (what, bad) in [("rename", rename_bad), ("hiding", hide_bad), ("commutativity", par_bad)] {
        if bad > 0 {
            o.failures.push(format!("4:{what}"));
        }
        let _ = writeln!(o.detail, "    {what}: {bad} of {samples} samples violate");
    }
    let _ = writeln!(o.canonical, "{} {rename_bad} {hide_bad} {par_bad}", fired.len());
    o
}

fn case_study() -> Outcome {
    let mut o = Outcome { title: "case study", failures: vec![], detail: String::new(), canonical: String::new() };
    let cs = stdlib::case_study_skeleton();
    let mut psi = std::collections::BTreeMap::new();
    for s in stdlib::CASE_STUDY_SYSTEMS {
        let c = ctmc::build(&flatten(cs.system(s).unwrap(), &cs.model).unwrap()).unwrap();
        let v: Vec<f64> = cs
            .properties
            .iter()
            .map(|p| csl::check_property(&c, &p.formula).unwrap().as_probability().unwrap())
            .collect();
        let target = stdlib::CASE_STUDY_PSI2_TARGETS.iter().find(|(n, _)| *n == s).map(|(_, t)| format!(" (informational target {t})")).unwrap_or_default();
        let _ = writeln!(o.detail, "    {s:<12} {:>6} states  psi1 {:.6}  psi2 {:.6}{target}", c.num_states(), v[0], v[1]);
        let _ = writeln!(o.canonical, "{s} {} {:.12} {:.12}", c.num_states(), v[0], v[1]);
        psi.insert(s, (v[0], v[1]));
    }
    let checks = [
        ("psi1 = 1 with MAPK cross-talk", psi["mapk"].0 == 1.0 && psi["combined"].0 == 1.0),
        ("psi1 < 1 independent", psi["independent"].0 < 1.0),
        ("psi1 < 1 WNT only", psi["wnt"].0 < 1.0),
        ("combined psi2 exceeds each single", psi["combined"].1 > psi["mapk"].1 && psi["combined"].1 > psi["wnt"].1),
        ("psi1 = 1 without failure", psi["no_failure"].0 == 1.0),
    ];
    for (what, ok) in checks {
        if !ok {
            o.failures.push(format!("5:{what}"));
        }
        let _ = writeln!(o.detail, "    {what}: {}", if ok { "holds" } else { "violated" });
    }
    o
}

fn run_all() -> Vec<Outcome> {
    vec![detection_table(), characterisation_diagonal(), oracle_equivalence(), algebraic_invariants(), case_study()]
}

fn main() -> ExitCode {
    let first = run_all();
    let second = run_all();
    let same = first.iter().zip(&second).all(|(a, b)| a.canonical == b.canonical && a.failures == b.failures);
    let determinism = Outcome {
        title: "determinism",
        failures: if same { vec![] } else { vec!["6:canonical reports differ".into()] },
        detail: "    two runs compared on every canonical value\n".into(),
        canonical: String::new(),
    };

    let known: BTreeSet<&str> = KNOWN_FAILURES.into_iter().collect();
    let mut unexpected = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, o) in first.iter().chain(std::iter::once(&determinism)).enumerate() {
        let status = if o.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {}: {status}  {}", i + 1, o.title);
        print!("{}", o.detail);
        for f in &o.failures {
            seen.insert(f.clone());
            if known.contains(f.as_str()) {
                println!("    known failure: {f}");
            } else {
                unexpected.push(f.clone());
            }
        }
    }
    let fixed: Vec<&&str> = known.iter().filter(|k| !seen.contains(**k)).collect();
    for f in &unexpected {
        println!("unexpected failure: {f}");
    }
    for f in &fixed {
        println!("known failure no longer fails: {f}");
    }
    if unexpected.is_empty() && fixed.is_empty() {
        println!("acceptance: all failures are the documented known set");
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
