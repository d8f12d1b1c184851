//! `ctk`: check CSL properties, detect and classify cross-talk.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crosstalk::algebra::{self, CompositionExpr};
use crosstalk::crosstalk as xt;
use crosstalk::csl::{self, CheckError, CheckOptions, SolverKind, Verdict};
use crosstalk::ctmc::{self, BuildError, BuildOptions, Ctmc, DEFAULT_STATE_CAP};
use crosstalk::lang::{parse_composition, parse_model, parse_property_file, Model};
use crosstalk::stdlib::{self, Source};

use report::{sig6, Canonical, Report};

#[derive(Parser)]
#[command(name = "ctk", version, about = "Compositional CTMC checker for signalling-pathway cross-talk")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, global = true, value_enum, default_value_t = Solver::Iterative)]
    solver: Solver,
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
    /// Poisson truncation error for time-bounded properties.
    #[arg(long, global = true, default_value_t = 1e-9)]
    time_bound_epsilon: f64,
    /// Gauss-Seidel iteration limit for unbounded until.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    max_iterations: usize,
    /// Write states.txt and transitions.txt of the (candidate) CTMC here.
    #[arg(long, global = true)]
    export_ctmc: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate every property of a property file on one system.
    Check {
        model: String,
        /// Named system or pathway, or a composition expression.
        #[arg(long, short)]
        system: String,
        #[arg(long, short)]
        props: String,
    },
    /// Compare the detection properties on a baseline and a candidate system.
    Detect {
        model: String,
        #[arg(long)]
        baseline: String,
        #[arg(long)]
        candidate: String,
        /// Model file of the candidate, if different.
        #[arg(long)]
        candidate_model: Option<String>,
        #[arg(long, default_value_t = xt::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Classify the cross-talk between two pathways.
    Classify {
        model: String,
        /// Left pathway (name or composition expression).
        left: Option<String>,
        right: Option<String>,
        /// Use the two operands of this system's top-level parallel composition.
        #[arg(long, short)]
        system: Option<String>,
    },
    /// Evaluate the five cross-talk signatures and the independence property.
    Characterise {
        model: String,
        #[arg(long, short)]
        system: String,
    },
    /// Detection table of the shipped fixtures next to the published values.
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Iterative,
    Direct,
}

/// Failure with its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl Fail {
    fn input(msg: impl Into<String>) -> Fail {
        Fail { code: 2, msg: msg.into() }
    }
}

impl From<BuildError> for Fail {
    fn from(e: BuildError) -> Fail {
        let code = if matches!(e, BuildError::StateCapExceeded { .. }) { 3 } else { 2 };
        Fail { code, msg: e.to_string() }
    }
}

impl From<CheckError> for Fail {
    fn from(e: CheckError) -> Fail {
        let code = if matches!(e, CheckError::NonConvergence { .. }) { 4 } else { 2 };
        Fail { code, msg: e.to_string() }
    }
}

impl From<xt::CrosstalkError> for Fail {
    fn from(e: xt::CrosstalkError) -> Fail {
        match e {
            xt::CrosstalkError::MissingAnnotation { .. } => Fail { code: 5, msg: e.to_string() },
            xt::CrosstalkError::Check(c) => c.into(),
            xt::CrosstalkError::Algebra(a) => Fail::input(a.to_string()),
        }
    }
}

impl From<algebra::AlgebraError> for Fail {
    fn from(e: algebra::AlgebraError) -> Fail {
        Fail::input(e.to_string())
    }
}

/// Read a file, falling back to the fixtures directory for bare fixture names.
fn read_input(name: &str) -> Result<String, Fail> {
    let path = Path::new(name);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|e| Fail::input(format!("{name}: {e}")));
    }
    if let Ok(dir) = std::env::var("CROSSTALK_FIXTURES") {
        let p = Path::new(&dir).join(name);
        return std::fs::read_to_string(&p).map_err(|e| Fail::input(format!("{}: {e}", p.display())));
    }
    let embedded = match name {
        "pathways.ctk" => stdlib::PATHWAYS_CTK,
        "detection.csl" => stdlib::DETECTION_CSL,
        "characterisation.csl" => stdlib::CHARACTERISATION_CSL,
        "case_study.ctk" => stdlib::CASE_STUDY_CTK,
        "case_study.csl" => stdlib::CASE_STUDY_CSL,
        _ => return Err(Fail::input(format!("{name}: no such file"))),
    };
    Ok(embedded.to_string())
}

fn load_model(file: &str) -> Result<Model, Fail> {
    let text = read_input(file)?;
    parse_model(&text).map_err(|e| Fail::input(format!("{file}: {e}")))
}

fn composition(model: &Model, text: &str) -> Result<CompositionExpr, Fail> {
    let parsed = parse_composition(text, model).map_err(|e| Fail::input(format!("composition `{text}`: {e}")))?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed.expr)
}

struct Ctx {
    opts: CheckOptions,
    build: BuildOptions,
    export: Option<PathBuf>,
}

impl Ctx {
    fn build(&self, model: &Model, expr: &CompositionExpr) -> Result<Ctmc, Fail> {
        let flat = algebra::flatten(expr, model)?;
        Ok(ctmc::build_with(&flat, self.build)?)
    }

    fn export(&self, c: &Ctmc) -> Result<(), Fail> {
        if let Some(dir) = &self.export {
            c.export(dir).map_err(|e| Fail::input(format!("{}: {e}", dir.display())))?;
        }
        Ok(())
    }
}

fn info(file: &str, system: &str, c: &Ctmc) -> report::ModelInfo {
    report::ModelInfo {
        file: file.to_string(),
        system: system.to_string(),
        states: c.num_states(),
        transitions: c.transitions.len(),
    }
}

fn check(ctx: &Ctx, model_file: &str, system: &str, props: &str) -> Result<Canonical, Fail> {
    let model = load_model(model_file)?;
    let expr = composition(&model, system)?;
    let props_text = read_input(props)?;
    let props = parse_property_file(&props_text).map_err(|e| Fail::input(format!("{props}: {e}")))?;
    // unknown variables are input errors, reported before any work
    let c = ctx.build(&model, &expr)?;
    for p in &props {
        if let Some(v) = p.formula.vars().into_iter().find(|v| c.var_index(v).is_none()) {
            return Err(Fail::input(format!("property `{}`: unknown variable `{v}`", p.name)));
        }
    }
    ctx.export(&c)?;
    let mut out = Canonical { model: Some(info(model_file, system, &c)), ..Default::default() };
    for p in &props {
        let r = csl::check_with(&c, &p.formula, &ctx.opts)?;
        let value = match r.value {
            Verdict::Bool(b) => b.to_string(),
            Verdict::Probability(x) => sig6(x),
        };
        out.results.push(report::PropertyResult {
            name: p.name.clone(),
            formula: p.formula.to_string(),
            value,
            warnings: r.warnings.clone(),
        });
        let d = &r.diagnostics;
        out.solver.push(report::SolverInfo {
            property: p.name.clone(),
            method: d.method.clone(),
            iterations: d.iterations,
            unknowns: d.unknowns,
            direct: d.direct,
            uniformization_rate: sig6(d.uniformization_rate),
            poisson_left: d.poisson_left,
            poisson_right: d.poisson_right,
        });
    }
    Ok(out)
}

fn detect(
    ctx: &Ctx,
    model_file: &str,
    baseline: &str,
    candidate: &str,
    candidate_model: Option<&str>,
    threshold: f64,
) -> Result<Canonical, Fail> {
    let model = load_model(model_file)?;
    let base = ctx.build(&model, &composition(&model, baseline)?)?;
    let cand_file = candidate_model.unwrap_or(model_file);
    let cand_model = if candidate_model.is_some() { load_model(cand_file)? } else { model.clone() };
    let cand = ctx.build(&cand_model, &composition(&cand_model, candidate)?)?;
    ctx.export(&cand)?;
    let r = xt::detect_with(&base, &cand, threshold, &ctx.opts)?;
    let rows = r
        .rows
        .iter()
        .map(|row| report::DeltaRow {
            property: row.property.clone(),
            baseline: sig6(row.baseline),
            candidate: sig6(row.model),
            delta: sig6(row.delta),
        })
        .collect();
    Ok(Canonical {
        detection: Some(report::Detection {
            baseline: info(model_file, baseline, &base),
            candidate: info(cand_file, candidate, &cand),
            threshold: sig6(threshold),
            rows,
            detected: r.detected,
        }),
        ..Default::default()
    })
}

fn classify(model_file: &str, left: Option<&str>, right: Option<&str>, system: Option<&str>) -> Result<Canonical, Fail> {
    let model = load_model(model_file)?;
    let (l, r) = match (left, right, system) {
        (Some(l), Some(r), None) => (composition(&model, l)?, composition(&model, r)?),
        (None, None, Some(s)) => {
            let e = composition(&model, s)?;
            let (l, r) = e.split_par().ok_or_else(|| Fail::input(format!("`{s}` is not a parallel composition")))?;
            (l.clone(), r.clone())
        }
        _ => return Err(Fail::input("give either two pathways or --system")),
    };
    let c = xt::classify(&l, &r, &model)?;
    let side = |uses: &[xt::LabelUse]| {
        uses.iter().map(|u| format!("{}.{} ({} {})", u.module, u.local_label, u.kind, u.role)).collect::<Vec<_>>().join(" + ")
    };
    Ok(Canonical {
        classification: Some(report::Classification {
            file: model_file.to_string(),
            left: l.to_string(),
            right: r.to_string(),
            category: c.category.to_string(),
            shared: c
                .shared
                .iter()
                .map(|s| report::SharedRow { label: s.label.clone(), left: side(&s.left), right: side(&s.right) })
                .collect(),
        }),
        ..Default::default()
    })
}

fn characterise(ctx: &Ctx, model_file: &str, system: &str) -> Result<Canonical, Fail> {
    let model = load_model(model_file)?;
    let c = ctx.build(&model, &composition(&model, system)?)?;
    ctx.export(&c)?;
    let r = xt::characterise(&c)?;
    Ok(Canonical {
        model: Some(info(model_file, system, &c)),
        characterisation: Some(report::Characterisation { verdicts: r.verdicts, independence: r.independence }),
        ..Default::default()
    })
}

fn table(ctx: &Ctx) -> Result<Canonical, Fail> {
    let mut out = Canonical::default();
    let dir = std::env::var("CROSSTALK_FIXTURES").ok();
    for name in stdlib::FIXTURE_NAMES {
        let f = match &dir {
            Some(d) => stdlib::load_fixture_from(Path::new(d), name),
            None => stdlib::load_fixture(name),
        }
        .map_err(|e| Fail::input(e.to_string()))?;
        let c = ctx.build(&f.model, &f.system)?;
        for p in xt::detection_properties() {
            let Some(exp) = f.expected_for(&p.name) else { continue };
            let stdlib::ExpectedValue::Probability(published) = exp.value else { continue };
            let x = csl::check_with(&c, &p.formula, &ctx.opts)?.as_probability().unwrap_or(f64::NAN);
            let dp = exp.source.decimals().unwrap_or(6);
            out.table.push(report::TableRow {
                fixture: name.to_string(),
                property: p.name.clone(),
                published: format!("{published:.dp$}"),
                computed: sig6(x),
                rounded: report::round_to(x, dp),
                truncated: report::truncate_to(x, dp),
                within_tolerance: exp.source != Source::Derived && (x - published).abs() <= exp.source.tolerance(),
            });
        }
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<Canonical, Fail> {
    let ctx = Ctx {
        opts: CheckOptions {
            solver: match cli.solver {
                Solver::Iterative => SolverKind::Iterative,
                Solver::Direct => SolverKind::Direct,
            },
            transient_epsilon: cli.time_bound_epsilon,
            max_iterations: cli.max_iterations,
            ..CheckOptions::default()
        },
        build: BuildOptions { state_cap: cli.state_cap },
        export: cli.export_ctmc.clone(),
    };
    match &cli.cmd {
        Cmd::Check { model, system, props } => check(&ctx, model, system, props),
        Cmd::Detect { model, baseline, candidate, candidate_model, threshold } => {
            detect(&ctx, model, baseline, candidate, candidate_model.as_deref(), *threshold)
        }
        Cmd::Classify { model, left, right, system } => {
            classify(model, left.as_deref(), right.as_deref(), system.as_deref())
        }
        Cmd::Characterise { model, system } => characterise(&ctx, model, system),
        Cmd::Table => table(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(&cli) {
        Ok(canonical) => {
            let r = Report { canonical, wall_ms: start.elapsed().as_secs_f64() * 1e3 };
            let out = match cli.format {
                Format::Text => r.text(),
                Format::Csv => r.csv(),
                Format::Tree => r.tree(),
            };
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
