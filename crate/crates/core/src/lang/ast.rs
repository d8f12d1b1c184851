//! Guarded-command module syntax tree.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::algebra::CompositionExpr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul => 6,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&",
            BinOp::Or => "|",
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }

    pub fn compare(self, a: i64, b: i64) -> bool {
        match self {
            BinOp::Eq => a == b,
            BinOp::Ne => a != b,
            BinOp::Lt => a < b,
            BinOp::Le => a <= b,
            BinOp::Gt => a > b,
            BinOp::Ge => a >= b,
            _ => unreachable!("{self:?} is not a comparison"),
        }
    }
}

/// Expression over integer levels (guards, rates and update right-hand sides).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    /// Every variable name read by the expression, in order of first appearance.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Expr::Not(e) | Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Int(_) | Expr::Bool(_) => {}
        }
    }

    pub fn rename_vars(&self, f: &impl Fn(&str) -> String) -> Expr {
        match self {
            Expr::Var(v) => Expr::Var(f(v)),
            Expr::Not(e) => Expr::Not(Box::new(e.rename_vars(f))),
            Expr::Neg(e) => Expr::Neg(Box::new(e.rename_vars(f))),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.rename_vars(f), b.rename_vars(f)),
            e => e.clone(),
        }
    }

    /// Static type; `Err` carries a description of the first mismatch.
    pub fn ty(&self) -> Result<Ty, String> {
        match self {
            Expr::Int(_) | Expr::Var(_) => Ok(Ty::Int),
            Expr::Bool(_) => Ok(Ty::Bool),
            Expr::Neg(e) => match e.ty()? {
                Ty::Int => Ok(Ty::Int),
                Ty::Bool => Err(format!("cannot negate boolean `{e}`")),
            },
            Expr::Not(e) => match e.ty()? {
                Ty::Bool => Ok(Ty::Bool),
                Ty::Int => Err(format!("`!` applied to integer `{e}`")),
            },
            Expr::Bin(op, a, b) => {
                let (ta, tb) = (a.ty()?, b.ty()?);
                match op {
                    BinOp::And | BinOp::Or => {
                        if ta == Ty::Bool && tb == Ty::Bool {
                            Ok(Ty::Bool)
                        } else {
                            Err(format!("`{}` needs boolean operands in `{self}`", op.symbol()))
                        }
                    }
                    _ if op.is_comparison() => {
                        if ta == Ty::Int && tb == Ty::Int {
                            Ok(Ty::Bool)
                        } else {
                            Err(format!("comparison of non-integers in `{self}`"))
                        }
                    }
                    _ => {
                        if ta == Ty::Int && tb == Ty::Int {
                            Ok(Ty::Int)
                        } else {
                            Err(format!("arithmetic on booleans in `{self}`"))
                        }
                    }
                }
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, outer: u8) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{n}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Not(e) => {
                f.write_str("!")?;
                e.fmt_prec(f, 7)
            }
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_prec(f, 7)
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                let paren = p < outer;
                if paren {
                    f.write_str("(")?;
                }
                // comparisons are non-associative, arithmetic is left-associative
                let left_min = if op.is_comparison() { p + 1 } else { p };
                a.fmt_prec(f, left_min)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, p + 1)?;
                if paren {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarDecl {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
    pub init: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Update {
    pub var: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Command {
    /// Empty for an unlabelled command.
    pub label: String,
    pub guard: Expr,
    pub rate: Expr,
    pub updates: Vec<Update>,
}

impl Command {
    pub fn is_labelled(&self) -> bool {
        !self.label.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleDef {
    pub name: String,
    pub variables: Vec<VarDecl>,
    pub commands: Vec<Command>,
}

impl ModuleDef {
    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// Distinct non-empty labels in order of first use.
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.commands {
            if c.is_labelled() && !out.contains(&c.label.as_str()) {
                out.push(&c.label);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Catalysis,
    Inhibition,
    AlternativeActivation,
    Degradation,
    LigandProduction,
    Expression,
    Binding,
    Activation,
}

impl Role {
    pub const ALL: [Role; 8] = [
        Role::Catalysis,
        Role::Inhibition,
        Role::AlternativeActivation,
        Role::Degradation,
        Role::LigandProduction,
        Role::Expression,
        Role::Binding,
        Role::Activation,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Role::Catalysis => "catalysis",
            Role::Inhibition => "inhibition",
            Role::AlternativeActivation => "alternative-activation",
            Role::Degradation => "degradation",
            Role::LigandProduction => "ligand-production",
            Role::Expression => "expression",
            Role::Binding => "binding",
            Role::Activation => "activation",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.keyword() == s)
    }

    /// Roles whose update creates or activates a species.
    pub fn is_productive(self) -> bool {
        matches!(
            self,
            Role::Activation
                | Role::AlternativeActivation
                | Role::Expression
                | Role::LigandProduction
                | Role::Binding
        )
    }

    pub fn is_modulating(self) -> bool {
        matches!(self, Role::Catalysis | Role::Inhibition)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModuleKind {
    Receptor,
    Cascade,
    ProteinActivation,
    Translocation,
    ProteinBinding,
    GeneExpression,
}

impl ModuleKind {
    pub const ALL: [ModuleKind; 6] = [
        ModuleKind::Receptor,
        ModuleKind::Cascade,
        ModuleKind::ProteinActivation,
        ModuleKind::Translocation,
        ModuleKind::ProteinBinding,
        ModuleKind::GeneExpression,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ModuleKind::Receptor => "receptor",
            ModuleKind::Cascade => "cascade",
            ModuleKind::ProteinActivation => "protein-activation",
            ModuleKind::Translocation => "translocation",
            ModuleKind::ProteinBinding => "protein-binding",
            ModuleKind::GeneExpression => "gene-expression",
        }
    }

    pub fn from_keyword(s: &str) -> Option<ModuleKind> {
        ModuleKind::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

impl fmt::Display for ModuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoleAnnotation {
    pub label: String,
    pub role: Role,
    pub module_kind: ModuleKind,
}

/// Annotation block attached to one module.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Annotations {
    pub module: String,
    pub kind: ModuleKind,
    pub roles: Vec<(String, Role)>,
}

impl Annotations {
    pub fn role_of(&self, label: &str) -> Option<Role> {
        self.roles.iter().find(|(l, _)| l == label).map(|(_, r)| *r)
    }

    pub fn to_role_annotations(&self) -> Vec<RoleAnnotation> {
        self.roles
            .iter()
            .map(|(label, role)| RoleAnnotation {
                label: label.clone(),
                role: *role,
                module_kind: self.kind,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompositionKind {
    Pathway,
    System,
}

impl CompositionKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CompositionKind::Pathway => "pathway",
            CompositionKind::System => "system",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedComposition {
    pub kind: CompositionKind,
    pub name: String,
    pub expr: CompositionExpr,
}

/// Everything declared in one `.ctk` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Model {
    pub modules: Vec<ModuleDef>,
    pub annotations: Vec<Annotations>,
    /// Named label sets usable inside sync and hide sets.
    pub label_sets: Vec<(String, Vec<String>)>,
    pub compositions: Vec<NamedComposition>,
}

impl Model {
    pub fn module(&self, name: &str) -> Option<&ModuleDef> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn annotations_for(&self, module: &str) -> Option<&Annotations> {
        self.annotations.iter().find(|a| a.module == module)
    }

    pub fn composition(&self, name: &str) -> Option<&NamedComposition> {
        self.compositions.iter().find(|c| c.name == name)
    }

    pub fn label_set(&self, name: &str) -> Option<&[String]> {
        self.label_sets.iter().find(|(n, _)| n == name).map(|(_, l)| l.as_slice())
    }

    pub fn role_annotations(&self) -> Vec<RoleAnnotation> {
        self.annotations.iter().flat_map(|a| a.to_role_annotations()).collect()
    }

    /// Declared variable ranges across every module, keyed by name.
    pub fn variable_table(&self) -> BTreeMap<&str, &VarDecl> {
        self.modules
            .iter()
            .flat_map(|m| m.variables.iter().map(|v| (v.name.as_str(), v)))
            .collect()
    }
}
