//! Continuous Stochastic Logic formulas.

use std::fmt;

use serde::Serialize;

use super::ast::BinOp;

/// Probability bound of a `P` operator, or the `=?` query form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Bound {
    Query,
    Le(f64),
    Lt(f64),
    Ge(f64),
    Gt(f64),
}

impl Bound {
    pub fn is_query(self) -> bool {
        matches!(self, Bound::Query)
    }

    /// Whether a probability satisfies the bound. Queries accept everything.
    pub fn holds(self, p: f64) -> bool {
        match self {
            Bound::Query => true,
            Bound::Le(b) => p <= b,
            Bound::Lt(b) => p < b,
            Bound::Ge(b) => p >= b,
            Bound::Gt(b) => p > b,
        }
    }

    pub fn threshold(self) -> Option<f64> {
        match self {
            Bound::Query => None,
            Bound::Le(p) | Bound::Lt(p) | Bound::Ge(p) | Bound::Gt(p) => Some(p),
        }
    }

    /// The four bounds decidable by graph analysis alone.
    pub fn qualitative(self) -> Option<Qualitative> {
        match self {
            Bound::Le(p) if p == 0.0 => Some(Qualitative::Zero),
            Bound::Gt(p) if p == 0.0 => Some(Qualitative::Positive),
            Bound::Ge(p) if p == 1.0 => Some(Qualitative::One),
            Bound::Lt(p) if p == 1.0 => Some(Qualitative::BelowOne),
            _ => None,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Query => f.write_str("=?"),
            Bound::Le(p) => write!(f, "<={p}"),
            Bound::Lt(p) => write!(f, "<{p}"),
            Bound::Ge(p) => write!(f, ">={p}"),
            Bound::Gt(p) => write!(f, ">{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Qualitative {
    /// `<= 0`
    Zero,
    /// `> 0`
    Positive,
    /// `>= 1`
    One,
    /// `< 1`
    BelowOne,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CslFormula {
    True,
    False,
    Atomic { var: String, op: BinOp, value: i64 },
    Not(Box<CslFormula>),
    And(Box<CslFormula>, Box<CslFormula>),
    Or(Box<CslFormula>, Box<CslFormula>),
    Prob {
        bound: Bound,
        path: PathFormula,
        filter: Option<Box<CslFormula>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PathFormula {
    Eventually(Box<CslFormula>),
    BoundedEventually(Box<CslFormula>, f64),
    Until(Box<CslFormula>, Box<CslFormula>),
    BoundedUntil(Box<CslFormula>, Box<CslFormula>, f64),
}

impl PathFormula {
    /// `(left, right, time bound)` with `F φ` read as `true U φ`.
    pub fn as_until(&self) -> (&CslFormula, &CslFormula, Option<f64>) {
        const TRUE: &CslFormula = &CslFormula::True;
        match self {
            PathFormula::Eventually(g) => (TRUE, g, None),
            PathFormula::BoundedEventually(g, t) => (TRUE, g, Some(*t)),
            PathFormula::Until(a, b) => (a, b, None),
            PathFormula::BoundedUntil(a, b, t) => (a, b, Some(*t)),
        }
    }
}

impl CslFormula {
    pub fn atomic(var: &str, op: BinOp, value: i64) -> CslFormula {
        CslFormula::Atomic { var: var.to_string(), op, value }
    }

    pub fn and(a: CslFormula, b: CslFormula) -> CslFormula {
        CslFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: CslFormula, b: CslFormula) -> CslFormula {
        CslFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: CslFormula) -> CslFormula {
        CslFormula::Not(Box::new(a))
    }

    pub fn prob(bound: Bound, path: PathFormula) -> CslFormula {
        CslFormula::Prob { bound, path, filter: None }
    }

    /// Variables referenced anywhere in the formula, including filters.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            CslFormula::True | CslFormula::False => {}
            CslFormula::Atomic { var, .. } => {
                if !out.contains(&var.as_str()) {
                    out.push(var);
                }
            }
            CslFormula::Not(a) => a.collect_vars(out),
            CslFormula::And(a, b) | CslFormula::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            CslFormula::Prob { path, filter, .. } => {
                let (l, r, _) = path.as_until();
                l.collect_vars(out);
                r.collect_vars(out);
                if let Some(f) = filter {
                    f.collect_vars(out);
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            CslFormula::Or(..) => 1,
            CslFormula::And(..) => 2,
            _ => 3,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for CslFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CslFormula::True => f.write_str("true"),
            CslFormula::False => f.write_str("false"),
            CslFormula::Atomic { var, op, value } => write!(f, "{var} {} {value}", op.symbol()),
            CslFormula::Not(a) => {
                f.write_str("!")?;
                a.fmt_child(f, 3)
            }
            CslFormula::And(a, b) => {
                a.fmt_child(f, 2)?;
                f.write_str(" & ")?;
                b.fmt_child(f, 3)
            }
            CslFormula::Or(a, b) => {
                a.fmt_child(f, 1)?;
                f.write_str(" | ")?;
                b.fmt_child(f, 2)
            }
            CslFormula::Prob { bound, path, filter } => {
                write!(f, "P{bound} [ {path}")?;
                if let Some(flt) = filter {
                    write!(f, " {{{flt}}}")?;
                }
                f.write_str(" ]")
            }
        }
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Eventually(g) => write!(f, "F ({g})"),
            PathFormula::BoundedEventually(g, t) => write!(f, "F<={t} ({g})"),
            PathFormula::Until(a, b) => write!(f, "({a}) U ({b})"),
            PathFormula::BoundedUntil(a, b, t) => write!(f, "({a}) U<={t} ({b})"),
        }
    }
}

/// A property file entry (`name : formula`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedProperty {
    pub name: String,
    pub formula: CslFormula,
}
