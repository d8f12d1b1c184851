//! The `.ctk` module/composition language and the `.csl` property language.

mod ast;
mod csl;
mod lexer;
mod parser;
mod print;

use thiserror::Error;

pub use ast::{
    Annotations, BinOp, Command, CompositionKind, Expr, Model, ModuleDef, ModuleKind,
    NamedComposition, Role, RoleAnnotation, Ty, Update, VarDecl,
};
pub use csl::{Bound, CslFormula, NamedProperty, PathFormula, Qualitative};
pub use lexer::Pos;
pub use parser::{
    parse_composition, parse_model, parse_property, parse_property_file, ParsedComposition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    DuplicateVariable,
    DuplicateDefinition,
    ForeignAssignment,
    UnknownVariable,
    InitOutOfRange,
    Type,
    UnknownModule,
    UnknownLabel,
    MalformedSyncSet,
    BoundOutOfRange,
    NegativeTime,
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", pos.map(|p| format!("line {}, column {}: ", p.line, p.col)).unwrap_or_default())]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: Option<Pos>,
    pub message: String,
}

impl ParseError {
    pub(crate) fn at(pos: Pos, message: impl Into<String>) -> Self {
        ParseError { kind: ParseErrorKind::Syntax, pos: Some(pos), message: message.into() }
    }

    pub(crate) fn new(kind: ParseErrorKind, pos: Option<Pos>, message: impl Into<String>) -> Self {
        ParseError { kind, pos, message: message.into() }
    }

    pub fn line(&self) -> Option<usize> {
        self.pos.map(|p| p.line)
    }
}
