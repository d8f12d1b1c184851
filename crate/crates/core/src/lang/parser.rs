//! Recursive-descent parsers for `.ctk` models, composition expressions and
//! `.csl` properties.

use std::collections::BTreeSet;

use super::ast::*;
use super::csl::*;
use super::lexer::{tokenize, Pos, Tok, Token};
use super::{ParseError, ParseErrorKind};
use crate::algebra::{self, CompositionExpr};

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: tokenize(src)?, i: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// True when the current token starts exactly where the previous one ended.
    fn glued_to_previous(&self) -> bool {
        self.i > 0 && self.toks[self.i - 1].end == self.toks[self.i].start
    }

    fn glued_next(&self) -> bool {
        self.i + 1 < self.toks.len() && self.toks[self.i].end == self.toks[self.i + 1].start
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError::at(self.pos(), format!("expected {expected}, found {}", self.peek()))
    }

    fn expect(&mut self, t: Tok) -> PResult<Token> {
        if self.at(&t) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.at_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    /// Hyphenated keyword such as `alternative-activation`.
    fn dashed_word(&mut self) -> PResult<(String, Pos)> {
        let (mut word, pos) = self.ident()?;
        while self.at(&Tok::Minus) && self.glued_to_previous() && matches!(self.peek_at(1), Tok::Ident(_)) {
            self.bump();
            let (w, _) = self.ident()?;
            word.push('-');
            word.push_str(&w);
        }
        Ok((word, pos))
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        match *self.peek() {
            Tok::Int(n) => {
                self.bump();
                Ok(n as f64)
            }
            Tok::Num(x) => {
                self.bump();
                Ok(x)
            }
            _ => Err(self.unexpected("number")),
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if self.at(&Tok::Eof) {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    // ---- expressions -------------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.expr_and()?;
        while self.eat(&Tok::Pipe) {
            lhs = Expr::bin(BinOp::Or, lhs, self.expr_and()?);
        }
        Ok(lhs)
    }

    fn expr_and(&mut self) -> PResult<Expr> {
        let mut lhs = self.expr_not()?;
        while self.eat(&Tok::Amp) {
            lhs = Expr::bin(BinOp::And, lhs, self.expr_not()?);
        }
        Ok(lhs)
    }

    fn expr_not(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Bang) {
            Ok(Expr::Not(Box::new(self.expr_not()?)))
        } else {
            self.expr_cmp()
        }
    }

    fn cmp_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return None,
        })
    }

    fn expr_cmp(&mut self) -> PResult<Expr> {
        let lhs = self.expr_add()?;
        if let Some(op) = self.cmp_op() {
            self.bump();
            let rhs = self.expr_add()?;
            return Ok(Expr::bin(op, lhs, rhs));
        }
        Ok(lhs)
    }

    fn expr_add(&mut self) -> PResult<Expr> {
        let mut lhs = self.expr_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::bin(op, lhs, self.expr_mul()?);
        }
    }

    fn expr_mul(&mut self) -> PResult<Expr> {
        let mut lhs = self.expr_unary()?;
        while self.eat(&Tok::Star) {
            lhs = Expr::bin(BinOp::Mul, lhs, self.expr_unary()?);
        }
        Ok(lhs)
    }

    fn expr_unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.expr_unary()?)));
        }
        if self.eat(&Tok::Bang) {
            return Ok(Expr::Not(Box::new(self.expr_unary()?)));
        }
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Expr::Var(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    // ---- modules -----------------------------------------------------------

    fn module(&mut self) -> PResult<(ModuleDef, Vec<Pos>)> {
        self.expect_kw("module")?;
        let (name, _) = self.ident()?;
        let mut variables = Vec::new();
        let mut commands = Vec::new();
        let mut cmd_pos = Vec::new();
        loop {
            if self.at_kw("endmodule") {
                self.bump();
                break;
            }
            match self.peek() {
                Tok::LBracket => {
                    cmd_pos.push(self.pos());
                    commands.push(self.command()?);
                }
                Tok::Ident(_) => {
                    let start = self.pos();
                    let (vname, vpos) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    self.expect(Tok::LBracket)?;
                    let lower = self.int()?;
                    self.expect(Tok::DotDot)?;
                    let upper = self.int()?;
                    self.expect(Tok::RBracket)?;
                    self.expect_kw("init")?;
                    let init = self.int()?;
                    self.expect(Tok::Semi)?;
                    if variables.iter().any(|v: &VarDecl| v.name == vname) {
                        return Err(ParseError::new(
                            ParseErrorKind::DuplicateVariable,
                            Some(vpos),
                            format!("variable `{vname}` declared twice in module `{name}`"),
                        ));
                    }
                    if !(lower <= init && init <= upper) {
                        return Err(ParseError::new(
                            ParseErrorKind::InitOutOfRange,
                            Some(start),
                            format!("init {init} of `{vname}` outside [{lower}..{upper}]"),
                        ));
                    }
                    variables.push(VarDecl { name: vname, lower, upper, init });
                }
                _ => return Err(self.unexpected("variable declaration, command or `endmodule`")),
            }
        }
        Ok((ModuleDef { name, variables, commands }, cmd_pos))
    }

    fn command(&mut self) -> PResult<Command> {
        let line = self.pos().line;
        self.expect(Tok::LBracket)?;
        let label = match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                s
            }
            _ => String::new(),
        };
        self.expect(Tok::RBracket)?;
        let guard = self.expr()?;
        if !self.at(&Tok::Arrow) {
            return Err(ParseError::at(
                self.pos(),
                format!("command on line {line}: expected `->` after guard, found {}", self.peek()),
            ));
        }
        self.bump();
        let rate = self.expr()?;
        self.expect(Tok::Colon)?;
        let mut updates = Vec::new();
        if self.at_kw("true") {
            self.bump();
        } else {
            loop {
                self.expect(Tok::LParen)?;
                let (var, _) = self.ident()?;
                self.expect(Tok::Prime)?;
                self.expect(Tok::Eq)?;
                let value = self.expr()?;
                self.expect(Tok::RParen)?;
                updates.push(Update { var, value });
                if !self.eat(&Tok::Amp) {
                    break;
                }
            }
        }
        self.expect(Tok::Semi)?;
        Ok(Command { label, guard, rate, updates })
    }

    fn annotations(&mut self) -> PResult<(Annotations, Pos)> {
        let pos = self.pos();
        self.expect_kw("annotations")?;
        let (module, _) = self.ident()?;
        self.expect(Tok::Colon)?;
        let (kind_word, kpos) = self.dashed_word()?;
        let kind = ModuleKind::from_keyword(&kind_word).ok_or_else(|| {
            ParseError::new(ParseErrorKind::Annotation, Some(kpos), format!("unknown module kind `{kind_word}`"))
        })?;
        let mut roles: Vec<(String, Role)> = Vec::new();
        while !self.at_kw("endannotations") {
            let (label, lpos) = self.ident()?;
            self.expect(Tok::Colon)?;
            let (role_word, rpos) = self.dashed_word()?;
            let role = Role::from_keyword(&role_word).ok_or_else(|| {
                ParseError::new(ParseErrorKind::Annotation, Some(rpos), format!("unknown role `{role_word}`"))
            })?;
            self.expect(Tok::Semi)?;
            if roles.iter().any(|(l, _)| *l == label) {
                return Err(ParseError::new(
                    ParseErrorKind::Annotation,
                    Some(lpos),
                    format!("label `{label}` annotated twice"),
                ));
            }
            roles.push((label, role));
        }
        self.bump();
        Ok((Annotations { module, kind, roles }, pos))
    }

    fn label_list(&mut self, close: Tok, model: &Model) -> PResult<Vec<String>> {
        let mut out: Vec<String> = Vec::new();
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            let (name, _) = match self.peek() {
                Tok::Ident(_) => self.ident()?,
                _ => {
                    return Err(ParseError::new(
                        ParseErrorKind::MalformedSyncSet,
                        Some(self.pos()),
                        format!("expected label, found {}", self.peek()),
                    ))
                }
            };
            match model.label_set(&name) {
                Some(set) => {
                    for l in set {
                        if !out.contains(l) {
                            out.push(l.clone());
                        }
                    }
                }
                None => {
                    if !out.contains(&name) {
                        out.push(name);
                    }
                }
            }
            if self.eat(&close) {
                return Ok(out);
            }
            if !self.eat(&Tok::Comma) {
                return Err(ParseError::new(
                    ParseErrorKind::MalformedSyncSet,
                    Some(self.pos()),
                    format!("expected `,` or {close} in label set, found {}", self.peek()),
                ));
            }
        }
    }

    // ---- compositions ------------------------------------------------------

    fn composition(&mut self, model: &Model) -> PResult<CompositionExpr> {
        let mut lhs = self.comp_postfix(model)?;
        loop {
            let op_pos = self.pos();
            if self.at(&Tok::Pipe) && self.glued_next() && *self.peek_at(1) == Tok::LBracket {
                self.bump();
                self.bump();
                let sync = self.sync_set(model)?;
                let rhs = self.comp_postfix(model)?;
                lhs = CompositionExpr::Par { left: Box::new(lhs), right: Box::new(rhs), sync };
            } else if self.at(&Tok::Pipe) && self.glued_next() && *self.peek_at(1) == Tok::Pipe {
                self.bump();
                self.bump();
                let rhs = self.comp_postfix(model)?;
                lhs = CompositionExpr::ParAuto { left: Box::new(lhs), right: Box::new(rhs) };
            } else if self.at(&Tok::Pipe) {
                return Err(ParseError::new(
                    ParseErrorKind::MalformedSyncSet,
                    Some(op_pos),
                    "expected `|[` or `||`",
                ));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn sync_set(&mut self, model: &Model) -> PResult<Vec<String>> {
        let mut out: Vec<String> = Vec::new();
        let malformed = |p: &Parser, msg: String| {
            ParseError::new(ParseErrorKind::MalformedSyncSet, Some(p.pos()), msg)
        };
        let close = |p: &Parser| p.at(&Tok::RBracket) && p.glued_next() && *p.peek_at(1) == Tok::Pipe;
        if close(self) {
            self.bump();
            self.bump();
            return Ok(out);
        }
        loop {
            let name = match self.peek().clone() {
                Tok::Ident(s) => {
                    self.bump();
                    s
                }
                other => return Err(malformed(self, format!("expected label in sync set, found {other}"))),
            };
            let expanded = model.label_set(&name).map(<[String]>::to_vec).unwrap_or_else(|| vec![name]);
            for l in expanded {
                if !out.contains(&l) {
                    out.push(l);
                }
            }
            if close(self) {
                self.bump();
                self.bump();
                return Ok(out);
            }
            if !self.eat(&Tok::Comma) {
                return Err(malformed(self, format!("expected `,` or `]|` in sync set, found {}", self.peek())));
            }
        }
    }

    fn comp_postfix(&mut self, model: &Model) -> PResult<CompositionExpr> {
        let mut e = self.comp_primary(model)?;
        loop {
            if self.at(&Tok::Slash) {
                let pos = self.pos();
                self.bump();
                self.expect(Tok::LBrace)?;
                let labels = self.label_list(Tok::RBrace, model)?;
                let alpha = algebra::alphabet(&e, model).map_err(|err| ParseError::new(
                    ParseErrorKind::UnknownModule, Some(pos), err.to_string()))?;
                if let Some(l) = labels.iter().find(|l| !alpha.contains(l)) {
                    return Err(ParseError::new(
                        ParseErrorKind::UnknownLabel,
                        Some(pos),
                        format!("hiding `{l}` which is not an external label of `{e}`"),
                    ));
                }
                e = CompositionExpr::Hide { child: Box::new(e), labels };
            } else if self.at(&Tok::LBrace) {
                let pos = self.pos();
                self.bump();
                let mut map: Vec<(String, String)> = Vec::new();
                loop {
                    let (old, opos) = self.ident()?;
                    self.expect(Tok::LeftArrow)?;
                    let (new, _) = self.ident()?;
                    let alpha = algebra::alphabet(&e, model).map_err(|err| ParseError::new(
                        ParseErrorKind::UnknownModule, Some(pos), err.to_string()))?;
                    if !alpha.contains(&old) {
                        return Err(ParseError::new(
                            ParseErrorKind::UnknownLabel,
                            Some(opos),
                            format!("renaming `{old}` which is not an external label of `{e}`"),
                        ));
                    }
                    map.push((old, new));
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(Tok::Comma)?;
                }
                e = CompositionExpr::Rename { child: Box::new(e), map };
            } else {
                return Ok(e);
            }
        }
    }

    fn comp_primary(&mut self, model: &Model) -> PResult<CompositionExpr> {
        if self.eat(&Tok::LParen) {
            let e = self.composition(model)?;
            self.expect(Tok::RParen)?;
            return Ok(e);
        }
        let (name, pos) = self.ident()?;
        resolve_reference(model, &name).ok_or_else(|| {
            ParseError::new(ParseErrorKind::UnknownModule, Some(pos), format!("unknown module or pathway `{name}`"))
        })
    }

    // ---- properties --------------------------------------------------------

    fn state(&mut self) -> PResult<CslFormula> {
        let mut lhs = self.state_and()?;
        while self.eat(&Tok::Pipe) {
            lhs = CslFormula::or(lhs, self.state_and()?);
        }
        Ok(lhs)
    }

    fn state_and(&mut self) -> PResult<CslFormula> {
        let mut lhs = self.state_unary()?;
        while self.eat(&Tok::Amp) {
            lhs = CslFormula::and(lhs, self.state_unary()?);
        }
        Ok(lhs)
    }

    fn state_unary(&mut self) -> PResult<CslFormula> {
        if self.eat(&Tok::Bang) {
            return Ok(CslFormula::not(self.state_unary()?));
        }
        if self.eat(&Tok::LParen) {
            let f = self.state()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        self.state_atom()
    }

    fn at_prob(&self) -> bool {
        if !self.at_kw("P") {
            return false;
        }
        match (self.peek_at(1), self.peek_at(2), self.peek_at(3)) {
            (Tok::Eq, Tok::Question, _) => true,
            (Tok::Le | Tok::Lt | Tok::Ge | Tok::Gt, Tok::Int(_) | Tok::Num(_), Tok::LBracket) => true,
            (Tok::Le | Tok::Lt | Tok::Ge | Tok::Gt, Tok::Minus, _) => true,
            _ => false,
        }
    }

    fn state_atom(&mut self) -> PResult<CslFormula> {
        if self.at_prob() {
            return self.prob();
        }
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(CslFormula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(CslFormula::False)
            }
            Tok::Ident(var) => {
                self.bump();
                let op = self.cmp_op().ok_or_else(|| self.unexpected("comparison operator"))?;
                self.bump();
                let value = self.int()?;
                Ok(CslFormula::Atomic { var, op, value })
            }
            Tok::Int(_) | Tok::Minus => {
                let value = self.int()?;
                let op = self.cmp_op().ok_or_else(|| self.unexpected("comparison operator"))?;
                self.bump();
                let (var, _) = self.ident()?;
                Ok(CslFormula::Atomic { var, op: mirror(op), value })
            }
            _ => Err(self.unexpected("state formula")),
        }
    }

    fn prob(&mut self) -> PResult<CslFormula> {
        self.expect_kw("P")?;
        let bpos = self.pos();
        let bound = match self.bump().tok {
            Tok::Eq => {
                self.expect(Tok::Question)?;
                Bound::Query
            }
            op @ (Tok::Le | Tok::Lt | Tok::Ge | Tok::Gt) => {
                let neg = self.eat(&Tok::Minus);
                let mut p = self.number()?;
                if neg {
                    p = -p;
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(ParseError::new(
                        ParseErrorKind::BoundOutOfRange,
                        Some(bpos),
                        format!("probability bound {p} outside [0,1]"),
                    ));
                }
                match op {
                    Tok::Le => Bound::Le(p),
                    Tok::Lt => Bound::Lt(p),
                    Tok::Ge => Bound::Ge(p),
                    _ => Bound::Gt(p),
                }
            }
            _ => return Err(ParseError::at(bpos, "expected probability bound or `=?` after `P`")),
        };
        self.expect(Tok::LBracket)?;
        let body_pos = self.pos();
        let body = self.path_disj()?;
        let filter = if self.eat(&Tok::LBrace) {
            let f = self.state()?;
            self.expect(Tok::RBrace)?;
            Some(Box::new(f))
        } else {
            None
        };
        self.expect(Tok::RBracket)?;
        lower_prob(bound, body, filter, body_pos)
    }

    fn path_disj(&mut self) -> PResult<PathExpr> {
        let mut lhs = self.path_conj()?;
        while self.eat(&Tok::Pipe) {
            lhs = PathExpr::Or(Box::new(lhs), Box::new(self.path_conj()?));
        }
        Ok(lhs)
    }

    fn path_conj(&mut self) -> PResult<PathExpr> {
        let mut lhs = self.path_item()?;
        while self.eat(&Tok::Amp) {
            lhs = PathExpr::And(Box::new(lhs), Box::new(self.path_item()?));
        }
        Ok(lhs)
    }

    fn time_bound(&mut self) -> PResult<Option<f64>> {
        if !self.at(&Tok::Le) {
            return Ok(None);
        }
        self.bump();
        let pos = self.pos();
        if self.eat(&Tok::Minus) {
            let t = self.number()?;
            return Err(ParseError::new(
                ParseErrorKind::NegativeTime,
                Some(pos),
                format!("negative time bound -{t}"),
            ));
        }
        Ok(Some(self.number()?))
    }

    fn path_item(&mut self) -> PResult<PathExpr> {
        if self.at_kw("F") {
            self.bump();
            let t = self.time_bound()?;
            let goal = self.path_operand()?;
            return Ok(PathExpr::Path(match t {
                Some(t) => PathFormula::BoundedEventually(Box::new(goal), t),
                None => PathFormula::Eventually(Box::new(goal)),
            }));
        }
        let left = self.path_operand()?;
        if self.at_kw("U") {
            self.bump();
            let t = self.time_bound()?;
            let right = self.path_operand()?;
            return Ok(PathExpr::Path(match t {
                Some(t) => PathFormula::BoundedUntil(Box::new(left), Box::new(right), t),
                None => PathFormula::Until(Box::new(left), Box::new(right)),
            }));
        }
        Ok(PathExpr::State(left))
    }

    /// Operand of `F`/`U`. A parenthesised operand may itself contain an
    /// until; it is then read existentially as a nested `P>0`.
    fn path_operand(&mut self) -> PResult<CslFormula> {
        if self.eat(&Tok::Bang) {
            return Ok(CslFormula::not(self.path_operand()?));
        }
        if self.at(&Tok::LParen) {
            let pos = self.pos();
            self.bump();
            let inner = self.path_disj()?;
            self.expect(Tok::RParen)?;
            return inner.into_state(pos);
        }
        self.state_atom()
    }
}

fn mirror(op: BinOp) -> BinOp {
    match op {
        BinOp::Lt => BinOp::Gt,
        BinOp::Le => BinOp::Ge,
        BinOp::Gt => BinOp::Lt,
        BinOp::Ge => BinOp::Le,
        o => o,
    }
}

/// Body of a `P` operator before lowering to the core AST.
#[derive(Debug, Clone)]
enum PathExpr {
    State(CslFormula),
    Path(PathFormula),
    And(Box<PathExpr>, Box<PathExpr>),
    Or(Box<PathExpr>, Box<PathExpr>),
}

impl PathExpr {
    fn is_state(&self) -> bool {
        match self {
            PathExpr::State(_) => true,
            PathExpr::Path(_) => false,
            PathExpr::And(a, b) | PathExpr::Or(a, b) => a.is_state() && b.is_state(),
        }
    }

    /// Nested temporal parts are read with the existential `P>0`.
    fn into_state(self, pos: Pos) -> PResult<CslFormula> {
        Ok(match self {
            PathExpr::State(f) => f,
            PathExpr::Path(p) => CslFormula::prob(Bound::Gt(0.0), p),
            PathExpr::And(a, b) => CslFormula::and(a.into_state(pos)?, b.into_state(pos)?),
            PathExpr::Or(a, b) => CslFormula::or(a.into_state(pos)?, b.into_state(pos)?),
        })
    }
}

fn lower_prob(
    bound: Bound,
    body: PathExpr,
    filter: Option<Box<CslFormula>>,
    pos: Pos,
) -> PResult<CslFormula> {
    let unsupported = |what: &str| ParseError::at(pos, format!("unsupported path formula: {what}"));
    match body {
        PathExpr::Path(path) => Ok(CslFormula::Prob { bound, path, filter }),
        PathExpr::State(_) => Err(ParseError::at(pos, "expected a path formula (`F`, `U`) inside `P[...]`")),
        PathExpr::And(a, b) => {
            // `phi & path`: phi constrains the start state only
            let (state, path) = match (a.is_state(), b.is_state()) {
                (true, false) => (a.into_state(pos)?, *b),
                (false, true) => (b.into_state(pos)?, *a),
                _ => return Err(unsupported("conjunction of two path formulas")),
            };
            if bound.is_query() {
                return Err(unsupported("state conjunct in a `=?` query"));
            }
            let inner = lower_prob(bound, path, filter, pos)?;
            if bound.holds(0.0) {
                Ok(CslFormula::or(CslFormula::not(state), inner))
            } else {
                Ok(CslFormula::and(state, inner))
            }
        }
        PathExpr::Or(a, b) => {
            if let (PathExpr::Path(pa), PathExpr::Path(pb)) = (a.as_ref(), b.as_ref()) {
                match (pa, pb) {
                    (PathFormula::Eventually(x), PathFormula::Eventually(y)) => {
                        let goal = CslFormula::or((**x).clone(), (**y).clone());
                        return Ok(CslFormula::Prob { bound, path: PathFormula::Eventually(Box::new(goal)), filter });
                    }
                    (PathFormula::BoundedEventually(x, s), PathFormula::BoundedEventually(y, t)) if s == t => {
                        let goal = CslFormula::or((**x).clone(), (**y).clone());
                        return Ok(CslFormula::Prob {
                            bound,
                            path: PathFormula::BoundedEventually(Box::new(goal), *s),
                            filter,
                        });
                    }
                    _ => {}
                }
            }
            if a.is_state() || b.is_state() {
                return Err(unsupported("disjunction of a state and a path formula"));
            }
            match bound.qualitative() {
                Some(Qualitative::Zero) => Ok(CslFormula::and(
                    lower_prob(bound, *a, filter.clone(), pos)?,
                    lower_prob(bound, *b, filter, pos)?,
                )),
                Some(Qualitative::Positive) => Ok(CslFormula::or(
                    lower_prob(bound, *a, filter.clone(), pos)?,
                    lower_prob(bound, *b, filter, pos)?,
                )),
                _ => Err(unsupported("disjunction of path formulas under a quantitative bound")),
            }
        }
    }
}

/// Resolve a name in a composition: a previously defined pathway/system, a
/// module, or `<generic>_<index>`.
fn resolve_reference(model: &Model, name: &str) -> Option<CompositionExpr> {
    if let Some(c) = model.composition(name) {
        return Some(c.expr.clone());
    }
    if model.module(name).is_some() {
        return Some(CompositionExpr::module(name));
    }
    let (generic, idx) = name.rsplit_once('_')?;
    let index: u32 = idx.parse().ok().filter(|&i| i > 0)?;
    model.module(generic)?;
    Some(CompositionExpr::instance(generic, index))
}

fn validate_modules(model: &Model, cmd_pos: &[Vec<Pos>]) -> PResult<()> {
    let all_vars: BTreeSet<&str> = model.modules.iter().flat_map(|m| m.variables.iter().map(|v| v.name.as_str())).collect();
    for (m, positions) in model.modules.iter().zip(cmd_pos) {
        for (c, &pos) in m.commands.iter().zip(positions) {
            let ty_err = |msg: String| ParseError::new(ParseErrorKind::Type, Some(pos), msg);
            match c.guard.ty() {
                Ok(Ty::Bool) => {}
                Ok(Ty::Int) => return Err(ty_err(format!("guard `{}` is not boolean", c.guard))),
                Err(e) => return Err(ty_err(e)),
            }
            match c.rate.ty() {
                Ok(Ty::Int) => {}
                Ok(Ty::Bool) => return Err(ty_err(format!("rate `{}` is not arithmetic", c.rate))),
                Err(e) => return Err(ty_err(e)),
            }
            let mut written: Vec<&str> = Vec::new();
            for u in &c.updates {
                if m.var(&u.var).is_none() {
                    let kind = if all_vars.contains(u.var.as_str()) {
                        ParseErrorKind::ForeignAssignment
                    } else {
                        ParseErrorKind::UnknownVariable
                    };
                    return Err(ParseError::new(
                        kind,
                        Some(pos),
                        format!("module `{}` assigns `{}` which it does not declare", m.name, u.var),
                    ));
                }
                if written.contains(&u.var.as_str()) {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        Some(pos),
                        format!("`{}` assigned twice in one command", u.var),
                    ));
                }
                written.push(&u.var);
                match u.value.ty() {
                    Ok(Ty::Int) => {}
                    Ok(Ty::Bool) => return Err(ty_err(format!("update of `{}` is boolean", u.var))),
                    Err(e) => return Err(ty_err(e)),
                }
            }
            let reads = c.guard.vars().into_iter().chain(c.rate.vars()).chain(c.updates.iter().flat_map(|u| u.value.vars()));
            for v in reads {
                if !all_vars.contains(v) {
                    return Err(ParseError::new(
                        ParseErrorKind::UnknownVariable,
                        Some(pos),
                        format!("unknown variable `{v}` in module `{}`", m.name),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Parse a `.ctk` file: modules, annotation blocks, label sets and named compositions.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let mut p = Parser::new(text)?;
    let mut model = Model::default();
    let mut cmd_pos = Vec::new();
    let mut ann_pos = Vec::new();
    let mut validated = false;
    loop {
        if p.at(&Tok::Eof) {
            break;
        }
        if p.at_kw("module") {
            let pos = p.pos();
            let (m, positions) = p.module()?;
            if model.module(&m.name).is_some() {
                return Err(ParseError::new(
                    ParseErrorKind::DuplicateDefinition,
                    Some(pos),
                    format!("module `{}` defined twice", m.name),
                ));
            }
            model.modules.push(m);
            cmd_pos.push(positions);
            validated = false;
        } else if p.at_kw("annotations") {
            let (a, pos) = p.annotations()?;
            ann_pos.push(pos);
            model.annotations.push(a);
        } else if p.at_kw("labelset") {
            p.bump();
            let (name, pos) = p.ident()?;
            p.expect(Tok::Eq)?;
            p.expect(Tok::LBrace)?;
            let labels = p.label_list(Tok::RBrace, &model)?;
            p.expect(Tok::Semi)?;
            if model.label_set(&name).is_some() {
                return Err(ParseError::new(
                    ParseErrorKind::DuplicateDefinition,
                    Some(pos),
                    format!("label set `{name}` defined twice"),
                ));
            }
            model.label_sets.push((name, labels));
        } else if p.at_kw("pathway") || p.at_kw("system") {
            if !validated {
                validate_modules(&model, &cmd_pos)?;
                validated = true;
            }
            let kind = if p.at_kw("pathway") { CompositionKind::Pathway } else { CompositionKind::System };
            p.bump();
            let (name, pos) = p.ident()?;
            if model.composition(&name).is_some() || model.module(&name).is_some() {
                return Err(ParseError::new(
                    ParseErrorKind::DuplicateDefinition,
                    Some(pos),
                    format!("`{name}` defined twice"),
                ));
            }
            p.expect(Tok::Eq)?;
            let expr = p.composition(&model)?;
            p.expect(Tok::Semi)?;
            model.compositions.push(NamedComposition { kind, name, expr });
        } else {
            return Err(p.unexpected("`module`, `annotations`, `labelset`, `pathway` or `system`"));
        }
    }
    if !validated {
        validate_modules(&model, &cmd_pos)?;
    }
    for (a, pos) in model.annotations.iter().zip(ann_pos) {
        let m = model.module(&a.module).ok_or_else(|| {
            ParseError::new(ParseErrorKind::Annotation, Some(pos), format!("annotations for unknown module `{}`", a.module))
        })?;
        let labels = m.labels();
        if let Some((l, _)) = a.roles.iter().find(|(l, _)| !labels.contains(&l.as_str())) {
            return Err(ParseError::new(
                ParseErrorKind::Annotation,
                Some(pos),
                format!("annotation for `{l}` which module `{}` does not use", a.module),
            ));
        }
    }
    Ok(model)
}

/// Result of parsing a composition, with non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedComposition {
    pub expr: CompositionExpr,
    pub warnings: Vec<String>,
}

/// Parse a composition expression against the modules and pathways of `model`.
pub fn parse_composition(text: &str, model: &Model) -> Result<ParsedComposition, ParseError> {
    let mut p = Parser::new(text)?;
    let expr = p.composition(model)?;
    p.expect_eof()?;
    let warnings = algebra::vacuous_sync_labels(&expr, model)
        .map_err(|e| ParseError::new(ParseErrorKind::UnknownModule, None, e.to_string()))?
        .into_iter()
        .map(|l| format!("sync label `{l}` occurs in neither operand and blocks nothing"))
        .collect();
    Ok(ParsedComposition { expr, warnings })
}

/// Parse a single CSL state formula (typically `P... [ ... ]`).
pub fn parse_property(text: &str) -> Result<CslFormula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.state()?;
    p.expect_eof()?;
    Ok(f)
}

/// Parse a `.csl` file: one `name : formula` per line.
pub fn parse_property_file(text: &str) -> Result<Vec<NamedProperty>, ParseError> {
    let mut out: Vec<NamedProperty> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let lineno = n + 1;
        let (name, formula) = line.split_once(':').ok_or_else(|| {
            ParseError::at(Pos { line: lineno, col: 1 }, "expected `name : formula`")
        })?;
        let name = name.trim();
        let valid = !name.is_empty()
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !valid {
            return Err(ParseError::at(Pos { line: lineno, col: 1 }, format!("invalid property name `{name}`")));
        }
        if out.iter().any(|p| p.name == name) {
            return Err(ParseError::new(
                ParseErrorKind::DuplicateDefinition,
                Some(Pos { line: lineno, col: 1 }),
                format!("property `{name}` defined twice"),
            ));
        }
        let offset = line.find(':').unwrap() + 1;
        let formula = parse_property(formula).map_err(|mut e| {
            if let Some(p) = e.pos.as_mut() {
                p.col += if p.line == 1 { offset } else { 0 };
                p.line += lineno - 1;
            }
            e
        })?;
        out.push(NamedProperty { name: name.to_string(), formula });
    }
    Ok(out)
}
