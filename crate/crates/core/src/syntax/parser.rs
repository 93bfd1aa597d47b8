//! Recursive-descent parser for terms and `.qlam` programs.
//!
//! Precedence, loosest first: `\x.` / `let` / `if` (extend to the right),
//! superposition `+`, scalar prefix `(re, im)`, tensor `*`, application,
//! atoms. Tensors and sums of qubit constants fold into one constant while
//! parsing, as do tensors of gate constants.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use super::lexer::{lex, Pos, Tok};
use super::{substitute, Term};
use crate::quantum::{Builtin, GateExpr, MeasSet, QubitValue, UserGate};
use crate::tolerance::{EPS_NORM, MAX_WIDTH};

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// A qubit constant as written, before folding. Kept so a strict check can
/// inspect the surface form.
#[derive(Debug, Clone, PartialEq)]
pub enum QubitExpr {
    Base { bit: u8, banged: bool },
    Tensor(Box<QubitExpr>, Box<QubitExpr>),
    Sum(Box<QubitExpr>, Box<QubitExpr>),
    Scale(Complex64, Box<QubitExpr>),
}

impl QubitExpr {
    pub fn width(&self) -> usize {
        match self {
            QubitExpr::Base { .. } => 1,
            QubitExpr::Tensor(a, b) => a.width() + b.width(),
            QubitExpr::Sum(a, _) => a.width(),
            QubitExpr::Scale(_, a) => a.width(),
        }
    }

    fn fold(&self) -> QubitValue {
        match self {
            QubitExpr::Base { bit, .. } => QubitValue::basis(1, u64::from(*bit)),
            QubitExpr::Tensor(a, b) => a.fold().tensor(&b.fold()),
            QubitExpr::Sum(a, b) => {
                let (a, b) = (a.fold(), b.fold());
                QubitValue::from_amplitudes(a.width(), a.iter().chain(b.iter())).expect("widths checked")
            }
            QubitExpr::Scale(s, a) => {
                let a = a.fold();
                QubitValue::from_amplitudes(a.width(), a.iter().map(|(u, x)| (u, s * x))).expect("same width")
            }
        }
    }
}

/// A maximal qubit constant found in the source.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitLiteral {
    pub pos: Pos,
    pub expr: QubitExpr,
}

/// A parsed `.qlam` file.
#[derive(Debug, Clone)]
pub struct Program {
    pub gates: Vec<Arc<UserGate>>,
    /// Named definitions in source order; parameters are already turned into
    /// abstractions.
    pub defs: Vec<(String, Term)>,
    pub main: Term,
    pub literals: Vec<QubitLiteral>,
}

impl Program {
    /// `main` with every definition substituted in.
    pub fn expanded_main(&self) -> Term {
        let mut done: Vec<(String, Term)> = Vec::new();
        for (name, body) in &self.defs {
            let mut t = body.clone();
            for (n, d) in done.iter().rev() {
                t = substitute(&t, n, d);
            }
            done.push((name.clone(), t));
        }
        done.iter().rev().fold(self.main.clone(), |t, (n, d)| substitute(&t, n, d))
    }
}

/// Parses a single term (no declarations).
pub fn parse(source: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(source)?;
    let t = p.term()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

/// Parses a program: `gate` declarations, `name params = term;`
/// definitions and one `main = term;`.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(source)?;
    let mut defs = Vec::new();
    let mut main = None;
    loop {
        let pos = p.pos();
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Gate => {
                p.advance();
                let name = p.ident()?;
                if Builtin::from_name(&name).is_some() || p.gates.contains_key(&name) {
                    return Err(p.error_at(pos, format!("gate `{name}` is already defined"), vec![]));
                }
                p.expect(Tok::Eq)?;
                let rows = p.matrix()?;
                p.expect(Tok::Semi)?;
                let gate = UserGate::new(name.clone(), rows).map_err(|e| p.error_at(pos, e.to_string(), vec![]))?;
                let gate = Arc::new(gate);
                if !GateExpr::User(gate.clone()).is_unitary(EPS_NORM) {
                    return Err(p.error_at(pos, format!("gate `{name}` is not unitary"), vec![]));
                }
                p.gates.insert(name, gate.clone());
                p.gate_order.push(gate);
            }
            Tok::Ident(name) => {
                p.advance();
                if p.gates.contains_key(&name) || Builtin::from_name(&name).is_some() {
                    return Err(p.error_at(pos, format!("`{name}` is a gate name"), vec![]));
                }
                let mut params = Vec::new();
                while *p.peek() != Tok::Eq {
                    let banged = p.eat(&Tok::Bang);
                    let x = p.binder()?;
                    params.push((x, banged));
                }
                p.expect(Tok::Eq)?;
                let body = p.term()?;
                p.expect(Tok::Semi)?;
                let t = params.into_iter().rev().fold(body, |b, (x, banged)| {
                    if banged {
                        Term::BangLam(x, Box::new(b))
                    } else {
                        Term::Lam(x, Box::new(b))
                    }
                });
                if name == "main" {
                    if main.is_some() {
                        return Err(p.error_at(pos, "duplicate `main`".into(), vec![]));
                    }
                    main = Some(t);
                } else {
                    defs.push((name, t));
                }
            }
            other => {
                return Err(p.error_at(
                    pos,
                    format!("unexpected {}", other.describe()),
                    vec!["`gate`".into(), "definition".into()],
                ))
            }
        }
    }
    let main = main.ok_or_else(|| p.error_at(p.pos(), "missing `main = ...;`".into(), vec![]))?;
    Ok(Program { gates: p.gate_order, defs, main, literals: p.literals })
}

enum Item {
    Term(Term),
    Qubit(QubitExpr, Pos),
    Gate(GateExpr),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    gates: HashMap<String, Arc<UserGate>>,
    gate_order: Vec<Arc<UserGate>>,
    literals: Vec<QubitLiteral>,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        let toks = lex(src).map_err(|e| ParseError { pos: e.pos, message: e.message, expected: vec![] })?;
        Ok(Parser { toks, at: 0, gates: HashMap::new(), gate_order: Vec::new(), literals: Vec::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_at(&self, pos: Pos, message: String, expected: Vec<String>) -> ParseError {
        ParseError { pos, message, expected }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        self.error_at(
            self.pos(),
            format!("unexpected {}", self.peek().describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            let want = match &t {
                Tok::Eof => "end of input".to_string(),
                other => format!("`{}`", other.symbol()),
            };
            Err(self.error_at(self.pos(), format!("unexpected {}", self.peek().describe()), vec![want]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn binder(&mut self) -> Result<String, ParseError> {
        let pos = self.pos();
        let x = self.ident()?;
        if Builtin::from_name(&x).is_some() || self.gates.contains_key(&x) {
            return Err(self.error_at(pos, format!("cannot bind gate name `{x}`"), vec![]));
        }
        Ok(x)
    }

    fn starts_scalar(&self) -> bool {
        *self.peek() == Tok::LParen && matches!(self.peek2(), Tok::Number(_) | Tok::Minus | Tok::Sqrt)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(_) | Tok::Ket(_) | Tok::Bang | Tok::Meas(_) => true,
            Tok::LParen => !self.starts_scalar(),
            _ => false,
        }
    }

    fn lower(&mut self, item: Item) -> Result<Term, ParseError> {
        Ok(match item {
            Item::Term(t) => t,
            Item::Gate(g) => Term::Gate(g),
            Item::Qubit(e, pos) => {
                let v = e.fold();
                self.literals.push(QubitLiteral { pos, expr: e });
                Term::Qubit(v)
            }
        })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let item = self.term_item()?;
        self.lower(item)
    }

    fn term_item(&mut self) -> Result<Item, ParseError> {
        match self.peek() {
            Tok::Backslash => {
                self.advance();
                let banged = self.eat(&Tok::Bang);
                let x = self.binder()?;
                self.expect(Tok::Dot)?;
                let body = self.term()?;
                Ok(Item::Term(if banged { Term::BangLam(x, Box::new(body)) } else { Term::Lam(x, Box::new(body)) }))
            }
            Tok::Let => self.let_item().map(Item::Term),
            Tok::If => {
                self.advance();
                let c = self.term()?;
                self.expect(Tok::Then)?;
                let a = self.term()?;
                self.expect(Tok::Else)?;
                let b = self.term()?;
                Ok(Item::Term(Term::ite(c, a, b)))
            }
            _ => self.sum(),
        }
    }

    fn let_item(&mut self) -> Result<Term, ParseError> {
        self.advance();
        if self.eat(&Tok::Bang) {
            let x = self.binder()?;
            self.expect(Tok::Eq)?;
            let t = self.term()?;
            self.expect(Tok::In)?;
            let u = self.term()?;
            return Ok(Term::app(Term::BangLam(x, Box::new(u)), t));
        }
        let x = self.binder()?;
        if self.eat(&Tok::Eq) {
            let t = self.term()?;
            self.expect(Tok::In)?;
            let u = self.term()?;
            return Ok(Term::app(Term::Lam(x, Box::new(u)), t));
        }
        let mut left_width = 1;
        if self.eat(&Tok::Colon) {
            let pos = self.pos();
            match self.advance() {
                Tok::Number(n) if n >= 1.0 && n.fract() == 0.0 && n <= MAX_WIDTH as f64 => left_width = n as usize,
                _ => return Err(self.error_at(pos, "expected a wire count".into(), vec!["positive integer".into()])),
            }
        }
        if !self.eat(&Tok::Star) {
            return Err(self.unexpected(&["`=`", "`*`", "`:`"]));
        }
        let y = self.binder()?;
        if y == x {
            return Err(self.error_at(self.pos(), format!("`{x}` bound twice in pattern"), vec![]));
        }
        self.expect(Tok::Eq)?;
        let t = self.term()?;
        self.expect(Tok::In)?;
        let u = self.term()?;
        Ok(Term::let_tensor(&x, &y, left_width, t, u))
    }

    fn sum(&mut self) -> Result<Item, ParseError> {
        let mut lhs = self.scaled()?;
        while *self.peek() == Tok::Plus {
            let pos = self.pos();
            self.advance();
            let rhs = self.scaled()?;
            lhs = match (lhs, rhs) {
                (Item::Qubit(a, p), Item::Qubit(b, _)) => {
                    if a.width() != b.width() {
                        return Err(self.error_at(
                            pos,
                            format!("superposition of {}-qubit and {}-qubit terms", a.width(), b.width()),
                            vec![],
                        ));
                    }
                    Item::Qubit(QubitExpr::Sum(Box::new(a), Box::new(b)), p)
                }
                _ => return Err(self.error_at(pos, "superposition operands must be qubit constants".into(), vec![])),
            };
        }
        Ok(lhs)
    }

    fn scaled(&mut self) -> Result<Item, ParseError> {
        if !self.starts_scalar() {
            return self.tensor();
        }
        let pos = self.pos();
        let s = self.complex()?;
        match self.scaled()? {
            Item::Qubit(e, _) => Ok(Item::Qubit(QubitExpr::Scale(s, Box::new(e)), pos)),
            _ => Err(self.error_at(pos, "a scalar must multiply a qubit constant".into(), vec![])),
        }
    }

    fn tensor(&mut self) -> Result<Item, ParseError> {
        let mut lhs = self.app()?;
        while *self.peek() == Tok::Star {
            let pos = self.pos();
            self.advance();
            let rhs = self.app()?;
            lhs = match (lhs, rhs) {
                (Item::Qubit(a, p), Item::Qubit(b, _)) => {
                    if a.width() + b.width() > MAX_WIDTH {
                        return Err(self.error_at(pos, "qubit constant too wide".into(), vec![]));
                    }
                    Item::Qubit(QubitExpr::Tensor(Box::new(a), Box::new(b)), p)
                }
                (Item::Gate(a), Item::Gate(b)) => Item::Gate(GateExpr::tensor(a, b)),
                (Item::Gate(_), _) | (_, Item::Gate(_)) => {
                    return Err(self.error_at(pos, "a gate can only be tensored with another gate".into(), vec![]))
                }
                (a, b) => {
                    let a = self.lower(a)?;
                    let b = self.lower(b)?;
                    Item::Term(Term::tensor(a, b))
                }
            };
        }
        Ok(lhs)
    }

    fn app(&mut self) -> Result<Item, ParseError> {
        let mut f = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            let ft = self.lower(f)?;
            let at = self.lower(a)?;
            f = Item::Term(Term::app(ft, at));
        }
        Ok(f)
    }

    fn atom(&mut self) -> Result<Item, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                if let Some(b) = Builtin::from_name(&name) {
                    Ok(Item::Gate(GateExpr::Builtin(b)))
                } else if let Some(g) = self.gates.get(&name) {
                    Ok(Item::Gate(GateExpr::User(g.clone())))
                } else {
                    Ok(Item::Term(Term::Var(name)))
                }
            }
            Tok::Ket(bit) => {
                self.advance();
                Ok(Item::Qubit(QubitExpr::Base { bit, banged: false }, pos))
            }
            Tok::Bang => {
                self.advance();
                if let Tok::Ket(bit) = *self.peek() {
                    self.advance();
                    return Ok(Item::Qubit(QubitExpr::Base { bit, banged: true }, pos));
                }
                if !self.starts_atom() {
                    return Err(self.unexpected(&["term after `!`"]));
                }
                let inner = self.atom()?;
                let t = self.lower(inner)?;
                Ok(Item::Term(Term::bang(t)))
            }
            Tok::Meas(indices) => {
                self.advance();
                let set = MeasSet::new(indices).map_err(|e| self.error_at(pos, e.to_string(), vec![]))?;
                Ok(Item::Term(Term::Meas(set)))
            }
            Tok::LParen if !self.starts_scalar() => {
                self.advance();
                let inner = self.term_item()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => Err(self.unexpected(&["identifier", "`|0>`", "`|1>`", "`!`", "`M{..}`", "`(`"])),
        }
    }

    fn complex(&mut self) -> Result<Complex64, ParseError> {
        self.expect(Tok::LParen)?;
        let re = self.real()?;
        self.expect(Tok::Comma)?;
        let im = self.real()?;
        self.expect(Tok::RParen)?;
        Ok(Complex64::new(re, im))
    }

    fn matrix(&mut self) -> Result<Vec<Vec<Complex64>>, ParseError> {
        self.expect(Tok::LBracket)?;
        let mut rows = Vec::new();
        loop {
            self.expect(Tok::LBracket)?;
            let mut row = Vec::new();
            loop {
                row.push(self.entry()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket)?;
            rows.push(row);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBracket)?;
        Ok(rows)
    }

    fn entry(&mut self) -> Result<Complex64, ParseError> {
        if *self.peek() == Tok::LParen {
            self.advance();
            let re = self.real()?;
            if self.eat(&Tok::Comma) {
                let im = self.real()?;
                self.expect(Tok::RParen)?;
                return Ok(Complex64::new(re, im));
            }
            self.expect(Tok::RParen)?;
            return Ok(Complex64::new(re, 0.0));
        }
        Ok(Complex64::new(self.real()?, 0.0))
    }

    fn real(&mut self) -> Result<f64, ParseError> {
        let mut v = self.real_prod()?;
        loop {
            if self.eat(&Tok::Plus) {
                v += self.real_prod()?;
            } else if self.eat(&Tok::Minus) {
                v -= self.real_prod()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn real_prod(&mut self) -> Result<f64, ParseError> {
        let mut v = self.real_unary()?;
        loop {
            if self.eat(&Tok::Star) {
                v *= self.real_unary()?;
            } else if self.eat(&Tok::Slash) {
                v /= self.real_unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn real_unary(&mut self) -> Result<f64, ParseError> {
        match self.peek().clone() {
            Tok::Minus => {
                self.advance();
                Ok(-self.real_unary()?)
            }
            Tok::Number(n) => {
                self.advance();
                Ok(n)
            }
            Tok::Sqrt => {
                self.advance();
                self.expect(Tok::LParen)?;
                let v = self.real()?;
                self.expect(Tok::RParen)?;
                Ok(v.sqrt())
            }
            Tok::LParen => {
                self.advance();
                let v = self.real()?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            _ => Err(self.unexpected(&["number", "`sqrt`", "`-`", "`(`"])),
        }
    }
}
