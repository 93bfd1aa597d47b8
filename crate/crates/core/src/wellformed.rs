//! Well-formedness: linearity of variables, bang discipline, and the rules
//! for qubit constants, gates and measurement constants.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::quantum::QubitValue;
use crate::syntax::{Path, Pos, Program, QubitExpr, Term};
use crate::tolerance::EPS_NORM;

/// One failed rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub position: Path,
    /// Source position, when the violation concerns a literal as written.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<Pos>,
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.source {
            Some(pos) => write!(f, "{pos}: [{}] {}", self.rule, self.message),
            None => write!(f, "at {}: [{}] {}", self.position, self.rule, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WfReport {
    pub verdict: bool,
    pub violations: Vec<Violation>,
}

impl WfReport {
    fn from_violations(violations: Vec<Violation>) -> WfReport {
        WfReport { verdict: violations.is_empty(), violations }
    }
}

/// `|Σ|α_i|² − 1| ≤ tol`.
pub fn is_normalized(amplitudes: &[Complex64], tol: f64) -> bool {
    (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs() <= tol
}

#[derive(Clone, Copy, PartialEq)]
enum Linearity {
    Linear,
    Nonlinear,
}

/// Checks a term. Qubit constants are judged in their canonical folded form.
pub fn check(t: &Term) -> WfReport {
    let mut out = Vec::new();
    walk(t, &Path::root(), &mut Vec::new(), &mut out);
    WfReport::from_violations(out)
}

/// Like [`check`] on the program's expanded `main`, and additionally rejects
/// qubit literals whose written form is not derivable as is (unbanged bases,
/// tensors mixing a base with a superposition, sums that are not over
/// distinct basis tensors).
pub fn check_strict(p: &Program) -> WfReport {
    let mut out = check(&p.expanded_main()).violations;
    for lit in &p.literals {
        strict_literal(&lit.expr, lit.pos, &mut out);
    }
    WfReport::from_violations(out)
}

/// Whether `arg` may be passed to a nonlinear abstraction.
pub fn is_nonlinear_argument(arg: &Term, nonlinear: impl Fn(&str) -> bool) -> bool {
    match arg {
        Term::Bang(_) | Term::Qubit(_) | Term::Gate(_) | Term::Meas(_) => true,
        Term::Var(x) => nonlinear(x),
        Term::App(f, _) => matches!(**f, Term::Meas(_)),
        _ => false,
    }
}

fn lookup(env: &[(String, Linearity)], x: &str) -> Option<Linearity> {
    env.iter().rev().find(|(y, _)| y == x).map(|&(_, l)| l)
}

fn occurrences(t: &Term, x: &str) -> usize {
    match t {
        Term::Var(y) => usize::from(y == x),
        Term::Lam(y, _) | Term::BangLam(y, _) if y == x => 0,
        Term::LetTensor { left, right, bound, body, .. } => {
            occurrences(bound, x) + if left == x || right == x { 0 } else { occurrences(body, x) }
        }
        other => other.children().iter().map(|c| occurrences(c, x)).sum(),
    }
}

fn linear_once(x: &str, body: &Term, at: &Path, out: &mut Vec<Violation>) {
    let n = occurrences(body, x);
    if n != 1 {
        out.push(Violation {
            position: at.clone(),
            source: None,
            rule: "Linearity",
            message: format!("linear variable `{x}` is used {n} times, expected exactly once"),
        });
    }
}

fn walk(t: &Term, at: &Path, env: &mut Vec<(String, Linearity)>, out: &mut Vec<Violation>) {
    match t {
        Term::Var(x) => {
            if lookup(env, x).is_none() {
                out.push(Violation {
                    position: at.clone(),
                    source: None,
                    rule: "Scope",
                    message: format!("unbound variable `{x}`"),
                });
            }
        }
        Term::Gate(g) => {
            if !g.is_unitary(EPS_NORM) {
                out.push(Violation {
                    position: at.clone(),
                    source: None,
                    rule: "Gate",
                    message: format!("gate `{g}` is not unitary"),
                });
            }
        }
        Term::Qubit(q) => superposition(q, at, None, out),
        Term::Meas(_) => {}
        Term::Lam(x, b) => {
            linear_once(x, b, at, out);
            env.push((x.clone(), Linearity::Linear));
            walk(b, &at.child(0), env, out);
            env.pop();
        }
        Term::BangLam(x, b) => {
            env.push((x.clone(), Linearity::Nonlinear));
            walk(b, &at.child(0), env, out);
            env.pop();
        }
        Term::LetTensor { left, right, bound, body, .. } => {
            walk(bound, &at.child(0), env, out);
            linear_once(left, body, at, out);
            linear_once(right, body, at, out);
            env.push((left.clone(), Linearity::Linear));
            env.push((right.clone(), Linearity::Linear));
            walk(body, &at.child(1), env, out);
            env.truncate(env.len() - 2);
        }
        Term::Bang(b) => {
            let captured: BTreeSet<String> = b
                .free_vars()
                .into_iter()
                .filter(|x| lookup(env, x) == Some(Linearity::Linear))
                .collect();
            for x in captured {
                out.push(Violation {
                    position: at.clone(),
                    source: None,
                    rule: "Bang",
                    message: format!("`!` term contains the linear variable `{x}`"),
                });
            }
            walk(b, &at.child(0), env, out);
        }
        Term::App(f, a) => {
            if matches!(**f, Term::BangLam(..))
                && !is_nonlinear_argument(a, |x| lookup(env, x) == Some(Linearity::Nonlinear))
            {
                out.push(Violation {
                    position: at.clone(),
                    source: None,
                    rule: "NonlinearApplication",
                    message: format!("nonlinear abstraction applied to the linear term `{a}`"),
                });
            }
            walk(f, &at.child(0), env, out);
            walk(a, &at.child(1), env, out);
        }
        Term::If(_, a, b) => {
            for branch in [a, b] {
                for x in branch.free_vars() {
                    if lookup(env, &x) == Some(Linearity::Linear) {
                        out.push(Violation {
                            position: at.clone(),
                            source: None,
                            rule: "LinearBranch",
                            message: format!("conditional branch uses the outer linear variable `{x}`"),
                        });
                    }
                }
            }
            for (i, c) in t.children().into_iter().enumerate() {
                walk(c, &at.child(i), env, out);
            }
        }
        Term::Tensor(..) => {
            for (i, c) in t.children().into_iter().enumerate() {
                walk(c, &at.child(i), env, out);
            }
        }
    }
}

fn superposition(q: &QubitValue, at: &Path, source: Option<Pos>, out: &mut Vec<Violation>) {
    if !q.is_normalized(EPS_NORM) {
        out.push(Violation {
            position: at.clone(),
            source,
            rule: "Superposition",
            message: format!("squared amplitudes sum to {}, expected 1", q.norm_sqr()),
        });
    }
}

/// Basis index of a tensor of banged bases.
fn banged_basis(e: &QubitExpr) -> Option<u64> {
    match e {
        QubitExpr::Base { bit, banged: true } => Some(u64::from(*bit)),
        QubitExpr::Tensor(a, b) => Some((banged_basis(a)? << b.width()) | banged_basis(b)?),
        _ => None,
    }
}

fn contains_superposition(e: &QubitExpr) -> bool {
    match e {
        QubitExpr::Base { .. } => false,
        QubitExpr::Tensor(a, b) => contains_superposition(a) || contains_superposition(b),
        QubitExpr::Sum(..) | QubitExpr::Scale(..) => true,
    }
}

fn summands<'a>(e: &'a QubitExpr, out: &mut Vec<&'a QubitExpr>) {
    match e {
        QubitExpr::Sum(a, b) => {
            summands(a, out);
            summands(b, out);
        }
        other => out.push(other),
    }
}

fn strict_literal(e: &QubitExpr, pos: Pos, out: &mut Vec<Violation>) {
    let mut fail = |rule, message: String| {
        out.push(Violation { position: Path::root(), source: Some(pos), rule, message })
    };
    match e {
        QubitExpr::Base { bit, banged } => {
            if !banged {
                fail("Base", format!("base qubit must be written `!|{bit}>`"));
            }
        }
        QubitExpr::Tensor(a, b) => {
            if contains_superposition(a) != contains_superposition(b) {
                fail("Tensor", "tensor of a base qubit and a superposition (pattern !q * q)".into());
            }
            strict_literal(a, pos, out);
            strict_literal(b, pos, out);
        }
        QubitExpr::Sum(..) | QubitExpr::Scale(..) => {
            let mut parts = Vec::new();
            summands(e, &mut parts);
            let mut seen = BTreeSet::new();
            let mut amps = Vec::new();
            for part in parts {
                let (amp, inner) = match part {
                    QubitExpr::Scale(a, inner) => (*a, &**inner),
                    other => (Complex64::new(1.0, 0.0), other),
                };
                match banged_basis(inner) {
                    Some(u) => {
                        if !seen.insert(u) {
                            fail("Superposition", format!("basis state {u} appears twice"));
                        }
                        amps.push(amp);
                    }
                    None => fail("Superposition", "summands must be scaled tensors of banged base qubits".into()),
                }
            }
            if !is_normalized(&amps, EPS_NORM) {
                let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                fail("Superposition", format!("squared amplitudes sum to {total}, expected 1"));
            }
        }
    }
}
