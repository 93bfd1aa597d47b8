//! Single-step probabilistic reduction.
//!
//! Every rule is closed under all contexts except `!`: redexes fire under
//! abstractions, in all three parts of a conditional, on both sides of a
//! tensor and in both parts of a tensor `let`. A banged term is a value.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::quantum::QuantumError;
use crate::syntax::{substitute, Path, Term};
use crate::tolerance::MAX_WIDTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// Congruence in function position. Never reported as a contraction.
    App1,
    /// Congruence in argument position. Never reported as a contraction.
    App2,
    Beta,
    BangBeta1,
    BangBeta2,
    Unitary,
    /// `q1 * q2` of two qubit constants folds to one constant.
    TensorFold,
    /// `let x * y = q in u` on a product state.
    LetTensor,
    Meas,
    If0,
    If1,
    /// The idle step of a normal form.
    Id,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::App1,
        Rule::App2,
        Rule::Beta,
        Rule::BangBeta1,
        Rule::BangBeta2,
        Rule::Unitary,
        Rule::TensorFold,
        Rule::LetTensor,
        Rule::Meas,
        Rule::If0,
        Rule::If1,
        Rule::Id,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::App1 => "APP1",
            Rule::App2 => "APP2",
            Rule::Beta => "beta",
            Rule::BangBeta1 => "!beta1",
            Rule::BangBeta2 => "!beta2",
            Rule::Unitary => "U",
            Rule::TensorFold => "TENSOR",
            Rule::LetTensor => "LET*",
            Rule::Meas => "M",
            Rule::If0 => "IF0",
            Rule::If1 => "IF1",
            Rule::Id => "Id",
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Rule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleSet {
    S,
    T,
    ST,
}

const S_RULES: &[Rule] = &[
    Rule::App1,
    Rule::App2,
    Rule::Beta,
    Rule::BangBeta1,
    Rule::BangBeta2,
    Rule::Unitary,
    Rule::TensorFold,
    Rule::LetTensor,
];
const T_RULES: &[Rule] = &[Rule::Meas, Rule::If0, Rule::If1];
const ST_RULES: &[Rule] = &[
    Rule::App1,
    Rule::App2,
    Rule::Beta,
    Rule::BangBeta1,
    Rule::BangBeta2,
    Rule::Unitary,
    Rule::TensorFold,
    Rule::LetTensor,
    Rule::Meas,
    Rule::If0,
    Rule::If1,
];

impl RuleSet {
    pub fn name(self) -> &'static str {
        match self {
            RuleSet::S => "S",
            RuleSet::T => "T",
            RuleSet::ST => "S+T",
        }
    }

    pub fn from_name(name: &str) -> Option<RuleSet> {
        match name {
            "S" => Some(RuleSet::S),
            "T" => Some(RuleSet::T),
            "S+T" | "ST" => Some(RuleSet::ST),
            _ => None,
        }
    }

    pub fn members(self) -> &'static [Rule] {
        match self {
            RuleSet::S => S_RULES,
            RuleSet::T => T_RULES,
            RuleSet::ST => ST_RULES,
        }
    }

    pub fn contains(self, rule: Rule) -> bool {
        self.members().contains(&rule)
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A contraction site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Redex {
    pub position: Path,
    pub rule: Rule,
}

impl fmt::Display for Redex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.rule, self.position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbStep {
    pub target: Term,
    pub probability: f64,
    pub rule: Rule,
    pub position: Path,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("rule {rule} does not apply at {position}")]
    NoRedex { rule: Rule, position: Path },
    #[error("measurement at {position} is applied to a term that is not a qubit constant")]
    StuckMeasurement { position: Path },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// The rule whose left-hand side matches `t` at its root, if any. At most
/// one rule matches any given node.
pub fn rule_at_root(t: &Term) -> Option<Rule> {
    match t {
        Term::App(f, a) => match (&**f, &**a) {
            (Term::Lam(..), _) => Some(Rule::Beta),
            (Term::BangLam(..), Term::Bang(_)) => Some(Rule::BangBeta1),
            (Term::BangLam(..), Term::Qubit(_)) => Some(Rule::BangBeta2),
            (Term::Gate(g), Term::Qubit(q)) if g.arity() == q.width() => Some(Rule::Unitary),
            (Term::Meas(s), Term::Qubit(q)) if s.max() <= q.width() => Some(Rule::Meas),
            _ => None,
        },
        Term::If(c, _, _) => match &**c {
            Term::Qubit(q) if q.width() == 1 => match q.as_basis() {
                Some(0) => Some(Rule::If0),
                Some(_) => Some(Rule::If1),
                None => None,
            },
            _ => None,
        },
        Term::Tensor(a, b) => match (&**a, &**b) {
            (Term::Qubit(p), Term::Qubit(q)) if p.width() + q.width() <= MAX_WIDTH => Some(Rule::TensorFold),
            _ => None,
        },
        Term::LetTensor { bound, left_width, .. } => match &**bound {
            Term::Qubit(q) if q.split(*left_width).is_some() => Some(Rule::LetTensor),
            _ => None,
        },
        _ => None,
    }
}

/// Every redex of `t` whose rule is in `rules`, in lexicographic path order.
pub fn enumerate_redexes(t: &Term, rules: RuleSet) -> Vec<Redex> {
    fn go(t: &Term, at: &Path, rules: RuleSet, out: &mut Vec<Redex>) {
        if let Some(rule) = rule_at_root(t) {
            if rules.contains(rule) {
                out.push(Redex { position: at.clone(), rule });
            }
        }
        if matches!(t, Term::Bang(_)) {
            return;
        }
        for (i, c) in t.children().into_iter().enumerate() {
            go(c, &at.child(i), rules, out);
        }
    }
    let mut out = Vec::new();
    go(t, &Path::root(), rules, &mut out);
    out
}

pub fn is_normal(t: &Term) -> bool {
    enumerate_redexes(t, RuleSet::ST).is_empty()
}

/// Whether some proper prefix of `position` addresses a `!` term.
fn under_bang(t: &Term, position: &Path) -> bool {
    let mut cur = t;
    for &i in &position.0 {
        if matches!(cur, Term::Bang(_)) {
            return true;
        }
        match cur.children().get(i) {
            Some(c) => cur = c,
            None => return false,
        }
    }
    false
}

/// Contracts `redex` at the root of `t`.
fn contract(t: &Term, rule: Rule) -> Result<Vec<(Term, f64)>, QuantumError> {
    let one = |x: Term| Ok(vec![(x, 1.0)]);
    match (rule, t) {
        (Rule::Beta, Term::App(f, a)) | (Rule::BangBeta1, Term::App(f, a)) | (Rule::BangBeta2, Term::App(f, a)) => {
            let (Term::Lam(x, b) | Term::BangLam(x, b)) = &**f else { unreachable!() };
            let arg = match (rule, &**a) {
                (Rule::BangBeta1, Term::Bang(inner)) => &**inner,
                (_, other) => other,
            };
            one(substitute(b, x, arg))
        }
        (Rule::Unitary, Term::App(g, q)) => {
            let (Term::Gate(g), Term::Qubit(q)) = (&**g, &**q) else { unreachable!() };
            one(Term::Qubit(q.apply_gate(g)?))
        }
        (Rule::Meas, Term::App(s, q)) => {
            let (Term::Meas(s), Term::Qubit(q)) = (&**s, &**q) else { unreachable!() };
            Ok(q.measure(s)?.into_iter().map(|o| (Term::Qubit(o.state), o.probability)).collect())
        }
        (Rule::If0, Term::If(_, a, _)) => one((**a).clone()),
        (Rule::If1, Term::If(_, _, b)) => one((**b).clone()),
        (Rule::TensorFold, Term::Tensor(a, b)) => {
            let (Term::Qubit(a), Term::Qubit(b)) = (&**a, &**b) else { unreachable!() };
            one(Term::Qubit(a.tensor(b)))
        }
        (Rule::LetTensor, Term::LetTensor { left, right, left_width, bound, body }) => {
            let Term::Qubit(q) = &**bound else { unreachable!() };
            let (l, r) = q.split(*left_width).expect("checked by rule_at_root");
            let body = substitute(body, left, &Term::Qubit(l));
            one(substitute(&body, right, &Term::Qubit(r)))
        }
        _ => unreachable!("rule {rule} does not match {}", t.kind()),
    }
}

/// Fires `rule` at `position`. For (M) this yields one step per outcome;
/// every other rule yields a single step of probability 1.
pub fn step_at(t: &Term, position: &Path, rule: Rule) -> Result<Vec<ProbStep>, ReductionError> {
    let no_redex = || ReductionError::NoRedex { rule, position: position.clone() };
    let sub = t.subterm(position).ok_or_else(no_redex)?;
    if under_bang(t, position) {
        return Err(no_redex());
    }
    if rule_at_root(sub) != Some(rule) {
        if let (Rule::Meas, Term::App(f, a)) = (rule, sub) {
            match (&**f, &**a) {
                (Term::Meas(_), Term::Qubit(_)) => {}
                (Term::Meas(_), _) => return Err(ReductionError::StuckMeasurement { position: position.clone() }),
                _ => return Err(no_redex()),
            }
            let (Term::Meas(s), Term::Qubit(q)) = (&**f, &**a) else { unreachable!() };
            q.measure(s)?;
        }
        return Err(no_redex());
    }
    let results = contract(sub, rule)?;
    Ok(results
        .into_iter()
        .map(|(r, p)| ProbStep {
            target: t.replace_at(position, r).expect("position exists"),
            probability: p,
            rule,
            position: position.clone(),
        })
        .collect())
}

/// The redex the deterministic strategy contracts next: function position
/// first, then the argument, then the node itself. Conditionals reduce
/// their condition, then branch, then reduce inside both arms; bodies of
/// abstractions are reduced too, so the result is a full normal form.
pub fn strategy_redex(t: &Term) -> Option<Redex> {
    fn here(t: &Term, at: &Path) -> Option<Redex> {
        rule_at_root(t).map(|rule| Redex { position: at.clone(), rule })
    }
    fn go(t: &Term, at: &Path) -> Option<Redex> {
        match t {
            Term::App(f, a) | Term::Tensor(f, a) => {
                go(f, &at.child(0)).or_else(|| go(a, &at.child(1))).or_else(|| here(t, at))
            }
            Term::Lam(_, b) | Term::BangLam(_, b) => go(b, &at.child(0)),
            Term::If(c, a, b) => go(c, &at.child(0))
                .or_else(|| here(t, at))
                .or_else(|| go(a, &at.child(1)))
                .or_else(|| go(b, &at.child(2))),
            Term::LetTensor { bound, body, .. } => {
                go(bound, &at.child(0)).or_else(|| here(t, at)).or_else(|| go(body, &at.child(1)))
            }
            Term::Bang(_) | Term::Var(_) | Term::Gate(_) | Term::Qubit(_) | Term::Meas(_) => None,
        }
    }
    go(t, &Path::root())
}

/// One step of the deterministic strategy; a normal form idles with
/// probability 1.
pub fn step_strategy(t: &Term) -> Result<Vec<ProbStep>, ReductionError> {
    match strategy_redex(t) {
        Some(r) => step_at(t, &r.position, r.rule),
        None => Ok(vec![ProbStep { target: t.clone(), probability: 1.0, rule: Rule::Id, position: Path::root() }]),
    }
}
