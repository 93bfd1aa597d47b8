//! Terms of the calculus, the concrete grammar, alpha-equivalence,
//! substitution and pretty-printing.

mod alpha;
mod lexer;
mod parser;
mod pretty;

use std::collections::BTreeSet;
use std::fmt;

use crate::quantum::{GateExpr, MeasSet, QubitValue};

pub use alpha::{alpha_eq, free_vars, fresh_name, substitute};
pub use lexer::Pos;
pub use parser::{parse, parse_program, ParseError, Program, QubitExpr, QubitLiteral};
pub use pretty::{pretty, pretty_program};

/// A pre-term. Binder names are non-empty identifiers.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(String),
    /// Linear abstraction `\x. t`.
    Lam(String, Box<Term>),
    /// Nonlinear abstraction `\!x. t`.
    BangLam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
    /// Nonlinear term `!t`.
    Bang(Box<Term>),
    Gate(GateExpr),
    Qubit(QubitValue),
    Meas(MeasSet),
    If(Box<Term>, Box<Term>, Box<Term>),
    /// Tensor of two terms. Folds into a single qubit constant once both
    /// sides are constants.
    Tensor(Box<Term>, Box<Term>),
    /// `let x * y = bound in body`; `x` takes the first `left_width` wires of
    /// the bound qubit constant and `y` the rest.
    LetTensor {
        left: String,
        right: String,
        left_width: usize,
        bound: Box<Term>,
        body: Box<Term>,
    },
}

/// Address of a subterm: child indices from the root. The children of each
/// node, in order: `Lam`/`BangLam` body; `App` function, argument; `If`
/// condition, then, else; `Tensor` left, right; `LetTensor` bound, body;
/// `Bang` inner.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn root() -> Path {
        Path(Vec::new())
    }

    pub fn child(&self, i: usize) -> Path {
        let mut v = self.0.clone();
        v.push(i);
        Path(v)
    }

    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl serde::Serialize for Path {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<_> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn lam(x: &str, body: Term) -> Term {
        Term::Lam(x.to_string(), Box::new(body))
    }

    pub fn bang_lam(x: &str, body: Term) -> Term {
        Term::BangLam(x.to_string(), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn bang(t: Term) -> Term {
        Term::Bang(Box::new(t))
    }

    pub fn ite(c: Term, a: Term, b: Term) -> Term {
        Term::If(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Term, b: Term) -> Term {
        Term::Tensor(Box::new(a), Box::new(b))
    }

    pub fn let_tensor(left: &str, right: &str, left_width: usize, bound: Term, body: Term) -> Term {
        Term::LetTensor {
            left: left.to_string(),
            right: right.to_string(),
            left_width,
            bound: Box::new(bound),
            body: Box::new(body),
        }
    }

    /// Immediate subterms in path order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Gate(_) | Term::Qubit(_) | Term::Meas(_) => vec![],
            Term::Lam(_, b) | Term::BangLam(_, b) | Term::Bang(b) => vec![b],
            Term::App(f, a) | Term::Tensor(f, a) => vec![f, a],
            Term::If(c, a, b) => vec![c, a, b],
            Term::LetTensor { bound, body, .. } => vec![bound, body],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut Term> {
        match self {
            Term::Var(_) | Term::Gate(_) | Term::Qubit(_) | Term::Meas(_) => vec![],
            Term::Lam(_, b) | Term::BangLam(_, b) | Term::Bang(b) => vec![b],
            Term::App(f, a) | Term::Tensor(f, a) => vec![f, a],
            Term::If(c, a, b) => vec![c, a, b],
            Term::LetTensor { bound, body, .. } => vec![bound, body],
        }
    }

    pub fn subterm(&self, path: &Path) -> Option<&Term> {
        path.0.iter().try_fold(self, |t, &i| t.children().get(i).copied())
    }

    pub fn subterm_mut(&mut self, path: &Path) -> Option<&mut Term> {
        let mut t = self;
        for &i in &path.0 {
            t = t.children_mut().into_iter().nth(i)?;
        }
        Some(t)
    }

    /// Copy of `self` with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &Path, new: Term) -> Option<Term> {
        let mut out = self.clone();
        *out.subterm_mut(path)? = new;
        Some(out)
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        free_vars(self)
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Short constructor name, used for coverage statistics and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Term::Var(_) => "Var",
            Term::Lam(..) => "Lam",
            Term::BangLam(..) => "BangLam",
            Term::App(..) => "App",
            Term::Bang(_) => "Bang",
            Term::Gate(_) => "Gate",
            Term::Qubit(_) => "Qubit",
            Term::Meas(_) => "Meas",
            Term::If(..) => "If",
            Term::Tensor(..) => "Tensor",
            Term::LetTensor { .. } => "LetTensor",
        }
    }

    /// Preorder traversal with paths.
    pub fn walk(&self) -> Vec<(Path, &Term)> {
        let mut out = Vec::new();
        let mut stack = vec![(Path::root(), self)];
        while let Some((p, t)) = stack.pop() {
            let kids = t.children();
            for (i, c) in kids.into_iter().enumerate().rev() {
                stack.push((p.child(i), c));
            }
            out.push((p, t));
        }
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_address_children() {
        let t = Term::app(Term::lam("x", Term::var("x")), Term::var("y"));
        assert_eq!(t.subterm(&Path(vec![0, 0])), Some(&Term::var("x")));
        assert_eq!(t.subterm(&Path(vec![1])), Some(&Term::var("y")));
        assert_eq!(t.subterm(&Path(vec![2])), None);
        let r = t.replace_at(&Path(vec![1]), Term::var("z")).unwrap();
        assert_eq!(r, Term::app(Term::lam("x", Term::var("x")), Term::var("z")));
        assert_eq!(t.size(), 4);
        let order: Vec<String> = t.walk().iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(order, ["e", "0", "0.0", "1"]);
    }
}
