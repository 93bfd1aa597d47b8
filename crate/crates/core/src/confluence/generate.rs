//! Seeded generator of closed, well-formed terms.
//!
//! Every generating function receives the linear variables it must use
//! exactly once. Conditional branches never receive any, `!` payloads are
//! closed over linear variables and contain no abstractions, and a
//! nonlinear abstraction only ever appears applied to a banged term, a
//! qubit constant, a nonlinear variable or a measurement.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::quantum::{Builtin, GateExpr, MeasSet, QubitValue};
use crate::syntax::{parse, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    /// Upper bound on the node count of each term.
    pub max_size: usize,
    /// Widest qubit constant generated; at most 12.
    pub max_width: usize,
    pub seed: u64,
    pub count: usize,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig { max_size: 12, max_width: 3, seed: 0, count: 1000 }
    }
}

/// `count` terms; term `i` depends only on the seed and `i`.
pub fn generate(config: &GenConfig) -> Vec<Term> {
    (0..config.count).map(|i| generate_one(config, i)).collect()
}

pub fn generate_one(config: &GenConfig, index: usize) -> Term {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let max_width = config.max_width.clamp(1, 12);
    for _ in 0..256 {
        let mut g = Gen { rng: &mut rng, max_width, next: 0 };
        let budget = g.rng.gen_range(1..=config.max_size.max(1));
        let t = g.term(budget, Vec::new(), &[]);
        if t.size() <= config.max_size.max(1) {
            return t;
        }
    }
    Term::Qubit(QubitValue::basis(1, 0))
}

/// Fixed terms exercising the interesting overlaps: duplication of a
/// measured value, promotion of a suspended measurement, a linear
/// abstraction applied to a measurement, two independent measurements, and
/// a measurement inside a conditional branch.
pub fn regression_seeds() -> Vec<(&'static str, Term)> {
    let src = [
        ("copying", r"(\!x. x * x) (M{1} ((0.6, 0) !|0> + (0.8, 0) !|1>))"),
        ("promotion", r"(\!x. x x) !(M{1} ((1/sqrt(2), 0) !|0> + (1/sqrt(2), 0) !|1>))"),
        ("beta-over-measurement", r"(\x. H x) (M{1} ((0.6, 0) !|0> + (0, 0.8) !|1>))"),
        (
            "independent-measurements",
            r"(M{1} ((0.6, 0) !|0> + (0.8, 0) !|1>)) (M{1} ((1/sqrt(2), 0) !|0> + (1/sqrt(2), 0) !|1>))",
        ),
        (
            "measured-condition",
            r"if M{1} (H !|0>) then (\y. M{1} y) (H !|1>) else M{1} ((0.6, 0) !|0> + (0.8, 0) !|1>)",
        ),
        ("let-over-measurement", r"let a * b = M{1} (cnot ((H !|0>) * !|0>)) in (\z. z) (b * a)"),
    ];
    src.into_iter().map(|(name, s)| (name, parse(s).expect("regression seed parses"))).collect()
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    max_width: usize,
    next: usize,
}

/// Qubit constants fold; a bare gate operand is banged, since `g * t` reads
/// as a gate tensor in the concrete syntax.
fn mk_tensor(a: Term, b: Term) -> Term {
    let operand = |t: Term| match t {
        Term::Gate(_) => Term::bang(t),
        t => t,
    };
    match (a, b) {
        (Term::Qubit(p), Term::Qubit(q)) => Term::Qubit(p.tensor(&q)),
        (a, b) => Term::tensor(operand(a), operand(b)),
    }
}

impl Gen<'_> {
    fn fresh(&mut self) -> String {
        self.next += 1;
        format!("x{}", self.next)
    }

    fn width(&mut self) -> usize {
        self.rng.gen_range(1..=self.max_width)
    }

    fn split_budget(&mut self, b: usize) -> (usize, usize) {
        let b = b.max(2);
        let l = self.rng.gen_range(1..b);
        (l, b - l)
    }

    fn partition(&mut self, lin: Vec<String>, parts: usize) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); parts];
        for x in lin {
            let k = self.rng.gen_range(0..parts);
            out[k].push(x);
        }
        out
    }

    fn qubit_const(&mut self, w: usize) -> QubitValue {
        if self.rng.gen_bool(0.5) {
            return QubitValue::basis(w, self.rng.gen_range(0..1u64 << w));
        }
        loop {
            let mut amps: Vec<(u64, Complex64)> = Vec::new();
            for u in 0..1u64 << w {
                if self.rng.gen_bool(0.7) {
                    amps.push((u, Complex64::new(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0))));
                }
            }
            let n: f64 = amps.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
            if n < 0.1 {
                continue;
            }
            let q = QubitValue::from_amplitudes(w, amps.into_iter().map(|(u, a)| (u, a / n)));
            if let Ok(q) = q {
                if q.support_len() > 0 {
                    return q;
                }
            }
        }
    }

    fn gate(&mut self, w: usize) -> GateExpr {
        let mut parts = Vec::new();
        let mut left = w;
        while left > 0 {
            if left >= 2 && self.rng.gen_bool(0.3) {
                parts.push(GateExpr::Builtin(Builtin::Cnot));
                left -= 2;
            } else {
                let b = *[Builtin::H, Builtin::X, Builtin::Z, Builtin::I].choose(self.rng).expect("non-empty");
                parts.push(GateExpr::Builtin(b));
                left -= 1;
            }
        }
        GateExpr::tensor_all(parts).expect("w >= 1")
    }

    fn meas(&mut self, w: usize) -> MeasSet {
        let mut idx: Vec<usize> = (1..=w).filter(|_| self.rng.gen_bool(0.5)).collect();
        if idx.is_empty() {
            idx.push(self.rng.gen_range(1..=w));
        }
        MeasSet::new(idx).expect("indices within 1..=w")
    }

    /// A small term using exactly the variables in `lin`.
    fn closer(&mut self, lin: Vec<String>, nl: &[String]) -> Term {
        let mut vars = lin.into_iter().map(Term::Var);
        match vars.next() {
            Some(first) => vars.fold(first, mk_tensor),
            None => match self.rng.gen_range(0..6) {
                0 if !nl.is_empty() => Term::var(nl.choose(self.rng).expect("non-empty")),
                1 => {
                    let w = self.width();
                    Term::Gate(self.gate(w))
                }
                2 => Term::bang(self.payload(1, nl)),
                _ => {
                    let w = self.width();
                    Term::Qubit(self.qubit_const(w))
                }
            },
        }
    }

    /// Contents of a `!`: no linear variables and no abstractions.
    fn payload(&mut self, b: usize, nl: &[String]) -> Term {
        let w = self.width();
        match self.rng.gen_range(0..7) {
            0 if !nl.is_empty() => Term::var(nl.choose(self.rng).expect("non-empty")),
            1 if b > 1 => Term::app(Term::Meas(self.meas(w)), Term::Qubit(self.qubit_const(w))),
            2 => Term::Gate(self.gate(w)),
            3 => Term::Meas(self.meas(w)),
            4 if b > 1 => Term::bang(self.payload(b - 1, nl)),
            _ => Term::Qubit(self.qubit_const(w)),
        }
    }

    /// An argument acceptable to a nonlinear abstraction.
    fn nl_arg(&mut self, b: usize, lin: Vec<String>, nl: &[String]) -> Term {
        let w = self.width();
        if !lin.is_empty() || (b > 1 && self.rng.gen_bool(0.4)) {
            let inner = self.qterm(b.saturating_sub(1), lin, nl, w);
            return Term::app(Term::Meas(self.meas(w)), inner);
        }
        match self.rng.gen_range(0..4) {
            0 if !nl.is_empty() => Term::var(nl.choose(self.rng).expect("non-empty")),
            1 => Term::Qubit(self.qubit_const(w)),
            _ => Term::bang(self.payload(b.saturating_sub(1).max(1), nl)),
        }
    }

    fn term(&mut self, b: usize, lin: Vec<String>, nl: &[String]) -> Term {
        if b <= 1 {
            return self.closer(lin, nl);
        }
        match self.rng.gen_range(0..13) {
            0..=3 => {
                let w = self.width();
                self.qterm(b, lin, nl, w)
            }
            4 => {
                let x = self.fresh();
                let mut lin = lin;
                lin.push(x.clone());
                Term::Lam(x, Box::new(self.term(b - 1, lin, nl)))
            }
            5 | 6 => {
                let (b1, b2) = self.split_budget(b - 1);
                let mut parts = self.partition(lin, 2);
                let x = self.fresh();
                let arg = self.arg(b2, parts.pop().expect("two parts"), nl);
                let mut body_lin = parts.pop().expect("two parts");
                body_lin.push(x.clone());
                let body = self.term(b1, body_lin, nl);
                Term::app(Term::Lam(x, Box::new(body)), arg)
            }
            7 => {
                let (bc, rest) = self.split_budget(b - 1);
                let (ba, bb) = self.split_budget(rest);
                let c = self.qterm(bc, lin, nl, 1);
                Term::ite(c, self.term(ba, Vec::new(), nl), self.term(bb, Vec::new(), nl))
            }
            8 => {
                let (b1, b2) = self.split_budget(b - 1);
                let mut parts = self.partition(lin, 2);
                let r = self.term(b2, parts.pop().expect("two parts"), nl);
                let l = self.term(b1, parts.pop().expect("two parts"), nl);
                mk_tensor(l, r)
            }
            9 => self.bang_redex(b, lin, nl, None),
            10 => self.let_tensor(b, lin, nl, None),
            11 if lin.is_empty() => Term::bang(self.payload(b - 1, nl)),
            _ => {
                let w = self.width();
                self.qterm(b, lin, nl, w)
            }
        }
    }

    /// A non-abstraction argument for a linear abstraction.
    fn arg(&mut self, b: usize, lin: Vec<String>, nl: &[String]) -> Term {
        if lin.is_empty() && self.rng.gen_bool(0.2) {
            return Term::bang(self.payload(b.max(1), nl));
        }
        let w = self.width();
        self.qterm(b, lin, nl, w)
    }

    fn bang_redex(&mut self, b: usize, lin: Vec<String>, nl: &[String], width: Option<usize>) -> Term {
        let (b1, b2) = self.split_budget(b.saturating_sub(1));
        let mut parts = self.partition(lin, 2);
        let x = self.fresh();
        let mut inner_nl = nl.to_vec();
        inner_nl.push(x.clone());
        let arg = self.nl_arg(b2, parts.pop().expect("two parts"), nl);
        let body_lin = parts.pop().expect("two parts");
        let body = match width {
            Some(w) => self.qterm(b1, body_lin, &inner_nl, w),
            None => self.term(b1, body_lin, &inner_nl),
        };
        Term::app(Term::BangLam(x, Box::new(body)), arg)
    }

    fn let_tensor(&mut self, b: usize, lin: Vec<String>, nl: &[String], width: Option<usize>) -> Term {
        let (b1, b2) = self.split_budget(b.saturating_sub(1));
        let mut parts = self.partition(lin, 2);
        let total = self.rng.gen_range(2..=self.max_width.max(2));
        let left_width = self.rng.gen_range(1..total);
        let bound = self.qterm(b1, parts.pop().expect("two parts"), nl, total);
        let (x, y) = (self.fresh(), self.fresh());
        let mut body_lin = parts.pop().expect("two parts");
        body_lin.push(x.clone());
        body_lin.push(y.clone());
        let body = match width {
            Some(w) => self.qterm(b2, body_lin, nl, w),
            None => self.term(b2, body_lin, nl),
        };
        Term::LetTensor { left: x, right: y, left_width, bound: Box::new(bound), body: Box::new(body) }
    }

    /// A term meant to reduce to a `w`-wire qubit constant.
    fn qterm(&mut self, b: usize, lin: Vec<String>, nl: &[String], w: usize) -> Term {
        if b <= 1 || (lin.is_empty() && self.rng.gen_bool(0.15)) {
            if lin.is_empty() && !nl.is_empty() && self.rng.gen_bool(0.2) {
                return Term::var(nl.choose(self.rng).expect("non-empty"));
            }
            if lin.is_empty() {
                return Term::Qubit(self.qubit_const(w));
            }
            return self.closer(lin, nl);
        }
        match self.rng.gen_range(0..10) {
            0 | 1 => Term::app(Term::Gate(self.gate(w)), self.qterm(b - 1, lin, nl, w)),
            2 | 3 => Term::app(Term::Meas(self.meas(w)), self.qterm(b - 1, lin, nl, w)),
            4 if w >= 2 => {
                let (b1, b2) = self.split_budget(b - 1);
                let wl = self.rng.gen_range(1..w);
                let mut parts = self.partition(lin, 2);
                let r = self.qterm(b2, parts.pop().expect("two parts"), nl, w - wl);
                let l = self.qterm(b1, parts.pop().expect("two parts"), nl, wl);
                mk_tensor(l, r)
            }
            5 => {
                let (b1, b2) = self.split_budget(b - 1);
                let mut parts = self.partition(lin, 2);
                let x = self.fresh();
                let aw = self.width();
                let arg = self.qterm(b2, parts.pop().expect("two parts"), nl, aw);
                let mut body_lin = parts.pop().expect("two parts");
                body_lin.push(x.clone());
                let body = self.qterm(b1, body_lin, nl, w);
                Term::app(Term::Lam(x, Box::new(body)), arg)
            }
            6 => {
                let (bc, rest) = self.split_budget(b - 1);
                let (ba, bb) = self.split_budget(rest);
                let c = self.qterm(bc, lin, nl, 1);
                let then = self.qterm(ba, Vec::new(), nl, w);
                let other = self.qterm(bb, Vec::new(), nl, w);
                Term::ite(c, then, other)
            }
            7 => self.bang_redex(b, lin, nl, Some(w)),
            8 => self.let_tensor(b, lin, nl, Some(w)),
            _ => Term::app(Term::Gate(self.gate(w)), self.qterm(b - 1, lin, nl, w)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wellformed::check;

    #[test]
    fn deterministic() {
        let c = GenConfig { count: 1, seed: 42, ..GenConfig::default() };
        assert_eq!(generate(&c), generate(&c));
        let more = GenConfig { count: 5, ..c };
        assert_eq!(generate(&more)[0], generate(&c)[0]);
    }

    #[test]
    fn generated_terms_are_well_formed_and_small() {
        let c = GenConfig { count: 500, seed: 1, ..GenConfig::default() };
        for (i, t) in generate(&c).iter().enumerate() {
            let r = check(t);
            assert!(r.verdict, "term {i}: {t}\n{:?}", r.violations);
            assert!(t.size() <= c.max_size);
        }
    }

    #[test]
    fn regression_seeds_are_well_formed() {
        for (name, t) in regression_seeds() {
            assert!(check(&t).verdict, "{name}");
        }
    }
}
