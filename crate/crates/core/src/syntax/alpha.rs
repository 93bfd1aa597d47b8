use std::collections::BTreeSet;

use super::Term;

pub fn free_vars(t: &Term) -> BTreeSet<String> {
    fn go(t: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match t {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Lam(x, b) | Term::BangLam(x, b) => {
                bound.push(x.clone());
                go(b, bound, out);
                bound.pop();
            }
            Term::LetTensor { left, right, bound: e, body, .. } => {
                go(e, bound, out);
                bound.push(left.clone());
                bound.push(right.clone());
                go(body, bound, out);
                bound.truncate(bound.len() - 2);
            }
            other => {
                for c in other.children() {
                    go(c, bound, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// `base` with primes appended until it avoids every name in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let mut name = format!("{base}'");
    while avoid.contains(&name) {
        name.push('\'');
    }
    name
}

/// Capture-avoiding substitution `body[replacement/var]`.
pub fn substitute(body: &Term, var: &str, replacement: &Term) -> Term {
    let fv = free_vars(replacement);
    subst(body, var, replacement, &fv)
}

fn subst(t: &Term, var: &str, rep: &Term, rep_fv: &BTreeSet<String>) -> Term {
    match t {
        Term::Var(x) if x == var => rep.clone(),
        Term::Var(_) | Term::Gate(_) | Term::Qubit(_) | Term::Meas(_) => t.clone(),
        Term::Lam(x, b) | Term::BangLam(x, b) => {
            let rebuild = |x: String, b: Term| match t {
                Term::Lam(..) => Term::Lam(x, Box::new(b)),
                _ => Term::BangLam(x, Box::new(b)),
            };
            if x == var {
                return t.clone();
            }
            let body_fv = free_vars(b);
            if !body_fv.contains(var) {
                return t.clone();
            }
            if rep_fv.contains(x) {
                let mut avoid = rep_fv.clone();
                avoid.extend(body_fv);
                avoid.insert(var.to_string());
                let fresh = fresh_name(x, &avoid);
                let renamed = subst(b, x, &Term::Var(fresh.clone()), &BTreeSet::from([fresh.clone()]));
                rebuild(fresh, subst(&renamed, var, rep, rep_fv))
            } else {
                rebuild(x.clone(), subst(b, var, rep, rep_fv))
            }
        }
        Term::LetTensor { left, right, left_width, bound, body } => {
            let bound = subst(bound, var, rep, rep_fv);
            if left == var || right == var {
                return Term::LetTensor {
                    left: left.clone(),
                    right: right.clone(),
                    left_width: *left_width,
                    bound: Box::new(bound),
                    body: body.clone(),
                };
            }
            let body_fv = free_vars(body);
            let (mut l, mut r, mut b) = (left.clone(), right.clone(), (**body).clone());
            if body_fv.contains(var) {
                let mut avoid = rep_fv.clone();
                avoid.extend(body_fv);
                avoid.insert(var.to_string());
                avoid.insert(l.clone());
                avoid.insert(r.clone());
                for name in [&mut l, &mut r] {
                    if rep_fv.contains(name.as_str()) {
                        let fresh = fresh_name(name, &avoid);
                        avoid.insert(fresh.clone());
                        b = subst(&b, name, &Term::Var(fresh.clone()), &BTreeSet::from([fresh.clone()]));
                        *name = fresh;
                    }
                }
                b = subst(&b, var, rep, rep_fv);
            }
            Term::LetTensor { left: l, right: r, left_width: *left_width, bound: Box::new(bound), body: Box::new(b) }
        }
        Term::App(f, a) => Term::App(Box::new(subst(f, var, rep, rep_fv)), Box::new(subst(a, var, rep, rep_fv))),
        Term::Tensor(f, a) => {
            Term::Tensor(Box::new(subst(f, var, rep, rep_fv)), Box::new(subst(a, var, rep, rep_fv)))
        }
        Term::Bang(b) => Term::Bang(Box::new(subst(b, var, rep, rep_fv))),
        Term::If(c, a, b) => Term::If(
            Box::new(subst(c, var, rep, rep_fv)),
            Box::new(subst(a, var, rep, rep_fv)),
            Box::new(subst(b, var, rep, rep_fv)),
        ),
    }
}

/// Alpha-equivalence; qubit constants compare amplitude-wise within `tol`.
pub fn alpha_eq(a: &Term, b: &Term, tol: f64) -> bool {
    eq(a, b, &mut Vec::new(), &mut Vec::new(), tol)
}

fn lookup(env: &[String], x: &str) -> Option<usize> {
    env.iter().rev().position(|y| y == x)
}

fn eq(a: &Term, b: &Term, ea: &mut Vec<String>, eb: &mut Vec<String>, tol: f64) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => match (lookup(ea, x), lookup(eb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Term::Lam(x, s), Term::Lam(y, t)) | (Term::BangLam(x, s), Term::BangLam(y, t)) => {
            ea.push(x.clone());
            eb.push(y.clone());
            let r = eq(s, t, ea, eb, tol);
            ea.pop();
            eb.pop();
            r
        }
        (
            Term::LetTensor { left: l1, right: r1, left_width: w1, bound: e1, body: b1 },
            Term::LetTensor { left: l2, right: r2, left_width: w2, bound: e2, body: b2 },
        ) => {
            if w1 != w2 || !eq(e1, e2, ea, eb, tol) {
                return false;
            }
            ea.push(l1.clone());
            ea.push(r1.clone());
            eb.push(l2.clone());
            eb.push(r2.clone());
            let r = eq(b1, b2, ea, eb, tol);
            ea.truncate(ea.len() - 2);
            eb.truncate(eb.len() - 2);
            r
        }
        (Term::App(f, x), Term::App(g, y)) | (Term::Tensor(f, x), Term::Tensor(g, y)) => {
            eq(f, g, ea, eb, tol) && eq(x, y, ea, eb, tol)
        }
        (Term::Bang(s), Term::Bang(t)) => eq(s, t, ea, eb, tol),
        (Term::If(c1, a1, b1), Term::If(c2, a2, b2)) => {
            eq(c1, c2, ea, eb, tol) && eq(a1, a2, ea, eb, tol) && eq(b1, b2, ea, eb, tol)
        }
        (Term::Gate(g), Term::Gate(h)) => g.same_gate(h),
        (Term::Qubit(p), Term::Qubit(q)) => p.approx_eq(q, tol),
        (Term::Meas(i), Term::Meas(j)) => i == j,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{MeasSet, QubitValue};
    use num_complex::Complex64;

    fn v(x: &str) -> Term {
        Term::var(x)
    }

    #[test]
    fn alpha_examples() {
        assert!(alpha_eq(&Term::lam("x", v("x")), &Term::lam("y", v("y")), 0.0));
        let a = Term::lam("x", Term::lam("y", v("x")));
        let b = Term::lam("y", Term::lam("x", v("x")));
        assert!(!alpha_eq(&a, &b, 0.0));
        assert!(!alpha_eq(&v("x"), &v("y"), 0.0));
        assert!(!alpha_eq(&Term::lam("x", v("x")), &Term::bang_lam("x", v("x")), 0.0));
    }

    #[test]
    fn zero_amplitude_summand_is_dropped() {
        let a = Complex64::new(1.0, 0.0);
        let with_zero =
            QubitValue::from_amplitudes(1, [(0, a), (1, Complex64::new(0.0, 0.0))]).unwrap();
        let plain = QubitValue::from_amplitudes(1, [(0, a)]).unwrap();
        assert!(alpha_eq(&Term::Qubit(with_zero), &Term::Qubit(plain), 1e-9));
    }

    #[test]
    fn substitution_examples() {
        let zero = Term::bang(Term::Qubit(QubitValue::basis(1, 0)));
        assert_eq!(substitute(&v("x"), "x", &zero), zero);

        let out = substitute(&Term::lam("y", v("x")), "x", &v("y"));
        assert_eq!(out, Term::lam("y'", v("y")));

        let q = QubitValue::basis(1, 1);
        let m = Term::app(Term::Meas(MeasSet::new([1]).unwrap()), Term::Qubit(q));
        let out = substitute(&Term::app(v("x"), v("x")), "x", &m);
        assert_eq!(out, Term::app(m.clone(), m));
    }

    #[test]
    fn substitution_respects_shadowing_and_let_tensor() {
        let t = Term::lam("x", v("x"));
        assert_eq!(substitute(&t, "x", &v("z")), t);
        let lt = Term::let_tensor("a", "b", 1, v("x"), Term::tensor(v("a"), v("x")));
        let out = substitute(&lt, "x", &v("a"));
        let want = Term::let_tensor("a'", "b", 1, v("a"), Term::tensor(v("a'"), v("a")));
        assert_eq!(out, want);
        assert!(free_vars(&out).contains("a"));
    }
}
