//! Printer producing text the parser reads back to an alpha-equivalent term.
//! Exception: a `Tensor` of two qubit constants prints as `a * b`, which
//! parses as the folded constant.

use num_complex::Complex64;

use super::{Program, Term};
use crate::quantum::QubitValue;

// Context levels, loosest first.
const TOP: u8 = 0;
const SUM: u8 = 1;
const TENSOR: u8 = 2;
const APP: u8 = 3;
const ATOM: u8 = 4;

pub fn pretty(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, TOP, &mut out);
    out
}

/// Prints a whole program: gate declarations, definitions, then `main`.
pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for g in &p.gates {
        let rows: Vec<String> = g
            .rows()
            .map(|r| format!("[{}]", r.iter().map(|&z| complex(z)).collect::<Vec<_>>().join(", ")))
            .collect();
        out.push_str(&format!("gate {} = [{}];\n", g.name(), rows.join(", ")));
    }
    for (name, t) in &p.defs {
        out.push_str(&format!("{name} = {};\n", pretty(t)));
    }
    out.push_str(&format!("main = {};\n", pretty(&p.main)));
    out
}

fn complex(z: Complex64) -> String {
    format!("({:?}, {:?})", z.re, z.im)
}

fn basis_text(width: usize, u: u64) -> String {
    (0..width)
        .map(|k| format!("!|{}>", (u >> (width - 1 - k)) & 1))
        .collect::<Vec<_>>()
        .join(" * ")
}

fn qubit_level(q: &QubitValue) -> (String, u8) {
    let entries: Vec<_> = q.iter().collect();
    if let [(u, a)] = entries[..] {
        if a == Complex64::new(1.0, 0.0) {
            let level = if q.width() == 1 { ATOM } else { TENSOR };
            return (basis_text(q.width(), u), level);
        }
    }
    if entries.is_empty() {
        return (format!("{} {}", complex(Complex64::new(0.0, 0.0)), basis_text(q.width(), 0)), SUM);
    }
    let parts: Vec<String> =
        entries.iter().map(|&(u, a)| format!("{} {}", complex(a), basis_text(q.width(), u))).collect();
    (parts.join(" + "), SUM)
}

fn wrap(out: &mut String, own: u8, ctx: u8, body: impl FnOnce(&mut String)) {
    let paren = own < ctx;
    if paren {
        out.push('(');
    }
    body(out);
    if paren {
        out.push(')');
    }
}

fn write_term(t: &Term, ctx: u8, out: &mut String) {
    match t {
        Term::Var(x) => out.push_str(x),
        Term::Meas(s) => out.push_str(&s.to_string()),
        Term::Gate(g) => {
            let own = if g.arity() > 1 && g.leaves().len() > 1 { TENSOR } else { ATOM };
            wrap(out, own, ctx, |o| o.push_str(&g.to_string()));
        }
        Term::Qubit(q) => {
            let (text, own) = qubit_level(q);
            wrap(out, own, ctx, |o| o.push_str(&text));
        }
        Term::Lam(x, b) | Term::BangLam(x, b) => wrap(out, TOP, ctx, |o| {
            o.push('\\');
            if matches!(t, Term::BangLam(..)) {
                o.push('!');
            }
            o.push_str(x);
            o.push_str(". ");
            write_term(b, TOP, o);
        }),
        Term::LetTensor { left, right, left_width, bound, body } => wrap(out, TOP, ctx, |o| {
            o.push_str("let ");
            o.push_str(left);
            if *left_width != 1 {
                o.push_str(&format!(":{left_width}"));
            }
            o.push_str(" * ");
            o.push_str(right);
            o.push_str(" = ");
            write_term(bound, TOP, o);
            o.push_str(" in ");
            write_term(body, TOP, o);
        }),
        Term::If(c, a, b) => wrap(out, TOP, ctx, |o| {
            o.push_str("if ");
            write_term(c, TOP, o);
            o.push_str(" then ");
            write_term(a, TOP, o);
            o.push_str(" else ");
            write_term(b, TOP, o);
        }),
        Term::App(f, a) => wrap(out, APP, ctx, |o| {
            write_term(f, APP, o);
            o.push(' ');
            write_term(a, ATOM, o);
        }),
        Term::Tensor(a, b) => wrap(out, TENSOR, ctx, |o| {
            write_term(a, TENSOR, o);
            o.push_str(" * ");
            write_term(b, APP, o);
        }),
        Term::Bang(b) => {
            out.push('!');
            write_term(b, ATOM, out);
        }
    }
}
