use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::QuantumError;

/// Gates with a fixed matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    H,
    X,
    Z,
    I,
    Cnot,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [Builtin::H, Builtin::X, Builtin::Z, Builtin::I, Builtin::Cnot];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::H => "H",
            Builtin::X => "X",
            Builtin::Z => "Z",
            Builtin::I => "I",
            Builtin::Cnot => "cnot",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Cnot => 2,
            _ => 1,
        }
    }

    /// Entry `(row, col)` of the gate matrix. Wire 1 is the high bit of the
    /// row/column index, so `cnot` is controlled by its first wire.
    fn entry(self, row: usize, col: usize) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Builtin::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                if row == 1 && col == 1 {
                    Complex64::new(-s, 0.0)
                } else {
                    Complex64::new(s, 0.0)
                }
            }
            Builtin::X => {
                if row != col {
                    one
                } else {
                    zero
                }
            }
            Builtin::Z => match (row, col) {
                (0, 0) => one,
                (1, 1) => -one,
                _ => zero,
            },
            Builtin::I => {
                if row == col {
                    one
                } else {
                    zero
                }
            }
            Builtin::Cnot => {
                let target = match col {
                    0 => 0,
                    1 => 1,
                    2 => 3,
                    _ => 2,
                };
                if row == target {
                    one
                } else {
                    zero
                }
            }
        }
    }
}

/// A gate declared in source with an explicit matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct UserGate {
    name: String,
    arity: usize,
    /// Row-major, `2^arity` by `2^arity`.
    matrix: Vec<Complex64>,
}

impl UserGate {
    /// Registers a square matrix whose dimension is a power of two. Unitarity
    /// is checked separately with [`GateExpr::is_unitary`].
    pub fn new(name: impl Into<String>, rows: Vec<Vec<Complex64>>) -> Result<UserGate, QuantumError> {
        let name = name.into();
        let dim = rows.len();
        if dim < 2 || !dim.is_power_of_two() || rows.iter().any(|r| r.len() != dim) {
            return Err(QuantumError::BadMatrix { name, dim });
        }
        let arity = dim.trailing_zeros() as usize;
        Ok(UserGate { name, arity, matrix: rows.into_iter().flatten().collect() })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim() + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.matrix.chunks(self.dim())
    }
}

/// A gate constant: a builtin, a declared gate, or a tensor of gates. The
/// left operand of a tensor acts on the leading wires.
#[derive(Debug, Clone, PartialEq)]
pub enum GateExpr {
    Builtin(Builtin),
    User(Arc<UserGate>),
    Tensor(Box<GateExpr>, Box<GateExpr>),
}

/// One tensor factor of a gate, with the 0-based wire offset it starts at.
#[derive(Debug, Clone, Copy)]
pub enum Leaf<'a> {
    Builtin(Builtin),
    User(&'a UserGate),
}

impl Leaf<'_> {
    pub fn arity(&self) -> usize {
        match self {
            Leaf::Builtin(b) => b.arity(),
            Leaf::User(u) => u.arity(),
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self {
            Leaf::Builtin(b) => b.entry(row, col),
            Leaf::User(u) => u.entry(row, col),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Leaf::Builtin(b) => b.name(),
            Leaf::User(u) => u.name(),
        }
    }
}

impl GateExpr {
    pub fn tensor(left: GateExpr, right: GateExpr) -> GateExpr {
        GateExpr::Tensor(Box::new(left), Box::new(right))
    }

    /// Tensor of a non-empty list of gates, left to right.
    pub fn tensor_all(gates: impl IntoIterator<Item = GateExpr>) -> Option<GateExpr> {
        gates.into_iter().reduce(GateExpr::tensor)
    }

    pub fn arity(&self) -> usize {
        match self {
            GateExpr::Builtin(b) => b.arity(),
            GateExpr::User(u) => u.arity(),
            GateExpr::Tensor(a, b) => a.arity() + b.arity(),
        }
    }

    /// Tensor factors in wire order, each with its starting wire offset.
    pub fn leaves(&self) -> Vec<(usize, Leaf<'_>)> {
        fn walk<'a>(g: &'a GateExpr, offset: &mut usize, out: &mut Vec<(usize, Leaf<'a>)>) {
            match g {
                GateExpr::Builtin(b) => {
                    out.push((*offset, Leaf::Builtin(*b)));
                    *offset += b.arity();
                }
                GateExpr::User(u) => {
                    out.push((*offset, Leaf::User(u)));
                    *offset += u.arity();
                }
                GateExpr::Tensor(a, b) => {
                    walk(a, offset, out);
                    walk(b, offset, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut 0, &mut out);
        out
    }

    /// Dense matrix of the whole gate, row-major. Meant for small arities.
    pub fn matrix(&self) -> Vec<Vec<Complex64>> {
        let mut acc = vec![vec![Complex64::new(1.0, 0.0)]];
        for (_, leaf) in self.leaves() {
            let d = 1 << leaf.arity();
            let n = acc.len();
            let mut next = vec![vec![Complex64::new(0.0, 0.0); n * d]; n * d];
            for (i, row) in acc.iter().enumerate() {
                for (j, a) in row.iter().enumerate() {
                    for r in 0..d {
                        for c in 0..d {
                            next[i * d + r][j * d + c] = a * leaf.entry(r, c);
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// Checks `U U^dagger = 1` entrywise within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.leaves().iter().all(|(_, leaf)| {
            let d = 1 << leaf.arity();
            (0..d).all(|i| {
                (0..d).all(|j| {
                    let dot: Complex64 = (0..d).map(|k| leaf.entry(i, k) * leaf.entry(j, k).conj()).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    (dot - expect).norm() <= tol
                })
            })
        })
    }

    /// Structural equality up to tensor associativity.
    pub fn same_gate(&self, other: &GateExpr) -> bool {
        let a = self.leaves();
        let b = other.leaves();
        a.len() == b.len()
            && a.iter().zip(&b).all(|((_, x), (_, y))| match (x, y) {
                (Leaf::Builtin(p), Leaf::Builtin(q)) => p == q,
                (Leaf::User(p), Leaf::User(q)) => p == q,
                _ => false,
            })
    }
}

impl fmt::Display for GateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.leaves().iter().map(|(_, l)| l.name().to_string()).collect();
        write!(f, "{}", names.join(" * "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arities() {
        assert_eq!(GateExpr::Builtin(Builtin::H).arity(), 1);
        assert_eq!(GateExpr::Builtin(Builtin::Cnot).arity(), 2);
        let g = GateExpr::tensor(GateExpr::Builtin(Builtin::Cnot), GateExpr::Builtin(Builtin::X));
        assert_eq!(g.arity(), 3);
    }

    #[test]
    fn builtins_are_unitary() {
        for b in Builtin::ALL {
            assert!(GateExpr::Builtin(b).is_unitary(1e-9), "{}", b.name());
        }
        let g = GateExpr::tensor_all([Builtin::H, Builtin::Cnot, Builtin::Z].map(GateExpr::Builtin)).unwrap();
        assert!(g.is_unitary(1e-9));
        let m = g.matrix();
        assert_eq!(m.len(), 16);
    }

    #[test]
    fn user_gate_dimension_errors() {
        let one = Complex64::new(1.0, 0.0);
        assert!(UserGate::new("bad", vec![vec![one; 3]; 3]).is_err());
        assert!(UserGate::new("bad", vec![vec![one; 2], vec![one]]).is_err());
        let g = UserGate::new("dup", vec![vec![one, one], vec![one, one]]).unwrap();
        assert!(!GateExpr::User(Arc::new(g)).is_unitary(1e-9));
    }

    #[test]
    fn same_gate_ignores_association() {
        use Builtin::*;
        let a = GateExpr::tensor(GateExpr::tensor(GateExpr::Builtin(H), GateExpr::Builtin(I)), GateExpr::Builtin(X));
        let b = GateExpr::tensor(GateExpr::Builtin(H), GateExpr::tensor(GateExpr::Builtin(I), GateExpr::Builtin(X)));
        assert!(a.same_gate(&b));
        assert!(!a.same_gate(&GateExpr::Builtin(H)));
    }
}
