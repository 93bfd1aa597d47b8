//! Dense state-vector simulator used as an independent oracle for the
//! sparse engine. Gates are expanded to full matrices and applied by plain
//! matrix-vector products; measurement scans every basis index.

use num_complex::Complex64;

use crate::quantum::{Builtin, GateExpr, Leaf, MeasSet, QuantumError, UserGate};

/// Widest state this simulator accepts.
pub const DENSE_MAX_WIDTH: usize = 12;

type Matrix = Vec<Vec<Complex64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub width: usize,
    pub amps: Vec<Complex64>,
}

impl DenseState {
    pub fn new(width: usize, amps: Vec<Complex64>) -> Result<DenseState, QuantumError> {
        if width == 0 || width > DENSE_MAX_WIDTH || amps.len() != 1 << width {
            return Err(QuantumError::BadWidth(width));
        }
        Ok(DenseState { width, amps })
    }

    pub fn basis(width: usize, u: usize) -> DenseState {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << width];
        amps[u] = Complex64::new(1.0, 0.0);
        DenseState { width, amps }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn kron(&self, other: &DenseState) -> DenseState {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        DenseState { width: self.width + other.width, amps }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn builtin_matrix(b: Builtin) -> Matrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    match b {
        Builtin::H => vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]],
        Builtin::X => vec![vec![z, o], vec![o, z]],
        Builtin::Z => vec![vec![o, z], vec![z, c(-1.0, 0.0)]],
        Builtin::I => vec![vec![o, z], vec![z, o]],
        Builtin::Cnot => vec![
            vec![o, z, z, z],
            vec![z, o, z, z],
            vec![z, z, z, o],
            vec![z, z, o, z],
        ],
    }
}

fn user_matrix(g: &UserGate) -> Matrix {
    g.rows().map(|r| r.to_vec()).collect()
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Full unitary of a gate expression.
pub fn dense_matrix(g: &GateExpr) -> Matrix {
    let mut acc: Option<Matrix> = None;
    for (_, leaf) in g.leaves() {
        let m = match leaf {
            Leaf::Builtin(b) => builtin_matrix(b),
            Leaf::User(u) => user_matrix(u),
        };
        acc = Some(match acc {
            None => m,
            Some(a) => kron(&a, &m),
        });
    }
    acc.expect("a gate has at least one factor")
}

pub fn dense_apply(g: &GateExpr, s: &DenseState) -> Result<DenseState, QuantumError> {
    if g.arity() != s.width {
        return Err(QuantumError::ArityMismatch { gate: g.arity(), width: s.width });
    }
    let m = dense_matrix(g);
    let amps = m.iter().map(|row| row.iter().zip(&s.amps).map(|(x, y)| x * y).sum()).collect();
    Ok(DenseState { width: s.width, amps })
}

/// Outcomes `(w, p_w, post-state)` with `p_w > 0`, in increasing `w`.
pub fn dense_measure(s: &DenseState, set: &MeasSet) -> Result<Vec<(u64, f64, DenseState)>, QuantumError> {
    let idx = set.indices();
    if let Some(&bad) = idx.iter().find(|&&i| i > s.width) {
        return Err(QuantumError::IndexOutOfRange { index: bad, width: s.width });
    }
    let k = idx.len();
    let mut out = Vec::new();
    for w in 0..(1u64 << k) {
        let mut p = 0.0;
        let mut post = vec![c(0.0, 0.0); s.amps.len()];
        for (u, a) in s.amps.iter().enumerate() {
            let mut word = 0u64;
            for &i in idx {
                word = (word << 1) | ((u as u64 >> (s.width - i)) & 1);
            }
            if word == w {
                p += a.norm_sqr();
                post[u] = *a;
            }
        }
        if p > crate::tolerance::EPS_ZERO {
            let scale = p.sqrt();
            for a in &mut post {
                *a /= scale;
            }
            out.push((w, p, DenseState { width: s.width, amps: post }));
        }
    }
    Ok(out)
}

/// If `s` is `|b⟩ ⊗ φ` for a basis state `|b⟩` on the leading wires,
/// returns `φ` on the last `tail` wires.
pub fn trailing_factor(s: &DenseState, tail: usize) -> Option<Vec<Complex64>> {
    let block = 1 << tail;
    let mut found = None;
    for (i, chunk) in s.amps.chunks(block).enumerate() {
        if chunk.iter().any(|a| a.norm() > 1e-9) {
            if found.is_some() {
                return None;
            }
            found = Some(i);
        }
    }
    found.map(|i| s.amps[i * block..(i + 1) * block].to_vec())
}

fn gate(names: &[Builtin]) -> GateExpr {
    GateExpr::tensor_all(names.iter().map(|&b| GateExpr::Builtin(b))).expect("non-empty")
}

/// One branch of the measured teleportation circuit.
#[derive(Debug, Clone)]
pub struct TeleportBranch {
    pub b1: u64,
    pub b2: u64,
    pub probability: f64,
    pub bob: Vec<Complex64>,
}

/// The three-wire teleportation circuit on `psi ⊗ |00⟩`: Bell pair on wires
/// 2 and 3, Alice's CNOT and H, measurement of wires 1 and 2, then Bob's X
/// and Z corrections on wire 3.
pub fn teleport_circuit(psi: [Complex64; 2]) -> Vec<TeleportBranch> {
    use Builtin::*;
    let input = DenseState { width: 1, amps: psi.to_vec() };
    let mut s = input.kron(&DenseState::basis(2, 0));
    for g in [gate(&[I, H, I]), gate(&[I, Cnot]), gate(&[Cnot, I]), gate(&[H, I, I])] {
        s = dense_apply(&g, &s).expect("arity 3");
    }
    let set = MeasSet::new([1, 2]).expect("valid set");
    dense_measure(&s, &set)
        .expect("in range")
        .into_iter()
        .map(|(w, p, mut post)| {
            let (b1, b2) = (w >> 1, w & 1);
            if b2 == 1 {
                post = dense_apply(&gate(&[I, I, X]), &post).expect("arity 3");
            }
            if b1 == 1 {
                post = dense_apply(&gate(&[I, I, Z]), &post).expect("arity 3");
            }
            let bob = trailing_factor(&post, 1).expect("measured wires are classical");
            TeleportBranch { b1, b2, probability: p, bob }
        })
        .collect()
}

/// The measurement-free teleportation circuit: Alice's measurements are
/// replaced by a controlled-X from wire 2 and a controlled-Z from wire 1
/// onto wire 3. The result is `|+⟩ ⊗ |+⟩ ⊗ psi`.
pub fn deferred_teleport_circuit(psi: [Complex64; 2]) -> DenseState {
    use Builtin::*;
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    let swap = UserGate::new(
        "swap",
        vec![vec![o, z, z, z], vec![z, z, o, z], vec![z, o, z, z], vec![z, z, z, o]],
    )
    .expect("valid matrix");
    let cz = UserGate::new(
        "cz",
        vec![vec![o, z, z, z], vec![z, o, z, z], vec![z, z, o, z], vec![z, z, z, c(-1.0, 0.0)]],
    )
    .expect("valid matrix");
    let i = GateExpr::Builtin(I);
    let swap23 = GateExpr::tensor(i.clone(), GateExpr::User(swap.into()));
    let cz13_middle = GateExpr::tensor(GateExpr::User(cz.into()), i);
    let input = DenseState { width: 1, amps: psi.to_vec() };
    let mut s = input.kron(&DenseState::basis(2, 0));
    for g in [
        gate(&[I, H, I]),
        gate(&[I, Cnot]),
        gate(&[Cnot, I]),
        gate(&[H, I, I]),
        gate(&[I, Cnot]),
        swap23.clone(),
        cz13_middle,
        swap23,
    ] {
        s = dense_apply(&g, &s).expect("arity 3");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn hadamard_and_identity() {
        let h = dense_apply(&GateExpr::Builtin(Builtin::H), &DenseState::basis(1, 0)).unwrap();
        assert!(close(&h.amps, &[c(S, 0.0), c(S, 0.0)]));
        let s = DenseState::new(1, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert_eq!(dense_apply(&GateExpr::Builtin(Builtin::I), &s).unwrap(), s);
        assert!(dense_apply(&GateExpr::Builtin(Builtin::Cnot), &s).is_err());
    }

    #[test]
    fn epr_pair() {
        let s = dense_apply(&gate(&[Builtin::H, Builtin::I]), &DenseState::basis(2, 0)).unwrap();
        let s = dense_apply(&GateExpr::Builtin(Builtin::Cnot), &s).unwrap();
        let z = c(0.0, 0.0);
        assert!(close(&s.amps, &[c(S, 0.0), z, z, c(S, 0.0)]));
    }

    #[test]
    fn five_qubit_measurement() {
        let amp = c((1.0f64 / 32.0).sqrt(), 0.0);
        let s = DenseState::new(5, vec![amp; 32]).unwrap();
        let out = dense_measure(&s, &MeasSet::new([2, 3, 5]).unwrap()).unwrap();
        assert_eq!(out.len(), 8);
        let (w, p, post) = &out[2];
        assert_eq!(*w, 2);
        assert!((p - 0.125).abs() < 1e-12);
        let support: Vec<usize> = (0..32).filter(|&u| post.amps[u].norm() > 0.0).collect();
        assert_eq!(support, [4, 6, 20, 22]);
        assert!(support.iter().all(|&u| (post.amps[u].re - 0.5).abs() < 1e-12));
    }

    #[test]
    fn measuring_a_basis_state() {
        let out = dense_measure(&DenseState::basis(1, 0), &MeasSet::new([1]).unwrap()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].0, out[0].1), (0, 1.0));
        assert!(dense_measure(&DenseState::basis(1, 0), &MeasSet::new([2]).unwrap()).is_err());
    }

    #[test]
    fn teleportation_recovers_input() {
        let psi = [c(0.6, 0.0), c(0.8, 0.0)];
        let branches = teleport_circuit(psi);
        assert_eq!(branches.len(), 4);
        for b in &branches {
            assert!((b.probability - 0.25).abs() < 1e-12);
            assert!(close(&b.bob, &psi));
        }
        let d = deferred_teleport_circuit(psi);
        let plus = DenseState { width: 1, amps: vec![c(S, 0.0), c(S, 0.0)] };
        let want = plus.kron(&plus).kron(&DenseState { width: 1, amps: psi.to_vec() });
        assert!(close(&d.amps, &want.amps));
    }
}
