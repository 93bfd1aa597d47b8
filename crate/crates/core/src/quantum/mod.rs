//! Amplitude algebra for qubit constants.
//!
//! A [`QubitValue`] is a sparse superposition over computational basis states
//! of `m` wires. Basis index `u` stores wire `k` (1-based) in bit `m - k`, so
//! wire 1 is the most significant bit and the binary word of `u` reads wire 1
//! first.

mod gate;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use gate::{Builtin, GateExpr, Leaf, UserGate};

use crate::tolerance::{EPS_NORM, EPS_ZERO, MAX_WIDTH};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("gate of arity {gate} applied to a {width}-qubit value")]
    ArityMismatch { gate: usize, width: usize },
    #[error("measurement index {index} outside wires 1..={width}")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("outcome {outcome} does not fit in {bits} measured bits")]
    OutcomeOutOfRange { outcome: u64, bits: usize },
    #[error("measurement index set must be non-empty and contain only indices >= 1")]
    BadIndexSet,
    #[error("gate `{name}` needs a square matrix of dimension 2^k (k >= 1), got {dim} rows")]
    BadMatrix { name: String, dim: usize },
    #[error("qubit width {0} is not supported")]
    BadWidth(usize),
}

/// The index set `I` of a measurement constant: non-empty, sorted, each >= 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasSet(Vec<usize>);

impl MeasSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<MeasSet, QuantumError> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() || v[0] == 0 {
            return Err(QuantumError::BadIndexSet);
        }
        Ok(MeasSet(v))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max(&self) -> usize {
        *self.0.last().expect("non-empty")
    }

    fn check_width(&self, width: usize) -> Result<(), QuantumError> {
        match self.0.iter().find(|&&i| i > width) {
            Some(&index) => Err(QuantumError::IndexOutOfRange { index, width }),
            None => Ok(()),
        }
    }

    /// The measured bits of `u`, packed with the smallest index first (as
    /// the most significant bit of the outcome word).
    fn outcome_of(&self, u: u64, width: usize) -> u64 {
        self.0.iter().fold(0, |w, &i| (w << 1) | ((u >> (width - i)) & 1))
    }
}

impl fmt::Display for MeasSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<_> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "M{{{}}}", parts.join(","))
    }
}

/// A superposition of `width`-qubit basis states in canonical form: zero
/// amplitudes are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitValue {
    width: usize,
    amps: BTreeMap<u64, Complex64>,
}

fn clean(c: Complex64) -> Complex64 {
    let re = if c.re.abs() <= EPS_ZERO { 0.0 } else { c.re };
    let im = if c.im.abs() <= EPS_ZERO { 0.0 } else { c.im };
    Complex64::new(re, im)
}

impl QubitValue {
    /// Builds a value from (basis index, amplitude) pairs, summing repeated
    /// indices and dropping negligible amplitudes. Normalization is not
    /// enforced here; see [`QubitValue::is_normalized`].
    pub fn from_amplitudes(
        width: usize,
        amps: impl IntoIterator<Item = (u64, Complex64)>,
    ) -> Result<QubitValue, QuantumError> {
        if width == 0 || width > MAX_WIDTH {
            return Err(QuantumError::BadWidth(width));
        }
        let mut map: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (u, a) in amps {
            if u >> width != 0 {
                return Err(QuantumError::BadWidth(width));
            }
            *map.entry(u).or_default() += a;
        }
        Ok(QubitValue::canonical(width, map))
    }

    fn canonical(width: usize, map: BTreeMap<u64, Complex64>) -> QubitValue {
        let amps = map
            .into_iter()
            .filter(|(_, a)| a.norm() > EPS_ZERO)
            .map(|(u, a)| (u, clean(a)))
            .collect();
        QubitValue { width, amps }
    }

    /// The basis state `|u>` on `width` wires.
    pub fn basis(width: usize, u: u64) -> QubitValue {
        assert!((1..=MAX_WIDTH).contains(&width) && u >> width == 0);
        QubitValue { width, amps: BTreeMap::from([(u, Complex64::new(1.0, 0.0))]) }
    }

    /// Basis state from wire bits, wire 1 first.
    pub fn from_bits(bits: &[u8]) -> QubitValue {
        let u = bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1));
        QubitValue::basis(bits.len(), u)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn amplitude(&self, u: u64) -> Complex64 {
        self.amps.get(&u).copied().unwrap_or_default()
    }

    /// Non-zero amplitudes in ascending basis order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.amps.iter().map(|(&u, &a)| (u, a))
    }

    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// `Some(u)` when the value is a single basis state `|u>` with unit
    /// modulus amplitude (any global phase).
    pub fn as_basis(&self) -> Option<u64> {
        match self.amps.iter().next() {
            Some((&u, a)) if self.amps.len() == 1 && (a.norm() - 1.0).abs() <= EPS_NORM => Some(u),
            _ => None,
        }
    }

    /// Amplitude-wise comparison over the union of supports.
    pub fn approx_eq(&self, other: &QubitValue, tol: f64) -> bool {
        self.width == other.width
            && self.amps.iter().all(|(u, a)| (a - other.amplitude(*u)).norm() <= tol)
            && other.amps.iter().all(|(u, b)| (self.amplitude(*u) - b).norm() <= tol)
    }

    /// Kronecker product; `self` occupies the leading wires.
    pub fn tensor(&self, other: &QubitValue) -> QubitValue {
        let width = self.width + other.width;
        let mut map = BTreeMap::new();
        for (&ua, a) in &self.amps {
            for (&ub, b) in &other.amps {
                map.insert((ua << other.width) | ub, a * b);
            }
        }
        QubitValue::canonical(width, map)
    }

    /// Applies a gate acting on all wires of the value, factor by factor.
    pub fn apply_gate(&self, gate: &GateExpr) -> Result<QubitValue, QuantumError> {
        if gate.arity() != self.width {
            return Err(QuantumError::ArityMismatch { gate: gate.arity(), width: self.width });
        }
        let mut current = self.amps.clone();
        for (offset, leaf) in gate.leaves() {
            let k = leaf.arity();
            let shift = self.width - offset - k;
            let mask = ((1u64 << k) - 1) << shift;
            let mut next: BTreeMap<u64, Complex64> = BTreeMap::new();
            for (u, a) in current {
                let col = ((u & mask) >> shift) as usize;
                for row in 0..(1usize << k) {
                    let c = leaf.entry(row, col);
                    if c.norm() == 0.0 {
                        continue;
                    }
                    let v = (u & !mask) | ((row as u64) << shift);
                    *next.entry(v).or_default() += c * a;
                }
            }
            current = next;
        }
        Ok(QubitValue::canonical(self.width, current))
    }

    /// Projective measurement of the wires in `set`: one outcome per word `w`
    /// whose probability exceeds [`EPS_ZERO`], in ascending `w` order.
    pub fn measure(&self, set: &MeasSet) -> Result<Vec<MeasurementOutcome>, QuantumError> {
        set.check_width(self.width)?;
        let mut groups: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
        for (&u, &a) in &self.amps {
            groups.entry(set.outcome_of(u, self.width)).or_default().push((u, a));
        }
        let mut out = Vec::new();
        for (w, entries) in groups {
            let p: f64 = entries.iter().map(|(_, a)| a.norm_sqr()).sum();
            if p <= EPS_ZERO {
                continue;
            }
            let scale = p.sqrt();
            let post = entries.into_iter().map(|(u, a)| (u, a / scale)).collect();
            out.push(MeasurementOutcome {
                outcome: w,
                probability: p,
                state: QubitValue::canonical(self.width, post),
            });
        }
        Ok(out)
    }

    /// Splits into `left (x) right` with `left` on the first `left_width`
    /// wires, when the value is a product state across that cut. The left
    /// factor is normalized with a positive real leading amplitude; any phase
    /// goes to the right factor.
    pub fn split(&self, left_width: usize) -> Option<(QubitValue, QubitValue)> {
        if left_width == 0 || left_width >= self.width {
            return None;
        }
        let rw = self.width - left_width;
        let rmask = (1u64 << rw) - 1;
        let (&pivot, &pivot_amp) =
            self.amps.iter().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
        let (pa, pb) = (pivot >> rw, pivot & rmask);
        let mut left: BTreeMap<u64, Complex64> = BTreeMap::new();
        let mut right: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (&u, &a) in &self.amps {
            if u & rmask == pb {
                left.insert(u >> rw, a);
            }
            if u >> rw == pa {
                right.insert(u & rmask, a / pivot_amp);
            }
        }
        for (&x, &l) in &left {
            for (&y, &r) in &right {
                if (self.amplitude((x << rw) | y) - l * r).norm() > EPS_ZERO {
                    return None;
                }
            }
        }
        if self.amps.len() != left.len() * right.len() {
            return None;
        }
        let ln: f64 = left.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let lead = *left.values().next()?;
        let phase = lead / lead.norm();
        let l = left.into_iter().map(|(u, a)| (u, a / (ln * phase)));
        let r = right.into_iter().map(|(u, a)| (u, a * ln * phase));
        Some((
            QubitValue::canonical(left_width, l.collect()),
            QubitValue::canonical(rw, r.collect()),
        ))
    }
}

/// Basis indices of an `m`-bit word agreeing with outcome `w` on the wires
/// of `set` (j-th smallest index matched against the j-th bit of `w`, most
/// significant first). Ascending order; always `2^(m - |set|)` entries.
pub fn coincidence_set(w: u64, m: usize, set: &MeasSet) -> Result<Vec<u64>, QuantumError> {
    if m == 0 || m > MAX_WIDTH {
        return Err(QuantumError::BadWidth(m));
    }
    set.check_width(m)?;
    let k = set.len();
    if w >> k != 0 {
        return Err(QuantumError::OutcomeOutOfRange { outcome: w, bits: k });
    }
    let mut fixed = 0u64;
    let mut fixed_mask = 0u64;
    for (j, &i) in set.indices().iter().enumerate() {
        let bit = (w >> (k - 1 - j)) & 1;
        fixed |= bit << (m - i);
        fixed_mask |= 1 << (m - i);
    }
    let free: Vec<u32> = (0..m as u32).rev().filter(|b| fixed_mask >> b & 1 == 0).collect();
    let mut out: Vec<u64> = (0..(1u64 << free.len()))
        .map(|assign| {
            free.iter().enumerate().fold(fixed, |acc, (j, &bit)| {
                acc | (((assign >> (free.len() - 1 - j)) & 1) << bit)
            })
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// One branch of a measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub outcome: u64,
    pub probability: f64,
    pub state: QubitValue,
}

#[derive(Serialize, Deserialize)]
struct QubitJson {
    width: usize,
    amps: Vec<(u64, f64, f64)>,
}

impl Serialize for QubitValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        QubitJson { width: self.width, amps: self.iter().map(|(u, a)| (u, a.re, a.im)).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QubitValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<QubitValue, D::Error> {
        let j = QubitJson::deserialize(d)?;
        QubitValue::from_amplitudes(j.width, j.amps.into_iter().map(|(u, re, im)| (u, Complex64::new(re, im))))
            .map_err(serde::de::Error::custom)
    }
}
