//! Term ensembles and the determinized rewrite system over them.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quantum::Leaf;
use crate::reduction::{
    enumerate_redexes, is_normal, step_at, strategy_redex, ProbStep, Redex, ReductionError, Rule, RuleSet,
};
use crate::syntax::{alpha_eq, Term};
use crate::tolerance::AMP_TOL;

/// Largest ensemble `det_step` will build.
pub const MAX_ENSEMBLE: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("ensemble grew to {size} entries, over the cap of {MAX_ENSEMBLE}")]
    TooLarge { size: usize },
    #[error("chooser picked {redex}, which is not a redex of rule set {rules}")]
    InvalidChoice { redex: Redex, rules: RuleSet },
}

/// A finite weighted collection of terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermEnsemble {
    pub entries: Vec<(Term, f64)>,
}

impl TermEnsemble {
    pub fn new(entries: Vec<(Term, f64)>) -> TermEnsemble {
        TermEnsemble { entries }
    }

    pub fn singleton(t: Term) -> TermEnsemble {
        TermEnsemble { entries: vec![(t, 1.0)] }
    }

    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Term, f64)> {
        self.entries.iter()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.entries.iter().map(|(t, _)| t)
    }

    /// Whether every entry is a normal form under all rules.
    pub fn is_normal(&self) -> bool {
        self.entries.iter().all(|(t, _)| is_normal(t))
    }
}

impl fmt::Display for TermEnsemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|(t, p)| format!("<{t}, {}>", format_probability(*p))).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub fn singleton(t: Term) -> TermEnsemble {
    TermEnsemble::singleton(t)
}

/// A hash that agrees on alpha-equivalent terms and ignores amplitudes, so
/// terms that may compare equal within tolerance land in the same bucket.
pub fn shape_hash(t: &Term) -> u64 {
    fn go(t: &Term, env: &mut Vec<String>, h: &mut DefaultHasher) {
        std::mem::discriminant(t).hash(h);
        match t {
            Term::Var(x) => match env.iter().rev().position(|y| y == x) {
                Some(i) => (0u8, i).hash(h),
                None => (1u8, x).hash(h),
            },
            Term::Lam(x, b) | Term::BangLam(x, b) => {
                env.push(x.clone());
                go(b, env, h);
                env.pop();
            }
            Term::LetTensor { left, right, left_width, bound, body } => {
                left_width.hash(h);
                go(bound, env, h);
                env.push(left.clone());
                env.push(right.clone());
                go(body, env, h);
                env.truncate(env.len() - 2);
            }
            Term::Gate(g) => {
                for (offset, leaf) in g.leaves() {
                    offset.hash(h);
                    match leaf {
                        Leaf::Builtin(b) => b.name().hash(h),
                        Leaf::User(u) => u.name().hash(h),
                    }
                }
            }
            Term::Qubit(q) => q.width().hash(h),
            Term::Meas(s) => s.indices().hash(h),
            other => {
                for c in other.children() {
                    go(c, env, h);
                }
            }
        }
    }
    let mut h = DefaultHasher::new();
    go(t, &mut Vec::new(), &mut h);
    h.finish()
}

/// Merges alpha-equivalent entries, summing their weights. Keeps the first
/// representative of each class, in order of first occurrence.
pub fn min_ensemble(e: &TermEnsemble) -> TermEnsemble {
    let mut out: Vec<(Term, f64)> = Vec::new();
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for (t, p) in &e.entries {
        let bucket = buckets.entry(shape_hash(t)).or_default();
        match bucket.iter().find(|&&i| alpha_eq(&out[i].0, t, AMP_TOL)) {
            Some(&i) => out[i].1 += p,
            None => {
                bucket.push(out.len());
                out.push((t.clone(), *p));
            }
        }
    }
    TermEnsemble { entries: out }
}

/// Same alpha-classes on both sides with weights within `tol`.
pub fn equivalent(a: &TermEnsemble, b: &TermEnsemble, tol: f64) -> bool {
    let (a, b) = (min_ensemble(a), min_ensemble(b));
    if a.len() != b.len() {
        return false;
    }
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    for (i, (t, _)) in b.entries.iter().enumerate() {
        buckets.entry(shape_hash(t)).or_default().push(i);
    }
    let mut used = vec![false; b.len()];
    for (t, p) in &a.entries {
        let Some(bucket) = buckets.get(&shape_hash(t)) else { return false };
        let hit = bucket.iter().copied().find(|&i| {
            !used[i] && (b.entries[i].1 - p).abs() <= tol && alpha_eq(&b.entries[i].0, t, AMP_TOL)
        });
        match hit {
            Some(i) => used[i] = true,
            None => return false,
        }
    }
    true
}

/// Picks, for each entry of an ensemble, either a redex or nothing (idle).
pub trait Chooser: Sync {
    fn choose(&self, index: usize, t: &Term, rules: RuleSet) -> Option<Redex>;
}

/// Every entry idles.
pub struct Idle;

impl Chooser for Idle {
    fn choose(&self, _: usize, _: &Term, _: RuleSet) -> Option<Redex> {
        None
    }
}

/// The deterministic evaluation strategy, restricted to the given rules.
pub struct Strategy;

impl Chooser for Strategy {
    fn choose(&self, _: usize, t: &Term, rules: RuleSet) -> Option<Redex> {
        strategy_redex(t).filter(|r| rules.contains(r.rule))
    }
}

/// The redex with the smallest path.
pub struct Leftmost;

impl Chooser for Leftmost {
    fn choose(&self, _: usize, t: &Term, rules: RuleSet) -> Option<Redex> {
        enumerate_redexes(t, rules).into_iter().next()
    }
}

/// The redex with the largest path.
pub struct Rightmost;

impl Chooser for Rightmost {
    fn choose(&self, _: usize, t: &Term, rules: RuleSet) -> Option<Redex> {
        enumerate_redexes(t, rules).pop()
    }
}

/// A uniformly random redex, seeded by `seed` and the entry's shape, so a
/// given term gets the same choice wherever it appears.
pub struct Random(pub u64);

impl Chooser for Random {
    fn choose(&self, _: usize, t: &Term, rules: RuleSet) -> Option<Redex> {
        let mut all = enumerate_redexes(t, rules);
        if all.is_empty() {
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.0 ^ shape_hash(t));
        let k = rng.gen_range(0..all.len());
        Some(all.swap_remove(k))
    }
}

/// Explicit per-entry choices; entries past the end idle.
pub struct Fixed(pub Vec<Option<Redex>>);

impl Chooser for Fixed {
    fn choose(&self, index: usize, _: &Term, _: RuleSet) -> Option<Redex> {
        self.0.get(index).cloned().flatten()
    }
}

/// Looks up a chooser by its command-line name.
pub fn chooser_by_name(name: &str, seed: u64) -> Option<Box<dyn Chooser>> {
    match name {
        "strategy" | "deterministic" => Some(Box::new(Strategy)),
        "leftmost" => Some(Box::new(Leftmost)),
        "rightmost" => Some(Box::new(Rightmost)),
        "random" => Some(Box::new(Random(seed))),
        _ => None,
    }
}

/// One step of the determinized system, also returning the individual
/// contractions performed.
pub fn det_step_traced(
    e: &TermEnsemble,
    rules: RuleSet,
    chooser: &dyn Chooser,
) -> Result<(TermEnsemble, Vec<ProbStep>), EnsembleError> {
    let per_entry = |(i, (t, a)): (usize, &(Term, f64))| -> Result<Vec<(ProbStep, f64)>, EnsembleError> {
        match chooser.choose(i, t, rules) {
            None => Ok(vec![(
                ProbStep { target: t.clone(), probability: 1.0, rule: Rule::Id, position: Default::default() },
                *a,
            )]),
            Some(r) => {
                if !rules.contains(r.rule) {
                    return Err(EnsembleError::InvalidChoice { redex: r, rules });
                }
                let steps = step_at(t, &r.position, r.rule)?;
                Ok(steps.into_iter().map(|s| (s, *a)).collect())
            }
        }
    };
    let results: Vec<Vec<(ProbStep, f64)>> = if e.len() >= 64 {
        e.entries.par_iter().enumerate().map(per_entry).collect::<Result<_, _>>()?
    } else {
        e.entries.iter().enumerate().map(per_entry).collect::<Result<_, _>>()?
    };
    let size: usize = results.iter().map(Vec::len).sum();
    if size > MAX_ENSEMBLE {
        return Err(EnsembleError::TooLarge { size });
    }
    let mut entries = Vec::with_capacity(size);
    let mut fired = Vec::new();
    for (step, a) in results.into_iter().flatten() {
        entries.push((step.target.clone(), a * step.probability));
        if step.rule != Rule::Id {
            fired.push(step);
        }
    }
    Ok((TermEnsemble { entries }, fired))
}

/// `⟨t_i, α_i⟩` becomes `⟨t'_ij, α_i γ_ij⟩` over the chosen redex's steps, or
/// stays put when the chooser idles.
pub fn det_step(e: &TermEnsemble, rules: RuleSet, chooser: &dyn Chooser) -> Result<TermEnsemble, EnsembleError> {
    det_step_traced(e, rules, chooser).map(|(e, _)| e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Converged,
    StepLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "Converged",
            Status::StepLimit => "StepLimit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub ensemble: TermEnsemble,
    pub status: Status,
    pub steps: usize,
}

/// Runs the deterministic strategy to normal form or `max_steps`.
pub fn evaluate(t: &Term, max_steps: usize) -> Result<Evaluation, EnsembleError> {
    evaluate_with(t, max_steps, &Strategy, &mut |_, _| {})
}

/// Iterates `det_step` under all rules with `chooser`, merging alpha-equivalent
/// entries after every step. `on_step` sees each step's contractions.
pub fn evaluate_with(
    t: &Term,
    max_steps: usize,
    chooser: &dyn Chooser,
    on_step: &mut dyn FnMut(usize, &[ProbStep]),
) -> Result<Evaluation, EnsembleError> {
    let mut e = TermEnsemble::singleton(t.clone());
    for step in 0..max_steps {
        if e.is_normal() {
            return Ok(Evaluation { ensemble: e, status: Status::Converged, steps: step });
        }
        let (next, fired) = det_step_traced(&e, RuleSet::ST, chooser)?;
        on_step(step, &fired);
        e = min_ensemble(&next);
    }
    let status = if e.is_normal() { Status::Converged } else { Status::StepLimit };
    Ok(Evaluation { ensemble: e, status, steps: max_steps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub term: Term,
    pub status: Status,
    pub steps: usize,
}

/// One run of the strategy that resolves each measurement by drawing an
/// outcome from a generator seeded with `seed`.
pub fn sample(t: &Term, seed: u64, max_steps: usize) -> Result<Sample, EnsembleError> {
    sample_with(t, seed, max_steps, &mut |_, _| {})
}

pub fn sample_with(
    t: &Term,
    seed: u64,
    max_steps: usize,
    on_step: &mut dyn FnMut(usize, &ProbStep),
) -> Result<Sample, EnsembleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = t.clone();
    for step in 0..max_steps {
        let Some(r) = strategy_redex(&cur) else {
            return Ok(Sample { term: cur, status: Status::Converged, steps: step });
        };
        let mut steps = step_at(&cur, &r.position, r.rule)?;
        let pick = if steps.len() == 1 {
            0
        } else {
            let x: f64 = rng.gen();
            let total: f64 = steps.iter().map(|s| s.probability).sum();
            let mut acc = 0.0;
            steps
                .iter()
                .position(|s| {
                    acc += s.probability / total;
                    x < acc
                })
                .unwrap_or(steps.len() - 1)
        };
        let chosen = steps.swap_remove(pick);
        on_step(step, &chosen);
        cur = chosen.target;
    }
    let status = if strategy_redex(&cur).is_none() { Status::Converged } else { Status::StepLimit };
    Ok(Sample { term: cur, status, steps: max_steps })
}

/// Fixed-point text with 12 significant digits, e.g. `0.250000000000`.
pub fn format_probability(p: f64) -> String {
    if p == 0.0 || !p.is_finite() {
        return format!("{:.11}", p);
    }
    let sci = format!("{:.11e}", p.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if p < 0.0 { "-" } else { "" };
    let body = if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            format!("{digits}{}", "0".repeat(int_len - digits.len()))
        } else {
            format!("{}.{}", &digits[..int_len], &digits[int_len..])
        }
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}
