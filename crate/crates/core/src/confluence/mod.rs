//! Empirical diamond checks over the determinized rewrite system.
//!
//! For an ensemble `e` and rule sets A and B, every pair of one-step
//! successors `e →A μ`, `e →B ν` must be joined by some `μ →B ω1` and
//! `ν →A ω2` with `ω1 ≡ ω2`.

mod generate;

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

pub use generate::{generate, generate_one, regression_seeds, GenConfig};

use crate::ensemble::{det_step, equivalent, min_ensemble, shape_hash, EnsembleError, Fixed, TermEnsemble};
use crate::reduction::{enumerate_redexes, Redex, RuleSet};
use crate::syntax::Term;
use crate::tolerance::ENSEMBLE_TOL;

/// Most (μ, ν) pairs examined for one starting ensemble.
pub const PAIR_CAP: usize = 10_000;

/// Above this many per-entry choice combinations, successors are sampled by
/// position-uniform policies instead of enumerated.
pub const EXHAUSTIVE_LIMIT: usize = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfluenceError {
    #[error("{pairs} successor pairs exceed the cap of {cap}")]
    BudgetExceeded { pairs: usize, cap: usize },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

#[derive(Debug, Clone)]
pub struct DiamondReport {
    pub term: Term,
    pub pairs_checked: usize,
    /// `(μ, ν)` choice descriptions with no equivalent one-step join.
    pub failures: Vec<(String, String)>,
    pub elapsed: Duration,
}

impl DiamondReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A one-step successor and the per-entry choices that produced it.
#[derive(Debug, Clone)]
pub struct Successor {
    pub choice: Vec<Option<Redex>>,
    pub ensemble: TermEnsemble,
}

pub fn describe_choice(choice: &[Option<Redex>]) -> String {
    let one = |c: &Option<Redex>| c.as_ref().map_or_else(|| "idle".to_string(), |r| r.to_string());
    match choice {
        [c] => one(c),
        cs => format!("[{}]", cs.iter().map(one).collect::<Vec<_>>().join(", ")),
    }
}

fn choice_sets(e: &TermEnsemble, rules: RuleSet) -> Vec<Vec<Option<Redex>>> {
    let options: Vec<Vec<Option<Redex>>> = e
        .terms()
        .map(|t| std::iter::once(None).chain(enumerate_redexes(t, rules).into_iter().map(Some)).collect())
        .collect();
    let product = options.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.len()));
    match product {
        Some(n) if n <= EXHAUSTIVE_LIMIT => {
            let mut out = vec![Vec::new()];
            for opts in &options {
                out = out
                    .into_iter()
                    .flat_map(|prefix: Vec<Option<Redex>>| {
                        opts.iter().map(move |o| {
                            let mut p = prefix.clone();
                            p.push(o.clone());
                            p
                        })
                    })
                    .collect();
            }
            out
        }
        _ => {
            let idle = vec![None; options.len()];
            let mut out = vec![idle.clone()];
            let mut positions: Vec<_> =
                options.iter().flatten().flatten().map(|r| r.position.clone()).collect();
            positions.sort();
            positions.dedup();
            for p in positions {
                out.push(options.iter().map(|o| o.iter().flatten().find(|r| r.position == p).cloned()).collect());
            }
            out.push(options.iter().map(|o| o.get(1).cloned().flatten()).collect());
            out.push(options.iter().map(|o| o.last().cloned().flatten()).collect());
            for (i, o) in options.iter().enumerate() {
                for r in o.iter().flatten() {
                    let mut c = idle.clone();
                    c[i] = Some(r.clone());
                    out.push(c);
                }
            }
            out
        }
    }
}

/// All one-step successors of `e` under `rules`, canonicalized. The first
/// is always the all-idle step.
pub fn successors(e: &TermEnsemble, rules: RuleSet) -> Result<Vec<Successor>, ConfluenceError> {
    choice_sets(e, rules)
        .into_iter()
        .map(|choice| {
            let next = det_step(e, rules, &Fixed(choice.clone()))?;
            Ok(Successor { choice, ensemble: min_ensemble(&next) })
        })
        .collect()
}

fn key(e: &TermEnsemble) -> Vec<u64> {
    let mut k: Vec<u64> = e.terms().map(shape_hash).collect();
    k.sort_unstable();
    k
}

struct Index {
    items: Vec<TermEnsemble>,
    by_key: HashMap<Vec<u64>, Vec<usize>>,
}

impl Index {
    fn new(items: Vec<TermEnsemble>) -> Index {
        let mut by_key: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
        for (i, e) in items.iter().enumerate() {
            by_key.entry(key(e)).or_default().push(i);
        }
        Index { items, by_key }
    }

    fn meets(&self, other: &Index) -> bool {
        self.items.iter().any(|a| {
            other
                .by_key
                .get(&key(a))
                .is_some_and(|hits| hits.iter().any(|&j| equivalent(a, &other.items[j], ENSEMBLE_TOL)))
        })
    }
}

/// Diamond check from the single-term ensemble `{⟨t, 1⟩}`.
pub fn check_diamond(t: &Term, a: RuleSet, b: RuleSet) -> Result<DiamondReport, ConfluenceError> {
    let mut r = check_diamond_ensemble(&TermEnsemble::singleton(t.clone()), a, b)?;
    r.term = t.clone();
    Ok(r)
}

/// Diamond check from an arbitrary ensemble. The report's `term` is the
/// first entry.
pub fn check_diamond_ensemble(e: &TermEnsemble, a: RuleSet, b: RuleSet) -> Result<DiamondReport, ConfluenceError> {
    let start = Instant::now();
    let mus = successors(e, a)?;
    let nus = successors(e, b)?;
    let pairs = mus.len() * nus.len() - 1;
    if pairs > PAIR_CAP {
        return Err(ConfluenceError::BudgetExceeded { pairs, cap: PAIR_CAP });
    }
    let after = |s: &Successor, rules: RuleSet| -> Result<Index, ConfluenceError> {
        Ok(Index::new(successors(&s.ensemble, rules)?.into_iter().map(|x| x.ensemble).collect()))
    };
    let from_mu: Vec<Index> = mus.iter().map(|m| after(m, b)).collect::<Result<_, _>>()?;
    let from_nu: Vec<Index> = nus.iter().map(|n| after(n, a)).collect::<Result<_, _>>()?;
    let mut failures = Vec::new();
    for (k, mu) in mus.iter().enumerate() {
        for (l, nu) in nus.iter().enumerate() {
            if k == 0 && l == 0 {
                continue;
            }
            if !from_mu[k].meets(&from_nu[l]) {
                failures.push((describe_choice(&mu.choice), describe_choice(&nu.choice)));
            }
        }
    }
    Ok(DiamondReport {
        term: e.entries.first().map(|(t, _)| t.clone()).unwrap_or(Term::var("_")),
        pairs_checked: pairs,
        failures,
        elapsed: start.elapsed(),
    })
}

/// A failing (μ, ν) pair, with enough context to replay it.
#[derive(Debug, Clone)]
pub struct FailureRecord {
    pub label: String,
    pub term: Term,
    pub mu: String,
    pub nu: String,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub a: RuleSet,
    pub b: RuleSet,
    pub terms: usize,
    pub pairs_checked: usize,
    /// Terms whose pair count passed [`PAIR_CAP`].
    pub skipped: usize,
    pub failures: Vec<FailureRecord>,
    pub elapsed: Duration,
}

impl SuiteResult {
    pub fn name(&self) -> String {
        format!("{}:{}", self.a.name(), self.b.name())
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} terms, {} pairs, {} skipped, {} failures, {:.2}s",
            self.name(),
            self.terms,
            self.pairs_checked,
            self.skipped,
            self.failures.len(),
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub suites: Vec<SuiteResult>,
    pub elapsed: Duration,
}

/// The rule-set pairs checked by default: T against itself, S against
/// itself (reported separately, never assumed), and S against T.
pub const DEFAULT_PAIRS: [(RuleSet, RuleSet); 3] = [(RuleSet::T, RuleSet::T), (RuleSet::S, RuleSet::S), (RuleSet::S, RuleSet::T)];

/// Regression seeds followed by the generated terms, each labelled.
pub fn corpus(config: &GenConfig) -> Vec<(String, Term)> {
    let mut out: Vec<(String, Term)> = regression_seeds().into_iter().map(|(n, t)| (n.to_string(), t)).collect();
    out.extend(
        generate(config)
            .into_iter()
            .enumerate()
            .map(|(i, t)| (format!("seed={} index={i}", config.seed), t)),
    );
    out
}

/// Runs one rule-set pair over a labelled corpus, in parallel. Results are
/// merged in corpus order.
pub fn run_pair(terms: &[(String, Term)], a: RuleSet, b: RuleSet) -> Result<SuiteResult, ConfluenceError> {
    let start = Instant::now();
    let reports: Vec<Result<Option<DiamondReport>, ConfluenceError>> = terms
        .par_iter()
        .map(|(_, t)| match check_diamond(t, a, b) {
            Ok(r) => Ok(Some(r)),
            Err(ConfluenceError::BudgetExceeded { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut result =
        SuiteResult { a, b, terms: terms.len(), pairs_checked: 0, skipped: 0, failures: Vec::new(), elapsed: Duration::ZERO };
    for ((label, t), r) in terms.iter().zip(reports) {
        match r? {
            None => result.skipped += 1,
            Some(rep) => {
                result.pairs_checked += rep.pairs_checked;
                for (mu, nu) in rep.failures {
                    result.failures.push(FailureRecord { label: label.clone(), term: t.clone(), mu, nu });
                }
            }
        }
    }
    result.elapsed = start.elapsed();
    Ok(result)
}

pub fn run_suite(config: &GenConfig) -> Result<Summary, ConfluenceError> {
    run_suites(&corpus(config), &DEFAULT_PAIRS)
}

pub fn run_suites(terms: &[(String, Term)], pairs: &[(RuleSet, RuleSet)]) -> Result<Summary, ConfluenceError> {
    let start = Instant::now();
    let suites = pairs.iter().map(|&(a, b)| run_pair(terms, a, b)).collect::<Result<_, _>>()?;
    Ok(Summary { suites, elapsed: start.elapsed() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    #[test]
    fn independent_measurements_join() {
        let t = p("(M{1} ((0.6, 0) !|0> + (0.8, 0) !|1>)) (M{1} ((0.6, 0) !|0> + (0, 0.8) !|1>))");
        let r = check_diamond(&t, RuleSet::T, RuleSet::T).unwrap();
        assert!(r.holds(), "{:?}", r.failures);
        assert_eq!(r.pairs_checked, 8);
    }

    #[test]
    fn normal_forms_are_vacuous() {
        let r = check_diamond(&p(r"\x. x"), RuleSet::T, RuleSet::T).unwrap();
        assert_eq!(r.pairs_checked, 0);
        assert!(r.holds());
    }

    #[test]
    fn beta_commutes_with_measurement() {
        let t = p(r"(\x. H x) (M{1} ((0.6, 0) !|0> + (0.8, 0) !|1>))");
        let r = check_diamond(&t, RuleSet::S, RuleSet::T).unwrap();
        assert!(r.holds(), "{:?}", r.failures);
        assert_eq!(r.pairs_checked, 3);
    }

    #[test]
    fn successors_of_multi_entry_ensembles() {
        let e = TermEnsemble::new(vec![(p("M{1} (H !|0>)"), 0.5), (p("!|1>"), 0.5)]);
        let succ = successors(&e, RuleSet::ST).unwrap();
        assert_eq!(succ.len(), 2);
        assert_eq!(describe_choice(&succ[0].choice), "[idle, idle]");
        assert_eq!(describe_choice(&succ[1].choice), "[U@1, idle]");
        let a = Index::new(vec![succ[0].ensemble.clone()]);
        let b = Index::new(vec![succ[1].ensemble.clone()]);
        assert!(a.meets(&a));
        assert!(!a.meets(&b));
    }

    #[test]
    fn regression_seeds_hold() {
        let terms: Vec<(String, Term)> = regression_seeds().into_iter().map(|(n, t)| (n.into(), t)).collect();
        let s = run_suites(&terms, &DEFAULT_PAIRS).unwrap();
        for suite in &s.suites {
            assert!(suite.failures.is_empty(), "{suite}: {:?}", suite.failures);
        }
    }
}
