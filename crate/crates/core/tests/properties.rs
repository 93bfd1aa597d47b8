use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use qlam_core::confluence::generate_one;
use qlam_core::confluence::{check_diamond_ensemble, ConfluenceError};
use qlam_core::densesim::{dense_apply, DenseState};
use qlam_core::ensemble::{
    det_step, equivalent, evaluate_with, min_ensemble, Leftmost, Random, Rightmost, Strategy as Deterministic,
};
use qlam_core::tolerance::ENSEMBLE_TOL;
use qlam_core::{
    alpha_eq, check, check_diamond, enumerate_redexes, generate, parse, pretty, step_at, Builtin, GateExpr,
    GenConfig, Path, QubitValue, Rule, RuleSet, Status, Term, TermEnsemble,
};

fn term_at(seed: u64, index: usize) -> Term {
    generate_one(&GenConfig { seed, ..GenConfig::default() }, index)
}

fn generated() -> impl Strategy<Value = Term> {
    (0u64..64, 0usize..4096).prop_map(|(s, i)| term_at(s, i))
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn basis(bits: &[u8]) -> Term {
    Term::Qubit(QubitValue::from_bits(bits))
}

fn drive(t: &Term, steps: usize) -> TermEnsemble {
    let mut e = TermEnsemble::singleton(t.clone());
    for _ in 0..steps {
        e = min_ensemble(&det_step(&e, RuleSet::ST, &Deterministic).unwrap());
    }
    e
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn generated_terms_are_well_formed(t in generated()) {
        let r = check(&t);
        prop_assert!(r.verdict, "{}: {:?}", t, r.violations);
    }

    #[test]
    fn pretty_printing_round_trips(t in generated()) {
        let src = pretty(&t);
        let back = parse(&src).map_err(|e| TestCaseError::fail(format!("{src}: {e}")))?;
        prop_assert!(alpha_eq(&t, &back, 1e-12), "{} reparsed as {}", src, back);
    }

    #[test]
    fn every_contraction_preserves_well_formedness(t in generated()) {
        for r in enumerate_redexes(&t, RuleSet::ST) {
            for s in step_at(&t, &r.position, r.rule).unwrap() {
                let wf = check(&s.target);
                prop_assert!(wf.verdict, "{} --{}--> {}: {:?}", t, r, s.target, wf.violations);
            }
        }
    }

    #[test]
    fn contraction_probabilities_sum_to_one(t in generated()) {
        for r in enumerate_redexes(&t, RuleSet::ST) {
            let steps = step_at(&t, &r.position, r.rule).unwrap();
            let total: f64 = steps.iter().map(|s| s.probability).sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "{} at {}: {}", t, r, total);
            prop_assert!(steps.iter().all(|s| s.probability > 0.0));
            if r.rule != Rule::Meas {
                prop_assert_eq!(steps.len(), 1);
            }
        }
    }

    #[test]
    fn measurement_does_not_depend_on_its_context(t in generated()) {
        for r in enumerate_redexes(&t, RuleSet::T).into_iter().filter(|r| r.rule == Rule::Meas) {
            let sub = t.subterm(&r.position).unwrap();
            let alone = step_at(sub, &Path::root(), Rule::Meas).unwrap();
            let inside = step_at(&t, &r.position, Rule::Meas).unwrap();
            prop_assert_eq!(alone.len(), inside.len());
            for (a, b) in alone.iter().zip(&inside) {
                prop_assert_eq!(a.probability, b.probability);
                prop_assert_eq!(&t.replace_at(&r.position, a.target.clone()).unwrap(), &b.target);
            }
        }
    }

    #[test]
    fn merging_commutes_with_contexts(t in generated(), k in 1usize..4, which in 0usize..4) {
        let e = drive(&t, k);
        let split = TermEnsemble::new(e.entries.iter().flat_map(|(u, p)| [(u.clone(), p / 2.0), (u.clone(), p / 2.0)]).collect());
        prop_assert!(equivalent(&e, &min_ensemble(&split), ENSEMBLE_TOL));
        let plug = |u: Term| match which {
            0 => Term::app(Term::lam("z", Term::var("z")), u),
            1 => Term::lam("w", Term::tensor(Term::var("w"), u)),
            2 => Term::ite(basis(&[1]), basis(&[0]), u),
            _ => Term::app(u, Term::lam("v", Term::var("v"))),
        };
        let ctx = |x: &TermEnsemble| TermEnsemble::new(x.entries.iter().map(|(u, p)| (plug(u.clone()), *p)).collect());
        let (mut a, mut b) = (ctx(&e), ctx(&split));
        for _ in 0..4 {
            a = min_ensemble(&det_step(&a, RuleSet::ST, &Deterministic).unwrap());
            b = min_ensemble(&det_step(&b, RuleSet::ST, &Deterministic).unwrap());
            prop_assert!(equivalent(&a, &b, ENSEMBLE_TOL), "{} vs {}", a, b);
        }
    }

    #[test]
    fn single_term_diamond_matches_lifted_check(t in generated()) {
        for (a, b) in [(RuleSet::T, RuleSet::T), (RuleSet::S, RuleSet::T)] {
            let one = check_diamond(&t, a, b);
            let lifted = check_diamond_ensemble(&TermEnsemble::singleton(t.clone()), a, b);
            match (one, lifted) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x.pairs_checked, y.pairs_checked);
                    prop_assert_eq!(x.holds(), y.holds());
                    prop_assert!(x.holds());
                }
                (Err(ConfluenceError::BudgetExceeded { .. }), Err(ConfluenceError::BudgetExceeded { .. })) => {}
                (x, y) => prop_assert!(false, "{:?} vs {:?}", x.map(|r| r.holds()), y.map(|r| r.holds())),
            }
        }
    }

    #[test]
    fn diamond_holds_for_two_term_ensembles(s in generated(), t in generated()) {
        let e = TermEnsemble::new(vec![(s, 0.3), (t, 0.7)]);
        for (a, b) in [(RuleSet::T, RuleSet::T), (RuleSet::S, RuleSet::T)] {
            match check_diamond_ensemble(&e, a, b) {
                Ok(r) => prop_assert!(r.holds(), "{}: {:?}", e, r.failures),
                Err(ConfluenceError::BudgetExceeded { .. }) => {}
                Err(err) => prop_assert!(false, "{}", err),
            }
        }
    }

    #[test]
    fn normal_forms_do_not_depend_on_the_chooser(t in generated(), seed in any::<u64>()) {
        let run = |c: &dyn qlam_core::ensemble::Chooser| evaluate_with(&t, 500, c, &mut |_, _| {}).unwrap();
        let base = run(&Deterministic);
        prop_assume!(base.status == Status::Converged);
        for other in [run(&Leftmost), run(&Rightmost), run(&Random(seed))] {
            prop_assert_eq!(other.status, Status::Converged);
            prop_assert!(equivalent(&base.ensemble, &other.ensemble, ENSEMBLE_TOL), "{} vs {}", base.ensemble, other.ensemble);
        }
    }
}

fn state_strategy(width: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << width).prop_filter_map("zero vector", |v| {
        let n = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        (n > 1e-3).then(|| v.into_iter().map(|(a, b)| Complex64::new(a / n, b / n)).collect())
    })
}

fn gate_strategy(width: usize) -> impl Strategy<Value = GateExpr> {
    let leaf = prop::sample::select(vec![Builtin::H, Builtin::X, Builtin::Z, Builtin::I, Builtin::Cnot]);
    prop::collection::vec(leaf, width).prop_filter_map("arity", move |bs| {
        let mut parts = Vec::new();
        let mut arity = 0;
        for b in bs {
            let g = GateExpr::Builtin(b);
            if arity + g.arity() > width {
                continue;
            }
            arity += g.arity();
            parts.push(g);
        }
        (arity == width).then(|| GateExpr::tensor_all(parts).unwrap())
    })
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn gate_application_agrees_with_dense_simulation(
        (amps, g) in (1usize..=5).prop_flat_map(|w| (state_strategy(w), gate_strategy(w)))
    ) {
        let w = g.arity();
        let sparse = QubitValue::from_amplitudes(w, amps.iter().enumerate().map(|(u, a)| (u as u64, *a))).unwrap();
        let after = sparse.apply_gate(&g).unwrap();
        let dense = dense_apply(&g, &DenseState::new(w, amps).unwrap()).unwrap();
        for (u, a) in dense.amps.iter().enumerate() {
            prop_assert!((after.amplitude(u as u64) - a).norm() < 1e-9);
        }
    }
}

fn teleport_source(re0: f64, im0: f64, re1: f64, im1: f64) -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/teleport.qlam");
    let src = std::fs::read_to_string(path).unwrap();
    let body: Vec<&str> = src.lines().filter(|l| !l.starts_with("main")).collect();
    format!("{}\nmain = teleport (({re0:?}, {im0:?}) !|0> + ({re1:?}, {im1:?}) !|1>);\n", body.join("\n"))
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn teleportation_transmits_any_state(psi in state_strategy(1)) {
        let p = qlam_core::parse_program(&teleport_source(psi[0].re, psi[0].im, psi[1].re, psi[1].im)).unwrap();
        let ev = qlam_core::evaluate(&p.expanded_main(), 10_000).unwrap();
        prop_assert_eq!(ev.status, Status::Converged);
        let mut total = 0.0;
        for (t, prob) in ev.ensemble.iter() {
            let Term::Qubit(q) = t else { panic!("{t}") };
            let (_, bob) = q.split(2).expect("measured wires factor out");
            // The split puts any global phase on Bob's factor; compare up to phase.
            let phase = bob.amplitude(0) * psi[0].conj() + bob.amplitude(1) * psi[1].conj();
            prop_assert!((phase.norm() - 1.0).abs() < 1e-7, "{}", t);
            total += prob;
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn generator_covers_every_constructor() {
    let terms = generate(&GenConfig { count: 10_000, ..GenConfig::default() });
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut nodes = 0usize;
    for t in &terms {
        for (_, n) in t.walk() {
            *counts.entry(n.kind()).or_default() += 1;
            nodes += 1;
        }
    }
    for kind in ["Var", "Lam", "BangLam", "App", "Bang", "Gate", "Qubit", "Meas", "If", "Tensor", "LetTensor"] {
        let share = *counts.get(kind).unwrap_or(&0) as f64 / nodes as f64;
        assert!(share > 0.01, "{kind}: {share:.4} of {nodes} nodes ({counts:?})");
    }
}

#[test]
fn generation_is_reproducible() {
    let cfg = GenConfig { count: 200, seed: 42, ..GenConfig::default() };
    assert_eq!(generate(&cfg), generate(&cfg));
    for (i, t) in generate(&cfg).iter().enumerate() {
        assert_eq!(t, &generate_one(&cfg, i));
        assert!(t.size() <= cfg.max_size);
    }
}
