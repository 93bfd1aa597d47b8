//! End-to-end acceptance run. Each criterion prints one PASS or FAIL line;
//! the process exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use qlam_core::confluence::{check_diamond, corpus, run_pair, GenConfig};
use qlam_core::densesim::{deferred_teleport_circuit, dense_measure, teleport_circuit, DenseState};
use qlam_core::ensemble::{det_step, evaluate, min_ensemble, sample, singleton, Strategy};
use qlam_core::syntax::parse_program;
use qlam_core::{check, enumerate_redexes, generate, MeasSet, QubitValue, Rule, RuleSet, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let el = start.elapsed();
    ensure(el < limit, || format!("took {el:.2?}, limit {limit:?}"))?;
    Ok(el)
}

fn load(name: &str) -> Term {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    let src = std::fs::read_to_string(&path).expect("corpus file exists");
    parse_program(&src).expect("corpus parses").expanded_main()
}

fn measurement_example() -> Outcome {
    let start = Instant::now();
    let amp = c((1.0f64 / 32.0).sqrt(), 0.0);
    let q = QubitValue::from_amplitudes(5, (0..32).map(|u| (u, amp))).unwrap();
    let out = q.measure(&MeasSet::new([2, 3, 5]).unwrap()).map_err(|e| e.to_string())?;
    ensure(out.len() == 8, || format!("{} outcomes", out.len()))?;
    let o = out.iter().find(|o| o.outcome == 2).ok_or("no outcome 2")?;
    let support: Vec<u64> = o.state.iter().map(|(u, _)| u).collect();
    ensure(support == [4, 6, 20, 22], || format!("support {support:?}"))?;
    ensure((o.probability - 0.125).abs() < 1e-9, || format!("p = {}", o.probability))?;
    for (u, a) in o.state.iter() {
        ensure((a - c(0.5, 0.0)).norm() < 1e-9, || format!("amplitude {a} at {u}"))?;
    }
    let el = within(start, Duration::from_secs(1))?;
    Ok(format!("8 outcomes, w=2 on {{4,6,20,22}} with p=1/8 ({el:.2?})"))
}

fn ensemble_preservation() -> Outcome {
    let start = Instant::now();
    let terms = generate(&GenConfig { count: 1000, ..GenConfig::default() });
    let mut checked = 0usize;
    for t in &terms {
        let mut e = singleton(t.clone());
        for _ in 0..50 {
            if e.is_normal() {
                break;
            }
            let next = det_step(&e, RuleSet::ST, &Strategy).map_err(|err| format!("{t}: {err}"))?;
            let merged = min_ensemble(&next);
            for m in [next.mass(), merged.mass()] {
                ensure((m - 1.0).abs() <= 1e-7, || format!("{t}: mass {m}"))?;
            }
            checked += 1;
            e = merged;
        }
    }
    let el = within(start, Duration::from_secs(60))?;
    Ok(format!("{} terms, {checked} steps, all masses 1 +- 1e-7 ({el:.2?})", terms.len()))
}

fn diamond(a: RuleSet, b: RuleSet, seeds: &[&str]) -> Outcome {
    let start = Instant::now();
    let terms = corpus(&GenConfig::default());
    for name in seeds {
        let (_, t) = terms.iter().find(|(l, _)| l == name).ok_or(format!("missing seed {name}"))?;
        let r = check_diamond(t, a, b).map_err(|e| e.to_string())?;
        ensure(r.pairs_checked > 0 && r.holds(), || format!("{name}: {:?}", r.failures))?;
    }
    let s = run_pair(&terms, a, b).map_err(|e| e.to_string())?;
    ensure(s.failures.is_empty(), || {
        let f = &s.failures[0];
        format!("{} failures, first [{}] {}", s.failures.len(), f.label, f.term)
    })?;
    let el = within(start, Duration::from_secs(60))?;
    Ok(format!("{} terms, {} pairs, {} skipped, 0 failures ({el:.2?})", s.terms, s.pairs_checked, s.skipped))
}

fn teleportation() -> Outcome {
    let start = Instant::now();
    let psi = [c(0.6, 0.0), c(0.8, 0.0)];
    let ev = evaluate(&load("teleport.qlam"), 10_000).map_err(|e| e.to_string())?;
    ensure(ev.ensemble.is_normal(), || "did not converge".into())?;
    ensure(ev.ensemble.len() == 4, || format!("{} branches", ev.ensemble.len()))?;
    let oracle = teleport_circuit(psi);
    for (t, p) in ev.ensemble.iter() {
        let Term::Qubit(q) = t else { return Err(format!("branch is not a qubit: {t}")) };
        let (bits, bob) = q.split(2).ok_or_else(|| format!("entangled result {t}"))?;
        let w = bits.as_basis().ok_or("measured wires not classical")?;
        let want = oracle.iter().find(|b| (b.b1 << 1 | b.b2) == w).ok_or("branch missing from oracle")?;
        ensure((p - 0.25).abs() <= 1e-7 && (p - want.probability).abs() <= 1e-7, || format!("p = {p}"))?;
        for u in 0..2 {
            let a = bob.amplitude(u);
            ensure((a - psi[u as usize]).norm() <= 1e-7 && (a - want.bob[u as usize]).norm() <= 1e-7, || {
                format!("bob amplitude {a} at {u}")
            })?;
        }
    }
    let ev = evaluate(&load("teleport_deferred.qlam"), 10_000).map_err(|e| e.to_string())?;
    let want = deferred_teleport_circuit(psi);
    let Some((Term::Qubit(q), _)) = ev.ensemble.entries.first() else { return Err("deferred: no qubit".into()) };
    for (u, a) in want.amps.iter().enumerate() {
        ensure((q.amplitude(u as u64) - a).norm() <= 1e-7, || format!("deferred amplitude at {u}"))?;
    }
    let el = within(start, Duration::from_secs(1))?;
    Ok(format!("4 branches at 0.25, Bob holds 0.6|0>+0.8|1>, deferred variant agrees ({el:.2?})"))
}

fn one_qubit(theta: f64) -> Term {
    Term::Qubit(QubitValue::from_amplitudes(1, [(0, c(theta.cos(), 0.0)), (1, c(theta.sin(), 0.0))]).unwrap())
}

fn basis(bits: &[u8]) -> Term {
    Term::Qubit(QubitValue::from_bits(bits))
}

fn measure1(q: Term) -> Term {
    Term::app(Term::Meas(MeasSet::new([1]).unwrap()), q)
}

fn lookup(e: &qlam_core::TermEnsemble, t: &Term) -> f64 {
    e.iter().filter(|(u, _)| qlam_core::alpha_eq(u, t, 1e-9)).map(|(_, p)| p).sum()
}

fn nonlinear_examples() -> Outcome {
    let start = Instant::now();
    let cloning = Term::lam("x", Term::app(Term::lam("y", Term::tensor(Term::var("y"), Term::var("y"))), Term::var("x")));
    let r = check(&cloning);
    ensure(!r.verdict && r.violations.iter().any(|v| v.rule == "Linearity" && v.message.contains("`y`")), || {
        format!("cloning accepted: {r:?}")
    })?;

    let mut runner = TestRunner::new(Config { cases: 64, failure_persistence: None, ..Config::default() });
    let result = runner.run(&(0.05f64..1.52), |theta| {
        let (p0, p1) = (theta.cos().powi(2), theta.sin().powi(2));

        let copy = Term::app(
            Term::bang_lam("x", Term::tensor(Term::var("x"), Term::var("x"))),
            measure1(one_qubit(theta)),
        );
        prop_assert!(check(&copy).verdict);
        let bang_beta = |t: &Term| {
            enumerate_redexes(t, RuleSet::ST).iter().any(|r| matches!(r.rule, Rule::BangBeta1 | Rule::BangBeta2))
        };
        prop_assert!(!bang_beta(&copy));
        prop_assert!(enumerate_redexes(&copy, RuleSet::ST).iter().any(|r| r.rule == Rule::Meas));
        let e = evaluate(&copy, 100).unwrap().ensemble;
        prop_assert_eq!(e.len(), 2);
        prop_assert!((lookup(&e, &basis(&[0, 0])) - p0).abs() < 1e-9);
        prop_assert!((lookup(&e, &basis(&[1, 1])) - p1).abs() < 1e-9);

        let promo = Term::app(
            Term::bang_lam("x", Term::app(Term::var("x"), Term::var("x"))),
            Term::bang(measure1(one_qubit(theta))),
        );
        prop_assert!(check(&promo).verdict);
        let e = evaluate(&promo, 100).unwrap().ensemble;
        prop_assert_eq!(e.len(), 4);
        for (i, pi) in [(0u8, p0), (1, p1)] {
            for (j, pj) in [(0u8, p0), (1, p1)] {
                let t = Term::app(basis(&[i]), basis(&[j]));
                prop_assert!((lookup(&e, &t) - pi * pj).abs() < 1e-9, "{} -> {}", t, lookup(&e, &t));
            }
        }
        Ok(())
    });
    result.map_err(|e| e.to_string())?;

    let h = std::f64::consts::FRAC_PI_4;
    let e = evaluate(&Term::app(
        Term::bang_lam("x", Term::app(Term::var("x"), Term::var("x"))),
        Term::bang(measure1(one_qubit(h))),
    ), 100)
    .map_err(|e| e.to_string())?
    .ensemble;
    ensure(e.len() == 4 && e.iter().all(|(_, p)| (p - 0.25).abs() < 1e-9), || format!("uniform promotion: {e}"))?;
    let el = start.elapsed();
    Ok(format!("cloning rejected; copying and promotion hold on 64 random states ({el:.2?})"))
}

fn random_state(rng: &mut ChaCha8Rng, m: usize) -> QubitValue {
    let mut amps: Vec<Complex64> = (0..1usize << m)
        .map(|_| if rng.gen_bool(0.3) { c(0.0, 0.0) } else { c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) })
        .collect();
    if amps.iter().all(|a| a.norm() == 0.0) {
        amps[0] = c(1.0, 0.0);
    }
    let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    QubitValue::from_amplitudes(m, amps.into_iter().enumerate().map(|(u, a)| (u as u64, a / n))).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut dp, mut da) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=8);
        let mut idx: Vec<usize> = (1..=m).filter(|_| rng.gen_bool(0.5)).collect();
        if idx.is_empty() {
            idx.push(rng.gen_range(1..=m));
        }
        let set = MeasSet::new(idx).unwrap();
        let q = random_state(&mut rng, m);
        let dense = DenseState::new(m, (0..1u64 << m).map(|u| q.amplitude(u)).collect()).unwrap();
        let sparse = q.measure(&set).map_err(|e| e.to_string())?;
        let full = dense_measure(&dense, &set).map_err(|e| e.to_string())?;
        ensure(sparse.len() == full.len(), || format!("{} vs {} outcomes", sparse.len(), full.len()))?;
        for (s, (w, p, post)) in sparse.iter().zip(&full) {
            ensure(s.outcome == *w, || format!("outcome {} vs {w}", s.outcome))?;
            dp = dp.max((s.probability - p).abs());
            for (u, a) in post.amps.iter().enumerate() {
                da = da.max((s.state.amplitude(u as u64) - a).norm());
            }
        }
    }
    ensure(dp < 1e-9 && da < 1e-9, || format!("max deviation p {dp:e}, amplitude {da:e}"))?;
    let el = within(start, Duration::from_secs(30))?;
    Ok(format!("1000 states, max deviation p {dp:.1e}, amplitude {da:.1e} ({el:.2?})"))
}

fn sampling_consistency() -> Outcome {
    let start = Instant::now();
    let q = QubitValue::from_amplitudes(1, [(0, c(0.6, 0.0)), (1, c(0.8, 0.0))]).unwrap();
    let t = measure1(Term::Qubit(q));
    let one = basis(&[1]);
    let n = 100_000u64;
    let mut hits = 0u64;
    for seed in 0..n {
        if sample(&t, seed, 10).map_err(|e| e.to_string())?.term == one {
            hits += 1;
        }
    }
    let f = hits as f64 / n as f64;
    ensure((f - 0.64).abs() <= 0.01, || format!("frequency {f}"))?;
    let el = within(start, Duration::from_secs(10))?;
    Ok(format!("frequency of |1> is {f:.4} over {n} samples ({el:.2?})"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("measurement example", measurement_example),
        ("ensemble preservation", ensemble_preservation),
        ("strong confluence of T", || diamond(RuleSet::T, RuleSet::T, &["measured-condition"])),
        ("commutation of S and T", || {
            diamond(RuleSet::S, RuleSet::T, &["beta-over-measurement", "independent-measurements"])
        }),
        ("teleportation", teleportation),
        ("nonlinear examples", nonlinear_examples),
        ("oracle equivalence", oracle_equivalence),
        ("sampling consistency", sampling_consistency),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
