//! Core of a linear lambda calculus with qubit constants, gates and
//! measurement: syntax, well-formedness, probabilistic reduction,
//! ensemble evaluation and a confluence harness.

pub mod confluence;
pub mod densesim;
pub mod ensemble;
pub mod quantum;
pub mod reduction;
pub mod syntax;
pub mod tolerance;
pub mod wellformed;

pub use confluence::{check_diamond, generate, run_suite, DiamondReport, GenConfig, Summary};
pub use ensemble::{evaluate, min_ensemble, sample, singleton, Evaluation, Status, TermEnsemble};
pub use quantum::{Builtin, GateExpr, MeasSet, MeasurementOutcome, QuantumError, QubitValue, UserGate};
pub use reduction::{enumerate_redexes, step_at, step_strategy, ProbStep, Redex, ReductionError, Rule, RuleSet};
pub use syntax::{alpha_eq, parse, parse_program, pretty, Path, Program, Term};
pub use wellformed::{check, WfReport};
