use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qlam_core::confluence::{self, GenConfig, SuiteResult, DEFAULT_PAIRS};
use qlam_core::ensemble::{chooser_by_name, evaluate_with, format_probability, sample_with, Evaluation, Sample};
use qlam_core::syntax::{parse_program, pretty_program, Program};
use qlam_core::wellformed::{check, check_strict, WfReport};
use qlam_core::{ProbStep, RuleSet};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "qlam", version, about = "Linear lambda calculus with qubits and measurement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check well-formedness of a program.
    Check {
        file: PathBuf,
        /// Also reject qubit literals not derivable as written.
        #[arg(long)]
        strict_wf: bool,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a program to a distribution over normal forms, or sample one run.
    Run(RunArgs),
    /// Run the diamond checks over generated terms.
    Confluence(ConfluenceArgs),
    /// Pretty-print a program.
    Fmt { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// Full distribution over outcomes (the default).
    #[arg(long, conflicts_with = "sample")]
    ensemble: bool,
    /// A single run with measurement outcomes drawn from a seeded generator.
    #[arg(long)]
    sample: bool,
    #[arg(long, env = "QLAM_SEED")]
    seed: Option<u64>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    /// Print each contraction to stderr.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    json: bool,
    /// Redex chooser for ensemble mode: deterministic, leftmost, rightmost or random.
    #[arg(long, default_value = "deterministic")]
    strategy: String,
    #[arg(long)]
    strict_wf: bool,
}

#[derive(Args)]
struct ConfluenceArgs {
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 12)]
    max_size: usize,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=12))]
    max_width: u64,
    #[arg(long, env = "QLAM_SEED", default_value_t = 0)]
    seed: u64,
    /// Rule-set pair such as T:T, S:S or S:T; repeatable. Defaults to all three.
    #[arg(long = "pairs", value_parser = parse_pair)]
    pairs: Vec<(RuleSet, RuleSet)>,
    /// Extra programs whose `main` joins the corpus.
    #[arg(long = "file")]
    files: Vec<PathBuf>,
    #[arg(long)]
    json: bool,
}

fn parse_pair(s: &str) -> Result<(RuleSet, RuleSet), String> {
    let (a, b) = s.split_once(':').ok_or("expected A:B")?;
    let set = |x: &str| RuleSet::from_name(x).ok_or(format!("unknown rule set `{x}` (use S, T or S+T)"));
    Ok((set(a)?, set(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Check { file, strict_wf, json } => cmd_check(&file, strict_wf, json),
        Command::Run(args) => cmd_run(&args),
        Command::Confluence(args) => cmd_confluence(&args),
        Command::Fmt { file } => load(&file).map(|p| {
            print!("{}", pretty_program(&p));
            0
        }),
    };
    ExitCode::from(code.unwrap_or_else(|e| e))
}

fn load(file: &FsPath) -> Result<Program, u8> {
    let src = std::fs::read_to_string(file).map_err(|e| {
        eprintln!("{}: {e}", file.display());
        EXIT_USAGE
    })?;
    parse_program(&src).map_err(|e| {
        eprintln!("{}:{e}", file.display());
        EXIT_USAGE
    })
}

fn report(p: &Program, strict: bool) -> WfReport {
    if strict {
        check_strict(p)
    } else {
        check(&p.expanded_main())
    }
}

fn print_report_text(file: &FsPath, r: &WfReport, to_stderr: bool) {
    let mut out = String::new();
    if r.verdict {
        let _ = writeln!(out, "{}: well-formed", file.display());
    } else {
        for v in &r.violations {
            let _ = writeln!(out, "{}: {v}", file.display());
        }
    }
    if to_stderr {
        eprint!("{out}");
    } else {
        print!("{out}");
    }
}

fn cmd_check(file: &FsPath, strict: bool, json: bool) -> Result<u8, u8> {
    let p = load(file)?;
    let r = report(&p, strict);
    if json {
        println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
    } else {
        print_report_text(file, &r, false);
    }
    Ok(if r.verdict { 0 } else { EXIT_FAIL })
}

fn trace_line(step: usize, s: &ProbStep) {
    eprintln!("{step}\t{}\t{}\t{}\t{}", s.rule, s.position, format_probability(s.probability), s.target);
}

fn cmd_run(args: &RunArgs) -> Result<u8, u8> {
    let p = load(&args.file)?;
    let r = report(&p, args.strict_wf);
    if !r.verdict {
        print_report_text(&args.file, &r, true);
        return Err(EXIT_FAIL);
    }
    let t = p.expanded_main();
    let max_steps = args.max_steps as usize;
    if args.sample {
        let Some(seed) = args.seed else {
            eprintln!("--sample needs --seed or QLAM_SEED");
            return Err(EXIT_USAGE);
        };
        let mut on_step = |i: usize, s: &ProbStep| {
            if args.trace {
                trace_line(i, s);
            }
        };
        let s = sample_with(&t, seed, max_steps, &mut on_step).map_err(|e| {
            eprintln!("{}: {e}", args.file.display());
            EXIT_FAIL
        })?;
        print!("{}", if args.json { sample_json(&s, seed) } else { format!("{}\n{}\n", s.status, s.term) });
        return Ok(0);
    }
    let Some(chooser) = chooser_by_name(&args.strategy, args.seed.unwrap_or(0)) else {
        eprintln!("unknown strategy `{}`", args.strategy);
        return Err(EXIT_USAGE);
    };
    let mut on_step = |i: usize, steps: &[ProbStep]| {
        if args.trace {
            for s in steps {
                trace_line(i, s);
            }
        }
    };
    let e = evaluate_with(&t, max_steps, chooser.as_ref(), &mut on_step).map_err(|e| {
        eprintln!("{}: {e}", args.file.display());
        EXIT_FAIL
    })?;
    print!("{}", if args.json { ensemble_json(&e) } else { ensemble_text(&e) });
    Ok(0)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn ensemble_json(e: &Evaluation) -> String {
    let mut out = String::from("{\n  \"entries\": [");
    for (i, (t, p)) in e.ensemble.iter().enumerate() {
        let sep = if i == 0 { "" } else { "," };
        let _ = write!(out, "{sep}\n    {{\"term\": {}, \"p\": {}}}", json_str(&t.to_string()), format_probability(*p));
    }
    let _ = write!(out, "\n  ],\n  \"status\": \"{}\"\n}}\n", e.status);
    out
}

fn ensemble_text(e: &Evaluation) -> String {
    let mut out = format!("{} after {} steps\n", e.status, e.steps);
    for (t, p) in e.ensemble.iter() {
        let _ = writeln!(out, "{}  {t}", format_probability(*p));
    }
    out
}

fn sample_json(s: &Sample, seed: u64) -> String {
    format!(
        "{{\"term\": {}, \"status\": \"{}\", \"seed\": {seed}}}\n",
        json_str(&s.term.to_string()),
        s.status
    )
}

fn cmd_confluence(args: &ConfluenceArgs) -> Result<u8, u8> {
    let config = GenConfig {
        count: args.count,
        max_size: args.max_size,
        max_width: args.max_width as usize,
        seed: args.seed,
    };
    let mut terms = confluence::corpus(&config);
    for f in &args.files {
        let p = load(f)?;
        let t = p.expanded_main();
        let r = check(&t);
        if !r.verdict {
            print_report_text(f, &r, true);
            return Err(EXIT_FAIL);
        }
        terms.push((f.display().to_string(), t));
    }
    let explicit = !args.pairs.is_empty();
    let pairs: Vec<(RuleSet, RuleSet)> = if explicit { args.pairs.clone() } else { DEFAULT_PAIRS.to_vec() };
    let summary = confluence::run_suites(&terms, &pairs).map_err(|e| {
        eprintln!("{e}");
        EXIT_FAIL
    })?;
    // S against itself is assumed rather than established, so its failures
    // only decide the exit code when asked for by name.
    let counts = |s: &SuiteResult| explicit || !(s.a == RuleSet::S && s.b == RuleSet::S);
    let failed = summary.suites.iter().any(|s| counts(s) && !s.failures.is_empty());
    if args.json {
        print!("{}", summary_json(&config, &summary.suites, summary.elapsed.as_millis()));
    } else {
        println!(
            "corpus: {} terms (seed {}, count {}, max size {}, max width {})",
            terms.len(),
            config.seed,
            config.count,
            config.max_size,
            config.max_width
        );
        for s in &summary.suites {
            println!("{s}");
            for f in &s.failures {
                println!("  FAIL [{}] {} : mu={} nu={}", f.label, f.term, f.mu, f.nu);
            }
        }
        let total: usize = summary.suites.iter().map(|s| s.failures.len()).sum();
        println!("total failures: {total} ({:.2}s)", summary.elapsed.as_secs_f64());
    }
    Ok(if failed { EXIT_FAIL } else { 0 })
}

fn summary_json(config: &GenConfig, suites: &[SuiteResult], elapsed_ms: u128) -> String {
    let suites: Vec<serde_json::Value> = suites
        .iter()
        .map(|s| {
            serde_json::json!({
                "pairs": s.name(),
                "terms": s.terms,
                "pairs_checked": s.pairs_checked,
                "skipped": s.skipped,
                "failures": s.failures.iter().map(|f| serde_json::json!({
                    "label": f.label,
                    "term": f.term.to_string(),
                    "mu": f.mu,
                    "nu": f.nu,
                })).collect::<Vec<_>>(),
                "elapsed_ms": s.elapsed.as_millis() as u64,
            })
        })
        .collect();
    let v = serde_json::json!({
        "config": {
            "seed": config.seed,
            "count": config.count,
            "max_size": config.max_size,
            "max_width": config.max_width,
        },
        "suites": suites,
        "elapsed_ms": elapsed_ms as u64,
    });
    format!("{}\n", serde_json::to_string_pretty(&v).expect("summary serializes"))
}
