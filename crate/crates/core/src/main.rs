use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use basext::bases::{derive_tree, parse_atom_list, parse_base_file, parse_rule, BaseError};
use basext::completeness::{
    self, build_base_n, check_dagger, promotion_axioms, derivation_to_nd, derive_via_base, g4ip_provable, nd_check,
    CompletenessError,
};
use basext::cps::{self, CpsError};
use basext::nuclei::{check_main_equivalence, NucleusError};
use basext::search::{self, parse_program, Outcome, SearchError};
use basext::support::{self, parse_index_set, parse_universe_file, SupportError};
use basext::syntax::{parse_formula, parse_sequent, Atom, SyntaxError};

#[derive(Parser)]
#[command(name = "basext", version, about = "Base-extension semantics toolkit")]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide `context |-_B atom` for a base file.
    Derive {
        #[arg(long)]
        base: PathBuf,
        /// Comma-separated atoms.
        #[arg(long, default_value = "")]
        context: String,
        #[arg(long)]
        atom: String,
        /// Print a derivation when there is one.
        #[arg(long)]
        tree: bool,
    },
    /// Decide support of a formula at one world of a universe file.
    Support {
        #[arg(long)]
        universe: PathBuf,
        /// Rule indices of the world, e.g. `{0,2}`.
        #[arg(long)]
        world: String,
        #[arg(long)]
        formula: String,
    },
    /// Decide whether a sequent holds at every world of a universe file.
    Valid {
        #[arg(long)]
        universe: PathBuf,
        #[arg(long)]
        sequent: String,
    },
    /// Decide intuitionistic provability with G4ip.
    Prove {
        #[arg(long)]
        sequent: String,
    },
    /// Decide provability by derivability in the base N of the sequent.
    ProveViaBase {
        #[arg(long)]
        sequent: String,
        /// Print the derivation in N and the natural-deduction proof read off it.
        #[arg(long)]
        proof: bool,
    },
    /// Print the flattening table and the base N in base-file format.
    Flatten {
        #[arg(long)]
        sequent: String,
    },
    /// Check that subformulas and their atoms agree on every base between N and N plus extras.
    DaggerCheck {
        #[arg(long)]
        sequent: String,
        /// An extra rule (repeatable).
        #[arg(long = "extra")]
        extras: Vec<String>,
        /// Also add `=> p` for every atom of the flattening.
        #[arg(long)]
        close: bool,
    },
    /// Compare support with the J-interpretation for all formulas up to a depth.
    EquivCheck {
        #[arg(long)]
        universe: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_depth: usize,
        #[arg(long, default_value_t = 20)]
        max_counterexamples: usize,
    },
    /// Lambda terms and the CPS transform.
    Cps {
        #[command(subcommand)]
        cmd: CpsCmd,
    },
    /// Depth-first search over a definite-clause program.
    Search {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        goal: String,
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 64)]
        depth: usize,
    },
}

#[derive(Subcommand)]
enum CpsCmd {
    /// Print the CPS transform of a term.
    Transform { term: String },
    /// Evaluate a closed term call-by-value.
    Eval {
        term: String,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
    },
    /// Run the CPS transform of a term against the halting continuation.
    Run {
        term: String,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Print every step, with the active continuation in brackets.
        #[arg(long)]
        trace: bool,
    },
    /// Infer the type of a term and of its CPS transform.
    Type {
        term: String,
        /// Types of free variables and constants, e.g. `C:a, f:a -> b`.
        #[arg(long, default_value = "")]
        env: String,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error(transparent)]
    Support(#[from] SupportError),
    #[error(transparent)]
    Completeness(#[from] CompletenessError),
    #[error(transparent)]
    Nucleus(#[from] NucleusError),
    #[error(transparent)]
    Cps(#[from] CpsError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{0}")]
    Input(String),
}

#[derive(Serialize)]
struct Report {
    command: Vec<String>,
    result: Value,
    counterexamples: Vec<Value>,
    elapsed_ms: f64,
}

/// What a command found: whether it is affirmative, the JSON result, the
/// counterexamples, and the text rendering.
struct Found {
    ok: bool,
    result: Value,
    counterexamples: Vec<Value>,
    text: String,
}

fn outcome(ok: bool, result: Value, text: String) -> Found {
    Found {
        ok,
        result,
        counterexamples: Vec::new(),
        text,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn run(cmd: &Cmd) -> Result<Found, CliError> {
    match cmd {
        Cmd::Derive {
            base,
            context,
            atom,
            tree,
        } => {
            let b = parse_base_file(&read(base)?)?;
            let ctx = parse_atom_list(context)?;
            let goal = Atom::parse_any(atom.trim())?;
            let d = derive_tree(&b, &ctx, &goal)?;
            let mut text = format!("{}", d.is_some());
            if let (true, Some(d)) = (*tree, &d) {
                text = format!("{text}\n{d}");
            }
            Ok(outcome(
                d.is_some(),
                json!({ "derivable": d.is_some(), "tree": d.map(|d| d.to_string()) }),
                text,
            ))
        }
        Cmd::Support {
            universe,
            world,
            formula,
        } => {
            let w = parse_universe_file(&read(universe)?)?;
            let idx = parse_index_set(world).map_err(CliError::Input)?;
            let b = w.world_of(&idx)?;
            let phi = parse_formula(formula)?;
            let v = support::supports(&w, b, &phi)?;
            Ok(outcome(
                v,
                json!({ "supported": v, "world": w.world_name(b), "formula": phi }),
                v.to_string(),
            ))
        }
        Cmd::Valid { universe, sequent } => {
            let w = parse_universe_file(&read(universe)?)?;
            let s = parse_sequent(sequent)?;
            let mut cache = support::SupportCache::new(&w);
            let mut failing = Vec::new();
            for b in 0..w.len() {
                if !cache.infers(b, s.antecedents(), s.succedent())? {
                    failing.push(w.world_name(b));
                }
            }
            let ok = failing.is_empty();
            let mut o = outcome(ok, json!({ "valid": ok }), ok.to_string());
            for f in &failing {
                o.text.push_str(&format!("\nfails at {f}"));
            }
            o.counterexamples = failing.into_iter().map(|f| json!({ "world": f })).collect();
            Ok(o)
        }
        Cmd::Prove { sequent } => {
            let s = parse_sequent(sequent)?;
            let v = g4ip_provable(s.antecedents(), s.succedent());
            Ok(outcome(
                v,
                json!({ "provable": v, "method": "g4ip" }),
                v.to_string(),
            ))
        }
        Cmd::ProveViaBase { sequent, proof } => {
            let s = parse_sequent(sequent)?;
            let (n, d) = derive_via_base(&s)?;
            let mut result = json!({ "provable": d.is_some(), "method": "base-n" });
            let mut text = d.is_some().to_string();
            if let Some(d) = &d {
                let nd = derivation_to_nd(d, &n)?;
                let checked = nd_check(&nd, &s);
                result["witness"] = json!({
                    "derivation": d.to_string(),
                    "natural_deduction": nd.to_string(),
                    "nd_check": checked,
                });
                if *proof {
                    text = format!("{text}\nderivation in N:\n{d}\nnatural deduction (check: {checked}):\n{nd}");
                }
            }
            Ok(outcome(d.is_some(), result, text))
        }
        Cmd::Flatten { sequent } => {
            let s = parse_sequent(sequent)?;
            let n = build_base_n(&s)?;
            let table: Vec<Value> = n
                .flat
                .fresh_table()
                .into_iter()
                .map(|(a, f)| json!({ "atom": a, "formula": f }))
                .collect();
            let text = n.to_file_string();
            Ok(outcome(
                true,
                json!({
                    "fresh": table,
                    "rules": n.base.rules().iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                    "counts": completeness::rule_counts(&n),
                }),
                text.trim_end().to_string(),
            ))
        }
        Cmd::DaggerCheck {
            sequent,
            extras,
            close,
        } => {
            let s = parse_sequent(sequent)?;
            let mut extras = extras
                .iter()
                .map(|r| parse_rule(r))
                .collect::<Result<Vec<_>, _>>()?;
            if *close {
                extras.extend(promotion_axioms(&s)?);
            }
            let r = check_dagger(&s, &extras)?;
            let mut o = outcome(
                r.passed(),
                json!({ "passed": r.passed(), "worlds": r.worlds, "checks": r.checks }),
                r.to_string().trim_end().to_string(),
            );
            o.counterexamples = r
                .counterexamples
                .iter()
                .map(|c| {
                    json!({
                        "extras": c.extras.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                        "formula": c.formula,
                        "formula_supported": c.formula_supported,
                        "flat_supported": c.flat_supported,
                    })
                })
                .collect();
            Ok(o)
        }
        Cmd::EquivCheck {
            universe,
            max_depth,
            max_counterexamples,
        } => {
            let w = parse_universe_file(&read(universe)?)?;
            let r = check_main_equivalence(&w, *max_depth, *max_counterexamples)?;
            let mut text = format!(
                "{} worlds, {} formulas evaluated, {} classes, {} counterexamples",
                w.len(),
                r.formulas,
                r.classes,
                r.counterexamples.len()
            );
            for c in &r.counterexamples {
                text.push_str(&format!(
                    "\n  {} at {}: supported {}, interpreted {}",
                    c.formula,
                    w.world_name(c.world),
                    c.supported,
                    c.interpreted
                ));
            }
            for f in &r.not_fixed {
                text.push_str(&format!("\n  J moves the interpretation of {f}"));
            }
            let mut o = outcome(
                r.passed(),
                json!({
                    "passed": r.passed(),
                    "worlds": w.len(),
                    "formulas": r.formulas,
                    "classes": r.classes,
                    "not_fixed": r.not_fixed,
                }),
                text,
            );
            o.counterexamples = r
                .counterexamples
                .iter()
                .map(|c| {
                    json!({
                        "world": w.world_name(c.world),
                        "formula": c.formula,
                        "supported": c.supported,
                        "interpreted": c.interpreted,
                    })
                })
                .collect();
            Ok(o)
        }
        Cmd::Cps { cmd } => run_cps(cmd),
        Cmd::Search {
            program,
            goal,
            trace,
            depth,
        } => {
            let p = parse_program(&read(program)?)?;
            let g = Atom::new(goal.trim())?;
            let (out, events) = search::solve(&p, &g, *depth);
            let ok = out == Outcome::Proved;
            let mut text = serde_json::to_value(out)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default();
            if *trace {
                for e in &events {
                    text.push_str(&format!("\n{e}"));
                }
            }
            Ok(outcome(ok, json!({ "outcome": out, "trace": events }), text))
        }
    }
}

fn run_cps(cmd: &CpsCmd) -> Result<Found, CliError> {
    // runtime failures are negative results; only malformed input is an error
    let negative = |e: CpsError| -> Result<Found, CliError> {
        match e {
            CpsError::Timeout(_) | CpsError::Stuck(_) => {
                Ok(outcome(false, json!({ "error": e.to_string() }), e.to_string()))
            }
            other => Err(other.into()),
        }
    };
    match cmd {
        CpsCmd::Transform { term } => {
            let e = cps::parse_term(term)?;
            let t = cps::cps_transform(&e);
            Ok(outcome(true, json!({ "term": t.to_string() }), t.to_string()))
        }
        CpsCmd::Eval { term, steps } => {
            let e = cps::parse_term(term)?;
            match cps::eval_cbv(&e, *steps) {
                Ok(v) => Ok(outcome(true, json!({ "value": v.to_string() }), v.to_string())),
                Err(err) => negative(err),
            }
        }
        CpsCmd::Run { term, steps, trace } => {
            let e = cps::parse_term(term)?;
            let (r, states) = cps::run_cps_traced(&e, *steps);
            let lines: Vec<String> = states.iter().map(|s| s.to_string()).collect();
            let mut o = match r {
                Ok(v) => outcome(true, json!({ "value": v.to_string() }), v.to_string()),
                Err(err) => negative(err)?,
            };
            o.result["steps"] = json!(states.len().saturating_sub(1));
            if *trace {
                o.result["trace"] = json!(lines);
                let mut text = String::new();
                for (i, l) in lines.iter().enumerate() {
                    text.push_str(&format!("{i:>4}  {l}\n"));
                }
                o.text = format!("{text}value: {}", o.text);
            }
            Ok(o)
        }
        CpsCmd::Type { term, env } => {
            let e = cps::parse_term(term)?;
            let env = cps::parse_env(env)?;
            let a = match cps::typecheck(&env, &e) {
                Ok(a) => a,
                Err(err @ (CpsError::Mismatch(..) | CpsError::Occurs(..))) => {
                    return Ok(outcome(false, json!({ "error": err.to_string() }), err.to_string()))
                }
                Err(err) => return Err(err.into()),
            };
            let c = cps::typecheck(&cps::cps_env(&env), &cps::cps_transform(&e))?;
            let text = format!("{a}\ncps: {c}");
            Ok(outcome(
                true,
                json!({ "type": a.to_string(), "cps_type": c.to_string() }),
                text,
            ))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(&cli.cmd);
    let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
    match result {
        Ok(o) => {
            if cli.json {
                let report = Report {
                    command: std::env::args().collect(),
                    result: o.result,
                    counterexamples: o.counterexamples,
                    elapsed_ms,
                };
                println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            } else {
                println!("{}", o.text);
            }
            if o.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({ "error": e.to_string() }));
            }
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
