//! `tss`: typecheck, reconstruct, instantiate and run timed session-typed
//! programs.
//!
//! Exit status is 0 on success, 1 when a program is rejected, a run goes
//! wrong or a query answers no, and 2 on usage, file or parse errors.

use std::collections::HashMap;
use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use timed_sessions::acceptance;
use timed_sessions::cost::CostModel;
use timed_sessions::pipeline::{compile, execute, parse_call, verdicts, Options, PipelineError};
use timed_sessions::runtime::{root_chain, Outcome, Scheduler};
use timed_sessions::subtyping::{is_weak_subtype, subtype_derivation};
use timed_sessions::syntax::{instantiate_named, parse_program, parse_type_in, pretty_print, Signature};
use timed_sessions::types::TypeEnv;

#[derive(Parser)]
#[command(name = "tss", version, about = "Timed session types: check, reconstruct and run")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck every definition, reconstructing temporal actions first
    Check {
        file: String,
        #[arg(long, default_value = "free")]
        cost: CostModel,
        /// Check the program as written, without reconstruction
        #[arg(long)]
        explicit: bool,
        /// Also ground an indexed family, e.g. `append:2,1,0`
        #[arg(long = "at", value_name = "NAME:i,j")]
        at: Vec<String>,
    },
    /// Write the program with its reconstructed temporal actions
    Reconstruct {
        file: String,
        #[arg(short, long, default_value = "-")]
        output: String,
        #[arg(long, default_value = "free")]
        cost: CostModel,
        #[arg(long = "at", value_name = "NAME:i,j")]
        at: Vec<String>,
    },
    /// Run a process from an empty configuration
    Run {
        file: String,
        /// Process to start, with indices for a family: `main:2,1`
        #[arg(long)]
        main: String,
        #[arg(long, default_value = "free")]
        cost: CostModel,
        /// rr, sync, random or random:SEED
        #[arg(long, default_value = "rr")]
        sched: Scheduler,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Write the trace here (`-` for standard output, `.json` for JSON)
        #[arg(long)]
        trace: Option<String>,
        /// Typecheck the configuration after every step
        #[arg(long)]
        check_config: bool,
    },
    /// Decide `T1 <= T2`
    Subtype {
        t1: String,
        t2: String,
        /// Program whose type definitions the types may mention
        #[arg(long)]
        file: Option<String>,
        /// Decide the weak relation `T1 <: T2` instead
        #[arg(long)]
        weak: bool,
        /// Print the derivation when there is one
        #[arg(long)]
        derivation: bool,
    },
    /// Ground one indexed definition at the given indices
    Instantiate {
        file: String,
        #[arg(long)]
        def: String,
        /// Index bindings, e.g. `n=3,k=2`
        #[arg(long, default_value = "")]
        bind: String,
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    /// Run the bundled examples and print the acceptance table
    Corpus {
        #[arg(long)]
        filter: Option<String>,
    },
}

/// Failure of a command: a negative verdict or a usage problem.
enum Fail {
    Verdict(String),
    Usage(String),
}

impl From<PipelineError> for Fail {
    fn from(e: PipelineError) -> Self {
        if e.is_usage() {
            Fail::Usage(e.to_string())
        } else {
            Fail::Verdict(e.to_string())
        }
    }
}

fn read(path: &str) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Usage(format!("cannot read {path}: {e}")))
}

fn write(path: &str, text: &str) -> Result<(), Fail> {
    if path == "-" {
        print!("{text}");
        Ok(())
    } else {
        fs::write(path, text).map_err(|e| Fail::Usage(format!("cannot write {path}: {e}")))
    }
}

fn roots(at: &[String]) -> Result<Vec<(String, Vec<u64>)>, Fail> {
    at.iter().map(|s| parse_call(s).map_err(Fail::Usage)).collect()
}

fn check(file: &str, cost: CostModel, explicit: bool, at: &[String]) -> Result<(), Fail> {
    let src = read(file)?;
    let roots = roots(at)?;
    let roots = roots.iter().map(|(n, a)| (n.as_str(), a.clone())).collect();
    let vs = verdicts(&src, &Options { cost, explicit, roots })?;
    let mut rejected = 0;
    for v in &vs {
        match &v.result {
            Ok(()) => println!("ok       {}", v.def),
            Err(e) => {
                rejected += 1;
                println!("rejected {}", v.def);
                for line in e.lines() {
                    println!("    {line}");
                }
            }
        }
    }
    if rejected > 0 {
        return Err(Fail::Verdict(format!("{rejected} of {} definitions rejected", vs.len())));
    }
    Ok(())
}

fn reconstruct(file: &str, output: &str, cost: CostModel, at: &[String]) -> Result<(), Fail> {
    let src = read(file)?;
    let roots = roots(at)?;
    let roots = roots.iter().map(|(n, a)| (n.as_str(), a.clone())).collect();
    let c = compile(&src, &Options { cost, explicit: false, roots })?;
    write(output, &pretty_print(&c.explicit))
}

#[allow(clippy::too_many_arguments)]
fn run(
    file: &str,
    main: &str,
    cost: CostModel,
    sched: Scheduler,
    steps: usize,
    trace: Option<&str>,
    check_config: bool,
) -> Result<(), Fail> {
    let src = read(file)?;
    let (name, idx) = parse_call(main).map_err(Fail::Usage)?;
    let ex = execute(&src, cost, &name, &idx, sched, steps, check_config)?;
    if let Some(path) = trace {
        let text = if path.ends_with(".json") { ex.result.trace.to_json() } else { ex.result.trace.to_text() };
        write(path, &text)?;
    }
    let outcome = match &ex.result.outcome {
        Outcome::Quiescent => "quiescent".to_string(),
        Outcome::BudgetExhausted => format!("stopped after {steps} steps"),
        Outcome::Stuck(o) => format!("stuck at {o}"),
    };
    println!("{} steps, {outcome}", ex.result.trace.steps.len());
    for o in root_chain(&ex.result.config, ex.root()) {
        println!("{} at {} on {}", o.event, o.time, o.chan);
    }
    if let Some((n, e)) = &ex.result.violation {
        return Err(Fail::Verdict(format!("configuration ill typed after step {n}: {e}")));
    }
    if let Outcome::Stuck(o) = &ex.result.outcome {
        return Err(Fail::Verdict(format!("stuck at {o}")));
    }
    Ok(())
}

fn subtype(t1: &str, t2: &str, file: Option<&str>, weak: bool, derivation: bool) -> Result<(), Fail> {
    let sig = match file {
        Some(f) => parse_program(&read(f)?).map_err(|e| Fail::Usage(e.to_string()))?,
        None => Signature::default(),
    };
    let env = TypeEnv::new(&sig).map_err(|e| Fail::Usage(e.to_string()))?;
    let a = parse_type_in(&sig, t1).map_err(|e| Fail::Usage(e.to_string()))?;
    let b = parse_type_in(&sig, t2).map_err(|e| Fail::Usage(e.to_string()))?;
    let holds = if weak {
        is_weak_subtype(&env, &a, &b).map_err(|e| Fail::Usage(e.to_string()))?
    } else {
        let d = subtype_derivation(&env, &a, &b).map_err(|e| Fail::Usage(e.to_string()))?;
        if let (true, Some(d)) = (derivation, &d) {
            print!("{d}");
        }
        d.is_some()
    };
    println!("{holds}");
    if holds {
        Ok(())
    } else {
        Err(Fail::Verdict(String::new()))
    }
}

fn instantiate(file: &str, def: &str, bind: &str, output: &str) -> Result<(), Fail> {
    let sig = parse_program(&read(file)?).map_err(|e| Fail::Usage(e.to_string()))?;
    let mut binding = HashMap::new();
    for part in bind.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Fail::Usage(format!("binding `{part}` is not NAME=VALUE")))?;
        let v: u64 = v.trim().parse().map_err(|_| Fail::Usage(format!("binding `{part}` needs a natural number")))?;
        binding.insert(k.trim().to_string(), v);
    }
    let out = instantiate_named(&sig, def, &binding).map_err(|e| Fail::Usage(e.to_string()))?;
    write(output, &pretty_print(&out))
}

fn corpus(filter: Option<&str>) -> Result<(), Fail> {
    let selected = acceptance::select(filter);
    if selected.is_empty() {
        return Err(Fail::Usage(format!("no criterion matches `{}`", filter.unwrap_or(""))));
    }
    let mut failed = 0;
    for c in selected {
        match (c.run)() {
            Ok(msg) => println!("{:>2}  {:<26} pass  {msg}", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("{:>2}  {:<26} FAIL  {msg}", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        return Err(Fail::Verdict(format!("{failed} criteria failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { file, cost, explicit, at } => check(file, *cost, *explicit, at),
        Command::Reconstruct { file, output, cost, at } => reconstruct(file, output, *cost, at),
        Command::Run { file, main, cost, sched, steps, trace, check_config } => {
            run(file, main, *cost, *sched, *steps, trace.as_deref(), *check_config)
        }
        Command::Subtype { t1, t2, file, weak, derivation } => subtype(t1, t2, file.as_deref(), *weak, *derivation),
        Command::Instantiate { file, def, bind, output } => instantiate(file, def, bind, output),
        Command::Corpus { filter } => corpus(filter.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Verdict(msg)) => {
            if !msg.is_empty() {
                eprintln!("{msg}");
            }
            ExitCode::from(1)
        }
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
