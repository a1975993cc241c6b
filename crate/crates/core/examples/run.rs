//! Runs a `.tss` program and prints its trace, the final configuration and
//! the messages observable on the root channel.
//!
//! ```text
//! cargo run --example run -- crates/core/corpus/six.tss r six
//! cargo run --example run -- crates/core/corpus/tree.tss rs main:2 sync
//! ```
//!
//! The scheduler is `rr` (default), `sync` or `random:SEED`. Every step is
//! followed by a configuration typing check.

use std::process::ExitCode;

use timed_sessions::pipeline::{execute, parse_call};
use timed_sessions::runtime::{root_chain, Outcome, Scheduler};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 3 {
        eprintln!("usage: run FILE COST MAIN[:i,j] [SCHEDULER]");
        return ExitCode::from(2);
    }
    let src = std::fs::read_to_string(&args[0]).expect("readable input file");
    let cost = args[1].parse().expect("cost model");
    let (main, idx) = parse_call(&args[2]).expect("process name");
    let sched: Scheduler = args.get(3).map_or(Ok(Scheduler::RoundRobin), |s| s.parse()).expect("scheduler");
    let ex = match execute(&src, cost, &main, &idx, sched, 10_000, true) {
        Ok(ex) => ex,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };
    print!("{}", ex.result.trace.to_text());
    println!("\nfinal configuration ({:?}):", ex.result.outcome);
    print!("{}", ex.result.config);
    println!("\nroot chain:");
    for o in root_chain(&ex.result.config, ex.root()) {
        println!("  {} at {} on {}", o.event, o.time, o.chan);
    }
    if let Some((n, e)) = &ex.result.violation {
        println!("configuration ill typed after step {n}: {e}");
        return ExitCode::FAILURE;
    }
    if matches!(ex.result.outcome, Outcome::Stuck(_)) {
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
