//! Reconstructs the temporal actions of a `.tss` program and prints the
//! explicit result.
//!
//! ```text
//! cargo run --example reconstruct -- crates/core/corpus/copy.tss r
//! cargo run --example reconstruct -- crates/core/corpus/append.tss rs append:2,1,0
//! ```
//!
//! Indexed families are grounded at the indices given after the cost model.

use std::process::ExitCode;

use timed_sessions::cost::CostModel;
use timed_sessions::pipeline::{compile, Options};
use timed_sessions::syntax::pretty_print;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().map(String::as_str).unwrap_or("crates/core/corpus/copy.tss");
    let cost: CostModel = args.get(1).map_or(Ok(CostModel::R), |s| s.parse()).expect("cost model");
    let roots: Vec<(&str, Vec<u64>)> = args
        .iter()
        .skip(2)
        .map(|r| {
            let (name, idx) = r.split_once(':').unwrap_or((r, ""));
            (name, idx.split(',').filter(|s| !s.is_empty()).map(|n| n.parse().expect("index")).collect())
        })
        .collect();
    let src = std::fs::read_to_string(path).expect("readable input file");
    match compile(&src, &Options { cost, explicit: false, roots }) {
        Ok(c) => {
            print!("{}", pretty_print(&c.explicit));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
