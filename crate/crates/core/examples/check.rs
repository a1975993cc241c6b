//! Typechecks every definition of a bundled program on its own and prints
//! a verdict per definition.
//!
//! ```text
//! cargo run --example check -- plus1
//! cargo run --example check -- append
//! ```
//!
//! Cost model and indices come from the corpus manifest.

use timed_sessions::corpus::{entry, manifest};
use timed_sessions::pipeline::{verdicts, Options};

fn main() {
    let which = std::env::args().nth(1);
    let entries = match which.as_deref() {
        Some(name) => vec![entry(name).unwrap_or_else(|| panic!("no bundled program `{name}`"))],
        None => manifest(),
    };
    for e in entries {
        println!("{} (cost {})", e.file, e.cost());
        let opts = Options { cost: e.cost(), explicit: false, roots: e.roots() };
        for v in verdicts(e.source(), &opts).expect("bundled programs parse") {
            match v.result {
                Ok(()) => println!("  ok       {}", v.def),
                Err(msg) => {
                    println!("  rejected {}", v.def);
                    for line in msg.lines() {
                        println!("      {line}");
                    }
                }
            }
        }
    }
}
