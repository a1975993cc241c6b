//! Grounds an indexed definition and prints every definition it reaches.
//!
//! ```text
//! cargo run --example instantiate -- tree node 2
//! cargo run --example instantiate -- append append 1 0 0
//! ```

use timed_sessions::corpus::entry;
use timed_sessions::syntax::{instantiate, param_names, parse_program, pretty_print};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let file = args.first().map_or("append", String::as_str);
    let def = args.get(1).map_or("append", String::as_str);
    let idx: Vec<u64> = args.iter().skip(2).map(|s| s.parse().expect("natural number")).collect();
    let e = entry(file).unwrap_or_else(|| panic!("no bundled program `{file}`"));
    let sig = parse_program(e.source()).expect("bundled programs parse");
    let params = param_names(&sig, def).unwrap_or_default();
    let idx = if idx.is_empty() { vec![1; params.len()] } else { idx };
    println!("% {def}[{}] at {idx:?}", params.join(", "));
    match instantiate(&sig, def, &idx) {
        Ok(g) => print!("{}", pretty_print(&g)),
        Err(err) => eprintln!("{err}"),
    }
}
