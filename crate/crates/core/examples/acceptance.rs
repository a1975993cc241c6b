//! Runs the acceptance criteria over the bundled corpus.
//!
//! ```text
//! cargo run --release --example acceptance
//! cargo run --release --example acceptance -- fold
//! ```

use timed_sessions::acceptance::select;

fn main() {
    let filter = std::env::args().nth(1);
    for c in select(filter.as_deref()) {
        let (mark, msg) = match (c.run)() {
            Ok(m) => ("pass", m),
            Err(m) => ("FAIL", m),
        };
        println!("{:>2} {:<26} {mark} {msg}", c.id, c.name);
    }
}
