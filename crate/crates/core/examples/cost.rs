//! Shows where each cost model puts its ticks.
//!
//! ```text
//! cargo run --example cost -- queue
//! ```

use timed_sessions::corpus::entry;
use timed_sessions::cost::{instrument, CostModel};
use timed_sessions::syntax::{ground_with, parse_program, pretty_print};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "copy".into());
    let e = entry(&name).unwrap_or_else(|| panic!("no bundled program `{name}`"));
    let sig = ground_with(&parse_program(e.source()).unwrap(), &e.roots()).unwrap();
    for model in CostModel::ALL {
        println!("%%%% cost model {model}\n");
        print!("{}", pretty_print(&instrument(&sig, model).unwrap()));
        println!();
    }
}
