//! Decides temporal subtyping between two types and prints the derivation.
//!
//! ```text
//! cargo run --example subtype -- "[]1" "()()[]1"
//! cargo run --example subtype -- "()<>1" "<>1"
//! ```
//!
//! With no arguments, prints the relation on all types of up to two
//! modalities over `1`.

use timed_sessions::oracle::universe;
use timed_sessions::subtyping::{is_subtype, is_weak_subtype, subtype_derivation};
use timed_sessions::syntax::{parse_type, Signature};
use timed_sessions::types::{show, TypeEnv};

fn main() {
    let env = TypeEnv::new(&Signature::default()).unwrap();
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [a, b] = args.as_slice() {
        let a = parse_type(a).expect("first type");
        let b = parse_type(b).expect("second type");
        match subtype_derivation(&env, &a, &b).expect("search finishes") {
            Some(d) => print!("{d}"),
            None => println!("{} is not a subtype of {}", show(&a), show(&b)),
        }
        println!("weak: {}", is_weak_subtype(&env, &a, &b).unwrap());
        return;
    }
    let u = universe(2);
    for a in &u {
        let above: Vec<String> = u.iter().filter(|b| is_subtype(&env, a, b).unwrap()).map(show).collect();
        println!("{:<10} <= {}", show(a), above.join("  "));
    }
}
