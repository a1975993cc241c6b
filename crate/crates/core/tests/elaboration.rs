//! Cost instrumentation, explicit checking and time reconstruction.

use proptest::prelude::*;
use timed_sessions::checker::{check_signature, Env};
use timed_sessions::corpus::manifest;
use timed_sessions::cost::{instrument, strip_signature, CostModel};
use timed_sessions::oracle::universe;
use timed_sessions::reconstruct::{elaborate_signature, erase_signature, forward_elaborates};
use timed_sessions::subtyping::is_subtype;
use timed_sessions::syntax::{ground_with, parse_program, Origin, ProcExpr, Signature};

const EXPLICIT_SIX: &str = "
type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }
decl six : |- (x : bits)
proc x <- six = x.b0 ; delay ; x.b1 ; delay ; x.b1 ; delay ; x.$ ; delay ; close x
";

#[test]
fn explicit_delays_check_as_written() {
    assert!(check_signature(&parse_program(EXPLICIT_SIX).unwrap()).is_ok());
    let missing = EXPLICIT_SIX.replacen("x.b1 ; delay ;", "x.b1 ;", 1);
    let errs = check_signature(&parse_program(&missing).unwrap()).unwrap_err();
    assert_eq!(errs.len(), 1);
}

#[test]
fn one_bad_definition_yields_one_error() {
    let src = format!("{EXPLICIT_SIX}\ndecl bad : |- (x : bits)\nproc x <- bad = x.b0 ; close x\n");
    assert_eq!(check_signature(&parse_program(&src).unwrap()).unwrap_err().len(), 1);
}

#[test]
fn ticks_check_like_delays() {
    let with_ticks = EXPLICIT_SIX.replace("delay", "tick");
    assert!(check_signature(&parse_program(&with_ticks).unwrap()).is_ok());
}

#[test]
fn reconstruction_finds_the_delays_of_six() {
    let src = EXPLICIT_SIX.replace("delay ; ", "");
    let sig = parse_program(&src).unwrap();
    let out = elaborate_signature(&sig).unwrap();
    assert!(check_signature(&out).is_ok());
    let mut delays = 0;
    out.def("six").unwrap().body.walk(&mut |p| {
        if let ProcExpr::Delay { origin: Origin::Reconstructed, count, .. } = p {
            delays += count.as_const().unwrap();
        }
    });
    assert_eq!(delays, 4);
}

fn grounded(file: &str) -> (Signature, CostModel) {
    let e = manifest().into_iter().find(|e| e.file == file).unwrap();
    let sig = parse_program(e.source()).unwrap();
    (ground_with(&sig, &e.roots()).unwrap(), e.cost())
}

#[test]
fn instrumentation_is_undone_by_stripping_ticks() {
    for e in manifest() {
        let (g, _) = grounded(&e.file);
        for model in CostModel::ALL {
            let inst = instrument(&g, model).unwrap();
            assert_eq!(strip_signature(&inst), g, "{} under {model}", e.file);
        }
    }
}

#[test]
fn instrumenting_twice_is_refused() {
    let (g, _) = grounded("copy.tss");
    let inst = instrument(&g, CostModel::R).unwrap();
    assert!(instrument(&inst, CostModel::R).is_err());
}

#[test]
fn erasing_reconstruction_gives_back_the_input() {
    for e in manifest() {
        let (g, cost) = grounded(&e.file);
        let inst = instrument(&g, cost).unwrap();
        let Ok(out) = elaborate_signature(&inst) else { continue };
        assert!(check_signature(&out).is_ok(), "{}", e.file);
        assert_eq!(erase_signature(&out), inst, "{}", e.file);
    }
}

proptest! {
    #[test]
    fn forwarding_elaborates_exactly_at_subtypes(
        a in prop::sample::select(universe(3)),
        b in prop::sample::select(universe(3)),
    ) {
        let env = Env::new(&Signature::default()).unwrap();
        prop_assert_eq!(forward_elaborates(&env, &a, &b).unwrap(), is_subtype(&env.types, &a, &b).unwrap());
    }
}
