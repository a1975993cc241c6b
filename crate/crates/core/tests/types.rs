use proptest::prelude::*;
use timed_sessions::oracle::universe;
use timed_sessions::syntax::{parse_program, parse_type_in, SessionType, Signature};
use timed_sessions::types::*;

const SIG: &str = "
type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }
type sbits = +{ b0 : ()sbits, b1 : ()<>sbits, $ : ()1 }
type ctr = []&{ inc : ()ctr, val : ()bits }
";

fn setup() -> (Signature, TypeEnv) {
    let sig = parse_program(SIG).unwrap();
    let env = TypeEnv::new(&sig).unwrap();
    (sig, env)
}

fn ty(sig: &Signature, s: &str) -> SessionType {
    parse_type_in(sig, s).unwrap()
}

#[test]
fn unfolding_a_name_gives_its_definition() {
    let (sig, env) = setup();
    assert_eq!(unfold(&env, &ty(&sig, "bits")), ty(&sig, "+{ b0 : ()bits, b1 : ()bits, $ : ()1 }"));
    assert_eq!(unfold(&env, &ty(&sig, "ctr")), ty(&sig, "[]&{ inc : ()ctr, val : ()bits }"));
    assert_eq!(unfold(&env, &ty(&sig, "()bits")), ty(&sig, "()bits"));
}

#[test]
fn equirecursive_equality() {
    let (sig, env) = setup();
    let bits = ty(&sig, "bits");
    assert!(type_equal(&env, &bits, &unfold(&env, &bits)).unwrap());
    assert!(type_equal(&env, &ty(&sig, "()()bits"), &SessionType::next_n(2, bits.clone())).unwrap());
    assert!(!type_equal(&env, &bits, &ty(&sig, "sbits")).unwrap());
    // branch order does not matter
    assert!(type_equal(&env, &ty(&sig, "+{ $ : ()1, b1 : ()bits, b0 : ()bits }"), &bits).unwrap());
    assert!(!type_equal(&env, &ty(&sig, "+{ b0 : ()bits, $ : ()1 }"), &bits).unwrap());
}

#[test]
fn one_step_shifts() {
    let (sig, env) = setup();
    assert_eq!(shift_left(&env, &ty(&sig, "()bits")), Some(ty(&sig, "bits")));
    let ctr = ty(&sig, "ctr");
    assert!(type_equal(&env, &shift_left(&env, &ctr).unwrap(), &ctr).unwrap());
    assert_eq!(shift_left(&env, &ty(&sig, "bits")), None);
    assert_eq!(shift_left(&env, &ty(&sig, "<>1")), None);
    assert_eq!(shift_right(&env, &ty(&sig, "<>bits")), Some(ty(&sig, "<>bits")));
    assert_eq!(shift_right(&env, &ty(&sig, "[]bits")), None);
    assert_eq!(shift_right_n(&env, &ty(&sig, "()^3 +{t : 1, f : 1}"), 3), Some(ty(&sig, "+{t : 1, f : 1}")));
}

#[test]
fn patience() {
    let (sig, env) = setup();
    assert!(patient(&env, &ty(&sig, "ctr"), Patience::Box));
    assert!(patient(&env, &ty(&sig, "()^2 <>sbits"), Patience::Diamond));
    assert!(!patient(&env, &ty(&sig, "bits"), Patience::Box));
    assert!(!patient(&env, &ty(&sig, "()<>1"), Patience::Box));
}

#[test]
fn equality_is_an_equivalence_on_small_types() {
    let env = TypeEnv::new(&Signature::default()).unwrap();
    let u = universe(2);
    let eq: Vec<Vec<bool>> = u.iter().map(|a| u.iter().map(|b| type_equal(&env, a, b).unwrap()).collect()).collect();
    for i in 0..u.len() {
        assert!(eq[i][i]);
        for j in 0..u.len() {
            assert_eq!(eq[i][j], eq[j][i]);
            for k in 0..u.len() {
                assert!(!(eq[i][j] && eq[j][k]) || eq[i][k]);
            }
        }
    }
}

#[test]
fn contractiveness_is_required() {
    let sig = parse_program("type a = b\ntype b = a").unwrap();
    assert!(matches!(TypeEnv::new(&sig), Err(TypeOpsError::NotContractive(_))));
}

fn arb_small() -> impl Strategy<Value = SessionType> {
    prop::sample::select(universe(4))
}

proptest! {
    #[test]
    fn left_shifts_compose(t in arb_small(), a in 0u64..4, b in 0u64..4) {
        let env = TypeEnv::new(&Signature::default()).unwrap();
        let stepwise = shift_left_n(&env, &t, a).and_then(|u| shift_left_n(&env, &u, b));
        prop_assert_eq!(stepwise, shift_left_n(&env, &t, a + b));
    }

    #[test]
    fn right_shifts_compose(t in arb_small(), a in 0u64..4, b in 0u64..4) {
        let env = TypeEnv::new(&Signature::default()).unwrap();
        let stepwise = shift_right_n(&env, &t, a).and_then(|u| shift_right_n(&env, &u, b));
        prop_assert_eq!(stepwise, shift_right_n(&env, &t, a + b));
    }

    #[test]
    fn shifts_agree_when_both_defined(t in arb_small(), n in 0u64..4) {
        let env = TypeEnv::new(&Signature::default()).unwrap();
        if let (Some(l), Some(r)) = (shift_left_n(&env, &t, n), shift_right_n(&env, &t, n)) {
            prop_assert!(type_equal(&env, &l, &r).unwrap());
        }
    }

    #[test]
    fn patient_types_can_shift(t in arb_small()) {
        let env = TypeEnv::new(&Signature::default()).unwrap();
        if patient(&env, &t, Patience::Box) {
            prop_assert!(shift_left(&env, &t).is_some());
        }
        if patient(&env, &t, Patience::Diamond) {
            prop_assert!(shift_right(&env, &t).is_some());
        }
    }
}
