use proptest::prelude::*;
use timed_sessions::oracle::{exhaustive_subtype, from_word, Letter};
use timed_sessions::subtyping::*;
use timed_sessions::syntax::{parse_program, parse_type_in, SessionType, Signature};
use timed_sessions::types::TypeEnv;

const SIG: &str = "
type bits = +{ b0 : ()bits, b1 : ()bits, $ : ()1 }
type sbits = +{ b0 : ()sbits, b1 : ()<>sbits, $ : ()1 }
";

fn sub(a: &str, b: &str) -> bool {
    let sig = parse_program(SIG).unwrap();
    let env = TypeEnv::new(&sig).unwrap();
    is_subtype(&env, &parse_type_in(&sig, a).unwrap(), &parse_type_in(&sig, b).unwrap()).unwrap()
}

fn weak(a: &str, b: &str) -> bool {
    let sig = parse_program(SIG).unwrap();
    let env = TypeEnv::new(&sig).unwrap();
    is_weak_subtype(&env, &parse_type_in(&sig, a).unwrap(), &parse_type_in(&sig, b).unwrap()).unwrap()
}

#[test]
fn box_may_be_used_later() {
    assert!(sub("[]bits", "()[]bits"));
    assert!(sub("[]()bits", "()bits"));
    assert!(!sub("()[]bits", "[]bits"));
}

#[test]
fn diamond_may_be_promised_earlier() {
    assert!(!sub("<>sbits", "()<>sbits"));
    assert!(sub("()<>sbits", "<>sbits"));
}

#[test]
fn every_type_is_a_subtype_of_itself() {
    for t in ["bits", "()sbits", "[]<>()1", "()^3 []1", "+{a : []1} * <>1"] {
        assert!(sub(t, t), "{t}");
    }
}

#[test]
fn derivations_end_in_reflexivity() {
    let env = TypeEnv::new(&Signature::default()).unwrap();
    let a = SessionType::boxed(SessionType::One);
    let b = SessionType::next_n(2, SessionType::boxed(SessionType::One));
    let d = subtype_derivation(&env, &a, &b).unwrap().expect("derivable");
    assert_eq!(d.rules().last(), Some(&Rule::Refl));
    assert!(d.rules().contains(&Rule::BoxNext) || d.rules().contains(&Rule::BoxL));
}

#[test]
fn weak_subtyping_slides_delays() {
    assert!(weak("[]bits", "()^2 []bits"));
    assert!(weak("()^3 <>bits", "()<>bits"));
    assert!(!weak("()[]bits", "[]bits"));
    assert!(!weak("()<>bits", "()^2 <>bits"));
    assert!(weak("bits", "bits"));
}

fn arb_word(max: usize) -> impl Strategy<Value = Vec<Letter>> {
    let letter = prop_oneof![(1u64..4).prop_map(Letter::Next), Just(Letter::Box), Just(Letter::Diamond)];
    prop::collection::vec(letter, 0..=max).prop_map(|w| {
        let mut out: Vec<Letter> = Vec::new();
        for l in w {
            match (out.last_mut(), l) {
                (Some(Letter::Next(m)), Letter::Next(n)) => *m += n,
                _ => out.push(l),
            }
        }
        out
    })
}

fn base() -> impl Strategy<Value = SessionType> {
    prop_oneof![
        Just(SessionType::One),
        Just(SessionType::name("bits")),
        Just(SessionType::name("sbits")),
        Just(SessionType::tensor(SessionType::boxed(SessionType::One), SessionType::One)),
    ]
}

fn arb_type() -> impl Strategy<Value = SessionType> {
    (arb_word(6), base()).prop_map(|(w, b)| {
        w.iter().rev().fold(b, |acc, l| match l {
            Letter::Next(n) => SessionType::next_n(*n, acc),
            Letter::Box => SessionType::boxed(acc),
            Letter::Diamond => SessionType::diamond(acc),
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn decision_procedure_matches_exhaustive_search(a in arb_type(), b in arb_type()) {
        let sig = parse_program(SIG).unwrap();
        let env = TypeEnv::new(&sig).unwrap();
        prop_assert_eq!(is_subtype(&env, &a, &b).unwrap(), exhaustive_subtype(&env, &a, &b).unwrap());
    }

    #[test]
    fn weak_is_contained_in_subtyping(a in arb_type(), b in arb_type()) {
        let sig = parse_program(SIG).unwrap();
        let env = TypeEnv::new(&sig).unwrap();
        if is_weak_subtype(&env, &a, &b).unwrap() {
            prop_assert!(is_subtype(&env, &a, &b).unwrap());
        }
    }

    #[test]
    fn reflexive_on_deeper_types(a in arb_type()) {
        let sig = parse_program(SIG).unwrap();
        let env = TypeEnv::new(&sig).unwrap();
        prop_assert!(is_subtype(&env, &a, &a).unwrap());
    }

    #[test]
    fn derivations_check_rule_by_rule(wa in arb_word(4), wb in arb_word(4)) {
        let env = TypeEnv::new(&Signature::default()).unwrap();
        let (a, b) = (from_word(&wa), from_word(&wb));
        if let Some(d) = subtype_derivation(&env, &a, &b).unwrap() {
            let mut cur = &d;
            while let Some(p) = &cur.premise {
                let expected = premise(&env, cur.rule, &cur.lhs, &cur.rhs);
                prop_assert_eq!(expected, Some((p.lhs.clone(), p.rhs.clone())));
                cur = p;
            }
            prop_assert_eq!(cur.rule, Rule::Refl);
        }
    }
}
