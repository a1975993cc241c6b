use proptest::prelude::*;
use timed_sessions::corpus::FILES;
use timed_sessions::syntax::*;

fn arb_type() -> impl Strategy<Value = SessionType> {
    let leaf = prop_oneof![Just(SessionType::One), Just(SessionType::name("t"))];
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            (1u64..4, inner.clone()).prop_map(|(n, a)| SessionType::next_n(n, a)),
            inner.clone().prop_map(SessionType::boxed),
            inner.clone().prop_map(SessionType::diamond),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SessionType::tensor(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SessionType::lolli(a, b)),
            prop::collection::vec(inner.clone(), 1..3)
                .prop_map(|bs| SessionType::Plus(bs.into_iter().enumerate().map(|(i, b)| (format!("l{i}"), b)).collect())),
            prop::collection::vec(inner, 1..3)
                .prop_map(|bs| SessionType::With(bs.into_iter().enumerate().map(|(i, b)| (format!("m{i}"), b)).collect())),
        ]
    })
}

#[test]
fn corpus_programs_print_and_reparse_to_the_same_tree() {
    for (file, src) in FILES {
        let sig = parse_program(src).unwrap_or_else(|e| panic!("{file}: {e}"));
        let printed = pretty_print(&sig);
        let again = parse_program(&printed).unwrap_or_else(|e| panic!("{file} reprinted: {e}\n{printed}"));
        assert_eq!(sig, again, "{file}");
        assert_eq!(printed, pretty_print(&again), "{file}: printing is not stable");
    }
}

#[test]
fn printed_modalities_reparse() {
    let a = parse_type("()^2 []<> +{a : 1, b : ()1}").unwrap();
    assert_eq!(a, parse_type(&print_type(&a)).unwrap());
}

#[test]
fn adjacent_nexts_merge() {
    assert_eq!(parse_type("()()()1").unwrap(), SessionType::next_n(3, SessionType::One));
    assert_eq!(parse_type("()^2 ()1").unwrap(), SessionType::next_n(3, SessionType::One));
    assert_eq!(parse_type("()^0 1").unwrap(), SessionType::One);
}

#[test]
fn mangled_names() {
    assert_eq!(mangle("list", &[3, 1]), "list$3$1");
    assert_eq!(mangle("main", &[]), "main");
}

#[test]
fn parse_errors_report_a_position() {
    match parse_type("()^ 1 *") {
        Err(SyntaxError::Parse { line, col, .. }) => assert!(line >= 1 && col >= 1),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(matches!(parse_program("decl f : |- (x : nosuch)\nproc x <- f = close x"), Err(SyntaxError::Scope { .. })));
    assert!(parse_program("proc x <- f = close").is_err());
}

#[test]
fn unknown_type_names_are_rejected_in_context() {
    let sig = parse_program("type bits = +{ b0 : ()bits, $ : ()1 }").unwrap();
    assert!(parse_type_in(&sig, "()bits").is_ok());
    assert!(parse_type_in(&sig, "()bats").is_err());
}

#[test]
fn instantiation_grounds_indexed_families() {
    let src = corpus_source("append.tss");
    let sig = parse_program(src).unwrap();
    let names = param_names(&sig, "append").expect("append is indexed");
    let binding = names.iter().zip([2u64, 1, 1]).map(|(n, v)| (n.clone(), v)).collect();
    let g = instantiate_named(&sig, "append", &binding).unwrap();
    assert!(g.is_ground());
    assert!(g.def(&mangle("append", &[2, 1, 1])).is_some());
}

fn corpus_source(file: &str) -> &'static str {
    FILES.iter().find(|(f, _)| *f == file).unwrap().1
}

proptest! {
    #[test]
    fn types_print_and_reparse(t in arb_type()) {
        let sig = parse_program("type t = 1").unwrap();
        let printed = print_type(&t);
        let back = parse_type_in(&sig, &printed).map_err(|e| TestCaseError::fail(format!("{printed}: {e}")))?;
        prop_assert_eq!(back, t);
    }

    #[test]
    fn next_normal_form_is_kept_by_constructors(t in arb_type()) {
        prop_assert!(t.is_next_normal());
    }
}

#[test]
fn duplicates_are_malformed() {
    let twice = "type t = 1\ntype t = ()1";
    assert!(matches!(parse_program(twice), Err(SyntaxError::Malformed { .. })));
    assert!(matches!(parse_type("+{a : 1, a : 1}"), Err(SyntaxError::Malformed { .. })));
}
