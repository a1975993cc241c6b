use proptest::prelude::*;
use timed_sessions::corpus::manifest;
use timed_sessions::pipeline::{compile, execute, Options};
use timed_sessions::runtime::*;
use timed_sessions::syntax::mangle;

/// Every run in the manifest that is expected to end.
fn finite_runs() -> Vec<(String, &'static str, timed_sessions::cost::CostModel, String, Vec<u64>, u64)> {
    let mut out = Vec::new();
    for e in manifest() {
        for r in &e.runs {
            if let Some(t) = r.final_time {
                out.push((e.file.clone(), e.source(), e.cost(), r.main.clone(), r.args.clone(), t));
            }
        }
    }
    out
}

fn events(cfg: &Configuration, root: &str) -> Vec<(u64, String)> {
    root_chain(cfg, root).into_iter().map(|o| (o.time, o.event)).collect()
}

#[test]
fn six_sends_one_bit_per_unit() {
    let ex = execute(&manifest()[0].source(), "r".parse().unwrap(), "six", &[], Scheduler::RoundRobin, 1000, true).unwrap();
    assert_eq!(ex.result.outcome, Outcome::Quiescent);
    assert!(ex.result.violation.is_none());
    let got = events(&ex.result.config, ex.root());
    let want: Vec<(u64, String)> =
        [(0, "b0"), (1, "b1"), (2, "b1"), (3, "$"), (4, "close")].iter().map(|(t, e)| (*t, e.to_string())).collect();
    assert_eq!(got, want);
}

#[test]
fn final_times_match_the_manifest_under_every_scheduler() {
    for (file, src, cost, main, args, t) in finite_runs() {
        for sched in [Scheduler::RoundRobin, Scheduler::TimeSynchronous, Scheduler::SeededRandom(3)] {
            let ex = execute(src, cost, &main, &args, sched, 100_000, false).unwrap();
            assert_eq!(ex.result.outcome, Outcome::Quiescent, "{file} {main} {sched}");
            let chain = root_chain(&ex.result.config, ex.root());
            assert_eq!(chain.last().map(|o| o.time), Some(t), "{file} {main} {sched}");
        }
    }
}

#[test]
fn unknown_main_is_an_error() {
    let src = manifest()[0].source();
    assert!(execute(src, "free".parse().unwrap(), "nosuch", &[], Scheduler::RoundRobin, 10, false).is_err());
}

#[test]
fn scheduler_names_parse() {
    assert_eq!("rr".parse::<Scheduler>().unwrap(), Scheduler::RoundRobin);
    assert_eq!("sync".parse::<Scheduler>().unwrap(), Scheduler::TimeSynchronous);
    assert_eq!("random:9".parse::<Scheduler>().unwrap(), Scheduler::SeededRandom(9));
    assert!("fifo".parse::<Scheduler>().is_err());
}

#[test]
fn retimed_messages_are_ill_typed() {
    let src = manifest()[0].source();
    let c = compile(src, &Options { cost: "r".parse().unwrap(), ..Options::default() }).unwrap();
    let prog = Program::new(&c.env, &c.explicit);
    let (mut cfg, iface) = init_config(&prog, "six").unwrap();
    let mut engine = Engine::new(Scheduler::RoundRobin);
    let mut broken = 0;
    while engine.step(&prog, &mut cfg).unwrap().is_some() {
        assert!(check_configuration(&c.env, &[], &cfg, &iface).is_ok());
        for m in cfg.messages() {
            let bad = cfg.with_time(&m.chan, m.time + 1);
            assert!(check_configuration(&c.env, &[], &bad, &iface).is_err(), "message on {} at {}", m.chan, m.time + 1);
            broken += 1;
        }
    }
    assert!(broken > 0);
}

fn run_case() -> impl Strategy<Value = (usize, u64)> {
    (0..finite_runs().len(), any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn observed_times_do_not_depend_on_the_scheduler((i, seed) in run_case()) {
        let (_, src, cost, main, args, _) = finite_runs().swap_remove(i);
        let rr = execute(src, cost, &main, &args, Scheduler::RoundRobin, 100_000, false).unwrap();
        let rnd = execute(src, cost, &main, &args, Scheduler::SeededRandom(seed), 100_000, false).unwrap();
        prop_assert_eq!(&rnd.result.outcome, &Outcome::Quiescent);
        prop_assert_eq!(events(&rr.result.config, rr.root()), events(&rnd.result.config, rnd.root()));
    }

    #[test]
    fn cached_enabled_set_and_incremental_checker_agree_with_recomputation((i, seed) in run_case()) {
        let (_, src, cost, main, args, _) = finite_runs().swap_remove(i);
        let c = compile(src, &Options { cost, explicit: false, roots: vec![(main.as_str(), args.clone())] }).unwrap();
        let prog = Program::new(&c.env, &c.explicit);
        let name = if args.is_empty() { main.clone() } else { mangle(&main, &args) };
        let (mut cfg, iface) = init_config(&prog, &name).unwrap();
        let mut engine = Engine::new(Scheduler::SeededRandom(seed));
        let mut checker = ConfigChecker::default();
        loop {
            prop_assert_eq!(cfg.ready(), enabled(&cfg));
            let inc = checker.check(&c.env, &[], &cfg, &iface);
            prop_assert_eq!(inc, check_configuration(&c.env, &[], &cfg, &iface));
            if engine.step(&prog, &mut cfg).unwrap().is_none() {
                break;
            }
        }
        prop_assert!(cfg.is_poised());
    }
}
