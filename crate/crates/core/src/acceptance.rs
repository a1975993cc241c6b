//! The acceptance suite: thirteen end-to-end checks over the bundled
//! programs and an enumerated universe of temporal types. Each check
//! returns a one-line summary on success and a description of the first
//! discrepancy on failure.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::checker::{check_definition, Env};
use crate::corpus::{self, Expect};
use crate::cost::{instrument, CostModel};
use crate::oracle::{exhaustive_subtype, prescribed_times, universe};
use crate::pipeline::{execute, verdicts, Execution, Options};
use crate::reconstruct::{elaborate_definition, erase, forward_elaborates};
use crate::runtime::{root_chain, Observation, Outcome, Scheduler};
use crate::subtyping::{is_subtype, is_weak_subtype};
use crate::syntax::{ground_with, mangle, parse_program, parse_type_in, print_process, SessionType, Signature};
use crate::types::{peel, show, type_equal, TypeEnv};

pub type CriterionResult = Result<String, String>;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub run: fn() -> CriterionResult,
}

pub const CRITERIA: [Criterion; 13] = [
    Criterion { id: 1, name: "six trace", run: six_trace },
    Criterion { id: 2, name: "golden verdicts", run: golden_verdicts },
    Criterion { id: 3, name: "stack vs queue", run: stack_vs_queue },
    Criterion { id: 4, name: "append", run: append },
    Criterion { id: 5, name: "alternate", run: alternate },
    Criterion { id: 6, name: "tree span", run: tree_span },
    Criterion { id: 7, name: "fold", run: fold },
    Criterion { id: 8, name: "subtyping identity", run: subtyping_identity },
    Criterion { id: 9, name: "order laws", run: order_laws },
    Criterion { id: 10, name: "preservation", run: preservation },
    Criterion { id: 11, name: "progress", run: progress },
    Criterion { id: 12, name: "reconstruction round trip", run: round_trip },
    Criterion { id: 13, name: "oracle equivalence", run: oracle_equivalence },
];

pub const SCHEDULERS: [Scheduler; 3] = [Scheduler::RoundRobin, Scheduler::SeededRandom(17), Scheduler::TimeSynchronous];

pub const STEP_BUDGET: usize = 10_000;

/// Criteria whose number or name contains `filter`, or all of them.
pub fn select(filter: Option<&str>) -> Vec<&'static Criterion> {
    CRITERIA
        .iter()
        .filter(|c| match filter {
            None => true,
            Some(f) => c.id.to_string() == f || c.name.contains(f),
        })
        .collect()
}

fn src(file: &str) -> &'static str {
    corpus::source(file).expect("bundled file")
}

fn run_main(file: &str, cost: CostModel, main: &str, args: &[u64], sched: Scheduler, budget: usize) -> Result<Execution, String> {
    execute(src(file), cost, main, args, sched, budget, false).map_err(|e| format!("{file} {}: {e}", mangle(main, args)))
}

fn chain(ex: &Execution) -> Vec<Observation> {
    root_chain(&ex.result.config, ex.root())
}

fn times(obs: &[Observation]) -> Vec<u64> {
    obs.iter().map(|o| o.time).collect()
}

/// Whether the definition `def` at `args` typechecks after reconstruction.
fn verdict(file: &str, cost: CostModel, def: &str, args: &[u64]) -> Result<Result<(), String>, String> {
    let roots = if args.is_empty() { vec![] } else { vec![(def, args.to_vec())] };
    let vs = verdicts(src(file), &Options { cost, explicit: false, roots }).map_err(|e| e.to_string())?;
    let name = if args.is_empty() { def.to_string() } else { mangle(def, args) };
    vs.into_iter().find(|v| v.def == name).map(|v| v.result).ok_or_else(|| format!("{file}: no definition {name}"))
}

fn expect_ok(file: &str, cost: CostModel, def: &str, args: &[u64]) -> Result<(), String> {
    verdict(file, cost, def, args)?.map_err(|e| format!("{file}: {} rejected: {e}", mangle(def, args)))
}

/// Checks the run's root messages against the times its type prescribes.
fn matches_type(ex: &Execution, obs: &[Observation]) -> Result<(), String> {
    let ty = &ex.interface[0].1;
    let bounds = prescribed_times(&ex.compiled.env.types, ty, 0, obs)?;
    for (o, b) in obs.iter().zip(&bounds) {
        if !b.admits(o.time) {
            return Err(format!("{} on {} at {} but the type prescribes {b}", o.event, o.chan, o.time));
        }
    }
    Ok(())
}

fn six_trace() -> CriterionResult {
    let ex = run_main("six.tss", CostModel::R, "six", &[], Scheduler::RoundRobin, STEP_BUDGET)?;
    let obs = chain(&ex);
    let events: Vec<&str> = obs.iter().map(|o| o.event.as_str()).collect();
    if events != ["b0", "b1", "b1", "$", "close"] || times(&obs) != [0, 1, 2, 3, 4] {
        return Err(format!("root chain {:?} at {:?}", events, times(&obs)));
    }
    Ok("b0 b1 b1 $ close at 0 1 2 3 4".into())
}

fn decl_is(file: &str, cost: CostModel, def: &str, ctx: &[&str], offer: &str) -> Result<(), String> {
    let sig = parse_program(src(file)).map_err(|e| e.to_string())?;
    let ground = ground_with(&sig, &[]).map_err(|e| e.to_string())?;
    let env = TypeEnv::new(&instrument(&ground, cost).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let decl = ground.decl(def).ok_or_else(|| format!("{file}: no declaration {def}"))?;
    let same = |have: &SessionType, want: &str| -> Result<bool, String> {
        let want = parse_type_in(&ground, want).map_err(|e| e.to_string())?;
        type_equal(&env, have, &want).map_err(|e| e.to_string())
    };
    let ctx_ok = decl.ctx.len() == ctx.len() && decl.ctx.iter().zip(ctx).all(|((_, t), w)| same(t, w).unwrap_or(false));
    if !ctx_ok || !same(&decl.offer.1, offer)? {
        return Err(format!("{file}: {def} is not declared at ({}) |- {offer}", ctx.join(", ")));
    }
    Ok(())
}

fn golden_verdicts() -> CriterionResult {
    let r = CostModel::R;
    let cases: &[(&str, &str, &[&str], &str, Expect)] = &[
        ("copy.tss", "copy", &["bits"], "()bits", Expect::Ok),
        ("plus1.tss", "plus1_raw", &["bits"], "()bits", Expect::Rejected),
        ("plus1.tss", "plus1", &["bits"], "()bits", Expect::Ok),
        ("plus2.tss", "plus2", &["bits"], "()()bits", Expect::Ok),
        ("compress.tss", "compress", &["bits"], "()sbits", Expect::Ok),
        ("compress.tss", "skip1s", &["bits"], "()<>sbits", Expect::Ok),
        ("counter.tss", "bit0", &["()ctr"], "ctr", Expect::Ok),
        ("counter.tss", "bit1", &["ctr"], "ctr", Expect::Ok),
        ("counter.tss", "empty", &[], "ctr", Expect::Ok),
    ];
    for (file, def, ctx, offer, expect) in cases {
        decl_is(file, r, def, ctx, offer)?;
        let got = if verdict(file, r, def, &[])?.is_ok() { Expect::Ok } else { Expect::Rejected };
        if got != *expect {
            return Err(format!("{file}: {def} expected {expect:?}, got {got:?}"));
        }
    }
    Ok(format!("{} verdicts match", cases.len()))
}

/// Time at which the client has the complete answer: the closing message
/// on `d` is itself a send and takes one unit to arrive.
fn completion(ex: &Execution) -> Result<u64, String> {
    let obs = chain(ex);
    match obs.last() {
        Some(o) if o.event == "close" => Ok(o.time + 1),
        _ => Err(format!("run ended without closing the root: {obs:?}")),
    }
}

fn stack_vs_queue() -> CriterionResult {
    let mut out = Vec::new();
    for n in 1..=3u64 {
        for (file, def, main, per) in [("stack.tss", "push", "main", 2), ("queue.tss", "enq", "main", 4)] {
            expect_ok(file, CostModel::RS, &format!("{def}{n}"), &[])?;
            let ex = run_main(file, CostModel::RS, &format!("{main}{n}"), &[], Scheduler::RoundRobin, STEP_BUDGET)?;
            matches_type(&ex, &chain(&ex))?;
            let t = completion(&ex)?;
            if t != per * n + 2 {
                return Err(format!("{file} n={n}: done at {t}, expected {}", per * n + 2));
            }
            out.push(t.to_string());
        }
    }
    Ok(format!("stack/queue completion for n=1..3: {}", out.join(" ")))
}

fn append() -> CriterionResult {
    let mut count = 0;
    for n in 0..=3u64 {
        for k in 0..=3u64 {
            for r in 0..=2u64 {
                let args = [n, k, r];
                expect_ok("append.tss", CostModel::RS, "append", &args)?;
                let ex = run_main("append.tss", CostModel::RS, "main", &args, Scheduler::RoundRobin, STEP_BUDGET)?;
                let obs = chain(&ex);
                let conses = obs.iter().filter(|o| o.event == "cons").count() as u64;
                if conses != n + k {
                    return Err(format!("append {args:?}: {conses} elements"));
                }
                matches_type(&ex, &obs).map_err(|e| format!("append {args:?}: {e}"))?;
                // consecutive elements are r+4 apart, starting at 2
                let cons_times: Vec<u64> = obs.iter().filter(|o| o.event == "cons").map(|o| o.time).collect();
                let want: Vec<u64> = (0..n + k).map(|i| 2 + i * (r + 4)).collect();
                if cons_times != want {
                    return Err(format!("append {args:?}: elements at {cons_times:?}, expected {want:?}"));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} instances typecheck and emit at their rate"))
}

fn alternate() -> CriterionResult {
    let mut out = Vec::new();
    for k in 0..=2u64 {
        expect_ok("alternate.tss", CostModel::RS, "alternate", &[k])?;
        let ex = run_main("alternate.tss", CostModel::RS, "main", &[k], Scheduler::RoundRobin, 3_000)?;
        let sends: Vec<Observation> = chain(&ex).into_iter().filter(|o| o.event == "send").take(6).collect();
        if sends.len() < 6 {
            return Err(format!("k={k}: only {} outputs", sends.len()));
        }
        let full: Vec<Observation> = chain(&ex).into_iter().take(6).collect();
        matches_type(&ex, &full).map_err(|e| format!("k={k}: {e}"))?;
        // a stream of rate q carries an element every q+1 units
        let gaps: Vec<u64> = sends.windows(2).map(|w| w[1].time - w[0].time).collect();
        if gaps.iter().any(|g| *g != k + 2) {
            return Err(format!("k={k}: gaps {gaps:?}, expected rate {} (every {} units)", k + 1, k + 2));
        }
        out.push(format!("k={k}: {:?}", times(&sends)));
    }
    Ok(out.join("; "))
}

fn first_time(ex: &Execution) -> Result<u64, String> {
    chain(ex).first().map(|o| o.time).ok_or_else(|| "no answer".to_string())
}

fn tree_span() -> CriterionResult {
    let mut rs = Vec::new();
    let mut free = Vec::new();
    for h in 0..=4u64 {
        expect_ok("tree.tss", CostModel::RS, "main", &[h])?;
        let t = first_time(&run_main("tree.tss", CostModel::RS, "main", &[h], Scheduler::RoundRobin, STEP_BUDGET)?)?;
        if t != 5 * h + 3 {
            return Err(format!("h={h}: parity at {t}, expected {}", 5 * h + 3));
        }
        rs.push(t);
        expect_ok("tree_free.tss", CostModel::Free, "main", &[h])?;
        let t = first_time(&run_main("tree_free.tss", CostModel::Free, "main", &[h], Scheduler::RoundRobin, STEP_BUDGET)?)?;
        if t != h {
            return Err(format!("xor-only h={h}: parity at {t}, expected {h}"));
        }
        free.push(t);
    }
    Ok(format!("RS {rs:?}, xor-only {free:?}"))
}

fn fold() -> CriterionResult {
    let mut problems = Vec::new();
    let mut measured = Vec::new();
    for n in 0..=3u64 {
        for k in [0u64, 2] {
            let want = (k + 5) * n + 4;
            if let Err(e) = verdict("fold.tss", CostModel::RS, "fold_short", &[n, k])? {
                let first = e.lines().next().unwrap_or("").to_string();
                problems.push(format!("n={n} k={k}: result type ()^{want} rejected ({first})"));
            }
            let ex = run_main("fold.tss", CostModel::RS, "main", &[n, k], Scheduler::RoundRobin, STEP_BUDGET)?;
            // main waits for the result, which costs one unit, then closes
            let got = completion(&ex)? - 2;
            measured.push(format!("({n},{k})->{got}"));
            if got != want {
                problems.push(format!("n={n} k={k}: result at {got}, expected {want}"));
            }
        }
    }
    if problems.is_empty() {
        Ok(format!("results at {}", measured.join(" ")))
    } else {
        Err(format!("{} discrepancies; measured {}; first: {}", problems.len(), measured.join(" "), problems[0]))
    }
}

/// The universe of depth-4 types and subtyping between every pair, as
/// decided by the main procedure. Computed once.
struct Table {
    env: Env,
    types: Vec<SessionType>,
    sub: Vec<Vec<bool>>,
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let env = Env::new(&Signature::default()).expect("empty signature");
        let types = universe(4);
        let sub = types
            .iter()
            .map(|a| types.iter().map(|b| is_subtype(&env.types, a, b).expect("within budget")).collect())
            .collect();
        Table { env, types, sub }
    })
}

fn subtyping_identity() -> CriterionResult {
    let t = table();
    let n = t.types.len();
    let mut mismatches = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let fwd = forward_elaborates(&t.env, &t.types[i], &t.types[j]).map_err(|e| e.to_string())?;
            if fwd != t.sub[i][j] {
                mismatches.push((i, j));
            }
        }
    }
    match mismatches.first() {
        None => Ok(format!("{n} types, {} pairs, 0 mismatches", n * n)),
        Some(&(i, j)) => Err(format!("{} mismatches, e.g. {} <= {}", mismatches.len(), show(&t.types[i]), show(&t.types[j]))),
    }
}

fn shape(env: &TypeEnv, t: &SessionType) -> Option<(u64, SessionType)> {
    peel(env, t)
}

fn order_laws() -> CriterionResult {
    let t = table();
    let env = &t.env.types;
    let n = t.types.len();
    let show = |i: usize| show(&t.types[i]);
    for i in 0..n {
        if !t.sub[i][i] {
            return Err(format!("not reflexive at {}", show(i)));
        }
    }
    let mut triples = 0u64;
    for a in 0..n {
        for b in 0..n {
            if !t.sub[a][b] {
                continue;
            }
            for c in 0..n {
                if t.sub[b][c] {
                    triples += 1;
                    if !t.sub[a][c] {
                        return Err(format!("not transitive: {} <= {} <= {}", show(a), show(b), show(c)));
                    }
                }
            }
        }
    }
    let index: HashMap<&SessionType, usize> = t.types.iter().enumerate().map(|(i, ty)| (ty, i)).collect();
    let sub = |a: &SessionType, b: &SessionType| match (index.get(a), index.get(b)) {
        (Some(&i), Some(&j)) => t.sub[i][j],
        _ => is_subtype(env, a, b).expect("within budget"),
    };
    for a in 0..n {
        for b in 0..n {
            if !t.sub[a][b] {
                continue;
            }
            let (sa, sb) = (shape(env, &t.types[a]), shape(env, &t.types[b]));
            let is_box = |s: &Option<(u64, SessionType)>| matches!(s, Some((_, SessionType::Box(_))));
            let is_dia = |s: &Option<(u64, SessionType)>| matches!(s, Some((_, SessionType::Diamond(_))));
            if is_box(&sb) && !is_box(&sa) {
                return Err(format!("patience fails: {} <= {}", show(a), show(b)));
            }
            if is_dia(&sa) && !is_dia(&sb) {
                return Err(format!("patience fails: {} <= {}", show(a), show(b)));
            }
            if let Some((m, body @ SessionType::Box(_))) = &sa {
                if *m > 0 && !sub(&SessionType::next_n(m - 1, body.clone()), &t.types[b]) {
                    return Err(format!("impatience fails: {} <= {}", show(a), show(b)));
                }
            }
            if let Some((m, body @ SessionType::Diamond(_))) = &sb {
                if *m > 0 && !sub(&t.types[a], &SessionType::next_n(m - 1, body.clone())) {
                    return Err(format!("impatience fails: {} <= {}", show(a), show(b)));
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            if is_weak_subtype(env, &t.types[a], &t.types[b]).map_err(|e| e.to_string())? && !t.sub[a][b] {
                return Err(format!("{} <: {} but not <=", show(a), show(b)));
            }
        }
    }
    Ok(format!("reflexive, transitive over {triples} chains, patience and impatience hold, <: within <="))
}

/// Every run listed in the manifest under every scheduler, checked after
/// each step.
fn checked_runs() -> &'static Vec<(String, Scheduler, Result<Execution, String>)> {
    static RUNS: OnceLock<Vec<(String, Scheduler, Result<Execution, String>)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut out = Vec::new();
        for e in corpus::manifest() {
            for r in &e.runs {
                for s in SCHEDULERS {
                    let label = format!("{} {}", e.file, mangle(&r.main, &r.args));
                    let ex = execute(e.source(), e.cost(), &r.main, &r.args, s, STEP_BUDGET, true).map_err(|x| x.to_string());
                    out.push((label, s, ex));
                }
            }
        }
        out
    })
}

fn preservation() -> CriterionResult {
    let runs = checked_runs();
    let mut steps = 0;
    for (label, s, ex) in runs {
        let ex = ex.as_ref().map_err(|e| format!("{label} ({s}): {e}"))?;
        if let Some((step, err)) = &ex.result.violation {
            return Err(format!("{label} ({s}): step {step}: {err}"));
        }
        steps += ex.result.trace.steps.len();
    }
    Ok(format!("{} runs, {steps} checked steps", runs.len()))
}

fn progress() -> CriterionResult {
    let runs = checked_runs();
    let mut quiescent = 0;
    for (label, s, ex) in runs {
        let ex = ex.as_ref().map_err(|e| format!("{label} ({s}): {e}"))?;
        match &ex.result.outcome {
            Outcome::Stuck(o) => return Err(format!("{label} ({s}): stuck at {o}")),
            Outcome::Quiescent => {
                quiescent += 1;
                if let Some(o) = ex.result.config.objects().find(|o| !o.is_poised()) {
                    return Err(format!("{label} ({s}): quiescent but {o} is not poised"));
                }
            }
            Outcome::BudgetExhausted => {}
        }
    }
    Ok(format!("{} runs, {quiescent} quiescent and poised, none stuck", runs.len()))
}

fn round_trip() -> CriterionResult {
    let mut defs = 0;
    for e in corpus::manifest() {
        let sig = parse_program(e.source()).map_err(|x| x.to_string())?;
        let ground = ground_with(&sig, &e.roots()).map_err(|x| x.to_string())?;
        let instr = instrument(&ground, e.cost()).map_err(|x| x.to_string())?;
        let env = Env::new(&instr).map_err(|x| x.to_string())?;
        // every instance of a family expected to be rejected is skipped
        let rejected: Vec<String> = e.checks.iter().filter(|c| c.expect == Expect::Rejected).map(|c| c.def.clone()).collect();
        let skipped = |name: &str| rejected.iter().any(|r| name == r || name.starts_with(&format!("{r}$")));
        for d in instr.defs().filter(|d| !skipped(&d.name)) {
            let el = elaborate_definition(&env, d).map_err(|x| format!("{}: {x}", e.file))?;
            let decl = &env.decls[&d.name];
            check_definition(&env, decl, &el.dest, &el.chans, &el.body).map_err(|x| format!("{}: {x}", e.file))?;
            let back = print_process(&erase(&el.body), 0);
            if back != print_process(&d.body, 0) {
                return Err(format!("{}: erasing {} does not give back the instrumented body", e.file, d.name));
            }
            defs += 1;
        }
    }
    Ok(format!("{defs} definitions elaborate, check and erase back"))
}

fn oracle_equivalence() -> CriterionResult {
    let t = table();
    let n = t.types.len();
    for i in 0..n {
        for j in 0..n {
            let o = exhaustive_subtype(&t.env.types, &t.types[i], &t.types[j]).map_err(|e| e.to_string())?;
            if o != t.sub[i][j] {
                return Err(format!("{} <= {}: procedure {}, oracle {o}", show(&t.types[i]), show(&t.types[j]), t.sub[i][j]));
            }
        }
    }
    Ok(format!("{} pairs agree", n * n))
}
