//! A timed multiset-rewriting interpreter.
//!
//! A configuration is a multiset of semantic objects, each a process or a
//! message that provides one channel at a natural-number time. Every step
//! rewrites one process, or one process together with the message it
//! interacts with. Non-temporal interactions need both objects at the same
//! time; forwarding, `when?`/`now!` on eventually and always let a waiting
//! process meet a later message.
//!
//! Objects carry witness types in the time-zero frame: the type of the
//! channel they provide and the types they expect of the channels they use.
//! The witnesses are what [`check_configuration`] shifts by each object's
//! time to typecheck its body, and they are kept invariant by the step
//! rules in the same way the delay rule keeps an interface invariant.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checker::{check_process, Ctx, Env};
use crate::subtyping::is_weak_subtype;
use crate::syntax::{Label, ParamExpr, ProcDef, ProcExpr, SessionType, Signature};
use crate::types::{count, shift_left_n, shift_right_n, show, whnf};

pub type Chan = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Proc,
    Msg,
}

/// A process or message providing `chan` at `time`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemObj {
    /// Creation order; every rewrite produces objects with new ids.
    pub id: u64,
    pub kind: Kind,
    pub chan: Chan,
    pub time: u64,
    pub body: ProcExpr,
    pub offer: SessionType,
    pub uses: Vec<(Chan, SessionType)>,
}

impl SemObj {
    fn use_type(&self, c: &str) -> Option<&SessionType> {
        self.uses.iter().find(|(d, _)| d == c).map(|(_, t)| t)
    }

    /// The object trying to communicate along its own channel. Messages
    /// always are; a forward counts as poised as well.
    pub fn is_poised(&self) -> bool {
        if self.kind == Kind::Msg {
            return true;
        }
        let own = |c: &Chan| *c == self.chan;
        match &self.body {
            ProcExpr::SendLabel { chan, .. }
            | ProcExpr::Case { chan, .. }
            | ProcExpr::Close { chan }
            | ProcExpr::SendChan { chan, .. }
            | ProcExpr::RecvChan { chan, .. }
            | ProcExpr::When { chan, .. }
            | ProcExpr::Now { chan, .. } => own(chan),
            ProcExpr::Fwd { .. } => true,
            _ => false,
        }
    }

    pub fn view(&self) -> ObjView {
        ObjView { kind: self.kind, chan: self.chan.clone(), time: self.time, body: one_line(&self.body, 3) }
    }
}

impl fmt::Display for SemObj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.view();
        write!(f, "{v}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ObjView {
    pub kind: Kind,
    pub chan: Chan,
    pub time: u64,
    pub body: String,
}

impl fmt::Display for ObjView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            Kind::Proc => "proc",
            Kind::Msg => "msg",
        };
        write!(f, "{k}({}, {}, {})", self.chan, self.time, self.body)
    }
}

/// Renders at most `depth` actions of a process on one line.
pub fn one_line(p: &ProcExpr, depth: usize) -> String {
    if depth == 0 {
        return "...".into();
    }
    let next = |c: &ProcExpr| one_line(c, depth - 1);
    match p {
        ProcExpr::Spawn { dest, proc, chans, cont, .. } => {
            format!("{dest} <- {proc}{} ; {}", args_suffix(chans), next(cont))
        }
        ProcExpr::TailCall { dest, proc, chans, .. } => format!("{dest} <- {proc}{}", args_suffix(chans)),
        ProcExpr::Cut { dest, annot, cont, .. } => format!("{dest} : {} <- (...) ; {}", show(annot), next(cont)),
        ProcExpr::Fwd { dest, src } => format!("{dest} <- {src}"),
        ProcExpr::SendLabel { chan, label, cont } => format!("{chan}.{label} ; {}", next(cont)),
        ProcExpr::Case { chan, branches } => {
            let ls: Vec<&str> = branches.iter().map(|(l, _)| l.as_str()).collect();
            format!("case {chan} ({} => ...)", ls.join(" | "))
        }
        ProcExpr::Close { chan } => format!("close {chan}"),
        ProcExpr::Wait { chan, cont } => format!("wait {chan} ; {}", next(cont)),
        ProcExpr::SendChan { chan, payload, cont } => format!("send {chan} {payload} ; {}", next(cont)),
        ProcExpr::RecvChan { bind, chan, cont } => format!("{bind} <- recv {chan} ; {}", next(cont)),
        ProcExpr::Delay { count: n, cont, .. } => match n.as_const() {
            Some(1) => format!("delay ; {}", next(cont)),
            _ => format!("delay{{{}}} ; {}", crate::syntax::print_pexpr(n), next(cont)),
        },
        ProcExpr::When { chan, cont, .. } => format!("when? {chan} ; {}", next(cont)),
        ProcExpr::Now { chan, cont, .. } => format!("now! {chan} ; {}", next(cont)),
    }
}

fn args_suffix(chans: &[Chan]) -> String {
    if chans.is_empty() {
        String::new()
    } else {
        format!(" <- {}", chans.join(" "))
    }
}

/// The transition rules, named by the connective and whether the step sends
/// (S) or communicates (C).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleName {
    PlusS,
    PlusC,
    WithS,
    WithC,
    OneS,
    OneC,
    TensorS,
    TensorC,
    LolliS,
    LolliC,
    IdPos,
    IdNeg,
    CutC,
    DefC,
    NextC,
    DiamondS,
    DiamondC,
    BoxS,
    BoxC,
}

impl RuleName {
    pub const ALL: [RuleName; 19] = [
        RuleName::PlusS,
        RuleName::PlusC,
        RuleName::WithS,
        RuleName::WithC,
        RuleName::OneS,
        RuleName::OneC,
        RuleName::TensorS,
        RuleName::TensorC,
        RuleName::LolliS,
        RuleName::LolliC,
        RuleName::IdPos,
        RuleName::IdNeg,
        RuleName::CutC,
        RuleName::DefC,
        RuleName::NextC,
        RuleName::DiamondS,
        RuleName::DiamondC,
        RuleName::BoxS,
        RuleName::BoxC,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            RuleName::PlusS => "⊕S",
            RuleName::PlusC => "⊕C",
            RuleName::WithS => "&S",
            RuleName::WithC => "&C",
            RuleName::OneS => "1S",
            RuleName::OneC => "1C",
            RuleName::TensorS => "⊗S",
            RuleName::TensorC => "⊗C",
            RuleName::LolliS => "⊸S",
            RuleName::LolliC => "⊸C",
            RuleName::IdPos => "id⁺C",
            RuleName::IdNeg => "id⁻C",
            RuleName::CutC => "cutC",
            RuleName::DefC => "defC",
            RuleName::NextC => "○C",
            RuleName::DiamondS => "◇S",
            RuleName::DiamondC => "◇C",
            RuleName::BoxS => "□S",
            RuleName::BoxC => "□C",
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl Serialize for RuleName {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheduler {
    /// Cycles through the enabled objects in creation order.
    RoundRobin,
    /// Picks uniformly among the enabled objects with a seeded generator.
    SeededRandom(u64),
    /// Always fires a step at the earliest time, delays last.
    TimeSynchronous,
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheduler::RoundRobin => f.write_str("rr"),
            Scheduler::SeededRandom(seed) => write!(f, "random:{seed}"),
            Scheduler::TimeSynchronous => f.write_str("sync"),
        }
    }
}

impl std::str::FromStr for Scheduler {
    type Err = String;

    /// Accepts `rr`, `sync` and `random` or `random:SEED`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rr" | "round-robin" => Ok(Scheduler::RoundRobin),
            "sync" | "time-synchronous" => Ok(Scheduler::TimeSynchronous),
            "random" => Ok(Scheduler::SeededRandom(0)),
            _ => match s.strip_prefix("random:") {
                Some(n) => n.parse().map(Scheduler::SeededRandom).map_err(|_| format!("bad seed `{n}`")),
                None => Err(format!("unknown scheduler `{s}` (expected rr, sync or random[:SEED])")),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("`{0}` uses channels and cannot run on its own")]
    NonEmptyContext(String),
    #[error("no rule applies, but {0} is not poised")]
    StuckNotPoised(String),
    #[error("ill-formed object {obj}: {msg}")]
    Malformed { obj: String, msg: String },
}

/// A ground program ready to run.
#[derive(Clone, Debug)]
pub struct Program {
    pub env: Env,
    pub defs: HashMap<String, ProcDef>,
    /// Runtime channel names are drawn above this number so they never
    /// capture a name bound in the source.
    first_fresh: u64,
}

impl Program {
    pub fn new(env: &Env, sig: &Signature) -> Program {
        let mut names = std::collections::BTreeSet::new();
        let mut defs = HashMap::new();
        for d in sig.defs() {
            names.insert(d.dest.clone());
            names.extend(d.chans.iter().cloned());
            d.body.all_names(&mut names);
            defs.insert(d.name.clone(), d.clone());
        }
        let first_fresh = names
            .iter()
            .filter_map(|n| n.strip_prefix('c').and_then(|k| k.parse::<u64>().ok()))
            .max()
            .map_or(0, |m| m + 1);
        Program { env: env.clone(), defs, first_fresh }
    }
}

#[derive(Debug)]
pub struct Configuration {
    objects: BTreeMap<u64, SemObj>,
    providers: HashMap<Chan, u64>,
    clients: HashMap<Chan, u64>,
    next_id: u64,
    next_chan: u64,
    /// Enabled rule instances, kept up to date around the channels touched
    /// since the last query.
    ready: BTreeMap<u64, Enabled>,
    dirty: HashSet<Chan>,
    /// Identifies this value among all configurations, so that incremental
    /// checking can follow `log` safely; clones get a new lineage.
    lineage: u64,
    /// Every addition (`true`) and removal (`false`) of an object, in order.
    log: Vec<(u64, bool)>,
}

static LINEAGE: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

fn new_lineage() -> u64 {
    LINEAGE.fetch_add(1, std::sync::atomic::Ordering::Relaxed)
}

impl Default for Configuration {
    fn default() -> Self {
        Configuration {
            objects: BTreeMap::new(),
            providers: HashMap::new(),
            clients: HashMap::new(),
            next_id: 0,
            next_chan: 0,
            ready: BTreeMap::new(),
            dirty: HashSet::new(),
            lineage: new_lineage(),
            log: Vec::new(),
        }
    }
}

impl Clone for Configuration {
    fn clone(&self) -> Self {
        Configuration {
            objects: self.objects.clone(),
            providers: self.providers.clone(),
            clients: self.clients.clone(),
            next_id: self.next_id,
            next_chan: self.next_chan,
            ready: self.ready.clone(),
            dirty: self.dirty.clone(),
            lineage: new_lineage(),
            log: self.log.clone(),
        }
    }
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Configuration) -> bool {
        self.objects == other.objects
    }
}

impl Configuration {
    pub fn empty() -> Configuration {
        Configuration::default()
    }

    pub fn objects(&self) -> impl Iterator<Item = &SemObj> {
        self.objects.values()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn provider(&self, c: &str) -> Option<&SemObj> {
        self.providers.get(c).and_then(|id| self.objects.get(id))
    }

    pub fn client(&self, c: &str) -> Option<&SemObj> {
        self.clients.get(c).and_then(|id| self.objects.get(id))
    }

    pub fn messages(&self) -> impl Iterator<Item = &SemObj> {
        self.objects().filter(|o| o.kind == Kind::Msg)
    }

    fn fresh(&mut self) -> Chan {
        let c = format!("c{}", self.next_chan);
        self.next_chan += 1;
        c
    }

    /// Adds an object built by hand, with a fresh id. Intended for tests
    /// and for assembling configurations outside of [`init_config`].
    pub fn insert(&mut self, kind: Kind, chan: &str, time: u64, body: ProcExpr, offer: SessionType, uses: Vec<(Chan, SessionType)>) -> u64 {
        self.add(SemObj { id: 0, kind, chan: chan.to_string(), time, body, offer, uses })
    }

    fn touch(&mut self, o: &SemObj) {
        self.dirty.insert(o.chan.clone());
        self.dirty.extend(o.uses.iter().map(|(c, _)| c.clone()));
    }

    fn refresh(&mut self) {
        let dirty = std::mem::take(&mut self.dirty);
        let mut ids: Vec<u64> = Vec::new();
        for c in &dirty {
            ids.extend(self.providers.get(c));
            ids.extend(self.clients.get(c));
        }
        for id in ids {
            match self.objects.get(&id).and_then(|o| enabled_for(self, o)) {
                Some(e) => {
                    self.ready.insert(id, e);
                }
                None => {
                    self.ready.remove(&id);
                }
            }
        }
    }

    fn add(&mut self, mut o: SemObj) -> u64 {
        self.touch(&o);
        o.id = self.next_id;
        self.next_id += 1;
        self.providers.insert(o.chan.clone(), o.id);
        for (u, _) in &o.uses {
            self.clients.insert(u.clone(), o.id);
        }
        let id = o.id;
        if let Some(n) = o.chan.strip_prefix('c').and_then(|k| k.parse::<u64>().ok()) {
            self.next_chan = self.next_chan.max(n + 1);
        }
        self.objects.insert(id, o);
        self.log.push((id, true));
        id
    }

    fn remove(&mut self, id: u64) -> SemObj {
        let o = self.objects.remove(&id).expect("object present");
        self.ready.remove(&id);
        self.log.push((id, false));
        self.touch(&o);
        if self.providers.get(&o.chan) == Some(&id) {
            self.providers.remove(&o.chan);
        }
        for (u, _) in &o.uses {
            if self.clients.get(u) == Some(&id) {
                self.clients.remove(u);
            }
        }
        o
    }

    /// Replaces the time of one object, keeping everything else. Used to
    /// build deliberately broken configurations.
    pub fn with_time(&self, chan: &str, time: u64) -> Configuration {
        let mut out = self.clone();
        if let Some(id) = out.providers.get(chan).copied() {
            let mut o = out.remove(id);
            o.time = time;
            out.add(o);
        }
        out
    }

    pub fn is_poised(&self) -> bool {
        self.objects().all(SemObj::is_poised)
    }

    /// The enabled rule instances, maintained incrementally across steps;
    /// always equal to [`enabled`].
    pub fn ready(&mut self) -> Vec<Enabled> {
        self.refresh();
        self.ready.values().copied().collect()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in self.objects() {
            writeln!(f, "{o}")?;
        }
        Ok(())
    }
}

/// `proc(c0, 0, c0 <- main)` for a process `main` that uses no channels,
/// together with the interface it provides.
pub fn init_config(prog: &Program, main: &str) -> Result<(Configuration, Ctx), RuntimeError> {
    let decl = prog.env.decls.get(main).ok_or_else(|| RuntimeError::UnknownProcess(main.to_string()))?;
    if !prog.defs.contains_key(main) {
        return Err(RuntimeError::UnknownProcess(main.to_string()));
    }
    if !decl.ctx.is_empty() {
        return Err(RuntimeError::NonEmptyContext(main.to_string()));
    }
    let mut cfg = Configuration { next_chan: prog.first_fresh, ..Configuration::default() };
    let root = cfg.fresh();
    let body = ProcExpr::TailCall { dest: root.clone(), proc: main.to_string(), args: vec![], chans: vec![] };
    let offer = decl.offer.1.clone();
    cfg.add(SemObj { id: 0, kind: Kind::Proc, chan: root.clone(), time: 0, body, offer: offer.clone(), uses: vec![] });
    Ok((cfg, vec![(root, offer)]))
}

/// One enabled rule instance: the active process and, for communication
/// steps, the message it consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Enabled {
    pub rule: RuleName,
    pub proc: u64,
    pub msg: Option<u64>,
    /// The time at which the step happens.
    pub time: u64,
}

fn enabled_for(cfg: &Configuration, p: &SemObj) -> Option<Enabled> {
    if p.kind != Kind::Proc {
        return None;
    }
    let me = |rule, msg: Option<&SemObj>, time| Some(Enabled { rule, proc: p.id, msg: msg.map(|m| m.id), time });
    let own = |c: &Chan| *c == p.chan;
    let provider_msg = |c: &str| cfg.provider(c).filter(|m| m.kind == Kind::Msg);
    let client_msg = |c: &str| cfg.client(c).filter(|m| m.kind == Kind::Msg);
    match &p.body {
        ProcExpr::Delay { .. } => me(RuleName::NextC, None, p.time),
        ProcExpr::Cut { .. } => me(RuleName::CutC, None, p.time),
        ProcExpr::Spawn { .. } | ProcExpr::TailCall { .. } => me(RuleName::DefC, None, p.time),
        ProcExpr::SendLabel { chan, .. } => me(if own(chan) { RuleName::PlusS } else { RuleName::WithS }, None, p.time),
        ProcExpr::SendChan { chan, .. } => me(if own(chan) { RuleName::TensorS } else { RuleName::LolliS }, None, p.time),
        ProcExpr::Close { chan } if own(chan) => me(RuleName::OneS, None, p.time),
        ProcExpr::Close { .. } => None,
        ProcExpr::Now { chan, .. } => me(if own(chan) { RuleName::DiamondS } else { RuleName::BoxS }, None, p.time),
        ProcExpr::Case { chan, .. } => {
            if own(chan) {
                let m = client_msg(chan)?;
                let ok = matches!(&m.body, ProcExpr::SendLabel { chan: c, .. } if c == chan) && m.time == p.time;
                if ok { me(RuleName::WithC, Some(m), p.time) } else { None }
            } else {
                let m = provider_msg(chan)?;
                let ok = matches!(&m.body, ProcExpr::SendLabel { chan: c, .. } if c == chan) && m.time == p.time;
                if ok { me(RuleName::PlusC, Some(m), p.time) } else { None }
            }
        }
        ProcExpr::Wait { chan, .. } => {
            let m = provider_msg(chan)?;
            let ok = matches!(&m.body, ProcExpr::Close { .. }) && m.time == p.time;
            if ok { me(RuleName::OneC, Some(m), p.time) } else { None }
        }
        ProcExpr::RecvChan { chan, .. } => {
            if own(chan) {
                let m = client_msg(chan)?;
                let ok = matches!(&m.body, ProcExpr::SendChan { chan: c, .. } if c == chan) && m.time == p.time;
                if ok { me(RuleName::LolliC, Some(m), p.time) } else { None }
            } else {
                let m = provider_msg(chan)?;
                let ok = matches!(&m.body, ProcExpr::SendChan { chan: c, .. } if c == chan) && m.time == p.time;
                if ok { me(RuleName::TensorC, Some(m), p.time) } else { None }
            }
        }
        ProcExpr::When { chan, .. } => {
            if own(chan) {
                let m = client_msg(chan)?;
                let ok = matches!(&m.body, ProcExpr::Now { chan: c, .. } if c == chan) && p.time <= m.time;
                if ok { me(RuleName::BoxC, Some(m), m.time) } else { None }
            } else {
                let m = provider_msg(chan)?;
                let ok = matches!(&m.body, ProcExpr::Now { chan: c, .. } if c == chan) && m.time >= p.time;
                if ok { me(RuleName::DiamondC, Some(m), m.time) } else { None }
            }
        }
        ProcExpr::Fwd { dest, src } => {
            if !own(dest) {
                return None;
            }
            if let Some(m) = provider_msg(src).filter(|m| m.time >= p.time) {
                return me(RuleName::IdPos, Some(m), m.time);
            }
            let m = client_msg(dest).filter(|m| m.time >= p.time)?;
            me(RuleName::IdNeg, Some(m), m.time)
        }
    }
}

/// Every enabled rule instance, in creation order of the active process.
pub fn enabled(cfg: &Configuration) -> Vec<Enabled> {
    cfg.objects().filter_map(|p| enabled_for(cfg, p)).collect()
}

/// A record of one fired rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub rule: RuleName,
    pub time: u64,
    pub channels: Vec<Chan>,
    pub consumed: Vec<ObjView>,
    pub produced: Vec<ObjView>,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>5}  {:<5} t={:<4} [{}]", self.step, self.rule.symbol(), self.time, self.channels.join(" "))?;
        let join = |vs: &[ObjView]| vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "  {}  ~>  {}", join(&self.consumed), join(&self.produced))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for st in &self.steps {
            s.push_str(&st.to_string());
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.steps).expect("trace serializes")
    }
}

fn malformed(o: &SemObj, msg: impl Into<String>) -> RuntimeError {
    RuntimeError::Malformed { obj: o.to_string(), msg: msg.into() }
}

fn local_offer(prog: &Program, o: &SemObj) -> Result<SessionType, RuntimeError> {
    shift_right_n(&prog.env.types, &o.offer, o.time)
        .map(|t| whnf(&prog.env.types, &t))
        .ok_or_else(|| malformed(o, format!("offered type {} does not reach time {}", show(&o.offer), o.time)))
}

fn local_use(prog: &Program, o: &SemObj, c: &str) -> Result<(SessionType, SessionType), RuntimeError> {
    let t = o.use_type(c).ok_or_else(|| malformed(o, format!("no witness type for `{c}`")))?.clone();
    let l = shift_left_n(&prog.env.types, &t, o.time)
        .map(|l| whnf(&prog.env.types, &l))
        .ok_or_else(|| malformed(o, format!("type {} of `{c}` does not reach time {}", show(&t), o.time)))?;
    Ok((t, l))
}

fn branch_of(o: &SemObj, t: &SessionType, label: &Label, plus: bool) -> Result<SessionType, RuntimeError> {
    let bs = match (t, plus) {
        (SessionType::Plus(bs), true) | (SessionType::With(bs), false) => bs,
        _ => return Err(malformed(o, format!("expected a choice, found {}", show(t)))),
    };
    bs.iter()
        .find(|(l, _)| l == label)
        .map(|(_, t)| t.clone())
        .ok_or_else(|| malformed(o, format!("label `{label}` not in {}", show(t))))
}

fn at(t: u64, a: SessionType) -> SessionType {
    SessionType::next_n(t, a)
}

fn ren(pairs: &[(&str, &str)]) -> HashMap<String, String> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn replace_use(uses: &mut Vec<(Chan, SessionType)>, old: &str, new: (Chan, SessionType)) {
    if let Some(e) = uses.iter_mut().find(|(c, _)| c == old) {
        *e = new;
    } else {
        uses.push(new);
    }
}

fn mk(kind: Kind, chan: &str, time: u64, body: ProcExpr, offer: SessionType, uses: Vec<(Chan, SessionType)>) -> SemObj {
    SemObj { id: 0, kind, chan: chan.to_string(), time, body, offer, uses }
}

/// Fires `en`, returning the consumed and produced objects.
pub fn fire(prog: &Program, cfg: &mut Configuration, en: &Enabled) -> Result<(Vec<SemObj>, Vec<SemObj>), RuntimeError> {
    let p = cfg.remove(en.proc);
    let m = en.msg.map(|id| cfg.remove(id));
    let t = p.time;
    let mut out: Vec<SemObj> = Vec::new();
    match (&p.body, &m) {
        (ProcExpr::Delay { count: n, cont, origin }, None) => {
            let body = match count(n) {
                0 | 1 => (**cont).clone(),
                k => ProcExpr::Delay { count: ParamExpr::Const(k - 1), origin: *origin, cont: cont.clone() },
            };
            out.push(mk(Kind::Proc, &p.chan, t + 1, body, p.offer.clone(), p.uses.clone()));
        }
        (ProcExpr::Cut { dest, annot, body, cont, .. }, None) => {
            let a = cfg.fresh();
            let ty = at(t, annot.clone());
            let fv = body.free_chans();
            let (mine, mut rest): (Vec<_>, Vec<_>) = p.uses.iter().cloned().partition(|(c, _)| fv.contains(c));
            out.push(mk(Kind::Proc, &a, t, body.rename(&ren(&[(dest, &a)])), ty.clone(), mine));
            rest.push((a.clone(), ty));
            out.push(mk(Kind::Proc, &p.chan, t, cont.rename(&ren(&[(dest, &a)])), p.offer.clone(), rest));
        }
        (ProcExpr::Spawn { proc: f, chans, .. } | ProcExpr::TailCall { proc: f, chans, .. }, None) => {
            let def = prog.defs.get(f).ok_or_else(|| RuntimeError::UnknownProcess(f.clone()))?;
            let decl = prog.env.decls.get(f).ok_or_else(|| RuntimeError::UnknownProcess(f.clone()))?;
            let a = cfg.fresh();
            let ty = at(t, decl.offer.1.clone());
            let mut map = ren(&[(&def.dest, &a)]);
            let mut args = Vec::new();
            for (z, y) in def.chans.iter().zip(chans) {
                map.insert(z.clone(), y.clone());
                let yt = p.use_type(y).ok_or_else(|| malformed(&p, format!("no witness type for `{y}`")))?;
                args.push((y.clone(), yt.clone()));
            }
            out.push(mk(Kind::Proc, &a, t, def.body.rename(&map), ty.clone(), args));
            let mut rest: Vec<_> = p.uses.iter().filter(|(c, _)| !chans.contains(c)).cloned().collect();
            rest.push((a.clone(), ty));
            let body = match &p.body {
                ProcExpr::Spawn { dest, cont, .. } => cont.rename(&ren(&[(dest, &a)])),
                _ => ProcExpr::fwd(&p.chan, &a),
            };
            out.push(mk(Kind::Proc, &p.chan, t, body, p.offer.clone(), rest));
        }
        (ProcExpr::SendLabel { chan, label, cont }, None) if *chan == p.chan => {
            let ak = branch_of(&p, &local_offer(prog, &p)?, label, true)?;
            let c2 = cfg.fresh();
            out.push(mk(Kind::Proc, &c2, t, cont.rename(&ren(&[(chan, &c2)])), at(t, ak.clone()), p.uses.clone()));
            let body = ProcExpr::SendLabel { chan: chan.clone(), label: label.clone(), cont: Box::new(ProcExpr::fwd(chan, &c2)) };
            out.push(mk(Kind::Msg, &p.chan, t, body, p.offer.clone(), vec![(c2, at(t, ak))]));
        }
        (ProcExpr::SendLabel { chan, label, cont }, None) => {
            let (bt, local) = local_use(prog, &p, chan)?;
            let bk = branch_of(&p, &local, label, false)?;
            let c2 = cfg.fresh();
            let body = ProcExpr::SendLabel { chan: chan.clone(), label: label.clone(), cont: Box::new(ProcExpr::fwd(&c2, chan)) };
            out.push(mk(Kind::Msg, &c2, t, body, at(t, bk.clone()), vec![(chan.clone(), bt)]));
            let mut uses = p.uses.clone();
            replace_use(&mut uses, chan, (c2.clone(), at(t, bk)));
            out.push(mk(Kind::Proc, &p.chan, t, cont.rename(&ren(&[(chan, &c2)])), p.offer.clone(), uses));
        }
        (ProcExpr::Close { chan }, None) => {
            out.push(mk(Kind::Msg, chan, t, p.body.clone(), p.offer.clone(), vec![]));
        }
        (ProcExpr::SendChan { chan, payload, cont }, None) if *chan == p.chan => {
            let SessionType::Tensor(_, y) = local_offer(prog, &p)? else {
                return Err(malformed(&p, "offered type is not a tensor"));
            };
            let dt = p.use_type(payload).ok_or_else(|| malformed(&p, format!("no witness type for `{payload}`")))?.clone();
            let c2 = cfg.fresh();
            let uses: Vec<_> = p.uses.iter().filter(|(c, _)| c != payload).cloned().collect();
            out.push(mk(Kind::Proc, &c2, t, cont.rename(&ren(&[(chan, &c2)])), at(t, (*y).clone()), uses));
            let body = ProcExpr::SendChan { chan: chan.clone(), payload: payload.clone(), cont: Box::new(ProcExpr::fwd(chan, &c2)) };
            out.push(mk(Kind::Msg, &p.chan, t, body, p.offer.clone(), vec![(payload.clone(), dt), (c2, at(t, *y))]));
        }
        (ProcExpr::SendChan { chan, payload, cont }, None) => {
            let (bt, local) = local_use(prog, &p, chan)?;
            let SessionType::Lolli(_, y) = local else {
                return Err(malformed(&p, format!("`{chan}` is not a lolli")));
            };
            let dt = p.use_type(payload).ok_or_else(|| malformed(&p, format!("no witness type for `{payload}`")))?.clone();
            let c2 = cfg.fresh();
            let body = ProcExpr::SendChan { chan: chan.clone(), payload: payload.clone(), cont: Box::new(ProcExpr::fwd(&c2, chan)) };
            out.push(mk(Kind::Msg, &c2, t, body, at(t, (*y).clone()), vec![(payload.clone(), dt), (chan.clone(), bt)]));
            let mut uses: Vec<_> = p.uses.iter().filter(|(c, _)| c != payload).cloned().collect();
            replace_use(&mut uses, chan, (c2.clone(), at(t, *y)));
            out.push(mk(Kind::Proc, &p.chan, t, cont.rename(&ren(&[(chan, &c2)])), p.offer.clone(), uses));
        }
        (ProcExpr::Now { chan, cont, .. }, None) if *chan == p.chan => {
            let SessionType::Diamond(x) = local_offer(prog, &p)? else {
                return Err(malformed(&p, "offered type is not eventually"));
            };
            let c2 = cfg.fresh();
            out.push(mk(Kind::Proc, &c2, t, cont.rename(&ren(&[(chan, &c2)])), at(t, (*x).clone()), p.uses.clone()));
            let body = ProcExpr::Now { chan: chan.clone(), cont: Box::new(ProcExpr::fwd(chan, &c2)), origin: crate::syntax::Origin::Source };
            out.push(mk(Kind::Msg, &p.chan, t, body, p.offer.clone(), vec![(c2, at(t, *x))]));
        }
        (ProcExpr::Now { chan, cont, .. }, None) => {
            let (bt, local) = local_use(prog, &p, chan)?;
            let SessionType::Box(x) = local else {
                return Err(malformed(&p, format!("`{chan}` is not always")));
            };
            let c2 = cfg.fresh();
            let body = ProcExpr::Now { chan: chan.clone(), cont: Box::new(ProcExpr::fwd(&c2, chan)), origin: crate::syntax::Origin::Source };
            out.push(mk(Kind::Msg, &c2, t, body, at(t, (*x).clone()), vec![(chan.clone(), bt)]));
            let mut uses = p.uses.clone();
            replace_use(&mut uses, chan, (c2.clone(), at(t, *x)));
            out.push(mk(Kind::Proc, &p.chan, t, cont.rename(&ren(&[(chan, &c2)])), p.offer.clone(), uses));
        }
        (ProcExpr::Case { chan, branches }, Some(msg)) => {
            let ProcExpr::SendLabel { label, cont: mc, .. } = &msg.body else {
                return Err(malformed(msg, "expected a label message"));
            };
            let q = branches
                .iter()
                .find(|(l, _)| l == label)
                .map(|(_, q)| q)
                .ok_or_else(|| malformed(&p, format!("no branch for `{label}`")))?;
            let ProcExpr::Fwd { dest, src } = &**mc else {
                return Err(malformed(msg, "label message must end in a forward"));
            };
            if *chan == p.chan {
                let ak = branch_of(&p, &local_offer(prog, &p)?, label, false)?;
                let c2 = dest;
                out.push(mk(Kind::Proc, c2, t, q.rename(&ren(&[(chan, c2)])), at(t, ak), p.uses.clone()));
            } else {
                let c2 = src;
                let ct = msg.use_type(c2).ok_or_else(|| malformed(msg, "missing continuation type"))?.clone();
                let mut uses = p.uses.clone();
                replace_use(&mut uses, chan, (c2.clone(), ct));
                out.push(mk(Kind::Proc, &p.chan, t, q.rename(&ren(&[(chan, c2)])), p.offer.clone(), uses));
            }
        }
        (ProcExpr::Wait { chan, cont }, Some(_)) => {
            let uses = p.uses.iter().filter(|(c, _)| c != chan).cloned().collect();
            out.push(mk(Kind::Proc, &p.chan, t, (**cont).clone(), p.offer.clone(), uses));
        }
        (ProcExpr::RecvChan { bind, chan, cont }, Some(msg)) => {
            let ProcExpr::SendChan { payload, cont: mc, .. } = &msg.body else {
                return Err(malformed(msg, "expected a channel message"));
            };
            let ProcExpr::Fwd { dest, src } = &**mc else {
                return Err(malformed(msg, "channel message must end in a forward"));
            };
            let dt = msg.use_type(payload).ok_or_else(|| malformed(msg, "missing payload type"))?.clone();
            if *chan == p.chan {
                let SessionType::Lolli(_, y) = local_offer(prog, &p)? else {
                    return Err(malformed(&p, "offered type is not a lolli"));
                };
                let c2 = dest;
                let mut uses = p.uses.clone();
                uses.push((payload.clone(), dt));
                out.push(mk(Kind::Proc, c2, t, cont.rename(&ren(&[(chan, c2), (bind, payload)])), at(t, *y), uses));
            } else {
                let c2 = src;
                let ct = msg.use_type(c2).ok_or_else(|| malformed(msg, "missing continuation type"))?.clone();
                let mut uses = p.uses.clone();
                replace_use(&mut uses, chan, (c2.clone(), ct));
                uses.push((payload.clone(), dt));
                out.push(mk(Kind::Proc, &p.chan, t, cont.rename(&ren(&[(chan, c2), (bind, payload)])), p.offer.clone(), uses));
            }
        }
        (ProcExpr::When { chan, cont, .. }, Some(msg)) => {
            let ProcExpr::Now { cont: mc, .. } = &msg.body else {
                return Err(malformed(msg, "expected a now! message"));
            };
            let ProcExpr::Fwd { dest, src } = &**mc else {
                return Err(malformed(msg, "now! message must end in a forward"));
            };
            let s = msg.time;
            if *chan == p.chan {
                let SessionType::Box(x) = local_offer(prog, &p)? else {
                    return Err(malformed(&p, "offered type is not always"));
                };
                out.push(mk(Kind::Proc, dest, s, cont.rename(&ren(&[(chan, dest)])), at(s, *x), p.uses.clone()));
            } else {
                let ct = msg.use_type(src).ok_or_else(|| malformed(msg, "missing continuation type"))?.clone();
                let mut uses = p.uses.clone();
                replace_use(&mut uses, chan, (src.clone(), ct));
                out.push(mk(Kind::Proc, &p.chan, s, cont.rename(&ren(&[(chan, src)])), p.offer.clone(), uses));
            }
        }
        (ProcExpr::Fwd { dest, src }, Some(msg)) if en.rule == RuleName::IdPos => {
            let body = msg.body.rename(&ren(&[(src, dest)]));
            out.push(mk(Kind::Msg, dest, msg.time, body, msg.offer.clone(), msg.uses.clone()));
        }
        (ProcExpr::Fwd { dest, src }, Some(msg)) => {
            let body = msg.body.rename(&ren(&[(dest, src)]));
            let st = p.use_type(src).ok_or_else(|| malformed(&p, format!("no witness type for `{src}`")))?.clone();
            let mut uses = msg.uses.clone();
            replace_use(&mut uses, dest, (src.clone(), st));
            out.push(mk(Kind::Msg, &msg.chan, msg.time, body, msg.offer.clone(), uses));
        }
        _ => return Err(malformed(&p, format!("rule {} does not apply", en.rule))),
    }
    let consumed: Vec<SemObj> = std::iter::once(p).chain(m).collect();
    let mut produced = Vec::new();
    for o in out {
        let id = cfg.add(o);
        produced.push(cfg.objects[&id].clone());
    }
    Ok((consumed, produced))
}

/// Scheduler state carried across steps.
#[derive(Clone, Debug)]
pub struct Engine {
    pub scheduler: Scheduler,
    cursor: Option<u64>,
    /// Objects created at or after this id wait for the next round.
    round_end: u64,
    rng: ChaCha8Rng,
    steps: usize,
}

impl Engine {
    pub fn new(scheduler: Scheduler) -> Engine {
        let seed = match scheduler {
            Scheduler::SeededRandom(s) => s,
            _ => 0,
        };
        Engine { scheduler, cursor: None, round_end: 0, rng: ChaCha8Rng::seed_from_u64(seed), steps: 0 }
    }

    fn choose(&mut self, en: &[Enabled], next_id: u64) -> Enabled {
        match self.scheduler {
            Scheduler::RoundRobin => {
                let within = self.cursor.and_then(|c| en.iter().find(|e| e.proc > c && e.proc < self.round_end));
                let pick = match within {
                    Some(e) => e,
                    None => {
                        self.round_end = next_id;
                        &en[0]
                    }
                };
                self.cursor = Some(pick.proc);
                *pick
            }
            Scheduler::SeededRandom(_) => en[self.rng.gen_range(0..en.len())],
            Scheduler::TimeSynchronous => *en
                .iter()
                .min_by_key(|e| (e.time, e.rule == RuleName::NextC, e.proc))
                .expect("nonempty"),
        }
    }

    /// Fires one rule. Returns `None` when the configuration is quiescent
    /// and poised.
    pub fn step(&mut self, prog: &Program, cfg: &mut Configuration) -> Result<Option<TraceStep>, RuntimeError> {
        cfg.refresh();
        let en: Vec<Enabled> = cfg.ready.values().copied().collect();
        if en.is_empty() {
            return match cfg.objects().find(|o| !o.is_poised()) {
                Some(o) => Err(RuntimeError::StuckNotPoised(o.to_string())),
                None => Ok(None),
            };
        }
        let pick = self.choose(&en, cfg.next_id);
        let (consumed, produced) = fire(prog, cfg, &pick)?;
        self.steps += 1;
        let mut channels: Vec<Chan> = Vec::new();
        for o in consumed.iter().chain(&produced) {
            if !channels.contains(&o.chan) {
                channels.push(o.chan.clone());
            }
        }
        Ok(Some(TraceStep {
            step: self.steps,
            rule: pick.rule,
            time: pick.time,
            channels,
            consumed: consumed.iter().map(SemObj::view).collect(),
            produced: produced.iter().map(SemObj::view).collect(),
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// No rule applies and every object is poised.
    Quiescent,
    /// The step budget ran out; normal for programs that run forever.
    BudgetExhausted,
    /// No rule applies but some object is not poised.
    Stuck(String),
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: Configuration,
    pub trace: Trace,
    pub outcome: Outcome,
    /// The first configuration typing failure, with the step after which it
    /// was observed; only looked for when checking was requested.
    pub violation: Option<(usize, ConfigTypeError)>,
}

#[derive(Clone, Debug)]
pub struct RunOptions<'a> {
    pub scheduler: Scheduler,
    pub budget: usize,
    /// When set, checks the configuration against this interface after
    /// every step.
    pub check: Option<&'a Ctx>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions { scheduler: Scheduler::RoundRobin, budget: 10_000, check: None }
    }
}

pub fn run(prog: &Program, cfg: Configuration, opts: &RunOptions) -> Result<RunResult, RuntimeError> {
    let mut cfg = cfg;
    let mut engine = Engine::new(opts.scheduler);
    let mut trace = Trace::default();
    let mut checker = ConfigChecker::default();
    let mut violation = None;
    let mut check = |cfg: &Configuration, n: usize, violation: &mut Option<(usize, ConfigTypeError)>| {
        if let (Some(iface), None) = (opts.check, &violation) {
            if let Err(e) = checker.check(&prog.env, &[], cfg, iface) {
                *violation = Some((n, e));
            }
        }
    };
    check(&cfg, 0, &mut violation);
    let outcome = loop {
        if trace.steps.len() >= opts.budget {
            break Outcome::BudgetExhausted;
        }
        match engine.step(prog, &mut cfg) {
            Ok(Some(st)) => {
                trace.steps.push(st);
                check(&cfg, trace.steps.len(), &mut violation);
            }
            Ok(None) => break Outcome::Quiescent,
            Err(RuntimeError::StuckNotPoised(o)) => break Outcome::Stuck(o),
            Err(e) => return Err(e),
        }
    };
    Ok(RunResult { config: cfg, trace, outcome, violation })
}

/// What a message on the root chain carries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Observation {
    pub chan: Chan,
    pub time: u64,
    /// A label, `close`, `send` or `now`.
    pub event: String,
}

/// Follows the messages provided along `root` and each continuation
/// channel they forward to.
pub fn root_chain(cfg: &Configuration, root: &str) -> Vec<Observation> {
    let mut out = Vec::new();
    let mut cur = root.to_string();
    let mut seen = HashSet::new();
    while seen.insert(cur.clone()) {
        let Some(m) = cfg.provider(&cur).filter(|m| m.kind == Kind::Msg) else { break };
        let (event, next) = match &m.body {
            ProcExpr::SendLabel { label, cont, .. } => (label.clone(), fwd_src(cont)),
            ProcExpr::SendChan { cont, .. } => ("send".to_string(), fwd_src(cont)),
            ProcExpr::Now { cont, .. } => ("now".to_string(), fwd_src(cont)),
            ProcExpr::Close { .. } => ("close".to_string(), None),
            _ => break,
        };
        out.push(Observation { chan: cur.clone(), time: m.time, event });
        match next {
            Some(n) => cur = n,
            None => break,
        }
    }
    out
}

fn fwd_src(p: &ProcExpr) -> Option<Chan> {
    match p {
        ProcExpr::Fwd { src, .. } => Some(src.clone()),
        _ => None,
    }
}

/// The channel carried by a `send` message on `chan`, if there is one.
pub fn sent_channel(cfg: &Configuration, chan: &str) -> Option<Chan> {
    match &cfg.provider(chan)?.body {
        ProcExpr::SendChan { payload, .. } => Some(payload.clone()),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{}: {msg}", chan.as_deref().unwrap_or("configuration"))]
pub struct ConfigTypeError {
    pub chan: Option<Chan>,
    pub msg: String,
}

fn cerr(chan: Option<&str>, msg: impl Into<String>) -> ConfigTypeError {
    ConfigTypeError { chan: chan.map(str::to_string), msg: msg.into() }
}

/// Checks that `provides_in |= cfg :: provides_out`.
pub fn check_configuration(env: &Env, provides_in: &[(Chan, SessionType)], cfg: &Configuration, provides_out: &[(Chan, SessionType)]) -> Result<(), ConfigTypeError> {
    ConfigChecker::default().check(env, provides_in, cfg, provides_out)
}

/// Configuration checking that remembers what it has verified. Objects
/// never change once created, so their typing and the fit between a
/// provider and its client are checked once. When the same configuration
/// is checked again after some steps, only the objects added or removed in
/// between are examined.
#[derive(Clone, Debug, Default)]
pub struct ConfigChecker {
    typed: HashSet<u64>,
    fits: HashSet<(u64, u64)>,
    state: Option<Incremental>,
}

#[derive(Clone, Debug)]
struct Incremental {
    lineage: u64,
    log_len: usize,
    provides_in: Vec<(Chan, SessionType)>,
    provides_out: Vec<(Chan, SessionType)>,
    provider: HashMap<Chan, u64>,
    client: HashMap<Chan, u64>,
    /// Provided channel and used channels of every present object.
    meta: HashMap<u64, (Chan, Vec<Chan>)>,
}

impl ConfigChecker {
    pub fn check(
        &mut self,
        env: &Env,
        provides_in: &[(Chan, SessionType)],
        cfg: &Configuration,
        provides_out: &[(Chan, SessionType)],
    ) -> Result<(), ConfigTypeError> {
        let reusable = self.state.as_ref().is_some_and(|st| {
            st.lineage == cfg.lineage
                && st.log_len <= cfg.log.len()
                && st.provides_in == provides_in
                && st.provides_out == provides_out
        });
        let result = if reusable { self.incremental(env, cfg) } else { self.full(env, provides_in, cfg, provides_out) };
        if result.is_err() {
            self.state = None;
        }
        result
    }

    /// Per-object conditions: distinct used channels, free channels that
    /// match the interface, and a body typed at its shifted interface.
    fn object(&mut self, env: &Env, o: &SemObj) -> Result<(), ConfigTypeError> {
        if self.typed.contains(&o.id) {
            return Ok(());
        }
        let te = &env.types;
        let mut expected: HashSet<&str> = o.uses.iter().map(|(c, _)| c.as_str()).collect();
        if expected.len() != o.uses.len() {
            return Err(cerr(Some(&o.chan), "uses a channel twice"));
        }
        if expected.contains(o.chan.as_str()) {
            return Err(cerr(Some(&o.chan), "uses its own channel"));
        }
        expected.insert(&o.chan);
        let free = o.body.free_chans();
        if free.len() != expected.len() || !free.iter().all(|c| expected.contains(c.as_str())) {
            return Err(cerr(Some(&o.chan), format!("free channels of {o} differ from its interface")));
        }
        let mut ctx = Vec::new();
        for (u, t) in &o.uses {
            let l = shift_left_n(te, t, o.time)
                .ok_or_else(|| cerr(Some(&o.chan), format!("`{u}` : {} cannot be seen at time {}", show(t), o.time)))?;
            ctx.push((u.clone(), l));
        }
        let offer = shift_right_n(te, &o.offer, o.time)
            .ok_or_else(|| cerr(Some(&o.chan), format!("{} cannot be offered at time {}", show(&o.offer), o.time)))?;
        check_process(env, &ctx, &o.body, &(o.chan.clone(), offer))
            .map_err(|e| cerr(Some(&o.chan), format!("{o} is ill typed: {e}")))?;
        self.typed.insert(o.id);
        Ok(())
    }

    /// Checks everything about channel `c` that depends on who provides and
    /// who uses it.
    fn channel(&mut self, env: &Env, cfg: &Configuration, st: &Incremental, c: &str) -> Result<(), ConfigTypeError> {
        let te = &env.types;
        let weak = |a: &SessionType, b: &SessionType| is_weak_subtype(te, a, b).unwrap_or(false);
        let outer = st.provides_in.iter().find(|(d, _)| d == c).map(|(_, t)| t);
        let out = st.provides_out.iter().find(|(d, _)| d == c).map(|(_, t)| t);
        let prov = st.provider.get(c).map(|id| &cfg.objects[id]);
        let cli = st.client.get(c).map(|id| &cfg.objects[id]);
        if prov.is_some() && outer.is_some() {
            return Err(cerr(Some(c), "provided twice"));
        }
        match cli {
            Some(k) => {
                if out.is_some() {
                    return Err(cerr(Some(c), "promised by the interface but used internally"));
                }
                let want = k.use_type(c).expect("client uses the channel");
                match (prov, outer) {
                    (Some(p), _) => {
                        if !self.fits.contains(&(p.id, k.id)) {
                            if !weak(&p.offer, want) {
                                return Err(cerr(Some(c), format!("provided at {} but used at {}", show(&p.offer), show(want))));
                            }
                            self.fits.insert((p.id, k.id));
                        }
                    }
                    (None, Some(t0)) => {
                        if !weak(t0, want) {
                            return Err(cerr(Some(c), format!("provided at {} but used at {}", show(t0), show(want))));
                        }
                    }
                    (None, None) => return Err(cerr(Some(c), "used but never provided")),
                }
            }
            None => {
                let have = match (prov, outer) {
                    (Some(p), _) => Some(&p.offer),
                    (None, t0) => t0,
                };
                match (have, out) {
                    (Some(h), Some(t)) => {
                        if !weak(h, t) {
                            return Err(cerr(Some(c), format!("provided at {} but promised at {}", show(h), show(t))));
                        }
                    }
                    (Some(_), None) if prov.is_some() => {
                        return Err(cerr(Some(c), "provided but neither used nor part of the interface"));
                    }
                    (Some(_), None) => return Err(cerr(Some(c), "incoming channel is dropped")),
                    (None, Some(_)) => return Err(cerr(Some(c), "promised by the interface but not provided")),
                    (None, None) => {}
                }
            }
        }
        Ok(())
    }

    fn full(
        &mut self,
        env: &Env,
        provides_in: &[(Chan, SessionType)],
        cfg: &Configuration,
        provides_out: &[(Chan, SessionType)],
    ) -> Result<(), ConfigTypeError> {
        let mut st = Incremental {
            lineage: cfg.lineage,
            log_len: cfg.log.len(),
            provides_in: provides_in.to_vec(),
            provides_out: provides_out.to_vec(),
            provider: HashMap::new(),
            client: HashMap::new(),
            meta: HashMap::new(),
        };
        for o in cfg.objects() {
            if st.provider.insert(o.chan.clone(), o.id).is_some() {
                return Err(cerr(Some(&o.chan), "provided twice"));
            }
            st.meta.insert(o.id, (o.chan.clone(), o.uses.iter().map(|(c, _)| c.clone()).collect()));
        }
        for o in cfg.objects() {
            self.object(env, o)?;
            for (u, _) in &o.uses {
                if st.client.insert(u.clone(), o.id).is_some() {
                    return Err(cerr(Some(u), "used by two objects"));
                }
            }
        }
        let mut chans: HashSet<Chan> = st.provider.keys().chain(st.client.keys()).cloned().collect();
        chans.extend(provides_in.iter().chain(provides_out).map(|(c, _)| c.clone()));
        for c in &chans {
            self.channel(env, cfg, &st, c)?;
        }

        // Kahn's algorithm over provider -> client edges.
        let mut indeg: HashMap<u64, usize> = cfg.objects().map(|o| (o.id, 0)).collect();
        for o in cfg.objects() {
            for (u, _) in &o.uses {
                if st.provider.contains_key(u) {
                    *indeg.get_mut(&o.id).unwrap() += 1;
                }
            }
        }
        let mut ready: VecDeque<u64> = indeg.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
        let mut placed = 0;
        while let Some(id) = ready.pop_front() {
            placed += 1;
            if let Some(k) = st.client.get(&cfg.objects[&id].chan) {
                let d = indeg.get_mut(k).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push_back(*k);
                }
            }
        }
        if placed != cfg.len() {
            return Err(cerr(None, "the provider relation has a cycle"));
        }
        self.state = Some(st);
        Ok(())
    }

    fn incremental(&mut self, env: &Env, cfg: &Configuration) -> Result<(), ConfigTypeError> {
        let mut st = self.state.take().expect("incremental state");
        let mut touched: HashSet<Chan> = HashSet::new();
        let mut added: Vec<u64> = Vec::new();
        for &(id, is_add) in &cfg.log[st.log_len..] {
            if is_add {
                added.push(id);
                continue;
            }
            if let Some(pos) = added.iter().position(|a| *a == id) {
                added.remove(pos);
            }
            if let Some((c, uses)) = st.meta.remove(&id) {
                if st.provider.get(&c) == Some(&id) {
                    st.provider.remove(&c);
                }
                for u in &uses {
                    if st.client.get(u) == Some(&id) {
                        st.client.remove(u);
                    }
                }
                touched.insert(c);
                touched.extend(uses);
            }
        }
        for &id in &added {
            let o = &cfg.objects[&id];
            self.object(env, o)?;
            if st.provider.insert(o.chan.clone(), id).is_some() {
                return Err(cerr(Some(&o.chan), "provided twice"));
            }
            for (u, _) in &o.uses {
                if st.client.insert(u.clone(), id).is_some() {
                    return Err(cerr(Some(u), "used by two objects"));
                }
            }
            st.meta.insert(id, (o.chan.clone(), o.uses.iter().map(|(c, _)| c.clone()).collect()));
            touched.insert(o.chan.clone());
            touched.extend(o.uses.iter().map(|(c, _)| c.clone()));
        }
        for c in &touched {
            self.channel(env, cfg, &st, c)?;
        }
        for &id in &added {
            if on_cycle(cfg, &st, id) {
                return Err(cerr(Some(&cfg.objects[&id].chan), "the provider relation has a cycle"));
            }
        }
        st.log_len = cfg.log.len();
        self.state = Some(st);
        Ok(())
    }
}

/// Whether `start` lies on a cycle of the provider relation. Every object
/// has at most one client, so a cycle through `start` is found both by
/// climbing clients from `start` and by descending through providers; the
/// two searches advance in lockstep and the first to finish decides.
fn on_cycle(cfg: &Configuration, st: &Incremental, start: u64) -> bool {
    let client_of = |id: u64| st.client.get(&cfg.objects[&id].chan).copied();
    let mut up = client_of(start);
    let mut down: Vec<u64> = vec![start];
    let mut seen: HashSet<u64> = HashSet::from([start]);
    loop {
        match up {
            None => return false,
            Some(id) if id == start => return true,
            Some(id) => up = client_of(id),
        }
        let Some(id) = down.pop() else { return false };
        for (u, _) in &cfg.objects[&id].uses {
            if let Some(&p) = st.provider.get(u) {
                if p == start {
                    return true;
                }
                if seen.insert(p) {
                    down.push(p);
                }
            }
        }
    }
}
