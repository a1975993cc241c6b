//! Time reconstruction: checks a program written without `delay`, `when?`
//! or `now!` against the implicit rules and produces the explicit program,
//! marking every inserted action as reconstructed.
//!
//! The search is driven by the head action of the process. To perform an
//! action on channel `c`, the temporal modalities of `c`'s type are peeled
//! off first (a delay for `()`, `now!`/`when?` for `[]` and `<>`); other
//! channels are adjusted only when that is the only way forward. Delays are
//! therefore inserted as late as possible.
//!
//! At a call site each argument may be a subtype of the declared type. The
//! gap is bridged by a reconstructed cut whose body is the elaborated
//! forward; a tail call whose offered type is a proper subtype of the goal
//! becomes a reconstructed spawn followed by an elaborated forward. Both
//! erase back to the original call.

use std::collections::{BTreeSet, HashMap};
use rustc_hash::FxHashSet;
use std::fmt;

use crate::checker::{self, branch, lookup, same_labels, set, take, Ctx, Env};
use crate::syntax::{Item, Origin, Pos, ProcDecl, ProcDef, ProcExpr, SessionType, Signature, Var};
use crate::subtyping::is_subtype;
use crate::types::{count, patient, shift_left, shift_right, type_equal, whnf, whnf_ref, Patience};

pub const DEFAULT_NODE_BUDGET: usize = 100_000;

type Offer = (Var, SessionType);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// The program is ill-typed even with all temporal modalities ignored.
    Skeleton,
    /// The basic structure fits but no placement of temporal actions does.
    Temporal,
    /// The search gave up.
    Budget,
    /// The input already contains actions reserved for reconstruction.
    Precondition,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconstructError {
    pub kind: ErrorKind,
    pub def: Option<String>,
    pub pos: Option<Pos>,
    pub msg: String,
    pub sequent: String,
}

impl fmt::Display for ReconstructError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = &self.def {
            write!(f, "in `{d}`")?;
            if let Some(p) = self.pos {
                write!(f, " ({p})")?;
            }
            write!(f, ": ")?;
        }
        let what = match self.kind {
            ErrorKind::Skeleton => "type error",
            ErrorKind::Temporal => "no placement of temporal actions works",
            ErrorKind::Budget => "reconstruction budget exhausted",
            ErrorKind::Precondition => "invalid input",
        };
        write!(f, "{what}: {}", self.msg)?;
        if !self.sequent.is_empty() {
            write!(f, "\n  deepest failing goal: {}", self.sequent)?;
        }
        Ok(())
    }
}

impl std::error::Error for ReconstructError {}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Move {
    Delay,
    BoxR,
    DiamondR,
    DiamondL(Var),
    BoxL(Var),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Head {
    Plus,
    With,
    One,
    Tensor,
    Lolli,
    Box,
    Diamond,
}

fn head(t: &SessionType) -> Option<Head> {
    Some(match t {
        SessionType::Plus(_) => Head::Plus,
        SessionType::With(_) => Head::With,
        SessionType::One => Head::One,
        SessionType::Tensor(..) => Head::Tensor,
        SessionType::Lolli(..) => Head::Lolli,
        SessionType::Box(_) => Head::Box,
        SessionType::Diamond(_) => Head::Diamond,
        _ => return None,
    })
}

struct Budget;

type Found = Result<Option<ProcExpr>, Budget>;

type Key = (usize, Vec<(Var, SessionType)>, Offer);

struct Failure {
    depth: usize,
    skeleton: bool,
    msg: String,
    sequent: (Ctx, Offer),
}

/// Backtracking search state for one definition.
pub struct Elaborator<'e> {
    env: &'e Env,
    budget: usize,
    nodes: usize,
    failed: FxHashSet<Key>,
    path: FxHashSet<Key>,
    cycle_hits: usize,
    names: BTreeSet<Var>,
    deepest: Option<Failure>,
}

fn canon(ctx: &Ctx) -> Vec<(Var, SessionType)> {
    let mut v = ctx.clone();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn wrap(m: &Move, offer: &Var, k: ProcExpr) -> ProcExpr {
    let cont = Box::new(k);
    let origin = Origin::Reconstructed;
    match m {
        Move::Delay => ProcExpr::Delay { count: crate::syntax::ParamExpr::Const(1), origin, cont },
        Move::BoxR => ProcExpr::When { chan: offer.clone(), cont, origin },
        Move::DiamondR => ProcExpr::Now { chan: offer.clone(), cont, origin },
        Move::DiamondL(d) => ProcExpr::When { chan: d.clone(), cont, origin },
        Move::BoxL(d) => ProcExpr::Now { chan: d.clone(), cont, origin },
    }
}

impl<'e> Elaborator<'e> {
    pub fn new(env: &'e Env) -> Self {
        Elaborator {
            env,
            budget: DEFAULT_NODE_BUDGET,
            nodes: 0,
            failed: FxHashSet::default(),
            path: FxHashSet::default(),
            cycle_hits: 0,
            names: BTreeSet::new(),
            deepest: None,
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    fn fail(&mut self, depth: usize, skeleton: bool, msg: String, ctx: &Ctx, offer: &Offer) -> Found {
        let deeper = match &self.deepest {
            None => true,
            Some(f) => depth > f.depth || (depth == f.depth && skeleton && !f.skeleton),
        };
        if deeper {
            self.deepest = Some(Failure { depth, skeleton, msg, sequent: (ctx.clone(), offer.clone()) });
        }
        Ok(None)
    }

    fn fresh(&mut self, base: &str) -> Var {
        let mut name = format!("{base}'");
        while self.names.contains(&name) {
            name.push('\'');
        }
        self.names.insert(name.clone());
        name
    }

    fn equal(&self, a: &SessionType, b: &SessionType) -> bool {
        type_equal(&self.env.types, a, b).unwrap_or(false)
    }

    /// Shifts the whole sequent by one unit, if both sides allow it.
    fn shifted(&self, ctx: &Ctx, offer: &Offer) -> Option<(Ctx, Offer)> {
        let te = &self.env.types;
        let c = ctx
            .iter()
            .map(|(x, t)| shift_left(te, t).map(|s| (x.clone(), s)))
            .collect::<Option<Ctx>>()?;
        Some((c, (offer.0.clone(), shift_right(te, &offer.1)?)))
    }

    fn progresses(&self, ctx: &Ctx, offer: &Offer) -> bool {
        let te = &self.env.types;
        ctx.iter().chain(std::iter::once(offer)).any(|(_, t)| matches!(whnf_ref(te, t), SessionType::Next(..)))
    }

    fn apply_move(&self, m: &Move, ctx: &Ctx, offer: &Offer) -> Option<(Ctx, Offer)> {
        let te = &self.env.types;
        match m {
            Move::Delay => {
                if !self.progresses(ctx, offer) {
                    return None;
                }
                self.shifted(ctx, offer)
            }
            Move::BoxR => match whnf_ref(te, &offer.1) {
                SessionType::Box(a) if ctx.iter().all(|(_, t)| patient(te, t, Patience::Box)) => {
                    Some((ctx.clone(), (offer.0.clone(), (**a).clone())))
                }
                _ => None,
            },
            Move::DiamondR => match whnf_ref(te, &offer.1) {
                SessionType::Diamond(a) => Some((ctx.clone(), (offer.0.clone(), (**a).clone()))),
                _ => None,
            },
            Move::DiamondL(d) => match whnf_ref(te, lookup(ctx, d)?) {
                SessionType::Diamond(a)
                    if ctx.iter().all(|(x, t)| x == d || patient(te, t, Patience::Box))
                        && patient(te, &offer.1, Patience::Diamond) =>
                {
                    let mut c = ctx.clone();
                    set(&mut c, d, (**a).clone());
                    Some((c, offer.clone()))
                }
                _ => None,
            },
            Move::BoxL(d) => match whnf_ref(te, lookup(ctx, d)?) {
                SessionType::Box(a) => {
                    let mut c = ctx.clone();
                    set(&mut c, d, (**a).clone());
                    Some((c, offer.clone()))
                }
                _ => None,
            },
        }
    }

    /// Every temporal rule that applies to the sequent, in the order the
    /// search tries them when the head action does not decide.
    fn temporal_moves(&self, ctx: &Ctx, offer: &Offer) -> Vec<Move> {
        let te = &self.env.types;
        let mut out = vec![Move::Delay];
        for (x, t) in ctx {
            if let SessionType::Diamond(_) = whnf_ref(te, t) {
                out.push(Move::DiamondL(x.clone()));
            }
        }
        match whnf_ref(te, &offer.1) {
            SessionType::Box(_) => out.push(Move::BoxR),
            SessionType::Diamond(_) => out.push(Move::DiamondR),
            _ => {}
        }
        for (x, t) in ctx {
            if let SessionType::Box(_) = whnf_ref(te, t) {
                out.push(Move::BoxL(x.clone()));
            }
        }
        out
    }

    fn try_moves(&mut self, moves: Vec<Move>, ctx: &Ctx, p: &ProcExpr, offer: &Offer, depth: usize) -> Found {
        let mut tried: Vec<Move> = Vec::new();
        for m in moves {
            if tried.contains(&m) {
                continue;
            }
            tried.push(m.clone());
            let Some((c, o)) = self.apply_move(&m, ctx, offer) else { continue };
            if let Some(k) = self.go(c, p, o, depth)? {
                return Ok(Some(wrap(&m, &offer.0, k)));
            }
        }
        Ok(None)
    }

    fn go(&mut self, ctx: Ctx, p: &ProcExpr, offer: Offer, depth: usize) -> Found {
        let key: Key = (p as *const ProcExpr as usize, canon(&ctx), offer.clone());
        if self.path.contains(&key) {
            self.cycle_hits += 1;
            return Ok(None);
        }
        if self.failed.contains(&key) {
            return Ok(None);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Budget);
        }
        let hits = self.cycle_hits;
        self.path.insert(key.clone());
        let r = self.step(&ctx, p, &offer, depth);
        self.path.remove(&key);
        if matches!(r, Ok(None)) && self.cycle_hits == hits {
            self.failed.insert(key);
        }
        r
    }

    fn step(&mut self, ctx: &Ctx, p: &ProcExpr, offer: &Offer, depth: usize) -> Found {
        match p {
            ProcExpr::Delay { count: n, origin, cont } => {
                let n = count(n);
                let mut shifted = Some((ctx.clone(), offer.clone()));
                for _ in 0..n {
                    shifted = shifted.and_then(|(c, o)| self.shifted(&c, &o));
                }
                if let Some((c, o)) = shifted {
                    if let Some(k) = self.go(c, cont, o, depth + 1)? {
                        return Ok(Some(ProcExpr::Delay {
                            count: crate::syntax::ParamExpr::Const(n),
                            origin: *origin,
                            cont: Box::new(k),
                        }));
                    }
                } else {
                    self.fail(depth, false, "a delay is required here but not every channel can wait".into(), ctx, offer)?;
                }
                let mut moves = self.temporal_moves(ctx, offer);
                moves.retain(|m| *m != Move::Delay);
                self.try_moves(moves, ctx, p, offer, depth)
            }
            ProcExpr::Fwd { dest, src } => self.forward(ctx, dest, src, offer, depth),
            ProcExpr::Spawn { .. } | ProcExpr::TailCall { .. } | ProcExpr::Cut { .. } => {
                if let Some(r) = self.call(ctx, p, offer, depth)? {
                    return Ok(Some(r));
                }
                let moves = self.temporal_moves(ctx, offer);
                self.try_moves(moves, ctx, p, offer, depth)
            }
            _ => self.principal(ctx, p, offer, depth),
        }
    }

    fn forward(&mut self, ctx: &Ctx, dest: &Var, src: &Var, offer: &Offer, depth: usize) -> Found {
        if *dest != offer.0 || ctx.len() != 1 || ctx[0].0 != *src {
            return self.fail(depth, true, format!("forward `{dest} <- {src}` does not match the sequent"), ctx, offer);
        }
        if self.equal(&ctx[0].1, &offer.1) {
            return Ok(Some(ProcExpr::fwd(dest, src)));
        }
        let moves = vec![Move::Delay, Move::BoxR, Move::DiamondL(src.clone()), Move::BoxL(src.clone()), Move::DiamondR];
        let r = self.try_moves_on_fwd(moves, ctx, dest, src, offer, depth)?;
        if r.is_none() {
            self.fail(depth, false, format!("`{src}` cannot be forwarded to `{dest}`: not a subtype"), ctx, offer)?;
        }
        Ok(r)
    }

    fn try_moves_on_fwd(
        &mut self,
        moves: Vec<Move>,
        ctx: &Ctx,
        dest: &Var,
        src: &Var,
        offer: &Offer,
        depth: usize,
    ) -> Found {
        for m in moves {
            let Some((c, o)) = self.apply_move(&m, ctx, offer) else { continue };
            if let Some(k) = self.forward_goal(c, dest, src, o, depth)? {
                return Ok(Some(wrap(&m, &offer.0, k)));
            }
        }
        Ok(None)
    }

    /// Forward search, memoized on the sequent alone (key 0 never clashes
    /// with a node address).
    fn forward_goal(&mut self, ctx: Ctx, dest: &Var, src: &Var, offer: Offer, depth: usize) -> Found {
        let key: Key = (0, canon(&ctx), offer.clone());
        if self.path.contains(&key) {
            self.cycle_hits += 1;
            return Ok(None);
        }
        if self.failed.contains(&key) {
            return Ok(None);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Budget);
        }
        let hits = self.cycle_hits;
        self.path.insert(key.clone());
        let r = self.forward(&ctx, dest, src, &offer, depth);
        self.path.remove(&key);
        if matches!(r, Ok(None)) && self.cycle_hits == hits {
            self.failed.insert(key);
        }
        r
    }

    /// Elaborates the forward `dest <- src` at `src : from |- dest : to` in a
    /// separate search.
    fn coercion(&mut self, src: &Var, from: &SessionType, dest: &Var, to: &SessionType) -> Result<Option<ProcExpr>, Budget> {
        let mut sub = Elaborator::new(self.env).with_budget(self.budget);
        let ctx = vec![(src.clone(), from.clone())];
        let r = sub.forward_goal(ctx, dest, src, (dest.clone(), to.clone()), 0);
        self.nodes += sub.nodes;
        r
    }

    /// Coerces call arguments to their declared types. Returns the channels
    /// to pass and the coercion cuts to wrap around the call.
    #[allow(clippy::type_complexity)]
    fn arguments(
        &mut self,
        ctx: &mut Ctx,
        decl: &ProcDecl,
        chans: &[Var],
        depth: usize,
        whole: &Ctx,
        offer: &Offer,
    ) -> Result<Option<(Vec<Var>, Vec<(Var, SessionType, ProcExpr)>)>, Budget> {
        if decl.ctx.len() != chans.len() {
            self.fail(depth, true, format!("`{}` expects {} channels", decl.name, decl.ctx.len()), whole, offer)?;
            return Ok(None);
        }
        let mut passed = Vec::new();
        let mut cuts = Vec::new();
        for ((_, want), y) in decl.ctx.iter().zip(chans) {
            let Some(have) = take(ctx, y) else {
                self.fail(depth, true, format!("unknown or reused channel `{y}`"), whole, offer)?;
                return Ok(None);
            };
            if self.equal(&have, want) {
                passed.push(y.clone());
                continue;
            }
            if !is_subtype(&self.env.types, &have, want).unwrap_or(false) {
                self.fail(
                    depth,
                    false,
                    format!("argument `{y}` of `{}` is not a subtype of the declared type", decl.name),
                    whole,
                    offer,
                )?;
                return Ok(None);
            }
            let y2 = self.fresh(y);
            let Some(body) = self.coercion(y, &have, &y2, want)? else {
                self.fail(depth, false, format!("no coercion for argument `{y}`"), whole, offer)?;
                return Ok(None);
            };
            cuts.push((y2.clone(), want.clone(), body));
            passed.push(y2);
        }
        Ok(Some((passed, cuts)))
    }

    fn with_cuts(mut p: ProcExpr, cuts: Vec<(Var, SessionType, ProcExpr)>) -> ProcExpr {
        for (y, t, body) in cuts.into_iter().rev() {
            p = ProcExpr::Cut { dest: y, annot: t, body: Box::new(body), cont: Box::new(p), origin: Origin::Reconstructed };
        }
        p
    }

    fn call(&mut self, ctx: &Ctx, p: &ProcExpr, offer: &Offer, depth: usize) -> Found {
        match p {
            ProcExpr::Spawn { dest, proc, args, chans, cont, origin } => {
                let Some(decl) = self.env.decls.get(proc).cloned() else {
                    return self.fail(depth, true, format!("unknown process `{proc}`"), ctx, offer);
                };
                if *dest == offer.0 || lookup(ctx, dest).is_some() {
                    return self.fail(depth, true, format!("`{dest}` is already in scope"), ctx, offer);
                }
                let mut rest = ctx.clone();
                let Some((passed, cuts)) = self.arguments(&mut rest, &decl, chans, depth, ctx, offer)? else {
                    return Ok(None);
                };
                rest.push((dest.clone(), decl.offer.1.clone()));
                let Some(k) = self.go(rest, cont, offer.clone(), depth + 1)? else { return Ok(None) };
                let spawn = ProcExpr::Spawn {
                    dest: dest.clone(),
                    proc: proc.clone(),
                    args: args.clone(),
                    chans: passed,
                    cont: Box::new(k),
                    origin: *origin,
                };
                Ok(Some(Self::with_cuts(spawn, cuts)))
            }
            ProcExpr::TailCall { dest, proc, args, chans } => {
                let Some(decl) = self.env.decls.get(proc).cloned() else {
                    return self.fail(depth, true, format!("unknown process `{proc}`"), ctx, offer);
                };
                if *dest != offer.0 {
                    return self.fail(depth, true, format!("tail call must define `{}`", offer.0), ctx, offer);
                }
                let mut rest = ctx.clone();
                let Some((passed, cuts)) = self.arguments(&mut rest, &decl, chans, depth, ctx, offer)? else {
                    return Ok(None);
                };
                if !rest.is_empty() {
                    return self.fail(depth, true, "channels left unused at a tail call".into(), ctx, offer);
                }
                let provided = &decl.offer.1;
                let call = if self.equal(provided, &offer.1) {
                    ProcExpr::TailCall { dest: dest.clone(), proc: proc.clone(), args: args.clone(), chans: passed }
                } else if is_subtype(&self.env.types, provided, &offer.1).unwrap_or(false) {
                    let x2 = self.fresh(dest);
                    let Some(k) = self.coercion(&x2, provided, dest, &offer.1)? else {
                        return self.fail(depth, false, "no coercion for the offered channel".into(), ctx, offer);
                    };
                    ProcExpr::Spawn {
                        dest: x2,
                        proc: proc.clone(),
                        args: args.clone(),
                        chans: passed,
                        cont: Box::new(k),
                        origin: Origin::Reconstructed,
                    }
                } else {
                    return self.fail(
                        depth,
                        false,
                        format!("`{proc}` offers a type that is not a subtype of the goal"),
                        ctx,
                        offer,
                    );
                };
                Ok(Some(Self::with_cuts(call, cuts)))
            }
            ProcExpr::Cut { dest, annot, body, cont, origin } => {
                if *dest == offer.0 || lookup(ctx, dest).is_some() {
                    return self.fail(depth, true, format!("`{dest}` is already in scope"), ctx, offer);
                }
                let fv = body.free_chans();
                let (used, mut rest): (Ctx, Ctx) = ctx.iter().cloned().partition(|(x, _)| fv.contains(x));
                let Some(b) = self.go(used, body, (dest.clone(), annot.clone()), depth + 1)? else { return Ok(None) };
                rest.push((dest.clone(), annot.clone()));
                let Some(k) = self.go(rest, cont, offer.clone(), depth + 1)? else { return Ok(None) };
                Ok(Some(ProcExpr::Cut {
                    dest: dest.clone(),
                    annot: annot.clone(),
                    body: Box::new(b),
                    cont: Box::new(k),
                    origin: *origin,
                }))
            }
            _ => unreachable!("call() is only used on calls and cuts"),
        }
    }

    /// Handles actions on a single principal channel.
    fn principal(&mut self, ctx: &Ctx, p: &ProcExpr, offer: &Offer, depth: usize) -> Found {
        let (chan, want) = match p {
            ProcExpr::SendLabel { chan, .. } => (chan, if *chan == offer.0 { Head::Plus } else { Head::With }),
            ProcExpr::Case { chan, .. } => (chan, if *chan == offer.0 { Head::With } else { Head::Plus }),
            ProcExpr::Close { chan } | ProcExpr::Wait { chan, .. } => (chan, Head::One),
            ProcExpr::SendChan { chan, .. } => (chan, if *chan == offer.0 { Head::Tensor } else { Head::Lolli }),
            ProcExpr::RecvChan { chan, .. } => (chan, if *chan == offer.0 { Head::Lolli } else { Head::Tensor }),
            ProcExpr::When { chan, .. } => (chan, if *chan == offer.0 { Head::Box } else { Head::Diamond }),
            ProcExpr::Now { chan, .. } => (chan, if *chan == offer.0 { Head::Diamond } else { Head::Box }),
            _ => unreachable!(),
        };
        let is_offer = *chan == offer.0;
        let ty = if is_offer {
            offer.1.clone()
        } else if let Some(t) = lookup(ctx, chan) {
            t.clone()
        } else {
            return self.fail(depth, true, format!("unknown channel `{chan}`"), ctx, offer);
        };
        let t = whnf(&self.env.types, &ty);
        if head(&t) == Some(want) {
            return self.structural(ctx, p, offer, depth);
        }
        let primary = match (&t, is_offer) {
            (SessionType::Next(..), _) => vec![Move::Delay],
            (SessionType::Box(_), true) => vec![Move::BoxR],
            (SessionType::Box(_), false) => vec![Move::BoxL(chan.clone()), Move::Delay],
            (SessionType::Diamond(_), true) => vec![Move::DiamondR, Move::Delay],
            (SessionType::Diamond(_), false) => vec![Move::DiamondL(chan.clone())],
            _ => {
                return self.fail(
                    depth,
                    true,
                    format!("action on `{chan}` does not match its type {}", crate::types::show(&ty)),
                    ctx,
                    offer,
                )
            }
        };
        let mut moves = primary;
        moves.extend(self.temporal_moves(ctx, offer));
        let r = self.try_moves(moves, ctx, p, offer, depth)?;
        if r.is_none() {
            self.fail(depth, false, format!("cannot bring `{chan}` to the point where it can act"), ctx, offer)?;
        }
        Ok(r)
    }

    fn structural(&mut self, ctx: &Ctx, p: &ProcExpr, offer: &Offer, depth: usize) -> Found {
        let te = &self.env.types;
        let d = depth + 1;
        match p {
            ProcExpr::SendLabel { chan, label, cont } => {
                let (bs, is_offer) = match (whnf(te, if *chan == offer.0 { &offer.1 } else { lookup(ctx, chan).unwrap() }), *chan == offer.0) {
                    (SessionType::Plus(bs), true) | (SessionType::With(bs), false) => (bs, *chan == offer.0),
                    _ => unreachable!(),
                };
                let Some(t) = branch(&bs, label).cloned() else {
                    return self.fail(depth, true, format!("label `{label}` is not available on `{chan}`"), ctx, offer);
                };
                let (c, o) = if is_offer {
                    (ctx.clone(), (offer.0.clone(), t))
                } else {
                    let mut c = ctx.clone();
                    set(&mut c, chan, t);
                    (c, offer.clone())
                };
                let Some(k) = self.go(c, cont, o, d)? else { return Ok(None) };
                Ok(Some(ProcExpr::SendLabel { chan: chan.clone(), label: label.clone(), cont: Box::new(k) }))
            }
            ProcExpr::Case { chan, branches } => {
                let is_offer = *chan == offer.0;
                let bs = match whnf(te, if is_offer { &offer.1 } else { lookup(ctx, chan).unwrap() }) {
                    SessionType::With(bs) | SessionType::Plus(bs) => bs,
                    _ => unreachable!(),
                };
                if !same_labels(&bs, branches) {
                    return self.fail(depth, true, format!("branches of `case {chan}` do not match its labels"), ctx, offer);
                }
                let mut out = Vec::new();
                for (l, q) in branches {
                    let t = branch(&bs, l).unwrap().clone();
                    let (c, o) = if is_offer {
                        (ctx.clone(), (offer.0.clone(), t))
                    } else {
                        let mut c = ctx.clone();
                        set(&mut c, chan, t);
                        (c, offer.clone())
                    };
                    let Some(k) = self.go(c, q, o, d)? else { return Ok(None) };
                    out.push((l.clone(), k));
                }
                Ok(Some(ProcExpr::Case { chan: chan.clone(), branches: out }))
            }
            ProcExpr::Close { chan } => {
                if *chan != offer.0 {
                    return self.fail(depth, true, format!("`close {chan}` must act on the offered channel"), ctx, offer);
                }
                if !ctx.is_empty() {
                    return self.fail(depth, true, "channels left unused at `close`".into(), ctx, offer);
                }
                Ok(Some(p.clone()))
            }
            ProcExpr::Wait { chan, cont } => {
                if *chan == offer.0 {
                    return self.fail(depth, true, "`wait` on the offered channel".into(), ctx, offer);
                }
                let mut c = ctx.clone();
                take(&mut c, chan);
                let Some(k) = self.go(c, cont, offer.clone(), d)? else { return Ok(None) };
                Ok(Some(ProcExpr::Wait { chan: chan.clone(), cont: Box::new(k) }))
            }
            ProcExpr::SendChan { chan, payload, cont } => {
                let mut c = ctx.clone();
                let Some(pt) = take(&mut c, payload) else {
                    return self.fail(depth, true, format!("unknown channel `{payload}`"), ctx, offer);
                };
                let is_offer = *chan == offer.0;
                let (a, b) = match whnf(te, if is_offer { &offer.1 } else { lookup(&c, chan).unwrap() }) {
                    SessionType::Tensor(a, b) | SessionType::Lolli(a, b) => (*a, *b),
                    _ => unreachable!(),
                };
                if !self.equal(&a, &pt) {
                    return self.fail(depth, false, format!("`{payload}` does not have the type expected by `send {chan}`"), ctx, offer);
                }
                let o = if is_offer {
                    (offer.0.clone(), b)
                } else {
                    set(&mut c, chan, b);
                    offer.clone()
                };
                let Some(k) = self.go(c, cont, o, d)? else { return Ok(None) };
                Ok(Some(ProcExpr::SendChan { chan: chan.clone(), payload: payload.clone(), cont: Box::new(k) }))
            }
            ProcExpr::RecvChan { bind, chan, cont } => {
                if *bind == offer.0 || lookup(ctx, bind).is_some() {
                    return self.fail(depth, true, format!("`{bind}` is already in scope"), ctx, offer);
                }
                let is_offer = *chan == offer.0;
                let mut c = ctx.clone();
                let (a, b) = match whnf(te, if is_offer { &offer.1 } else { lookup(&c, chan).unwrap() }) {
                    SessionType::Tensor(a, b) | SessionType::Lolli(a, b) => (*a, *b),
                    _ => unreachable!(),
                };
                let o = if is_offer {
                    (offer.0.clone(), b)
                } else {
                    set(&mut c, chan, b);
                    offer.clone()
                };
                c.push((bind.clone(), a));
                let Some(k) = self.go(c, cont, o, d)? else { return Ok(None) };
                Ok(Some(ProcExpr::RecvChan { bind: bind.clone(), chan: chan.clone(), cont: Box::new(k) }))
            }
            ProcExpr::When { chan, cont, origin } | ProcExpr::Now { chan, cont, origin } => {
                let is_when = matches!(p, ProcExpr::When { .. });
                let m = match (is_when, *chan == offer.0) {
                    (true, true) => Move::BoxR,
                    (true, false) => Move::DiamondL(chan.clone()),
                    (false, true) => Move::DiamondR,
                    (false, false) => Move::BoxL(chan.clone()),
                };
                let Some((c, o)) = self.apply_move(&m, ctx, offer) else {
                    return self.fail(depth, false, format!("side conditions fail for the action on `{chan}`"), ctx, offer);
                };
                let Some(k) = self.go(c, cont, o, d)? else { return Ok(None) };
                let cont = Box::new(k);
                Ok(Some(if is_when {
                    ProcExpr::When { chan: chan.clone(), cont, origin: *origin }
                } else {
                    ProcExpr::Now { chan: chan.clone(), cont, origin: *origin }
                }))
            }
            _ => unreachable!(),
        }
    }

    fn into_error(self, kind: Option<ErrorKind>) -> ReconstructError {
        match self.deepest {
            Some(f) => ReconstructError {
                kind: kind.unwrap_or(if f.skeleton { ErrorKind::Skeleton } else { ErrorKind::Temporal }),
                def: None,
                pos: None,
                msg: f.msg,
                sequent: checker::render_sequent(&f.sequent.0, &f.sequent.1),
            },
            None => ReconstructError {
                kind: kind.unwrap_or(ErrorKind::Temporal),
                def: None,
                pos: None,
                msg: "no derivation found".into(),
                sequent: String::new(),
            },
        }
    }
}

fn reserved(p: &ProcExpr) -> Option<&'static str> {
    let mut bad = None;
    p.walk(&mut |q| {
        let origin = match q {
            ProcExpr::Delay { origin, .. }
            | ProcExpr::When { origin, .. }
            | ProcExpr::Now { origin, .. }
            | ProcExpr::Cut { origin, .. }
            | ProcExpr::Spawn { origin, .. } => *origin,
            _ => return,
        };
        if origin == Origin::Reconstructed {
            bad = Some("input already contains reconstructed actions");
        }
    });
    bad
}

/// Elaborates `ctx |- p :: offer` into an explicit process.
pub fn elaborate_process(env: &Env, ctx: &Ctx, p: &ProcExpr, offer: &Offer) -> Result<ProcExpr, ReconstructError> {
    elaborate_with_budget(env, ctx, p, offer, DEFAULT_NODE_BUDGET)
}

pub fn elaborate_with_budget(
    env: &Env,
    ctx: &Ctx,
    p: &ProcExpr,
    offer: &Offer,
    budget: usize,
) -> Result<ProcExpr, ReconstructError> {
    if let Some(msg) = reserved(p) {
        return Err(ReconstructError {
            kind: ErrorKind::Precondition,
            def: None,
            pos: None,
            msg: msg.into(),
            sequent: String::new(),
        });
    }
    let mut el = Elaborator::new(env).with_budget(budget);
    p.all_names(&mut el.names);
    el.names.extend(ctx.iter().map(|(x, _)| x.clone()));
    el.names.insert(offer.0.clone());
    match el.go(ctx.clone(), p, offer.clone(), 0) {
        Ok(Some(q)) => Ok(q),
        Ok(None) => Err(el.into_error(None)),
        Err(Budget) => {
            let mut e = el.into_error(Some(ErrorKind::Budget));
            e.msg = format!("gave up after {budget} search nodes; {}", e.msg);
            Err(e)
        }
    }
}

pub fn elaborate_definition(env: &Env, def: &ProcDef) -> Result<ProcDef, ReconstructError> {
    let located = |mut e: ReconstructError| {
        e.def = Some(def.name.clone());
        e.pos = Some(def.pos);
        e
    };
    let decl = env.decls.get(&def.name).ok_or_else(|| {
        located(ReconstructError {
            kind: ErrorKind::Skeleton,
            def: None,
            pos: None,
            msg: "missing declaration".into(),
            sequent: String::new(),
        })
    })?;
    let (ctx, offer) = checker::definition_sequent(decl, &def.dest, &def.chans);
    let body = elaborate_process(env, &ctx, &def.body, &offer).map_err(located)?;
    Ok(ProcDef { body, ..def.clone() })
}

/// Elaborates every definition of a ground signature.
pub fn elaborate_signature(sig: &Signature) -> Result<Signature, Vec<ReconstructError>> {
    let env = Env::new(sig).map_err(|e| {
        vec![ReconstructError {
            kind: ErrorKind::Skeleton,
            def: None,
            pos: None,
            msg: e.to_string(),
            sequent: String::new(),
        }]
    })?;
    elaborate_signature_in(&env, sig)
}

pub fn elaborate_signature_in(env: &Env, sig: &Signature) -> Result<Signature, Vec<ReconstructError>> {
    let mut errors = Vec::new();
    let mut items = Vec::with_capacity(sig.items.len());
    for item in &sig.items {
        match item {
            Item::Def(def) => match elaborate_definition(env, def) {
                Ok(d) => items.push(Item::Def(d)),
                Err(e) => {
                    errors.push(e);
                    items.push(item.clone());
                }
            },
            other => items.push(other.clone()),
        }
    }
    if errors.is_empty() {
        Ok(Signature { items })
    } else {
        Err(errors)
    }
}

/// Removes everything reconstruction inserted.
pub fn erase(p: &ProcExpr) -> ProcExpr {
    match p {
        ProcExpr::Delay { origin: Origin::Reconstructed, cont, .. }
        | ProcExpr::When { origin: Origin::Reconstructed, cont, .. }
        | ProcExpr::Now { origin: Origin::Reconstructed, cont, .. } => erase(cont),
        ProcExpr::Cut { origin: Origin::Reconstructed, dest, body, cont, .. } => {
            let inner = erase(cont);
            match erase(body) {
                ProcExpr::Fwd { src, .. } => inner.rename(&HashMap::from([(dest.clone(), src)])),
                _ => inner,
            }
        }
        ProcExpr::Spawn { origin: Origin::Reconstructed, dest, proc, args, chans, cont } => match erase(cont) {
            ProcExpr::Fwd { dest: x, src } if src == *dest => {
                ProcExpr::TailCall { dest: x, proc: proc.clone(), args: args.clone(), chans: chans.clone() }
            }
            other => ProcExpr::Spawn {
                dest: dest.clone(),
                proc: proc.clone(),
                args: args.clone(),
                chans: chans.clone(),
                cont: Box::new(other),
                origin: Origin::Source,
            },
        },
        ProcExpr::Spawn { dest, proc, args, chans, cont, origin } => ProcExpr::Spawn {
            dest: dest.clone(),
            proc: proc.clone(),
            args: args.clone(),
            chans: chans.clone(),
            cont: Box::new(erase(cont)),
            origin: *origin,
        },
        ProcExpr::Cut { dest, annot, body, cont, origin } => ProcExpr::Cut {
            dest: dest.clone(),
            annot: annot.clone(),
            body: Box::new(erase(body)),
            cont: Box::new(erase(cont)),
            origin: *origin,
        },
        ProcExpr::TailCall { .. } | ProcExpr::Fwd { .. } | ProcExpr::Close { .. } => p.clone(),
        ProcExpr::SendLabel { chan, label, cont } => {
            ProcExpr::SendLabel { chan: chan.clone(), label: label.clone(), cont: Box::new(erase(cont)) }
        }
        ProcExpr::Case { chan, branches } => ProcExpr::Case {
            chan: chan.clone(),
            branches: branches.iter().map(|(l, q)| (l.clone(), erase(q))).collect(),
        },
        ProcExpr::Wait { chan, cont } => ProcExpr::Wait { chan: chan.clone(), cont: Box::new(erase(cont)) },
        ProcExpr::SendChan { chan, payload, cont } => {
            ProcExpr::SendChan { chan: chan.clone(), payload: payload.clone(), cont: Box::new(erase(cont)) }
        }
        ProcExpr::RecvChan { bind, chan, cont } => {
            ProcExpr::RecvChan { bind: bind.clone(), chan: chan.clone(), cont: Box::new(erase(cont)) }
        }
        ProcExpr::Delay { count, origin, cont } => {
            ProcExpr::Delay { count: count.clone(), origin: *origin, cont: Box::new(erase(cont)) }
        }
        ProcExpr::When { chan, cont, origin } => ProcExpr::When { chan: chan.clone(), cont: Box::new(erase(cont)), origin: *origin },
        ProcExpr::Now { chan, cont, origin } => ProcExpr::Now { chan: chan.clone(), cont: Box::new(erase(cont)), origin: *origin },
    }
}

pub fn erase_signature(sig: &Signature) -> Signature {
    let mut out = sig.clone();
    for d in out.defs_mut() {
        d.body = erase(&d.body);
    }
    out
}

/// Whether `y : a |- x <- y :: (x : b)` elaborates.
pub fn forward_elaborates(env: &Env, a: &SessionType, b: &SessionType) -> Result<bool, ReconstructError> {
    let ctx = vec![("y".to_string(), a.clone())];
    let offer = ("x".to_string(), b.clone());
    let mut el = Elaborator::new(env);
    el.names.extend(["x".to_string(), "y".to_string()]);
    match el.go(ctx, &ProcExpr::fwd("x", "y"), offer, 0) {
        Ok(found) => Ok(found.is_some()),
        Err(Budget) => Err(el.into_error(Some(ErrorKind::Budget))),
    }
}
