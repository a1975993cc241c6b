//! The explicit typechecker. Every rule is selected by the head of the
//! process and by which side of the sequent the channel sits on; temporal
//! actions (`delay`, `when?`, `now!`) must be written out.

use std::collections::HashMap;
use std::fmt;

use crate::syntax::{ProcDecl, ProcExpr, Pos, SessionType, Signature, Var};
use crate::types::{self, count, shift_left, shift_right, type_equal, whnf, Patience, TypeEnv, TypeOpsError};

/// An ordered context of distinct channel declarations.
pub type Ctx = Vec<(Var, SessionType)>;

/// A ground signature prepared for checking.
#[derive(Clone, Debug)]
pub struct Env {
    pub types: TypeEnv,
    pub decls: HashMap<String, ProcDecl>,
}

impl Env {
    pub fn new(sig: &Signature) -> Result<Env, TypeOpsError> {
        let types = TypeEnv::new(sig)?;
        let mut decls = HashMap::new();
        for d in sig.decls() {
            if !d.pats.is_empty() {
                return Err(TypeOpsError::NotGround(d.name.clone()));
            }
            decls.insert(d.name.clone(), d.clone());
        }
        Ok(Env { types, decls })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub def: Option<String>,
    pub pos: Option<Pos>,
    pub rule: String,
    pub msg: String,
    pub expected: Option<String>,
    pub found: Option<String>,
    pub ctx: String,
}

impl TypeError {
    pub fn new(rule: &str, msg: impl Into<String>) -> TypeError {
        TypeError {
            def: None,
            pos: None,
            rule: rule.to_string(),
            msg: msg.into(),
            expected: None,
            found: None,
            ctx: String::new(),
        }
    }

    pub fn types(mut self, expected: &SessionType, found: &SessionType) -> TypeError {
        self.expected = Some(types::show(expected));
        self.found = Some(types::show(found));
        self
    }

    pub fn snapshot(mut self, ctx: &Ctx, offer: &(Var, SessionType)) -> TypeError {
        if self.ctx.is_empty() {
            self.ctx = render_sequent(ctx, offer);
        }
        self
    }

    pub fn located(mut self, def: &str, pos: Pos) -> TypeError {
        self.def.get_or_insert_with(|| def.to_string());
        self.pos.get_or_insert(pos);
        self
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(d) = &self.def {
            write!(f, "in `{d}`")?;
            if let Some(p) = self.pos {
                write!(f, " ({p})")?;
            }
            write!(f, ": ")?;
        }
        write!(f, "rule {}: {}", self.rule, self.msg)?;
        if let (Some(e), Some(g)) = (&self.expected, &self.found) {
            write!(f, "\n  expected: {e}\n  found:    {g}")?;
        }
        if !self.ctx.is_empty() {
            write!(f, "\n  sequent:  {}", self.ctx)?;
        }
        Ok(())
    }
}

impl std::error::Error for TypeError {}

pub fn render_sequent(ctx: &Ctx, offer: &(Var, SessionType)) -> String {
    let parts: Vec<String> = ctx.iter().map(|(x, t)| format!("{x} : {}", types::show(t))).collect();
    format!("{} |- {} : {}", parts.join(", "), offer.0, types::show(&offer.1))
}

fn ops(e: TypeOpsError) -> TypeError {
    TypeError::new("equality", e.to_string())
}

pub(crate) fn equal(env: &Env, a: &SessionType, b: &SessionType) -> Result<bool, TypeError> {
    type_equal(&env.types, a, b).map_err(ops)
}

pub(crate) fn take(ctx: &mut Ctx, x: &str) -> Option<SessionType> {
    let i = ctx.iter().position(|(y, _)| y == x)?;
    Some(ctx.remove(i).1)
}

pub(crate) fn lookup<'c>(ctx: &'c Ctx, x: &str) -> Option<&'c SessionType> {
    ctx.iter().find(|(y, _)| y == x).map(|(_, t)| t)
}

pub(crate) fn set(ctx: &mut Ctx, x: &str, t: SessionType) {
    if let Some(e) = ctx.iter_mut().find(|(y, _)| y == x) {
        e.1 = t;
    }
}

pub(crate) fn branch<'b>(bs: &'b [(String, SessionType)], l: &str) -> Option<&'b SessionType> {
    bs.iter().find(|(m, _)| m == l).map(|(_, t)| t)
}

pub(crate) fn same_labels<T>(bs: &[(String, SessionType)], ps: &[(String, T)]) -> bool {
    bs.len() == ps.len() && bs.iter().all(|(l, _)| ps.iter().any(|(m, _)| m == l))
}

/// Shifts every context entry left and the offer right by one unit.
pub fn shift_sequent(env: &Env, ctx: &Ctx, offer: &(Var, SessionType)) -> Result<(Ctx, (Var, SessionType)), TypeError> {
    let mut out = Vec::with_capacity(ctx.len());
    for (x, t) in ctx {
        match shift_left(&env.types, t) {
            Some(s) => out.push((x.clone(), s)),
            None => {
                return Err(TypeError::new("()LR", format!("channel `{x}` cannot be delayed: its type is not ()A or []A"))
                    .types(&SessionType::next_n(1, SessionType::name("_")), t))
            }
        }
    }
    match shift_right(&env.types, &offer.1) {
        Some(s) => Ok((out, (offer.0.clone(), s))),
        None => Err(TypeError::new(
            "()LR",
            format!("offered channel `{}` cannot be delayed: its type is not ()A or <>A", offer.0),
        )
        .types(&SessionType::next_n(1, SessionType::name("_")), &offer.1)),
    }
}

/// Checks `ctx |- p :: offer` in the explicit system.
pub fn check_process(env: &Env, ctx: &Ctx, p: &ProcExpr, offer: &(Var, SessionType)) -> Result<(), TypeError> {
    check(env, ctx.clone(), p, offer.clone())
}

fn check(env: &Env, mut ctx: Ctx, p: &ProcExpr, offer: (Var, SessionType)) -> Result<(), TypeError> {
    let snap = |e: TypeError, ctx: &Ctx, offer: &(Var, SessionType)| e.snapshot(ctx, offer);
    let te = &env.types;
    match p {
        ProcExpr::SendLabel { chan, label, cont } => {
            if *chan == offer.0 {
                let SessionType::Plus(bs) = whnf(te, &offer.1) else {
                    return Err(snap(TypeError::new("+R", format!("`{chan}` does not offer an internal choice")), &ctx, &offer));
                };
                let Some(t) = branch(&bs, label) else {
                    return Err(snap(TypeError::new("+R", format!("label `{label}` is not among the choices")), &ctx, &offer));
                };
                check(env, ctx, cont, (offer.0.clone(), t.clone()))
            } else {
                let Some(t) = lookup(&ctx, chan) else {
                    return Err(snap(TypeError::new("&L", format!("unknown channel `{chan}`")), &ctx, &offer));
                };
                let SessionType::With(bs) = whnf(te, t) else {
                    return Err(snap(TypeError::new("&L", format!("`{chan}` is not an external choice")), &ctx, &offer));
                };
                let Some(t) = branch(&bs, label).cloned() else {
                    return Err(snap(TypeError::new("&L", format!("label `{label}` is not offered")), &ctx, &offer));
                };
                set(&mut ctx, chan, t);
                check(env, ctx, cont, offer)
            }
        }
        ProcExpr::Case { chan, branches } => {
            if *chan == offer.0 {
                let SessionType::With(bs) = whnf(te, &offer.1) else {
                    return Err(snap(TypeError::new("&R", format!("`{chan}` does not offer an external choice")), &ctx, &offer));
                };
                if !same_labels(&bs, branches) {
                    return Err(snap(TypeError::new("&R", "branches do not match the labels of the choice"), &ctx, &offer));
                }
                for (l, q) in branches {
                    let t = branch(&bs, l).unwrap().clone();
                    check(env, ctx.clone(), q, (offer.0.clone(), t))?;
                }
                Ok(())
            } else {
                let Some(t) = lookup(&ctx, chan) else {
                    return Err(snap(TypeError::new("+L", format!("unknown channel `{chan}`")), &ctx, &offer));
                };
                let SessionType::Plus(bs) = whnf(te, t) else {
                    return Err(snap(TypeError::new("+L", format!("`{chan}` is not an internal choice")), &ctx, &offer));
                };
                if !same_labels(&bs, branches) {
                    return Err(snap(TypeError::new("+L", "branches do not match the labels of the choice"), &ctx, &offer));
                }
                for (l, q) in branches {
                    let mut c = ctx.clone();
                    set(&mut c, chan, branch(&bs, l).unwrap().clone());
                    check(env, c, q, offer.clone())?;
                }
                Ok(())
            }
        }
        ProcExpr::Close { chan } => {
            if *chan != offer.0 {
                return Err(snap(TypeError::new("1R", format!("`close` must be on the offered channel, not `{chan}`")), &ctx, &offer));
            }
            if whnf(te, &offer.1) != SessionType::One {
                return Err(snap(TypeError::new("1R", "offered type is not 1").types(&SessionType::One, &offer.1), &ctx, &offer));
            }
            if !ctx.is_empty() {
                let left: Vec<_> = ctx.iter().map(|(x, _)| x.as_str()).collect();
                return Err(snap(TypeError::new("1R", format!("channels left unused: {}", left.join(", "))), &ctx, &offer));
            }
            Ok(())
        }
        ProcExpr::Wait { chan, cont } => {
            let Some(t) = take(&mut ctx, chan) else {
                return Err(snap(TypeError::new("1L", format!("unknown channel `{chan}`")), &ctx, &offer));
            };
            if whnf(te, &t) != SessionType::One {
                return Err(snap(TypeError::new("1L", format!("`{chan}` is not of type 1")).types(&SessionType::One, &t), &ctx, &offer));
            }
            check(env, ctx, cont, offer)
        }
        ProcExpr::SendChan { chan, payload, cont } => {
            let Some(pt) = take(&mut ctx, payload) else {
                return Err(snap(TypeError::new("send", format!("unknown channel `{payload}`")), &ctx, &offer));
            };
            if *chan == offer.0 {
                let SessionType::Tensor(a, b) = whnf(te, &offer.1) else {
                    return Err(snap(TypeError::new("*R", format!("`{chan}` does not offer A * B")), &ctx, &offer));
                };
                if !equal(env, &a, &pt)? {
                    return Err(snap(TypeError::new("*R", format!("`{payload}` has the wrong type")).types(&a, &pt), &ctx, &offer));
                }
                check(env, ctx, cont, (offer.0.clone(), *b))
            } else {
                let Some(t) = lookup(&ctx, chan) else {
                    return Err(snap(TypeError::new("-oL", format!("unknown channel `{chan}`")), &ctx, &offer));
                };
                let SessionType::Lolli(a, b) = whnf(te, t) else {
                    return Err(snap(TypeError::new("-oL", format!("`{chan}` is not A -o B")), &ctx, &offer));
                };
                if !equal(env, &a, &pt)? {
                    return Err(snap(TypeError::new("-oL", format!("`{payload}` has the wrong type")).types(&a, &pt), &ctx, &offer));
                }
                set(&mut ctx, chan, *b);
                check(env, ctx, cont, offer)
            }
        }
        ProcExpr::RecvChan { bind, chan, cont } => {
            if *bind == offer.0 || lookup(&ctx, bind).is_some() {
                return Err(snap(TypeError::new("recv", format!("`{bind}` is already in scope")), &ctx, &offer));
            }
            if *chan == offer.0 {
                let SessionType::Lolli(a, b) = whnf(te, &offer.1) else {
                    return Err(snap(TypeError::new("-oR", format!("`{chan}` does not offer A -o B")), &ctx, &offer));
                };
                ctx.push((bind.clone(), *a));
                check(env, ctx, cont, (offer.0.clone(), *b))
            } else {
                let Some(t) = lookup(&ctx, chan) else {
                    return Err(snap(TypeError::new("*L", format!("unknown channel `{chan}`")), &ctx, &offer));
                };
                let SessionType::Tensor(a, b) = whnf(te, t) else {
                    return Err(snap(TypeError::new("*L", format!("`{chan}` is not A * B")), &ctx, &offer));
                };
                set(&mut ctx, chan, *b);
                ctx.push((bind.clone(), *a));
                check(env, ctx, cont, offer)
            }
        }
        ProcExpr::Fwd { dest, src } => {
            if *dest != offer.0 {
                return Err(snap(TypeError::new("id", format!("forward must define the offered channel, not `{dest}`")), &ctx, &offer));
            }
            if ctx.len() != 1 || ctx[0].0 != *src {
                return Err(snap(TypeError::new("id", format!("context must consist of exactly `{src}`")), &ctx, &offer));
            }
            if !equal(env, &ctx[0].1, &offer.1)? {
                return Err(snap(TypeError::new("id", "types on both sides of the forward differ").types(&offer.1, &ctx[0].1), &ctx, &offer));
            }
            Ok(())
        }
        ProcExpr::Cut { dest, annot, body, cont, .. } => {
            if *dest == offer.0 || lookup(&ctx, dest).is_some() {
                return Err(snap(TypeError::new("cut", format!("`{dest}` is already in scope")), &ctx, &offer));
            }
            let fv = body.free_chans();
            let (used, rest): (Ctx, Ctx) = ctx.iter().cloned().partition(|(x, _)| fv.contains(x));
            check(env, used, body, (dest.clone(), annot.clone()))?;
            let mut rest = rest;
            rest.push((dest.clone(), annot.clone()));
            check(env, rest, cont, offer)
        }
        ProcExpr::Spawn { dest, proc, chans, cont, .. } => {
            if *dest == offer.0 || lookup(&ctx, dest).is_some() {
                return Err(snap(TypeError::new("def", format!("`{dest}` is already in scope")), &ctx, &offer));
            }
            let decl = env
                .decls
                .get(proc)
                .ok_or_else(|| snap(TypeError::new("def", format!("unknown process `{proc}`")), &ctx, &offer))?;
            consume_args(env, &mut ctx, decl, chans).map_err(|e| snap(e, &ctx, &offer))?;
            ctx.push((dest.clone(), decl.offer.1.clone()));
            check(env, ctx, cont, offer)
        }
        ProcExpr::TailCall { dest, proc, chans, .. } => {
            let decl = env
                .decls
                .get(proc)
                .ok_or_else(|| snap(TypeError::new("def", format!("unknown process `{proc}`")), &ctx, &offer))?;
            if *dest != offer.0 {
                return Err(snap(TypeError::new("def", format!("tail call must define the offered channel, not `{dest}`")), &ctx, &offer));
            }
            if !equal(env, &decl.offer.1, &offer.1)? {
                return Err(snap(
                    TypeError::new("def", format!("`{proc}` offers a different type")).types(&offer.1, &decl.offer.1),
                    &ctx,
                    &offer,
                ));
            }
            let orig = ctx.clone();
            consume_args(env, &mut ctx, decl, chans).map_err(|e| snap(e, &orig, &offer))?;
            if !ctx.is_empty() {
                let left: Vec<_> = ctx.iter().map(|(x, _)| x.as_str()).collect();
                return Err(snap(TypeError::new("def", format!("channels left unused: {}", left.join(", "))), &orig, &offer));
            }
            Ok(())
        }
        ProcExpr::Delay { count: n, cont, .. } => {
            let (mut c, mut o) = (ctx, offer);
            for _ in 0..count(n) {
                (c, o) = shift_sequent(env, &c, &o).map_err(|e| e.snapshot(&c, &o))?;
            }
            check(env, c, cont, o)
        }
        ProcExpr::When { chan, cont, .. } => {
            if *chan == offer.0 {
                let SessionType::Box(a) = whnf(te, &offer.1) else {
                    return Err(snap(TypeError::new("[]R", format!("`{chan}` does not offer []A")), &ctx, &offer));
                };
                if let Some((x, t)) = ctx.iter().find(|(_, t)| !types::patient(te, t, Patience::Box)) {
                    return Err(snap(
                        TypeError::new("[]R", format!("`{x}` is not of the form ()^n []A")).types(&SessionType::boxed(SessionType::name("_")), t),
                        &ctx,
                        &offer,
                    ));
                }
                check(env, ctx, cont, (offer.0.clone(), *a))
            } else {
                let Some(t) = lookup(&ctx, chan) else {
                    return Err(snap(TypeError::new("<>L", format!("unknown channel `{chan}`")), &ctx, &offer));
                };
                let SessionType::Diamond(a) = whnf(te, t) else {
                    return Err(snap(TypeError::new("<>L", format!("`{chan}` is not <>A")), &ctx, &offer));
                };
                if let Some((x, t)) = ctx.iter().find(|(x, t)| x != chan && !types::patient(te, t, Patience::Box)) {
                    return Err(snap(
                        TypeError::new("<>L", format!("`{x}` is not of the form ()^n []A")).types(&SessionType::boxed(SessionType::name("_")), t),
                        &ctx,
                        &offer,
                    ));
                }
                if !types::patient(te, &offer.1, Patience::Diamond) {
                    return Err(snap(
                        TypeError::new("<>L", "offered type is not of the form ()^n <>A")
                            .types(&SessionType::diamond(SessionType::name("_")), &offer.1),
                        &ctx,
                        &offer,
                    ));
                }
                set(&mut ctx, chan, *a);
                check(env, ctx, cont, offer)
            }
        }
        ProcExpr::Now { chan, cont, .. } => {
            if *chan == offer.0 {
                let SessionType::Diamond(a) = whnf(te, &offer.1) else {
                    return Err(snap(TypeError::new("<>R", format!("`{chan}` does not offer <>A")), &ctx, &offer));
                };
                check(env, ctx, cont, (offer.0.clone(), *a))
            } else {
                let Some(t) = lookup(&ctx, chan) else {
                    return Err(snap(TypeError::new("[]L", format!("unknown channel `{chan}`")), &ctx, &offer));
                };
                let SessionType::Box(a) = whnf(te, t) else {
                    return Err(snap(TypeError::new("[]L", format!("`{chan}` is not []A")), &ctx, &offer));
                };
                set(&mut ctx, chan, *a);
                check(env, ctx, cont, offer)
            }
        }
    }
}

/// Removes the call arguments from `ctx`, requiring each to have exactly the
/// declared type.
fn consume_args(env: &Env, ctx: &mut Ctx, decl: &ProcDecl, chans: &[Var]) -> Result<(), TypeError> {
    if decl.ctx.len() != chans.len() {
        return Err(TypeError::new(
            "def",
            format!("`{}` expects {} channels, given {}", decl.name, decl.ctx.len(), chans.len()),
        ));
    }
    for ((_, want), y) in decl.ctx.iter().zip(chans) {
        let Some(have) = take(ctx, y) else {
            return Err(TypeError::new("def", format!("unknown or reused channel `{y}`")));
        };
        if !equal(env, want, &have)? {
            return Err(TypeError::new("def", format!("argument `{y}` of `{}` has the wrong type", decl.name)).types(want, &have));
        }
    }
    Ok(())
}

/// Checks every process definition against its declaration, collecting one
/// error per failing definition.
pub fn check_signature(sig: &Signature) -> Result<(), Vec<TypeError>> {
    let env = Env::new(sig).map_err(|e| vec![TypeError::new("signature", e.to_string())])?;
    check_signature_in(&env, sig)
}

pub fn check_signature_in(env: &Env, sig: &Signature) -> Result<(), Vec<TypeError>> {
    let mut errors = Vec::new();
    for def in sig.defs() {
        let Some(decl) = env.decls.get(&def.name) else {
            errors.push(TypeError::new("def", "missing declaration").located(&def.name, def.pos));
            continue;
        };
        if let Err(e) = check_definition(env, decl, &def.dest, &def.chans, &def.body) {
            errors.push(e.located(&def.name, def.pos));
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// The declared sequent of a definition, with the declaration's channel
/// names replaced by those the definition binds.
pub fn definition_sequent(decl: &ProcDecl, dest: &Var, chans: &[Var]) -> (Ctx, (Var, SessionType)) {
    let ctx = decl.ctx.iter().zip(chans).map(|((_, t), y)| (y.clone(), t.clone())).collect();
    (ctx, (dest.clone(), decl.offer.1.clone()))
}

pub fn check_definition(env: &Env, decl: &ProcDecl, dest: &Var, chans: &[Var], body: &ProcExpr) -> Result<(), TypeError> {
    let (ctx, offer) = definition_sequent(decl, dest, chans);
    check_process(env, &ctx, body, &offer)
}
