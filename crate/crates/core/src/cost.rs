//! Cost models: mechanical insertion of `tick` delays into cost-free source.
//!
//! Under `R` every receive costs one unit, so a tick opens each case branch
//! and follows every `wait` and `recv`. Under `RS` sends cost one unit too,
//! and a tick also follows every label send and channel send. Forwards,
//! spawns, cuts and the `when?`/`now!` pair are free in both models.

use std::fmt;
use std::str::FromStr;

use crate::syntax::{Origin, ProcExpr, Signature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CostModel {
    Free,
    R,
    RS,
}

impl CostModel {
    pub const ALL: [CostModel; 3] = [CostModel::Free, CostModel::R, CostModel::RS];

    fn ticks_sends(self) -> bool {
        self == CostModel::RS
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostModel::Free => "free",
            CostModel::R => "r",
            CostModel::RS => "rs",
        })
    }
}

impl FromStr for CostModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "free" => Ok(CostModel::Free),
            "r" => Ok(CostModel::R),
            "rs" => Ok(CostModel::RS),
            other => Err(format!("unknown cost model `{other}` (expected free, r or rs)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("definition `{def}` already contains ticks")]
pub struct InstrumentError {
    pub def: String,
}

fn has_ticks(p: &ProcExpr) -> bool {
    let mut found = false;
    p.walk(&mut |q| {
        if matches!(q, ProcExpr::Delay { origin: Origin::Tick, .. }) {
            found = true;
        }
    });
    found
}

fn tick(p: ProcExpr) -> Box<ProcExpr> {
    Box::new(ProcExpr::delay(Origin::Tick, p))
}

/// Inserts the ticks of `model` into a single process expression.
pub fn instrument_process(p: &ProcExpr, model: CostModel) -> ProcExpr {
    if model == CostModel::Free {
        return p.clone();
    }
    let go = |q: &ProcExpr| instrument_process(q, model);
    match p {
        ProcExpr::Case { chan, branches } => ProcExpr::Case {
            chan: chan.clone(),
            branches: branches.iter().map(|(l, q)| (l.clone(), *tick(go(q)))).collect(),
        },
        ProcExpr::Wait { chan, cont } => ProcExpr::Wait { chan: chan.clone(), cont: tick(go(cont)) },
        ProcExpr::RecvChan { bind, chan, cont } => {
            ProcExpr::RecvChan { bind: bind.clone(), chan: chan.clone(), cont: tick(go(cont)) }
        }
        ProcExpr::SendLabel { chan, label, cont } => {
            let cont = go(cont);
            ProcExpr::SendLabel {
                chan: chan.clone(),
                label: label.clone(),
                cont: if model.ticks_sends() { tick(cont) } else { Box::new(cont) },
            }
        }
        ProcExpr::SendChan { chan, payload, cont } => {
            let cont = go(cont);
            ProcExpr::SendChan {
                chan: chan.clone(),
                payload: payload.clone(),
                cont: if model.ticks_sends() { tick(cont) } else { Box::new(cont) },
            }
        }
        ProcExpr::Spawn { dest, proc, args, chans, cont, origin } => ProcExpr::Spawn {
            dest: dest.clone(),
            proc: proc.clone(),
            args: args.clone(),
            chans: chans.clone(),
            cont: Box::new(go(cont)),
            origin: *origin,
        },
        ProcExpr::Cut { dest, annot, body, cont, origin } => ProcExpr::Cut {
            dest: dest.clone(),
            annot: annot.clone(),
            body: Box::new(go(body)),
            cont: Box::new(go(cont)),
            origin: *origin,
        },
        ProcExpr::Delay { count, origin, cont } => {
            ProcExpr::Delay { count: count.clone(), origin: *origin, cont: Box::new(go(cont)) }
        }
        ProcExpr::When { chan, cont, origin } => {
            ProcExpr::When { chan: chan.clone(), cont: Box::new(go(cont)), origin: *origin }
        }
        ProcExpr::Now { chan, cont, origin } => {
            ProcExpr::Now { chan: chan.clone(), cont: Box::new(go(cont)), origin: *origin }
        }
        ProcExpr::TailCall { .. } | ProcExpr::Fwd { .. } | ProcExpr::Close { .. } => p.clone(),
    }
}

/// Instruments every process definition of `sig`. Refuses input that has
/// already been instrumented.
pub fn instrument(sig: &Signature, model: CostModel) -> Result<Signature, InstrumentError> {
    for d in sig.defs() {
        if has_ticks(&d.body) {
            return Err(InstrumentError { def: d.name.clone() });
        }
    }
    let mut out = sig.clone();
    for d in out.defs_mut() {
        d.body = instrument_process(&d.body, model);
    }
    Ok(out)
}

/// Removes every tick, recovering the cost-free source.
pub fn strip_ticks(p: &ProcExpr) -> ProcExpr {
    let go = |q: &ProcExpr| Box::new(strip_ticks(q));
    match p {
        ProcExpr::Delay { origin: Origin::Tick, cont, .. } => strip_ticks(cont),
        ProcExpr::Delay { count, origin, cont } => ProcExpr::Delay { count: count.clone(), origin: *origin, cont: go(cont) },
        ProcExpr::Case { chan, branches } => ProcExpr::Case {
            chan: chan.clone(),
            branches: branches.iter().map(|(l, q)| (l.clone(), strip_ticks(q))).collect(),
        },
        ProcExpr::Wait { chan, cont } => ProcExpr::Wait { chan: chan.clone(), cont: go(cont) },
        ProcExpr::RecvChan { bind, chan, cont } => {
            ProcExpr::RecvChan { bind: bind.clone(), chan: chan.clone(), cont: go(cont) }
        }
        ProcExpr::SendLabel { chan, label, cont } => {
            ProcExpr::SendLabel { chan: chan.clone(), label: label.clone(), cont: go(cont) }
        }
        ProcExpr::SendChan { chan, payload, cont } => {
            ProcExpr::SendChan { chan: chan.clone(), payload: payload.clone(), cont: go(cont) }
        }
        ProcExpr::Spawn { dest, proc, args, chans, cont, origin } => ProcExpr::Spawn {
            dest: dest.clone(),
            proc: proc.clone(),
            args: args.clone(),
            chans: chans.clone(),
            cont: go(cont),
            origin: *origin,
        },
        ProcExpr::Cut { dest, annot, body, cont, origin } => ProcExpr::Cut {
            dest: dest.clone(),
            annot: annot.clone(),
            body: go(body),
            cont: go(cont),
            origin: *origin,
        },
        ProcExpr::When { chan, cont, origin } => ProcExpr::When { chan: chan.clone(), cont: go(cont), origin: *origin },
        ProcExpr::Now { chan, cont, origin } => ProcExpr::Now { chan: chan.clone(), cont: go(cont), origin: *origin },
        ProcExpr::TailCall { .. } | ProcExpr::Fwd { .. } | ProcExpr::Close { .. } => p.clone(),
    }
}

pub fn strip_signature(sig: &Signature) -> Signature {
    let mut out = sig.clone();
    for d in out.defs_mut() {
        d.body = strip_ticks(&d.body);
    }
    out
}
