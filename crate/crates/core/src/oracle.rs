//! Independent references used to test the main procedures.
//!
//! * [`universe`] enumerates small temporal types over `1`.
//! * [`exhaustive_subtype`] decides subtyping by trying every rule at every
//!   goal, with none of the eager steps the decision procedure takes.
//! * [`prescribed_times`] reads off a type when each message on a channel
//!   of that type has to arrive, without running anything.

use std::fmt;

use crate::runtime::Observation;
use crate::subtyping::{Rule, Search, SubtypeError};
use crate::syntax::SessionType;
use crate::types::{whnf, TypeEnv};

/// A modal prefix letter of a universe type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    Next(u64),
    Box,
    Diamond,
}

/// Every type `L1 L2 ... Lm 1` with `m <= depth`, letters drawn from
/// `()^1`, `()^2`, `()^3`, `[]`, `<>`, and no two `()` letters adjacent
/// (those would merge into one). Listed shortest first.
pub fn universe(depth: usize) -> Vec<SessionType> {
    universe_words(depth).iter().map(|w| from_word(w)).collect()
}

pub fn universe_words(depth: usize) -> Vec<Vec<Letter>> {
    const LETTERS: [Letter; 5] = [Letter::Next(1), Letter::Next(2), Letter::Next(3), Letter::Box, Letter::Diamond];
    let mut out: Vec<Vec<Letter>> = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..depth {
        let mut next_layer = Vec::new();
        for w in &layer {
            for l in LETTERS {
                let adjacent_next = matches!((w.last(), l), (Some(Letter::Next(_)), Letter::Next(_)));
                if !adjacent_next {
                    let mut w2 = w.clone();
                    w2.push(l);
                    next_layer.push(w2);
                }
            }
        }
        out.extend(next_layer.iter().cloned());
        layer = next_layer;
    }
    out
}

pub fn from_word(w: &[Letter]) -> SessionType {
    w.iter().rev().fold(SessionType::One, |acc, l| match l {
        Letter::Next(n) => SessionType::next_n(*n, acc),
        Letter::Box => SessionType::boxed(acc),
        Letter::Diamond => SessionType::diamond(acc),
    })
}

/// Subtyping by blind search: every rule of the judgment is tried at every
/// goal, in a fixed order, with cycle detection along the current path.
pub fn exhaustive_subtype(env: &TypeEnv, a: &SessionType, b: &SessionType) -> Result<bool, SubtypeError> {
    let mut s = Search::new(env, |_: &TypeEnv, _: &SessionType, _: &SessionType| Rule::ALL.to_vec(), 1_000_000);
    Ok(s.derive(a, b)?.is_some())
}

/// When a message may arrive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    Exactly(u64),
    AtLeast(u64),
}

impl Bound {
    pub fn admits(self, t: u64) -> bool {
        match self {
            Bound::Exactly(s) => t == s,
            Bound::AtLeast(s) => t >= s,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Exactly(t) => write!(f, "{t}"),
            Bound::AtLeast(t) => write!(f, ">= {t}"),
        }
    }
}

/// Walks `ty`, offered from time `start`, along the observed messages and
/// returns the arrival time each one must have. A `[]` or `<>` leaves the
/// time open; the walk then continues from the time actually observed.
pub fn prescribed_times(env: &TypeEnv, ty: &SessionType, start: u64, obs: &[Observation]) -> Result<Vec<Bound>, String> {
    let mut out = Vec::new();
    let mut now = start;
    let mut open = false;
    let mut cur = ty.clone();
    let mut it = obs.iter();
    let mut pending = it.next();
    while let Some(o) = pending {
        let bound = |now: u64, open: bool| if open { Bound::AtLeast(now) } else { Bound::Exactly(now) };
        match whnf(env, &cur) {
            SessionType::Next(n, a) => {
                now += n.as_const().ok_or("type is not ground")?;
                cur = *a;
            }
            SessionType::Box(a) => {
                open = true;
                cur = *a;
            }
            SessionType::Diamond(a) if o.event == "now" => {
                out.push(bound(now, true));
                now = o.time;
                open = false;
                cur = *a;
                pending = it.next();
            }
            SessionType::Plus(bs) => {
                let (_, b) = bs
                    .iter()
                    .find(|(l, _)| *l == o.event)
                    .ok_or_else(|| format!("label `{}` is not offered by the type", o.event))?;
                out.push(bound(now, open));
                if open {
                    now = o.time;
                    open = false;
                }
                cur = b.clone();
                pending = it.next();
            }
            SessionType::Tensor(_, b) if o.event == "send" => {
                out.push(bound(now, open));
                if open {
                    now = o.time;
                    open = false;
                }
                cur = *b;
                pending = it.next();
            }
            SessionType::One if o.event == "close" => {
                out.push(bound(now, open));
                pending = it.next();
                if pending.is_some() {
                    return Err("messages after close".into());
                }
            }
            other => {
                return Err(format!("event `{}` does not fit type {}", o.event, crate::types::show(&other)));
            }
        }
    }
    Ok(out)
}
