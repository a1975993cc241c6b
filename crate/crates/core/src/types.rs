//! Semantic operations on ground session types: unfolding of equirecursive
//! definitions, equality, the one-step time shifts and the patience checks.
//!
//! Names are unfolded only at the head of a type. Contractiveness guarantees
//! that one unfolding always exposes a constructor (or an abstract name).

use std::collections::HashMap;
use rustc_hash::FxHashSet;

use crate::syntax::{print_type, Item, ParamExpr, SessionType, Signature};

pub const DEFAULT_EQ_BUDGET: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeOpsError {
    #[error("type `{0}` is defined as a bare name")]
    NotContractive(String),
    #[error("definition `{0}` still has index parameters")]
    NotGround(String),
    #[error("type equality gave up after {0} assumed pairs")]
    BudgetExceeded(usize),
}

/// Type definitions of a ground signature.
#[derive(Clone, Debug)]
pub struct TypeEnv {
    defs: HashMap<String, Option<SessionType>>,
    pub eq_budget: usize,
}

/// Rejects definitions whose right-hand side is itself a name.
pub fn check_contractive(sig: &Signature) -> Result<(), TypeOpsError> {
    for t in sig.typedefs() {
        if let Some(SessionType::Name(..)) = t.body {
            return Err(TypeOpsError::NotContractive(t.name.clone()));
        }
    }
    Ok(())
}

fn is_ground_type(t: &SessionType) -> bool {
    match t {
        SessionType::One => true,
        SessionType::Plus(bs) | SessionType::With(bs) => bs.iter().all(|(_, b)| is_ground_type(b)),
        SessionType::Tensor(a, b) | SessionType::Lolli(a, b) => is_ground_type(a) && is_ground_type(b),
        SessionType::Next(n, a) => n.as_const().is_some() && is_ground_type(a),
        SessionType::Box(a) | SessionType::Diamond(a) => is_ground_type(a),
        SessionType::Name(_, args) => args.is_empty(),
    }
}

impl TypeEnv {
    pub fn new(sig: &Signature) -> Result<TypeEnv, TypeOpsError> {
        check_contractive(sig)?;
        let mut defs = HashMap::new();
        for item in &sig.items {
            if let Item::Type(t) = item {
                if !t.pats.is_empty() || !t.body.as_ref().map_or(true, is_ground_type) {
                    return Err(TypeOpsError::NotGround(t.name.clone()));
                }
                defs.insert(t.name.clone(), t.body.clone());
            }
        }
        Ok(TypeEnv { defs, eq_budget: DEFAULT_EQ_BUDGET })
    }

    pub fn is_defined(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn is_abstract(&self, name: &str) -> bool {
        matches!(self.defs.get(name), Some(None))
    }
}

pub(crate) fn count(e: &ParamExpr) -> u64 {
    e.as_const().unwrap_or_else(|| panic!("index expression `{e:?}` was not grounded"))
}

/// Replaces a defined name at the head by its body; any other type is
/// returned unchanged.
pub fn unfold(env: &TypeEnv, t: &SessionType) -> SessionType {
    if let SessionType::Name(n, _) = t {
        if let Some(Some(body)) = env.defs.get(n) {
            return body.clone();
        }
    }
    t.clone()
}

/// Unfolds until the head is a constructor or an abstract name.
pub fn whnf(env: &TypeEnv, t: &SessionType) -> SessionType {
    whnf_ref(env, t).clone()
}

/// [`whnf`] without copying: the result points into `t` or into a definition.
pub fn whnf_ref<'a>(env: &'a TypeEnv, t: &'a SessionType) -> &'a SessionType {
    let mut cur = t;
    while let SessionType::Name(n, _) = cur {
        match env.defs.get(n) {
            Some(Some(body)) => cur = body,
            _ => break,
        }
    }
    cur
}

/// Splits `t` into `()^k C` where `C` has a non-next head. Returns `None` if
/// the type is an endless sequence of nexts.
pub fn peel(env: &TypeEnv, t: &SessionType) -> Option<(u64, SessionType)> {
    peel_ref(env, t).map(|(k, c)| (k, c.clone()))
}

/// [`peel`] without copying.
pub fn peel_ref<'a>(env: &'a TypeEnv, t: &'a SessionType) -> Option<(u64, &'a SessionType)> {
    let mut k = 0;
    let mut cur = t;
    // passing through more names than there are definitions means a cycle
    let mut names = 0;
    loop {
        if let SessionType::Name(..) = cur {
            names += 1;
            if names > env.defs.len() + 1 {
                return None;
            }
        }
        match whnf_ref(env, cur) {
            SessionType::Next(n, a) => {
                k += count(n);
                cur = a;
            }
            other => return Some((k, other)),
        }
    }
}

/// One step of the left shift: `()A` loses a next, `[]A` is unchanged, and
/// every other head is undefined.
pub fn shift_left(env: &TypeEnv, t: &SessionType) -> Option<SessionType> {
    match whnf_ref(env, t) {
        SessionType::Next(n, a) => Some(SessionType::next_n(count(n) - 1, (**a).clone())),
        b @ SessionType::Box(_) => Some(b.clone()),
        _ => None,
    }
}

/// One step of the right shift: `()A` loses a next, `<>A` is unchanged, and
/// every other head is undefined.
pub fn shift_right(env: &TypeEnv, t: &SessionType) -> Option<SessionType> {
    match whnf_ref(env, t) {
        SessionType::Next(n, a) => Some(SessionType::next_n(count(n) - 1, (**a).clone())),
        d @ SessionType::Diamond(_) => Some(d.clone()),
        _ => None,
    }
}

pub fn shift_left_n(env: &TypeEnv, t: &SessionType, n: u64) -> Option<SessionType> {
    shift_n(env, t, n, Patience::Box)
}

pub fn shift_right_n(env: &TypeEnv, t: &SessionType, n: u64) -> Option<SessionType> {
    shift_n(env, t, n, Patience::Diamond)
}

/// `n` single shifts at once: nexts are consumed in bulk and the patient
/// modality of `side` absorbs whatever remains.
fn shift_n(env: &TypeEnv, t: &SessionType, n: u64, side: Patience) -> Option<SessionType> {
    let mut rest = n;
    let mut cur = t;
    while rest > 0 {
        match whnf_ref(env, cur) {
            SessionType::Next(k, a) => {
                let k = count(k);
                if k > rest {
                    return Some(SessionType::next_n(k - rest, (**a).clone()));
                }
                rest -= k;
                cur = a;
            }
            b @ SessionType::Box(_) if side == Patience::Box => return Some(b.clone()),
            d @ SessionType::Diamond(_) if side == Patience::Diamond => return Some(d.clone()),
            _ => return None,
        }
    }
    Some(cur.clone())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Patience {
    Box,
    Diamond,
}

/// True when `t` has the shape `()^n []A` (box side) or `()^n <>A` (diamond side).
pub fn patient(env: &TypeEnv, t: &SessionType, side: Patience) -> bool {
    match (peel_ref(env, t), side) {
        (Some((_, SessionType::Box(_))), Patience::Box) => true,
        (Some((_, SessionType::Diamond(_))), Patience::Diamond) => true,
        _ => false,
    }
}

/// Equirecursive equality: coinductive comparison of next-counts and head
/// constructors, with branch sets compared as sets.
pub fn type_equal(env: &TypeEnv, a: &SessionType, b: &SessionType) -> Result<bool, TypeOpsError> {
    let mut assumed = FxHashSet::default();
    eq(env, a, b, &mut assumed)
}

/// `assumed` holds pairs of subterms by address. Every subterm reached lies
/// inside one of the two inputs or a definition, so the set stays finite.
fn eq<'a>(
    env: &'a TypeEnv,
    a: &'a SessionType,
    b: &'a SessionType,
    assumed: &mut FxHashSet<(*const SessionType, *const SessionType)>,
) -> Result<bool, TypeOpsError> {
    if a == b {
        return Ok(true);
    }
    let (pa, pb) = (peel_ref(env, a), peel_ref(env, b));
    let (ca, cb) = match (pa, pb) {
        (None, None) => return Ok(true),
        (Some((m, ca)), Some((n, cb))) if m == n => (ca, cb),
        _ => return Ok(false),
    };
    if ca == cb || !assumed.insert((ca as *const _, cb as *const _)) {
        return Ok(true);
    }
    if assumed.len() > env.eq_budget {
        return Err(TypeOpsError::BudgetExceeded(env.eq_budget));
    }
    match (ca, cb) {
        (SessionType::One, SessionType::One) => Ok(true),
        (SessionType::Plus(xs), SessionType::Plus(ys)) | (SessionType::With(xs), SessionType::With(ys)) => {
            if xs.len() != ys.len() {
                return Ok(false);
            }
            for (l, x) in xs {
                match ys.iter().find(|(m, _)| m == l) {
                    Some((_, y)) => {
                        if !eq(env, x, y, assumed)? {
                            return Ok(false);
                        }
                    }
                    None => return Ok(false),
                }
            }
            Ok(true)
        }
        (SessionType::Tensor(a1, a2), SessionType::Tensor(b1, b2))
        | (SessionType::Lolli(a1, a2), SessionType::Lolli(b1, b2)) => {
            Ok(eq(env, a1, b1, assumed)? && eq(env, a2, b2, assumed)?)
        }
        (SessionType::Box(x), SessionType::Box(y)) | (SessionType::Diamond(x), SessionType::Diamond(y)) => {
            eq(env, x, y, assumed)
        }
        (SessionType::Name(x, _), SessionType::Name(y, _)) => Ok(x == y),
        _ => Ok(false),
    }
}

/// Short rendering used in diagnostics.
pub fn show(t: &SessionType) -> String {
    print_type(t)
}
