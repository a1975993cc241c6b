//! Temporal subtyping `A <= B` and the weak relation `A <: B` used to type
//! configurations.
//!
//! `A <= B` holds when a forward from a channel of type `A` can stand in for
//! a provider of `B`. The procedure applies the next/next, box-right and
//! diamond-left steps eagerly and backtracks only over the two genuine
//! choice points: box-left against box/next, and diamond-right against
//! next/diamond.

use std::fmt;

use crate::syntax::SessionType;
use crate::types::{self, count, patient, peel, type_equal, whnf_ref, Patience, TypeEnv, TypeOpsError};

pub const DEFAULT_GOAL_BUDGET: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SubtypeError {
    #[error("subtyping search exceeded {0} goals")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Types(#[from] TypeOpsError),
}

/// The rules of the subtyping judgment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Refl,
    NextNext,
    BoxNext,
    NextDiamond,
    BoxR,
    BoxL,
    DiamondR,
    DiamondL,
}

impl Rule {
    pub const ALL: [Rule; 7] =
        [Rule::NextNext, Rule::BoxNext, Rule::NextDiamond, Rule::BoxR, Rule::BoxL, Rule::DiamondR, Rule::DiamondL];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Refl => "refl",
            Rule::NextNext => "()()",
            Rule::BoxNext => "[]()",
            Rule::NextDiamond => "()<>",
            Rule::BoxR => "[]R",
            Rule::BoxL => "[]L",
            Rule::DiamondR => "<>R",
            Rule::DiamondL => "<>L",
        }
    }
}

/// A derivation of `lhs <= rhs`; every rule other than `refl` has one premise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub lhs: SessionType,
    pub rhs: SessionType,
    pub premise: Option<Box<Derivation>>,
}

impl Derivation {
    pub fn rules(&self) -> Vec<Rule> {
        let mut out = vec![self.rule];
        let mut cur = self;
        while let Some(p) = &cur.premise {
            out.push(p.rule);
            cur = p;
        }
        out
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut cur = Some(self);
        while let Some(d) = cur {
            writeln!(f, "{:>5}  {} <= {}", d.rule.name(), types::show(&d.lhs), types::show(&d.rhs))?;
            cur = d.premise.as_deref();
        }
        Ok(())
    }
}

/// `()^(n-1) A` for `t = ()^n A`.
pub(crate) fn drop_next(env: &TypeEnv, t: &SessionType) -> Option<SessionType> {
    match whnf_ref(env, t) {
        SessionType::Next(n, a) => Some(SessionType::next_n(count(n) - 1, (**a).clone())),
        _ => None,
    }
}

/// Premise of `rule` applied to the goal `a <= b`, if the rule applies.
pub fn premise(env: &TypeEnv, rule: Rule, a: &SessionType, b: &SessionType) -> Option<(SessionType, SessionType)> {
    let (ha, hb) = (whnf_ref(env, a), whnf_ref(env, b));
    match rule {
        Rule::Refl => None,
        Rule::NextNext => Some((drop_next(env, a)?, drop_next(env, b)?)),
        Rule::BoxNext => match ha {
            SessionType::Box(_) => Some((a.clone(), drop_next(env, b)?)),
            _ => None,
        },
        Rule::NextDiamond => match hb {
            SessionType::Diamond(_) => Some((drop_next(env, a)?, b.clone())),
            _ => None,
        },
        Rule::BoxR => match hb {
            SessionType::Box(inner) if patient(env, a, Patience::Box) => Some((a.clone(), (**inner).clone())),
            _ => None,
        },
        Rule::BoxL => match ha {
            SessionType::Box(inner) => Some(((**inner).clone(), b.clone())),
            _ => None,
        },
        Rule::DiamondR => match hb {
            SessionType::Diamond(inner) => Some((a.clone(), (**inner).clone())),
            _ => None,
        },
        Rule::DiamondL => match ha {
            SessionType::Diamond(inner) if patient(env, b, Patience::Diamond) => Some(((**inner).clone(), b.clone())),
            _ => None,
        },
    }
}

/// The rules the decision procedure tries at a goal, in order. A single
/// eager rule means no alternative needs to be explored.
fn candidates(env: &TypeEnv, a: &SessionType, b: &SessionType) -> Vec<Rule> {
    let (ha, hb) = (whnf_ref(env, a), whnf_ref(env, b));
    use SessionType as T;
    match (ha, hb) {
        (T::Next(..), T::Next(..)) => vec![Rule::NextNext],
        (_, T::Box(_)) if patient(env, a, Patience::Box) => vec![Rule::BoxR],
        (T::Diamond(_), _) if patient(env, b, Patience::Diamond) => vec![Rule::DiamondL],
        (T::Box(_), T::Next(..)) => vec![Rule::BoxNext, Rule::BoxL],
        (T::Next(..), T::Diamond(_)) => vec![Rule::NextDiamond, Rule::DiamondR],
        _ => {
            let mut rs = Vec::new();
            if matches!(ha, T::Box(_)) {
                rs.push(Rule::BoxL);
            }
            if matches!(hb, T::Diamond(_)) {
                rs.push(Rule::DiamondR);
            }
            rs
        }
    }
}

/// Shared search skeleton: the decision procedure and the exhaustive oracle
/// differ only in which rules they try at each goal.
pub(crate) struct Search<'e, F> {
    pub env: &'e TypeEnv,
    pub rules: F,
    pub budget: usize,
    pub visited: usize,
    /// Goals being derived; short, so a list beats hashing.
    path: Vec<(SessionType, SessionType)>,
}

impl<'e, F: Fn(&TypeEnv, &SessionType, &SessionType) -> Vec<Rule>> Search<'e, F> {
    pub fn new(env: &'e TypeEnv, rules: F, budget: usize) -> Self {
        Search { env, rules, budget, visited: 0, path: Vec::new() }
    }

    pub fn derive(&mut self, a: &SessionType, b: &SessionType) -> Result<Option<Derivation>, SubtypeError> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(SubtypeError::BudgetExceeded(self.budget));
        }
        if type_equal(self.env, a, b)? {
            return Ok(Some(Derivation { rule: Rule::Refl, lhs: a.clone(), rhs: b.clone(), premise: None }));
        }
        if self.path.iter().any(|(x, y)| x == a && y == b) {
            return Ok(None);
        }
        self.path.push((a.clone(), b.clone()));
        let mut found = None;
        for rule in (self.rules)(self.env, a, b) {
            let Some((pa, pb)) = premise(self.env, rule, a, b) else { continue };
            if let Some(d) = self.derive(&pa, &pb)? {
                found = Some(Derivation { rule, lhs: a.clone(), rhs: b.clone(), premise: Some(Box::new(d)) });
                break;
            }
        }
        self.path.pop();
        Ok(found)
    }
}

/// A derivation of `a <= b`, if there is one.
pub fn subtype_derivation(env: &TypeEnv, a: &SessionType, b: &SessionType) -> Result<Option<Derivation>, SubtypeError> {
    Search::new(env, candidates, DEFAULT_GOAL_BUDGET).derive(a, b)
}

pub fn is_subtype(env: &TypeEnv, a: &SessionType, b: &SessionType) -> Result<bool, SubtypeError> {
    Ok(subtype_derivation(env, a, b)?.is_some())
}

/// Weak subtyping: equality, or sliding next-counts across a box
/// (`()^m []A <: ()^n []A` for `m <= n`) or a diamond (`m >= n`).
pub fn is_weak_subtype(env: &TypeEnv, a: &SessionType, b: &SessionType) -> Result<bool, TypeOpsError> {
    if type_equal(env, a, b)? {
        return Ok(true);
    }
    let (Some((m, ca)), Some((n, cb))) = (peel(env, a), peel(env, b)) else {
        return Ok(false);
    };
    match (ca, cb) {
        (SessionType::Box(x), SessionType::Box(y)) if m <= n => type_equal(env, &x, &y),
        (SessionType::Diamond(x), SessionType::Diamond(y)) if m >= n => type_equal(env, &x, &y),
        _ => Ok(false),
    }
}
