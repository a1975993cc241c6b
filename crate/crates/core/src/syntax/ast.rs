use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};

pub type Var = String;
pub type Label = String;

/// A source location. Locations are carried for diagnostics only and never
/// participate in structural equality or hashing.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}
impl Eq for Pos {}
impl Hash for Pos {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Arithmetic over natural-number parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamExpr {
    Const(u64),
    Param(String),
    Add(Box<ParamExpr>, Box<ParamExpr>),
    Mul(Box<ParamExpr>, Box<ParamExpr>),
}

impl ParamExpr {
    pub fn as_const(&self) -> Option<u64> {
        match self {
            ParamExpr::Const(n) => Some(*n),
            _ => None,
        }
    }

    pub fn eval(&self, binding: &HashMap<String, u64>) -> Result<u64, String> {
        match self {
            ParamExpr::Const(n) => Ok(*n),
            ParamExpr::Param(p) => binding
                .get(p)
                .copied()
                .ok_or_else(|| format!("parameter `{p}` is unbound")),
            ParamExpr::Add(a, b) => Ok(a.eval(binding)? + b.eval(binding)?),
            ParamExpr::Mul(a, b) => Ok(a.eval(binding)? * b.eval(binding)?),
        }
    }

    pub fn params(&self, out: &mut BTreeSet<String>) {
        match self {
            ParamExpr::Const(_) => {}
            ParamExpr::Param(p) => {
                out.insert(p.clone());
            }
            ParamExpr::Add(a, b) | ParamExpr::Mul(a, b) => {
                a.params(out);
                b.params(out);
            }
        }
    }

    /// Sum of two counts, folding constants.
    pub fn plus(a: ParamExpr, b: ParamExpr) -> ParamExpr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => ParamExpr::Const(x + y),
            _ => ParamExpr::Add(Box::new(a), Box::new(b)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SessionType {
    Plus(Vec<(Label, SessionType)>),
    With(Vec<(Label, SessionType)>),
    One,
    Tensor(Box<SessionType>, Box<SessionType>),
    Lolli(Box<SessionType>, Box<SessionType>),
    /// `○ⁿA`; the count is at least one and the body is never itself a `Next`.
    Next(ParamExpr, Box<SessionType>),
    Box(Box<SessionType>),
    Diamond(Box<SessionType>),
    Name(String, Vec<ParamExpr>),
}

impl SessionType {
    /// Builds `○ⁿA`, merging with a directly nested `Next` and dropping a zero count.
    pub fn next(count: ParamExpr, inner: SessionType) -> SessionType {
        if count.as_const() == Some(0) {
            return inner;
        }
        match inner {
            SessionType::Next(m, body) => SessionType::Next(ParamExpr::plus(count, m), body),
            other => SessionType::Next(count, Box::new(other)),
        }
    }

    pub fn next_n(n: u64, inner: SessionType) -> SessionType {
        SessionType::next(ParamExpr::Const(n), inner)
    }

    pub fn boxed(inner: SessionType) -> SessionType {
        SessionType::Box(Box::new(inner))
    }

    pub fn diamond(inner: SessionType) -> SessionType {
        SessionType::Diamond(Box::new(inner))
    }

    pub fn tensor(a: SessionType, b: SessionType) -> SessionType {
        SessionType::Tensor(Box::new(a), Box::new(b))
    }

    pub fn lolli(a: SessionType, b: SessionType) -> SessionType {
        SessionType::Lolli(Box::new(a), Box::new(b))
    }

    pub fn name(n: &str) -> SessionType {
        SessionType::Name(n.to_string(), Vec::new())
    }

    /// True when no `Next` sits directly inside another `Next`.
    pub fn is_next_normal(&self) -> bool {
        match self {
            SessionType::Next(n, inner) => {
                n.as_const() != Some(0)
                    && !matches!(**inner, SessionType::Next(..))
                    && inner.is_next_normal()
            }
            SessionType::Plus(bs) | SessionType::With(bs) => bs.iter().all(|(_, t)| t.is_next_normal()),
            SessionType::Tensor(a, b) | SessionType::Lolli(a, b) => a.is_next_normal() && b.is_next_normal(),
            SessionType::Box(a) | SessionType::Diamond(a) => a.is_next_normal(),
            SessionType::One | SessionType::Name(..) => true,
        }
    }

    /// Number of modal constructors along the spine of nested modalities.
    pub fn modal_depth(&self) -> usize {
        match self {
            SessionType::Next(_, a) | SessionType::Box(a) | SessionType::Diamond(a) => 1 + a.modal_depth(),
            _ => 0,
        }
    }
}

/// Where a delay came from: written by the programmer, inserted by a cost
/// model, or inserted by time reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Origin {
    Source,
    Tick,
    Reconstructed,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProcExpr {
    Spawn {
        dest: Var,
        proc: String,
        args: Vec<ParamExpr>,
        chans: Vec<Var>,
        cont: Box<ProcExpr>,
        origin: Origin,
    },
    TailCall {
        dest: Var,
        proc: String,
        args: Vec<ParamExpr>,
        chans: Vec<Var>,
    },
    Cut {
        dest: Var,
        annot: SessionType,
        body: Box<ProcExpr>,
        cont: Box<ProcExpr>,
        origin: Origin,
    },
    Fwd {
        dest: Var,
        src: Var,
    },
    SendLabel {
        chan: Var,
        label: Label,
        cont: Box<ProcExpr>,
    },
    Case {
        chan: Var,
        branches: Vec<(Label, ProcExpr)>,
    },
    Close {
        chan: Var,
    },
    Wait {
        chan: Var,
        cont: Box<ProcExpr>,
    },
    SendChan {
        chan: Var,
        payload: Var,
        cont: Box<ProcExpr>,
    },
    RecvChan {
        bind: Var,
        chan: Var,
        cont: Box<ProcExpr>,
    },
    Delay {
        count: ParamExpr,
        origin: Origin,
        cont: Box<ProcExpr>,
    },
    When {
        chan: Var,
        cont: Box<ProcExpr>,
        origin: Origin,
    },
    Now {
        chan: Var,
        cont: Box<ProcExpr>,
        origin: Origin,
    },
}

impl ProcExpr {
    pub fn delay(origin: Origin, cont: ProcExpr) -> ProcExpr {
        ProcExpr::Delay { count: ParamExpr::Const(1), origin, cont: Box::new(cont) }
    }

    pub fn fwd(dest: &str, src: &str) -> ProcExpr {
        ProcExpr::Fwd { dest: dest.to_string(), src: src.to_string() }
    }

    /// Free channel variables.
    pub fn free_chans(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            ProcExpr::Spawn { dest, chans, cont, .. } => {
                let mut inner = cont.free_chans();
                inner.remove(dest);
                out.extend(inner);
                out.extend(chans.iter().cloned());
            }
            ProcExpr::TailCall { dest, chans, .. } => {
                out.insert(dest.clone());
                out.extend(chans.iter().cloned());
            }
            ProcExpr::Cut { dest, body, cont, .. } => {
                let mut b = body.free_chans();
                b.remove(dest);
                let mut c = cont.free_chans();
                c.remove(dest);
                out.extend(b);
                out.extend(c);
            }
            ProcExpr::Fwd { dest, src } => {
                out.insert(dest.clone());
                out.insert(src.clone());
            }
            ProcExpr::SendLabel { chan, cont, .. }
            | ProcExpr::Wait { chan, cont }
            | ProcExpr::When { chan, cont, .. }
            | ProcExpr::Now { chan, cont, .. } => {
                out.insert(chan.clone());
                cont.collect_free(out);
            }
            ProcExpr::Case { chan, branches } => {
                out.insert(chan.clone());
                for (_, p) in branches {
                    p.collect_free(out);
                }
            }
            ProcExpr::Close { chan } => {
                out.insert(chan.clone());
            }
            ProcExpr::SendChan { chan, payload, cont } => {
                out.insert(chan.clone());
                out.insert(payload.clone());
                cont.collect_free(out);
            }
            ProcExpr::RecvChan { bind, chan, cont } => {
                let mut c = cont.free_chans();
                c.remove(bind);
                out.extend(c);
                out.insert(chan.clone());
            }
            ProcExpr::Delay { cont, .. } => cont.collect_free(out),
        }
    }

    /// Every channel name mentioned anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<Var>) {
        match self {
            ProcExpr::Spawn { dest, chans, cont, .. } => {
                out.insert(dest.clone());
                out.extend(chans.iter().cloned());
                cont.all_names(out);
            }
            ProcExpr::TailCall { dest, chans, .. } => {
                out.insert(dest.clone());
                out.extend(chans.iter().cloned());
            }
            ProcExpr::Cut { dest, body, cont, .. } => {
                out.insert(dest.clone());
                body.all_names(out);
                cont.all_names(out);
            }
            ProcExpr::Fwd { dest, src } => {
                out.insert(dest.clone());
                out.insert(src.clone());
            }
            ProcExpr::SendLabel { chan, cont, .. }
            | ProcExpr::Wait { chan, cont }
            | ProcExpr::When { chan, cont, .. }
            | ProcExpr::Now { chan, cont, .. } => {
                out.insert(chan.clone());
                cont.all_names(out);
            }
            ProcExpr::Case { chan, branches } => {
                out.insert(chan.clone());
                for (_, p) in branches {
                    p.all_names(out);
                }
            }
            ProcExpr::Close { chan } => {
                out.insert(chan.clone());
            }
            ProcExpr::SendChan { chan, payload, cont } => {
                out.insert(chan.clone());
                out.insert(payload.clone());
                cont.all_names(out);
            }
            ProcExpr::RecvChan { bind, chan, cont } => {
                out.insert(bind.clone());
                out.insert(chan.clone());
                cont.all_names(out);
            }
            ProcExpr::Delay { cont, .. } => cont.all_names(out),
        }
    }

    /// Capture-avoiding renaming of free channels. Binders shadow entries of
    /// the map within their scope.
    pub fn rename(&self, map: &HashMap<Var, Var>) -> ProcExpr {
        if map.is_empty() {
            return self.clone();
        }
        let r = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        let without = |v: &Var| {
            let mut m = map.clone();
            m.remove(v);
            m
        };
        match self {
            ProcExpr::Spawn { dest, proc, args, chans, cont, origin } => ProcExpr::Spawn {
                dest: dest.clone(),
                proc: proc.clone(),
                args: args.clone(),
                chans: chans.iter().map(r).collect(),
                cont: Box::new(cont.rename(&without(dest))),
                origin: *origin,
            },
            ProcExpr::TailCall { dest, proc, args, chans } => ProcExpr::TailCall {
                dest: r(dest),
                proc: proc.clone(),
                args: args.clone(),
                chans: chans.iter().map(r).collect(),
            },
            ProcExpr::Cut { dest, annot, body, cont, origin } => {
                let inner = without(dest);
                ProcExpr::Cut {
                    dest: dest.clone(),
                    annot: annot.clone(),
                    body: Box::new(body.rename(&inner)),
                    cont: Box::new(cont.rename(&inner)),
                    origin: *origin,
                }
            }
            ProcExpr::Fwd { dest, src } => ProcExpr::Fwd { dest: r(dest), src: r(src) },
            ProcExpr::SendLabel { chan, label, cont } => ProcExpr::SendLabel {
                chan: r(chan),
                label: label.clone(),
                cont: Box::new(cont.rename(map)),
            },
            ProcExpr::Case { chan, branches } => ProcExpr::Case {
                chan: r(chan),
                branches: branches.iter().map(|(l, p)| (l.clone(), p.rename(map))).collect(),
            },
            ProcExpr::Close { chan } => ProcExpr::Close { chan: r(chan) },
            ProcExpr::Wait { chan, cont } => ProcExpr::Wait { chan: r(chan), cont: Box::new(cont.rename(map)) },
            ProcExpr::SendChan { chan, payload, cont } => ProcExpr::SendChan {
                chan: r(chan),
                payload: r(payload),
                cont: Box::new(cont.rename(map)),
            },
            ProcExpr::RecvChan { bind, chan, cont } => ProcExpr::RecvChan {
                bind: bind.clone(),
                chan: r(chan),
                cont: Box::new(cont.rename(&without(bind))),
            },
            ProcExpr::Delay { count, origin, cont } => ProcExpr::Delay {
                count: count.clone(),
                origin: *origin,
                cont: Box::new(cont.rename(map)),
            },
            ProcExpr::When { chan, cont, origin } => ProcExpr::When {
                chan: r(chan),
                cont: Box::new(cont.rename(map)),
                origin: *origin,
            },
            ProcExpr::Now { chan, cont, origin } => ProcExpr::Now {
                chan: r(chan),
                cont: Box::new(cont.rename(map)),
                origin: *origin,
            },
        }
    }

    /// Visits every sub-expression, parents before children.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a ProcExpr)) {
        f(self);
        match self {
            ProcExpr::Spawn { cont, .. }
            | ProcExpr::SendLabel { cont, .. }
            | ProcExpr::Wait { cont, .. }
            | ProcExpr::SendChan { cont, .. }
            | ProcExpr::RecvChan { cont, .. }
            | ProcExpr::Delay { cont, .. }
            | ProcExpr::When { cont, .. }
            | ProcExpr::Now { cont, .. } => cont.walk(f),
            ProcExpr::Cut { body, cont, .. } => {
                body.walk(f);
                cont.walk(f);
            }
            ProcExpr::Case { branches, .. } => {
                for (_, p) in branches {
                    p.walk(f);
                }
            }
            ProcExpr::TailCall { .. } | ProcExpr::Fwd { .. } | ProcExpr::Close { .. } => {}
        }
    }
}

/// An index pattern on the left of a parameterized definition: `n`, `0` or `n+1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IndexPat {
    Var(String),
    Zero,
    Succ(String),
}

impl IndexPat {
    pub fn bound_var(&self) -> Option<&str> {
        match self {
            IndexPat::Var(v) | IndexPat::Succ(v) => Some(v),
            IndexPat::Zero => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TypeDef {
    pub name: String,
    pub pats: Vec<IndexPat>,
    /// `None` declares an abstract type, equal only to itself.
    pub body: Option<SessionType>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProcDecl {
    pub name: String,
    pub pats: Vec<IndexPat>,
    pub ctx: Vec<(Var, SessionType)>,
    pub offer: (Var, SessionType),
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProcDef {
    pub name: String,
    pub pats: Vec<IndexPat>,
    pub dest: Var,
    pub chans: Vec<Var>,
    pub body: ProcExpr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Item {
    Type(TypeDef),
    Decl(ProcDecl),
    Def(ProcDef),
}

/// A program: type definitions, process declarations and process
/// definitions, in source order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signature {
    pub items: Vec<Item>,
}

impl Signature {
    pub fn typedefs(&self) -> impl Iterator<Item = &TypeDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Type(t) => Some(t),
            _ => None,
        })
    }

    pub fn decls(&self) -> impl Iterator<Item = &ProcDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Decl(d) => Some(d),
            _ => None,
        })
    }

    pub fn defs(&self) -> impl Iterator<Item = &ProcDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Def(d) => Some(d),
            _ => None,
        })
    }

    pub fn defs_mut(&mut self) -> impl Iterator<Item = &mut ProcDef> {
        self.items.iter_mut().filter_map(|i| match i {
            Item::Def(d) => Some(d),
            _ => None,
        })
    }

    pub fn typedef(&self, name: &str) -> Option<&TypeDef> {
        self.typedefs().find(|t| t.name == name)
    }

    pub fn decl(&self, name: &str) -> Option<&ProcDecl> {
        self.decls().find(|d| d.name == name)
    }

    pub fn def(&self, name: &str) -> Option<&ProcDef> {
        self.defs().find(|d| d.name == name)
    }

    /// True when no item carries index patterns.
    pub fn is_ground(&self) -> bool {
        self.items.iter().all(|i| match i {
            Item::Type(t) => t.pats.is_empty(),
            Item::Decl(d) => d.pats.is_empty(),
            Item::Def(d) => d.pats.is_empty(),
        })
    }
}
