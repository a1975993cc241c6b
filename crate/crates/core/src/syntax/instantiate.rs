use std::collections::{HashMap, HashSet, VecDeque};

use super::ast::*;
use super::EvalError;

/// Ground name of `name` at the given indices, e.g. `list$3$1`.
pub fn mangle(name: &str, args: &[u64]) -> String {
    let mut s = name.to_string();
    for a in args {
        s.push('$');
        s.push_str(&a.to_string());
    }
    s
}

fn match_pats(pats: &[IndexPat], args: &[u64]) -> Option<HashMap<String, u64>> {
    if pats.len() != args.len() {
        return None;
    }
    let mut b = HashMap::new();
    for (p, &a) in pats.iter().zip(args) {
        match p {
            IndexPat::Var(v) => {
                b.insert(v.clone(), a);
            }
            IndexPat::Zero if a == 0 => {}
            IndexPat::Succ(v) if a > 0 => {
                b.insert(v.clone(), a - 1);
            }
            _ => return None,
        }
    }
    Some(b)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Kind {
    Type,
    Decl,
    Def,
}

struct Grounder<'a> {
    sig: &'a Signature,
    seen: HashSet<(Kind, String)>,
    queue: VecDeque<(Kind, String, Vec<u64>)>,
    out: Vec<Item>,
}

impl<'a> Grounder<'a> {
    fn request(&mut self, kind: Kind, name: &str, args: Vec<u64>) -> String {
        let m = mangle(name, &args);
        if self.seen.insert((kind, m.clone())) {
            self.queue.push_back((kind, name.to_string(), args));
        }
        m
    }

    fn eval(&self, e: &ParamExpr, b: &HashMap<String, u64>) -> Result<u64, EvalError> {
        e.eval(b).map_err(EvalError)
    }

    fn ty(&mut self, t: &SessionType, b: &HashMap<String, u64>) -> Result<SessionType, EvalError> {
        Ok(match t {
            SessionType::One => SessionType::One,
            SessionType::Plus(bs) => SessionType::Plus(self.branches(bs, b)?),
            SessionType::With(bs) => SessionType::With(self.branches(bs, b)?),
            SessionType::Tensor(x, y) => SessionType::tensor(self.ty(x, b)?, self.ty(y, b)?),
            SessionType::Lolli(x, y) => SessionType::lolli(self.ty(x, b)?, self.ty(y, b)?),
            SessionType::Next(n, a) => {
                let n = self.eval(n, b)?;
                SessionType::next_n(n, self.ty(a, b)?)
            }
            SessionType::Box(a) => SessionType::boxed(self.ty(a, b)?),
            SessionType::Diamond(a) => SessionType::diamond(self.ty(a, b)?),
            SessionType::Name(n, args) => {
                let vals = args.iter().map(|e| self.eval(e, b)).collect::<Result<Vec<_>, _>>()?;
                SessionType::Name(self.request(Kind::Type, n, vals), Vec::new())
            }
        })
    }

    fn branches(
        &mut self,
        bs: &[(Label, SessionType)],
        b: &HashMap<String, u64>,
    ) -> Result<Vec<(Label, SessionType)>, EvalError> {
        bs.iter().map(|(l, t)| Ok((l.clone(), self.ty(t, b)?))).collect()
    }

    fn call(&mut self, f: &str, args: &[ParamExpr], b: &HashMap<String, u64>) -> Result<String, EvalError> {
        let vals = args.iter().map(|e| self.eval(e, b)).collect::<Result<Vec<_>, _>>()?;
        self.request(Kind::Decl, f, vals.clone());
        Ok(self.request(Kind::Def, f, vals))
    }

    fn proc(&mut self, p: &ProcExpr, b: &HashMap<String, u64>) -> Result<ProcExpr, EvalError> {
        Ok(match p {
            ProcExpr::Spawn { dest, proc, args, chans, cont, origin } => ProcExpr::Spawn {
                dest: dest.clone(),
                proc: self.call(proc, args, b)?,
                args: Vec::new(),
                chans: chans.clone(),
                cont: Box::new(self.proc(cont, b)?),
                origin: *origin,
            },
            ProcExpr::TailCall { dest, proc, args, chans } => ProcExpr::TailCall {
                dest: dest.clone(),
                proc: self.call(proc, args, b)?,
                args: Vec::new(),
                chans: chans.clone(),
            },
            ProcExpr::Cut { dest, annot, body, cont, origin } => ProcExpr::Cut {
                dest: dest.clone(),
                annot: self.ty(annot, b)?,
                body: Box::new(self.proc(body, b)?),
                cont: Box::new(self.proc(cont, b)?),
                origin: *origin,
            },
            ProcExpr::Fwd { .. } | ProcExpr::Close { .. } => p.clone(),
            ProcExpr::SendLabel { chan, label, cont } => ProcExpr::SendLabel {
                chan: chan.clone(),
                label: label.clone(),
                cont: Box::new(self.proc(cont, b)?),
            },
            ProcExpr::Case { chan, branches } => ProcExpr::Case {
                chan: chan.clone(),
                branches: branches
                    .iter()
                    .map(|(l, q)| Ok((l.clone(), self.proc(q, b)?)))
                    .collect::<Result<_, EvalError>>()?,
            },
            ProcExpr::Wait { chan, cont } => ProcExpr::Wait { chan: chan.clone(), cont: Box::new(self.proc(cont, b)?) },
            ProcExpr::SendChan { chan, payload, cont } => ProcExpr::SendChan {
                chan: chan.clone(),
                payload: payload.clone(),
                cont: Box::new(self.proc(cont, b)?),
            },
            ProcExpr::RecvChan { bind, chan, cont } => ProcExpr::RecvChan {
                bind: bind.clone(),
                chan: chan.clone(),
                cont: Box::new(self.proc(cont, b)?),
            },
            ProcExpr::Delay { count, origin, cont } => {
                let n = self.eval(count, b)?;
                let cont = self.proc(cont, b)?;
                if n == 0 {
                    cont
                } else {
                    ProcExpr::Delay { count: ParamExpr::Const(n), origin: *origin, cont: Box::new(cont) }
                }
            }
            ProcExpr::When { chan, cont, origin } => ProcExpr::When {
                chan: chan.clone(),
                cont: Box::new(self.proc(cont, b)?),
                origin: *origin,
            },
            ProcExpr::Now { chan, cont, origin } => ProcExpr::Now {
                chan: chan.clone(),
                cont: Box::new(self.proc(cont, b)?),
                origin: *origin,
            },
        })
    }

    fn no_clause(name: &str, args: &[u64]) -> EvalError {
        EvalError(format!("no clause of `{name}` matches indices {args:?}"))
    }

    fn run(&mut self) -> Result<(), EvalError> {
        while let Some((kind, name, args)) = self.queue.pop_front() {
            let ground = mangle(&name, &args);
            match kind {
                Kind::Type => {
                    let (def, b) = self
                        .sig
                        .typedefs()
                        .filter(|t| t.name == name)
                        .find_map(|t| match_pats(&t.pats, &args).map(|b| (t, b)))
                        .ok_or_else(|| Self::no_clause(&name, &args))?;
                    let body = match &def.body {
                        Some(body) => Some(self.ty(body, &b)?),
                        None => None,
                    };
                    self.out.push(Item::Type(TypeDef { name: ground, pats: Vec::new(), body, pos: def.pos }));
                }
                Kind::Decl => {
                    let (decl, b) = self
                        .sig
                        .decls()
                        .filter(|d| d.name == name)
                        .find_map(|d| match_pats(&d.pats, &args).map(|b| (d, b)))
                        .ok_or_else(|| Self::no_clause(&name, &args))?;
                    let ctx = decl
                        .ctx
                        .iter()
                        .map(|(x, t)| Ok((x.clone(), self.ty(t, &b)?)))
                        .collect::<Result<Vec<_>, EvalError>>()?;
                    let offer = (decl.offer.0.clone(), self.ty(&decl.offer.1, &b)?);
                    self.out.push(Item::Decl(ProcDecl { name: ground, pats: Vec::new(), ctx, offer, pos: decl.pos }));
                }
                Kind::Def => {
                    let mut any = false;
                    let found = self
                        .sig
                        .defs()
                        .filter(|d| d.name == name)
                        .inspect(|_| any = true)
                        .find_map(|d| match_pats(&d.pats, &args).map(|b| (d, b)));
                    match found {
                        Some((def, b)) => {
                            let body = self.proc(&def.body, &b)?;
                            self.out.push(Item::Def(ProcDef {
                                name: ground,
                                pats: Vec::new(),
                                dest: def.dest.clone(),
                                chans: def.chans.clone(),
                                body,
                                pos: def.pos,
                            }));
                        }
                        None if any => return Err(Self::no_clause(&name, &args)),
                        None => {}
                    }
                }
            }
        }
        Ok(())
    }
}

fn grounder(sig: &Signature) -> Grounder<'_> {
    Grounder { sig, seen: HashSet::new(), queue: VecDeque::new(), out: Vec::new() }
}

/// Grounds the definition `name` (a type or a process) at the given indices,
/// together with everything it reaches.
pub fn instantiate(sig: &Signature, name: &str, args: &[u64]) -> Result<Signature, EvalError> {
    let mut g = grounder(sig);
    if sig.typedefs().any(|t| t.name == name) {
        g.request(Kind::Type, name, args.to_vec());
    } else if sig.decls().any(|d| d.name == name) {
        g.request(Kind::Decl, name, args.to_vec());
        g.request(Kind::Def, name, args.to_vec());
    } else {
        return Err(EvalError(format!("no definition named `{name}`")));
    }
    g.run()?;
    Ok(Signature { items: g.out })
}

/// Index variable names of a definition, taken from its declaration (for
/// processes) or from its first all-variable clause (for types).
pub fn param_names(sig: &Signature, name: &str) -> Option<Vec<String>> {
    let pats: Vec<&Vec<IndexPat>> = match sig.decl(name) {
        Some(_) => sig.decls().filter(|d| d.name == name).map(|d| &d.pats).collect(),
        None => sig.typedefs().filter(|t| t.name == name).map(|t| &t.pats).collect(),
    };
    pats.into_iter()
        .find(|ps| ps.iter().all(|p| matches!(p, IndexPat::Var(_))))
        .map(|ps| ps.iter().filter_map(|p| p.bound_var().map(str::to_string)).collect())
}

/// Like [`instantiate`], with indices given by parameter name.
pub fn instantiate_named(sig: &Signature, name: &str, binding: &HashMap<String, u64>) -> Result<Signature, EvalError> {
    let names = param_names(sig, name)
        .ok_or_else(|| EvalError(format!("cannot determine the index names of `{name}`")))?;
    let args = names
        .iter()
        .map(|n| binding.get(n).copied().ok_or_else(|| EvalError(format!("parameter `{n}` is unbound"))))
        .collect::<Result<Vec<_>, _>>()?;
    instantiate(sig, name, &args)
}

/// Grounds every parameter-free definition of `sig` plus everything reachable
/// from them, preserving source order for the parameter-free items.
pub fn ground(sig: &Signature) -> Result<Signature, EvalError> {
    ground_with(sig, &[])
}

/// Like [`ground`], additionally grounding each named process at its indices.
pub fn ground_with(sig: &Signature, roots: &[(&str, Vec<u64>)]) -> Result<Signature, EvalError> {
    let mut g = grounder(sig);
    for item in &sig.items {
        match item {
            Item::Type(t) if t.pats.is_empty() => {
                g.request(Kind::Type, &t.name, Vec::new());
            }
            Item::Decl(d) if d.pats.is_empty() => {
                g.request(Kind::Decl, &d.name, Vec::new());
            }
            Item::Def(d) if d.pats.is_empty() => {
                g.request(Kind::Def, &d.name, Vec::new());
            }
            _ => {}
        }
    }
    for (name, args) in roots {
        g.request(Kind::Decl, name, args.clone());
        g.request(Kind::Def, name, args.clone());
    }
    g.run()?;
    Ok(Signature { items: g.out })
}
