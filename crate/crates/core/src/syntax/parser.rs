use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::SyntaxError;

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> PResult<T> {
        let p = self.pos();
        Err(SyntaxError::Parse {
            line: p.line,
            col: p.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.fail(&[t.spelling()])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn label(&mut self) -> PResult<Label> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Dollar => {
                self.bump();
                Ok("$".to_string())
            }
            _ => self.fail(&["label"]),
        }
    }

    fn program(&mut self) -> PResult<Signature> {
        let mut items = Vec::new();
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Eof => break,
                Tok::Type => {
                    self.bump();
                    let name = self.ident()?;
                    let pats = self.patterns()?;
                    let body = if self.eat(&Tok::Eq) { Some(self.ty()?) } else { None };
                    items.push(Item::Type(TypeDef { name, pats, body, pos }));
                }
                Tok::Decl => {
                    self.bump();
                    let name = self.ident()?;
                    let pats = self.patterns()?;
                    self.expect(Tok::Colon)?;
                    let mut ctx = Vec::new();
                    while self.peek() == &Tok::LParen {
                        ctx.push(self.binding()?);
                    }
                    self.expect(Tok::Turnstile)?;
                    let offer = self.binding()?;
                    items.push(Item::Decl(ProcDecl { name, pats, ctx, offer, pos }));
                }
                Tok::Proc => {
                    self.bump();
                    let dest = self.ident()?;
                    self.expect(Tok::LArrow)?;
                    let name = self.ident()?;
                    let pats = self.patterns()?;
                    let mut chans = Vec::new();
                    if self.eat(&Tok::LArrow) {
                        while let Tok::Ident(_) = self.peek() {
                            chans.push(self.ident()?);
                        }
                    }
                    self.expect(Tok::Eq)?;
                    let body = self.process()?;
                    items.push(Item::Def(ProcDef { name, pats, dest, chans, body, pos }));
                }
                _ => return self.fail(&["type", "decl", "proc", "end of input"]),
            }
        }
        Ok(Signature { items })
    }

    fn patterns(&mut self) -> PResult<Vec<IndexPat>> {
        let mut pats = Vec::new();
        if !self.eat(&Tok::LBrack) {
            return Ok(pats);
        }
        loop {
            match self.peek().clone() {
                Tok::Num(0) => {
                    self.bump();
                    pats.push(IndexPat::Zero);
                }
                Tok::Ident(v) => {
                    self.bump();
                    if self.eat(&Tok::Plus) {
                        if self.peek() != &Tok::Num(1) {
                            return self.fail(&["1"]);
                        }
                        self.bump();
                        pats.push(IndexPat::Succ(v));
                    } else {
                        pats.push(IndexPat::Var(v));
                    }
                }
                _ => return self.fail(&["0", "index variable"]),
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrack)?;
        Ok(pats)
    }

    fn binding(&mut self) -> PResult<(Var, SessionType)> {
        self.expect(Tok::LParen)?;
        let x = self.ident()?;
        self.expect(Tok::Colon)?;
        let t = self.ty()?;
        self.expect(Tok::RParen)?;
        Ok((x, t))
    }

    fn ty(&mut self) -> PResult<SessionType> {
        let left = self.ty_tensor()?;
        if self.eat(&Tok::Lolli) {
            let right = self.ty()?;
            return Ok(SessionType::lolli(left, right));
        }
        Ok(left)
    }

    fn ty_tensor(&mut self) -> PResult<SessionType> {
        let left = self.ty_prefix()?;
        if self.eat(&Tok::Star) {
            let right = self.ty_tensor()?;
            return Ok(SessionType::tensor(left, right));
        }
        Ok(left)
    }

    fn ty_prefix(&mut self) -> PResult<SessionType> {
        match self.peek() {
            Tok::Unit => {
                self.bump();
                let count = if self.eat(&Tok::Caret) { self.count()? } else { ParamExpr::Const(1) };
                let inner = self.ty_prefix()?;
                Ok(SessionType::next(count, inner))
            }
            Tok::BoxOp => {
                self.bump();
                Ok(SessionType::boxed(self.ty_prefix()?))
            }
            Tok::DiaOp => {
                self.bump();
                Ok(SessionType::diamond(self.ty_prefix()?))
            }
            _ => self.ty_atom(),
        }
    }

    fn count(&mut self) -> PResult<ParamExpr> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(ParamExpr::Const(n))
            }
            Tok::LBrace => {
                self.bump();
                let e = self.pexpr()?;
                self.expect(Tok::RBrace)?;
                Ok(e)
            }
            _ => self.fail(&["number", "{"]),
        }
    }

    fn ty_atom(&mut self) -> PResult<SessionType> {
        match self.peek().clone() {
            Tok::Num(1) => {
                self.bump();
                Ok(SessionType::One)
            }
            Tok::Plus => {
                self.bump();
                Ok(SessionType::Plus(self.branches()?))
            }
            Tok::Amp => {
                self.bump();
                Ok(SessionType::With(self.branches()?))
            }
            Tok::Ident(name) => {
                self.bump();
                let args = self.index_args()?;
                Ok(SessionType::Name(name, args))
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => self.fail(&["1", "+", "&", "()", "[]", "<>", "type name", "("]),
        }
    }

    fn branches(&mut self) -> PResult<Vec<(Label, SessionType)>> {
        self.expect(Tok::LBrace)?;
        let mut out: Vec<(Label, SessionType)> = Vec::new();
        loop {
            let pos = self.pos();
            let l = self.label()?;
            if out.iter().any(|(m, _)| *m == l) {
                return Err(SyntaxError::Malformed { pos, msg: format!("duplicate label `{l}`") });
            }
            self.expect(Tok::Colon)?;
            out.push((l, self.ty()?));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn index_args(&mut self) -> PResult<Vec<ParamExpr>> {
        let mut args = Vec::new();
        if self.eat(&Tok::LBrack) {
            loop {
                args.push(self.pexpr()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrack)?;
        }
        Ok(args)
    }

    fn pexpr(&mut self) -> PResult<ParamExpr> {
        let mut e = self.pterm()?;
        while self.eat(&Tok::Plus) {
            let r = self.pterm()?;
            e = ParamExpr::Add(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn pterm(&mut self) -> PResult<ParamExpr> {
        let mut e = self.patom()?;
        while self.eat(&Tok::Star) {
            let r = self.patom()?;
            e = ParamExpr::Mul(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn patom(&mut self) -> PResult<ParamExpr> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(ParamExpr::Const(n))
            }
            Tok::Ident(v) => {
                self.bump();
                Ok(ParamExpr::Param(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.pexpr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.fail(&["number", "index variable", "("]),
        }
    }

    fn then(&mut self) -> PResult<Box<ProcExpr>> {
        self.expect(Tok::Semi)?;
        Ok(Box::new(self.process()?))
    }

    fn process(&mut self) -> PResult<ProcExpr> {
        match self.peek().clone() {
            Tok::Case => {
                self.bump();
                let chan = self.ident()?;
                self.expect(Tok::LParen)?;
                let mut branches: Vec<(Label, ProcExpr)> = Vec::new();
                loop {
                    let pos = self.pos();
                    let l = self.label()?;
                    if branches.iter().any(|(m, _)| *m == l) {
                        return Err(SyntaxError::Malformed { pos, msg: format!("duplicate branch `{l}`") });
                    }
                    self.expect(Tok::FatArrow)?;
                    branches.push((l, self.process()?));
                    if !self.eat(&Tok::Bar) {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                Ok(ProcExpr::Case { chan, branches })
            }
            Tok::Close => {
                self.bump();
                Ok(ProcExpr::Close { chan: self.ident()? })
            }
            Tok::Wait => {
                self.bump();
                let chan = self.ident()?;
                Ok(ProcExpr::Wait { chan, cont: self.then()? })
            }
            Tok::Send => {
                self.bump();
                let chan = self.ident()?;
                let payload = self.ident()?;
                Ok(ProcExpr::SendChan { chan, payload, cont: self.then()? })
            }
            Tok::Delay => {
                self.bump();
                let count = if self.eat(&Tok::LBrace) {
                    let e = self.pexpr()?;
                    self.expect(Tok::RBrace)?;
                    e
                } else {
                    ParamExpr::Const(1)
                };
                Ok(ProcExpr::Delay { count, origin: Origin::Source, cont: self.then()? })
            }
            Tok::Tick => {
                self.bump();
                Ok(ProcExpr::Delay { count: ParamExpr::Const(1), origin: Origin::Tick, cont: self.then()? })
            }
            Tok::When => {
                self.bump();
                let chan = self.ident()?;
                Ok(ProcExpr::When { chan, cont: self.then()?, origin: Origin::Source })
            }
            Tok::Now => {
                self.bump();
                let chan = self.ident()?;
                Ok(ProcExpr::Now { chan, cont: self.then()?, origin: Origin::Source })
            }
            Tok::Ident(x) => {
                self.bump();
                match self.peek() {
                    Tok::Dot => {
                        self.bump();
                        let label = self.label()?;
                        Ok(ProcExpr::SendLabel { chan: x, label, cont: self.then()? })
                    }
                    Tok::Colon => {
                        self.bump();
                        let annot = self.ty()?;
                        self.expect(Tok::LArrow)?;
                        self.expect(Tok::LParen)?;
                        let body = self.process()?;
                        self.expect(Tok::RParen)?;
                        let cont = self.then()?;
                        Ok(ProcExpr::Cut { dest: x, annot, body: Box::new(body), cont, origin: Origin::Source })
                    }
                    Tok::LArrow => {
                        self.bump();
                        self.after_arrow(x)
                    }
                    _ => self.fail(&[".", ":", "<-"]),
                }
            }
            _ => self.fail(&["process"]),
        }
    }

    fn after_arrow(&mut self, x: Var) -> PResult<ProcExpr> {
        if self.eat(&Tok::Recv) {
            let chan = self.ident()?;
            return Ok(ProcExpr::RecvChan { bind: x, chan, cont: self.then()? });
        }
        let f = self.ident()?;
        let args = self.index_args()?;
        let explicit_call = !args.is_empty() || self.peek() == &Tok::LArrow || self.peek() == &Tok::Semi;
        let mut chans = Vec::new();
        if self.eat(&Tok::LArrow) {
            while let Tok::Ident(_) = self.peek() {
                chans.push(self.ident()?);
            }
        }
        if self.peek() == &Tok::Semi {
            let cont = self.then()?;
            return Ok(ProcExpr::Spawn { dest: x, proc: f, args, chans, cont, origin: Origin::Source });
        }
        if explicit_call {
            Ok(ProcExpr::TailCall { dest: x, proc: f, args, chans })
        } else {
            // `x <- f` is a forward until name resolution says `f` is a process.
            Ok(ProcExpr::Fwd { dest: x, src: f })
        }
    }
}

pub fn parse_program(src: &str) -> Result<Signature, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0 };
    let sig = p.program()?;
    resolve(sig)
}

/// Parses a single session type, as used on the command line.
pub fn parse_type(src: &str) -> Result<SessionType, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0 };
    let t = p.ty()?;
    if p.peek() != &Tok::Eof {
        return p.fail(&["end of input"]);
    }
    Ok(t)
}

/// Parses a type that may mention the type names of `sig`.
pub fn parse_type_in(sig: &Signature, src: &str) -> Result<SessionType, SyntaxError> {
    let t = parse_type(src)?;
    let arities = type_arities(sig)?;
    check_type(&t, &arities, &HashSet::new(), Pos::default())?;
    Ok(t)
}

/// Parses a single process expression (no name resolution).
pub fn parse_process(src: &str) -> Result<ProcExpr, SyntaxError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0 };
    let e = p.process()?;
    if p.peek() != &Tok::Eof {
        return p.fail(&["end of input"]);
    }
    Ok(e)
}

fn type_arities(sig: &Signature) -> Result<HashMap<String, usize>, SyntaxError> {
    let mut arities = HashMap::new();
    for t in sig.typedefs() {
        if let Some(&a) = arities.get(&t.name) {
            if a != t.pats.len() {
                return Err(SyntaxError::Arity {
                    pos: t.pos,
                    name: t.name.clone(),
                    expected: a,
                    found: t.pats.len(),
                });
            }
            if t.pats.is_empty() {
                return Err(SyntaxError::Malformed { pos: t.pos, msg: format!("type `{}` defined twice", t.name) });
            }
        }
        arities.insert(t.name.clone(), t.pats.len());
    }
    Ok(arities)
}

fn check_pexpr(e: &ParamExpr, params: &HashSet<String>, pos: Pos) -> Result<(), SyntaxError> {
    let mut used = BTreeSet::new();
    e.params(&mut used);
    match used.into_iter().find(|p| !params.contains(p)) {
        Some(name) => Err(SyntaxError::Scope { pos, name }),
        None => Ok(()),
    }
}

fn check_type(
    t: &SessionType,
    arities: &HashMap<String, usize>,
    params: &HashSet<String>,
    pos: Pos,
) -> Result<(), SyntaxError> {
    match t {
        SessionType::One => Ok(()),
        SessionType::Plus(bs) | SessionType::With(bs) => {
            bs.iter().try_for_each(|(_, b)| check_type(b, arities, params, pos))
        }
        SessionType::Tensor(a, b) | SessionType::Lolli(a, b) => {
            check_type(a, arities, params, pos)?;
            check_type(b, arities, params, pos)
        }
        SessionType::Next(n, a) => {
            check_pexpr(n, params, pos)?;
            check_type(a, arities, params, pos)
        }
        SessionType::Box(a) | SessionType::Diamond(a) => check_type(a, arities, params, pos),
        SessionType::Name(n, args) => {
            let Some(&arity) = arities.get(n) else {
                return Err(SyntaxError::Scope { pos, name: n.clone() });
            };
            if arity != args.len() {
                return Err(SyntaxError::Arity { pos, name: n.clone(), expected: arity, found: args.len() });
            }
            args.iter().try_for_each(|e| check_pexpr(e, params, pos))
        }
    }
}

fn pattern_params(pats: &[IndexPat], pos: Pos) -> Result<HashSet<String>, SyntaxError> {
    let mut out = HashSet::new();
    for p in pats {
        if let Some(v) = p.bound_var() {
            if !out.insert(v.to_string()) {
                return Err(SyntaxError::Malformed { pos, msg: format!("index variable `{v}` bound twice") });
            }
        }
    }
    Ok(out)
}

struct Scope<'a> {
    types: &'a HashMap<String, usize>,
    procs: &'a HashMap<String, usize>,
    params: &'a HashSet<String>,
    pos: Pos,
}

impl Scope<'_> {
    fn call(&self, f: &str, args: &[ParamExpr]) -> Result<(), SyntaxError> {
        let Some(&arity) = self.procs.get(f) else {
            return Err(SyntaxError::Scope { pos: self.pos, name: f.to_string() });
        };
        if arity != args.len() {
            return Err(SyntaxError::Arity { pos: self.pos, name: f.to_string(), expected: arity, found: args.len() });
        }
        args.iter().try_for_each(|e| check_pexpr(e, self.params, self.pos))
    }

    fn chan(&self, x: &Var, chans: &HashSet<Var>) -> Result<(), SyntaxError> {
        if chans.contains(x) {
            Ok(())
        } else {
            Err(SyntaxError::Scope { pos: self.pos, name: x.clone() })
        }
    }

    fn with(chans: &HashSet<Var>, x: &Var) -> HashSet<Var> {
        let mut c = chans.clone();
        c.insert(x.clone());
        c
    }

    fn proc(&self, p: ProcExpr, chans: &HashSet<Var>) -> Result<ProcExpr, SyntaxError> {
        Ok(match p {
            ProcExpr::Fwd { dest, src } => {
                self.chan(&dest, chans)?;
                if !chans.contains(&src) && self.procs.contains_key(&src) {
                    self.call(&src, &[])?;
                    ProcExpr::TailCall { dest, proc: src, args: Vec::new(), chans: Vec::new() }
                } else {
                    self.chan(&src, chans)?;
                    ProcExpr::Fwd { dest, src }
                }
            }
            ProcExpr::TailCall { dest, proc, args, chans: ys } => {
                self.call(&proc, &args)?;
                self.chan(&dest, chans)?;
                ys.iter().try_for_each(|y| self.chan(y, chans))?;
                ProcExpr::TailCall { dest, proc, args, chans: ys }
            }
            ProcExpr::Spawn { dest, proc, args, chans: ys, cont, origin } => {
                self.call(&proc, &args)?;
                ys.iter().try_for_each(|y| self.chan(y, chans))?;
                let cont = self.proc(*cont, &Self::with(chans, &dest))?;
                ProcExpr::Spawn { dest, proc, args, chans: ys, cont: Box::new(cont), origin }
            }
            ProcExpr::Cut { dest, annot, body, cont, origin } => {
                check_type(&annot, self.types, self.params, self.pos)?;
                let inner = Self::with(chans, &dest);
                let body = self.proc(*body, &inner)?;
                let cont = self.proc(*cont, &inner)?;
                ProcExpr::Cut { dest, annot, body: Box::new(body), cont: Box::new(cont), origin }
            }
            ProcExpr::SendLabel { chan, label, cont } => {
                self.chan(&chan, chans)?;
                ProcExpr::SendLabel { chan, label, cont: Box::new(self.proc(*cont, chans)?) }
            }
            ProcExpr::Case { chan, branches } => {
                self.chan(&chan, chans)?;
                let branches = branches
                    .into_iter()
                    .map(|(l, b)| Ok((l, self.proc(b, chans)?)))
                    .collect::<Result<_, SyntaxError>>()?;
                ProcExpr::Case { chan, branches }
            }
            ProcExpr::Close { chan } => {
                self.chan(&chan, chans)?;
                ProcExpr::Close { chan }
            }
            ProcExpr::Wait { chan, cont } => {
                self.chan(&chan, chans)?;
                ProcExpr::Wait { chan, cont: Box::new(self.proc(*cont, chans)?) }
            }
            ProcExpr::SendChan { chan, payload, cont } => {
                self.chan(&chan, chans)?;
                self.chan(&payload, chans)?;
                ProcExpr::SendChan { chan, payload, cont: Box::new(self.proc(*cont, chans)?) }
            }
            ProcExpr::RecvChan { bind, chan, cont } => {
                self.chan(&chan, chans)?;
                let cont = self.proc(*cont, &Self::with(chans, &bind))?;
                ProcExpr::RecvChan { bind, chan, cont: Box::new(cont) }
            }
            ProcExpr::Delay { count, origin, cont } => {
                check_pexpr(&count, self.params, self.pos)?;
                ProcExpr::Delay { count, origin, cont: Box::new(self.proc(*cont, chans)?) }
            }
            ProcExpr::When { chan, cont, origin } => {
                self.chan(&chan, chans)?;
                ProcExpr::When { chan, cont: Box::new(self.proc(*cont, chans)?), origin }
            }
            ProcExpr::Now { chan, cont, origin } => {
                self.chan(&chan, chans)?;
                ProcExpr::Now { chan, cont: Box::new(self.proc(*cont, chans)?), origin }
            }
        })
    }
}

/// Checks names, arities and index-variable scoping, and turns `x <- f`
/// into a call when `f` names a process rather than a channel.
fn resolve(sig: Signature) -> Result<Signature, SyntaxError> {
    let types = type_arities(&sig)?;
    let mut procs: HashMap<String, usize> = HashMap::new();
    for d in sig.decls() {
        if let Some(&a) = procs.get(&d.name) {
            if a != d.pats.len() || d.pats.is_empty() {
                return Err(SyntaxError::Malformed { pos: d.pos, msg: format!("process `{}` declared twice", d.name) });
            }
        }
        procs.insert(d.name.clone(), d.pats.len());
    }
    for t in sig.typedefs() {
        let params = pattern_params(&t.pats, t.pos)?;
        if let Some(body) = &t.body {
            check_type(body, &types, &params, t.pos)?;
        }
    }
    for d in sig.decls() {
        let params = pattern_params(&d.pats, d.pos)?;
        let mut seen = HashSet::new();
        for (x, t) in d.ctx.iter().chain(std::iter::once(&d.offer)) {
            if !seen.insert(x) {
                return Err(SyntaxError::Malformed { pos: d.pos, msg: format!("channel `{x}` declared twice") });
            }
            check_type(t, &types, &params, d.pos)?;
        }
    }
    let mut items = Vec::with_capacity(sig.items.len());
    for item in sig.items.iter().cloned() {
        let item = match item {
            Item::Def(def) => {
                let Some(decl) = sig.decls().find(|d| d.name == def.name) else {
                    return Err(SyntaxError::Scope { pos: def.pos, name: def.name.clone() });
                };
                if decl.pats.len() != def.pats.len() {
                    return Err(SyntaxError::Arity {
                        pos: def.pos,
                        name: def.name.clone(),
                        expected: decl.pats.len(),
                        found: def.pats.len(),
                    });
                }
                if decl.ctx.len() != def.chans.len() {
                    return Err(SyntaxError::Malformed {
                        pos: def.pos,
                        msg: format!(
                            "`{}` binds {} channels but its declaration lists {}",
                            def.name,
                            def.chans.len(),
                            decl.ctx.len()
                        ),
                    });
                }
                let params = pattern_params(&def.pats, def.pos)?;
                let mut chans: HashSet<Var> = def.chans.iter().cloned().collect();
                chans.insert(def.dest.clone());
                if chans.len() != def.chans.len() + 1 {
                    return Err(SyntaxError::Malformed { pos: def.pos, msg: "channel bound twice".into() });
                }
                let scope = Scope { types: &types, procs: &procs, params: &params, pos: def.pos };
                let body = scope.proc(def.body, &chans)?;
                Item::Def(ProcDef { body, ..def })
            }
            other => other,
        };
        items.push(item);
    }
    Ok(Signature { items })
}
