use std::fmt::Write;

use super::ast::*;

const MARK: &str = "% reconstructed";

pub fn print_pexpr(e: &ParamExpr) -> String {
    fn go(e: &ParamExpr, level: u8, out: &mut String) {
        // level 0: sum position, 1: product operand, 2: right product operand
        match e {
            ParamExpr::Const(n) => write!(out, "{n}").unwrap(),
            ParamExpr::Param(p) => out.push_str(p),
            ParamExpr::Add(a, b) => {
                let paren = level > 0;
                if paren {
                    out.push('(');
                }
                go(a, 0, out);
                out.push('+');
                go(b, 1, out);
                if paren {
                    out.push(')');
                }
            }
            ParamExpr::Mul(a, b) => {
                let paren = level > 1;
                if paren {
                    out.push('(');
                }
                go(a, 1, out);
                out.push('*');
                go(b, 2, out);
                if paren {
                    out.push(')');
                }
            }
        }
    }
    let mut s = String::new();
    go(e, 0, &mut s);
    s
}

fn print_args(args: &[ParamExpr]) -> String {
    if args.is_empty() {
        String::new()
    } else {
        let parts: Vec<String> = args.iter().map(print_pexpr).collect();
        format!("[{}]", parts.join(", "))
    }
}

pub fn print_type(t: &SessionType) -> String {
    let mut s = String::new();
    ty(t, 0, &mut s);
    s
}

fn ty(t: &SessionType, prec: u8, out: &mut String) {
    match t {
        SessionType::Lolli(a, b) => {
            if prec > 0 {
                out.push('(');
            }
            ty(a, 1, out);
            out.push_str(" -o ");
            ty(b, 0, out);
            if prec > 0 {
                out.push(')');
            }
        }
        SessionType::Tensor(a, b) => {
            if prec > 1 {
                out.push('(');
            }
            ty(a, 2, out);
            out.push_str(" * ");
            ty(b, 1, out);
            if prec > 1 {
                out.push(')');
            }
        }
        SessionType::Next(n, a) => {
            match n {
                ParamExpr::Const(1) => out.push_str("()"),
                ParamExpr::Const(k) => write!(out, "()^{k} ").unwrap(),
                e => write!(out, "()^{{{}}} ", print_pexpr(e)).unwrap(),
            }
            ty(a, 2, out);
        }
        SessionType::Box(a) => {
            out.push_str("[]");
            ty(a, 2, out);
        }
        SessionType::Diamond(a) => {
            out.push_str("<>");
            ty(a, 2, out);
        }
        SessionType::One => out.push('1'),
        SessionType::Plus(bs) | SessionType::With(bs) => {
            out.push_str(if matches!(t, SessionType::Plus(_)) { "+{" } else { "&{" });
            for (i, (l, b)) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{l} : ").unwrap();
                ty(b, 0, out);
            }
            out.push('}');
        }
        SessionType::Name(n, args) => {
            out.push_str(n);
            out.push_str(&print_args(args));
        }
    }
}

pub fn print_pats(pats: &[IndexPat]) -> String {
    if pats.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = pats
        .iter()
        .map(|p| match p {
            IndexPat::Var(v) => v.clone(),
            IndexPat::Zero => "0".to_string(),
            IndexPat::Succ(v) => format!("{v}+1"),
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

fn pad(n: usize) -> String {
    " ".repeat(n)
}

fn mark(origin: Origin) -> &'static str {
    if origin == Origin::Reconstructed {
        MARK
    } else {
        ""
    }
}

fn line(out: &mut String, indent: usize, text: &str, note: &str) {
    out.push_str(&pad(indent));
    out.push_str(text);
    if !note.is_empty() {
        out.push(' ');
        out.push_str(note);
    }
    out.push('\n');
}

fn call(dest: &str, proc: &str, args: &[ParamExpr], chans: &[Var]) -> String {
    let mut s = format!("{dest} <- {proc}{}", print_args(args));
    if !chans.is_empty() {
        write!(s, " <- {}", chans.join(" ")).unwrap();
    }
    s
}

/// Prints a process, one action per line.
pub fn print_process(p: &ProcExpr, indent: usize) -> String {
    let mut out = String::new();
    proc(p, indent, &mut out);
    out
}

fn proc(p: &ProcExpr, k: usize, out: &mut String) {
    match p {
        ProcExpr::Spawn { dest, proc: f, args, chans, cont, origin } => {
            line(out, k, &format!("{} ;", call(dest, f, args, chans)), mark(*origin));
            proc(cont, k, out);
        }
        ProcExpr::TailCall { dest, proc: f, args, chans } => line(out, k, &call(dest, f, args, chans), ""),
        ProcExpr::Cut { dest, annot, body, cont, origin } => {
            line(out, k, &format!("{dest} : {} <- (", print_type(annot)), mark(*origin));
            proc(body, k + 2, out);
            line(out, k, ") ;", "");
            proc(cont, k, out);
        }
        ProcExpr::Fwd { dest, src } => line(out, k, &format!("{dest} <- {src}"), ""),
        ProcExpr::SendLabel { chan, label, cont } => {
            line(out, k, &format!("{chan}.{label} ;"), "");
            proc(cont, k, out);
        }
        ProcExpr::Case { chan, branches } => {
            line(out, k, &format!("case {chan}"), "");
            for (i, (l, b)) in branches.iter().enumerate() {
                line(out, k, &format!("{} {l} =>", if i == 0 { "(" } else { "|" }), "");
                proc(b, k + 4, out);
            }
            line(out, k, ")", "");
        }
        ProcExpr::Close { chan } => line(out, k, &format!("close {chan}"), ""),
        ProcExpr::Wait { chan, cont } => {
            line(out, k, &format!("wait {chan} ;"), "");
            proc(cont, k, out);
        }
        ProcExpr::SendChan { chan, payload, cont } => {
            line(out, k, &format!("send {chan} {payload} ;"), "");
            proc(cont, k, out);
        }
        ProcExpr::RecvChan { bind, chan, cont } => {
            line(out, k, &format!("{bind} <- recv {chan} ;"), "");
            proc(cont, k, out);
        }
        ProcExpr::Delay { count, origin, cont } => {
            let text = match (origin, count) {
                (Origin::Tick, ParamExpr::Const(1)) => "tick ;".to_string(),
                (_, ParamExpr::Const(1)) => "delay ;".to_string(),
                (_, e) => format!("delay{{{}}} ;", print_pexpr(e)),
            };
            line(out, k, &text, mark(*origin));
            proc(cont, k, out);
        }
        ProcExpr::When { chan, cont, origin } => {
            line(out, k, &format!("when? {chan} ;"), mark(*origin));
            proc(cont, k, out);
        }
        ProcExpr::Now { chan, cont, origin } => {
            line(out, k, &format!("now! {chan} ;"), mark(*origin));
            proc(cont, k, out);
        }
    }
}

pub fn print_decl(d: &ProcDecl) -> String {
    let mut s = format!("decl {}{} :", d.name, print_pats(&d.pats));
    for (x, t) in &d.ctx {
        write!(s, " ({x} : {})", print_type(t)).unwrap();
    }
    write!(s, " |- ({} : {})", d.offer.0, print_type(&d.offer.1)).unwrap();
    s
}

pub fn print_item(item: &Item) -> String {
    match item {
        Item::Type(t) => match &t.body {
            Some(b) => format!("type {}{} = {}\n", t.name, print_pats(&t.pats), print_type(b)),
            None => format!("type {}{}\n", t.name, print_pats(&t.pats)),
        },
        Item::Decl(d) => format!("{}\n", print_decl(d)),
        Item::Def(d) => {
            let mut s = format!("proc {} <- {}{}", d.dest, d.name, print_pats(&d.pats));
            if !d.chans.is_empty() {
                write!(s, " <- {}", d.chans.join(" ")).unwrap();
            }
            s.push_str(" =\n");
            s.push_str(&print_process(&d.body, 2));
            s
        }
    }
}

pub fn pretty_print(sig: &Signature) -> String {
    let mut out = String::new();
    let mut prev_def = false;
    for item in &sig.items {
        let is_type = matches!(item, Item::Type(_));
        if !out.is_empty() && (prev_def || !is_type) && !matches!(item, Item::Def(_)) {
            out.push('\n');
        }
        out.push_str(&print_item(item));
        prev_def = matches!(item, Item::Def(_));
    }
    out
}
