use super::ast::Pos;
use super::SyntaxError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(u64),
    Dollar,
    // keywords
    Type,
    Decl,
    Proc,
    Case,
    Close,
    Wait,
    Send,
    Recv,
    Delay,
    Tick,
    When,
    Now,
    // punctuation
    LArrow,
    FatArrow,
    Turnstile,
    Lolli,
    Unit,
    BoxOp,
    DiaOp,
    Plus,
    Amp,
    Star,
    Caret,
    Eq,
    Comma,
    Colon,
    Semi,
    Dot,
    Bar,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.spelling()),
        }
    }

    pub fn spelling(&self) -> &'static str {
        match self {
            Tok::Ident(_) => "identifier",
            Tok::Num(_) => "number",
            Tok::Dollar => "$",
            Tok::Type => "type",
            Tok::Decl => "decl",
            Tok::Proc => "proc",
            Tok::Case => "case",
            Tok::Close => "close",
            Tok::Wait => "wait",
            Tok::Send => "send",
            Tok::Recv => "recv",
            Tok::Delay => "delay",
            Tok::Tick => "tick",
            Tok::When => "when?",
            Tok::Now => "now!",
            Tok::LArrow => "<-",
            Tok::FatArrow => "=>",
            Tok::Turnstile => "|-",
            Tok::Lolli => "-o",
            Tok::Unit => "()",
            Tok::BoxOp => "[]",
            Tok::DiaOp => "<>",
            Tok::Plus => "+",
            Tok::Amp => "&",
            Tok::Star => "*",
            Tok::Caret => "^",
            Tok::Eq => "=",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::Bar => "|",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Eof => "end of input",
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "type" => Tok::Type,
        "decl" => Tok::Decl,
        "proc" => Tok::Proc,
        "case" => Tok::Case,
        "close" => Tok::Close,
        "wait" => Tok::Wait,
        "send" => Tok::Send,
        "recv" => Tok::Recv,
        "delay" => Tok::Delay,
        "tick" => Tok::Tick,
        _ => return None,
    })
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '$'
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let peek = chars.get(i + 1).copied();
        let two = |a: char, b: char| c == a && peek == Some(b);
        let (tok, len) = if is_ident_start(c) {
            let start = i;
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            match (word.as_str(), chars.get(j)) {
                ("when", Some('?')) => (Tok::When, j - start + 1),
                ("now", Some('!')) => (Tok::Now, j - start + 1),
                _ => (keyword(&word).unwrap_or(Tok::Ident(word)), j - start),
            }
        } else if c.is_ascii_digit() {
            let start = i;
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let text: String = chars[start..j].iter().collect();
            let n = text.parse::<u64>().map_err(|_| SyntaxError::Parse {
                line,
                col,
                expected: vec!["number that fits in 64 bits".into()],
                found: text.clone(),
            })?;
            (Tok::Num(n), j - start)
        } else if two('<', '-') {
            (Tok::LArrow, 2)
        } else if two('<', '>') {
            (Tok::DiaOp, 2)
        } else if two('=', '>') {
            (Tok::FatArrow, 2)
        } else if two('|', '-') {
            (Tok::Turnstile, 2)
        } else if two('-', 'o') && !chars.get(i + 2).is_some_and(|&d| is_ident_char(d)) {
            (Tok::Lolli, 2)
        } else if two('(', ')') {
            (Tok::Unit, 2)
        } else if two('[', ']') {
            (Tok::BoxOp, 2)
        } else {
            let t = match c {
                '$' => Tok::Dollar,
                '+' => Tok::Plus,
                '&' => Tok::Amp,
                '*' => Tok::Star,
                '^' => Tok::Caret,
                '=' => Tok::Eq,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                ';' => Tok::Semi,
                '.' => Tok::Dot,
                '|' => Tok::Bar,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                other => {
                    return Err(SyntaxError::Parse {
                        line,
                        col,
                        expected: vec!["a token".into()],
                        found: format!("character `{other}`"),
                    })
                }
            };
            (t, 1)
        };
        out.push((tok, pos));
        i += len;
        col += len;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
