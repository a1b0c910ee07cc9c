use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::ast::{Binder, BoundKind, Formula, NamedTU, RefinedAnnot, SimpleType, ThresholdBound};
use crate::rational::parse_rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Num(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Num(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const SYMBOLS: &[&str] = &[
    "\\/", "/\\", "->", ">=", "<=", "\\", "[", "]", ">", "(", ")", ".", ":", "*", "{", "}", ";", ",", "=",
];

pub(crate) const KEYWORDS: &[&str] = &["top", "bot", "box", "dia", "avg", "mu", "nu"];

/// Splits `text` into tokens with 1-based positions. `#` starts a line comment.
pub(crate) fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let is_start = |c: char| c.is_ascii_alphabetic() || c == '_' || c == '~';
    let is_cont = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '\'';
    while i < chars.len() {
        let c = chars[i];
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
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if is_start(c) {
            let s = i;
            i += 1;
            while i < chars.len() && is_cont(chars[i]) {
                i += 1;
            }
            let word: String = chars[s..i].iter().collect();
            col += i - s;
            out.push((Tok::Ident(word), l0, c0));
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && (chars[i] == '/' || chars[i] == '.') && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // State names such as `1'` are allowed inside annotations.
            while i < chars.len() && is_cont(chars[i]) {
                i += 1;
            }
            let word: String = chars[s..i].iter().collect();
            col += i - s;
            out.push((Tok::Num(word), l0, c0));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push((Tok::Sym(s), l0, c0));
            }
            None => return Err(ParseError { line, col, msg: format!("unexpected character `{c}`") }),
        }
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

pub(crate) struct Cursor {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Cursor {
    pub(crate) fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Cursor { toks: lex(text)?, pos: 0 })
    }
    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }
    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }
    pub(crate) fn error(&self, msg: impl Into<String>) -> ParseError {
        let (_, line, col) = &self.toks[self.pos];
        ParseError { line: *line, col: *col, msg: msg.into() }
    }
    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }
    pub(crate) fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }
    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.peek())))
        }
    }
    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }
}

/// Parses a closed formula. Identifiers bound by an enclosing binder are variables; all other
/// identifiers are atoms.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse_formula_with_vars(text, &[])
}

/// Like [`parse_formula`] but treats the given names as free variables.
pub fn parse_formula_with_vars(text: &str, free: &[&str]) -> Result<Formula, ParseError> {
    let mut p = Parser { cur: Cursor::new(text)?, scope: free.iter().map(|s| s.to_string()).collect() };
    let f = p.expr()?;
    if !p.cur.at_eof() {
        return Err(p.cur.error(format!("unexpected {}", p.cur.peek())));
    }
    Ok(f)
}

/// Parses a type annotation: a simple type (`*`, `*->*`, ...) or a refined type (`{s0;s1}->{;}`).
pub fn parse_type_annot(text: &str) -> Result<(SimpleType, Option<RefinedAnnot>), ParseError> {
    let mut c = Cursor::new(text)?;
    let r = parse_annot(&mut c)?;
    if !c.at_eof() {
        return Err(c.error(format!("unexpected {}", c.peek())));
    }
    Ok(r)
}

enum AnnotPiece {
    Simple(SimpleType),
    TU(NamedTU),
}

pub(crate) fn parse_annot(c: &mut Cursor) -> Result<(SimpleType, Option<RefinedAnnot>), ParseError> {
    let mut pieces = alloc::vec![parse_annot_atom(c)?];
    while c.is_sym("->") {
        c.bump();
        pieces.push(parse_annot_atom(c)?);
    }
    let refined = pieces.iter().any(|p| matches!(p, AnnotPiece::TU(_)));
    if refined {
        let mut tus = Vec::new();
        for p in pieces {
            match p {
                AnnotPiece::TU(tu) => tus.push(tu),
                AnnotPiece::Simple(_) => return Err(c.error("refined annotations may only combine `{T;U}` blocks")),
            }
        }
        let result = tus.pop().expect("nonempty");
        let annot = RefinedAnnot { args: tus, result };
        Ok((annot.erase(), Some(annot)))
    } else {
        let mut tys: Vec<SimpleType> = pieces
            .into_iter()
            .map(|p| match p {
                AnnotPiece::Simple(t) => t,
                AnnotPiece::TU(_) => unreachable!(),
            })
            .collect();
        let mut acc = tys.pop().expect("nonempty");
        while let Some(a) = tys.pop() {
            acc = SimpleType::arrow(a, acc);
        }
        Ok((acc, None))
    }
}

fn parse_annot_atom(c: &mut Cursor) -> Result<AnnotPiece, ParseError> {
    if c.is_sym("*") {
        c.bump();
        return Ok(AnnotPiece::Simple(SimpleType::Prop));
    }
    if c.is_sym("(") {
        c.bump();
        let (t, r) = parse_annot(c)?;
        if r.is_some() {
            return Err(c.error("refined types cannot appear in argument position of an arrow argument"));
        }
        c.expect_sym(")")?;
        return Ok(AnnotPiece::Simple(t));
    }
    if c.is_sym("{") {
        c.bump();
        let t = parse_names(c)?;
        c.expect_sym(";")?;
        let u = parse_names(c)?;
        c.expect_sym("}")?;
        return Ok(AnnotPiece::TU(NamedTU { t, u }));
    }
    Err(c.error(format!("expected a type, found {}", c.peek())))
}

fn parse_names(c: &mut Cursor) -> Result<Vec<String>, ParseError> {
    let mut out = Vec::new();
    loop {
        match c.peek().clone() {
            Tok::Ident(s) | Tok::Num(s) => {
                c.bump();
                out.push(s);
            }
            _ => break,
        }
        if c.is_sym(",") {
            c.bump();
        } else {
            break;
        }
    }
    Ok(out)
}

struct Parser {
    cur: Cursor,
    scope: Vec<String>,
}

impl Parser {
    fn starts_binder(&self) -> bool {
        self.cur.is_kw("mu") || self.cur.is_kw("nu") || self.cur.is_sym("\\")
    }

    fn starts_operand(&self) -> bool {
        match self.cur.peek() {
            Tok::Ident(_) => true,
            Tok::Sym(s) => matches!(*s, "(" | "[" | "\\"),
            _ => false,
        }
    }

    fn expr(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conj()?;
        while self.cur.is_sym("\\/") {
            self.cur.bump();
            let rhs = self.conj()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.app()?;
        while self.cur.is_sym("/\\") {
            self.cur.bump();
            let rhs = self.app()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn app(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.starts_operand() {
            let a = self.unary()?;
            f = Formula::app(f, a);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.cur.is_kw("box") {
            self.cur.bump();
            return Ok(Formula::boxed(self.unary()?));
        }
        if self.cur.is_kw("dia") {
            self.cur.bump();
            return Ok(Formula::dia(self.unary()?));
        }
        if self.cur.is_kw("avg") {
            self.cur.bump();
            return Ok(Formula::avg(self.unary()?));
        }
        self.atomic()
    }

    fn atomic(&mut self) -> Result<Formula, ParseError> {
        if self.starts_binder() {
            return self.binder();
        }
        match self.cur.peek().clone() {
            Tok::Ident(s) => {
                if s == "top" {
                    self.cur.bump();
                    return Ok(Formula::Top);
                }
                if s == "bot" {
                    self.cur.bump();
                    return Ok(Formula::Bot);
                }
                if KEYWORDS.contains(&s.as_str()) {
                    return Err(self.cur.error(format!("unexpected keyword `{s}`")));
                }
                self.cur.bump();
                if self.scope.iter().any(|v| *v == s) {
                    Ok(Formula::Var(s))
                } else {
                    Ok(Formula::Atom(s))
                }
            }
            Tok::Sym("(") => {
                self.cur.bump();
                let f = self.expr()?;
                self.cur.expect_sym(")")?;
                Ok(f)
            }
            Tok::Sym("[") => {
                self.cur.bump();
                let body = self.expr()?;
                self.cur.expect_sym("]")?;
                let kind = if self.cur.is_sym(">=") {
                    BoundKind::Ge
                } else if self.cur.is_sym(">") {
                    BoundKind::Gt
                } else {
                    return Err(self.cur.error(format!("expected `>=` or `>`, found {}", self.cur.peek())));
                };
                self.cur.bump();
                let err = self.cur.error("expected a rational bound");
                let r = match self.cur.bump() {
                    Tok::Num(s) => parse_rational(&s).map_err(|_| err.clone())?,
                    _ => return Err(err),
                };
                let bound = ThresholdBound::new(kind, r).map_err(|e| ParseError { msg: e.to_string(), ..err })?;
                Ok(Formula::threshold(body, bound))
            }
            t => Err(self.cur.error(format!("expected a formula, found {t}"))),
        }
    }

    fn binder(&mut self) -> Result<Formula, ParseError> {
        let kind = self.cur.bump();
        let name = match self.cur.bump() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && !s.starts_with('~') => s,
            t => return Err(self.cur.error(format!("expected a variable name, found {t}"))),
        };
        let (ty, refined) = if self.cur.is_sym(":") {
            self.cur.bump();
            parse_annot(&mut self.cur)?
        } else {
            (SimpleType::Prop, None)
        };
        self.cur.expect_sym(".")?;
        self.scope.push(name.clone());
        let body = self.expr();
        self.scope.pop();
        let body = body?;
        let b = Binder { name, ty, refined };
        Ok(match kind {
            Tok::Ident(k) if k == "mu" => Formula::mu(b, body),
            Tok::Ident(k) if k == "nu" => Formula::nu(b, body),
            _ => Formula::lam(b, body),
        })
    }
}

/// Names that would be misread if used as a binder: keywords and the given atoms.
pub(crate) fn reserved_names(atoms: &[String]) -> BTreeSet<String> {
    let mut s: BTreeSet<String> = KEYWORDS.iter().map(|k| k.to_string()).collect();
    s.extend(atoms.iter().cloned());
    s
}
