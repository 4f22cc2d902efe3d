//! Concrete syntax for systems and terms.
//!
//! ```text
//! file      := { decl | rule | option } ;            (* comments like this *)
//! decl      := "fun" IDENT ":" type ;
//! type      := atom [ "->" type ] ;  atom := "Int" | "Bool" | "(" type ")" | IDENT ;
//! rule      := "rule" term "->" term "[" term "]" ;
//! option    := "option" IDENT VALUE ;
//! term      := or ;
//! or        := and { "\/" and } ;
//! and       := cmp { "/\" cmp } ;
//! cmp       := add [ ("<=" | "<" | ">=" | ">" | "=" | "!=" | "!>" | "!>=") add ] ;
//! add       := mul { ("+" | "-") mul } ;
//! mul       := app { "*" app } ;
//! app       := atom { atom } ;
//! atom      := IDENT | INT | "(" term ")" | "[" OP "]" ;
//! ```
//!
//! Identifiers that are not declared symbols are variables.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Signed;
use thiserror::Error;

use crate::rule::{Rule, RuleError, System};
use crate::signature::{Signature, SignatureError};
use crate::symbol::SymbolKind;
use crate::term::{Term, TermKind};
use crate::theory::TheoryOp;
use crate::types::Type;
use crate::typing::{self, PreTerm, Span, TypeError, VarContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{span}: {msg}")]
    Lex { span: Span, msg: String },
    #[error("{span}: {msg}")]
    Syntax { span: Span, msg: String },
    #[error("{span}: {source}")]
    Signature {
        span: Span,
        #[source]
        source: SignatureError,
    },
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("{span}: rule {index}: {source}")]
    Rule {
        span: Span,
        index: usize,
        #[source]
        source: RuleError,
    },
    #[error("{span}: {msg}")]
    Option { span: Span, msg: String },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Lex { span, .. }
            | ParseError::Syntax { span, .. }
            | ParseError::Signature { span, .. }
            | ParseError::Rule { span, .. }
            | ParseError::Option { span, .. } => *span,
            ParseError::Type(e) => e.span(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Op(&'static str),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Arrow,
    Colon,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Op(o) => write!(f, "`{o}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Colon => f.write_str("`:`"),
        }
    }
}

// longest first
const OPERATORS: [&str; 13] = [
    "!>=", "!>", "!=", "<=", ">=", "/\\", "\\/", "<", ">", "=", "+", "-", "*",
];

const KEYWORDS: [&str; 3] = ["fun", "rule", "option"];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out: Vec<(Tok, Span)> = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let mut j = i + 2;
            while j + 1 < chars.len() && !(chars[j] == '*' && chars[j + 1] == ')') {
                j += 1;
            }
            if j + 1 >= chars.len() {
                return Err(ParseError::Lex {
                    span,
                    msg: "unterminated comment".into(),
                });
            }
            let n = j + 2 - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        let operand_before = matches!(
            out.last(),
            Some((Tok::Ident(_) | Tok::Int(_) | Tok::RParen | Tok::RBrack, _))
        );
        if c.is_ascii_digit() || (c == '-' && !operand_before && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j < chars.len() && is_ident_char(chars[j]) {
                return Err(ParseError::Lex {
                    span,
                    msg: "identifiers cannot start with a digit".into(),
                });
            }
            let s: String = chars[i..j].iter().collect();
            let n = BigInt::from_str(&s).expect("digits");
            out.push((Tok::Int(n), span));
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        if is_ident_start(c) {
            let mut j = i + 1;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            out.push((Tok::Ident(chars[i..j].iter().collect()), span));
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            continue;
        }
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ':' => Some(Tok::Colon),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, span));
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push((Tok::Arrow, span));
            advance(&mut i, &mut line, &mut col, 2);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            Some(op) => {
                out.push((Tok::Op(op), span));
                advance(&mut i, &mut line, &mut col, op.len());
            }
            None => {
                return Err(ParseError::Lex {
                    span,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    Ok(out)
}

/// Binding strength of infix operators; higher binds tighter.
fn infix_level(op: &str) -> Option<u8> {
    match op {
        "\\/" => Some(1),
        "/\\" => Some(2),
        "<=" | "<" | ">=" | ">" | "=" | "!=" | "!>" | "!>=" => Some(3),
        "+" | "-" => Some(4),
        "*" => Some(5),
        _ => None,
    }
}

const APP_LEVEL: u8 = 6;
const ATOM_LEVEL: u8 = 7;

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    end: Span,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let toks = lex(text)?;
        let lines = text.lines().count().max(1);
        let last = text.lines().last().map_or(0, |l| l.chars().count());
        Ok(Parser {
            toks,
            pos: 0,
            end: Span {
                line: lines,
                col: last + 1,
            },
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map_or(self.end, |(_, s)| *s)
    }

    fn bump(&mut self) -> Option<(Tok, Span)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let found = match self.peek() {
            Some(t) => format!("found {t}"),
            None => "found end of input".to_string(),
        };
        Err(ParseError::Syntax {
            span: self.span(),
            msg: format!("{}, {found}", msg.into()),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<Span, ParseError> {
        if self.peek() == Some(&want) {
            Ok(self.bump().unwrap().1)
        } else {
            self.error(format!("expected {want}"))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let (t, sp) = self.bump().unwrap();
                match t {
                    Tok::Ident(s) => Ok((s, sp)),
                    _ => unreachable!(),
                }
            }
            _ => self.error("expected an identifier"),
        }
    }

    fn is_section(&self) -> bool {
        matches!(
            (self.peek(), self.peek_at(1), self.peek_at(2)),
            (Some(Tok::LBrack), Some(Tok::Op(_)), Some(Tok::RBrack))
        )
    }

    fn at_atom(&self) -> bool {
        match self.peek() {
            Some(Tok::Ident(s)) => !KEYWORDS.contains(&s.as_str()),
            Some(Tok::Int(_)) | Some(Tok::LParen) => true,
            Some(Tok::LBrack) => self.is_section(),
            _ => false,
        }
    }

    fn term(&mut self) -> Result<PreTerm, ParseError> {
        self.infix(1)
    }

    fn infix(&mut self, level: u8) -> Result<PreTerm, ParseError> {
        if level >= APP_LEVEL {
            return self.app();
        }
        let mut left = self.infix(level + 1)?;
        loop {
            let (op, span) = match self.toks.get(self.pos) {
                Some((Tok::Op(op), span)) if infix_level(op) == Some(level) => (*op, *span),
                _ => return Ok(left),
            };
            self.pos += 1;
            let right = self.infix(level + 1)?;
            left = PreTerm::app(PreTerm::app(PreTerm::name(op, span), left), right);
            if level == 3 {
                // comparisons do not chain
                if let Some(Tok::Op(o)) = self.peek() {
                    if infix_level(o) == Some(3) {
                        return self.error("comparison operators do not associate; add parentheses");
                    }
                }
                return Ok(left);
            }
        }
    }

    fn app(&mut self) -> Result<PreTerm, ParseError> {
        let mut t = self.atom()?;
        while self.at_atom() {
            let arg = self.atom()?;
            t = PreTerm::app(t, arg);
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<PreTerm, ParseError> {
        let span = self.span();
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(PreTerm::name(&s, span))
            }
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(PreTerm::int(n, span))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::LBrack) if self.is_section() => {
                let op = match &self.toks[self.pos + 1].0 {
                    Tok::Op(o) => *o,
                    _ => unreachable!(),
                };
                self.pos += 3;
                Ok(PreTerm::name(op, span))
            }
            _ => self.error("expected a term"),
        }
    }

    fn ty(&mut self, sig: &mut Signature) -> Result<Type, ParseError> {
        let arg = match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.ty(sig)?;
                self.expect(Tok::RParen)?;
                t
            }
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Type::Base(sig.sort(&s))
            }
            _ => return self.error("expected a type"),
        };
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let res = self.ty(sig)?;
            Ok(Type::arrow(arg, res))
        } else {
            Ok(arg)
        }
    }
}

/// A declaration as written in a file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Declaration {
    pub name: String,
    pub ty: Type,
    pub span: Span,
}

/// A rule as written in a file, before typechecking.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleText {
    pub lhs: PreTerm,
    pub rhs: PreTerm,
    pub constraint: PreTerm,
    pub span: Span,
}

/// The raw contents of a system file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SystemFile {
    pub declarations: Vec<Declaration>,
    pub rules: Vec<RuleText>,
    pub options: Vec<(String, String, Span)>,
}

/// Parses a file without typechecking.
pub fn parse_file(text: &str) -> Result<(SystemFile, Signature), ParseError> {
    let mut p = Parser::new(text)?;
    let mut file = SystemFile::default();
    let mut sig = Signature::new();
    while let Some(tok) = p.peek().cloned() {
        let span = p.span();
        match tok {
            Tok::Ident(k) if k == "fun" => {
                p.pos += 1;
                let (name, nspan) = match p.peek() {
                    // allow declaring names that collide with builtins so the error is precise
                    Some(Tok::Ident(_)) => p.ident()?,
                    _ => return p.error("expected a symbol name"),
                };
                p.expect(Tok::Colon)?;
                let ty = p.ty(&mut sig)?;
                sig.declare(&name, ty.clone())
                    .map_err(|source| ParseError::Signature { span: nspan, source })?;
                file.declarations.push(Declaration { name, ty, span });
            }
            Tok::Ident(k) if k == "rule" => {
                p.pos += 1;
                let lhs = p.term()?;
                p.expect(Tok::Arrow)?;
                let rhs = p.term()?;
                p.expect(Tok::LBrack)?;
                let constraint = p.term()?;
                p.expect(Tok::RBrack)?;
                file.rules.push(RuleText {
                    lhs,
                    rhs,
                    constraint,
                    span,
                });
            }
            Tok::Ident(k) if k == "option" => {
                p.pos += 1;
                let (key, _) = p.ident()?;
                let value = match p.bump() {
                    Some((Tok::Ident(s), _)) => s,
                    Some((Tok::Int(n), _)) => n.to_string(),
                    Some((Tok::Op("-"), _)) if matches!(p.peek(), Some(Tok::Int(_))) => match p.bump() {
                        Some((Tok::Int(n), _)) => (-n).to_string(),
                        _ => unreachable!(),
                    },
                    _ => {
                        p.pos -= 1;
                        return p.error("expected an option value");
                    }
                };
                file.options.push((key, value, span));
            }
            _ => return p.error("expected `fun`, `rule` or `option`"),
        }
    }
    Ok((file, sig))
}

/// Parses, typechecks and validates a system file.
pub fn parse_system(text: &str) -> Result<(SystemFile, System), ParseError> {
    let (file, sig) = parse_file(text)?;
    let mut rules = Vec::with_capacity(file.rules.len());
    for (i, rt) in file.rules.iter().enumerate() {
        let (mut terms, _) = typing::typecheck_all(&[&rt.lhs, &rt.rhs, &rt.constraint], &sig, &VarContext::open())?;
        let constraint = terms.pop().unwrap();
        let rhs = terms.pop().unwrap();
        let lhs = terms.pop().unwrap();
        let rule = Rule::new(lhs, rhs, constraint).map_err(|source| ParseError::Rule {
            span: rt.span,
            index: i + 1,
            source,
        })?;
        rules.push(rule);
    }
    let mut system = System::new(sig, rules);
    for (key, value, span) in &file.options {
        match key.as_str() {
            "bound" => {
                let b = BigInt::from_str(value).map_err(|_| ParseError::Option {
                    span: *span,
                    msg: format!("bound must be an integer, found `{value}`"),
                })?;
                system.bounds.push(b);
            }
            _ => {
                return Err(ParseError::Option {
                    span: *span,
                    msg: format!("unknown option `{key}`"),
                })
            }
        }
    }
    if let Some(b) = system.bounds.first() {
        system.theory.bound = b.clone();
    }
    Ok((file, system))
}

/// Parses a term over the system's signature.
pub fn parse_term(text: &str, sig: &Signature, ctx: &VarContext) -> Result<Term, ParseError> {
    let pre = parse_preterm(text)?;
    Ok(typing::typecheck(&pre, sig, ctx)?)
}

/// Parses a term without typechecking it.
pub fn parse_preterm(text: &str) -> Result<PreTerm, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    if p.peek().is_some() {
        return p.error("unexpected input after term");
    }
    Ok(t)
}

/// Parses a type such as `(Int -> Int) -> Int`.
pub fn parse_type(text: &str, sig: &mut Signature) -> Result<Type, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.ty(sig)?;
    if p.peek().is_some() {
        return p.error("unexpected input after type");
    }
    Ok(t)
}

fn infix_op(t: &Term) -> Option<TheoryOp> {
    t.as_symbol().and_then(|f| f.op()).filter(|op| *op != TheoryOp::Not)
}

fn print_at(t: &Term, need: u8, out: &mut String) {
    let (head, args) = t.head_args();
    if let Some(op) = infix_op(head) {
        if args.len() == 2 {
            let level = infix_level(op.name()).expect("binary operator");
            let right_need = level + 1;
            let left_need = if level == 3 { level + 1 } else { level };
            let paren = level < need;
            if paren {
                out.push('(');
            }
            print_at(args[0], left_need, out);
            out.push(' ');
            out.push_str(op.name());
            out.push(' ');
            print_at(args[1], right_need, out);
            if paren {
                out.push(')');
            }
            return;
        }
    }
    if args.is_empty() {
        print_leaf(head, need, out);
        return;
    }
    let paren = APP_LEVEL < need;
    if paren {
        out.push('(');
    }
    print_leaf(head, ATOM_LEVEL, out);
    for a in args {
        out.push(' ');
        print_at(a, ATOM_LEVEL, out);
    }
    if paren {
        out.push(')');
    }
}

fn print_leaf(t: &Term, need: u8, out: &mut String) {
    match t.kind() {
        TermKind::Var(x) => out.push_str(x.name()),
        TermKind::Sym(f) => match f.kind() {
            SymbolKind::Int(n) if n.is_negative() && need > APP_LEVEL => {
                out.push('(');
                out.push_str(f.name());
                out.push(')');
            }
            SymbolKind::Op(op) if *op != TheoryOp::Not => {
                out.push('[');
                out.push_str(op.name());
                out.push(']');
            }
            _ => out.push_str(f.name()),
        },
        TermKind::App(..) => unreachable!("leaves are not applications"),
    }
}

/// Prints a term with minimal parentheses. Fully applied binary operators are infix;
/// other uses of them are written `[op]`.
pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    print_at(t, 0, &mut out);
    out
}

/// Prints a system in the file format.
pub fn print_system(system: &System) -> String {
    let mut out = String::new();
    for f in system.signature.declared() {
        out.push_str(&format!("fun {} : {}\n", f.name(), f.ty()));
    }
    for b in &system.bounds {
        out.push_str(&format!("option bound {b}\n"));
    }
    for r in &system.rules {
        out.push_str(&format!("rule {r}\n"));
    }
    out
}
