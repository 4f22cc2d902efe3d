//! Type inference for untyped term trees.
//!
//! Symbols carry their declared types. Variables get a type variable on first use and the
//! constraints from application are solved by first-order unification. All type variables
//! must be resolved to concrete types at the end; there is no polymorphism.

use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use num_bigint::BigInt;
use thiserror::Error;

use crate::signature::{Resolved, Signature};
use crate::symbol::{FunctionSymbol, Variable};
use crate::term::Term;
use crate::theory::{self, OrderSort, TheoryOp};
use crate::types::{Sort, Type};

/// A 1-based source location.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// An untyped term tree as produced by the parser.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreTerm {
    pub kind: PreKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PreKind {
    /// An identifier or operator name.
    Name(String),
    Int(BigInt),
    App(Box<PreTerm>, Box<PreTerm>),
}

impl PreTerm {
    pub fn name(name: &str, span: Span) -> Self {
        PreTerm {
            kind: PreKind::Name(name.to_string()),
            span,
        }
    }

    pub fn int(n: BigInt, span: Span) -> Self {
        PreTerm {
            kind: PreKind::Int(n),
            span,
        }
    }

    pub fn app(head: PreTerm, arg: PreTerm) -> Self {
        let span = head.span;
        PreTerm {
            kind: PreKind::App(Box::new(head), Box::new(arg)),
            span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{span}: unknown symbol `{name}`")]
    UnknownSymbol { name: String, span: Span },
    #[error("{span}: `{term}` has base type {ty} and cannot be applied")]
    NotAFunction { term: String, ty: String, span: Span },
    #[error("{span}: argument has type {found}, expected {expected}")]
    Mismatch {
        expected: String,
        found: String,
        span: Span,
    },
    #[error("{span}: variable `{name}` used at type {first} and at type {second}")]
    VariableConflict {
        name: String,
        first: String,
        second: String,
        span: Span,
    },
    #[error("{span}: cannot determine the type of variable `{name}`")]
    Ambiguous { name: String, span: Span },
    #[error("{span}: `{op}` needs arguments of sort Int or Bool, found {found}")]
    OrderingSort { op: String, found: String, span: Span },
}

impl TypeError {
    pub fn span(&self) -> Span {
        match self {
            TypeError::UnknownSymbol { span, .. }
            | TypeError::NotAFunction { span, .. }
            | TypeError::Mismatch { span, .. }
            | TypeError::VariableConflict { span, .. }
            | TypeError::Ambiguous { span, .. }
            | TypeError::OrderingSort { span, .. } => *span,
        }
    }
}

/// Variable typing environment shared by the terms of one rule.
#[derive(Clone, Debug, Default)]
pub struct VarContext {
    fixed: BTreeMap<String, Type>,
    /// Whether unknown names may become fresh variables.
    pub allow_fresh: bool,
}

impl VarContext {
    /// Unknown identifiers become variables with inferred types.
    pub fn open() -> Self {
        VarContext {
            fixed: BTreeMap::new(),
            allow_fresh: true,
        }
    }

    /// Only the given variables are allowed.
    pub fn closed<I: IntoIterator<Item = Variable>>(vars: I) -> Self {
        let mut c = VarContext::default();
        for v in vars {
            c.fixed.insert(v.name().to_string(), v.ty().clone());
        }
        c
    }

    pub fn with(mut self, var: Variable) -> Self {
        self.fixed.insert(var.name().to_string(), var.ty().clone());
        self
    }

    pub fn get(&self, name: &str) -> Option<&Type> {
        self.fixed.get(name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum IType {
    Meta(usize),
    Base(Sort),
    Arrow(Rc<IType>, Rc<IType>),
}

impl IType {
    fn from_type(ty: &Type) -> IType {
        match ty {
            Type::Base(s) => IType::Base(s.clone()),
            Type::Arrow(a, b) => IType::Arrow(Rc::new(Self::from_type(a)), Rc::new(Self::from_type(b))),
        }
    }
}

enum Elab {
    Sym(FunctionSymbol),
    Ordering { strict: bool, meta: usize, span: Span },
    Var(String),
    App(Box<Elab>, Box<Elab>),
}

struct Inference<'a> {
    sig: &'a Signature,
    ctx: &'a VarContext,
    metas: Vec<Option<IType>>,
    vars: BTreeMap<String, (IType, Span)>,
}

impl<'a> Inference<'a> {
    fn fresh(&mut self) -> IType {
        self.metas.push(None);
        IType::Meta(self.metas.len() - 1)
    }

    fn shallow(&self, t: &IType) -> IType {
        let mut t = t.clone();
        while let IType::Meta(m) = t {
            match &self.metas[m] {
                Some(u) => t = u.clone(),
                None => return t,
            }
        }
        t
    }

    fn occurs(&self, m: usize, t: &IType) -> bool {
        match self.shallow(t) {
            IType::Meta(n) => n == m,
            IType::Base(_) => false,
            IType::Arrow(a, b) => self.occurs(m, &a) || self.occurs(m, &b),
        }
    }

    fn unify(&mut self, a: &IType, b: &IType) -> bool {
        let (a, b) = (self.shallow(a), self.shallow(b));
        match (&a, &b) {
            (IType::Meta(m), IType::Meta(n)) if m == n => true,
            (IType::Meta(m), other) | (other, IType::Meta(m)) => {
                if self.occurs(*m, other) {
                    return false;
                }
                self.metas[*m] = Some(other.clone());
                true
            }
            (IType::Base(s), IType::Base(t)) => s == t,
            (IType::Arrow(a1, b1), IType::Arrow(a2, b2)) => {
                let (a1, b1, a2, b2) = (a1.clone(), b1.clone(), a2.clone(), b2.clone());
                self.unify(&a1, &a2) && self.unify(&b1, &b2)
            }
            _ => false,
        }
    }

    fn show(&self, t: &IType) -> String {
        match self.shallow(t) {
            IType::Meta(m) => format!("?{m}"),
            IType::Base(s) => s.to_string(),
            IType::Arrow(a, b) => {
                let left = self.show(&a);
                let left = if matches!(self.shallow(&a), IType::Arrow(..)) {
                    format!("({left})")
                } else {
                    left
                };
                format!("{left} -> {}", self.show(&b))
            }
        }
    }

    fn resolve(&self, t: &IType) -> Option<Type> {
        match self.shallow(t) {
            IType::Meta(_) => None,
            IType::Base(s) => Some(Type::Base(s)),
            IType::Arrow(a, b) => Some(Type::arrow(self.resolve(&a)?, self.resolve(&b)?)),
        }
    }

    fn infer(&mut self, pre: &PreTerm) -> Result<(Elab, IType), TypeError> {
        match &pre.kind {
            PreKind::Int(n) => Ok((Elab::Sym(theory::int_symbol(n.clone())), IType::Base(Sort::int()))),
            PreKind::Name(name) => {
                if let Some(ty) = self.vars.get(name).map(|(t, _)| t.clone()) {
                    return Ok((Elab::Var(name.clone()), ty));
                }
                match self.sig.resolve(name) {
                    Some(Resolved::Symbol(f)) => {
                        let ty = IType::from_type(f.ty());
                        Ok((Elab::Sym(f), ty))
                    }
                    Some(Resolved::Ordering { strict }) => {
                        let a = self.fresh();
                        let meta = match a {
                            IType::Meta(m) => m,
                            _ => unreachable!(),
                        };
                        let ty = IType::Arrow(
                            Rc::new(a.clone()),
                            Rc::new(IType::Arrow(Rc::new(a), Rc::new(IType::Base(Sort::bool())))),
                        );
                        Ok((
                            Elab::Ordering {
                                strict,
                                meta,
                                span: pre.span,
                            },
                            ty,
                        ))
                    }
                    None => {
                        let ty = match self.ctx.get(name) {
                            Some(t) => IType::from_type(t),
                            None if self.ctx.allow_fresh => self.fresh(),
                            None => {
                                return Err(TypeError::UnknownSymbol {
                                    name: name.clone(),
                                    span: pre.span,
                                })
                            }
                        };
                        self.vars.insert(name.clone(), (ty.clone(), pre.span));
                        Ok((Elab::Var(name.clone()), ty))
                    }
                }
            }
            PreKind::App(head, arg) => {
                let (eh, th) = self.infer(head)?;
                let (ea, ta) = self.infer(arg)?;
                let result = match self.shallow(&th) {
                    IType::Base(s) => {
                        return Err(TypeError::NotAFunction {
                            term: render(head),
                            ty: s.to_string(),
                            span: head.span,
                        })
                    }
                    IType::Arrow(dom, cod) => {
                        if !self.unify(&dom, &ta) {
                            return Err(self.mismatch(arg, &dom, &ta));
                        }
                        (*cod).clone()
                    }
                    IType::Meta(_) => {
                        let cod = self.fresh();
                        let want = IType::Arrow(Rc::new(ta.clone()), Rc::new(cod.clone()));
                        if !self.unify(&th, &want) {
                            return Err(self.mismatch(head, &want, &th));
                        }
                        cod
                    }
                };
                Ok((Elab::App(Box::new(eh), Box::new(ea)), result))
            }
        }
    }

    fn mismatch(&self, at: &PreTerm, expected: &IType, found: &IType) -> TypeError {
        if let PreKind::Name(name) = &at.kind {
            if self.vars.contains_key(name) {
                return TypeError::VariableConflict {
                    name: name.clone(),
                    first: self.show(found),
                    second: self.show(expected),
                    span: at.span,
                };
            }
        }
        TypeError::Mismatch {
            expected: self.show(expected),
            found: self.show(found),
            span: at.span,
        }
    }

    fn finish(&self, e: &Elab, vars: &BTreeMap<String, Variable>) -> Result<Term, TypeError> {
        match e {
            Elab::Sym(f) => Ok(Term::sym(f.clone())),
            Elab::Var(name) => Ok(Term::var(vars[name].clone())),
            Elab::Ordering { strict, meta, span } => {
                let found = self.resolve(&IType::Meta(*meta));
                let sort = found
                    .as_ref()
                    .and_then(OrderSort::of)
                    .ok_or_else(|| TypeError::OrderingSort {
                        op: if *strict { "!>" } else { "!>=" }.to_string(),
                        found: self.show(&IType::Meta(*meta)),
                        span: *span,
                    })?;
                let op = if *strict {
                    TheoryOp::Above(sort)
                } else {
                    TheoryOp::AboveEq(sort)
                };
                Ok(Term::sym(op.symbol()))
            }
            Elab::App(a, b) => {
                let a = self.finish(a, vars)?;
                let b = self.finish(b, vars)?;
                Ok(Term::app(a, b).expect("inference produced a well-typed tree"))
            }
        }
    }
}

fn render(pre: &PreTerm) -> String {
    match &pre.kind {
        PreKind::Name(n) => n.clone(),
        PreKind::Int(n) => n.to_string(),
        PreKind::App(a, b) => {
            let arg = render(b);
            if matches!(b.kind, PreKind::App(..)) {
                format!("{} ({arg})", render(a))
            } else {
                format!("{} {arg}", render(a))
            }
        }
    }
}

/// Typechecks several pre-terms that share one variable context (the sides of a rule).
/// Returns the typed terms and the variables with their inferred types.
pub fn typecheck_all(
    pres: &[&PreTerm],
    sig: &Signature,
    ctx: &VarContext,
) -> Result<(Vec<Term>, BTreeMap<String, Variable>), TypeError> {
    let mut inf = Inference {
        sig,
        ctx,
        metas: Vec::new(),
        vars: BTreeMap::new(),
    };
    let mut elabs = Vec::with_capacity(pres.len());
    for pre in pres {
        elabs.push(inf.infer(pre)?.0);
    }
    let mut vars = BTreeMap::new();
    for (name, (ty, span)) in &inf.vars {
        let ty = inf.resolve(ty).ok_or_else(|| TypeError::Ambiguous {
            name: name.clone(),
            span: *span,
        })?;
        vars.insert(name.clone(), Variable::new(name, ty));
    }
    let terms = elabs
        .iter()
        .map(|e| inf.finish(e, &vars))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((terms, vars))
}

/// Annotates `pre` with types. Unknown names become variables when the context allows it.
pub fn typecheck(pre: &PreTerm, sig: &Signature, ctx: &VarContext) -> Result<Term, TypeError> {
    let (mut terms, _) = typecheck_all(&[pre], sig, ctx)?;
    Ok(terms.pop().expect("one term in, one term out"))
}
