//! Applicative terms, positions and substitutions.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::symbol::{FunctionSymbol, Variable};
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("cannot apply `{head}` of base type {ty}")]
    NotAFunction { head: String, ty: Type },
    #[error("argument `{arg}` has type {found}, expected {expected}")]
    ArgumentMismatch { arg: String, expected: Type, found: Type },
    #[error("substitution maps `{var}` of type {expected} to a term of type {found}")]
    IllTypedBinding { var: String, expected: Type, found: Type },
    #[error("position {0} does not exist in the term")]
    InvalidPosition(Position),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum TermKind {
    Sym(FunctionSymbol),
    Var(Variable),
    App(Term, Term),
}

struct Node {
    kind: TermKind,
    ty: Type,
    size: usize,
    theory: bool,
    ground: bool,
    hash: u64,
}

/// A well-typed term. Every node caches its type, size and a structural hash.
#[derive(Clone)]
pub struct Term(Arc<Node>);

impl Term {
    fn build(kind: TermKind, ty: Type) -> Term {
        let (size, theory, ground) = match &kind {
            TermKind::Sym(f) => (1, f.is_theory(), true),
            TermKind::Var(_) => (1, true, false),
            TermKind::App(a, b) => (
                1 + a.size() + b.size(),
                a.is_theory() && b.is_theory(),
                a.is_ground() && b.is_ground(),
            ),
        };
        let mut h = DefaultHasher::new();
        match &kind {
            TermKind::Sym(f) => (0u8, f).hash(&mut h),
            TermKind::Var(x) => (1u8, x).hash(&mut h),
            TermKind::App(a, b) => (2u8, a.0.hash, b.0.hash).hash(&mut h),
        }
        Term(Arc::new(Node {
            kind,
            ty,
            size,
            theory,
            ground,
            hash: h.finish(),
        }))
    }

    pub fn sym(f: FunctionSymbol) -> Term {
        let ty = f.ty().clone();
        Term::build(TermKind::Sym(f), ty)
    }

    pub fn var(x: Variable) -> Term {
        let ty = x.ty().clone();
        Term::build(TermKind::Var(x), ty)
    }

    /// `head arg`, checked against the typing rule.
    pub fn app(head: Term, arg: Term) -> Result<Term, TermError> {
        let (a, b) = match head.ty().split_arrow() {
            Some(ab) => ab,
            None => {
                return Err(TermError::NotAFunction {
                    head: head.to_string(),
                    ty: head.ty().clone(),
                })
            }
        };
        if a != arg.ty() {
            return Err(TermError::ArgumentMismatch {
                arg: arg.to_string(),
                expected: a.clone(),
                found: arg.ty().clone(),
            });
        }
        let ty = b.clone();
        Ok(Term::build(TermKind::App(head, arg), ty))
    }

    /// `head a1 ... an`.
    pub fn apply<I: IntoIterator<Item = Term>>(head: Term, args: I) -> Result<Term, TermError> {
        args.into_iter().try_fold(head, Term::app)
    }

    pub fn kind(&self) -> &TermKind {
        &self.0.kind
    }

    pub fn ty(&self) -> &Type {
        &self.0.ty
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        self.0.size
    }

    /// Built from theory symbols and variables only.
    pub fn is_theory(&self) -> bool {
        self.0.theory
    }

    pub fn is_ground(&self) -> bool {
        self.0.ground
    }

    pub fn is_value(&self) -> bool {
        matches!(&self.0.kind, TermKind::Sym(f) if f.is_value())
    }

    pub fn as_symbol(&self) -> Option<&FunctionSymbol> {
        match &self.0.kind {
            TermKind::Sym(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match &self.0.kind {
            TermKind::Var(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_app(&self) -> Option<(&Term, &Term)> {
        match &self.0.kind {
            TermKind::App(a, b) => Some((a, b)),
            _ => None,
        }
    }

    /// Splits `h t1 ... tn` into the head `h` (not an application) and its arguments.
    pub fn head_args(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let TermKind::App(a, b) = &t.0.kind {
            args.push(b);
            t = a;
        }
        args.reverse();
        (t, args)
    }

    pub fn head(&self) -> &Term {
        let mut t = self;
        while let TermKind::App(a, _) = &t.0.kind {
            t = a;
        }
        t
    }

    pub fn head_symbol(&self) -> Option<&FunctionSymbol> {
        self.head().as_symbol()
    }

    pub fn free_vars(&self) -> BTreeSet<Variable> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Variable>) {
        if self.is_ground() {
            return;
        }
        match &self.0.kind {
            TermKind::Sym(_) => {}
            TermKind::Var(x) => {
                out.insert(x.clone());
            }
            TermKind::App(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Function symbols occurring in the term.
    pub fn symbols(&self) -> BTreeSet<FunctionSymbol> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match &t.0.kind {
                TermKind::Sym(f) => {
                    out.insert(f.clone());
                }
                TermKind::Var(_) => {}
                TermKind::App(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        out
    }

    /// `t sigma`; unbound variables are left in place.
    pub fn subst(&self, sigma: &Substitution) -> Term {
        if self.is_ground() {
            return self.clone();
        }
        match &self.0.kind {
            TermKind::Sym(_) => self.clone(),
            TermKind::Var(x) => sigma.get(x).cloned().unwrap_or_else(|| self.clone()),
            TermKind::App(a, b) => {
                let a2 = a.subst(sigma);
                let b2 = b.subst(sigma);
                Term::build(TermKind::App(a2, b2), self.ty().clone())
            }
        }
    }

    pub fn subterm(&self, pos: &Position) -> Option<&Term> {
        let mut t = self;
        for side in pos.sides() {
            let (a, b) = t.as_app()?;
            t = match side {
                Side::Head => a,
                Side::Arg => b,
            };
        }
        Some(t)
    }

    /// Replaces the subterm at `pos`; the replacement must have the same type.
    pub fn replace(&self, pos: &Position, with: Term) -> Result<Term, TermError> {
        let old = self
            .subterm(pos)
            .ok_or_else(|| TermError::InvalidPosition(pos.clone()))?;
        if old.ty() != with.ty() {
            return Err(TermError::ArgumentMismatch {
                arg: with.to_string(),
                expected: old.ty().clone(),
                found: with.ty().clone(),
            });
        }
        Ok(self.replace_unchecked(pos.sides(), with))
    }

    fn replace_unchecked(&self, path: &[Side], with: Term) -> Term {
        match path.split_first() {
            None => with,
            Some((side, rest)) => {
                let (a, b) = self.as_app().expect("position checked");
                let (a, b) = match side {
                    Side::Head => (a.replace_unchecked(rest, with), b.clone()),
                    Side::Arg => (a.clone(), b.replace_unchecked(rest, with)),
                };
                Term::build(TermKind::App(a, b), self.ty().clone())
            }
        }
    }

    /// All positions, children before parents, head subtree before argument subtree.
    pub fn positions_post_order(&self) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.size());
        let mut path = Vec::new();
        self.post_order(&mut path, &mut out);
        out
    }

    fn post_order(&self, path: &mut Vec<Side>, out: &mut Vec<Position>) {
        if let Some((a, b)) = self.as_app() {
            path.push(Side::Head);
            a.post_order(path, out);
            path.pop();
            path.push(Side::Arg);
            b.post_order(path, out);
            path.pop();
        }
        out.push(Position(path.clone()));
    }

    /// All positions, parents before children, head subtree before argument subtree.
    pub fn positions_pre_order(&self) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.size());
        let mut path = Vec::new();
        self.pre_order(&mut path, &mut out);
        out
    }

    fn pre_order(&self, path: &mut Vec<Side>, out: &mut Vec<Position>) {
        out.push(Position(path.clone()));
        if let Some((a, b)) = self.as_app() {
            path.push(Side::Head);
            a.pre_order(path, out);
            path.pop();
            path.push(Side::Arg);
            b.pre_order(path, out);
            path.pop();
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.hash == other.0.hash && self.0.size == other.0.size && self.0.kind == other.0.kind)
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print_term(self))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// The `t0` of `t0 t1`.
    Head,
    /// The `t1` of `t0 t1`.
    Arg,
}

/// A path from the root through application nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(Vec<Side>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn new(sides: Vec<Side>) -> Self {
        Position(sides)
    }

    pub fn sides(&self) -> &[Side] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, side: Side) -> Position {
        let mut p = self.0.clone();
        p.push(side);
        Position(p)
    }

    /// Position of the `i`-th argument (1-based) of a head with `n` arguments.
    pub fn argument(n: usize, i: usize) -> Position {
        assert!(1 <= i && i <= n);
        let mut sides = vec![Side::Head; n - i];
        sides.push(Side::Arg);
        Position(sides)
    }

    /// Digits `0` (head) and `1` (argument); the root is `root`.
    pub fn parse(text: &str) -> Option<Position> {
        if text == "root" {
            return Some(Position::root());
        }
        text.split('.')
            .map(|s| match s {
                "0" => Some(Side::Head),
                "1" => Some(Side::Arg),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Position)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(match s {
                Side::Head => "0",
                Side::Arg => "1",
            })?;
        }
        Ok(())
    }
}

/// A finite, type-preserving map from variables to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(BTreeMap<Variable, Term>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, x: Variable, t: Term) -> Result<(), TermError> {
        if x.ty() != t.ty() {
            return Err(TermError::IllTypedBinding {
                var: x.name().to_string(),
                expected: x.ty().clone(),
                found: t.ty().clone(),
            });
        }
        self.0.insert(x, t);
        Ok(())
    }

    pub fn get(&self, x: &Variable) -> Option<&Term> {
        self.0.get(x)
    }

    pub fn contains(&self, x: &Variable) -> bool {
        self.0.contains_key(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Variable> {
        self.0.keys()
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (x, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x} := {t}")?;
        }
        f.write_str("}")
    }
}

impl TryFrom<Vec<(Variable, Term)>> for Substitution {
    type Error = TermError;

    fn try_from(pairs: Vec<(Variable, Term)>) -> Result<Self, TermError> {
        let mut s = Substitution::new();
        for (x, t) in pairs {
            s.insert(x, t)?;
        }
        Ok(s)
    }
}
