//! A refutation procedure for quantifier-free linear integer arithmetic: constraints are put
//! in negation normal form, expanded to DNF and each disjunct is refuted by Fourier-Motzkin
//! elimination with integer tightening. Incomplete but sound: `Refuted` means unsatisfiable.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::symbol::{SymbolKind, Variable};
use crate::term::{Term, TermKind};
use crate::theory::{OrderSort, Theory, TheoryOp};

const MAX_DISJUNCTS: usize = 4096;
const MAX_INEQUALITIES: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// No integer assignment satisfies the formula.
    Refuted,
    /// Some disjunct survived elimination; the formula may be satisfiable.
    Open,
    /// The formula is outside the fragment (nonlinear) or too large.
    OutOfScope,
}

/// `sum(coeffs * vars) + constant`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Lin {
    coeffs: BTreeMap<Variable, BigInt>,
    constant: BigInt,
}

impl Lin {
    fn constant(c: BigInt) -> Lin {
        Lin {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    fn var(x: Variable) -> Lin {
        Lin {
            coeffs: BTreeMap::from([(x, BigInt::one())]),
            constant: BigInt::zero(),
        }
    }

    fn add_scaled(mut self, other: &Lin, k: &BigInt) -> Lin {
        for (x, a) in &other.coeffs {
            let e = self.coeffs.entry(x.clone()).or_insert_with(BigInt::zero);
            *e += a * k;
            if e.is_zero() {
                self.coeffs.remove(x);
            }
        }
        self.constant += &other.constant * k;
        self
    }

    fn scale(&self, k: &BigInt) -> Lin {
        Lin::constant(BigInt::zero()).add_scaled(self, k)
    }

    fn minus(self, other: &Lin) -> Lin {
        self.add_scaled(other, &-BigInt::one())
    }

    fn plus_const(mut self, c: i64) -> Lin {
        self.constant += c;
        self
    }

    fn as_constant(&self) -> Option<&BigInt> {
        self.coeffs.is_empty().then_some(&self.constant)
    }
}

#[derive(Clone, Debug)]
enum Atom {
    /// `e <= 0`
    Le(Lin),
    /// `e = 0`
    Eq(Lin),
    /// `e != 0`
    Ne(Lin),
}

#[derive(Clone, Debug)]
enum Nnf {
    Const(bool),
    /// A boolean variable, positive or negated.
    Lit(Variable, bool),
    Atom(Atom),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn linearize(t: &Term) -> Option<Lin> {
    match t.kind() {
        TermKind::Var(x) => Some(Lin::var(x.clone())),
        TermKind::Sym(f) => match f.kind() {
            SymbolKind::Int(n) => Some(Lin::constant(n.clone())),
            _ => None,
        },
        TermKind::App(..) => {
            let (head, args) = t.head_args();
            let op = head.as_symbol()?.op()?;
            if args.len() != 2 {
                return None;
            }
            let a = linearize(args[0])?;
            let b = linearize(args[1])?;
            match op {
                TheoryOp::Add => Some(a.add_scaled(&b, &BigInt::one())),
                TheoryOp::Sub => Some(a.minus(&b)),
                TheoryOp::Mul => match (a.as_constant(), b.as_constant()) {
                    (Some(k), _) => Some(b.scale(k)),
                    (_, Some(k)) => Some(a.scale(k)),
                    _ => None,
                },
                _ => None,
            }
        }
    }
}

fn both(pos: bool, a: Nnf, b: Nnf) -> Nnf {
    if pos {
        Nnf::And(vec![a, b])
    } else {
        Nnf::Or(vec![a, b])
    }
}

fn either(pos: bool, a: Nnf, b: Nnf) -> Nnf {
    both(!pos, a, b)
}

/// `a <= b` when `pos`, `a > b` otherwise.
fn le(pos: bool, a: &Lin, b: &Lin) -> Nnf {
    if pos {
        Nnf::Atom(Atom::Le(a.clone().minus(b)))
    } else {
        Nnf::Atom(Atom::Le(b.clone().minus(a).plus_const(1)))
    }
}

fn eq(pos: bool, a: &Lin, b: &Lin) -> Nnf {
    let d = a.clone().minus(b);
    Nnf::Atom(if pos { Atom::Eq(d) } else { Atom::Ne(d) })
}

/// Negation normal form of `t` (or of `not t` when `!pos`), with the orderings expanded.
fn nnf(th: &Theory, t: &Term, pos: bool) -> Option<Nnf> {
    match t.kind() {
        TermKind::Var(x) => Some(Nnf::Lit(x.clone(), pos)),
        TermKind::Sym(f) => match f.kind() {
            SymbolKind::Bool(b) => Some(Nnf::Const(*b == pos)),
            _ => None,
        },
        TermKind::App(..) => {
            let (head, args) = t.head_args();
            let op = head.as_symbol()?.op()?;
            let lin = |i: usize| linearize(args[i]);
            let sub = |i: usize, p: bool| nnf(th, args[i], p);
            let bound = || Lin::constant(th.bound.clone());
            Some(match op {
                TheoryOp::Not => sub(0, !pos)?,
                TheoryOp::And => both(pos, sub(0, pos)?, sub(1, pos)?),
                TheoryOp::Or => either(pos, sub(0, pos)?, sub(1, pos)?),
                TheoryOp::Le => le(pos, &lin(0)?, &lin(1)?),
                TheoryOp::Ge => le(pos, &lin(1)?, &lin(0)?),
                TheoryOp::Lt => le(!pos, &lin(1)?, &lin(0)?),
                TheoryOp::Gt => le(!pos, &lin(0)?, &lin(1)?),
                TheoryOp::Eq => eq(pos, &lin(0)?, &lin(1)?),
                TheoryOp::Ne => eq(!pos, &lin(0)?, &lin(1)?),
                TheoryOp::Above(OrderSort::Int) => {
                    let (x, y) = (lin(0)?, lin(1)?);
                    both(pos, le(!pos, &x, &bound()), le(!pos, &x, &y))
                }
                TheoryOp::AboveEq(OrderSort::Int) => {
                    let (x, y) = (lin(0)?, lin(1)?);
                    let above = both(pos, le(!pos, &x, &bound()), le(!pos, &x, &y));
                    either(pos, eq(pos, &x, &y), above)
                }
                TheoryOp::Above(OrderSort::Bool) => both(pos, sub(0, pos)?, sub(1, !pos)?),
                TheoryOp::AboveEq(OrderSort::Bool) => either(pos, sub(0, pos)?, sub(1, !pos)?),
                TheoryOp::Add | TheoryOp::Sub | TheoryOp::Mul => return None,
            })
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Conj {
    bools: BTreeMap<Variable, bool>,
    atoms: Vec<Atom>,
}

impl Conj {
    fn merge(&self, other: &Conj) -> Option<Conj> {
        let mut out = self.clone();
        for (x, b) in &other.bools {
            if *out.bools.entry(x.clone()).or_insert(*b) != *b {
                return None;
            }
        }
        out.atoms.extend(other.atoms.iter().cloned());
        Some(out)
    }
}

fn dnf(f: &Nnf) -> Option<Vec<Conj>> {
    match f {
        Nnf::Const(true) => Some(vec![Conj::default()]),
        Nnf::Const(false) => Some(Vec::new()),
        Nnf::Lit(x, b) => Some(vec![Conj {
            bools: BTreeMap::from([(x.clone(), *b)]),
            atoms: Vec::new(),
        }]),
        Nnf::Atom(Atom::Ne(e)) => {
            let lo = Atom::Le(e.clone().plus_const(1));
            let hi = Atom::Le(e.scale(&-BigInt::one()).plus_const(1));
            Some(vec![
                Conj {
                    bools: BTreeMap::new(),
                    atoms: vec![lo],
                },
                Conj {
                    bools: BTreeMap::new(),
                    atoms: vec![hi],
                },
            ])
        }
        Nnf::Atom(a) => Some(vec![Conj {
            bools: BTreeMap::new(),
            atoms: vec![a.clone()],
        }]),
        Nnf::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                out.extend(dnf(g)?);
                if out.len() > MAX_DISJUNCTS {
                    return None;
                }
            }
            Some(out)
        }
        Nnf::And(fs) => {
            let mut acc = vec![Conj::default()];
            for g in fs {
                let d = dnf(g)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &d {
                        if let Some(c) = a.merge(b) {
                            next.push(c);
                        }
                    }
                    if next.len() > MAX_DISJUNCTS {
                        return None;
                    }
                }
                acc = next;
            }
            Some(acc)
        }
    }
}

/// `sum + c <= 0`, normalized by the gcd of the coefficients with the constant rounded up.
/// Returns `Err(())` for a constant contradiction and `Ok(None)` for a tautology.
fn tighten(e: Lin) -> Result<Option<Lin>, ()> {
    if e.coeffs.is_empty() {
        return if e.constant.is_positive() { Err(()) } else { Ok(None) };
    }
    let g = e.coeffs.values().fold(BigInt::zero(), |g, a| g.gcd(a));
    if g.is_one() {
        return Ok(Some(e));
    }
    Ok(Some(Lin {
        coeffs: e.coeffs.into_iter().map(|(x, a)| (x, a / &g)).collect(),
        constant: e.constant.div_ceil(&g),
    }))
}

/// Whether a conjunction of atoms is infeasible over the integers. `None` when the
/// elimination grows past its budget.
fn refute_conj(atoms: &[Atom]) -> Option<bool> {
    let mut ineqs: Vec<Lin> = Vec::new();
    for a in atoms {
        let parts = match a {
            Atom::Le(e) => vec![e.clone()],
            Atom::Eq(e) => {
                let g = e.coeffs.values().fold(BigInt::zero(), |g, a| g.gcd(a));
                if g.is_zero() {
                    if !e.constant.is_zero() {
                        return Some(true);
                    }
                    continue;
                }
                if !e.constant.is_multiple_of(&g) {
                    return Some(true);
                }
                vec![e.clone(), e.scale(&-BigInt::one())]
            }
            Atom::Ne(_) => unreachable!("split during DNF"),
        };
        for p in parts {
            match tighten(p) {
                Err(()) => return Some(true),
                Ok(Some(p)) => ineqs.push(p),
                Ok(None) => {}
            }
        }
    }
    loop {
        ineqs.sort();
        ineqs.dedup();
        let mut counts: BTreeMap<&Variable, (usize, usize)> = BTreeMap::new();
        for e in &ineqs {
            for (x, a) in &e.coeffs {
                let c = counts.entry(x).or_default();
                if a.is_positive() {
                    c.0 += 1;
                } else {
                    c.1 += 1;
                }
            }
        }
        let Some(x) = counts.iter().min_by_key(|(_, (p, n))| p * n).map(|(x, _)| (*x).clone()) else {
            return Some(false);
        };
        let (pos, rest): (Vec<Lin>, Vec<Lin>) = ineqs
            .into_iter()
            .partition(|e| e.coeffs.get(&x).is_some_and(|a| a.is_positive()));
        let (neg, mut keep): (Vec<Lin>, Vec<Lin>) = rest.into_iter().partition(|e| e.coeffs.contains_key(&x));
        for p in &pos {
            let a = &p.coeffs[&x];
            for n in &neg {
                let b = -&n.coeffs[&x];
                let combined = p.scale(&b).add_scaled(n, a);
                match tighten(combined) {
                    Err(()) => return Some(true),
                    Ok(Some(c)) => keep.push(c),
                    Ok(None) => {}
                }
            }
        }
        if keep.len() > MAX_INEQUALITIES {
            return None;
        }
        ineqs = keep;
    }
}

/// Attempts to show that the boolean theory term `t` is unsatisfiable.
pub fn refute(th: &Theory, t: &Term) -> Outcome {
    let Some(f) = nnf(th, t, true) else {
        return Outcome::OutOfScope;
    };
    let Some(disjuncts) = dnf(&f) else {
        return Outcome::OutOfScope;
    };
    let mut out_of_scope = false;
    for c in &disjuncts {
        match refute_conj(&c.atoms) {
            Some(true) => {}
            Some(false) => return Outcome::Open,
            None => out_of_scope = true,
        }
    }
    if out_of_scope {
        Outcome::OutOfScope
    } else {
        Outcome::Refuted
    }
}
