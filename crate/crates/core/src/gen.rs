//! Random well-typed terms over a signature, for property tests and smoke runs.

use std::ops::RangeInclusive;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::signature::Signature;
use crate::symbol::Variable;
use crate::term::Term;
use crate::theory::{self, TheoryOp};
use crate::types::Type;

/// Generates terms `h t1 .. tk` of a requested type, choosing heads among declared symbols,
/// theory operators and variables. Depth counts nested argument lists.
#[derive(Clone, Debug)]
pub struct TermGen {
    heads: Vec<Term>,
    pub max_depth: usize,
    pub int_range: RangeInclusive<i64>,
    /// Chance of picking a leaf when one fits and depth remains.
    pub leaf_bias: f64,
}

impl TermGen {
    /// Declared symbols of `sig` plus the theory operators.
    pub fn new(sig: &Signature) -> Self {
        let mut g = TermGen::theory_only();
        g.heads.extend(sig.declared().cloned().map(Term::sym));
        g
    }

    /// Only theory operators and literals.
    pub fn theory_only() -> Self {
        TermGen {
            heads: TheoryOp::ALL.iter().map(|op| Term::sym(op.symbol())).collect(),
            max_depth: 3,
            int_range: -5..=5,
            leaf_bias: 0.3,
        }
    }

    /// Only the given symbols (as terms), without theory operators.
    pub fn from_heads(heads: Vec<Term>) -> Self {
        TermGen {
            heads,
            ..TermGen::theory_only()
        }
    }

    pub fn with_vars<I: IntoIterator<Item = Variable>>(mut self, vars: I) -> Self {
        self.heads.extend(vars.into_iter().map(Term::var));
        self
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn without_ops(mut self, ops: &[TheoryOp]) -> Self {
        self.heads
            .retain(|h| h.as_symbol().and_then(|f| f.op()).is_none_or(|op| !ops.contains(&op)));
        self
    }

    /// A term of type `ty`, or `None` if none was found within the depth budget.
    pub fn term<R: Rng + ?Sized>(&self, rng: &mut R, ty: &Type) -> Option<Term> {
        for _ in 0..8 {
            if let Some(t) = self.gen(rng, ty, self.max_depth as isize) {
                return Some(t);
            }
        }
        None
    }

    fn options(&self, ty: &Type) -> Vec<(Option<&Term>, usize)> {
        let mut out = Vec::new();
        if ty.is_theory_sort() {
            out.push((None, 0));
        }
        for h in &self.heads {
            for k in 0..=h.ty().arity() {
                if h.ty().after_args(k) == Some(ty) {
                    out.push((Some(h), k));
                }
            }
        }
        out
    }

    fn literal<R: Rng + ?Sized>(&self, rng: &mut R, ty: &Type) -> Term {
        if ty.as_sort().is_some_and(|s| s.is_int()) {
            theory::int(BigInt::from(rng.gen_range(self.int_range.clone())))
        } else {
            theory::boolean(rng.gen())
        }
    }

    fn gen<R: Rng + ?Sized>(&self, rng: &mut R, ty: &Type, depth: isize) -> Option<Term> {
        // past the budget only leaves, or the cheapest head, are allowed; give up after a few
        if depth < -3 {
            return None;
        }
        let opts = self.options(ty);
        let leaves: Vec<_> = opts.iter().filter(|(_, k)| *k == 0).cloned().collect();
        let pick = if depth <= 0 || (!leaves.is_empty() && rng.gen_bool(self.leaf_bias)) {
            if leaves.is_empty() {
                let min = opts.iter().map(|(_, k)| *k).min()?;
                let cheapest: Vec<_> = opts.into_iter().filter(|(_, k)| *k == min).collect();
                cheapest.choose(rng).cloned()?
            } else {
                leaves.choose(rng).cloned()?
            }
        } else {
            opts.choose(rng).cloned()?
        };
        match pick {
            (None, _) => Some(self.literal(rng, ty)),
            (Some(h), k) => {
                let arg_tys: Vec<Type> = h.ty().arg_types().into_iter().take(k).cloned().collect();
                let mut args = Vec::with_capacity(k);
                for a in &arg_tys {
                    args.push(self.gen(rng, a, depth - 1)?);
                }
                Term::apply(h.clone(), args).ok()
            }
        }
    }

    /// A ground theory term of sort Int or Bool with at most `max_nodes` nodes.
    pub fn ground_theory<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize) -> Term {
        let g = TermGen::theory_only().with_depth(3);
        let sorts = [Type::int(), Type::bool()];
        loop {
            let ty = sorts.choose(rng).expect("non-empty");
            if let Some(t) = g.term(rng, ty) {
                if t.size() <= max_nodes {
                    return t;
                }
            }
        }
    }
}
