//! Constrained rewrite rules `l -> r [phi]` and the system they form.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::signature::Signature;
use crate::symbol::{FunctionSymbol, Variable};
use crate::term::Term;
use crate::theory::Theory;
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("left-hand side has type {lhs}, right-hand side has type {rhs}")]
    TypeMismatch { lhs: Type, rhs: Type },
    #[error("left-hand side `{0}` is a theory term")]
    TheoryLhs(String),
    #[error("constraint `{term}` is not a logical constraint ({reason})")]
    NotConstraint { term: String, reason: String },
    #[error("variable `{var}` occurs only on the right and has non-theory-sort type {ty}")]
    FreshNonTheory { var: String, ty: Type },
}

/// Checks that `phi` is a logical constraint: a theory term of sort Bool whose free variables
/// all have theory sorts.
pub fn check_constraint(phi: &Term) -> Result<(), RuleError> {
    let fail = |reason: String| RuleError::NotConstraint {
        term: phi.to_string(),
        reason,
    };
    if !phi.is_theory() {
        return Err(fail("it mentions a non-theory symbol".into()));
    }
    if phi.ty() != &Type::bool() {
        return Err(fail(format!("it has type {}", phi.ty())));
    }
    if let Some(x) = phi.free_vars().into_iter().find(|x| !x.ty().is_theory_sort()) {
        return Err(fail(format!("variable `{x}` has type {}", x.ty())));
    }
    Ok(())
}

/// A rewrite rule satisfying the four well-formedness conditions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    lhs: Term,
    rhs: Term,
    constraint: Term,
}

impl Rule {
    /// Accepts `l -> r [phi]` iff (1) l and r have the same type, (2) l is not a theory
    /// term, (3) phi is a logical constraint and (4) every variable of r not in l has a
    /// theory sort.
    pub fn new(lhs: Term, rhs: Term, constraint: Term) -> Result<Rule, RuleError> {
        if lhs.ty() != rhs.ty() {
            return Err(RuleError::TypeMismatch {
                lhs: lhs.ty().clone(),
                rhs: rhs.ty().clone(),
            });
        }
        if lhs.is_theory() {
            return Err(RuleError::TheoryLhs(lhs.to_string()));
        }
        check_constraint(&constraint)?;
        let lvars = lhs.free_vars();
        if let Some(x) = rhs
            .free_vars()
            .into_iter()
            .find(|x| !lvars.contains(x) && !x.ty().is_theory_sort())
        {
            return Err(RuleError::FreshNonTheory {
                var: x.name().to_string(),
                ty: x.ty().clone(),
            });
        }
        Ok(Rule { lhs, rhs, constraint })
    }

    pub fn lhs(&self) -> &Term {
        &self.lhs
    }

    pub fn rhs(&self) -> &Term {
        &self.rhs
    }

    pub fn constraint(&self) -> &Term {
        &self.constraint
    }

    /// Variables of the rhs that do not occur in the lhs.
    pub fn fresh_vars(&self) -> BTreeSet<Variable> {
        let l = self.lhs.free_vars();
        self.rhs.free_vars().into_iter().filter(|x| !l.contains(x)).collect()
    }

    /// Variables that a respecting substitution must map to values:
    /// those of the constraint and the fresh rhs variables.
    pub fn value_vars(&self) -> BTreeSet<Variable> {
        let mut v = self.constraint.free_vars();
        v.extend(self.fresh_vars());
        v
    }

    /// Variables that are not bound by matching the lhs.
    pub fn unbound_vars(&self) -> BTreeSet<Variable> {
        let l = self.lhs.free_vars();
        self.value_vars().into_iter().filter(|x| !l.contains(x)).collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} [{}]", self.lhs, self.rhs, self.constraint)
    }
}

/// A signature, its rules, and the theory parameters used when executing them.
#[derive(Clone, Debug, Default)]
pub struct System {
    pub signature: Signature,
    pub rules: Vec<Rule>,
    pub theory: Theory,
    /// Candidate bounds for the integer ordering when proving termination.
    pub bounds: Vec<num_bigint::BigInt>,
}

impl System {
    pub fn new(signature: Signature, rules: Vec<Rule>) -> Self {
        System {
            signature,
            rules,
            theory: Theory::default(),
            bounds: Vec::new(),
        }
    }

    /// Non-theory symbols occurring in the rules, in a deterministic order.
    pub fn defined_symbols(&self) -> Vec<FunctionSymbol> {
        let mut used = BTreeSet::new();
        for r in &self.rules {
            for t in [&r.lhs, &r.rhs] {
                used.extend(t.symbols().into_iter().filter(|f| !f.is_theory()));
            }
        }
        // declaration order first
        let mut out: Vec<FunctionSymbol> = self
            .signature
            .declared()
            .filter(|f| used.contains(*f))
            .cloned()
            .collect();
        for f in used {
            if !out.contains(&f) {
                out.push(f);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::{self as th, TheoryOp};

    fn int_var(n: &str) -> Term {
        Term::var(Variable::new(n, Type::int()))
    }

    #[test]
    fn theory_lhs_rejected() {
        let lhs = th::op_term(TheoryOp::Add, vec![th::int(1), int_var("x")]).unwrap();
        let err = Rule::new(lhs, int_var("x"), th::boolean(true)).unwrap_err();
        assert!(matches!(err, RuleError::TheoryLhs(_)));
        assert!(err.to_string().contains("is a theory term"));
    }

    #[test]
    fn each_condition_reported() {
        let f = FunctionSymbol::defined("f", Type::arrow(Type::int(), Type::int()));
        let c = FunctionSymbol::defined("c", Type::int());
        let fx = Term::app(Term::sym(f.clone()), int_var("x")).unwrap();
        // (1)
        assert!(matches!(
            Rule::new(fx.clone(), Term::sym(f.clone()), th::boolean(true)),
            Err(RuleError::TypeMismatch { .. })
        ));
        // (3): integer-typed constraint
        assert!(matches!(
            Rule::new(fx.clone(), int_var("x"), th::int(1)),
            Err(RuleError::NotConstraint { .. })
        ));
        // (3): non-theory symbol in constraint
        let bad = th::op_term(TheoryOp::Le, vec![Term::sym(c.clone()), th::int(0)]).unwrap();
        assert!(matches!(
            Rule::new(fx.clone(), int_var("x"), bad),
            Err(RuleError::NotConstraint { .. })
        ));
        // (4): fresh higher-order variable
        let g = Term::var(Variable::new("g", Type::arrow(Type::int(), Type::int())));
        let rhs = Term::app(g, th::int(0)).unwrap();
        assert!(matches!(
            Rule::new(fx.clone(), rhs, th::boolean(true)),
            Err(RuleError::FreshNonTheory { .. })
        ));
        // fresh Int variable is fine
        assert!(Rule::new(Term::sym(c), fx, th::boolean(true)).is_ok());
    }
}
