//! The built-in integer/boolean theory: symbols, semantic values and the
//! interpretation of ground theory terms.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::symbol::{FunctionSymbol, SymbolKind};
use crate::term::{Term, TermKind};
use crate::types::Type;

/// The theory sorts that carry a well-founded ordering symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderSort {
    Int,
    Bool,
}

impl OrderSort {
    pub fn of(ty: &Type) -> Option<OrderSort> {
        let s = ty.as_sort()?;
        if s.is_int() {
            Some(OrderSort::Int)
        } else if s.is_bool() {
            Some(OrderSort::Bool)
        } else {
            None
        }
    }

    pub fn ty(self) -> Type {
        match self {
            OrderSort::Int => Type::int(),
            OrderSort::Bool => Type::bool(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoryOp {
    Add,
    Sub,
    Mul,
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
    And,
    Or,
    Not,
    /// The well-founded ordering `!>` on a theory sort.
    Above(OrderSort),
    /// Its reflexive closure `!>=`.
    AboveEq(OrderSort),
}

impl TheoryOp {
    pub const ALL: [TheoryOp; 16] = [
        TheoryOp::Add,
        TheoryOp::Sub,
        TheoryOp::Mul,
        TheoryOp::Le,
        TheoryOp::Lt,
        TheoryOp::Ge,
        TheoryOp::Gt,
        TheoryOp::Eq,
        TheoryOp::Ne,
        TheoryOp::And,
        TheoryOp::Or,
        TheoryOp::Not,
        TheoryOp::Above(OrderSort::Int),
        TheoryOp::AboveEq(OrderSort::Int),
        TheoryOp::Above(OrderSort::Bool),
        TheoryOp::AboveEq(OrderSort::Bool),
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoryOp::Add => "+",
            TheoryOp::Sub => "-",
            TheoryOp::Mul => "*",
            TheoryOp::Le => "<=",
            TheoryOp::Lt => "<",
            TheoryOp::Ge => ">=",
            TheoryOp::Gt => ">",
            TheoryOp::Eq => "=",
            TheoryOp::Ne => "!=",
            TheoryOp::And => "/\\",
            TheoryOp::Or => "\\/",
            TheoryOp::Not => "not",
            TheoryOp::Above(_) => "!>",
            TheoryOp::AboveEq(_) => "!>=",
        }
    }

    pub fn ty(self) -> Type {
        let (i, b) = (Type::int(), Type::bool());
        match self {
            TheoryOp::Add | TheoryOp::Sub | TheoryOp::Mul => Type::curried([i.clone(), i.clone()], i),
            TheoryOp::Le | TheoryOp::Lt | TheoryOp::Ge | TheoryOp::Gt | TheoryOp::Eq | TheoryOp::Ne => {
                Type::curried([i.clone(), i], b)
            }
            TheoryOp::And | TheoryOp::Or => Type::curried([b.clone(), b.clone()], b),
            TheoryOp::Not => Type::arrow(b.clone(), b),
            TheoryOp::Above(s) | TheoryOp::AboveEq(s) => Type::curried([s.ty(), s.ty()], b),
        }
    }

    pub fn arity(self) -> usize {
        if self == TheoryOp::Not {
            1
        } else {
            2
        }
    }

    /// The operator as a theory symbol.
    pub fn symbol(self) -> FunctionSymbol {
        static TABLE: OnceLock<Vec<(TheoryOp, FunctionSymbol)>> = OnceLock::new();
        let table = TABLE.get_or_init(|| {
            TheoryOp::ALL
                .iter()
                .map(|&op| (op, FunctionSymbol::with_kind(op.name(), op.ty(), SymbolKind::Op(op))))
                .collect()
        });
        table
            .iter()
            .find(|(o, _)| *o == self)
            .map(|(_, f)| f.clone())
            .expect("every operator is tabulated")
    }
}

impl fmt::Display for TheoryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Reserved names of the built-in signature, other than integer literals.
pub fn is_builtin_name(name: &str) -> bool {
    name == "true" || name == "false" || TheoryOp::ALL.iter().any(|op| op.name() == name)
}

pub fn int_symbol(n: BigInt) -> FunctionSymbol {
    FunctionSymbol::with_kind(&n.to_string(), Type::int(), SymbolKind::Int(n))
}

pub fn bool_symbol(b: bool) -> FunctionSymbol {
    let name = if b { "true" } else { "false" };
    FunctionSymbol::with_kind(name, Type::bool(), SymbolKind::Bool(b))
}

pub fn int(n: impl Into<BigInt>) -> Term {
    Term::sym(int_symbol(n.into()))
}

pub fn boolean(b: bool) -> Term {
    Term::sym(bool_symbol(b))
}

/// `op a b` for a binary operator, or `op a` for `not` when `b` is `None`.
pub fn op_term(op: TheoryOp, args: Vec<Term>) -> Result<Term, crate::term::TermError> {
    Term::apply(Term::sym(op.symbol()), args)
}

/// An element of a theory sort's semantic domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemValue {
    Int(BigInt),
    Bool(bool),
}

impl SemValue {
    /// The value symbol denoting this element; inverse of [`Theory::interpret`] on values.
    pub fn to_symbol(&self) -> FunctionSymbol {
        match self {
            SemValue::Int(n) => int_symbol(n.clone()),
            SemValue::Bool(b) => bool_symbol(*b),
        }
    }

    pub fn to_term(&self) -> Term {
        Term::sym(self.to_symbol())
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            SemValue::Bool(b) => Some(*b),
            SemValue::Int(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            SemValue::Int(n) => Some(n),
            SemValue::Bool(_) => None,
        }
    }
}

impl fmt::Display for SemValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemValue::Int(n) => write!(f, "{n}"),
            SemValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error("`{0}` is not a ground theory term")]
    NotGroundTheory(String),
    #[error("`{0}` does not have a theory sort")]
    NotASort(String),
}

/// The result of interpreting a ground theory term of any theory type: either an element of
/// a sort, or a partially applied operator awaiting more arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Interpreted {
    Value(SemValue),
    Partial(TheoryOp, Vec<SemValue>),
}

impl Interpreted {
    fn apply(self, theory: &Theory, arg: SemValue) -> Interpreted {
        match self {
            Interpreted::Partial(op, mut args) => {
                args.push(arg);
                if args.len() == op.arity() {
                    Interpreted::Value(theory.eval_op(op, &args))
                } else {
                    Interpreted::Partial(op, args)
                }
            }
            Interpreted::Value(_) => unreachable!("well-typed terms never apply a value"),
        }
    }
}

/// Interpretation parameters. The only free choice is the bound `b` in
/// `[[x !> y]] = x > b /\ x > y` on integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Theory {
    pub bound: BigInt,
}

impl Default for Theory {
    fn default() -> Self {
        Theory { bound: BigInt::zero() }
    }
}

impl Theory {
    pub fn with_bound(bound: impl Into<BigInt>) -> Self {
        Theory { bound: bound.into() }
    }

    pub fn above_int(&self, x: &BigInt, y: &BigInt) -> bool {
        x > &self.bound && x > y
    }

    pub fn above_bool(x: bool, y: bool) -> bool {
        x && !y
    }

    fn eval_op(&self, op: TheoryOp, args: &[SemValue]) -> SemValue {
        use SemValue::{Bool, Int};
        match (op, args) {
            (TheoryOp::Add, [Int(a), Int(b)]) => Int(a + b),
            (TheoryOp::Sub, [Int(a), Int(b)]) => Int(a - b),
            (TheoryOp::Mul, [Int(a), Int(b)]) => Int(a * b),
            (TheoryOp::Le, [Int(a), Int(b)]) => Bool(a <= b),
            (TheoryOp::Lt, [Int(a), Int(b)]) => Bool(a < b),
            (TheoryOp::Ge, [Int(a), Int(b)]) => Bool(a >= b),
            (TheoryOp::Gt, [Int(a), Int(b)]) => Bool(a > b),
            (TheoryOp::Eq, [Int(a), Int(b)]) => Bool(a == b),
            (TheoryOp::Ne, [Int(a), Int(b)]) => Bool(a != b),
            (TheoryOp::And, [Bool(a), Bool(b)]) => Bool(*a && *b),
            (TheoryOp::Or, [Bool(a), Bool(b)]) => Bool(*a || *b),
            (TheoryOp::Not, [Bool(a)]) => Bool(!*a),
            (TheoryOp::Above(OrderSort::Int), [Int(a), Int(b)]) => Bool(self.above_int(a, b)),
            (TheoryOp::AboveEq(OrderSort::Int), [Int(a), Int(b)]) => Bool(a == b || self.above_int(a, b)),
            (TheoryOp::Above(OrderSort::Bool), [Bool(a), Bool(b)]) => Bool(Self::above_bool(*a, *b)),
            (TheoryOp::AboveEq(OrderSort::Bool), [Bool(a), Bool(b)]) => Bool(a == b || Self::above_bool(*a, *b)),
            _ => unreachable!("operator {op} applied to ill-sorted arguments"),
        }
    }

    /// `[[t]]` for a ground theory term of any theory type.
    pub fn interpret_any(&self, t: &Term) -> Result<Interpreted, TheoryError> {
        if !t.is_ground() || !t.is_theory() {
            return Err(TheoryError::NotGroundTheory(t.to_string()));
        }
        Ok(self.interpret_unchecked(t))
    }

    fn interpret_unchecked(&self, t: &Term) -> Interpreted {
        match t.kind() {
            TermKind::Sym(f) => match f.kind() {
                SymbolKind::Int(n) => Interpreted::Value(SemValue::Int(n.clone())),
                SymbolKind::Bool(b) => Interpreted::Value(SemValue::Bool(*b)),
                SymbolKind::Op(op) => Interpreted::Partial(*op, Vec::new()),
                SymbolKind::Defined => unreachable!("theory term"),
            },
            TermKind::Var(_) => unreachable!("ground term"),
            TermKind::App(a, b) => {
                let arg = match self.interpret_unchecked(b) {
                    Interpreted::Value(v) => v,
                    // theory symbols only take sort-typed arguments
                    Interpreted::Partial(..) => unreachable!("first-order theory"),
                };
                self.interpret_unchecked(a).apply(self, arg)
            }
        }
    }

    /// `[[t]]` for a ground theory term whose type is a theory sort.
    pub fn interpret(&self, t: &Term) -> Result<SemValue, TheoryError> {
        match self.interpret_any(t)? {
            Interpreted::Value(v) => Ok(v),
            Interpreted::Partial(..) => Err(TheoryError::NotASort(t.to_string())),
        }
    }

    /// A root calculation step: `f v1 ... vn` with `f` a non-value theory symbol, all `vi`
    /// values and a theory-sort result is replaced by the value it denotes.
    pub fn try_calculate(&self, t: &Term) -> Option<Term> {
        if !t.ty().is_theory_sort() {
            return None;
        }
        let (head, args) = t.head_args();
        let f = head.as_symbol()?;
        if !f.is_theory() || f.is_value() {
            return None;
        }
        if !args.iter().all(|a| a.is_value()) {
            return None;
        }
        match self.interpret_unchecked(t) {
            Interpreted::Value(v) => Some(v.to_term()),
            Interpreted::Partial(..) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn bin(op: TheoryOp, a: Term, b: Term) -> Term {
        op_term(op, vec![a, b]).unwrap()
    }

    #[test]
    fn interprets_examples() {
        let th = Theory::default();
        assert_eq!(
            th.interpret(&bin(TheoryOp::Sub, int(1), int(1))).unwrap(),
            SemValue::Int(0.into())
        );
        assert_eq!(th.interpret(&boolean(true)).unwrap(), SemValue::Bool(true));
        let above = TheoryOp::Above(OrderSort::Int);
        assert_eq!(th.interpret(&bin(above, int(3), int(1))).unwrap(), SemValue::Bool(true));
        assert_eq!(
            th.interpret(&bin(above, int(0), int(-5))).unwrap(),
            SemValue::Bool(false)
        );
    }

    #[test]
    fn bound_shifts_integer_ordering() {
        let th = Theory::with_bound(-10);
        let above = TheoryOp::Above(OrderSort::Int);
        assert_eq!(
            th.interpret(&bin(above, int(0), int(-5))).unwrap(),
            SemValue::Bool(true)
        );
        assert_eq!(
            th.interpret(&bin(above, int(-10), int(-11))).unwrap(),
            SemValue::Bool(false)
        );
    }

    #[test]
    fn bool_ordering_is_true_above_false() {
        let th = Theory::default();
        let above = TheoryOp::Above(OrderSort::Bool);
        let geq = TheoryOp::AboveEq(OrderSort::Bool);
        for a in [false, true] {
            for b in [false, true] {
                let gt = th.interpret(&bin(above, boolean(a), boolean(b))).unwrap();
                let ge = th.interpret(&bin(geq, boolean(a), boolean(b))).unwrap();
                assert_eq!(gt, SemValue::Bool(a && !b));
                assert_eq!(ge, SemValue::Bool(a == b || (a && !b)));
            }
        }
    }

    #[test]
    fn calculation_guards() {
        let th = Theory::default();
        assert_eq!(th.try_calculate(&bin(TheoryOp::Sub, int(1), int(1))), Some(int(0)));
        // partial application has type Int -> Int
        let partial = op_term(TheoryOp::Mul, vec![int(1)]).unwrap();
        assert_eq!(th.try_calculate(&partial), None);
        // values are normal
        assert_eq!(th.try_calculate(&int(4)), None);
        // nested redex is not a root step
        let nested = bin(TheoryOp::Add, bin(TheoryOp::Add, int(1), int(2)), int(3));
        assert_eq!(th.try_calculate(&nested), None);
        let fact = FunctionSymbol::defined(
            "fact",
            Type::curried([Type::int(), Type::arrow(Type::int(), Type::int())], Type::int()),
        );
        let exit = FunctionSymbol::defined("exit", Type::arrow(Type::int(), Type::int()));
        let t = Term::apply(Term::sym(fact), [int(0), Term::sym(exit)]).unwrap();
        assert_eq!(th.try_calculate(&t), None);
    }

    #[test]
    fn partial_operator_interpretation() {
        let th = Theory::default();
        let partial = op_term(TheoryOp::Le, vec![int(0)]).unwrap();
        assert_eq!(
            th.interpret_any(&partial).unwrap(),
            Interpreted::Partial(TheoryOp::Le, vec![SemValue::Int(0.into())])
        );
        assert!(matches!(th.interpret(&partial), Err(TheoryError::NotASort(_))));
    }

    #[test]
    fn value_round_trip() {
        let th = Theory::default();
        for v in [
            SemValue::Int(BigInt::from(-7)),
            SemValue::Int(BigInt::one()),
            SemValue::Bool(false),
            SemValue::Bool(true),
        ] {
            let t = v.to_term();
            assert!(t.is_value());
            assert_eq!(th.interpret(&t).unwrap(), v);
        }
    }
}
