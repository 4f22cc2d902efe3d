//! Sorts and simple types.

use std::fmt;
use std::sync::Arc;

/// A base sort. Theory sorts carry a semantic domain; `Int` and `Bool` are built in.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sort {
    name: Arc<str>,
    theory: bool,
}

pub const INT: &str = "Int";
pub const BOOL: &str = "Bool";

impl Sort {
    /// A user sort. User sorts never have a theory interpretation.
    pub fn user(name: &str) -> Self {
        Sort {
            name: name.into(),
            theory: false,
        }
    }

    pub fn int() -> Self {
        Sort {
            name: INT.into(),
            theory: true,
        }
    }

    pub fn bool() -> Self {
        Sort {
            name: BOOL.into(),
            theory: true,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_theory(&self) -> bool {
        self.theory
    }

    pub fn is_int(&self) -> bool {
        self.theory && &*self.name == INT
    }

    pub fn is_bool(&self) -> bool {
        self.theory && &*self.name == BOOL
    }
}

impl fmt::Debug for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A simple type: a sort or an arrow `A -> B`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Base(Sort),
    Arrow(Arc<Type>, Arc<Type>),
}

impl Type {
    pub fn int() -> Self {
        Type::Base(Sort::int())
    }

    pub fn bool() -> Self {
        Type::Base(Sort::bool())
    }

    pub fn arrow(arg: Type, result: Type) -> Self {
        Type::Arrow(Arc::new(arg), Arc::new(result))
    }

    /// Builds `a1 -> a2 -> ... -> result`.
    pub fn curried<I>(args: I, result: Type) -> Self
    where
        I: IntoIterator<Item = Type>,
        I::IntoIter: DoubleEndedIterator,
    {
        args.into_iter().rev().fold(result, |acc, a| Type::arrow(a, acc))
    }

    pub fn as_sort(&self) -> Option<&Sort> {
        match self {
            Type::Base(s) => Some(s),
            Type::Arrow(..) => None,
        }
    }

    pub fn split_arrow(&self) -> Option<(&Type, &Type)> {
        match self {
            Type::Arrow(a, b) => Some((a, b)),
            Type::Base(_) => None,
        }
    }

    /// True for a theory sort.
    pub fn is_theory_sort(&self) -> bool {
        matches!(self, Type::Base(s) if s.is_theory())
    }

    /// Theory types: theory sorts, and arrows from a theory sort to a theory type.
    pub fn is_theory_type(&self) -> bool {
        match self {
            Type::Base(s) => s.is_theory(),
            Type::Arrow(a, b) => a.is_theory_sort() && b.is_theory_type(),
        }
    }

    /// Number of arguments before a base sort is reached.
    pub fn arity(&self) -> usize {
        let mut n = 0;
        let mut ty = self;
        while let Type::Arrow(_, b) = ty {
            n += 1;
            ty = b;
        }
        n
    }

    /// Argument types along the right spine.
    pub fn arg_types(&self) -> Vec<&Type> {
        let mut out = Vec::new();
        let mut ty = self;
        while let Type::Arrow(a, b) = ty {
            out.push(&**a);
            ty = b;
        }
        out
    }

    /// The type left after applying `n` arguments, if there are that many.
    pub fn after_args(&self, n: usize) -> Option<&Type> {
        let mut ty = self;
        for _ in 0..n {
            ty = ty.split_arrow()?.1;
        }
        Some(ty)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Base(s) => write!(f, "{s}"),
            Type::Arrow(a, b) => {
                if a.split_arrow().is_some() {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
        }
    }
}

impl fmt::Debug for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
