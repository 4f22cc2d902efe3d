//! Function symbols and variables.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;

use crate::theory::TheoryOp;
use crate::types::Type;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    /// A user-declared (non-theory) symbol.
    Defined,
    /// An integer literal.
    Int(BigInt),
    /// `true` or `false`.
    Bool(bool),
    /// A built-in theory operator.
    Op(TheoryOp),
}

#[derive(Debug)]
struct SymbolData {
    name: Arc<str>,
    ty: Type,
    kind: SymbolKind,
}

/// A typed function symbol. Cheap to clone; equality is by name and type.
#[derive(Clone)]
pub struct FunctionSymbol(Arc<SymbolData>);

impl FunctionSymbol {
    pub fn defined(name: &str, ty: Type) -> Self {
        Self::with_kind(name, ty, SymbolKind::Defined)
    }

    pub(crate) fn with_kind(name: &str, ty: Type, kind: SymbolKind) -> Self {
        FunctionSymbol(Arc::new(SymbolData {
            name: name.into(),
            ty,
            kind,
        }))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn ty(&self) -> &Type {
        &self.0.ty
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.0.kind
    }

    pub fn is_theory(&self) -> bool {
        !matches!(self.0.kind, SymbolKind::Defined)
    }

    /// Values are theory symbols of a theory sort: literals, `true`, `false`.
    pub fn is_value(&self) -> bool {
        self.is_theory() && self.0.ty.is_theory_sort()
    }

    pub fn op(&self) -> Option<TheoryOp> {
        match self.0.kind {
            SymbolKind::Op(op) => Some(op),
            _ => None,
        }
    }

    pub fn arity(&self) -> usize {
        self.0.ty.arity()
    }
}

impl PartialEq for FunctionSymbol {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.name == other.0.name && self.0.ty == other.0.ty)
    }
}

impl Eq for FunctionSymbol {}

impl Hash for FunctionSymbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.name.hash(state);
        self.0.ty.hash(state);
    }
}

impl PartialOrd for FunctionSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FunctionSymbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.0.name, &self.0.ty).cmp(&(&other.0.name, &other.0.ty))
    }
}

impl fmt::Debug for FunctionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", self.0.name, self.0.ty)
    }
}

impl fmt::Display for FunctionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.name)
    }
}

/// A typed variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    name: Arc<str>,
    ty: Type,
}

impl Variable {
    pub fn new(name: &str, ty: Type) -> Self {
        Variable { name: name.into(), ty }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ty(&self) -> &Type {
        &self.ty
    }
}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", self.name, self.ty)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}
