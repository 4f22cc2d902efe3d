//! User signatures layered over the built-in theory signature.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::symbol::FunctionSymbol;
use crate::theory::{self, TheoryOp};
use crate::types::{Sort, Type, BOOL, INT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("symbol `{0}` is declared twice")]
    Duplicate(String),
    #[error("`{0}` is a built-in theory symbol and cannot be redeclared")]
    Builtin(String),
    #[error("`{0}` is not a valid symbol name")]
    BadName(String),
}

/// What a name refers to in a signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Resolved {
    Symbol(FunctionSymbol),
    /// `!>` / `!>=`, whose sort is fixed by the arguments.
    Ordering {
        strict: bool,
    },
}

/// Declared sorts and function symbols. The built-in theory is always present.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    sorts: BTreeMap<String, Sort>,
    symbols: BTreeMap<String, FunctionSymbol>,
    order: Vec<String>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// The sort with this name; unknown names become user sorts.
    pub fn sort(&mut self, name: &str) -> Sort {
        match name {
            INT => Sort::int(),
            BOOL => Sort::bool(),
            _ => self
                .sorts
                .entry(name.to_string())
                .or_insert_with(|| Sort::user(name))
                .clone(),
        }
    }

    pub fn declare(&mut self, name: &str, ty: Type) -> Result<FunctionSymbol, SignatureError> {
        if theory::is_builtin_name(name) {
            return Err(SignatureError::Builtin(name.to_string()));
        }
        if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
            return Err(SignatureError::BadName(name.to_string()));
        }
        if self.symbols.contains_key(name) {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        collect_sorts(&ty, &mut self.sorts);
        let f = FunctionSymbol::defined(name, ty);
        self.symbols.insert(name.to_string(), f.clone());
        self.order.push(name.to_string());
        Ok(f)
    }

    pub fn get(&self, name: &str) -> Option<&FunctionSymbol> {
        self.symbols.get(name)
    }

    /// Declared symbols in declaration order.
    pub fn declared(&self) -> impl Iterator<Item = &FunctionSymbol> {
        self.order.iter().map(move |n| &self.symbols[n])
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Resolves a name to a declared or built-in symbol. Integer literals are not names.
    pub fn resolve(&self, name: &str) -> Option<Resolved> {
        if let Some(f) = self.symbols.get(name) {
            return Some(Resolved::Symbol(f.clone()));
        }
        match name {
            "true" => return Some(Resolved::Symbol(theory::bool_symbol(true))),
            "false" => return Some(Resolved::Symbol(theory::bool_symbol(false))),
            "!>" => return Some(Resolved::Ordering { strict: true }),
            "!>=" => return Some(Resolved::Ordering { strict: false }),
            _ => {}
        }
        TheoryOp::ALL
            .iter()
            .find(|op| op.name() == name)
            .map(|op| Resolved::Symbol(op.symbol()))
    }
}

fn collect_sorts(ty: &Type, out: &mut BTreeMap<String, Sort>) {
    match ty {
        Type::Base(s) => {
            if !s.is_theory() {
                out.entry(s.name().to_string()).or_insert_with(|| s.clone());
            }
        }
        Type::Arrow(a, b) => {
            collect_sorts(a, out);
            collect_sorts(b, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_builtins() {
        let mut sig = Signature::new();
        sig.declare("f", Type::int()).unwrap();
        assert_eq!(
            sig.declare("f", Type::int()),
            Err(SignatureError::Duplicate("f".into()))
        );
        assert_eq!(
            sig.declare("not", Type::int()),
            Err(SignatureError::Builtin("not".into()))
        );
        assert_eq!(
            sig.declare("true", Type::int()),
            Err(SignatureError::Builtin("true".into()))
        );
    }

    #[test]
    fn resolves_builtins() {
        let sig = Signature::new();
        assert_eq!(sig.resolve("+"), Some(Resolved::Symbol(TheoryOp::Add.symbol())));
        assert_eq!(sig.resolve("!>"), Some(Resolved::Ordering { strict: true }));
        assert_eq!(sig.resolve("x"), None);
    }
}
