//! Logically constrained simply-typed term rewriting.
//!
//! Terms are applicative and simply typed; rules `l -> r [phi]` carry a logical constraint
//! over the built-in integer/boolean theory. The crate parses and typechecks systems,
//! executes the rewrite relation, decides constraint entailment, and proves termination
//! with a constrained higher-order recursive path ordering.

pub mod cli;
pub mod gen;
pub mod horpo;
pub mod prover;
pub mod rewrite;
pub mod rule;
pub mod signature;
pub mod solver;
pub mod symbol;
pub mod syntax;
pub mod term;
pub mod theory;
pub mod types;
pub mod typing;

pub use horpo::{HorpoParams, Judgment, Precedence, Status};
pub use prover::{check_witness, find_witness, ProverConfig, Witness};
pub use rewrite::{Rewriter, Strategy, Trace};
pub use rule::{Rule, RuleError, System};
pub use signature::Signature;
pub use solver::{Solver, SolverConfig, Verdict};
pub use symbol::{FunctionSymbol, SymbolKind, Variable};
pub use syntax::{parse_system, parse_term, print_term, ParseError};
pub use term::{Position, Side, Substitution, Term, TermKind};
pub use theory::{SemValue, Theory, TheoryOp};
pub use types::{Sort, Type};
pub use typing::{typecheck, PreTerm, Span, TypeError, VarContext};
