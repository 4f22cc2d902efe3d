//! Decide constraint entailments `phi |= psi` and print the SMT-LIB script for each.
//!
//!     cargo run --example entailment
//!
//! Set LCSTRS_SMT (e.g. `z3 -in`) to let queries outside the built-in fragment reach an
//! external solver.

use lcstrs::solver::{entailment_script, Solver, SolverConfig};
use lcstrs::{parse_term, Signature, Theory, Type, VarContext, Variable};

fn main() {
    let th = Theory::default();
    let solver = Solver::new(SolverConfig::from_env());
    let sig = Signature::new();
    let ctx = ["n", "x", "y"]
        .into_iter()
        .fold(VarContext::open(), |c, x| c.with(Variable::new(x, Type::int())));
    let queries = [
        ("n > 0", "n !> n - 1"),
        ("n > 0", "n !>= n - 1"),
        ("true", "n !>= n"),
        ("n >= 0", "n !> n - 1"),
        ("x > y /\\ y > 3", "x !> y"),
        ("x * x >= 0", "x * x + 1 > 0"),
    ];
    for (phi, psi) in queries {
        let p = parse_term(phi, &sig, &ctx).expect("constraint");
        let q = parse_term(psi, &sig, &ctx).expect("constraint");
        let vars = p.free_vars().union(&q.free_vars()).cloned().collect();
        let (verdict, method) = solver.entails_with_method(&th, &vars, &p, &q);
        println!("{phi}  |=  {psi}   ->  {verdict}  ({method:?})");
        if phi == "n > 0" && psi == "n !> n - 1" {
            print!("{}", entailment_script(&th, &vars, &p, &q).expect("linear"));
        }
    }
}
