//! Orient each factorial rule with HORPO under hand-picked parameters and print the
//! derivations; then show why a weaker precedence fails.
//!
//!     cargo run --example orient

use lcstrs::horpo::orient_rule;
use lcstrs::{parse_system, HorpoParams, Precedence, Solver, Status};

fn main() {
    let (_, sys) = parse_system(include_str!("fact.lcstrs")).expect("factorial system");
    let f = |n: &str| sys.signature.get(n).expect("declared").clone();
    let params = HorpoParams {
        precedence: Precedence::from_pairs([(f("init"), f("fact")), (f("fact"), f("comp")), (f("init"), f("exit"))])
            .expect("acyclic"),
        status: [(f("fact"), Status::Lex)].into(),
        bound: 0.into(),
    };
    let solver = Solver::default();
    for (i, r) in sys.rules.iter().enumerate() {
        println!("rule {}: {r}", i + 1);
        match orient_rule(r, &params, &solver) {
            Ok(j) => print!("{j}"),
            Err(e) => print!("{e}"),
        }
    }

    // without fact > comp, the recursive rule cannot be oriented
    let weak = HorpoParams {
        precedence: Precedence::from_pairs([(f("init"), f("fact")), (f("init"), f("exit"))]).expect("acyclic"),
        ..params
    };
    println!("without fact > comp:");
    if let Err(e) = orient_rule(&sys.rules[3], &weak, &solver) {
        print!("{e}");
    }
    println!("{} entailment queries", solver.calls());
}
