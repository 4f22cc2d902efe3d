//! Normalize terms of the factorial system and print each trace.
//!
//!     cargo run --example rewrite
//!
//! Shows innermost and outermost strategies, input values for the fresh variable of
//! `init`, and a fuel-limited run on a looping system.

use lcstrs::rewrite::{ListInputs, RewriteError, DEFAULT_FUEL};
use lcstrs::{parse_system, parse_term, Rewriter, SemValue, Strategy, VarContext};

const FACT: &str = include_str!("fact.lcstrs");

fn main() {
    let (_, sys) = parse_system(FACT).expect("factorial system");
    let rw = Rewriter::new(&sys);
    let term = |s| parse_term(s, &sys.signature, &VarContext::open()).expect("term");

    for strategy in [Strategy::Innermost, Strategy::Outermost] {
        println!("== fact 3 exit, {strategy}");
        let trace = rw
            .normalize(&term("fact 3 exit"), strategy, DEFAULT_FUEL, &mut ListInputs::default())
            .expect("terminates");
        print!("{trace}");
    }

    println!("== init with input 4");
    let mut inputs = ListInputs::new([SemValue::Int(4.into())]);
    let trace = rw
        .normalize(&term("init"), Strategy::Innermost, DEFAULT_FUEL, &mut inputs)
        .expect("terminates");
    println!("{} steps, result {}", trace.step_count, trace.result);

    let (_, looping) = parse_system("fun f : Int -> Int\nrule f x -> f (x + 1) [true]").expect("system");
    let t = parse_term("f 0", &looping.signature, &VarContext::open()).expect("term");
    match Rewriter::new(&looping).normalize(&t, Strategy::Innermost, 20, &mut ListInputs::default()) {
        Err(RewriteError::FuelExhausted { partial }) => {
            println!(
                "== f 0: out of fuel after {} steps at {}",
                partial.step_count, partial.result
            )
        }
        other => println!("== f 0: unexpected {other:?}"),
    }
}
