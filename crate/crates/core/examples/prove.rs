//! Search for a termination witness, re-check it, and print the proof as text and JSON.
//!
//!     cargo run --example prove [FILE]

use std::path::PathBuf;

use lcstrs::{check_witness, find_witness, parse_system, ProverConfig, Solver, SolverConfig};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/fact.lcstrs"));
    let text = std::fs::read_to_string(&path).expect("readable file");
    let (_, sys) = parse_system(&text).expect("valid system");
    let config = SolverConfig::from_env();
    let solver = Solver::new(config.clone());
    match find_witness(&sys, &ProverConfig::for_system(&sys), &solver) {
        Ok(w) => {
            let check = check_witness(&w, &sys, &config);
            assert!(check.ok, "{:?}", check.diagnostics);
            print!("{}", w.render(&sys));
            println!("{}", serde_json::to_string_pretty(&w.to_json(&sys)).expect("json"));
        }
        Err(report) => {
            print!("{report}");
            std::process::exit(2);
        }
    }
}
