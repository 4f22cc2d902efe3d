//! Parse and typecheck a system, then print its signature and rules back.
//!
//!     cargo run --example typecheck [FILE]
//!
//! Defaults to the factorial system next to this file.

use std::path::PathBuf;

use lcstrs::{parse_system, parse_term, VarContext};

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/fact.lcstrs"));
    let text = std::fs::read_to_string(&path).expect("readable file");
    let sys = match parse_system(&text) {
        Ok((_, sys)) => sys,
        Err(e) => {
            eprintln!("{}:{e}", path.display());
            std::process::exit(1);
        }
    };
    for f in sys.signature.declared() {
        println!("fun {} : {}", f.name(), f.ty());
    }
    for r in &sys.rules {
        println!("rule {r}");
    }

    // Terms are typed against the signature; unknown names become variables in an open context.
    for src in ["fact 3 exit", "comp exit ([*] 2)", "[+] 1", "fact true exit"] {
        match parse_term(src, &sys.signature, &VarContext::open()) {
            Ok(t) => println!("{src}  :  {}", t.ty()),
            Err(e) => println!("{src}  :  error {e}"),
        }
    }
}
