#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

use lcstrs::{parse_system, parse_term, System, Term, VarContext};

pub const FACT: &str = include_str!("../../examples/fact.lcstrs");

pub fn fact() -> System {
    parse_system(FACT).expect("factorial system").1
}

pub fn term(sys: &System, s: &str) -> Term {
    parse_term(s, &sys.signature, &VarContext::open()).unwrap_or_else(|e| panic!("{s}: {e}"))
}

pub fn manifest_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn has_python_jsonschema() -> bool {
    Command::new("python3")
        .args(["-c", "import jsonschema"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Validates `doc` against the shipped schema with Python's `jsonschema`. Returns `None`
/// (and says so) when that validator is not installed.
pub fn validate_against_schema(doc: &serde_json::Value) -> Option<Result<(), String>> {
    if !has_python_jsonschema() {
        eprintln!("note: python3 with jsonschema not found; schema validation skipped");
        return None;
    }
    let dir = tempfile::tempdir().expect("tempdir");
    let doc_path = dir.path().join("doc.json");
    std::fs::write(&doc_path, serde_json::to_string(doc).unwrap()).unwrap();
    let script = "import json,sys,jsonschema\n\
                  schema=json.load(open(sys.argv[1]))\n\
                  doc=json.load(open(sys.argv[2]))\n\
                  jsonschema.Draft202012Validator.check_schema(schema)\n\
                  errs=list(jsonschema.Draft202012Validator(schema).iter_errors(doc))\n\
                  print('\\n'.join(e.message for e in errs))\n\
                  sys.exit(1 if errs else 0)\n";
    let out = Command::new("python3")
        .args(["-c", script])
        .arg(manifest_path("schema/output.schema.json"))
        .arg(&doc_path)
        .output()
        .expect("python3 runs");
    Some(if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        ))
    })
}

/// The command for an SMT-LIB solver on PATH, if one is installed.
pub fn installed_smt() -> Option<Vec<String>> {
    let ok = Command::new("z3")
        .arg("-version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false);
    ok.then(|| vec!["z3".to_string(), "-in".to_string()])
}

pub mod random {
    use lcstrs::gen::TermGen;
    use lcstrs::rewrite::calc_step;
    use lcstrs::theory;
    use lcstrs::{Rule, Signature, System, Term, Theory, Type, Variable};
    use rand::seq::SliceRandom;
    use rand::Rng;

    const DECLS: &str = "\
fun f : Int -> Int -> Int
fun g : Int -> Int
fun h : (Int -> Int) -> Int -> Int
fun c : Int
";

    pub fn signature() -> Signature {
        lcstrs::parse_system(DECLS).unwrap().1.signature
    }

    fn sym(sig: &Signature, name: &str) -> Term {
        Term::sym(sig.get(name).unwrap().clone())
    }

    /// A left-hand side `f p1 .. pk` with patterns that are variables or small literals.
    fn lhs<R: Rng>(rng: &mut R, sig: &Signature) -> Term {
        let mut n = 0;
        let mut int_pat = |rng: &mut R| {
            if rng.gen_bool(0.75) {
                n += 1;
                Term::var(Variable::new(&format!("x{n}"), Type::int()))
            } else {
                theory::int(rng.gen_range(-2..=2))
            }
        };
        match rng.gen_range(0..3) {
            0 => Term::apply(sym(sig, "f"), [int_pat(rng), int_pat(rng)]).unwrap(),
            1 => Term::apply(sym(sig, "g"), [int_pat(rng)]).unwrap(),
            _ => {
                let fun = if rng.gen_bool(0.7) {
                    Term::var(Variable::new("F", Type::arrow(Type::int(), Type::int())))
                } else {
                    sym(sig, "g")
                };
                Term::apply(sym(sig, "h"), [fun, int_pat(rng)]).unwrap()
            }
        }
    }

    /// A random valid system over a fixed signature; rules may overlap and need not terminate.
    pub fn system<R: Rng>(rng: &mut R) -> System {
        let sig = signature();
        let mut rules = Vec::new();
        let want = rng.gen_range(1..=4);
        while rules.len() < want {
            let l = lhs(rng, &sig);
            let mut vars: Vec<Variable> = l.free_vars().into_iter().collect();
            let int_vars: Vec<Variable> = vars.iter().filter(|x| x.ty().is_theory_sort()).cloned().collect();
            if rng.gen_bool(0.3) {
                vars.push(Variable::new("z", Type::int()));
            }
            let r = TermGen::new(&sig)
                .with_vars(vars.clone())
                .with_depth(2)
                .term(rng, &Type::int());
            let mut cvars = int_vars;
            if vars.iter().any(|x| x.name() == "z") {
                cvars.push(Variable::new("z", Type::int()));
            }
            let phi = if rng.gen_bool(0.4) {
                Some(theory::boolean(true))
            } else {
                TermGen::theory_only()
                    .with_vars(cvars)
                    .with_depth(2)
                    .term(rng, &Type::bool())
            };
            if let (Some(r), Some(phi)) = (r, phi) {
                if let Ok(rule) = Rule::new(l, r, phi) {
                    rules.push(rule);
                }
            }
        }
        System::new(sig, rules)
    }

    /// A random ground term of type Int over `sys`'s signature and the theory.
    pub fn ground_term<R: Rng>(rng: &mut R, sys: &System, depth: usize) -> Term {
        let g = TermGen::new(&sys.signature).with_depth(depth);
        loop {
            if let Some(t) = g.term(rng, &Type::int()) {
                return t;
            }
        }
    }

    /// All one-step calculation reducts of `t`.
    pub fn calc_reducts(th: &Theory, t: &Term) -> Vec<Term> {
        t.positions_pre_order()
            .into_iter()
            .filter_map(|p| {
                let v = th.try_calculate(t.subterm(&p)?)?;
                t.replace(&p, v).ok()
            })
            .collect()
    }

    /// Calculation-normalizes `t` choosing redexes at random; checks that size decreases.
    pub fn random_calc_normal_form<R: Rng>(rng: &mut R, th: &Theory, t: &Term) -> Result<Term, String> {
        let mut cur = t.clone();
        loop {
            let next = calc_reducts(th, &cur);
            let Some(n) = next.choose(rng) else { return Ok(cur) };
            if n.size() >= cur.size() {
                return Err(format!("{cur} -> {n} does not shrink"));
            }
            cur = n.clone();
        }
    }

    /// Leftmost-innermost calculation normal form, one step at a time.
    pub fn innermost_calc_normal_form(th: &Theory, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Some((_, n)) = calc_step(th, &cur) {
            cur = n;
        }
        cur
    }
}

pub mod horpo_checks;
pub mod multiset;
