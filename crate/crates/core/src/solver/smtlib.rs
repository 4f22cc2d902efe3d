//! SMT-LIB 2 translation and an external solver reached over standard input/output.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::symbol::{SymbolKind, Variable};
use crate::term::{Term, TermKind};
use crate::theory::{OrderSort, SemValue, Theory, TheoryOp};

use super::SolverError;

const RESERVED: &[&str] = &[
    "_",
    "!",
    "as",
    "let",
    "exists",
    "forall",
    "match",
    "par",
    "and",
    "or",
    "not",
    "true",
    "false",
    "ite",
    "distinct",
    "=>",
    "xor",
    "assert",
    "check-sat",
    "Int",
    "Bool",
];

/// A variable name as an SMT-LIB symbol, quoted when it is not a simple symbol.
pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
        && !RESERVED.contains(&name);
    if simple {
        name.to_string()
    } else {
        format!("|{}|", name.replace(['|', '\\'], "_"))
    }
}

fn int_literal(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

fn sort_name(x: &Variable) -> Result<&'static str, SolverError> {
    match x.ty().as_sort() {
        Some(s) if s.is_int() => Ok("Int"),
        Some(s) if s.is_bool() => Ok("Bool"),
        _ => Err(SolverError::Unsupported(format!("variable {x} : {}", x.ty()))),
    }
}

/// Translates a theory term of sort Int or Bool, expanding `!>` and `!>=` under the bound.
pub fn to_smtlib(th: &Theory, t: &Term) -> Result<String, SolverError> {
    match t.kind() {
        TermKind::Var(x) => {
            sort_name(x)?;
            Ok(symbol(x.name()))
        }
        TermKind::Sym(f) => match f.kind() {
            SymbolKind::Int(n) => Ok(int_literal(n)),
            SymbolKind::Bool(b) => Ok(b.to_string()),
            _ => Err(SolverError::Unsupported(f.name().to_string())),
        },
        TermKind::App(..) => {
            let (head, args) = t.head_args();
            let op = head
                .as_symbol()
                .and_then(|f| f.op())
                .filter(|op| op.arity() == args.len())
                .ok_or_else(|| SolverError::Unsupported(t.to_string()))?;
            let a: Vec<String> = args.iter().map(|s| to_smtlib(th, s)).collect::<Result<_, _>>()?;
            let bin = |name: &str| format!("({name} {} {})", a[0], a[1]);
            let above_int = || format!("(and (> {} {}) (> {} {}))", a[0], int_literal(&th.bound), a[0], a[1]);
            let above_bool = || format!("(and {} (not {}))", a[0], a[1]);
            Ok(match op {
                TheoryOp::Add => bin("+"),
                TheoryOp::Sub => bin("-"),
                TheoryOp::Mul => bin("*"),
                TheoryOp::Le => bin("<="),
                TheoryOp::Lt => bin("<"),
                TheoryOp::Ge => bin(">="),
                TheoryOp::Gt => bin(">"),
                TheoryOp::Eq => bin("="),
                TheoryOp::Ne => format!("(not {})", bin("=")),
                TheoryOp::And => bin("and"),
                TheoryOp::Or => bin("or"),
                TheoryOp::Not => format!("(not {})", a[0]),
                TheoryOp::Above(OrderSort::Int) => above_int(),
                TheoryOp::AboveEq(OrderSort::Int) => format!("(or {} {})", bin("="), above_int()),
                TheoryOp::Above(OrderSort::Bool) => above_bool(),
                TheoryOp::AboveEq(OrderSort::Bool) => {
                    format!("(or {} {})", bin("="), above_bool())
                }
            })
        }
    }
}

/// Whether every product has a variable-free factor.
fn is_linear(t: &Term) -> bool {
    let (head, args) = t.head_args();
    let is_mul = head.as_symbol().and_then(|f| f.op()) == Some(TheoryOp::Mul);
    if is_mul && args.len() == 2 && !args[0].is_ground() && !args[1].is_ground() {
        return false;
    }
    args.iter().all(|a| is_linear(a))
}

/// The script asking whether `phi /\ not psi` is satisfiable over `vars`.
pub fn entailment_script<'a, I>(th: &Theory, vars: I, phi: &Term, psi: &Term) -> Result<String, SolverError>
where
    I: IntoIterator<Item = &'a Variable>,
{
    let logic = if is_linear(phi) && is_linear(psi) {
        "QF_LIA"
    } else {
        "QF_NIA"
    };
    let mut s = format!("(set-option :produce-models true)\n(set-logic {logic})\n");
    for x in vars {
        s.push_str(&format!("(declare-const {} {})\n", symbol(x.name()), sort_name(x)?));
    }
    s.push_str(&format!("(assert {})\n", to_smtlib(th, phi)?));
    s.push_str(&format!("(assert (not {}))\n", to_smtlib(th, psi)?));
    s.push_str("(check-sat)\n(get-model)\n(exit)\n");
    Ok(s)
}

/// Runs `command` with `input` on stdin, killing it after `timeout`.
pub fn run(command: &[String], input: &str, timeout: Duration) -> Result<String, SolverError> {
    let (prog, args) = command
        .split_first()
        .ok_or_else(|| SolverError::Process("empty solver command".into()))?;
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SolverError::Process(format!("cannot start `{prog}`: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped");
    let mut stdout = child.stdout.take().expect("piped");
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let mut out = String::new();
        let r = stdout.read_to_string(&mut out).map(|_| out);
        let _ = tx.send(r);
    });
    // a solver that exits early closes the pipe; its answer is still read below
    let _ = stdin.write_all(input.as_bytes());
    drop(stdin);
    match rx.recv_timeout(timeout) {
        Ok(Ok(out)) => {
            let _ = child.wait();
            Ok(out)
        }
        Ok(Err(e)) => {
            let _ = child.kill();
            let _ = child.wait();
            Err(SolverError::Process(e.to_string()))
        }
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            Err(SolverError::Timeout(timeout))
        }
    }
}

/// A solver answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Response {
    Unsat,
    Sat(BTreeMap<String, SemValue>),
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl std::fmt::Display for Sexp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(items) => {
                f.write_str("(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' | ')' => {
                out.push(c.to_string());
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '|' => {
                chars.next();
                let mut tok = String::new();
                for d in chars.by_ref() {
                    if d == '|' {
                        break;
                    }
                    tok.push(d);
                }
                out.push(tok);
            }
            '"' => {
                chars.next();
                let mut tok = String::from('"');
                while let Some(d) = chars.next() {
                    tok.push(d);
                    // a doubled quote is an escaped quote
                    if d == '"' && chars.next_if_eq(&'"').is_none() {
                        break;
                    }
                }
                out.push(tok);
            }
            ';' => {
                for d in chars.by_ref() {
                    if d == '\n' {
                        break;
                    }
                }
            }
            _ => {
                let mut tok = String::new();
                while let Some(&d) = chars.peek() {
                    if d == '(' || d == ')' || d.is_whitespace() {
                        break;
                    }
                    tok.push(d);
                    chars.next();
                }
                out.push(tok);
            }
        }
    }
    out
}

fn parse_sexps(tokens: &[String]) -> Vec<Sexp> {
    fn go(tokens: &[String], i: &mut usize) -> Option<Sexp> {
        let tok = tokens.get(*i)?;
        *i += 1;
        match tok.as_str() {
            "(" => {
                let mut items = Vec::new();
                while tokens.get(*i).is_some_and(|t| t != ")") {
                    items.push(go(tokens, i)?);
                }
                *i += 1;
                Some(Sexp::List(items))
            }
            ")" => None,
            _ => Some(Sexp::Atom(tok.clone())),
        }
    }
    let mut i = 0;
    let mut out = Vec::new();
    while i < tokens.len() {
        match go(tokens, &mut i) {
            Some(s) => out.push(s),
            None => break,
        }
    }
    out
}

fn value_of(s: &Sexp) -> Option<SemValue> {
    match s {
        Sexp::Atom(a) if a == "true" => Some(SemValue::Bool(true)),
        Sexp::Atom(a) if a == "false" => Some(SemValue::Bool(false)),
        Sexp::Atom(a) => a.parse().ok().map(SemValue::Int),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(m), x] if m == "-" => match value_of(x)? {
                SemValue::Int(n) => Some(SemValue::Int(-n)),
                SemValue::Bool(_) => None,
            },
            _ => None,
        },
    }
}

fn collect_defines(s: &Sexp, out: &mut BTreeMap<String, SemValue>) {
    if let Sexp::List(items) = s {
        if let [Sexp::Atom(d), Sexp::Atom(name), Sexp::List(params), _sort, body] = items.as_slice() {
            if d == "define-fun" && params.is_empty() {
                if let Some(v) = value_of(body) {
                    out.insert(name.clone(), v);
                }
                return;
            }
        }
        for i in items {
            collect_defines(i, out);
        }
    }
}

/// Reads the answer to a script produced by [`entailment_script`].
pub fn parse_response(out: &str) -> Response {
    let sexps = parse_sexps(&tokenize(out));
    match sexps.first() {
        Some(Sexp::Atom(a)) if a == "unsat" => Response::Unsat,
        Some(Sexp::Atom(a)) if a == "sat" => {
            let mut model = BTreeMap::new();
            for s in &sexps[1..] {
                collect_defines(s, &mut model);
            }
            Response::Sat(model)
        }
        Some(other) => Response::Unknown(format!("solver answered {other}")),
        None => Response::Unknown("solver produced no output".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;
    use crate::{Signature, VarContext};

    fn t(s: &str) -> Term {
        parse_term(s, &Signature::new(), &VarContext::open()).unwrap()
    }

    #[test]
    fn translation_examples() {
        let th = Theory::default();
        assert_eq!(to_smtlib(&th, &t("n > 0")).unwrap(), "(> n 0)");
        assert_eq!(
            to_smtlib(&th, &t("n !> (n - 1)")).unwrap(),
            "(and (> n 0) (> n (- n 1)))"
        );
        assert_eq!(to_smtlib(&th, &t("true")).unwrap(), "true");
        assert_eq!(
            to_smtlib(&Theory::with_bound(-2), &t("x !>= -1")).unwrap(),
            "(or (= x (- 1)) (and (> x (- 2)) (> x (- 1))))"
        );
        assert_eq!(to_smtlib(&th, &t("a != b")).unwrap(), "(not (= a b))");
        assert_eq!(to_smtlib(&th, &t("p !> (not q)")).unwrap(), "(and p (not (not q)))");
    }

    #[test]
    fn picks_the_logic() {
        let th = Theory::default();
        let ctx = VarContext::open().with(Variable::new("x", crate::Type::int()));
        let p = |s: &str| parse_term(s, &Signature::new(), &ctx).unwrap();
        let vars = p("x").free_vars();
        let lin = entailment_script(&th, &vars, &p("x > 0"), &p("2 * x > x")).unwrap();
        assert!(lin.contains("QF_LIA"));
        let nl = entailment_script(&th, &vars, &p("true"), &p("x * x >= 0")).unwrap();
        assert!(nl.contains("QF_NIA"));
    }

    #[test]
    fn quotes_unusual_names() {
        assert_eq!(symbol("k'"), "|k'|");
        assert_eq!(symbol("and"), "|and|");
        assert_eq!(symbol("x_1"), "x_1");
    }

    #[test]
    fn parses_models() {
        let out = "sat\n(\n  (define-fun n () Int\n    (- 3))\n  (define-fun |k'| () Bool true)\n)\n";
        let Response::Sat(m) = parse_response(out) else {
            panic!()
        };
        assert_eq!(m["n"], SemValue::Int((-3).into()));
        assert_eq!(m["k'"], SemValue::Bool(true));
        assert_eq!(parse_response("unsat\n(error \"no model\")"), Response::Unsat);
        assert!(matches!(parse_response("unknown"), Response::Unknown(_)));
        assert!(matches!(parse_response(""), Response::Unknown(_)));
        assert_eq!(
            parse_response("(error \"line 4: no \"\"nonlinear\"\" (here)\")"),
            Response::Unknown("solver answered (error \"line 4: no \"nonlinear\" (here)\")".into())
        );
    }
}
