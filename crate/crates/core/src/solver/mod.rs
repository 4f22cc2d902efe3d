//! Entailment `phi |= psi` between logical constraints.
//!
//! Queries go through a pipeline: ground evaluation, syntactic shortcuts, a built-in linear
//! arithmetic refuter, a bounded counterexample search, and finally an optional external
//! SMT solver. A `Yes` is only returned when entailment is certain; a `No` always carries a
//! counterexample that has been checked by evaluation.

mod lia;
pub mod smtlib;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;
use std::time::Duration;

use num_bigint::BigInt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use thiserror::Error;

use crate::rule::check_constraint;
use crate::symbol::{SymbolKind, Variable};
use crate::term::{Substitution, Term, TermKind};
use crate::theory::{OrderSort, SemValue, Theory, TheoryOp};

pub use lia::Outcome as LiaOutcome;
pub use smtlib::{entailment_script, to_smtlib};

/// Environment variable naming the default external solver command, e.g. `z3 -in`.
pub const SMT_ENV: &str = "LCSTRS_SMT";

pub type Counterexample = BTreeMap<Variable, SemValue>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No(Counterexample),
    Unknown(String),
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Yes => write!(f, "yes"),
            Verdict::No(cex) => {
                write!(f, "no")?;
                let parts: Vec<String> = cex.iter().map(|(x, v)| format!("{x} = {v}")).collect();
                if !parts.is_empty() {
                    write!(f, " ({})", parts.join(", "))?;
                }
                Ok(())
            }
            Verdict::Unknown(why) => write!(f, "unknown: {why}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("not a ground logical constraint: `{0}`")]
    NotGround(String),
    #[error("cannot translate `{0}` to SMT-LIB")]
    Unsupported(String),
    #[error("solver process: {0}")]
    Process(String),
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
}

/// Which stage of the pipeline produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ground,
    Syntactic,
    Linear,
    Search,
    Smt,
    /// No stage could decide.
    None,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// External solver command line; `None` disables the SMT stage.
    pub smt_command: Option<Vec<String>>,
    pub timeout: Duration,
    /// Maximum assignments tried by the counterexample search.
    pub search_budget: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            smt_command: None,
            timeout: Duration::from_secs(2),
            search_budget: 2000,
        }
    }
}

impl SolverConfig {
    /// Default configuration, with the SMT command taken from [`SMT_ENV`] when set.
    pub fn from_env() -> Self {
        let smt_command = std::env::var(SMT_ENV)
            .ok()
            .map(|s| s.split_whitespace().map(String::from).collect::<Vec<_>>())
            .filter(|v| !v.is_empty());
        SolverConfig {
            smt_command,
            ..Self::default()
        }
    }
}

/// A decided query, as recorded in the log.
#[derive(Clone, Debug)]
pub struct Query {
    pub vars: BTreeSet<Variable>,
    pub phi: Term,
    pub psi: Term,
    pub bound: BigInt,
    pub verdict: Verdict,
    pub method: Method,
}

/// Ground evaluation of a logical constraint.
pub fn eval_ground_constraint(th: &Theory, phi: &Term) -> Result<bool, SolverError> {
    match th.interpret(phi) {
        Ok(SemValue::Bool(b)) => Ok(b),
        _ => Err(SolverError::NotGround(phi.to_string())),
    }
}

fn instantiate(assignment: &Counterexample) -> Substitution {
    let mut s = Substitution::new();
    for (x, v) in assignment {
        s.insert(x.clone(), v.to_term()).expect("sort-typed value");
    }
    s
}

/// Evaluates `phi` under an assignment covering its variables.
pub fn eval_under(th: &Theory, phi: &Term, assignment: &Counterexample) -> Option<bool> {
    eval_ground_constraint(th, &phi.subst(&instantiate(assignment))).ok()
}

/// Whether `assignment` makes `phi` true and `psi` false.
pub fn is_counterexample(th: &Theory, phi: &Term, psi: &Term, assignment: &Counterexample) -> bool {
    eval_under(th, phi, assignment) == Some(true) && eval_under(th, psi, assignment) == Some(false)
}

fn conjuncts(t: &Term) -> Vec<&Term> {
    let (head, args) = t.head_args();
    if head.as_symbol().and_then(|f| f.op()) == Some(TheoryOp::And) && args.len() == 2 {
        let mut out = conjuncts(args[0]);
        out.extend(conjuncts(args[1]));
        out
    } else {
        vec![t]
    }
}

fn is_bool_const(t: &Term, b: bool) -> bool {
    matches!(t.as_symbol().map(|f| f.kind()), Some(SymbolKind::Bool(c)) if *c == b)
}

fn is_reflexive_order(t: &Term) -> bool {
    let (head, args) = t.head_args();
    matches!(head.as_symbol().and_then(|f| f.op()), Some(TheoryOp::AboveEq(_))) && args.len() == 2 && args[0] == args[1]
}

fn int_constants(t: &Term, out: &mut BTreeSet<BigInt>) {
    match t.kind() {
        TermKind::Sym(f) => {
            if let SymbolKind::Int(n) = f.kind() {
                out.insert(n.clone());
            }
        }
        TermKind::Var(_) => {}
        TermKind::App(a, b) => {
            int_constants(a, out);
            int_constants(b, out);
        }
    }
}

fn default_of(x: &Variable) -> SemValue {
    if x.ty().as_sort().is_some_and(|s| s.is_bool()) {
        SemValue::Bool(false)
    } else {
        SemValue::Int(BigInt::from(0))
    }
}

fn is_bool_var(x: &Variable) -> bool {
    x.ty().as_sort().is_some_and(|s| s.is_bool())
}

/// A thread-safe entailment checker with a memo table and a query log.
pub struct Solver {
    config: SolverConfig,
    cache: Mutex<HashMap<String, (Verdict, Method)>>,
    log: Mutex<Vec<Query>>,
    calls: Mutex<usize>,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new(SolverConfig::default())
    }
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        Solver {
            config,
            cache: Mutex::new(HashMap::new()),
            log: Mutex::new(Vec::new()),
            calls: Mutex::new(0),
        }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Every query decided so far (cache hits are not repeated).
    pub fn log(&self) -> Vec<Query> {
        self.log.lock().expect("log lock").clone()
    }

    /// Number of calls to [`Solver::entails_in`], including cache hits.
    pub fn calls(&self) -> usize {
        *self.calls.lock().expect("calls lock")
    }

    /// `phi |= psi` over the free variables of `phi`.
    pub fn entails(&self, th: &Theory, phi: &Term, psi: &Term) -> Verdict {
        self.entails_in(th, &phi.free_vars(), phi, psi)
    }

    /// `phi |= psi` where the assignments range over `vars`, which must include the free
    /// variables of both constraints.
    pub fn entails_in(&self, th: &Theory, vars: &BTreeSet<Variable>, phi: &Term, psi: &Term) -> Verdict {
        self.entails_with_method(th, vars, phi, psi).0
    }

    pub fn entails_with_method(
        &self,
        th: &Theory,
        vars: &BTreeSet<Variable>,
        phi: &Term,
        psi: &Term,
    ) -> (Verdict, Method) {
        *self.calls.lock().expect("calls lock") += 1;
        for c in [phi, psi] {
            if let Err(e) = check_constraint(c) {
                return (Verdict::Unknown(format!("precondition: {e}")), Method::None);
            }
        }
        if let Some(x) = phi
            .free_vars()
            .iter()
            .chain(psi.free_vars().iter())
            .find(|x| !vars.contains(x))
        {
            return (
                Verdict::Unknown(format!("precondition: variable {x} is not in the variable set")),
                Method::None,
            );
        }
        let var_list: Vec<String> = vars.iter().map(|x| format!("{x}:{}", x.ty())).collect();
        let key = format!("{}|{}|{phi}|{psi}", th.bound, var_list.join(","));
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return hit.clone();
        }
        let (verdict, method) = self.decide(th, vars, phi, psi);
        if let Verdict::No(cex) = &verdict {
            debug_assert!(is_counterexample(th, phi, psi, cex));
        }
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, (verdict.clone(), method));
        self.log.lock().expect("log lock").push(Query {
            vars: vars.clone(),
            phi: phi.clone(),
            psi: psi.clone(),
            bound: th.bound.clone(),
            verdict: verdict.clone(),
            method,
        });
        (verdict, method)
    }

    fn decide(&self, th: &Theory, vars: &BTreeSet<Variable>, phi: &Term, psi: &Term) -> (Verdict, Method) {
        if vars.is_empty() {
            let holds = eval_ground_constraint(th, phi).expect("ground constraint");
            if !holds || eval_ground_constraint(th, psi).expect("ground constraint") {
                return (Verdict::Yes, Method::Ground);
            }
            return (Verdict::No(Counterexample::new()), Method::Ground);
        }
        if is_bool_const(psi, true)
            || is_bool_const(phi, false)
            || is_reflexive_order(psi)
            || conjuncts(phi).contains(&psi)
        {
            return (Verdict::Yes, Method::Syntactic);
        }
        let parts = conjuncts(psi);
        if parts.len() > 1 {
            let mut unknown = None;
            let mut method = Method::Syntactic;
            for p in parts {
                let (v, m) = self.decide(th, vars, phi, p);
                match v {
                    Verdict::Yes => {
                        if m != Method::Syntactic {
                            method = m;
                        }
                    }
                    Verdict::No(cex) if is_counterexample(th, phi, psi, &cex) => return (Verdict::No(cex), m),
                    Verdict::No(_) => unknown = Some(("counterexample does not cover the query".into(), m)),
                    Verdict::Unknown(why) => unknown = Some((why, m)),
                }
            }
            return match unknown {
                None => (Verdict::Yes, method),
                Some((why, m)) => (Verdict::Unknown(why), m),
            };
        }
        let negated = Term::app(Term::sym(TheoryOp::Not.symbol()), psi.clone()).expect("bool");
        let query = Term::apply(Term::sym(TheoryOp::And.symbol()), [phi.clone(), negated]).expect("bool");
        let lia = lia::refute(th, &query);
        if lia == LiaOutcome::Refuted {
            return (Verdict::Yes, Method::Linear);
        }
        if let Some(cex) = self.search(th, vars, phi, psi) {
            return (Verdict::No(cex), Method::Search);
        }
        if let Some(cmd) = &self.config.smt_command {
            return match self.ask_external(cmd, th, vars, phi, psi) {
                Ok(v) => (v, Method::Smt),
                Err(e) => (Verdict::Unknown(e.to_string()), Method::None),
            };
        }
        let why = match lia {
            LiaOutcome::OutOfScope => "outside the built-in linear fragment and no SMT solver configured",
            _ => "not refuted by linear reasoning, no counterexample found, no SMT solver configured",
        };
        (Verdict::Unknown(why.into()), Method::None)
    }

    /// Bounded search over small values and values near the constants of the query.
    fn search(&self, th: &Theory, vars: &BTreeSet<Variable>, phi: &Term, psi: &Term) -> Option<Counterexample> {
        let mut consts = BTreeSet::new();
        int_constants(phi, &mut consts);
        int_constants(psi, &mut consts);
        consts.insert(th.bound.clone());
        let mut ints: BTreeSet<BigInt> = (-2..=2).map(BigInt::from).collect();
        for c in &consts {
            for d in -1..=1 {
                ints.insert(c + d);
            }
        }
        let ints: Vec<SemValue> = ints.into_iter().take(16).map(SemValue::Int).collect();
        let bools = vec![SemValue::Bool(false), SemValue::Bool(true)];
        let vars: Vec<&Variable> = vars.iter().collect();
        let domains: Vec<&Vec<SemValue>> = vars
            .iter()
            .map(|x| if is_bool_var(x) { &bools } else { &ints })
            .collect();
        let total = domains.iter().try_fold(1usize, |acc, d| acc.checked_mul(d.len()));
        let check = |idx: &[usize]| {
            let a: Counterexample = vars
                .iter()
                .zip(idx)
                .zip(&domains)
                .map(|((x, &i), d)| ((*x).clone(), d[i].clone()))
                .collect();
            is_counterexample(th, phi, psi, &a).then_some(a)
        };
        match total {
            Some(n) if n <= self.config.search_budget => {
                let mut idx = vec![0usize; vars.len()];
                loop {
                    if let Some(a) = check(&idx) {
                        return Some(a);
                    }
                    let mut k = 0;
                    loop {
                        if k == idx.len() {
                            return None;
                        }
                        idx[k] += 1;
                        if idx[k] < domains[k].len() {
                            break;
                        }
                        idx[k] = 0;
                        k += 1;
                    }
                }
            }
            _ => {
                let mut rng = StdRng::seed_from_u64(0x5eed);
                for _ in 0..self.config.search_budget {
                    let idx: Vec<usize> = domains.iter().map(|d| rng.gen_range(0..d.len())).collect();
                    if let Some(a) = check(&idx) {
                        return Some(a);
                    }
                }
                None
            }
        }
    }

    fn ask_external(
        &self,
        cmd: &[String],
        th: &Theory,
        vars: &BTreeSet<Variable>,
        phi: &Term,
        psi: &Term,
    ) -> Result<Verdict, SolverError> {
        let script = entailment_script(th, vars, phi, psi)?;
        let out = smtlib::run(cmd, &script, self.config.timeout)?;
        Ok(match smtlib::parse_response(&out) {
            smtlib::Response::Unsat => Verdict::Yes,
            smtlib::Response::Sat(model) => {
                let cex: Counterexample = vars
                    .iter()
                    .map(|x| {
                        let v = model.get(x.name()).cloned().unwrap_or_else(|| default_of(x));
                        (x.clone(), v)
                    })
                    .collect();
                let sorted = cex.iter().all(|(x, v)| is_bool_var(x) == v.as_bool().is_some());
                if sorted && is_counterexample(th, phi, psi, &cex) {
                    Verdict::No(cex)
                } else {
                    Verdict::Unknown("solver model does not refute the entailment".into())
                }
            }
            smtlib::Response::Unknown(why) => Verdict::Unknown(why),
        })
    }
}

/// Draws random assignments and returns one that violates a `Yes` verdict, if any.
/// Values come from a small range and, every other sample, a wider one.
pub fn find_violation<R: Rng>(th: &Theory, q: &Query, samples: usize, rng: &mut R) -> Option<Counterexample> {
    if !q.verdict.is_yes() {
        return None;
    }
    for i in 0..samples {
        let range = if i % 2 == 0 { 5 } else { 100 };
        let a: Counterexample = q
            .vars
            .iter()
            .map(|x| {
                let v = if is_bool_var(x) {
                    SemValue::Bool(rng.gen())
                } else {
                    let base = if rng.gen_bool(0.25) {
                        th.bound.clone()
                    } else {
                        BigInt::from(0)
                    };
                    SemValue::Int(base + rng.gen_range(-range..=range))
                };
                (x.clone(), v)
            })
            .collect();
        if is_counterexample(th, &q.phi, &q.psi, &a) {
            return Some(a);
        }
    }
    None
}

/// `x !> y` for theory terms of the same sort.
pub fn above(x: Term, y: Term, strict: bool) -> Option<Term> {
    let sort = OrderSort::of(x.ty())?;
    let op = if strict {
        TheoryOp::Above(sort)
    } else {
        TheoryOp::AboveEq(sort)
    };
    crate::theory::op_term(op, vec![x, y]).ok()
}
