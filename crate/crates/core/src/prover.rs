//! Search for HORPO parameters orienting every rule of a system.
//!
//! The search is a depth-first walk over partial assignments: a (transitively closed)
//! precedence and a set of symbols whose status is fixed. Unfixed symbols use [`Status::Lex`].
//! When a rule fails to orient, the comparison records which precedence tests answered
//! false and which statuses it looked up; only those can change the outcome, so the children
//! of a state add one such edge or fix one such status. This makes the search complete for
//! the space of acyclic precedences and status maps.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::horpo::{orient_rule, replay, HorpoParams, Judgment, OrientFailure, Precedence, Status};
use crate::rule::System;
use crate::solver::{Solver, SolverConfig};
use crate::symbol::FunctionSymbol;

/// Version of the JSON proof document.
pub const PROOF_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct ProverConfig {
    /// Candidate bounds for the integer ordering, tried in order.
    pub bounds: Vec<BigInt>,
    pub timeout: Duration,
    /// Maximum number of entailment queries over the whole search.
    pub max_queries: usize,
    /// Threads used to check the rules of one candidate.
    pub jobs: usize,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig {
            bounds: vec![BigInt::from(0)],
            timeout: Duration::from_secs(60),
            max_queries: 1_000_000,
            jobs: 1,
        }
    }
}

impl ProverConfig {
    /// Uses the bounds declared in the system when it has any.
    pub fn for_system(system: &System) -> Self {
        let mut c = ProverConfig::default();
        if !system.bounds.is_empty() {
            c.bounds = system.bounds.clone();
        }
        c
    }
}

/// Parameters together with one derivation per rule.
#[derive(Clone, Debug)]
pub struct Witness {
    pub params: HorpoParams,
    pub derivations: Vec<Arc<Judgment>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Every candidate in the search space was tried.
    Exhausted,
    Timeout,
    QueryBudget,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Exhausted => "no witness exists in the search space",
            StopReason::Timeout => "timed out",
            StopReason::QueryBudget => "entailment query budget exhausted",
        })
    }
}

/// Why no witness was found. Never a claim of nontermination.
#[derive(Clone, Debug)]
pub struct FailureReport {
    pub reason: StopReason,
    pub candidates: usize,
    /// The candidate that oriented the most rules.
    pub best: HorpoParams,
    /// Rules that `best` leaves unoriented, with an explanation each.
    pub failures: Vec<(usize, OrientFailure)>,
}

impl fmt::Display for FailureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "no termination witness found: {} ({} candidates tried)",
            self.reason, self.candidates
        )?;
        writeln!(f, "best candidate: {}", ParamsDisplay(&self.best))?;
        for (i, fail) in &self.failures {
            write!(f, "rule {}: {fail}", i + 1)?;
        }
        Ok(())
    }
}

struct ParamsDisplay<'a>(&'a HorpoParams);

impl fmt::Display for ParamsDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.0;
        write!(f, "precedence {{{}}}, bound {}", p.precedence, p.bound)?;
        for (g, st) in &p.status {
            write!(f, ", stat({})={st}", g.name())?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct State {
    precedence: Precedence,
    fixed: BTreeMap<FunctionSymbol, Status>,
}

fn statuses_for(f: &FunctionSymbol) -> Vec<Status> {
    let mut out = vec![Status::Lex];
    out.extend((2..=f.arity()).rev().map(Status::Mul));
    out
}

type Checked = Vec<Result<Arc<Judgment>, Box<OrientFailure>>>;

/// Orients rules in order, stopping at the first failure. With `jobs > 1` the rules are
/// checked concurrently and the result is truncated at the first failure.
fn check_rules(system: &System, params: &HorpoParams, solver: &Solver, jobs: usize) -> Checked {
    if jobs <= 1 || system.rules.len() < 2 {
        let mut out = Vec::new();
        for r in &system.rules {
            let res = orient_rule(r, params, solver);
            let failed = res.is_err();
            out.push(res);
            if failed {
                break;
            }
        }
        return out;
    }
    let chunk = system.rules.len().div_ceil(jobs);
    let mut out: Checked = std::thread::scope(|scope| {
        let handles: Vec<_> = system
            .rules
            .chunks(chunk)
            .map(|rs| scope.spawn(move || rs.iter().map(|r| orient_rule(r, params, solver)).collect::<Checked>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("rule check panicked"))
            .collect()
    });
    if let Some(i) = out.iter().position(|r| r.is_err()) {
        out.truncate(i + 1);
    }
    out
}

/// Unoriented rules with their indices.
type RuleFailures = Vec<(usize, OrientFailure)>;

/// Searches for a witness. Deterministic for `jobs == 1`; with more jobs the same witness is
/// found, only the rule checks run concurrently.
pub fn find_witness(system: &System, config: &ProverConfig, solver: &Solver) -> Result<Witness, Box<FailureReport>> {
    let start = Instant::now();
    let base_calls = solver.calls();
    let mut candidates = 0;
    let mut best: Option<(usize, HorpoParams, RuleFailures)> = None;
    let mut reason = StopReason::Exhausted;
    let bounds = if config.bounds.is_empty() {
        vec![BigInt::from(0)]
    } else {
        config.bounds.clone()
    };
    'bounds: for bound in &bounds {
        let root = State {
            precedence: Precedence::new(),
            fixed: BTreeMap::new(),
        };
        let mut visited = HashSet::new();
        let mut stack = vec![root];
        while let Some(state) = stack.pop() {
            if !visited.insert(state.clone()) {
                continue;
            }
            if start.elapsed() > config.timeout {
                reason = StopReason::Timeout;
                break 'bounds;
            }
            if solver.calls() - base_calls > config.max_queries {
                reason = StopReason::QueryBudget;
                break 'bounds;
            }
            candidates += 1;
            let params = HorpoParams {
                precedence: state.precedence.clone(),
                status: state.fixed.clone(),
                bound: bound.clone(),
            };
            let results = check_rules(system, &params, solver, config.jobs);
            let oriented = results.iter().take_while(|r| r.is_ok()).count();
            if oriented == system.rules.len() {
                let mut params = params;
                for f in system.defined_symbols() {
                    params.status.entry(f).or_insert(Status::Lex);
                }
                let derivations = results.into_iter().map(|r| r.expect("oriented")).collect();
                return Ok(Witness { params, derivations });
            }
            let failure = *results.into_iter().last().expect("a failing rule").unwrap_err();
            if best.as_ref().is_none_or(|(n, ..)| oriented > *n) {
                best = Some((oriented, params.clone(), vec![(oriented, failure.clone())]));
            }
            // children, pushed in reverse so the preferred one is explored first
            let mut children = Vec::new();
            for (f, g) in &failure.consulted.missing_precedence {
                if state.precedence.can_add(f, g) {
                    let mut p = state.precedence.clone();
                    p.add(f, g).expect("checked");
                    children.push(State {
                        precedence: p,
                        fixed: state.fixed.clone(),
                    });
                }
            }
            for f in &failure.consulted.statuses {
                if state.fixed.contains_key(f) {
                    continue;
                }
                for st in statuses_for(f) {
                    let mut fixed = state.fixed.clone();
                    fixed.insert(f.clone(), st);
                    children.push(State {
                        precedence: state.precedence.clone(),
                        fixed,
                    });
                }
            }
            stack.extend(children.into_iter().rev());
        }
    }
    let (_, best, failures) = best.unwrap_or_else(|| (0, HorpoParams::default(), Vec::new()));
    // explain every rule the best candidate misses, not only the first
    let mut all_failures = Vec::new();
    let explain_solver = Solver::new(solver.config().clone());
    for (i, r) in system.rules.iter().enumerate() {
        if let Err(e) = orient_rule(r, &best, &explain_solver) {
            all_failures.push((i, *e));
        }
    }
    if all_failures.is_empty() {
        all_failures = failures;
    }
    Err(Box::new(FailureReport {
        reason,
        candidates,
        best,
        failures: all_failures,
    }))
}

/// Result of re-checking a witness.
#[derive(Clone, Debug, Default)]
pub struct WitnessCheck {
    pub ok: bool,
    pub diagnostics: Vec<String>,
}

/// Re-checks parameters from scratch: validates them and orients every rule with a fresh
/// solver (no shared cache).
pub fn check_params(params: &HorpoParams, system: &System, solver_config: &SolverConfig) -> WitnessCheck {
    check_params_with(params, system, &Solver::new(solver_config.clone()))
}

/// [`check_params`] on a caller-supplied solver, whose cache and log are kept.
pub fn check_params_with(params: &HorpoParams, system: &System, solver: &Solver) -> WitnessCheck {
    let mut diagnostics = Vec::new();
    if let Err(e) = params.validate() {
        diagnostics.push(format!("invalid parameters: {e}"));
    }
    for (i, r) in system.rules.iter().enumerate() {
        match orient_rule(r, params, solver) {
            Ok(j) => {
                if let Err(e) = replay(&j, params, solver, r.constraint(), &r.value_vars()) {
                    diagnostics.push(format!("rule {}: derivation does not replay: {e}", i + 1));
                }
            }
            Err(e) => diagnostics.push(format!("rule {}: {}", i + 1, e.to_string().trim_end())),
        }
    }
    WitnessCheck {
        ok: diagnostics.is_empty(),
        diagnostics,
    }
}

/// [`check_params`], plus replay of the witness's own derivations.
pub fn check_witness(witness: &Witness, system: &System, solver_config: &SolverConfig) -> WitnessCheck {
    let mut check = check_params(&witness.params, system, solver_config);
    if witness.derivations.len() != system.rules.len() {
        check.diagnostics.push(format!(
            "witness has {} derivations for {} rules",
            witness.derivations.len(),
            system.rules.len()
        ));
    } else {
        let solver = Solver::new(solver_config.clone());
        for (i, (j, r)) in witness.derivations.iter().zip(&system.rules).enumerate() {
            if &j.lhs != r.lhs() || &j.rhs != r.rhs() {
                check
                    .diagnostics
                    .push(format!("rule {}: derivation is for another rule", i + 1));
            } else if let Err(e) = replay(j, &witness.params, &solver, r.constraint(), &r.value_vars()) {
                check
                    .diagnostics
                    .push(format!("rule {}: derivation does not replay: {e}", i + 1));
            }
        }
    }
    check.ok = check.diagnostics.is_empty();
    check
}

/// JSON form of a proof attempt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofDocument {
    pub version: u32,
    /// `terminating` when a witness was found and verified, otherwise `unknown`.
    pub result: String,
    /// Covering pairs `[f, g]` meaning `f` is above `g`.
    pub precedence: Vec<[String; 2]>,
    pub status: BTreeMap<String, String>,
    pub bound: String,
    pub rules: Vec<RuleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleEntry {
    pub index: usize,
    pub rule: String,
    pub oriented: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivation: Option<Derivation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureEntry>,
}

/// Mirror of [`Judgment::to_json`], used to validate emitted documents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Derivation {
    pub relation: String,
    pub lhs: String,
    pub rhs: String,
    pub case: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entails: Option<String>,
    pub premises: Vec<Derivation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureEntry {
    pub cases: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deepest: Option<String>,
    pub unknown_entailments: Vec<[String; 2]>,
}

fn params_fields(p: &HorpoParams) -> (Vec<[String; 2]>, BTreeMap<String, String>, String) {
    (
        p.precedence
            .hasse()
            .into_iter()
            .map(|(f, g)| [f.name().to_string(), g.name().to_string()])
            .collect(),
        p.status
            .iter()
            .map(|(f, s)| (f.name().to_string(), s.to_string()))
            .collect(),
        p.bound.to_string(),
    )
}

fn failure_entry(f: &OrientFailure) -> FailureEntry {
    FailureEntry {
        cases: f.root.iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
        deepest: f.deepest.clone(),
        unknown_entailments: f.unknown.iter().map(|(a, b)| [a.clone(), b.clone()]).collect(),
    }
}

fn derivation(j: &Judgment) -> Derivation {
    serde_json::from_value(j.to_json()).expect("judgment JSON matches its mirror")
}

impl Witness {
    pub fn to_document(&self, system: &System) -> ProofDocument {
        let (precedence, status, bound) = params_fields(&self.params);
        ProofDocument {
            version: PROOF_FORMAT_VERSION,
            result: "terminating".into(),
            precedence,
            status,
            bound,
            rules: system
                .rules
                .iter()
                .zip(&self.derivations)
                .enumerate()
                .map(|(i, (r, j))| RuleEntry {
                    index: i + 1,
                    rule: r.to_string(),
                    oriented: true,
                    derivation: Some(derivation(j)),
                    failure: None,
                })
                .collect(),
            reason: None,
        }
    }

    pub fn to_json(&self, system: &System) -> Value {
        serde_json::to_value(self.to_document(system)).expect("serializable")
    }

    /// Text proof: precedence, status table, one derivation per rule.
    pub fn render(&self, system: &System) -> String {
        let mut s = String::from("terminating: HORPO witness found\n");
        s.push_str(&format!("bound: {}\n", self.params.bound));
        s.push_str("precedence:\n");
        for (f, g) in self.params.precedence.hasse() {
            s.push_str(&format!("  {} > {}\n", f.name(), g.name()));
        }
        s.push_str("status:\n");
        for (f, st) in &self.params.status {
            s.push_str(&format!("  {}: {st}\n", f.name()));
        }
        for (i, (r, j)) in system.rules.iter().zip(&self.derivations).enumerate() {
            s.push_str(&format!("rule {}: {r}\n", i + 1));
            for line in j.to_string().lines() {
                s.push_str(&format!("  {line}\n"));
            }
        }
        s
    }
}

impl FailureReport {
    pub fn to_document(&self, system: &System) -> ProofDocument {
        let (precedence, status, bound) = params_fields(&self.best);
        let failed: BTreeMap<usize, &OrientFailure> = self.failures.iter().map(|(i, f)| (*i, f)).collect();
        ProofDocument {
            version: PROOF_FORMAT_VERSION,
            result: "unknown".into(),
            precedence,
            status,
            bound,
            rules: system
                .rules
                .iter()
                .enumerate()
                .map(|(i, r)| RuleEntry {
                    index: i + 1,
                    rule: r.to_string(),
                    oriented: !failed.contains_key(&i),
                    derivation: None,
                    failure: failed.get(&i).map(|f| failure_entry(f)),
                })
                .collect(),
            reason: Some(self.reason.to_string()),
        }
    }

    pub fn to_json(&self, system: &System) -> Value {
        serde_json::to_value(self.to_document(system)).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_system;

    const FACT: &str = "\
fun init : Int
fun exit : Int -> Int
fun comp : (Int -> Int) -> (Int -> Int) -> Int -> Int
fun fact : Int -> (Int -> Int) -> Int
rule init -> fact n exit [true]
rule comp g f x -> g (f x) [true]
rule fact n k -> k 1 [n <= 0]
rule fact n k -> fact (n - 1) (comp k ([*] n)) [n > 0]
";

    fn pair(sys: &System, f: &str, g: &str) -> (FunctionSymbol, FunctionSymbol) {
        (
            sys.signature.get(f).unwrap().clone(),
            sys.signature.get(g).unwrap().clone(),
        )
    }

    #[test]
    fn finds_factorial_witness() {
        let sys = parse_system(FACT).unwrap().1;
        let solver = Solver::default();
        let w = find_witness(&sys, &ProverConfig::default(), &solver).unwrap();
        let p = &w.params.precedence;
        for (f, g) in [("init", "fact"), ("fact", "comp"), ("init", "exit")] {
            let (f, g) = pair(&sys, f, g);
            assert!(p.is_above(&f, &g));
        }
        assert_eq!(w.params.status_of(sys.signature.get("fact").unwrap()), Status::Lex);
        assert!(check_witness(&w, &sys, &SolverConfig::default()).ok);
        let doc = w.to_document(&sys);
        assert_eq!(doc.result, "terminating");
        assert_eq!(doc.rules.len(), 4);
    }

    #[test]
    fn parallel_search_agrees() {
        let sys = parse_system(FACT).unwrap().1;
        let a = find_witness(&sys, &ProverConfig::default(), &Solver::default()).unwrap();
        let cfg = ProverConfig {
            jobs: 3,
            ..ProverConfig::default()
        };
        let b = find_witness(&sys, &cfg, &Solver::default()).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn empty_system_is_trivially_terminating() {
        let sys = parse_system("fun a : Int").unwrap().1;
        let w = find_witness(&sys, &ProverConfig::default(), &Solver::default()).unwrap();
        assert!(w.params.precedence.is_empty());
        assert!(w.derivations.is_empty());
    }

    #[test]
    fn looping_rule_has_no_witness() {
        let sys = parse_system("fun f : Int -> Int\nrule f x -> f x [true]").unwrap().1;
        let err = find_witness(&sys, &ProverConfig::default(), &Solver::default()).unwrap_err();
        assert_eq!(err.reason, StopReason::Exhausted);
        assert_eq!(err.failures.len(), 1);
        assert!(err.failures[0].1.root.iter().any(|(c, _)| c == "gt(c) same symbol"));
        let doc = err.to_document(&sys);
        assert_eq!(doc.result, "unknown");
        assert!(!doc.rules[0].oriented);
    }

    #[test]
    fn check_rejects_bad_parameters() {
        let sys = parse_system(FACT).unwrap().1;
        let good = Precedence::from_pairs([
            pair(&sys, "init", "fact"),
            pair(&sys, "fact", "comp"),
            pair(&sys, "init", "exit"),
        ])
        .unwrap();
        let fact = sys.signature.get("fact").unwrap().clone();
        let params = HorpoParams {
            precedence: good.clone(),
            status: BTreeMap::from([(fact.clone(), Status::Lex)]),
            bound: BigInt::from(0),
        };
        assert!(check_params(&params, &sys, &SolverConfig::default()).ok);
        let mul = HorpoParams {
            status: BTreeMap::from([(fact, Status::Mul(2))]),
            ..params.clone()
        };
        let c = check_params(&mul, &sys, &SolverConfig::default());
        assert!(!c.ok);
        assert!(c.diagnostics.iter().all(|d| d.starts_with("rule 4")));
        let no_exit = HorpoParams {
            precedence: Precedence::from_pairs([pair(&sys, "init", "fact"), pair(&sys, "fact", "comp")]).unwrap(),
            ..params
        };
        let c = check_params(&no_exit, &sys, &SolverConfig::default());
        assert!(!c.ok);
        assert!(c.diagnostics[0].starts_with("rule 1"));
    }

    #[test]
    fn timeout_is_reported_as_such() {
        let sys = parse_system(FACT).unwrap().1;
        let cfg = ProverConfig {
            timeout: Duration::ZERO,
            ..ProverConfig::default()
        };
        let err = find_witness(&sys, &cfg, &Solver::default()).unwrap_err();
        assert_eq!(err.reason, StopReason::Timeout);
    }
}
