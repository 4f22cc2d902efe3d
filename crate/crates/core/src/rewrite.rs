//! The constrained rewrite relation: matching, rule and calculation steps, normalization.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rule::{Rule, System};
use crate::symbol::Variable;
use crate::term::{Position, Substitution, Term, TermError, TermKind};
use crate::theory::{SemValue, Theory};

/// Default step budget for [`normalize`].
pub const DEFAULT_FUEL: usize = 10_000;

/// Syntactic applicative matching. Variables in `subject` are treated as constants.
pub fn match_term(pattern: &Term, subject: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    if match_into(pattern, subject, &mut sigma) {
        Some(sigma)
    } else {
        None
    }
}

fn match_into(pattern: &Term, subject: &Term, sigma: &mut Substitution) -> bool {
    if pattern.ty() != subject.ty() {
        return false;
    }
    match (pattern.kind(), subject.kind()) {
        (TermKind::Var(x), _) => match sigma.get(x) {
            Some(bound) => bound == subject,
            None => sigma.insert(x.clone(), subject.clone()).is_ok(),
        },
        (TermKind::Sym(f), TermKind::Sym(g)) => f == g,
        (TermKind::App(p0, p1), TermKind::App(s0, s1)) => match_into(p0, s0, sigma) && match_into(p1, s1, sigma),
        _ => false,
    }
}

/// Outcome of a respect check, keeping track of why it failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Respect {
    Yes,
    /// A variable that must be instantiated by a value is not.
    NotAValue(Variable),
    /// The instantiated constraint is not ground.
    NonGround,
    /// The instantiated constraint evaluates to false.
    ConstraintFalse,
}

impl Respect {
    pub fn holds(&self) -> bool {
        *self == Respect::Yes
    }
}

/// Whether `sigma` respects `rule`: the constraint variables and fresh rhs variables are
/// mapped to values, and the instantiated constraint is true.
pub fn respects(sigma: &Substitution, rule: &Rule, theory: &Theory) -> Respect {
    for x in rule.value_vars() {
        match sigma.get(&x) {
            Some(t) if t.is_value() => {}
            _ => return Respect::NotAValue(x),
        }
    }
    let phi = rule.constraint().subst(sigma);
    if !phi.is_ground() {
        return Respect::NonGround;
    }
    match theory.interpret(&phi) {
        Ok(SemValue::Bool(true)) => Respect::Yes,
        _ => Respect::ConstraintFalse,
    }
}

/// Supplies values for variables that are not bound by matching (user input).
pub trait InputSource {
    fn value_for(&mut self, var: &Variable) -> Option<Term>;
}

/// `0` for Int, `false` for Bool.
#[derive(Clone, Debug, Default)]
pub struct DefaultInputs;

impl InputSource for DefaultInputs {
    fn value_for(&mut self, var: &Variable) -> Option<Term> {
        default_value(var)
    }
}

fn default_value(var: &Variable) -> Option<Term> {
    let sort = var.ty().as_sort()?;
    if sort.is_int() {
        Some(SemValue::Int(BigInt::from(0)).to_term())
    } else if sort.is_bool() {
        Some(SemValue::Bool(false).to_term())
    } else {
        None
    }
}

/// Hands out a fixed list of values in order, then falls back to the defaults.
/// Values of the wrong sort are skipped over.
#[derive(Clone, Debug, Default)]
pub struct ListInputs {
    values: VecDeque<SemValue>,
}

impl ListInputs {
    pub fn new<I: IntoIterator<Item = SemValue>>(values: I) -> Self {
        ListInputs {
            values: values.into_iter().collect(),
        }
    }
}

impl InputSource for ListInputs {
    fn value_for(&mut self, var: &Variable) -> Option<Term> {
        let want_int = var.ty().as_sort()?.is_int();
        let idx = self
            .values
            .iter()
            .position(|v| matches!(v, SemValue::Int(_)) == want_int);
        match idx {
            Some(i) => self.values.remove(i).map(|v| v.to_term()),
            None => default_value(var),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    /// Rule application; `rule` is a 0-based index into the system's rules.
    Rule {
        rule: usize,
        subst: Substitution,
    },
    Calc,
}

/// One step of the rewrite relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteStep {
    pub position: Position,
    pub kind: StepKind,
    /// The whole term after the step.
    pub result: Term,
}

impl fmt::Display for RewriteStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            StepKind::Rule { rule, .. } => write!(f, "{}\trule#{}\t{}", self.position, rule + 1, self.result),
            StepKind::Calc => write!(f, "{}\tcalc\t{}", self.position, self.result),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("position {0} does not exist in the term")]
    InvalidPosition(Position),
    #[error("step does not replay: {0}")]
    Replay(String),
    #[error("fuel exhausted after {} steps", .partial.steps.len())]
    FuelExhausted { partial: Box<Trace> },
}

impl From<TermError> for RewriteError {
    fn from(e: TermError) -> Self {
        RewriteError::Replay(e.to_string())
    }
}

/// Rewriting over a fixed system.
pub struct Rewriter<'a> {
    system: &'a System,
}

impl<'a> Rewriter<'a> {
    pub fn new(system: &'a System) -> Self {
        Rewriter { system }
    }

    pub fn theory(&self) -> &Theory {
        &self.system.theory
    }

    /// Tries to rewrite `redex` with rule `i`; unbound constraint and fresh variables are
    /// drawn from `inputs`.
    pub fn apply_rule(&self, i: usize, redex: &Term, inputs: &mut dyn InputSource) -> Option<(Substitution, Term)> {
        let rule = &self.system.rules[i];
        let mut sigma = match_term(rule.lhs(), redex)?;
        for x in rule.unbound_vars() {
            let v = inputs.value_for(&x)?;
            sigma.insert(x, v).ok()?;
        }
        if !respects(&sigma, rule, self.theory()).holds() {
            return None;
        }
        Some((sigma.clone(), rule.rhs().subst(&sigma)))
    }

    fn steps_at_inner(
        &self,
        t: &Term,
        pos: &Position,
        inputs: &mut dyn InputSource,
        first_only: bool,
    ) -> Result<Vec<RewriteStep>, RewriteError> {
        let redex = t
            .subterm(pos)
            .ok_or_else(|| RewriteError::InvalidPosition(pos.clone()))?;
        let mut out = Vec::new();
        if redex.is_value() {
            return Ok(out);
        }
        for i in 0..self.system.rules.len() {
            if let Some((subst, contractum)) = self.apply_rule(i, redex, inputs) {
                out.push(RewriteStep {
                    position: pos.clone(),
                    kind: StepKind::Rule { rule: i, subst },
                    result: t.replace(pos, contractum)?,
                });
                if first_only {
                    return Ok(out);
                }
            }
        }
        if let Some(v) = self.theory().try_calculate(redex) {
            out.push(RewriteStep {
                position: pos.clone(),
                kind: StepKind::Calc,
                result: t.replace(pos, v)?,
            });
        }
        Ok(out)
    }

    /// All steps whose redex is the subterm at `pos`: rules in order, then calculation.
    pub fn steps_at(
        &self,
        t: &Term,
        pos: &Position,
        inputs: &mut dyn InputSource,
    ) -> Result<Vec<RewriteStep>, RewriteError> {
        self.steps_at_inner(t, pos, inputs, false)
    }

    /// The first step according to `strategy`, if any position admits one.
    pub fn next_step(&self, t: &Term, strategy: Strategy, inputs: &mut dyn InputSource) -> Option<RewriteStep> {
        let positions = match strategy {
            Strategy::Innermost => t.positions_post_order(),
            Strategy::Outermost => t.positions_pre_order(),
        };
        positions
            .into_iter()
            .find_map(|p| self.steps_at_inner(t, &p, inputs, true).ok().and_then(|mut v| v.pop()))
    }

    /// Rewrites until no step applies or `fuel` steps were taken.
    pub fn normalize(
        &self,
        t: &Term,
        strategy: Strategy,
        fuel: usize,
        inputs: &mut dyn InputSource,
    ) -> Result<Trace, RewriteError> {
        self.normalize_capped(t, strategy, fuel, usize::MAX, inputs)
    }

    /// As [`Rewriter::normalize`], retaining at most `cap` steps of the trace.
    pub fn normalize_capped(
        &self,
        t: &Term,
        strategy: Strategy,
        fuel: usize,
        cap: usize,
        inputs: &mut dyn InputSource,
    ) -> Result<Trace, RewriteError> {
        let mut trace = Trace {
            start: t.clone(),
            steps: Vec::new(),
            result: t.clone(),
            step_count: 0,
        };
        loop {
            let Some(step) = self.next_step(&trace.result, strategy, inputs) else {
                return Ok(trace);
            };
            if trace.step_count == fuel {
                return Err(RewriteError::FuelExhausted {
                    partial: Box::new(trace),
                });
            }
            trace.result = step.result.clone();
            trace.step_count += 1;
            if trace.steps.len() < cap {
                trace.steps.push(step);
            }
        }
    }

    /// Replays a recorded step from `source`, checking that it is a legal step.
    pub fn replay(&self, source: &Term, step: &RewriteStep) -> Result<Term, RewriteError> {
        let redex = source
            .subterm(&step.position)
            .ok_or_else(|| RewriteError::InvalidPosition(step.position.clone()))?;
        let contractum = match &step.kind {
            StepKind::Calc => self
                .theory()
                .try_calculate(redex)
                .ok_or_else(|| RewriteError::Replay(format!("`{redex}` is not a calculation redex")))?,
            StepKind::Rule { rule, subst } => {
                let r = self
                    .system
                    .rules
                    .get(*rule)
                    .ok_or_else(|| RewriteError::Replay(format!("no rule {rule}")))?;
                if &r.lhs().subst(subst) != redex {
                    return Err(RewriteError::Replay(format!(
                        "rule {} does not match `{redex}`",
                        rule + 1
                    )));
                }
                if !respects(subst, r, self.theory()).holds() {
                    return Err(RewriteError::Replay(format!(
                        "substitution does not respect rule {}",
                        rule + 1
                    )));
                }
                r.rhs().subst(subst)
            }
        };
        Ok(source.replace(&step.position, contractum)?)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    /// Leftmost-innermost.
    #[default]
    Innermost,
    /// Leftmost-outermost.
    Outermost,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Innermost => "innermost",
            Strategy::Outermost => "outermost",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "innermost" | "leftmost-innermost" => Ok(Strategy::Innermost),
            "outermost" | "leftmost-outermost" => Ok(Strategy::Outermost),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

/// A (possibly truncated) reduction sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub start: Term,
    pub steps: Vec<RewriteStep>,
    /// The last term reached.
    pub result: Term,
    /// Number of steps taken, including any not retained in `steps`.
    pub step_count: usize,
}

impl Trace {
    /// Terms of the sequence, starting with `start`.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|s| &s.result))
    }

    pub fn to_document(&self) -> TraceDocument {
        TraceDocument {
            start: self.start.to_string(),
            steps: self
                .steps
                .iter()
                .map(|s| StepDocument {
                    position: s.position.to_string(),
                    kind: match &s.kind {
                        StepKind::Rule { rule, .. } => format!("rule#{}", rule + 1),
                        StepKind::Calc => "calc".into(),
                    },
                    subst: match &s.kind {
                        StepKind::Rule { subst, .. } => Some(
                            subst
                                .iter()
                                .map(|(x, t)| (x.name().to_string(), t.to_string()))
                                .collect(),
                        ),
                        StepKind::Calc => None,
                    },
                    result: s.result.to_string(),
                })
                .collect(),
            result: self.result.to_string(),
            step_count: self.step_count,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_document()).expect("serializable")
    }
}

/// JSON form of a [`Trace`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceDocument {
    pub start: String,
    pub steps: Vec<StepDocument>,
    pub result: String,
    pub step_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDocument {
    pub position: String,
    /// `rule#i` (1-based) or `calc`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subst: Option<BTreeMap<String, String>>,
    pub result: String,
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start\t{}", self.start)?;
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        if self.step_count > self.steps.len() {
            writeln!(f, "... {} more steps", self.step_count - self.steps.len())?;
        }
        Ok(())
    }
}

/// One calculation step at the leftmost-innermost calculation redex.
pub fn calc_step(theory: &Theory, t: &Term) -> Option<(Position, Term)> {
    for p in t.positions_post_order() {
        let sub = t.subterm(&p).expect("own position");
        if let Some(v) = theory.try_calculate(sub) {
            return Some((p.clone(), t.replace(&p, v).expect("same type")));
        }
    }
    None
}

/// The normal form under calculation steps only. Every calculation step shrinks the term,
/// so this always terminates.
pub fn calc_normal_form(theory: &Theory, t: &Term) -> Term {
    match t.kind() {
        TermKind::App(a, b) => {
            let a2 = calc_normal_form(theory, a);
            let b2 = calc_normal_form(theory, b);
            let t2 = if &a2 == a && &b2 == b {
                t.clone()
            } else {
                Term::app(a2, b2).expect("calculation preserves types")
            };
            theory.try_calculate(&t2).unwrap_or(t2)
        }
        _ => t.clone(),
    }
}

/// Joinability by calculation steps, decided by comparing normal forms. Calculation redexes
/// have only values as arguments, so they never overlap and the relation is confluent.
pub fn joinable_calc(theory: &Theory, s: &Term, t: &Term) -> bool {
    s == t || calc_normal_form(theory, s) == calc_normal_form(theory, t)
}
