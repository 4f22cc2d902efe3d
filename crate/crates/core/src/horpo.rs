//! The constrained higher-order recursive path ordering.
//!
//! Three mutually recursive relations, all indexed by a logical constraint `phi`:
//! a weak order `geq`, a strict order `gt`, and the auxiliary `rpo` (s |> t). Each
//! successful comparison yields a [`Judgment`], a derivation tree naming the case used at
//! every node, which [`replay`] can re-check independently.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde_json::{json, Value};
use thiserror::Error;

use crate::rewrite::joinable_calc;
use crate::rule::Rule;
use crate::solver::{above, Solver, Verdict};
use crate::symbol::{FunctionSymbol, Variable};
use crate::term::{Term, TermKind};
use crate::theory::Theory;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HorpoError {
    #[error("precedence would relate `{0}` to itself")]
    Reflexive(String),
    #[error("precedence would contain the cycle {0} > {1} > {0}")]
    Cycle(String, String),
    #[error("theory symbol `{0}` cannot be above another symbol")]
    TheoryAbove(String),
    #[error("status of `{0}`: multiset arity must be at least 2, got {1}")]
    BadStatus(String, usize),
}

/// A strict order on non-theory symbols, kept transitively closed. Every non-theory symbol
/// is implicitly above every theory symbol; theory symbols are mutually incomparable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Precedence {
    above: BTreeSet<(FunctionSymbol, FunctionSymbol)>,
}

impl Precedence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self, HorpoError>
    where
        I: IntoIterator<Item = (FunctionSymbol, FunctionSymbol)>,
    {
        let mut p = Precedence::new();
        for (f, g) in pairs {
            p.add(&f, &g)?;
        }
        Ok(p)
    }

    /// Adds `f > g` and everything it implies by transitivity.
    pub fn add(&mut self, f: &FunctionSymbol, g: &FunctionSymbol) -> Result<(), HorpoError> {
        if f.is_theory() {
            return Err(HorpoError::TheoryAbove(f.name().to_string()));
        }
        if g.is_theory() {
            return Ok(());
        }
        if f == g {
            return Err(HorpoError::Reflexive(f.name().to_string()));
        }
        if self.is_above(g, f) {
            return Err(HorpoError::Cycle(f.name().to_string(), g.name().to_string()));
        }
        let ups: Vec<FunctionSymbol> = std::iter::once(f.clone())
            .chain(self.above.iter().filter(|(_, b)| b == f).map(|(a, _)| a.clone()))
            .collect();
        let downs: Vec<FunctionSymbol> = std::iter::once(g.clone())
            .chain(self.above.iter().filter(|(a, _)| a == g).map(|(_, b)| b.clone()))
            .collect();
        for a in &ups {
            for b in &downs {
                self.above.insert((a.clone(), b.clone()));
            }
        }
        Ok(())
    }

    /// Whether adding `f > g` keeps the order acyclic.
    pub fn can_add(&self, f: &FunctionSymbol, g: &FunctionSymbol) -> bool {
        !f.is_theory() && f != g && !self.is_above(g, f)
    }

    pub fn is_above(&self, f: &FunctionSymbol, g: &FunctionSymbol) -> bool {
        match (f.is_theory(), g.is_theory()) {
            (false, true) => true,
            (true, _) => false,
            (false, false) => self.above.contains(&(f.clone(), g.clone())),
        }
    }

    /// All related pairs of non-theory symbols.
    pub fn pairs(&self) -> impl Iterator<Item = &(FunctionSymbol, FunctionSymbol)> {
        self.above.iter()
    }

    pub fn len(&self) -> usize {
        self.above.len()
    }

    pub fn is_empty(&self) -> bool {
        self.above.is_empty()
    }

    /// The covering pairs: `f > g` with no `h` such that `f > h > g`.
    pub fn hasse(&self) -> Vec<(FunctionSymbol, FunctionSymbol)> {
        self.above
            .iter()
            .filter(|(f, g)| {
                !self
                    .above
                    .iter()
                    .any(|(a, h)| a == f && self.above.contains(&(h.clone(), g.clone())))
            })
            .cloned()
            .collect()
    }
}

impl fmt::Display for Precedence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .hasse()
            .iter()
            .map(|(a, b)| format!("{} > {}", a.name(), b.name()))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Lex,
    /// Multiset comparison of the first `k` arguments.
    Mul(usize),
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Lex => write!(f, "lex"),
            Status::Mul(k) => write!(f, "mul{k}"),
        }
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "lex" {
            return Ok(Status::Lex);
        }
        s.strip_prefix("mul")
            .and_then(|k| k.parse().ok())
            .filter(|k| *k >= 2)
            .map(Status::Mul)
            .ok_or_else(|| format!("bad status `{s}` (expected lex or mulK with K >= 2)"))
    }
}

/// Precedence, status map (default [`Status::Lex`]) and the bound of the integer ordering.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct HorpoParams {
    pub precedence: Precedence,
    pub status: BTreeMap<FunctionSymbol, Status>,
    pub bound: BigInt,
}

impl HorpoParams {
    pub fn status_of(&self, f: &FunctionSymbol) -> Status {
        self.status.get(f).copied().unwrap_or(Status::Lex)
    }

    pub fn theory(&self) -> Theory {
        Theory::with_bound(self.bound.clone())
    }

    /// Checks the invariants that construction through [`Precedence::add`] does not
    /// already guarantee.
    pub fn validate(&self) -> Result<(), HorpoError> {
        for (f, st) in &self.status {
            if let Status::Mul(k) = st {
                if *k < 2 {
                    return Err(HorpoError::BadStatus(f.name().to_string(), *k));
                }
            }
        }
        // rebuild from scratch to catch hand-assembled cyclic or non-closed orders
        let rebuilt = Precedence::from_pairs(self.precedence.pairs().cloned())?;
        if rebuilt != self.precedence {
            let (f, g) = self.precedence.pairs().next().expect("non-empty");
            return Err(HorpoError::Cycle(f.name().to_string(), g.name().to_string()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Geq,
    Gt,
    Rpo,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Geq => ">=",
            Relation::Gt => ">",
            Relation::Rpo => "|>",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::Geq => "geq",
            Relation::Gt => "gt",
            Relation::Rpo => "rpo",
        }
    }
}

/// The case of the definition used at a derivation node. Indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Case {
    /// Theory terms; the entailment `phi |= s !>= t` holds.
    GeqTheory,
    /// `s > t`.
    GeqStrict,
    /// `s` and `t` are joinable by calculation.
    GeqJoin,
    /// `s0 s1 >= t0 t1` componentwise.
    GeqApp,
    /// Theory terms; the entailment `phi |= s !> t` holds.
    GtTheory,
    /// Same type and `s |> t`.
    GtRpo,
    /// Same head symbol, arguments weakly decrease, argument `index` strictly.
    GtSymbol { index: usize },
    /// Same head variable, arguments weakly decrease, argument `index` strictly.
    GtVariable { index: usize },
    /// Argument `index` of `s` is `>= t`.
    RpoArgument { index: usize },
    /// `t = t0 t1` with `s |> t0` and `s |> t1`.
    RpoApp,
    /// `t = g t1 .. tn` with `f` above `g`.
    RpoPrecedence { symbol: String },
    /// Same head with lexicographic status; argument `index` decreases strictly.
    RpoLex { index: usize },
    /// Same head with multiset status `k`; `map[j]` is the argument of `s` covering
    /// argument `j + 1` of `t`, `strict` the arguments compared strictly.
    RpoMul {
        k: usize,
        map: Vec<usize>,
        strict: Vec<usize>,
    },
    /// `t` is a value or a constraint variable.
    RpoValue,
}

impl Case {
    /// Name of the case: relation and letter or number of the defining clause.
    pub fn name(&self) -> &'static str {
        match self {
            Case::GeqTheory => "geq(a) theory",
            Case::GeqStrict => "geq(b) strict",
            Case::GeqJoin => "geq(c) calc-joinable",
            Case::GeqApp => "geq(d) application",
            Case::GtTheory => "gt(a) theory",
            Case::GtRpo => "gt(b) rpo",
            Case::GtSymbol { .. } => "gt(c) same symbol",
            Case::GtVariable { .. } => "gt(d) same variable",
            Case::RpoArgument { .. } => "rpo(1) argument",
            Case::RpoApp => "rpo(2) application",
            Case::RpoPrecedence { .. } => "rpo(3) precedence",
            Case::RpoLex { .. } => "rpo(4) lex",
            Case::RpoMul { .. } => "rpo(5) mul",
            Case::RpoValue => "rpo(6) value",
        }
    }

    fn detail(&self) -> Option<String> {
        match self {
            Case::GtSymbol { index } | Case::GtVariable { index } | Case::RpoLex { index } => {
                Some(format!("position {index}"))
            }
            Case::RpoArgument { index } => Some(format!("argument {index}")),
            Case::RpoPrecedence { symbol } => Some(format!("above {symbol}")),
            Case::RpoMul { k, map, strict } => Some(format!("k={k}, map={map:?}, strict={strict:?}")),
            _ => None,
        }
    }
}

/// A derivation of `lhs R rhs` under the context constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub relation: Relation,
    pub lhs: Term,
    pub rhs: Term,
    pub case: Case,
    pub premises: Vec<Arc<Judgment>>,
    /// For theory cases, the discharged entailment goal.
    pub entailment: Option<Term>,
}

impl Judgment {
    fn leaf(relation: Relation, lhs: &Term, rhs: &Term, case: Case) -> Judgment {
        Judgment {
            relation,
            lhs: lhs.clone(),
            rhs: rhs.clone(),
            case,
            premises: Vec::new(),
            entailment: None,
        }
    }

    fn with(mut self, premises: Vec<Arc<Judgment>>) -> Judgment {
        self.premises = premises;
        self
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "relation": self.relation.name(),
            "lhs": self.lhs.to_string(),
            "rhs": self.rhs.to_string(),
            "case": self.case.name(),
            "premises": self.premises.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
        });
        if let Some(d) = self.case.detail() {
            v["detail"] = d.into();
        }
        if let Some(e) = &self.entailment {
            v["entails"] = e.to_string().into();
        }
        v
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        write!(
            f,
            "{:indent$}{} {} {}   [{}",
            "",
            self.lhs,
            self.relation.symbol(),
            self.rhs,
            self.case.name(),
            indent = 2 * depth
        )?;
        if let Some(d) = self.case.detail() {
            write!(f, ", {d}")?;
        }
        if let Some(e) = &self.entailment {
            write!(f, ", entails {e}")?;
        }
        writeln!(f, "]")?;
        for p in &self.premises {
            p.write_indented(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

/// What a comparison consulted, for guiding the search over parameters.
#[derive(Clone, Debug, Default)]
pub struct Consulted {
    /// Precedence tests `f > g` between distinct non-theory symbols that answered false.
    pub missing_precedence: BTreeSet<(FunctionSymbol, FunctionSymbol)>,
    /// Symbols whose status was looked up.
    pub statuses: BTreeSet<FunctionSymbol>,
    /// Entailment goals the solver could not decide, with its reason.
    pub unknown: Vec<(Term, String)>,
}

type Memo = HashMap<(Relation, Term, Term), Option<Arc<Judgment>>>;

/// Comparisons under one constraint and one parameter set, with memoization.
pub struct Horpo<'a> {
    params: &'a HorpoParams,
    solver: &'a Solver,
    theory: Theory,
    phi: Term,
    vars: BTreeSet<Variable>,
    memo: RefCell<Memo>,
    consulted: RefCell<Consulted>,
    depth: Cell<usize>,
    deepest: RefCell<Option<(usize, Relation, Term, Term)>>,
}

impl<'a> Horpo<'a> {
    /// A context for `phi`, whose variable set is `FVar(phi)`.
    pub fn new(params: &'a HorpoParams, solver: &'a Solver, phi: &Term) -> Self {
        Self::with_vars(params, solver, phi, phi.free_vars())
    }

    /// A context for `phi` whose variable set is `vars` (a superset of `FVar(phi)`).
    pub fn with_vars(params: &'a HorpoParams, solver: &'a Solver, phi: &Term, mut vars: BTreeSet<Variable>) -> Self {
        vars.extend(phi.free_vars());
        Horpo {
            params,
            solver,
            theory: params.theory(),
            phi: phi.clone(),
            vars,
            memo: RefCell::new(HashMap::new()),
            consulted: RefCell::new(Consulted::default()),
            depth: Cell::new(0),
            deepest: RefCell::new(None),
        }
    }

    pub fn constraint(&self) -> &Term {
        &self.phi
    }

    pub fn vars(&self) -> &BTreeSet<Variable> {
        &self.vars
    }

    pub fn consulted(&self) -> Consulted {
        self.consulted.borrow().clone()
    }

    /// The deepest comparison that failed so far.
    pub fn deepest_failure(&self) -> Option<(usize, Relation, Term, Term)> {
        self.deepest.borrow().clone()
    }

    fn memoized(
        &self,
        rel: Relation,
        s: &Term,
        t: &Term,
        compute: impl FnOnce() -> Option<Judgment>,
    ) -> Option<Arc<Judgment>> {
        let key = (rel, s.clone(), t.clone());
        if let Some(hit) = self.memo.borrow().get(&key) {
            return hit.clone();
        }
        self.depth.set(self.depth.get() + 1);
        let out = compute().map(Arc::new);
        let depth = self.depth.get();
        self.depth.set(depth - 1);
        if out.is_none() {
            let mut d = self.deepest.borrow_mut();
            if d.as_ref().is_none_or(|(best, ..)| depth > *best) {
                *d = Some((depth, rel, s.clone(), t.clone()));
            }
        }
        self.memo.borrow_mut().insert(key, out.clone());
        out
    }

    fn prec(&self, f: &FunctionSymbol, g: &FunctionSymbol) -> bool {
        let r = self.params.precedence.is_above(f, g);
        if !r && f != g && !f.is_theory() && !g.is_theory() {
            self.consulted
                .borrow_mut()
                .missing_precedence
                .insert((f.clone(), g.clone()));
        }
        r
    }

    fn status(&self, f: &FunctionSymbol) -> Status {
        self.consulted.borrow_mut().statuses.insert(f.clone());
        self.params.status_of(f)
    }

    /// Both are theory terms of the same theory sort whose variables the constraint covers.
    fn theory_comparable(&self, s: &Term, t: &Term) -> bool {
        s.is_theory()
            && t.is_theory()
            && s.ty() == t.ty()
            && s.ty().is_theory_sort()
            && s.free_vars()
                .iter()
                .chain(t.free_vars().iter())
                .all(|x| self.vars.contains(x))
    }

    fn entails_order(&self, s: &Term, t: &Term, strict: bool) -> Option<Term> {
        let goal = above(s.clone(), t.clone(), strict)?;
        match self.solver.entails_in(&self.theory, &self.vars, &self.phi, &goal) {
            Verdict::Yes => Some(goal),
            Verdict::No(_) => None,
            Verdict::Unknown(why) => {
                self.consulted.borrow_mut().unknown.push((goal, why));
                None
            }
        }
    }

    /// `s >= t` under the constraint.
    pub fn geq(&self, s: &Term, t: &Term) -> Option<Arc<Judgment>> {
        if s.ty() != t.ty() {
            return None;
        }
        self.memoized(Relation::Geq, s, t, || {
            let j = |case| Judgment::leaf(Relation::Geq, s, t, case);
            if self.theory_comparable(s, t) {
                if let Some(goal) = self.entails_order(s, t, false) {
                    let mut out = j(Case::GeqTheory);
                    out.entailment = Some(goal);
                    return Some(out);
                }
            }
            if let Some(p) = self.gt(s, t) {
                return Some(j(Case::GeqStrict).with(vec![p]));
            }
            if joinable_calc(&self.theory, s, t) {
                return Some(j(Case::GeqJoin));
            }
            if !s.is_theory() {
                if let (Some((s0, s1)), Some((t0, t1))) = (s.as_app(), t.as_app()) {
                    if let Some(p0) = self.geq(s0, t0) {
                        if let Some(p1) = self.geq(s1, t1) {
                            return Some(j(Case::GeqApp).with(vec![p0, p1]));
                        }
                    }
                }
            }
            None
        })
    }

    /// `s > t` under the constraint.
    pub fn gt(&self, s: &Term, t: &Term) -> Option<Arc<Judgment>> {
        // every case relates terms of one type
        if s.ty() != t.ty() {
            return None;
        }
        let out = self.memoized(Relation::Gt, s, t, || {
            let j = |case| Judgment::leaf(Relation::Gt, s, t, case);
            if self.theory_comparable(s, t) {
                if let Some(goal) = self.entails_order(s, t, true) {
                    let mut out = j(Case::GtTheory);
                    out.entailment = Some(goal);
                    return Some(out);
                }
            }
            if let Some(p) = self.rpo(s, t) {
                return Some(j(Case::GtRpo).with(vec![p]));
            }
            if s.is_theory() {
                return None;
            }
            let (sh, sargs) = s.head_args();
            let (th, targs) = t.head_args();
            if sh != th || sargs.len() != targs.len() {
                return None;
            }
            let make = |index| match sh.kind() {
                TermKind::Sym(_) => Some(Case::GtSymbol { index }),
                TermKind::Var(_) => Some(Case::GtVariable { index }),
                TermKind::App(..) => None,
            };
            let (index, premises) = self.args_decrease(&sargs, &targs)?;
            Some(j(make(index)?).with(premises))
        });
        if let Some(g) = &out {
            debug_assert_eq!(g.lhs.ty(), g.rhs.ty());
        }
        out
    }

    /// All arguments weakly decrease and one strictly: the 1-based index of the first strict
    /// one, and one premise per argument.
    fn args_decrease(&self, ss: &[&Term], ts: &[&Term]) -> Option<(usize, Vec<Arc<Judgment>>)> {
        let mut premises = Vec::with_capacity(ss.len());
        let mut strict = None;
        for (i, (a, b)) in ss.iter().zip(ts).enumerate() {
            if strict.is_none() {
                if let Some(p) = self.gt(a, b) {
                    strict = Some(i + 1);
                    premises.push(p);
                    continue;
                }
            }
            premises.push(self.geq(a, b)?);
        }
        strict.map(|i| (i, premises))
    }

    /// `s |> t` under the constraint.
    pub fn rpo(&self, s: &Term, t: &Term) -> Option<Arc<Judgment>> {
        if s.is_theory() {
            return None;
        }
        let (head, sargs) = s.head_args();
        let f = head.as_symbol()?;
        self.memoized(Relation::Rpo, s, t, || {
            let j = |case| Judgment::leaf(Relation::Rpo, s, t, case);
            // (1)
            for (i, si) in sargs.iter().enumerate() {
                if let Some(p) = self.geq(si, t) {
                    return Some(j(Case::RpoArgument { index: i + 1 }).with(vec![p]));
                }
            }
            let (thead, targs) = t.head_args();
            let tsym = thead.as_symbol();
            // (2); when a precedence or same-symbol case is responsible for this head those
            // are tried first, so their derivations are preferred
            let covered = tsym.is_some_and(|g| g == f || self.prec(f, g));
            let app_case = || -> Option<Judgment> {
                let (t0, t1) = t.as_app()?;
                let p0 = self.rpo(s, t0)?;
                let p1 = self.rpo(s, t1)?;
                Some(j(Case::RpoApp).with(vec![p0, p1]))
            };
            if !covered {
                if let Some(d) = app_case() {
                    return Some(d);
                }
            }
            let all_args = || -> Option<Vec<Arc<Judgment>>> { targs.iter().map(|ti| self.rpo(s, ti)).collect() };
            if let Some(g) = tsym {
                // (3)
                if g != f && self.prec(f, g) {
                    if let Some(ps) = all_args() {
                        return Some(
                            j(Case::RpoPrecedence {
                                symbol: g.name().to_string(),
                            })
                            .with(ps),
                        );
                    }
                }
                if g == f {
                    match self.status(f) {
                        // (4)
                        Status::Lex => {
                            if let Some((index, mut ps)) = self.lex_ext(&sargs, &targs) {
                                if let Some(rest) = all_args() {
                                    ps.extend(rest);
                                    return Some(j(Case::RpoLex { index }).with(ps));
                                }
                            }
                        }
                        // (5)
                        Status::Mul(k) => {
                            if k <= targs.len() {
                                let ss = &sargs[..sargs.len().min(k)];
                                if let Some(m) = self.mul_ext(ss, &targs[..k]) {
                                    if let Some(rest) = all_args() {
                                        let mut ps = m.premises;
                                        ps.extend(rest);
                                        return Some(
                                            j(Case::RpoMul {
                                                k,
                                                map: m.map,
                                                strict: m.strict,
                                            })
                                            .with(ps),
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
            if covered {
                if let Some(d) = app_case() {
                    return Some(d);
                }
            }
            // (6)
            let is_constraint_var = t.as_var().is_some_and(|x| self.vars.contains(x));
            if t.is_value() || is_constraint_var {
                return Some(j(Case::RpoValue));
            }
            None
        })
    }

    /// Lexicographic extension: the least 1-based index `i` with `ss[i] > ts[i]` and
    /// `ss[j] >= ts[j]` before it, with the premises for positions `1..=i`.
    pub fn lex_ext(&self, ss: &[&Term], ts: &[&Term]) -> Option<(usize, Vec<Arc<Judgment>>)> {
        let mut premises = Vec::new();
        for (i, (a, b)) in ss.iter().zip(ts).enumerate() {
            if let Some(p) = self.gt(a, b) {
                premises.push(p);
                return Some((i + 1, premises));
            }
            premises.push(self.geq(a, b)?);
        }
        None
    }

    /// Generalized multiset extension of (geq, gt).
    pub fn mul_ext(&self, ss: &[&Term], ts: &[&Term]) -> Option<MulWitness> {
        let found = mul_ext_by(
            ss.len(),
            ts.len(),
            |i, j| self.geq(ss[i], ts[j]).is_some(),
            |i, j| self.gt(ss[i], ts[j]).is_some(),
        )?;
        let premises = found
            .map
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                let (a, b) = (ss[i - 1], ts[j]);
                if found.strict.contains(&i) {
                    self.gt(a, b).expect("memoized")
                } else {
                    self.geq(a, b).expect("memoized")
                }
            })
            .collect();
        Some(MulWitness { premises, ..found })
    }
}

/// A multiset-extension witness: `map[j]` is the (1-based) element of the left list that
/// covers element `j + 1` of the right list; `strict` lists left elements compared strictly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MulWitness {
    pub map: Vec<usize>,
    pub strict: Vec<usize>,
    pub premises: Vec<Arc<Judgment>>,
}

/// Generalized multiset extension over index predicates: find `pi` from right indices to
/// left indices and a set `S` of left indices such that elements mapped into `S` are
/// strictly smaller, each left index outside `S` covers at most one right element which
/// is weakly smaller, and `S` is non-empty or the left list is longer. Exhaustive search.
pub fn mul_ext_by(
    m: usize,
    n: usize,
    geq: impl Fn(usize, usize) -> bool,
    gt: impl Fn(usize, usize) -> bool,
) -> Option<MulWitness> {
    let gt_tab: Vec<Vec<bool>> = (0..m).map(|i| (0..n).map(|j| gt(i, j)).collect()).collect();
    let geq_tab: Vec<Vec<bool>> = (0..m)
        .map(|i| (0..n).map(|j| gt_tab[i][j] || geq(i, j)).collect())
        .collect();
    // count[i]: right elements mapped to i; all_gt[i]: all of them strictly smaller
    fn go(
        j: usize,
        n: usize,
        pi: &mut Vec<usize>,
        count: &mut Vec<usize>,
        all_gt: &mut Vec<bool>,
        gt: &[Vec<bool>],
        geq: &[Vec<bool>],
    ) -> bool {
        if j == n {
            let strict = count.iter().zip(all_gt.iter()).any(|(&c, &g)| c == 0 || g);
            return strict;
        }
        for i in 0..count.len() {
            if !geq[i][j] {
                continue;
            }
            let (old_c, old_g) = (count[i], all_gt[i]);
            count[i] += 1;
            all_gt[i] = old_g && gt[i][j];
            if count[i] < 2 || all_gt[i] {
                pi.push(i);
                if go(j + 1, n, pi, count, all_gt, gt, geq) {
                    return true;
                }
                pi.pop();
            }
            count[i] = old_c;
            all_gt[i] = old_g;
        }
        false
    }
    let mut pi = Vec::with_capacity(n);
    let mut count = vec![0; m];
    let mut all_gt = vec![true; m];
    if !go(0, n, &mut pi, &mut count, &mut all_gt, &gt_tab, &geq_tab) {
        return None;
    }
    // keep S small: forced for shared indices, one more only if nothing else is strict
    let mut strict: Vec<usize> = (0..m).filter(|&i| count[i] > 1).collect();
    if strict.is_empty() && count.iter().all(|&c| c > 0) {
        strict.push(
            (0..m)
                .find(|&i| count[i] == 1 && all_gt[i])
                .expect("search ensured strictness"),
        );
    }
    let strict = strict.into_iter().map(|i| i + 1).collect();
    Some(MulWitness {
        map: pi.iter().map(|i| i + 1).collect(),
        strict,
        premises: Vec::new(),
    })
}

/// Orientation of a rule: `l > r` under its constraint, where the variable set is extended
/// by the rule's fresh variables (which every respecting substitution maps to values).
pub fn orient_rule(rule: &Rule, params: &HorpoParams, solver: &Solver) -> Result<Arc<Judgment>, Box<OrientFailure>> {
    let ctx = Horpo::with_vars(params, solver, rule.constraint(), rule.value_vars());
    ctx.gt(rule.lhs(), rule.rhs())
        .ok_or_else(|| Box::new(OrientFailure::explain(&ctx, rule)))
}

/// Why a rule could not be oriented.
#[derive(Clone, Debug)]
pub struct OrientFailure {
    pub rule: String,
    /// One line per case of `gt` at the root (and of `rpo` under it).
    pub root: Vec<(String, String)>,
    pub deepest: Option<String>,
    /// Entailments the solver gave up on; distinguishes "could not decide" from "refuted".
    pub unknown: Vec<(String, String)>,
    pub consulted: Consulted,
}

impl OrientFailure {
    fn explain(ctx: &Horpo<'_>, rule: &Rule) -> OrientFailure {
        let (s, t) = (rule.lhs(), rule.rhs());
        let mut root = Vec::new();
        let mut note = |case: &str, why: String| root.push((case.to_string(), why));
        if !ctx.theory_comparable(s, t) {
            note(
                "gt(a) theory",
                "not theory terms of a theory sort over constraint variables".into(),
            );
        } else {
            note("gt(a) theory", "entailment not established".into());
        }
        if s.ty() != t.ty() {
            note("gt(b) rpo", "types differ".into());
        } else {
            match s.head_args().0.as_symbol() {
                _ if s.is_theory() => note("gt(b) rpo", "left-hand side is a theory term".into()),
                None => note("gt(b) rpo", "left-hand side is not headed by a function symbol".into()),
                Some(f) => {
                    note("gt(b) rpo", "no rpo case applies".into());
                    for (case, why) in rpo_reasons(ctx, s, t, f) {
                        note(case, why);
                    }
                }
            }
        }
        let (sh, sargs) = s.head_args();
        let (th, targs) = t.head_args();
        let same = sh == th && sargs.len() == targs.len();
        let case_c = "gt(c) same symbol";
        let case_d = "gt(d) same variable";
        if !same || s.is_theory() {
            note(case_c, "heads or argument counts differ".into());
            note(case_d, "heads or argument counts differ".into());
        } else {
            let why = first_nonweak(ctx, &sargs, &targs)
                .map(|i| format!("argument {i} does not weakly decrease"))
                .unwrap_or_else(|| "no argument strictly decreases".into());
            match sh.kind() {
                TermKind::Sym(_) => {
                    note(case_c, why);
                    note(case_d, "head is not a variable".into());
                }
                _ => {
                    note(case_c, "head is not a function symbol".into());
                    note(case_d, why);
                }
            }
        }
        let consulted = ctx.consulted();
        OrientFailure {
            rule: rule.to_string(),
            root,
            deepest: ctx
                .deepest_failure()
                .map(|(d, rel, a, b)| format!("{} {} {} (depth {d})", a, rel.symbol(), b)),
            unknown: consulted
                .unknown
                .iter()
                .map(|(g, why)| (g.to_string(), why.clone()))
                .collect(),
            consulted,
        }
    }
}

fn first_nonweak(ctx: &Horpo<'_>, ss: &[&Term], ts: &[&Term]) -> Option<usize> {
    ss.iter()
        .zip(ts)
        .position(|(a, b)| ctx.geq(a, b).is_none())
        .map(|i| i + 1)
}

fn rpo_reasons(ctx: &Horpo<'_>, s: &Term, t: &Term, f: &FunctionSymbol) -> Vec<(&'static str, String)> {
    let (_, sargs) = s.head_args();
    let (thead, targs) = t.head_args();
    let g = thead.as_symbol();
    let mut out = vec![(
        "rpo(1) argument",
        "no argument of the left-hand side is >= the right-hand side".to_string(),
    )];
    out.push((
        "rpo(2) application",
        match t.as_app() {
            None => "right-hand side is not an application".into(),
            Some(_) => "some component is not below the left-hand side".into(),
        },
    ));
    out.push((
        "rpo(3) precedence",
        match g {
            None => "right-hand side is not headed by a function symbol".into(),
            Some(g) if g == f => "same head symbol".into(),
            Some(g) if !ctx.params.precedence.is_above(f, g) => format!("{} is not above {}", f.name(), g.name()),
            Some(_) => "some argument is not below the left-hand side".into(),
        },
    ));
    let same = g == Some(f);
    let st = ctx.params.status_of(f);
    out.push((
        "rpo(4) lex",
        if !same {
            "heads differ".into()
        } else if st != Status::Lex {
            format!("status of {} is {st}", f.name())
        } else if ctx.lex_ext(&sargs, &targs).is_none() {
            match first_nonweak(ctx, &sargs, &targs) {
                Some(i) => format!("argument {i} does not weakly decrease before any strict decrease"),
                None => "no argument strictly decreases".into(),
            }
        } else {
            "some argument of the right-hand side is not below the left-hand side".into()
        },
    ));
    out.push((
        "rpo(5) mul",
        match st {
            _ if !same => "heads differ".into(),
            Status::Lex => format!("status of {} is lex", f.name()),
            Status::Mul(k) if k > targs.len() => format!("fewer than {k} arguments"),
            Status::Mul(_) => "multiset extension fails or an argument is not below".into(),
        },
    ));
    out.push((
        "rpo(6) value",
        "right-hand side is neither a value nor a constraint variable".into(),
    ));
    out
}

impl fmt::Display for OrientFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cannot orient {}", self.rule)?;
        for (case, why) in &self.root {
            writeln!(f, "  {case}: {why}")?;
        }
        if let Some(d) = &self.deepest {
            writeln!(f, "  deepest failing comparison: {d}")?;
        }
        for (goal, why) in &self.unknown {
            writeln!(f, "  gave up on entailment {goal}: {why}")?;
        }
        Ok(())
    }
}

/// Re-checks every node of a derivation from scratch under the constraint `phi` with
/// variable set `vars`.
pub fn replay(
    j: &Judgment,
    params: &HorpoParams,
    solver: &Solver,
    phi: &Term,
    vars: &BTreeSet<Variable>,
) -> Result<(), String> {
    let th = params.theory();
    let fail = |why: &str| {
        Err(format!(
            "{} {} {} by {}: {why}",
            j.lhs,
            j.relation.symbol(),
            j.rhs,
            j.case.name()
        ))
    };
    let (s, t) = (&j.lhs, &j.rhs);
    let prem = |i: usize, rel: Relation, a: &Term, b: &Term| -> Result<(), String> {
        match j.premises.get(i) {
            Some(p) if p.relation == rel && &p.lhs == a && &p.rhs == b => replay(p, params, solver, phi, vars),
            _ => Err(format!(
                "{} {} {} by {}: premise {} should be {a} {} {b}",
                s,
                j.relation.symbol(),
                t,
                j.case.name(),
                i + 1,
                rel.symbol()
            )),
        }
    };
    let theory_ok = || {
        s.is_theory()
            && t.is_theory()
            && s.ty() == t.ty()
            && s.ty().is_theory_sort()
            && s.free_vars()
                .iter()
                .chain(t.free_vars().iter())
                .all(|x| vars.contains(x))
    };
    let entailed = |strict: bool| {
        above(s.clone(), t.clone(), strict).is_some_and(|goal| solver.entails_in(&th, vars, phi, &goal).is_yes())
    };
    let needs = |n: usize| j.premises.len() == n;
    match (&j.relation, &j.case) {
        (Relation::Geq, Case::GeqTheory) | (Relation::Gt, Case::GtTheory) => {
            if !theory_ok() {
                return fail("not comparable theory terms");
            }
            if !entailed(j.relation == Relation::Gt) {
                return fail("entailment does not hold");
            }
            Ok(())
        }
        (Relation::Geq, Case::GeqStrict) if needs(1) => prem(0, Relation::Gt, s, t),
        (Relation::Geq, Case::GeqJoin) => {
            if s.ty() == t.ty() && joinable_calc(&th, s, t) {
                Ok(())
            } else {
                fail("not joinable")
            }
        }
        (Relation::Geq, Case::GeqApp) if needs(2) => match (s.as_app(), t.as_app()) {
            (Some((s0, s1)), Some((t0, t1))) if !s.is_theory() => {
                prem(0, Relation::Geq, s0, t0)?;
                prem(1, Relation::Geq, s1, t1)
            }
            _ => fail("shape"),
        },
        (Relation::Gt, Case::GtRpo) if needs(1) => {
            if s.ty() != t.ty() {
                return fail("types differ");
            }
            prem(0, Relation::Rpo, s, t)
        }
        (Relation::Gt, Case::GtSymbol { index } | Case::GtVariable { index }) => {
            let (sh, sargs) = s.head_args();
            let (th_, targs) = t.head_args();
            let head_ok = match j.case {
                Case::GtSymbol { .. } => sh.as_symbol().is_some(),
                _ => sh.as_var().is_some(),
            };
            if s.is_theory() || !head_ok || sh != th_ || sargs.len() != targs.len() || !needs(sargs.len()) {
                return fail("shape");
            }
            if *index == 0 || *index > sargs.len() {
                return fail("strict index out of range");
            }
            for (i, (a, b)) in sargs.iter().zip(&targs).enumerate() {
                let rel = if i + 1 == *index { Relation::Gt } else { Relation::Geq };
                prem(i, rel, a, b)?;
            }
            Ok(())
        }
        (Relation::Rpo, case) => {
            if s.is_theory() {
                return fail("left-hand side is a theory term");
            }
            let (head, sargs) = s.head_args();
            let Some(f) = head.as_symbol() else {
                return fail("left-hand side is not headed by a function symbol");
            };
            let (thead, targs) = t.head_args();
            let all_args = |from: usize| -> Result<(), String> {
                if j.premises.len() != from + targs.len() {
                    return Err(format!("{s} |> {t}: wrong number of premises"));
                }
                for (i, ti) in targs.iter().enumerate() {
                    prem(from + i, Relation::Rpo, s, ti)?;
                }
                Ok(())
            };
            match case {
                Case::RpoArgument { index } if needs(1) => match sargs.get(index.wrapping_sub(1)) {
                    Some(si) => prem(0, Relation::Geq, si, t),
                    None => fail("argument index out of range"),
                },
                Case::RpoApp if needs(2) => match t.as_app() {
                    Some((t0, t1)) => {
                        prem(0, Relation::Rpo, s, t0)?;
                        prem(1, Relation::Rpo, s, t1)
                    }
                    None => fail("right-hand side is not an application"),
                },
                Case::RpoPrecedence { symbol } => match thead.as_symbol() {
                    Some(g) if g.name() == symbol && g != f && params.precedence.is_above(f, g) => all_args(0),
                    _ => fail("precedence does not hold"),
                },
                Case::RpoLex { index } => {
                    if thead.as_symbol() != Some(f) || params.status_of(f) != Status::Lex {
                        return fail("not a lex comparison");
                    }
                    if *index == 0 || *index > sargs.len().min(targs.len()) {
                        return fail("lex index out of range");
                    }
                    for i in 0..*index {
                        let rel = if i + 1 == *index { Relation::Gt } else { Relation::Geq };
                        prem(i, rel, sargs[i], targs[i])?;
                    }
                    all_args(*index)
                }
                Case::RpoMul { k, map, strict } => {
                    if thead.as_symbol() != Some(f) || params.status_of(f) != Status::Mul(*k) || *k > targs.len() {
                        return fail("not a multiset comparison");
                    }
                    let m = sargs.len().min(*k);
                    if map.len() != *k || map.iter().any(|&i| i == 0 || i > m) {
                        return fail("malformed map");
                    }
                    let mut count = vec![0usize; m + 1];
                    for &i in map {
                        count[i] += 1;
                    }
                    if (1..=m).any(|i| count[i] > 1 && !strict.contains(&i)) {
                        return fail("index covers several elements without strict comparison");
                    }
                    if !((1..=m).any(|i| count[i] == 0) || !strict.is_empty()) {
                        return fail("no strict decrease");
                    }
                    for (jj, &i) in map.iter().enumerate() {
                        let rel = if strict.contains(&i) {
                            Relation::Gt
                        } else {
                            Relation::Geq
                        };
                        prem(jj, rel, sargs[i - 1], targs[jj])?;
                    }
                    all_args(*k)
                }
                Case::RpoValue => {
                    if t.is_value() || t.as_var().is_some_and(|x| vars.contains(x)) {
                        Ok(())
                    } else {
                        fail("neither a value nor a constraint variable")
                    }
                }
                _ => fail("malformed node"),
            }
        }
        _ => fail("malformed node"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_system, parse_term};
    use crate::typing::VarContext;
    use crate::System;

    pub(crate) const FACT: &str = "\
fun init : Int
fun exit : Int -> Int
fun comp : (Int -> Int) -> (Int -> Int) -> Int -> Int
fun fact : Int -> (Int -> Int) -> Int
rule init -> fact n exit [true]
rule comp g f x -> g (f x) [true]
rule fact n k -> k 1 [n <= 0]
rule fact n k -> fact (n - 1) (comp k ([*] n)) [n > 0]
";

    fn sym(sys: &System, n: &str) -> FunctionSymbol {
        sys.signature.get(n).unwrap().clone()
    }

    fn witness(sys: &System) -> HorpoParams {
        let p = Precedence::from_pairs([
            (sym(sys, "init"), sym(sys, "fact")),
            (sym(sys, "fact"), sym(sys, "comp")),
            (sym(sys, "init"), sym(sys, "exit")),
        ])
        .unwrap();
        HorpoParams {
            precedence: p,
            status: BTreeMap::from([(sym(sys, "fact"), Status::Lex)]),
            bound: BigInt::from(0),
        }
    }

    #[test]
    fn precedence_is_transitive_and_acyclic() {
        let sys = parse_system(FACT).unwrap().1;
        let p = witness(&sys).precedence;
        assert!(p.is_above(&sym(&sys, "init"), &sym(&sys, "comp")));
        assert!(!p.is_above(&sym(&sys, "comp"), &sym(&sys, "init")));
        assert!(p.is_above(&sym(&sys, "exit"), &crate::TheoryOp::Add.symbol()));
        assert_eq!(p.hasse().len(), 3);
        let mut q = p.clone();
        assert!(matches!(
            q.add(&sym(&sys, "comp"), &sym(&sys, "init")),
            Err(HorpoError::Cycle(..))
        ));
        assert!(matches!(
            q.add(&sym(&sys, "comp"), &sym(&sys, "comp")),
            Err(HorpoError::Reflexive(_))
        ));
    }

    #[test]
    fn witness_orients_all_factorial_rules() {
        let sys = parse_system(FACT).unwrap().1;
        let params = witness(&sys);
        let solver = Solver::default();
        let expected = [Case::GtRpo, Case::GtRpo, Case::GtRpo, Case::GtRpo];
        for (rule, case) in sys.rules.iter().zip(expected) {
            let j = orient_rule(rule, &params, &solver).unwrap_or_else(|e| panic!("{e}"));
            assert_eq!(j.case, case);
            replay(&j, &params, &solver, rule.constraint(), &rule.value_vars()).unwrap();
        }
        let rule4 = orient_rule(&sys.rules[3], &params, &solver).unwrap();
        assert_eq!(rule4.premises[0].case, Case::RpoLex { index: 1 });
        let rule1 = orient_rule(&sys.rules[0], &params, &solver).unwrap();
        assert_eq!(rule1.premises[0].case, Case::RpoPrecedence { symbol: "fact".into() });
    }

    #[test]
    fn mul_status_for_fact_fails_rule_four() {
        let sys = parse_system(FACT).unwrap().1;
        let mut params = witness(&sys);
        params.status.insert(sym(&sys, "fact"), Status::Mul(2));
        let solver = Solver::default();
        let err = orient_rule(&sys.rules[3], &params, &solver).unwrap_err();
        assert!(err.root.iter().any(|(c, _)| c == "rpo(5) mul"));
        for r in &sys.rules[..3] {
            assert!(orient_rule(r, &params, &solver).is_ok());
        }
    }

    #[test]
    fn missing_edge_fails_rule_one() {
        let sys = parse_system(FACT).unwrap().1;
        let params = HorpoParams {
            precedence: Precedence::from_pairs([
                (sym(&sys, "init"), sym(&sys, "fact")),
                (sym(&sys, "fact"), sym(&sys, "comp")),
            ])
            .unwrap(),
            ..witness(&sys)
        };
        let solver = Solver::default();
        let ctx = Horpo::with_vars(&params, &solver, sys.rules[0].constraint(), sys.rules[0].value_vars());
        assert!(ctx.gt(sys.rules[0].lhs(), sys.rules[0].rhs()).is_none());
        assert!(ctx
            .consulted()
            .missing_precedence
            .contains(&(sym(&sys, "init"), sym(&sys, "exit"))));
    }

    fn ctx_terms(sys: &System, texts: &[&str]) -> Vec<Term> {
        texts
            .iter()
            .map(|s| parse_term(s, &sys.signature, &VarContext::open()).unwrap())
            .collect()
    }

    #[test]
    fn sample_comparisons() {
        let sys = parse_system(FACT).unwrap().1;
        let params = witness(&sys);
        let solver = Solver::default();
        let r4 = &sys.rules[3];
        let ctx = Horpo::new(&params, &solver, r4.constraint());
        let (_, largs) = r4.lhs().head_args();
        let n = largs[0].clone();
        let k = largs[1].clone();
        let (_, rargs) = r4.rhs().head_args();
        let n1 = rargs[0].clone();
        assert_eq!(ctx.geq(&n, &n1).unwrap().case, Case::GeqTheory);
        assert_eq!(ctx.gt(&n, &n1).unwrap().case, Case::GtTheory);
        assert_eq!(ctx.geq(&k, &k).unwrap().case, Case::GeqJoin);
        assert!(ctx.gt(&k, &k).is_none());
        // rpo(fact n k, k) via an argument
        assert_eq!(ctx.rpo(r4.lhs(), &k).unwrap().case, Case::RpoArgument { index: 2 });
        let (one, two) = {
            let ts = ctx_terms(&sys, &["1", "2"]);
            (ts[0].clone(), ts[1].clone())
        };
        let top = Horpo::new(&params, &solver, &crate::theory::boolean(true));
        assert!(top.gt(&one, &two).is_none());
        assert!(top.gt(&two, &one).is_some());
        // no strict decrease among equal lists
        assert!(ctx.lex_ext(&[&n], &[&n]).is_none());
    }

    #[test]
    fn identical_sides_never_orient() {
        let sys = parse_system("fun f : Int -> Int\nrule f x -> f x [true]").unwrap().1;
        let solver = Solver::default();
        for st in [Status::Lex, Status::Mul(2)] {
            let params = HorpoParams {
                status: BTreeMap::from([(sym(&sys, "f"), st)]),
                ..HorpoParams::default()
            };
            let err = orient_rule(&sys.rules[0], &params, &solver).unwrap_err();
            let c = err.root.iter().find(|(c, _)| c == "gt(c) same symbol").unwrap();
            assert_eq!(c.1, "no argument strictly decreases");
        }
    }

    #[test]
    fn mul_ext_examples() {
        let lit = |v: &[i64]| v.to_vec();
        let run = |ss: Vec<i64>, ts: Vec<i64>| {
            mul_ext_by(
                ss.len(),
                ts.len(),
                |i, j| ss[i] >= ts[j] && ss[i] > 0 || ss[i] == ts[j],
                |i, j| ss[i] > 0 && ss[i] > ts[j],
            )
        };
        let w = run(lit(&[3, 1]), lit(&[2, 2])).unwrap();
        assert_eq!(w.map, vec![1, 1]);
        assert_eq!(w.strict, vec![1]);
        assert!(run(lit(&[2, 1]), lit(&[2, 1])).is_none());
        let w = run(lit(&[2, 1]), lit(&[1])).unwrap();
        assert!(w.strict.is_empty() || w.strict == vec![1]);
        assert!(run(lit(&[]), lit(&[])).is_none());
        assert!(run(lit(&[1]), lit(&[])).is_some());
    }

    #[test]
    fn judgments_print_and_serialize() {
        let sys = parse_system(FACT).unwrap().1;
        let params = witness(&sys);
        let solver = Solver::default();
        let j = orient_rule(&sys.rules[3], &params, &solver).unwrap();
        let text = j.to_string();
        assert!(text.starts_with("fact n k > fact (n - 1) (comp k ([*] n))   [gt(b) rpo]"));
        assert!(text.contains("[gt(a) theory, entails n !> n - 1]"));
        let v = j.to_json();
        assert_eq!(v["case"], "gt(b) rpo");
        assert_eq!(v["premises"][0]["detail"], "position 1");
    }
}
