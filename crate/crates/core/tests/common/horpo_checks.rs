//! Sampled properties of the HORPO relations, shared by the property tests and the
//! acceptance suite. Each check returns how many samples exercised the property (the
//! premise held) and the violations found.

use std::collections::BTreeSet;
use std::sync::Arc;

use lcstrs::gen::TermGen;
use lcstrs::horpo::{replay, Horpo, HorpoParams, Judgment, Precedence, Status};
use lcstrs::rewrite::{calc_normal_form, respects, DefaultInputs, Rewriter};
use lcstrs::{theory, Rule, Solver, Substitution, System, Term, TheoryOp, Type, Variable};
use rand::seq::SliceRandom;
use rand::Rng;

use super::random::calc_reducts;

#[derive(Debug, Default)]
pub struct Stats {
    pub samples: usize,
    pub violations: Vec<String>,
}

impl Stats {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.samples += 1;
        if !ok && self.violations.len() < 10 {
            self.violations.push(what());
        }
    }

    pub fn merge(&mut self, other: Stats) {
        self.samples += other.samples;
        self.violations.extend(other.violations);
    }
}

fn sym(sys: &System, name: &str) -> lcstrs::FunctionSymbol {
    sys.signature.get(name).unwrap().clone()
}

/// The factorial witness: init > fact > comp, init > exit, everything lex, bound 0.
pub fn witness_params(sys: &System) -> HorpoParams {
    let p = |a, b| (sym(sys, a), sym(sys, b));
    HorpoParams {
        precedence: Precedence::from_pairs([p("init", "fact"), p("fact", "comp"), p("init", "exit")]).unwrap(),
        status: [(sym(sys, "fact"), Status::Lex)].into(),
        bound: 0.into(),
    }
}

/// A random precedence over the defined symbols (a random order, partially dropped) and
/// random statuses.
pub fn random_params<R: Rng>(rng: &mut R, sys: &System) -> HorpoParams {
    let mut syms: Vec<_> = sys.signature.declared().cloned().collect();
    syms.shuffle(rng);
    let mut precedence = Precedence::new();
    for i in 0..syms.len() {
        for j in i + 1..syms.len() {
            if rng.gen_bool(0.6) && precedence.can_add(&syms[i], &syms[j]) {
                precedence.add(&syms[i], &syms[j]).unwrap();
            }
        }
    }
    let status = syms
        .iter()
        .map(|f| {
            let st = if f.arity() >= 2 && rng.gen_bool(0.5) {
                Status::Mul(rng.gen_range(2..=f.arity()))
            } else {
                Status::Lex
            };
            (f.clone(), st)
        })
        .collect();
    HorpoParams {
        precedence,
        status,
        bound: rng.gen_range(-1..=1).into(),
    }
}

fn sample_vars() -> Vec<Variable> {
    vec![
        Variable::new("n", Type::int()),
        Variable::new("m", Type::int()),
        Variable::new("k", Type::arrow(Type::int(), Type::int())),
    ]
}

pub fn term_gen(sys: &System, depth: usize) -> TermGen {
    TermGen::new(&sys.signature).with_vars(sample_vars()).with_depth(depth)
}

fn int_to_int() -> Type {
    Type::arrow(Type::int(), Type::int())
}

fn gen<R: Rng>(rng: &mut R, g: &TermGen, ty: &Type) -> Term {
    loop {
        if let Some(t) = g.term(rng, ty) {
            return t;
        }
    }
}

/// Subterms of `t` (including `t`) of type `ty`.
fn subterms_of_type(t: &Term, ty: &Type) -> Vec<Term> {
    t.positions_pre_order()
        .into_iter()
        .filter_map(|p| t.subterm(&p).cloned())
        .filter(|s| s.ty() == ty)
        .collect()
}

/// One-step reducts of `t` by the rules of `sys` and by calculation.
fn reducts(sys: &System, t: &Term) -> Vec<Term> {
    let rw = Rewriter::new(sys);
    let mut out = Vec::new();
    for p in t.positions_pre_order() {
        if let Ok(steps) = rw.steps_at(t, &p, &mut DefaultInputs) {
            out.extend(steps.into_iter().map(|s| s.result));
        }
    }
    out
}

/// A term `t` of the same type as `s`, often smaller than `s`: a proper subterm, a reduct,
/// or an unrelated random term.
fn smaller_candidate<R: Rng>(rng: &mut R, sys: &System, g: &TermGen, s: &Term) -> Term {
    let mut pool: Vec<Term> = subterms_of_type(s, s.ty()).into_iter().filter(|u| u != s).collect();
    pool.extend(reducts(sys, s));
    if pool.is_empty() || rng.gen_bool(0.25) {
        gen(rng, g, s.ty())
    } else {
        pool.choose(rng).unwrap().clone()
    }
}

fn truth() -> Term {
    theory::boolean(true)
}

fn replays(j: &Arc<Judgment>, params: &HorpoParams, solver: &Solver) -> Result<(), String> {
    replay(j, params, solver, &truth(), &BTreeSet::new())
}

fn params_for<R: Rng>(rng: &mut R, sys: &System) -> HorpoParams {
    if rng.gen_bool(0.5) {
        witness_params(sys)
    } else {
        random_params(rng, sys)
    }
}

/// gt(t, t) fails; also checks gt implies geq, equal types, and replay on the way.
pub fn irreflexivity<R: Rng>(rng: &mut R, sys: &System, n: usize) -> Stats {
    let solver = Solver::default();
    let mut st = Stats::default();
    let g = term_gen(sys, 4);
    for _ in 0..n {
        let params = params_for(rng, sys);
        let ctx = Horpo::new(&params, &solver, &truth());
        let ty = if rng.gen_bool(0.7) { Type::int() } else { int_to_int() };
        let t = gen(rng, &g, &ty);
        let r = ctx.gt(&t, &t);
        st.check(r.is_none(), || format!("{t} > {t}"));
    }
    st
}

/// Whenever gt(s, t) holds: geq(s, t) holds, the types agree, the derivation replays and
/// gt(t, s) fails.
pub struct PairStats {
    pub gt_in_geq: Stats,
    pub same_type: Stats,
    pub replay: Stats,
    pub no_two_cycles: Stats,
}

pub fn pairs<R: Rng>(rng: &mut R, sys: &System, n: usize) -> PairStats {
    let solver = Solver::default();
    let mut out = PairStats {
        gt_in_geq: Stats::default(),
        same_type: Stats::default(),
        replay: Stats::default(),
        no_two_cycles: Stats::default(),
    };
    let g = term_gen(sys, 4);
    let mut found = 0;
    let mut tries = 0;
    while found < n && tries < 50 * n {
        tries += 1;
        let params = params_for(rng, sys);
        let ctx = Horpo::new(&params, &solver, &truth());
        let ty = if rng.gen_bool(0.7) { Type::int() } else { int_to_int() };
        let s = gen(rng, &g, &ty);
        let t = smaller_candidate(rng, sys, &g, &s);
        let Some(j) = ctx.gt(&s, &t) else { continue };
        found += 1;
        out.gt_in_geq
            .check(ctx.geq(&s, &t).is_some(), || format!("{s} > {t} but not >="));
        out.same_type
            .check(s.ty() == t.ty(), || format!("{s} > {t} across types"));
        out.replay.check(replays(&j, &params, &solver).is_ok(), || {
            format!("{s} > {t}: {}", replays(&j, &params, &solver).unwrap_err())
        });
        out.no_two_cycles
            .check(ctx.gt(&t, &s).is_none(), || format!("{s} > {t} and {t} > {s}"));
    }
    out
}

/// Instantiates the rule's variables: integers in [-5, 5], booleans at random, other
/// variables with random ground terms. Returns `None` when the result does not respect
/// the rule.
fn respecting_subst<R: Rng>(rng: &mut R, sys: &System, rule: &Rule) -> Option<Substitution> {
    let g = TermGen::new(&sys.signature).with_depth(2);
    let mut vars = rule.lhs().free_vars();
    vars.extend(rule.rhs().free_vars());
    vars.extend(rule.constraint().free_vars());
    let mut sigma = Substitution::new();
    for x in vars {
        let t = if x.ty() == &Type::int() {
            theory::int(rng.gen_range(-5..=5))
        } else if x.ty() == &Type::bool() {
            theory::boolean(rng.gen())
        } else {
            gen(rng, &g, x.ty())
        };
        sigma.insert(x, t).ok()?;
    }
    respects(&sigma, rule, &sys.theory).holds().then_some(sigma)
}

/// For rules oriented under `params`: gt(l sigma, r sigma) under true for respecting sigma.
pub fn orientation_coherence<R: Rng>(rng: &mut R, sys: &System, params: &HorpoParams, per_rule: usize) -> Stats {
    let solver = Solver::default();
    let mut st = Stats::default();
    for rule in &sys.rules {
        if lcstrs::horpo::orient_rule(rule, params, &solver).is_err() {
            continue;
        }
        let ctx = Horpo::new(params, &solver, &truth());
        let mut done = 0;
        for _ in 0..per_rule * 20 {
            if done == per_rule {
                break;
            }
            let Some(sigma) = respecting_subst(rng, sys, rule) else {
                continue;
            };
            done += 1;
            let (l, r) = (rule.lhs().subst(&sigma), rule.rhs().subst(&sigma));
            st.check(ctx.gt(&l, &r).is_some(), || format!("rule {rule}: {l} > {r} fails"));
        }
    }
    st
}

/// gt(s0, s0') implies gt(s0 t, s0' t) for non-theory s0; and gt(t, t') implies
/// gt(s t, s t') for non-theory s.
pub fn rule_monotonicity<R: Rng>(rng: &mut R, sys: &System, n: usize) -> Stats {
    let solver = Solver::default();
    let mut st = Stats::default();
    let g = term_gen(sys, 3);
    let mut tries = 0;
    while st.samples < n && tries < 100 * n {
        tries += 1;
        let params = params_for(rng, sys);
        let ctx = Horpo::new(&params, &solver, &truth());
        let s = gen(rng, &g, &int_to_int());
        if s.is_theory() {
            continue;
        }
        if rng.gen_bool(0.5) {
            let s2 = smaller_candidate(rng, sys, &g, &s);
            if ctx.gt(&s, &s2).is_none() {
                continue;
            }
            let t = gen(rng, &g, &Type::int());
            let (a, b) = (Term::app(s.clone(), t.clone()).unwrap(), Term::app(s2, t).unwrap());
            st.check(ctx.gt(&a, &b).is_some(), || format!("head: {a} > {b} fails"));
        } else {
            let t = gen(rng, &g, &Type::int());
            let t2 = smaller_candidate(rng, sys, &g, &t);
            if ctx.gt(&t, &t2).is_none() {
                continue;
            }
            let (a, b) = (Term::app(s.clone(), t).unwrap(), Term::app(s, t2).unwrap());
            st.check(ctx.gt(&a, &b).is_some(), || format!("argument: {a} > {b} fails"));
        }
    }
    st
}

/// Replaces a random Int-typed subterm of `t` by a ground arithmetic or comparison redex.
fn plant_redex<R: Rng>(rng: &mut R, t: &Term) -> Term {
    let spots: Vec<_> = t
        .positions_pre_order()
        .into_iter()
        .filter(|p| t.subterm(p).is_some_and(|u| u.ty() == &Type::int()))
        .collect();
    let Some(p) = spots.choose(rng) else { return t.clone() };
    let op = *[TheoryOp::Add, TheoryOp::Sub, TheoryOp::Mul].choose(rng).unwrap();
    let lit = |rng: &mut R| theory::int(rng.gen_range(-5..=5));
    let redex = theory::op_term(op, vec![lit(rng), lit(rng)]).unwrap();
    t.replace(p, redex).unwrap()
}

/// s ->calc s' and gt(s', t) imply gt(s, t).
pub fn calc_compatibility<R: Rng>(rng: &mut R, sys: &System, n: usize) -> Stats {
    let solver = Solver::default();
    let mut st = Stats::default();
    let g = term_gen(sys, 4);
    let mut tries = 0;
    while st.samples < n && tries < 200 * n {
        tries += 1;
        let ty = if rng.gen_bool(0.8) { Type::int() } else { int_to_int() };
        let base = gen(rng, &g, &ty);
        let s = plant_redex(rng, &base);
        let next = calc_reducts(&sys.theory, &s);
        let Some(s2) = next.choose(rng).cloned() else { continue };
        let params = params_for(rng, sys);
        let ctx = Horpo::new(&params, &solver, &truth());
        let t = match rng.gen_range(0..3) {
            0 => smaller_candidate(rng, sys, &g, &s2),
            1 => calc_normal_form(&sys.theory, &s2),
            _ => gen(rng, &g, &ty),
        };
        if ctx.gt(&s2, &t).is_none() {
            continue;
        }
        st.check(ctx.gt(&s, &t).is_some(), || {
            format!("{s} -> {s2} > {t} but not {s} > {t}")
        });
    }
    st
}
