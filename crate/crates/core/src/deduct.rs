//! Deductive solver: normalization, arithmetic canonicalization, bounded
//! premise rewriting and case splits on conditionals, behind a
//! falsification pre-pass.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::eval::{falsify, fold_op, mix_seed, unfold_call, TestCase, Value};
use crate::lang::{pretty_equation, Equation, Op, Side, Spec, Term};
use crate::rewrite::{rewrite_with, Direction, Position};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeductConfig {
    /// Premise applications per search branch.
    pub max_depth: usize,
    /// Search states explored per call, shared across case splits.
    pub node_budget: usize,
    pub falsify_tests: usize,
    /// Nested case splits on conditionals.
    pub max_splits: usize,
    pub seed: u64,
    #[serde(skip)]
    pub deadline: Option<Instant>,
}

impl Default for DeductConfig {
    fn default() -> Self {
        DeductConfig {
            max_depth: 4,
            node_budget: 20_000,
            falsify_tests: 100,
            max_splits: 3,
            seed: 0,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    /// Reduction and identities via [`normalize`].
    Normalize,
    /// Rewriting into the arithmetic canonical form.
    Canon,
    Rewrite {
        premise: usize,
        dir: Direction,
        pos: Position,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub side: Side,
    #[serde(flatten)]
    pub kind: StepKind,
    pub result: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum Finish {
    /// Both sides have the same arithmetic canonical form.
    Joinable,
    /// Every occurrence of `cond` is replaced by `true`, then by `false`.
    Split {
        cond: Term,
        on_true: Box<DeductProof>,
        on_false: Box<DeductProof>,
    },
}

/// Replayable proof: apply `steps` to the goal's sides, then `finish`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeductProof {
    pub steps: Vec<Step>,
    pub finish: Finish,
}

impl DeductProof {
    /// Premise indices used anywhere in the proof.
    pub fn premises_used(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_premises(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_premises(&self, out: &mut Vec<usize>) {
        for s in &self.steps {
            if let StepKind::Rewrite { premise, .. } = s.kind {
                out.push(premise);
            }
        }
        if let Finish::Split {
            on_true, on_false, ..
        } = &self.finish
        {
            on_true.collect_premises(out);
            on_false.collect_premises(out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeductOutcome {
    Proved(DeductProof),
    Disproved(TestCase),
    Unknown,
}

fn bool_of(t: &Term) -> Option<bool> {
    match t {
        Term::Bool(b) => Some(*b),
        _ => None,
    }
}

fn int_of(t: &Term) -> Option<&BigInt> {
    match t {
        Term::Int(v) => Some(v),
        _ => None,
    }
}

fn simplify_op(op: Op, mut args: Vec<Term>) -> Term {
    if let Some(vals) = args.iter().map(Value::from_term).collect::<Option<Vec<_>>>() {
        if let Some(v) = fold_op(op, &vals) {
            return v.to_term();
        }
    }
    let is = |t: &Term, k: i64| int_of(t).is_some_and(|v| *v == BigInt::from(k));
    match op {
        Op::Add if is(&args[1], 0) => args.swap_remove(0),
        Op::Add if is(&args[0], 0) => args.swap_remove(1),
        Op::Sub if is(&args[1], 0) => args.swap_remove(0),
        Op::Sub if args[0] == args[1] => Term::int(0),
        Op::Mul if is(&args[0], 0) || is(&args[1], 0) => Term::int(0),
        Op::Mul if is(&args[1], 1) => args.swap_remove(0),
        Op::Mul if is(&args[0], 1) => args.swap_remove(1),
        Op::And => match (bool_of(&args[0]), bool_of(&args[1])) {
            (Some(false), _) | (_, Some(false)) => Term::Bool(false),
            (Some(true), _) => args.swap_remove(1),
            (_, Some(true)) => args.swap_remove(0),
            _ => Term::Op(op, args),
        },
        Op::Or => match (bool_of(&args[0]), bool_of(&args[1])) {
            (Some(true), _) | (_, Some(true)) => Term::Bool(true),
            (Some(false), _) => args.swap_remove(1),
            (_, Some(false)) => args.swap_remove(0),
            _ => Term::Op(op, args),
        },
        Op::Not => match &args[0] {
            Term::Op(Op::Not, inner) => inner[0].clone(),
            _ => Term::Op(op, args),
        },
        Op::Le | Op::Eq if args[0] == args[1] => Term::Bool(true),
        Op::Lt if args[0] == args[1] => Term::Bool(false),
        _ => Term::Op(op, args),
    }
}

/// Innermost normalization of an open term: CSR unfolding on
/// constructor-headed recursive arguments, lifting conditionals out of
/// recursive arguments, constant folding and identity elements.
pub fn normalize(term: &Term, spec: &Spec) -> Term {
    let children: Vec<Term> = term
        .children()
        .into_iter()
        .map(|c| normalize(c, spec))
        .collect();
    let node = term.with_children(children);
    match node {
        Term::Call(ref f, ref args) => match args.last() {
            Some(Term::Ctor(..)) => match unfold_call(spec, f, args) {
                Some(body) => normalize(&body, spec),
                None => node,
            },
            Some(Term::Ite(c, a, b)) => {
                let init = &args[..args.len() - 1];
                let call = |x: &Term| {
                    let mut v = init.to_vec();
                    v.push(x.clone());
                    Term::Call(f.clone(), v)
                };
                let lifted = Term::ite((**c).clone(), call(a), call(b));
                normalize(&lifted, spec)
            }
            _ => node,
        },
        Term::Op(op, args) => simplify_op(op, args),
        Term::Ite(c, a, b) => match bool_of(&c) {
            Some(true) => *a,
            Some(false) => *b,
            None if a == b => *a,
            None => Term::Ite(c, a, b),
        },
        other => other,
    }
}

type Monomial = Vec<Term>;
type Poly = BTreeMap<Monomial, BigInt>;

fn poly_add(mut a: Poly, b: Poly, sign: i64) -> Poly {
    for (m, c) in b {
        let e = a.entry(m).or_insert_with(BigInt::zero);
        *e += c * sign;
    }
    a.retain(|_, c| !c.is_zero());
    a
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let mut m = ma.clone();
            m.extend(mb.iter().cloned());
            m.sort();
            *out.entry(m).or_insert_with(BigInt::zero) += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn to_poly(t: &Term) -> Poly {
    match t {
        Term::Int(v) => {
            let mut p = Poly::new();
            if !v.is_zero() {
                p.insert(Vec::new(), v.clone());
            }
            p
        }
        Term::Op(Op::Add, a) => poly_add(to_poly(&a[0]), to_poly(&a[1]), 1),
        Term::Op(Op::Sub, a) => poly_add(to_poly(&a[0]), to_poly(&a[1]), -1),
        Term::Op(Op::Mul, a) => poly_mul(&to_poly(&a[0]), &to_poly(&a[1])),
        atom => {
            let mut p = Poly::new();
            p.insert(vec![canon(atom)], BigInt::one());
            p
        }
    }
}

fn monomial_term(m: &[Term], coeff: &BigInt) -> Term {
    let product = m
        .iter()
        .cloned()
        .reduce(|acc, x| Term::Op(Op::Mul, vec![acc, x]));
    match product {
        None => Term::Int(coeff.clone()),
        Some(p) if coeff.is_one() => p,
        Some(p) => Term::Op(Op::Mul, vec![Term::Int(coeff.clone()), p]),
    }
}

fn from_poly(p: &Poly) -> Term {
    let mut items: Vec<(&Monomial, &BigInt)> = p.iter().collect();
    // constants last, otherwise monomial order
    items.sort_by(|a, b| (a.0.is_empty(), a.0).cmp(&(b.0.is_empty(), b.0)));
    let mut acc: Option<Term> = None;
    for (m, c) in items {
        acc = Some(match acc {
            None => monomial_term(m, c),
            Some(prev) if c.is_negative() => {
                Term::Op(Op::Sub, vec![prev, monomial_term(m, &-c)])
            }
            Some(prev) => Term::Op(Op::Add, vec![prev, monomial_term(m, c)]),
        });
    }
    acc.unwrap_or_else(|| Term::int(0))
}

/// Canonical form of integer arithmetic modulo commutative-ring laws: every
/// maximal `+`/`-`/`*` tree becomes a sorted sum of monomials.
pub fn canon(t: &Term) -> Term {
    match t {
        Term::Op(Op::Add | Op::Sub | Op::Mul, _) => from_poly(&to_poly(t)),
        _ => t.with_children(t.children().into_iter().map(canon).collect()),
    }
}

/// Whether the sides agree after normalization and canonicalization.
pub fn joinable(l: &Term, r: &Term) -> bool {
    l == r || canon(l) == canon(r)
}

/// Per-goal seed: `seed` mixed with a hash of the equation's text.
pub fn equation_seed(seed: u64, eq: &Equation) -> u64 {
    mix_seed(seed, &pretty_equation(eq))
}

struct Search<'a> {
    spec: &'a Spec,
    premises: &'a [Equation],
    config: &'a DeductConfig,
    nodes: usize,
}

#[derive(Clone)]
struct State {
    lhs: Term,
    rhs: Term,
    steps: Vec<Step>,
}

impl State {
    fn side(&self, s: Side) -> &Term {
        match s {
            Side::Lhs => &self.lhs,
            Side::Rhs => &self.rhs,
        }
    }

    fn with_step(&self, step: Step) -> State {
        let mut next = self.clone();
        match step.side {
            Side::Lhs => next.lhs = step.result.clone(),
            Side::Rhs => next.rhs = step.result.clone(),
        }
        next.steps.push(step);
        next
    }
}

impl Search<'_> {
    fn expired(&self) -> bool {
        self.nodes.is_multiple_of(64) && self.config.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn normalized(&self, lhs: Term, rhs: Term) -> State {
        let mut st = State {
            lhs: lhs.clone(),
            rhs: rhs.clone(),
            steps: Vec::new(),
        };
        for side in [Side::Lhs, Side::Rhs] {
            let n = normalize(st.side(side), self.spec);
            if &n != st.side(side) {
                st = st.with_step(Step {
                    side,
                    kind: StepKind::Normalize,
                    result: n,
                });
            }
        }
        st
    }

    fn prove(&mut self, lhs: Term, rhs: Term, splits: usize) -> Option<DeductProof> {
        let start = self.normalized(lhs, rhs);
        if let Some(p) = self.bfs(&start) {
            return Some(p);
        }
        if splits >= self.config.max_splits || self.nodes >= self.config.node_budget {
            return None;
        }
        let cond = first_condition(&start.lhs).or_else(|| first_condition(&start.rhs))?;
        let case = |b: bool| {
            let v = Term::Bool(b);
            (
                start.lhs.replace_all(&cond, &v),
                start.rhs.replace_all(&cond, &v),
            )
        };
        let (tl, tr) = case(true);
        let on_true = self.prove(tl, tr, splits + 1)?;
        let (fl, fr) = case(false);
        let on_false = self.prove(fl, fr, splits + 1)?;
        Some(DeductProof {
            steps: start.steps,
            finish: Finish::Split {
                cond,
                on_true: Box::new(on_true),
                on_false: Box::new(on_false),
            },
        })
    }

    fn done(st: State) -> DeductProof {
        DeductProof {
            steps: st.steps,
            finish: Finish::Joinable,
        }
    }

    fn bfs(&mut self, start: &State) -> Option<DeductProof> {
        if joinable(&start.lhs, &start.rhs) {
            return Some(Self::done(start.clone()));
        }
        let mut seen: HashSet<(Term, Term)> = HashSet::new();
        seen.insert((canon(&start.lhs), canon(&start.rhs)));
        let mut queue: VecDeque<(State, usize)> = VecDeque::new();
        queue.push_back((start.clone(), 0));
        while let Some((st, depth)) = queue.pop_front() {
            if depth >= self.config.max_depth {
                continue;
            }
            for next in self.successors(&st) {
                if self.nodes >= self.config.node_budget || self.expired() {
                    return None;
                }
                if !seen.insert((canon(&next.lhs), canon(&next.rhs))) {
                    continue;
                }
                self.nodes += 1;
                if joinable(&next.lhs, &next.rhs) {
                    return Some(Self::done(next));
                }
                queue.push_back((next, depth + 1));
            }
        }
        None
    }

    fn successors(&self, st: &State) -> Vec<State> {
        let mut out = Vec::new();
        for side in [Side::Lhs, Side::Rhs] {
            let mut variants = vec![st.clone()];
            let c = canon(st.side(side));
            if &c != st.side(side) {
                variants.push(st.with_step(Step {
                    side,
                    kind: StepKind::Canon,
                    result: c,
                }));
            }
            for base in &variants {
                let subject = base.side(side);
                for (i, p) in self.premises.iter().enumerate() {
                    for dir in [Direction::L2R, Direction::R2L] {
                        if dir.sides(p).0.as_var().is_some() {
                            continue;
                        }
                        for (pos, t) in rewrite_with(p, dir, subject) {
                            let mut next = base.with_step(Step {
                                side,
                                kind: StepKind::Rewrite {
                                    premise: i,
                                    dir,
                                    pos,
                                },
                                result: t.clone(),
                            });
                            let n = normalize(&t, self.spec);
                            if n != t {
                                next = next.with_step(Step {
                                    side,
                                    kind: StepKind::Normalize,
                                    result: n,
                                });
                            }
                            out.push(next);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Leftmost-outermost conditional whose condition has no conditional.
fn first_condition(t: &Term) -> Option<Term> {
    let mut found = None;
    t.visit_positions(&mut |_, s| {
        if found.is_none() {
            if let Term::Ite(c, _, _) = s {
                if !c.contains_ite() {
                    found = Some((**c).clone());
                }
            }
        }
    });
    found
}

/// Deductive search without the falsification pre-pass.
pub fn prove_deductive(
    premises: &[Equation],
    target: &Equation,
    spec: &Spec,
    config: &DeductConfig,
) -> Option<DeductProof> {
    let mut s = Search {
        spec,
        premises,
        config,
        nodes: 0,
    };
    s.prove(target.lhs.clone(), target.rhs.clone(), 0)
}

/// Falsification pre-pass followed by bounded deductive search.
pub fn try_deductive(
    premises: &[Equation],
    target: &Equation,
    spec: &Spec,
    config: &DeductConfig,
) -> DeductOutcome {
    let seed = equation_seed(config.seed, target);
    if let Ok(Some(cex)) = falsify(target, spec, config.falsify_tests, seed) {
        return DeductOutcome::Disproved(cex);
    }
    match prove_deductive(premises, target, spec, config) {
        Some(p) => DeductOutcome::Proved(p),
        None => DeductOutcome::Unknown,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{eq, lists, term};

    #[test]
    fn normalize_examples() {
        let spec = lists("Goal . 0 = 0;");
        assert_eq!(
            normalize(&term(&spec, "sum (cons h t)"), &spec),
            term(&spec, "h + sum t")
        );
        assert_eq!(normalize(&term(&spec, "0 + sum t"), &spec), term(&spec, "sum t"));
        let t = term(&spec, "sum (rev t)");
        assert_eq!(normalize(&t, &spec), t);
    }

    #[test]
    fn normalize_lifts_conditionals_out_of_recursive_arguments() {
        let spec = lists("Goal . 0 = 0;");
        let n = normalize(&term(&spec, "sum (ins x (cons h t))"), &spec);
        assert_eq!(
            n,
            term(&spec, "if x <= h then x + (h + sum t) else h + sum (ins x t)")
        );
    }

    #[test]
    fn canon_is_ac() {
        let spec = lists("Goal . 0 = 0;");
        let a = canon(&term(&spec, "h1 + (h + sum t)"));
        let b = canon(&term(&spec, "(sum t + h) + h1"));
        assert_eq!(a, b);
        assert_eq!(canon(&term(&spec, "2 * x - x - x")), Term::int(0));
        assert_eq!(canon(&a), a);
    }

    #[test]
    fn try_deductive_examples() {
        let spec = lists("Goal . 0 = 0;");
        let cfg = DeductConfig::default();
        let goal = eq(&spec, ". sum nil = 0");
        assert!(matches!(
            try_deductive(&[], &goal, &spec, &cfg),
            DeductOutcome::Proved(_)
        ));
        let goal = eq(&spec, "(xs: List). rev xs = xs");
        match try_deductive(&[], &goal, &spec, &cfg) {
            DeductOutcome::Disproved(cex) => {
                let env = cex.assignment;
                let l = crate::eval::eval_in(&goal.lhs, &env, &spec, 1000).unwrap();
                let r = crate::eval::eval_in(&goal.rhs, &env, &spec, 1000).unwrap();
                assert_ne!(l, r);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ih_alone_does_not_close_the_sum_rev_case() {
        let spec = lists("Goal . 0 = 0;");
        let ih = Equation::new(vec![], term(&spec, "sum (rev t)"), term(&spec, "sum t"));
        let goal = eq(&spec, "(h: Int) (t: List). sum (rev (cons h t)) = sum (cons h t)");
        let cfg = DeductConfig::default();
        assert_eq!(try_deductive(&[ih], &goal, &spec, &cfg), DeductOutcome::Unknown);
    }

    #[test]
    fn premises_apply_in_both_directions() {
        let spec = lists("Goal . 0 = 0;");
        let lemma = eq(&spec, "(a: List). sum (rev a) = sum a");
        let goal = eq(&spec, "(x: Int) (t: List). x + sum t = sum (rev t) + x");
        let cfg = DeductConfig::default();
        assert!(matches!(
            try_deductive(&[lemma], &goal, &spec, &cfg),
            DeductOutcome::Proved(_)
        ));
    }

    #[test]
    fn case_split_closes_conditional_goal() {
        let spec = lists("Goal . 0 = 0;");
        let goal = eq(
            &spec,
            "(x: Int) (h: Int). (if x <= h then x + h else h + x) = h + x",
        );
        let cfg = DeductConfig::default();
        match try_deductive(&[], &goal, &spec, &cfg) {
            DeductOutcome::Proved(p) => assert!(matches!(p.finish, Finish::Split { .. })),
            other => panic!("{other:?}"),
        }
    }
}
