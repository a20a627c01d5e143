//! The prove loop: deduction, induction splitting (F1 and F2 routes), the
//! two lemma-synthesis tactics and proof-trace construction.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deduct::{equation_seed, normalize, try_deductive, DeductConfig, DeductOutcome};
use crate::eval::{falsify, TestCase};
use crate::forms::{check_f11, check_f12, check_f2, is_induction_friendly, Mode, F11};
use crate::lang::{sym, CsrDef, Equation, Side, Spec, Sym, Term, Type};
use crate::rewrite::{
    abstract_args, binding_types, generalize, match_pattern, measure_phi, measure_psi, substitute,
    Direction, FreshNames, Generalization, Subst,
};
use crate::synth::{synthesize_csr, SynthConfig, SynthError, Synthesized};
use crate::trace::{IhApplication, Justification, NodeKind, ProofNode, ProofTrace, Route};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub timeout: Duration,
    /// Goals per branch of the proof tree.
    pub max_depth: usize,
    pub seed: u64,
    pub synth: SynthConfig,
    pub deduct: DeductConfig,
    /// Tests used to vet generalized subgoals.
    pub falsify_tests: usize,
    /// Tactic-1 extractions tried per goal.
    pub max_tactic_candidates: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            timeout: Duration::from_secs(60),
            max_depth: 12,
            seed: 0,
            synth: SynthConfig::default(),
            deduct: DeductConfig::default(),
            falsify_tests: 100,
            max_tactic_candidates: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("equation is not induction-friendly")]
    NotFriendly,
    #[error("no eligible subprogram to abstract")]
    NoExtraction,
    #[error("the offending variable only occurs outside CSR arguments")]
    NoCsrOccurrence,
    #[error(transparent)]
    Synthesis(#[from] SynthError),
    #[error("tactic {tactic} did not decrease its measure on `{equation}` ({before} -> {after})")]
    ProgressViolation {
        tactic: u8,
        equation: String,
        before: usize,
        after: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    /// Proved lemmas and induction hypotheses.
    pub premises: Vec<Equation>,
    pub target: Equation,
    pub depth: usize,
}

impl Goal {
    pub fn root(target: Equation) -> Goal {
        Goal {
            premises: Vec::new(),
            target,
            depth: 0,
        }
    }

    fn names(&self) -> FreshNames {
        let mut fresh = FreshNames::new(self.target.binder_names().iter());
        for v in self.target.vars() {
            fresh.reserve(&v);
        }
        for p in &self.premises {
            for v in p.vars().iter().chain(p.binder_names().iter()) {
                fresh.reserve(v);
            }
        }
        fresh
    }
}

/// Variables of `eq` not bound by its binders.
pub fn free_vars(eq: &Equation) -> BTreeSet<Sym> {
    let bound = eq.binder_names();
    eq.vars().into_iter().filter(|v| !bound.contains(v)).collect()
}

/// Premises without free variables.
pub fn closed_premises(premises: &[Equation]) -> Vec<Equation> {
    premises
        .iter()
        .filter(|p| free_vars(p).is_empty())
        .cloned()
        .collect()
}

/// One constructor case of an induction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseSplit {
    pub ctor: Sym,
    pub fields: Vec<Sym>,
    pub ih: Option<Equation>,
    /// Target with the induction variable instantiated.
    pub instance: Equation,
    pub reduced: Equation,
    pub ih_applied: Option<IhApplication>,
    pub after_ih: Equation,
    pub generalization: Option<Generalization>,
    pub goal: Goal,
}

/// Induction on `var`, applying the IH on `side` when it has a redex there.
fn split_on(
    goal: &Goal,
    spec: &Spec,
    side: Side,
    var: &Sym,
    config: &EngineConfig,
) -> Result<Vec<CaseSplit>, EngineError> {
    let target = &goal.target;
    let Some(Type::Adt(adt_name)) = target.binder_type(var) else {
        return Err(EngineError::NotFriendly);
    };
    let adt = spec.adt(adt_name).ok_or(EngineError::NotFriendly)?;
    let inherited: Vec<Equation> = goal
        .premises
        .iter()
        .filter(|p| !free_vars(p).contains(var))
        .cloned()
        .collect();

    let mut out = Vec::with_capacity(adt.ctors.len());
    for ctor in &adt.ctors {
        let mut fresh = goal.names();
        let rec = adt.recursive_field(ctor);
        let fields: Vec<Sym> = (0..ctor.fields.len())
            .map(|i| fresh.fresh(if Some(i) == rec { "t" } else { "h" }))
            .collect();
        let mut types = target.type_map();
        types.remove(var);
        for (f, ty) in fields.iter().zip(&ctor.fields) {
            types.insert(f.clone(), ty.clone());
        }
        let inst: Subst = [(
            var.clone(),
            Term::Ctor(
                ctor.name.clone(),
                fields.iter().map(|f| Term::Var(f.clone())).collect(),
            ),
        )]
        .into();
        let instance = Equation::closed(
            substitute(&target.lhs, &inst),
            substitute(&target.rhs, &inst),
            &types,
        );
        let reduced = Equation::closed(
            normalize(&instance.lhs, spec),
            normalize(&instance.rhs, spec),
            &types,
        );

        let mut premises = inherited.clone();
        let (ih, ih_applied, after_ih) = match rec {
            None => (None, None, reduced.clone()),
            Some(i) => {
                let s: Subst = [(var.clone(), Term::Var(fields[i].clone()))].into();
                let ih = Equation::new(
                    Vec::new(),
                    substitute(&target.lhs, &s),
                    substitute(&target.rhs, &s),
                );
                let (applied, after) = apply_ih(&reduced, &ih, side, &types);
                premises.push(ih.clone());
                (Some(ih), applied, after)
            }
        };

        let gen = generalize(&after_ih, spec, &mut fresh);
        let generalization = if gen.replaced.is_empty() {
            None
        } else {
            let seed = equation_seed(config.seed, &gen.equation);
            match falsify(&gen.equation, spec, config.falsify_tests, seed) {
                Ok(None) => Some(gen),
                _ => None,
            }
        };
        let next = generalization
            .as_ref()
            .map_or_else(|| after_ih.clone(), |g| g.equation.clone());
        out.push(CaseSplit {
            ctor: ctor.name.clone(),
            fields,
            ih,
            instance,
            reduced,
            ih_applied,
            after_ih,
            generalization,
            goal: Goal {
                premises,
                target: next,
                depth: goal.depth + 1,
            },
        });
    }
    Ok(out)
}

/// Replaces the IH's `side` instance by its other side, on that side of the
/// reduced goal, or failing that the mirror image on the other side.
fn apply_ih(
    reduced: &Equation,
    ih: &Equation,
    side: Side,
    types: &BTreeMap<Sym, Type>,
) -> (Option<IhApplication>, Equation) {
    for s in [side, side.other()] {
        let (from, to) = (ih.side(s), ih.side(s.other()));
        if from == to || !reduced.side(s).contains_subterm(from) {
            continue;
        }
        let rewritten = reduced.side(s).replace_all(from, to);
        let (lhs, rhs) = match s {
            Side::Lhs => (rewritten, reduced.rhs.clone()),
            Side::Rhs => (reduced.lhs.clone(), rewritten),
        };
        let dir = match s {
            Side::Lhs => Direction::L2R,
            Side::Rhs => Direction::R2L,
        };
        return (
            Some(IhApplication { side: s, dir }),
            Equation::closed(lhs, rhs, types),
        );
    }
    (None, reduced.clone())
}

/// Induction on the F1.1 variable of an F1-friendly goal.
pub fn split_induction(
    goal: &Goal,
    spec: &Spec,
    config: &EngineConfig,
) -> Result<Vec<CaseSplit>, EngineError> {
    let report = is_induction_friendly(&goal.target);
    match report.f11 {
        Some(F11 { side, var, .. }) if report.f1 => split_on(goal, spec, side, &var, config),
        _ => Err(EngineError::NotFriendly),
    }
}

/// Outer induction of the F2 route, on the left call's recursive variable.
pub fn split_induction_f2(
    goal: &Goal,
    spec: &Spec,
    config: &EngineConfig,
) -> Result<Vec<CaseSplit>, EngineError> {
    let f2 = check_f2(&goal.target).ok_or(EngineError::NotFriendly)?;
    split_on(goal, spec, Side::Lhs, &f2.lhs_var, config)
}

pub fn tactic1_precond(eq: &Equation) -> bool {
    check_f11(eq).is_none()
}

pub fn tactic2_precond(eq: &Equation) -> bool {
    match check_f11(eq) {
        Some(f) => !check_f12(eq.side(f.side.other()), &f.var, Mode::All),
        None => false,
    }
}

/// A prospective lemma template `p_s'` with its recursion variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extraction {
    pub pattern: Term,
    pub var: Sym,
    pub cost: usize,
    pub types: BTreeMap<Sym, Type>,
}

const PLACEHOLDER: &str = "f*";

fn template_call(pattern: &Term, v: &Sym, name: &Sym) -> Term {
    let mut args: Vec<Term> = pattern
        .vars()
        .into_iter()
        .filter(|x| x != v)
        .map(Term::Var)
        .collect();
    args.push(Term::Var(v.clone()));
    Term::Call(name.clone(), args)
}

/// Replaces every instance of `pattern` (outermost first) by `with`
/// instantiated, when `keep` accepts the match.
fn replace_instances(
    t: &Term,
    pattern: &Term,
    pvars: &BTreeSet<Sym>,
    with: &Term,
    keep: &dyn Fn(&Subst) -> bool,
) -> Term {
    if let Some(s) = match_pattern(pattern, pvars, t) {
        if keep(&s) {
            let new = substitute(with, &s);
            let children = new
                .children()
                .into_iter()
                .map(|c| replace_instances(c, pattern, pvars, with, keep))
                .collect();
            return new.with_children(children);
        }
    }
    let children = t
        .children()
        .into_iter()
        .map(|c| replace_instances(c, pattern, pvars, with, keep))
        .collect();
    t.with_children(children)
}

fn rewrite_goal(
    eq: &Equation,
    pattern: &Term,
    call: &Term,
    keep: &dyn Fn(&Subst) -> bool,
) -> Equation {
    let pvars: BTreeSet<Sym> = pattern.vars().into_iter().collect();
    Equation::closed(
        replace_instances(&eq.lhs, pattern, &pvars, call, keep),
        replace_instances(&eq.rhs, pattern, &pvars, call, keep),
        &eq.type_map(),
    )
}

fn choose_var(pattern: &Term, types: &BTreeMap<Sym, Type>) -> Option<Sym> {
    let placeholder = sym(PLACEHOLDER);
    let mut best: Option<(usize, Sym)> = None;
    for v in pattern.vars() {
        if !matches!(types.get(&v), Some(Type::Adt(_))) {
            continue;
        }
        let lemma = Equation::closed(template_call(pattern, &v, &placeholder), pattern.clone(), types);
        let score = usize::from(check_f11(&lemma).is_some())
            + usize::from(check_f12(pattern, &v, Mode::All))
            + usize::from(check_f2(&lemma).is_some());
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, v));
        }
    }
    best.map(|(_, v)| v)
}

/// Every tactic-1 extraction whose rewrite would decrease ψ: templates
/// mentioning a CSR first, then cheapest first (ties: left side before
/// right, then pre-order).
pub fn tactic1_candidates(eq: &Equation, spec: &Spec, taken: &FreshNames) -> Vec<Extraction> {
    let types = eq.type_map();
    let before = measure_psi(eq);
    let placeholder = sym(PLACEHOLDER);
    let mut out: Vec<Extraction> = Vec::new();
    for side in [Side::Lhs, Side::Rhs] {
        let mut roots = Vec::new();
        eq.side(side).visit_positions(&mut |_, t| roots.push(t.clone()));
        for root in roots {
            // a conditional is a case split, not an application to abstract
            if matches!(root, Term::Ite(..)) {
                continue;
            }
            let mut fresh = taken.clone();
            let Ok(abs) = abstract_args(&root, &mut fresh) else {
                continue;
            };
            let vtypes = binding_types(&abs.bindings, spec, &types);
            let Some(var) = choose_var(&abs.skeleton, &vtypes) else {
                continue;
            };
            if out.iter().any(|c| c.pattern == abs.skeleton && c.var == var) {
                continue;
            }
            let call = template_call(&abs.skeleton, &var, &placeholder);
            let predicted = rewrite_goal(eq, &abs.skeleton, &call, &|_| true);
            if measure_psi(&predicted) >= before {
                continue;
            }
            out.push(Extraction {
                pattern: abs.skeleton,
                var,
                cost: abs.cost,
                types: vtypes,
            });
        }
    }
    // templates without a CSR call only restate constructor structure
    out.sort_by_key(|c| (!c.pattern.contains_call(), c.cost));
    out
}

/// Cheapest tactic-1 extraction.
pub fn tactic1_extract(eq: &Equation, spec: &Spec) -> Result<Extraction, EngineError> {
    let taken = FreshNames::new(eq.vars().iter());
    tactic1_candidates(eq, spec, &taken)
        .into_iter()
        .next()
        .ok_or(EngineError::NoExtraction)
}

/// The deepest CSR call passing the F1.1 variable at a non-recursive
/// position, with every argument abstracted.
pub fn tactic2_extract(
    eq: &Equation,
    spec: &Spec,
    taken: &FreshNames,
) -> Result<(Extraction, Sym), EngineError> {
    let f = check_f11(eq).ok_or(EngineError::NoCsrOccurrence)?;
    let x = f.var;
    let mut best: Option<(usize, Term)> = None;
    for side in [Side::Lhs, Side::Rhs] {
        eq.side(side).visit_positions(&mut |path, t| {
            if let Term::Call(_, args) = t {
                let hit = args[..args.len() - 1]
                    .iter()
                    .any(|a| a.as_var() == Some(&x));
                if hit && best.as_ref().is_none_or(|(d, _)| path.len() > *d) {
                    best = Some((path.len(), t.clone()));
                }
            }
        });
    }
    let (_, call) = best.ok_or(EngineError::NoCsrOccurrence)?;
    let Term::Call(name, args) = &call else {
        unreachable!()
    };
    let mut fresh = taken.clone();
    let mut bindings: Vec<(Sym, Term)> = Vec::new();
    let mut vars = Vec::with_capacity(args.len());
    for a in args {
        let v = match bindings.iter().find(|(_, b)| b == a) {
            Some((v, _)) => v.clone(),
            None => {
                let v = fresh.letter();
                bindings.push((v.clone(), a.clone()));
                v
            }
        };
        vars.push(v);
    }
    let i = args[..args.len() - 1]
        .iter()
        .position(|a| a.as_var() == Some(&x))
        .expect("found above");
    let types = binding_types(&bindings, spec, &eq.type_map());
    let pattern = Term::Call(name.clone(), vars.iter().cloned().map(Term::Var).collect());
    Ok((
        Extraction {
            pattern,
            var: vars[i].clone(),
            cost: bindings.len(),
            types,
        },
        x,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TacticOutcome {
    pub synthesized: Synthesized,
    pub transformed: Equation,
}

/// Synthesizes the lemma for `ext` and rewrites `eq` with it right to left:
/// every instance for tactic 1, those binding the recursion variable to
/// `offending` for tactic 2.
pub fn apply_tactic(
    eq: &Equation,
    tactic: u8,
    ext: &Extraction,
    offending: Option<&Sym>,
    name: &str,
    spec: &Spec,
    synth: &SynthConfig,
) -> Result<TacticOutcome, EngineError> {
    let synthesized = synthesize_csr(&ext.pattern, &ext.var, &ext.types, name, spec, synth)?;
    let call = synthesized.lemma.lhs.clone();
    let transformed = match offending {
        Some(x) => {
            let target = Term::Var(x.clone());
            let v = ext.var.clone();
            rewrite_goal(eq, &ext.pattern, &call, &move |s| s.get(&v) == Some(&target))
        }
        None => rewrite_goal(eq, &ext.pattern, &call, &|_| true),
    };
    let (before, after) = match offending {
        Some(x) => (measure_phi(eq, x), measure_phi(&transformed, x)),
        None => (measure_psi(eq), measure_psi(&transformed)),
    };
    if after >= before {
        return Err(EngineError::ProgressViolation {
            tactic,
            equation: eq.to_string(),
            before,
            after,
        });
    }
    Ok(TacticOutcome {
        synthesized,
        transformed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Proved,
    Disproved,
    Unknown,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub lemma_count: usize,
    pub induction_count: usize,
    pub tactic1_count: usize,
    pub tactic2_count: usize,
    pub goals: usize,
}

impl Stats {
    pub fn of(root: &ProofNode, goals: usize) -> Stats {
        let mut s = Stats {
            goals,
            ..Stats::default()
        };
        root.walk(&mut |n| match &n.justification {
            Justification::Induction { .. } => s.induction_count += 1,
            Justification::Tactic { tactic, .. } => {
                s.lemma_count += 1;
                if *tactic == 1 {
                    s.tactic1_count += 1;
                } else {
                    s.tactic2_count += 1;
                }
            }
            _ => {}
        });
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofResult {
    pub verdict: Verdict,
    pub counterexample: Option<TestCase>,
    pub trace: ProofTrace,
    pub stats: Stats,
    pub elapsed_ms: u64,
}

struct Engine<'a> {
    spec: Spec,
    config: &'a EngineConfig,
    deadline: Instant,
    synthesized: Vec<CsrDef>,
    goals: usize,
    counterexample: Option<TestCase>,
}

impl Engine<'_> {
    fn timed_out(&self) -> bool {
        Instant::now() >= self.deadline
    }

    fn prove_goal(&mut self, goal: Goal, ancestors: &[Equation]) -> Result<ProofNode, EngineError> {
        self.goals += 1;
        let eq = goal.target.clone();
        if self.timed_out() {
            return Ok(ProofNode::failure(eq, "timeout"));
        }
        if goal.depth > self.config.max_depth {
            return Ok(ProofNode::failure(eq, "depth limit"));
        }
        if ancestors.iter().any(|a| a.alpha_eq_sym(&eq)) {
            return Ok(ProofNode::failure(eq, "repeats an enclosing goal"));
        }
        match try_deductive(&goal.premises, &eq, &self.spec, &self.config.deduct) {
            DeductOutcome::Proved(proof) => {
                return Ok(ProofNode {
                    kind: NodeKind::Deduct,
                    equation: eq,
                    children: Vec::new(),
                    justification: Justification::Deduct {
                        premises: goal.premises.clone(),
                        proof,
                    },
                })
            }
            DeductOutcome::Disproved(cex) => {
                let reason = format!("counterexample {cex}");
                if goal.depth == 0 {
                    self.counterexample = Some(cex);
                }
                return Ok(ProofNode::failure(eq, reason));
            }
            DeductOutcome::Unknown => {}
        }

        let mut path = ancestors.to_vec();
        path.push(eq.clone());
        let report = is_induction_friendly(&eq);
        if let (true, Some(f)) = (report.f1, &report.f11) {
            let cases = split_on(&goal, &self.spec, f.side, &f.var, self.config)?;
            return self.induction(&goal, cases, Route::F1, &f.var, &path);
        }
        if let Some(f2) = &report.f2 {
            let cases = split_on(&goal, &self.spec, Side::Lhs, &f2.lhs_var, self.config)?;
            return self.induction(&goal, cases, Route::F2, &f2.lhs_var, &path);
        }

        let attempt = if tactic1_precond(&eq) {
            self.tactic1(&goal, &path)?
        } else if tactic2_precond(&eq) {
            self.tactic2(&goal, &path)?
        } else {
            None
        };
        if let Some(node) = &attempt {
            if node.is_complete() {
                return Ok(attempt.expect("checked"));
            }
        }
        if let Some(f) = report.f11 {
            let cases = split_on(&goal, &self.spec, f.side, &f.var, self.config)?;
            let node = self.induction(&goal, cases, Route::Fallback, &f.var, &path)?;
            if node.is_complete() || attempt.is_none() {
                return Ok(node);
            }
        }
        Ok(attempt.unwrap_or_else(|| ProofNode::failure(eq, "no rule applies")))
    }

    fn induction(
        &mut self,
        goal: &Goal,
        cases: Vec<CaseSplit>,
        route: Route,
        var: &Sym,
        path: &[Equation],
    ) -> Result<ProofNode, EngineError> {
        let mut children = Vec::with_capacity(cases.len());
        for case in cases {
            let child = self.prove_goal(case.goal, path)?;
            children.push(ProofNode {
                kind: NodeKind::Case,
                equation: case.instance,
                children: vec![child],
                justification: Justification::Case {
                    ctor: case.ctor,
                    fields: case.fields,
                    ih: case.ih,
                    reduced: case.reduced,
                    ih_applied: case.ih_applied,
                    after_ih: case.after_ih,
                    generalization: case.generalization,
                },
            });
        }
        Ok(ProofNode {
            kind: NodeKind::Induction,
            equation: goal.target.clone(),
            children,
            justification: Justification::Induction {
                var: var.clone(),
                route,
            },
        })
    }

    fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.config.seed,
            deadline: Some(self.deadline),
            ..self.config.synth.clone()
        }
    }

    fn next_name(&self) -> String {
        let mut k = self.synthesized.len() + 1;
        while self.spec.csr(&format!("f_{k}")).is_some() {
            k += 1;
        }
        format!("f_{k}")
    }

    /// Applies a tactic and proves the lemma, then the transformed goal.
    /// `None` if synthesis fails or the lemma repeats an enclosing goal.
    fn run_tactic(
        &mut self,
        goal: &Goal,
        tactic: u8,
        ext: &Extraction,
        offending: Option<&Sym>,
        path: &[Equation],
    ) -> Result<Option<ProofNode>, EngineError> {
        let name = self.next_name();
        let synth = self.synth_config();
        let outcome = match apply_tactic(&goal.target, tactic, ext, offending, &name, &self.spec, &synth) {
            Ok(o) => o,
            Err(EngineError::Synthesis(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let lemma = outcome.synthesized.lemma.clone();
        if path.iter().any(|a| a.alpha_eq_sym(&lemma)) {
            return Ok(None);
        }
        if !outcome.synthesized.reused {
            self.spec.add_csr(outcome.synthesized.csr.clone());
            self.synthesized.push(outcome.synthesized.csr.clone());
        }
        let lemma_goal = Goal {
            premises: closed_premises(&goal.premises),
            target: lemma.clone(),
            depth: goal.depth + 1,
        };
        let lemma_node = self.prove_goal(lemma_goal, path)?;
        let mut children = vec![lemma_node];
        if children[0].is_complete() {
            let mut premises = goal.premises.clone();
            premises.push(lemma.clone());
            let next = Goal {
                premises,
                target: outcome.transformed.clone(),
                depth: goal.depth + 1,
            };
            children.push(self.prove_goal(next, path)?);
        }
        Ok(Some(ProofNode {
            kind: NodeKind::Tactic,
            equation: goal.target.clone(),
            children,
            justification: Justification::Tactic {
                tactic,
                pattern: ext.pattern.clone(),
                var: ext.var.clone(),
                csr: outcome.synthesized.csr.name.clone(),
                lemma,
                transformed: outcome.transformed,
            },
        }))
    }

    fn tactic1(&mut self, goal: &Goal, path: &[Equation]) -> Result<Option<ProofNode>, EngineError> {
        let candidates = tactic1_candidates(&goal.target, &self.spec, &goal.names());
        let mut first: Option<ProofNode> = None;
        for ext in candidates.iter().take(self.config.max_tactic_candidates) {
            if self.timed_out() {
                break;
            }
            if let Some(node) = self.run_tactic(goal, 1, ext, None, path)? {
                if node.is_complete() {
                    return Ok(Some(node));
                }
                first.get_or_insert(node);
            }
        }
        Ok(first)
    }

    fn tactic2(&mut self, goal: &Goal, path: &[Equation]) -> Result<Option<ProofNode>, EngineError> {
        match tactic2_extract(&goal.target, &self.spec, &goal.names()) {
            Ok((ext, x)) => self.run_tactic(goal, 2, &ext, Some(&x), path),
            Err(_) => Ok(None),
        }
    }
}

const ENGINE_STACK: usize = 512 << 20;

/// Proves the spec's goal. Runs on a dedicated thread with a large stack.
pub fn prove(spec: &Spec, config: &EngineConfig) -> Result<ProofResult, EngineError> {
    let spec = spec.clone();
    let config = config.clone();
    std::thread::Builder::new()
        .name("prover".into())
        .stack_size(ENGINE_STACK)
        .spawn(move || prove_here(&spec, &config))
        .expect("spawn prover thread")
        .join()
        .unwrap_or_else(|e| std::panic::resume_unwind(e))
}

/// [`prove`] on the calling thread.
pub fn prove_here(spec: &Spec, config: &EngineConfig) -> Result<ProofResult, EngineError> {
    let start = Instant::now();
    let mut config = config.clone();
    config.deduct.seed = config.seed;
    config.deduct.deadline = Some(start + config.timeout);
    let mut engine = Engine {
        spec: spec.clone(),
        config: &config,
        deadline: start + config.timeout,
        synthesized: Vec::new(),
        goals: 0,
        counterexample: None,
    };
    let root = engine.prove_goal(Goal::root(spec.goal.clone()), &[])?;
    let verdict = if engine.counterexample.is_some() {
        Verdict::Disproved
    } else if root.is_complete() {
        Verdict::Proved
    } else {
        Verdict::Unknown
    };
    let stats = Stats::of(&root, engine.goals);
    Ok(ProofResult {
        verdict,
        counterexample: engine.counterexample,
        trace: ProofTrace {
            synthesized: engine.synthesized,
            root,
        },
        stats,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}
