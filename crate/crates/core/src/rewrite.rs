//! Substitution, matching, rewriting with equations, abstraction,
//! generalization and the progress measures.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::lang::{sym, Equation, Spec, Sym, Term, Type, TypeEnv};

pub type Subst = BTreeMap<Sym, Term>;

/// Path of child indices from the root of a term.
pub type Position = Vec<usize>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    L2R,
    R2L,
}

impl Direction {
    /// (pattern, replacement) sides of `rule` in this direction.
    pub fn sides(self, rule: &Equation) -> (&Term, &Term) {
        match self {
            Direction::L2R => (&rule.lhs, &rule.rhs),
            Direction::R2L => (&rule.rhs, &rule.lhs),
        }
    }
}

/// Simultaneous substitution. Terms have no binders, so it is capture-free.
pub fn substitute(term: &Term, s: &Subst) -> Term {
    if s.is_empty() {
        return term.clone();
    }
    match term {
        Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| term.clone()),
        _ => term.with_children(term.children().into_iter().map(|c| substitute(c, s)).collect()),
    }
}

pub fn substitute_eq(eq: &Equation, s: &Subst) -> (Term, Term) {
    (substitute(&eq.lhs, s), substitute(&eq.rhs, s))
}

/// First-order matching. Variables outside `pattern_vars` match only
/// themselves.
pub fn match_pattern(pattern: &Term, pattern_vars: &BTreeSet<Sym>, subject: &Term) -> Option<Subst> {
    let mut s = Subst::new();
    match_into(pattern, pattern_vars, subject, &mut s).then_some(s)
}

fn match_into(p: &Term, vars: &BTreeSet<Sym>, t: &Term, s: &mut Subst) -> bool {
    match p {
        Term::Var(v) if vars.contains(v) => match s.get(v) {
            Some(bound) => bound == t,
            None => {
                s.insert(v.clone(), t.clone());
                true
            }
        },
        Term::Var(_) | Term::Int(_) | Term::Bool(_) => p == t,
        Term::Op(o1, a1) => match t {
            Term::Op(o2, a2) if o1 == o2 => match_all(a1, a2, vars, s),
            _ => false,
        },
        Term::Ctor(c1, a1) => match t {
            Term::Ctor(c2, a2) if c1 == c2 => match_all(a1, a2, vars, s),
            _ => false,
        },
        Term::Call(f1, a1) => match t {
            Term::Call(f2, a2) if f1 == f2 => match_all(a1, a2, vars, s),
            _ => false,
        },
        Term::Ite(c1, x1, y1) => match t {
            Term::Ite(c2, x2, y2) => {
                match_into(c1, vars, c2, s) && match_into(x1, vars, x2, s) && match_into(y1, vars, y2, s)
            }
            _ => false,
        },
    }
}

fn match_all(ps: &[Term], ts: &[Term], vars: &BTreeSet<Sym>, s: &mut Subst) -> bool {
    ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| match_into(p, vars, t, s))
}

/// Every single-step rewrite of `subject` by `rule` in direction `dir`,
/// leftmost-outermost first. Instances whose replacement would mention an
/// unmatched rule variable are skipped, and so is a direction whose pattern
/// is a bare rule variable (it would match subterms of every type).
pub fn rewrite_with(rule: &Equation, dir: Direction, subject: &Term) -> Vec<(Position, Term)> {
    let (pattern, replacement) = dir.sides(rule);
    let vars = rule.binder_names();
    let mut out = Vec::new();
    if pattern.as_var().is_some_and(|v| vars.contains(v)) {
        return out;
    }
    subject.visit_positions(&mut |path, sub| {
        if let Some(s) = match_pattern(pattern, &vars, sub) {
            if replacement
                .vars()
                .iter()
                .all(|v| !vars.contains(v) || s.contains_key(v))
            {
                let new = substitute(replacement, &s);
                out.push((path.to_vec(), subject.replace_at(path, new).expect("valid path")));
            }
        }
    });
    out
}

/// Source of fresh variable names that avoids a growing set of taken names.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    taken: BTreeSet<Sym>,
}

impl FreshNames {
    pub fn new<'a>(taken: impl IntoIterator<Item = &'a Sym>) -> Self {
        FreshNames {
            taken: taken.into_iter().cloned().collect(),
        }
    }

    pub fn reserve(&mut self, name: &Sym) {
        self.taken.insert(name.clone());
    }

    pub fn is_taken(&self, name: &str) -> bool {
        self.taken.contains(name)
    }

    /// `base`, or `base1`, `base2`, ... whichever is free first.
    pub fn fresh(&mut self, base: &str) -> Sym {
        let name = crate::lang::fresh_name(base, |n| self.taken.contains(n));
        self.taken.insert(name.clone());
        name
    }

    /// Next unused single letter `a`..`z`, then `a1`, `b1`, ...
    pub fn letter(&mut self) -> Sym {
        for round in 0.. {
            for c in 'a'..='z' {
                let name = if round == 0 {
                    c.to_string()
                } else {
                    format!("{c}{round}")
                };
                if !self.taken.contains(name.as_str()) {
                    let s = sym(&name);
                    self.taken.insert(s.clone());
                    return s;
                }
            }
        }
        unreachable!()
    }
}

/// Result of replacing subterms by fresh variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abstraction {
    pub skeleton: Term,
    /// Fresh variable and the subterm it stands for, in introduction order.
    pub bindings: Vec<(Sym, Term)>,
    pub cost: usize,
}

impl Abstraction {
    pub fn subst(&self) -> Subst {
        self.bindings.iter().cloned().collect()
    }

    fn var_for(&mut self, t: &Term, fresh: &mut FreshNames) -> Term {
        if let Some((v, _)) = self.bindings.iter().find(|(_, b)| b == t) {
            return Term::Var(v.clone());
        }
        let v = fresh.letter();
        self.bindings.push((v.clone(), t.clone()));
        self.cost += 1;
        Term::Var(v)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("every argument is already a variable")]
pub struct NotEligible;

/// Abstracts the arguments of the arguments of an application `c p1 .. pk`:
/// leaf `pi` become fresh variables, non-leaf `pi` keep their head symbol
/// with each of their own arguments replaced. Identical subterms share a
/// variable.
pub fn abstract_args(term: &Term, fresh: &mut FreshNames) -> Result<Abstraction, NotEligible> {
    let args = term.children();
    if args.is_empty() || args.iter().all(|a| a.is_var()) {
        return Err(NotEligible);
    }
    let mut abs = Abstraction {
        skeleton: term.clone(),
        bindings: Vec::new(),
        cost: 0,
    };
    let mut new_args = Vec::with_capacity(args.len());
    for p in args {
        if p.is_leaf() {
            new_args.push(abs.var_for(p, fresh));
        } else {
            let inner: Vec<Term> = p
                .children()
                .into_iter()
                .map(|q| abs.var_for(q, fresh))
                .collect();
            new_args.push(p.with_children(inner));
        }
    }
    abs.skeleton = term.with_children(new_args);
    Ok(abs)
}

/// Outcome of [`generalize`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generalization {
    pub equation: Equation,
    /// Fresh variable and the common subterm it replaced.
    pub replaced: Vec<(Sym, Term)>,
}

/// Replaces each maximal non-leaf subterm that contains a CSR call and
/// occurs on both sides by one fresh variable, scanning the left side
/// top-down.
pub fn generalize(eq: &Equation, spec: &Spec, fresh: &mut FreshNames) -> Generalization {
    let env = TypeEnv::of(spec);
    let mut types = eq.type_map();
    let (mut lhs, mut rhs) = (eq.lhs.clone(), eq.rhs.clone());
    let mut replaced = Vec::new();
    while let Some(common) = first_common(&lhs, &rhs) {
        let ty = env
            .infer(&common, &types)
            .expect("subterm of a well-typed equation");
        let v = fresh.fresh("r");
        let var = Term::Var(v.clone());
        lhs = lhs.replace_all(&common, &var);
        rhs = rhs.replace_all(&common, &var);
        types.insert(v.clone(), ty);
        replaced.push((v, common));
    }
    if replaced.is_empty() {
        return Generalization {
            equation: eq.clone(),
            replaced,
        };
    }
    Generalization {
        equation: Equation::closed(lhs, rhs, &types),
        replaced,
    }
}

fn first_common(lhs: &Term, rhs: &Term) -> Option<Term> {
    let mut found = None;
    lhs.visit_positions(&mut |_, t| {
        if found.is_none() && !t.is_leaf() && t.contains_call() && rhs.contains_subterm(t) {
            found = Some(t.clone());
        }
    });
    found
}

fn psi_term(t: &Term) -> usize {
    let own = usize::from(t.children().iter().any(|c| !c.is_var()));
    own + t.children().into_iter().map(psi_term).sum::<usize>()
}

/// Number of composed application nodes: applications (of any head) with at
/// least one non-variable argument.
pub fn measure_psi(eq: &Equation) -> usize {
    psi_term(&eq.lhs) + psi_term(&eq.rhs)
}

/// Occurrences of `v` in `t` that are not the last argument of a CSR call.
pub fn phi_term(t: &Term, v: &str) -> usize {
    match t {
        Term::Var(x) => usize::from(&**x == v),
        Term::Call(_, args) => {
            let (last, init) = args.split_last().expect("CSR calls have arguments");
            let last_count = if last.as_var().is_some_and(|x| &**x == v) {
                0
            } else {
                phi_term(last, v)
            };
            last_count + init.iter().map(|a| phi_term(a, v)).sum::<usize>()
        }
        _ => t.children().into_iter().map(|c| phi_term(c, v)).sum(),
    }
}

pub fn measure_phi(eq: &Equation, v: &str) -> usize {
    phi_term(&eq.lhs, v) + phi_term(&eq.rhs, v)
}

/// Types of the variables of `skeleton` given the types of the terms they
/// stand for.
pub fn binding_types(
    bindings: &[(Sym, Term)],
    spec: &Spec,
    types: &BTreeMap<Sym, Type>,
) -> BTreeMap<Sym, Type> {
    let env = TypeEnv::of(spec);
    bindings
        .iter()
        .map(|(v, t)| {
            let ty = env.infer(t, types).expect("binding is well typed");
            (v.clone(), ty)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{eq, lists, term};

    fn vars(names: &[&str]) -> BTreeSet<Sym> {
        names.iter().map(|n| sym(n)).collect()
    }

    #[test]
    fn substitute_examples() {
        let spec = lists("Goal . 0 = 0;");
        let s: Subst = [(sym("xs"), term(&spec, "cons h t"))].into();
        assert_eq!(
            substitute(&term(&spec, "sum xs"), &s),
            term(&spec, "sum (cons h t)")
        );
        let t = term(&spec, "snoc x (rev x)");
        assert_eq!(substitute(&t, &Subst::new()), t);
        let s: Subst = [(sym("x"), Term::int(0))].into();
        assert_eq!(
            substitute(&term(&spec, "x + x"), &s),
            term(&spec, "0 + 0")
        );
    }

    #[test]
    fn match_examples() {
        let spec = lists("Goal . 0 = 0;");
        let s = match_pattern(
            &term(&spec, "sum (rev xs)"),
            &vars(&["xs"]),
            &term(&spec, "sum (rev (cons h t))"),
        )
        .unwrap();
        assert_eq!(s[&sym("xs")], term(&spec, "cons h t"));
        assert_eq!(
            match_pattern(&term(&spec, "sum xs"), &vars(&["xs"]), &term(&spec, "rev xs")),
            None
        );
        assert_eq!(
            match_pattern(&term(&spec, "x + x"), &vars(&["x"]), &term(&spec, "1 + 2")),
            None
        );
        // non-pattern variables only match themselves
        assert_eq!(
            match_pattern(&term(&spec, "h + x"), &vars(&["x"]), &term(&spec, "g + 1")),
            None
        );
    }

    #[test]
    fn rewrite_examples() {
        let spec = lists("Goal . 0 = 0;");
        let lemma_eq = eq(&spec, "(xs: List). sum (rev xs) = sum xs");
        let out = rewrite_with(&lemma_eq, Direction::L2R, &term(&spec, "sum (rev xs)"));
        assert_eq!(out, vec![(vec![], term(&spec, "sum xs"))]);

        let ih = eq(&spec, "(t: List). sum (rev t) = sum t");
        let out = rewrite_with(&ih, Direction::R2L, &term(&spec, "h + (sum t)"));
        assert_eq!(out, vec![(vec![1], term(&spec, "h + (sum (rev t))"))]);

        assert!(rewrite_with(&lemma_eq, Direction::L2R, &Term::int(0)).is_empty());
    }

    #[test]
    fn rewrite_positions_are_leftmost_outermost() {
        let spec = lists("Goal . 0 = 0;");
        let rule = eq(&spec, "(a: List). rev a = a");
        let out = rewrite_with(&rule, Direction::L2R, &term(&spec, "snoc 1 (rev (rev b)) "));
        let paths: Vec<Position> = out.into_iter().map(|(p, _)| p).collect();
        assert_eq!(paths, vec![vec![1], vec![1, 0]]);
    }

    #[test]
    fn abstraction_examples() {
        let spec = lists(
            "Let app (x: List) (y: List) = match y with | nil -> x | cons h t -> cons h (app x t) end;
             Goal . 0 = 0;",
        );
        let mut fresh = FreshNames::new(&[sym("a"), sym("b")]);
        let t = term(&spec, "rev (rev (app (rev a) b))");
        let abs = abstract_args(&t, &mut fresh).unwrap();
        assert_eq!(abs.skeleton, term(&spec, "rev (rev c)"));
        assert_eq!(abs.bindings, vec![(sym("c"), term(&spec, "app (rev a) b"))]);
        assert_eq!(abs.cost, 1);
        assert_eq!(substitute(&abs.skeleton, &abs.subst()), t);

        let mut fresh = FreshNames::new(&[sym("xs")]);
        let abs = abstract_args(&term(&spec, "sum (rev xs)"), &mut fresh).unwrap();
        assert_eq!(abs.skeleton, term(&spec, "sum (rev a)"));
        assert_eq!(abs.cost, 1);

        assert_eq!(
            abstract_args(&term(&spec, "rev xs"), &mut FreshNames::default()),
            Err(NotEligible)
        );
    }

    #[test]
    fn identical_subterms_share_a_variable() {
        let spec = lists("Goal . 0 = 0;");
        let t = term(&spec, "ins (sum xs) (rev xs)");
        let abs = abstract_args(&t, &mut FreshNames::new(&[sym("xs")])).unwrap();
        assert_eq!(abs.skeleton, term(&spec, "ins (sum a) (rev a)"));
        assert_eq!(abs.cost, 1);
        let t = term(&spec, "snoc (sum xs) (cons (sum xs) nil)");
        let abs = abstract_args(&t, &mut FreshNames::new(&[sym("xs")])).unwrap();
        assert_eq!(abs.skeleton, term(&spec, "snoc (sum a) (cons b c)"));
        assert_eq!(abs.cost, 3);
    }

    #[test]
    fn generalize_examples() {
        let spec = lists("Goal . 0 = 0;");
        let e = eq(&spec, "(h: Int) (t: List). sum (snoc h (rev t)) = h + (sum (rev t))");
        let g = generalize(&e, &spec, &mut FreshNames::new(&e.vars()));
        assert!(g
            .equation
            .alpha_eq(&eq(&spec, "(h: Int) (r: List). sum (snoc h r) = h + (sum r)")));

        let e = eq(&spec, "(x: Int). x + 0 = x");
        assert_eq!(generalize(&e, &spec, &mut FreshNames::default()).equation, e);

        let e = eq(&spec, "(a: List). sum (rev a) = sum (rev a) + sum (rev a)");
        let g = generalize(&e, &spec, &mut FreshNames::new(&e.vars()));
        assert!(g.equation.alpha_eq(&eq(&spec, "(r: Int). r = r + r")));
    }

    #[test]
    fn psi_examples() {
        let spec = lists("Goal . 0 = 0;");
        assert_eq!(
            measure_psi(&eq(&spec, "(xs: List). sum (rev xs) = sum (sort xs)")),
            2
        );
        assert_eq!(measure_psi(&eq(&spec, "(xs: List). sum xs = sum (sort xs)")), 1);
        assert_eq!(measure_psi(&eq(&spec, "(x: Int) (y: List). snoc x y = ins x y")), 0);
    }

    #[test]
    fn phi_examples() {
        let spec = crate::testutil::nat(
            "Let plus3 (x: Nat) (y: Nat) (z: Nat) = match z with
               | zero -> plus x y | succ t -> succ (plus3 x y t) end;
             Goal . 0 = 0;",
        );
        let e = eq(&spec, "(y: Nat) (z: Nat) (x: Nat). plus3 y z x = plus (plus x y) z");
        assert_eq!(measure_phi(&e, "x"), 1);

        let spec = lists(
            "Let app (x: List) (y: List) = match y with | nil -> x | cons h t -> cons h (app x t) end;
             Let sapp (x: List) (y: List) (z: List) = match z with
               | nil -> sum x + sum y | cons h t -> h + sapp x y t end;
             Goal . 0 = 0;",
        );
        let e = eq(&spec, "(x: List) (y: List) (z: List). sapp x y z = sum (app (app y z) x)");
        assert_eq!(measure_phi(&e, "z"), 0);
        let e = eq(&spec, "(x: Int). sum (cons x nil) = x");
        assert_eq!(phi_term(&term(&spec, "cons x nil"), "x"), 1);
        assert_eq!(measure_phi(&e, "x"), 2);
    }
}
