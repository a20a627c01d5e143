//! Independent replay of proof traces. Shares only the term language with
//! the prover; normalization, arithmetic canonicalization and matching are
//! reimplemented here.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::deduct::{DeductProof, Finish, StepKind};
use crate::eval::{eval_in, TestCase, DEFAULT_FUEL};
use crate::lang::{CsrDef, Equation, Op, Side, Spec, Sym, Term, Type, TypeEnv};
use crate::rewrite::Direction;
use crate::trace::{Justification, NodeKind, ProofNode, ProofTrace};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("invalid definition `{name}`: {reason}")]
    Definition { name: String, reason: String },
    #[error("at {path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("at {0}: open goal")]
    Incomplete(String),
}

type Map = BTreeMap<Sym, Term>;

fn subst(t: &Term, s: &Map) -> Term {
    match t {
        Term::Var(v) => s.get(v).cloned().unwrap_or_else(|| t.clone()),
        _ => t.with_children(t.children().into_iter().map(|c| subst(c, s)).collect()),
    }
}

fn pmatch(p: &Term, vars: &BTreeSet<Sym>, t: &Term, s: &mut Map) -> bool {
    if let Term::Var(v) = p {
        if vars.contains(v) {
            return match s.get(v) {
                Some(b) => b == t,
                None => {
                    s.insert(v.clone(), t.clone());
                    true
                }
            };
        }
    }
    let (pc, tc) = (p.children(), t.children());
    if pc.len() != tc.len() || p.with_children(tc.iter().map(|c| (*c).clone()).collect()) != *t {
        return false;
    }
    pc.iter().zip(tc).all(|(a, b)| pmatch(a, vars, b, s))
}

fn unfold(spec: &Spec, f: &str, args: &[Term]) -> Option<Term> {
    let def = spec.csr(f)?;
    let Term::Ctor(c, fields) = args.last()? else {
        return None;
    };
    let br = def.branches.iter().find(|b| b.ctor == *c)?;
    let mut s: Map = def
        .params
        .iter()
        .map(|(p, _)| p.clone())
        .zip(args.iter().cloned())
        .collect();
    s.extend(br.binders.iter().cloned().zip(fields.iter().cloned()));
    if let (Some(r), Some(i)) = (&br.rec_result, br.rec_index) {
        let mut inner = args.to_vec();
        *inner.last_mut()? = fields[i].clone();
        s.insert(r.clone(), Term::Call(def.name.clone(), inner));
    }
    Some(subst(&br.body, &s))
}

fn as_int(t: &Term) -> Option<&BigInt> {
    if let Term::Int(v) = t {
        Some(v)
    } else {
        None
    }
}

fn as_bool(t: &Term) -> Option<bool> {
    if let Term::Bool(b) = t {
        Some(*b)
    } else {
        None
    }
}

fn op_rule(op: Op, a: Vec<Term>) -> Term {
    let int = |k: i64, t: &Term| as_int(t) == Some(&BigInt::from(k));
    let ints = (a.first().and_then(as_int), a.get(1).and_then(as_int));
    let bools = (a.first().and_then(as_bool), a.get(1).and_then(as_bool));
    match (op, ints, bools) {
        (Op::Add, (Some(x), Some(y)), _) => Term::Int(x + y),
        (Op::Sub, (Some(x), Some(y)), _) => Term::Int(x - y),
        (Op::Mul, (Some(x), Some(y)), _) => Term::Int(x * y),
        (Op::Le, (Some(x), Some(y)), _) => Term::Bool(x <= y),
        (Op::Lt, (Some(x), Some(y)), _) => Term::Bool(x < y),
        (Op::Eq, (Some(x), Some(y)), _) => Term::Bool(x == y),
        (Op::And, _, (Some(x), Some(y))) => Term::Bool(x && y),
        (Op::Or, _, (Some(x), Some(y))) => Term::Bool(x || y),
        (Op::Not, _, (Some(x), _)) => Term::Bool(!x),
        (Op::Add, _, _) if int(0, &a[0]) => a[1].clone(),
        (Op::Add | Op::Sub, _, _) if int(0, &a[1]) => a[0].clone(),
        (Op::Sub, _, _) if a[0] == a[1] => Term::int(0),
        (Op::Mul, _, _) if int(0, &a[0]) || int(0, &a[1]) => Term::int(0),
        (Op::Mul, _, _) if int(1, &a[0]) => a[1].clone(),
        (Op::Mul, _, _) if int(1, &a[1]) => a[0].clone(),
        (Op::And, _, (Some(false), _) | (_, Some(false))) => Term::Bool(false),
        (Op::And, _, (Some(true), _)) => a[1].clone(),
        (Op::And, _, (_, Some(true))) => a[0].clone(),
        (Op::Or, _, (Some(true), _) | (_, Some(true))) => Term::Bool(true),
        (Op::Or, _, (Some(false), _)) => a[1].clone(),
        (Op::Or, _, (_, Some(false))) => a[0].clone(),
        (Op::Not, _, _) => match &a[0] {
            Term::Op(Op::Not, inner) => inner[0].clone(),
            _ => Term::Op(op, a),
        },
        (Op::Le | Op::Eq, _, _) if a[0] == a[1] => Term::Bool(true),
        (Op::Lt, _, _) if a[0] == a[1] => Term::Bool(false),
        _ => Term::Op(op, a),
    }
}

/// Bottom-up evaluation of an open term as far as its constructors allow.
fn reduce(t: &Term, spec: &Spec) -> Term {
    let node = t.with_children(t.children().into_iter().map(|c| reduce(c, spec)).collect());
    match node {
        Term::Call(f, args) => match args.last() {
            Some(Term::Ctor(..)) => match unfold(spec, &f, &args) {
                Some(body) => reduce(&body, spec),
                None => Term::Call(f, args),
            },
            Some(Term::Ite(c, x, y)) => {
                let with = |last: &Term| {
                    let mut v = args.clone();
                    *v.last_mut().expect("nonempty") = last.clone();
                    Term::Call(f.clone(), v)
                };
                let lifted = Term::Ite(c.clone(), Box::new(with(x)), Box::new(with(y)));
                reduce(&lifted, spec)
            }
            _ => Term::Call(f, args),
        },
        Term::Op(op, args) => op_rule(op, args),
        Term::Ite(c, x, y) => match as_bool(&c) {
            Some(true) => *x,
            Some(false) => *y,
            None if x == y => *x,
            None => Term::Ite(c, x, y),
        },
        other => other,
    }
}

type Poly = BTreeMap<Vec<String>, BigInt>;

fn poly(t: &Term) -> Poly {
    let merge = |mut a: Poly, b: Poly, neg: bool| {
        for (m, c) in b {
            let slot = a.entry(m).or_default();
            if neg {
                *slot -= c;
            } else {
                *slot += c;
            }
        }
        a.retain(|_, c| !c.is_zero());
        a
    };
    match t {
        Term::Int(v) if v.is_zero() => Poly::new(),
        Term::Int(v) => [(Vec::new(), v.clone())].into(),
        Term::Op(Op::Add, a) => merge(poly(&a[0]), poly(&a[1]), false),
        Term::Op(Op::Sub, a) => merge(poly(&a[0]), poly(&a[1]), true),
        Term::Op(Op::Mul, a) => {
            let (x, y) = (poly(&a[0]), poly(&a[1]));
            let mut out = Poly::new();
            for (mx, cx) in &x {
                for (my, cy) in &y {
                    let mut m: Vec<String> = mx.iter().chain(my).cloned().collect();
                    m.sort();
                    *out.entry(m).or_default() += cx * cy;
                }
            }
            out.retain(|_, c| !c.is_zero());
            out
        }
        other => [(vec![key(other)], BigInt::one())].into(),
    }
}

/// Text that two terms share iff they are equal modulo commutative-ring
/// laws on integer arithmetic.
fn key(t: &Term) -> String {
    match t {
        Term::Op(Op::Add | Op::Sub | Op::Mul, _) => {
            let parts: Vec<String> = poly(t)
                .into_iter()
                .map(|(m, c)| format!("{c}*[{}]", m.join(",")))
                .collect();
            format!("poly({})", parts.join(" "))
        }
        Term::Var(v) => format!("v:{v}"),
        Term::Int(v) => v.to_string(),
        Term::Bool(b) => b.to_string(),
        _ => {
            let head = t.with_children(vec![Term::int(0); t.children().len()]);
            let args: Vec<String> = t.children().into_iter().map(key).collect();
            format!("{head:?}<{}>", args.join(","))
        }
    }
}

fn same(a: &Term, b: &Term) -> bool {
    a == b || key(a) == key(b)
}

/// Equal under evaluation of known constructors and ring laws.
fn equivalent(a: &Term, b: &Term, spec: &Spec) -> bool {
    same(a, b) || same(&reduce(a, spec), &reduce(b, spec))
}

fn same_sides(a: &Equation, b: &Equation) -> bool {
    a.lhs == b.lhs && a.rhs == b.rhs
}

fn free(eq: &Equation) -> BTreeSet<Sym> {
    let bound: BTreeSet<Sym> = eq.binders.iter().map(|(n, _)| n.clone()).collect();
    eq.vars().into_iter().filter(|v| !bound.contains(v)).collect()
}

fn all_names(eq: &Equation) -> BTreeSet<Sym> {
    let mut s: BTreeSet<Sym> = eq.vars().into_iter().collect();
    s.extend(eq.binders.iter().map(|(n, _)| n.clone()));
    s
}

fn check_def(spec: &Spec, def: &CsrDef) -> Result<(), CheckError> {
    let bad = |reason: &str| CheckError::Definition {
        name: def.name.to_string(),
        reason: reason.into(),
    };
    if spec.csr(&def.name).is_some() || spec.is_ctor(&def.name) {
        return Err(bad("name already defined"));
    }
    let (_, Type::Adt(adt_name)) = def.params.last().ok_or_else(|| bad("no parameters"))? else {
        return Err(bad("last parameter is not algebraic"));
    };
    let adt = spec.adt(adt_name).ok_or_else(|| bad("unknown type"))?;
    if adt.ctors.len() != def.branches.len() {
        return Err(bad("wrong number of branches"));
    }
    for (c, b) in adt.ctors.iter().zip(&def.branches) {
        let rec = adt.recursive_field(c);
        if b.ctor != c.name || b.binders.len() != c.fields.len() || b.rec_index != rec {
            return Err(bad("branch does not match its constructor"));
        }
        if b.rec_result.is_some() != rec.is_some() {
            return Err(bad("recursive result does not match constructor"));
        }
    }
    let ret = TypeEnv::of(spec)
        .infer_csr_return(def)
        .map_err(|e| bad(&e.to_string()))?;
    if ret != def.ret {
        return Err(bad("declared return type differs"));
    }
    Ok(())
}

struct Checker {
    spec: Spec,
}

impl Checker {
    fn invalid(path: &str, reason: impl Into<String>) -> CheckError {
        CheckError::Invalid {
            path: path.to_string(),
            reason: reason.into(),
        }
    }

    fn node(&self, node: &ProofNode, premises: &[Equation], path: &str) -> Result<(), CheckError> {
        match &node.justification {
            Justification::Failure { .. } => Err(CheckError::Incomplete(path.to_string())),
            Justification::Deduct {
                premises: used,
                proof,
            } => {
                if node.kind != NodeKind::Deduct || !node.children.is_empty() {
                    return Err(Self::invalid(path, "malformed deduction node"));
                }
                for p in used {
                    if !premises.contains(p) {
                        return Err(Self::invalid(path, format!("premise `{p}` is not available")));
                    }
                }
                self.deduct(
                    proof,
                    node.equation.lhs.clone(),
                    node.equation.rhs.clone(),
                    used,
                    &node.equation.type_map(),
                    path,
                )
            }
            Justification::Induction { var, .. } => self.induction(node, var, premises, path),
            Justification::Tactic {
                pattern,
                lemma,
                transformed,
                ..
            } => self.tactic(node, pattern, lemma, transformed, premises, path),
            Justification::Case { .. } => Err(Self::invalid(path, "case outside an induction")),
        }
    }

    fn deduct(
        &self,
        proof: &DeductProof,
        mut lhs: Term,
        mut rhs: Term,
        premises: &[Equation],
        types: &BTreeMap<Sym, Type>,
        path: &str,
    ) -> Result<(), CheckError> {
        for (i, step) in proof.steps.iter().enumerate() {
            let here = format!("{path}/step{i}");
            let cur = match step.side {
                Side::Lhs => &mut lhs,
                Side::Rhs => &mut rhs,
            };
            let ok = match &step.kind {
                StepKind::Normalize => equivalent(cur, &step.result, &self.spec),
                StepKind::Canon => same(cur, &step.result),
                StepKind::Rewrite { premise, dir, pos } => {
                    let rule = premises
                        .get(*premise)
                        .ok_or_else(|| Self::invalid(&here, "premise index out of range"))?;
                    let (from, to) = match dir {
                        Direction::L2R => (&rule.lhs, &rule.rhs),
                        Direction::R2L => (&rule.rhs, &rule.lhs),
                    };
                    let vars: BTreeSet<Sym> = rule.binders.iter().map(|(n, _)| n.clone()).collect();
                    let mut s = Map::new();
                    let sub = cur.at(pos).ok_or_else(|| Self::invalid(&here, "bad position"))?;
                    pmatch(from, &vars, sub, &mut s)
                        && to.vars().iter().all(|v| !vars.contains(v) || s.contains_key(v))
                        && cur.replace_at(pos, subst(to, &s)).as_ref() == Some(&step.result)
                }
            };
            if !ok {
                return Err(Self::invalid(&here, "step not justified"));
            }
            *cur = step.result.clone();
        }
        match &proof.finish {
            Finish::Joinable => {
                if same(&lhs, &rhs) {
                    Ok(())
                } else {
                    Err(Self::invalid(path, "sides differ at the end"))
                }
            }
            Finish::Split {
                cond,
                on_true,
                on_false,
            } => {
                if TypeEnv::of(&self.spec).infer(cond, types).ok() != Some(Type::Bool) {
                    return Err(Self::invalid(path, "split on a non-boolean term"));
                }
                for (b, sub) in [(true, on_true), (false, on_false)] {
                    let v = Term::Bool(b);
                    self.deduct(
                        sub,
                        lhs.replace_all(cond, &v),
                        rhs.replace_all(cond, &v),
                        premises,
                        types,
                        &format!("{path}/{b}"),
                    )?;
                }
                Ok(())
            }
        }
    }

    fn induction(
        &self,
        node: &ProofNode,
        var: &Sym,
        premises: &[Equation],
        path: &str,
    ) -> Result<(), CheckError> {
        let eq = &node.equation;
        let Some(Type::Adt(adt_name)) = eq.binder_type(var) else {
            return Err(Self::invalid(path, "induction variable is not an algebraic binder"));
        };
        let adt = self
            .spec
            .adt(adt_name)
            .ok_or_else(|| Self::invalid(path, "unknown type"))?;
        if node.children.len() != adt.ctors.len() {
            return Err(Self::invalid(path, "cases do not cover the constructors"));
        }
        let mut taken = all_names(eq);
        for p in premises {
            taken.extend(all_names(p));
        }
        let inherited: Vec<Equation> = premises
            .iter()
            .filter(|p| !free(p).contains(var))
            .cloned()
            .collect();

        for (ctor, case) in adt.ctors.iter().zip(&node.children) {
            let here = format!("{path}/{}", ctor.name);
            let Justification::Case {
                ctor: cname,
                fields,
                ih,
                reduced,
                ih_applied,
                after_ih,
                generalization,
            } = &case.justification
            else {
                return Err(Self::invalid(&here, "expected a case"));
            };
            if *cname != ctor.name || fields.len() != ctor.fields.len() || case.children.len() != 1 {
                return Err(Self::invalid(&here, "malformed case"));
            }
            let distinct: BTreeSet<&Sym> = fields.iter().collect();
            if distinct.len() != fields.len() || fields.iter().any(|f| taken.contains(f)) {
                return Err(Self::invalid(&here, "pattern variables are not fresh"));
            }
            let inst: Map = [(
                var.clone(),
                Term::Ctor(ctor.name.clone(), fields.iter().cloned().map(Term::Var).collect()),
            )]
            .into();
            if case.equation.lhs != subst(&eq.lhs, &inst) || case.equation.rhs != subst(&eq.rhs, &inst) {
                return Err(Self::invalid(&here, "case equation is not the instance"));
            }
            if !equivalent(&case.equation.lhs, &reduced.lhs, &self.spec)
                || !equivalent(&case.equation.rhs, &reduced.rhs, &self.spec)
            {
                return Err(Self::invalid(&here, "reduction not justified"));
            }

            let mut sub_premises = inherited.clone();
            let rec = adt.recursive_field(ctor);
            match (rec, ih) {
                (None, None) => {}
                (Some(i), Some(ih)) => {
                    let s: Map = [(var.clone(), Term::Var(fields[i].clone()))].into();
                    let expected = Equation::new(Vec::new(), subst(&eq.lhs, &s), subst(&eq.rhs, &s));
                    if *ih != expected {
                        return Err(Self::invalid(&here, "wrong induction hypothesis"));
                    }
                    sub_premises.push(ih.clone());
                }
                _ => return Err(Self::invalid(&here, "hypothesis does not match constructor")),
            }
            let applied_ok = match (ih_applied, ih) {
                (None, _) => same_sides(after_ih, reduced),
                (Some(app), Some(ih)) => {
                    let (from, to) = match app.dir {
                        Direction::L2R => (&ih.lhs, &ih.rhs),
                        Direction::R2L => (&ih.rhs, &ih.lhs),
                    };
                    let s = app.side;
                    *after_ih.side(s) == reduced.side(s).replace_all(from, to)
                        && after_ih.side(s.other()) == reduced.side(s.other())
                }
                (Some(_), None) => false,
            };
            if !applied_ok {
                return Err(Self::invalid(&here, "hypothesis application not justified"));
            }
            let next = match generalization {
                None => after_ih.clone(),
                Some(g) => {
                    let mut used = taken.clone();
                    used.extend(all_names(after_ih));
                    used.extend(fields.iter().cloned());
                    if g.replaced.iter().any(|(v, _)| used.contains(v)) {
                        return Err(Self::invalid(&here, "generalization variable is not fresh"));
                    }
                    let (mut l, mut r) = (g.equation.lhs.clone(), g.equation.rhs.clone());
                    for (v, t) in g.replaced.iter().rev() {
                        let s: Map = [(v.clone(), t.clone())].into();
                        l = subst(&l, &s);
                        r = subst(&r, &s);
                    }
                    if l != after_ih.lhs || r != after_ih.rhs {
                        return Err(Self::invalid(&here, "generalization does not instantiate back"));
                    }
                    g.equation.clone()
                }
            };
            let child = &case.children[0];
            if !same_sides(&child.equation, &next) {
                return Err(Self::invalid(&here, "subgoal differs from the case result"));
            }
            self.node(child, &sub_premises, &here)?;
        }
        Ok(())
    }

    /// Whether `t` turns into `u` by replacing instances of the lemma's
    /// right side with its left side.
    fn related(&self, t: &Term, u: &Term, lemma: &Equation, vars: &BTreeSet<Sym>) -> bool {
        if t == u {
            return true;
        }
        let (mut st, mut su) = (Map::new(), Map::new());
        if pmatch(&lemma.lhs, vars, u, &mut su) && pmatch(&lemma.rhs, vars, t, &mut st) {
            let ok = vars.iter().all(|v| match (st.get(v), su.get(v)) {
                (Some(a), Some(b)) => self.related(a, b, lemma, vars),
                (None, None) => true,
                _ => false,
            });
            if ok {
                return true;
            }
        }
        let (tc, uc) = (t.children(), u.children());
        tc.len() == uc.len()
            && !tc.is_empty()
            && t.with_children(uc.iter().map(|c| (*c).clone()).collect()) == *u
            && tc.iter().zip(uc).all(|(a, b)| self.related(a, b, lemma, vars))
    }

    fn tactic(
        &self,
        node: &ProofNode,
        pattern: &Term,
        lemma: &Equation,
        transformed: &Equation,
        premises: &[Equation],
        path: &str,
    ) -> Result<(), CheckError> {
        let Term::Call(f, args) = &lemma.lhs else {
            return Err(Self::invalid(path, "lemma is not headed by a call"));
        };
        if self.spec.csr(f).is_none() || args.iter().any(|a| !a.is_var()) {
            return Err(Self::invalid(path, "lemma head is not a defined CSR on variables"));
        }
        if lemma.rhs != *pattern || !free(lemma).is_empty() {
            return Err(Self::invalid(path, "lemma does not match its template"));
        }
        let vars: BTreeSet<Sym> = lemma.binders.iter().map(|(n, _)| n.clone()).collect();
        let eq = &node.equation;
        if !self.related(&eq.lhs, &transformed.lhs, lemma, &vars)
            || !self.related(&eq.rhs, &transformed.rhs, lemma, &vars)
        {
            return Err(Self::invalid(path, "transformed goal is not a lemma rewrite"));
        }
        let [lemma_node, next] = node.children.as_slice() else {
            return Err(CheckError::Incomplete(path.to_string()));
        };
        if !same_sides(&lemma_node.equation, lemma) || !same_sides(&next.equation, transformed) {
            return Err(Self::invalid(path, "children prove the wrong equations"));
        }
        let closed: Vec<Equation> = premises
            .iter()
            .filter(|p| free(p).is_empty())
            .cloned()
            .collect();
        self.node(lemma_node, &closed, &format!("{path}/lemma"))?;
        let mut extended = premises.to_vec();
        extended.push(lemma.clone());
        self.node(next, &extended, &format!("{path}/rest"))
    }
}

/// Replays a complete trace of `spec`'s goal.
pub fn check_trace(spec: &Spec, trace: &ProofTrace) -> Result<(), CheckError> {
    let mut extended = spec.clone();
    for def in &trace.synthesized {
        check_def(&extended, def)?;
        extended.add_csr(def.clone());
    }
    if !same_sides(&trace.root.equation, &spec.goal) {
        return Err(Checker::invalid("root", "root is not the goal"));
    }
    Checker { spec: extended }.node(&trace.root, &[], "root")
}

/// Whether `cex` makes the two sides of `eq` evaluate differently.
pub fn check_counterexample(spec: &Spec, eq: &Equation, cex: &TestCase) -> bool {
    let l = eval_in(&eq.lhs, &cex.assignment, spec, DEFAULT_FUEL);
    let r = eval_in(&eq.rhs, &cex.assignment, spec, DEFAULT_FUEL);
    matches!((l, r), (Ok(a), Ok(b)) if a != b)
}
