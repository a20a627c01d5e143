//! Directed lemma synthesis: per-constructor tasks for a CSR `f*` with
//! `f* ṽ v = p_s'`, each solved by bottom-up enumeration with
//! observational-equivalence pruning.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deduct::equation_seed;
use crate::eval::{
    apply_csr, eval_in, falsify_with, fold_op, gen_value, test_rng, EvalError, TestCase, Value,
    DEFAULT_FUEL, DEFAULT_SIZE_BOUND,
};
use crate::lang::{sym, Branch, CsrDef, Equation, Op, Spec, Sym, Term, Type, TypeEnv};
use crate::rewrite::{substitute, FreshNames, Subst};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Maximum AST size of a branch body.
    pub size_bound: usize,
    /// Tests per task.
    pub tests: usize,
    /// Fresh tests for the assembled lemma.
    pub validation_tests: usize,
    /// Spine bound for generated ADT values.
    pub value_bound: usize,
    pub fuel: u64,
    pub seed: u64,
    /// Cap on generated candidates per task, before deduplication.
    pub max_candidates: usize,
    #[serde(skip)]
    pub deadline: Option<Instant>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            size_bound: 11,
            tests: 50,
            validation_tests: 200,
            value_bound: DEFAULT_SIZE_BOUND,
            fuel: DEFAULT_FUEL,
            seed: 0,
            max_candidates: 3_000_000,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("`{0}` is not a variable of algebraic data type in the template")]
    NotAdt(String),
    #[error("no body of size <= {size_bound} for constructor `{ctor}`")]
    NotFound { ctor: String, size_bound: usize },
    #[error("test evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("assembled lemma refuted by {0}")]
    Refuted(TestCase),
    #[error("synthesis deadline reached")]
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    Base,
    Comb,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthTask {
    pub kind: TaskKind,
    pub ctor: Sym,
    /// Left side of the task's specification, `p_s'[v := c fields]`.
    pub target: Term,
    /// Pattern binders for every field, in field order.
    pub binders: Vec<Sym>,
    pub rec_index: Option<usize>,
    /// Recursive-result variable, for `Comb` tasks.
    pub result_var: Option<Sym>,
    /// Variables a body may use: prefix params, non-recursive binders and,
    /// for `Comb`, the result variable.
    pub allowed_vars: Vec<(Sym, Type)>,
    /// Assignments to `allowed_vars`.
    pub tests: Vec<TestCase>,
    /// Expected body value on each test.
    pub outputs: Vec<Value>,
    pub output_type: Type,
}

/// Parameters of `f*`: the variables of `p_s'` other than `v`, in
/// first-occurrence order, then `v`.
pub fn fstar_params(p: &Term, v: &Sym, types: &BTreeMap<Sym, Type>) -> Vec<(Sym, Type)> {
    p.vars()
        .into_iter()
        .filter(|x| x != v)
        .chain(std::iter::once(v.clone()))
        .map(|x| {
            let t = types[&x].clone();
            (x, t)
        })
        .collect()
}

/// One task per constructor of `v`'s type, with tests drawn from `seed`.
pub fn make_tasks(
    p: &Term,
    v: &Sym,
    types: &BTreeMap<Sym, Type>,
    spec: &Spec,
    config: &SynthConfig,
) -> Result<Vec<SynthTask>, SynthError> {
    let not_adt = || SynthError::NotAdt(v.to_string());
    let adt_name = match types.get(v) {
        Some(Type::Adt(n)) => n,
        _ => return Err(not_adt()),
    };
    let adt = spec.adt(adt_name).ok_or_else(not_adt)?;
    let output_type = TypeEnv::of(spec)
        .infer(p, types)
        .map_err(|_| not_adt())?;
    let params = fstar_params(p, v, types);
    let prefix: Vec<(Sym, Type)> = params[..params.len() - 1].to_vec();
    let base_seed = equation_seed(config.seed, &Equation::new(vec![], p.clone(), Term::Var(v.clone())));

    let mut tasks = Vec::new();
    for (ci, ctor) in adt.ctors.iter().enumerate() {
        let mut fresh = FreshNames::new(params.iter().map(|(n, _)| n));
        let rec_index = adt.recursive_field(ctor);
        let binders: Vec<Sym> = ctor
            .fields
            .iter()
            .enumerate()
            .map(|(i, _)| fresh.fresh(if Some(i) == rec_index { "t" } else { "h" }))
            .collect();
        let result_var = rec_index.map(|_| fresh.fresh("r"));
        let field_terms: Vec<Term> = binders.iter().map(|b| Term::Var(b.clone())).collect();
        let s: Subst = [(v.clone(), Term::Ctor(ctor.name.clone(), field_terms))].into();
        let target = substitute(p, &s);

        let mut allowed = prefix.clone();
        for (i, (b, ty)) in binders.iter().zip(&ctor.fields).enumerate() {
            if Some(i) != rec_index {
                allowed.push((b.clone(), ty.clone()));
            }
        }
        if let Some(r) = &result_var {
            allowed.push((r.clone(), output_type.clone()));
        }

        let mut tests = Vec::with_capacity(config.tests);
        let mut outputs = Vec::with_capacity(config.tests);
        for k in 0..config.tests {
            let mut rng = test_rng(base_seed.wrapping_add(ci as u64), k as u64);
            let mut env: BTreeMap<Sym, Value> = BTreeMap::new();
            for (n, ty) in &prefix {
                env.insert(n.clone(), gen_value(ty, config.value_bound, spec, &mut rng));
            }
            for (i, (b, ty)) in binders.iter().zip(&ctor.fields).enumerate() {
                let bound = if Some(i) == rec_index {
                    rng.gen_range(0..=config.value_bound.saturating_sub(1))
                } else {
                    config.value_bound
                };
                env.insert(b.clone(), gen_value(ty, bound, spec, &mut rng));
            }
            let out = eval_in(&target, &env, spec, config.fuel)?;
            if let (Some(r), Some(i)) = (&result_var, rec_index) {
                let inner: Subst = [(v.clone(), Term::Var(binders[i].clone()))].into();
                let rv = eval_in(&substitute(p, &inner), &env, spec, config.fuel)?;
                env.insert(r.clone(), rv);
            }
            let assignment = allowed
                .iter()
                .map(|(n, _)| (n.clone(), env[n].clone()))
                .collect();
            tests.push(TestCase { assignment });
            outputs.push(out);
        }
        tasks.push(SynthTask {
            kind: if rec_index.is_some() {
                TaskKind::Comb
            } else {
                TaskKind::Base
            },
            ctor: ctor.name.clone(),
            target,
            binders,
            rec_index,
            result_var,
            allowed_vars: allowed,
            tests,
            outputs,
            output_type: output_type.clone(),
        });
    }
    Ok(tasks)
}

type Sig = Arc<Vec<Value>>;

#[derive(Clone)]
struct Entry {
    term: Term,
    sig: Sig,
}

enum Prod {
    Op(Op),
    Ite,
    Ctor(Sym),
    Call(Sym),
}

struct Enumerator<'a> {
    spec: &'a Spec,
    task: &'a SynthTask,
    config: &'a SynthConfig,
    prune: bool,
    types: Vec<Type>,
    /// bank[type index][size] = entries
    bank: Vec<Vec<Vec<Entry>>>,
    seen: HashSet<(usize, Sig)>,
    generated: usize,
    found: Option<Term>,
    stop: Option<SynthError>,
}

impl<'a> Enumerator<'a> {
    fn new(spec: &'a Spec, task: &'a SynthTask, config: &'a SynthConfig, prune: bool) -> Self {
        let mut types = vec![Type::Int, Type::Bool];
        types.extend(spec.adts.iter().map(|a| Type::Adt(a.name.clone())));
        let bank = vec![vec![Vec::new(); config.size_bound + 1]; types.len()];
        Enumerator {
            spec,
            task,
            config,
            prune,
            types,
            bank,
            seen: HashSet::new(),
            generated: 0,
            found: None,
            stop: None,
        }
    }

    fn ty(&self, t: &Type) -> usize {
        self.types.iter().position(|x| x == t).expect("known type")
    }

    fn n_tests(&self) -> usize {
        self.task.tests.len()
    }

    /// Records a candidate; returns false once the search should stop.
    fn offer(&mut self, ty: usize, size: usize, term: impl FnOnce() -> Term, sig: Vec<Value>) -> bool {
        self.generated += 1;
        if self.generated.is_multiple_of(256)
            && self.config.deadline.is_some_and(|d| Instant::now() >= d) {
                self.stop = Some(SynthError::Timeout);
                return false;
            }
        if self.generated > self.config.max_candidates {
            self.stop = Some(SynthError::NotFound {
                ctor: self.task.ctor.to_string(),
                size_bound: self.config.size_bound,
            });
            return false;
        }
        let sig = Arc::new(sig);
        if self.prune && !self.seen.insert((ty, sig.clone())) {
            return true;
        }
        let term = term();
        if self.types[ty] == self.task.output_type && *sig == self.task.outputs {
            self.found = Some(term);
            return false;
        }
        self.bank[ty][size].push(Entry { term, sig });
        true
    }

    fn leaves(&mut self) -> bool {
        let vars = self.task.allowed_vars.clone();
        for (name, ty) in &vars {
            let sig = self.task.tests.iter().map(|t| t.assignment[name].clone()).collect();
            let ti = self.ty(ty);
            if !self.offer(ti, 1, || Term::Var(name.clone()), sig) {
                return false;
            }
        }
        let n = self.n_tests();
        for k in [0, 1] {
            let ti = self.ty(&Type::Int);
            if !self.offer(ti, 1, || Term::int(k), vec![Value::int(k); n]) {
                return false;
            }
        }
        let spec = self.spec;
        for adt in &spec.adts {
            for c in adt.ctors.iter().filter(|c| c.fields.is_empty()) {
                let ti = self.ty(&Type::Adt(adt.name.clone()));
                let v = Value::Adt(c.name.clone(), Vec::new().into());
                if !self.offer(ti, 1, || Term::Ctor(c.name.clone(), vec![]), vec![v; n]) {
                    return false;
                }
            }
        }
        true
    }

    fn productions(&self) -> Vec<(Prod, Vec<Type>, Type)> {
        let mut out = Vec::new();
        for op in Op::ALL {
            let (args, ret) = op.signature();
            out.push((Prod::Op(op), args.to_vec(), ret));
        }
        for t in &self.types {
            out.push((Prod::Ite, vec![Type::Bool, t.clone(), t.clone()], t.clone()));
        }
        for adt in &self.spec.adts {
            for c in adt.ctors.iter().filter(|c| !c.fields.is_empty()) {
                out.push((
                    Prod::Ctor(c.name.clone()),
                    c.fields.clone(),
                    Type::Adt(adt.name.clone()),
                ));
            }
        }
        for d in &self.spec.csrs {
            out.push((
                Prod::Call(d.name.clone()),
                d.params.iter().map(|(_, t)| t.clone()).collect(),
                d.ret.clone(),
            ));
        }
        out
    }

    fn run(mut self) -> Result<Option<Term>, SynthError> {
        if !self.leaves() {
            return self.finish();
        }
        let prods = self.productions();
        for size in 2..=self.config.size_bound {
            for (prod, args, ret) in &prods {
                if args.len() + 1 > size {
                    continue;
                }
                let arg_tys: Vec<usize> = args.iter().map(|t| self.ty(t)).collect();
                let ret_ty = self.ty(ret);
                let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(args.len());
                if !self.combine(prod, &arg_tys, ret_ty, size, size - 1, &mut chosen) {
                    return self.finish();
                }
            }
        }
        self.finish()
    }

    fn finish(self) -> Result<Option<Term>, SynthError> {
        if let Some(t) = self.found {
            return Ok(Some(t));
        }
        match self.stop {
            Some(SynthError::NotFound { .. }) | None => Ok(None),
            Some(e) => Err(e),
        }
    }

    /// Chooses argument `chosen.len()` among entries of the remaining size
    /// budget; `chosen` holds (size, index) per argument.
    fn combine(
        &mut self,
        prod: &Prod,
        arg_tys: &[usize],
        ret_ty: usize,
        size: usize,
        remaining: usize,
        chosen: &mut Vec<(usize, usize)>,
    ) -> bool {
        let i = chosen.len();
        if i == arg_tys.len() {
            return remaining != 0 || self.build(prod, arg_tys, ret_ty, size, chosen);
        }
        let rest = arg_tys.len() - i - 1;
        if remaining < rest + 1 {
            return true;
        }
        let max = remaining - rest;
        let (lo, hi) = if rest == 0 { (max, max) } else { (1, max) };
        for s in lo..=hi {
            let count = self.bank[arg_tys[i]][s].len();
            for idx in 0..count {
                chosen.push((s, idx));
                let ok = self.combine(prod, arg_tys, ret_ty, size, remaining - s, chosen);
                chosen.pop();
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    fn build(
        &mut self,
        prod: &Prod,
        arg_tys: &[usize],
        ret_ty: usize,
        size: usize,
        chosen: &[(usize, usize)],
    ) -> bool {
        let entries: Vec<&Entry> = chosen
            .iter()
            .zip(arg_tys)
            .map(|(&(s, i), &t)| &self.bank[t][s][i])
            .collect();
        let n = self.n_tests();
        let mut sig = Vec::with_capacity(n);
        for k in 0..n {
            let vals: Vec<Value> = entries.iter().map(|e| e.sig[k].clone()).collect();
            let out = match prod {
                Prod::Op(op) => fold_op(*op, &vals),
                Prod::Ite => match &vals[0] {
                    Value::Bool(true) => Some(vals[1].clone()),
                    Value::Bool(false) => Some(vals[2].clone()),
                    _ => None,
                },
                Prod::Ctor(c) => Some(Value::Adt(c.clone(), vals.into())),
                Prod::Call(f) => apply_csr(self.spec, f, vals, self.config.fuel).ok(),
            };
            match out {
                Some(v) => sig.push(v),
                None => return true,
            }
        }
        let args: Vec<Term> = entries.iter().map(|e| e.term.clone()).collect();
        let term = move || match prod {
            Prod::Op(op) => Term::Op(*op, args),
            Prod::Ite => {
                let mut it = args.into_iter();
                let c = it.next().expect("ite arity");
                let a = it.next().expect("ite arity");
                let b = it.next().expect("ite arity");
                Term::ite(c, a, b)
            }
            Prod::Ctor(c) => Term::Ctor(c.clone(), args),
            Prod::Call(f) => Term::Call(f.clone(), args),
        };
        self.offer(ret_ty, size, term, sig)
    }
}

/// Smallest body (ties broken by enumeration order) matching the task's
/// outputs on every test.
pub fn enumerate(task: &SynthTask, spec: &Spec, config: &SynthConfig) -> Result<Option<Term>, SynthError> {
    enumerate_with(task, spec, config, true)
}

/// [`enumerate`] with observational-equivalence pruning switchable.
pub fn enumerate_with(
    task: &SynthTask,
    spec: &Spec,
    config: &SynthConfig,
    prune: bool,
) -> Result<Option<Term>, SynthError> {
    Enumerator::new(spec, task, config, prune).run()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synthesized {
    /// The new CSR, or the existing one it is α-equivalent to.
    pub csr: CsrDef,
    /// Whether `csr` is an existing definition.
    pub reused: bool,
    /// `∀ṽ v. f* ṽ v = p_s'`.
    pub lemma: Equation,
}

/// Solves every task for `p_s'` and `v`, assembles `f*` named `name`,
/// reuses an α-equivalent existing CSR if there is one, and validates the
/// lemma on fresh tests.
pub fn synthesize_csr(
    p: &Term,
    v: &Sym,
    types: &BTreeMap<Sym, Type>,
    name: &str,
    spec: &Spec,
    config: &SynthConfig,
) -> Result<Synthesized, SynthError> {
    let tasks = make_tasks(p, v, types, spec, config)?;
    let mut branches = Vec::with_capacity(tasks.len());
    for task in &tasks {
        let body = enumerate(task, spec, config)?.ok_or_else(|| SynthError::NotFound {
            ctor: task.ctor.to_string(),
            size_bound: config.size_bound,
        })?;
        branches.push(Branch {
            ctor: task.ctor.clone(),
            binders: task.binders.clone(),
            rec_result: task.result_var.clone(),
            rec_index: task.rec_index,
            body,
        });
    }
    let params = fstar_params(p, v, types);
    let ret = tasks
        .first()
        .map(|t| t.output_type.clone())
        .ok_or_else(|| SynthError::NotAdt(v.to_string()))?;
    let fresh_def = CsrDef {
        name: sym(name),
        params: params.clone(),
        ret,
        branches,
    };
    let (csr, reused) = match spec.csrs.iter().find(|d| d.alpha_eq(&fresh_def)) {
        Some(existing) => (existing.clone(), true),
        None => (fresh_def, false),
    };
    let call = Term::Call(
        csr.name.clone(),
        params.iter().map(|(n, _)| Term::Var(n.clone())).collect(),
    );
    let lemma = Equation::closed(call, p.clone(), types);

    let mut extended = spec.clone();
    if !reused {
        extended.add_csr(csr.clone());
    }
    let seed = equation_seed(config.seed ^ 0x5eed, &lemma);
    if let Some(cex) = falsify_with(
        &lemma,
        &extended,
        config.validation_tests,
        seed,
        config.value_bound,
        config.fuel,
    )? {
        return Err(SynthError::Refuted(cex));
    }
    Ok(Synthesized { csr, reused, lemma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{lists, nat, term};
    use std::time::Duration;

    fn types(pairs: &[(&str, Type)]) -> BTreeMap<Sym, Type> {
        pairs.iter().map(|(n, t)| (sym(n), t.clone())).collect()
    }

    fn list_ty() -> Type {
        Type::Adt(sym("List"))
    }

    #[test]
    fn sum_rev_tasks() {
        let spec = lists("Goal . 0 = 0;");
        let p = term(&spec, "sum (rev a)");
        let tys = types(&[("a", list_ty())]);
        let cfg = SynthConfig::default();
        let tasks = make_tasks(&p, &sym("a"), &tys, &spec, &cfg).unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[0].kind, TaskKind::Base);
        assert_eq!(tasks[0].target, term(&spec, "sum (rev nil)"));
        assert_eq!(tasks[1].kind, TaskKind::Comb);
        assert_eq!(tasks[1].target, term(&spec, "sum (rev (cons h t))"));
        let allowed: Vec<&str> = tasks[1].allowed_vars.iter().map(|(n, _)| &**n).collect();
        assert_eq!(allowed, vec!["h", "r"]);

        let t0 = Instant::now();
        assert_eq!(enumerate(&tasks[0], &spec, &cfg).unwrap(), Some(Term::int(0)));
        assert!(t0.elapsed() < Duration::from_secs(5));
        let t1 = Instant::now();
        assert_eq!(
            enumerate(&tasks[1], &spec, &cfg).unwrap(),
            Some(term(&spec, "h + r"))
        );
        assert!(t1.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn comb_outputs_follow_the_recursive_result() {
        // Oracle: the comb spec says output = h + r for sum∘rev.
        let spec = lists("Goal . 0 = 0;");
        let p = term(&spec, "sum (rev a)");
        let tys = types(&[("a", list_ty())]);
        let tasks = make_tasks(&p, &sym("a"), &tys, &spec, &SynthConfig::default()).unwrap();
        let comb = &tasks[1];
        for (tc, out) in comb.tests.iter().zip(&comb.outputs) {
            let (Value::Int(h), Value::Int(r)) =
                (&tc.assignment[&sym("h")], &tc.assignment[&sym("r")])
            else {
                panic!("integer inputs")
            };
            assert_eq!(*out, Value::Int(h + r));
        }
    }

    #[test]
    fn excluded_variable_is_not_found() {
        let spec = lists("Goal . 0 = 0;");
        let p = term(&spec, "sum (rev a)");
        let tys = types(&[("a", list_ty())]);
        let cfg = SynthConfig {
            size_bound: 5,
            ..SynthConfig::default()
        };
        let mut task = make_tasks(&p, &sym("a"), &tys, &spec, &cfg).unwrap().remove(1);
        // target h, but only r is available
        task.outputs = task
            .tests
            .iter()
            .map(|t| t.assignment[&sym("h")].clone())
            .collect();
        task.allowed_vars.retain(|(n, _)| &**n == "r");
        for t in &mut task.tests {
            t.assignment.remove(&sym("h"));
        }
        assert_eq!(enumerate(&task, &spec, &cfg).unwrap(), None);
    }

    #[test]
    fn sum_rev_dedups_to_sum() {
        let spec = lists("Goal . 0 = 0;");
        let p = term(&spec, "sum (rev a)");
        let tys = types(&[("a", list_ty())]);
        let s = synthesize_csr(&p, &sym("a"), &tys, "f_1", &spec, &SynthConfig::default()).unwrap();
        assert!(s.reused);
        assert_eq!(&*s.csr.name, "sum");
        assert_eq!(s.lemma.to_string(), "sum a = sum (rev a)");
    }

    #[test]
    fn plus_template_yields_commutativity() {
        let spec = nat("Goal . 0 = 0;");
        let nat_ty = Type::Adt(sym("Nat"));
        let p = term(&spec, "plus a b");
        let tys = types(&[("a", nat_ty.clone()), ("b", nat_ty)]);
        let s = synthesize_csr(&p, &sym("a"), &tys, "f_1", &spec, &SynthConfig::default()).unwrap();
        assert_eq!(s.lemma.to_string(), "plus b a = plus a b");
    }

    #[test]
    fn identity_template() {
        let spec = lists("Goal . 0 = 0;");
        let tys = types(&[("a", list_ty())]);
        let s = synthesize_csr(
            &Term::var("a"),
            &sym("a"),
            &tys,
            "f_1",
            &spec,
            &SynthConfig::default(),
        )
        .unwrap();
        assert!(!s.reused);
        assert_eq!(s.csr.branch("nil").unwrap().body, term(&spec, "nil"));
        assert_eq!(s.csr.branch("cons").unwrap().body, term(&spec, "cons h r"));
    }

    #[test]
    fn runaway_evaluation_fails_synthesis() {
        let spec = nat(
            "Let dbl (n: Nat) = match n with | zero -> zero | succ t -> succ (succ (dbl t)) end;
             Let exp2 (n: Nat) = match n with | zero -> succ zero | succ t -> dbl (exp2 t) end;
             Goal . 0 = 0;",
        );
        let p = term(&spec, "exp2 (exp2 a)");
        let tys = types(&[("a", Type::Adt(sym("Nat")))]);
        let r = synthesize_csr(&p, &sym("a"), &tys, "f_1", &spec, &SynthConfig::default());
        assert!(matches!(r, Err(SynthError::Eval(EvalError::FuelExhausted(_)))));
    }

    #[test]
    fn pruning_is_lossless_on_small_bounds() {
        let spec = lists("Goal . 0 = 0;");
        let p = term(&spec, "sum (rev a)");
        let tys = types(&[("a", list_ty())]);
        let cfg = SynthConfig {
            size_bound: 4,
            tests: 10,
            ..SynthConfig::default()
        };
        for task in make_tasks(&p, &sym("a"), &tys, &spec, &cfg).unwrap() {
            let a = enumerate_with(&task, &spec, &cfg, true).unwrap();
            let b = enumerate_with(&task, &spec, &cfg, false).unwrap();
            assert_eq!(a.map(|t| t.size()), b.map(|t| t.size()));
        }
    }
}
