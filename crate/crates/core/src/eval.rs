//! Reduction semantics, a fuel-bounded evaluator, random value generation
//! and test-based falsification.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hasher;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{pretty_term, Equation, Op, Spec, Sym, Term, Type};
use crate::rewrite::{substitute, Subst};

pub const DEFAULT_FUEL: u64 = 20_000;
pub const INT_RANGE: i64 = 8;
pub const DEFAULT_SIZE_BOUND: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Adt(Sym, Arc<[Value]>),
}

impl Value {
    pub fn int(v: i64) -> Value {
        Value::Int(BigInt::from(v))
    }

    pub fn adt(ctor: &str, fields: Vec<Value>) -> Value {
        Value::Adt(crate::lang::sym(ctor), fields.into())
    }

    pub fn to_term(&self) -> Term {
        match self {
            Value::Int(v) => Term::Int(v.clone()),
            Value::Bool(b) => Term::Bool(*b),
            Value::Adt(c, fields) => {
                Term::Ctor(c.clone(), fields.iter().map(Value::to_term).collect())
            }
        }
    }

    /// Reads back a term built only from constants and constructors.
    pub fn from_term(t: &Term) -> Option<Value> {
        match t {
            Term::Int(v) => Some(Value::Int(v.clone())),
            Term::Bool(b) => Some(Value::Bool(*b)),
            Term::Ctor(c, args) => {
                let fields = args.iter().map(Value::from_term).collect::<Option<Vec<_>>>()?;
                Some(Value::Adt(c.clone(), fields.into()))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_term(&self.to_term()))
    }
}

/// An assignment of values to the quantified variables of an equation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub assignment: BTreeMap<Sym, Value>,
}

impl fmt::Display for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .assignment
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation exceeded {0} steps")]
    FuelExhausted(u64),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("ill-formed term `{0}`")]
    Stuck(String),
}

pub(crate) fn fold_op(op: Op, args: &[Value]) -> Option<Value> {
    use Value::{Bool, Int};
    Some(match (op, args) {
        (Op::Add, [Int(a), Int(b)]) => Int(a + b),
        (Op::Sub, [Int(a), Int(b)]) => Int(a - b),
        (Op::Mul, [Int(a), Int(b)]) => Int(a * b),
        (Op::Le, [Int(a), Int(b)]) => Bool(a <= b),
        (Op::Lt, [Int(a), Int(b)]) => Bool(a < b),
        (Op::Eq, [Int(a), Int(b)]) => Bool(a == b),
        (Op::And, [Bool(a), Bool(b)]) => Bool(*a && *b),
        (Op::Or, [Bool(a), Bool(b)]) => Bool(*a || *b),
        (Op::Not, [Bool(a)]) => Bool(!a),
        _ => return None,
    })
}

/// Substitution that unfolds `f args` one level when the recursive argument
/// is constructor-headed: prefix params, the scrutinee itself, the pattern
/// binders and (for recursive constructors) the recursive result.
pub(crate) fn unfold_call(spec: &Spec, f: &str, args: &[Term]) -> Option<Term> {
    let def = spec.csr(f)?;
    let Term::Ctor(c, fields) = args.last()? else {
        return None;
    };
    let branch = def.branch(c)?;
    let mut s = Subst::new();
    for ((p, _), a) in def.params.iter().zip(args) {
        s.insert(p.clone(), a.clone());
    }
    for (b, v) in branch.binders.iter().zip(fields) {
        s.insert(b.clone(), v.clone());
    }
    if let (Some(r), Some(i)) = (&branch.rec_result, branch.rec_index) {
        let mut rec_args = args[..args.len() - 1].to_vec();
        rec_args.push(fields[i].clone());
        s.insert(r.clone(), Term::Call(def.name.clone(), rec_args));
    }
    Some(substitute(&branch.body, &s))
}

/// One leftmost-innermost reduction step, or `None` if no redex exists.
pub fn reduce_step(term: &Term, spec: &Spec) -> Option<Term> {
    for (i, c) in term.children().into_iter().enumerate() {
        if let Some(reduced) = reduce_step(c, spec) {
            let mut children: Vec<Term> = term.children().into_iter().cloned().collect();
            children[i] = reduced;
            return Some(term.with_children(children));
        }
    }
    match term {
        Term::Op(op, args) => {
            let vals = args.iter().map(Value::from_term).collect::<Option<Vec<_>>>()?;
            fold_op(*op, &vals).map(|v| v.to_term())
        }
        Term::Call(f, args) => unfold_call(spec, f, args),
        Term::Ite(c, a, b) => match **c {
            Term::Bool(true) => Some((**a).clone()),
            Term::Bool(false) => Some((**b).clone()),
            _ => None,
        },
        _ => None,
    }
}

struct Evaluator<'a> {
    spec: &'a Spec,
    fuel: u64,
    budget: u64,
}

type Env = BTreeMap<Sym, Value>;

impl Evaluator<'_> {
    fn tick(&mut self) -> Result<(), EvalError> {
        if self.fuel == 0 {
            return Err(EvalError::FuelExhausted(self.budget));
        }
        self.fuel -= 1;
        Ok(())
    }

    fn eval(&mut self, t: &Term, env: &Env) -> Result<Value, EvalError> {
        match t {
            Term::Var(v) => env
                .get(v)
                .cloned()
                .ok_or_else(|| EvalError::Unbound(v.to_string())),
            Term::Int(v) => Ok(Value::Int(v.clone())),
            Term::Bool(b) => Ok(Value::Bool(*b)),
            Term::Op(op, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, env)?);
                }
                self.tick()?;
                fold_op(*op, &vals).ok_or_else(|| EvalError::Stuck(pretty_term(t)))
            }
            Term::Ctor(c, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, env)?);
                }
                Ok(Value::Adt(c.clone(), vals.into()))
            }
            Term::Ite(c, a, b) => match self.eval(c, env)? {
                Value::Bool(true) => self.eval(a, env),
                Value::Bool(false) => self.eval(b, env),
                _ => Err(EvalError::Stuck(pretty_term(t))),
            },
            Term::Call(f, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, env)?);
                }
                self.apply(f, vals)
                    .map_err(|e| match e {
                        EvalError::Stuck(_) => EvalError::Stuck(pretty_term(t)),
                        other => other,
                    })
            }
        }
    }

    /// Applies a CSR by walking the recursive spine iteratively, bottom-up.
    fn apply(&mut self, f: &str, mut args: Vec<Value>) -> Result<Value, EvalError> {
        let spec = self.spec;
        let def = spec.csr(f).ok_or_else(|| EvalError::Stuck(f.to_string()))?;
        let scrutinee = args.pop().ok_or_else(|| EvalError::Stuck(f.to_string()))?;
        let mut env = Env::new();
        for ((p, _), a) in def.params.iter().zip(args) {
            env.insert(p.clone(), a);
        }

        let mut spine = Vec::new();
        let mut cur = scrutinee;
        loop {
            let Value::Adt(c, fields) = &cur else {
                return Err(EvalError::Stuck(f.to_string()));
            };
            let branch = def.branch(c).ok_or_else(|| EvalError::Stuck(f.to_string()))?;
            match branch.rec_index {
                Some(i) => {
                    let next = fields[i].clone();
                    spine.push(cur);
                    cur = next;
                }
                None => break,
            }
        }

        let (last_param, _) = def.rec_param();
        let mut result: Option<Value> = None;
        for node in std::iter::once(cur).chain(spine.into_iter().rev()) {
            self.tick()?;
            let Value::Adt(c, fields) = &node else {
                unreachable!("spine holds constructor values")
            };
            let branch = def.branch(c).expect("checked while walking the spine");
            let mut local = env.clone();
            for (b, v) in branch.binders.iter().zip(fields.iter()) {
                local.insert(b.clone(), v.clone());
            }
            if let Some(r) = &branch.rec_result {
                local.insert(r.clone(), result.take().expect("base processed first"));
            }
            local.insert(last_param.clone(), node.clone());
            result = Some(self.eval(&branch.body, &local)?);
        }
        Ok(result.expect("spine is non-empty"))
    }
}

/// Applies a CSR to argument values.
pub fn apply_csr(spec: &Spec, f: &str, args: Vec<Value>, fuel: u64) -> Result<Value, EvalError> {
    let mut ev = Evaluator {
        spec,
        fuel,
        budget: fuel,
    };
    ev.apply(f, args)
}

/// Evaluates a closed term to a value.
pub fn evaluate(term: &Term, spec: &Spec, fuel: u64) -> Result<Value, EvalError> {
    eval_in(term, &Env::new(), spec, fuel)
}

/// Evaluates a term whose free variables are bound by `env`.
pub fn eval_in(
    term: &Term,
    env: &BTreeMap<Sym, Value>,
    spec: &Spec,
    fuel: u64,
) -> Result<Value, EvalError> {
    let mut ev = Evaluator {
        spec,
        fuel,
        budget: fuel,
    };
    ev.eval(term, env)
}

/// `seed` XOR the FNV-1a hash of `text`.
pub fn mix_seed(seed: u64, text: &str) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(text.as_bytes());
    seed ^ h.finish()
}

/// Deterministic generator for the `index`-th test of a batch.
pub fn test_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random value of `ty`. ADT values have at most `size_bound` constructors
/// along the recursive spine; non-recursive ADT fields get half the bound.
pub fn gen_value(ty: &Type, size_bound: usize, spec: &Spec, rng: &mut impl Rng) -> Value {
    match ty {
        Type::Int => Value::Int(BigInt::from(rng.gen_range(-INT_RANGE..=INT_RANGE))),
        Type::Bool => Value::Bool(rng.gen()),
        Type::Adt(name) => {
            let adt = spec.adt(name).expect("declared ADT");
            let rec: Vec<_> = adt.ctors.iter().filter(|c| !adt.is_base(c)).collect();
            let base: Vec<_> = adt.ctors.iter().filter(|c| adt.is_base(c)).collect();
            let len = if rec.is_empty() {
                0
            } else {
                rng.gen_range(0..=size_bound)
            };
            let pick_fields = |ctor: &crate::lang::CtorDef, rng: &mut _| -> Vec<Option<Value>> {
                ctor.fields
                    .iter()
                    .map(|f| {
                        if *f == *ty {
                            None
                        } else {
                            Some(gen_value(f, size_bound / 2, spec, rng))
                        }
                    })
                    .collect()
            };
            let b = base[rng.gen_range(0..base.len())];
            let fields: Vec<Value> = pick_fields(b, rng).into_iter().flatten().collect();
            let mut value = Value::Adt(b.name.clone(), fields.into());
            let mut layers = Vec::with_capacity(len);
            for _ in 0..len {
                let c = rec[rng.gen_range(0..rec.len())];
                layers.push((c, pick_fields(c, rng)));
            }
            for (c, fields) in layers.into_iter().rev() {
                let filled: Vec<Value> = fields
                    .into_iter()
                    .map(|f| f.unwrap_or_else(|| value.clone()))
                    .collect();
                value = Value::Adt(c.name.clone(), filled.into());
            }
            value
        }
    }
}

/// Random assignment for `vars`.
pub fn gen_test(
    vars: &[(Sym, Type)],
    size_bound: usize,
    spec: &Spec,
    rng: &mut impl Rng,
) -> TestCase {
    TestCase {
        assignment: vars
            .iter()
            .map(|(n, t)| (n.clone(), gen_value(t, size_bound, spec, rng)))
            .collect(),
    }
}

/// Evaluates both sides of `eq` under `n_tests` random assignments of its
/// binders and returns the first disagreement.
pub fn falsify(
    eq: &Equation,
    spec: &Spec,
    n_tests: usize,
    seed: u64,
) -> Result<Option<TestCase>, EvalError> {
    falsify_with(eq, spec, n_tests, seed, DEFAULT_SIZE_BOUND, DEFAULT_FUEL)
}

pub fn falsify_with(
    eq: &Equation,
    spec: &Spec,
    n_tests: usize,
    seed: u64,
    size_bound: usize,
    fuel: u64,
) -> Result<Option<TestCase>, EvalError> {
    for i in 0..n_tests {
        let mut rng = test_rng(seed, i as u64);
        let test = gen_test(&eq.binders, size_bound, spec, &mut rng);
        let l = eval_in(&eq.lhs, &test.assignment, spec, fuel)?;
        let r = eval_in(&eq.rhs, &test.assignment, spec, fuel)?;
        if l != r {
            return Ok(Some(test));
        }
    }
    Ok(None)
}
