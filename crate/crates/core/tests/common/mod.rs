//! Fixtures shared by the integration tests: a spec over lists and naturals,
//! a byte-driven generator of well-typed terms, and a reference evaluator.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_bigint::BigInt;

use lemsyn_core::lang::{sym, CsrDef, Op, Sym, Type};
use lemsyn_core::{parse_spec, Spec, Term, Value};

pub const DEFS: &str = "Inductive List = nil | cons Int List;
Inductive Nat = zero | succ Nat;
Let snoc (x: Int) (l: List) = match l with
  | nil -> cons x nil
  | cons h t -> cons h (snoc x t)
  end;
Let ins (x: Int) (l: List) = match l with
  | nil -> cons x nil
  | cons h t -> if x <= h then cons x l else cons h (ins x t)
  end;
Let rev (l: List) = match l with
  | nil -> nil
  | cons h t -> snoc h (rev t)
  end;
Let sort (l: List) = match l with
  | nil -> nil
  | cons h t -> ins h (sort t)
  end;
Let sum (l: List) = match l with
  | nil -> 0
  | cons h t -> h + (sum t)
  end;
Let len (l: List) = match l with
  | nil -> 0
  | cons h t -> 1 + len t
  end;
Let app (x: List) (y: List) = match y with
  | nil -> x
  | cons h t -> cons h (app x t)
  end;
Let plus (a: Nat) (b: Nat) = match b with
  | zero -> a
  | succ t -> succ (plus a t)
  end;
Let toint (n: Nat) = match n with
  | zero -> 0
  | succ t -> 1 + toint t
  end;
";

pub fn spec() -> Spec {
    parse_spec(&format!("{DEFS}Goal (xs: List). sum xs = sum xs;")).expect("fixture parses")
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn list() -> Type {
    Type::Adt(sym("List"))
}

pub fn nat() -> Type {
    Type::Adt(sym("Nat"))
}

/// Builds terms from a byte string; every byte is one decision and an
/// exhausted string picks the first option, so shrinking the bytes shrinks
/// the term.
pub struct Gen<'a> {
    bytes: &'a [u8],
    pos: usize,
    vars: Vec<(Sym, Type)>,
}

impl<'a> Gen<'a> {
    pub fn new(bytes: &'a [u8], vars: &[(&str, Type)]) -> Self {
        Gen {
            bytes,
            pos: 0,
            vars: vars.iter().map(|(n, t)| (sym(n), t.clone())).collect(),
        }
    }

    fn pick(&mut self, n: usize) -> usize {
        let b = self.bytes.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b as usize % n
    }

    fn leaf(&mut self, ty: &Type) -> Term {
        let vars: Vec<Sym> = self.vars.iter().filter(|(_, t)| t == ty).map(|(n, _)| n.clone()).collect();
        if !vars.is_empty() && self.pick(3) > 0 {
            let v = vars[self.pick(vars.len())].clone();
            return Term::Var(v);
        }
        match ty {
            Type::Int => Term::int(self.pick(7) as i64 - 3),
            Type::Bool => Term::Bool(self.pick(2) == 1),
            Type::Adt(n) if &**n == "List" => Term::ctor("nil", vec![]),
            _ => Term::ctor("zero", vec![]),
        }
    }

    pub fn term(&mut self, ty: &Type, depth: usize) -> Term {
        if depth == 0 || self.pick(4) == 0 {
            return self.leaf(ty);
        }
        let d = depth - 1;
        let (int, boolean, lst, nt) = (Type::Int, Type::Bool, list(), nat());
        match ty {
            Type::Int => match self.pick(8) {
                0 => Term::op(Op::Add, vec![self.term(&int, d), self.term(&int, d)]),
                1 => Term::op(Op::Sub, vec![self.term(&int, d), self.term(&int, d)]),
                2 => Term::op(Op::Mul, vec![self.term(&int, d), self.term(&int, d)]),
                3 => Term::call("sum", vec![self.term(&lst, d)]),
                4 => Term::call("len", vec![self.term(&lst, d)]),
                5 => Term::call("toint", vec![self.term(&nt, d)]),
                6 => Term::ite(self.term(&boolean, d), self.term(&int, d), self.term(&int, d)),
                _ => self.leaf(ty),
            },
            Type::Bool => match self.pick(6) {
                0 => Term::op(Op::Le, vec![self.term(&int, d), self.term(&int, d)]),
                1 => Term::op(Op::Lt, vec![self.term(&int, d), self.term(&int, d)]),
                2 => Term::op(Op::Eq, vec![self.term(&int, d), self.term(&int, d)]),
                3 => Term::op(Op::And, vec![self.term(&boolean, d), self.term(&boolean, d)]),
                4 => Term::op(Op::Or, vec![self.term(&boolean, d), self.term(&boolean, d)]),
                _ => Term::op(Op::Not, vec![self.term(&boolean, d)]),
            },
            Type::Adt(n) if &**n == "List" => match self.pick(8) {
                0 => Term::ctor("cons", vec![self.term(&int, d), self.term(&lst, d)]),
                1 => Term::call("snoc", vec![self.term(&int, d), self.term(&lst, d)]),
                2 => Term::call("ins", vec![self.term(&int, d), self.term(&lst, d)]),
                3 => Term::call("rev", vec![self.term(&lst, d)]),
                4 => Term::call("sort", vec![self.term(&lst, d)]),
                5 => Term::call("app", vec![self.term(&lst, d), self.term(&lst, d)]),
                6 => Term::ite(self.term(&boolean, d), self.term(&lst, d), self.term(&lst, d)),
                _ => self.leaf(ty),
            },
            _ => match self.pick(3) {
                0 => Term::ctor("succ", vec![self.term(&nt, d)]),
                1 => Term::call("plus", vec![self.term(&nt, d), self.term(&nt, d)]),
                _ => self.leaf(ty),
            },
        }
    }
}

/// Big-step evaluation straight from the definitions, written separately
/// from the library's reducer.
pub fn oracle(t: &Term, env: &BTreeMap<Sym, Value>, spec: &Spec) -> Value {
    match t {
        Term::Var(v) => env[v].clone(),
        Term::Int(n) => Value::Int(n.clone()),
        Term::Bool(b) => Value::Bool(*b),
        Term::Ctor(c, args) => {
            let fields: Vec<Value> = args.iter().map(|a| oracle(a, env, spec)).collect();
            Value::Adt(c.clone(), Arc::from(fields))
        }
        Term::Call(f, args) => {
            let vals: Vec<Value> = args.iter().map(|a| oracle(a, env, spec)).collect();
            call(spec.csr(f).expect("defined function"), vals, spec)
        }
        Term::Ite(c, a, b) => match oracle(c, env, spec) {
            Value::Bool(true) => oracle(a, env, spec),
            Value::Bool(false) => oracle(b, env, spec),
            other => panic!("condition evaluated to {other:?}"),
        },
        Term::Op(op, args) => {
            let vals: Vec<Value> = args.iter().map(|a| oracle(a, env, spec)).collect();
            apply(*op, &vals)
        }
    }
}

fn int(v: &Value) -> &BigInt {
    match v {
        Value::Int(n) => n,
        other => panic!("expected an integer, got {other:?}"),
    }
}

fn boolean(v: &Value) -> bool {
    match v {
        Value::Bool(b) => *b,
        other => panic!("expected a boolean, got {other:?}"),
    }
}

fn apply(op: Op, v: &[Value]) -> Value {
    match op {
        Op::Add => Value::Int(int(&v[0]) + int(&v[1])),
        Op::Sub => Value::Int(int(&v[0]) - int(&v[1])),
        Op::Mul => Value::Int(int(&v[0]) * int(&v[1])),
        Op::Le => Value::Bool(int(&v[0]) <= int(&v[1])),
        Op::Lt => Value::Bool(int(&v[0]) < int(&v[1])),
        Op::Eq => Value::Bool(int(&v[0]) == int(&v[1])),
        Op::And => Value::Bool(boolean(&v[0]) && boolean(&v[1])),
        Op::Or => Value::Bool(boolean(&v[0]) || boolean(&v[1])),
        Op::Not => Value::Bool(!boolean(&v[0])),
    }
}

fn call(def: &CsrDef, args: Vec<Value>, spec: &Spec) -> Value {
    let (scrutinee, fixed) = args.split_last().expect("at least one argument");
    let Value::Adt(ctor, fields) = scrutinee else {
        panic!("{} applied to {scrutinee:?}", def.name);
    };
    let branch = def.branch(ctor).expect("exhaustive match");
    let mut env: BTreeMap<Sym, Value> = def.params.iter().map(|p| p.0.clone()).zip(args.iter().cloned()).collect();
    for (b, v) in branch.binders.iter().zip(fields.iter()) {
        env.insert(b.clone(), v.clone());
    }
    if let (Some(r), Some(i)) = (&branch.rec_result, branch.rec_index) {
        let mut inner = fixed.to_vec();
        inner.push(fields[i].clone());
        env.insert(r.clone(), call(def, inner, spec));
    }
    oracle(&branch.body, &env, spec)
}
