//! Fixtures shared by the unit tests.

use crate::eval::Value;
use crate::lang::{parse_equation, parse_spec, parse_term, Equation, Spec, Term};

pub const LISTS: &str = "Inductive List = nil | cons Int List;
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
";

pub const NAT: &str = "Inductive Nat = zero | succ Nat;
Let plus (a: Nat) (b: Nat) = match b with
  | zero -> a
  | succ t -> succ (plus a t)
  end;
";

/// List definitions (snoc, ins, rev, sort, sum) followed by `goal` (a full `Goal ...;` line).
pub fn lists(goal: &str) -> Spec {
    parse_spec(&format!("{LISTS}{goal}")).expect("fixture parses")
}

pub fn nat(extra: &str) -> Spec {
    parse_spec(&format!("{NAT}{extra}")).expect("fixture parses")
}

pub fn term(spec: &Spec, text: &str) -> Term {
    parse_term(text, spec).expect("term parses")
}

pub fn eq(spec: &Spec, text: &str) -> Equation {
    parse_equation(text, spec).expect("equation parses")
}

pub fn list(xs: &[i64]) -> Value {
    xs.iter().rev().fold(Value::adt("nil", vec![]), |acc, &x| {
        Value::adt("cons", vec![Value::int(x), acc])
    })
}
