//! Induction-friendly forms F1 (F1.1 + F1.2) and F2.

use serde::{Deserialize, Serialize};

use crate::lang::{Equation, Side, Sym, Term};
use crate::rewrite::phi_term;

/// A side that is a single CSR call usable for induction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct F11 {
    pub side: Side,
    pub csr: Sym,
    /// The call's last argument.
    pub var: Sym,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Exists,
    All,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct F2 {
    pub lhs_csr: Sym,
    pub rhs_csr: Sym,
    pub lhs_var: Sym,
    pub rhs_var: Sym,
    /// Variables passed to both calls.
    pub shared: Vec<Sym>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormReport {
    pub f11: Option<F11>,
    pub f12_exists: bool,
    pub f12_all: bool,
    pub f1: bool,
    pub f2: Option<F2>,
}

impl FormReport {
    pub fn friendly(&self) -> bool {
        self.f1 || self.f2.is_some()
    }
}

/// `f a1 .. ak` whose last argument is a variable not occurring in the
/// other arguments.
fn single_call(t: &Term) -> Option<(&Sym, &Sym)> {
    let Term::Call(f, args) = t else {
        return None;
    };
    let (last, init) = args.split_last()?;
    let v = last.as_var()?;
    if init.iter().any(|a| a.contains_var(v)) {
        return None;
    }
    Some((f, v))
}

/// `f v1 .. vk` over pairwise-distinct variables.
fn strict_call(t: &Term) -> Option<(&Sym, Vec<&Sym>)> {
    let Term::Call(f, args) = t else {
        return None;
    };
    let vars: Vec<&Sym> = args.iter().map(Term::as_var).collect::<Option<_>>()?;
    let distinct = vars.iter().enumerate().all(|(i, v)| !vars[..i].contains(v));
    distinct.then_some((f, vars))
}

fn f11_on(eq: &Equation, side: Side) -> Option<F11> {
    single_call(eq.side(side)).map(|(f, v)| F11 {
        side,
        csr: f.clone(),
        var: v.clone(),
    })
}

/// First side (left preferred) that is a single CSR call on a recursive
/// variable that none of its other arguments mention.
pub fn check_f11(eq: &Equation) -> Option<F11> {
    f11_on(eq, Side::Lhs).or_else(|| f11_on(eq, Side::Rhs))
}

fn calls_on_var<'a>(t: &'a Term, v: &str, out: &mut Vec<&'a [Term]>) {
    if let Term::Call(_, args) = t {
        if args.last().and_then(Term::as_var).is_some_and(|x| &**x == v) {
            out.push(args);
        }
    }
    for c in t.children() {
        calls_on_var(c, v, out);
    }
}

fn clean_call(args: &[Term], v: &str) -> bool {
    args[..args.len() - 1].iter().all(|a| !a.contains_var(v))
}

/// Whether `v` is used in `other` only as (All) or at least once as
/// (Exists) the recursive argument of a call whose other arguments do not
/// mention it.
pub fn check_f12(other: &Term, v: &str, mode: Mode) -> bool {
    if !other.contains_var(v) {
        return true;
    }
    let mut calls = Vec::new();
    calls_on_var(other, v, &mut calls);
    match mode {
        Mode::Exists => calls.iter().any(|args| clean_call(args, v)),
        Mode::All => phi_term(other, v) == 0 && calls.iter().all(|args| clean_call(args, v)),
    }
}

pub fn check_f2(eq: &Equation) -> Option<F2> {
    let (lf, lv) = strict_call(&eq.lhs)?;
    let (rf, rv) = strict_call(&eq.rhs)?;
    let shared = lv.iter().filter(|v| rv.contains(v)).map(|v| (*v).clone()).collect();
    Some(F2 {
        lhs_csr: lf.clone(),
        rhs_csr: rf.clone(),
        lhs_var: (*lv.last()?).clone(),
        rhs_var: (*rv.last()?).clone(),
        shared,
    })
}

pub fn is_induction_friendly(eq: &Equation) -> FormReport {
    let f2 = check_f2(eq);
    for side in [Side::Lhs, Side::Rhs] {
        if let Some(f11) = f11_on(eq, side) {
            let other = eq.side(side.other());
            if check_f12(other, &f11.var, Mode::All) {
                return FormReport {
                    f11: Some(f11),
                    f12_exists: true,
                    f12_all: true,
                    f1: true,
                    f2,
                };
            }
        }
    }
    let f11 = check_f11(eq);
    let (f12_exists, f12_all) = match &f11 {
        Some(f) => {
            let other = eq.side(f.side.other());
            (
                check_f12(other, &f.var, Mode::Exists),
                check_f12(other, &f.var, Mode::All),
            )
        }
        None => (false, false),
    };
    FormReport {
        f11,
        f12_exists,
        f12_all,
        f1: false,
        f2,
    }
}
