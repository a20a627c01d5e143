//! Surface language: algebraic data types, canonical structural recursions
//! (CSRs), first-order terms and equations.

mod lexer;
mod parser;
mod pretty;
mod typecheck;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parser::{canonicalize_csr, fresh_name, parse_equation, parse_spec, parse_term, RawCsr};
pub use pretty::{pretty_csr, pretty_equation, pretty_spec, pretty_term};
pub use typecheck::{typecheck, TypeEnv};

/// Interned-ish identifier. Cheap to clone and shareable across threads.
pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Sym::from(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Int,
    Bool,
    Adt(Sym),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "Int"),
            Type::Bool => write!(f, "Bool"),
            Type::Adt(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Le,
    Lt,
    Eq,
    And,
    Or,
    Not,
}

impl Op {
    pub const ALL: [Op; 9] = [
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Le,
        Op::Lt,
        Op::Eq,
        Op::And,
        Op::Or,
        Op::Not,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Le => "<=",
            Op::Lt => "<",
            Op::Eq => "==",
            Op::And => "&&",
            Op::Or => "||",
            Op::Not => "!",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Op::Not => 1,
            _ => 2,
        }
    }

    /// Argument and result types. `==` is restricted to `Int` operands.
    pub fn signature(self) -> (&'static [Type], Type) {
        const II: &[Type] = &[Type::Int, Type::Int];
        const BB: &[Type] = &[Type::Bool, Type::Bool];
        const B: &[Type] = &[Type::Bool];
        match self {
            Op::Add | Op::Sub | Op::Mul => (II, Type::Int),
            Op::Le | Op::Lt | Op::Eq => (II, Type::Bool),
            Op::And | Op::Or => (BB, Type::Bool),
            Op::Not => (B, Type::Bool),
        }
    }

    /// Binding strength for binary operators; higher binds tighter.
    pub(crate) fn precedence(self) -> u8 {
        match self {
            Op::Or => 1,
            Op::And => 2,
            Op::Le | Op::Lt | Op::Eq => 3,
            Op::Add | Op::Sub => 4,
            Op::Mul => 5,
            Op::Not => 6,
        }
    }
}

/// First-order program term.
///
/// `Ite` is treated as a built-in ternary operator by matching and
/// rewriting: its children are, in order, the condition and the two branches.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Var(Sym),
    Int(BigInt),
    Bool(bool),
    Op(Op, Vec<Term>),
    Ctor(Sym, Vec<Term>),
    Call(Sym, Vec<Term>),
    Ite(Box<Term>, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(sym(name))
    }

    pub fn int(v: i64) -> Term {
        Term::Int(BigInt::from(v))
    }

    pub fn call(name: &str, args: Vec<Term>) -> Term {
        Term::Call(sym(name), args)
    }

    pub fn ctor(name: &str, args: Vec<Term>) -> Term {
        Term::Ctor(sym(name), args)
    }

    pub fn op(op: Op, args: Vec<Term>) -> Term {
        Term::Op(op, args)
    }

    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        Term::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Sym> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Variables and constants.
    pub fn is_leaf(&self) -> bool {
        self.children().is_empty()
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Int(_) | Term::Bool(_))
    }

    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Int(_) | Term::Bool(_) => Vec::new(),
            Term::Op(_, args) | Term::Ctor(_, args) | Term::Call(_, args) => args.iter().collect(),
            Term::Ite(c, t, e) => vec![c, t, e],
        }
    }

    pub fn child(&self, index: usize) -> Option<&Term> {
        match self {
            Term::Op(_, args) | Term::Ctor(_, args) | Term::Call(_, args) => args.get(index),
            Term::Ite(c, t, e) => match index {
                0 => Some(c),
                1 => Some(t),
                2 => Some(e),
                _ => None,
            },
            _ => None,
        }
    }

    /// Rebuilds this node with new children (same arity).
    pub fn with_children(&self, mut children: Vec<Term>) -> Term {
        match self {
            Term::Var(_) | Term::Int(_) | Term::Bool(_) => self.clone(),
            Term::Op(op, _) => Term::Op(*op, children),
            Term::Ctor(c, _) => Term::Ctor(c.clone(), children),
            Term::Call(f, _) => Term::Call(f.clone(), children),
            Term::Ite(..) => {
                let e = children.pop().expect("ite arity");
                let t = children.pop().expect("ite arity");
                let c = children.pop().expect("ite arity");
                Term::ite(c, t, e)
            }
        }
    }

    /// Bottom-up map over every node.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let children: Vec<Term> = self
            .children()
            .into_iter()
            .map(|c| c.map_bottom_up(f))
            .collect();
        f(self.with_children(children))
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Term::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Term::depth)
            .max()
            .unwrap_or(0)
    }

    /// Free variables in first-occurrence (left-to-right) order.
    pub fn vars(&self) -> Vec<Sym> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Sym>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            _ => {
                for c in self.children() {
                    c.collect_vars(out);
                }
            }
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => &**v == name,
            _ => self.children().into_iter().any(|c| c.contains_var(name)),
        }
    }

    pub fn count_var(&self, name: &str) -> usize {
        match self {
            Term::Var(v) => usize::from(&**v == name),
            _ => self.children().into_iter().map(|c| c.count_var(name)).sum(),
        }
    }

    pub fn contains_call(&self) -> bool {
        match self {
            Term::Call(..) => true,
            _ => self.children().into_iter().any(Term::contains_call),
        }
    }

    pub fn contains_call_to(&self, name: &str) -> bool {
        match self {
            Term::Call(f, args) => &**f == name || args.iter().any(|a| a.contains_call_to(name)),
            _ => self
                .children()
                .into_iter()
                .any(|c| c.contains_call_to(name)),
        }
    }

    pub fn contains_ite(&self) -> bool {
        match self {
            Term::Ite(..) => true,
            _ => self.children().into_iter().any(Term::contains_ite),
        }
    }

    /// True if `needle` occurs as a subterm (including the root).
    pub fn contains_subterm(&self, needle: &Term) -> bool {
        self == needle
            || self
                .children()
                .into_iter()
                .any(|c| c.contains_subterm(needle))
    }

    /// Replaces every occurrence of `needle` by `with` (outermost first).
    pub fn replace_all(&self, needle: &Term, with: &Term) -> Term {
        if self == needle {
            return with.clone();
        }
        let children: Vec<Term> = self
            .children()
            .into_iter()
            .map(|c| c.replace_all(needle, with))
            .collect();
        self.with_children(children)
    }

    /// Visits every subterm with its path, pre-order (leftmost-outermost first).
    pub fn visit_positions<'a>(&'a self, f: &mut impl FnMut(&[usize], &'a Term)) {
        let mut path = Vec::new();
        self.visit_rec(&mut path, f);
    }

    fn visit_rec<'a>(&'a self, path: &mut Vec<usize>, f: &mut impl FnMut(&[usize], &'a Term)) {
        f(path, self);
        for (i, c) in self.children().into_iter().enumerate() {
            path.push(i);
            c.visit_rec(path, f);
            path.pop();
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            cur = cur.child(i)?;
        }
        Some(cur)
    }

    /// Returns a copy with the subterm at `path` replaced.
    pub fn replace_at(&self, path: &[usize], with: Term) -> Option<Term> {
        match path.split_first() {
            None => Some(with),
            Some((&i, rest)) => {
                let mut children: Vec<Term> = self.children().into_iter().cloned().collect();
                let child = children.get(i)?.replace_at(rest, with)?;
                children[i] = child;
                Some(self.with_children(children))
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_term(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CtorDef {
    pub name: Sym,
    pub fields: Vec<Type>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdtDef {
    pub name: Sym,
    pub ctors: Vec<CtorDef>,
}

impl AdtDef {
    /// Index of the field holding the ADT's own type, if any.
    pub fn recursive_field(&self, ctor: &CtorDef) -> Option<usize> {
        let own = Type::Adt(self.name.clone());
        ctor.fields.iter().position(|t| *t == own)
    }

    pub fn is_base(&self, ctor: &CtorDef) -> bool {
        self.recursive_field(ctor).is_none()
    }

    pub fn ctor(&self, name: &str) -> Option<&CtorDef> {
        self.ctors.iter().find(|c| &*c.name == name)
    }
}

/// One arm of a CSR's `match` on its last parameter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branch {
    pub ctor: Sym,
    /// Pattern binders, one per constructor field.
    pub binders: Vec<Sym>,
    /// For recursive constructors, the variable standing for the recursive
    /// call on the recursive binder (`r` in `Let r = f v.. t in comb`).
    pub rec_result: Option<Sym>,
    /// Index into `binders` of the recursive field, set iff `rec_result` is.
    pub rec_index: Option<usize>,
    pub body: Term,
}

impl Branch {
    pub fn rec_binder(&self) -> Option<&Sym> {
        self.rec_index.map(|i| &self.binders[i])
    }
}

/// A canonical structural recursion: pattern matching on the last
/// parameter, recursion only on the recursive pattern binder, all other
/// parameters passed through unchanged.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CsrDef {
    pub name: Sym,
    pub params: Vec<(Sym, Type)>,
    pub ret: Type,
    /// One branch per constructor, in the ADT's constructor order.
    pub branches: Vec<Branch>,
}

impl CsrDef {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn rec_param(&self) -> &(Sym, Type) {
        self.params.last().expect("CSR has at least one parameter")
    }

    pub fn adt_name(&self) -> &Sym {
        match &self.rec_param().1 {
            Type::Adt(n) => n,
            other => panic!("CSR recursive parameter has non-ADT type {other}"),
        }
    }

    pub fn branch(&self, ctor: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| &*b.ctor == ctor)
    }

    /// Structural equality up to renaming of parameters and binders.
    pub fn alpha_eq(&self, other: &CsrDef) -> bool {
        if self.params.len() != other.params.len()
            || self.ret != other.ret
            || self.branches.len() != other.branches.len()
        {
            return false;
        }
        if self
            .params
            .iter()
            .zip(&other.params)
            .any(|(a, b)| a.1 != b.1)
        {
            return false;
        }
        self.branches.iter().zip(&other.branches).all(|(a, b)| {
            if a.ctor != b.ctor || a.binders.len() != b.binders.len() || a.rec_index != b.rec_index
            {
                return false;
            }
            let mut ren_a: BTreeMap<Sym, usize> = BTreeMap::new();
            let mut ren_b: BTreeMap<Sym, usize> = BTreeMap::new();
            let names_a = self
                .params
                .iter()
                .map(|p| &p.0)
                .chain(&a.binders)
                .chain(a.rec_result.iter());
            let names_b = other
                .params
                .iter()
                .map(|p| &p.0)
                .chain(&b.binders)
                .chain(b.rec_result.iter());
            for (i, n) in names_a.enumerate() {
                ren_a.insert(n.clone(), i);
            }
            for (i, n) in names_b.enumerate() {
                ren_b.insert(n.clone(), i);
            }
            a.rec_result.is_some() == b.rec_result.is_some()
                && alpha_term_eq(&a.body, &b.body, &ren_a, &ren_b)
        })
    }
}

fn alpha_term_eq(
    a: &Term,
    b: &Term,
    ren_a: &BTreeMap<Sym, usize>,
    ren_b: &BTreeMap<Sym, usize>,
) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => match (ren_a.get(x), ren_b.get(y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Term::Int(x), Term::Int(y)) => x == y,
        (Term::Bool(x), Term::Bool(y)) => x == y,
        (Term::Op(o1, a1), Term::Op(o2, a2)) => {
            o1 == o2
                && a1.len() == a2.len()
                && a1
                    .iter()
                    .zip(a2)
                    .all(|(x, y)| alpha_term_eq(x, y, ren_a, ren_b))
        }
        (Term::Ctor(c1, a1), Term::Ctor(c2, a2)) | (Term::Call(c1, a1), Term::Call(c2, a2)) => {
            c1 == c2
                && a1.len() == a2.len()
                && a1
                    .iter()
                    .zip(a2)
                    .all(|(x, y)| alpha_term_eq(x, y, ren_a, ren_b))
        }
        (Term::Ite(c1, t1, e1), Term::Ite(c2, t2, e2)) => {
            alpha_term_eq(c1, c2, ren_a, ren_b)
                && alpha_term_eq(t1, t2, ren_a, ren_b)
                && alpha_term_eq(e1, e2, ren_a, ren_b)
        }
        _ => false,
    }
}

/// A universally quantified equation `forall binders. lhs = rhs`.
///
/// Free variables outside `binders` are constants of the enclosing proof
/// context (this is how induction hypotheses refer to the fixed variables of
/// the case they belong to).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Equation {
    pub binders: Vec<(Sym, Type)>,
    pub lhs: Term,
    pub rhs: Term,
}

impl Equation {
    pub fn new(binders: Vec<(Sym, Type)>, lhs: Term, rhs: Term) -> Equation {
        Equation { binders, lhs, rhs }
    }

    /// Builds an equation quantifying exactly the variables occurring in
    /// `lhs` and `rhs`, in first-occurrence order, typed via `types`.
    pub fn closed(lhs: Term, rhs: Term, types: &BTreeMap<Sym, Type>) -> Equation {
        let mut vars = lhs.vars();
        for v in rhs.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let binders = vars
            .into_iter()
            .map(|v| {
                let ty = types
                    .get(&v)
                    .cloned()
                    .unwrap_or_else(|| panic!("no type recorded for variable {v}"));
                (v, ty)
            })
            .collect();
        Equation { binders, lhs, rhs }
    }

    pub fn binder_type(&self, name: &str) -> Option<&Type> {
        self.binders
            .iter()
            .find(|(n, _)| &**n == name)
            .map(|(_, t)| t)
    }

    pub fn binder_names(&self) -> BTreeSet<Sym> {
        self.binders.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn type_map(&self) -> BTreeMap<Sym, Type> {
        self.binders.iter().cloned().collect()
    }

    pub fn vars(&self) -> Vec<Sym> {
        let mut vars = self.lhs.vars();
        for v in self.rhs.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        vars
    }

    pub fn flipped(&self) -> Equation {
        Equation {
            binders: self.binders.clone(),
            lhs: self.rhs.clone(),
            rhs: self.lhs.clone(),
        }
    }

    pub fn side(&self, side: Side) -> &Term {
        match side {
            Side::Lhs => &self.lhs,
            Side::Rhs => &self.rhs,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.lhs == self.rhs
    }

    /// α-equivalence: equal after consistently renaming binders, with
    /// non-binder variables compared by name.
    pub fn alpha_eq(&self, other: &Equation) -> bool {
        let order_a = self.vars();
        let order_b = other.vars();
        if order_a.len() != order_b.len() {
            return false;
        }
        let bound_a = self.binder_names();
        let bound_b = other.binder_names();
        let mut ren_a = BTreeMap::new();
        let mut ren_b = BTreeMap::new();
        for (i, (a, b)) in order_a.iter().zip(&order_b).enumerate() {
            match (bound_a.contains(a), bound_b.contains(b)) {
                (true, true) => {
                    if self.binder_type(a) != other.binder_type(b) {
                        return false;
                    }
                    ren_a.insert(a.clone(), i);
                    ren_b.insert(b.clone(), i);
                }
                (false, false) if a == b => {}
                _ => return false,
            }
        }
        alpha_term_eq(&self.lhs, &other.lhs, &ren_a, &ren_b)
            && alpha_term_eq(&self.rhs, &other.rhs, &ren_a, &ren_b)
    }

    /// α-equivalence allowing the two sides to be swapped.
    pub fn alpha_eq_sym(&self, other: &Equation) -> bool {
        self.alpha_eq(other) || self.alpha_eq(&other.flipped())
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_equation(self))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Lhs,
    Rhs,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Lhs => Side::Rhs,
            Side::Rhs => Side::Lhs,
        }
    }
}

/// A complete task: data types, recursions and the goal equation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spec {
    pub adts: Vec<AdtDef>,
    pub csrs: Vec<CsrDef>,
    pub goal: Equation,
}

impl Spec {
    pub fn adt(&self, name: &str) -> Option<&AdtDef> {
        self.adts.iter().find(|a| &*a.name == name)
    }

    pub fn csr(&self, name: &str) -> Option<&CsrDef> {
        self.csrs.iter().find(|c| &*c.name == name)
    }

    /// Constructor definition together with its owning ADT.
    pub fn ctor(&self, name: &str) -> Option<(&AdtDef, &CtorDef)> {
        self.adts
            .iter()
            .find_map(|a| a.ctor(name).map(|c| (a, c)))
    }

    pub fn is_ctor(&self, name: &str) -> bool {
        self.ctor(name).is_some()
    }

    /// Appends a CSR, e.g. one produced by lemma synthesis.
    pub fn add_csr(&mut self, def: CsrDef) {
        debug_assert!(self.csr(&def.name).is_none(), "duplicate CSR {}", def.name);
        self.csrs.push(def);
    }

    /// Types of every name in scope for the goal.
    pub fn goal_env(&self) -> BTreeMap<Sym, Type> {
        self.goal.type_map()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("type error in `{term}`: expected {expected}, found {found}")]
    Type {
        term: String,
        expected: String,
        found: String,
    },
    #[error("non-exhaustive match in `{csr}`: missing constructor `{missing}`")]
    NonExhaustiveMatch { csr: String, missing: String },
    #[error("illegal self call in `{csr}`: `{term}` is not of the form `{csr} v1 .. vk-1 t`")]
    IllegalSelfCall { csr: String, term: String },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown name `{0}`")]
    Unknown(String),
    #[error("`{csr}` must match on its last parameter `{expected}`, not `{found}`")]
    MatchTarget {
        csr: String,
        expected: String,
        found: String,
    },
    #[error("invalid data type `{adt}`: {reason}")]
    BadAdt { adt: String, reason: String },
}
