use std::collections::BTreeSet;

use super::lexer::{lex, Tok, Token};
use super::typecheck::TypeEnv;
use super::{
    sym, AdtDef, Branch, CsrDef, CtorDef, Equation, LangError, Op, Spec, Sym, Term, Type,
};

/// A CSR as written, before self-calls are replaced by the recursive-result
/// variable.
#[derive(Clone, Debug)]
pub struct RawCsr {
    pub name: Sym,
    pub params: Vec<(Sym, Type)>,
    pub scrutinee: Sym,
    /// (constructor, binders, body) in source order.
    pub branches: Vec<(Sym, Vec<Sym>, Term)>,
}

/// Parses a standalone term against the names of `spec`. Unresolved
/// lowercase names are read as variables; no type checking is done.
pub fn parse_term(text: &str, spec: &Spec) -> Result<Term, LangError> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
    };
    let vars = BTreeSet::new();
    let scope = Scope {
        adts: &spec.adts,
        csrs: &spec.csrs,
        this_csr: None,
        vars: &vars,
        open: true,
    };
    let t = p.expr(&scope)?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(t)
}

/// Parses `(x: T) ... . lhs = rhs` (the body of a `Goal`) and type checks it.
pub fn parse_equation(text: &str, spec: &Spec) -> Result<Equation, LangError> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
    };
    let eq = p.equation(&spec.adts, &spec.csrs)?;
    if *p.peek() == Tok::Semi {
        p.bump();
    }
    p.expect(Tok::Eof, "end of input")?;
    let env = TypeEnv::of(spec);
    let vars = eq.type_map();
    let lt = env.infer(&eq.lhs, &vars)?;
    env.check(&eq.rhs, &lt, &vars)?;
    Ok(eq)
}

/// Parses and fully checks a task description.
pub fn parse_spec(text: &str) -> Result<Spec, LangError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };

    let mut adts = Vec::new();
    while p.peek() == &Tok::Inductive {
        adts.push(p.adt()?);
    }
    validate_adts(&adts)?;

    let mut csrs: Vec<CsrDef> = Vec::new();
    while p.peek() == &Tok::Let {
        let raw = p.csr(&adts, &csrs)?;
        if csrs.iter().any(|c| c.name == raw.name) {
            return Err(LangError::DuplicateName(raw.name.to_string()));
        }
        let def = canonicalize_csr(&raw, &adts, &csrs)?;
        csrs.push(def);
    }

    let goal = p.goal(&adts, &csrs)?;
    p.expect(Tok::Eof, "end of input")?;
    let spec = Spec { adts, csrs, goal };
    super::typecheck(&spec)?;
    Ok(spec)
}

fn validate_adts(adts: &[AdtDef]) -> Result<(), LangError> {
    let mut type_names = BTreeSet::new();
    let mut ctor_names = BTreeSet::new();
    for adt in adts {
        if !type_names.insert(adt.name.clone()) {
            return Err(LangError::DuplicateName(adt.name.to_string()));
        }
        for c in &adt.ctors {
            if !ctor_names.insert(c.name.clone()) {
                return Err(LangError::DuplicateName(c.name.to_string()));
            }
        }
    }
    for adt in adts {
        let own = Type::Adt(adt.name.clone());
        let bad = |reason: &str| LangError::BadAdt {
            adt: adt.name.to_string(),
            reason: reason.to_string(),
        };
        for c in &adt.ctors {
            for f in &c.fields {
                if let Type::Adt(n) = f {
                    if !type_names.contains(n) {
                        return Err(LangError::Unknown(n.to_string()));
                    }
                }
            }
            if c.fields.iter().filter(|f| **f == own).count() > 1 {
                return Err(bad(&format!(
                    "constructor `{}` has more than one recursive field",
                    c.name
                )));
            }
        }
        if !adt.ctors.iter().any(|c| adt.is_base(c)) {
            return Err(bad("no base constructor"));
        }
    }
    Ok(())
}

/// Replaces every canonical self-call `f v1 .. vk-1 t` in a raw CSR by the
/// branch's recursive-result variable, checks exhaustiveness and infers the
/// return type.
pub fn canonicalize_csr(
    raw: &RawCsr,
    adts: &[AdtDef],
    earlier: &[CsrDef],
) -> Result<CsrDef, LangError> {
    let name = raw.name.to_string();
    let (last_name, last_ty) = raw
        .params
        .last()
        .ok_or_else(|| LangError::Syntax {
            line: 0,
            col: 0,
            message: format!("`{name}` needs at least one parameter"),
        })?
        .clone();
    if raw.scrutinee != last_name {
        return Err(LangError::MatchTarget {
            csr: name,
            expected: last_name.to_string(),
            found: raw.scrutinee.to_string(),
        });
    }
    let adt = match &last_ty {
        Type::Adt(n) => adts
            .iter()
            .find(|a| a.name == *n)
            .ok_or_else(|| LangError::Unknown(n.to_string()))?,
        other => {
            return Err(LangError::Type {
                term: last_name.to_string(),
                expected: "an algebraic data type".into(),
                found: other.to_string(),
            })
        }
    };
    let mut seen = BTreeSet::new();
    for (pname, _) in &raw.params {
        if !seen.insert(pname.clone()) {
            return Err(LangError::DuplicateName(pname.to_string()));
        }
    }

    let prefix: Vec<Term> = raw.params[..raw.params.len() - 1]
        .iter()
        .map(|(n, _)| Term::Var(n.clone()))
        .collect();

    let mut branches = Vec::new();
    for ctor in &adt.ctors {
        let matching: Vec<_> = raw
            .branches
            .iter()
            .filter(|(c, _, _)| *c == ctor.name)
            .collect();
        let (_, binders, body) = match matching.as_slice() {
            [] => {
                return Err(LangError::NonExhaustiveMatch {
                    csr: name,
                    missing: ctor.name.to_string(),
                })
            }
            [one] => *one,
            _ => return Err(LangError::DuplicateName(ctor.name.to_string())),
        };
        if binders.len() != ctor.fields.len() {
            return Err(LangError::Type {
                term: format!("pattern `{}`", ctor.name),
                expected: format!("{} binders", ctor.fields.len()),
                found: format!("{} binders", binders.len()),
            });
        }
        let mut scope: BTreeSet<Sym> = raw.params.iter().map(|(n, _)| n.clone()).collect();
        for b in binders {
            if !scope.insert(b.clone()) {
                return Err(LangError::DuplicateName(b.to_string()));
            }
        }
        let rec_idx = adt.recursive_field(ctor);
        let (rec_result, body) = match rec_idx {
            None => {
                if body.contains_call_to(&raw.name) {
                    return Err(illegal_self_call(raw, body));
                }
                (None, body.clone())
            }
            Some(i) => {
                let mut canonical = prefix.clone();
                canonical.push(Term::Var(binders[i].clone()));
                let r = fresh_name("r", |n| scope.contains(n));
                let replaced = replace_self_calls(body, &raw.name, &canonical, &r)
                    .map_err(|bad| illegal_self_call(raw, &bad))?;
                (Some(r), replaced)
            }
        };
        branches.push(Branch {
            ctor: ctor.name.clone(),
            binders: binders.clone(),
            rec_result,
            rec_index: rec_idx,
            body,
        });
    }
    if let Some((c, _, _)) = raw
        .branches
        .iter()
        .find(|(c, _, _)| !adt.ctors.iter().any(|k| k.name == *c))
    {
        return Err(LangError::Type {
            term: format!("pattern `{c}`"),
            expected: format!("a constructor of {}", adt.name),
            found: c.to_string(),
        });
    }

    let mut def = CsrDef {
        name: raw.name.clone(),
        params: raw.params.clone(),
        ret: Type::Int,
        branches,
    };
    def.ret = TypeEnv::new(adts, earlier).infer_csr_return(&def)?;
    Ok(def)
}

fn illegal_self_call(raw: &RawCsr, term: &Term) -> LangError {
    LangError::IllegalSelfCall {
        csr: raw.name.to_string(),
        term: super::pretty_term(term),
    }
}

pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> Sym {
    if !taken(base) {
        return sym(base);
    }
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !taken(n))
        .map(|n| sym(&n))
        .expect("unbounded search")
}

fn replace_self_calls(
    term: &Term,
    name: &Sym,
    canonical: &[Term],
    r: &Sym,
) -> Result<Term, Term> {
    if let Term::Call(f, args) = term {
        if f == name {
            return if args.as_slice() == canonical {
                Ok(Term::Var(r.clone()))
            } else {
                Err(term.clone())
            };
        }
    }
    let children = term
        .children()
        .into_iter()
        .map(|c| replace_self_calls(c, name, canonical, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(term.with_children(children))
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

/// Names visible while parsing an expression.
struct Scope<'a> {
    adts: &'a [AdtDef],
    csrs: &'a [CsrDef],
    this_csr: Option<&'a Sym>,
    vars: &'a BTreeSet<Sym>,
    /// Treat every unresolved lowercase name as a variable.
    open: bool,
}

impl Scope<'_> {
    fn is_ctor(&self, n: &str) -> bool {
        self.adts.iter().any(|a| a.ctor(n).is_some())
    }
    fn is_csr(&self, n: &str) -> bool {
        self.csrs.iter().any(|c| &*c.name == n) || self.this_csr.is_some_and(|s| &**s == n)
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: String) -> LangError {
        let t = &self.tokens[self.pos];
        LangError::Syntax {
            line: t.line,
            col: t.col,
            message,
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), LangError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}, found {:?}", self.peek())))
        }
    }

    fn uname(&mut self) -> Result<Sym, LangError> {
        match self.bump() {
            Tok::UName(n) => Ok(sym(&n)),
            other => {
                self.pos -= 1;
                Err(self.error(format!("expected type name, found {other:?}")))
            }
        }
    }

    fn lname(&mut self) -> Result<Sym, LangError> {
        match self.peek().clone() {
            Tok::LName(n) => {
                self.bump();
                Ok(sym(&n))
            }
            other => Err(self.error(format!("expected identifier, found {other:?}"))),
        }
    }

    fn type_atom(&mut self) -> Result<Type, LangError> {
        match self.peek().clone() {
            Tok::Int_ => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::Bool_ => {
                self.bump();
                Ok(Type::Bool)
            }
            Tok::UName(n) => {
                self.bump();
                Ok(Type::Adt(sym(&n)))
            }
            other => Err(self.error(format!("expected type, found {other:?}"))),
        }
    }

    fn adt(&mut self) -> Result<AdtDef, LangError> {
        self.expect(Tok::Inductive, "`Inductive`")?;
        let name = self.uname()?;
        self.expect(Tok::Assign, "`=`")?;
        if *self.peek() == Tok::Bar {
            self.bump();
        }
        let mut ctors = vec![self.ctor()?];
        while *self.peek() == Tok::Bar {
            self.bump();
            ctors.push(self.ctor()?);
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(AdtDef { name, ctors })
    }

    fn ctor(&mut self) -> Result<CtorDef, LangError> {
        let name = self.lname()?;
        let mut fields = Vec::new();
        while matches!(self.peek(), Tok::Int_ | Tok::Bool_ | Tok::UName(_)) {
            fields.push(self.type_atom()?);
        }
        Ok(CtorDef { name, fields })
    }

    fn param(&mut self) -> Result<(Sym, Type), LangError> {
        self.expect(Tok::LParen, "`(`")?;
        let n = self.lname()?;
        self.expect(Tok::Colon, "`:`")?;
        let t = self.type_atom()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok((n, t))
    }

    fn csr(&mut self, adts: &[AdtDef], csrs: &[CsrDef]) -> Result<RawCsr, LangError> {
        self.expect(Tok::Let, "`Let`")?;
        let name = self.lname()?;
        if adts.iter().any(|a| a.ctor(&name).is_some()) {
            return Err(LangError::DuplicateName(name.to_string()));
        }
        let mut params = vec![self.param()?];
        while *self.peek() == Tok::LParen {
            params.push(self.param()?);
        }
        self.expect(Tok::Assign, "`=`")?;
        self.expect(Tok::Match, "`match`")?;
        let scrutinee = self.lname()?;
        self.expect(Tok::With, "`with`")?;
        let mut branches = Vec::new();
        while *self.peek() == Tok::Bar {
            self.bump();
            let ctor = self.lname()?;
            let mut binders = Vec::new();
            while let Tok::LName(_) = self.peek() {
                binders.push(self.lname()?);
            }
            self.expect(Tok::Arrow, "`->`")?;
            let mut vars: BTreeSet<Sym> = params.iter().map(|(n, _)| n.clone()).collect();
            vars.extend(binders.iter().cloned());
            let scope = Scope {
                adts,
                csrs,
                this_csr: Some(&name),
                vars: &vars,
                open: false,
            };
            let body = self.expr(&scope)?;
            branches.push((ctor, binders, body));
        }
        if branches.is_empty() {
            return Err(self.error("expected at least one branch".into()));
        }
        self.expect(Tok::End, "`end`")?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(RawCsr {
            name,
            params,
            scrutinee,
            branches,
        })
    }

    fn goal(&mut self, adts: &[AdtDef], csrs: &[CsrDef]) -> Result<Equation, LangError> {
        self.expect(Tok::Goal, "`Goal`")?;
        let eq = self.equation(adts, csrs)?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(eq)
    }

    fn equation(&mut self, adts: &[AdtDef], csrs: &[CsrDef]) -> Result<Equation, LangError> {
        let mut binders = Vec::new();
        while *self.peek() == Tok::LParen {
            binders.push(self.param()?);
        }
        self.expect(Tok::Dot, "`.`")?;
        let mut vars = BTreeSet::new();
        for (n, _) in &binders {
            if !vars.insert(n.clone()) {
                return Err(LangError::DuplicateName(n.to_string()));
            }
        }
        let scope = Scope {
            adts,
            csrs,
            this_csr: None,
            vars: &vars,
            open: false,
        };
        let lhs = self.expr(&scope)?;
        self.expect(Tok::Assign, "`=`")?;
        let rhs = self.expr(&scope)?;
        Ok(Equation::new(binders, lhs, rhs))
    }

    fn expr(&mut self, scope: &Scope) -> Result<Term, LangError> {
        self.binary(scope, 1)
    }

    fn binop(&self) -> Option<Op> {
        Some(match self.peek() {
            Tok::Plus => Op::Add,
            Tok::Minus => Op::Sub,
            Tok::Star => Op::Mul,
            Tok::Le => Op::Le,
            Tok::Lt => Op::Lt,
            Tok::EqEq => Op::Eq,
            Tok::AndAnd => Op::And,
            Tok::OrOr => Op::Or,
            _ => return None,
        })
    }

    /// Precedence climbing over left-associative binary operators.
    fn binary(&mut self, scope: &Scope, min_prec: u8) -> Result<Term, LangError> {
        let mut lhs = self.operand(scope)?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(scope, prec + 1)?;
            lhs = Term::Op(op, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn operand(&mut self, scope: &Scope) -> Result<Term, LangError> {
        match self.peek().clone() {
            Tok::If => {
                self.bump();
                let c = self.expr(scope)?;
                self.expect(Tok::Then, "`then`")?;
                let t = self.expr(scope)?;
                self.expect(Tok::Else, "`else`")?;
                let e = self.expr(scope)?;
                Ok(Term::ite(c, t, e))
            }
            Tok::Minus => {
                if let Tok::Int(v) = self.peek_at(1).clone() {
                    self.bump();
                    self.bump();
                    Ok(Term::Int(-v))
                } else {
                    Err(self.error("unary minus only applies to integer literals".into()))
                }
            }
            Tok::LName(n) if scope.is_ctor(&n) || scope.is_csr(&n) => {
                self.bump();
                let mut args = Vec::new();
                while self.starts_atom() {
                    args.push(self.atom(scope)?);
                }
                Ok(self.resolve_app(scope, &n, args))
            }
            _ => self.atom(scope),
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::LName(_) | Tok::Int(_) | Tok::True | Tok::False | Tok::LParen | Tok::Bang
        )
    }

    fn resolve_app(&self, scope: &Scope, name: &str, args: Vec<Term>) -> Term {
        if scope.is_ctor(name) {
            Term::Ctor(sym(name), args)
        } else {
            Term::Call(sym(name), args)
        }
    }

    fn atom(&mut self, scope: &Scope) -> Result<Term, LangError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Term::Int(v))
            }
            Tok::True => {
                self.bump();
                Ok(Term::Bool(true))
            }
            Tok::False => {
                self.bump();
                Ok(Term::Bool(false))
            }
            Tok::Bang => {
                self.bump();
                let a = self.atom(scope)?;
                Ok(Term::Op(Op::Not, vec![a]))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr(scope)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::LName(n) => {
                if scope.is_ctor(&n) || scope.is_csr(&n) {
                    self.bump();
                    Ok(self.resolve_app(scope, &n, Vec::new()))
                } else if scope.open || scope.vars.contains(n.as_str()) {
                    self.bump();
                    Ok(Term::Var(sym(&n)))
                } else {
                    Err(LangError::Unknown(n))
                }
            }
            other => Err(self.error(format!("expected expression, found {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::pretty_term;

    const LIST: &str = "Inductive List = nil | cons Int List;\n";

    #[test]
    fn parses_identity_goal() {
        let spec = parse_spec(&format!("{LIST}Goal (xs: List). xs = xs;")).unwrap();
        assert_eq!(spec.adts.len(), 1);
        assert!(spec.csrs.is_empty());
        assert_eq!(spec.goal.lhs, Term::var("xs"));
        assert!(spec.goal.is_trivial());
    }

    #[test]
    fn self_calls_become_the_result_variable() {
        let text = format!(
            "{LIST}Let snoc (x: Int) (l: List) = match l with | nil -> cons x nil | cons h t -> cons h (snoc x t) end;
             Let rev (l: List) = match l with | nil -> nil | cons h t -> snoc h (rev t) end;
             Let sum (l: List) = match l with | nil -> 0 | cons h t -> h + (sum t) end;
             Goal . 0 = 0;"
        );
        let spec = parse_spec(&text).unwrap();
        let rev = spec.csr("rev").unwrap();
        let cons = rev.branch("cons").unwrap();
        assert_eq!(cons.rec_result.as_deref(), Some("r"));
        assert_eq!(pretty_term(&cons.body), "snoc h r");
        let sum = spec.csr("sum").unwrap();
        assert_eq!(pretty_term(&sum.branch("cons").unwrap().body), "h + r");
        assert_eq!(sum.ret, Type::Int);
        assert_eq!(rev.ret, Type::Adt(sym("List")));
    }

    #[test]
    fn changed_prefix_argument_is_an_illegal_self_call() {
        let text = format!(
            "{LIST}Let f (x: Int) (l: List) = match l with | nil -> x | cons h t -> f (x + 1) t end;
             Goal . 0 = 0;"
        );
        assert!(matches!(
            parse_spec(&text),
            Err(LangError::IllegalSelfCall { .. })
        ));
    }

    #[test]
    fn recursion_on_non_binder_is_illegal() {
        let text = format!(
            "{LIST}Let f (l: List) = match l with | nil -> 0 | cons h t -> f (cons h t) end;
             Goal . 0 = 0;"
        );
        assert!(matches!(
            parse_spec(&text),
            Err(LangError::IllegalSelfCall { .. })
        ));
    }

    #[test]
    fn missing_branch_is_reported() {
        let text = format!(
            "{LIST}Let snoc (x: Int) (l: List) = match l with | nil -> cons x nil | cons h t -> cons h (snoc x t) end;
             Let rev (l: List) = match l with | nil -> nil end;
             Goal (xs: List). rev xs = xs;"
        );
        assert_eq!(
            parse_spec(&text),
            Err(LangError::NonExhaustiveMatch {
                csr: "rev".into(),
                missing: "cons".into()
            })
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let spec = parse_spec("Goal (a: Int) (b: Int). a - b - 1 * a + 2 = -3 + a;").unwrap();
        assert_eq!(pretty_term(&spec.goal.lhs), "a - b - 1 * a + 2");
        match &spec.goal.lhs {
            Term::Op(Op::Add, args) => match &args[0] {
                Term::Op(Op::Sub, inner) => {
                    assert!(matches!(&inner[0], Term::Op(Op::Sub, _)));
                    assert!(matches!(&inner[1], Term::Op(Op::Mul, _)));
                }
                other => panic!("{other:?}"),
            },
            other => panic!("{other:?}"),
        }
        assert_eq!(spec.goal.rhs, Term::Op(Op::Add, vec![Term::int(-3), Term::var("a")]));
    }

    #[test]
    fn comparison_binds_looser_than_arithmetic() {
        let spec = parse_spec("Goal (a: Int). a + 1 <= a * 2 && true = true;").unwrap();
        assert!(matches!(&spec.goal.lhs, Term::Op(Op::And, _)));
    }

    #[test]
    fn duplicate_constructor_names_are_rejected() {
        let text = "Inductive A = a | b;\nInductive B = b | c;\nGoal . 0 = 0;";
        assert_eq!(parse_spec(text), Err(LangError::DuplicateName("b".into())));
    }

    #[test]
    fn unknown_variable_is_reported() {
        let text = format!("{LIST}Goal (xs: List). ys = xs;");
        assert_eq!(parse_spec(&text), Err(LangError::Unknown("ys".into())));
    }

    #[test]
    fn fresh_name_skips_taken() {
        let taken = ["r", "r1"];
        assert_eq!(&*fresh_name("r", |n| taken.contains(&n)), "r2");
    }
}
