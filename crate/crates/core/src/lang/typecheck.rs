use std::collections::BTreeMap;

use super::{AdtDef, CsrDef, LangError, Spec, Sym, Term, Type};

/// Typing context: data types and the CSRs visible at some point.
#[derive(Clone, Copy)]
pub struct TypeEnv<'a> {
    adts: &'a [AdtDef],
    csrs: &'a [CsrDef],
}

impl<'a> TypeEnv<'a> {
    pub fn new(adts: &'a [AdtDef], csrs: &'a [CsrDef]) -> Self {
        TypeEnv { adts, csrs }
    }

    pub fn of(spec: &'a Spec) -> Self {
        TypeEnv::new(&spec.adts, &spec.csrs)
    }

    fn mismatch(term: &Term, expected: &Type, found: &Type) -> LangError {
        LangError::Type {
            term: super::pretty_term(term),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    fn check_args(
        &self,
        whole: &Term,
        args: &[Term],
        expected: &[Type],
        vars: &BTreeMap<Sym, Type>,
    ) -> Result<(), LangError> {
        if args.len() != expected.len() {
            return Err(LangError::Type {
                term: super::pretty_term(whole),
                expected: format!("{} arguments", expected.len()),
                found: format!("{} arguments", args.len()),
            });
        }
        for (a, t) in args.iter().zip(expected) {
            self.check(a, t, vars)?;
        }
        Ok(())
    }

    pub fn check(
        &self,
        term: &Term,
        expected: &Type,
        vars: &BTreeMap<Sym, Type>,
    ) -> Result<(), LangError> {
        let found = self.infer(term, vars)?;
        if &found == expected {
            Ok(())
        } else {
            Err(Self::mismatch(term, expected, &found))
        }
    }

    pub fn infer(&self, term: &Term, vars: &BTreeMap<Sym, Type>) -> Result<Type, LangError> {
        match term {
            Term::Var(v) => vars
                .get(v)
                .cloned()
                .ok_or_else(|| LangError::Unknown(v.to_string())),
            Term::Int(_) => Ok(Type::Int),
            Term::Bool(_) => Ok(Type::Bool),
            Term::Op(op, args) => {
                let (params, ret) = op.signature();
                self.check_args(term, args, params, vars)?;
                Ok(ret)
            }
            Term::Ctor(c, args) => {
                let (adt, def) = self
                    .adts
                    .iter()
                    .find_map(|a| a.ctor(c).map(|d| (a, d)))
                    .ok_or_else(|| LangError::Unknown(c.to_string()))?;
                self.check_args(term, args, &def.fields, vars)?;
                Ok(Type::Adt(adt.name.clone()))
            }
            Term::Call(f, args) => {
                let def = self
                    .csrs
                    .iter()
                    .find(|d| d.name == *f)
                    .ok_or_else(|| LangError::Unknown(f.to_string()))?;
                let params: Vec<Type> = def.params.iter().map(|(_, t)| t.clone()).collect();
                self.check_args(term, args, &params, vars)?;
                Ok(def.ret.clone())
            }
            Term::Ite(c, a, b) => {
                self.check(c, &Type::Bool, vars)?;
                let ta = self.infer(a, vars)?;
                self.check(b, &ta, vars)?;
                Ok(ta)
            }
        }
    }

    fn branch_vars(&self, def: &CsrDef, ctor: &Sym, ret: Option<&Type>) -> BTreeMap<Sym, Type> {
        let mut vars: BTreeMap<Sym, Type> = def.params.iter().cloned().collect();
        let fields = self
            .adts
            .iter()
            .find_map(|a| a.ctor(ctor))
            .map(|c| c.fields.clone())
            .unwrap_or_default();
        let b = def.branch(ctor).expect("branch exists");
        for (x, t) in b.binders.iter().zip(fields) {
            vars.insert(x.clone(), t);
        }
        if let (Some(r), Some(t)) = (&b.rec_result, ret) {
            vars.insert(r.clone(), t.clone());
        }
        vars
    }

    /// Return type of a CSR, read off its first non-recursive branch, after
    /// checking every branch against it.
    pub fn infer_csr_return(&self, def: &CsrDef) -> Result<Type, LangError> {
        for (_, t) in &def.params {
            if let Type::Adt(n) = t {
                if !self.adts.iter().any(|a| a.name == *n) {
                    return Err(LangError::Unknown(n.to_string()));
                }
            }
        }
        let base = def
            .branches
            .iter()
            .find(|b| b.rec_result.is_none())
            .ok_or_else(|| LangError::BadAdt {
                adt: def.adt_name().to_string(),
                reason: "no base constructor".into(),
            })?;
        let ret = self.infer(&base.body, &self.branch_vars(def, &base.ctor, None))?;
        for b in &def.branches {
            let vars = self.branch_vars(def, &b.ctor, Some(&ret));
            self.check(&b.body, &ret, &vars)?;
        }
        Ok(ret)
    }
}

/// Checks every CSR (each against the ones declared before it) and the goal.
pub fn typecheck(spec: &Spec) -> Result<(), LangError> {
    for (i, def) in spec.csrs.iter().enumerate() {
        let env = TypeEnv::new(&spec.adts, &spec.csrs[..i]);
        let ret = env.infer_csr_return(def)?;
        if ret != def.ret {
            return Err(LangError::Type {
                term: def.name.to_string(),
                expected: def.ret.to_string(),
                found: ret.to_string(),
            });
        }
    }
    let env = TypeEnv::of(spec);
    let vars = spec.goal.type_map();
    let lt = env.infer(&spec.goal.lhs, &vars)?;
    env.check(&spec.goal.rhs, &lt, &vars)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use crate::lang::{parse_spec, LangError};

    const PRELUDE: &str = "Inductive List = nil | cons Int List;
Let sum (l: List) = match l with | nil -> 0 | cons h t -> h + sum t end;\n";

    #[test]
    fn goal_sides_must_agree() {
        let err = parse_spec(&format!("{PRELUDE}Goal (xs: List). sum xs = xs;")).unwrap_err();
        assert!(matches!(err, LangError::Type { .. }), "{err:?}");
    }

    #[test]
    fn branches_must_agree() {
        let text = "Inductive List = nil | cons Int List;
Let f (l: List) = match l with | nil -> 0 | cons h t -> true end;
Goal . 0 = 0;";
        assert!(matches!(parse_spec(text), Err(LangError::Type { .. })));
    }

    #[test]
    fn arity_is_checked() {
        let err = parse_spec(&format!("{PRELUDE}Goal (xs: List). sum xs xs = 0;")).unwrap_err();
        assert!(matches!(err, LangError::Type { .. }), "{err:?}");
    }

    #[test]
    fn equality_is_integer_only() {
        let err = parse_spec("Goal (b: Bool). b == b = true;").unwrap_err();
        assert!(matches!(err, LangError::Type { .. }), "{err:?}");
    }
}
