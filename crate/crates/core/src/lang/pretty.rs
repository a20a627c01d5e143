use num_traits::Signed;

use super::{CsrDef, Equation, Op, Spec, Term};

/// Renders a term in surface syntax; the output parses back to the same term.
pub fn pretty_term(t: &Term) -> String {
    let mut out = String::new();
    write_expr(t, &mut out);
    out
}

pub fn pretty_equation(eq: &Equation) -> String {
    format!("{} = {}", pretty_term(&eq.lhs), pretty_term(&eq.rhs))
}

pub fn pretty_spec(spec: &Spec) -> String {
    let mut out = String::new();
    for adt in &spec.adts {
        out.push_str(&format!("Inductive {} =", adt.name));
        for (i, c) in adt.ctors.iter().enumerate() {
            out.push_str(if i == 0 { " " } else { " | " });
            out.push_str(&c.name);
            for f in &c.fields {
                out.push_str(&format!(" {f}"));
            }
        }
        out.push_str(";\n");
    }
    for csr in &spec.csrs {
        out.push_str(&pretty_csr(csr));
        out.push('\n');
    }
    out.push_str("Goal");
    for (n, t) in &spec.goal.binders {
        out.push_str(&format!(" ({n}: {t})"));
    }
    out.push_str(&format!(". {};\n", pretty_equation(&spec.goal)));
    out
}

/// Renders a CSR definition, writing the recursive result back as a
/// self-call.
pub fn pretty_csr(csr: &CsrDef) -> String {
    let mut out = format!("Let {}", csr.name);
    for (n, t) in &csr.params {
        out.push_str(&format!(" ({n}: {t})"));
    }
    out.push_str(&format!(" = match {} with", csr.rec_param().0));
    let prefix: Vec<Term> = csr.params[..csr.arity() - 1]
        .iter()
        .map(|(n, _)| Term::Var(n.clone()))
        .collect();
    for b in &csr.branches {
        out.push_str(&format!("\n  | {}", b.ctor));
        for x in &b.binders {
            out.push_str(&format!(" {x}"));
        }
        let body = match &b.rec_result {
            Some(r) => {
                let t = b.rec_binder().expect("recursive branch has a recursive binder");
                let mut args = prefix.clone();
                args.push(Term::Var(t.clone()));
                b.body
                    .replace_all(&Term::Var(r.clone()), &Term::Call(csr.name.clone(), args))
            }
            None => b.body.clone(),
        };
        out.push_str(&format!(" -> {}", pretty_term(&body)));
    }
    out.push_str("\n  end;");
    out
}

fn is_atom(t: &Term) -> bool {
    match t {
        // negative literals carry their own parentheses
        Term::Var(_) | Term::Bool(_) | Term::Int(_) => true,
        Term::Ctor(_, args) | Term::Call(_, args) => args.is_empty(),
        Term::Op(Op::Not, _) => true,
        _ => false,
    }
}

fn write_atom(t: &Term, out: &mut String) {
    if is_atom(t) {
        write_expr(t, out);
    } else {
        out.push('(');
        write_expr(t, out);
        out.push(')');
    }
}

/// Operand of a binary operator at precedence `min`.
fn write_operand(t: &Term, min: u8, out: &mut String) {
    let needs_parens = match t {
        Term::Op(op, _) if *op != Op::Not => op.precedence() < min,
        Term::Ite(..) => true,
        _ => false,
    };
    if needs_parens {
        out.push('(');
        write_expr(t, out);
        out.push(')');
    } else {
        write_expr(t, out);
    }
}

fn write_expr(t: &Term, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(v),
        Term::Int(v) => {
            if v.is_negative() {
                out.push_str(&format!("({v})"));
            } else {
                out.push_str(&v.to_string());
            }
        }
        Term::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Term::Op(Op::Not, args) => {
            out.push('!');
            write_atom(&args[0], out);
        }
        Term::Op(op, args) => {
            let p = op.precedence();
            write_operand(&args[0], p, out);
            out.push_str(&format!(" {} ", op.symbol()));
            write_operand(&args[1], p + 1, out);
        }
        Term::Ctor(name, args) | Term::Call(name, args) => {
            out.push_str(name);
            for a in args {
                out.push(' ');
                write_atom(a, out);
            }
        }
        Term::Ite(c, a, b) => {
            out.push_str("if ");
            write_expr(c, out);
            out.push_str(" then ");
            write_expr(a, out);
            out.push_str(" else ");
            write_expr(b, out);
        }
    }
}
