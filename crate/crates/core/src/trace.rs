//! Proof trees produced by the engine and consumed by the checker.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::deduct::{DeductProof, Finish, StepKind};
use crate::lang::{pretty_csr, pretty_term, CsrDef, Equation, Side, Sym, Term};
use crate::rewrite::{Direction, Generalization};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Deduct,
    Induction,
    Case,
    Tactic,
    Failure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Single induction on the F1.1 variable.
    F1,
    /// Outer induction of the F2 route; the inner one is an ordinary node.
    F2,
    /// F1.1 holds but F1.2 does not and no tactic closed the goal.
    Fallback,
}

/// How the induction hypothesis was applied to a reduced case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IhApplication {
    pub side: Side,
    pub dir: Direction,
}

// nodes are built once and mostly serialized; boxing would only add noise
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Justification {
    /// Closed by the deductive solver using `premises`.
    Deduct {
        premises: Vec<Equation>,
        proof: DeductProof,
    },
    /// Structural induction on `var`; one `Case` child per constructor.
    Induction { var: Sym, route: Route },
    /// The node's equation is the parent goal at `ctor fields`. Its single
    /// child proves `reduced`, rewritten by `ih`, then generalized.
    Case {
        ctor: Sym,
        fields: Vec<Sym>,
        ih: Option<Equation>,
        reduced: Equation,
        ih_applied: Option<IhApplication>,
        after_ih: Equation,
        generalization: Option<Generalization>,
    },
    /// Children: proof of `lemma`, then proof of `transformed` with the
    /// lemma as an extra premise.
    Tactic {
        tactic: u8,
        pattern: Term,
        var: Sym,
        csr: Sym,
        lemma: Equation,
        transformed: Equation,
    },
    Failure { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofNode {
    pub kind: NodeKind,
    pub equation: Equation,
    pub children: Vec<ProofNode>,
    pub justification: Justification,
}

impl ProofNode {
    pub fn failure(equation: Equation, reason: impl Into<String>) -> ProofNode {
        ProofNode {
            kind: NodeKind::Failure,
            equation,
            children: Vec::new(),
            justification: Justification::Failure {
                reason: reason.into(),
            },
        }
    }

    pub fn is_complete(&self) -> bool {
        self.kind != NodeKind::Failure && self.children.iter().all(ProofNode::is_complete)
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a ProofNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        let mut n = 0;
        self.walk(&mut |node| n += usize::from(node.kind == kind));
        n
    }

    /// Lemmas of every tactic node, in pre-order.
    pub fn lemmas(&self) -> Vec<&Equation> {
        let mut out = Vec::new();
        self.walk(&mut |node| {
            if let Justification::Tactic { lemma, .. } = &node.justification {
                out.push(lemma);
            }
        });
        out
    }

    /// Every equation stated in the tree: node goals, case reductions and
    /// generalized subgoals.
    pub fn equations(&self) -> Vec<&Equation> {
        let mut out = Vec::new();
        self.walk(&mut |node| {
            out.push(&node.equation);
            if let Justification::Case {
                reduced,
                after_ih,
                generalization,
                ..
            } = &node.justification
            {
                out.push(reduced);
                out.push(after_ih);
                if let Some(g) = generalization {
                    out.push(&g.equation);
                }
            }
        });
        out
    }

    /// Tree shape without equations, for comparing runs.
    pub fn shape(&self) -> String {
        let mut s = String::new();
        self.shape_into(&mut s);
        s
    }

    fn shape_into(&self, s: &mut String) {
        let tag = match &self.justification {
            Justification::Deduct { .. } => "D".to_string(),
            Justification::Induction { var, .. } => format!("I[{var}]"),
            Justification::Case { ctor, .. } => format!("C[{ctor}]"),
            Justification::Tactic { tactic, .. } => format!("T{tactic}"),
            Justification::Failure { .. } => "X".to_string(),
        };
        s.push_str(&tag);
        if !self.children.is_empty() {
            s.push('(');
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                c.shape_into(s);
            }
            s.push(')');
        }
    }
}

/// Root node plus every CSR synthesized along the way.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTrace {
    pub synthesized: Vec<CsrDef>,
    pub root: ProofNode,
}

impl ProofTrace {
    pub fn is_complete(&self) -> bool {
        self.root.is_complete()
    }
}

fn finish_text(out: &mut String, proof: &DeductProof, pad: &str) {
    for step in &proof.steps {
        let how = match &step.kind {
            StepKind::Normalize => "normalize".to_string(),
            StepKind::Canon => "arithmetic".to_string(),
            StepKind::Rewrite { premise, dir, .. } => format!("premise {premise} {dir:?}"),
        };
        let _ = writeln!(out, "{pad}  {:?} ~> {}   [{how}]", step.side, pretty_term(&step.result));
    }
    match &proof.finish {
        Finish::Joinable => {
            let _ = writeln!(out, "{pad}  sides agree");
        }
        Finish::Split {
            cond,
            on_true,
            on_false,
        } => {
            let _ = writeln!(out, "{pad}  case {} = true", pretty_term(cond));
            finish_text(out, on_true, &format!("{pad}  "));
            let _ = writeln!(out, "{pad}  case {} = false", pretty_term(cond));
            finish_text(out, on_false, &format!("{pad}  "));
        }
    }
}

fn node_text(out: &mut String, node: &ProofNode, depth: usize) {
    let pad = "  ".repeat(depth);
    match &node.justification {
        Justification::Deduct { premises, proof } => {
            let _ = writeln!(out, "{pad}{}   by deduction", node.equation);
            for (i, p) in premises.iter().enumerate() {
                let _ = writeln!(out, "{pad}  premise {i}: {p}");
            }
            finish_text(out, proof, &pad);
        }
        Justification::Induction { var, route } => {
            let _ = writeln!(out, "{pad}{}   by induction on {var} ({route:?})", node.equation);
        }
        Justification::Case {
            ctor,
            fields,
            ih,
            after_ih,
            generalization,
            ..
        } => {
            let mut head = ctor.to_string();
            for f in fields {
                head.push(' ');
                head.push_str(f);
            }
            let _ = writeln!(out, "{pad}case {head}:");
            if let Some(ih) = ih {
                let _ = writeln!(out, "{pad}  IH: {ih}");
            }
            let _ = writeln!(out, "{pad}  {after_ih}");
            if let Some(g) = generalization {
                let _ = writeln!(out, "{pad}  generalized: {}", g.equation);
            }
        }
        Justification::Tactic {
            tactic,
            pattern,
            lemma,
            transformed,
            ..
        } => {
            let _ = writeln!(out, "{pad}{}   by tactic {tactic} on {}", node.equation, pretty_term(pattern));
            let _ = writeln!(out, "{pad}  lemma: {lemma}");
            let _ = writeln!(out, "{pad}  becomes: {transformed}");
        }
        Justification::Failure { reason } => {
            let _ = writeln!(out, "{pad}{}   FAILED: {reason}", node.equation);
        }
    }
    for c in &node.children {
        node_text(out, c, depth + 1);
    }
}

impl fmt::Display for ProofTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for def in &self.synthesized {
            let _ = writeln!(out, "{}", pretty_csr(def));
        }
        if !self.synthesized.is_empty() {
            out.push('\n');
        }
        node_text(&mut out, &self.root, 0);
        f.write_str(&out)
    }
}
