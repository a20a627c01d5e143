//! Inductive equivalence prover for first-order functional programs over
//! algebraic data types, with directed lemma synthesis.

pub mod check;
pub mod deduct;
pub mod engine;
pub mod eval;
pub mod forms;
pub mod lang;
pub mod rewrite;
pub mod synth;
pub mod trace;

pub use check::{check_counterexample, check_trace, CheckError};
pub use deduct::{DeductConfig, DeductOutcome};
pub use engine::{prove, EngineConfig, EngineError, ProofResult, Stats, Verdict};
pub use eval::{mix_seed, TestCase, Value};
pub use lang::{parse_spec, typecheck, Equation, LangError, Spec, Term};
pub use synth::SynthConfig;
pub use trace::{NodeKind, ProofNode, ProofTrace};

#[cfg(test)]
mod testutil;
