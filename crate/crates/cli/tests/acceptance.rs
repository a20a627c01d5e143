//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use lemsyn_cli::{cmd_bench, confirms_disproof, run_file, BenchSummary, Flags};
use lemsyn_core::eval::falsify;
use lemsyn_core::lang::{parse_equation, parse_term, sym, Type};
use lemsyn_core::synth::{enumerate, make_tasks, TaskKind};
use lemsyn_core::trace::{Justification, Route};
use lemsyn_core::{
    check_trace, mix_seed, Equation, NodeKind, ProofNode, ProofResult, Spec, SynthConfig, Term,
    Verdict,
};

type Outcome = Result<String, String>;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn run(name: &str) -> Result<(Spec, ProofResult, Duration), String> {
    let start = Instant::now();
    let (spec, result) = run_file(&corpus().join(name), &Flags::default(), 0).map_err(|e| format!("{e:#}"))?;
    let result = result.map_err(|e| e.to_string())?;
    Ok((spec, result, start.elapsed()))
}

fn expect(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn equation(spec: &Spec, text: &str) -> Equation {
    parse_equation(text, spec).expect("reference equation parses")
}

fn closed_by_f1(node: &ProofNode) -> bool {
    matches!(
        node.justification,
        Justification::Induction { route: Route::F1, .. }
    ) && node.is_complete()
}

fn sum_rev_sort_end_to_end() -> Outcome {
    let (spec, result, took) = run("sum_rev_sort.spec")?;
    expect(result.verdict == Verdict::Proved, format!("verdict {:?}", result.verdict))?;
    expect(took < Duration::from_secs(30), format!("took {took:?}"))?;
    let root = &result.trace.root;
    let Justification::Tactic { tactic, lemma, .. } = &root.justification else {
        return Err("root is not a tactic step".into());
    };
    expect(*tactic == 1, format!("root uses tactic {tactic}"))?;
    let expected = equation(&spec, "(xs: List). sum xs = sum (rev xs)");
    expect(lemma.alpha_eq_sym(&expected), format!("root lemma is {lemma}"))?;
    expect(
        root.children.len() == 2 && root.children.iter().all(closed_by_f1),
        "children are not both closed by F1 induction",
    )?;
    Ok(format!("{took:.2?}, lemma {lemma}"))
}

fn sum_rev_generalizes() -> Outcome {
    let (spec, result, took) = run("sum_rev.spec")?;
    expect(result.verdict == Verdict::Proved, format!("verdict {:?}", result.verdict))?;
    expect(took < Duration::from_secs(5), format!("took {took:?}"))?;
    let want = equation(&spec, "(h: Int) (r: List). sum (snoc h r) = h + sum r");
    expect(
        result.trace.root.equations().iter().any(|e| e.alpha_eq(&want)),
        "generalized subgoal missing",
    )?;
    Ok(format!("{took:.2?}"))
}

fn f2_route() -> Outcome {
    let (spec, result, took) = run("sapp_swap.spec")?;
    expect(result.verdict == Verdict::Proved, format!("verdict {:?}", result.verdict))?;
    let mut outer_f2 = false;
    result.trace.root.walk(&mut |n| {
        outer_f2 |= matches!(n.justification, Justification::Induction { route: Route::F2, .. });
    });
    expect(outer_f2, "no F2 induction in the trace")?;
    let want = equation(&spec, "(h: Int) (t: List) (x: List) (y: List). h + sapp x t y = sapp x (cons h t) y");
    expect(
        result.trace.root.equations().iter().any(|e| e.alpha_eq(&want)),
        "intermediate equation missing",
    )?;
    Ok(format!("{took:.2?}"))
}

/// `g b a = plus a b` for distinct variables `a`, `b` and any function `g`.
fn swapped_plus(lemma: &Equation) -> bool {
    let (Term::Call(_, l), Term::Call(plus, r)) = (&lemma.lhs, &lemma.rhs) else {
        return false;
    };
    let vars = |args: &[Term]| -> Option<Vec<Term>> {
        (args.len() == 2 && args.iter().all(Term::is_var) && args[0] != args[1]).then(|| args.to_vec())
    };
    match (vars(l), vars(r)) {
        (Some(l), Some(r)) => &**plus == "plus" && l[0] == r[1] && l[1] == r[0],
        _ => false,
    }
}

fn tactic2() -> Outcome {
    let (_, result, took) = run("plus3_plus.spec")?;
    expect(result.verdict == Verdict::Proved, format!("verdict {:?}", result.verdict))?;
    let mut found = None;
    result.trace.root.walk(&mut |n| {
        if let Justification::Tactic { tactic: 2, lemma, .. } = &n.justification {
            if swapped_plus(lemma) && found.is_none() {
                found = Some(lemma.to_string());
            }
        }
    });
    let lemma = found.ok_or("no tactic-2 lemma of the form g b a = plus a b")?;
    Ok(format!("{took:.2?}, lemma {lemma}"))
}

fn synthesizer() -> Outcome {
    let spec = lemsyn_cli::load_spec(&corpus().join("sum_rev.spec")).map_err(|e| e.to_string())?;
    let p = parse_term("sum (rev a)", &spec).map_err(|e| e.to_string())?;
    let types = BTreeMap::from([(sym("a"), Type::Adt(sym("List")))]);
    let config = SynthConfig::default();
    let tasks = make_tasks(&p, &sym("a"), &types, &spec, &config).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for (kind, want) in [(TaskKind::Base, "0"), (TaskKind::Comb, "h + r")] {
        let task = tasks.iter().find(|t| t.kind == kind).ok_or("task missing")?;
        let want = parse_term(want, &spec).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let got = enumerate(task, &spec, &config).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        expect(got.as_ref() == Some(&want), format!("{kind:?} gave {got:?}"))?;
        expect(took < Duration::from_secs(5), format!("{kind:?} took {took:?}"))?;
        detail.push(format!("{kind:?} {took:.2?}"));
    }
    Ok(detail.join(", "))
}

fn progress(runs: &[BenchSummary]) -> Outcome {
    let total: usize = runs.iter().map(|s| s.progress_violations).sum();
    expect(total == 0, format!("{total} violations"))?;
    let files = runs.first().map_or(0, |s| s.reports.len());
    Ok(format!("0 violations over {files} files"))
}

fn soundness() -> Outcome {
    let mut proved = 0;
    let mut lemmas = 0;
    for file in lemsyn_cli::spec_files(&corpus()).map_err(|e| e.to_string())? {
        let name = file.file_name().unwrap().to_string_lossy().into_owned();
        let (spec, result, _) = run(&name)?;
        if result.verdict != Verdict::Proved {
            continue;
        }
        proved += 1;
        let mut extended = spec.clone();
        for def in &result.trace.synthesized {
            if extended.csr(&def.name).is_none() {
                extended.add_csr(def.clone());
            }
        }
        let mut goals = vec![spec.goal.clone()];
        goals.extend(result.trace.root.lemmas().into_iter().cloned());
        lemmas += goals.len() - 1;
        for (i, eq) in goals.iter().enumerate() {
            let seed = mix_seed(0x5a17_a0d1 ^ i as u64, &name);
            match falsify(eq, &extended, 500, seed) {
                Ok(None) => {}
                Ok(Some(cex)) => return Err(format!("{name}: {eq} fails at {cex}")),
                Err(e) => return Err(format!("{name}: {eq}: {e}")),
            }
        }
        check_trace(&spec, &result.trace).map_err(|e| format!("{name}: replay: {e}"))?;
    }
    Ok(format!("{proved} proofs, {lemmas} lemmas tested and replayed"))
}

fn falsification() -> Outcome {
    let (spec, result, took) = run("rev_is_identity.spec")?;
    expect(result.verdict == Verdict::Disproved, format!("verdict {:?}", result.verdict))?;
    expect(confirms_disproof(&spec, &result), "counterexample does not separate the sides")?;
    expect(took < Duration::from_secs(1), format!("took {took:?}"))?;
    Ok(format!("{took:.2?}, {}", result.counterexample.unwrap()))
}

fn corpus_yield(summary: &BenchSummary) -> Outcome {
    let files = summary.reports.len();
    let solved = summary
        .reports
        .iter()
        .filter(|r| r.verdict == "proved" && r.wall_time_ms <= 60_000)
        .count();
    expect(files >= 20, format!("only {files} benchmarks"))?;
    expect(solved >= 15, format!("{solved}/{files} proved"))?;
    expect(
        summary.average_solved_ms < 10_000.0,
        format!("average {:.1} ms", summary.average_solved_ms),
    )?;
    Ok(format!("{solved}/{files} proved, average {:.1} ms", summary.average_solved_ms))
}

fn determinism(a: &BenchSummary, b: &BenchSummary) -> Outcome {
    expect(a.reports.len() == b.reports.len(), "different file counts")?;
    for (x, y) in a.reports.iter().zip(&b.reports) {
        let same = x.file == y.file && x.verdict == y.verdict && x.lemmas == y.lemmas && x.shape == y.shape;
        expect(same, format!("{} differs between runs", x.file.display()))?;
    }
    Ok(format!("{} files identical", a.reports.len()))
}

#[test]
fn acceptance() {
    let flags = Flags::default();
    let first = cmd_bench(&corpus(), &flags).expect("corpus runs");
    let second = cmd_bench(&corpus(), &flags).expect("corpus runs");
    let runs = [first, second];

    let results: Vec<(&str, Outcome)> = vec![
        ("sum-rev-sort end to end", sum_rev_sort_end_to_end()),
        ("sum-rev generalized subgoal", sum_rev_generalizes()),
        ("F2 nested induction", f2_route()),
        ("tactic 2 on plus3", tactic2()),
        ("synthesizer base and comb", synthesizer()),
        ("progress over corpus", progress(&runs)),
        ("soundness audit", soundness()),
        ("rev falsification", falsification()),
        ("corpus yield", corpus_yield(&runs[0])),
        ("determinism", determinism(&runs[0], &runs[1])),
    ];
    let mut failed = Vec::new();
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                println!("FAIL  {name}: {why}");
                failed.push(*name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn sum_rev_sort_trace_has_no_failures() {
    let (_, result, _) = run("sum_rev_sort.spec").unwrap();
    assert_eq!(result.trace.root.kind, NodeKind::Tactic);
    assert_eq!(result.trace.root.count(NodeKind::Failure), 0);
}
