//! Commands behind the `lemsyn` binary: prove, bench, check and verify.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use lemsyn_core::{
    check_counterexample, check_trace, mix_seed, parse_spec, prove, EngineConfig, EngineError,
    ProofResult, ProofTrace, Spec, Verdict,
};

pub const EXIT_PROVED: i32 = 0;
pub const EXIT_DISPROVED: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Args, Clone, Debug)]
pub struct Flags {
    /// Wall-clock limit per goal file, in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Goals per branch of the proof tree.
    #[arg(long, default_value_t = 12)]
    pub max_depth: usize,
    /// Largest synthesized branch body.
    #[arg(long, default_value_t = 11)]
    pub synth_size: usize,
    /// Tests per synthesis task.
    #[arg(long, default_value_t = 50)]
    pub synth_tests: usize,
    /// Premise applications per deductive search branch.
    #[arg(long, default_value_t = 4)]
    pub deduct_depth: usize,
    /// Search states per deductive call.
    #[arg(long, default_value_t = 20000)]
    pub deduct_budget: usize,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            timeout: 60,
            seed: 0,
            max_depth: 12,
            synth_size: 11,
            synth_tests: 50,
            deduct_depth: 4,
            deduct_budget: 20000,
        }
    }
}

impl Flags {
    pub fn engine_config(&self, seed: u64) -> EngineConfig {
        let mut c = EngineConfig {
            timeout: Duration::from_secs(self.timeout),
            max_depth: self.max_depth,
            seed,
            ..EngineConfig::default()
        };
        c.synth.size_bound = self.synth_size;
        c.synth.tests = self.synth_tests;
        c.deduct.max_depth = self.deduct_depth;
        c.deduct.node_budget = self.deduct_budget;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub file: PathBuf,
    /// `proved`, `disproved`, `unknown` or `error`.
    pub verdict: String,
    pub wall_time_ms: u64,
    pub lemma_count: usize,
    pub induction_count: usize,
    pub tactic1_count: usize,
    pub tactic2_count: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lemmas: Option<Vec<String>>,
    /// Proof tree outline, see `ProofNode::shape`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shape: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub wall_time_ms: u64,
    pub lemma_count: usize,
    pub induction_count: usize,
    pub tactic1_count: usize,
    pub tactic2_count: usize,
    pub goals: usize,
}

/// The `--json` document of `prove`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonReport {
    pub file: PathBuf,
    pub verdict: Verdict,
    pub seed: u64,
    pub stats: Stats,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<String>,
    pub trace: ProofTrace,
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Proved => "proved",
        Verdict::Disproved => "disproved",
        Verdict::Unknown => "unknown",
    }
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Proved => EXIT_PROVED,
        Verdict::Disproved => EXIT_DISPROVED,
        Verdict::Unknown => EXIT_UNKNOWN,
    }
}

pub fn load_spec(path: &Path) -> Result<Spec> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_spec(&text).with_context(|| format!("{}", path.display()))
}

/// Parses and proves one file.
pub fn run_file(path: &Path, flags: &Flags, seed: u64) -> Result<(Spec, Result<ProofResult, EngineError>)> {
    let spec = load_spec(path)?;
    let result = prove(&spec, &flags.engine_config(seed));
    Ok((spec, result))
}

fn report_of(path: &Path, seed: u64, result: &ProofResult) -> RunReport {
    RunReport {
        file: path.to_path_buf(),
        verdict: verdict_name(result.verdict).into(),
        wall_time_ms: result.elapsed_ms,
        lemma_count: result.stats.lemma_count,
        induction_count: result.stats.induction_count,
        tactic1_count: result.stats.tactic1_count,
        tactic2_count: result.stats.tactic2_count,
        seed,
        lemmas: Some(result.trace.root.lemmas().iter().map(|l| l.to_string()).collect()),
        shape: Some(result.trace.root.shape()),
        error: None,
    }
}

fn error_report(path: &Path, seed: u64, err: String) -> RunReport {
    RunReport {
        file: path.to_path_buf(),
        verdict: "error".into(),
        wall_time_ms: 0,
        lemma_count: 0,
        induction_count: 0,
        tactic1_count: 0,
        tactic2_count: 0,
        seed,
        lemmas: None,
        shape: None,
        error: Some(err),
    }
}

pub fn json_report(path: &Path, seed: u64, result: &ProofResult) -> JsonReport {
    JsonReport {
        file: path.to_path_buf(),
        verdict: result.verdict,
        seed,
        stats: Stats {
            wall_time_ms: result.elapsed_ms,
            lemma_count: result.stats.lemma_count,
            induction_count: result.stats.induction_count,
            tactic1_count: result.stats.tactic1_count,
            tactic2_count: result.stats.tactic2_count,
            goals: result.stats.goals,
        },
        counterexample: result.counterexample.as_ref().map(|c| c.to_string()),
        trace: result.trace.clone(),
    }
}

/// `prove FILE`: prints the verdict and returns the exit code.
pub fn cmd_prove(
    file: &Path,
    flags: &Flags,
    json: Option<&Path>,
    show_trace: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let (spec, result) = match run_file(file, flags, flags.seed) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_INPUT;
        }
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "internal error: {e}");
            return EXIT_UNKNOWN;
        }
    };
    let _ = writeln!(out, "{}: {}", file.display(), verdict_name(result.verdict));
    if let Some(cex) = &result.counterexample {
        let _ = writeln!(out, "counterexample: {cex}");
    }
    if show_trace {
        let _ = writeln!(out, "goal: {}", spec.goal);
        let _ = write!(out, "{}", result.trace);
    }
    if let Some(path) = json {
        let doc = json_report(file, flags.seed, &result);
        let text = serde_json::to_string_pretty(&doc).expect("report serializes");
        if let Err(e) = fs::write(path, text + "\n") {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return EXIT_INPUT;
        }
    }
    exit_code(result.verdict)
}

/// Outcome of `bench`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub reports: Vec<RunReport>,
    pub solved: usize,
    pub average_solved_ms: f64,
    pub progress_violations: usize,
}

impl BenchSummary {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<32} {:>10} {:>9} {:>6} {:>6} {:>3} {:>3}",
            "file", "verdict", "ms", "lemmas", "induct", "t1", "t2"
        );
        for r in &self.reports {
            let name = r.file.file_name().map_or_else(
                || r.file.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            );
            let _ = writeln!(
                s,
                "{:<32} {:>10} {:>9} {:>6} {:>6} {:>3} {:>3}",
                name,
                r.verdict,
                r.wall_time_ms,
                r.lemma_count,
                r.induction_count,
                r.tactic1_count,
                r.tactic2_count
            );
        }
        let _ = writeln!(
            s,
            "solved {}/{}, average solved time {:.1} ms",
            self.solved,
            self.reports.len(),
            self.average_solved_ms
        );
        s
    }
}

/// Per-file seed for `bench`.
pub fn file_seed(seed: u64, path: &Path) -> u64 {
    let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    mix_seed(seed, &name)
}

pub fn spec_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "spec"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every `.spec` file of `dir` in name order.
pub fn cmd_bench(dir: &Path, flags: &Flags) -> Result<BenchSummary> {
    let mut reports = Vec::new();
    let mut violations = 0;
    for file in spec_files(dir)? {
        let seed = file_seed(flags.seed, &file);
        let start = Instant::now();
        let report = match run_file(&file, flags, seed) {
            Ok((_, Ok(result))) => report_of(&file, seed, &result),
            Ok((_, Err(e))) => {
                if matches!(e, EngineError::ProgressViolation { .. }) {
                    violations += 1;
                }
                let mut r = error_report(&file, seed, e.to_string());
                r.wall_time_ms = start.elapsed().as_millis() as u64;
                r
            }
            Err(e) => error_report(&file, seed, format!("{e:#}")),
        };
        reports.push(report);
    }
    let solved: Vec<&RunReport> = reports.iter().filter(|r| r.verdict == "proved").collect();
    let average_solved_ms = if solved.is_empty() {
        0.0
    } else {
        solved.iter().map(|r| r.wall_time_ms as f64).sum::<f64>() / solved.len() as f64
    };
    Ok(BenchSummary {
        solved: solved.len(),
        average_solved_ms,
        progress_violations: violations,
        reports,
    })
}

/// `check FILE`: parse and typecheck only.
pub fn cmd_check(file: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match load_spec(file) {
        Ok(spec) => {
            let _ = writeln!(
                out,
                "{}: ok ({} types, {} functions)",
                file.display(),
                spec.adts.len(),
                spec.csrs.len()
            );
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_INPUT
        }
    }
}

/// Replays a `--json` report against its spec file.
pub fn verify_report(report: &JsonReport, spec: &Spec) -> Result<()> {
    match report.verdict {
        Verdict::Proved => check_trace(spec, &report.trace).map_err(Into::into),
        Verdict::Disproved => {
            bail!("disproved reports carry a printed counterexample only; nothing to replay")
        }
        Verdict::Unknown => bail!("report has no complete proof"),
    }
}

/// `verify REPORT`: exit 0 if the embedded proof replays.
pub fn cmd_verify(report: &Path, spec_override: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let doc: JsonReport = match fs::read_to_string(report)
        .with_context(|| format!("cannot read {}", report.display()))
        .and_then(|t| serde_json::from_str(&t).context("malformed report"))
    {
        Ok(d) => d,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_INPUT;
        }
    };
    let spec = match load_spec(spec_override.unwrap_or(&doc.file)) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return EXIT_INPUT;
        }
    };
    match verify_report(&doc, &spec) {
        Ok(()) => {
            let _ = writeln!(out, "{}: proof replays", doc.file.display());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "rejected: {e:#}");
            1
        }
    }
}

/// Whether a printed disproof really separates the goal's sides.
pub fn confirms_disproof(spec: &Spec, result: &ProofResult) -> bool {
    result
        .counterexample
        .as_ref()
        .is_some_and(|c| check_counterexample(spec, &spec.goal, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct Wrapper {
        #[command(flatten)]
        flags: Flags,
    }

    #[test]
    fn command_line_defaults_match_default_flags() {
        let parsed = Wrapper::parse_from(["lemsyn"]).flags;
        assert_eq!(format!("{parsed:?}"), format!("{:?}", Flags::default()));
        let c = parsed.engine_config(5);
        assert_eq!(c.timeout, Duration::from_secs(60));
        assert_eq!((c.max_depth, c.seed), (12, 5));
        assert_eq!((c.synth.size_bound, c.synth.tests), (11, 50));
        assert_eq!((c.deduct.max_depth, c.deduct.node_budget), (4, 20000));
    }

    #[test]
    fn verdicts_map_to_exit_codes() {
        assert_eq!(exit_code(Verdict::Proved), EXIT_PROVED);
        assert_eq!(exit_code(Verdict::Disproved), EXIT_DISPROVED);
        assert_eq!(exit_code(Verdict::Unknown), EXIT_UNKNOWN);
        assert_eq!(verdict_name(Verdict::Unknown), "unknown");
    }

    #[test]
    fn file_seeds_depend_on_name_only() {
        let a = file_seed(1, Path::new("x/sum.spec"));
        assert_eq!(a, file_seed(1, Path::new("y/sum.spec")));
        assert_ne!(a, file_seed(1, Path::new("x/len.spec")));
        assert_ne!(a, file_seed(2, Path::new("x/sum.spec")));
    }

    #[test]
    fn missing_directory_is_an_error() {
        assert!(spec_files(Path::new("/no/such/dir")).is_err());
    }
}
