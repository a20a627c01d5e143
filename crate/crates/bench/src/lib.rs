//! Shared fixtures for the prover benchmarks.

use std::fs;
use std::path::{Path, PathBuf};

use lemsyn_core::{parse_spec, Spec};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Parses `corpus/<name>.spec`. Panics on a missing or malformed file.
pub fn corpus_spec(name: &str) -> Spec {
    let path = corpus_dir().join(format!("{name}.spec"));
    let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_spec(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        let spec = corpus_spec("sum_rev");
        assert!(spec.csr("sum").is_some());
    }
}
