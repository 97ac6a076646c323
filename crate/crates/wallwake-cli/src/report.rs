//! Report emission helpers.
//!
//! Reports are pretty-printed JSON with a trailing newline, written through a
//! deterministic serializer: struct fields serialize in declaration order and
//! floats in shortest round-trip form, so identical configurations (and
//! seeds) produce byte-identical files. No timestamps or host details are
//! embedded anywhere.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Serialize `value` as pretty JSON into `path`, creating the parent
/// directory if needed.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value).context("serializing report")?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing report {}", path.display()))?;
    Ok(())
}

/// One named check inside a report: a measured value against its bound.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `"<="` or `">="`: which side of the bound passes.
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    /// `value ≤ bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: "<=", pass: value <= bound }
    }

    /// `value ≥ bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound, relation: ">=", pass: value >= bound }
    }

    /// `|value − target| ≤ halfwidth`, reported as a distance bound.
    pub fn within(name: impl Into<String>, value: f64, target: f64, halfwidth: f64) -> Self {
        let mut c = Check::at_most(name, (value - target).abs(), halfwidth);
        // keep the raw measurement visible rather than only the distance
        c.name = format!("{} (measured {value}, target {target})", c.name);
        c
    }
}

/// Conjunction of a check list.
pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_carry_their_relation() {
        assert!(Check::at_most("a", 1.0, 2.0).pass);
        assert!(!Check::at_most("a", 3.0, 2.0).pass);
        assert!(Check::at_least("b", 3.0, 2.0).pass);
        let w = Check::within("slope", -1.52, -1.5, 0.15);
        assert!(w.pass && w.name.contains("-1.52"));
        assert!(!Check::within("slope", -1.9, -1.5, 0.15).pass);
    }

    #[test]
    fn identical_values_serialize_identically() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let payload = vec![Check::at_most("x", 0.1 + 0.2, 0.5)];
        write_json(&a, &payload).unwrap();
        write_json(&b, &payload).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert!(std::fs::read_to_string(&a).unwrap().ends_with("}\n]\n"));
    }
}
