//! Pass/fail reports shared by the exhaustive checkers.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Number of instances examined.
    pub instances: u64,
    /// First counterexample, if any.
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub title: String,
    pub facts: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn fact(&mut self, key: impl Into<String>, value: impl ToString) {
        self.facts.push((key.into(), value.to_string()));
    }

    /// Records a check whose first failure (if any) is `witness`.
    pub fn check(&mut self, name: impl Into<String>, instances: u64, witness: Option<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed: witness.is_none(),
            instances,
            witness,
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.facts.extend(other.facts);
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `key: value` layout.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "report: {}", self.title);
        for (k, v) in &self.facts {
            let _ = writeln!(out, "{k}: {v}");
        }
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(out, "check {}: {} ({} instances)", c.name, status, c.instances);
            if let Some(w) = &c.witness {
                let _ = writeln!(out, "  witness: {w}");
            }
        }
        let _ = writeln!(out, "verdict: {}", if self.passed() { "pass" } else { "fail" });
        out
    }

    /// One tab-separated record per line.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.facts {
            let _ = writeln!(out, "fact\t{}\t{k}\t{v}", self.title);
        }
        for c in &self.checks {
            let _ = writeln!(
                out,
                "check\t{}\t{}\t{}\t{}\t{}",
                self.title,
                c.name,
                if c.passed { "pass" } else { "fail" },
                c.instances,
                c.witness.as_deref().unwrap_or("-")
            );
        }
        out
    }
}

/// Runs `body` over every instance; the first `Some` it returns becomes the
/// witness. Returns the instance count alongside.
pub(crate) fn scan<I, F>(instances: I, mut body: F) -> (u64, Option<String>)
where
    I: IntoIterator,
    F: FnMut(I::Item) -> Option<String>,
{
    let mut count = 0;
    let mut witness = None;
    for item in instances {
        count += 1;
        if witness.is_none() {
            witness = body(item);
        }
    }
    (count, witness)
}
