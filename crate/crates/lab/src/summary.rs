//! `summary.txt`: one line per asserted invariant plus informational lines.

use std::fmt;
use std::path::Path;

pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    pub fn assert(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    pub fn info(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Info,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.status, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub command: &'static str,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    pub fn assertions(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status != Status::Info)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut out = format!("# sqg {}\n", self.command);
        for c in &self.checks {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        let total = self.assertions().count();
        let failed = self.assertions().filter(|c| !c.passed()).count();
        let verdict = if failed == 0 { "PASS" } else { "FAIL" };
        out.push_str(&format!("result: {verdict} ({} of {total} assertions passed)\n", total - failed));
        out
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::write(dir.join(SUMMARY_FILE), self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_counts_only_assertions() {
        let mut s = Summary::new("gamma");
        s.push(Check::assert("a", true, "ok"));
        s.push(Check::info("b", "logged"));
        assert!(s.passed());
        assert!(s.render().ends_with("result: PASS (1 of 1 assertions passed)\n"));
        s.push(Check::assert("c", false, "bad"));
        assert!(!s.passed());
        assert!(s.render().contains("FAIL c: bad\n"));
    }
}
