//! Reports printed by the command line.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

/// One property and whether it held. A failed check carries its witness.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub subject: String,
    pub passed: bool,
    pub lines: Vec<String>,
    pub checks: Vec<Check>,
    pub data: Value,
}

impl Report {
    pub fn new(command: &str, subject: &str) -> Self {
        Report {
            command: command.to_string(),
            subject: subject.to_string(),
            passed: true,
            lines: Vec::new(),
            checks: Vec::new(),
            data: Value::Null,
        }
    }

    pub fn line(&mut self, s: impl Into<String>) -> &mut Self {
        self.lines.push(s.into());
        self
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> &mut Self {
        self.check_with(name, passed, detail, None)
    }

    pub fn check_with(
        &mut self,
        name: &str,
        passed: bool,
        detail: impl Into<String>,
        witness: Option<Value>,
    ) -> &mut Self {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
            witness,
        });
        self
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        for c in &self.checks {
            let tag = if c.passed { "ok  " } else { "FAIL" };
            if c.detail.is_empty() {
                let _ = writeln!(out, "[{tag}] {}", c.name);
            } else {
                let _ = writeln!(out, "[{tag}] {}: {}", c.name, c.detail);
            }
        }
        if !self.checks.is_empty() {
            let verdict = if self.passed { "pass" } else { "fail" };
            let _ = writeln!(out, "{} {}: {verdict}", self.command, self.subject);
        }
        out
    }
}
