//! Pass/fail outcome of a check, with human-readable details.

use std::fmt;

/// The outcome of a verification: pass or fail, plus explanatory lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pass: bool,
    details: Vec<String>,
}

impl Verdict {
    pub fn pass() -> Self {
        Self { pass: true, details: Vec::new() }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Self { pass: false, details: vec![detail.into()] }
    }

    /// Builds a verdict from a list of failures: passes iff it is empty.
    pub fn from_failures(failures: Vec<String>) -> Self {
        Self { pass: failures.is_empty(), details: failures }
    }

    /// Appends an explanatory line without changing the outcome.
    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.details.push(note.into());
        self
    }

    pub fn is_pass(&self) -> bool {
        self.pass
    }

    pub fn details(&self) -> &[String] {
        &self.details
    }

    /// Logical conjunction; details are concatenated.
    pub fn and(mut self, other: Verdict) -> Self {
        self.pass &= other.pass;
        self.details.extend(other.details);
        self
    }

    /// `PASS` or `FAIL`.
    pub fn label(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())?;
        if !self.details.is_empty() {
            write!(f, " {}", self.details.join("; "))?;
        }
        Ok(())
    }
}
