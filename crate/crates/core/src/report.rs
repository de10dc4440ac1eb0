//! Verification reports: one entry per check, each with a verdict.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    /// Holds by a finite-dimensional argument, not by sampling.
    #[serde(rename = "PASS-PROVED")]
    PassProved,
    /// Holds on the sampled evidence for a finite prefix of an infinite family.
    #[serde(rename = "PASS-EMPIRICAL")]
    PassEmpirical,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
    /// The operation has no value here (e.g. an incompatible product).
    #[serde(rename = "UNDEFINED")]
    Undefined,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::PassProved => "PASS-PROVED",
            Verdict::PassEmpirical => "PASS-EMPIRICAL",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Undefined => "UNDEFINED",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    /// Stable identifier, e.g. `axioms.contraction`.
    pub check: String,
    /// The statement being checked, in words.
    pub claim: String,
    pub verdict: Verdict,
    /// The quantity the verdict was read from; absent when not finite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

impl ReportEntry {
    pub fn new(check: &str, claim: &str, verdict: Verdict, margin: f64) -> Self {
        Self {
            check: check.into(),
            claim: claim.into(),
            verdict,
            margin: margin.is_finite().then_some(margin),
            witness: None,
        }
    }

    pub fn with_witness<T: Serialize>(mut self, w: &T) -> Self {
        self.witness = serde_json::to_value(w).ok();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub seed: u64,
    pub samples: usize,
    pub entries: Vec<ReportEntry>,
}

impl Report {
    pub fn new(system: Option<String>, seed: u64, samples: usize) -> Self {
        Self {
            system,
            seed,
            samples,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, e: ReportEntry) {
        self.entries.push(e);
    }

    pub fn entry(&self, check: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.check == check)
    }

    pub fn passed(&self) -> bool {
        !self.entries.iter().any(|e| e.verdict.is_fail())
    }

    /// 0 when nothing failed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }

    /// One line per entry.
    pub fn render(&self) -> String {
        let width = self.entries.iter().map(|e| e.check.len()).max().unwrap_or(0);
        let mut out = String::new();
        for e in &self.entries {
            let margin = e.margin.map_or_else(|| "-".to_string(), |m| format!("{m:.6e}"));
            out.push_str(&format!(
                "{:<14} {:<width$}  margin {:>13}  {}\n",
                e.verdict.as_str(),
                e.check,
                margin,
                e.claim
            ));
            if e.verdict.is_fail() {
                if let Some(w) = &e.witness {
                    out.push_str(&format!("{:<14} witness: {}\n", "", w));
                }
            }
        }
        let fails = self.entries.iter().filter(|e| e.verdict.is_fail()).count();
        out.push_str(&format!("{} checks, {} failed\n", self.entries.len(), fails));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut r = Report::new(Some("e1".into()), 42, 200);
        r.push(ReportEntry::new("a", "first", Verdict::PassProved, 0.1 + 0.2));
        r.push(ReportEntry::new("b", "second", Verdict::Fail, f64::INFINITY).with_witness(&("1", "2")));
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.exit_code(), 2);
        assert!(r.render().contains("FAIL"));
        assert_eq!(serde_json::to_string(&Verdict::PassEmpirical).unwrap(), "\"PASS-EMPIRICAL\"");
    }
}
