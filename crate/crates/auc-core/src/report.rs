//! Itemized pass/fail reports, shared by the chevalley, fincat and oracle
//! checkers.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportItem {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Report {
    pub items: Vec<ReportItem>,
}

impl Report {
    pub fn pass(&mut self, name: impl Into<String>, detail: impl Into<String>) {
        self.items.push(ReportItem { name: name.into(), verdict: Verdict::Pass, detail: detail.into() });
    }

    pub fn fail(&mut self, name: impl Into<String>, detail: impl Into<String>) {
        self.items.push(ReportItem { name: name.into(), verdict: Verdict::Fail, detail: detail.into() });
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        if ok {
            self.pass(name, detail);
        } else {
            self.fail(name, detail);
        }
    }

    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.verdict == Verdict::Pass)
    }

    pub fn merge(&mut self, other: Report) {
        self.items.extend(other.items);
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            let v = match item.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
            };
            if item.detail.is_empty() {
                writeln!(f, "{v} {}", item.name)?;
            } else {
                writeln!(f, "{v} {}: {}", item.name, item.detail)?;
            }
        }
        Ok(())
    }
}
