//! Structured diagnostics report: one `key\tvalue\tthreshold\tverdict`
//! line per check, in insertion order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported without a threshold.
    Info,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        })
    }
}

impl FromStr for Verdict {
    type Err = ReportParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PASS" => Ok(Verdict::Pass),
            "FAIL" => Ok(Verdict::Fail),
            "INFO" => Ok(Verdict::Info),
            other => Err(ReportParseError::BadVerdict(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportParseError {
    #[error("line {line}: expected 4 tab-separated columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: bad number {text:?}")]
    BadNumber { line: usize, text: String },
    #[error("unknown verdict {0:?}")]
    BadVerdict(String),
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error("missing or malformed header")]
    Header,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub key: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub verdict: Verdict,
}

pub const REPORT_HEADER: &str = "key\tvalue\tthreshold\tverdict";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub entries: Vec<CheckEntry>,
}

impl DiagnosticsReport {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, key: &str, value: f64, threshold: Option<f64>, verdict: Verdict) {
        assert!(self.get(key).is_none(), "duplicate report key {key}");
        self.entries.push(CheckEntry { key: key.to_string(), value, threshold, verdict });
    }

    /// Passes when `value <= threshold`.
    pub fn check_le(&mut self, key: &str, value: f64, threshold: f64) -> bool {
        let ok = value <= threshold;
        self.push(key, value, Some(threshold), if ok { Verdict::Pass } else { Verdict::Fail });
        ok
    }

    /// Passes when `value >= threshold`.
    pub fn check_ge(&mut self, key: &str, value: f64, threshold: f64) -> bool {
        let ok = value >= threshold;
        self.push(key, value, Some(threshold), if ok { Verdict::Pass } else { Verdict::Fail });
        ok
    }

    /// Passes when `value > threshold`.
    pub fn check_gt(&mut self, key: &str, value: f64, threshold: f64) -> bool {
        let ok = value > threshold;
        self.push(key, value, Some(threshold), if ok { Verdict::Pass } else { Verdict::Fail });
        ok
    }

    /// Passes when `value < threshold`.
    pub fn check_lt(&mut self, key: &str, value: f64, threshold: f64) -> bool {
        let ok = value < threshold;
        self.push(key, value, Some(threshold), if ok { Verdict::Pass } else { Verdict::Fail });
        ok
    }

    /// Boolean check, recorded as value 1 or 0.
    pub fn check(&mut self, key: &str, ok: bool) -> bool {
        self.push(key, if ok { 1.0 } else { 0.0 }, Some(1.0), if ok { Verdict::Pass } else { Verdict::Fail });
        ok
    }

    pub fn info(&mut self, key: &str, value: f64) {
        self.push(key, value, None, Verdict::Info);
    }

    pub fn get(&self, key: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.verdict != Verdict::Fail)
    }

    pub fn failures(&self) -> Vec<&CheckEntry> {
        self.entries.iter().filter(|e| e.verdict == Verdict::Fail).collect()
    }

    pub fn extend(&mut self, other: DiagnosticsReport) {
        for e in other.entries {
            self.push(&e.key, e.value, e.threshold, e.verdict);
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for e in &self.entries {
            let t = e.threshold.map_or_else(|| "-".to_string(), |t| format!("{t:.6e}"));
            s.push_str(&format!("{}\t{:.6e}\t{}\t{}\n", e.key, e.value, t, e.verdict));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ReportParseError> {
        let mut lines = text.lines();
        if lines.next() != Some(REPORT_HEADER) {
            return Err(ReportParseError::Header);
        }
        let mut report = Self::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(ReportParseError::Columns { line: n + 2, found: cols.len() });
            }
            let num = |t: &str| {
                t.parse::<f64>().map_err(|_| ReportParseError::BadNumber { line: n + 2, text: t.to_string() })
            };
            let value = num(cols[1])?;
            let threshold = if cols[2] == "-" { None } else { Some(num(cols[2])?) };
            let verdict: Verdict = cols[3].parse()?;
            if report.get(cols[0]).is_some() {
                return Err(ReportParseError::DuplicateKey(cols[0].to_string()));
            }
            report.entries.push(CheckEntry { key: cols[0].to_string(), value, threshold, verdict });
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_roundtrip() {
        let mut r = DiagnosticsReport::new();
        r.check_le("a.b", 1e-3, 1e-2);
        r.check_ge("order", 1.5, 1.8);
        r.info("sigma_norm", 0.123456789);
        r.check("flag", true);
        let text = r.render();
        assert!(text.starts_with("key\tvalue\tthreshold\tverdict\n"));
        let back = DiagnosticsReport::parse(&text).unwrap();
        assert_eq!(back.render(), text);
        assert!(!back.all_pass());
        assert_eq!(back.failures().len(), 1);
        assert_eq!(back.get("sigma_norm").unwrap().verdict, Verdict::Info);
    }

    #[test]
    fn malformed_reports_are_rejected() {
        assert_eq!(DiagnosticsReport::parse("nope"), Err(ReportParseError::Header));
        let dup = format!("{REPORT_HEADER}\na\t1\t-\tINFO\na\t2\t-\tINFO\n");
        assert!(matches!(DiagnosticsReport::parse(&dup), Err(ReportParseError::DuplicateKey(_))));
        let bad = format!("{REPORT_HEADER}\na\tx\t-\tINFO\n");
        assert!(matches!(DiagnosticsReport::parse(&bad), Err(ReportParseError::BadNumber { .. })));
    }
}
