//! The text/JSON report record shared by the CLI subcommands.
//!
//! Every numeric field carries both the exact rational (as a `p/q` string)
//! and a decimal rendering; the rational is authoritative.

use serde::Serialize;

use crate::dist::{display_rat, rat_to_f64, Rat};

#[derive(Clone, Debug, Serialize)]
pub struct RatField {
    pub rational: String,
    pub decimal: f64,
}

impl RatField {
    pub fn new(r: &Rat) -> Self {
        RatField {
            rational: display_rat(r),
            decimal: rat_to_f64(r),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub query: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicate: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<RatField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<RatField>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone_history: Option<Vec<HistoryPoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<McFields>,
    /// Reminder that the adversary value is a full-view upper bound for
    /// every tape-censored scheduler.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HistoryPoint {
    pub horizon: u64,
    pub value: RatField,
}

#[derive(Clone, Debug, Serialize)]
pub struct McFields {
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub timeouts: u64,
    pub stucks: u64,
}

impl From<&crate::mc::Estimate> for McFields {
    fn from(e: &crate::mc::Estimate) -> Self {
        McFields {
            successes: e.successes,
            trials: e.trials,
            point: e.point,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            confidence: e.confidence,
            timeouts: e.timeouts,
            stucks: e.stucks,
        }
    }
}

impl Report {
    pub fn new(query: impl Into<String>, mode: impl Into<String>) -> Self {
        Report {
            query: query.into(),
            mode: mode.into(),
            ..Report::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable rendering used when `--json` is absent.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("query: {} ({})\n", self.query, self.mode));
        if let Some(f) = &self.fixture {
            out.push_str(&format!("fixture: {f}\n"));
        }
        if let Some(p) = &self.predicate {
            out.push_str(&format!("predicate: {p}\n"));
        }
        if let Some(s) = &self.scheduler {
            out.push_str(&format!("scheduler: {s}\n"));
        }
        if let Some(h) = self.horizon {
            out.push_str(&format!("horizon: {h}\n"));
        }
        if let Some(v) = &self.value {
            out.push_str(&format!("value: {} ({})\n", v.rational, v.decimal));
        }
        if let Some(r) = &self.residual {
            out.push_str(&format!("residual: {} ({})\n", r.rational, r.decimal));
        }
        if let Some(d) = &self.distribution {
            out.push_str(&format!("distribution: {d}\n"));
        }
        if let Some(hist) = &self.monotone_history {
            out.push_str("history:\n");
            for p in hist {
                out.push_str(&format!(
                    "  H={} -> {} ({})\n",
                    p.horizon, p.value.rational, p.value.decimal
                ));
            }
        }
        if let Some(w) = &self.witness {
            let s: Vec<String> = w.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!("witness script: [{}]\n", s.join(", ")));
        }
        if let Some(e) = &self.estimate {
            out.push_str(&format!(
                "estimate: {}/{} = {} ({}% CI [{}, {}], {} timeouts, {} stuck)\n",
                e.successes,
                e.trials,
                e.point,
                e.confidence * 100.0,
                e.ci_low,
                e.ci_high,
                e.timeouts,
                e.stucks
            ));
        }
        if let Some(n) = &self.note {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}
