//! Suite report rendering: plain text for terminals, JSON mirroring the data
//! model. Both are deterministic for identical inputs.

use serde::Serialize;

use crate::eval::EvalResult;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub metamodel: String,
    pub valid: bool,
    pub warnings: Vec<String>,
    pub results: Vec<EvalResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn render_report(report: &SuiteReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut out = String::new();
            for w in &report.warnings {
                out.push_str(&format!("warning: {w}\n"));
            }
            for r in &report.results {
                if r.valid {
                    out.push_str(&format!("constraint {}: ok\n", r.constraint));
                } else {
                    out.push_str(&format!(
                        "constraint {}: VIOLATED ({} counterexample(s))\n",
                        r.constraint,
                        r.counterexamples.len()
                    ));
                    out.push_str(&format!("  {}\n", r.description));
                    for a in &r.counterexamples {
                        out.push_str(&format!("  {}\n", a.render()));
                    }
                }
            }
            if report.valid {
                out.push_str("ALL CONSTRAINTS SATISFIED\n");
            } else {
                let n = report.results.iter().filter(|r| !r.valid).count();
                out.push_str(&format!("{n} CONSTRAINT(S) VIOLATED\n"));
            }
            out
        }
    }
}
