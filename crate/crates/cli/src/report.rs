use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Format;
use crate::CliError;

pub const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    /// Smallest `margin` over the records; positive margins pass.
    pub worst_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub artifact: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    /// One JSON object per check, each with a boolean `passed`.
    pub records: Vec<Value>,
    pub summary: Summary,
    pub versions: Versions,
    /// Sub-reports of `report-all`, keyed by command.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sections: BTreeMap<String, Report>,
}

fn passed(record: &Value) -> bool {
    record.get("passed").and_then(Value::as_bool) == Some(true)
}

impl Summary {
    pub fn of(records: &[Value]) -> Summary {
        let ok = records.iter().filter(|r| passed(r)).count();
        let worst = records
            .iter()
            .filter_map(|r| r.get("margin").and_then(Value::as_f64))
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));
        Summary {
            passed: ok,
            failed: records.len() - ok,
            worst_margin: worst,
        }
    }

    fn merge(parts: impl Iterator<Item = Summary>) -> Summary {
        parts.fold(
            Summary {
                passed: 0,
                failed: 0,
                worst_margin: None,
            },
            |acc, s| Summary {
                passed: acc.passed + s.passed,
                failed: acc.failed + s.failed,
                worst_margin: match (acc.worst_margin, s.worst_margin) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                },
            },
        )
    }
}

impl Report {
    pub fn new(
        command: &str,
        inputs: BTreeMap<String, Value>,
        records: Vec<Value>,
        config_hash: String,
    ) -> Report {
        let summary = Summary::of(&records);
        normalized(Report {
            command: command.to_string(),
            inputs,
            records,
            summary,
            versions: Versions {
                artifact: env!("CARGO_PKG_VERSION").to_string(),
                config_hash,
            },
            sections: BTreeMap::new(),
        })
    }

    pub fn bundle(sections: BTreeMap<String, Report>, config_hash: String) -> Report {
        let summary = Summary::merge(sections.values().map(|r| r.summary.clone()));
        Report {
            command: "report-all".to_string(),
            inputs: BTreeMap::new(),
            records: Vec::new(),
            summary,
            versions: Versions {
                artifact: env!("CARGO_PKG_VERSION").to_string(),
                config_hash,
            },
            sections,
        }
    }

    /// Failing records, with the command they belong to.
    pub fn failing_records(&self) -> Vec<(String, &Value)> {
        let mut out: Vec<(String, &Value)> = self
            .records
            .iter()
            .filter(|r| !passed(r))
            .map(|r| (self.command.clone(), r))
            .collect();
        for s in self.sections.values() {
            out.extend(s.failing_records());
        }
        out
    }
}

/// `x` rounded to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().map(round_sig) {
                *v = Value::from(x);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Rounds every float so that emitting and re-parsing is the identity.
fn normalized(report: Report) -> Report {
    let mut v = serde_json::to_value(&report).expect("report serializes");
    round_value(&mut v);
    serde_json::from_value(v).expect("rounded report deserializes")
}

/// Header per command; `reduction` is `a,b,h_of_a,h_nu,margin`.
pub fn csv_columns(command: &str) -> Option<&'static [&'static str]> {
    Some(match command {
        "n0" => &["check", "n0", "tol", "lo", "hi", "margin", "passed"],
        "certify-bounds" => &[
            "n",
            "nu",
            "alpha",
            "alpha_argmax",
            "beta",
            "sum",
            "err_estimate",
            "quoted",
            "slack",
            "margin",
            "passed",
        ],
        "reduction" => &["a", "b", "h_of_a", "h_nu", "margin"],
        "oracle" => &[
            "check",
            "n_dim",
            "a",
            "b",
            "cells",
            "lambda_fd",
            "lambda_exact",
            "rel_err",
            "tolerance",
            "rate",
            "margin",
            "passed",
        ],
        "cone" => &[
            "check",
            "n_dim",
            "avr",
            "v",
            "lhs",
            "rhs",
            "rel_gap",
            "tolerance",
            "margin",
            "passed",
        ],
        "rearrange-verify" => &["check", "value", "tolerance", "margin", "passed"],
        _ => return None,
    })
}

fn format_number(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn csv_cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::Number(n)) => match n.as_f64() {
            Some(x) if n.is_f64() => format_number(x),
            _ => n.to_string(),
        },
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

/// Report text in the requested format.
pub fn render(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            // through Value so that every object has sorted keys
            let v = serde_json::to_value(report).map_err(|e| CliError::Format(e.to_string()))?;
            let mut s =
                serde_json::to_string_pretty(&v).map_err(|e| CliError::Format(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let cols = csv_columns(&report.command)
                .ok_or_else(|| CliError::Usage(format!("no CSV layout for {}", report.command)))?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let fail = |e: csv::Error| CliError::Format(e.to_string());
            w.write_record(cols).map_err(fail)?;
            for r in &report.records {
                w.write_record(cols.iter().map(|c| csv_cell(r.get(*c))))
                    .map_err(fail)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Format(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Format(e.to_string()))
        }
    }
}

/// Writes the report to `out`, or to stdout when no path is given.
pub fn emit(report: &Report, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    let text = render(report, format)?;
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
