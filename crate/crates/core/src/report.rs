//! Report serialisation: JSON lines or CSV, one row per trial plus a
//! summary block. Floats are rounded to 6 significant digits so a fixed report
//! always produces the same bytes.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::experiment::{ExperimentReport, Summary, TrialResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Config(format!("unknown report format {s:?}"))),
        }
    }
}

impl Format {
    /// Guesses from the file extension, defaulting to JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

pub const CSV_HEADER: [&str; 5] = [
    "test_accuracy",
    "train_time",
    "final_validation_error",
    "evaluations",
    "seed",
];

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn rounded_trial(t: &TrialResult) -> TrialResult {
    TrialResult {
        test_accuracy: sig6(t.test_accuracy),
        train_time: sig6(t.train_time),
        final_validation_error: sig6(t.final_validation_error),
        evaluations: t.evaluations,
        seed: t.seed,
    }
}

fn rounded_summary(s: &Summary) -> Summary {
    let mut s = s.clone();
    s.mean_accuracy = sig6(s.mean_accuracy);
    s.std_accuracy = sig6(s.std_accuracy);
    s.mean_time = sig6(s.mean_time);
    s.mean_evaluations = sig6(s.mean_evaluations);
    s
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Line {
    Trial {
        trial: usize,
        #[serde(flatten)]
        result: TrialResult,
    },
    Summary(Summary),
}

pub fn to_jsonl(report: &ExperimentReport) -> Result<String> {
    if report.trials.is_empty() {
        return Err(Error::Report("no trials to emit".into()));
    }
    let mut out = String::new();
    for (i, t) in report.trials.iter().enumerate() {
        let line = Line::Trial {
            trial: i,
            result: rounded_trial(t),
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    out.push_str(&serde_json::to_string(&Line::Summary(rounded_summary(&report.summary)))?);
    out.push('\n');
    Ok(out)
}

pub fn to_csv(report: &ExperimentReport) -> Result<String> {
    if report.trials.is_empty() {
        return Err(Error::Report("no trials to emit".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for t in &report.trials {
        let t = rounded_trial(t);
        w.write_record([
            t.test_accuracy.to_string(),
            t.train_time.to_string(),
            t.final_validation_error.to_string(),
            t.evaluations.to_string(),
            t.seed.to_string(),
        ])?;
    }
    let body = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    let mut out = String::from_utf8(body).map_err(|e| Error::Report(e.to_string()))?;
    let summary = serde_json::to_string(&rounded_summary(&report.summary))?;
    out.push_str("#summary ");
    out.push_str(&summary);
    out.push('\n');
    Ok(out)
}

pub fn render(report: &ExperimentReport, format: Format) -> Result<String> {
    match format {
        Format::Jsonl => to_jsonl(report),
        Format::Csv => to_csv(report),
    }
}

pub fn emit_report(report: &ExperimentReport, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = render(report, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_jsonl(text: &str) -> Result<ExperimentReport> {
    let mut trials = Vec::new();
    let mut summary = None;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<Line>(line)? {
            Line::Trial { result, .. } => trials.push(result),
            Line::Summary(s) => summary = Some(s),
        }
    }
    let summary = summary.ok_or_else(|| Error::Report("missing summary record".into()))?;
    Ok(ExperimentReport { trials, summary })
}

pub fn parse_csv(text: &str) -> Result<ExperimentReport> {
    let mut summary = None;
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("#summary ") {
            summary = Some(serde_json::from_str::<Summary>(rest)?);
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::Report(format!("unexpected CSV header {header:?}")));
    }
    let trials = r.deserialize().collect::<std::result::Result<Vec<TrialResult>, _>>()?;
    let summary = summary.ok_or_else(|| Error::Report("missing summary block".into()))?;
    Ok(ExperimentReport { trials, summary })
}

/// Reads a report written by [`emit_report`], in either format.
pub fn read_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('{') {
        parse_jsonl(&text)
    } else {
        parse_csv(&text)
    }
}
