//! Machine-readable output: CSV tables with 17 significant digits, JSON
//! documents with the run configuration embedded, and check evidence files.
//!
//! Measure tables use the columns of [`MEASURE_COLUMNS`]; check evidence
//! tables use [`EVIDENCE_COLUMNS`]. Empty cells stand for absent values.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::checks::{CheckReport, Verdict};
use crate::error::{Error, Result};
use crate::lattice::{SetSpec, Site};
use crate::measures::MeasureValue;

pub const MEASURE_COLUMNS: [&str; 10] = [
    "quantity",
    "spec_hash",
    "x1",
    "x2",
    "n_or_m",
    "method",
    "value",
    "bracket_lo",
    "bracket_hi",
    "std_error",
];

pub const EVIDENCE_COLUMNS: [&str; 7] =
    ["check", "quantity", "index", "param", "value", "lo", "hi"];

/// A float with 17 significant digits, or an empty cell for `None`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// First 16 hex digits of the SHA-256 of the canonical JSON of a set spec.
pub fn spec_hash(spec: &SetSpec) -> String {
    let text = serde_json::to_string(spec).expect("set specs serialize");
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// One row of a measure table.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureRow {
    pub quantity: String,
    pub spec_hash: String,
    pub x: Option<Site>,
    pub index: i64,
    pub method: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub std_error: Option<f64>,
}

impl MeasureRow {
    pub fn from_value(
        quantity: &str,
        spec: Option<&SetSpec>,
        x: Option<Site>,
        index: i64,
        v: &MeasureValue,
    ) -> Self {
        MeasureRow {
            quantity: quantity.to_string(),
            spec_hash: spec.map(spec_hash).unwrap_or_default(),
            x,
            index,
            method: v.method.tag().to_string(),
            value: v.value,
            lo: v.bracket.lo,
            hi: v.bracket.hi,
            std_error: v.std_error,
        }
    }

    /// A bare number with no set, site or bracket.
    pub fn scalar(quantity: &str, index: i64, method: &str, value: f64) -> Self {
        MeasureRow {
            quantity: quantity.to_string(),
            spec_hash: String::new(),
            x: None,
            index,
            method: method.to_string(),
            value,
            lo: value,
            hi: value,
            std_error: None,
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_measure_csv(path: &Path, rows: &[MeasureRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(MEASURE_COLUMNS)
        .map_err(|e| csv_error(path, e))?;
    for r in rows {
        let (x1, x2) =
            r.x.map(|s| (s.x1.to_string(), s.x2.to_string()))
                .unwrap_or_default();
        w.write_record([
            r.quantity.clone(),
            r.spec_hash.clone(),
            x1,
            x2,
            r.index.to_string(),
            r.method.clone(),
            fmt_f64(r.value),
            fmt_f64(r.lo),
            fmt_f64(r.hi),
            fmt_opt(r.std_error),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_evidence_csv(path: &Path, report: &CheckReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(EVIDENCE_COLUMNS)
        .map_err(|e| csv_error(path, e))?;
    for r in &report.rows {
        w.write_record([
            report.id.name().to_string(),
            r.quantity.clone(),
            r.index.to_string(),
            fmt_opt(r.param),
            fmt_f64(r.value),
            fmt_f64(r.lo),
            fmt_f64(r.hi),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Write `<id>.json` and `<id>.csv` under `dir` and record the JSON path in the report.
pub fn write_check(dir: &Path, report: &mut CheckReport, config: &Value) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let json_path = dir.join(format!("{}.json", report.id));
    let csv_path = dir.join(format!("{}.csv", report.id));
    report.evidence = Some(csv_path.clone());
    write_evidence_csv(&csv_path, report)?;
    write_json(&json_path, &json!({ "config": config, "report": report }))?;
    Ok(json_path)
}

/// Aligned text table of check verdicts.
pub fn summary_table(reports: &[CheckReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.id.name().len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = format!(
        "{:<width$}  verdict       failing or undecided criteria\n",
        "check"
    );
    for r in reports {
        let open: Vec<&str> = r
            .criteria
            .iter()
            .filter(|c| c.verdict != Verdict::Pass)
            .map(|c| c.name.as_str())
            .collect();
        out.push_str(&format!(
            "{:<width$}  {:<12}  {}\n",
            r.id.name(),
            r.verdict.to_string(),
            open.join(", ")
        ));
    }
    out
}

pub fn write_summary_csv(path: &Path, reports: &[CheckReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["check", "criterion", "verdict", "detail"])
        .map_err(|e| csv_error(path, e))?;
    for r in reports {
        for c in &r.criteria {
            w.write_record([r.id.name(), &c.name, &c.verdict.to_string(), &c.detail])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Append a line to the sidecar log that holds everything run-dependent.
pub fn append_log(dir: &Path, line: &str) -> Result<()> {
    let path = dir.join("run.log");
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    writeln!(f, "{line}").map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::Bracket;
    use crate::measures::Method;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-7, -2.5e300] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn spec_hash_is_stable_and_distinguishes() {
        let a = spec_hash(&SetSpec::L0);
        assert_eq!(a, spec_hash(&SetSpec::L0));
        assert_eq!(a.len(), 16);
        assert_ne!(
            a,
            spec_hash(&SetSpec::L0Plus {
                sites: vec![[0, 1]]
            })
        );
    }

    #[test]
    fn measure_table_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let v = MeasureValue::bracketed(Bracket::new(0.9, 1.0, 1.25), Method::LineSum);
        let rows = [
            MeasureRow::from_value("stationary", Some(&SetSpec::L0), Some(Site::ORIGIN), 4, &v),
            MeasureRow::scalar("c", 0, "aitken", 0.5),
        ];
        write_measure_csv(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], MEASURE_COLUMNS.join(","));
        assert!(lines[1].starts_with("stationary,"));
        assert!(
            lines[1].contains(",0,0,4,line-sum,1.0000000000000000e0,9.0000000000000002e-1,1.25")
        );
        assert!(lines[2].ends_with(
            ",aitken,5.0000000000000000e-1,5.0000000000000000e-1,5.0000000000000000e-1,"
        ));
    }
}
