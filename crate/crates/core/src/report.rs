//! Risk tables as CSV and JSON.
//!
//! CSV floats use 17 significant digits in scientific notation so every
//! value parses back to the same `f64`.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::RiskCurve;

/// Column order of the CSV risk table.
pub const CSV_COLUMNS: [&str; 11] = [
    "strategy",
    "estimator",
    "n",
    "risk_mean",
    "risk_stderr",
    "risk_median",
    "failures",
    "crb",
    "crb_sharp",
    "crb_ultimate",
    "floor",
];

/// `x` with 17 significant digits. Non-finite values are `NaN`, `inf`, `-inf`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// One row of a risk table, as read back from CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub strategy: String,
    pub estimator: String,
    pub n: usize,
    pub risk_mean: f64,
    pub risk_stderr: f64,
    pub risk_median: f64,
    pub failures: usize,
    pub crb: f64,
    pub crb_sharp: f64,
    pub crb_ultimate: f64,
    pub floor: f64,
}

impl TableRow {
    pub fn from_curve(curve: &RiskCurve) -> Vec<TableRow> {
        curve
            .cells
            .iter()
            .map(|c| TableRow {
                strategy: c.strategy.clone(),
                estimator: c.estimator.name().into(),
                n: c.n,
                risk_mean: c.risk.mean,
                risk_stderr: c.risk.stderr,
                risk_median: c.risk.median,
                failures: c.risk.failures,
                crb: c.crb,
                crb_sharp: c.crb_sharp,
                crb_ultimate: c.crb_ultimate,
                floor: c.floor,
            })
            .collect()
    }

    fn fields(&self) -> [String; 11] {
        [
            self.strategy.clone(),
            self.estimator.clone(),
            self.n.to_string(),
            format_float(self.risk_mean),
            format_float(self.risk_stderr),
            format_float(self.risk_median),
            self.failures.to_string(),
            format_float(self.crb),
            format_float(self.crb_sharp),
            format_float(self.crb_ultimate),
            format_float(self.floor),
        ]
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidSpec(format!("csv: {e}"))
}

/// Writes rows with the fixed header.
pub fn write_csv<W: io::Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.fields()).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::InvalidSpec(format!("csv: {e}")))
}

pub fn curve_to_csv(curve: &RiskCurve) -> String {
    let mut buf = Vec::new();
    write_csv(&TableRow::from_curve(curve), &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

/// Parses a risk table. The header must contain every column of
/// [`CSV_COLUMNS`]; extra columns are rejected.
pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<TableRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    let missing: Vec<&str> = CSV_COLUMNS.iter().copied().filter(|c| !header.iter().any(|h| h == *c)).collect();
    if !missing.is_empty() {
        return Err(Error::InvalidSpec(format!("risk table is missing columns: {}", missing.join(", "))));
    }
    if let Some(extra) = header.iter().find(|h| !CSV_COLUMNS.contains(h)) {
        return Err(Error::InvalidSpec(format!("risk table has unknown column {extra:?}")));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// Full curve, including flags and diagnostics, as pretty JSON.
pub fn curve_to_json(curve: &RiskCurve) -> String {
    serde_json::to_string_pretty(curve).expect("curve serializes")
}
