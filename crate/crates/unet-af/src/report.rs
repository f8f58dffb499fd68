//! Report files: per-displacement CSV and JSON summaries.

use std::fs;
use std::path::Path;

use serde::Serialize;
use unet_af_core::metrics::{cap_db, EquivReport};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 4] = ["gx", "gy", "error_psnr_db", "restoration_psnr_db"];

fn db_field(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(v) if v.is_infinite() && v > 0.0 => "inf".into(),
        Some(v) => format!("{v}"),
    }
}

pub fn equiv_csv(report: &EquivReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in &report.records {
        w.write_record([
            format!("{}", r.g.gx),
            format!("{}", r.g.gy),
            db_field(r.error_psnr),
            db_field(r.restoration_psnr),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialSummary {
    pub max_disp: f64,
    pub worst_db: f64,
}

/// JSON summary; infinite values are written as the aggregate cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean_db: f64,
    pub std_db: f64,
    pub n: usize,
    pub adversarial: Vec<AdversarialSummary>,
}

impl From<&EquivReport> for Summary {
    fn from(r: &EquivReport) -> Self {
        Summary {
            mean_db: r.mean_db,
            std_db: r.std_db,
            n: r.n,
            adversarial: r
                .adversarial
                .iter()
                .map(|l| AdversarialSummary { max_disp: l.max_disp, worst_db: cap_db(l.worst_db) })
                .collect(),
        }
    }
}

pub fn summary_json(report: &EquivReport) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Summary::from(report))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_file(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_equiv_report(dir: impl AsRef<Path>, stem: &str, report: &EquivReport) -> Result<()> {
    let dir = dir.as_ref();
    write_file(dir.join(format!("{stem}.csv")), &equiv_csv(report)?)?;
    write_file(dir.join(format!("{stem}.json")), &summary_json(report)?)
}
