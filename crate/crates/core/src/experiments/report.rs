//! CSV and plain-text emission.
//!
//! Floats are written with 17 significant digits so that identical runs give
//! identical bytes and every value round-trips.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simulator::McReport;

/// `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// One line of `report.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment_id: String,
    pub grid_n: usize,
    pub gamma: f64,
    pub paths: usize,
    pub seed: u64,
    pub aborted: usize,
    pub mean_gap_sq: f64,
    pub se_gap: f64,
    pub mean_cost: f64,
    pub se_cost: f64,
    pub closed_form_cost: f64,
    pub mean_abs_control_sq: f64,
    pub se_abs_control_sq: f64,
    pub mean_weighted_control_sq: f64,
    pub se_weighted_control_sq: f64,
    /// `mean_gap_sq` divided by the previous row's, in convergence studies.
    pub gap_ratio: Option<f64>,
    pub measure: String,
}

pub const REPORT_HEADER: [&str; 17] = [
    "experiment_id",
    "grid_n",
    "gamma",
    "paths",
    "seed",
    "aborted",
    "mean_gap_sq",
    "se_gap",
    "mean_cost",
    "se_cost",
    "closed_form_cost",
    "mean_abs_control_sq",
    "se_abs_control_sq",
    "mean_weighted_control_sq",
    "se_weighted_control_sq",
    "gap_ratio",
    "measure",
];

impl ReportRow {
    pub fn new(id: &str, grid_n: usize, gamma: f64, seed: u64, rep: &McReport) -> Self {
        Self {
            experiment_id: id.into(),
            grid_n,
            gamma,
            paths: rep.n_paths,
            seed,
            aborted: rep.n_aborted,
            mean_gap_sq: rep.gap_sq.mean,
            se_gap: rep.gap_sq.se,
            mean_cost: rep.cost.mean,
            se_cost: rep.cost.se,
            closed_form_cost: rep.closed_form_cost,
            mean_abs_control_sq: rep.abs_control_sq.mean,
            se_abs_control_sq: rep.abs_control_sq.se,
            mean_weighted_control_sq: rep.weighted_control_sq.mean,
            se_weighted_control_sq: rep.weighted_control_sq.se,
            gap_ratio: None,
            measure: rep.measure.label().into(),
        }
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            self.experiment_id.clone(),
            self.grid_n.to_string(),
            fmt_f64(self.gamma),
            self.paths.to_string(),
            self.seed.to_string(),
            self.aborted.to_string(),
            fmt_f64(self.mean_gap_sq),
            fmt_f64(self.se_gap),
            fmt_f64(self.mean_cost),
            fmt_f64(self.se_cost),
            fmt_f64(self.closed_form_cost),
            fmt_f64(self.mean_abs_control_sq),
            fmt_f64(self.se_abs_control_sq),
            fmt_f64(self.mean_weighted_control_sq),
            fmt_f64(self.se_weighted_control_sq),
            fmt_opt(self.gap_ratio),
            self.measure.clone(),
        ]
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes a header and rows of pre-formatted fields.
pub(crate) fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}
