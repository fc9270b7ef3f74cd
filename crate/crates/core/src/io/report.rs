//! CSV tables emitted by the analysis and sweep runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One row of the per-frame correlation table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaRow {
    pub frame_id: usize,
    pub sigma: f64,
    pub mean_signal: f64,
    pub mean_idler: f64,
}

/// One row of the per-class SNR-ratio table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub j: usize,
    pub sigma_j: f64,
    pub n_frames: usize,
    #[serde(rename = "R_cl")]
    pub r_cl: f64,
    #[serde(rename = "R_cl_err")]
    pub r_cl_err: f64,
    #[serde(rename = "R_dcl")]
    pub r_dcl: f64,
    #[serde(rename = "R_dcl_err")]
    pub r_dcl_err: f64,
    #[serde(rename = "R_cl_theory")]
    pub r_cl_theory: f64,
    #[serde(rename = "R_dcl_theory")]
    pub r_dcl_theory: f64,
}

/// One row of an R-versus-σ sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: usize,
    pub eta: f64,
    pub sigma: f64,
    pub sigma_err: f64,
    pub excess_noise: f64,
    pub mean_detected: f64,
    pub n_frames: usize,
    #[serde(rename = "R_cl")]
    pub r_cl: f64,
    #[serde(rename = "R_cl_err")]
    pub r_cl_err: f64,
    #[serde(rename = "R_dcl")]
    pub r_dcl: f64,
    #[serde(rename = "R_dcl_err")]
    pub r_dcl_err: f64,
    #[serde(rename = "R_cl_theory")]
    pub r_cl_theory: f64,
    #[serde(rename = "R_dcl_theory")]
    pub r_dcl_theory: f64,
    pub snr_q: f64,
    pub snr_dcl: f64,
    pub snr_cl: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}
