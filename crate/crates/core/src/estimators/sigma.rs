use serde::Serialize;

use super::{Count, Region};
use crate::error::{Error, Result};
use crate::frame::{FramePair, FrameStack};
use crate::stats::CompensatedSum;

/// Correlation degree of one frame pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaEstimate {
    pub frame_id: usize,
    pub sigma: f64,
    pub n_pixels: usize,
    pub mean_signal: f64,
    pub mean_idler: f64,
}

/// Spatial variance of `N_i(m(x)) − N_s(x)` over the region (population,
/// 1/n) divided by the spatial mean of `N_i(m(x)) + N_s(x)`.
pub fn estimate_sigma<T: Count>(
    pair: FramePair<'_, T>,
    region: &Region,
    frame_id: usize,
) -> Result<SigmaEstimate> {
    region.check_frame(pair.width, pair.height)?;
    let n = region.len() as f64;
    let mut s_sum = CompensatedSum::new();
    let mut i_sum = CompensatedSum::new();
    for (&x, &p) in region.pixels().iter().zip(region.partners()) {
        s_sum.add(pair.signal[x].value());
        i_sum.add(pair.idler[p].value());
    }
    let mean_signal = s_sum.value() / n;
    let mean_idler = i_sum.value() / n;
    let mean_sum = mean_signal + mean_idler;
    if !(mean_sum > 0.0) {
        return Err(Error::Degenerate(format!(
            "frame {frame_id}: no photons in the region"
        )));
    }
    let mean_diff = mean_idler - mean_signal;
    let mut var = CompensatedSum::new();
    for (&x, &p) in region.pixels().iter().zip(region.partners()) {
        let d = pair.idler[p].value() - pair.signal[x].value() - mean_diff;
        var.add(d * d);
    }
    Ok(SigmaEstimate {
        frame_id,
        sigma: var.value() / n / mean_sum,
        n_pixels: region.len(),
        mean_signal,
        mean_idler,
    })
}

/// `(var − mean) / mean` over `pixels` for every frame.
pub fn excess_noise_per_frame(stack: &FrameStack, pixels: &[usize]) -> Result<Vec<f64>> {
    if pixels.is_empty() {
        return Err(Error::Degenerate("empty region".into()));
    }
    let p = stack.geometry.pixels();
    if let Some(&x) = pixels.iter().find(|&&x| x >= p) {
        return Err(Error::DimensionMismatch(format!(
            "pixel {x} outside the frame"
        )));
    }
    let n = pixels.len() as f64;
    stack
        .frames()
        .enumerate()
        .map(|(k, frame)| {
            let mean = pixels
                .iter()
                .map(|&x| frame[x] as f64)
                .collect::<CompensatedSum>()
                .value()
                / n;
            if !(mean > 0.0) {
                return Err(Error::Degenerate(format!("frame {k}: zero mean")));
            }
            let var = pixels
                .iter()
                .map(|&x| {
                    let d = frame[x] as f64 - mean;
                    d * d
                })
                .collect::<CompensatedSum>()
                .value()
                / n;
            Ok((var - mean) / mean)
        })
        .collect()
}

/// Single-beam excess noise, averaged over frames.
pub fn estimate_excess_noise(stack: &FrameStack, pixels: &[usize]) -> Result<f64> {
    let per_frame = excess_noise_per_frame(stack, pixels)?;
    Ok(crate::stats::sum(per_frame.iter().copied()) / per_frame.len() as f64)
}
