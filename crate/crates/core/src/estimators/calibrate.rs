use rayon::prelude::*;
use serde::Serialize;

use super::{estimate_sigma, Region, ShiftVector};
use crate::error::{Error, Result};
use crate::frame::PairStack;

/// Outcome of the mirror-registration search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub shift: ShiftVector,
    pub mean_sigma: f64,
    /// Best σ minus the median σ of all other shifts, in units of the
    /// robust shift-to-shift spread.
    pub contrast: f64,
    /// False when σ is flat in the shift, i.e. the arms look uncorrelated.
    pub confident: bool,
}

/// Contrast (in robust standard deviations) the best shift must reach.
const CONFIDENCE_CONTRAST: f64 = 4.0;

/// Finds the idler grid shift that minimizes the mean per-frame σ.
///
/// Every shift with `|dx|, |dy| <= search_radius` is scored on the same
/// interior region. Ties go to the smallest `|shift|`, then to the smallest
/// `(dx, dy)`.
pub fn calibrate_center(pairs: &PairStack, search_radius: usize) -> Result<Calibration> {
    const MIN_FRAMES: usize = 10;
    if pairs.n_frames() < MIN_FRAMES {
        return Err(Error::InsufficientFrames {
            needed: MIN_FRAMES,
            got: pairs.n_frames(),
        });
    }
    let g = pairs.geometry();
    let base = Region::interior(g.width, g.height, search_radius)?;
    let r = search_radius as i64;
    let shifts: Vec<ShiftVector> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| ShiftVector::new(dx, dy)))
        .collect();

    let scores: Vec<(ShiftVector, Option<f64>)> = shifts
        .par_iter()
        .map(|&s| {
            let region =
                match Region::from_pixels(g.width, g.height, base.pixels().iter().copied(), s) {
                    Ok(r) => r,
                    Err(_) => return (s, None),
                };
            let sigmas: Result<Vec<f64>> = (0..pairs.n_frames())
                .map(|k| estimate_sigma(pairs.frame(k), &region, k).map(|e| e.sigma))
                .collect();
            let mean = sigmas
                .ok()
                .map(|v| crate::stats::sum(v.iter().copied()) / v.len() as f64);
            (s, mean)
        })
        .collect();

    let mut valid: Vec<(ShiftVector, f64)> = scores
        .into_iter()
        .filter_map(|(s, m)| m.filter(|m| m.is_finite()).map(|m| (s, m)))
        .collect();
    if valid.is_empty() {
        return Err(Error::Degenerate(
            "sigma is not computable at any shift".into(),
        ));
    }
    valid.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(a.0.norm2().cmp(&b.0.norm2()))
            .then((a.0.dx, a.0.dy).cmp(&(b.0.dx, b.0.dy)))
    });
    let (shift, mean_sigma) = valid[0];

    let mut others: Vec<f64> = valid[1..].iter().map(|v| v.1).collect();
    let (contrast, confident) = if others.len() < 3 {
        (f64::NAN, false)
    } else {
        others.sort_by(f64::total_cmp);
        let median = others[others.len() / 2];
        let mut dev: Vec<f64> = others.iter().map(|v| (v - median).abs()).collect();
        dev.sort_by(f64::total_cmp);
        let spread = 1.4826 * dev[dev.len() / 2];
        let gap = median - mean_sigma;
        let contrast = if spread > 0.0 {
            gap / spread
        } else if gap > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        (contrast, contrast > CONFIDENCE_CONTRAST)
    };
    Ok(Calibration {
        shift,
        mean_sigma,
        contrast,
        confident,
    })
}
