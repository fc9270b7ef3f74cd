use serde::Serialize;

use super::{AlphaMap, Region, Scheme};
use crate::error::{Error, Result};
use crate::stats::{mean_var_sample, CompensatedSum};

/// Temporal SNR of a stack of absorption maps.
#[derive(Clone, Debug, PartialEq)]
pub struct SnrReport {
    pub scheme: Scheme,
    pub pixels: Vec<usize>,
    /// `|temporal mean| / temporal sample std`; `None` where the std is zero.
    pub snr: Vec<Option<f64>>,
    /// Temporal mean absorption per pixel.
    pub mean_alpha: Vec<f64>,
    pub mean_snr: f64,
    pub n_frames: usize,
}

/// Per-pixel temporal mean over temporal standard deviation (n−1).
pub fn snr_map(alphas: &[AlphaMap]) -> Result<SnrReport> {
    if alphas.len() < 2 {
        return Err(Error::InsufficientFrames {
            needed: 2,
            got: alphas.len(),
        });
    }
    let first = &alphas[0];
    if let Some(bad) = alphas
        .iter()
        .find(|m| m.scheme != first.scheme || m.pixels != first.pixels)
    {
        return Err(Error::DimensionMismatch(format!(
            "alpha maps disagree on scheme or pixel set ({:?} vs {:?})",
            bad.scheme, first.scheme
        )));
    }
    let n_pix = first.pixels.len();
    let mut series = vec![0.0; alphas.len()];
    let mut snr = Vec::with_capacity(n_pix);
    let mut mean_alpha = Vec::with_capacity(n_pix);
    for j in 0..n_pix {
        for (slot, m) in series.iter_mut().zip(alphas) {
            *slot = m.values[j];
        }
        let (mean, var) = mean_var_sample(&series);
        mean_alpha.push(mean);
        snr.push(if var > 0.0 {
            Some(mean.abs() / var.sqrt())
        } else {
            None
        });
    }
    let defined: Vec<f64> = snr.iter().flatten().copied().collect();
    let mean_snr = if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().copied().collect::<CompensatedSum>().value() / defined.len() as f64
    };
    Ok(SnrReport {
        scheme: first.scheme,
        pixels: first.pixels.clone(),
        snr,
        mean_alpha,
        mean_snr,
        n_frames: alphas.len(),
    })
}

/// Spatially averaged SNR ratio with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ratio {
    pub value: f64,
    pub stderr: f64,
    pub n_pixels: usize,
}

/// Mean over `region` of `SNR_q(x) / SNR_classical(x)`; the error is the
/// pixel-to-pixel spread over √n. Pixels undefined in either report are
/// skipped; more than half skipped is an error.
pub fn r_ratio(snr_q: &SnrReport, snr_classical: &SnrReport, region: &Region) -> Result<Ratio> {
    let lookup = |rep: &SnrReport, x: usize| -> Option<f64> {
        rep.pixels.binary_search(&x).ok().and_then(|j| rep.snr[j])
    };
    let ratios: Vec<f64> = region
        .pixels()
        .iter()
        .filter_map(|&x| match (lookup(snr_q, x), lookup(snr_classical, x)) {
            (Some(q), Some(c)) if c > 0.0 => Some(q / c),
            _ => None,
        })
        .collect();
    if ratios.len() * 2 < region.len() {
        return Err(Error::Degenerate(format!(
            "SNR ratio defined on only {} of {} pixels",
            ratios.len(),
            region.len()
        )));
    }
    if ratios.len() == 1 {
        return Ok(Ratio {
            value: ratios[0],
            stderr: f64::NAN,
            n_pixels: 1,
        });
    }
    let (mean, var) = mean_var_sample(&ratios);
    Ok(Ratio {
        value: mean,
        stderr: (var / ratios.len() as f64).sqrt(),
        n_pixels: ratios.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(scheme: Scheme, values: Vec<f64>) -> AlphaMap {
        AlphaMap {
            scheme,
            width: values.len(),
            height: 1,
            pixels: (0..values.len()).collect(),
            values,
        }
    }

    #[test]
    fn two_frame_arithmetic() {
        let rep = snr_map(&[map(Scheme::Q, vec![0.04]), map(Scheme::Q, vec![0.06])]).unwrap();
        // mean 0.05, sample std 0.0141421
        assert!((rep.snr[0].unwrap() - 3.5355339).abs() < 1e-6);
        assert!((rep.mean_alpha[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn constant_series_is_undefined() {
        let rep = snr_map(&[
            map(Scheme::Cl, vec![0.05, 0.1]),
            map(Scheme::Cl, vec![0.05, 0.2]),
        ])
        .unwrap();
        assert_eq!(rep.snr[0], None);
        assert!(rep.snr[1].is_some());
    }

    #[test]
    fn needs_two_frames_and_matching_maps() {
        assert!(snr_map(&[map(Scheme::Q, vec![0.1])]).is_err());
        assert!(snr_map(&[map(Scheme::Q, vec![0.1]), map(Scheme::Cl, vec![0.2])]).is_err());
    }

    #[test]
    fn identical_reports_give_unit_ratio() {
        let rep = snr_map(&[
            map(Scheme::Q, vec![0.04, 0.1, 0.3]),
            map(Scheme::Q, vec![0.06, 0.2, 0.1]),
        ])
        .unwrap();
        let r = r_ratio(&rep, &rep, &Region::full(3, 1).unwrap()).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn mostly_undefined_is_an_error() {
        let rep = snr_map(&[
            map(Scheme::Q, vec![0.1, 0.1, 0.3]),
            map(Scheme::Q, vec![0.1, 0.1, 0.1]),
        ])
        .unwrap();
        assert!(r_ratio(&rep, &rep, &Region::full(3, 1).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(frames in proptest::collection::vec(proptest::collection::vec(-1.0..1.0f64, 4), 2..20), seed in any::<u64>()) {
            let maps: Vec<AlphaMap> = frames.iter().map(|v| map(Scheme::Q, v.clone())).collect();
            let mut shuffled = maps.clone();
            // Fisher-Yates with a fixed LCG
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let a = snr_map(&maps).unwrap();
            let b = snr_map(&shuffled).unwrap();
            for (x, y) in a.snr.iter().zip(&b.snr) {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0)),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
            }
        }
    }
}
