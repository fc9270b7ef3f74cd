use super::SigmaEstimate;
use crate::error::{Error, Result};

/// Classes with fewer members are discarded.
pub const DEFAULT_MIN_MEMBERS: usize = 20;

/// Frames whose σ falls into one bin.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameClass {
    pub id: usize,
    /// Mean σ of the members.
    pub sigma_mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub members: Vec<usize>,
}

/// Groups frames into `n_bins` equal-width σ bins spanning the observed
/// range. Bins with fewer than `min_members` frames (and never fewer than
/// two) are dropped; surviving classes are numbered in order of σ.
pub fn classify_frames(
    sigmas: &[SigmaEstimate],
    n_bins: usize,
    min_members: usize,
) -> Result<Vec<FrameClass>> {
    if n_bins == 0 {
        return Err(Error::param("n_bins", 0.0, "must be at least 1"));
    }
    if let Some(s) = sigmas.iter().find(|s| !s.sigma.is_finite()) {
        return Err(Error::Degenerate(format!(
            "frame {} has non-finite sigma",
            s.frame_id
        )));
    }
    let min_members = min_members.max(2);
    let lo = sigmas.iter().map(|s| s.sigma).fold(f64::INFINITY, f64::min);
    let hi = sigmas
        .iter()
        .map(|s| s.sigma)
        .fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;
    let mut bins: Vec<Vec<&SigmaEstimate>> = vec![Vec::new(); n_bins];
    for s in sigmas {
        let b = if width > 0.0 {
            (((s.sigma - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        };
        bins[b].push(s);
    }
    let classes: Vec<FrameClass> = bins
        .into_iter()
        .enumerate()
        .filter(|(_, members)| members.len() >= min_members)
        .enumerate()
        .map(|(id, (b, members))| FrameClass {
            id,
            sigma_mean: crate::stats::sum(members.iter().map(|s| s.sigma)) / members.len() as f64,
            lower: lo + width * b as f64,
            upper: if b + 1 == n_bins {
                hi
            } else {
                lo + width * (b + 1) as f64
            },
            members: members.iter().map(|s| s.frame_id).collect(),
        })
        .collect();
    if classes.is_empty() {
        return Err(Error::Degenerate(format!(
            "no sigma class reaches {min_members} frames"
        )));
    }
    Ok(classes)
}
