//! Detection chain: object absorption, channel loss, detector background
//! and pixel binning.
//!
//! Absorption and loss act on discrete photons, so both are binomial
//! thinnings rather than deterministic scalings.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Arm, FrameStack, Geometry, PairStack};
use crate::rng::{frame_rng, Stage};
use crate::statgen::{sample_binomial, sample_poisson};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    /// Overall transmission of the signal channel, detector efficiency included.
    pub eta_signal: f64,
    pub eta_idler: f64,
    #[serde(default)]
    pub dark_mean: f64,
    #[serde(default)]
    pub read_noise_rms: f64,
    #[serde(default = "one")]
    pub bin_factor: usize,
}

fn one() -> usize {
    1
}

impl DetectorModel {
    /// Balanced, noiseless detector with efficiency `eta` in both arms.
    pub fn ideal(eta: f64) -> Self {
        DetectorModel {
            eta_signal: eta,
            eta_idler: eta,
            dark_mean: 0.0,
            read_noise_rms: 0.0,
            bin_factor: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("eta_signal", self.eta_signal)?;
        check_probability("eta_idler", self.eta_idler)?;
        if !(self.dark_mean.is_finite() && self.dark_mean >= 0.0) {
            return Err(Error::param(
                "dark_mean",
                self.dark_mean,
                "must be nonnegative",
            ));
        }
        if !(self.read_noise_rms.is_finite() && self.read_noise_rms >= 0.0) {
            return Err(Error::param(
                "read_noise_rms",
                self.read_noise_rms,
                "must be nonnegative",
            ));
        }
        if self.bin_factor == 0 {
            return Err(Error::param("bin_factor", 0.0, "must be at least 1"));
        }
        Ok(())
    }

    /// The closed-form predictions assume equal losses in both arms.
    pub fn is_balanced(&self) -> bool {
        (self.eta_signal - self.eta_idler).abs() < 1e-12
    }

    pub fn has_background(&self) -> bool {
        self.dark_mean > 0.0 || self.read_noise_rms > 0.0
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(name, p, "must lie in [0, 1]"));
    }
    Ok(())
}

/// Per-pixel absorption α(x) ∈ [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectMask {
    width: usize,
    height: usize,
    alpha: Vec<f64>,
}

impl ObjectMask {
    pub fn new(width: usize, height: usize, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} mask values for {width}x{height}",
                alpha.len()
            )));
        }
        if let Some(&a) = alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::param("alpha", a, "must lie in [0, 1]"));
        }
        Ok(ObjectMask {
            width,
            height,
            alpha,
        })
    }

    pub fn uniform(width: usize, height: usize, alpha: f64) -> Result<Self> {
        Self::new(width, height, vec![alpha; width * height])
    }

    /// Absorber covering the left half of the frame (`col < width / 2`);
    /// the right half stays clear for correlation measurements.
    pub fn half_plane(width: usize, height: usize, alpha: f64) -> Result<Self> {
        let values = (0..width * height)
            .map(|i| if i % width < width / 2 { alpha } else { 0.0 })
            .collect();
        Self::new(width, height, values)
    }

    /// A "π" glyph: a horizontal bar over two legs, the right one with a
    /// small outward foot.
    pub fn pi_glyph(width: usize, height: usize, alpha: f64) -> Result<Self> {
        let fx = |c: usize| (c as f64 + 0.5) / width as f64;
        let fy = |r: usize| (r as f64 + 0.5) / height as f64;
        let mut values = vec![0.0; width * height];
        for r in 0..height {
            for c in 0..width {
                let (x, y) = (fx(c), fy(r));
                let bar = (0.18..0.30).contains(&y) && (0.15..0.85).contains(&x);
                let left = (0.30..0.80).contains(&y) && (0.30..0.40).contains(&x);
                let right = (0.30..0.80).contains(&y) && (0.60..0.70).contains(&x);
                let foot = (0.72..0.80).contains(&y) && (0.70..0.78).contains(&x);
                if bar || left || right || foot {
                    values[r * width + c] = alpha;
                }
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn is_clear(&self) -> bool {
        self.alpha.iter().all(|&a| a == 0.0)
    }

    fn check_against(&self, g: &Geometry) -> Result<()> {
        if self.width != g.width || self.height != g.height {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs frames {}x{}",
                self.width, self.height, g.width, g.height
            )));
        }
        Ok(())
    }

    /// Mask seen by a binned detector: α averaged over each block, which is
    /// the transmission loss of the summed block for a flat illumination.
    pub fn binned(&self, factor: usize) -> Result<ObjectMask> {
        if factor == 0 || !self.width.is_multiple_of(factor) || !self.height.is_multiple_of(factor)
        {
            return Err(Error::DimensionMismatch(format!(
                "bin factor {factor} does not divide {}x{}",
                self.width, self.height
            )));
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let mut out = vec![0.0; w * h];
        for r in 0..self.height {
            for c in 0..self.width {
                out[(r / factor) * w + c / factor] += self.alpha[r * self.width + c];
            }
        }
        let n = (factor * factor) as f64;
        out.iter_mut().for_each(|a| *a /= n);
        ObjectMask::new(w, h, out)
    }
}

fn map_frames<F>(stack: &FrameStack, stage: Stage, seed: u64, f: F) -> FrameStack
where
    F: Fn(&mut crate::rng::FrameRng, usize, u32) -> u32 + Sync,
{
    let mut out = stack.clone();
    let p = stack.geometry.pixels();
    out.counts_mut()
        .par_chunks_mut(p)
        .enumerate()
        .for_each(|(k, frame)| {
            let mut rng = frame_rng(seed, stage, stack.arm, k);
            for (x, c) in frame.iter_mut().enumerate() {
                *c = f(&mut rng, x, *c);
            }
        });
    out
}

/// Thins each pixel by an independent Binomial(n, 1 − α(x)).
pub fn apply_object(signal: &FrameStack, mask: &ObjectMask, seed: u64) -> Result<FrameStack> {
    mask.check_against(&signal.geometry)?;
    let alpha = mask.alpha();
    Ok(map_frames(signal, Stage::Object, seed, |rng, x, n| {
        sample_binomial(rng, n, 1.0 - alpha[x])
    }))
}

/// Thins each pixel by an independent Binomial(n, eta).
pub fn apply_loss(stack: &FrameStack, eta: f64, seed: u64) -> Result<FrameStack> {
    check_probability("eta", eta)?;
    Ok(map_frames(stack, Stage::Loss, seed, |rng, _, n| {
        sample_binomial(rng, n, eta)
    }))
}

/// Adds Poisson dark counts and rounded Gaussian read noise, clamped at zero.
pub fn add_background(stack: &FrameStack, det: &DetectorModel, seed: u64) -> Result<FrameStack> {
    det.validate()?;
    if !det.has_background() {
        return Ok(stack.clone());
    }
    let read = Normal::new(0.0, det.read_noise_rms).expect("finite rms");
    let dark = det.dark_mean;
    let rms = det.read_noise_rms;
    Ok(map_frames(stack, Stage::Background, seed, |rng, _, n| {
        let mut v = n as i64 + sample_poisson(rng, dark) as i64;
        if rms > 0.0 {
            v += read.sample(rng).round() as i64;
        }
        v.clamp(0, u32::MAX as i64) as u32
    }))
}

/// Sums `factor`×`factor` blocks of pixels.
pub fn bin_pixels(stack: &FrameStack, factor: usize) -> Result<FrameStack> {
    let g = stack.geometry;
    if factor == 0 || !g.width.is_multiple_of(factor) || !g.height.is_multiple_of(factor) {
        return Err(Error::DimensionMismatch(format!(
            "bin factor {factor} does not divide {}x{}",
            g.width, g.height
        )));
    }
    if factor == 1 {
        return Ok(stack.clone());
    }
    let out_g = Geometry {
        width: g.width / factor,
        height: g.height / factor,
        n_frames: g.n_frames,
    };
    let mut out = FrameStack::zeros(out_g, stack.arm);
    out.counts_mut()
        .par_chunks_mut(out_g.pixels())
        .zip(stack.counts().par_chunks(g.pixels()))
        .for_each(|(dst, src)| {
            for r in 0..g.height {
                let orow = (r / factor) * out_g.width;
                for c in 0..g.width {
                    dst[orow + c / factor] += src[r * g.width + c];
                }
            }
        });
    Ok(out)
}

/// Full detection chain for one run.
///
/// Order: object (signal arm only), per-arm loss, background on both arms,
/// then binning on both arms. The idler never sees the mask.
pub fn run_chain(
    signal_pre: &FrameStack,
    idler_pre: &FrameStack,
    mask: Option<&ObjectMask>,
    det: &DetectorModel,
    seed: u64,
) -> Result<PairStack> {
    det.validate()?;
    if signal_pre.geometry != idler_pre.geometry {
        return Err(Error::DimensionMismatch(
            "signal and idler stacks differ".into(),
        ));
    }
    if !det.is_balanced() {
        log::warn!(
            "unbalanced efficiencies ({} vs {}); closed-form predictions assume equal losses",
            det.eta_signal,
            det.eta_idler
        );
    }
    let mut signal = signal_pre.clone().with_arm(Arm::Signal);
    let idler = idler_pre.clone().with_arm(Arm::Idler);
    if let Some(mask) = mask {
        signal = apply_object(&signal, mask, seed)?;
    }
    let signal = apply_loss(&signal, det.eta_signal, seed)?;
    let idler = apply_loss(&idler, det.eta_idler, seed)?;
    let signal = add_background(&signal, det, seed)?;
    let idler = add_background(&idler, det, seed)?;
    PairStack::new(
        bin_pixels(&signal, det.bin_factor)?,
        bin_pixels(&idler, det.bin_factor)?,
    )
}
