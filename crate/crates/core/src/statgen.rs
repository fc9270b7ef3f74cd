//! Pre-detection photon-count generators.
//!
//! Twin-beam pair counts, coherent and multithermal single beams, and the
//! beam-splitter used to build the split-coherent benchmark. Multithermal
//! counts are drawn as a Gamma-Poisson mixture so the mode count may be any
//! positive real.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Arm, FrameStack, Geometry, PairStack};
use crate::rng::{frame_rng, Stage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Twin,
    Coherent,
    Thermal,
    CoherentSplit,
}

/// Redistribution of an idler photon around the mirror position of its
/// partner, over the `(2r+1)²` offset grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PairKernel {
    radius: usize,
    weights: Vec<f64>,
    /// Nonzero offsets `(dx, dy, weight)` sorted by decreasing weight.
    offsets: Vec<(i64, i64, f64)>,
}

impl PairKernel {
    pub fn delta() -> Self {
        Self::from_weights(0, vec![1.0]).expect("delta kernel")
    }

    pub fn uniform(radius: usize) -> Self {
        let side = 2 * radius + 1;
        Self::from_weights(radius, vec![1.0; side * side]).expect("uniform kernel")
    }

    /// Gaussian profile of standard deviation `std` pixels truncated at `radius`.
    pub fn gaussian(radius: usize, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::param("kernel.std", std, "must be positive"));
        }
        let r = radius as i64;
        let mut weights = Vec::with_capacity((2 * radius + 1).pow(2));
        for dy in -r..=r {
            for dx in -r..=r {
                let d2 = (dx * dx + dy * dy) as f64;
                weights.push((-d2 / (2.0 * std * std)).exp());
            }
        }
        Self::from_weights(radius, weights)
    }

    /// Row-major weights on the offset grid (dy outer, dx inner), normalized
    /// to unit sum.
    pub fn from_weights(radius: usize, weights: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if weights.len() != side * side {
            return Err(Error::Config(format!(
                "kernel of radius {radius} needs {} weights, got {}",
                side * side,
                weights.len()
            )));
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::param(
                "kernel weight",
                w,
                "must be finite and nonnegative",
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::param("kernel weight sum", total, "must be positive"));
        }
        let weights: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let r = radius as i64;
        let mut offsets: Vec<(i64, i64, f64)> = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| ((i % side) as i64 - r, (i / side) as i64 - r, w))
            .collect();
        offsets.sort_by(|a, b| {
            b.2.total_cmp(&a.2)
                .then((a.0 * a.0 + a.1 * a.1).cmp(&(b.0 * b.0 + b.1 * b.1)))
                .then((a.1, a.0).cmp(&(b.1, b.0)))
        });
        Ok(PairKernel {
            radius,
            weights,
            offsets,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_delta(&self) -> bool {
        self.offsets.len() == 1 && self.offsets[0].0 == 0 && self.offsets[0].1 == 0
    }

    /// Largest offset that carries nonzero weight.
    pub fn support_radius(&self) -> usize {
        self.offsets
            .iter()
            .map(|&(dx, dy, _)| dx.unsigned_abs().max(dy.unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }
}

impl Default for PairKernel {
    fn default() -> Self {
        Self::delta()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceModel {
    pub kind: SourceKind,
    /// Mean photons per pixel per frame in each arm, before detection.
    pub n0: f64,
    /// Modes per pixel (shape of the Gamma mixing law).
    pub modes: f64,
    /// Pair spread; only used by twin sources.
    pub kernel: PairKernel,
}

impl SourceModel {
    pub fn twin(n0: f64, modes: f64, kernel: PairKernel) -> Self {
        SourceModel {
            kind: SourceKind::Twin,
            n0,
            modes,
            kernel,
        }
    }

    pub fn coherent(n0: f64) -> Self {
        SourceModel {
            kind: SourceKind::Coherent,
            n0,
            modes: f64::INFINITY,
            kernel: PairKernel::delta(),
        }
    }

    pub fn thermal(n0: f64, modes: f64) -> Self {
        SourceModel {
            kind: SourceKind::Thermal,
            n0,
            modes,
            kernel: PairKernel::delta(),
        }
    }

    pub fn coherent_split(n0: f64) -> Self {
        SourceModel {
            kind: SourceKind::CoherentSplit,
            ..Self::coherent(n0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_n0(self.n0)?;
        if matches!(self.kind, SourceKind::Twin | SourceKind::Thermal) {
            check_modes(self.modes)?;
        }
        Ok(())
    }
}

fn check_n0(n0: f64) -> Result<()> {
    if !(n0.is_finite() && n0 >= 0.0) {
        return Err(Error::param("n0", n0, "must be finite and nonnegative"));
    }
    Ok(())
}

fn check_modes(modes: f64) -> Result<()> {
    if !(modes > 0.0) {
        return Err(Error::param("modes", modes, "must be positive"));
    }
    Ok(())
}

#[inline]
pub(crate) fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let k: f64 = Poisson::new(lambda).expect("finite rate").sample(rng);
    k as u32
}

/// One multithermal count: rate ~ Gamma(shape = modes, mean = n0), count ~ Poisson(rate).
#[inline]
pub(crate) fn sample_multithermal<R: Rng + ?Sized>(rng: &mut R, n0: f64, modes: f64) -> u32 {
    if n0 <= 0.0 {
        return 0;
    }
    let rate = if modes.is_finite() {
        Gamma::new(modes, n0 / modes)
            .expect("positive shape")
            .sample(rng)
    } else {
        n0
    };
    sample_poisson(rng, rate)
}

#[inline]
pub(crate) fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, n: u32, p: f64) -> u32 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n as u64, p).expect("p in (0,1)").sample(rng) as u32
    }
}

/// Routes each of the `n` idler photons of a pair pixel to an offset around
/// `center` (multinomial split by conditional binomials). Photons landing
/// off the grid are dropped; their number is returned.
pub fn spread_pairs<R: Rng + ?Sized>(
    rng: &mut R,
    geometry: &Geometry,
    kernel: &PairKernel,
    center: usize,
    n: u32,
    idler: &mut [u32],
) -> u64 {
    let mut dropped = 0u64;
    let mut remaining = n;
    let mut mass = 1.0;
    let last = kernel.offsets.len() - 1;
    for (i, &(dx, dy, w)) in kernel.offsets.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let k = if i == last {
            remaining
        } else {
            sample_binomial(rng, remaining, (w / mass).min(1.0))
        };
        mass -= w;
        remaining -= k;
        match geometry.offset(center, dx, dy) {
            Some(target) => idler[target] += k,
            None => dropped += k as u64,
        }
    }
    dropped
}

/// Twin-beam pre-detection stacks.
///
/// Each signal pixel receives a multithermal pair count `n(x)`; the idler
/// partners of those pairs land at the mirror pixel, redistributed by the
/// source kernel.
pub fn gen_twin_pairs(
    source: &SourceModel,
    geometry: Geometry,
    seed: u64,
) -> Result<(FrameStack, FrameStack)> {
    if source.kind != SourceKind::Twin {
        return Err(Error::Config(format!(
            "gen_twin_pairs needs a twin source, got {:?}",
            source.kind
        )));
    }
    geometry.validate()?;
    source.validate()?;
    let mut signal = FrameStack::zeros(geometry, Arm::Signal);
    let mut idler = FrameStack::zeros(geometry, Arm::Idler);
    let p = geometry.pixels();
    let delta = source.kernel.is_delta();
    signal
        .counts_mut()
        .par_chunks_mut(p)
        .zip(idler.counts_mut().par_chunks_mut(p))
        .enumerate()
        .for_each(|(k, (sig, idl))| {
            let mut rng = frame_rng(seed, Stage::Source, Arm::Signal, k);
            for c in sig.iter_mut() {
                *c = sample_multithermal(&mut rng, source.n0, source.modes);
            }
            if delta {
                for (x, &n) in sig.iter().enumerate() {
                    idl[geometry.mirror(x)] = n;
                }
            } else {
                let mut rng = frame_rng(seed, Stage::Spread, Arm::Idler, k);
                for (x, &n) in sig.iter().enumerate() {
                    if n > 0 {
                        spread_pairs(
                            &mut rng,
                            &geometry,
                            &source.kernel,
                            geometry.mirror(x),
                            n,
                            idl,
                        );
                    }
                }
            }
        });
    Ok((signal, idler))
}

fn fill_single<F>(geometry: Geometry, seed: u64, arm: Arm, draw: F) -> FrameStack
where
    F: Fn(&mut crate::rng::FrameRng) -> u32 + Sync,
{
    let mut stack = FrameStack::zeros(geometry, arm);
    stack
        .counts_mut()
        .par_chunks_mut(geometry.pixels())
        .enumerate()
        .for_each(|(k, frame)| {
            let mut rng = frame_rng(seed, Stage::Source, arm, k);
            for c in frame.iter_mut() {
                *c = draw(&mut rng);
            }
        });
    stack
}

/// I.i.d. Poisson(`n0`) counts.
pub fn gen_coherent(n0: f64, geometry: Geometry, seed: u64) -> Result<FrameStack> {
    check_n0(n0)?;
    geometry.validate()?;
    Ok(fill_single(geometry, seed, Arm::Single, |rng| {
        sample_poisson(rng, n0)
    }))
}

/// I.i.d. multithermal counts with mean `n0` spread over `modes` modes.
pub fn gen_thermal(n0: f64, modes: f64, geometry: Geometry, seed: u64) -> Result<FrameStack> {
    check_n0(n0)?;
    check_modes(modes)?;
    geometry.validate()?;
    Ok(fill_single(geometry, seed, Arm::Single, |rng| {
        sample_multithermal(rng, n0, modes)
    }))
}

/// Beam splitter: every photon is transmitted with probability `transmit`.
/// Returns (transmitted, reflected); the two always sum to the input.
pub fn split_frames(
    input: &FrameStack,
    transmit: f64,
    seed: u64,
) -> Result<(FrameStack, FrameStack)> {
    if !(0.0..=1.0).contains(&transmit) {
        return Err(Error::param("transmit", transmit, "must lie in [0, 1]"));
    }
    let g = input.geometry;
    let mut out1 = FrameStack::zeros(g, Arm::Signal);
    let mut out2 = FrameStack::zeros(g, Arm::Idler);
    out1.counts_mut()
        .par_chunks_mut(g.pixels())
        .zip(out2.counts_mut().par_chunks_mut(g.pixels()))
        .enumerate()
        .for_each(|(k, (a, b))| {
            let mut rng = frame_rng(seed, Stage::Split, input.arm, k);
            for ((a, b), &n) in a.iter_mut().zip(b.iter_mut()).zip(input.frame(k)) {
                *a = sample_binomial(&mut rng, n, transmit);
                *b = n - *a;
            }
        });
    Ok((out1, out2))
}

/// Every frame reflected through the mirror map.
pub fn mirror_frames(stack: &FrameStack) -> FrameStack {
    let mut out = stack.clone();
    for frame in out.counts_mut().chunks_exact_mut(stack.geometry.pixels()) {
        frame.reverse();
    }
    out
}

/// Pre-detection signal/idler stacks for any source kind. Independent beams
/// (coherent, thermal) get independent substreams per arm; the split
/// coherent beam is a Poisson(2·n0) beam through a 50/50 splitter.
pub fn generate_pair(source: &SourceModel, geometry: Geometry, seed: u64) -> Result<PairStack> {
    source.validate()?;
    match source.kind {
        SourceKind::Twin => {
            let (s, i) = gen_twin_pairs(source, geometry, seed)?;
            PairStack::new(s, i)
        }
        SourceKind::Coherent | SourceKind::Thermal => {
            geometry.validate()?;
            let n0 = source.n0;
            let modes = source.modes;
            let draw = move |rng: &mut crate::rng::FrameRng| {
                if source.kind == SourceKind::Coherent {
                    sample_poisson(rng, n0)
                } else {
                    sample_multithermal(rng, n0, modes)
                }
            };
            let s = fill_single(geometry, seed, Arm::Signal, draw);
            let i = fill_single(geometry, seed, Arm::Idler, draw);
            PairStack::new(s, i)
        }
        SourceKind::CoherentSplit => {
            let beam = gen_coherent(2.0 * source.n0, geometry, seed)?;
            let (s, i) = split_frames(&beam, 0.5, seed)?;
            PairStack::new(s, mirror_frames(&i))
        }
    }
}

/// Pulse-duration and area inputs of the mode count per pixel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeBudget {
    pub t_pump: f64,
    pub t_coh: f64,
    pub a_pix: f64,
    pub a_coh: f64,
}

impl ModeBudget {
    /// Conditions under which the mode count drops below one per factor.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.t_pump < self.t_coh {
            w.push("pump pulse shorter than the coherence time".to_string());
        }
        if self.a_pix < self.a_coh {
            w.push("pixel smaller than the coherence area".to_string());
        }
        w
    }
}

/// Modes collected per pixel: (temporal modes) × (spatial modes).
pub fn mode_budget(b: &ModeBudget) -> Result<f64> {
    for (name, v) in [
        ("t_pump", b.t_pump),
        ("t_coh", b.t_coh),
        ("a_pix", b.a_pix),
        ("a_coh", b.a_coh),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(name, v, "must be positive"));
        }
    }
    for w in b.warnings() {
        log::warn!("mode budget: {w}");
    }
    Ok((b.t_pump / b.t_coh) * (b.a_pix / b.a_coh))
}

/// Closed-form per-pixel moments of the pre-detection count of one arm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceMoments {
    pub mean: f64,
    pub variance: f64,
    pub excess_noise: f64,
}

pub fn moments_oracle(source: &SourceModel) -> SourceMoments {
    let n0 = source.n0;
    match source.kind {
        SourceKind::Twin | SourceKind::Thermal if source.modes.is_finite() => {
            let e = n0 / source.modes;
            SourceMoments {
                mean: n0,
                variance: n0 * (1.0 + e),
                excess_noise: e,
            }
        }
        _ => SourceMoments {
            mean: n0,
            variance: n0,
            excess_noise: 0.0,
        },
    }
}
