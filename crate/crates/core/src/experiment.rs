//! End-to-end runs: simulate a configured experiment, analyze frame pairs,
//! sweep the correlation level and build the π-glyph demonstration.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimators::{
    alpha_cl, alpha_dcl, alpha_q, calibrate_center, classify_frames, estimate_excess_noise,
    estimate_sigma, flat_field_over, r_ratio, snr_map, AlphaMap, Calibration, FrameClass, Ratio,
    Region, Scheme, ShiftVector, SigmaEstimate, SnrReport,
};
use crate::frame::{FramePair, PairStack};
use crate::optics::{run_chain, ObjectMask};
use crate::rng::mix64;
use crate::statgen::{generate_pair, SourceModel};
use crate::stats::{mean_var_sample, CompensatedSum};
use crate::theory::{r_cl, r_dcl, TheoryPoint};

/// A validated configuration with its source model and object mask built.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub source: SourceModel,
    /// Mask on the physical (unbinned) pixel grid.
    pub mask: Option<ObjectMask>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig, base_dir: &std::path::Path) -> Result<Self> {
        config.validate()?;
        let source = config.source.build()?;
        let mask = config
            .object
            .build(config.geometry.width, config.geometry.height, base_dir)?;
        Ok(Experiment {
            config,
            source,
            mask,
        })
    }

    /// Simulated detector frames for the configured seed.
    pub fn simulate(&self) -> Result<PairStack> {
        self.simulate_with(
            &self.source,
            self.config.detector.eta_signal,
            self.config.detector.eta_idler,
            self.config.seed,
        )
    }

    fn simulate_with(
        &self,
        source: &SourceModel,
        eta_s: f64,
        eta_i: f64,
        seed: u64,
    ) -> Result<PairStack> {
        let pre = generate_pair(source, self.config.geometry, seed)?;
        let mut det = self.config.detector;
        det.eta_signal = eta_s;
        det.eta_idler = eta_i;
        run_chain(&pre.signal, &pre.idler, self.mask.as_ref(), &det, seed)
    }

    /// The mask on the analysis (binned) grid.
    pub fn analysis_mask(&self) -> Result<Option<ObjectMask>> {
        self.mask
            .as_ref()
            .map(|m| m.binned(self.config.detector.bin_factor))
            .transpose()
    }

    /// Pair-correlation radius in analysis pixels.
    pub fn analysis_kernel_radius(&self) -> usize {
        self.source
            .kernel
            .support_radius()
            .div_ceil(self.config.detector.bin_factor)
    }

    pub fn analyze(&self, pair: &PairStack) -> Result<AnalysisReport> {
        let mask = self.analysis_mask()?;
        analyze(
            pair,
            mask.as_ref(),
            self.analysis_kernel_radius(),
            &self.config.analysis,
        )
    }
}

/// Results of comparing the three schemes on one set of frames.
#[derive(Clone, Debug)]
pub struct SchemeComparison {
    pub n_frames: usize,
    pub snr_q: SnrReport,
    pub snr_dcl: SnrReport,
    pub snr_cl: SnrReport,
    pub r_cl: Ratio,
    pub r_dcl: Ratio,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassResult {
    pub id: usize,
    pub sigma_mean: f64,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
    pub n_frames: usize,
    pub r_cl: Option<Ratio>,
    pub r_dcl: Option<Ratio>,
    pub r_cl_theory: Option<f64>,
    pub r_dcl_theory: Option<f64>,
}

/// Temporal-mean absorption image of one scheme on the full grid; pixels
/// outside the imaging region are NaN.
#[derive(Clone, Debug)]
pub struct MeanMap {
    pub scheme: Scheme,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub sigmas: Vec<SigmaEstimate>,
    pub sigma_mean: f64,
    /// Standard error of `sigma_mean`.
    pub sigma_sem: f64,
    /// Single-beam excess noise of the idler over the correlation region.
    pub excess_noise: f64,
    /// ⟨N_i⟩ used to normalize the absorption estimates.
    pub reference: f64,
    /// Mean α over the object region, the α entering the predictions.
    pub alpha: f64,
    pub shift: ShiftVector,
    pub calibration: Option<Calibration>,
    pub sigma_pixels: usize,
    pub object_pixels: usize,
    pub overall: Option<SchemeComparison>,
    pub classes: Vec<ClassResult>,
    pub maps: Vec<MeanMap>,
}

impl AnalysisReport {
    pub fn theory(&self, sigma: f64) -> Option<(f64, f64)> {
        let p = TheoryPoint::new(self.alpha, sigma, self.excess_noise);
        Some((r_cl(&p).ok()?, r_dcl(&p).ok()?))
    }
}

/// Regions used by the analysis of one grid.
struct Regions {
    sigma: Region,
    /// Every interior pixel with a valid shifted reference.
    imaging: Region,
    /// Imaging pixels covered by the object.
    object: Region,
}

fn build_regions(
    width: usize,
    height: usize,
    mask: Option<&ObjectMask>,
    margin: usize,
    registration: ShiftVector,
    shift: ShiftVector,
) -> Result<Regions> {
    let base = Region::interior_registered(width, height, margin, registration)?;
    let alpha = |x: usize| mask.map_or(0.0, |m| m.alpha()[x]);
    let sigma = match base.restrict(|x| alpha(x) == 0.0) {
        Ok(r) => r,
        Err(_) => {
            log::warn!("object covers the whole frame; sigma is measured through it");
            base.clone()
        }
    };
    let imaging = base.shifted(shift)?;
    let object = match imaging.restrict(|x| alpha(x) > 0.0) {
        Ok(r) => r,
        Err(_) => imaging.clone(),
    };
    Ok(Regions {
        sigma,
        imaging,
        object,
    })
}

/// σ of every frame, on flat-fielded frames when requested and possible.
fn frame_sigmas(pair: &PairStack, region: &Region, flat: bool) -> Result<Vec<SigmaEstimate>> {
    let raw = |k: usize| estimate_sigma(pair.frame(k), region, k);
    if flat && pair.n_frames() >= 2 {
        match (
            flat_field_over(&pair.signal, region.pixels()),
            flat_field_over(&pair.idler, region.partners()),
        ) {
            (Ok(s), Ok(i)) => {
                let g = pair.geometry();
                return (0..pair.n_frames())
                    .into_par_iter()
                    .map(|k| {
                        let fp = FramePair::new(g.width, g.height, s.frame(k), i.frame(k))?;
                        estimate_sigma(fp, region, k)
                    })
                    .collect();
            }
            (Err(e), _) | (_, Err(e)) => {
                log::warn!("flat-field skipped: {e}");
            }
        }
    }
    (0..pair.n_frames()).into_par_iter().map(raw).collect()
}

fn scheme_maps(
    pair: &PairStack,
    k: usize,
    imaging: &Region,
    shift: ShiftVector,
    kernel_radius: usize,
    reference: f64,
) -> Result<[AlphaMap; 3]> {
    let fp = pair.frame(k);
    // the imaging region already carries the shift; q and cl use the
    // unshifted partners of the same pixels
    let base = Region::from_pixels(
        imaging.width(),
        imaging.height(),
        imaging.pixels().iter().copied(),
        ShiftVector::new(
            imaging.registration().dx - shift.dx,
            imaging.registration().dy - shift.dy,
        ),
    )?;
    let q = alpha_q(fp, &base, reference)?;
    let dcl = alpha_dcl(fp, &base, shift, kernel_radius, reference)?;
    let cl = alpha_cl(fp.signal, fp.width, fp.height, &base, reference)?;
    Ok([q, dcl, cl])
}

/// Per-scheme absorption maps of `frames`, grouped by scheme.
fn collect_maps(
    pair: &PairStack,
    frames: &[usize],
    imaging: &Region,
    shift: ShiftVector,
    kernel_radius: usize,
    reference: f64,
) -> Result<[Vec<AlphaMap>; 3]> {
    let per_frame: Vec<[AlphaMap; 3]> = frames
        .par_iter()
        .map(|&k| scheme_maps(pair, k, imaging, shift, kernel_radius, reference))
        .collect::<Result<_>>()?;
    let mut out: [Vec<AlphaMap>; 3] = Default::default();
    for [q, d, c] in per_frame {
        out[0].push(q);
        out[1].push(d);
        out[2].push(c);
    }
    Ok(out)
}

fn compare(maps: &[Vec<AlphaMap>; 3], object: &Region) -> Result<SchemeComparison> {
    let snr_q = snr_map(&maps[0])?;
    let snr_dcl = snr_map(&maps[1])?;
    let snr_cl = snr_map(&maps[2])?;
    let r_cl = r_ratio(&snr_q, &snr_cl, object)?;
    let r_dcl = r_ratio(&snr_q, &snr_dcl, object)?;
    Ok(SchemeComparison {
        n_frames: maps[0].len(),
        snr_q,
        snr_dcl,
        snr_cl,
        r_cl,
        r_dcl,
    })
}

fn mean_maps(maps: &[Vec<AlphaMap>; 3]) -> Vec<MeanMap> {
    maps.iter()
        .map(|stack| {
            let first = &stack[0];
            let mut values = vec![f64::NAN; first.width * first.height];
            for (j, &x) in first.pixels.iter().enumerate() {
                let s: CompensatedSum = stack.iter().map(|m| m.values[j]).collect();
                values[x] = s.value() / stack.len() as f64;
            }
            MeanMap {
                scheme: first.scheme,
                width: first.width,
                height: first.height,
                values,
            }
        })
        .collect()
}

/// Full measurement pipeline on detector frames.
///
/// σ is measured per frame on the object-free part of the interior, the
/// absorption estimates on every interior pixel whose shifted reference is
/// on the grid, and SNR ratios on the pixels covered by the object.
pub fn analyze(
    pair: &PairStack,
    mask: Option<&ObjectMask>,
    kernel_radius: usize,
    opts: &crate::config::AnalysisOptions,
) -> Result<AnalysisReport> {
    let g = pair.geometry();
    if let Some(m) = mask {
        if m.width() != g.width || m.height() != g.height {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs frames {}x{}",
                m.width(),
                m.height(),
                g.width,
                g.height
            )));
        }
    }
    let calibration = opts
        .calibrate_radius
        .map(|r| calibrate_center(pair, r))
        .transpose()?;
    if let Some(c) = &calibration {
        if !c.confident {
            log::warn!(
                "mirror registration is low-confidence (contrast {:.2})",
                c.contrast
            );
        }
    }
    let registration = calibration.as_ref().map_or(ShiftVector::ZERO, |c| c.shift);
    let shift = opts
        .shift
        .unwrap_or_else(|| ShiftVector::default_for_radius(kernel_radius));
    let margin = opts.margin.unwrap_or(kernel_radius);
    let regions = build_regions(g.width, g.height, mask, margin, registration, shift)?;

    let sigmas = frame_sigmas(pair, &regions.sigma, opts.flat_field)?;
    let sigma_values: Vec<f64> = sigmas.iter().map(|s| s.sigma).collect();
    let (sigma_mean, sigma_sem) = if sigma_values.len() >= 2 {
        let (m, v) = mean_var_sample(&sigma_values);
        (m, (v / sigma_values.len() as f64).sqrt())
    } else {
        (sigma_values[0], f64::NAN)
    };
    let excess_noise = estimate_excess_noise(&pair.idler, regions.sigma.partners())?;

    let base_object = Region::from_pixels(
        g.width,
        g.height,
        regions.object.pixels().iter().copied(),
        registration,
    )?;
    let reference = {
        let s: CompensatedSum = pair
            .idler
            .frames()
            .flat_map(|f| base_object.partners().iter().map(move |&p| f[p] as f64))
            .collect();
        s.value() / (base_object.len() * pair.n_frames()) as f64
    };
    if !(reference > 0.0) {
        return Err(Error::Degenerate("idler reference level is zero".into()));
    }
    let alpha = mask.map_or(0.0, |m| {
        crate::stats::sum(regions.object.pixels().iter().map(|&x| m.alpha()[x]))
            / regions.object.len() as f64
    });
    let theory = |sigma: f64| {
        let p = TheoryPoint::new(alpha, sigma, excess_noise);
        (r_cl(&p).ok(), r_dcl(&p).ok())
    };

    let all: Vec<usize> = (0..pair.n_frames()).collect();
    let all_maps = collect_maps(
        pair,
        &all,
        &regions.imaging,
        shift,
        kernel_radius,
        reference,
    )?;
    let maps = mean_maps(&all_maps);
    let overall = if pair.n_frames() >= 2 {
        match compare(&all_maps, &regions.object) {
            Ok(c) => Some(c),
            Err(e) => {
                log::warn!("scheme comparison unavailable: {e}");
                None
            }
        }
    } else {
        None
    };
    drop(all_maps);

    let classes: Vec<FrameClass> = if pair.n_frames() >= 2 {
        classify_frames(&sigmas, opts.n_bins, opts.min_members).unwrap_or_else(|e| {
            log::warn!("no sigma classes: {e}");
            Vec::new()
        })
    } else {
        Vec::new()
    };
    let classes = classes
        .into_iter()
        .map(|c| {
            let cmp = collect_maps(
                pair,
                &c.members,
                &regions.imaging,
                shift,
                kernel_radius,
                reference,
            )
            .and_then(|m| compare(&m, &regions.object));
            let (r_cl_theory, r_dcl_theory) = theory(c.sigma_mean);
            let (r_cl, r_dcl) = match cmp {
                Ok(cmp) => (Some(cmp.r_cl), Some(cmp.r_dcl)),
                Err(e) => {
                    log::warn!("class {}: {e}", c.id);
                    (None, None)
                }
            };
            ClassResult {
                id: c.id,
                sigma_mean: c.sigma_mean,
                sigma_lower: c.lower,
                sigma_upper: c.upper,
                n_frames: c.members.len(),
                r_cl,
                r_dcl,
                r_cl_theory,
                r_dcl_theory,
            }
        })
        .collect();

    Ok(AnalysisReport {
        width: g.width,
        height: g.height,
        n_frames: pair.n_frames(),
        sigmas,
        sigma_mean,
        sigma_sem,
        excess_noise,
        reference,
        alpha,
        shift,
        calibration,
        sigma_pixels: regions.sigma.len(),
        object_pixels: regions.object.len(),
        overall,
        classes,
        maps,
    })
}

/// One measured point of an R-versus-σ sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub eta: f64,
    pub n0: f64,
    pub sigma: f64,
    pub sigma_sem: f64,
    pub excess_noise: f64,
    pub mean_detected: f64,
    pub alpha: f64,
    pub n_frames: usize,
    pub r_cl: Ratio,
    pub r_dcl: Ratio,
    pub r_cl_theory: f64,
    pub r_dcl_theory: f64,
    pub snr_q: f64,
    pub snr_dcl: f64,
    pub snr_cl: f64,
}

/// Seed of sweep point `i`.
pub fn point_seed(master: u64, i: usize) -> u64 {
    mix64(master ^ mix64(0x5357_4545_5000 + i as u64))
}

/// Simulates and analyzes one balanced configuration per efficiency.
pub fn sweep(
    exp: &Experiment,
    etas: &[f64],
    detected_mean: Option<f64>,
) -> Result<Vec<SweepPoint>> {
    if etas.len() < 2 {
        return Err(Error::Config("sweep needs at least two points".into()));
    }
    etas.iter()
        .enumerate()
        .map(|(i, &eta)| {
            let mut source = exp.source.clone();
            if let Some(d) = detected_mean {
                source.n0 = d / eta;
            }
            let pair = exp.simulate_with(&source, eta, eta, point_seed(exp.config.seed, i))?;
            let mask = exp.analysis_mask()?;
            let report = analyze(
                &pair,
                mask.as_ref(),
                exp.analysis_kernel_radius(),
                &exp.config.analysis,
            )?;
            let overall = report.overall.as_ref().ok_or_else(|| {
                Error::Degenerate(format!("sweep point {i}: no scheme comparison"))
            })?;
            let p = TheoryPoint::new(report.alpha, report.sigma_mean, report.excess_noise);
            Ok(SweepPoint {
                eta,
                n0: source.n0,
                sigma: report.sigma_mean,
                sigma_sem: report.sigma_sem,
                excess_noise: report.excess_noise,
                mean_detected: report.reference,
                alpha: report.alpha,
                n_frames: report.n_frames,
                r_cl: overall.r_cl,
                r_dcl: overall.r_dcl,
                r_cl_theory: r_cl(&p)?,
                r_dcl_theory: r_dcl(&p)?,
                snr_q: overall.snr_q.mean_snr,
                snr_dcl: overall.snr_dcl.mean_snr,
                snr_cl: overall.snr_cl.mean_snr,
            })
        })
        .collect()
}

/// Where a piecewise-linear curve through `(sigma, r)` points crosses `level`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub sigma: f64,
    /// True when no bracketing pair exists and the crossing was
    /// extrapolated from the last two points.
    pub extrapolated: bool,
}

pub fn crossing(points: &[(f64, f64)], level: f64) -> Option<Crossing> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let interp = |a: (f64, f64), b: (f64, f64)| a.0 + (level - a.1) * (b.0 - a.0) / (b.1 - a.1);
    for w in pts.windows(2) {
        if (w[0].1 - level) * (w[1].1 - level) <= 0.0 && w[0].1 != w[1].1 {
            return Some(Crossing {
                sigma: interp(w[0], w[1]),
                extrapolated: false,
            });
        }
    }
    if pts.len() >= 2 {
        let (a, b) = (pts[pts.len() - 2], pts[pts.len() - 1]);
        if a.1 != b.1 {
            return Some(Crossing {
                sigma: interp(a, b),
                extrapolated: true,
            });
        }
    }
    None
}

/// Fidelity figures of one scheme's mean image against the true mask.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ImageQuality {
    pub scheme: Scheme,
    /// RMS of (mean α − true α) over the imaging region.
    pub residual_rms: f64,
    /// Mean α over the glyph shape minus mean α over the background.
    pub contrast: f64,
    pub contrast_se: f64,
}

/// Compares `map` with the true absorption `truth`; `shape` marks the object
/// footprint (nonzero entries) independently of its α, so an object of zero
/// absorption still has a well-defined contrast.
pub fn image_quality(map: &MeanMap, truth: &ObjectMask, shape: &ObjectMask) -> ImageQuality {
    let mut resid = Vec::new();
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (x, &v) in map.values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        let a = truth.alpha()[x];
        resid.push((v - a) * (v - a));
        if shape.alpha()[x] > 0.0 {
            inside.push(v);
        } else {
            outside.push(v);
        }
    }
    let residual_rms =
        (crate::stats::sum(resid.iter().copied()) / resid.len().max(1) as f64).sqrt();
    let stat = |v: &[f64]| -> (f64, f64) {
        match v.len() {
            0 => (f64::NAN, f64::NAN),
            1 => (v[0], 0.0),
            n => {
                let (m, var) = mean_var_sample(v);
                (m, var / n as f64)
            }
        }
    };
    let (mi, vi) = stat(&inside);
    let (mo, vo) = stat(&outside);
    ImageQuality {
        scheme: map.scheme,
        residual_rms,
        contrast: mi - mo,
        contrast_se: (vi + vo).sqrt(),
    }
}
