//! File-producing entry points behind the command-line subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ObjectConfig};
use crate::error::{Error, Result};
use crate::estimators::Scheme;
use crate::experiment::{
    crossing, image_quality, sweep, AnalysisReport, Crossing, Experiment, ImageQuality, MeanMap,
    SweepPoint,
};
use crate::frame::{FrameStack, PairStack};
use crate::io::pgm::{write_scaled, GrayScale};
use crate::io::report::{write_csv, ClassRow, SigmaRow, SweepRow};
use crate::io::{fstk, report};
use crate::theory::{linspace, tabulate_curves};

pub const MANIFEST_VERSION: u32 = 1;
pub const SIGNAL_FILE: &str = "signal.fstk";
pub const IDLER_FILE: &str = "idler.fstk";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of a simulation run; loading it as a config reproduces the run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub format: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Simulates the configured run and writes both stacks and the manifest.
pub fn simulate_to(exp: &Experiment, out: &Path) -> Result<(PairStack, Manifest)> {
    fs::create_dir_all(out)?;
    let pair = exp.simulate()?;
    fstk::save(&out.join(SIGNAL_FILE), &pair.signal)?;
    fstk::save(&out.join(IDLER_FILE), &pair.idler)?;
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        format: "FSTK1".into(),
        seed: exp.config.seed,
        config: exp.config.clone(),
        outputs: vec![SIGNAL_FILE.into(), IDLER_FILE.into()],
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok((pair, manifest))
}

/// Loads a signal/idler pair written by [`simulate_to`].
pub fn load_pair(signal: &Path, idler: &Path) -> Result<PairStack> {
    let s = fstk::load(signal)?;
    let i = fstk::load(idler)?;
    if s.geometry != i.geometry {
        return Err(Error::DimensionMismatch(format!(
            "signal {:?} vs idler {:?}",
            s.geometry, i.geometry
        )));
    }
    PairStack::new(
        s.with_arm(crate::frame::Arm::Signal),
        i.with_arm(crate::frame::Arm::Idler),
    )
}

fn map_file(scheme: Scheme) -> String {
    format!("alpha_{}.pgm", scheme.name())
}

/// Common gray scale for the absorption maps of an object of peak `alpha`.
pub fn map_scale(alpha_max: f64) -> GrayScale {
    let a = if alpha_max > 0.0 { alpha_max } else { 0.05 };
    GrayScale {
        low: -1.5 * a,
        high: 2.5 * a,
    }
}

fn write_maps(maps: &[MeanMap], scale: GrayScale, out: &Path) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for m in maps {
        let name = map_file(m.scheme);
        write_scaled(
            &out.join(&name),
            m.width,
            m.height,
            &m.values,
            scale,
            &format!("mean alpha ({})", m.scheme.name()),
        )?;
        files.push(name);
    }
    Ok(files)
}

#[derive(Serialize)]
struct RatioSummary {
    value: f64,
    stderr: f64,
    theory: Option<f64>,
}

#[derive(Serialize)]
struct AnalysisSummary {
    n_frames: usize,
    sigma_mean: f64,
    sigma_sem: f64,
    excess_noise: f64,
    reference: f64,
    alpha: f64,
    shift: crate::estimators::ShiftVector,
    registration: Option<crate::estimators::Calibration>,
    sigma_pixels: usize,
    object_pixels: usize,
    r_cl: Option<RatioSummary>,
    r_dcl: Option<RatioSummary>,
    outputs: Vec<String>,
}

fn class_rows(report: &AnalysisReport) -> Vec<ClassRow> {
    let nan = f64::NAN;
    report
        .classes
        .iter()
        .map(|c| ClassRow {
            j: c.id,
            sigma_j: c.sigma_mean,
            n_frames: c.n_frames,
            r_cl: c.r_cl.map_or(nan, |r| r.value),
            r_cl_err: c.r_cl.map_or(nan, |r| r.stderr),
            r_dcl: c.r_dcl.map_or(nan, |r| r.value),
            r_dcl_err: c.r_dcl.map_or(nan, |r| r.stderr),
            r_cl_theory: c.r_cl_theory.unwrap_or(nan),
            r_dcl_theory: c.r_dcl_theory.unwrap_or(nan),
        })
        .collect()
}

/// Analyzes `pair` and writes `sigma.csv`, `classes.csv`, one mean α map
/// per scheme and `analysis.json`.
pub fn analyze_to(exp: &Experiment, pair: &PairStack, out: &Path) -> Result<AnalysisReport> {
    fs::create_dir_all(out)?;
    let report = exp.analyze(pair)?;
    let sigma_rows: Vec<SigmaRow> = report
        .sigmas
        .iter()
        .map(|s| SigmaRow {
            frame_id: s.frame_id,
            sigma: s.sigma,
            mean_signal: s.mean_signal,
            mean_idler: s.mean_idler,
        })
        .collect();
    write_csv(&out.join("sigma.csv"), &sigma_rows)?;
    write_csv(&out.join("classes.csv"), &class_rows(&report))?;
    let alpha_max = exp
        .analysis_mask()?
        .map_or(0.0, |m| m.alpha().iter().copied().fold(0.0, f64::max));
    let mut outputs = vec!["sigma.csv".to_string(), "classes.csv".to_string()];
    outputs.extend(write_maps(&report.maps, map_scale(alpha_max), out)?);
    let theory = report.theory(report.sigma_mean);
    let summary = AnalysisSummary {
        n_frames: report.n_frames,
        sigma_mean: report.sigma_mean,
        sigma_sem: report.sigma_sem,
        excess_noise: report.excess_noise,
        reference: report.reference,
        alpha: report.alpha,
        shift: report.shift,
        registration: report.calibration.clone(),
        sigma_pixels: report.sigma_pixels,
        object_pixels: report.object_pixels,
        r_cl: report.overall.as_ref().map(|o| RatioSummary {
            value: o.r_cl.value,
            stderr: o.r_cl.stderr,
            theory: theory.map(|t| t.0),
        }),
        r_dcl: report.overall.as_ref().map(|o| RatioSummary {
            value: o.r_dcl.value,
            stderr: o.r_dcl.stderr,
            theory: theory.map(|t| t.1),
        }),
        outputs,
    };
    write_json(&out.join("analysis.json"), &summary)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct DemoSummary {
    pub sigma_mean: f64,
    pub mean_detected: f64,
    pub alpha: f64,
    pub n_frames: usize,
    pub scale: GrayScale,
    pub quality: Vec<ImageQuality>,
    pub outputs: Vec<String>,
}

/// Images the configured glyph with all three schemes at the same photon
/// budget and writes the three maps on a shared gray scale.
pub fn demo_pi_to(exp: &Experiment, out: &Path) -> Result<DemoSummary> {
    let alpha = match exp.config.object {
        ObjectConfig::Pi { alpha } => alpha,
        _ => {
            return Err(Error::Config(
                "object.kind: the demo needs the \"pi\" glyph".into(),
            ))
        }
    };
    fs::create_dir_all(out)?;
    let pair = exp.simulate()?;
    let report = exp.analyze(&pair)?;
    let mask = exp
        .analysis_mask()?
        .ok_or_else(|| Error::Config("object: missing mask".into()))?;
    let g = exp.config.geometry;
    let shape = crate::optics::ObjectMask::pi_glyph(g.width, g.height, 1.0)?
        .binned(exp.config.detector.bin_factor)?;
    let scale = map_scale(alpha);
    let outputs = write_maps(&report.maps, scale, out)?;
    let summary = DemoSummary {
        sigma_mean: report.sigma_mean,
        mean_detected: report.reference,
        alpha,
        n_frames: report.n_frames,
        scale,
        quality: report
            .maps
            .iter()
            .map(|m| image_quality(m, &mask, &shape))
            .collect(),
        outputs,
    };
    write_json(&out.join("demo.json"), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub points: Vec<SweepPoint>,
    pub r_cl_crossing: Option<Crossing>,
    pub r_dcl_crossing: Option<Crossing>,
}

fn sweep_rows(points: &[SweepPoint]) -> Vec<SweepRow> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| SweepRow {
            point: i,
            eta: p.eta,
            sigma: p.sigma,
            sigma_err: p.sigma_sem,
            excess_noise: p.excess_noise,
            mean_detected: p.mean_detected,
            n_frames: p.n_frames,
            r_cl: p.r_cl.value,
            r_cl_err: p.r_cl.stderr,
            r_dcl: p.r_dcl.value,
            r_dcl_err: p.r_dcl.stderr,
            r_cl_theory: p.r_cl_theory,
            r_dcl_theory: p.r_dcl_theory,
            snr_q: p.snr_q,
            snr_dcl: p.snr_dcl,
            snr_cl: p.snr_cl,
        })
        .collect()
}

pub fn summarize_sweep(points: Vec<SweepPoint>) -> SweepSummary {
    let cl: Vec<(f64, f64)> = points.iter().map(|p| (p.sigma, p.r_cl.value)).collect();
    let dcl: Vec<(f64, f64)> = points.iter().map(|p| (p.sigma, p.r_dcl.value)).collect();
    SweepSummary {
        r_cl_crossing: crossing(&cl, 1.0),
        r_dcl_crossing: crossing(&dcl, 1.0),
        points,
    }
}

/// Runs the configured sweep and writes `sweep.csv` and `sweep.json`.
pub fn sweep_to(exp: &Experiment, out: &Path) -> Result<SweepSummary> {
    let cfg = exp
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep: section missing".into()))?;
    let etas = cfg.etas()?;
    fs::create_dir_all(out)?;
    let summary = summarize_sweep(sweep(exp, &etas, cfg.detected_mean)?);
    write_csv(&out.join("sweep.csv"), &sweep_rows(&summary.points))?;
    write_json(&out.join("sweep.json"), &summary)?;
    Ok(summary)
}

/// Which frames of a stack to render.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrameSelect {
    Frame(usize),
    Mean,
}

/// Renders one frame, or the temporal mean, of a stack as a 16-bit graymap
/// scaled from zero to the largest value.
pub fn render_stack(stack: &FrameStack, select: FrameSelect, path: &Path) -> Result<()> {
    let g = stack.geometry;
    let values: Vec<f64> = match select {
        FrameSelect::Frame(k) => {
            if k >= stack.n_frames() {
                return Err(Error::InsufficientFrames {
                    needed: k + 1,
                    got: stack.n_frames(),
                });
            }
            stack.frame(k).iter().map(|&c| c as f64).collect()
        }
        FrameSelect::Mean => {
            let n = stack.n_frames() as f64;
            (0..g.pixels())
                .map(|x| crate::stats::sum(stack.frames().map(|f| f[x] as f64)) / n)
                .collect()
        }
    };
    let high = values.iter().copied().fold(0.0, f64::max);
    let scale = GrayScale {
        low: 0.0,
        high: if high > 0.0 { high } else { 1.0 },
    };
    write_scaled(path, g.width, g.height, &values, scale, "photon counts")
}

/// Writes the predicted ratio curves over `n` points of σ ∈ [lo, hi].
pub fn render_curves(
    alpha: f64,
    excess: f64,
    lo: f64,
    hi: f64,
    n: usize,
    path: &Path,
) -> Result<()> {
    let rows = tabulate_curves(alpha, excess, &linspace(lo, hi, n))?;
    report::write_csv(path, &rows)
}

/// Output directory helper: `base` or the current directory.
pub fn out_dir(base: Option<&Path>) -> PathBuf {
    base.map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}
