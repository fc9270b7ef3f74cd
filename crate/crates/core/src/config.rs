//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "version": 1,
//!   "geometry": { "width": 64, "height": 64, "n_frames": 500 },
//!   "source": { "kind": "twin", "n0": 1000, "modes": 1e5, "kernel": { "shape": "delta" } },
//!   "detector": { "eta_signal": 0.7, "eta_idler": 0.7 },
//!   "object": { "kind": "half_plane", "alpha": 0.05 },
//!   "analysis": { "flat_field": true, "n_bins": 5, "min_members": 20 },
//!   "seed": 1
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{ShiftVector, DEFAULT_MIN_MEMBERS};
use crate::frame::Geometry;
use crate::optics::{DetectorModel, ObjectMask};
use crate::statgen::{PairKernel, SourceKind, SourceModel};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    #[default]
    Delta,
    Uniform {
        radius: usize,
    },
    Gaussian {
        radius: usize,
        std: f64,
    },
    Custom {
        radius: usize,
        weights: Vec<f64>,
    },
}

impl KernelSpec {
    pub fn build(&self) -> Result<PairKernel> {
        match self {
            KernelSpec::Delta => Ok(PairKernel::delta()),
            KernelSpec::Uniform { radius } => Ok(PairKernel::uniform(*radius)),
            KernelSpec::Gaussian { radius, std } => PairKernel::gaussian(*radius, *std),
            KernelSpec::Custom { radius, weights } => {
                PairKernel::from_weights(*radius, weights.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub kind: SourceKind,
    pub n0: f64,
    /// Modes per pixel; omitted means Poissonian (infinitely many modes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<f64>,
    #[serde(default)]
    pub kernel: KernelSpec,
}

impl SourceConfig {
    pub fn build(&self) -> Result<SourceModel> {
        let modes = match (self.kind, self.modes) {
            (SourceKind::Thermal, None) => {
                return Err(Error::Config(
                    "source.modes is required for thermal light".into(),
                ))
            }
            (_, Some(m)) => m,
            (_, None) => f64::INFINITY,
        };
        let model = SourceModel {
            kind: self.kind,
            n0: self.n0,
            modes,
            kernel: self.kernel.build()?,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectConfig {
    #[default]
    None,
    Uniform {
        alpha: f64,
    },
    HalfPlane {
        alpha: f64,
    },
    Pi {
        alpha: f64,
    },
    /// Graymap with α = gray / maxval; relative paths resolve against the
    /// config file's directory.
    Pgm {
        path: PathBuf,
    },
}

impl ObjectConfig {
    pub fn build(
        &self,
        width: usize,
        height: usize,
        base_dir: &Path,
    ) -> Result<Option<ObjectMask>> {
        let mask = match self {
            ObjectConfig::None => return Ok(None),
            ObjectConfig::Uniform { alpha } => ObjectMask::uniform(width, height, *alpha)?,
            ObjectConfig::HalfPlane { alpha } => ObjectMask::half_plane(width, height, *alpha)?,
            ObjectConfig::Pi { alpha } => ObjectMask::pi_glyph(width, height, *alpha)?,
            ObjectConfig::Pgm { path } => {
                let path = if path.is_absolute() {
                    path.clone()
                } else {
                    base_dir.join(path)
                };
                crate::io::pgm::read_mask(&path)?
            }
        };
        if mask.width() != width || mask.height() != height {
            return Err(Error::Config(format!(
                "object mask is {}x{} but frames are {width}x{height}",
                mask.width(),
                mask.height()
            )));
        }
        Ok(Some(mask))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    /// Flat-field both arms before estimating σ.
    #[serde(default = "yes")]
    pub flat_field: bool,
    /// Reference displacement for the differential scheme; defaults to four
    /// kernel radii along x.
    #[serde(default)]
    pub shift: Option<ShiftVector>,
    #[serde(default = "default_bins")]
    pub n_bins: usize,
    #[serde(default = "default_min_members")]
    pub min_members: usize,
    /// Search radius for mirror registration; off when absent.
    #[serde(default)]
    pub calibrate_radius: Option<usize>,
    /// Edge exclusion in analysis pixels; defaults to the kernel radius.
    #[serde(default)]
    pub margin: Option<usize>,
}

fn yes() -> bool {
    true
}

fn default_bins() -> usize {
    5
}

fn default_min_members() -> usize {
    DEFAULT_MIN_MEMBERS
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            flat_field: true,
            shift: None,
            n_bins: default_bins(),
            min_members: default_min_members(),
            calibrate_radius: None,
            margin: None,
        }
    }
}

/// Points of an R-versus-σ sweep. With `sigmas`, each point uses the
/// balanced efficiency `η = 1 − σ`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
    /// Detected photons per pixel held fixed across points by setting
    /// `n0 = detected_mean / η`; when absent the source `n0` is used as is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detected_mean: Option<f64>,
}

impl SweepConfig {
    pub fn etas(&self) -> Result<Vec<f64>> {
        let etas = match (&self.sigmas, &self.etas) {
            (Some(s), None) => s.iter().map(|s| 1.0 - s).collect(),
            (None, Some(e)) => e.clone(),
            _ => {
                return Err(Error::Config(
                    "sweep needs exactly one of `sigmas` or `etas`".into(),
                ))
            }
        };
        if etas.len() < 2 {
            return Err(Error::Config("sweep needs at least two points".into()));
        }
        if let Some(&e) = etas.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::param("sweep eta", e, "must lie in (0, 1]"));
        }
        Ok(etas)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub geometry: Geometry,
    pub source: SourceConfig,
    pub detector: DetectorModel,
    #[serde(default)]
    pub object: ObjectConfig,
    #[serde(default)]
    pub analysis: AnalysisOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    /// Balanced twin-beam configuration with a delta kernel and no object.
    pub fn twin(geometry: Geometry, n0: f64, modes: f64, eta: f64, seed: u64) -> Self {
        ExperimentConfig {
            version: CONFIG_VERSION,
            geometry,
            source: SourceConfig {
                kind: SourceKind::Twin,
                n0,
                modes: Some(modes),
                kernel: KernelSpec::Delta,
            },
            detector: DetectorModel::ideal(eta),
            object: ObjectConfig::None,
            analysis: AnalysisOptions::default(),
            seed,
            sweep: None,
        }
    }

    /// π glyph of α = 0.05 imaged at σ ≈ 0.35 with about 7000 detected
    /// photons per pixel.
    pub fn demo_pi(seed: u64) -> Self {
        let eta = 0.65;
        let geometry = Geometry::new(64, 64, 400).expect("static geometry");
        let mut cfg = Self::twin(geometry, 7000.0 / eta, 1e5, eta, seed);
        cfg.object = ObjectConfig::Pi { alpha: 0.05 };
        cfg
    }

    /// R-versus-σ sweep at α = 0.05 with 1000 detected photons per pixel.
    pub fn sigma_sweep(seed: u64) -> Self {
        let geometry = Geometry::new(64, 64, 300).expect("static geometry");
        let mut cfg = Self::twin(geometry, 1000.0, 1e5, 1.0, seed);
        cfg.object = ObjectConfig::HalfPlane { alpha: 0.05 };
        cfg.sweep = Some(SweepConfig {
            sigmas: Some(vec![0.2, 0.35, 0.5, 0.65, 0.8, 0.9]),
            etas: None,
            detected_mean: Some(1000.0),
        });
        cfg
    }

    /// Checks every nested invariant that does not need the filesystem.
    /// Errors name the offending field as `section.field`.
    pub fn validate(&self) -> Result<()> {
        let wrap = |field: &str, e: Error| Error::Config(format!("{field}: {e}"));
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "version: unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        self.geometry.validate().map_err(|e| {
            let field = if self.geometry.n_frames == 0 {
                "geometry.n_frames"
            } else {
                "geometry"
            };
            wrap(field, e)
        })?;
        self.source.build().map_err(|e| wrap("source", e))?;
        self.detector.validate().map_err(|e| wrap("detector", e))?;
        let b = self.detector.bin_factor;
        if !self.geometry.width.is_multiple_of(b) || !self.geometry.height.is_multiple_of(b) {
            return Err(Error::Config(format!(
                "detector.bin_factor: {b} does not divide {}x{}",
                self.geometry.width, self.geometry.height
            )));
        }
        match &self.object {
            ObjectConfig::Uniform { alpha }
            | ObjectConfig::HalfPlane { alpha }
            | ObjectConfig::Pi { alpha }
                if !(0.0..=1.0).contains(alpha) =>
            {
                return Err(Error::Config(format!(
                    "object.alpha: {alpha} outside [0, 1]"
                )));
            }
            _ => {}
        }
        if self.analysis.n_bins == 0 {
            return Err(Error::Config("analysis.n_bins: must be at least 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            sweep.etas().map_err(|e| wrap("sweep", e))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let at = |e: serde_json::Error| {
            Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(at)?;
        // Run manifests embed the config they were produced from.
        let cfg: ExperimentConfig = if value.get("manifest_version").is_some() {
            let inner = value
                .get("config")
                .cloned()
                .ok_or_else(|| Error::Config("manifest without `config`".into()))?;
            serde_json::from_value(inner).map_err(|e| Error::Config(format!("config: {e}")))?
        } else {
            serde_json::from_str(text).map_err(at)?
        };
        cfg.validate().map_err(|e| locate(text, e))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Prefixes a validation error with the line of the field it names.
fn locate(text: &str, err: Error) -> Error {
    let Error::Config(msg) = &err else {
        return err;
    };
    let Some(path) = msg.split(':').next() else {
        return err;
    };
    let mut offset = 0;
    for key in path.split('.') {
        match text[offset..].find(&format!("\"{key}\"")) {
            Some(pos) => offset += pos,
            None => return err,
        }
    }
    let line = text[..offset].matches('\n').count() + 1;
    Error::Config(format!("line {line}: {msg}"))
}
