//! Measurement pipeline: correlation degree, excess noise, flat-field
//! compensation, mirror registration, the three absorption estimators,
//! temporal SNR maps, σ classes and SNR ratios.

mod alpha;
mod calibrate;
mod classes;
mod flat;
mod region;
mod sigma;
mod snr;

pub use alpha::{alpha_cl, alpha_dcl, alpha_q, AlphaMap, Scheme};
pub use calibrate::{calibrate_center, Calibration};
pub use classes::{classify_frames, FrameClass, DEFAULT_MIN_MEMBERS};
pub use flat::{flat_field, flat_field_over};
pub use region::{Region, ShiftVector};
pub use sigma::{estimate_excess_noise, estimate_sigma, excess_noise_per_frame, SigmaEstimate};
pub use snr::{r_ratio, snr_map, Ratio, SnrReport};

/// Pixel value usable by the estimators: raw counts or compensated reals.
pub trait Count: Copy + Send + Sync {
    fn value(self) -> f64;
}

impl Count for u32 {
    #[inline]
    fn value(self) -> f64 {
        self as f64
    }
}

impl Count for f64 {
    #[inline]
    fn value(self) -> f64 {
        self
    }
}
