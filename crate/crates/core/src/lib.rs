//! Simulation and analysis of sub-shot-noise imaging with twin beams.
//!
//! Twin-beam photon-number patterns are generated frame by frame, passed
//! through an absorbing object and lossy detectors, and the absorption is
//! recovered by three estimators: quantum (subtracting the correlated idler
//! fluctuations), differential classical and direct classical.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod frame;
pub mod io;
pub mod optics;
pub mod rng;
pub mod runner;
pub mod statgen;
pub mod stats;
pub mod theory;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use experiment::{analyze, AnalysisReport, Experiment};
pub use frame::{Arm, FramePair, FrameStack, Geometry, PairStack, RealStack};
