//! Cross-module statistical properties on simulated data.

use proptest::prelude::*;

use twinbeam::config::ExperimentConfig;
use twinbeam::estimators::{estimate_sigma, Region};
use twinbeam::experiment::{crossing, sweep, Experiment};
use twinbeam::frame::{Arm, FramePair, FrameStack, Geometry};
use twinbeam::optics::{apply_loss, apply_object, ObjectMask};
use twinbeam::statgen::{gen_coherent, gen_thermal};
use twinbeam::stats::Moments;

fn analyzed_sigma(cfg: ExperimentConfig) -> (f64, f64) {
    let e = Experiment::new(cfg, std::path::Path::new(".")).unwrap();
    let rep = e.analyze(&e.simulate().unwrap()).unwrap();
    (rep.sigma_mean, rep.sigma_sem)
}

#[test]
fn object_then_loss_is_one_binomial_thinning() {
    let (n, alpha, eta) = (20u32, 0.3, 0.6);
    let g = Geometry::new(100, 100, 100).unwrap();
    let input = FrameStack::repeat_frame(100, 100, 100, Arm::Signal, &vec![n; g.pixels()]).unwrap();
    let mask = ObjectMask::uniform(100, 100, alpha).unwrap();
    let out = apply_loss(&apply_object(&input, &mask, 1).unwrap(), eta, 1).unwrap();
    let values: Vec<f64> = out.counts().iter().map(|&c| c as f64).collect();
    let m = Moments::of(&values);
    let p = eta * (1.0 - alpha);
    assert!(m.n >= 1_000_000);
    assert!((m.mean - n as f64 * p).abs() < 4.0 * m.se_mean, "{m:?}");
    assert!(
        (m.variance - n as f64 * p * (1.0 - p)).abs() < 4.0 * m.se_variance,
        "{m:?}"
    );
}

#[test]
fn sigma_law_holds_within_four_standard_errors() {
    for (i, eta) in [0.5, 0.7, 0.9].into_iter().enumerate() {
        let cfg = ExperimentConfig::twin(
            Geometry::new(48, 48, 300).unwrap(),
            800.0,
            1e4,
            eta,
            i as u64,
        );
        let (s, se) = analyzed_sigma(cfg);
        assert!((s - (1.0 - eta)).abs() < 4.0 * se, "eta {eta}: {s} +- {se}");
    }
}

#[test]
fn background_raises_sigma() {
    let mut last = 0.0;
    for (k, dark) in [0.0, 5.0, 50.0].into_iter().enumerate() {
        let mut cfg =
            ExperimentConfig::twin(Geometry::new(48, 48, 100).unwrap(), 500.0, 1e4, 0.7, 3);
        cfg.detector.dark_mean = dark;
        cfg.detector.read_noise_rms = 2.0 * k as f64;
        let (s, _) = analyzed_sigma(cfg);
        assert!(s > last, "dark {dark}: {s} <= {last}");
        last = s;
    }
}

#[test]
fn frames_use_independent_streams() {
    let g = Geometry::new(100, 100, 2).unwrap();
    for stack in [
        gen_coherent(50.0, g, 4).unwrap(),
        gen_thermal(50.0, 5.0, g, 4).unwrap(),
    ] {
        let (a, b) = (stack.frame(0), stack.frame(1));
        assert_ne!(a, b);
        let n = a.len() as f64;
        let ma = a.iter().map(|&v| v as f64).sum::<f64>() / n;
        let mb = b.iter().map(|&v| v as f64).sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.iter().zip(b) {
            let (dx, dy) = (x as f64 - ma, y as f64 - mb);
            sab += dx * dy;
            saa += dx * dx;
            sbb += dy * dy;
        }
        let r = sab / (saa * sbb).sqrt();
        assert!(r.abs() < 4.0 / n.sqrt(), "frame correlation {r}");
    }
}

#[test]
fn differential_ratio_crosses_one_near_full_noise() {
    let mut cfg = ExperimentConfig::sigma_sweep(17);
    cfg.geometry = Geometry::new(48, 48, 200).unwrap();
    let etas = [0.15, 0.08, 0.02];
    let e = Experiment::new(cfg, std::path::Path::new(".")).unwrap();
    let points = sweep(&e, &etas, Some(1000.0)).unwrap();
    let curve: Vec<(f64, f64)> = points.iter().map(|p| (p.sigma, p.r_dcl.value)).collect();
    let c = crossing(&curve, 1.0).unwrap();
    assert!((c.sigma - 1.0).abs() <= 0.05, "{c:?} from {curve:?}");
}

fn pair_frames() -> impl Strategy<Value = (Vec<u32>, Vec<u32>, u32)> {
    (2usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(0u32..500, n),
            prop::collection::vec(0u32..500, n),
            0u32..1000,
        )
    })
}

proptest! {
    #[test]
    fn sigma_rescales_under_constant_offset((s, i, c) in pair_frames()) {
        let w = s.len();
        prop_assume!(s.iter().chain(&i).any(|&v| v > 0));
        let region = Region::full(w, 1).unwrap();
        let before = estimate_sigma(FramePair::new(w, 1, &s, &i).unwrap(), &region, 0).unwrap();
        let s2: Vec<u32> = s.iter().map(|v| v + c).collect();
        let i2: Vec<u32> = i.iter().map(|v| v + c).collect();
        let after = estimate_sigma(FramePair::new(w, 1, &s2, &i2).unwrap(), &region, 0).unwrap();
        let sum = before.mean_signal + before.mean_idler;
        let expected = before.sigma * sum / (sum + 2.0 * c as f64);
        prop_assert!((after.sigma - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
    }
}
