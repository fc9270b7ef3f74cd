//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p twinbeam-core --test acceptance`.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twinbeam::config::{ExperimentConfig, KernelSpec, ObjectConfig, SourceConfig};
use twinbeam::estimators::{estimate_excess_noise, Region};
use twinbeam::experiment::{sweep, Experiment};
use twinbeam::frame::Geometry;
use twinbeam::optics::{apply_loss, bin_pixels};
use twinbeam::runner::{simulate_to, summarize_sweep, IDLER_FILE, SIGNAL_FILE};
use twinbeam::statgen::{
    gen_coherent, gen_thermal, generate_pair, PairKernel, SourceKind, SourceModel,
};
use twinbeam::stats::Moments;
use twinbeam::theory::{r_cl, r_dcl, TheoryPoint};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn exp(cfg: ExperimentConfig) -> Experiment {
    Experiment::new(cfg, Path::new(".")).expect("valid config")
}

fn geometry(w: usize, h: usize, n: usize) -> Geometry {
    Geometry::new(w, h, n).unwrap()
}

fn measured_sigma(cfg: ExperimentConfig) -> (f64, f64) {
    let e = exp(cfg);
    let pair = e.simulate().unwrap();
    let rep = e.analyze(&pair).unwrap();
    (rep.sigma_mean, rep.sigma_sem)
}

fn sigma_law() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, eta) in [0.5, 0.7, 0.9].into_iter().enumerate() {
        let cfg = ExperimentConfig::twin(geometry(64, 64, 500), 1000.0, 1e4, eta, 100 + i as u64);
        let (s, _) = measured_sigma(cfg);
        let dev = s - (1.0 - eta);
        ok &= dev.abs() <= 0.02;
        parts.push(format!("eta {eta}: sigma {s:.4} ({dev:+.4})"));
    }
    outcome(ok, parts.join(", "))
}

fn shot_noise_benchmark() -> Outcome {
    let mut cfg = ExperimentConfig::twin(geometry(64, 64, 500), 1000.0, 1e4, 0.7, 200);
    cfg.source = SourceConfig {
        kind: SourceKind::CoherentSplit,
        n0: 1000.0,
        modes: None,
        kernel: KernelSpec::Delta,
    };
    let (s, sem) = measured_sigma(cfg);
    outcome(
        (s - 1.0).abs() <= 0.03,
        format!("split coherent sigma {s:.4} +- {sem:.4}"),
    )
}

fn operating_point() -> Outcome {
    let eta = 0.548;
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, seed) in [(400, 300), (1200, 301)] {
        let mut cfg = ExperimentConfig::twin(geometry(64, 64, n), 1000.0 / eta, 1e5, eta, seed);
        cfg.object = ObjectConfig::HalfPlane { alpha: 0.05 };
        let (s, sem) = measured_sigma(cfg);
        ok &= (s - 0.452).abs() <= 0.02 && sem <= 0.01;
        parts.push(format!("{n} frames: sigma {s:.4} sem {sem:.5}"));
    }
    outcome(ok, parts.join(", "))
}

struct SweepResults {
    four: Outcome,
    five: Outcome,
    six: Outcome,
}

fn sweep_criteria() -> SweepResults {
    let e = exp(ExperimentConfig::sigma_sweep(400));
    let cfg = e.config.sweep.clone().unwrap();
    let points = sweep(&e, &cfg.etas().unwrap(), cfg.detected_mean).unwrap();
    let summary = summarize_sweep(points);
    let pts = &summary.points;

    let mut ok = true;
    let mut worst: f64 = 0.0;
    for p in pts {
        // independent evaluation of the predictions at the measured point
        let d = p.alpha * p.alpha * p.excess_noise + 2.0 * p.sigma * (1.0 - p.alpha) + p.alpha;
        let cl = ((1.0 - p.alpha) / d).sqrt();
        let dcl = ((2.0 - p.alpha) / d).sqrt();
        let dev = (p.r_cl.value / cl - 1.0)
            .abs()
            .max((p.r_dcl.value / dcl - 1.0).abs());
        worst = worst.max(dev);
        ok &= dev <= 0.10 && p.excess_noise < 0.02;
        if p.sigma < 0.95 {
            ok &= p.r_dcl.value > 1.0;
        }
    }
    let cross = summary.r_cl_crossing;
    let cross_ok = cross.is_some_and(|c| !c.extrapolated && (c.sigma - 0.5).abs() <= 0.05);
    let four = outcome(
        ok && cross_ok,
        format!(
            "{} points, worst deviation {:.1}%, R_cl = 1 at sigma {}, max E {:.4}",
            pts.len(),
            100.0 * worst,
            cross.map_or("none".into(), |c| format!("{:.3}", c.sigma)),
            pts.iter().map(|p| p.excess_noise).fold(0.0, f64::max)
        ),
    );

    let near = pts
        .iter()
        .min_by(|a, b| (a.sigma - 0.35).abs().total_cmp(&(b.sigma - 0.35).abs()))
        .unwrap();
    let five = outcome(
        (near.sigma - 0.35).abs() < 0.02
            && (1.05..=1.25).contains(&near.r_cl.value)
            && (1.55..=1.80).contains(&near.r_dcl.value),
        format!(
            "sigma {:.3}: R_cl {:.3}, R_dcl {:.3}",
            near.sigma, near.r_cl.value, near.r_dcl.value
        ),
    );

    let best_cl = pts.iter().map(|p| p.r_cl.value).fold(0.0, f64::max);
    let best_dcl = pts.iter().map(|p| p.r_dcl.value).fold(0.0, f64::max);
    let six = outcome(
        best_cl > 1.3 && best_dcl > 1.7,
        format!("best R_cl {best_cl:.3}, best R_dcl {best_dcl:.3}"),
    );
    SweepResults { four, five, six }
}

fn excess_noise_law() -> Outcome {
    let eta = 0.7;
    let mut cfg = ExperimentConfig::twin(geometry(64, 64, 500), 1000.0 / eta, 1e4, eta, 700);
    cfg.source = SourceConfig {
        kind: SourceKind::Thermal,
        n0: 1000.0 / eta,
        modes: Some(1e4),
        kernel: KernelSpec::Delta,
    };
    let e = exp(cfg);
    let pair = e.simulate().unwrap();
    let all: Vec<usize> = (0..pair.geometry().pixels()).collect();
    let es = estimate_excess_noise(&pair.signal, &all).unwrap();
    let ei = estimate_excess_noise(&pair.idler, &all).unwrap();
    outcome(
        (es - 0.1).abs() <= 0.02 && (ei - 0.1).abs() <= 0.02,
        format!("E signal {es:.4}, idler {ei:.4}"),
    )
}

fn binning() -> Outcome {
    let eta = 0.7;
    let mut sigmas = Vec::new();
    for bin in [1usize, 2, 4] {
        let mut cfg = ExperimentConfig::twin(geometry(64, 64, 200), 1000.0, 1e5, eta, 800);
        cfg.source.kernel = KernelSpec::Gaussian {
            radius: 2,
            std: 0.35,
        };
        cfg.detector.bin_factor = bin;
        sigmas.push(measured_sigma(cfg).0);
    }
    let decreasing = sigmas.windows(2).all(|w| w[1] < w[0]);
    let last = sigmas[2];
    outcome(
        decreasing && (last - (1.0 - eta)).abs() <= 0.03 && last > 1.0 - eta - 0.03,
        format!(
            "bins 1/2/4: sigma {:.4} / {:.4} / {:.4}",
            sigmas[0], sigmas[1], sigmas[2]
        ),
    )
}

fn within_se(m: &Moments, mean: f64, var: f64) -> bool {
    (m.mean - mean).abs() <= 4.0 * m.se_mean && (m.variance - var).abs() <= 4.0 * m.se_variance
}

fn property_suites() -> Outcome {
    let mut fails = Vec::new();

    // conservation: every signal photon has its twin before loss, loss
    // never creates photons and binning keeps totals
    let g = geometry(32, 32, 50);
    let pre = generate_pair(&SourceModel::twin(500.0, 1e3, PairKernel::delta()), g, 1).unwrap();
    for k in 0..g.n_frames {
        let (s, i) = (pre.signal.frame(k), pre.idler.frame(k));
        if (0..g.pixels()).any(|x| s[x] != i[g.pixels() - 1 - x]) {
            fails.push("twin conservation");
            break;
        }
    }
    let lossy = apply_loss(&pre.signal, 0.6, 2).unwrap();
    if lossy
        .counts()
        .iter()
        .zip(pre.signal.counts())
        .any(|(a, b)| a > b)
    {
        fails.push("loss conservation");
    }
    let binned = bin_pixels(&pre.signal, 4).unwrap();
    if (0..g.n_frames).any(|k| binned.frame_total(k) != pre.signal.frame_total(k)) {
        fails.push("binning conservation");
    }

    // moments on 1.2e6 samples against closed forms
    let big = geometry(100, 100, 120);
    let as_f64 = |c: &[u32]| c.iter().map(|&v| v as f64).collect::<Vec<_>>();
    let th = Moments::of(&as_f64(gen_thermal(50.0, 10.0, big, 3).unwrap().counts()));
    if !within_se(&th, 50.0, 50.0 * (1.0 + 50.0 / 10.0)) {
        fails.push("multithermal moments");
    }
    let co = Moments::of(&as_f64(gen_coherent(20.0, big, 4).unwrap().counts()));
    if !within_se(&co, 20.0, 20.0) {
        fails.push("poisson moments");
    }
    let tw = generate_pair(&SourceModel::twin(30.0, 3.0, PairKernel::delta()), big, 5).unwrap();
    let tm = Moments::of(&as_f64(tw.idler.counts()));
    if !within_se(&tm, 30.0, 30.0 * (1.0 + 30.0 / 3.0)) {
        fails.push("twin marginal moments");
    }
    if th.n < 1_000_000 {
        fails.push("moment sample size");
    }

    // byte-exact determinism of written stacks
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::twin(geometry(32, 32, 40), 800.0, 1e4, 0.7, 9);
    cfg.source.kernel = KernelSpec::Gaussian {
        radius: 2,
        std: 0.8,
    };
    cfg.object = ObjectConfig::Pi { alpha: 0.1 };
    let e = exp(cfg);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    simulate_to(&e, &a).unwrap();
    simulate_to(&e, &b).unwrap();
    for f in [SIGNAL_FILE, IDLER_FILE] {
        if std::fs::read(a.join(f)).unwrap() != std::fs::read(b.join(f)).unwrap() {
            fails.push("determinism");
        }
    }

    // differential ratio dominates on random operating points
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 10_000 {
        let p = TheoryPoint::new(
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..10.0),
        );
        if let (Ok(d), Ok(c)) = (r_dcl(&p), r_cl(&p)) {
            checked += 1;
            if d < c {
                fails.push("r_dcl >= r_cl");
                break;
            }
        }
    }

    // regions and estimators never read outside the grid
    if Region::interior(8, 8, 4).is_ok() {
        fails.push("region bounds");
    }

    let detail = if fails.is_empty() {
        format!(
            "conservation, moments on {} samples, determinism, {checked} theory points",
            th.n
        )
    } else {
        format!("failed: {}", fails.join(", "))
    };
    outcome(fails.is_empty(), detail)
}

fn line(id: u32, name: &str, o: &Outcome, secs: f64) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} [{id}] {name}: {} ({secs:.1}s)", o.detail);
}

fn timed(id: u32, name: &str, f: fn() -> Outcome) -> Outcome {
    let t = Instant::now();
    let o = f();
    line(id, name, &o, t.elapsed().as_secs_f64());
    o
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results = vec![
        timed(1, "sigma = 1 - eta", sigma_law),
        timed(2, "shot-noise benchmark", shot_noise_benchmark),
        timed(3, "operating point eta = 0.548", operating_point),
    ];
    let t = Instant::now();
    let sw = sweep_criteria();
    let secs = t.elapsed().as_secs_f64();
    for (id, name, o) in [
        (4, "R versus sigma sweep", sw.four),
        (5, "values at sigma 0.35", sw.five),
        (6, "headline improvements", sw.six),
    ] {
        line(id, name, &o, secs);
        results.push(o);
    }
    results.push(timed(7, "multithermal excess noise", excess_noise_law));
    results.push(timed(8, "binning monotonicity", binning));
    results.push(timed(9, "property suites", property_suites));

    let failed = results.iter().filter(|o| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
