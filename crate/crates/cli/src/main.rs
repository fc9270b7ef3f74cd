use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use twinbeam::config::ExperimentConfig;
use twinbeam::experiment::Experiment;
use twinbeam::io::fstk;
use twinbeam::runner::{self, FrameSelect, SweepSummary, IDLER_FILE, MANIFEST_FILE, SIGNAL_FILE};
use twinbeam::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(
    name = "twinbeam",
    version,
    about = "Twin-beam sub-shot-noise imaging simulator"
)]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON); a run manifest is accepted too.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate frames and write both stacks plus a run manifest.
    Simulate(Common),
    /// Measure σ and the SNR ratios on stored stacks.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Directory holding a simulate run; its manifest is the default config.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, requires = "idler")]
        signal: Option<PathBuf>,
        #[arg(long, requires = "signal")]
        idler: Option<PathBuf>,
    },
    /// Image the π glyph with the three schemes.
    DemoPi(Common),
    /// Measure R against σ over the configured sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Exit with status 4 unless every point agrees with the predictions.
        #[arg(long)]
        check: bool,
    },
    /// Render stacks or prediction curves.
    #[command(subcommand)]
    Render(Render),
}

#[derive(Subcommand)]
enum Render {
    /// A frame, or the temporal mean, of an FSTK1 stack as a 16-bit PGM.
    Stack {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, conflicts_with = "mean")]
        frame: Option<usize>,
        #[arg(long)]
        mean: bool,
    },
    /// R_cl and R_dcl predictions over a σ grid as CSV.
    Curves {
        output: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        excess: f64,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
}

enum Failure {
    Core(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn experiment(
    common: &Common,
    fallback: Option<&Path>,
    preset: Option<fn(u64) -> ExperimentConfig>,
) -> Result<Experiment, Error> {
    let path = common.config.as_deref().or(fallback);
    let (mut cfg, base) = match (path, preset) {
        (Some(p), _) => (
            ExperimentConfig::load(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        (None, Some(preset)) => (preset(0), PathBuf::from(".")),
        (None, None) => return Err(Error::Config("--config is required".into())),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Experiment::new(cfg, &base)
}

fn check_sweep(s: &SweepSummary) -> Vec<String> {
    let mut bad = Vec::new();
    for (i, p) in s.points.iter().enumerate() {
        let dev_cl = (p.r_cl.value / p.r_cl_theory - 1.0).abs();
        let dev_dcl = (p.r_dcl.value / p.r_dcl_theory - 1.0).abs();
        if dev_cl > 0.10 || dev_dcl > 0.10 {
            bad.push(format!(
                "point {i}: R_cl off by {:.1}%, R_dcl off by {:.1}%",
                100.0 * dev_cl,
                100.0 * dev_dcl
            ));
        }
        if p.sigma < 0.95 && p.r_dcl.value <= 1.0 {
            bad.push(format!(
                "point {i}: R_dcl = {:.3} at sigma {:.3}",
                p.r_dcl.value, p.sigma
            ));
        }
    }
    bad
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(common) => {
            let exp = experiment(&common, None, None)?;
            let (pair, _) = runner::simulate_to(&exp, &common.out)?;
            info!(
                "{} frames written to {}",
                pair.n_frames(),
                common.out.display()
            );
        }
        Command::Analyze {
            common,
            run,
            signal,
            idler,
        } => {
            let manifest = run.as_ref().map(|r| r.join(MANIFEST_FILE));
            let exp = experiment(&common, manifest.as_deref(), None)?;
            let (s, i) = match (signal, idler, run) {
                (Some(s), Some(i), _) => (s, i),
                (_, _, Some(r)) => (r.join(SIGNAL_FILE), r.join(IDLER_FILE)),
                _ => return Err(Error::Config("give --run or --signal/--idler".into()).into()),
            };
            let pair = runner::load_pair(&s, &i)?;
            let report = runner::analyze_to(&exp, &pair, &common.out)?;
            println!(
                "sigma = {:.4} +- {:.4} over {} frames",
                report.sigma_mean, report.sigma_sem, report.n_frames
            );
            if let Some(o) = &report.overall {
                println!(
                    "R_cl = {:.3} +- {:.3}, R_dcl = {:.3} +- {:.3}",
                    o.r_cl.value, o.r_cl.stderr, o.r_dcl.value, o.r_dcl.stderr
                );
            }
        }
        Command::DemoPi(common) => {
            let exp = experiment(&common, None, Some(ExperimentConfig::demo_pi))?;
            let summary = runner::demo_pi_to(&exp, &common.out)?;
            for q in &summary.quality {
                println!(
                    "{:>3}: residual rms {:.4}, contrast {:.4} +- {:.4}",
                    q.scheme.name(),
                    q.residual_rms,
                    q.contrast,
                    q.contrast_se
                );
            }
        }
        Command::Sweep { common, check } => {
            let exp = experiment(&common, None, Some(ExperimentConfig::sigma_sweep))?;
            let summary = runner::sweep_to(&exp, &common.out)?;
            for p in &summary.points {
                println!(
                    "sigma {:.3}: R_cl {:.3} (theory {:.3}), R_dcl {:.3} (theory {:.3})",
                    p.sigma, p.r_cl.value, p.r_cl_theory, p.r_dcl.value, p.r_dcl_theory
                );
            }
            if let Some(c) = summary.r_cl_crossing {
                println!(
                    "R_cl = 1 at sigma {:.3}{}",
                    c.sigma,
                    if c.extrapolated {
                        " (extrapolated)"
                    } else {
                        ""
                    }
                );
            }
            if check {
                let bad = check_sweep(&summary);
                if !bad.is_empty() {
                    return Err(Failure::Check(bad.join("\n")));
                }
            }
        }
        Command::Render(Render::Stack {
            input,
            output,
            frame,
            mean,
        }) => {
            let stack = fstk::load(&input)?;
            let select = match (frame, mean) {
                (Some(k), _) => FrameSelect::Frame(k),
                (None, true) => FrameSelect::Mean,
                (None, false) => FrameSelect::Frame(0),
            };
            runner::render_stack(&stack, select, &output)?;
        }
        Command::Render(Render::Curves {
            output,
            alpha,
            excess,
            from,
            to,
            points,
        }) => runner::render_curves(alpha, excess, from, to, points, &output)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            warn!("thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                EXIT_CONFIG
            } else {
                EXIT_DATA
            })
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed:\n{msg}");
            ExitCode::from(EXIT_CHECK)
        }
    }
}
