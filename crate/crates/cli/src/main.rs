use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mavnav::eval::{mcc_eval, rel_trans_error, MccConfig};
use mavnav::geom::read_trajectory_csv;
use mavnav::mapping::read_grid;
use mavnav::scenario::{load_config, parse_toml, run_scenario, Metrics, ScenarioConfig, ScenarioKind};
use mavnav::textio::{read_text, write_text};
use mavnav::vo::{ObservationMode, VoSceneConfig};
use mavnav::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mavnav",
    version,
    about = "Synthetic MAV navigation scenarios and evaluation"
)]
struct Cli {
    /// Scenario file (TOML). Its `kind` must match the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for the artifact bundle.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Pixel,
    Subpixel,
}

#[derive(Subcommand)]
enum Command {
    /// Hover or waypoint flight with the full estimation and control loop.
    Simulate,
    /// Plan across an occupancy grid and fly the result.
    Plan {
        /// Occupancy grid file; the built-in industrial hall when omitted.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Start position, x,y,z in m.
        #[arg(long, value_parser = parse_point)]
        start: Option<[f64; 3]>,
        /// Goal position, x,y,z in m.
        #[arg(long, value_parser = parse_point)]
        goal: Option<[f64; 3]>,
        /// Only plan, skip the simulated flight.
        #[arg(long)]
        no_fly: bool,
    },
    /// Sparse and dense mapping of the synthetic room, scored by MCC.
    Map,
    /// Stereo visual odometry on a synthetic sequence.
    Vo {
        /// Scene file (TOML) with the sequence parameters.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Collision-check confusion and MCC between two grid files.
    EvalMcc {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        est: PathBuf,
        /// Box extent, x,y,z in m.
        #[arg(long, value_parser = parse_point)]
        bbox: Option<[f64; 3]>,
        /// Box step in m.
        #[arg(long)]
        stride: Option<f64>,
    },
    /// Relative translational error between two trajectory files.
    EvalTraj {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        est: PathBuf,
    },
    /// Map the room, plan on the reconstruction and fly the plan.
    FullMission,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("{c:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok([x, y, z]),
        _ => Err(format!("expected three finite numbers x,y,z, got {s:?}")),
    }
}

fn scenario(cli: &Cli, kind: ScenarioKind) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ScenarioConfig::new(kind),
    };
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "config is a {} scenario, not {}",
            cfg.kind.name(),
            kind.name()
        )));
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn report(m: &Metrics, out: Option<&Path>) -> Result<()> {
    print!("{}", m.to_text());
    if let Some(dir) = out {
        write_text(&dir.join("metrics.txt"), &m.to_text())?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let cfg = match &cli.command {
        Command::Simulate => scenario(cli, ScenarioKind::Simulate)?,
        Command::Plan {
            map,
            start,
            goal,
            no_fly,
        } => {
            let mut cfg = scenario(cli, ScenarioKind::Plan)?;
            if map.is_some() {
                cfg.plan.map = map.clone();
            }
            if let Some(s) = start {
                cfg.plan.start = *s;
            }
            if let Some(g) = goal {
                cfg.plan.goal = *g;
            }
            if *no_fly {
                cfg.plan.fly = false;
            }
            cfg
        }
        Command::Map => scenario(cli, ScenarioKind::Map)?,
        Command::Vo { scene, mode } => {
            let mut cfg = scenario(cli, ScenarioKind::Vo)?;
            if let Some(p) = scene {
                cfg.vo.scene = parse_toml::<VoSceneConfig>(&read_text(p)?)?;
            }
            if let Some(m) = mode {
                cfg.vo.odometry.motion.mode = match m {
                    Mode::Pixel => ObservationMode::Pixel,
                    Mode::Subpixel => ObservationMode::Subpixel,
                };
            }
            cfg
        }
        Command::FullMission => scenario(cli, ScenarioKind::FullMission)?,
        Command::EvalMcc { gt, est, bbox, stride } => {
            let mut mc = MccConfig::default();
            if let Some(b) = bbox {
                mc.bbox = *b;
            }
            if stride.is_some() {
                mc.stride = *stride;
            }
            let (c, mcc) = mcc_eval(&read_grid(gt)?, &read_grid(est)?, &mc)?;
            let mut m = Metrics::default();
            m.confusion("eval", &c, mcc);
            m.push_count("boxes", c.total() as usize);
            return report(&m, cli.out.as_deref());
        }
        Command::EvalTraj { gt, est } => {
            let r = rel_trans_error(&read_trajectory_csv(gt)?, &read_trajectory_csv(est)?)?;
            let mut m = Metrics::default();
            m.rel_errors(&r);
            return report(&m, cli.out.as_deref());
        }
    };
    let m = run_scenario(&cfg, &out)?;
    print!("{}", m.to_text());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
