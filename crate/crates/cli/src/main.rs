//! `ccrop`: sample crops, localize heatmaps, run the simulator and sweeps.
//!
//! Exit codes: 0 on success, 2 for bad input or configuration, 3 when an
//! internal invariant breaks.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use contrastive_crop::metrics::{self, StatsRow, DEFAULT_TAU};
use contrastive_crop::simulator::{self, evaluate_run, parse_scenes};
use contrastive_crop::{
    compare_samplers, contrastive_crop, localize, random_crop, sweep, Axis, Error, Heatmap, Rect,
    RngStream, RunConfig, SceneSpec, TrainPlan,
};

#[derive(Parser, Debug)]
#[command(
    name = "ccrop",
    version,
    about = "Object-aware crop sampling and its Monte-Carlo harness"
)]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Sampler and plan settings (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; changes speed only, never results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SamplerArg {
    Random,
    Contrastive,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit N crops as CSV (index,x0,y0,x1,y1).
    Sample {
        /// Localization box `x0,y0,x1,y1`; defaults to the whole image.
        #[arg(long = "box", conflicts_with = "heatmap")]
        bbox: Option<String>,
        /// Derive the box from this heatmap file at threshold k.
        #[arg(long)]
        heatmap: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, value_enum, default_value_t = SamplerArg::Contrastive)]
        sampler: SamplerArg,
    },
    /// Threshold a heatmap file and print its box.
    Localize {
        #[arg(long)]
        heatmap: PathBuf,
        /// Activation threshold; defaults to the configured k.
        #[arg(long)]
        k: Option<f64>,
    },
    /// Run the scheduled simulation on a scene file; one row per scene and sampler.
    Simulate {
        #[arg(long)]
        scenes: PathBuf,
        /// Pairs per scene per epoch, or per scene and arm with --oracle.
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// Compare the three arms with ground-truth boxes instead of the schedule.
        #[arg(long)]
        oracle: bool,
    },
    /// Sweep one parameter and emit a CSV table.
    Sweep {
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long)]
        grid: String,
        /// Scene file; without it, random scenes are generated from the seed.
        #[arg(long)]
        scenes: Option<PathBuf>,
        /// Number of generated scenes.
        #[arg(long, default_value_t = 20)]
        n_scenes: usize,
        /// Pairs per scene per epoch.
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
    },
    /// Print the box-refresh epochs of a plan.
    Schedule {
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        freq: Option<f64>,
    },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_internal() {
            CliError::Internal(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: contrastive_crop::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        if e.is_internal() {
            CliError::Internal(msg)
        } else {
            CliError::Input(msg)
        }
    })
}

fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Input(format!("{what}: `{t}` is not a number")))
        })
        .collect()
}

fn parse_box(text: &str) -> CliResult<Rect> {
    let v = parse_list(text, "--box")?;
    let [x0, y0, x1, y1] = v[..] else {
        return Err(CliError::Input("--box takes x0,y0,x1,y1".into()));
    };
    Ok(Rect::new(x0, y0, x1, y1)?)
}

fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        Some(p) => with_path(p, RunConfig::parse(&read_file(p)?)),
        None => Ok(RunConfig::default()),
    }
}

fn load_scenes(path: &Path) -> CliResult<Vec<SceneSpec>> {
    let scenes = with_path(path, parse_scenes(&read_file(path)?))?;
    if scenes.is_empty() {
        return Err(CliError::Input(format!("{}: no scenes", path.display())));
    }
    Ok(scenes)
}

fn load_heatmap(path: &Path) -> CliResult<Heatmap> {
    with_path(path, Heatmap::parse(&read_file(path)?))
}

fn csv_rect_rows(rows: impl IntoIterator<Item = (String, Rect)>, first: &str) -> String {
    let mut out = format!("{first},x0,y0,x1,y1\n");
    for (label, r) in rows {
        let [x0, y0, x1, y1] = r.to_array();
        out.push_str(&format!("{label},{x0},{y0},{x1},{y1}\n"));
    }
    out
}

fn run(cli: &Cli) -> CliResult<String> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Sample {
            bbox,
            heatmap,
            n,
            sampler,
        } => {
            let b = match (bbox, heatmap) {
                (Some(text), _) => parse_box(text)?,
                (None, Some(path)) => {
                    localize(&load_heatmap(path)?.normalize().heatmap, cfg.crop.k)
                }
                (None, None) => Rect::unit(),
            };
            let mut rng = RngStream::new(cli.seed, 0);
            let crops = (0..*n)
                .map(|i| {
                    let r = match sampler {
                        SamplerArg::Random => random_crop(&mut rng, &cfg.crop)?,
                        SamplerArg::Contrastive => contrastive_crop(&mut rng, &cfg.crop, &b)?,
                    };
                    Ok((i.to_string(), r))
                })
                .collect::<CliResult<Vec<_>>>()?;
            Ok(csv_rect_rows(crops, "index"))
        }
        Command::Localize { heatmap, k } => {
            let k = k.unwrap_or(cfg.crop.k);
            if !(0.0..=1.0).contains(&k) {
                return Err(CliError::Input(format!("--k must lie in [0, 1], got {k}")));
            }
            let m = load_heatmap(heatmap)?.normalize();
            let b = localize(&m.heatmap, k);
            let fallback = !m.heatmap.values().iter().any(|&v| v > k);
            let [x0, y0, x1, y1] = b.to_array();
            Ok(format!(
                "x0,y0,x1,y1,fallback\n{x0},{y0},{x1},{y1},{fallback}\n"
            ))
        }
        Command::Simulate {
            scenes,
            pairs,
            tau,
            oracle,
        } => {
            check_tau(*tau)?;
            let scenes = load_scenes(scenes)?;
            let rows: Vec<StatsRow> = if *oracle {
                compare_samplers(cli.seed, &cfg.crop, &scenes, *pairs, *tau)?
                    .iter()
                    .enumerate()
                    .flat_map(|(i, c)| {
                        simulator::Arm::ALL.into_iter().map(move |arm| {
                            StatsRow::new("scene", i as f64, arm.as_str(), c.arm(arm), cli.seed)
                        })
                    })
                    .collect()
            } else {
                evaluate_run(cli.seed, &cfg.plan, &cfg.crop, &scenes, *pairs, *tau)?
                    .iter()
                    .map(|(i, kind, s)| {
                        StatsRow::new("scene", *i as f64, kind.as_str(), s, cli.seed)
                    })
                    .collect()
            };
            Ok(metrics::csv_string(&rows))
        }
        Command::Sweep {
            axis,
            grid,
            scenes,
            n_scenes,
            pairs,
            tau,
        } => {
            let axis: Axis = axis.parse()?;
            let grid = parse_list(grid, "--grid")?;
            let scenes = match scenes {
                Some(p) => load_scenes(p)?,
                None => simulator::random_scenes(cli.seed, *n_scenes, 0.05, 0.3)?,
            };
            let rows = sweep(axis, &grid, &cfg, &scenes, *pairs, *tau, cli.seed)?;
            Ok(metrics::csv_string(&rows))
        }
        Command::Schedule { epochs, freq } => {
            let plan = TrainPlan::new(
                epochs.unwrap_or(cfg.plan.total_epochs),
                freq.unwrap_or(cfg.plan.update_freq),
            )?;
            let mut out = String::from("update_epoch\n");
            for e in plan.update_epochs() {
                out.push_str(&format!("{e}\n"));
            }
            Ok(out)
        }
    }
}

fn check_tau(tau: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "--tau must lie in [0, 1], got {tau}"
        )))
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(CliError::Input("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    }
    .and_then(|text| emit(cli.out.as_deref(), &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
