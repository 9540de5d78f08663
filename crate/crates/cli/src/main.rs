mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use tris_core::beamformer::align_single_bin;
use tris_core::detector::{calibrate_false_alarm, Calibration};
use tris_core::export::{self, Meta, Results};
use tris_core::harness::{monte_carlo, sweep_layouts};
use tris_core::rng::{Purpose, RunSeed};
use tris_core::{ExperimentConfig, PhaseConfig, UpaSpec};

use output::Bundle;

/// Cognitive radar simulator: SARSA-tuned transmissive surface, adaptive
/// matched-filter detection.
///
/// Command-line flags take precedence over values in the config file.
#[derive(Parser)]
#[command(name = "tris-radar", version)]
struct Cli {
    /// Suppress progress messages on standard error.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "TRIS_RADAR_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    config: PathBuf,
    /// Master seed; overrides the config. A fresh one is printed if absent everywhere.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo runs; overrides the config.
    #[arg(long)]
    runs: Option<usize>,
    /// Leave wall-clock metadata out of results.json.
    #[arg(long)]
    no_meta: bool,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo replication of the closed loop.
    Run(RunArgs),
    /// Steady-state detection probability versus surface size.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Surface sizes: perfect squares (`64`) or explicit layouts (`8x4`).
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_layout)]
        elements: Vec<Layout>,
        /// Receiver sizes, same syntax; defaults to the config's receiver.
        #[arg(long, value_delimiter = ',', value_parser = parse_layout)]
        receivers: Vec<Layout>,
    },
    /// Empirical false-alarm rate of the detector under white noise.
    CalibratePfa {
        /// Target false-alarm probability, strictly between 0 and 1.
        #[arg(long)]
        pfa: f64,
        /// Number of single-bin H0 trials.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Receive elements.
        #[arg(long, default_value_t = 16)]
        nr: usize,
        /// Seed for the noise draws; a fresh one is printed if absent.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Transmit beampattern over the grid for one surface configuration.
    Beampattern {
        /// Experiment configuration (JSON).
        config: PathBuf,
        /// `aligned:I,J`, `aligned:broadside`, `random`, or a JSON file holding the phases.
        #[arg(long, default_value = "aligned:broadside")]
        phases: String,
        /// Seed for `--phases random`.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Element positions and feed coefficients of the configured surface.
    DumpGeometry {
        /// Experiment configuration (JSON).
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
}

#[derive(Clone, Copy, Debug)]
struct Layout(usize, usize);

fn parse_layout(s: &str) -> Result<Layout, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let layout = match s.split_once(['x', 'X']) {
        Some((a, b)) => Layout(num(a)?, num(b)?),
        None => {
            let n = num(s)?;
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(format!("{n} is not a perfect square; write it as NXxNY"));
            }
            Layout(side, side)
        }
    };
    if layout.0 == 0 || layout.1 == 0 {
        return Err("array dimensions must be positive".into());
    }
    Ok(layout)
}

/// Failures split by exit code: 2 for bad input, 1 for anything after.
enum Failure {
    Input(anyhow::Error),
    Runtime(anyhow::Error),
}

trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }
    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

struct Ctx {
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn seed(&self, flag: Option<u64>, config: Option<u64>) -> u64 {
        flag.or(config).unwrap_or_else(|| {
            let s = rand::random::<u64>();
            // Printed even when quiet: it is the only way to reproduce the run.
            eprintln!("seed: {s}");
            s
        })
    }

    fn finish(&self, bundle: Bundle, dir: &Path) -> Result<(), Failure> {
        for path in bundle.commit(dir).runtime()? {
            self.note(format!("wrote {}", path.display()));
        }
        Ok(())
    }
}

fn meta(started: SystemTime, clock: Instant) -> Meta {
    Meta {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        started_unix_s: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        elapsed_s: clock.elapsed().as_secs_f64(),
        threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    }
}

fn load(path: &Path, seed: Option<u64>, runs: Option<usize>) -> Result<ExperimentConfig, Failure> {
    let mut config = ExperimentConfig::load(path).input()?;
    if let Some(s) = seed {
        config.seed = Some(s);
    }
    if let Some(r) = runs {
        config.runs = r;
    }
    Ok(config)
}

fn cmd_run(ctx: &Ctx, args: RunArgs) -> Result<(), Failure> {
    let (started, clock) = (SystemTime::now(), Instant::now());
    let mut config = load(&args.config, args.seed, args.runs)?;
    let episode = config.episode().input()?;
    let seed = ctx.seed(None, config.seed);
    config.seed = Some(seed);
    ctx.note(format!("running {} episodes of {} pulses", config.runs, episode.pulses));
    let mc = monte_carlo(&episode, config.runs, seed).runtime()?;

    let mut bundle = Bundle::default();
    bundle.add(export::PD_VS_PULSE, export::pd_vs_pulse_csv(&mc.aggregate).runtime()?);
    bundle.add(export::REWARD_VS_PULSE, export::reward_vs_pulse_csv(&mc.aggregate).runtime()?);
    bundle.add(export::SCENE, export::scene_csv(&episode.scenario).runtime()?);
    bundle.add(export::QTABLES, export::qtables_csv(&mc.runs).runtime()?);
    let results = Results {
        steady_state: Some(mc.aggregate.steady_state()),
        aggregate: Some(mc.aggregate),
        sweep: None,
        runs: config.runs,
        master_seed: seed,
        config,
        meta: (!args.no_meta).then(|| meta(started, clock)),
    };
    bundle.add(export::RESULTS, results.to_json());
    ctx.finish(bundle, &args.out.out)
}

fn cmd_sweep(ctx: &Ctx, args: RunArgs, elements: Vec<Layout>, receivers: Vec<Layout>) -> Result<(), Failure> {
    let (started, clock) = (SystemTime::now(), Instant::now());
    let mut config = load(&args.config, args.seed, args.runs)?;
    let episode = config.episode().input()?;
    let spec = |l: &Layout| UpaSpec::new(l.0, l.1).input();
    let tris = elements.iter().map(spec).collect::<Result<Vec<_>, _>>()?;
    let rx = if receivers.is_empty() {
        vec![episode.radar.rx]
    } else {
        receivers.iter().map(spec).collect::<Result<Vec<_>, _>>()?
    };
    let seed = ctx.seed(None, config.seed);
    config.seed = Some(seed);
    ctx.note(format!("sweeping {} surface sizes x {} receiver sizes, {} runs each", tris.len(), rx.len(), config.runs));
    let points = sweep_layouts(&episode, &tris, &rx, config.runs, seed).runtime()?;

    let mut bundle = Bundle::default();
    bundle.add(export::PD_VS_ELEMENTS, export::pd_vs_elements_csv(&points).runtime()?);
    bundle.add(export::SCENE, export::scene_csv(&episode.scenario).runtime()?);
    let results = Results {
        aggregate: None,
        steady_state: None,
        sweep: Some(points),
        runs: config.runs,
        master_seed: seed,
        config,
        meta: (!args.no_meta).then(|| meta(started, clock)),
    };
    bundle.add(export::RESULTS, results.to_json());
    ctx.finish(bundle, &args.out.out)
}

fn cmd_calibrate(ctx: &Ctx, pfa: f64, trials: u64, nr: usize, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    tris_core::detector::threshold(pfa).input()?;
    if nr == 0 {
        return Err(Failure::Input(anyhow!("--nr must be positive")));
    }
    if trials == 0 {
        return Err(Failure::Input(anyhow!("--trials must be positive")));
    }
    let seed = ctx.seed(seed, None);
    let mut rng = RunSeed::new(seed, 0).stream(Purpose::Calibration);
    let cal = calibrate_false_alarm(pfa, trials, nr, &mut rng).runtime()?;
    let body = format!("{}\n{}\n", Calibration::CSV_HEADER, cal.csv_row());
    print!("{body}");
    let mut bundle = Bundle::default();
    bundle.add("calibration.csv", body);
    ctx.finish(bundle, out)
}

fn resolve_phases(spec: &str, config: &ExperimentConfig, seed: Option<u64>, ctx: &Ctx) -> anyhow::Result<PhaseConfig> {
    let grid = config.spatial_grid()?;
    let tris = config.radar(&grid)?.tris;
    let n = tris.len();
    if let Some(target) = spec.strip_prefix("aligned:") {
        let (nu_x, nu_y) = if target == "broadside" {
            (0.0, 0.0)
        } else {
            let (i, j) = target.split_once(',').ok_or_else(|| anyhow!("expected aligned:I,J, got `{spec}`"))?;
            let (i, j): (usize, usize) = (i.trim().parse()?, j.trim().parse()?);
            let m = grid.index(i, j).ok_or_else(|| anyhow!("bin ({i}, {j}) is outside the grid"))?;
            grid.frequencies(m).expect("valid bin")
        };
        return Ok(align_single_bin(&tris.w, nu_x, nu_y, &tris.spec));
    }
    if spec == "random" {
        let seed = ctx.seed(seed, config.seed);
        return Ok(PhaseConfig::random(n, &mut RunSeed::new(seed, 0).stream(Purpose::Phases)));
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading phases from {spec}"))?;
    let phases: Vec<f64> =
        serde_json::from_str(&text).with_context(|| format!("{spec}: expected a JSON array of phases"))?;
    if phases.len() != n {
        bail!("{spec}: {} phases for a {n}-element surface", phases.len());
    }
    if phases.iter().any(|p| !p.is_finite()) {
        bail!("{spec}: phases must be finite");
    }
    Ok(PhaseConfig::new(phases))
}

fn cmd_beampattern(ctx: &Ctx, config: &Path, phases: &str, seed: Option<u64>, out: &Path) -> Result<(), Failure> {
    let config = load(config, None, None)?;
    let grid = config.spatial_grid().input()?;
    let tris = config.radar(&grid).input()?.tris;
    let phase = resolve_phases(phases, &config, seed, ctx).input()?;
    let mut bundle = Bundle::default();
    bundle.add(export::BEAMPATTERN, export::beampattern_csv(&tris, &phase, &grid).runtime()?);
    ctx.finish(bundle, out)
}

fn cmd_geometry(ctx: &Ctx, config: &Path, out: &Path) -> Result<(), Failure> {
    let config = load(config, None, None)?;
    let grid = config.spatial_grid().input()?;
    let tris = config.radar(&grid).input()?.tris;
    let mut bundle = Bundle::default();
    bundle.add(export::GEOMETRY, export::geometry_csv(&tris).runtime()?);
    ctx.finish(bundle, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx { quiet: cli.quiet };
    let result = match cli.command {
        Command::Run(args) => cmd_run(&ctx, args),
        Command::Sweep { run, elements, receivers } => cmd_sweep(&ctx, run, elements, receivers),
        Command::CalibratePfa { pfa, trials, nr, seed, out } => cmd_calibrate(&ctx, pfa, trials, nr, seed, &out.out),
        Command::Beampattern { config, phases, seed, out } => cmd_beampattern(&ctx, &config, &phases, seed, &out.out),
        Command::DumpGeometry { config, out } => cmd_geometry(&ctx, &config, &out.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
