//! Command-line front end for the whole pipeline: collect datasets, train
//! the forward model and the cloning baseline, drive single episodes, run
//! the evaluation suite, and render metric reports.
//!
//! Every subcommand shares one run configuration. It starts from the
//! defaults, is optionally replaced by `--config <file>`, and each field
//! can then be overridden by a flag of the same name, so
//! `pml --speed 4.0 drive ...` and a config file edit are interchangeable.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pml::agent::{
    bc_train, make_preference, AifPolicy, BcNetSpec, BcPolicy, BcTrainConfig, ExpertPolicy,
    Preference,
};
use pml::data::{
    augment_flip, augment_flip_transitions, collect_expert_frames, collect_zigzag, load_frames,
    load_transitions, normalize_bins, save_frames, save_transitions, BinSpec, CapMode,
    LabeledFrame, ZigzagParams,
};
use pml::eval::{deviation_series, family_label, parse_metrics, render_report, run_suite, TrackSuite};
use pml::model::{train_forward_model, LearnedModel, LossKind, NetSpec, OracleModel, TrainConfig};
use pml::net::ParamStore;
use pml::sim::{
    default_max_steps, run_episode, track_by_name, write_trajectory_log, Policy, TrackFamily,
    TrackSpec, Vec2,
};
use pml::{ssim, GrayImage, RunConfig, SsimParams, SteeringAction};

#[derive(Parser)]
#[command(name = "pml", version, about = "Lane keeping by predictive action selection")]
struct Cli {
    #[command(flatten)]
    overrides: ConfigArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Run-configuration source plus one override flag per field.
#[derive(Args, Debug)]
struct ConfigArgs {
    /// TOML run-configuration file; the flags below override its fields
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Square camera frame side length in pixels
    #[arg(long, global = true, value_name = "PX")]
    image_size: Option<usize>,
    /// Comma-separated steering values in [-1, 1] replacing the whole grid
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_hyphen_values = true,
        value_name = "V,V,..."
    )]
    steering_grid: Option<Vec<f64>>,
    /// Steps ahead the agent imagines each candidate action
    #[arg(long, global = true, value_name = "N")]
    prediction_horizon: Option<usize>,
    /// Simulation step in seconds
    #[arg(long, global = true, value_name = "S")]
    sim_dt: Option<f64>,
    /// Constant forward speed in m/s
    #[arg(long, global = true, value_name = "MPS")]
    speed: Option<f64>,
    /// Distance between axles in meters
    #[arg(long, global = true, value_name = "M")]
    wheelbase: Option<f64>,
    /// Wheel angle in radians that steering = 1 maps to
    #[arg(long, global = true, value_name = "RAD")]
    max_wheel_angle: Option<f64>,
    /// Camera height above the road in meters
    #[arg(long, global = true, value_name = "M")]
    camera_height: Option<f64>,
    /// Camera downward pitch in radians
    #[arg(long, global = true, value_name = "RAD")]
    camera_pitch: Option<f64>,
    /// Horizontal field of view in radians
    #[arg(long, global = true, value_name = "RAD")]
    camera_fov: Option<f64>,
    /// Far limit of the ground patch the camera sees, in meters
    #[arg(long, global = true, value_name = "M")]
    camera_max_range: Option<f64>,
    /// Distance to the goal waypoint that counts as arrival, in meters
    #[arg(long, global = true, value_name = "M")]
    capture_radius: Option<f64>,
    /// Base seed for every random stream
    #[arg(long, global = true, value_name = "SEED")]
    rng_seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.image_size {
            cfg.image_size = v;
        }
        if let Some(vals) = &self.steering_grid {
            cfg.steering_grid = vals
                .iter()
                .map(|&v| SteeringAction::new(v))
                .collect::<pml::Result<_>>()?;
        }
        if let Some(v) = self.prediction_horizon {
            cfg.prediction_horizon = v;
        }
        if let Some(v) = self.sim_dt {
            cfg.sim_dt = v;
        }
        if let Some(v) = self.speed {
            cfg.speed = v;
        }
        if let Some(v) = self.wheelbase {
            cfg.wheelbase = v;
        }
        if let Some(v) = self.max_wheel_angle {
            cfg.max_wheel_angle = v;
        }
        if let Some(v) = self.camera_height {
            cfg.camera_height = v;
        }
        if let Some(v) = self.camera_pitch {
            cfg.camera_pitch = v;
        }
        if let Some(v) = self.camera_fov {
            cfg.camera_fov = v;
        }
        if let Some(v) = self.camera_max_range {
            cfg.camera_max_range = v;
        }
        if let Some(v) = self.capture_radius {
            cfg.capture_radius = v;
        }
        if let Some(v) = self.rng_seed {
            cfg.rng_seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Score two stored frames against each other
    Ssim(SsimCmd),
    /// Record a dataset by driving the simulator
    Collect(CollectCmd),
    /// Run one closed-loop episode and report how it went
    Drive(DriveCmd),
    /// Run an agent over a track suite and write a metrics file
    Eval(EvalCmd),
    /// Merge metrics files from a directory into one comparison table
    Report(ReportCmd),
    /// Fit the forward model on recorded transitions
    TrainWorld(TrainWorldCmd),
    /// Fit the behavioral-cloning baseline on expert frames
    TrainBc(TrainBcCmd),
    /// Render the goal frame an agent steers toward
    MakePref(MakePrefCmd),
    /// Write the default benchmark track list as a suite file
    MakeSuite(MakeSuiteCmd),
    /// Print the resolved run configuration as TOML
    Config(ConfigCmd),
}

#[derive(Args)]
struct SsimCmd {
    /// Frame corpus holding the first image
    a: PathBuf,
    /// Frame corpus holding the second image
    b: PathBuf,
    /// Frame index inside the first corpus
    #[arg(long, default_value_t = 0)]
    index_a: usize,
    /// Frame index inside the second corpus
    #[arg(long, default_value_t = 0)]
    index_b: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum CollectMode {
    /// Weaving runs for forward-model transitions
    Zigzag,
    /// Scripted on-lane driving for labeled frames
    Expert,
}

#[derive(Args)]
struct CollectCmd {
    #[arg(long, value_enum)]
    mode: CollectMode,
    /// Track name, e.g. one-turn-wide
    #[arg(long)]
    track: String,
    /// Output corpus file
    #[arg(long)]
    out: PathBuf,
    /// Transitions (zigzag) or labeled frames (expert) to record
    #[arg(long)]
    steps: usize,
    /// Collection seed; defaults to the configured rng_seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum DriveAgent {
    /// Action sweep over the learned forward model
    Aif,
    /// Action sweep over the exact simulator model
    AifOracle,
    /// Behavioral-cloning network
    Bc,
    /// Scripted lookahead controller
    Expert,
}

#[derive(Args)]
struct DriveCmd {
    #[arg(long, value_enum)]
    agent: DriveAgent,
    /// Parameter store for aif / bc agents
    #[arg(long)]
    model: Option<PathBuf>,
    /// Preference frame; synthesized from the track when omitted
    #[arg(long)]
    pref: Option<PathBuf>,
    /// Track name, e.g. straight-narrow
    #[arg(long)]
    track: String,
    /// Write the trajectory log here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Step budget; defaults to an on-pace bound for the track
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum EvalAgent {
    AifOracle,
    AifLearned,
    Bc,
    Expert,
}

impl EvalAgent {
    fn label(self) -> &'static str {
        match self {
            EvalAgent::AifOracle => "aif-oracle",
            EvalAgent::AifLearned => "aif-learned",
            EvalAgent::Bc => "bc",
            EvalAgent::Expert => "expert",
        }
    }
}

#[derive(Args)]
struct EvalCmd {
    #[arg(long, value_enum)]
    agent: EvalAgent,
    /// Suite TOML; defaults to the six benchmark tracks
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Episodes per track, cycling through the perturbed starts
    #[arg(long, default_value_t = 4)]
    runs: usize,
    /// Directory for the metrics file
    #[arg(long)]
    out: PathBuf,
    /// Parameter store for aif-learned / bc agents
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct ReportCmd {
    /// Directory holding metrics-*.tsv files
    dir: PathBuf,
}

#[derive(Args)]
struct TrainWorldCmd {
    /// Transition corpus recorded by `collect --mode zigzag`
    #[arg(long)]
    data: PathBuf,
    /// Where to save the trained parameter store
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-epoch metrics as TSV
    #[arg(long)]
    report: Option<PathBuf>,
    /// Network shape as JSON; defaults to a shape sized for the data
    #[arg(long)]
    net_spec: Option<PathBuf>,
    /// Mirror every transition before training
    #[arg(long)]
    augment_flip: bool,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Reconstruction loss: mse or bce
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    val_fraction: Option<f64>,
}

#[derive(Args)]
struct TrainBcCmd {
    /// Labeled-frame corpus recorded by `collect --mode expert`
    #[arg(long)]
    data: PathBuf,
    /// Where to save the trained parameter store
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-epoch metrics as TSV
    #[arg(long)]
    report: Option<PathBuf>,
    /// Network shape as JSON; defaults to a shape sized for the data
    #[arg(long)]
    net_spec: Option<PathBuf>,
    /// Mirror every frame (negating its action) before training
    #[arg(long)]
    augment_flip: bool,
    /// Equalize steering-bin counts before training
    #[arg(long)]
    normalize_bins: bool,
    /// Steering bins used by --normalize-bins
    #[arg(long, default_value_t = 21)]
    bins: usize,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    val_fraction: Option<f64>,
}

#[derive(Args)]
struct MakePrefCmd {
    /// Track whose lane geometry the goal frame encodes
    #[arg(long)]
    track: String,
    /// Lane index within the family
    #[arg(long, default_value_t = 0)]
    lane: usize,
    /// Output corpus file (a single frame)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MakeSuiteCmd {
    /// Output suite TOML
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigCmd {
    /// Write the TOML here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.overrides.resolve()?;
    match cli.cmd {
        Cmd::Ssim(c) => cmd_ssim(&c),
        Cmd::Collect(c) => cmd_collect(&c, &cfg),
        Cmd::Drive(c) => cmd_drive(&c, &cfg),
        Cmd::Eval(c) => cmd_eval(&c, &cfg),
        Cmd::Report(c) => cmd_report(&c.dir),
        Cmd::TrainWorld(c) => cmd_train_world(&c),
        Cmd::TrainBc(c) => cmd_train_bc(&c),
        Cmd::MakePref(c) => cmd_make_pref(&c, &cfg),
        Cmd::MakeSuite(c) => cmd_make_suite(&c.out),
        Cmd::Config(c) => cmd_config(&c, &cfg),
    }
}

fn load_single_frame(path: &Path, index: usize) -> Result<GrayImage> {
    let frames = load_frames(path).with_context(|| format!("reading {}", path.display()))?;
    let n = frames.len();
    frames
        .into_iter()
        .nth(index)
        .map(|f| f.obs)
        .ok_or_else(|| anyhow!("{} holds {n} frames, index {index} is out of range", path.display()))
}

fn cmd_ssim(c: &SsimCmd) -> Result<()> {
    let a = load_single_frame(&c.a, c.index_a)?;
    let b = load_single_frame(&c.b, c.index_b)?;
    ensure!(
        a.same_dims(&b),
        "image sizes differ: {}x{} vs {}x{}",
        a.width(),
        a.height(),
        b.width(),
        b.height()
    );
    let params = SsimParams::default();
    params.validate_for(a.width().min(a.height()))?;
    println!("{}", ssim(&a, &b, &params)?);
    Ok(())
}

fn cmd_collect(c: &CollectCmd, cfg: &RunConfig) -> Result<()> {
    let track = track_by_name(&c.track)?;
    let seed = c.seed.unwrap_or(cfg.rng_seed);
    match c.mode {
        CollectMode::Zigzag => {
            let (samples, resets) =
                collect_zigzag(&track, cfg, c.steps, &ZigzagParams::default(), seed)?;
            save_transitions(&c.out, &samples)?;
            println!(
                "{} transitions from {} -> {} ({resets} recenter resets)",
                samples.len(),
                track.name,
                c.out.display()
            );
        }
        CollectMode::Expert => {
            let (frames, episodes) = collect_expert_frames(&track, cfg, c.steps, seed)?;
            save_frames(&c.out, &frames)?;
            println!(
                "{} labeled frames from {} -> {} ({episodes} expert episodes)",
                frames.len(),
                track.name,
                c.out.display()
            );
        }
    }
    Ok(())
}

/// Goal frame for a track when no preference file is given: rendered from
/// the track's own lane geometry.
fn synth_preference(track: &TrackSpec, cfg: &RunConfig) -> pml::Result<Preference> {
    let family = TrackFamily {
        name: family_label(track),
        lane_width: track.lane_width,
        lane_count: 1,
    };
    make_preference(&family, 0, cfg)
}

fn load_preference(path: &Path) -> Result<Preference> {
    let frames = load_frames(path).with_context(|| format!("reading preference {}", path.display()))?;
    ensure!(
        frames.len() == 1,
        "preference file {} holds {} frames, expected exactly one",
        path.display(),
        frames.len()
    );
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("preference")
        .to_string();
    let image = frames.into_iter().next().expect("length checked").obs;
    Ok(Preference { image, label })
}

fn preference_for(track: &TrackSpec, pref: Option<&Path>, cfg: &RunConfig) -> Result<Preference> {
    match pref {
        Some(p) => load_preference(p),
        None => Ok(synth_preference(track, cfg)?),
    }
}

fn cmd_drive(c: &DriveCmd, cfg: &RunConfig) -> Result<()> {
    let track = track_by_name(&c.track)?;
    let mut policy: Box<dyn Policy> = match c.agent {
        DriveAgent::Aif => {
            let path = c
                .model
                .as_deref()
                .ok_or_else(|| anyhow!("--agent aif needs --model <params>"))?;
            let model = LearnedModel::load(path)
                .with_context(|| format!("loading model {}", path.display()))?;
            let pref = preference_for(&track, c.pref.as_deref(), cfg)?;
            Box::new(AifPolicy::new(model, pref, cfg)?)
        }
        DriveAgent::AifOracle => {
            let model = OracleModel::new(track.clone(), cfg)?;
            let pref = preference_for(&track, c.pref.as_deref(), cfg)?;
            Box::new(AifPolicy::new(model, pref, cfg)?)
        }
        DriveAgent::Bc => {
            let path = c
                .model
                .as_deref()
                .ok_or_else(|| anyhow!("--agent bc needs --model <params>"))?;
            Box::new(BcPolicy::load(path).with_context(|| format!("loading model {}", path.display()))?)
        }
        DriveAgent::Expert => Box::new(ExpertPolicy::new(track.clone(), cfg)),
    };
    let max_steps = c.max_steps.unwrap_or_else(|| default_max_steps(&track, cfg));
    let (episode, log) = run_episode(&track, policy.as_mut(), cfg, max_steps)?;
    let positions: Vec<Vec2> = log.iter().map(|r| Vec2::new(r.x, r.y)).collect();
    let avg_dev = if positions.is_empty() {
        f64::NAN
    } else {
        deviation_series(&positions, &track.waypoints)?.iter().sum::<f64>() / positions.len() as f64
    };
    println!(
        "{}: {} in {} steps, avg deviation {:.4} m",
        episode.track_name,
        episode.status.label(),
        episode.elapsed_steps,
        avg_dev
    );
    if let Some(out) = &c.out {
        write_trajectory_log(out, &log)?;
        println!("trajectory log -> {}", out.display());
    }
    Ok(())
}

fn cmd_eval(c: &EvalCmd, cfg: &RunConfig) -> Result<()> {
    let suite = match &c.suite {
        Some(p) => TrackSuite::load(p).with_context(|| format!("reading suite {}", p.display()))?,
        None => TrackSuite::default(),
    };
    let tracks = suite.resolve()?;
    let label = c.agent.label();
    let need_model = || {
        c.model
            .as_deref()
            .ok_or_else(|| anyhow!("--agent {label} needs --model <params>"))
    };
    let result = match c.agent {
        EvalAgent::AifOracle => run_suite(
            |t| {
                let model = OracleModel::new(t.clone(), cfg)?;
                let pref = synth_preference(t, cfg)?;
                Ok(Box::new(AifPolicy::new(model, pref, cfg)?) as Box<dyn Policy>)
            },
            label,
            &tracks,
            c.runs,
            cfg,
        )?,
        EvalAgent::AifLearned => {
            let path = need_model()?;
            let store = ParamStore::load(path)
                .with_context(|| format!("loading model {}", path.display()))?;
            run_suite(
                |t| {
                    let model = LearnedModel::from_store(&store)?;
                    let pref = synth_preference(t, cfg)?;
                    Ok(Box::new(AifPolicy::new(model, pref, cfg)?) as Box<dyn Policy>)
                },
                label,
                &tracks,
                c.runs,
                cfg,
            )?
        }
        EvalAgent::Bc => {
            let path = need_model()?;
            let store = ParamStore::load(path)
                .with_context(|| format!("loading model {}", path.display()))?;
            run_suite(
                |_| Ok(Box::new(BcPolicy::from_store(&store)?) as Box<dyn Policy>),
                label,
                &tracks,
                c.runs,
                cfg,
            )?
        }
        EvalAgent::Expert => run_suite(
            |t| Ok(Box::new(ExpertPolicy::new(t.clone(), cfg)) as Box<dyn Policy>),
            label,
            &tracks,
            c.runs,
            cfg,
        )?,
    };
    fs::create_dir_all(&c.out)
        .with_context(|| format!("creating output directory {}", c.out.display()))?;
    let path = c.out.join(format!("metrics-{label}.tsv"));
    let tsv = result.to_tsv();
    fs::write(&path, &tsv).with_context(|| format!("writing {}", path.display()))?;
    println!("{}", render_report(&parse_metrics(&tsv)?)?);
    println!("metrics -> {}", path.display());
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("tsv"))
        .collect();
    files.sort();
    ensure!(!files.is_empty(), "no .tsv metrics files under {}", dir.display());
    let mut rows = Vec::new();
    for f in &files {
        let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        rows.extend(parse_metrics(&text).map_err(|e| anyhow!("{}: {e}", f.display()))?);
    }
    println!("{}", render_report(&rows)?);
    Ok(())
}

fn parse_loss(s: &str) -> Result<LossKind> {
    match s {
        "mse" => Ok(LossKind::Mse),
        "bce" => Ok(LossKind::Bce),
        other => bail!("unknown loss {other:?}, expected mse or bce"),
    }
}

fn cmd_train_world(c: &TrainWorldCmd) -> Result<()> {
    let mut data =
        load_transitions(&c.data).with_context(|| format!("reading {}", c.data.display()))?;
    ensure!(!data.is_empty(), "no transitions in {}", c.data.display());
    if c.augment_flip {
        data = augment_flip_transitions(&data);
        println!("flip augmentation doubled the set to {} transitions", data.len());
    }
    let spec = match &c.net_spec {
        Some(p) => NetSpec::from_json(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?,
        None => NetSpec {
            input_size: data[0].obs.width(),
            ..NetSpec::default()
        },
    };
    let mut tc = TrainConfig::default();
    if let Some(v) = c.learning_rate {
        tc.learning_rate = v;
    }
    if let Some(v) = c.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = c.epochs {
        tc.epochs = v;
    }
    if let Some(s) = &c.loss {
        tc.loss = parse_loss(s)?;
    }
    if let Some(v) = c.seed {
        tc.seed = v;
    }
    if let Some(v) = c.val_fraction {
        tc.val_fraction = v;
    }
    let (store, report) = train_forward_model(&data, &spec, &tc)?;
    for e in &report.epochs {
        println!(
            "epoch {:>3}  train {:.6}  val {:.6}  val ssim {:.4}",
            e.epoch, e.train_loss, e.val_loss, e.val_ssim
        );
    }
    store.save(&c.out)?;
    println!("params -> {} (checksum {:016x})", c.out.display(), store.checksum());
    if let Some(rp) = &c.report {
        fs::write(rp, report.to_tsv()).with_context(|| format!("writing {}", rp.display()))?;
        println!("report -> {}", rp.display());
    }
    Ok(())
}

fn cmd_train_bc(c: &TrainBcCmd) -> Result<()> {
    let mut frames = load_frames(&c.data).with_context(|| format!("reading {}", c.data.display()))?;
    ensure!(!frames.is_empty(), "no frames in {}", c.data.display());
    if c.augment_flip {
        frames = augment_flip(&frames);
        println!("flip augmentation doubled the set to {} frames", frames.len());
    }
    let mut tc = BcTrainConfig::default();
    if let Some(v) = c.learning_rate {
        tc.learning_rate = v;
    }
    if let Some(v) = c.batch_size {
        tc.batch_size = v;
    }
    if let Some(v) = c.epochs {
        tc.epochs = v;
    }
    if let Some(v) = c.seed {
        tc.seed = v;
    }
    if let Some(v) = c.val_fraction {
        tc.val_fraction = v;
    }
    if c.normalize_bins {
        let spec = BinSpec {
            bin_count: c.bins,
            cap_mode: CapMode::MinCount,
        };
        let (kept, rep) = normalize_bins(&frames, &spec, tc.seed)?;
        if rep.degenerate {
            eprintln!("warning: every frame landed in one steering bin; corpus left unchanged");
        }
        println!(
            "bin normalization: {} -> {} frames (cap {})",
            rep.before.iter().sum::<usize>(),
            rep.after.iter().sum::<usize>(),
            rep.cap
        );
        frames = kept;
    }
    let spec = match &c.net_spec {
        Some(p) => BcNetSpec::from_json(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?,
        None => BcNetSpec {
            input_size: frames[0].obs.width(),
            ..BcNetSpec::default()
        },
    };
    let (store, report) = bc_train(&frames, &spec, &tc)?;
    for e in &report.epochs {
        println!(
            "epoch {:>3}  train {:.6}  val {:.6}  val mae {:.4}",
            e.epoch, e.train_loss, e.val_loss, e.val_mae
        );
    }
    store.save(&c.out)?;
    println!("params -> {} (checksum {:016x})", c.out.display(), store.checksum());
    if let Some(rp) = &c.report {
        fs::write(rp, report.to_tsv()).with_context(|| format!("writing {}", rp.display()))?;
        println!("report -> {}", rp.display());
    }
    Ok(())
}

fn cmd_make_pref(c: &MakePrefCmd, cfg: &RunConfig) -> Result<()> {
    let track = track_by_name(&c.track)?;
    let family = TrackFamily {
        name: family_label(&track),
        lane_width: track.lane_width,
        lane_count: 1,
    };
    let pref = make_preference(&family, c.lane, cfg)?;
    let (w, h, label) = (pref.image.width(), pref.image.height(), pref.label.clone());
    save_frames(&c.out, &[LabeledFrame {
        obs: pref.image,
        action: SteeringAction::new(0.0)?,
    }])?;
    println!("preference {label:?} ({w}x{h}) -> {}", c.out.display());
    Ok(())
}

fn cmd_make_suite(out: &Path) -> Result<()> {
    let suite = TrackSuite::default();
    fs::write(out, suite.to_toml_string()?).with_context(|| format!("writing {}", out.display()))?;
    println!("suite with {} tracks -> {}", suite.tracks.len(), out.display());
    Ok(())
}

fn cmd_config(c: &ConfigCmd, cfg: &RunConfig) -> Result<()> {
    let text = cfg.to_toml_string()?;
    match &c.out {
        Some(p) => {
            fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
            println!("config -> {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
