//! Command-line front end. `run` parses arguments, merges them over the
//! TOML manifest and dispatches to a subcommand.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::blockage::{BlockageOptions, BoxMode};
use crate::error::{Error, Result};
use crate::eval::{run_experiment_recording, DetectionSource, ExperimentConfig, ForecastSource, Report};
use crate::lidar::{build_global_map, write_cloud_bin, write_ply, Room, Scanner, SensorConfig};
use crate::perception::{write_detections_csv, Detector, PerceptionConfig};
use crate::scene::{generate_scene, Scene, SceneConfig};
use crate::seed::SeedSplitter;
use crate::tracking::{track_log_rows, write_track_log, Tracker, TrackerConfig, TRACK_LOG_HEADER};
use crate::trajpred::{loss_csv, train, ForecastMode, LstmModel, TrainConfig};

/// Environment variable holding the log filter (e.g. `debug`).
pub const LOG_ENV: &str = "LIDAR_BLOCKAGE_LOG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub scene_dir: PathBuf,
    pub cloud_dir: PathBuf,
    pub model: PathBuf,
    pub loss_log: PathBuf,
    pub report_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            scene_dir: "out/scenes".into(),
            cloud_dir: "out/clouds".into(),
            model: "out/model.lbnt".into(),
            loss_log: "out/losses.csv".into(),
            report_dir: "out/report".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dataset {
    pub n_scenes: usize,
    /// Scenes with an index below this are the training pool; the rest are
    /// evaluated. 0 uses every scene for both.
    pub train_scenes: usize,
}

impl Default for Dataset {
    fn default() -> Self {
        Dataset {
            n_scenes: 120,
            train_scenes: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoxModeChoice {
    Aabb,
    Obb,
    Both,
}

impl BoxModeChoice {
    fn modes(self) -> Vec<BoxMode> {
        match self {
            BoxModeChoice::Aabb => vec![BoxMode::Aabb],
            BoxModeChoice::Obb => vec![BoxMode::Obb],
            BoxModeChoice::Both => BoxMode::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    Mean,
    Sample,
}

impl From<ModeChoice> for ForecastMode {
    fn from(m: ModeChoice) -> Self {
        match m {
            ModeChoice::Mean => ForecastMode::Mean,
            ModeChoice::Sample => ForecastMode::Sample,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub windows: Vec<usize>,
    pub box_mode: BoxModeChoice,
    pub forecast_mode: ModeChoice,
    /// Ground-truth detections and ground-truth future positions.
    pub oracle: bool,
    pub anchor_stride: usize,
    pub match_radius: f64,
    pub prune: bool,
    pub prune_keeps_farther: bool,
    /// Also write per-anchor predictions to `predictions.csv`.
    pub record_predictions: bool,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            windows: (1..=9).collect(),
            box_mode: BoxModeChoice::Both,
            forecast_mode: ModeChoice::Mean,
            oracle: false,
            anchor_stride: 1,
            match_radius: 0.5,
            prune: true,
            prune_keeps_farther: false,
            record_predictions: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub write_clouds: bool,
    /// 0 writes every frame.
    pub max_frames: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            write_clouds: false,
            max_frames: 0,
        }
    }
}

/// Experiment manifest. Every field has a default; a TOML file only needs
/// the values it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Scene-level worker threads; 0 means all available cores.
    pub workers: usize,
    pub paths: Paths,
    pub dataset: Dataset,
    pub scene: SceneConfig,
    pub room: Room,
    pub sensors: Vec<SensorConfig>,
    pub perception: PerceptionConfig,
    pub tracker: TrackerConfig,
    pub train: TrainConfig,
    pub simulate: SimulateSection,
    pub evaluate: EvaluateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let room = Room::default();
        RunConfig {
            seed: 0,
            workers: 0,
            paths: Paths::default(),
            dataset: Dataset::default(),
            scene: SceneConfig {
                n_humans: 5,
                ..SceneConfig::default()
            },
            sensors: SensorConfig::default_pair(&room),
            room,
            perception: PerceptionConfig::default(),
            tracker: TrackerConfig::default(),
            train: TrainConfig {
                window_stride: 4,
                ..TrainConfig::default()
            },
            simulate: SimulateSection::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::format("config", e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.perception.validate()?;
        self.tracker.validate()?;
        self.train.validate()?;
        for s in &self.sensors {
            s.validate()?;
        }
        if self.sensors.is_empty() {
            return Err(Error::invalid("at least one sensor is required"));
        }
        self.experiment().validate()
    }

    fn seeds(&self) -> SeedSplitter {
        SeedSplitter::new(self.seed)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seeds().derive("train", 0),
            ..self.train.clone()
        }
    }

    pub fn experiment(&self) -> ExperimentConfig {
        let e = &self.evaluate;
        ExperimentConfig {
            windows: e.windows.clone(),
            obs_len: self.train.obs_len,
            horizon: 9,
            match_radius: e.match_radius,
            anchor_stride: e.anchor_stride,
            detection: if e.oracle {
                DetectionSource::GroundTruth { noise_sigma: 0.0 }
            } else {
                DetectionSource::Lidar
            },
            forecast: if e.oracle {
                ForecastSource::GroundTruth
            } else {
                ForecastSource::Model
            },
            forecast_mode: e.forecast_mode.into(),
            seed: self.seeds().derive("evaluate", 0),
            room: self.room,
            sensors: self.sensors.clone(),
            perception: self.perception.clone(),
            tracker: self.tracker.clone(),
            blockage: BlockageOptions {
                prune: e.prune,
                prune_keeps_farther: e.prune_keeps_farther,
            },
            box_modes: e.box_mode.modes(),
            workers: self.workers,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "lidar-blockage",
    version,
    about = "Simulate, train and evaluate LiDAR-based prediction of human blockages on indoor radio links",
    after_help = "Defaults come from the built-in manifest (print it with --print-config); \
                  a --config file overrides them and command-line flags override both.\n\
                  Log verbosity: LIDAR_BLOCKAGE_LOG=error|warn|info|debug|trace (default info).\n\
                  Exit codes: 0 success, 1 usage or configuration error, 2 data or I/O error."
)]
pub struct Cli {
    /// TOML manifest.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed fanned out to every stage [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for scene-level parallelism; 0 = all cores [default: 0].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate pedestrian scenes.
    GenScenes(GenScenesArgs),
    /// Scan scenes with the simulated LiDARs; write detections, tracks and optionally clouds.
    Simulate(SimulateArgs),
    /// Train the trajectory forecaster on the training scenes.
    Train(TrainArgs),
    /// Run the full pipeline on the evaluation scenes and write the report.
    Evaluate(EvaluateArgs),
    /// Print a written report as tables.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenScenesArgs {
    /// Number of scenes [default: 120].
    #[arg(long)]
    pub n: Option<usize>,
    /// People per scene [default: 5].
    #[arg(long)]
    pub humans: Option<usize>,
    /// Frames per scene [default: 288].
    #[arg(long)]
    pub duration: Option<usize>,
    /// Output directory [default: out/scenes].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scene directory [default: out/scenes].
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    /// Output directory [default: out/clouds].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Only this scene index.
    #[arg(long)]
    pub scene: Option<usize>,
    /// Write each frame's registered cloud as binary.
    #[arg(long)]
    pub write_clouds: bool,
    /// Write clouds as PLY instead of binary.
    #[arg(long)]
    pub ply: bool,
    /// Stop after this many frames per scene; 0 = all [default: 0].
    #[arg(long)]
    pub max_frames: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Scene directory [default: out/scenes].
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    /// Output model file [default: out/model.lbnt].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Loss log [default: out/losses.csv].
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
    /// Scenes below this index are the training pool; 0 = all [default: 20].
    #[arg(long)]
    pub train_scenes: Option<usize>,
    /// [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Frames between training window starts [default: 4].
    #[arg(long)]
    pub stride: Option<usize>,
    /// Embedding width [default: 16].
    #[arg(long)]
    pub d_emb: Option<usize>,
    /// LSTM hidden width [default: 64].
    #[arg(long)]
    pub d_h: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Scene directory [default: out/scenes].
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    /// Model file [default: out/model.lbnt].
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Report directory [default: out/report].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Scenes below this index are skipped as training data; 0 = evaluate all [default: 20].
    #[arg(long)]
    pub train_scenes: Option<usize>,
    /// Window sizes in frames, comma separated [default: 1,2,...,9].
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<usize>>,
    /// [default: both]
    #[arg(long, value_enum)]
    pub box_mode: Option<BoxModeChoice>,
    /// [default: mean]
    #[arg(long, value_enum)]
    pub forecast_mode: Option<ModeChoice>,
    /// Substitute ground-truth detections and future positions.
    #[arg(long)]
    pub oracle: bool,
    /// Score every n-th frame [default: 1].
    #[arg(long)]
    pub anchor_stride: Option<usize>,
    /// Disable pruning (exhaustive box tests).
    #[arg(long)]
    pub no_prune: bool,
    /// Also write predictions.csv with one row per (anchor, window, person).
    #[arg(long)]
    pub predictions: bool,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Report directory [default: out/report].
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// Loads the manifest and applies flags. Flags win.
pub fn resolve_config(cli: &Cli) -> std::result::Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(Error::io(path, e)))?;
            RunConfig::from_toml(&text).map_err(usage)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    match &cli.command {
        Command::GenScenes(a) => {
            set(&mut cfg.dataset.n_scenes, a.n);
            set(&mut cfg.scene.n_humans, a.humans);
            set(&mut cfg.scene.duration, a.duration);
            set(&mut cfg.paths.scene_dir, a.out.clone());
            if cfg.dataset.n_scenes == 0 {
                return Err(CliError::Usage("--n must be at least 1".into()));
            }
        }
        Command::Simulate(a) => {
            set(&mut cfg.paths.scene_dir, a.scenes.clone());
            set(&mut cfg.paths.cloud_dir, a.out.clone());
            set(&mut cfg.simulate.max_frames, a.max_frames);
            cfg.simulate.write_clouds |= a.write_clouds;
        }
        Command::Train(a) => {
            set(&mut cfg.paths.scene_dir, a.scenes.clone());
            set(&mut cfg.paths.model, a.model.clone());
            set(&mut cfg.paths.loss_log, a.loss_log.clone());
            set(&mut cfg.dataset.train_scenes, a.train_scenes);
            set(&mut cfg.train.epochs, a.epochs);
            set(&mut cfg.train.window_stride, a.stride);
            set(&mut cfg.train.d_emb, a.d_emb);
            set(&mut cfg.train.d_h, a.d_h);
        }
        Command::Evaluate(a) => {
            set(&mut cfg.paths.scene_dir, a.scenes.clone());
            set(&mut cfg.paths.model, a.model.clone());
            set(&mut cfg.paths.report_dir, a.report.clone());
            set(&mut cfg.dataset.train_scenes, a.train_scenes);
            set(&mut cfg.evaluate.windows, a.window.clone());
            set(&mut cfg.evaluate.box_mode, a.box_mode);
            set(&mut cfg.evaluate.forecast_mode, a.forecast_mode);
            set(&mut cfg.evaluate.anchor_stride, a.anchor_stride);
            cfg.evaluate.oracle |= a.oracle;
            cfg.evaluate.prune &= !a.no_prune;
            cfg.evaluate.record_predictions |= a.predictions;
        }
        Command::Report(a) => set(&mut cfg.paths.report_dir, a.report.clone()),
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn set<T>(dst: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *dst = v;
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = resolve_config(&cli).and_then(|cfg| {
        if cli.print_config {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
        dispatch(&cli.command, &cfg)
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> std::result::Result<(), CliError> {
    match cmd {
        Command::GenScenes(_) => {
            cmd_gen_scenes(cfg)?;
        }
        Command::Simulate(a) => cmd_simulate(cfg, a.scene, a.ply)?,
        Command::Train(_) => {
            cmd_train(cfg)?;
        }
        Command::Evaluate(_) => {
            cmd_evaluate(cfg)?;
        }
        Command::Report(_) => print!("{}", cmd_report(cfg)?),
    }
    Ok(())
}

pub fn scene_file_name(i: usize) -> String {
    format!("scene_{i:04}.json")
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_gen_scenes(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    create_dir(&cfg.paths.scene_dir)?;
    let seeds = cfg.seeds();
    let mut written = Vec::with_capacity(cfg.dataset.n_scenes);
    for i in 0..cfg.dataset.n_scenes {
        let sc = SceneConfig {
            rng_seed: seeds.derive("scene", i as u64),
            ..cfg.scene.clone()
        };
        let scene = generate_scene(&sc)?;
        let path = cfg.paths.scene_dir.join(scene_file_name(i));
        scene.save(&path)?;
        written.push(path);
    }
    log::info!("wrote {} scenes to {}", written.len(), cfg.paths.scene_dir.display());
    Ok(written)
}

/// Scene files in index order.
pub fn load_scenes(dir: &Path) -> Result<Vec<Scene>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("scene_") && n.ends_with(".json"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(format!(
            "no scene_*.json files in {} (run `lidar-blockage gen-scenes` first)",
            dir.display()
        )));
    }
    paths.iter().map(|p| Scene::load(p)).collect()
}

fn split_pool(scenes: Vec<Scene>, train_scenes: usize, want_train: bool) -> Result<Vec<Scene>> {
    if train_scenes == 0 {
        return Ok(scenes);
    }
    if scenes.len() <= train_scenes {
        return Err(Error::invalid(format!(
            "{} scenes found but the first {train_scenes} are reserved for training",
            scenes.len()
        )));
    }
    let mut scenes = scenes;
    let rest = scenes.split_off(train_scenes);
    Ok(if want_train { scenes } else { rest })
}

pub fn cmd_simulate(cfg: &RunConfig, only: Option<usize>, ply: bool) -> Result<()> {
    let scenes = load_scenes(&cfg.paths.scene_dir)?;
    create_dir(&cfg.paths.cloud_dir)?;
    let seeds = cfg.seeds();
    let map = build_global_map(&cfg.room, &cfg.sensors, seeds.derive("global-map", 0))?;
    let map_path = cfg.paths.cloud_dir.join("global_map.bin");
    write_cloud_bin(&map_path, &map)?;
    let scanner = Scanner::new(&cfg.sensors, &cfg.room)?;
    let detector = Detector::new(&map, cfg.perception.clone())?;
    let indices: Vec<usize> = match only {
        Some(i) if i >= scenes.len() => {
            return Err(Error::invalid(format!("scene {i} not found ({} scenes)", scenes.len())))
        }
        Some(i) => vec![i],
        None => (0..scenes.len()).collect(),
    };
    for i in indices {
        let scene = &scenes[i];
        let dir = cfg.paths.cloud_dir.join(format!("scene_{i:04}"));
        create_dir(&dir)?;
        let scan_seeds = SeedSplitter::new(seeds.derive("scan", i as u64));
        let mut tracker = Tracker::new(cfg.tracker.clone())?;
        let mut detections = Vec::new();
        let mut log = format!("{TRACK_LOG_HEADER}\n");
        let n = match cfg.simulate.max_frames {
            0 => scene.n_frames(),
            m => m.min(scene.n_frames()),
        };
        for t in 0..n {
            let cloud = scanner.scan(&scene.cylinders(t), t, &scan_seeds);
            if cfg.simulate.write_clouds {
                if ply {
                    write_ply(&dir.join(format!("frame_{t:05}.ply")), &cloud)?;
                } else {
                    write_cloud_bin(&dir.join(crate::lidar::frame_file_name(t)), &cloud)?;
                }
            }
            let dets = detector.detect(&cloud);
            let confirmed = tracker.track_frame(&dets, scene.config.dt())?;
            track_log_rows(t, &confirmed, &mut log);
            detections.push((t, dets));
        }
        write_detections_csv(&dir.join("detections.csv"), &detections)?;
        write_track_log(&dir.join("tracks.csv"), &log)?;
        log::info!("scene {i}: {n} frames simulated");
    }
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig) -> Result<crate::trajpred::TrainOutcome> {
    let scenes = split_pool(load_scenes(&cfg.paths.scene_dir)?, cfg.dataset.train_scenes, true)?;
    let trajectories: Vec<_> = scenes
        .iter()
        .flat_map(|s| (0..s.n_humans()).map(move |p| s.trajectory(p)))
        .collect();
    log::info!("training on {} trajectories from {} scenes", trajectories.len(), scenes.len());
    let out = train(&trajectories, &cfg.train_config())?;
    if let Some(parent) = cfg.paths.model.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    out.model.save(&cfg.paths.model)?;
    if let Some(parent) = cfg.paths.loss_log.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(&cfg.paths.loss_log, loss_csv(&out.losses)).map_err(|e| Error::io(&cfg.paths.loss_log, e))?;
    log::info!(
        "best epoch {} (validation NLL {:.4}); model written to {}",
        out.best_epoch,
        out.losses[out.best_epoch - 1].val_nll,
        cfg.paths.model.display()
    );
    Ok(out)
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<Report> {
    let scenes = split_pool(load_scenes(&cfg.paths.scene_dir)?, cfg.dataset.train_scenes, false)?;
    let exp = cfg.experiment();
    let model = if exp.forecast == ForecastSource::Model {
        if !cfg.paths.model.exists() {
            return Err(Error::invalid(format!(
                "model file {} not found (run `lidar-blockage train` first, or pass --oracle)",
                cfg.paths.model.display()
            )));
        }
        Some(LstmModel::load(&cfg.paths.model)?)
    } else {
        None
    };
    log::info!("evaluating {} scenes", scenes.len());
    create_dir(&cfg.paths.report_dir)?;
    let predictions = cfg
        .evaluate
        .record_predictions
        .then(|| cfg.paths.report_dir.join("predictions.csv"));
    let report = run_experiment_recording(&scenes, model.as_ref(), &exp, predictions.as_deref())?;
    report.write(&cfg.paths.report_dir)?;
    log::info!("report written to {}", cfg.paths.report_dir.display());
    Ok(report)
}

/// Renders a written report as plain-text tables.
pub fn cmd_report(cfg: &RunConfig) -> Result<String> {
    let path = cfg.paths.report_dir.join("report.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let report: Report = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    let body = render_report(&report);
    let md = cfg.paths.report_dir.join("report.md");
    std::fs::write(&md, &body).map_err(|e| Error::io(&md, e))?;
    Ok(body)
}

pub fn render_report(r: &Report) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into());
    let mut out = format!(
        "scenes: {}  anchors: {}  scored tracks: {}  unmatched tracks: {}\n\n",
        r.n_scenes, r.n_anchors, r.matched_tracks, r.unmatched_tracks
    );
    for m in &r.metrics {
        out.push_str(&format!("{} boxes\n\n| w | accuracy | precision | recall | F1 |\n|---|---|---|---|---|\n", m.mode.name()));
        for row in &m.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                row.w,
                opt(row.accuracy),
                opt(row.precision),
                opt(row.recall),
                opt(row.f1)
            ));
        }
        out.push('\n');
    }
    if let Some(ade) = &r.ade {
        out.push_str("| step | ADE (m) |\n|---|---|\n");
        for (k, a) in ade.iter().enumerate() {
            out.push_str(&format!("| {} | {a:.3} |\n", k + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_manifest_keeps_other_defaults() {
        let cfg = RunConfig::from_toml("seed = 9\n[scene]\nn_humans = 3\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.scene.n_humans, 3);
        assert_eq!(cfg.scene.duration, 288);
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn flags_override_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 3\n[dataset]\nn_scenes = 7\n").unwrap();
        let cli = Cli::try_parse_from([
            "lidar-blockage",
            "--config",
            path.to_str().unwrap(),
            "gen-scenes",
            "--n",
            "2",
        ])
        .unwrap();
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.dataset.n_scenes, 2);
    }

    #[test]
    fn bad_windows_are_usage_errors() {
        let cli = Cli::try_parse_from(["lidar-blockage", "evaluate", "--window", "0,3"]).unwrap();
        assert!(matches!(resolve_config(&cli), Err(CliError::Usage(_))));
        assert_eq!(run(["lidar-blockage", "evaluate", "--window", "12"]), EXIT_USAGE);
        assert_eq!(run(["lidar-blockage", "no-such-command"]), EXIT_USAGE);
    }
}
