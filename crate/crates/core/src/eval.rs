//! End-to-end evaluation: scan, detect, track, forecast, predict blockage,
//! and score against the geometric ground truth.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::blockage::{
    blockage_csv_row, predict_blockage, BBox, BlockageOptions, BlockageReport, BoxMode, TrackedBox,
    BLOCKAGE_CSV_HEADER,
};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Obb, Vec2, Vec3};
use crate::lidar::{build_global_map, Room, Scanner, SensorConfig};
use crate::perception::{Detection, Detector, PerceptionConfig};
use crate::scene::{los_table, Scene};
use crate::seed::SeedSplitter;
use crate::tracking::{Track, Tracker, TrackerConfig};
use crate::trajpred::{forecast, ForecastMode, LstmModel, TrajectoryForecast};

/// Binary confusion counts; the positive class is "blocked".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn add(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn merge(&mut self, o: &ConfusionCounts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Ratios with a zero denominator are `None`.
    pub fn metrics(&self, w: usize) -> MetricsRow {
        let ratio = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        MetricsRow {
            w,
            accuracy: ratio(self.tp + self.tn, self.total()),
            precision,
            recall,
            f1,
            counts: *self,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub w: usize,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub counts: ConfusionCounts,
}

pub fn confusion_metrics(predicted: &[bool], truth: &[bool], w: usize) -> Result<MetricsRow> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "predicted vs true labels",
            left: predicted.len(),
            right: truth.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (p, t) in predicted.iter().zip(truth) {
        c.add(*p, *t);
    }
    Ok(c.metrics(w))
}

/// Running per-step displacement sums.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AdeAccumulator {
    pub sums: Vec<f64>,
    pub counts: Vec<u64>,
}

impl AdeAccumulator {
    pub fn new(horizon: usize) -> Self {
        AdeAccumulator {
            sums: vec![0.0; horizon],
            counts: vec![0; horizon],
        }
    }

    pub fn add(&mut self, predicted: &[Vec2], truth: &[Vec2]) {
        for (k, (p, t)) in predicted.iter().zip(truth).take(self.sums.len()).enumerate() {
            self.sums[k] += p.distance(*t);
            self.counts[k] += 1;
        }
    }

    pub fn merge(&mut self, o: &AdeAccumulator) {
        for k in 0..self.sums.len() {
            self.sums[k] += o.sums[k];
            self.counts[k] += o.counts[k];
        }
    }

    pub fn per_step(&self) -> Result<Vec<f64>> {
        if self.counts.iter().any(|&c| c == 0) {
            return Err(Error::invalid("no forecast/truth pairs for some step"));
        }
        Ok(self.sums.iter().zip(&self.counts).map(|(s, &c)| s / c as f64).collect())
    }
}

/// Mean ground-plane error at each future step over aligned pairs.
pub fn ade_per_step(forecasts: &[Vec<Vec2>], truth: &[Vec<Vec2>], horizon: usize) -> Result<Vec<f64>> {
    if forecasts.len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "forecasts vs truth",
            left: forecasts.len(),
            right: truth.len(),
        });
    }
    if forecasts.is_empty() {
        return Err(Error::invalid("no aligned forecast/truth pairs"));
    }
    let mut acc = AdeAccumulator::new(horizon);
    for (f, t) in forecasts.iter().zip(truth) {
        if f.len() < horizon || t.len() < horizon {
            return Err(Error::invalid(format!("pair shorter than horizon {horizon}")));
        }
        acc.add(f, t);
    }
    acc.per_step()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DetectionSource {
    /// Simulated scans through background subtraction and clustering.
    Lidar,
    /// Boxes enclosing the true cylinders; centroid jittered by Gaussian
    /// noise with the given standard deviation (meters).
    GroundTruth { noise_sigma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastSource {
    Model,
    /// True future positions of the matched person.
    GroundTruth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub windows: Vec<usize>,
    /// Observed positions fed to the forecaster.
    pub obs_len: usize,
    pub horizon: usize,
    pub match_radius: f64,
    pub anchor_stride: usize,
    pub detection: DetectionSource,
    pub forecast: ForecastSource,
    pub forecast_mode: ForecastMode,
    pub seed: u64,
    pub room: Room,
    pub sensors: Vec<SensorConfig>,
    pub perception: PerceptionConfig,
    pub tracker: TrackerConfig,
    pub blockage: BlockageOptions,
    pub box_modes: Vec<BoxMode>,
    /// Scene-level worker threads; 0 means all available cores.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let room = Room::default();
        ExperimentConfig {
            windows: (1..=9).collect(),
            obs_len: 10,
            horizon: 9,
            match_radius: 0.5,
            anchor_stride: 1,
            detection: DetectionSource::Lidar,
            forecast: ForecastSource::Model,
            forecast_mode: ForecastMode::Mean,
            seed: 0,
            sensors: SensorConfig::default_pair(&room),
            room,
            perception: PerceptionConfig::default(),
            tracker: TrackerConfig::default(),
            blockage: BlockageOptions::default(),
            box_modes: BoxMode::ALL.to_vec(),
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.windows.is_empty() {
            return Err(Error::invalid("window list is empty"));
        }
        if let Some(w) = self.windows.iter().find(|&&w| w == 0 || w > self.horizon) {
            return Err(Error::invalid(format!("window {w} outside [1, {}]", self.horizon)));
        }
        if self.box_modes.is_empty() {
            return Err(Error::invalid("no box mode selected"));
        }
        if self.obs_len < 2 {
            return Err(Error::invalid("obs_len must be >= 2"));
        }
        if self.anchor_stride == 0 {
            return Err(Error::invalid("anchor_stride must be >= 1"));
        }
        if !(self.match_radius > 0.0) {
            return Err(Error::invalid("match_radius must be > 0"));
        }
        if let DetectionSource::GroundTruth { noise_sigma } = self.detection {
            if !(noise_sigma >= 0.0) {
                return Err(Error::invalid("noise_sigma must be >= 0"));
            }
        }
        self.perception.validate()?;
        self.tracker.validate()?;
        Ok(())
    }

    fn max_window(&self) -> usize {
        self.windows.iter().copied().max().unwrap_or(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeMetrics {
    pub mode: BoxMode,
    pub rows: Vec<MetricsRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub n_scenes: usize,
    pub n_anchors: u64,
    /// (track, anchor) pairs scored against a matched person.
    pub matched_tracks: u64,
    /// (track, anchor) pairs with no person within the match radius.
    pub unmatched_tracks: u64,
    pub metrics: Vec<ModeMetrics>,
    pub ade: Option<Vec<f64>>,
    pub ade_counts: Vec<u64>,
}

impl Report {
    pub fn row(&self, mode: BoxMode, w: usize) -> Option<&MetricsRow> {
        self.metrics
            .iter()
            .find(|m| m.mode == mode)?
            .rows
            .iter()
            .find(|r| r.w == w)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::format("report", e.to_string()))
    }

    pub fn metrics_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut out = String::from("mode,w,tp,fp,tn,fn,accuracy,precision,recall,f1\n");
        for m in &self.metrics {
            for r in &m.rows {
                let c = r.counts;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    m.mode.name(),
                    r.w,
                    c.tp,
                    c.fp,
                    c.tn,
                    c.fn_,
                    opt(r.accuracy),
                    opt(r.precision),
                    opt(r.recall),
                    opt(r.f1)
                ));
            }
        }
        out
    }

    pub fn ade_csv(&self) -> String {
        let mut out = String::from("step,ade_m,n\n");
        if let Some(ade) = &self.ade {
            for (k, (a, n)) in ade.iter().zip(&self.ade_counts).enumerate() {
                out.push_str(&format!("{},{a:.6},{n}\n", k + 1));
            }
        }
        out
    }

    /// Writes report.json, metrics.csv and ade.csv into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            ("report.json", self.to_json()?),
            ("metrics.csv", self.metrics_csv()),
            ("ade.csv", self.ade_csv()),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

/// Detection whose boxes enclose a true cylinder, shifted by `noise`.
pub fn cylinder_detection(base: Vec2, radius: f64, height: f64, noise: Vec2) -> Detection {
    let c = base + noise;
    let aabb = Aabb {
        min: Vec3::new(c.x - radius, c.y - radius, 0.0),
        max: Vec3::new(c.x + radius, c.y + radius, height),
    };
    Detection {
        centroid: c.extend(height * 0.5),
        aabb,
        obb: Obb::from_aabb(&aabb),
        n_points: 0,
    }
}

/// Everything one scene contributes to the totals.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneResult {
    /// Indexed like `[mode][window]` following the configured box modes
    /// and windows.
    pub counts: Vec<Vec<ConfusionCounts>>,
    pub ade: AdeAccumulator,
    pub n_anchors: u64,
    pub matched: u64,
    pub unmatched: u64,
    /// CSV rows of per-anchor predictions, when requested.
    pub predictions: Option<String>,
}

/// Shared read-only state for scoring scenes.
pub struct Pipeline<'a> {
    cfg: &'a ExperimentConfig,
    model: Option<&'a LstmModel>,
    lidar: Option<(Scanner, Detector)>,
    record_predictions: bool,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a ExperimentConfig, model: Option<&'a LstmModel>) -> Result<Pipeline<'a>> {
        cfg.validate()?;
        if cfg.forecast == ForecastSource::Model && model.is_none() {
            return Err(Error::invalid("forecast source is the model but no model was given"));
        }
        let lidar = match cfg.detection {
            DetectionSource::Lidar => {
                let seeds = SeedSplitter::new(cfg.seed);
                let map = build_global_map(&cfg.room, &cfg.sensors, seeds.derive("global-map", 0))?;
                Some((
                    Scanner::new(&cfg.sensors, &cfg.room)?,
                    Detector::new(&map, cfg.perception.clone())?,
                ))
            }
            DetectionSource::GroundTruth { .. } => None,
        };
        Ok(Pipeline {
            cfg,
            model,
            lidar,
            record_predictions: false,
        })
    }

    pub fn record_predictions(mut self, on: bool) -> Self {
        self.record_predictions = on;
        self
    }

    fn detections(&self, scene: &Scene, t: usize, seeds: &SeedSplitter) -> Vec<Detection> {
        match (&self.lidar, self.cfg.detection) {
            (Some((scanner, detector)), _) => detector.detect(&scanner.scan(&scene.cylinders(t), t, seeds)),
            (None, DetectionSource::GroundTruth { noise_sigma }) => {
                use rand::Rng;
                use rand_distr::StandardNormal;
                let mut rng = seeds.rng("gt-detections", t as u64);
                (0..scene.n_humans())
                    .map(|p| {
                        let noise = if noise_sigma > 0.0 {
                            let nx: f64 = rng.sample(StandardNormal);
                            let ny: f64 = rng.sample(StandardNormal);
                            Vec2::new(nx, ny) * noise_sigma
                        } else {
                            Vec2::ZERO
                        };
                        let c = scene.cylinder(t, p);
                        cylinder_detection(c.base, c.radius, c.height, noise)
                    })
                    .collect()
            }
            (None, DetectionSource::Lidar) => unreachable!("lidar state is built with the pipeline"),
        }
    }

    /// Scores one scene. `index` only seeds the scan noise and labels rows.
    pub fn run_scene(&self, index: usize, scene: &Scene) -> Result<SceneResult> {
        let cfg = self.cfg;
        let w_max = cfg.max_window();
        let n_frames = scene.n_frames();
        let seeds = SeedSplitter::new(SeedSplitter::new(cfg.seed).derive("scene", index as u64));
        let truth = los_table(scene);
        let tx = scene.config.tx_position;
        let dt = scene.config.dt();

        let mut out = SceneResult {
            counts: vec![vec![ConfusionCounts::default(); cfg.windows.len()]; cfg.box_modes.len()],
            ade: AdeAccumulator::new(cfg.horizon),
            n_anchors: 0,
            matched: 0,
            unmatched: 0,
            predictions: self.record_predictions.then(String::new),
        };
        let mut tracker = Tracker::new(cfg.tracker.clone())?;
        for t in 0..n_frames {
            let dets = self.detections(scene, t, &seeds);
            let confirmed = tracker.track_frame(&dets, dt)?;
            let is_anchor = t + 1 >= cfg.obs_len && t + w_max < n_frames && (t + 1 - cfg.obs_len) % cfg.anchor_stride == 0;
            if !is_anchor {
                continue;
            }
            out.n_anchors += 1;
            self.score_anchor(index, scene, t, &confirmed, &truth, tx, &seeds, &mut out)?;
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn score_anchor(
        &self,
        index: usize,
        scene: &Scene,
        t_e: usize,
        confirmed: &[Track],
        truth: &[Vec<bool>],
        tx: Vec3,
        seeds: &SeedSplitter,
        out: &mut SceneResult,
    ) -> Result<()> {
        let cfg = self.cfg;
        let w_max = cfg.max_window();
        let n_fc = w_max.max(cfg.horizon);
        let matches: Vec<Option<usize>> = confirmed
            .iter()
            .map(|tr| {
                let pos = tr.position();
                (0..scene.n_humans())
                    .map(|p| (p, scene.position(t_e, p).distance(pos)))
                    .filter(|(_, d)| *d <= cfg.match_radius)
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(p, _)| p)
            })
            .collect();

        let mut members: Vec<(usize, TrajectoryForecast)> = Vec::new();
        for (i, tr) in confirmed.iter().enumerate() {
            if tr.history.len() < 2 {
                continue;
            }
            let hist: Vec<Vec2> = tr.history.iter().rev().take(cfg.obs_len).rev().copied().collect();
            let fc = match cfg.forecast {
                ForecastSource::Model => {
                    let model = self.model.expect("checked in Pipeline::new");
                    let seed = seeds.derive2("forecast", t_e as u64, tr.id);
                    let mut f = forecast(&hist, n_fc, model, cfg.forecast_mode, seed)?;
                    f.track_id = tr.id;
                    f
                }
                ForecastSource::GroundTruth => {
                    // only people with a known identity have a true future
                    let Some(p) = matches[i] else { continue };
                    let positions: Vec<Vec2> = (1..=n_fc).map(|k| scene.position(t_e + k.min(scene.n_frames() - 1 - t_e), p)).collect();
                    let mut prev = tr.position();
                    let velocities = positions
                        .iter()
                        .map(|q| {
                            let v = *q - prev;
                            prev = *q;
                            v
                        })
                        .collect();
                    TrajectoryForecast {
                        track_id: tr.id,
                        positions,
                        velocities,
                        params: Vec::new(),
                    }
                }
            };
            members.push((i, fc));
        }

        // scoring targets: matched tracks with a full observation window
        for (i, tr) in confirmed.iter().enumerate() {
            if tr.history.len() < cfg.obs_len {
                continue;
            }
            match matches[i] {
                Some(_) => out.matched += 1,
                None => out.unmatched += 1,
            }
        }

        if cfg.forecast == ForecastSource::Model {
            for (i, fc) in &members {
                let (tr, Some(p)) = (&confirmed[*i], matches[*i]) else { continue };
                if tr.history.len() < cfg.obs_len || t_e + cfg.horizon >= scene.n_frames() {
                    continue;
                }
                let future: Vec<Vec2> = (1..=cfg.horizon).map(|k| scene.position(t_e + k, p)).collect();
                out.ade.add(&fc.positions, &future);
            }
        }

        let forecasts: Vec<TrajectoryForecast> = members.iter().map(|(_, f)| f.clone()).collect();
        for (mi, mode) in cfg.box_modes.iter().enumerate() {
            let boxes: Vec<TrackedBox> = members
                .iter()
                .map(|(i, _)| {
                    let tr = &confirmed[*i];
                    let (aabb, obb) = tr.current_boxes();
                    let n = tr.history.len();
                    TrackedBox {
                        id: tr.id,
                        position: tr.position(),
                        last_step: tr.history[n - 1] - tr.history[n - 2],
                        bbox: match mode {
                            BoxMode::Aabb => BBox::Aabb(aabb),
                            BoxMode::Obb => BBox::Obb(obb),
                        },
                    }
                })
                .collect();
            // one pass at the largest window: a label at w is the same as
            // the first blocked step being within w
            let reports = predict_blockage(&boxes, &forecasts, tx, w_max, &cfg.blockage)?;
            for ((i, _), r) in members.iter().zip(&reports) {
                let tr = &confirmed[*i];
                let Some(p) = matches[*i] else { continue };
                if tr.history.len() < cfg.obs_len {
                    continue;
                }
                for (wi, &w) in cfg.windows.iter().enumerate() {
                    let predicted = r.first_step.is_some_and(|s| s <= w);
                    let actual = (t_e + 1..=t_e + w).any(|t| truth[t][p]);
                    out.counts[mi][wi].add(predicted, actual);
                    if let Some(rows) = out.predictions.as_mut() {
                        let windowed = BlockageReport {
                            blocked: predicted,
                            first_step: r.first_step.filter(|_| predicted),
                            blocker: r.blocker.filter(|_| predicted),
                            ..*r
                        };
                        rows.push_str(mode.name());
                        rows.push(',');
                        blockage_csv_row(index, t_e, w, &windowed, rows);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Scores every scene and merges in scene order, so the report does not
/// depend on the number of workers.
pub fn run_experiment(
    scenes: &[Scene],
    model: Option<&LstmModel>,
    cfg: &ExperimentConfig,
) -> Result<Report> {
    run_experiment_recording(scenes, model, cfg, None)
}

/// Like [`run_experiment`]; also writes per-anchor predictions when a path
/// is given.
pub fn run_experiment_recording(
    scenes: &[Scene],
    model: Option<&LstmModel>,
    cfg: &ExperimentConfig,
    predictions: Option<&Path>,
) -> Result<Report> {
    if scenes.is_empty() {
        return Err(Error::invalid("no scenes to evaluate"));
    }
    let pipeline = Pipeline::new(cfg, model)?.record_predictions(predictions.is_some());
    let workers = match cfg.workers {
        0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        n => n,
    }
    .min(scenes.len());

    let slots: Vec<Mutex<Option<Result<SceneResult>>>> = scenes.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= scenes.len() {
                    break;
                }
                log::debug!("scene {i}");
                let r = pipeline.run_scene(i, &scenes[i]);
                *slots[i].lock().expect("no panics while holding the lock") = Some(r);
            });
        }
    });

    let mut counts = vec![vec![ConfusionCounts::default(); cfg.windows.len()]; cfg.box_modes.len()];
    let mut ade = AdeAccumulator::new(cfg.horizon);
    let (mut n_anchors, mut matched, mut unmatched) = (0, 0, 0);
    let mut rows = predictions.map(|_| format!("mode,{BLOCKAGE_CSV_HEADER}\n"));
    for slot in slots {
        let r = slot.into_inner().expect("lock not poisoned").expect("every scene ran")?;
        for (dst, src) in counts.iter_mut().zip(&r.counts) {
            for (d, s) in dst.iter_mut().zip(src) {
                d.merge(s);
            }
        }
        ade.merge(&r.ade);
        n_anchors += r.n_anchors;
        matched += r.matched;
        unmatched += r.unmatched;
        if let (Some(all), Some(part)) = (rows.as_mut(), r.predictions) {
            all.push_str(&part);
        }
    }
    if let (Some(path), Some(body)) = (predictions, rows) {
        std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    let metrics = cfg
        .box_modes
        .iter()
        .zip(&counts)
        .map(|(mode, c)| ModeMetrics {
            mode: *mode,
            rows: cfg.windows.iter().zip(c).map(|(&w, c)| c.metrics(w)).collect(),
        })
        .collect();
    Ok(Report {
        config: cfg.clone(),
        n_scenes: scenes.len(),
        n_anchors,
        matched_tracks: matched,
        unmatched_tracks: unmatched,
        metrics,
        ade: ade.per_step().ok(),
        ade_counts: ade.counts.clone(),
    })
}
