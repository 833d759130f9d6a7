//! Multi-person tracking on the ground plane: constant-velocity Kalman
//! filter per track, global-nearest-neighbor association solved with the
//! Hungarian method, and a confirm/delete lifecycle.

use std::collections::VecDeque;
use std::path::Path;

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Obb, Vec2, Vec3};
use crate::perception::Detection;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// White-acceleration spectral density, m²/s³.
    pub process_noise: f64,
    /// Per-axis position measurement sigma, m.
    pub measurement_sigma: f64,
    /// Squared Mahalanobis gate (chi-square, 2 dof).
    pub gate: f64,
    pub confirm_hits: usize,
    pub max_misses: usize,
    /// Initial velocity variance of a new track, m²/s².
    pub init_velocity_var: f64,
    /// Positions kept per track.
    pub history_capacity: usize,
    /// Unmatched detections closer than this to a live track spawn nothing,
    /// m. A gate miss on a converged track would otherwise seed a duplicate.
    pub birth_exclusion: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            process_noise: 0.5,
            measurement_sigma: 0.05,
            gate: 5.99,
            confirm_hits: 3,
            max_misses: 5,
            init_velocity_var: 10.0,
            history_capacity: 32,
            birth_exclusion: 0.4,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.process_noise >= 0.0) || !(self.measurement_sigma > 0.0) {
            return Err(Error::invalid("noise parameters must be positive"));
        }
        if !(self.birth_exclusion >= 0.0) {
            return Err(Error::invalid("birth_exclusion must be >= 0"));
        }
        if !(self.gate > 0.0) {
            return Err(Error::invalid("gate must be > 0"));
        }
        if self.confirm_hits == 0 || self.max_misses == 0 || self.history_capacity < 2 {
            return Err(Error::invalid(
                "confirm_hits and max_misses must be >= 1, history_capacity >= 2",
            ));
        }
        Ok(())
    }

    fn measurement_cov(&self) -> Matrix2<f64> {
        Matrix2::identity() * self.measurement_sigma.powi(2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: u64,
    /// (x, y, vx, vy)
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub aabb: Aabb,
    pub obb: Obb,
    /// Ground-plane position the boxes were measured at.
    pub box_anchor: Vec2,
    /// (lowest, highest) z of the last detection.
    pub z_extent: (f64, f64),
    pub age: usize,
    pub hits: usize,
    pub misses: usize,
    pub confirmed: bool,
    pub history: VecDeque<Vec2>,
}

impl Track {
    pub fn new(id: u64, det: &Detection, cfg: &TrackerConfig) -> Track {
        let p = det.centroid.xy();
        let pos_var = cfg.measurement_sigma.powi(2);
        let mut history = VecDeque::with_capacity(cfg.history_capacity);
        history.push_back(p);
        Track {
            id,
            state: Vector4::new(p.x, p.y, 0.0, 0.0),
            covariance: Matrix4::from_diagonal(&Vector4::new(
                pos_var,
                pos_var,
                cfg.init_velocity_var,
                cfg.init_velocity_var,
            )),
            aabb: det.aabb,
            obb: det.obb,
            box_anchor: p,
            z_extent: (det.aabb.min.z, det.aabb.max.z),
            age: 1,
            hits: 1,
            misses: 0,
            confirmed: cfg.confirm_hits <= 1,
            history,
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.state[2], self.state[3])
    }

    /// Last measured boxes moved to the current state position.
    pub fn current_boxes(&self) -> (Aabb, Obb) {
        let d = self.position() - self.box_anchor;
        let shift = Vec3::new(d.x, d.y, 0.0);
        let mut obb = self.obb;
        obb.center += shift;
        (self.aabb.translated(shift), obb)
    }

    fn push_history(&mut self, cap: usize) {
        if self.history.len() == cap {
            self.history.pop_front();
        }
        self.history.push_back(self.position());
    }
}

fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

fn process_cov(q: f64, dt: f64) -> Matrix4<f64> {
    let (a, b, c) = (dt.powi(3) / 3.0, dt.powi(2) / 2.0, dt);
    Matrix4::new(
        a, 0.0, b, 0.0, //
        0.0, a, 0.0, b, //
        b, 0.0, c, 0.0, //
        0.0, b, 0.0, c,
    ) * q
}

fn observation() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

fn symmetrize(p: &mut Matrix4<f64>) {
    *p = (*p + p.transpose()) * 0.5;
}

/// Time update with process density `q`.
pub fn kf_predict(track: &mut Track, dt: f64, q: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be > 0"));
    }
    let f = transition(dt);
    track.state = f * track.state;
    track.covariance = f * track.covariance * f.transpose() + process_cov(q, dt);
    symmetrize(&mut track.covariance);
    Ok(())
}

/// Innovation `z − Hx` and its covariance.
pub fn innovation(track: &Track, z: Vec2, r: &Matrix2<f64>) -> (Vector2<f64>, Matrix2<f64>) {
    let h = observation();
    let y = Vector2::new(z.x, z.y) - h * track.state;
    let s = h * track.covariance * h.transpose() + r;
    (y, s)
}

/// Squared Mahalanobis distance of `z` from the track's predicted position.
pub fn mahalanobis_sq(track: &Track, z: Vec2, r: &Matrix2<f64>) -> f64 {
    let (y, s) = innovation(track, z, r);
    match s.try_inverse() {
        Some(si) => (y.transpose() * si * y)[(0, 0)],
        None => f64::INFINITY,
    }
}

/// Measurement update, Joseph form.
pub fn kf_update(track: &mut Track, z: Vec2, r: &Matrix2<f64>) -> Result<()> {
    let h = observation();
    let (y, s) = innovation(track, z, r);
    let si = s
        .try_inverse()
        .ok_or_else(|| Error::invalid("singular innovation covariance"))?;
    let k: Matrix4x2<f64> = track.covariance * h.transpose() * si;
    track.state += k * y;
    let ikh = Matrix4::identity() - k * h;
    track.covariance = ikh * track.covariance * ikh.transpose() + k * r * k.transpose();
    symmetrize(&mut track.covariance);
    Ok(())
}

/// Minimum-cost perfect assignment on a square matrix. Returns the column
/// chosen for each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // potentials with 1-based bookkeeping; column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            col_of[row_of[j] - 1] = j - 1;
        }
    }
    col_of
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    /// (track index, detection index)
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

/// Gated assignment: as many pairs as possible with cost ≤ `gate`, and among
/// those the smallest total cost. `None` marks a forbidden pair.
pub fn assign_gated(cost: &[Vec<f64>], n_cols: usize, gate: f64) -> Assignment {
    let n_rows = cost.len();
    let n = n_rows.max(n_cols);
    // any forbidden cell outweighs every possible sum of allowed costs
    let big = (n as f64 + 1.0) * gate.max(1.0) * 4.0;
    let allowed = |i: usize, j: usize| i < n_rows && j < n_cols && cost[i][j] <= gate;
    let square: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if allowed(i, j) { cost[i][j] } else { big })
                .collect()
        })
        .collect();
    let col_of = hungarian(&square);

    let mut out = Assignment::default();
    let mut det_used = vec![false; n_cols];
    for (i, &j) in col_of.iter().enumerate().take(n_rows) {
        if allowed(i, j) {
            out.matches.push((i, j));
            det_used[j] = true;
        } else {
            out.unmatched_tracks.push(i);
        }
    }
    out.unmatched_detections = (0..n_cols).filter(|&j| !det_used[j]).collect();
    out
}

/// Global-nearest-neighbor association of predicted tracks and detection
/// positions under the squared Mahalanobis gate.
pub fn associate(tracks: &[Track], detections: &[Vec2], cfg: &TrackerConfig) -> Assignment {
    let r = cfg.measurement_cov();
    let cost: Vec<Vec<f64>> = tracks
        .iter()
        .map(|t| detections.iter().map(|z| mahalanobis_sq(t, *z, &r)).collect())
        .collect();
    assign_gated(&cost, detections.len(), cfg.gate)
}

#[derive(Clone, Debug)]
pub struct Tracker {
    pub config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Tracker> {
        config.validate()?;
        Ok(Tracker {
            config,
            tracks: Vec::new(),
            next_id: 0,
        })
    }

    /// All live tracks, tentative ones included.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn confirmed(&self) -> Vec<Track> {
        self.tracks.iter().filter(|t| t.confirmed).cloned().collect()
    }

    /// Advances one frame and returns the confirmed tracks.
    pub fn track_frame(&mut self, detections: &[Detection], dt: f64) -> Result<Vec<Track>> {
        let cfg = self.config.clone();
        for t in &mut self.tracks {
            kf_predict(t, dt, cfg.process_noise)?;
            t.age += 1;
        }
        let positions: Vec<Vec2> = detections.iter().map(|d| d.centroid.xy()).collect();
        let a = associate(&self.tracks, &positions, &cfg);
        let r = cfg.measurement_cov();

        for &(ti, di) in &a.matches {
            let t = &mut self.tracks[ti];
            let d = &detections[di];
            kf_update(t, positions[di], &r)?;
            t.aabb = d.aabb;
            t.obb = d.obb;
            t.box_anchor = positions[di];
            t.z_extent = (d.aabb.min.z, d.aabb.max.z);
            t.hits += 1;
            t.misses = 0;
            if t.hits >= cfg.confirm_hits {
                t.confirmed = true;
            }
        }
        for &ti in &a.unmatched_tracks {
            let t = &mut self.tracks[ti];
            t.misses += 1;
            t.hits = 0;
        }
        // tentative tracks die on their first miss
        self.tracks
            .retain(|t| t.misses < cfg.max_misses && (t.confirmed || t.misses == 0));
        for t in &mut self.tracks {
            t.push_history(cfg.history_capacity);
        }
        for &di in &a.unmatched_detections {
            let p = positions[di];
            if self.tracks.iter().any(|t| t.position().distance(p) < cfg.birth_exclusion) {
                continue;
            }
            self.tracks.push(Track::new(self.next_id, &detections[di], &cfg));
            self.next_id += 1;
        }
        Ok(self.confirmed())
    }
}

pub const TRACK_LOG_HEADER: &str = "frame,id,x,y,vx,vy";

/// Appends one record per track to a CSV body.
pub fn track_log_rows(frame: usize, tracks: &[Track], out: &mut String) {
    for t in tracks {
        out.push_str(&format!(
            "{frame},{},{},{},{},{}\n",
            t.id, t.state[0], t.state[1], t.state[2], t.state[3]
        ));
    }
}

pub fn write_track_log(path: &Path, body: &str) -> Result<()> {
    let text = format!("{TRACK_LOG_HEADER}\n{body}");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fit_aabb, Obb};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn det_at(p: Vec2) -> Detection {
        let aabb = fit_aabb(&[
            Vec3::new(p.x - 0.25, p.y - 0.25, 0.0),
            Vec3::new(p.x + 0.25, p.y + 0.25, 1.7),
        ])
        .unwrap();
        Detection {
            centroid: p.extend(0.85),
            aabb,
            obb: Obb::from_aabb(&aabb),
            n_points: 40,
        }
    }

    fn track_with(state: [f64; 4]) -> Track {
        let cfg = TrackerConfig::default();
        let mut t = Track::new(0, &det_at(Vec2::new(state[0], state[1])), &cfg);
        t.state = Vector4::from(state);
        t
    }

    fn min_eigen(p: &Matrix4<f64>) -> f64 {
        p.symmetric_eigenvalues().min()
    }

    #[test]
    fn predict_moves_at_constant_velocity() {
        let mut t = track_with([0.0, 0.0, 1.0, 0.0]);
        kf_predict(&mut t, 0.1, 0.5).unwrap();
        assert!((t.position() - Vec2::new(0.1, 0.0)).norm() < 1e-15);
        assert!(kf_predict(&mut t, 0.0, 0.5).is_err());
    }

    #[test]
    fn predict_grows_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = [0, 1, 2, 3].map(|_| rng.random_range(-5.0..5.0));
            let mut t = track_with(s);
            let before = t.covariance.trace();
            kf_predict(&mut t, rng.random_range(0.01..1.0), 0.5).unwrap();
            assert!(t.covariance.trace() > before);
            assert!(min_eigen(&t.covariance) > 0.0);
        }
        let mut still = track_with([2.0, 3.0, 0.0, 0.0]);
        let before = still.covariance;
        kf_predict(&mut still, 0.1, 0.5).unwrap();
        assert_eq!(still.position(), Vec2::new(2.0, 3.0));
        assert!((still.covariance - before).diagonal().iter().all(|d| *d > 0.0));
    }

    #[test]
    fn update_keeps_covariance_positive_definite() {
        let cfg = TrackerConfig::default();
        let r = cfg.measurement_cov();
        let mut t = track_with([0.0, 0.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            kf_predict(&mut t, 0.1, cfg.process_noise).unwrap();
            let z = Vec2::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
            kf_update(&mut t, z, &r).unwrap();
            assert_eq!(t.covariance, t.covariance.transpose());
            assert!(min_eigen(&t.covariance) > 0.0);
        }
    }

    #[test]
    fn near_detection_wins() {
        let cfg = TrackerConfig::default();
        let t = track_with([0.0, 0.0, 0.0, 0.0]);
        let a = associate(&[t], &[Vec2::new(0.1, 0.0), Vec2::new(5.0, 5.0)], &cfg);
        assert_eq!(a.matches, vec![(0, 0)]);
        assert_eq!(a.unmatched_detections, vec![1]);
        assert!(a.unmatched_tracks.is_empty());
    }

    #[test]
    fn no_detections_leaves_tracks_unmatched() {
        let cfg = TrackerConfig::default();
        let ts = vec![track_with([0.0; 4]), track_with([3.0, 0.0, 0.0, 0.0])];
        let a = associate(&ts, &[], &cfg);
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_tracks, vec![0, 1]);
    }

    #[test]
    fn hungarian_solves_small_square() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let cols = hungarian(&c);
        let total: f64 = cols.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    /// Every partial matching of rows to distinct columns, allowed pairs only.
    fn brute(cost: &[Vec<f64>], n_cols: usize, gate: f64) -> (usize, f64) {
        fn go(i: usize, cost: &[Vec<f64>], used: &mut Vec<bool>, gate: f64) -> (usize, f64) {
            if i == cost.len() {
                return (0, 0.0);
            }
            let mut best = go(i + 1, cost, used, gate);
            for j in 0..used.len() {
                if !used[j] && cost[i][j] <= gate {
                    used[j] = true;
                    let (k, c) = go(i + 1, cost, used, gate);
                    used[j] = false;
                    let cand = (k + 1, c + cost[i][j]);
                    if cand.0 > best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                        best = cand;
                    }
                }
            }
            best
        }
        go(0, cost, &mut vec![false; n_cols], gate)
    }

    #[test]
    fn gated_assignment_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let rows = rng.random_range(0..=6);
            let cols = rng.random_range(0..=6);
            let cost: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.random_range(0.0..12.0)).collect())
                .collect();
            let a = assign_gated(&cost, cols, 5.99);
            let total: f64 = a.matches.iter().map(|&(i, j)| cost[i][j]).sum();
            let (k, best) = brute(&cost, cols, 5.99);
            assert_eq!(a.matches.len(), k);
            assert!((total - best).abs() < 1e-9, "{total} vs {best}");
            assert_eq!(a.matches.len() + a.unmatched_tracks.len(), rows);
            assert_eq!(a.matches.len() + a.unmatched_detections.len(), cols);
        }
    }

    #[test]
    fn crossing_pair_keeps_identities() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        let dt = 0.1;
        let mut ids = None;
        // two people walking toward each other and passing 0.6 m apart
        for k in 0..60 {
            let x = -3.0 + 0.13 * k as f64;
            let a = Vec2::new(x, 0.3);
            let b = Vec2::new(-x, -0.3);
            let out = tr.track_frame(&[det_at(a), det_at(b)], dt).unwrap();
            if out.len() == 2 {
                let id_near_a = out
                    .iter()
                    .min_by(|p, q| p.position().distance(a).total_cmp(&q.position().distance(a)))
                    .unwrap()
                    .id;
                match ids {
                    None => ids = Some(id_near_a),
                    Some(prev) => assert_eq!(prev, id_near_a, "swap at frame {k}"),
                }
            }
        }
        assert!(ids.is_some());
    }

    #[test]
    fn straight_line_velocity_converges() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        let v = Vec2::new(1.3, -0.4);
        let mut last = Vec::new();
        for k in 0..50 {
            let p = Vec2::new(-2.0, 1.0) + v * (0.1 * k as f64);
            last = tr.track_frame(&[det_at(p)], 0.1).unwrap();
        }
        assert_eq!(last.len(), 1);
        assert!((last[0].velocity() - v).norm() < 0.05);
    }

    #[test]
    fn short_dropout_is_bridged() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        let v = Vec2::new(1.0, 0.0);
        let mut id = None;
        for k in 0..40 {
            let p = v * (0.1 * k as f64);
            let dets = if (20..22).contains(&k) { vec![] } else { vec![det_at(p)] };
            let out = tr.track_frame(&dets, 0.1).unwrap();
            if k >= 5 {
                assert_eq!(out.len(), 1, "frame {k}");
                assert_eq!(*id.get_or_insert(out[0].id), out[0].id);
            }
        }
        assert_eq!(tr.tracks().len(), 1);
    }

    #[test]
    fn lifecycle_confirms_and_deletes() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        let p = Vec2::new(1.0, 1.0);
        assert!(tr.track_frame(&[det_at(p)], 0.1).unwrap().is_empty());
        assert!(tr.track_frame(&[det_at(p)], 0.1).unwrap().is_empty());
        assert_eq!(tr.track_frame(&[det_at(p)], 0.1).unwrap().len(), 1);
        for k in 0..4 {
            assert_eq!(tr.track_frame(&[], 0.1).unwrap().len(), 1, "miss {k}");
        }
        assert!(tr.track_frame(&[], 0.1).unwrap().is_empty());
        // a new detection gets a fresh id
        tr.track_frame(&[det_at(p)], 0.1).unwrap();
        assert_eq!(tr.tracks()[0].id, 1);
        // a tentative track vanishes on its first miss
        tr.track_frame(&[], 0.1).unwrap();
        assert!(tr.tracks().is_empty());
    }

    #[test]
    fn noisy_tracks_stay_accurate() {
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut se = 0.0;
        let mut n = 0;
        for k in 0..200 {
            let truth = Vec2::new(3.0 * (0.02 * k as f64).cos(), 3.0 * (0.02 * k as f64).sin());
            let z = truth + Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng));
            let out = tr.track_frame(&[det_at(z)], 0.1).unwrap();
            if k > 10 {
                se += out[0].position().distance(truth).powi(2);
                n += 1;
            }
        }
        assert!((se / n as f64).sqrt() < 0.05);
    }

    #[test]
    fn current_boxes_follow_the_state() {
        let mut t = track_with([1.0, 2.0, 0.0, 0.0]);
        t.state[0] += 0.5;
        let (aabb, obb) = t.current_boxes();
        assert!((aabb.center() - Vec3::new(1.5, 2.0, 0.85)).norm() < 1e-12);
        assert!((obb.box_center() - aabb.center()).norm() < 1e-12);
    }

    #[test]
    fn track_log_has_one_row_per_track() {
        let ts = vec![track_with([0.0; 4]), track_with([1.0, 2.0, 3.0, 4.0])];
        let mut body = String::new();
        track_log_rows(7, &ts, &mut body);
        assert_eq!(body.lines().count(), 2);
        assert_eq!(body.lines().nth(1).unwrap(), "7,0,1,2,3,4");
    }

    #[test]
    fn noisy_lanes_keep_one_track_per_person() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut tr = Tracker::new(TrackerConfig::default()).unwrap();
        for t in 0..300 {
            let dets: Vec<_> = (0..3)
                .map(|p| {
                    let n = Vec2::new(noise.sample(&mut rng), noise.sample(&mut rng));
                    det_at(Vec2::new(-8.0 + 0.12 * t as f64, 2.5 * p as f64) + n)
                })
                .collect();
            tr.track_frame(&dets, 0.1).unwrap();
        }
        let mut ids: Vec<u64> = tr.tracks().iter().map(|t| t.id).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 1, 2]);
    }
}
