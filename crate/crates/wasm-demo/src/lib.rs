//! Browser bindings: a slab-test playground, a generated crowd scene with
//! per-frame line-of-sight, and window blockage prediction on that scene.

use wasm_bindgen::prelude::*;

use lidar_blockage::blockage::{predict_blockage, BBox, BlockageOptions, BoxMode, TrackedBox};
use lidar_blockage::geometry::{slab_intersect_obb, Aabb, Mat3, Obb, Segment, Vec2, Vec3};
use lidar_blockage::scene::{generate_scene, ground_truth_los, ground_truth_window_label, Scene, SceneConfig};
use lidar_blockage::trajpred::TrajectoryForecast;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Distance along the segment `from -> to` where it enters a box with the
/// given center, half extents and yaw (radians). NaN on a miss.
#[wasm_bindgen]
pub fn slab_test(from: &[f64], to: &[f64], center: &[f64], half: &[f64], yaw: f64) -> Result<f64, JsError> {
    let v = |a: &[f64]| -> Result<Vec3, JsError> {
        match a {
            [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
            _ => Err(JsError::new("expected three coordinates")),
        }
    };
    let seg = Segment::new(v(from)?, v(to)?).map_err(js_err)?;
    let h = v(half)?;
    let obb = Obb::new(h * -1.0, h, Mat3::rot_z(yaw), v(center)?).map_err(js_err)?;
    Ok(slab_intersect_obb(&seg, &obb).unwrap_or(f64::NAN))
}

#[wasm_bindgen]
pub struct DemoScene {
    scene: Scene,
}

#[wasm_bindgen]
impl DemoScene {
    #[wasm_bindgen(constructor)]
    pub fn new(n_humans: usize, seed: u32) -> Result<DemoScene, JsError> {
        let scene = generate_scene(&SceneConfig {
            n_humans,
            rng_seed: seed as u64,
            ..SceneConfig::default()
        })
        .map_err(js_err)?;
        Ok(DemoScene { scene })
    }

    pub fn n_frames(&self) -> usize {
        self.scene.n_frames()
    }

    pub fn n_humans(&self) -> usize {
        self.scene.n_humans()
    }

    pub fn circle_radius(&self) -> f64 {
        self.scene.config.circle_radius
    }

    pub fn human_radius(&self) -> f64 {
        self.scene.config.human_radius
    }

    /// Transmitter as [x, y, z].
    pub fn tx(&self) -> Vec<f64> {
        self.scene.config.tx_position.to_array().to_vec()
    }

    /// Interleaved [x0, y0, x1, y1, ...] at frame `t`.
    pub fn positions(&self, t: usize) -> Vec<f64> {
        let t = t.min(self.scene.n_frames() - 1);
        self.scene.positions[t].iter().flat_map(|p| [p.x, p.y]).collect()
    }

    /// 1 where a person's link is blocked at frame `t`.
    pub fn nlos(&self, t: usize) -> Result<Vec<u8>, JsError> {
        (0..self.scene.n_humans())
            .map(|p| ground_truth_los(&self.scene, t, p).map(|s| s.is_blocked() as u8).map_err(js_err))
            .collect()
    }

    /// Largest window usable from anchor `t`.
    pub fn max_window(&self, t: usize) -> usize {
        (self.scene.n_frames().saturating_sub(t + 1)).min(9)
    }

    /// Predicted first blocked step (0 = clear) per person over the next `w`
    /// frames, using boxes fitted to the people at `t` and their true future
    /// positions as the forecast.
    pub fn predict(&self, t: usize, w: usize, obb: bool) -> Result<Vec<u32>, JsError> {
        if w == 0 || w > self.max_window(t) || t == 0 {
            return Err(JsError::new("window does not fit the scene at this frame"));
        }
        let s = &self.scene;
        let mode = if obb { BoxMode::Obb } else { BoxMode::Aabb };
        let mut tracks = Vec::new();
        let mut forecasts = Vec::new();
        for p in 0..s.n_humans() {
            let c = s.cylinder(t, p);
            let aabb = Aabb::new(
                Vec3::new(c.base.x - c.radius, c.base.y - c.radius, 0.0),
                Vec3::new(c.base.x + c.radius, c.base.y + c.radius, c.height),
            )
            .map_err(js_err)?;
            let last_step = s.position(t, p) - s.position(t - 1, p);
            let bbox = match mode {
                BoxMode::Aabb => BBox::Aabb(aabb),
                BoxMode::Obb => {
                    let yaw = if last_step.norm() > 1e-9 { last_step.angle() } else { 0.0 };
                    let h = aabb.half_extents();
                    BBox::Obb(Obb::new(h * -1.0, h, Mat3::rot_z(yaw), aabb.center()).map_err(js_err)?)
                }
            };
            tracks.push(TrackedBox {
                id: p as u64,
                position: c.base,
                last_step,
                bbox,
            });
            let positions: Vec<Vec2> = (1..=w).map(|k| s.position(t + k, p)).collect();
            let velocities = (1..=w).map(|k| s.position(t + k, p) - s.position(t + k - 1, p)).collect();
            forecasts.push(TrajectoryForecast {
                track_id: p as u64,
                positions,
                velocities,
                params: Vec::new(),
            });
        }
        let reports = predict_blockage(&tracks, &forecasts, s.config.tx_position, w, &BlockageOptions::default())
            .map_err(js_err)?;
        Ok(reports.iter().map(|r| r.first_step.unwrap_or(0) as u32).collect())
    }

    /// Ground-truth window labels (1 = blocked somewhere in the next `w` frames).
    pub fn truth(&self, t: usize, w: usize) -> Result<Vec<u8>, JsError> {
        (0..self.scene.n_humans())
            .map(|p| ground_truth_window_label(&self.scene, t, w, p).map(u8::from).map_err(js_err))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_hits_and_misses() {
        let d = slab_test(&[-5.0, 0.0, 0.5], &[5.0, 0.0, 0.5], &[0.0, 0.0, 0.5], &[1.0, 1.0, 1.0], 0.0).unwrap();
        assert!((d - 4.0).abs() < 1e-12);
        let miss = slab_test(&[-5.0, 3.0, 0.5], &[5.0, 3.0, 0.5], &[0.0, 0.0, 0.5], &[1.0, 1.0, 1.0], 0.3).unwrap();
        assert!(miss.is_nan());
    }

    #[test]
    fn oracle_boxes_cover_true_blockage() {
        let d = DemoScene::new(8, 4).unwrap();
        let (mut agree, mut total) = (0, 0);
        for t in (20..d.n_frames() - 10).step_by(7) {
            let pred = d.predict(t, 3, false).unwrap();
            let truth = d.truth(t, 3).unwrap();
            for (p, g) in pred.iter().zip(&truth) {
                total += 1;
                agree += usize::from((*p > 0) == (*g == 1));
            }
        }
        assert!(agree as f64 / total as f64 > 0.9, "{agree}/{total}");
    }
}
