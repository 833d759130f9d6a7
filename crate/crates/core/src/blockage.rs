//! Ray-casting blockage prediction over a forecast window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{slab_intersect_aabb, slab_intersect_obb, Aabb, Mat3, Obb, Segment, Vec2, Vec3};
use crate::trajpred::TrajectoryForecast;

/// Steps shorter than this carry no usable heading.
pub const MIN_HEADING_STEP: f64 = 0.05;

/// Absorbs rounding in the pruning bounds so they never reject a box the
/// slab test would hit.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxMode {
    Aabb,
    Obb,
}

impl BoxMode {
    pub const ALL: [BoxMode; 2] = [BoxMode::Aabb, BoxMode::Obb];

    pub fn name(self) -> &'static str {
        match self {
            BoxMode::Aabb => "aabb",
            BoxMode::Obb => "obb",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BBox {
    Aabb(Aabb),
    Obb(Obb),
}

impl BBox {
    pub fn center(&self) -> Vec3 {
        match self {
            BBox::Aabb(b) => b.center(),
            BBox::Obb(b) => b.box_center(),
        }
    }

    pub fn corners(&self) -> [Vec3; 8] {
        match self {
            BBox::Aabb(b) => b.corners(),
            BBox::Obb(b) => b.corners(),
        }
    }

    /// Largest ground-plane distance from the center to a corner.
    pub fn xy_circumradius(&self) -> f64 {
        let c = self.center().xy();
        self.corners()
            .iter()
            .map(|k| k.xy().distance(c))
            .fold(0.0, f64::max)
    }
}

/// Moves a box from the current ground-plane position to a predicted one.
/// An OBB is also turned about the vertical axis by the angle from
/// `current_step` to `predicted_step` when both are longer than
/// [`MIN_HEADING_STEP`].
pub fn bounding_box_transform(
    bbox: &BBox,
    current: Vec2,
    predicted: Vec2,
    current_step: Vec2,
    predicted_step: Vec2,
) -> BBox {
    let d = predicted - current;
    let shift = Vec3::new(d.x, d.y, 0.0);
    match bbox {
        BBox::Aabb(b) => BBox::Aabb(b.translated(shift)),
        BBox::Obb(b) => {
            let turn = if current_step.norm() > MIN_HEADING_STEP && predicted_step.norm() > MIN_HEADING_STEP {
                current_step.perp_dot(predicted_step).atan2(current_step.dot(predicted_step))
            } else {
                0.0
            };
            if turn == 0.0 {
                let mut out = *b;
                out.center += shift;
                return BBox::Obb(out);
            }
            let r = Mat3::rot_z(turn);
            let pivot = current.extend(0.0);
            BBox::Obb(Obb {
                min_obj: b.min_obj,
                max_obj: b.max_obj,
                rotation: r.mul_mat(&b.rotation),
                center: r.mul_vec(b.center - pivot) + pivot + shift,
            })
        }
    }
}

/// Entry distance of the segment `tx → target` into the box.
pub fn check_intersect(tx: Vec3, target: Vec3, bbox: &BBox) -> Option<f64> {
    let seg = Segment::new(tx, target).ok()?;
    match bbox {
        BBox::Aabb(b) => slab_intersect_aabb(&seg, b),
        BBox::Obb(b) => slab_intersect_obb(&seg, b),
    }
}

/// One tracked person at the evaluation frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackedBox {
    pub id: u64,
    pub position: Vec2,
    /// Displacement over the last frame, used as the current heading.
    pub last_step: Vec2,
    pub bbox: BBox,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockageOptions {
    pub prune: bool,
    /// Inverted distance test: keep only boxes farther from the transmitter
    /// than the target. Drops real blockers; for comparison only.
    pub prune_keeps_farther: bool,
}

impl Default for BlockageOptions {
    fn default() -> Self {
        BlockageOptions {
            prune: true,
            prune_keeps_farther: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockageReport {
    pub id: u64,
    pub blocked: bool,
    /// 1-based step of the first predicted blockage.
    pub first_step: Option<usize>,
    pub blocker: Option<u64>,
    pub distance: Option<f64>,
}

/// Labels each person's link over the next `w` forecast steps. Returns the
/// reports in track order and the number of box tests performed.
pub fn predict_blockage_counted(
    tracks: &[TrackedBox],
    forecasts: &[TrajectoryForecast],
    tx: Vec3,
    w: usize,
    opts: &BlockageOptions,
) -> Result<(Vec<BlockageReport>, usize)> {
    if tracks.len() != forecasts.len() {
        return Err(Error::LengthMismatch {
            what: "tracks vs forecasts",
            left: tracks.len(),
            right: forecasts.len(),
        });
    }
    for (t, f) in tracks.iter().zip(forecasts) {
        if t.id != f.track_id {
            return Err(Error::invalid(format!(
                "forecast for track {} is aligned with track {}",
                f.track_id, t.id
            )));
        }
        if f.positions.len() < w {
            return Err(Error::invalid(format!(
                "forecast for track {} has {} steps, window needs {w}",
                t.id,
                f.positions.len()
            )));
        }
    }
    let n = tracks.len();
    let mut reports: Vec<BlockageReport> = tracks
        .iter()
        .map(|t| BlockageReport {
            id: t.id,
            blocked: false,
            first_step: None,
            blocker: None,
            distance: None,
        })
        .collect();
    let mut tests = 0;
    let mut boxes = Vec::with_capacity(n);
    for step in 0..w {
        boxes.clear();
        for (t, f) in tracks.iter().zip(forecasts) {
            let prev = if step == 0 { t.position } else { f.positions[step - 1] };
            let pred = f.positions[step];
            boxes.push(bounding_box_transform(&t.bbox, t.position, pred, t.last_step, pred - prev));
        }
        let centers: Vec<Vec3> = boxes.iter().map(|b| b.center()).collect();
        let radii: Vec<f64> = if opts.prune {
            boxes.iter().map(|b| b.xy_circumradius()).collect()
        } else {
            Vec::new()
        };
        for q in 0..n {
            if reports[q].blocked {
                continue;
            }
            let target = centers[q];
            let u = target.xy() - tx.xy();
            let u_len = u.norm();
            let mut best: Option<(usize, f64)> = None;
            for p in (0..n).filter(|&p| p != q) {
                if opts.prune {
                    let v = centers[p].xy() - tx.xy();
                    let r = radii[p] + PRUNE_SLACK;
                    // same side of the transmitter as the target
                    if u.dot(v) < -r * u_len {
                        continue;
                    }
                    let nearer = if opts.prune_keeps_farther {
                        u_len < v.norm()
                    } else {
                        v.norm() <= u_len + r
                    };
                    if !nearer {
                        continue;
                    }
                }
                tests += 1;
                if let Some(d) = check_intersect(tx, target, &boxes[p]) {
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((p, d));
                    }
                }
            }
            if let Some((p, d)) = best {
                reports[q] = BlockageReport {
                    id: tracks[q].id,
                    blocked: true,
                    first_step: Some(step + 1),
                    blocker: Some(tracks[p].id),
                    distance: Some(d),
                };
            }
        }
    }
    Ok((reports, tests))
}

pub fn predict_blockage(
    tracks: &[TrackedBox],
    forecasts: &[TrajectoryForecast],
    tx: Vec3,
    w: usize,
    opts: &BlockageOptions,
) -> Result<Vec<BlockageReport>> {
    predict_blockage_counted(tracks, forecasts, tx, w, opts).map(|(r, _)| r)
}

pub const BLOCKAGE_CSV_HEADER: &str = "scene,t_e,w,id,label,blocker,first_step";

pub fn blockage_csv_row(scene: usize, t_e: usize, w: usize, r: &BlockageReport, out: &mut String) {
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    out.push_str(&format!(
        "{scene},{t_e},{w},{},{},{},{}\n",
        r.id,
        u8::from(r.blocked),
        opt(r.blocker),
        opt(r.first_step.map(|s| s as u64)),
    ));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn person_box(at: Vec2) -> BBox {
        BBox::Aabb(
            Aabb::new(
                Vec3::new(at.x - 0.25, at.y - 0.25, 0.0),
                Vec3::new(at.x + 0.25, at.y + 0.25, 1.7),
            )
            .unwrap(),
        )
    }

    fn still(id: u64, at: Vec2, w: usize) -> (TrackedBox, TrajectoryForecast) {
        moving(id, at, Vec2::ZERO, w)
    }

    fn moving(id: u64, at: Vec2, v: Vec2, w: usize) -> (TrackedBox, TrajectoryForecast) {
        let t = TrackedBox {
            id,
            position: at,
            last_step: v,
            bbox: person_box(at),
        };
        let positions: Vec<Vec2> = (1..=w).map(|k| at + v * k as f64).collect();
        let f = TrajectoryForecast {
            track_id: id,
            velocities: vec![v; w],
            params: Vec::new(),
            positions,
        };
        (t, f)
    }

    const TX: Vec3 = Vec3::new(12.5, 0.0, 3.0);

    #[test]
    fn lone_person_is_never_blocked() {
        let (t, f) = still(4, Vec2::new(1.0, 2.0), 9);
        let r = predict_blockage(&[t], &[f], TX, 9, &BlockageOptions::default()).unwrap();
        assert!(!r[0].blocked && r[0].blocker.is_none() && r[0].first_step.is_none());
    }

    #[test]
    fn crossing_blocker_hits_at_step_three() {
        // target at the origin; link runs along +x toward the transmitter.
        // blocker walks along +y at x = 5 and reaches the link at step 3.
        let (tq, fq) = still(1, Vec2::ZERO, 6);
        let v = Vec2::new(0.0, 0.3);
        let (tp, fp) = moving(2, Vec2::new(5.0, -0.9 - 0.05), v, 6);
        let opts = BlockageOptions::default();
        let r = predict_blockage(&[tq, tp], &[fq.clone(), fp.clone()], TX, 6, &opts).unwrap();
        assert!(r[0].blocked);
        assert_eq!(r[0].first_step, Some(3));
        assert_eq!(r[0].blocker, Some(2));

        // independent check: per-step segment vs box without any pruning
        let mut first = None;
        for k in 0..6 {
            let b = person_box(fp.positions[k]);
            let c = person_box(fq.positions[k]).center();
            if first.is_none() && check_intersect(TX, c, &b).is_some() {
                first = Some(k + 1);
            }
        }
        assert_eq!(first, Some(3));
        // a shorter window stops before the crossing
        let r2 = predict_blockage(&[tq, tp], &[fq, fp], TX, 2, &opts).unwrap();
        assert!(!r2[0].blocked);
    }

    #[test]
    fn boxes_beyond_the_target_do_not_block() {
        let (tq, fq) = still(1, Vec2::new(5.0, 0.0), 3);
        let (tp, fp) = still(2, Vec2::new(2.0, 0.0), 3);
        let r = predict_blockage(&[tq, tp], &[fq, fp], TX, 3, &BlockageOptions::default()).unwrap();
        // only the person farther from the transmitter is blocked
        assert!(!r[0].blocked);
        assert!(r[1].blocked);
        assert_eq!(r[1].blocker, Some(1));
    }

    #[test]
    fn mismatched_inputs_are_errors() {
        let (t, f) = still(1, Vec2::ZERO, 3);
        let (_, mut g) = still(2, Vec2::ZERO, 3);
        let opts = BlockageOptions::default();
        assert!(predict_blockage(&[t], &[g.clone()], TX, 3, &opts).is_err());
        assert!(predict_blockage(&[t], &[], TX, 3, &opts).is_err());
        g.track_id = 1;
        g.positions.truncate(2);
        assert!(predict_blockage(&[t], &[g], TX, 3, &opts).is_err());
        assert!(predict_blockage(&[t], &[f], TX, 3, &opts).is_ok());
    }

    #[test]
    fn zero_displacement_is_identity() {
        let o = Obb::new(
            Vec3::new(-0.3, -0.2, -0.8),
            Vec3::new(0.3, 0.2, 0.8),
            Mat3::rot_z(0.4),
            Vec3::new(1.0, 2.0, 0.85),
        )
        .unwrap();
        let p = Vec2::new(1.0, 2.0);
        assert_eq!(bounding_box_transform(&BBox::Obb(o), p, p, Vec2::ZERO, Vec2::ZERO), BBox::Obb(o));
        let a = person_box(p);
        let BBox::Aabb(moved) = bounding_box_transform(&a, p, p + Vec2::new(1.0, 2.0), Vec2::ZERO, Vec2::ZERO)
        else {
            panic!()
        };
        let BBox::Aabb(orig) = a else { panic!() };
        assert_eq!(moved.min, orig.min + Vec3::new(1.0, 2.0, 0.0));
        assert_eq!(moved.max, orig.max + Vec3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn obb_quarter_turn_matches_hand_rotated_corners() {
        let p = Vec2::new(2.0, -1.0);
        let o = Obb::new(
            Vec3::new(-0.3, -0.1, -0.85),
            Vec3::new(0.3, 0.1, 0.85),
            Mat3::IDENTITY,
            p.extend(0.85),
        )
        .unwrap();
        let q = Vec2::new(2.5, -0.5);
        let out = bounding_box_transform(&BBox::Obb(o), p, q, Vec2::new(0.1, 0.0), Vec2::new(0.0, 0.2));
        let BBox::Obb(r) = out else { panic!() };
        assert_eq!(r.min_obj, o.min_obj);
        assert_eq!(r.max_obj, o.max_obj);
        // rotate each corner by +90° about p by hand: (x, y) -> (-y, x)
        let mut expect: Vec<Vec3> = o
            .corners()
            .iter()
            .map(|c| {
                let d = c.xy() - p;
                Vec3::new(q.x - d.y, q.y + d.x, c.z)
            })
            .collect();
        let mut got = r.corners().to_vec();
        let key = |v: &Vec3| ((v.x * 1e6).round() as i64, (v.y * 1e6).round() as i64, (v.z * 1e6).round() as i64);
        expect.sort_by_key(key);
        got.sort_by_key(key);
        for (a, b) in expect.iter().zip(&got) {
            assert!((*a - *b).norm() < 1e-9);
        }
        // short steps: translation only
        let BBox::Obb(t) = bounding_box_transform(&BBox::Obb(o), p, q, Vec2::new(0.01, 0.0), Vec2::new(0.0, 0.2))
        else {
            panic!()
        };
        assert_eq!(t.rotation, o.rotation);
    }

    #[test]
    fn aabb_and_identity_obb_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let mut v = || Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.0..3.0));
            let (a, b, c, d) = (v(), v(), v(), v());
            let aabb = Aabb::new(c.min(d), c.max(d)).unwrap();
            if (a - b).norm() < 1e-9 {
                continue;
            }
            assert_eq!(
                check_intersect(a, b, &BBox::Aabb(aabb)),
                check_intersect(a, b, &BBox::Obb(Obb::from_aabb(&aabb)))
            );
        }
    }

    #[test]
    fn midpoint_box_hit_distance() {
        let a = Vec3::new(0.0, 0.0, 1.0);
        let b = Vec3::new(4.0, 0.0, 1.0);
        let bx = Aabb::new(Vec3::new(1.5, -0.5, 0.5), Vec3::new(2.5, 0.5, 1.5)).unwrap();
        assert_eq!(check_intersect(a, b, &BBox::Aabb(bx)), Some(1.5));
        let far = Aabb::new(Vec3::new(5.0, -0.5, 0.5), Vec3::new(6.0, 0.5, 1.5)).unwrap();
        assert_eq!(check_intersect(a, b, &BBox::Aabb(far)), None);
    }
}
