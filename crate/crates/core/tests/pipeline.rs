use proptest::prelude::*;

use lidar_blockage::blockage::{predict_blockage, BBox, BlockageOptions, BoxMode, TrackedBox};
use lidar_blockage::eval::{run_experiment, DetectionSource, ExperimentConfig, ForecastSource};
use lidar_blockage::geometry::{Aabb, Obb, Vec2, Vec3};
use lidar_blockage::scene::{generate_scene, ground_truth_window_label, SceneConfig};
use lidar_blockage::trajpred::TrajectoryForecast;

const TX: Vec3 = Vec3 { x: 12.5, y: 0.0, z: 3.0 };

fn person() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64)> {
    (-10.0..10.0f64, -10.0..10.0f64, -0.15..0.15f64, -0.15..0.15f64, 0.1..0.35f64, -3.0..3.0f64)
}

fn case(people: &[(f64, f64, f64, f64, f64, f64)], obb: bool) -> (Vec<TrackedBox>, Vec<TrajectoryForecast>) {
    let mut tracks = Vec::new();
    let mut forecasts = Vec::new();
    for (i, &(x, y, vx, vy, r, turn)) in people.iter().enumerate() {
        let pos = Vec2::new(x, y);
        let aabb = Aabb::new(Vec3::new(x - r, y - r, 0.0), Vec3::new(x + r, y + r, 1.7)).unwrap();
        let bbox = if obb { BBox::Obb(Obb::from_aabb(&aabb)) } else { BBox::Aabb(aabb) };
        let mut v = Vec2::new(vx, vy);
        let mut p = pos;
        let (mut positions, mut velocities) = (Vec::new(), Vec::new());
        for _ in 0..9 {
            v = v.rotated(turn * 0.05);
            p += v;
            positions.push(p);
            velocities.push(v);
        }
        tracks.push(TrackedBox {
            id: i as u64,
            position: pos,
            last_step: Vec2::new(vx, vy),
            bbox,
        });
        forecasts.push(TrajectoryForecast {
            track_id: i as u64,
            positions,
            velocities,
            params: Vec::new(),
        });
    }
    (tracks, forecasts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pruning_never_changes_a_report(people in prop::collection::vec(person(), 1..10), obb: bool, w in 1usize..=9) {
        let (tracks, forecasts) = case(&people, obb);
        let pruned = predict_blockage(&tracks, &forecasts, TX, w, &BlockageOptions::default()).unwrap();
        let full = predict_blockage(&tracks, &forecasts, TX, w, &BlockageOptions { prune: false, ..Default::default() }).unwrap();
        prop_assert_eq!(pruned, full);
    }

    #[test]
    fn predicted_labels_are_monotone_in_window(people in prop::collection::vec(person(), 1..10), obb: bool) {
        let (tracks, forecasts) = case(&people, obb);
        let mut prev: Option<Vec<bool>> = None;
        for w in 1..=9 {
            let r = predict_blockage(&tracks, &forecasts, TX, w, &BlockageOptions::default()).unwrap();
            let now: Vec<bool> = r.iter().map(|x| x.blocked).collect();
            for x in &r {
                if let Some(s) = x.first_step {
                    prop_assert!(s >= 1 && s <= w);
                }
            }
            if let Some(p) = &prev {
                prop_assert!(p.iter().zip(&now).all(|(a, b)| !a || *b));
            }
            prev = Some(now);
        }
    }

    #[test]
    fn identity_obb_matches_aabb_blockage(people in prop::collection::vec(person(), 1..8), w in 1usize..=9) {
        // with no turn an identity OBB is the same box as the AABB
        let still: Vec<_> = people.iter().map(|p| (p.0, p.1, p.2, p.3, p.4, 0.0)).collect();
        let (mut a_tracks, a_fc) = case(&still, false);
        let (o_tracks, _) = case(&still, true);
        for t in &mut a_tracks {
            t.last_step = Vec2::ZERO;
        }
        let mut o_tracks = o_tracks;
        for t in &mut o_tracks {
            t.last_step = Vec2::ZERO;
        }
        let a = predict_blockage(&a_tracks, &a_fc, TX, w, &BlockageOptions::default()).unwrap();
        let o = predict_blockage(&o_tracks, &a_fc, TX, w, &BlockageOptions::default()).unwrap();
        let la: Vec<_> = a.iter().map(|r| (r.blocked, r.first_step, r.blocker)).collect();
        let lo: Vec<_> = o.iter().map(|r| (r.blocked, r.first_step, r.blocker)).collect();
        prop_assert_eq!(la, lo);
    }
}

#[test]
fn ground_truth_labels_grow_with_window() {
    let scene = generate_scene(&SceneConfig { n_humans: 8, rng_seed: 5, ..SceneConfig::default() }).unwrap();
    for t in (0..scene.n_frames() - 10).step_by(5) {
        for p in 0..scene.n_humans() {
            let labels: Vec<bool> = (1..=9).map(|w| ground_truth_window_label(&scene, t, w, p).unwrap()).collect();
            assert!(labels.windows(2).all(|x| !x[0] || x[1]), "t {t} p {p}: {labels:?}");
        }
    }
}

#[test]
fn oracle_experiment_is_consistent_across_windows() {
    let scenes: Vec<_> = (0..3)
        .map(|i| generate_scene(&SceneConfig { n_humans: 6, duration: 120, rng_seed: 40 + i, ..SceneConfig::default() }).unwrap())
        .collect();
    let cfg = ExperimentConfig {
        detection: DetectionSource::GroundTruth { noise_sigma: 0.0 },
        forecast: ForecastSource::GroundTruth,
        workers: 2,
        ..ExperimentConfig::default()
    };
    let r = run_experiment(&scenes, None, &cfg).unwrap();
    for mode in BoxMode::ALL {
        let rows: Vec<_> = (1..=9).map(|w| r.row(mode, w).unwrap()).collect();
        let total = rows[0].counts.total();
        assert!(total > 0);
        for pair in rows.windows(2) {
            // same anchors for every w, and labels only switch on as w grows
            assert_eq!(pair[1].counts.total(), total);
            assert!(pair[1].counts.tp + pair[1].counts.fp >= pair[0].counts.tp + pair[0].counts.fp);
            assert!(pair[1].counts.tp + pair[1].counts.fn_ >= pair[0].counts.tp + pair[0].counts.fn_);
        }
        // exact future positions and true-size boxes never miss a blockage
        assert!(rows.iter().all(|x| x.recall.is_none_or(|v| v > 0.99)), "{rows:?}");
    }
    let again = run_experiment(&scenes, None, &ExperimentConfig { workers: 1, ..cfg }).unwrap();
    assert_eq!(r.to_json().unwrap(), again.to_json().unwrap());
}
