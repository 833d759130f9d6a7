use std::path::Path;
use std::process::Command;

use lidar_blockage::cli::{self, RunConfig, EXIT_DATA, EXIT_OK, EXIT_USAGE};

const BIN: &str = env!("CARGO_BIN_EXE_lidar-blockage");

fn manifest(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        "seed = 3\nworkers = 1\n[paths]\nscene_dir = {:?}\nmodel = {:?}\nloss_log = {:?}\nreport_dir = {:?}\n\
         [dataset]\nn_scenes = 3\ntrain_scenes = 1\n[scene]\nn_humans = 3\nduration = 60\n\
         [train]\nepochs = 1\nd_emb = 4\nd_h = 6\n[evaluate]\nwindows = [1, 3]\n",
        dir.join("scenes"),
        dir.join("model.lbnt"),
        dir.join("losses.csv"),
        dir.join("report"),
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn run(m: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["lidar-blockage", "--config", m.to_str().unwrap()];
    full.extend_from_slice(args);
    cli::run(full)
}

#[test]
fn unknown_subcommand_and_bad_flag_are_usage_errors() {
    assert_eq!(cli::run(["lidar-blockage", "frobnicate"]), EXIT_USAGE);
    assert_eq!(cli::run(["lidar-blockage", "train", "--epochs", "many"]), EXIT_USAGE);
    assert_eq!(cli::run(["lidar-blockage", "gen-scenes", "--n", "0"]), EXIT_USAGE);
    assert_eq!(cli::run(["lidar-blockage", "--help"]), EXIT_OK);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = 1\nno_such_key = 2\n").unwrap();
    assert_eq!(run(&path, &["gen-scenes"]), EXIT_USAGE);
}

#[test]
fn missing_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path());
    assert_eq!(run(&m, &["train"]), EXIT_DATA);
    assert_eq!(run(&m, &["report", "--report", dir.path().join("nowhere").to_str().unwrap()]), EXIT_DATA);
    assert_eq!(cli::run(["lidar-blockage", "--config", "/no/such/file.toml", "train"]), EXIT_DATA);
}

#[test]
fn flags_override_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path());
    let out = Command::new(BIN)
        .args(["--config", m.to_str().unwrap(), "--seed", "99", "--print-config", "gen-scenes", "--humans", "7"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let cfg = RunConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.seed, 99);
    assert_eq!(cfg.scene.n_humans, 7);
    // untouched manifest values survive
    assert_eq!(cfg.scene.duration, 60);
    assert_eq!(cfg.dataset.n_scenes, 3);
}

#[test]
fn gen_scenes_is_reproducible_file_for_file() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&m, &["gen-scenes", "--out", a.to_str().unwrap()]), EXIT_OK);
    assert_eq!(run(&m, &["gen-scenes", "--out", b.to_str().unwrap()]), EXIT_OK);
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap());
    }
    let c = dir.path().join("c");
    assert_eq!(run(&m, &["--seed", "4", "gen-scenes", "--out", c.to_str().unwrap()]), EXIT_OK);
    assert_ne!(
        std::fs::read(a.join("scene_0000.json")).unwrap(),
        std::fs::read(c.join("scene_0000.json")).unwrap()
    );
}

#[test]
fn full_run_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path());
    let m = m.to_str().unwrap();
    for args in [
        vec!["gen-scenes"],
        vec!["train"],
        vec!["simulate", "--scene", "1", "--max-frames", "5"],
        vec!["evaluate"],
        vec!["report"],
    ] {
        let out = Command::new(BIN)
            .arg("--config")
            .arg(m)
            .args(&args)
            .env("LIDAR_BLOCKAGE_LOG", "warn")
            .output()
            .unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        if args == ["report"] {
            let text = String::from_utf8(out.stdout).unwrap();
            assert!(text.contains("aabb") && text.contains("obb"), "{text}");
        }
    }
    for f in ["report.json", "metrics.csv", "ade.csv"] {
        assert!(dir.path().join("report").join(f).is_file(), "{f}");
    }
    assert!(dir.path().join("model.lbnt").is_file());
    assert!(dir.path().join("losses.csv").is_file());
}

#[test]
fn oracle_evaluation_needs_no_model() {
    let dir = tempfile::tempdir().unwrap();
    let m = manifest(dir.path());
    assert_eq!(run(&m, &["gen-scenes"]), EXIT_OK);
    assert_eq!(run(&m, &["evaluate"]), EXIT_DATA);
    assert_eq!(run(&m, &["evaluate", "--oracle"]), EXIT_OK);
}
