use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qualgate_core::cutoff::{PredictionLog, PredictionRow};
use qualgate_core::dataset::DatasetManifest;
use qualgate_core::gating::SubsetManifest;
use qualgate_core::imageops::{gaussian_blur, save_png};
use qualgate_core::metrics::ScoreTable;
use qualgate_core::rng::SeededRng;
use qualgate_core::synth;

fn qualgate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qualgate"))
        .args(args)
        .env_remove("QUALGATE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = qualgate(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("stderr not empty");
    serde_json::from_str(last).expect("last stderr line is JSON")
}

/// 100 sharp textures and 100 blurred ones; the blurred half carries the
/// low-confidence and wrong predictions.
fn write_fixture(dir: &Path) {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).unwrap();
    let mut conf = SeededRng::new(808, 0);
    let wrong = SeededRng::new(808, 1).sample_indices(100, 40);
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for k in 0..200usize {
        let base = synth::texture(64, 64, 1000 + k as u64);
        let blurred = k >= 100;
        let img = if blurred { gaussian_blur(&base, 3.0).unwrap() } else { base };
        let id = format!("img{k:03}");
        save_png(&img, &images.join(format!("{id}.png"))).unwrap();
        let (c, correct) = if blurred {
            ((0.55 + 0.05 * conf.normal()).clamp(0.0, 1.0), !wrong.contains(&(k - 100)))
        } else {
            ((0.95 + 0.02 * conf.normal()).clamp(0.0, 1.0), true)
        };
        rows.push(PredictionRow {
            image_id: id.clone(),
            confidence: c,
            predicted_label: if correct { "cat" } else { "dog" }.into(),
            true_label: "cat".into(),
        });
        ids.push(id);
    }
    DatasetManifest::from_ids(&ids).unwrap().write_csv(&dir.join("dataset.csv")).unwrap();
    let log = PredictionLog::new(rows).unwrap().to_csv_string().unwrap();
    std::fs::write(dir.join("predictions.csv"), log).unwrap();

    let samples = dir.join("samples");
    std::fs::create_dir_all(&samples).unwrap();
    for k in 0..3u64 {
        save_png(&synth::texture(64, 64, 5000 + k), &samples.join(format!("sample{k}.png"))).unwrap();
    }
}

fn run_pipeline(input: &Path, out: &Path, seed: &str) {
    let scores = out.join("scores.csv");
    let cutoffs = out.join("cutoffs.json");
    let subsets = out.join("subsets");
    ok(&["-q", "score", "--images", p(&input.join("images")), "--methods", "lapv,lapm,wavs", "--out", p(&scores)]);
    ok(&["-q", "bench", "--samples", p(&input.join("samples")), "--methods", "lapv,lapm,wavs", "--out", p(&out.join("bench"))]);
    ok(&["-q", "select", "--report", p(&out.join("bench")), "--out", p(&out.join("selection.json"))]);
    ok(&[
        "-q", "cutoff", "--scores", p(&scores), "--predictions", p(&input.join("predictions.csv")),
        "--methods", "lapv,lapm,wavs", "--out", p(&cutoffs), "--density-out", p(&out.join("density.json")),
    ]);
    ok(&[
        "-q", "filter", "--dataset", p(&input.join("dataset.csv")), "--scores", p(&scores),
        "--cutoffs", p(&cutoffs), "--out", p(&subsets),
    ]);
    ok(&[
        "-q", "subset", "--mode", "matched", "--dataset", p(&input.join("dataset.csv")),
        "--match", p(&subsets.join("high_quality.json")), "--seed", seed, "--out", p(&subsets),
    ]);
    ok(&[
        "-q", "subset", "--mode", "percent-series", "--dataset", p(&input.join("dataset.csv")),
        "--scores", p(&scores), "--methods", "lapv,lapm,wavs", "--target-n", "60", "--seed", seed,
        "--out", p(&subsets),
    ]);
}

fn artifacts(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn score_writes_one_row_per_image() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images");
    std::fs::create_dir(&images).unwrap();
    for k in 0..3 {
        save_png(&synth::texture(48, 40, k), &images.join(format!("t{k}.png"))).unwrap();
    }
    let out = dir.path().join("scores.csv");
    ok(&["score", "--images", p(&images), "--methods", "lapv,wavs", "--out", p(&out)]);
    let table = ScoreTable::read_csv(&out).unwrap();
    assert_eq!(table.image_ids().len(), 3);
    assert_eq!(table.len(), 6);
    for (_, _, e) in table.iter() {
        assert!(e.raw.is_finite() && e.raw > 0.0);
    }
}

#[test]
fn missing_input_exits_1_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("out").join("scores.csv");
    let out = qualgate(&["score", "--images", p(&dir.path().join("nope")), "--methods", "lapv", "--out", p(&out_path)]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_json(&out);
    assert_eq!(err["exit_code"], 1);
    assert_eq!(err["error"], "ValidationError");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_method_and_bad_flag_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = qualgate(&["score", "--images", p(dir.path()), "--methods", "sharpness9000", "--out", p(&dir.path().join("s.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "UnknownMethod");

    let out = qualgate(&["score", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["exit_code"], 1);

    assert_eq!(qualgate(&["--help"]).status.code(), Some(0));
}

#[test]
fn brisque_without_model_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    save_png(&synth::texture(48, 48, 1), &dir.path().join("a.png")).unwrap();
    let out = qualgate(&["score", "--images", p(dir.path()), "--methods", "brisque", "--out", p(&dir.path().join("s.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"], "ModelUnavailable");
}

#[test]
fn undecodable_image_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.png"), b"not a png").unwrap();
    let out = qualgate(&["score", "--images", p(dir.path()), "--methods", "lapv", "--out", p(&dir.path().join("s.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["exit_code"], 2);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("imgs");
    std::fs::create_dir(&images).unwrap();
    for k in 0..2 {
        save_png(&synth::texture(40, 40, k), &images.join(format!("c{k}.png"))).unwrap();
    }
    std::fs::write(
        dir.path().join("run.toml"),
        "methods = [\"lapm\"]\n\n[paths]\nimages = \"imgs\"\nout_dir = \"results\"\n",
    )
    .unwrap();
    ok(&["--config", p(&dir.path().join("run.toml")), "score"]);
    let table = ScoreTable::read_csv(&dir.path().join("results").join("scores.csv")).unwrap();
    assert_eq!(table.methods().into_iter().collect::<Vec<_>>(), ["lapm"]);
    assert_eq!(table.len(), 2);
}

#[test]
fn pipeline_gates_blurred_images_and_reports() {
    let input = tempfile::tempdir().unwrap();
    write_fixture(input.path());
    let out = tempfile::tempdir().unwrap();
    run_pipeline(input.path(), out.path(), "7");

    let hq = SubsetManifest::read(&out.path().join("subsets").join("high_quality.json")).unwrap();
    let sharp = hq.image_ids.iter().filter(|id| id[3..].parse::<usize>().unwrap() < 100).count();
    let rejected_blurred = hq
        .decisions
        .iter()
        .filter(|d| !d.accepted && d.image_id[3..].parse::<usize>().unwrap() >= 100)
        .count();
    assert!(sharp >= 95, "sharp accepted {sharp}");
    assert!(rejected_blurred >= 95, "blurred rejected {rejected_blurred}");

    let matched = SubsetManifest::read(&out.path().join("subsets").join(format!(
        "matched_random_n{}_seed7.json",
        hq.image_ids.len()
    )))
    .unwrap();
    assert_eq!(matched.image_ids.len(), hq.image_ids.len());

    let selection: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.path().join("selection.json")).unwrap()).unwrap();
    assert!(selection["voting_set"].is_array());

    let json = out.path().join("report.json");
    let rep = ok(&[
        "report", "--bench", p(&out.path().join("bench")), "--cutoffs", p(&out.path().join("cutoffs.json")),
        "--subset", p(&out.path().join("subsets")), "--json", p(&json),
    ]);
    let text = String::from_utf8_lossy(&rep.stdout);
    assert!(text.contains("high_quality"));
    assert!(text.contains("wavs"));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    for s in summary["subsets"].as_array().unwrap() {
        assert_eq!(s["veto_check"], true);
    }
    assert_eq!(summary["cutoffs"].as_array().unwrap().len(), 3);
}

#[test]
fn report_flags_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = qualgate(&["report", "--cutoffs", p(&dir.path().join("absent.json"))]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("absent:"));
}

#[test]
fn pipeline_is_byte_reproducible() {
    let input = tempfile::tempdir().unwrap();
    write_fixture(input.path());
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(input.path(), a.path(), "11");
    run_pipeline(input.path(), b.path(), "11");
    let (fa, fb) = (artifacts(a.path()), artifacts(b.path()));
    assert!(fa.len() > 10);
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (k, v) in &fa {
        assert!(v == &fb[k], "{} differs", k.display());
    }
}

#[test]
fn seed_comes_from_environment_when_not_given() {
    let input = tempfile::tempdir().unwrap();
    let ids: Vec<String> = (0..20).map(|k| format!("x{k}")).collect();
    DatasetManifest::from_ids(&ids).unwrap().write_csv(&input.path().join("d.csv")).unwrap();
    let out = input.path().join("o");
    let status = Command::new(env!("CARGO_BIN_EXE_qualgate"))
        .args(["-q", "subset", "--mode", "matched", "--dataset", p(&input.path().join("d.csv")), "--n", "5", "--out", p(&out)])
        .env("QUALGATE_SEED", "99")
        .status()
        .unwrap();
    assert!(status.success());
    let m = SubsetManifest::read(&out.join("matched_random_n5_seed99.json")).unwrap();
    assert_eq!(m.image_ids.len(), 5);
}
