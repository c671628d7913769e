mod common;

use std::fs;
use std::path::Path;

use common::{medmark, run, run_in, run_with};
use medmark_core::{save_image, BitDepth, ImageGray};

fn small_image(path: &Path, size: usize, value: f64) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    let px = (0..size * size)
        .map(|i| value + 0.1 * ((i % 7) as f64 / 7.0))
        .collect();
    save_image(
        &ImageGray::from_pixels(size, size, px).unwrap(),
        path,
        BitDepth::Eight,
    )
    .unwrap();
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn embed_detect_and_extract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        run_in(d, &["gen-corpus", "corpus", "-n", "10", "--seed", "3"]).code,
        0
    );

    let embed = run_in(d, &["embed", "corpus", "marked"]);
    assert_eq!(embed.code, 0, "{}", embed.stderr);
    let summary = embed.json();
    let files = summary["files"].as_array().unwrap();
    assert_eq!(files.len(), 10);
    assert!(files.iter().all(|f| f["psnr_db"].as_f64().unwrap() >= 38.0));
    assert!(files.iter().all(|f| f["votes_per_bit"] == 46));
    assert!(d.join("marked/class_b/img_00009.png").is_file());
    assert_eq!(summary["run"]["codec"]["quant_step"], 0.072);

    let marked = run_in(d, &["detect", "marked"]);
    assert_eq!(marked.code, 0);
    assert_eq!(marked.json()["n_detected"], 10);

    let originals = run_in(d, &["detect", "corpus"]);
    assert_eq!(originals.code, 3);
    assert_eq!(originals.json()["n_detected"], 0);

    fs::copy(
        d.join("corpus/class_a/img_00000.png"),
        d.join("marked/class_a/plain.png"),
    )
    .unwrap();
    let mixed = run_in(d, &["detect", "marked"]);
    assert_eq!(mixed.code, 3);
    let verdicts: Vec<(String, bool)> = mixed.json()["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| {
            (
                f["path"].as_str().unwrap().to_string(),
                f["detected"].as_bool().unwrap(),
            )
        })
        .collect();
    assert_eq!(verdicts.len(), 11);
    for (path, detected) in &verdicts {
        assert_eq!(*detected, !path.ends_with("plain.png"), "{path}");
    }

    let one = run_in(d, &["extract", "marked/class_a/img_00002.png"]);
    assert_eq!(one.code, 0);
    assert_eq!(one.json()["files"][0]["decoded_text"], "synthetic");
    assert_eq!(one.json()["files"][0]["bit_accuracy"], 1.0);

    let res = run_in(
        d,
        &[
            "residual",
            "corpus/class_a/img_00000.png",
            "marked/class_a/img_00000.png",
            "res.png",
        ],
    );
    assert_eq!(res.code, 0);
    let r = medmark_core::load_image(d.join("res.png")).unwrap();
    assert_eq!(r.pixels().iter().cloned().fold(f64::MAX, f64::min), 0.0);
    assert_eq!(r.pixels().iter().cloned().fold(f64::MIN, f64::max), 1.0);
}

#[test]
fn embed_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for i in 0..3 {
        small_image(&d.join(format!("tiny/{i}.png")), 8, 0.3);
    }
    let tiny = run_in(d, &["embed", "tiny", "out"]);
    assert_eq!(tiny.code, 2);
    let json = tiny.json();
    assert_eq!(json["n_skipped"], 3);
    assert_eq!(json["files"][0]["capacity_bits"], 1);
    assert!(json["files"][0]["error"].as_str().unwrap().contains("88"));

    fs::create_dir(d.join("empty")).unwrap();
    let empty = run_in(d, &["embed", "empty", "out"]);
    assert_eq!(empty.code, 1);
    assert!(empty.stderr.contains("no inputs"), "{}", empty.stderr);

    let detect_bad = {
        fs::create_dir(d.join("bad")).unwrap();
        write(&d.join("bad/broken.png"), "not a png");
        run_in(d, &["detect", "bad"])
    };
    assert_eq!(detect_bad.code, 3);
    assert_eq!(detect_bad.json()["files"][0]["detected"], false);
    assert!(detect_bad.json()["files"][0]["error"].is_string());
}

#[test]
fn quality_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for i in 0..5 {
        small_image(&d.join(format!("set/{i}.png")), 48, 0.1 + 0.15 * i as f64);
    }
    let selfq = run_in(d, &["quality", "set", "set"]);
    assert_eq!(selfq.code, 0, "{}", selfq.stderr);
    let q = selfq.json();
    assert_eq!(q["fidelity"], 1.0);
    assert!(q["fid"].as_f64().unwrap() <= 1e-6);
    assert_eq!(q["privacy"], 0.0);
    assert!(q["variety_bytes"].as_f64().unwrap() > 0.0);
    assert_eq!(q["psnr_mean_db"], serde_json::Value::Null);
    assert_eq!(q["psnr_infinite"], false);
    assert_eq!(q["config"]["tau"], "auto");

    let fs = medmark_core::FeatureSet::new(
        vec![vec![0.0; 4], vec![1.0; 4]],
        vec!["a".into(), "b".into()],
    )
    .unwrap();
    medmark_core::write_features(&fs, d.join("x.feat")).unwrap();
    let mismatch = run_in(d, &["quality", "set", "x.feat"]);
    assert_eq!(mismatch.code, 1);
    assert!(mismatch.stderr.contains("dimension"), "{}", mismatch.stderr);

    let feat_only = run_in(
        d,
        &[
            "quality",
            "x.feat",
            "x.feat",
            "--tau",
            "0.5",
            "--synth-is-real",
        ],
    );
    assert_eq!(feat_only.code, 0, "{}", feat_only.stderr);
    let q = feat_only.json();
    assert_eq!(q["variety_bytes"], serde_json::Value::Null);
    assert_eq!(q["privacy"], serde_json::Value::Null);
    assert_eq!(q["config"]["tau_used"], 0.5);

    let cmp = run_in(d, &["quality", "set", "set", "--compare", "set"]);
    assert_eq!(cmp.code, 0);
    let c = cmp.json();
    assert_eq!(c["relative_deltas"]["fidelity"], 0.0);
    assert_eq!(c["compared"]["psnr_infinite"], true);
}

#[test]
fn utility_stats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // ids 0-9: baseline wrong, augmented right; 10-11: the reverse; 12-19 both right
    let mut base = String::from("id,label,pred\n");
    let mut aug = String::from("id,label,pred\n");
    for i in 0..20 {
        let (pa, pb) = match i {
            0..=9 => (0, 1),
            10..=11 => (1, 0),
            _ => (1, 1),
        };
        base += &format!("s{i:02},1,{pa}\n");
        aug += &format!("s{i:02},1,{pb}\n");
    }
    write(&d.join("a.csv"), &base);
    write(&d.join("b.csv"), &aug);

    let r = run_in(d, &["utility-stats", "a.csv", "b.csv"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let j = r.json();
    assert_eq!(j["mcnemar"]["b"], 10);
    assert_eq!(j["mcnemar"]["c"], 2);
    assert_eq!(j["mcnemar"]["method"], "chi2_cc");
    assert!((j["mcnemar"]["p_value"].as_f64().unwrap() - 0.0433).abs() < 1e-4);
    assert_eq!(j["significant"], true);
    assert!((j["delta"].as_f64().unwrap() - 0.4).abs() < 1e-12);

    let same = run_in(d, &["utility-stats", "a.csv", "a.csv"]);
    assert_eq!(same.code, 0);
    let j = same.json();
    assert_eq!(j["delta"], 0.0);
    assert_eq!(j["mcnemar"], serde_json::Value::Null);
    assert!(j["notice"].as_str().unwrap().contains("discordant"));

    write(&d.join("short.csv"), "id,label,pred\ns00,1,1\n");
    let missing = run_in(d, &["utility-stats", "a.csv", "short.csv"]);
    assert_eq!(missing.code, 1);
    assert!(missing.stderr.contains("missing"), "{}", missing.stderr);
}

#[test]
fn corpus_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let first = run_in(d, &["gen-corpus", "c1", "-n", "4", "--seed", "9"]);
    let second = run_in(d, &["gen-corpus", "c2", "-n", "4", "--seed", "9"]);
    assert_eq!((first.code, second.code), (0, 0));
    for rel in ["class_a/img_00000.png", "class_b/img_00003.png"] {
        assert_eq!(
            fs::read(d.join("c1").join(rel)).unwrap(),
            fs::read(d.join("c2").join(rel)).unwrap()
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("c1/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["entries"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["entries"][0]["label"], "class_a");

    assert_eq!(run_in(d, &["gen-corpus", "c3", "-n", "0"]).code, 1);
}

#[test]
fn config_file_threads_and_usage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_image(&d.join("imgs/a.png"), 64, 0.4);
    write(
        &d.join("cfg.toml"),
        "step = 0.05\nthreshold = 0.9\ntext = \"hi\"\n",
    );

    let from_file = run_in(d, &["--config", "cfg.toml", "detect", "imgs"]);
    let run_cfg = &from_file.json()["run"];
    assert_eq!(run_cfg["codec"]["quant_step"], 0.05);
    assert_eq!(run_cfg["threshold"], 0.9);
    assert_eq!(run_cfg["text"], "hi");

    let flag_wins = run_in(
        d,
        &["detect", "imgs", "--config", "cfg.toml", "--step", "0.1"],
    );
    assert_eq!(flag_wins.json()["run"]["codec"]["quant_step"], 0.1);

    write(&d.join("bad.toml"), "stepp = 1\n");
    assert_eq!(
        run_in(d, &["--config", "bad.toml", "detect", "imgs"]).code,
        1
    );
    assert_eq!(
        run_in(d, &["--config", "nope.toml", "detect", "imgs"]).code,
        1
    );

    let env = run_with(
        medmark()
            .current_dir(d)
            .env("MEDMARK_THREADS", "2")
            .args(["detect", "imgs"]),
    );
    assert_eq!(env.code, 3);
    let bad_env = run_with(
        medmark()
            .current_dir(d)
            .env("MEDMARK_THREADS", "lots")
            .args(["detect", "imgs"]),
    );
    assert_eq!(bad_env.code, 1);

    assert_eq!(run(&["frobnicate"]).code, 1);
    assert_eq!(run(&["embed"]).code, 1);
    assert_eq!(run(&["--help"]).code, 0);
    assert_eq!(run(&["detect", "imgs", "--coeff", "0,0"]).code, 1);
}

#[test]
fn report_file_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_image(&d.join("imgs/a.png"), 64, 0.4);
    let r = run_in(d, &["detect", "imgs", "--report", "out.json"]);
    assert_eq!(r.code, 3);
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("out.json")).unwrap()).unwrap();
    assert_eq!(saved["command"], "detect");
    assert!(r
        .stdout
        .lines()
        .any(|l| l.starts_with("files[0].detected") && l.ends_with("false")));
}
