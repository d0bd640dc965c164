//! End-to-end tests driving the compiled binary through the whole chain:
//! synthetic scenes -> extract -> features -> fit -> lr -> loocv -> report.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spatter::io::{self, LabelRecord};
use spatter::synth::{render_scene, scatter_ellipses, SceneConfig};
use spatter::types::Mechanism;

fn spatter_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spatter"))
}

fn run(args: &[&str]) -> Output {
    spatter_bin()
        .args(args)
        .output()
        .expect("failed to spawn spatter")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed (code {:?}):\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("non-utf8 temp path")
}

/// Renders eight labeled scenes: eccentric stains for `impact`, nearly
/// round ones for `gunshot`, so both extraction and evaluation have
/// something meaningful to chew on.
fn render_corpus(dir: &Path) -> Vec<LabelRecord> {
    fs::create_dir_all(dir).unwrap();
    let mut labels = Vec::new();
    for i in 0..4u64 {
        for (mech, b_range, ratio_range) in [
            ("impact", (12.0, 16.0), (1.5, 1.9)),
            ("gunshot", (11.0, 14.0), (1.05, 1.3)),
        ] {
            let cfg = SceneConfig {
                width: 640,
                height: 640,
                count: 16,
                b_range,
                ratio_range,
                margin: 60.0,
                ..SceneConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(900 + 10 * i + (mech == "impact") as u64);
            let ellipses = scatter_ellipses(&mut rng, &cfg);
            let img = render_scene(&ellipses, &[], &cfg);
            let id = format!("{mech}_{:02}", i + 1);
            img.save_png(&dir.join(format!("{id}.png"))).unwrap();
            labels.push(LabelRecord {
                pattern_id: id,
                mechanism: Some(Mechanism::from_label(mech)),
                distance_cm: Some(30.0 + 20.0 * i as f64),
                velocity_level: (i % 2 == 0).then(|| "high".to_string()),
            });
        }
    }
    labels
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn full_chain_from_images_to_report() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("images");
    let labels_csv = tmp.path().join("labels.csv");
    let labels = render_corpus(&images);
    io::write_labels_csv(&labels_csv, &labels).unwrap();

    // extract: one ellipse table per image plus log and manifest
    let tables = tmp.path().join("tables");
    let out = run(&[
        "extract",
        "--images",
        path_str(&images),
        "--out",
        path_str(&tables),
    ]);
    assert_ok(&out, "extract");
    assert_eq!(csv_files(&tables).len(), 8);
    assert!(tables.join("manifest.json").is_file());
    let log: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tables.join("extraction_log.json")).unwrap())
            .unwrap();
    let entries = log.as_array().unwrap();
    assert_eq!(entries.len(), 8);
    for e in entries {
        assert_eq!(e["status"], "accepted", "entry not accepted: {e}");
        assert!(e["n_ellipses"].as_u64().unwrap() >= 6);
        assert!(e["stats"]["regions_found"].as_u64().unwrap() >= 1);
    }

    // features: labels come from the sidecar, two kinds per pattern
    let feat = tmp.path().join("feat");
    let out = run(&[
        "features",
        "--ellipses",
        path_str(&tables),
        "--labels",
        path_str(&labels_csv),
        "--out",
        path_str(&feat),
    ]);
    assert_ok(&out, "features");
    let features_csv = feat.join("features.csv");
    let rows = io::read_features_csv(&features_csv).unwrap();
    assert_eq!(rows.len(), 16, "8 patterns x 2 kinds");
    assert!(rows.iter().all(|r| r.mechanism.is_some()));

    // fit: one model per mechanism for the spherical features
    let models = tmp.path().join("models");
    let out = run(&[
        "fit",
        "--features",
        path_str(&features_csv),
        "--out",
        path_str(&models),
        "--kind",
        "spherical",
    ]);
    assert_ok(&out, "fit");
    let num_model = models.join("model_gunshot_spherical.json");
    let den_model = models.join("model_impact_spherical.json");
    assert!(num_model.is_file() && den_model.is_file());
    let m = io::read_model_json(&num_model).unwrap();
    assert_eq!(m.hypothesis, "gunshot");
    assert_eq!(m.n_train, 4);

    // lr: score every spherical row against the two models
    let lrdir = tmp.path().join("lrout");
    let out = run(&[
        "lr",
        "--features",
        path_str(&features_csv),
        "--numerator",
        path_str(&num_model),
        "--denominator",
        path_str(&den_model),
        "--out",
        path_str(&lrdir),
    ]);
    assert_ok(&out, "lr");
    let scored = io::read_lr_csv(&lrdir.join("lr.csv")).unwrap();
    assert_eq!(scored.len(), 8);
    assert!(scored.iter().all(|r| r.lr.is_finite() && r.lr >= 0.0));

    // loocv: a full evaluation per feature kind
    let cv = tmp.path().join("cv");
    let out = run(&[
        "loocv",
        "--features",
        path_str(&features_csv),
        "--labels",
        path_str(&labels_csv),
        "--out",
        path_str(&cv),
    ]);
    assert_ok(&out, "loocv");
    for kind in ["circular", "spherical"] {
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(cv.join(format!("report_{kind}.json"))).unwrap())
                .unwrap();
        assert_eq!(report["kind"], kind);
        assert_eq!(report["n_patterns"], 8);
        let err = report["error_rate"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&err));
        // sidecar metadata must reach the condition breakdown
        let buckets: Vec<&str> = report["breakdown"]["rows"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["distance_bucket"].as_str().unwrap())
            .collect();
        assert!(!buckets.iter().any(|b| *b == "unknown"), "buckets: {buckets:?}");
        assert!(cv.join(format!("tippett_{kind}.csv")).is_file());
    }

    // report: rebuild an evaluation from the lr table alone
    let rep = tmp.path().join("rep");
    let out = run(&[
        "report",
        "--lr",
        path_str(&lrdir.join("lr.csv")),
        "--labels",
        path_str(&labels_csv),
        "--numerator",
        "gunshot",
        "--out",
        path_str(&rep),
    ]);
    assert_ok(&out, "report");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(rep.join("report_spherical.json")).unwrap())
            .unwrap();
    assert_eq!(report["numerator_label"], "gunshot");
    assert_eq!(report["denominator_label"], "impact");
    assert_eq!(report["n_patterns"], 8);
    assert_eq!(report["confidence_ellipses"].as_array().unwrap().len(), 0);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("images");
    let labels_csv = tmp.path().join("labels.csv");
    io::write_labels_csv(&labels_csv, &render_corpus(&images)).unwrap();

    let run_chain = |tag: &str| -> PathBuf {
        let root = tmp.path().join(tag);
        let tables = root.join("tables");
        assert_ok(
            &run(&["extract", "--images", path_str(&images), "--out", path_str(&tables)]),
            "extract",
        );
        let feat = root.join("feat");
        assert_ok(
            &run(&[
                "features",
                "--ellipses",
                path_str(&tables),
                "--labels",
                path_str(&labels_csv),
                "--out",
                path_str(&feat),
            ]),
            "features",
        );
        let cv = root.join("cv");
        assert_ok(
            &run(&[
                "loocv",
                "--features",
                path_str(&feat.join("features.csv")),
                "--labels",
                path_str(&labels_csv),
                "--out",
                path_str(&cv),
                "--kind",
                "spherical",
            ]),
            "loocv",
        );
        root
    };

    let a = run_chain("a");
    let b = run_chain("b");
    for rel in [
        "tables/extraction_log.json",
        "feat/features.csv",
        "cv/report_spherical.json",
        "cv/tippett_spherical.csv",
    ] {
        let bytes_a = fs::read(a.join(rel)).unwrap();
        let bytes_b = fs::read(b.join(rel)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{rel} differs between identical runs");
    }
    // every ellipse table too
    for (ta, tb) in csv_files(&a.join("tables"))
        .iter()
        .zip(csv_files(&b.join("tables")).iter())
    {
        assert_eq!(
            fs::read(ta).unwrap(),
            fs::read(tb).unwrap(),
            "{} differs",
            ta.display()
        );
    }
}

#[test]
fn identical_models_give_unit_lr() {
    let tmp = tempfile::tempdir().unwrap();
    let features_csv = tmp.path().join("features.csv");
    fs::write(
        &features_csv,
        "pattern_id,kind,f1,f2,n_ellipses,mechanism\n\
         a1,circular,1.0,1.1,8,impact\n\
         a2,circular,1.2,0.9,8,impact\n\
         a3,circular,0.8,1.0,8,impact\n\
         b1,circular,5.0,5.1,8,gunshot\n\
         b2,circular,5.2,4.9,8,gunshot\n\
         b3,circular,4.8,5.0,8,gunshot\n",
    )
    .unwrap();
    let models = tmp.path().join("models");
    assert_ok(
        &run(&[
            "fit",
            "--features",
            path_str(&features_csv),
            "--out",
            path_str(&models),
            "--kind",
            "circular",
        ]),
        "fit",
    );
    let model = models.join("model_impact_circular.json");
    let out = run(&[
        "lr",
        "--features",
        path_str(&features_csv),
        "--numerator",
        path_str(&model),
        "--denominator",
        path_str(&model),
        "--out",
        path_str(&tmp.path().join("lrout")),
    ]);
    assert_ok(&out, "lr");
    let scored = io::read_lr_csv(&tmp.path().join("lrout/lr.csv")).unwrap();
    assert_eq!(scored.len(), 6);
    for r in &scored {
        assert_eq!(r.lr, 1.0, "pattern {}", r.pattern_id);
        assert_eq!(r.log10_lr, 0.0, "pattern {}", r.pattern_id);
    }
}

#[test]
fn sidecar_labels_override_filename_inference() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("impact_30cm_001.csv");
    fs::write(
        &table,
        "x,y,a,b,phi\n\
         10,10,20,10,15\n40,12,22,11,20\n70,14,21,10.5,25\n\
         100,16,20,9,30\n130,18,23,11,35\n160,20,22,10,40\n",
    )
    .unwrap();
    let labels_csv = tmp.path().join("labels.csv");
    fs::write(
        &labels_csv,
        "pattern_id,mechanism,distance_cm,velocity_level\nimpact_30cm_001,gunshot,,\n",
    )
    .unwrap();
    let feat = tmp.path().join("feat");
    assert_ok(
        &run(&[
            "features",
            "--ellipses",
            path_str(&table),
            "--labels",
            path_str(&labels_csv),
            "--out",
            path_str(&feat),
            "--kind",
            "circular",
        ]),
        "features",
    );
    let rows = io::read_features_csv(&feat.join("features.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    // the filename says impact, but the sidecar says gunshot and wins
    assert_eq!(rows[0].mechanism, Some(Mechanism::Gunshot));
}

#[test]
fn exit_codes_distinguish_usage_input_and_numeric_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();

    // usage: unknown flag
    assert_eq!(exit_code(&run(&["extract", "--bogus"])), 1);
    // usage: malformed thresholds value
    assert_eq!(
        exit_code(&run(&[
            "loocv",
            "--features",
            "x.csv",
            "--thresholds",
            "nonsense"
        ])),
        1
    );
    // input: directory with no images
    assert_eq!(
        exit_code(&run(&[
            "extract",
            "--images",
            path_str(&empty),
            "--out",
            path_str(&tmp.path().join("o1")),
        ])),
        2
    );
    // input: missing feature table
    assert_eq!(
        exit_code(&run(&[
            "loocv",
            "--features",
            path_str(&tmp.path().join("nope.csv")),
            "--out",
            path_str(&tmp.path().join("o2")),
        ])),
        2
    );
    // numeric: too few samples to fit a Gaussian
    let tiny = tmp.path().join("tiny.csv");
    fs::write(
        &tiny,
        "pattern_id,kind,f1,f2,n_ellipses,mechanism\n\
         a1,circular,1.0,1.1,8,impact\na2,circular,1.2,0.9,8,impact\n",
    )
    .unwrap();
    assert_eq!(
        exit_code(&run(&[
            "fit",
            "--features",
            path_str(&tiny),
            "--out",
            path_str(&tmp.path().join("o3")),
            "--kind",
            "circular",
        ])),
        3
    );
    // success: help and version
    assert_eq!(exit_code(&run(&["--help"])), 0);
    assert_eq!(exit_code(&run(&["--version"])), 0);
}

#[test]
fn manifest_records_tool_seed_and_input_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let features_csv = tmp.path().join("features.csv");
    fs::write(
        &features_csv,
        "pattern_id,kind,f1,f2,n_ellipses,mechanism\n\
         a1,circular,1.0,1.1,8,impact\n\
         a2,circular,1.2,0.9,8,impact\n\
         a3,circular,0.8,1.0,8,impact\n",
    )
    .unwrap();
    let models = tmp.path().join("models");
    assert_ok(
        &run(&[
            "fit",
            "--features",
            path_str(&features_csv),
            "--out",
            path_str(&models),
            "--kind",
            "circular",
            "--seed",
            "42",
        ]),
        "fit",
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(models.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "spatter");
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["seed"], 42);
    let inputs = manifest["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 1);
    assert_eq!(
        inputs[0]["sha256"].as_str().unwrap().len(),
        64,
        "digest must be hex sha256"
    );
}
