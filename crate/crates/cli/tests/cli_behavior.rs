//! CLI contract tests: exit codes, report/file consistency, default echo,
//! and the per-command output shapes.

use std::path::{Path, PathBuf};
use std::process::Command;

use amfmx_core::gabor::default_bank;
use amfmx_core::image::load_raster;
use amfmx_core::net::{DenseNet, OutputKind};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_amfmx")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("behavior_{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .env_remove("AMFMX_OUT_DIR")
        .output()
        .unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn make_tone(dir: &Path) -> PathBuf {
    let out = run(&[
        "synth",
        "--kind",
        "pure-cosine",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    dir.join("image.pgm")
}

#[test]
fn missing_input_exits_1_with_no_outputs() {
    let dir = scratch("missing_input");
    let out_dir = dir.join("results");
    let out = run(&[
        "decompose",
        "--input",
        dir.join("nope.pgm").to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists(), "output directory was created on failure");
}

#[test]
fn unsupported_magic_exits_1_and_names_the_offset() {
    let dir = scratch("bad_magic");
    let bad = dir.join("color.ppm");
    std::fs::write(&bad, b"P6 2 2 255 blob").unwrap();
    let out = run(&[
        "decompose",
        "--input",
        bad.to_str().unwrap(),
        "--out-dir",
        dir.join("results").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let message = String::from_utf8_lossy(&out.stderr);
    assert!(message.contains("P6"), "stderr: {message}");
}

#[test]
fn unknown_flag_exits_1() {
    let out = run(&["decompose", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn decompose_manifest_matches_written_files() {
    let dir = scratch("manifest");
    let tone = make_tone(&dir);
    let out_dir = dir.join("results");
    let out = run(&[
        "decompose",
        "--input",
        tone.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let report = report(&out_dir);
    let layers = report["layers"].as_array().unwrap();
    let pgm_count = std::fs::read_dir(&out_dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".pgm")
        })
        .count();
    assert_eq!(layers.len(), pgm_count, "manifest vs files on disk");
    for layer in layers {
        assert!(out_dir.join(layer["file"].as_str().unwrap()).exists());
    }
}

#[test]
fn decompose_fm_only_of_tone_scale_is_unit_cosine() {
    let dir = scratch("fm_only");
    let tone = make_tone(&dir);
    let out_dir = dir.join("results");
    assert!(run(&[
        "decompose",
        "--input",
        tone.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .status
    .success());

    let bank = default_bank();
    let scale = bank.channels[bank.best_channel_for(0.9, 0.3)].scale_id;
    let report = report(&out_dir);
    let name = format!("fm_only_scale{scale}");
    let layer = report["layers"]
        .as_array()
        .unwrap()
        .iter()
        .find(|l| l["name"] == name.as_str())
        .expect("fm layer present");
    let lo = layer["lo"].as_f64().unwrap();
    let hi = layer["hi"].as_f64().unwrap();
    let raster = load_raster(out_dir.join(layer["file"].as_str().unwrap())).unwrap();

    // The layer should be cos(0.9 x + 0.3 y): unit amplitude regardless of
    // the stored tone's 0.5 scaling, since FM-only drops amplitudes.
    assert!((hi - 1.0).abs() < 0.05, "fm max {hi}");
    assert!((lo + 1.0).abs() < 0.05, "fm min {lo}");
    let mut worst = 0.0f64;
    for y in 16..112 {
        for x in 16..240 {
            let value = lo + (hi - lo) * raster.at(x, y);
            let expected = (0.9 * x as f64 + 0.3 * y as f64).cos();
            worst = worst.max((value - expected).abs());
        }
    }
    assert!(worst < 0.1, "fm reconstruction deviates by {worst}");
}

#[test]
fn dominant_filters_echoes_default_threshold_and_selects_the_tone() {
    let dir = scratch("dominant_default");
    let tone = make_tone(&dir);
    let out_dir = dir.join("results");
    assert!(run(&[
        "dominant-filters",
        "--input",
        tone.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let report = report(&out_dir);
    assert_eq!(report["config"]["threshold"].as_f64().unwrap(), 0.85);
    assert_eq!(report["reached"], true);

    // Raster storage forces a DC offset, so the lowpass channel rides
    // along; the tone's channel must be selected and the list stays tiny.
    let selected: Vec<usize> = report["selected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    let bank = default_bank();
    assert!(selected.len() <= 2, "selected {selected:?}");
    assert!(selected.contains(&bank.best_channel_for(0.9, 0.3)));
}

#[test]
fn dominant_filters_on_five_harmonics_stays_within_budget() {
    let dir = scratch("dominant_five");
    let harmonics = [
        (0.63f64, 0.5f64),
        (0.63, 2.5),
        (1.24, 1.5),
        (2.18, 3.5),
        (2.18, 5.5),
    ];
    let mut args: Vec<String> = vec![
        "synth".into(),
        "--kind".into(),
        "multi-harmonic".into(),
        "--offset".into(),
        "0.5".into(),
        "--out-dir".into(),
        dir.to_str().unwrap().into(),
    ];
    for (rho, k) in harmonics {
        let theta = std::f64::consts::PI * k / 8.0;
        args.push("--component".into());
        args.push(format!("0.2,{},{}", rho * theta.cos(), rho * theta.sin()));
    }
    let arg_refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    assert!(run(&arg_refs).status.success());

    let out_dir = dir.join("results");
    assert!(run(&[
        "dominant-filters",
        "--input",
        dir.join("image.pgm").to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let report = report(&out_dir);
    assert_eq!(report["reached"], true);
    let count = report["selected"].as_array().unwrap().len();
    assert!(count <= 10, "selected {count} channels");
}

#[test]
fn actmax_with_huge_lambda_reports_prototype_at_origin() {
    let dir = scratch("actmax_lambda");
    let train_dir = dir.join("train");
    assert!(run(&[
        "train",
        "--dataset",
        "two-blob",
        "--epochs",
        "150",
        "--learning-rate",
        "0.2",
        "--out-dir",
        train_dir.to_str().unwrap(),
    ])
    .status
    .success());

    let out_dir = dir.join("results");
    assert!(run(&[
        "actmax",
        "--net",
        train_dir.join("model.json").to_str().unwrap(),
        "--class",
        "0",
        "--lambda",
        "1e6",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let report = report(&out_dir);
    let x: Vec<f64> = report["x_star"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm < 1e-3, "prototype norm {norm}");
}

#[test]
fn explain_recovers_a_linear_black_box_through_the_cli() {
    let dir = scratch("explain_linear");
    // Linear-head net scoring beta . x + beta0 directly.
    let beta = [2.0, -1.5, 0.75];
    let net = DenseNet {
        layer_sizes: vec![3, 1],
        output: OutputKind::Linear,
        weights: vec![beta.to_vec()],
        biases: vec![vec![0.6]],
    };
    let net_path = dir.join("linear.json");
    std::fs::write(&net_path, net.to_json().unwrap()).unwrap();

    let out_dir = dir.join("results");
    assert!(run(&[
        "explain",
        "--net",
        net_path.to_str().unwrap(),
        "--class",
        "0",
        "--vector",
        "1,1,1",
        "--budget",
        "3",
        "--samples",
        "32",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let report = report(&out_dir);
    let weights: Vec<f64> = report["explanation"]["feature_weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (w, b) in weights.iter().zip(&beta) {
        assert!((w - b).abs() < 1e-6, "weight {w} vs beta {b}");
    }
    assert!(
        (report["explanation"]["intercept"].as_f64().unwrap() - 0.6).abs() < 1e-6
    );
}

#[test]
fn explain_on_raster_emits_heatmap() {
    let dir = scratch("explain_raster");
    let tone_dir = dir.join("tone");
    assert!(run(&[
        "synth",
        "--kind",
        "pure-cosine",
        "--width",
        "16",
        "--height",
        "16",
        "--u",
        "1.2",
        "--v",
        "0.4",
        "--out-dir",
        tone_dir.to_str().unwrap(),
    ])
    .status
    .success());

    // A linear net over the 256 pixels.
    let net = DenseNet::init(&[256, 2], OutputKind::Softmax, 5).unwrap();
    let net_path = dir.join("net.json");
    std::fs::write(&net_path, net.to_json().unwrap()).unwrap();

    let out_dir = dir.join("results");
    assert!(run(&[
        "explain",
        "--net",
        net_path.to_str().unwrap(),
        "--class",
        "0",
        "--input",
        tone_dir.join("image.pgm").to_str().unwrap(),
        "--block",
        "8",
        "--budget",
        "2",
        "--samples",
        "16",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(out_dir.join("heatmap.pgm").exists());
    let report = report(&out_dir);
    assert_eq!(report["heatmap"]["file"], "heatmap.pgm");
    // 16x16 image with 8-px blocks: 4 interpretable features.
    assert_eq!(
        report["explanation"]["feature_weights"]
            .as_array()
            .unwrap()
            .len(),
        4
    );
}

#[test]
fn train_xor_reports_perfect_accuracy() {
    let dir = scratch("train_xor");
    assert!(run(&[
        "train",
        "--dataset",
        "xor",
        "--out-dir",
        dir.to_str().unwrap(),
    ])
    .status
    .success());
    let report = report(&dir);
    assert_eq!(report["accuracy"].as_f64().unwrap(), 1.0);
    assert!(dir.join("model.json").exists());
    // Loss trace has one entry per epoch.
    assert_eq!(
        report["loss_trace"].as_array().unwrap().len(),
        report["config"]["epochs"].as_u64().unwrap() as usize
    );
}

#[test]
fn synth_rejects_invalid_spec_with_exit_1() {
    let dir = scratch("synth_invalid");
    let out = run(&[
        "synth",
        "--kind",
        "radial-chirp",
        "--rate",
        "1.0",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.join("report.json").exists());
}

#[test]
fn coverage_report_embeds_replayable_bank() {
    let dir = scratch("coverage_bank");
    assert!(run(&[
        "coverage",
        "--width",
        "64",
        "--height",
        "64",
        "--out-dir",
        dir.to_str().unwrap(),
    ])
    .status
    .success());
    let report = report(&dir);
    let bank_json = serde_json::to_string(&report["bank"]).unwrap();
    let bank = amfmx_core::gabor::FilterBank::from_json(&bank_json).unwrap();
    assert_eq!(bank.channel_count(), 25);
}

#[test]
fn decompose_component_dump_writes_four_rasters_per_channel() {
    let dir = scratch("dump_components");
    let tone = make_tone(&dir);
    let out_dir = dir.join("results");
    assert!(run(&[
        "decompose",
        "--input",
        tone.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--dump-components",
        "true",
    ])
    .status
    .success());
    let report = report(&out_dir);
    let layers = report["layers"].as_array().unwrap();
    let channel_layers = layers
        .iter()
        .filter(|l| l["name"].as_str().unwrap().starts_with("channel"))
        .count();
    assert_eq!(channel_layers, 25 * 4);
    assert!(out_dir.join("channel0_amplitude.pgm").exists());
    assert!(out_dir.join("channel24_omega2.pgm").exists());
}

#[test]
fn actmax_code_regime_with_identity_decoder_matches_plain_run() {
    let dir = scratch("code_regime");
    let train_dir = dir.join("train");
    assert!(run(&[
        "train",
        "--dataset",
        "two-blob",
        "--epochs",
        "100",
        "--learning-rate",
        "0.2",
        "--out-dir",
        train_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let model = train_dir.join("model.json");

    let decoder = amfmx_core::actmax::Decoder::identity(2);
    let decoder_path = dir.join("decoder.json");
    std::fs::write(&decoder_path, decoder.net.to_json().unwrap()).unwrap();

    let plain_dir = dir.join("plain");
    let code_dir = dir.join("code");
    for (regime, out, extra) in [
        ("plain", &plain_dir, None),
        ("code", &code_dir, Some(&decoder_path)),
    ] {
        let mut args = vec![
            "actmax".to_string(),
            "--net".into(),
            model.to_str().unwrap().into(),
            "--class".into(),
            "1".into(),
            "--lambda".into(),
            "0.05".into(),
            "--init".into(),
            "0.9,0.4".into(),
            "--regime".into(),
            regime.into(),
            "--out-dir".into(),
            out.to_str().unwrap().into(),
        ];
        if let Some(path) = extra {
            args.push("--decoder".into());
            args.push(path.to_str().unwrap().into());
        }
        let refs: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        assert!(run(&refs).status.success());
    }
    let plain = report(&plain_dir);
    let code = report(&code_dir);
    assert_eq!(plain["x_star"], code["x_star"]);
    assert_eq!(plain["objective_trace"], code["objective_trace"]);
    assert_eq!(code["z_star"], plain["x_star"]);
}

#[test]
fn actmax_expert_regime_runs_from_trained_rbm() {
    let dir = scratch("expert_regime");
    let train_dir = dir.join("train_net");
    assert!(run(&[
        "train",
        "--dataset",
        "two-blob",
        "--epochs",
        "100",
        "--learning-rate",
        "0.2",
        "--out-dir",
        train_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let rbm_dir = dir.join("train_rbm");
    assert!(run(&[
        "train",
        "--model",
        "rbm",
        "--dataset",
        "two-blob",
        "--epochs",
        "40",
        "--learning-rate",
        "0.005",
        "--hidden",
        "4",
        "--out-dir",
        rbm_dir.to_str().unwrap(),
    ])
    .status
    .success());

    let out_dir = dir.join("results");
    assert!(run(&[
        "actmax",
        "--net",
        train_dir.join("model.json").to_str().unwrap(),
        "--class",
        "1",
        "--regime",
        "expert",
        "--expert",
        rbm_dir.join("model.json").to_str().unwrap(),
        "--alpha",
        "1.0",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let report = report(&out_dir);
    let trace: Vec<f64> = report["objective_trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(!trace.is_empty());
    for pair in trace.windows(2) {
        assert!(pair[1] >= pair[0], "objective trace decreased");
    }
}

#[test]
fn actmax_emits_prototype_raster_when_dims_match() {
    let dir = scratch("actmax_raster");
    let net = DenseNet::init(&[64, 2], OutputKind::Softmax, 9).unwrap();
    let net_path = dir.join("net.json");
    std::fs::write(&net_path, net.to_json().unwrap()).unwrap();
    let out_dir = dir.join("results");
    assert!(run(&[
        "actmax",
        "--net",
        net_path.to_str().unwrap(),
        "--class",
        "0",
        "--lambda",
        "0.5",
        "--max-iters",
        "200",
        "--raster-width",
        "8",
        "--raster-height",
        "8",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(out_dir.join("prototype.pgm").exists());
    let report = report(&out_dir);
    assert_eq!(report["prototype_raster"]["file"], "prototype.pgm");
    assert!(report["prototype_raster"]["lo"].is_number());
}

#[test]
fn flags_override_config_file_values() {
    let dir = scratch("precedence");
    let tone = make_tone(&dir);
    let out_dir = dir.join("results");
    let config_path = dir.join("config.json");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "input": tone.to_str().unwrap(),
            "out_dir": out_dir.to_str().unwrap(),
            "threshold": 0.5
        })
        .to_string(),
    )
    .unwrap();
    assert!(run(&[
        "dominant-filters",
        "--config",
        config_path.to_str().unwrap(),
        "--threshold",
        "0.8",
    ])
    .status
    .success());
    let report = report(&out_dir);
    assert_eq!(report["config"]["threshold"].as_f64().unwrap(), 0.8);
    // Defaults fill whatever neither source named.
    assert_eq!(report["config"]["bank"]["scales"].as_u64().unwrap(), 3);
}

#[test]
fn synth_ground_truth_layers_accompany_the_chirp() {
    let dir = scratch("chirp_truth");
    assert!(run(&[
        "synth",
        "--kind",
        "radial-chirp",
        "--emit-ground-truth",
        "true",
        "--out-dir",
        dir.to_str().unwrap(),
    ])
    .status
    .success());
    assert!(dir.join("truth_omega1.pgm").exists());
    assert!(dir.join("truth_omega2.pgm").exists());
    let report = report(&dir);
    assert_eq!(report["layers"].as_array().unwrap().len(), 2);
}

#[test]
fn dominant_filters_report_carries_trace_violation_flags() {
    let dir = scratch("violations");
    assert!(run(&[
        "synth",
        "--kind",
        "half-split",
        "--width",
        "128",
        "--height",
        "128",
        "--out-dir",
        dir.to_str().unwrap(),
    ])
    .status
    .success());
    let out_dir = dir.join("results");
    assert!(run(&[
        "dominant-filters",
        "--input",
        dir.join("image.pgm").to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let report = report(&out_dir);
    assert!(report["trace_violations"].is_array());
}
