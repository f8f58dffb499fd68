use unet_af::config_file::parse_config;
use unet_af::image_io::{crop_to_multiple, read_png, write_png, Depth};
use unet_af::report::{equiv_csv, summary_json, write_equiv_report, CSV_HEADER};
use unet_af::weights_io::{decode_weights, encode_weights, load_weights, save_weights, MAGIC};
use unet_af::Error;
use unet_af_core::layers::{NormMode, Padding, PoolKind};
use unet_af_core::metrics::{adversarial_levels, EquivRecord, EquivReport};
use unet_af_core::model::{init, ModelConfig, Preset};
use unet_af_core::{Displacement, Precision, Rng, Tensor};

fn small_store() -> unet_af_core::model::WeightStore {
    let cfg = ModelConfig { scales: 1, base_channels: 2, ..ModelConfig::preset(Preset::Af) };
    init(&cfg, &mut Rng::new(1)).unwrap()
}

#[test]
fn weights_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.afw");
    let store = small_store();
    save_weights(&store, &path).unwrap();
    assert_eq!(load_weights(&path).unwrap(), store);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes[..4], MAGIC);
    assert_eq!(encode_weights(&store), bytes);
}

#[test]
fn corrupted_weights_are_rejected() {
    let bytes = encode_weights(&small_store());
    for cut in [0, 3, 8, 12, bytes.len() / 2, bytes.len() - 1] {
        assert!(decode_weights(&bytes[..cut]).is_err(), "truncated at {cut}");
    }
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    assert!(decode_weights(&bad_magic).unwrap_err().contains("magic"));
    let mut bad_version = bytes.clone();
    bad_version[4] = 9;
    assert!(decode_weights(&bad_version).unwrap_err().contains("version"));
    let mut trailing = bytes.clone();
    trailing.push(0);
    assert!(decode_weights(&trailing).unwrap_err().contains("trailing"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.afw");
    std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    let err = load_weights(&path).unwrap_err();
    assert!(matches!(err, Error::Format { .. }));
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("bad.afw"));
    assert!(matches!(load_weights(dir.path().join("missing.afw")), Err(Error::Io { .. })));
}

#[test]
fn png_round_trips_within_quantization() {
    let dir = tempfile::tempdir().unwrap();
    let x = Tensor::from_fn((1, 3, 9, 14), |_, c, i, j| ((c * 31 + i * 7 + j * 3) % 97) as f64 / 96.0);
    for (depth, bound) in [(Depth::Eight, 0.5 / 255.0), (Depth::Sixteen, 0.5 / 65535.0)] {
        let path = dir.path().join(format!("{depth:?}.png"));
        write_png(&path, &x, depth).unwrap();
        let back = read_png(&path).unwrap();
        assert_eq!(back.shape(), x.shape());
        assert!(back.max_abs_diff(&x).unwrap() <= bound + 1e-12, "{depth:?}");
    }
    let clipped = x.map(|v| 2.0 * v - 0.5);
    let path = dir.path().join("clip.png");
    write_png(&path, &clipped, Depth::Eight).unwrap();
    let back = read_png(&path).unwrap();
    assert!(back.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
}

#[test]
fn gray_pngs_are_replicated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gray.png");
    let x = Tensor::from_fn((1, 1, 4, 5), |_, _, i, j| (i * 5 + j) as f64 / 19.0);
    write_png(&path, &x, Depth::Sixteen).unwrap();
    let back = read_png(&path).unwrap();
    assert_eq!(back.shape().channels, 3);
    for c in 0..3 {
        assert_eq!(back.plane(0, c), back.plane(0, 0));
    }
    assert!(matches!(write_png(dir.path().join("x.png"), &Tensor::zeros((1, 2, 4, 4)), Depth::Eight), Err(Error::Format { .. })));
    assert!(matches!(read_png(dir.path().join("none.png")), Err(Error::Io { .. })));
}

#[test]
fn crops_to_a_multiple() {
    let x = Tensor::from_fn((1, 1, 21, 18), |_, _, i, j| (i * 100 + j) as f64);
    let y = crop_to_multiple(&x, 8, None);
    assert_eq!((y.shape().height, y.shape().width), (16, 16));
    assert_eq!(y.get(0, 0, 0, 0), x.get(0, 0, 2, 1));
    let z = crop_to_multiple(&x, 4, Some(9));
    assert_eq!((z.shape().height, z.shape().width), (8, 8));
}

#[test]
fn config_files() {
    let text = "# ablation variant\npreset = af\npadding = zeros  # swap one axis\nnorm = LayerNorm\n\
                pooling = max_pool\nupsampling = unfiltered\nfiltered = no\nprecision = f32\nbase_channels = 8\n";
    let cfg = parse_config(text, ModelConfig::preset(Preset::Jin)).unwrap();
    let expected = ModelConfig {
        padding: Padding::Zeros,
        norm: NormMode::LayerNorm,
        pooling: PoolKind::MaxPool,
        upsampling_filtered: false,
        precision: Precision::Single,
        base_channels: 8,
        ..ModelConfig::preset(Preset::Af)
    };
    assert!(!cfg.activation.filtered);
    assert_eq!(cfg, ModelConfig { activation: cfg.activation, ..expected });
    assert_eq!(parse_config("", ModelConfig::preset(Preset::Jin)).unwrap(), ModelConfig::preset(Preset::Jin));

    for (text, needle) in [
        ("padding = mirror", "line 1"),
        ("\nfoo = 1", "line 2: unknown key"),
        ("scales", "line 1: expected"),
        ("preset = nope", "unknown preset"),
        ("scales = 0", "scales"),
    ] {
        let err = parse_config(text, ModelConfig::preset(Preset::Af)).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{text}");
        assert!(err.to_string().contains(needle), "{text}: {err}");
        assert_eq!(err.exit_code(), 2);
    }
}

fn sample_report() -> EquivReport {
    let records = vec![
        EquivRecord { g: Displacement::new(0.5, 0.0), error_psnr: Some(80.25), restoration_psnr: None },
        EquivRecord { g: Displacement::new(0.0, 0.0), error_psnr: Some(f64::INFINITY), restoration_psnr: Some(31.5) },
    ];
    let levels = adversarial_levels(&records, 0.5, 0.5);
    EquivReport::from_records(records, levels)
}

#[test]
fn equiv_csv_layout() {
    let csv = String::from_utf8(equiv_csv(&sample_report()).unwrap()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER.join(","));
    assert_eq!(lines[1], "0,0,inf,31.5");
    assert_eq!(lines[2], "0.5,0,80.25,");
    assert_eq!(lines.len(), 3);
}

#[test]
fn summary_json_layout() {
    let report = sample_report();
    let text = String::from_utf8(summary_json(&report).unwrap()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["n"], 2);
    assert!((v["mean_db"].as_f64().unwrap() - (300.0 + 80.25) / 2.0).abs() < 1e-12);
    assert!(v["std_db"].as_f64().unwrap() > 0.0);
    assert!(v["adversarial"].is_array());
    assert!(text.ends_with('\n'));

    let dir = tempfile::tempdir().unwrap();
    write_equiv_report(dir.path(), "r", &report).unwrap();
    assert!(dir.path().join("r.csv").is_file() && dir.path().join("r.json").is_file());
    let missing = dir.path().join("nope");
    assert!(matches!(write_equiv_report(&missing, "r", &report), Err(Error::Io { .. })));
}
