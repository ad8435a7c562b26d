use joint_weak::cli::run;

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["joint-weak"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn sample_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let data = data.to_str().unwrap();
    let (code, out, err) = call(&["sample", "--mode", "spectrometer", "--n", "1000000", "--tau", "2e-17", "--phi", "1.5708", "--seed", "1", "--out", data]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("\"photons\": 1000000"), "{out}");
    let tau_hat = |method: &str| {
        let (code, out, err) = call(&["estimate", "--input", data, "--method", method]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        v["tau_hat"].as_f64().unwrap()
    };
    // CR bound is 1e-18 s at this photon number
    let ml = tau_hat("ml");
    assert!((ml - 2e-17).abs() < 5e-18, "{ml}");
    assert!(tau_hat("balanced").is_finite());
    let (code, _, err) = call(&["estimate", "--input", data, "--method", "split"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn fisher_bounds_curves() {
    let (code, out, _) = call(&["fisher", "--mode", "spectrometer", "--tau", "0", "--phi", "1.5707963267948966", "--n", "1e6"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let dt = v["cramer_rao"]["delta_tau"].as_f64().unwrap();
    assert!((dt / 1e-18 - 1.0).abs() < 1e-3, "{dt}");

    let (code, out, _) = call(&["bounds", "--dw", "1e15", "--n", "1e7", "--tau", "1e-18"]);
    assert_eq!(code, 0);
    assert!(out.contains("10000000"), "{out}");

    let (code, out, _) = call(&["curves", "--points", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 10, "{out}");
}

#[test]
fn exit_codes() {
    assert_eq!(call(&["--help"]).0, 0);
    assert_eq!(call(&["nonsense"]).0, 1);
    assert_eq!(call(&["bounds", "--dw", "-1", "--n", "10"]).0, 1);
    assert_eq!(call(&["estimate", "--input", "/nonexistent.csv"]).0, 1);
    let (code, _, err) = call(&["curves", "--eps", "0"]);
    assert_ne!(code, 0);
    assert!(err.starts_with("error: "), "{err}");
}

#[test]
fn campaign_from_toml() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        r#"
[spectrum]
kind = "gaussian"
center = 1e16
spread = 1e15

[grids]
tau = [2e-18]
n_photons = [20000]

[run]
modes = ["spectrometer", "split"]
estimators = ["ml", "balanced", "split"]
trials = 3
seed = 9
"#,
    )
    .unwrap();
    let out = dir.path().join("r.csv");
    let (code, _, err) = call(&["campaign", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 1 + 4, "{text}");
}
