//! End-to-end checks of the binary: exit codes, artifact shapes, and the
//! length-sweep bandwidth behavior.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paramguide"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn spectrum_runs_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "spectrum",
                "--config",
                fixture("paper_device.json").to_str().unwrap(),
                "--length-cm",
                "0.1",
                "--nu-min-thz",
                "-12",
                "--nu-max-thz",
                "12",
                "--samples",
                "501",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "spectrum runs must be byte-identical");
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "nu_thz,signal_density,noise_te_density,noise_tm_density"
    );
    assert_eq!(lines.count(), 501);
    assert!(dir.path().join("manifest.json").exists());

    // 1 mm device spectrum shape: a central signal peak with side lobes, a
    // smooth single-peaked noise band.
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let peak_idx = (0..rows.len())
        .max_by(|&i, &j| rows[i][1].partial_cmp(&rows[j][1]).unwrap())
        .unwrap();
    assert!(
        rows[peak_idx][0].abs() < 0.5,
        "signal peak at {} THz, expected near 0",
        rows[peak_idx][0]
    );
    let maxima_of = |col: usize| {
        (1..rows.len() - 1)
            .filter(|&i| rows[i][col] > rows[i - 1][col] && rows[i][col] > rows[i + 1][col])
            .count()
    };
    assert!(maxima_of(1) >= 3, "expected signal side lobes, found {} maxima", maxima_of(1));
    assert_eq!(maxima_of(2), 1, "noise band should be single-peaked");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");

    // malformed JSON
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let st = bin()
        .args([
            "spectrum",
            "--config",
            bad.to_str().unwrap(),
            "--length-cm",
            "0.1",
            "--nu-min-thz",
            "-1",
            "--nu-max-thz",
            "1",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&st.stderr).is_empty());

    // unknown key
    let unknown = dir.path().join("unknown.json");
    let mut doc = std::fs::read_to_string(fixture("paper_device.json")).unwrap();
    doc = doc.replace("\"dk_per_cm\": 0.0", "\"dk_per_cm\": 0.0, \"surprise\": 1");
    std::fs::write(&unknown, doc).unwrap();
    let st = bin()
        .args([
            "spectrum",
            "--config",
            unknown.to_str().unwrap(),
            "--length-cm",
            "0.1",
            "--nu-min-thz",
            "-1",
            "--nu-max-thz",
            "1",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));

    // out-of-range physical parameter
    let neg = dir.path().join("neg.json");
    let doc = std::fs::read_to_string(fixture("paper_device.json"))
        .unwrap()
        .replace("\"field_loss_per_cm\": 4.0", "\"field_loss_per_cm\": -4.0");
    std::fs::write(&neg, doc).unwrap();
    let st = bin()
        .args([
            "spectrum",
            "--config",
            neg.to_str().unwrap(),
            "--length-cm",
            "0.1",
            "--nu-min-thz",
            "-1",
            "--nu-max-thz",
            "1",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));

    // unknown flag: clap usage error is also exit 2
    let st = bin().args(["spectrum", "--bogus"]).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn sweep_bandwidth_scales_inversely_with_length() {
    // Lossless device lengths 0.05 / 0.2 / 1.0 cm: the first spectral
    // zero tracks 2 pi / (L |1/v_te - 1/v_tm|), so nu_zero * L is constant.
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args([
            "sweep",
            "--config",
            fixture("paper_device_lossless.json").to_str().unwrap(),
            "--lengths",
            "0.05,0.2,1.0",
            "--nu-min-thz",
            "-30",
            "--nu-max-thz",
            "30",
            "--samples",
            "6001",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(st.success());

    let zero_of = |l: f64| -> f64 {
        let path = dir.path().join(format!("spectrum_L{l:.6}.csv"));
        let text = std::fs::read_to_string(path).unwrap();
        let rows: Vec<(f64, f64)> = text
            .lines()
            .skip(1)
            .map(|line| {
                let mut it = line.split(',');
                let nu: f64 = it.next().unwrap().parse().unwrap();
                let s: f64 = it.next().unwrap().parse().unwrap();
                (nu, s)
            })
            .collect();
        let peak = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        // first local minimum above nu = 0 (the first spectral zero; the
        // sampled value there need not reach 0 exactly)
        let start = rows.iter().position(|(nu, _)| *nu > 0.0).unwrap();
        (start + 1..rows.len() - 1)
            .find(|&i| {
                rows[i].1 < rows[i - 1].1
                    && rows[i].1 < rows[i + 1].1
                    && rows[i].1 < 0.05 * peak
            })
            .map(|i| rows[i].0)
            .expect("no zero found")
    };
    let products: Vec<f64> = [0.05, 0.2, 1.0].iter().map(|&l| zero_of(l) * l).collect();
    for p in &products[1..] {
        assert!(
            (p - products[0]).abs() / products[0] < 0.05,
            "nu_zero * L not constant: {products:?}"
        );
    }
}

#[test]
fn qpump_two_band_and_ivp_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("qpump.csv");
    let st = bin()
        .args([
            "qpump",
            "--config",
            fixture("paper_qpump.json").to_str().unwrap(),
            "--bands",
            "2",
            "--band-width-thz",
            "1.0",
            "--z-max-cm",
            "74000",
            "--steps",
            "400",
            "--mode",
            "two-band",
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("z_cm,abs_cp_sq,sum_cw_sq,cw_re_0"));
    // norm conservation row-wise
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] + v[2] - 1.0).abs() < 1e-9, "row {line}");
    }

    let ivp_out = dir.path().join("ivp.json");
    let st = bin()
        .args([
            "ivp",
            "--m-abs",
            "5e10",
            "--m-arg",
            "0.0",
            "--t-int-s",
            "1.2e-11",
            "--nmax",
            "40",
            "--out",
            ivp_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&ivp_out).unwrap()).unwrap();
    assert!(parsed["leak"].as_f64().unwrap() < 1e-9);
    assert_eq!(parsed["amplitudes"].as_array().unwrap().len(), 41);
}

#[test]
fn verify_reports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let st = bin()
        .args([
            "verify",
            "--cases",
            "8",
            "--out",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        st.status.success(),
        "verify failed: {}",
        String::from_utf8_lossy(&st.stdout)
    );
    let text = std::fs::read_to_string(&report).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let cases = parsed.as_array().unwrap();
    assert!(cases.len() >= 6);
    for c in cases {
        assert!(c["pass"].as_bool().unwrap(), "family {} failed", c["case"]);
    }
}
