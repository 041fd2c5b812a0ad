use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergdvo"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn bundled_config() -> String {
    data_dir().join("er_gdvo4.json").display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_lists_every_flag() {
    let common = ["--config", "--out", "--seed", "--threads"];
    let sweep = ["--bmin", "--bmax", "--steps", "--magnons", "--sublattice", "--polarization"];
    let cases: [(&str, &[&str]); 6] = [
        ("spectrum", &sweep),
        ("synth", &sweep),
        ("crossing", &sweep),
        ("fit", &["--data", "--single-stage"]),
        ("echo-fit", &["--data", "--fixed-stretch"]),
        ("linewidth-fit", &["--data", "--weighting"]),
    ];
    for (sub, extra) in cases {
        let o = run(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        let text = stdout(&o);
        for flag in common.iter().chain(extra.iter()) {
            assert!(text.contains(flag), "{sub} --help lacks {flag}:\n{text}");
        }
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn spectrum_with_two_steps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["spectrum", "--steps", "2", "--bmin", "0.1", "--bmax", "0.4", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(text.starts_with("# schema_version=1\n"));
    let rows = csv_rows(&dir.path().join("spectrum.csv"));
    let mut per_branch = std::collections::BTreeMap::<(String, String), usize>::new();
    for r in &rows {
        *per_branch.entry((r[1].clone(), r[2].clone())).or_default() += 1;
    }
    assert_eq!(per_branch.len(), 8);
    assert!(per_branch.values().all(|&n| n == 2), "{per_branch:?}");
    let plot = std::fs::read_to_string(dir.path().join("spectrum_plot.csv")).unwrap();
    assert!(plot.lines().nth(1).unwrap().contains("strength_average"));
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = d.path().to_str().unwrap();
        let o = run(&["synth", "--steps", "3", "--bmax", "0.3", "--seed", "9", "--out", out, "--threads", "2"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = run(&["spectrum", "--steps", "4", "--magnons", "on", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["transitions.csv", "spectrum.csv", "spectrum_plot.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"schema_version\": 1,\n  \"sweeep\": {}\n}\n").unwrap();
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("sweeep"), "{err}");
    std::fs::write(&cfg, "{\"schema_version\": 7}").unwrap();
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["spectrum", "--steps", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn data_errors_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = run(&["echo-fit", "--data", missing.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t12_us,amplitude,shot\n-1,0.5,0\n").unwrap();
    let o = run(&["echo-fit", "--data", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn echo_fit_on_bundled_data() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["echo-fit", "--config", &bundled_config(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("T_M"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("echo_fit.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    let t_m = json["fit"]["t_m_us"].as_f64().unwrap();
    assert!((t_m / 235.7 - 1.0).abs() < 1e-3, "T_M {t_m}");
}

#[test]
fn linewidth_fit_prints_a_parameter_block() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["linewidth-fit", "--config", &bundled_config(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for key in ["Gamma_0", "Gamma_Delta", "Delta", "kHz", "MHz", "GHz", "±"] {
        assert!(text.contains(key), "{key} missing from\n{text}");
    }
    assert!(dir.path().join("linewidth_fit.json").exists());
}

#[test]
fn crossing_reports_the_gap() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["crossing", "--bmax", "0.5", "--steps", "101", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("gap ="), "{}", stdout(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("crossing.json")).unwrap()).unwrap();
    let c = &json["crossings"][0];
    assert_eq!(c["found"], true);
    assert!(c["gap_GHz"].as_f64().unwrap() > 1.0);
    let o = run(&["crossing", "--steps", "11", "--branches", "L16,L99", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("L16"));
}

#[test]
fn fit_recovers_a_shifted_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["synth", "--steps", "4", "--bmax", "0.45", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(bundled_config()).unwrap()).unwrap();
    cfg["params"]["Bex"] = serde_json::json!(-0.3);
    cfg["fit"]["data"] = serde_json::json!("transitions.csv");
    cfg["fit"]["two_stage"] = serde_json::json!(false);
    cfg["fit"]["stage1"]["free"] = serde_json::json!(["Bex"]);
    let path = dir.path().join("run.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = run(&["fit", "--config", path.to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit_report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "fit");
    let bex = report["params"]["Bex"].as_f64().unwrap();
    assert!((bex + 0.28).abs() < 1e-6, "Bex {bex}");
}
