use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
seed = 3
[walk]
n_max = 40
n_t = 30
[randomness]
kind = "discrete_angle"
magnitude = 0.1
[sweep]
grid_points = 20
[ml]
n_samples = 100
sample_sizes = [40, 100]
repetitions = 2
[scaling]
n_values = [16, 24, 32, 40]
methods = ["human", "ipr", "svm"]
"#;

fn qwloc(dir: &Path, config: &str, args: &[&str]) -> (i32, String) {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qwloc"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn simulate_writes_tables_and_plots() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = qwloc(tmp.path(), SMALL, &["simulate"]);
    assert_eq!(code, 0);
    let out = tmp.path().join("out");
    assert_eq!(header(&out.join("distribution.csv")), "t,x,P");
    assert_eq!(header(&out.join("diagnostics.csv")), "t,MoI,IPR");
    assert!(out.join("moi.svg").exists() && out.join("distribution_t30.svg").exists());
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 31);
}

#[test]
fn plots_can_be_switched_off() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = qwloc(tmp.path(), SMALL, &["--plots", "off", "sweep"]);
    assert_eq!(code, 0);
    let out = tmp.path().join("out");
    assert!(out.join("sweep.csv").exists() && !out.join("sweep_moi.svg").exists());
    assert_eq!(header(&out.join("estimates.csv")), "method,critical_value,error");
}

#[test]
fn seed_flag_overrides_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = qwloc(tmp.path(), SMALL, &["--seed", "77", "simulate"]);
    assert_eq!(code, 0);
    let meta = std::fs::read_to_string(tmp.path().join("out/metadata.json")).unwrap();
    assert!(meta.contains("\"seed\": 77"), "{meta}");
}

#[test]
fn ml_train_then_scan() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(qwloc(tmp.path(), SMALL, &["ml", "train"]).0, 0);
    let out = tmp.path().join("out");
    assert!(out.join("model.json").exists() && out.join("holdout_report.json").exists());
    assert_eq!(qwloc(tmp.path(), SMALL, &["ml", "scan"]).0, 0);
    assert_eq!(header(&out.join("confusion.csv")), "param,p_delocalized");
    assert!(out.join("confusion.svg").exists());
}

#[test]
fn ml_samplesize_and_regions() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = qwloc(tmp.path(), SMALL, &["ml", "samplesize"]);
    assert!(code == 0 || code == 4);
    let (code, _) = qwloc(tmp.path(), SMALL, &["ml", "regions"]);
    assert!(code == 0 || code == 4);
    let regions = std::fs::read_to_string(tmp.path().join("out/regions.csv")).unwrap();
    assert_eq!(regions.lines().count(), 4);
}

#[test]
fn scaling_writes_per_kind_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = qwloc(tmp.path(), SMALL, &["scaling"]);
    assert!(code == 0 || code == 4);
    let dir = tmp.path().join("out/discrete_angle");
    assert_eq!(header(&dir.join("criticals.csv")), "method,N,critical_value");
    assert_eq!(header(&dir.join("exponents.csv")), "method,exponent,r_squared,prefactor,reliable");
    assert!(dir.join("scaling.svg").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, err) = qwloc(tmp.path(), "seed = 1\nunknown = 2\n", &["simulate"]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("unknown"));

    let (code, err) = qwloc(tmp.path(), "[walk]\nn_max = 40\nn_t = 30\n[sweep]\nparams = [0.1]\n", &["sweep"]);
    assert_eq!(code, 3);
    assert!(err.contains("regime coverage"), "{err}");

    let (code, err) = qwloc(tmp.path(), "[walk]\nn_max = 40\nn_t = 30\n[scaling]\nn_values = [20, 30]\n", &["scaling"]);
    assert_eq!(code, 3);
    assert!(err.contains("insufficient data"), "{err}");

    let (code, _) = qwloc(tmp.path(), "[walk]\nn_max = 40\nn_t = 30\n[ml]\nmodel_path = \"/nonexistent/model.json\"\n", &["ml", "scan"]);
    assert_eq!(code, 2);
}
