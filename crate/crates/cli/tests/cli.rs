use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 3

[grid]
n_theta = 16
t_min = -6.0
t_max = 6.0

[dkrv]
n = 120

[dms]
n = 120
c_ladder = [1.0, 2.0]

[scheme]
epsilon = 0.25
resolution = 32
n = 40

[compare]
resamples = 200
null_repeats = 2
"#;

fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    (dir, cfg)
}

fn lqg(cfg: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lqg"))
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("LQG_OUT")
        .env_remove("LQG_THREADS")
        .output()
        .unwrap()
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn selftest_passes() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    let o = lqg(&cfg, &out, &["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out.join("selftest.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["config_fingerprint"].as_str().unwrap().len(), 64);
    for key in ["fubini", "hitting_time", "bounds", "null_calibration"] {
        assert_eq!(r["report"][key]["passed"], true, "{key}");
    }
}

#[test]
fn dkrv_at_sqrt2_has_unit_weights_and_self_compare_is_null() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    let o = lqg(&cfg, &out, &["sample-dkrv", "--gamma", "1.4142135623730951", "--n", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = out.join("dkrv.csv");
    let mut rd = csv::Reader::from_path(&csv).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| &r[1] == "1"));

    let c = csv.to_str().unwrap();
    let o = lqg(&cfg, &out, &["compare", c, c]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out.join("compare.json"));
    assert!(r["report"]["overall_pvalue"].as_f64().unwrap() > 0.99);
    for p in r["report"]["comparison"]["result"]["ks_pvalues"].as_array().unwrap() {
        assert!(p.as_f64().unwrap() > 0.99);
    }
}

#[test]
fn identical_configs_reproduce_bytes() {
    let (dir, cfg) = setup();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(lqg(&cfg, out, &["sample-dkrv", "--gamma", "1.6"]).status.code(), Some(0));
        assert_eq!(lqg(&cfg, out, &["sample-dms", "--c", "1"]).status.code(), Some(0));
    }
    for f in ["dkrv.csv", "dms.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[dkrv]\ngamma = 2.5\n").unwrap();
    let o = lqg(&cfg, dir.path(), &["sample-dkrv"]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "config");

    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(lqg(&cfg, dir.path(), &["selftest"]).status.code(), Some(2));
}

#[test]
fn compare_refuses_mismatched_grids() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    assert_eq!(lqg(&cfg, &out, &["sample-dkrv", "--n", "100"]).status.code(), Some(0));
    assert_eq!(lqg(&cfg, &out, &["sample-scheme"]).status.code(), Some(0));
    let (a, b) = (out.join("dkrv.csv"), out.join("scheme.csv"));
    let o = lqg(&cfg, &out, &["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plot_outputs() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    assert_eq!(lqg(&cfg, &out, &["sample-dms", "--c", "1", "--snapshots", "1"]).status.code(), Some(0));
    let ens = out.join("dms.csv");
    let hist = out.join("hist.csv");
    let o = lqg(&cfg, &out, &["plot", "--kind", "mass-histogram", "--input", ens.to_str().unwrap(), "--output", hist.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&hist).unwrap();
    let ncol = text.lines().next().unwrap().split(',').count();
    for col in 2..ncol {
        let s: f64 = text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse::<f64>().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    let scatter = out.join("scatter.csv");
    let o = lqg(&cfg, &out, &["plot", "--kind", "probe-scatter", "--input", ens.to_str().unwrap(), "--output", scatter.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&scatter).unwrap().lines().count(), 121);

    let snap = out.join("snapshots").join("dms_0.json");
    let prof = out.join("profile.csv");
    let o = lqg(&cfg, &out, &["plot", "--kind", "radial-profile", "--input", snap.to_str().unwrap(), "--output", prof.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let o = lqg(&cfg, &out, &["plot", "--kind", "violin", "--input", ens.to_str().unwrap(), "--output", prof.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn env_overrides_output_directory() {
    let (dir, cfg) = setup();
    let out = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_lqg"))
        .args(["--config", cfg.to_str().unwrap(), "sample-dkrv", "--n", "10"])
        .env("LQG_OUT", &out)
        .env("LQG_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("dkrv.json").exists());
}
