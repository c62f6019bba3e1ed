use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};

use lqg_core::calibration::{circle_variance_calibration, covariance_calibration, gmc_expectation_check};
use lqg_core::chaos::{Regularization, ResolvedProbes};
use lqg_core::dkrv::{check_bounds, derive_params, three_point_insertions, BoundStatus, DkrvSampler, InsertionRule};
use lqg_core::dms::{hitting_time_selftest, LimitingSphere};
use lqg_core::ensemble::Ensemble;
use lqg_core::equivalence::{compare_ensembles, fubini_selftest, null_calibration, FubiniSpec, SchemeSampler};
use lqg_core::field_core::{BackgroundMeasure, Geometry};
use lqg_core::io::{
    emit_plot_data, grid_fingerprint, probe_fingerprint, read_ensemble, read_sphere_sample, write_ensemble,
    write_measure, write_sphere_sample, Fingerprints, PlotInput, PlotKind, RunConfig,
};
use lqg_core::rng::derive_root;
use lqg_core::{Error, Result};

use crate::Command;

pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Config file, then `LQG_OUT` / `LQG_THREADS`, then flags.
fn load_config(o: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Ok(v) = std::env::var("LQG_OUT") {
        cfg.out = v.into();
    }
    if let Ok(v) = std::env::var("LQG_THREADS") {
        cfg.threads = v.parse().map_err(|_| Error::Config(format!("LQG_THREADS = '{v}' is not a count")))?;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(p) = &o.out {
        cfg.out = p.clone();
    }
    if let Some(t) = o.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn apply_overrides(cfg: &mut RunConfig, cmd: &Command) -> Result<()> {
    match cmd {
        Command::Calibrate { draws } => {
            if let Some(d) = draws {
                cfg.calibration.draws = *d;
            }
        }
        Command::SampleDkrv { gamma, n, background, .. } => {
            if let Some(g) = gamma {
                cfg.dkrv.gamma = *g;
            }
            if let Some(n) = n {
                cfg.dkrv.n = *n;
            }
            if let Some(b) = background {
                cfg.dkrv.background = serde_json::from_value(json!(b))
                    .map_err(|_| Error::Usage(format!("unknown background '{b}' (spherical or unit_circle)")))?;
            }
        }
        Command::SampleDms { gamma, n, c, delta, .. } => {
            if let Some(g) = gamma {
                cfg.dms.gamma = *g;
            }
            if let Some(n) = n {
                cfg.dms.n = *n;
            }
            if let Some(c) = c {
                cfg.dms.c_ladder = vec![*c];
            }
            if let Some(d) = delta {
                cfg.dms.delta = *d;
            }
        }
        Command::SampleScheme { gamma, n, epsilon, no_h } => {
            if let Some(g) = gamma {
                cfg.scheme.gamma = *g;
            }
            if let Some(n) = n {
                cfg.scheme.n = *n;
            }
            if let Some(e) = epsilon {
                cfg.scheme.epsilon = *e;
            }
            if *no_h {
                cfg.scheme.enforce_h = false;
            }
        }
        Command::Compare { .. } | Command::Selftest { .. } | Command::Plot { .. } => {}
    }
    Ok(())
}

/// Runs one subcommand; `Ok(false)` means a check failed its tolerance.
pub fn run(o: &Overrides, cmd: &Command) -> Result<bool> {
    let mut cfg = load_config(o)?;
    apply_overrides(&mut cfg, cmd)?;
    cfg.validate()?;
    if cfg.threads > 0 {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    std::fs::create_dir_all(&cfg.out)?;
    match cmd {
        Command::Calibrate { .. } => calibrate(&cfg),
        Command::SampleDkrv { snapshots, .. } => sample_dkrv(&cfg, *snapshots),
        Command::SampleDms { snapshots, .. } => sample_dms(&cfg, *snapshots),
        Command::SampleScheme { .. } => sample_scheme(&cfg),
        Command::Compare { a, b, allow_grid_mismatch } => compare(&cfg, a, b, *allow_grid_mismatch),
        Command::Selftest { skip_null } => selftest(&cfg, *skip_null),
        Command::Plot { kind, input, output } => plot(kind, input, output),
    }
}

fn write_report<T: Serialize>(cfg: &RunConfig, name: &str, passed: bool, report: &T) -> Result<PathBuf> {
    let path = cfg.out.join(format!("{name}.json"));
    let body = json!({
        "command": name,
        "passed": passed,
        "config_fingerprint": cfg.fingerprint(),
        "seed": cfg.seed,
        "report": report,
    });
    std::fs::write(&path, serde_json::to_vec_pretty(&body)?)?;
    println!("{name}: {} ({})", if passed { "pass" } else { "FAIL" }, path.display());
    Ok(path)
}

fn fingerprints(cfg: &RunConfig, geom: &Geometry) -> Fingerprints {
    Fingerprints { config: cfg.fingerprint(), probes: probe_fingerprint(&cfg.probes()), grid: grid_fingerprint(geom) }
}

fn save_ensemble(cfg: &RunConfig, stem: &str, e: &Ensemble, fp: &Fingerprints) -> Result<()> {
    let path = write_ensemble(&cfg.out, stem, e, fp)?;
    println!("{stem}: {} records, ess {:.1} ({})", e.len(), e.ess(), path.display());
    for w in &e.warnings {
        println!("  warning: {w}");
    }
    Ok(())
}

fn calibrate(cfg: &RunConfig) -> Result<bool> {
    let cal = &cfg.calibration;
    let seed = derive_root(cfg.seed, "calibrate");
    let cov = covariance_calibration(cal.resolution, cal.draws, seed)?;
    let cov_ok = cov.max_error() <= cal.covariance_tolerance;
    let mut circles = Vec::new();
    for (i, &eps) in cal.epsilons.iter().enumerate() {
        let res = ((2.0 / eps) * cal.circle_cells_per_unit as f64).round() as usize;
        circles.push(circle_variance_calibration(eps, res, cal.draws, derive_root(seed, &format!("circle{i}")))?);
    }
    let circles_ok = circles.iter().all(|c| c.relative_error() <= cal.variance_tolerance);
    let gmc = gmc_expectation_check(cal.gmc_gamma, cal.gmc_radius, cal.resolution, cal.draws, derive_root(seed, "gmc"))?;
    let gmc_ok = gmc.z_score().abs() <= cal.max_z;
    let passed = cov_ok && circles_ok && gmc_ok;
    let report = json!({
        "covariance": { "passed": cov_ok, "max_error": cov.max_error(), "tolerance": cal.covariance_tolerance, "detail": cov },
        "circle_variance": { "passed": circles_ok, "tolerance": cal.variance_tolerance, "detail": circles },
        "gmc_expectation": { "passed": gmc_ok, "z_score": gmc.z_score(), "max_z": cal.max_z, "detail": gmc },
    });
    write_report(cfg, "calibrate", passed, &report)?;
    Ok(passed)
}

fn dkrv_sampler(cfg: &RunConfig) -> Result<DkrvSampler> {
    let params = cfg.dkrv_params()?;
    let geom = Geometry::Cylinder(cfg.cylinder_grid()?);
    let rho = BackgroundMeasure::from_kind(cfg.dkrv.background)?;
    let reg = Regularization { planar_calibration: cfg.calibration.planar_calibration };
    Ok(DkrvSampler::new(&params, &rho, &geom, InsertionRule::LatticeGreen)?.with_regularization(reg))
}

fn sample_dkrv(cfg: &RunConfig, snapshots: usize) -> Result<bool> {
    let sampler = dkrv_sampler(cfg)?;
    let geom = sampler.geometry().clone();
    let probes = ResolvedProbes::new(&cfg.probes(), &geom)?;
    let root = derive_root(cfg.seed, "dkrv");
    let mut e = sampler.ensemble(cfg.dkrv.n, root, &probes, "dkrv")?;
    e.set_ess_floor_fraction(cfg.dkrv.ess_floor_fraction);
    let fp = fingerprints(cfg, &geom);
    save_ensemble(cfg, "dkrv", &e, &fp)?;
    for i in 0..snapshots.min(cfg.dkrv.n) {
        let s = sampler.draw(root, i as u64)?;
        write_measure(&cfg.out.join("snapshots").join(format!("dkrv_{i}.measure")), &s.measure)?;
    }
    Ok(true)
}

fn sample_dms(cfg: &RunConfig, snapshots: usize) -> Result<bool> {
    let d = &cfg.dms;
    let probes = cfg.probes();
    let root = derive_root(cfg.seed, "dms");
    let mut ladder = Vec::new();
    let mut last = None;
    for &c in &d.c_ladder {
        let grid = LimitingSphere::default_grid(d.gamma, c, cfg.grid.n_theta)?;
        let mut ls = LimitingSphere::new(d.gamma, c, d.delta, &grid)?;
        ls.max_attempts = d.max_attempts;
        let e = ls.three_point_ensemble(d.n, root, &probes, "dms")?;
        let fp = fingerprints(cfg, &Geometry::Cylinder(grid));
        save_ensemble(cfg, &format!("dms_c{c}"), &e, &fp)?;
        ladder.push((c, e, fp));
        last = Some(ls);
    }
    let mut stabilization = Vec::new();
    let mut passed = true;
    for w in ladder.windows(2) {
        let r = compare_ensembles(&w[0].1, &w[1].1, &cfg.test_options())?;
        passed &= r.passed;
        stabilization.push(json!({ "c_from": w[0].0, "c_to": w[1].0, "passed": r.passed, "comparison": r }));
    }
    let (c, e, fp) = ladder.last().expect("validated non-empty ladder");
    save_ensemble(cfg, "dms", e, fp)?;
    let ls = last.expect("validated non-empty ladder");
    let snap_root = derive_root(cfg.seed, "dms-snapshot");
    for i in 0..snapshots {
        let s = ls.three_point(&mut lqg_core::rng::stream(snap_root, i as u64))?;
        write_sphere_sample(&cfg.out.join("snapshots"), &format!("dms_{i}"), &s, d.gamma, fp)?;
    }
    write_report(cfg, "sample-dms", passed, &json!({ "final_c": c, "stabilization": stabilization }))?;
    Ok(passed)
}

fn sample_scheme(cfg: &RunConfig) -> Result<bool> {
    let sc = cfg.scheme_config();
    let sampler = SchemeSampler::new(&sc)?;
    let e = sampler.ensemble(cfg.scheme.n, derive_root(cfg.seed, "scheme"), &cfg.probes(), "scheme")?;
    let fp = fingerprints(cfg, sampler.geometry());
    save_ensemble(cfg, "scheme", &e, &fp)?;
    Ok(true)
}

fn compare(cfg: &RunConfig, a: &Path, b: &Path, allow_grid_mismatch: bool) -> Result<bool> {
    let (ea, ma) = read_ensemble(a)?;
    let (eb, mb) = read_ensemble(b)?;
    if ma.fingerprints.probes != mb.fingerprints.probes {
        return Err(Error::Config("ensembles were observed with different probe definitions".into()));
    }
    if ma.fingerprints.grid != mb.fingerprints.grid && !allow_grid_mismatch {
        return Err(Error::Config(
            "ensembles were sampled on different lattices (pass --allow-grid-mismatch to compare anyway)".into(),
        ));
    }
    let mut r = compare_ensembles(&ea, &eb, &cfg.test_options())?;
    r.label_a = a.display().to_string();
    r.label_b = b.display().to_string();
    std::fs::write(cfg.out.join("compare.csv"), r.to_csv())?;
    let report = json!({
        "inputs": [
            { "path": a, "fingerprints": ma.fingerprints },
            { "path": b, "fingerprints": mb.fingerprints },
        ],
        "overall_pvalue": r.overall_pvalue(),
        "comparison": r,
    });
    write_report(cfg, "compare", r.passed, &report)?;
    Ok(r.passed)
}

fn bound_checks() -> Result<(bool, serde_json::Value)> {
    let three = |g: f64| derive_params(g, &three_point_insertions(g));
    let classic = check_bounds(&three(1.8)?).status == BoundStatus::ClassicSeiberg;
    let extended = check_bounds(&three(1.0)?).status == BoundStatus::ExtendedOnly;
    let g = 1.0;
    let q = lqg_core::chaos::liouville_q(g);
    let mut at_q = three_point_insertions(g);
    at_q[0].alpha = q;
    let violated = check_bounds(&derive_params(g, &at_q)?).status == BoundStatus::Violated;
    let mut sweep = Vec::new();
    for g in [0.5, 1.0, 1.5, 1.9] {
        sweep.push((g, check_bounds(&three(g)?).status));
    }
    let sweep_ok = sweep.iter().all(|(_, s)| *s != BoundStatus::Violated);
    let ok = classic && extended && violated && sweep_ok;
    Ok((ok, json!({ "classic": classic, "extended_only": extended, "violated": violated, "sweep": sweep })))
}

fn selftest(cfg: &RunConfig, skip_null: bool) -> Result<bool> {
    let seed = derive_root(cfg.seed, "selftest");
    let specs = [
        (FubiniSpec::Deterministic { x: 0.0, y: 0.0, z: 1.0 }, 0.5),
        (FubiniSpec::Sampled { shift: 0.0, n: 5000, seed }, 0.4),
        (FubiniSpec::StandardGaussian, 0.25),
    ];
    let mut fubini = Vec::new();
    let mut fubini_ok = true;
    for (spec, delta) in &specs {
        let r = fubini_selftest(spec, *delta)?;
        fubini_ok &= r.max_discrepancy() < 1e-4;
        fubini.push(r);
    }
    let hit = hitting_time_selftest(1.0, 10.0, 5000, 1e-3, derive_root(seed, "hitting"))?;
    let hit_ok = (hit.mean / hit.expected_mean - 1.0).abs() < 0.02 && hit.ks_pvalue > 0.01;
    let (bounds_ok, bounds) = bound_checks()?;
    let mut passed = fubini_ok && hit_ok && bounds_ok;
    let mut report = json!({
        "fubini": { "passed": fubini_ok, "detail": fubini },
        "hitting_time": { "passed": hit_ok, "detail": hit },
        "bounds": { "passed": bounds_ok, "detail": bounds },
    });
    if !skip_null && cfg.compare.null_repeats > 0 {
        let repeats = cfg.compare.null_repeats;
        let n = cfg.dkrv.n;
        let sampler = dkrv_sampler(cfg)?;
        let probes = ResolvedProbes::new(&cfg.probes(), sampler.geometry())?;
        let pool = sampler.ensemble(2 * n * repeats, derive_root(seed, "null"), &probes, "null")?;
        let null = null_calibration(&pool, n, repeats, &cfg.test_options())?;
        // binomial slack: one rejection is always tolerated
        let allowed = ((0.05 * repeats as f64).floor() as usize).max(1);
        let null_ok = null.rejections <= allowed;
        passed &= null_ok;
        report["null_calibration"] = json!({ "passed": null_ok, "allowed_rejections": allowed, "detail": null });
    }
    write_report(cfg, "selftest", passed, &report)?;
    Ok(passed)
}

fn plot(kind: &str, input: &Path, output: &Path) -> Result<bool> {
    kind.parse::<PlotKind>()?;
    match input.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let (e, _) = read_ensemble(input)?;
            emit_plot_data(&PlotInput::Ensemble(&e), kind, output)?;
        }
        Some("json") => {
            let (s, gamma) = read_sphere_sample(input)?;
            emit_plot_data(&PlotInput::Sphere(&s, gamma), kind, output)?;
        }
        _ => return Err(Error::Usage("plot input must be an ensemble .csv or a snapshot .json sidecar".into())),
    }
    println!("plot: {}", output.display());
    Ok(true)
}
