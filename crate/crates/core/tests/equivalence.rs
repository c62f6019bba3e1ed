use lqg_core::chaos::default_probes;
use lqg_core::equivalence::*;
use lqg_core::rng;
use lqg_core::stats::TestOptions;

#[test]
fn split_conditioning_matches_rejection() {
    let mut c = SchemeConfig::new(2f64.sqrt(), 1.0 / 8.0, 0.3);
    c.resolution = 64;
    let split = SchemeSampler::new(&c).unwrap().ensemble(800, 1, &default_probes(), "split").unwrap();
    c.method = ConditioningMethod::Rejection;
    let rej = SchemeSampler::new(&c).unwrap().ensemble(400, 2, &default_probes(), "rejection").unwrap();
    assert!(rej.acceptance.unwrap().rate() > 0.0);
    for r in &rej.records {
        assert!(r.log_total.abs() <= c.gamma * c.delta);
    }
    let report = compare_ensembles(&split, &rej, &TestOptions::default()).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn split_draws_satisfy_both_events() {
    let mut c = SchemeConfig::new(1.6, 1.0 / 16.0, 0.3);
    c.resolution = 128;
    let s = SchemeSampler::new(&c).unwrap();
    for i in 0..20 {
        let d = s.sample(&mut rng::stream(8, i)).unwrap();
        if d.weight > 0.0 {
            assert!(d.flags.e_flag && d.flags.h_flag, "{:?}", d.flags);
            assert!((d.measure.total() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn circle_event_mostly_holds_at_gamma_1_6() {
    let mut c = SchemeConfig::new(1.6, 1.0 / 16.0, 0.3);
    c.resolution = 128;
    let s = SchemeSampler::new(&c).unwrap();
    let hits = (0..500)
        .filter(|&i| s.compute_events(&s.scheme_field(&mut rng::stream(9, i))).unwrap().h_flag)
        .count();
    assert!(hits as f64 / 500.0 > 0.5, "{hits}");
}

#[test]
fn rejection_acceptance_is_positive_at_default_scale() {
    let mut c = SchemeConfig::new(2f64.sqrt(), 1.0 / 16.0, 0.3);
    c.method = ConditioningMethod::Rejection;
    c.resolution = 128;
    let d = SchemeSampler::new(&c).unwrap().sample(&mut rng::stream(10, 0)).unwrap();
    assert!(d.acceptance.rate() > 0.0);
    assert!(d.flags.e_flag && d.flags.h_flag);
}

#[test]
fn epsilon_ladder_stabilizes() {
    let c = SchemeConfig::new(2f64.sqrt(), 1.0 / 8.0, 0.3);
    let l = epsilon_ladder(&c, &[1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0], 4, 600, 3, &default_probes()).unwrap();
    assert!(l.non_increasing(), "{l:?}");
}

#[test]
fn fubini_examples() {
    let r = fubini_selftest(&FubiniSpec::Deterministic { x: 0.0, y: 0.0, z: 1.0 }, 0.5).unwrap();
    assert!((r.f1_lhs - 1.0).abs() < 1e-6 && (r.f2_lhs - 1.0).abs() < 1e-6);
    let r = fubini_selftest(&FubiniSpec::Sampled { shift: 0.0, n: 5000, seed: 1 }, 0.4).unwrap();
    assert!((r.f2_rhs - 2.0 * 0.4 * r.f1_rhs / 0.8).abs() < 1e-12);
    assert!(r.max_discrepancy() < 1e-4);
    let r = fubini_selftest(&FubiniSpec::StandardGaussian, 0.25).unwrap();
    assert!((r.f1_lhs - 0.5).abs() < 1e-4);
}
