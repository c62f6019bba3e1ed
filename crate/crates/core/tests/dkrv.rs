use num_complex::Complex64;
use proptest::prelude::*;

use lqg_core::chaos::{default_probes, ResolvedProbes};
use lqg_core::dkrv::{check_bounds, derive_params, three_point_insertions, BoundStatus, DkrvSampler, Insertion, InsertionRule};
use lqg_core::field_core::{BackgroundMeasure, CylinderGrid, Geometry};

proptest! {
    #[test]
    fn three_gamma_insertions_never_violate(gamma in 0.01f64..1.99) {
        let p = derive_params(gamma, &three_point_insertions(gamma)).unwrap();
        prop_assert_ne!(p.bound_status(), BoundStatus::Violated);
        // s = 3γ - 2Q
        prop_assert!((p.s - (3.0 * gamma - 2.0 * (2.0 / gamma + gamma / 2.0))).abs() < 1e-12);
    }

    #[test]
    fn classic_implies_extended(gamma in 0.1f64..1.99, a in 0.0f64..3.0, b in 0.0f64..3.0, c in 0.0f64..3.0) {
        let ins = vec![
            Insertion::at(Complex64::new(0.0, 0.0), a),
            Insertion::at(Complex64::new(1.0, 0.0), b),
            Insertion::at_infinity(c),
        ];
        let r = check_bounds(&derive_params(gamma, &ins).unwrap());
        if r.status == BoundStatus::ClassicSeiberg {
            prop_assert!(r.extended);
        }
    }
}

#[test]
fn weights_invert_total_mass_power() {
    let gamma = 1.7;
    let params = derive_params(gamma, &three_point_insertions(gamma)).unwrap();
    let geom = Geometry::Cylinder(CylinderGrid::aligned_covering(-6.0, 6.0, 16).unwrap());
    let s = DkrvSampler::new(&params, &BackgroundMeasure::unit_circle(), &geom, InsertionRule::LatticeGreen).unwrap();
    for i in 0..20 {
        let d = s.draw(3, i).unwrap();
        assert!((d.weight * (params.s / gamma * d.log_total).exp() - 1.0).abs() < 1e-12);
        assert!((d.measure.total() - 1.0).abs() < 1e-12);
        assert!((d.field_shift + d.log_total / gamma).abs() < 1e-12);
    }
    let probes = ResolvedProbes::new(&default_probes(), &geom).unwrap();
    let e = s.ensemble(50, 3, &probes, "dkrv").unwrap();
    assert_eq!(e.records[7].weight, s.draw(3, 7).unwrap().weight);
}
