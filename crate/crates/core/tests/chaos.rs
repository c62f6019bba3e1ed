use proptest::prelude::*;

use lqg_core::chaos::{default_probes, gmc_measure, observable_vector, Measure, SingularPart};
use lqg_core::field_core::{CylinderGrid, Field, Geometry, Pinning};

fn geom() -> Geometry {
    Geometry::Cylinder(CylinderGrid::aligned(12, 12, 16).unwrap())
}

fn field(values: &[f64]) -> Field {
    let g = geom();
    let v = (0..g.len()).map(|k| values[k % values.len()]).collect();
    Field::new(g, v, Pinning::ModuloConstant).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shift_moves_only_the_scale(vals in prop::collection::vec(-3.0f64..3.0, 1..40), shift in -20.0f64..20.0, gamma in 0.1f64..1.99) {
        let f = field(&vals);
        let a = gmc_measure(&f, gamma, &SingularPart::none()).unwrap();
        let b = gmc_measure(&f.shifted(shift), gamma, &SingularPart::none()).unwrap();
        prop_assert_eq!(a.normalize().unwrap(), b.normalize().unwrap());
        prop_assert!((b.log_total() - a.log_total() - gamma * shift).abs() < 1e-9);
    }

    #[test]
    fn normalized_measure_has_unit_total(vals in prop::collection::vec(-5.0f64..5.0, 1..40), gamma in 0.1f64..1.99) {
        let m = gmc_measure(&field(&vals), gamma, &SingularPart::none()).unwrap().normalize().unwrap();
        prop_assert!((m.total() - 1.0).abs() < 1e-12);
        prop_assert!(m.relative_masses().iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn probe_fractions_lie_in_unit_interval(vals in prop::collection::vec(-5.0f64..5.0, 1..40)) {
        let m = gmc_measure(&field(&vals), 1.2, &SingularPart::none()).unwrap();
        for x in observable_vector(&m, &default_probes()).unwrap() {
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }
}

#[test]
fn masses_round_trip_through_parts() {
    let g = geom();
    let masses: Vec<f64> = (0..g.len()).map(|k| 1.0 + (k % 7) as f64).collect();
    let m = Measure::from_masses(g.clone(), masses.clone()).unwrap();
    let back = Measure::from_parts(g, m.relative_masses().to_vec(), m.log_scale(), false).unwrap();
    for (a, b) in back.masses().iter().zip(&masses) {
        assert!((a / b - 1.0).abs() < 1e-12);
    }
}
