use num_complex::Complex64;
use proptest::prelude::*;

use lqg_core::field_core::{
    circle_average, pin_to_background, radial_angular_split, sample_dirichlet_gff, BackgroundMeasure, CylinderGrid,
    Field, Geometry, Pinning, PlanarGrid, WholePlaneCylinderSampler,
};
use lqg_core::rng;

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circle_average_of_constant_is_constant(v in -50.0f64..50.0, r in 0.15f64..0.9) {
        let geom = Geometry::Planar(PlanarGrid::new(32, 1.0).unwrap());
        let f = Field::constant_field(geom, v);
        prop_assert!((circle_average(&f, c(0.0, 0.0), r).unwrap() - v).abs() < 1e-9);
    }

    #[test]
    fn radial_angular_split_reconstructs(seed in 0u64..1000) {
        let g = CylinderGrid::aligned(6, 6, 16).unwrap();
        let f = WholePlaneCylinderSampler::new(&g).sample(&mut rng::stream(seed, 0));
        let s = radial_angular_split(&f).unwrap();
        let back = s.reconstruct();
        for (a, b) in back.values().iter().zip(f.flattened()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for row in s.angular.values().chunks(16) {
            prop_assert!(row.iter().sum::<f64>().abs() < 1e-10);
        }
    }

    #[test]
    fn green_is_symmetric_for_both_backgrounds(x in -3.0f64..3.0, y in -3.0f64..3.0, u in -3.0f64..3.0, v in -3.0f64..3.0) {
        prop_assume!((x - u).hypot(y - v) > 1e-6);
        for rho in [BackgroundMeasure::spherical(), BackgroundMeasure::unit_circle()] {
            prop_assert_eq!(rho.green(c(x, y), c(u, v)).unwrap(), rho.green(c(u, v), c(x, y)).unwrap());
        }
    }

    #[test]
    fn pinning_removes_the_background_average(seed in 0u64..200) {
        let grid = PlanarGrid::new(32, 4.0).unwrap();
        let f = sample_dirichlet_gff(&grid, seed).unwrap().shifted(1.7);
        let rho = BackgroundMeasure::unit_circle();
        let p = pin_to_background(&f, &rho).unwrap();
        prop_assert!(rho.average(&p).unwrap().abs() < 1e-10);
        prop_assert_eq!(p.pinning(), Pinning::CircleMeanZero);
    }
}

#[test]
fn unit_circle_green_matches_closed_form() {
    // G_𝔠(x, y) = -log|x - y| + log(|x| ∨ 1) + log(|y| ∨ 1)
    let rho = BackgroundMeasure::unit_circle();
    for (x, y) in [(c(0.3, 0.1), c(-0.5, 0.2)), (c(2.0, 0.0), c(0.0, 3.0)), (c(0.0, 0.0), c(5.0, 5.0))] {
        let oracle = -(x - y).norm().ln() + x.norm().max(1.0).ln() + y.norm().max(1.0).ln();
        assert!((rho.green(x, y).unwrap() - oracle).abs() < 1e-9, "{x} {y}");
    }
}

#[test]
fn cylinder_samples_are_seed_deterministic() {
    let g = CylinderGrid::aligned(8, 8, 16).unwrap();
    let s = WholePlaneCylinderSampler::new(&g);
    assert_eq!(s.sample(&mut rng::stream(4, 2)), s.sample(&mut rng::stream(4, 2)));
    assert_ne!(s.sample(&mut rng::stream(4, 2)), s.sample(&mut rng::stream(4, 3)));
}
