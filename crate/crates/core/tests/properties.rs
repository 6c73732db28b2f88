//! Property tests for the schedule constructors and path algebra.

use proptest::prelude::*;
use std::sync::Arc;

use thermopath_core::densities::{Gaussian, GeometricPath, ParamVector, QuadrivialPath};
use thermopath_core::schedules::TemperatureSchedule;

fn check_schedule_invariants(s: &TemperatureSchedule) {
    let p = s.points();
    assert_eq!(p[0], 0.0);
    assert_eq!(*p.last().unwrap(), 1.0);
    assert!(p.windows(2).all(|w| w[1] > w[0]));
}

proptest! {
    #[test]
    fn uniform_schedules_satisfy_invariants(n in 1usize..300) {
        check_schedule_invariants(&TemperatureSchedule::uniform(n).unwrap());
    }

    #[test]
    fn powered_fraction_invariants_and_spacing(n in 1usize..200, c in 1.0f64..12.0) {
        let s = TemperatureSchedule::powered_fraction(n, c).unwrap();
        check_schedule_invariants(&s);
        let gaps: Vec<f64> = s.points().windows(2).map(|w| w[1] - w[0]).collect();
        for w in gaps.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-15);
        }
    }

    #[test]
    fn beta_quantile_equals_powered_fraction(n in 1usize..200, a in 0.05f64..1.0) {
        let b = TemperatureSchedule::beta_quantile(n, a).unwrap();
        check_schedule_invariants(&b);
        let pf = TemperatureSchedule::powered_fraction(n, 1.0 / a).unwrap();
        for (x, y) in b.points().iter().zip(pf.points()) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
    }

    #[test]
    fn refinement_retains_all_original_points(n in 2usize..40, panel in 0usize..39, k in 1usize..6) {
        let s = TemperatureSchedule::uniform(n).unwrap();
        let panel = panel % n;
        let (lo, hi) = (s.points()[panel], s.points()[panel + 1]);
        let r = s.refine_interval(lo, hi, k).unwrap();
        check_schedule_invariants(&r);
        prop_assert_eq!(r.len(), s.len() + k - 1);
        for p in s.points() {
            prop_assert!(r.points().contains(p));
        }
    }

    #[test]
    fn geometric_log_linearity_and_u_consistency(
        x in -3.0f64..3.0,
        t in 0.01f64..0.99,
        m1 in -2.0f64..2.0,
        v1 in 0.2f64..3.0,
    ) {
        let q0 = Gaussian::kernel(vec![0.0], vec![1.0]).unwrap().shared();
        let q1 = Gaussian::kernel(vec![m1], vec![v1]).unwrap().shared();
        let path = GeometricPath::new(q0, q1);
        let theta = ParamVector::new(vec![x]).unwrap();

        let l0 = path.log_q(&theta, 0.0).unwrap();
        let l1 = path.log_q(&theta, 1.0).unwrap();
        let lt = path.log_q(&theta, t).unwrap();
        prop_assert!((lt - ((1.0 - t) * l0 + t * l1)).abs() < 1e-10);

        // u equals the centered finite difference of log_q in t
        let h = 1e-6;
        let fd = (path.log_q(&theta, t + h).unwrap() - path.log_q(&theta, t - h).unwrap()) / (2.0 * h);
        prop_assert!((path.u_stat(&theta).unwrap() - fd).abs() < 1e-8);

        // swapping endpoints negates u
        let swapped = path.swapped();
        prop_assert!((path.u_stat(&theta).unwrap() + swapped.u_stat(&theta).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn quadrivial_u_matches_finite_difference(
        x in -2.5f64..2.5,
        t in 0.05f64..0.95,
        m in -1.5f64..1.5,
    ) {
        let d = |mu: f64, v: f64| Gaussian::kernel(vec![mu], vec![v]).unwrap().shared();
        let path = QuadrivialPath::new(d(m, 1.0), d(0.4, 2.0), d(-0.3, 0.7), d(0.0, 1.0));
        let theta = ParamVector::new(vec![x]).unwrap();
        let h = 1e-5;
        let fd = (path.log_q(&theta, t + h).unwrap() - path.log_q(&theta, t - h).unwrap()) / (2.0 * h);
        prop_assert!((path.u_stat(&theta, t).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn tempered_target_is_shareable_across_threads(t in 0.0f64..1.0) {
        use thermopath_core::densities::{LogDensity, TemperedPath, TemperedTarget};
        let q0 = Gaussian::kernel(vec![0.0], vec![1.0]).unwrap().shared();
        let q1 = Gaussian::kernel(vec![1.0], vec![1.0]).unwrap().shared();
        let path: Arc<dyn TemperedPath> = Arc::new(GeometricPath::new(q0, q1));
        let target = TemperedTarget::new(path, t).unwrap();
        let theta = ParamVector::new(vec![0.2]).unwrap();
        let expected = target.log_density(&theta);
        let results: Vec<f64> = (0..4)
            .map(|_| {
                let tgt = target.clone();
                let th = theta.clone();
                std::thread::spawn(move || tgt.log_density(&th)).join().unwrap()
            })
            .collect();
        for r in results {
            prop_assert_eq!(r, expected);
        }
    }
}
