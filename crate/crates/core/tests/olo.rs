mod common;

use proptest::prelude::*;

use common::reference_olo_regret;
use ksubmax::olo::{default_eta, olo_regret, project_k, Ogd, RegionK, DIAMETER};

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

proptest! {
    #[test]
    fn projection_is_the_closest_point(
        v in prop::collection::vec(-3.0f64..3.0, 1..6),
        probes in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 20),
    ) {
        let k = v.len();
        let region = RegionK::new(k);
        let p = project_k(&v);
        prop_assert!(region.contains(&p));
        let d = dist(&p, &v);
        for probe in probes {
            // scale the probe into K
            let raw = &probe[..k];
            let len = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            let q: Vec<f64> = if len > 1.0 { raw.iter().map(|x| x / len).collect() } else { raw.to_vec() };
            prop_assert!(d <= dist(&q, &v) + 1e-12);
        }
    }

    #[test]
    fn projection_fixes_points_of_k(v in prop::collection::vec(0.0f64..0.4, 1..6)) {
        prop_assert_eq!(project_k(&v), v);
    }

    #[test]
    fn ogd_regret_within_bound(
        k in 1usize..6,
        seq in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 5), 1..300),
        fixed in prop::option::of(1e-3f64..1.0),
    ) {
        let horizon = seq.len();
        let eta = fixed.unwrap_or_else(|| default_eta(k, horizon));
        let mut ogd = Ogd::new(k, eta).unwrap();
        let mut losses = Vec::new();
        let mut plays = Vec::new();
        for f in &seq {
            let f = f[..k].to_vec();
            plays.push(ogd.theta().to_vec());
            ogd.step(&f).unwrap();
            losses.push(f);
        }
        let reference = reference_olo_regret(&losses, &plays);
        prop_assert!((ogd.regret() - reference).abs() < 1e-9);
        prop_assert!((olo_regret(&losses, &plays).unwrap() - reference).abs() < 1e-9);
        let squares: f64 = losses.iter().flatten().map(|v| v * v).sum();
        prop_assert!(reference <= DIAMETER * DIAMETER / eta + eta * squares + 1e-9);
    }
}

#[test]
fn min_linear_matches_closed_form() {
    let region = RegionK::new(3);
    assert!((region.min_linear(&[3.0, -4.0, 0.0]) + 4.0).abs() < 1e-12);
    assert!((region.min_linear(&[-3.0, -4.0, 1.0]) + 5.0).abs() < 1e-12);
    assert_eq!(region.min_linear(&[1.0, 2.0, 0.0]), 0.0);
}

#[test]
fn bad_step_sizes_are_rejected() {
    assert!(Ogd::new(2, 0.0).is_err());
    assert!(Ogd::new(2, f64::NAN).is_err());
    assert!(Ogd::new(2, -1.0).is_err());
}
