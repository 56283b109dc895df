use proptest::prelude::*;
use wakelab::muckenhoupt::{aq_ratio, aq_scan_classify, AqScan, CenterPlan, Growth};
use wakelab::weights::{is_muckenhoupt_admissible, WeightSpec};

fn classify(alpha: f64, beta: f64, q: f64) -> wakelab::muckenhoupt::AqClassification {
    aq_scan_classify(&AqScan::new(WeightSpec::new(alpha, beta), q, 1e3)).unwrap()
}

fn assert_power(alpha: f64, beta: f64, q: f64, expected: f64) {
    let c = classify(alpha, beta, q);
    match c.verdict {
        Growth::Power(p) => assert!((p - expected).abs() <= 0.05, "({alpha}, {beta}, {q}): power {p}, expected {expected}"),
        other => panic!("({alpha}, {beta}, {q}): expected power({expected}), got {other}"),
    }
}

#[test]
fn constant_weight_has_unit_ratio_everywhere() {
    let c = classify(0.0, 0.0, 2.0);
    assert_eq!(c.verdict, Growth::Bounded);
    assert!(c.rows.iter().all(|row| (row.ratio - 1.0).abs() < 1e-12));
}

#[test]
fn unit_ball_ratio_is_finite_and_at_least_one() {
    let r = aq_ratio(&WeightSpec::new(0.0, 0.5), 2.0, &[0.0; 3], 1.0).unwrap();
    assert!(r.is_finite() && r >= 1.0);
}

#[test]
fn admissible_weight_is_bounded() {
    let c = classify(0.4, 0.4, 2.0);
    assert_eq!(c.verdict, Growth::Bounded);
    assert!(c.slope.abs() <= 0.05, "slope {}", c.slope);
    let small = c.sup[0].1;
    let max = c.sup.iter().map(|s| s.1).fold(0.0, f64::max);
    assert!(max < 10.0 * small, "max {max}, small-ball {small}");
}

#[test]
fn critical_negative_wake_exponent_grows_logarithmically() {
    let scan = AqScan { centers: CenterPlan::Origin, ..AqScan::new(WeightSpec::new(0.0, -1.0), 2.0, 1e3) };
    assert_eq!(aq_scan_classify(&scan).unwrap().verdict, Growth::Log);
    assert_eq!(classify(0.0, -1.0, 2.0).verdict, Growth::Log);
}

#[test]
fn wake_exponent_below_minus_one_grows_like_power() {
    // r^{-β-1} with β = -1.5.
    assert_power(0.0, -1.5, 2.0, 0.5);
}

#[test]
fn critical_positive_wake_exponent_grows_logarithmically() {
    // (log r)^{q-1} with β = q-1 = 1.
    assert_eq!(classify(0.0, 1.0, 2.0).verdict, Growth::Log);
}

#[test]
fn wake_exponent_above_q_minus_one_grows_like_power() {
    // r^{β-(q-1)} with β = 1.2.
    assert_power(0.0, 1.2, 2.0, 0.2);
}

#[test]
fn very_negative_total_exponent_grows_like_power() {
    // r^{-α-β-3} with α+β = -3.5.
    assert_power(-2.7, -0.8, 2.0, 0.5);
}

#[test]
fn very_positive_total_exponent_grows_like_power() {
    // r^{α+β-3(q-1)} with α+β = 7.
    assert_power(7.0, 0.0, 2.0, 4.0);
}

#[test]
fn bounded_iff_admissible() {
    let cases = [
        (0.4, 0.4, 2.0),
        (-1.0, 0.5, 2.0),
        (2.0, -0.5, 2.0),
        (1.0, 0.5, 3.0),
        (0.0, 1.2, 2.0),
        (7.0, 0.0, 2.0),
        (-2.7, -0.8, 2.0),
        (0.0, -1.5, 2.0),
        (0.0, 2.5, 3.0),
    ];
    for (a, b, q) in cases {
        let admissible = is_muckenhoupt_admissible(&WeightSpec::new(a, b), q).unwrap().admissible;
        let bounded = classify(a, b, q).verdict == Growth::Bounded;
        assert_eq!(admissible, bounded, "({a}, {b}, {q})");
    }
}

#[test]
fn far_small_balls_stay_bounded_for_any_radial_exponent() {
    for alpha in [-6.0, 5.0] {
        let w = WeightSpec::new(alpha, 0.5);
        let mut max: f64 = 0.0;
        for r in [1.0, 10.0, 100.0, 1000.0] {
            for c in [[2.0 * r, 0.0, 0.0], [-2.0 * r, 0.0, 0.0], [0.0, 2.0 * r, 0.0], [0.0, 3.0 * r, 4.0 * r]] {
                max = max.max(aq_ratio(&w, 2.0, &c, r).unwrap());
            }
        }
        assert!(max < 10.0, "alpha = {alpha}: max ratio {max}");
    }
}

#[test]
fn ratio_varies_continuously_under_transverse_shift() {
    let w = WeightSpec::new(0.3, 0.4);
    let base = aq_ratio(&w, 2.0, &[5.0, 2.0, 0.0], 3.0).unwrap();
    let moved = aq_ratio(&w, 2.0, &[5.0, 2.0 + 1e-3, 1e-3], 3.0).unwrap();
    assert!((moved - base).abs() < 1e-3 * base);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ratio_is_at_least_one(
        a in -2.0f64..2.0, b in -0.9f64..0.9, q in 1.5f64..4.0,
        cx in -20.0f64..20.0, cy in -20.0f64..20.0, r in 0.2f64..30.0
    ) {
        let ratio = aq_ratio(&WeightSpec::new(a, b), q, &[cx, cy, 0.0], r).unwrap();
        prop_assert!(ratio >= 1.0 - 1e-9, "ratio {}", ratio);
    }
}
