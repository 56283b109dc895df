use proptest::prelude::*;
use wakelab::muckenhoupt::log_space;
use wakelab::rates::{
    fit_exponent, heat_sanity_plan, measure, run_row, sweep, ExperimentSpec, RowStatus, SweepPlan, TestData,
    MIN_FIT_POINTS, SWEEP_CSV_HEADER,
};
use wakelab::regions::{Lebesgue, Q};
use wakelab::Error;

fn power_series(c: f64, p: f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    log_space(lo, hi, n).into_iter().map(|t| (t, c * t.powf(p))).collect()
}

#[test]
fn exact_power_law() {
    let fit = fit_exponent(&power_series(3.7, -1.5, 1.0, 1e3, 16), None).unwrap();
    assert!((fit.slope + 1.5).abs() <= 1e-12, "{}", fit.slope);
    assert!((fit.intercept - 3.7f64.ln()).abs() <= 1e-10);
    assert!(fit.r2 > 1.0 - 1e-12);
    assert!(!fit.curved);
    assert_eq!(fit.n_points, 16);
}

#[test]
fn logarithmic_correction_is_flagged() {
    let series: Vec<(f64, f64)> = log_space(1e2, 1e4, 20).into_iter().map(|t| (t, t.ln() / t)).collect();
    let fit = fit_exponent(&series, None).unwrap();
    assert!(fit.slope > -1.0 && fit.slope < -0.85, "{}", fit.slope);
    assert!(fit.curved, "curvature {}", fit.curvature);
}

#[test]
fn nonpositive_values_are_input_errors() {
    let mut series = power_series(1.0, -1.0, 1.0, 10.0, 10);
    series[4].1 = 0.0;
    assert!(matches!(fit_exponent(&series, None), Err(Error::Input(_))));
    series[4].1 = -1.0;
    assert!(matches!(fit_exponent(&series, None), Err(Error::Input(_))));
}

#[test]
fn too_few_points_are_rejected() {
    let series = power_series(1.0, -1.0, 1.0, 10.0, MIN_FIT_POINTS - 1);
    assert!(matches!(fit_exponent(&series, None), Err(Error::Input(_))));
    let series = power_series(1.0, -1.0, 1.0, 10.0, 20);
    assert!(fit_exponent(&series, Some((9.0, 10.0))).is_err());
}

#[test]
fn window_restricts_the_fit() {
    let mut series = power_series(1.0, -2.0, 1.0, 100.0, 30);
    series.extend(power_series(1e-4, 0.0, 200.0, 1000.0, 5));
    let fit = fit_exponent(&series, Some((1.0, 150.0))).unwrap();
    assert!((fit.slope + 2.0).abs() <= 1e-12);
    assert_eq!(fit.n_points, 30);
}

#[test]
fn heat_sanity_sweep_matches_reference_slopes() {
    let summary = sweep(&heat_sanity_plan());
    assert!(summary.all_pass(), "{summary:?}");
    assert_eq!(summary.pass_count, 3);
    for (row, expected) in summary.rows.iter().zip([-1.5, -0.75, 0.0]) {
        let slope = row.fit.unwrap().slope;
        assert!((slope - expected).abs() <= 0.05, "{}: {slope}", row.spec.label);
    }
}

fn small_spec() -> ExperimentSpec {
    ExperimentSpec {
        label: "small".into(),
        a: 0.0,
        alpha: Q::from_integer(0),
        beta: Q::from_integer(0),
        dual_weight: false,
        q: Lebesgue::int(2),
        r: Lebesgue::int(2),
        deriv: 0,
        data: TestData::Solenoidal,
        n: 64,
        half_width: None,
        t_min: 1.0,
        t_max: 8.0,
        n_times: 8,
        tolerance: None,
        expected: None,
    }
}

#[test]
fn guard_failure_is_a_failed_row_not_a_failed_sweep() {
    let bad = ExperimentSpec { label: "boxed".into(), a: 1.0, half_width: Some(12.0), t_max: 32.0, ..small_spec() };
    let summary = sweep(&[bad, small_spec()]);
    assert_eq!(summary.rows[0].status, RowStatus::Error);
    let safe = summary.rows[0].max_safe_t.expect("max safe t");
    assert!(safe > 0.0 && safe < 32.0);
    assert_ne!(summary.rows[1].status, RowStatus::Error);
    assert_eq!(summary.fail_count, 1);
    assert!(!summary.all_pass());
}

#[test]
fn measured_samples_carry_the_guard() {
    let samples = measure(&small_spec()).unwrap();
    assert_eq!(samples.len(), 8);
    for (t, v, g) in samples {
        assert!(t >= 1.0 && v > 0.0 && g <= 1e-6);
    }
}

#[test]
fn energy_of_solenoidal_bump_decays_within_prediction() {
    let row = run_row(&small_spec());
    assert_eq!(row.predicted, Some(0.0));
    assert_eq!(row.status, RowStatus::Pass);
    assert_eq!(row.csv_fields().len(), SWEEP_CSV_HEADER.len());
}

#[test]
fn plans_parse_from_objects_and_arrays() {
    let one = serde_json::to_string(&small_spec()).unwrap();
    let arr = SweepPlan::from_json(&format!("[{one}]")).unwrap();
    let obj = SweepPlan::from_json(&format!("{{\"name\": \"p\", \"experiments\": [{one}]}}")).unwrap();
    assert_eq!(arr.experiments, obj.experiments);
    assert_eq!(obj.name, "p");
    assert_eq!(arr.experiments[0], small_spec());
}

proptest! {
    #[test]
    fn pure_power_slope_is_stationary_under_window_halving(p in -3.0f64..1.0, c in 1e-6f64..1e6, lo in 0.1f64..10.0) {
        let series = power_series(c, p, lo, lo * 1e3, 24);
        let full = fit_exponent(&series, None).unwrap();
        let upper = fit_exponent(&series, Some((lo * 1e3f64.sqrt(), lo * 1e3))).unwrap();
        prop_assert!((full.slope - upper.slope).abs() < 0.03);
    }

    #[test]
    fn slope_and_verdict_ignore_amplitude(p in -2.0f64..0.5, c in 1e-8f64..1e8, bound in -2.0f64..0.5) {
        let series: Vec<(f64, f64)> = log_space(2.0, 32.0, 12)
            .into_iter()
            .map(|t| (t, t.powf(p) * (1.0 + 0.1 * (t.ln()).sin())))
            .collect();
        let scaled: Vec<(f64, f64)> = series.iter().map(|&(t, v)| (t, c * v)).collect();
        let a = fit_exponent(&series, None).unwrap();
        let b = fit_exponent(&scaled, None).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-9);
        prop_assume!((a.slope - bound - 0.1).abs() > 1e-9);
        prop_assert_eq!(a.slope <= bound + 0.1, b.slope <= bound + 0.1);
    }
}
