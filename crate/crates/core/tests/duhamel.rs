use std::sync::Arc;

use proptest::prelude::*;
use wakelab::duhamel::{
    duhamel_norms, duhamel_solve, picard_iterate, triple_norm, ForcingKind, ForcingSpec, TimeGrid, Transition,
    SURROGATE_LABEL,
};
use wakelab::field::{synthetic_wake_profile, GridField, GridShape, WakeParams, WeightedNorm};
use wakelab::semigroup::{default_test_field, evolve, gaussian_bump, OseenParams};
use wakelab::Error;

fn data_shape() -> GridShape {
    GridShape::centered(64, 16.0).unwrap()
}

/// The starting-problem geometry, where the wake satisfies the guard.
fn wake_shape() -> GridShape {
    GridShape::new(128, 100.0, [8.0, 0.0, 0.0]).unwrap()
}

fn wake(s: &GridShape) -> GridField {
    synthetic_wake_profile(&WakeParams { u0: 0.01, core: 2.0, cutoff: 20.0 }, s).unwrap()
}

fn pointwise_sup(f: &GridField) -> f64 {
    let len = f.shape.len();
    (0..len)
        .map(|i| (0..f.comps).map(|c| f.data[c * len + i].powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

fn rel_diff(a: &GridField, b: &GridField) -> f64 {
    a.axpy(-1.0, b).unwrap().l2_norm() / b.l2_norm().max(1e-300)
}

#[test]
fn zero_forcing_is_the_semigroup() {
    let s = data_shape();
    let v0 = default_test_field(&s, &[0.0; 3]);
    let forcing = ForcingSpec::new(ForcingKind::Zero, GridField::zeros(s, 3), 0.5);
    let grid = TimeGrid::geometric(0.01, 2.0, 12).unwrap();
    let out = duhamel_solve(&v0, &forcing, &grid).unwrap();
    assert_eq!(out.len(), grid.nodes.len());
    let direct = evolve(&v0, &OseenParams::new(0.5, 2.0)).unwrap();
    assert!(rel_diff(out.last().unwrap(), &direct) <= 1e-10);
}

#[test]
fn first_forcing_switches_off_after_the_transition() {
    let s = wake_shape();
    let forcing = ForcingSpec::new(ForcingKind::F1, wake(&s), 0.25);
    let grid = TimeGrid::uniform(2.0, 8).unwrap();
    let out = duhamel_solve(&GridField::zeros(s, 3), &forcing, &grid).unwrap();
    assert!(out[4].l2_norm() > 0.0);
    let free = evolve(&out[4], &OseenParams::new(0.25, 1.0)).unwrap();
    assert!(rel_diff(&out[8], &free) <= 1e-10);
}

#[test]
fn solution_is_linear_in_data_and_forcing() {
    let s = GridShape::centered(32, 8.0).unwrap();
    let g1 = default_test_field(&s, &[0.5, 0.0, 0.0]);
    let g2 = default_test_field(&s, &[0.0, 0.5, -0.5]);
    let custom = |f: GridField, c: f64| {
        ForcingKind::Custom(Arc::new(move |t: f64| f.scaled(c * (1.0 + t).recip())))
    };
    let v1 = default_test_field(&s, &[0.0; 3]);
    let v2 = default_test_field(&s, &[-0.5, 0.5, 0.0]).scaled(0.3);
    let grid = TimeGrid::uniform(0.2, 10).unwrap();
    let zero = GridField::zeros(s, 3);
    let a = 0.6;
    let solve = |v: &GridField, k: ForcingKind| duhamel_solve(v, &ForcingSpec::new(k, zero.clone(), a), &grid).unwrap();
    let first = solve(&v1, custom(g1.clone(), 1.0));
    let second = solve(&v2, custom(g2.clone(), -2.0));
    let sum_forcing = {
        let (g1, g2) = (g1.clone(), g2.clone());
        ForcingKind::Custom(Arc::new(move |t: f64| g1.axpy(-2.0, &g2).unwrap().scaled((1.0 + t).recip())))
    };
    let both = solve(&v1.axpy(1.0, &v2).unwrap(), sum_forcing);
    for n in 0..grid.nodes.len() {
        let sum = first[n].axpy(1.0, &second[n]).unwrap();
        assert!(rel_diff(&both[n], &sum) <= 1e-8, "node {n}");
    }
}

/// `curl(g e₁)` for the unit-mass Gaussian `g` of parameter 1.
fn curl_of_bump(s: &GridShape) -> GridField {
    let g = gaussian_bump(s, 1.0, &[0.0; 3]);
    let mut f = GridField::zeros(*s, 3);
    f.data[..s.len()].copy_from_slice(&g.data);
    f.to_spectral().curl().unwrap().to_real()
}

fn stack(scalar: &GridField) -> GridField {
    let len = scalar.shape.len();
    let mut out = GridField::zeros(scalar.shape, 3);
    out.data[..len].copy_from_slice(&scalar.data);
    out.data[2 * len..].copy_from_slice(&scalar.data);
    out
}

#[test]
fn halving_the_step_changes_little() {
    let s = wake_shape();
    let forcing = ForcingSpec::new(ForcingKind::F1F2, wake(&s), 0.25);
    let grid = TimeGrid::uniform(2.0, 24).unwrap();
    let norm = WeightedNorm::plain(2.0).unwrap();
    let zero = GridField::zeros(s, 3);
    let coarse = duhamel_norms(&zero, &forcing, &grid, &[norm]).unwrap();
    let fine = duhamel_norms(&zero, &forcing, &grid.refined(), &[norm]).unwrap();
    let (c, f) = (coarse.last().unwrap().norms[0], fine.last().unwrap().norms[0]);
    assert!(c > 0.0);
    assert!((c / f - 1.0).abs() < 0.01, "{c} vs {f}");
    assert_eq!(coarse.last().unwrap().t, fine.last().unwrap().t);
}

#[test]
fn second_forcing_without_drift_or_wake_vanishes() {
    let s = data_shape();
    let forcing = ForcingSpec::new(ForcingKind::F2, GridField::zeros(s, 3), 0.0);
    let grid = TimeGrid::uniform(2.0, 8).unwrap();
    for v in duhamel_solve(&GridField::zeros(s, 3), &forcing, &grid).unwrap() {
        assert!(v.data.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn guard_breach_truncates_the_horizon() {
    let s = GridShape::centered(32, 8.0).unwrap();
    let v0 = default_test_field(&s, &[0.0; 3]);
    let forcing = ForcingSpec::new(ForcingKind::Zero, GridField::zeros(s, 3), 2.0);
    let grid = TimeGrid::uniform(8.0, 16).unwrap();
    match duhamel_solve(&v0, &forcing, &grid) {
        Err(Error::HorizonTruncated { t, max_safe_t }) => assert!(max_safe_t < t && t <= 8.0),
        other => panic!("expected truncation, got {:?}", other.map(|v| v.len())),
    }
}

#[test]
fn norm_rows_are_nonnegative_with_guard() {
    let s = wake_shape();
    let forcing = ForcingSpec::new(ForcingKind::F1, wake(&s), 0.25);
    let grid = TimeGrid::geometric(0.05, 2.0, 4).unwrap();
    let rows = duhamel_norms(&GridField::zeros(s, 3), &forcing, &grid, &[WeightedNorm::plain(3.0).unwrap()]).unwrap();
    for row in rows {
        assert!(row.norms[0] >= 0.0 && row.guard <= 1e-6);
    }
}

#[test]
fn triple_of_zero_field_is_zero() {
    let s = GridShape::centered(16, 6.0).unwrap();
    let fields = vec![GridField::zeros(s, 3); 4];
    let t = triple_norm(&[0.0, 0.5, 1.0, 2.0], &fields, 0.3, 0.2).unwrap();
    assert_eq!(t.last(), [0.0; 3]);
    assert_eq!(t.times.len(), 3);
}

#[test]
fn triple_of_inverse_square_root_profile_is_constant() {
    let s = GridShape::centered(16, 6.0).unwrap();
    let p = default_test_field(&s, &[0.0; 3]);
    let sup = pointwise_sup(&p);
    let times = [0.25, 1.0, 4.0, 16.0];
    let fields: Vec<GridField> = times.iter().map(|t: &f64| p.scaled(t.powf(-0.5))).collect();
    let t = triple_norm(&times, &fields, 0.0, 0.0).unwrap();
    for v in &t.vinf {
        assert!((v / sup - 1.0).abs() <= 1e-12);
    }
    assert!((t.v3[0] - t.v3[3]).abs() <= 1e-12 * t.v3[0]);
}

#[test]
fn heat_triple_stabilizes() {
    let s = data_shape();
    let v0 = stack(&gaussian_bump(&s, 0.5, &[0.0; 3]));
    let times: Vec<f64> = (1..=12).map(|i| 0.02 * i as f64 * i as f64).collect();
    let fields: Vec<GridField> = times.iter().map(|&t| evolve(&v0, &OseenParams::new(0.0, t)).unwrap()).collect();
    let t = triple_norm(&times, &fields, 0.0, 0.0).unwrap();
    let n = t.vinf.len();
    assert!(t.vinf[n - 1].is_finite());
    assert_eq!(t.vinf[n - 1], t.vinf[n / 2]);
    for w in t.vinf.windows(2).chain(t.v3.windows(2)).chain(t.grad3.windows(2)) {
        assert!(w[1] >= w[0] && w[0] >= 0.0);
    }
}

#[test]
fn picard_with_zero_data_stays_zero() {
    let s = GridShape::centered(16, 6.0).unwrap();
    let zero = GridField::zeros(s, 3);
    let grid = TimeGrid::geometric(0.01, 1.0, 6).unwrap();
    let rep = picard_iterate(&zero, &zero, 0.5, 3, &grid).unwrap();
    assert!(!rep.diverged);
    for t in &rep.triples {
        assert_eq!(t.total(), 0.0);
    }
    assert!(rep.increments.iter().all(|&d| d == 0.0));
    assert!(rep.report.contains(SURROGATE_LABEL));
}

#[test]
fn picard_contracts_for_small_data() {
    let s = GridShape::new(64, 16.0, [0.25, 0.0, 0.0]).unwrap();
    let b = curl_of_bump(&s).scaled(0.02);
    let grid = TimeGrid::geometric(0.01, 2.0, 12).unwrap();
    let rep = picard_iterate(&b, &GridField::zeros(s, 3), 0.5, 4, &grid).unwrap();
    assert!(rep.contracting && !rep.diverged, "{}", rep.report);
    assert!(rep.ratios.iter().all(|&r| r < 1.0));
}

proptest! {
    #[test]
    fn transition_is_bounded_and_switches(t in -2.0f64..3.0, mid in prop::collection::vec(-1.0f64..1.0, 0..6)) {
        let mut v = vec![0.0];
        v.extend(mid);
        v.push(1.0);
        for psi in [Transition::Smoothstep, Transition::Samples(v)] {
            psi.validate().unwrap();
            let x = psi.value(t);
            prop_assert!(x.abs() <= 1.0);
            if t <= 0.0 {
                prop_assert_eq!(x, 0.0);
            }
            if t >= 1.0 {
                prop_assert_eq!(x, 1.0);
            }
            prop_assert!(psi.derivative(t).abs() <= psi.max_derivative() + 1e-12);
        }
    }
}
