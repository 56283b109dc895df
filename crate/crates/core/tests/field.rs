use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use wakelab::field::{
    axis_decay_slopes, leray_project, relative_divergence, synthetic_wake_profile, weighted_norm, GridField, GridShape,
    WakeParams, WeightedNorm,
};
use wakelab::weights::{eval_weight, WeightSpec};

fn bump(x: &[f64; 3], c: &[f64; 3], w: f64) -> f64 {
    let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
    (-d2 / (w * w)).exp()
}

/// A generic vector field of three Gaussian bumps with different centers
/// and amplitudes per component.
fn bump_field(shape: GridShape, p: [f64; 6]) -> GridField {
    GridField::from_fn(shape, 3, |x, out| {
        out[0] = p[0] * bump(x, &[p[3], 0.0, 0.5], 1.3);
        out[1] = p[1] * bump(x, &[0.0, p[4], -0.7], 1.1) - 0.4 * bump(x, &[1.0, 1.0, 1.0], 0.9);
        out[2] = p[2] * bump(x, &[0.3, -0.2, p[5]], 1.5);
    })
}

fn shape() -> GridShape {
    GridShape::centered(32, 8.0).unwrap()
}

#[test]
fn gradient_field_is_annihilated() {
    let s = GridShape::centered(64, 8.0).unwrap();
    // ∇φ for φ = exp(-|x-c|²).
    let c = [0.5, -0.3, 0.2];
    let f = GridField::from_fn(s, 3, |x, out| {
        let g = bump(x, &c, 1.0);
        for d in 0..3 {
            out[d] = -2.0 * (x[d] - c[d]) * g;
        }
    });
    let p = leray_project(&f).unwrap();
    assert!(p.l2_norm() <= 1e-10 * f.l2_norm(), "{}", p.l2_norm() / f.l2_norm());
}

#[test]
fn solenoidal_field_is_fixed() {
    let s = GridShape::centered(64, 8.0).unwrap();
    // curl(φ e₃) = (∂₂φ, -∂₁φ, 0) computed analytically.
    let f = GridField::from_fn(s, 3, |x, out| {
        let g = bump(x, &[0.0; 3], 1.2);
        out[0] = -2.0 * x[1] / 1.44 * g;
        out[1] = 2.0 * x[0] / 1.44 * g;
        out[2] = 0.0;
    });
    let p = leray_project(&f).unwrap();
    let diff = p.axpy(-1.0, &f).unwrap();
    assert!(diff.l2_norm() <= 1e-10 * f.l2_norm(), "{}", diff.l2_norm() / f.l2_norm());
}

#[test]
fn projected_bump_is_divergence_free() {
    let f = bump_field(shape(), [1.0, -0.5, 0.8, 0.4, -0.6, 0.1]);
    let p = leray_project(&f).unwrap();
    assert!(relative_divergence(&f).unwrap() > 0.1);
    let div = p.to_spectral().divergence().unwrap().l2_norm();
    assert!(div <= 1e-10 * f.l2_norm(), "{}", div / f.l2_norm());
}

#[test]
fn gaussian_l2_norm_matches_closed_form() {
    let sigma = 1.0;
    let s = GridShape::centered(64, 16.0).unwrap();
    let f = GridField::from_fn(s, 1, |x, out| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        out[0] = (4.0 * PI * sigma).powf(-1.5) * (-r2 / (4.0 * sigma)).exp();
    });
    let exact = (4.0 * PI * sigma).powf(-1.5) * (2.0 * PI * sigma).powf(0.75);
    let got = weighted_norm(&f, &WeightedNorm::plain(2.0).unwrap());
    assert!((got / exact - 1.0).abs() <= 1e-3, "{got} vs {exact}");
}

#[test]
fn reciprocal_weight_recovers_plain_norm() {
    let s = shape();
    let f = bump_field(s, [1.0, 0.3, -0.2, 0.0, 1.0, -1.0]);
    let w = WeightSpec::new(0.7, 0.4);
    let rho_f = GridField::from_fn(s, 3, |x, out| {
        let rho = eval_weight(&w, x).unwrap();
        let idx = {
            let h = s.h();
            let i = ((x[0] + s.half_width) / h).round() as usize;
            let j = ((x[1] + s.half_width) / h).round() as usize;
            let k = ((x[2] + s.half_width) / h).round() as usize;
            (i * s.n + j) * s.n + k
        };
        for c in 0..3 {
            out[c] = rho * f.component(c)[idx];
        }
    });
    for q in [1.0, 2.0, 3.0, f64::INFINITY] {
        let plain = weighted_norm(&f, &WeightedNorm::plain(q).unwrap());
        let back = weighted_norm(&rho_f, &WeightedNorm::new(q, w.reciprocal()).unwrap());
        assert_relative_eq!(plain, back, max_relative = 1e-12);
    }
}

#[test]
fn sup_norm_on_negative_axis() {
    let r = 1000.0;
    let s = GridShape::centered(64, 1100.0).unwrap();
    let h = s.h();
    let target = [(-r / h).round() * h, 0.0, 0.0];
    let f = GridField::from_fn(s, 1, |x, out| {
        let hit = (x[0] - target[0]).abs() < 0.5 * h && x[1].abs() < 0.5 * h && x[2].abs() < 0.5 * h;
        out[0] = if hit { 3.0 } else { 0.0 };
    });
    let w = WeightSpec::new(1.0, 1.0);
    let got = weighted_norm(&f, &WeightedNorm::new(f64::INFINITY, w).unwrap());
    assert_relative_eq!(got, 3.0 * eval_weight(&w, &target).unwrap(), max_relative = 1e-14);
    let x = -target[0];
    assert!((got / (3.0 * 2.0 * x * x) - 1.0).abs() < 2e-3);
}

#[test]
fn wake_envelope_decay_along_the_axis() {
    let s = GridShape::centered(128, 100.0).unwrap();
    let wake = synthetic_wake_profile(&WakeParams::for_grid(1.0, &s), &s).unwrap();
    let (down, up) = axis_decay_slopes(&wake, 10.0, 40.0).unwrap();
    assert!((down + 1.0).abs() <= 0.2, "downstream slope {down}");
    assert!((up + 2.0).abs() <= 0.4, "upstream slope {up}");
    assert!(relative_divergence(&wake).unwrap() < 1e-10);
}

#[test]
fn wake_l4_norm_stabilizes_with_box_size() {
    let norm = WeightedNorm::plain(4.0).unwrap();
    let values: Vec<f64> = [(32usize, 25.0), (64, 50.0), (128, 100.0)]
        .iter()
        .map(|&(n, l)| {
            let s = GridShape::centered(n, l).unwrap();
            weighted_norm(&synthetic_wake_profile(&WakeParams::for_grid(1.0, &s), &s).unwrap(), &norm)
        })
        .collect();
    let first = (values[1] / values[0] - 1.0).abs();
    let second = (values[2] / values[1] - 1.0).abs();
    assert!(second < first, "{values:?}");
    assert!(second < 0.02, "{values:?}");
}

#[test]
fn grid_refinement_changes_weighted_norm_little() {
    let field = |n: usize| {
        let s = GridShape::centered(n, 8.0).unwrap();
        GridField::from_fn(s, 3, |x, out| {
            out[0] = bump(x, &[0.5, 0.0, 0.0], 1.5);
            out[1] = -0.5 * bump(x, &[0.0, -0.5, 0.3], 1.2);
            out[2] = 0.2 * bump(x, &[0.0; 3], 2.0);
        })
    };
    let norm = WeightedNorm::new(3.0, WeightSpec::new(0.5, 0.5)).unwrap();
    let coarse = weighted_norm(&field(32), &norm);
    let fine = weighted_norm(&field(64), &norm);
    assert!((fine / coarse - 1.0).abs() < 5e-3, "{coarse} vs {fine}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_is_idempotent_and_orthogonal(p in prop::array::uniform6(-1.5f64..1.5)) {
        let f = bump_field(shape(), p);
        let norm = f.l2_norm();
        let pf = leray_project(&f).unwrap();
        let ppf = leray_project(&pf).unwrap();
        prop_assert!(ppf.axpy(-1.0, &pf).unwrap().l2_norm() <= 1e-10 * norm);
        let rest = f.axpy(-1.0, &pf).unwrap();
        prop_assert!(pf.inner(&rest).unwrap().abs() <= 1e-10 * norm * norm);
    }

    #[test]
    fn norms_scale_and_trivial_weight_is_plain(p in prop::array::uniform6(-1.5f64..1.5), c in -5.0f64..5.0, q in 1.0f64..6.0) {
        let f = bump_field(shape(), p);
        let plain = weighted_norm(&f, &WeightedNorm::plain(q).unwrap());
        let trivial = weighted_norm(&f, &WeightedNorm::new(q, WeightSpec::new(0.0, 0.0)).unwrap());
        prop_assert_eq!(plain, trivial);
        let w = WeightedNorm::new(q, WeightSpec::new(0.4, 0.3)).unwrap();
        let scaled = weighted_norm(&f.scaled(c), &w);
        prop_assert!((scaled - c.abs() * weighted_norm(&f, &w)).abs() <= 1e-12 * scaled.max(1e-300));
    }
}
