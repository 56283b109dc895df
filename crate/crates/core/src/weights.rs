//! Anisotropic wake weights `(1+|x|)^α (1+|x|-x₁)^β`.
//!
//! The factor `1+|x|-x₁` equals one on the positive `x₁` axis and grows like
//! `2|x|` on the negative axis, so positive `β` penalises everything outside
//! the paraboloidal wake region behind a body translating along `-e₁`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of three-dimensional space.
pub type Point = [f64; 3];

/// Euclidean norm of a point.
pub fn norm(x: &Point) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// `|x| - x₁`, evaluated without cancellation when `x₁` is large and positive.
pub fn wake_coordinate(x: &Point) -> f64 {
    let r = norm(x);
    if x[0] > 0.0 {
        let t2 = x[1] * x[1] + x[2] * x[2];
        if r + x[0] > 0.0 {
            t2 / (r + x[0])
        } else {
            0.0
        }
    } else {
        r - x[0]
    }
}

/// Exponent pair of the wake weight, optionally raised to a power.
///
/// With `qpow = Some(q)` the weight represented is `ρ_{α,β}^q`, the convention
/// used when the weight is a density for `L^q` spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    /// Exponent of `1+|x|`.
    pub alpha: f64,
    /// Exponent of `1+|x|-x₁`.
    pub beta: f64,
    /// Optional outer power applied to the whole weight.
    #[serde(default)]
    pub qpow: Option<f64>,
}

impl WeightSpec {
    /// Weight `ρ_{α,β}` without outer power.
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, qpow: None }
    }

    /// The constant weight one.
    pub fn unweighted() -> Self {
        Self::new(0.0, 0.0)
    }

    /// Same exponents with the outer power set to `q`.
    pub fn with_qpow(self, q: f64) -> Self {
        Self { qpow: Some(q), ..self }
    }

    /// The pointwise reciprocal weight.
    pub fn reciprocal(self) -> Self {
        Self { alpha: -self.alpha, beta: -self.beta, qpow: self.qpow }
    }

    /// Exponents `(α·qpow, β·qpow)` of the weight actually represented.
    pub fn effective(&self) -> (f64, f64) {
        let p = self.qpow.unwrap_or(1.0);
        (self.alpha * p, self.beta * p)
    }

    /// Evaluates the weight without validating the point.
    pub fn eval_unchecked(&self, x: &Point) -> f64 {
        let (a, b) = self.effective();
        let mut v = 1.0;
        if a != 0.0 {
            v *= (1.0 + norm(x)).powf(a);
        }
        if b != 0.0 {
            v *= (1.0 + wake_coordinate(x)).powf(b);
        }
        v
    }
}

fn check_point(x: &Point) -> Result<()> {
    if x.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("point {x:?} is not finite")))
    }
}

/// Evaluates `(1+|x|)^α (1+|x|-x₁)^β`, raised to `qpow` when set.
pub fn eval_weight(w: &WeightSpec, x: &Point) -> Result<f64> {
    check_point(x)?;
    if !(w.alpha.is_finite() && w.beta.is_finite()) {
        return Err(Error::Input("weight exponents must be finite".into()));
    }
    Ok(w.eval_unchecked(x))
}

/// Outcome of the Muckenhoupt admissibility test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    /// Whether every inequality holds.
    pub admissible: bool,
    /// Human-readable form of each violated inequality.
    pub violated: Vec<String>,
}

/// Tests `-1 < β < q-1` and `-3 < α+β < 3(q-1)` for the represented weight.
///
/// These inequalities characterise membership of the wake weight in the
/// Muckenhoupt class `A_q(R³)`.
pub fn is_muckenhoupt_admissible(w: &WeightSpec, q: f64) -> Result<Admissibility> {
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::Input(format!("q = {q} must satisfy 1 < q < ∞")));
    }
    let (a, b) = w.effective();
    let mut violated = Vec::new();
    if b <= -1.0 {
        violated.push(format!("-1 < beta (beta = {b})"));
    }
    if b >= q - 1.0 {
        violated.push(format!("beta < q-1 (beta = {b}, q-1 = {})", q - 1.0));
    }
    if a + b <= -3.0 {
        violated.push(format!("-3 < alpha+beta (alpha+beta = {})", a + b));
    }
    if a + b >= 3.0 * (q - 1.0) {
        violated.push(format!(
            "alpha+beta < 3(q-1) (alpha+beta = {}, 3(q-1) = {})",
            a + b,
            3.0 * (q - 1.0)
        ));
    }
    Ok(Admissibility { admissible: violated.is_empty(), violated })
}

/// Maximum over coordinates of `|∂ⱼρ(x)| / ρ(x)` by central differences.
///
/// Requires `|x| ≥ 0.5`, keeping the stencil away from the kink of `|x|` at
/// the origin.
pub fn weight_gradient_ratio(w: &WeightSpec, x: &Point, h: f64) -> Result<f64> {
    check_point(x)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Input(format!("step h = {h} must be positive")));
    }
    if norm(x) < 0.5 {
        return Err(Error::Domain(format!(
            "|x| = {} < 0.5: the origin lies inside the excluded body",
            norm(x)
        )));
    }
    let rho = w.eval_unchecked(x);
    let mut best: f64 = 0.0;
    for j in 0..3 {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let d = (w.eval_unchecked(&xp) - w.eval_unchecked(&xm)) / (2.0 * h);
        best = best.max(d.abs() / rho);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn origin_value_is_one() {
        let w = WeightSpec::new(1.0, 1.0);
        assert_eq!(eval_weight(&w, &[0.0, 0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn axis_growth() {
        let w = WeightSpec::new(1.0, 1.0);
        let r = 1.0e3;
        assert_relative_eq!(eval_weight(&w, &[r, 0.0, 0.0]).unwrap(), 1.0 + r);
        assert_relative_eq!(
            eval_weight(&w, &[-r, 0.0, 0.0]).unwrap(),
            (1.0 + r) * (1.0 + 2.0 * r)
        );
    }

    #[test]
    fn wake_coordinate_is_accurate_far_downstream() {
        let x = [1.0e8, 1.0, 0.0];
        assert_relative_eq!(wake_coordinate(&x), 0.5e-8, max_relative = 1e-10);
    }

    #[test]
    fn non_finite_point_rejected() {
        let w = WeightSpec::new(1.0, 1.0);
        assert!(matches!(eval_weight(&w, &[f64::NAN, 0.0, 0.0]), Err(Error::Input(_))));
    }

    #[test]
    fn qpow_raises_weight() {
        let w = WeightSpec::new(0.5, 0.25).with_qpow(3.0);
        let x = [3.0, 4.0, 0.0];
        let base = WeightSpec::new(0.5, 0.25).eval_unchecked(&x);
        assert_relative_eq!(eval_weight(&w, &x).unwrap(), base.powi(3), max_relative = 1e-14);
    }

    #[test]
    fn admissibility_q_must_exceed_one() {
        assert!(is_muckenhoupt_admissible(&WeightSpec::unweighted(), 1.0).is_err());
    }

    #[test]
    fn violated_list_names_each_inequality() {
        let a = is_muckenhoupt_admissible(&WeightSpec::new(7.0, -1.5), 2.0).unwrap();
        assert!(!a.admissible);
        assert_eq!(a.violated.len(), 2);
    }

    #[test]
    fn gradient_ratio_rejects_origin() {
        let w = WeightSpec::new(1.0, 0.0);
        assert!(matches!(
            weight_gradient_ratio(&w, &[0.1, 0.0, 0.0], 1e-4),
            Err(Error::Domain(_))
        ));
    }
}
