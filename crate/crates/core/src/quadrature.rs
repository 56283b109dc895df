//! Weight integrals over balls, global integrability tests, the Hölder
//! embedding range of weighted spaces and the one-dimensional time
//! convolutions that appear in Duhamel estimates.
//!
//! Integrals over balls centered at the origin reduce to one dimension: in
//! polar coordinates `|y| - y₁ = s(1 - cos θ)`, so the angular integral of
//! `(1+s(1-cos θ))^δ` has the closed form `((1+2s)^{δ+1} - 1)/(s(δ+1))`,
//! with limit `ln(1+2s)/s` at `δ = -1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{norm, Point};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances of the adaptive Gauss–Kronrod integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Absolute error target.
    pub abs_tol: f64,
    /// Relative error target.
    pub rel_tol: f64,
    /// Maximum number of subintervals kept at once.
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 0.0, rel_tol: 1e-10, max_intervals: 4000 }
    }
}

impl QuadOptions {
    /// Options with the given relative tolerance.
    pub fn relative(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }
}

/// Value and error estimate of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    /// Integral estimate.
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    /// Whether the tolerance was met.
    pub converged: bool,
}

impl QuadResult {
    /// Converts an unconverged result into an error.
    pub fn checked(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NoConvergence { value: self.value, error: self.error })
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut fv = [0.0; 14];
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kron;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = kron * h;
    let resasc = asc * h.abs();
    let mut error = ((kron - gauss) * h).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (1.0f64).min((200.0 * error / resasc).powf(1.5));
    }
    if !value.is_finite() || !error.is_finite() {
        error = f64::INFINITY;
    }
    Segment { a, b, value, error }
}

/// Globally adaptive G7–K15 quadrature of `f` over `[p₀, p_last]`.
///
/// `points` must be sorted; each consecutive pair seeds one initial
/// subinterval, which lets callers place known kinks and scale changes on
/// interval boundaries.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, points: &[f64], opts: &QuadOptions) -> QuadResult {
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1]));
        }
    }
    if heap.is_empty() {
        return QuadResult { value: 0.0, error: 0.0, converged: true };
    }
    let mut value: f64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    let mut since_resum = 0usize;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target || !error.is_finite() || since_resum >= 50 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
            since_resum = 0;
            if error <= opts.abs_tol.max(opts.rel_tol * value.abs()) {
                return QuadResult { value, error, converged: true };
            }
        }
        if heap.len() >= opts.max_intervals {
            return QuadResult { value, error, converged: false };
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return QuadResult { value, error, converged: false };
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        since_resum += 1;
    }
}

/// Breakpoints `0, 2^k (k ≥ kmin), ..., upper` for integrands whose scale
/// changes geometrically.
pub fn geometric_points(upper: f64, kmin: i32) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut k = kmin;
    loop {
        let p = 2f64.powi(k);
        if p >= upper {
            break;
        }
        pts.push(p);
        k += 1;
    }
    pts.push(upper);
    pts
}

/// `expm1(x)/x`, equal to one at zero.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// `s · ∫₀² (1+sv)^δ dv`, the angular factor of the centered reduction.
fn angular_factor(s: f64, delta: f64) -> f64 {
    let l = (2.0 * s).ln_1p();
    l * phi1((delta + 1.0) * l)
}

/// Integrand `2π (1+s)^γ s² J(s)` of the centered ball integral.
fn centered_integrand(s: f64, gamma: f64, delta: f64) -> f64 {
    2.0 * PI * (1.0 + s).powf(gamma) * s * angular_factor(s, delta)
}

/// Specification of `∫_{B_r(x)} (1+|y|)^γ (1+|y|-y₁)^δ dy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallIntegralSpec {
    /// Exponent of `1+|y|`.
    pub gamma: f64,
    /// Exponent of `1+|y|-y₁`.
    pub delta: f64,
    /// Ball center.
    pub center: Point,
    /// Ball radius; `f64::INFINITY` denotes all of `R³`.
    pub radius: f64,
}

impl BallIntegralSpec {
    /// Ball of radius `radius` centered at the origin.
    pub fn centered(gamma: f64, delta: f64, radius: f64) -> Self {
        Self { gamma, delta, center: [0.0; 3], radius }
    }
}

/// Value of a ball integral, or a tagged divergence verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BallIntegral {
    /// Convergent integral.
    Finite {
        /// Integral value.
        value: f64,
        /// Estimated absolute error.
        error: f64,
    },
    /// The integral over an unbounded domain diverges.
    Divergent {
        /// The failed integrability condition.
        reason: String,
    },
}

impl BallIntegral {
    /// The value, if finite.
    pub fn value(&self) -> Option<f64> {
        match self {
            BallIntegral::Finite { value, .. } => Some(*value),
            BallIntegral::Divergent { .. } => None,
        }
    }
}

/// Exact integrability of `(1+|y|)^γ (1+|y|-y₁)^δ` over `R³`.
///
/// For `δ ≥ -1` the integral is finite iff `γ+δ < -3`; for `δ < -1` the wake
/// factor is integrable across the paraboloid and the condition is `γ < -2`.
pub fn whole_space_integrable(gamma: f64, delta: f64) -> bool {
    if delta >= -1.0 {
        gamma + delta < -3.0
    } else {
        gamma < -2.0
    }
}

/// Integral over a ball centered at the origin by the one-dimensional
/// reduction.
pub fn centered_ball_integral(gamma: f64, delta: f64, radius: f64, opts: &QuadOptions) -> QuadResult {
    let f = |s: f64| centered_integrand(s, gamma, delta);
    if radius.is_finite() {
        gauss_kronrod(f, &geometric_points(radius, -6), opts)
    } else {
        let inner = gauss_kronrod(f, &geometric_points(1.0, -6), opts);
        let g = |x: f64| if x <= 0.0 { 0.0 } else { f(1.0 / x) / (x * x) };
        let mut pts: Vec<f64> = (0..=80).rev().map(|k| 2f64.powi(-k)).collect();
        pts.insert(0, 0.0);
        let outer = gauss_kronrod(g, &pts, &QuadOptions { max_intervals: 20000, ..*opts });
        QuadResult {
            value: inner.value + outer.value,
            error: inner.error + outer.error,
            converged: inner.converged && outer.converged,
        }
    }
}

fn weight_cyl(y1: f64, rho: f64, gamma: f64, delta: f64) -> f64 {
    let r = y1.hypot(rho);
    let wake = if y1 > 0.0 { rho * rho / (r + y1) } else { r - y1 };
    (1.0 + r).powf(gamma) * (1.0 + wake).powf(delta)
}

/// Integral over an off-center ball by nested adaptive quadrature in
/// cylindrical coordinates `(y₁, ϱ)` about the `e₁` axis.
///
/// The weight depends only on `y₁` and `ϱ = |(y₂, y₃)|`, and the angular
/// measure of the circle of radius `ϱ` inside the slice of the ball at height
/// `y₁` is `2 arccos((ϱ² + d² - R²)/(2ϱd))`, where `d` is the distance of the
/// center from the axis and `R` the slice radius. The substitution
/// `ϱ = m - h cos θ` removes the square-root behaviour of the arc length at
/// both ends of the annulus.
pub fn offcenter_ball_integral(spec: &BallIntegralSpec, opts: &QuadOptions) -> QuadResult {
    let c = spec.center;
    let r = spec.radius;
    let d = c[1].hypot(c[2]);
    let (g, dl) = (spec.gamma, spec.delta);
    let inner_opts = QuadOptions { rel_tol: opts.rel_tol * 0.1, max_intervals: 400, ..*opts };
    let converged = std::cell::Cell::new(true);
    let slice = |y1: f64| -> f64 {
        let big_r2 = r * r - (y1 - c[0]) * (y1 - c[0]);
        if big_r2 <= 0.0 {
            return 0.0;
        }
        let big_r = big_r2.sqrt();
        let mut total = 0.0;
        let full_hi = (big_r - d).max(0.0);
        if full_hi > 0.0 {
            let f = |rho: f64| 2.0 * PI * rho * weight_cyl(y1, rho, g, dl);
            let res = gauss_kronrod(f, &[0.0, 0.5 * full_hi, full_hi], &inner_opts);
            converged.set(converged.get() && res.converged);
            total += res.value;
        }
        if d > 0.0 {
            let lo = (d - big_r).abs();
            let hi = d + big_r;
            let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let f = |theta: f64| {
                let rho = m - h * theta.cos();
                if rho <= 0.0 {
                    return 0.0;
                }
                let cosang = ((rho * rho + d * d - big_r2) / (2.0 * rho * d)).clamp(-1.0, 1.0);
                2.0 * cosang.acos() * rho * weight_cyl(y1, rho, g, dl) * h * theta.sin()
            };
            let res = gauss_kronrod(f, &[0.0, 0.5 * PI, PI], &inner_opts);
            converged.set(converged.get() && res.converged);
            total += res.value;
        }
        total
    };
    let (lo, hi) = (c[0] - r, c[0] + r);
    let mut pts = vec![lo, hi];
    if d < r {
        let w = (r * r - d * d).sqrt();
        pts.push(c[0] - w);
        pts.push(c[0] + w);
    }
    if lo < 0.0 && 0.0 < hi {
        pts.push(0.0);
    }
    pts.push(c[0]);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut res = gauss_kronrod(slice, &pts, opts);
    res.converged &= converged.get();
    res
}

/// `∫_{B_r(x)} (1+|y|)^γ (1+|y|-y₁)^δ dy`.
///
/// Finite balls always give finite values because `1 ≤ 1+|y|-y₁ ≤ 1+2|y|`.
/// An infinite radius asks for the integral over `R³`, which is reported as
/// [`BallIntegral::Divergent`] when the exponents are not integrable.
pub fn ball_integral(spec: &BallIntegralSpec) -> Result<BallIntegral> {
    if !(spec.gamma.is_finite() && spec.delta.is_finite()) || spec.center.iter().any(|c| !c.is_finite()) {
        return Err(Error::Input("exponents and center must be finite".into()));
    }
    if !(spec.radius > 0.0) {
        return Err(Error::Input(format!("radius {} must be positive", spec.radius)));
    }
    if spec.radius.is_infinite() {
        if !whole_space_integrable(spec.gamma, spec.delta) {
            let reason = if spec.delta >= -1.0 {
                format!("gamma+delta = {} is not < -3", spec.gamma + spec.delta)
            } else {
                format!("gamma = {} is not < -2", spec.gamma)
            };
            return Ok(BallIntegral::Divergent { reason });
        }
        let res = centered_ball_integral(spec.gamma, spec.delta, f64::INFINITY, &QuadOptions::relative(1e-8));
        res.checked()?;
        return Ok(BallIntegral::Finite { value: res.value, error: res.error });
    }
    let res = if norm(&spec.center) == 0.0 {
        centered_ball_integral(spec.gamma, spec.delta, spec.radius, &QuadOptions::relative(1e-10))
    } else {
        offcenter_ball_integral(spec, &QuadOptions::relative(1e-7))
    };
    res.checked()?;
    Ok(BallIntegral::Finite { value: res.value, error: res.error })
}

/// Monte-Carlo estimate of a finite ball integral with uniform samples.
///
/// Returns the estimate and its standard error. Deterministic for a given
/// seed.
pub fn ball_integral_mc(spec: &BallIntegralSpec, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if !(spec.radius.is_finite() && spec.radius > 0.0) || samples < 2 {
        return Err(Error::Input("Monte-Carlo needs a finite ball and at least two samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol = 4.0 / 3.0 * PI * spec.radius.powi(3);
    let (mut sum, mut sum2) = (0.0, 0.0);
    let mut n = 0usize;
    while n < samples {
        let p: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] > 1.0 {
            continue;
        }
        let y = [
            spec.center[0] + spec.radius * p[0],
            spec.center[1] + spec.radius * p[1],
            spec.center[2] + spec.radius * p[2],
        ];
        let v = weight_cyl(y[0], y[1].hypot(y[2]), spec.gamma, spec.delta);
        sum += v;
        sum2 += v * v;
        n += 1;
    }
    let mean = sum / n as f64;
    let var = (sum2 / n as f64 - mean * mean).max(0.0);
    Ok((vol * mean, vol * (var / n as f64).sqrt()))
}

/// Which sufficient condition for `(1+|x|)^{-γs}(1+|x|-x₁)^{-δs} ∈ L¹(R³)`
/// holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrability {
    /// `s > max{1/δ, 2/γ}`.
    FiniteByLemma,
    /// `2δ < γ` and `3/(γ+δ) < s < 1/δ`.
    FiniteByLemmaBranch2,
    /// Neither sufficient condition holds.
    Undetermined,
}

/// Classifies `(γ, δ, s)` by the two sufficient integrability conditions.
pub fn global_integrability(gamma: f64, delta: f64, s: f64) -> Result<Integrability> {
    if !(gamma > 0.0 && delta > 0.0 && s > 0.0) {
        return Err(Error::Input("gamma, delta and s must be positive".into()));
    }
    if s > (1.0 / delta).max(2.0 / gamma) {
        Ok(Integrability::FiniteByLemma)
    } else if 2.0 * delta < gamma && 3.0 / (gamma + delta) < s && s < 1.0 / delta {
        Ok(Integrability::FiniteByLemmaBranch2)
    } else {
        Ok(Integrability::Undetermined)
    }
}

/// Which term realises the lower endpoint of the Hölder embedding range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolderBranch {
    /// `3q/(3+αq+βq)`, attained when `α ≥ 2β`.
    Combined,
    /// `2q/(2+αq)`, attained when `α < 2β`.
    Isotropic,
}

/// The interval `(lower, upper]` of exponents `r` with `L^q_ρ ⊂ L^r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderRange {
    /// Open lower endpoint.
    pub lower: f64,
    /// Closed upper endpoint (equal to `q`).
    pub upper: f64,
    /// Binding term of the lower endpoint.
    pub branch: HolderBranch,
}

impl HolderRange {
    /// Whether `r` lies in `(lower, upper]`.
    pub fn contains(&self, r: f64) -> bool {
        r > self.lower && r <= self.upper
    }
}

/// Range of `r` for which `‖f‖_r ≤ C‖(1+|x|)^α(1+|x|-x₁)^β f‖_q`.
pub fn holder_embedding_range(q: f64, alpha: f64, beta: f64) -> Result<HolderRange> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Input(format!("q = {q} must satisfy 1 < q < ∞")));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Input("alpha and beta must be positive".into()));
    }
    if alpha + beta >= 3.0 * (1.0 - 1.0 / q) {
        return Err(Error::Hypothesis(format!(
            "alpha+beta = {} must be < 3(1-1/q) = {}",
            alpha + beta,
            3.0 * (1.0 - 1.0 / q)
        )));
    }
    let combined = 3.0 * q / (3.0 + alpha * q + beta * q);
    let isotropic = 2.0 * q / (2.0 + alpha * q);
    let (lower, branch) = if alpha >= 2.0 * beta {
        (combined, HolderBranch::Combined)
    } else {
        (isotropic, HolderBranch::Isotropic)
    };
    Ok(HolderRange { lower, upper: q, branch })
}

/// Form of the convolution kernel in `t - τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConvKernel {
    /// `(t-τ)^{-a}` with `a < 1`.
    #[default]
    Singular,
    /// `(1+t-τ)^{-a}` with any `a ≥ 0`.
    Shifted,
}

/// `∫₀ᵗ K(t-τ) τ^{-c} (1+τ)^{c-b} dτ` with `K` given by `kernel`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConvSpec {
    /// Exponent `a` of the kernel.
    pub a_exp: f64,
    /// Exponent `c` of the singularity at `τ = 0`.
    pub c_exp: f64,
    /// Large-time exponent `b` of the second factor.
    pub b_exp: f64,
    /// Upper limit `t`.
    pub t: f64,
    /// Kernel form.
    #[serde(default)]
    pub kernel: ConvKernel,
}

/// Predicted large-`t` behaviour `t^exponent`, times `log t` when flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvExponent {
    /// Power of `t`.
    pub exponent: f64,
    /// Whether a logarithmic factor multiplies the power.
    pub log: bool,
}

const TIE: f64 = 1e-12;

fn check_conv(a: f64, c: f64, kernel: ConvKernel) -> Result<()> {
    if !(a >= 0.0 && c >= 0.0 && a.is_finite() && c.is_finite()) {
        return Err(Error::Input("exponents a and c must be finite and non-negative".into()));
    }
    if c >= 1.0 {
        return Err(Error::Domain(format!("c = {c} ≥ 1: the integral diverges at τ = 0")));
    }
    if kernel == ConvKernel::Singular && a >= 1.0 {
        return Err(Error::Domain(format!("a = {a} ≥ 1: the integral diverges at τ = t")));
    }
    Ok(())
}

/// Large-`t` exponent `max{-a, -b, 1-a-b}` of the time convolution.
///
/// The logarithmic factor appears when `b = 1` and `a ≤ 1`, and, for the
/// shifted kernel, when `a = 1` and `b ≤ 1`.
pub fn time_convolution_exponent(a: f64, c: f64, b: f64, kernel: ConvKernel) -> Result<ConvExponent> {
    check_conv(a, c, kernel)?;
    if !b.is_finite() {
        return Err(Error::Input("b must be finite".into()));
    }
    let exponent = (-a).max(-b).max(1.0 - a - b);
    let log_b = (b - 1.0).abs() < TIE && a <= 1.0 + TIE;
    let log_a = kernel == ConvKernel::Shifted && (a - 1.0).abs() < TIE && b <= 1.0 + TIE;
    Ok(ConvExponent { exponent, log: log_b || log_a })
}

/// Evaluates the time convolution by split adaptive quadrature.
///
/// The interval is split at `t/2`; the substitutions `τ = w^{1/(1-c)}` and
/// `t-τ = w^{1/(1-a)}` remove the endpoint singularities.
pub fn time_convolution(spec: &TimeConvSpec) -> Result<f64> {
    let TimeConvSpec { a_exp: a, c_exp: c, b_exp: b, t, kernel } = *spec;
    check_conv(a, c, kernel)?;
    if !(t > 0.0 && t.is_finite() && b.is_finite()) {
        return Err(Error::Input("t must be positive and b finite".into()));
    }
    let kern = |sigma: f64| match kernel {
        ConvKernel::Singular => sigma.powf(-a),
        ConvKernel::Shifted => (1.0 + sigma).powf(-a),
    };
    let opts = QuadOptions::relative(1e-11);
    let half = 0.5 * t;
    let p = 1.0 / (1.0 - c);
    let left = |w: f64| {
        let tau = w.powf(p);
        p * kern(t - tau) * (1.0 + tau).powf(c - b)
    };
    let left_res = gauss_kronrod(left, &geometric_points(half.powf(1.0 - c), -12), &opts).checked()?;
    let right_res = match kernel {
        ConvKernel::Singular => {
            let pa = 1.0 / (1.0 - a);
            let right = |w: f64| {
                let sigma = w.powf(pa);
                let tau = t - sigma;
                pa * tau.powf(-c) * (1.0 + tau).powf(c - b)
            };
            gauss_kronrod(right, &geometric_points(half.powf(1.0 - a), -12), &opts).checked()?
        }
        ConvKernel::Shifted => {
            let right = |sigma: f64| {
                let tau = t - sigma;
                kern(sigma) * tau.powf(-c) * (1.0 + tau).powf(c - b)
            };
            gauss_kronrod(right, &geometric_points(half, -12), &opts).checked()?
        }
    };
    Ok(left_res + right_res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gk_polynomial_exact() {
        let r = gauss_kronrod(|x| x.powi(5) - 3.0 * x * x, &[0.0, 2.0], &QuadOptions::default());
        assert_relative_eq!(r.value, 64.0 / 6.0 - 8.0, max_relative = 1e-13);
    }

    #[test]
    fn gk_endpoint_singularity() {
        let r = gauss_kronrod(|x| x.powf(-0.5), &geometric_points(1.0, -60), &QuadOptions::default());
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn unit_ball_volume() {
        let v = ball_integral(&BallIntegralSpec::centered(0.0, 0.0, 1.0)).unwrap().value().unwrap();
        assert_relative_eq!(v, 4.0 * PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn offcenter_constant_weight_is_volume() {
        let spec = BallIntegralSpec { gamma: 0.0, delta: 0.0, center: [0.3, 2.0, -1.0], radius: 1.5 };
        let v = ball_integral(&spec).unwrap().value().unwrap();
        assert_relative_eq!(v, 4.0 * PI / 3.0 * 1.5f64.powi(3), max_relative = 1e-8);
    }

    #[test]
    fn log_branch_matches_limit() {
        let at = centered_ball_integral(0.5, -1.0, 10.0, &QuadOptions::default()).value;
        let near = centered_ball_integral(0.5, -1.0 + 1e-7, 10.0, &QuadOptions::default()).value;
        assert_relative_eq!(at, near, max_relative = 1e-6);
    }

    #[test]
    fn whole_space_divergence_is_tagged() {
        let out = ball_integral(&BallIntegralSpec::centered(-2.0, -1.0, f64::INFINITY)).unwrap();
        assert!(matches!(out, BallIntegral::Divergent { .. }));
    }

    #[test]
    fn whole_space_finite_value() {
        // ∫ (1+|y|)^{-5} dy = 4π ∫ s²(1+s)^{-5} ds = 4π/12.
        let v = ball_integral(&BallIntegralSpec::centered(-5.0, 0.0, f64::INFINITY)).unwrap().value().unwrap();
        assert_relative_eq!(v, 4.0 * PI / 12.0, max_relative = 1e-7);
    }

    #[test]
    fn singular_conv_closed_form() {
        // ∫₀ᵗ (t-τ)^{-1/2} τ^{-1/2} dτ = π for b = c.
        let v = time_convolution(&TimeConvSpec { a_exp: 0.5, c_exp: 0.5, b_exp: 0.5, t: 37.0, kernel: ConvKernel::Singular })
            .unwrap();
        assert_relative_eq!(v, PI, max_relative = 1e-9);
    }

    #[test]
    fn conv_rejects_endpoint_divergence() {
        assert!(time_convolution_exponent(1.0, 0.0, 1.0, ConvKernel::Singular).is_err());
        assert!(time_convolution_exponent(0.0, 1.0, 1.0, ConvKernel::Shifted).is_err());
        assert!(time_convolution_exponent(1.5, 0.5, 1.0, ConvKernel::Shifted).is_ok());
    }
}
