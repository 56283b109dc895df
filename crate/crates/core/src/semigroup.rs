//! The whole-space Oseen semigroup `S_a(t)g = (e^{tΔ}g)(· - a t e₁)` on
//! periodic grids, and `L^s` norms of the majorant kernels `G_{i,k}`.
//!
//! With `h_k(z) = ∂_z^k e^{-|z|²}` and `z = (x - a t e₁)/(2√t)`, the kernels
//! are `G_{i,k}(x,t) = (4πt)^{-3/2} (2√t)^{-|k|} |h_k(z)| w_i(x)` with
//! `w₁ = 1`, `w₂ = (1+|x|)^α`, `w₃ = (1+|x|-x₁)^β` and `w₄ = w₂ w₃`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::field::{weighted_norm, GridField, GridShape, SpectralField, WeightedNorm, GUARD_LIMIT, GUARD_SHELL};
use crate::quadrature::{gauss_kronrod, QuadOptions};
use crate::weights::{Point, WeightSpec};

/// Drift, time and derivative of one semigroup application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OseenParams {
    /// Drift speed; negative values give the dual semigroup.
    pub a: f64,
    /// Time, positive.
    pub t: f64,
    /// Axis of a first derivative, if any.
    #[serde(default)]
    pub deriv: Option<usize>,
}

impl OseenParams {
    /// Plain semigroup at time `t`.
    pub fn new(a: f64, t: f64) -> Self {
        Self { a, t, deriv: None }
    }

    /// Adds a first derivative along `axis`.
    pub fn with_deriv(self, axis: usize) -> Self {
        Self { deriv: Some(axis), ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite() && self.a.is_finite()) {
            return Err(Error::Input(format!("t = {} must be positive and a finite", self.t)));
        }
        if self.deriv.is_some_and(|d| d > 2) {
            return Err(Error::Input("derivative axis must be 0, 1 or 2".into()));
        }
        Ok(())
    }
}

/// Multiplier `e^{-|ξ|²t} e^{-i a t ξ₁} (iξ_k)` applied in place.
pub fn evolve_spectral(f: &mut SpectralField, p: &OseenParams) -> Result<()> {
    p.validate()?;
    let shape = f.shape;
    let (a, t, deriv) = (p.a, p.t, p.deriv);
    f.multiply(|idx| {
        let xi = shape.wavevector(idx);
        let xo = shape.wavevector_odd(idx);
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        let mut m = Complex64::from_polar((-k2 * t).exp(), -a * t * xo[0]);
        if let Some(d) = deriv {
            m *= Complex64::new(0.0, xo[d]);
        }
        m
    });
    Ok(())
}

/// `∂^k S_a(t) f`, failing with [`Error::WrapAround`] when the output
/// carries more than [`GUARD_LIMIT`] of its `L²` mass in the guard shell.
pub fn evolve(f: &GridField, p: &OseenParams) -> Result<GridField> {
    let mut s = f.to_spectral();
    evolve_spectral(&mut s, p)?;
    let out = s.to_real();
    out.check_guard(p.t)?;
    Ok(out)
}

/// `‖ρ ∂^k S_a(t) f‖_q`.
pub fn weighted_semigroup_norm(f: &GridField, p: &OseenParams, out_norm: &WeightedNorm) -> Result<f64> {
    Ok(weighted_norm(&evolve(f, p)?, out_norm))
}

/// One sample of a decay series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    /// Time.
    pub t: f64,
    /// Weighted norm of the evolved field.
    pub norm: f64,
    /// Boundary-mass ratio of the evolved field.
    pub guard: f64,
}

/// Weighted norms of `∂^k S_a(t) f` for each `t` in `times`, transforming
/// the data once.
pub fn decay_series(
    f: &GridField,
    a: f64,
    deriv: Option<usize>,
    out_norm: &WeightedNorm,
    times: &[f64],
) -> Result<Vec<DecayRow>> {
    let base = f.to_spectral();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let mut s = base.clone();
        evolve_spectral(&mut s, &OseenParams { a, t, deriv })?;
        let out = s.to_real();
        let guard = out.check_guard(t)?;
        rows.push(DecayRow { t, norm: weighted_norm(&out, out_norm), guard });
    }
    Ok(rows)
}

/// Largest `t ≤ t_hi` at which `S_a(t) f` still passes the boundary guard,
/// by bisection to relative precision `1e-3`. Returns `0` if the data
/// itself fails.
pub fn max_safe_t(f: &GridField, a: f64, t_hi: f64) -> Result<f64> {
    let base = f.to_spectral();
    let ok = |t: f64| -> Result<bool> {
        if t == 0.0 {
            return Ok(f.boundary_mass_ratio() <= GUARD_LIMIT);
        }
        let mut s = base.clone();
        evolve_spectral(&mut s, &OseenParams::new(a, t))?;
        Ok(s.to_real().boundary_mass_ratio() <= GUARD_LIMIT)
    };
    if !ok(0.0)? {
        return Ok(0.0);
    }
    if ok(t_hi)? {
        return Ok(t_hi);
    }
    let (mut lo, mut hi) = (0.0, t_hi);
    while hi - lo > 1e-3 * hi.max(1e-3) {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Box half-width and center keeping data of radius `r0` inside the
/// guard region while it drifts by `a·t_max` and spreads like
/// `8√(t_max + 1)`.
pub fn oseen_box(a: f64, t_max: f64, r0: f64) -> (f64, Point) {
    let reach = r0 + 0.5 * a.abs() * t_max + 8.0 * (t_max + 1.0).sqrt();
    (reach / GUARD_SHELL, [0.5 * a * t_max, 0.0, 0.0])
}

/// Default solenoidal test field `curl(ψ e₃)` with
/// `ψ = exp(-|x - x_c|²/2)`, built from its filtered Fourier transform.
pub fn default_test_field(shape: &GridShape, xc: &Point) -> GridField {
    let norm = (2.0 * PI).powf(1.5);
    let c = *xc;
    let mut spec = SpectralField::from_transform(*shape, 3, |xi, out| {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        let psi = Complex64::from_polar(norm * (-0.5 * k2).exp(), -(xi[0] * c[0] + xi[1] * c[1] + xi[2] * c[2]));
        let i = Complex64::new(0.0, 1.0);
        out[0] = i * xi[1] * psi;
        out[1] = -i * xi[0] * psi;
        out[2] = Complex64::new(0.0, 0.0);
    });
    spec.apply_filter();
    spec.to_real()
}

/// Unit-mass Gaussian `(4πσ)^{-3/2} exp(-|x - x_c|²/(4σ))`, built from its
/// filtered Fourier transform `exp(-σ|ξ|²)`.
pub fn gaussian_bump(shape: &GridShape, sigma: f64, xc: &Point) -> GridField {
    let c = *xc;
    let mut spec = SpectralField::from_transform(*shape, 1, |xi, out| {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        out[0] = Complex64::from_polar((-sigma * k2).exp(), -(xi[0] * c[0] + xi[1] * c[1] + xi[2] * c[2]));
    });
    spec.apply_filter();
    spec.to_real()
}

/// Identifies one kernel `G_{i,k}` and the norm `‖G_{i,k}(t)‖_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Kernel index in `1..=4`.
    pub index: u8,
    /// Drift, time and derivative.
    pub params: OseenParams,
    /// Exponent of `1+|x|`.
    pub alpha: f64,
    /// Exponent of `1+|x|-x₁`.
    pub beta: f64,
    /// Lebesgue exponent in `[1, ∞)`.
    pub s: f64,
}

/// `∫_{-∞}^{∞} |x|^s e^{-s x²} dx`.
fn abs_moment(s: f64) -> f64 {
    gamma(0.5 * (s + 1.0)) / s.powf(0.5 * (s + 1.0))
}

/// `∫₀^{2π} |cos φ|^s dφ`.
fn cos_moment(s: f64) -> f64 {
    2.0 * PI.sqrt() * gamma(0.5 * (s + 1.0)) / gamma(0.5 * s + 1.0)
}

/// `‖G_{i,k}(·, t)‖_s`.
///
/// For `i = 1` the value follows from Gaussian moments. For `i = 2, 3, 4`
/// the weights depend on `z` only through `|z|` and `z₁`, so after the exact
/// azimuthal integration a two-dimensional adaptive quadrature over `|z|`
/// and `cos θ = z₁/|z|` remains.
pub fn kernel_norm(spec: &KernelSpec) -> Result<f64> {
    spec.params.validate()?;
    if !(1..=4).contains(&spec.index) {
        return Err(Error::Input(format!("kernel index {} must be 1, 2, 3 or 4", spec.index)));
    }
    let s = spec.s;
    if !(s >= 1.0 && s.is_finite()) {
        return Err(Error::Input(format!("s = {s} must lie in [1, ∞)")));
    }
    if !(spec.alpha >= 0.0 && spec.beta >= 0.0) {
        return Err(Error::Input("kernel weight exponents must be non-negative".into()));
    }
    let OseenParams { a, t, deriv } = spec.params;
    let kdeg = if deriv.is_some() { 1.0 } else { 0.0 };
    let sq = 2.0 * t.sqrt();
    let prefactor = (4.0 * PI * t).powf(-1.5) * sq.powf(-kdeg);
    let (ga, gb) = match spec.index {
        1 => (0.0, 0.0),
        2 => (spec.alpha, 0.0),
        3 => (0.0, spec.beta),
        _ => (spec.alpha, spec.beta),
    };
    let integral = if ga == 0.0 && gb == 0.0 {
        match deriv {
            None => (PI / s).powf(1.5),
            Some(_) => PI / s * 2f64.powf(s) * abs_moment(s),
        }
    } else {
        let rho_max = (40.0 / s).sqrt() + 2.0;
        let phi_factor = match deriv {
            Some(1) | Some(2) => cos_moment(s),
            _ => 2.0 * PI,
        };
        let inner_opts = QuadOptions { rel_tol: 1e-10, max_intervals: 400, ..QuadOptions::default() };
        let radial = |rho: f64| -> f64 {
            let g = rho * rho * (-s * rho * rho).exp();
            if g == 0.0 {
                return 0.0;
            }
            let polar = |u: f64| -> f64 {
                let sn2 = (1.0 - u * u).max(0.0);
                let dfac = match deriv {
                    None => 1.0,
                    Some(0) => (2.0 * rho * u.abs()).powf(s),
                    Some(_) => (2.0 * rho).powf(s) * sn2.powf(0.5 * s),
                };
                let x1 = a * t + sq * rho * u;
                let perp2 = sq * sq * rho * rho * sn2;
                let r = (x1 * x1 + perp2).sqrt();
                let wake = if x1 > 0.0 { perp2 / (r + x1) } else { r - x1 };
                let w = (1.0 + r).powf(ga * s) * (1.0 + wake).powf(gb * s);
                dfac * w
            };
            g * gauss_kronrod(polar, &[-1.0, 0.0, 1.0], &inner_opts).value
        };
        let mut pts = vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.0, rho_max];
        let kink = a.abs() * t / sq;
        if kink > 0.0 && kink < rho_max {
            pts.push(kink);
            pts.sort_by(f64::total_cmp);
        }
        phi_factor * gauss_kronrod(radial, &pts, &QuadOptions::relative(1e-9)).checked()?
    };
    Ok(prefactor * (sq.powi(3) * integral).powf(1.0 / s))
}

/// The four-term Young-inequality bound on `‖ρ_{α,β} ∂^k S_a(t) f‖_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungBound {
    /// Measured `‖ρ ∂^k S_a(t) f‖_r`.
    pub lhs: f64,
    /// `C Σᵢ ‖G_{i,k}‖_s ‖wᵢ f‖_q`.
    pub rhs: f64,
    /// Kernel exponent `s` with `1/s = 1 + 1/r - 1/q`.
    pub s: f64,
    /// Constant `C = c_α c_β` from the weight splitting.
    pub constant: f64,
    /// Products `‖G_{i,k}‖_s ‖wᵢ f‖_q` for `i = 1..4`.
    pub terms: [f64; 4],
}

/// Assembles the bound
/// `ρ|∂^k S_a P f| ≤ C (G₁ * ρ|f| + G₂ * (1+|y|-y₁)^β|f| + G₃ * (1+|y|)^α|f| + G₄ * |f|)`
/// with Young's inequality, for solenoidal `f`.
pub fn young_bound(f: &GridField, p: &OseenParams, alpha: f64, beta: f64, q: f64, r: f64) -> Result<YoungBound> {
    if !(q >= 1.0 && r >= q) {
        return Err(Error::Input(format!("need 1 ≤ q ≤ r, got q = {q}, r = {r}")));
    }
    let inv_s = 1.0 + 1.0 / r - 1.0 / q;
    let s = 1.0 / inv_s;
    let lhs = weighted_semigroup_norm(f, p, &WeightedNorm::new(r, WeightSpec::new(alpha, beta))?)?;
    let c = |e: f64| if e > 1.0 { 2f64.powf(e - 1.0) } else { 1.0 };
    let constant = c(alpha) * c(beta);
    let data_weights = [
        WeightSpec::new(alpha, beta),
        WeightSpec::new(0.0, beta),
        WeightSpec::new(alpha, 0.0),
        WeightSpec::unweighted(),
    ];
    let mut terms = [0.0; 4];
    for (i, w) in data_weights.iter().enumerate() {
        let g = kernel_norm(&KernelSpec { index: i as u8 + 1, params: *p, alpha, beta, s })?;
        terms[i] = g * weighted_norm(f, &WeightedNorm::new(q, *w)?);
    }
    Ok(YoungBound { lhs, rhs: constant * terms.iter().sum::<f64>(), s, constant, terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn heat_kernel_mass_is_one() {
        for t in [0.01, 1.0, 7.0, 1e4] {
            let spec = KernelSpec { index: 1, params: OseenParams::new(1.0, t), alpha: 0.0, beta: 0.0, s: 1.0 };
            assert_relative_eq!(kernel_norm(&spec).unwrap(), 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn quadrature_path_matches_closed_form() {
        // With α = β = 0 the weighted path must reproduce the Gaussian moments.
        for deriv in [None, Some(0), Some(1)] {
            let params = OseenParams { a: 0.7, t: 3.0, deriv };
            let exact = kernel_norm(&KernelSpec { index: 1, params, alpha: 0.0, beta: 0.0, s: 2.5 }).unwrap();
            let quad = kernel_norm(&KernelSpec { index: 4, params, alpha: 1e-300, beta: 0.0, s: 2.5 }).unwrap();
            assert_relative_eq!(exact, quad, max_relative = 1e-8);
        }
    }

    #[test]
    fn cos_moment_values() {
        assert_relative_eq!(cos_moment(0.0), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(cos_moment(2.0), PI, max_relative = 1e-14);
        assert_relative_eq!(cos_moment(1.0), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bad_index() {
        let spec = KernelSpec { index: 5, params: OseenParams::new(0.0, 1.0), alpha: 0.0, beta: 0.0, s: 1.0 };
        assert!(kernel_norm(&spec).is_err());
    }

    #[test]
    fn zero_mode_is_conserved() {
        let shape = GridShape::centered(16, 12.0).unwrap();
        let f = gaussian_bump(&shape, 1.0, &[0.5, -0.2, 0.0]);
        let mut s = f.to_spectral();
        let before = s.data[0];
        evolve_spectral(&mut s, &OseenParams::new(0.8, 2.0)).unwrap();
        assert_eq!(s.data[0], before);
    }
}
