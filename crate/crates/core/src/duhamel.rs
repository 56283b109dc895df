//! Forced Oseen problems in the whole-space surrogate, where `S_a(t)`
//! replaces the exterior-domain semigroup: the starting-problem forcings
//! `f₁ = -ψ'(t)u_s` and `f₂ = ψ(1-ψ)(u_s·∇u_s + a∂₁u_s)`, a Picard iteration for
//! the perturbation equation, and the scaled seminorm triple used to track
//! both.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{weighted_norm, GridField, GridShape, SpectralField, WeightedNorm, GUARD_LIMIT};
use crate::semigroup::{evolve_spectral, OseenParams};
use crate::weights::WeightSpec;

/// Label attached to every output of this module.
pub const SURROGATE_LABEL: &str = "whole-space surrogate";

/// Transition function `ψ` with `ψ = 0` for `t ≤ 0` and `ψ = 1` for `t ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transition {
    /// The cubic smoothstep `3s² - 2s³`, with `M = 3/2`.
    Smoothstep,
    /// Values at uniform nodes of `[0, 1]`, interpolated linearly.
    Samples(Vec<f64>),
}

impl Transition {
    /// Checks `ψ(0) = 0`, `ψ(1) = 1` and `|ψ| ≤ 1`.
    pub fn validate(&self) -> Result<()> {
        if let Transition::Samples(v) = self {
            if v.len() < 2 {
                return Err(Error::Input("a sampled transition needs at least two values".into()));
            }
            if v[0] != 0.0 || v[v.len() - 1] != 1.0 {
                return Err(Error::Input("a transition must start at 0 and end at 1".into()));
            }
            if v.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
                return Err(Error::Input("transition values must satisfy |psi| <= 1".into()));
            }
        }
        Ok(())
    }

    /// `ψ(t)`.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match self {
            Transition::Smoothstep => t * t * (3.0 - 2.0 * t),
            Transition::Samples(v) => {
                let m = (v.len() - 1) as f64;
                let x = t * m;
                let i = (x.floor() as usize).min(v.len() - 2);
                let f = x - i as f64;
                v[i] * (1.0 - f) + v[i + 1] * f
            }
        }
    }

    /// `ψ'(t)`, taking the right derivative at sample nodes.
    pub fn derivative(&self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        match self {
            Transition::Smoothstep => 6.0 * t * (1.0 - t),
            Transition::Samples(v) => {
                let m = (v.len() - 1) as f64;
                let i = ((t * m).floor() as usize).min(v.len() - 2);
                (v[i + 1] - v[i]) * m
            }
        }
    }

    /// `M = max |ψ'|`.
    pub fn max_derivative(&self) -> f64 {
        match self {
            Transition::Smoothstep => 1.5,
            Transition::Samples(v) => {
                let m = (v.len() - 1) as f64;
                v.windows(2).map(|w| ((w[1] - w[0]) * m).abs()).fold(0.0, f64::max)
            }
        }
    }
}

/// Time-dependent forcing supplied by the caller.
pub type CustomForcing = Arc<dyn Fn(f64) -> GridField + Send + Sync>;

/// Which forcing drives the problem.
#[derive(Clone)]
pub enum ForcingKind {
    /// No forcing.
    Zero,
    /// `f₁ = -ψ'(t) u_s`.
    F1,
    /// `f₂ = ψ(1-ψ)(u_s·∇u_s + a∂₁u_s)`.
    F2,
    /// `f₁ + f₂`.
    F1F2,
    /// A caller-supplied field `g(t)`.
    Custom(CustomForcing),
}

impl std::fmt::Debug for ForcingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ForcingKind::Zero => "zero",
            ForcingKind::F1 => "f1",
            ForcingKind::F2 => "f2",
            ForcingKind::F1F2 => "f1+f2",
            ForcingKind::Custom(_) => "custom",
        })
    }
}

/// Forcing of the linear problem `∂_t v = Δv - a∂₁v + P F`.
#[derive(Debug, Clone)]
pub struct ForcingSpec {
    /// Forcing kind.
    pub kind: ForcingKind,
    /// Transition function.
    pub psi: Transition,
    /// Synthetic wake `u_s`.
    pub wake: GridField,
    /// Drift speed.
    pub a: f64,
}

impl ForcingSpec {
    /// Starting-problem forcing with the smoothstep transition.
    pub fn new(kind: ForcingKind, wake: GridField, a: f64) -> Self {
        Self { kind, psi: Transition::Smoothstep, wake, a }
    }

    fn prepare(&self) -> Result<PreparedForcing> {
        self.psi.validate()?;
        if self.wake.comps != 3 {
            return Err(Error::Config("the wake must have 3 components".into()));
        }
        if !self.a.is_finite() {
            return Err(Error::Input("drift must be finite".into()));
        }
        let (f1, f2) = match self.kind {
            ForcingKind::F1 => (true, false),
            ForcingKind::F2 => (false, true),
            ForcingKind::F1F2 => (true, true),
            ForcingKind::Zero | ForcingKind::Custom(_) => (false, false),
        };
        let ws = self.wake.to_spectral();
        let u = if f1 { Some(ws.leray_project()?) } else { None };
        let nl = if f2 {
            let mut n = div_outer(&ws, &ws, false)?;
            n.add_scaled(self.a, &ws.derivative(0))?;
            Some(n.leray_project()?)
        } else {
            None
        };
        let custom = match &self.kind {
            ForcingKind::Custom(g) => Some(g.clone()),
            _ => None,
        };
        Ok(PreparedForcing { psi: self.psi.clone(), u, nl, custom, shape: self.wake.shape })
    }
}

struct PreparedForcing {
    psi: Transition,
    u: Option<SpectralField>,
    nl: Option<SpectralField>,
    custom: Option<CustomForcing>,
    shape: GridShape,
}

impl PreparedForcing {
    /// `P F(τ)` in spectral form, `None` when it vanishes.
    fn at(&self, tau: f64) -> Result<Option<SpectralField>> {
        let mut out: Option<SpectralField> = None;
        let mut add = |s: f64, f: &SpectralField| -> Result<()> {
            if s == 0.0 {
                return Ok(());
            }
            match out.as_mut() {
                Some(o) => o.add_scaled(s, f)?,
                None => {
                    let mut o = SpectralField::zeros(f.shape, f.comps);
                    o.add_scaled(s, f)?;
                    out = Some(o);
                }
            }
            Ok(())
        };
        if let Some(u) = &self.u {
            add(-self.psi.derivative(tau), u)?;
        }
        if let Some(nl) = &self.nl {
            let p = self.psi.value(tau);
            add(p * (1.0 - p), nl)?;
        }
        if let Some(g) = &self.custom {
            let field = g(tau);
            if field.shape != self.shape || field.comps != 3 {
                return Err(Error::Config("custom forcing must live on the wake grid".into()));
            }
            add(1.0, &field.to_spectral().leray_project()?)?;
        }
        Ok(out)
    }
}

/// Nodes `0 = t₀ < t₁ < … < t_N` of a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Strictly increasing nodes starting at zero.
    pub nodes: Vec<f64>,
}

impl TimeGrid {
    /// Validated grid.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::Config("a time grid starts at 0 and has at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::Config("time nodes must be finite and strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// `steps` equal steps up to `t_max`.
    pub fn uniform(t_max: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("at least one step is needed".into()));
        }
        Self::new((0..=steps).map(|i| t_max * i as f64 / steps as f64).collect())
    }

    /// Zero followed by `count` geometrically spaced nodes from `t_first`
    /// to `t_max`.
    pub fn geometric(t_first: f64, t_max: f64, count: usize) -> Result<Self> {
        if !(t_first > 0.0 && t_max > t_first && count >= 2) {
            return Err(Error::Config("geometric grid needs 0 < t_first < t_max and two nodes".into()));
        }
        let ratio = (t_max / t_first).ln() / (count - 1) as f64;
        let mut nodes = vec![0.0];
        nodes.extend((0..count).map(|i| if i + 1 == count { t_max } else { t_first * (ratio * i as f64).exp() }));
        Self::new(nodes)
    }

    /// Zero plus 96 geometric nodes from `0.01` to `64`.
    pub fn default_horizon() -> Self {
        Self::geometric(0.01, 64.0, 96).expect("valid default grid")
    }

    /// The grid with every step halved.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len());
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(*self.nodes.last().expect("nonempty"));
        Self { nodes }
    }

    /// Final time.
    pub fn t_max(&self) -> f64 {
        *self.nodes.last().expect("nonempty")
    }
}

fn check_step_guard(field: &GridField, t: f64, prev: f64) -> Result<f64> {
    let ratio = field.boundary_mass_ratio();
    if ratio > GUARD_LIMIT {
        return Err(Error::HorizonTruncated { t, max_safe_t: prev });
    }
    Ok(ratio)
}

/// Marches `v' = Δv - a∂₁v + F` with the exact propagator and the
/// trapezoidal rule for the forcing,
/// `v_n = S(Δ)v_{n-1} + Δ/2 [S(Δ)F_{n-1} + F_n]`, calling
/// `visit(n, t_n, v̂_n, v_n, guard)` at every node.
fn march<F, V>(v0: &SpectralField, a: f64, grid: &TimeGrid, mut forcing: F, mut visit: V) -> Result<()>
where
    F: FnMut(usize, f64) -> Result<Option<SpectralField>>,
    V: FnMut(usize, f64, &SpectralField, &GridField, f64) -> Result<()>,
{
    let mut w = v0.clone();
    let real = w.to_real();
    let g = check_step_guard(&real, 0.0, 0.0)?;
    visit(0, 0.0, &w, &real, g)?;
    let mut f_prev = forcing(0, 0.0)?;
    for n in 1..grid.nodes.len() {
        let (t0, t1) = (grid.nodes[n - 1], grid.nodes[n]);
        let dt = t1 - t0;
        if let Some(f) = &f_prev {
            w.add_scaled(0.5 * dt, f)?;
        }
        evolve_spectral(&mut w, &OseenParams::new(a, dt))?;
        let f_next = forcing(n, t1)?;
        if let Some(f) = &f_next {
            w.add_scaled(0.5 * dt, f)?;
        }
        let real = w.to_real();
        if !real.is_finite() {
            return Err(Error::Divergent(format!("non-finite solution at t = {t1}")));
        }
        let g = check_step_guard(&real, t1, t0)?;
        visit(n, t1, &w, &real, g)?;
        f_prev = f_next;
    }
    Ok(())
}

fn check_data(v0: &GridField, forcing: &ForcingSpec) -> Result<()> {
    if v0.comps != 3 || v0.shape != forcing.wake.shape {
        return Err(Error::Config("initial data and wake must be 3-component fields on one grid".into()));
    }
    Ok(())
}

/// `v(t) = S_a(t)v₀ + ∫₀ᵗ S_a(t-τ) P F(τ) dτ` at every node of `grid`.
pub fn duhamel_solve(v0: &GridField, forcing: &ForcingSpec, grid: &TimeGrid) -> Result<Vec<GridField>> {
    check_data(v0, forcing)?;
    let prepared = forcing.prepare()?;
    let mut out = Vec::with_capacity(grid.nodes.len());
    march(&v0.to_spectral(), forcing.a, grid, |_, t| prepared.at(t), |_, _, _, real, _| {
        out.push(real.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Norms of the solution at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuhamelRow {
    /// Time.
    pub t: f64,
    /// One value per requested norm.
    pub norms: Vec<f64>,
    /// Boundary-mass ratio.
    pub guard: f64,
}

/// Like [`duhamel_solve`] but keeps only the requested norms, so that large
/// grids never store the whole trajectory.
pub fn duhamel_norms(
    v0: &GridField,
    forcing: &ForcingSpec,
    grid: &TimeGrid,
    norms: &[WeightedNorm],
) -> Result<Vec<DuhamelRow>> {
    check_data(v0, forcing)?;
    let prepared = forcing.prepare()?;
    let mut out = Vec::with_capacity(grid.nodes.len());
    march(&v0.to_spectral(), forcing.a, grid, |_, t| prepared.at(t), |_, t, _, real, guard| {
        out.push(DuhamelRow { t, norms: norms.iter().map(|nm| weighted_norm(real, nm)).collect(), guard });
        Ok(())
    })?;
    Ok(out)
}

fn dealias(f: &mut SpectralField) {
    let shape = f.shape;
    let n = shape.n;
    let cut = (n / 3) as u64;
    let keep = |m: usize| shape.mode(m).unsigned_abs() <= cut;
    f.multiply(|idx| {
        if keep(idx / (n * n)) && keep((idx / n) % n) && keep(idx % n) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
}

/// Spectrum of `∇·(u ⊗ v)`, the vector with components `Σ_j ∂_j(u_j v_i)`,
/// evaluated pseudo-spectrally, optionally with the 2/3 rule.
pub fn div_outer(u: &SpectralField, v: &SpectralField, two_thirds: bool) -> Result<SpectralField> {
    if u.comps != 3 || v.comps != 3 || u.shape != v.shape {
        return Err(Error::Config("div_outer needs two 3-component spectra on one grid".into()));
    }
    let shape = u.shape;
    let len = shape.len();
    let real = |s: &SpectralField| {
        if two_thirds {
            let mut c = s.clone();
            dealias(&mut c);
            c.to_real()
        } else {
            s.to_real()
        }
    };
    let ur = real(u);
    let vr = if std::ptr::eq(u, v) { ur.clone() } else { real(v) };
    let mut out = SpectralField::zeros(shape, 3);
    for j in 0..3 {
        let uj = ur.component(j);
        let mut data = vec![0.0; 3 * len];
        for i in 0..3 {
            let vi = vr.component(i);
            for idx in 0..len {
                data[i * len + idx] = uj[idx] * vi[idx];
            }
        }
        let prod = GridField { shape, comps: 3, data }.to_spectral();
        out.add_scaled(1.0, &prod.derivative(j))?;
    }
    if two_thirds {
        dealias(&mut out);
    }
    Ok(out)
}

/// Running suprema of the three scaled seminorms
/// `[v]_{3,γ,δ,t}`, `[v]_{∞,γ,δ,t}` and `[∇v]_{3,γ,δ,t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleNorm {
    /// Sample times, all positive.
    pub times: Vec<f64>,
    /// `sup τ^{0}(1+τ)^{-γ-δ/2}‖ρv‖₃` up to each time.
    pub v3: Vec<f64>,
    /// `sup τ^{1/2}(1+τ)^{-γ-δ/2}‖ρv‖_∞` up to each time.
    pub vinf: Vec<f64>,
    /// `sup τ^{1/2}(1+τ)^{-γ-δ/2}‖ρ∇v‖₃` up to each time.
    pub grad3: Vec<f64>,
}

impl TripleNorm {
    fn empty() -> Self {
        Self { times: Vec::new(), v3: Vec::new(), vinf: Vec::new(), grad3: Vec::new() }
    }

    fn push(&mut self, t: f64, sample: [f64; 3]) {
        let prev = |v: &Vec<f64>| v.last().copied().unwrap_or(0.0);
        let (a, b, c) = (prev(&self.v3).max(sample[0]), prev(&self.vinf).max(sample[1]), prev(&self.grad3).max(sample[2]));
        self.times.push(t);
        self.v3.push(a);
        self.vinf.push(b);
        self.grad3.push(c);
    }

    /// The three suprema over the whole sample range.
    pub fn last(&self) -> [f64; 3] {
        match self.times.len() {
            0 => [0.0; 3],
            n => [self.v3[n - 1], self.vinf[n - 1], self.grad3[n - 1]],
        }
    }

    /// `[v]_3 + [v]_∞ + [∇v]_3` over the whole sample range.
    pub fn total(&self) -> f64 {
        self.last().iter().sum()
    }
}

fn triple_sample(spec: &SpectralField, real: &GridField, w: WeightSpec, tau: f64) -> [f64; 3] {
    let time = (1.0 + tau).powf(-(w.alpha + 0.5 * w.beta));
    let n3 = WeightedNorm { q: 3.0, weight: w };
    let ninf = WeightedNorm { q: f64::INFINITY, weight: w };
    [
        time * weighted_norm(real, &n3),
        tau.sqrt() * time * weighted_norm(real, &ninf),
        tau.sqrt() * time * weighted_norm(&spec.gradient_real(), &n3),
    ]
}

/// Triple of scaled seminorms of a sampled trajectory with weight
/// `(1+|x|)^γ(1+|x|-x₁)^δ`. Samples at `τ ≤ 0` are skipped.
pub fn triple_norm(times: &[f64], fields: &[GridField], gamma: f64, delta: f64) -> Result<TripleNorm> {
    if times.len() != fields.len() {
        return Err(Error::Input("one field per time is required".into()));
    }
    let w = WeightSpec::new(gamma, delta);
    let mut out = TripleNorm::empty();
    for (&t, f) in times.iter().zip(fields) {
        if t > 0.0 {
            out.push(t, triple_sample(&f.to_spectral(), f, w, t));
        }
    }
    Ok(out)
}

/// Outcome of [`picard_iterate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    /// Unweighted triple of each iterate `v₀, v₁, …`.
    pub triples: Vec<TripleNorm>,
    /// `[[v_m - v_{m-1}]]` for `m = 1, 2, …`.
    pub increments: Vec<f64>,
    /// Ratios of consecutive increments.
    pub ratios: Vec<f64>,
    /// Whether every ratio is below one.
    pub contracting: bool,
    /// Whether the increments grew or became non-finite.
    pub diverged: bool,
    /// First time at which an iterate breached the boundary-mass guard.
    pub truncated_at: Option<f64>,
    /// Human-readable summary.
    pub report: String,
}

fn spectral_triple(traj: &[SpectralField], grid: &TimeGrid) -> TripleNorm {
    let w = WeightSpec::unweighted();
    let mut out = TripleNorm::empty();
    for (s, &t) in traj.iter().zip(&grid.nodes) {
        if t > 0.0 {
            out.push(t, triple_sample(s, &s.to_real(), w, t));
        }
    }
    out
}

fn difference(a: &[SpectralField], b: &[SpectralField]) -> Result<Vec<SpectralField>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut d = x.clone();
            d.add_scaled(-1.0, y)?;
            Ok(d)
        })
        .collect()
}

/// Successive approximations `v₀(t) = S_a(t)b` and
/// `v_{m+1}(t) = S_a(t)b - ∫₀ᵗ S_a(t-τ)P[∇·(v_m⊗v_m) + ∇·(v_m⊗u_s + u_s⊗v_m)](τ)dτ`
/// on `grid`, with the nonlinearity dealiased by the 2/3 rule.
///
/// Growth of the increments, and iterates that breach the boundary-mass guard,
/// are reported through [`PicardReport::diverged`] rather than as errors.
pub fn picard_iterate(b: &GridField, wake: &GridField, a: f64, m_max: usize, grid: &TimeGrid) -> Result<PicardReport> {
    if b.comps != 3 || wake.comps != 3 || b.shape != wake.shape {
        return Err(Error::Config("data and wake must be 3-component fields on one grid".into()));
    }
    if m_max == 0 {
        return Err(Error::Config("at least one iteration is needed".into()));
    }
    let ws = wake.to_spectral();
    let wake_active = wake.data.iter().any(|&v| v != 0.0);
    let bs = b.to_spectral();
    let mut current: Vec<SpectralField> = Vec::with_capacity(grid.nodes.len());
    march(&bs, a, grid, |_, _| Ok(None), |_, _, s, _, _| {
        current.push(s.clone());
        Ok(())
    })?;
    let mut triples = vec![spectral_triple(&current, grid)];
    let mut increments: Vec<f64> = Vec::new();
    let mut diverged = false;
    let mut truncated_at = None;
    for _ in 0..m_max {
        let prev = &current;
        let nonlinear = |n: usize, _t: f64| -> Result<Option<SpectralField>> {
            let v = &prev[n];
            let mut f = div_outer(v, v, true)?;
            if wake_active {
                f.add_scaled(1.0, &div_outer(v, &ws, true)?)?;
                f.add_scaled(1.0, &div_outer(&ws, v, true)?)?;
            }
            let mut p = f.leray_project()?;
            p.data.iter_mut().for_each(|z| *z = -*z);
            Ok(Some(p))
        };
        let mut next: Vec<SpectralField> = Vec::with_capacity(grid.nodes.len());
        let run = march(&bs, a, grid, nonlinear, |_, _, s, _, _| {
            next.push(s.clone());
            Ok(())
        });
        match run {
            Ok(()) => {}
            Err(Error::Divergent(_)) => {
                diverged = true;
                break;
            }
            Err(Error::HorizonTruncated { t, .. }) => {
                diverged = true;
                truncated_at = Some(t);
                break;
            }
            Err(e) => return Err(e),
        }
        let inc = spectral_triple(&difference(&next, prev)?, grid).total();
        triples.push(spectral_triple(&next, grid));
        increments.push(inc);
        current = next;
        if !inc.is_finite() || inc > 1e12 {
            diverged = true;
            break;
        }
    }
    let ratios: Vec<f64> = increments.windows(2).map(|w| w[1] / w[0]).collect();
    let grew = ratios.iter().any(|r| !(r < &1.0));
    diverged = diverged || grew && increments.last().is_some_and(|l| *l > increments[0]);
    let contracting = !diverged && !ratios.is_empty() && ratios.iter().all(|r| *r < 1.0);
    let report = if let Some(t) = truncated_at {
        format!("divergence: iterate {} left the guarded box at t = {t:.4} after increments {increments:?} ({SURROGATE_LABEL})", increments.len() + 1)
    } else if diverged {
        format!("divergence: increments {increments:?} do not contract ({SURROGATE_LABEL})")
    } else if contracting {
        format!("contraction: max increment ratio {:.3e} ({SURROGATE_LABEL})", ratios.iter().fold(0.0f64, |m, r| m.max(*r)))
    } else {
        format!("inconclusive: ratios {ratios:?} ({SURROGATE_LABEL})")
    };
    Ok(PicardReport { triples, increments, ratios, contracting, diverged, truncated_at, report })
}
