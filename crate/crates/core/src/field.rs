//! Uniform periodic three-dimensional grid fields, their discrete Fourier
//! representation, the Leray projection and weighted `L^q` norms.
//!
//! Samples sit at `x = center - L + h·j` with `h = 2L/n` and `j ∈ 0..n` on
//! each axis. Values are stored component-major, and within a component at
//! index `(i·n + j)·n + k` for the sample `(x₁ᵢ, x₂ⱼ, x₃ₖ)`. Mode `m` of an
//! axis has wave number `ξ = (π/L)·m̃` with `m̃ ∈ [-n/2, n/2)`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{Point, WeightSpec};

/// Boundary-mass ratio above which a periodic field is considered
/// contaminated by wrap-around.
pub const GUARD_LIMIT: f64 = 1e-6;

/// Fraction of the half-width beyond which samples belong to the guard shell.
pub const GUARD_SHELL: f64 = 0.9;

const CHUNK: usize = 4096;

/// Geometry of a cubic periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    /// Points per axis, a power of two.
    pub n: usize,
    /// Half of the box side length.
    pub half_width: f64,
    /// Box center.
    pub center: Point,
}

impl GridShape {
    /// Validated grid geometry.
    pub fn new(n: usize, half_width: f64, center: Point) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Config(format!("n = {n} must be a power of two and at least 4")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Config(format!("half-width {half_width} must be positive")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("grid center must be finite".into()));
        }
        Ok(Self { n, half_width, center })
    }

    /// Grid centered at the origin.
    pub fn centered(n: usize, half_width: f64) -> Result<Self> {
        Self::new(n, half_width, [0.0; 3])
    }

    /// Grid spacing `2L/n`.
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Volume element `h³`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    /// Number of samples per component.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Whether the grid is empty (never, for a validated shape).
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Coordinate of sample `j` along axis `d`.
    pub fn axis_coord(&self, d: usize, j: usize) -> f64 {
        self.center[d] - self.half_width + self.h() * j as f64
    }

    /// Position of the sample with flat index `idx`.
    pub fn point(&self, idx: usize) -> Point {
        let n = self.n;
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        [self.axis_coord(0, i), self.axis_coord(1, j), self.axis_coord(2, k)]
    }

    /// Signed mode number of index `m`, in `[-n/2, n/2)`.
    pub fn mode(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Wave number of index `m`.
    pub fn wave(&self, m: usize) -> f64 {
        PI / self.half_width * self.mode(m) as f64
    }

    /// Wave number for odd-order multipliers: the Nyquist mode is zeroed so
    /// that real fields stay real.
    pub fn wave_odd(&self, m: usize) -> f64 {
        if m == self.n / 2 {
            0.0
        } else {
            self.wave(m)
        }
    }

    /// Full wave vector of flat index `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [self.wave(idx / (n * n)), self.wave((idx / n) % n), self.wave(idx % n)]
    }

    /// Wave vector with Nyquist components zeroed.
    pub fn wavevector_odd(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        [self.wave_odd(idx / (n * n)), self.wave_odd((idx / n) % n), self.wave_odd(idx % n)]
    }

    /// Whether `point` lies in the guard shell.
    pub fn in_guard_shell(&self, p: &Point) -> bool {
        (0..3).any(|d| (p[d] - self.center[d]).abs() > GUARD_SHELL * self.half_width)
    }
}

/// Real samples of a field with `comps` components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    /// Grid geometry.
    pub shape: GridShape,
    /// Number of components.
    pub comps: usize,
    /// Component-major samples.
    pub data: Vec<f64>,
}

/// Discrete Fourier coefficients of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    /// Grid geometry.
    pub shape: GridShape,
    /// Number of components.
    pub comps: usize,
    /// Component-major coefficients in unnormalised DFT convention.
    pub data: Vec<Complex64>,
}

/// Deterministic parallel sum: fixed-size chunks summed in parallel, then
/// the chunk sums added in order.
pub fn det_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partial: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

/// Deterministic parallel maximum.
pub fn det_max<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(len);
            (lo..hi).map(&f).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

impl GridField {
    /// The zero field.
    pub fn zeros(shape: GridShape, comps: usize) -> Self {
        Self { shape, comps, data: vec![0.0; comps * shape.len()] }
    }

    /// Samples `f(x, out)` at every grid point.
    pub fn from_fn<F>(shape: GridShape, comps: usize, f: F) -> Self
    where
        F: Fn(&Point, &mut [f64]),
    {
        let len = shape.len();
        let mut data = vec![0.0; comps * len];
        let mut buf = vec![0.0; comps];
        for idx in 0..len {
            f(&shape.point(idx), &mut buf);
            for (c, v) in buf.iter().enumerate() {
                data[c * len + idx] = *v;
            }
        }
        Self { shape, comps, data }
    }

    /// Samples of component `c`.
    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.shape.len();
        &self.data[c * len..(c + 1) * len]
    }

    /// Euclidean norm over components at flat index `idx`.
    pub fn magnitude(&self, idx: usize) -> f64 {
        let len = self.shape.len();
        (0..self.comps).map(|c| self.data[c * len + idx].powi(2)).sum::<f64>().sqrt()
    }

    /// Whether every sample is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &GridField) -> Result<GridField> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect();
        Ok(GridField { shape: self.shape, comps: self.comps, data })
    }

    /// `s·self`.
    pub fn scaled(&self, s: f64) -> GridField {
        GridField { shape: self.shape, comps: self.comps, data: self.data.iter().map(|v| s * v).collect() }
    }

    fn check_compatible(&self, other: &GridField) -> Result<()> {
        if self.shape != other.shape || self.comps != other.comps {
            return Err(Error::Config("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Discrete `L²` inner product `Σ f·g h³`.
    pub fn inner(&self, other: &GridField) -> Result<f64> {
        self.check_compatible(other)?;
        let dv = self.shape.cell_volume();
        Ok(det_sum(self.data.len(), |i| self.data[i] * other.data[i]) * dv)
    }

    /// Unweighted `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        (det_sum(self.data.len(), |i| self.data[i] * self.data[i]) * self.shape.cell_volume()).sqrt()
    }

    /// Forward transform.
    pub fn to_spectral(&self) -> SpectralField {
        let mut data: Vec<Complex64> = self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft3(&mut data, self.shape.n, self.comps, false);
        SpectralField { shape: self.shape, comps: self.comps, data }
    }

    /// `‖f restricted to the guard shell‖₂ / ‖f‖₂`, zero for the zero field.
    pub fn boundary_mass_ratio(&self) -> f64 {
        let len = self.shape.len();
        let total = det_sum(len, |idx| self.magnitude(idx).powi(2));
        if total == 0.0 {
            return 0.0;
        }
        let shell = det_sum(len, |idx| {
            if self.shape.in_guard_shell(&self.shape.point(idx)) {
                self.magnitude(idx).powi(2)
            } else {
                0.0
            }
        });
        (shell / total).sqrt()
    }

    /// Fails with [`Error::WrapAround`] when the boundary-mass ratio exceeds
    /// [`GUARD_LIMIT`].
    pub fn check_guard(&self, t: f64) -> Result<f64> {
        let ratio = self.boundary_mass_ratio();
        if ratio > GUARD_LIMIT {
            Err(Error::WrapAround { t, ratio, limit: GUARD_LIMIT })
        } else {
            Ok(ratio)
        }
    }

    /// Writes `<prefix>.bin` (little-endian `f64` samples in storage order)
    /// and `<prefix>.json` (header describing the layout).
    pub fn export_snapshot(&self, prefix: &Path) -> Result<()> {
        let header = SnapshotHeader {
            n: self.shape.n,
            half_width: self.shape.half_width,
            center: self.shape.center,
            components: self.comps,
            dtype: "f64".into(),
            byte_order: "little-endian".into(),
            layout: "component-major; index (i*n + j)*n + k with i along x1".into(),
        };
        let json_path = prefix.with_extension("json");
        let bin_path = prefix.with_extension("bin");
        serde_json::to_writer_pretty(BufWriter::new(File::create(json_path)?), &header)?;
        let mut w = BufWriter::new(File::create(bin_path)?);
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a snapshot written by [`GridField::export_snapshot`].
    pub fn import_snapshot(prefix: &Path) -> Result<GridField> {
        let header: SnapshotHeader =
            serde_json::from_reader(BufReader::new(File::open(prefix.with_extension("json"))?))?;
        if header.dtype != "f64" || header.byte_order != "little-endian" {
            return Err(Error::Input("unsupported snapshot encoding".into()));
        }
        let shape = GridShape::new(header.n, header.half_width, header.center)?;
        let mut bytes = Vec::new();
        BufReader::new(File::open(prefix.with_extension("bin"))?).read_to_end(&mut bytes)?;
        let expected = 8 * header.components * shape.len();
        if bytes.len() != expected {
            return Err(Error::Input(format!("snapshot holds {} bytes, expected {expected}", bytes.len())));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of eight bytes")))
            .collect();
        Ok(GridField { shape, comps: header.components, data })
    }
}

/// Header of an exported field snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    /// Points per axis.
    pub n: usize,
    /// Box half-width.
    pub half_width: f64,
    /// Box center.
    pub center: Point,
    /// Number of components.
    pub components: usize,
    /// Sample type.
    pub dtype: String,
    /// Byte order of the binary payload.
    pub byte_order: String,
    /// Storage order description.
    pub layout: String,
}

impl SpectralField {
    /// The zero spectrum.
    pub fn zeros(shape: GridShape, comps: usize) -> Self {
        Self { shape, comps, data: vec![Complex64::new(0.0, 0.0); comps * shape.len()] }
    }

    /// Spectrum of a field with known continuous Fourier transform
    /// `f̂(ξ) = ∫ f(x) e^{-iξ·x} dx`, written component by component into
    /// `out`. Exact up to aliasing for fields negligible near the boundary.
    pub fn from_transform<F>(shape: GridShape, comps: usize, fhat: F) -> Self
    where
        F: Fn(&[f64; 3], &mut [Complex64]),
    {
        let len = shape.len();
        let x0 = [
            shape.center[0] - shape.half_width,
            shape.center[1] - shape.half_width,
            shape.center[2] - shape.half_width,
        ];
        let scale = 1.0 / shape.cell_volume();
        let mut data = vec![Complex64::new(0.0, 0.0); comps * len];
        let mut buf = vec![Complex64::new(0.0, 0.0); comps];
        for idx in 0..len {
            let xi = shape.wavevector(idx);
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            fhat(&xi, &mut buf);
            let phase = Complex64::from_polar(scale, xi[0] * x0[0] + xi[1] * x0[1] + xi[2] * x0[2]);
            for (c, v) in buf.iter().enumerate() {
                data[c * len + idx] = v * phase;
            }
        }
        Self { shape, comps, data }
    }

    /// Multiplies by the exponential filter `Π_d exp(-36 (|m_d|/(n/2))^{36})`,
    /// which leaves resolved modes untouched and removes the spectral jump
    /// at the Nyquist frequency that would otherwise ring across the box.
    pub fn apply_filter(&mut self) {
        let shape = self.shape;
        let half = (shape.n / 2) as f64;
        let n = shape.n;
        let axis = |m: usize| (-36.0 * (shape.mode(m).unsigned_abs() as f64 / half).powi(36)).exp();
        self.multiply(|idx| Complex64::new(axis(idx / (n * n)) * axis((idx / n) % n) * axis(idx % n), 0.0));
    }

    /// Inverse transform, keeping the real part.
    pub fn to_real(&self) -> GridField {
        let mut data = self.data.clone();
        fft3(&mut data, self.shape.n, self.comps, true);
        GridField { shape: self.shape, comps: self.comps, data: data.into_iter().map(|z| z.re).collect() }
    }

    /// Applies `f(idx, modes)` to the coefficients of every mode, where
    /// `modes` holds one coefficient per component.
    pub fn map_modes<F>(&mut self, f: F)
    where
        F: Fn(usize, &mut [Complex64]),
    {
        let len = self.shape.len();
        let comps = self.comps;
        let mut buf = vec![Complex64::new(0.0, 0.0); comps];
        for idx in 0..len {
            for (c, v) in buf.iter_mut().enumerate() {
                *v = self.data[c * len + idx];
            }
            f(idx, &mut buf);
            for (c, v) in buf.iter().enumerate() {
                self.data[c * len + idx] = *v;
            }
        }
    }

    /// Multiplies every component by the scalar multiplier `m(idx)`.
    pub fn multiply<F>(&mut self, m: F)
    where
        F: Fn(usize) -> Complex64 + Sync,
    {
        let len = self.shape.len();
        self.data.par_chunks_mut(len).for_each(|block| {
            block.par_iter_mut().enumerate().for_each(|(idx, v)| *v *= m(idx));
        });
    }

    /// `self + s·other`, in place.
    pub fn add_scaled(&mut self, s: f64, other: &SpectralField) -> Result<()> {
        if self.shape != other.shape || self.comps != other.comps {
            return Err(Error::Config("spectra live on different grids".into()));
        }
        self.data.par_iter_mut().zip(&other.data).for_each(|(a, b)| *a += b * s);
        Ok(())
    }

    /// Spectral partial derivative along axis `d`.
    pub fn derivative(&self, d: usize) -> SpectralField {
        let mut out = self.clone();
        let shape = self.shape;
        out.multiply(|idx| Complex64::new(0.0, shape.wavevector_odd(idx)[d]));
        out
    }

    /// All first derivatives as a real field with `3·comps` components,
    /// ordered `∂₁f, ∂₂f, ∂₃f`.
    pub fn gradient_real(&self) -> GridField {
        let len = self.shape.len();
        let mut data = Vec::with_capacity(3 * self.comps * len);
        for d in 0..3 {
            data.extend_from_slice(&self.derivative(d).to_real().data);
        }
        GridField { shape: self.shape, comps: 3 * self.comps, data }
    }

    /// Leray projection `v̂ - ξ(ξ·v̂)/|ξ|²`; the zero mode is unchanged.
    pub fn leray_project(&self) -> Result<SpectralField> {
        if self.comps != 3 {
            return Err(Error::Config(format!("projection needs 3 components, got {}", self.comps)));
        }
        let mut out = self.clone();
        let shape = self.shape;
        out.map_modes(|idx, v| {
            let xi = shape.wavevector_odd(idx);
            let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            if k2 == 0.0 {
                return;
            }
            let dot = (v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]) / k2;
            for c in 0..3 {
                v[c] -= dot * xi[c];
            }
        });
        Ok(out)
    }

    /// Spectral divergence of a vector field, as a scalar spectrum.
    pub fn divergence(&self) -> Result<SpectralField> {
        if self.comps != 3 {
            return Err(Error::Config(format!("divergence needs 3 components, got {}", self.comps)));
        }
        let len = self.shape.len();
        let shape = self.shape;
        let data = (0..len)
            .into_par_iter()
            .map(|idx| {
                let xi = shape.wavevector_odd(idx);
                let i = Complex64::new(0.0, 1.0);
                i * (self.data[idx] * xi[0] + self.data[len + idx] * xi[1] + self.data[2 * len + idx] * xi[2])
            })
            .collect();
        Ok(SpectralField { shape, comps: 1, data })
    }

    /// Spectral curl of a vector field.
    pub fn curl(&self) -> Result<SpectralField> {
        if self.comps != 3 {
            return Err(Error::Config(format!("curl needs 3 components, got {}", self.comps)));
        }
        let mut out = self.clone();
        let shape = self.shape;
        out.map_modes(|idx, v| {
            let xi = shape.wavevector_odd(idx);
            let i = Complex64::new(0.0, 1.0);
            let w = [
                i * (v[2] * xi[1] - v[1] * xi[2]),
                i * (v[0] * xi[2] - v[2] * xi[0]),
                i * (v[1] * xi[0] - v[0] * xi[1]),
            ];
            v.copy_from_slice(&w);
        });
        Ok(out)
    }

    /// Discrete `L²` norm of the represented field, by Parseval.
    pub fn l2_norm(&self) -> f64 {
        let n3 = self.shape.len() as f64;
        (det_sum(self.data.len(), |i| self.data[i].norm_sqr()) * self.shape.cell_volume() / n3).sqrt()
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        p.borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

fn transpose_square(a: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in r + 1..n {
            a.swap(r * n + c, c * n + r);
        }
    }
}

/// In-place 3-D DFT of each `n³` block; the inverse is normalised by `n⁻³`.
pub fn fft3(data: &mut [Complex64], n: usize, comps: usize, inverse: bool) {
    let fft = plan(n, inverse);
    let n2 = n * n;
    let n3 = n2 * n;
    for block in data.chunks_mut(n3).take(comps) {
        block.par_chunks_mut(n2).for_each(|slab| {
            fft.process(slab);
            transpose_square(slab, n);
            fft.process(slab);
            transpose_square(slab, n);
        });
        let mut tmp = vec![Complex64::new(0.0, 0.0); n3];
        tmp.par_chunks_mut(n).enumerate().for_each(|(jk, col)| {
            for (i, v) in col.iter_mut().enumerate() {
                *v = block[i * n2 + jk];
            }
        });
        tmp.par_chunks_mut(n2).for_each(|c| fft.process(c));
        block.par_chunks_mut(n2).enumerate().for_each(|(i, slab)| {
            for (jk, v) in slab.iter_mut().enumerate() {
                *v = tmp[jk * n + i];
            }
        });
        if inverse {
            let s = 1.0 / n3 as f64;
            block.par_iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Leray projection of a real vector field.
pub fn leray_project(f: &GridField) -> Result<GridField> {
    Ok(f.to_spectral().leray_project()?.to_real())
}

/// `‖div f‖₂ / ‖f‖₂` computed spectrally.
pub fn relative_divergence(f: &GridField) -> Result<f64> {
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let div = f.to_spectral().divergence()?;
    Ok(div.l2_norm() / norm)
}

/// An `L^q` norm with a wake weight, `‖ρ f‖_q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    /// Lebesgue exponent in `[1, ∞]`.
    pub q: f64,
    /// Weight multiplying the field.
    pub weight: WeightSpec,
}

impl WeightedNorm {
    /// Validated norm parameters.
    pub fn new(q: f64, weight: WeightSpec) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::Input(format!("q = {q} must be at least 1")));
        }
        Ok(Self { q, weight })
    }

    /// Unweighted `L^q` norm.
    pub fn plain(q: f64) -> Result<Self> {
        Self::new(q, WeightSpec::unweighted())
    }
}

/// `(Σ (ρ|f|)^q h³)^{1/q}`, or `max ρ|f|` for `q = ∞`, with `|f|` the
/// Euclidean norm over components.
pub fn weighted_norm(f: &GridField, norm: &WeightedNorm) -> f64 {
    let shape = f.shape;
    let len = shape.len();
    let w = norm.weight;
    let unweighted = w.effective() == (0.0, 0.0);
    let val = |idx: usize| {
        let m = f.magnitude(idx);
        if unweighted || m == 0.0 {
            m
        } else {
            m * w.eval_unchecked(&shape.point(idx))
        }
    };
    if norm.q.is_infinite() {
        det_max(len, val)
    } else if norm.q == 2.0 {
        (det_sum(len, |i| val(i).powi(2)) * shape.cell_volume()).sqrt()
    } else {
        (det_sum(len, |i| val(i).powf(norm.q)) * shape.cell_volume()).powf(1.0 / norm.q)
    }
}

/// Parameters of the synthetic wake field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WakeParams {
    /// Amplitude `U₀`.
    pub u0: f64,
    /// Core mollification length `ℓ`.
    pub core: f64,
    /// Radius `R_c` of the smooth cutoff `exp(-(|x|/R_c)^8)`.
    pub cutoff: f64,
}

impl WakeParams {
    /// Amplitude `u0` with core length 2 and cutoff at `0.6·L`.
    pub fn for_grid(u0: f64, shape: &GridShape) -> Self {
        Self { u0, core: 2.0, cutoff: 0.6 * shape.half_width }
    }
}

/// Divergence-free field with the paraboloidal wake envelope
/// `U₀ (1+|x|)^{-1}(1+|x|-x₁)^{-1}`.
///
/// The field is `curl(W(x) χ(x) e₁ × x)` with
/// `W = U₀ / ((1+ζ)(1+2r_ℓ))`, `r_ℓ = (|x|² + ℓ²)^{1/2}`, `ζ = r_ℓ - x₁` and
/// the cutoff `χ`. On the `x₁` axis the field equals `2Wχ e₁`, which decays
/// like `|x|^{-1}` downstream and `|x|^{-2}/2` upstream. The curl is taken
/// spectrally, the result projected and spectrally filtered.
pub fn synthetic_wake_profile(params: &WakeParams, shape: &GridShape) -> Result<GridField> {
    if !(params.core > 0.0 && params.cutoff > 0.0 && params.u0.is_finite()) {
        return Err(Error::Input("wake core and cutoff must be positive, amplitude finite".into()));
    }
    if params.u0 == 0.0 {
        return Ok(GridField::zeros(*shape, 3));
    }
    let p = *params;
    let potential = GridField::from_fn(*shape, 3, |x, out| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let rl = (r2 + p.core * p.core).sqrt();
        let zeta = if x[0] > 0.0 { (x[1] * x[1] + x[2] * x[2] + p.core * p.core) / (rl + x[0]) } else { rl - x[0] };
        let chi = (-(r2 / (p.cutoff * p.cutoff)).powi(4)).exp();
        let w = p.u0 * chi / ((1.0 + zeta) * (1.0 + 2.0 * rl));
        out[0] = 0.0;
        out[1] = -w * x[2];
        out[2] = w * x[1];
    });
    let mut spec = potential.to_spectral().curl()?.leray_project()?;
    spec.apply_filter();
    Ok(spec.to_real())
}

/// Log-log slopes of `|f₁|` along the positive and negative `x₁` axis for
/// `|x₁| ∈ [r_lo, r_hi]`, using grid points on the axis.
pub fn axis_decay_slopes(f: &GridField, r_lo: f64, r_hi: f64) -> Result<(f64, f64)> {
    let s = f.shape;
    let n = s.n;
    let h = s.h();
    let j0 = (s.half_width - s.center[1]) / h;
    let k0 = (s.half_width - s.center[2]) / h;
    if (j0 - j0.round()).abs() > 1e-9 || (k0 - k0.round()).abs() > 1e-9 {
        return Err(Error::Config("the x₁ axis does not pass through grid points".into()));
    }
    let (j0, k0) = (j0.round() as usize, k0.round() as usize);
    let comp = f.component(0);
    let mut pos = (Vec::new(), Vec::new());
    let mut neg = (Vec::new(), Vec::new());
    for i in 0..n {
        let x1 = s.axis_coord(0, i);
        let v = comp[(i * n + j0) * n + k0].abs();
        if x1.abs() >= r_lo && x1.abs() <= r_hi && v > 0.0 {
            let target = if x1 > 0.0 { &mut pos } else { &mut neg };
            target.0.push(x1.abs());
            target.1.push(v);
        }
    }
    if pos.0.len() < 3 || neg.0.len() < 3 {
        return Err(Error::Config("too few axis samples in the requested range".into()));
    }
    Ok((
        crate::muckenhoupt::loglog_slope(&pos.0, &pos.1),
        crate::muckenhoupt::loglog_slope(&neg.0, &neg.1),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(matches!(GridShape::centered(48, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn fft_round_trip() {
        let shape = GridShape::centered(8, 3.0).unwrap();
        let f = GridField::from_fn(shape, 2, |x, out| {
            out[0] = (x[0] - 0.3 * x[1]).sin() + x[2];
            out[1] = (-x[0] * x[0]).exp();
        });
        let back = f.to_spectral().to_real();
        for (a, b) in f.data.iter().zip(&back.data) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let shape = GridShape::centered(8, PI).unwrap();
        let f = GridField::from_fn(shape, 1, |x, out| out[0] = (2.0 * x[1]).cos());
        let s = f.to_spectral();
        let n = 8;
        let idx = (0 * n + 2) * n;
        assert_relative_eq!(s.data[idx].norm(), 0.5 * (n * n * n) as f64, max_relative = 1e-12);
    }

    #[test]
    fn gradient_is_annihilated() {
        let shape = GridShape::centered(16, PI).unwrap();
        let f = GridField::from_fn(shape, 3, |x, out| {
            out[0] = x[0].cos() * x[1].sin();
            out[1] = x[0].sin() * x[1].cos();
            out[2] = 0.0;
        });
        let p = leray_project(&f).unwrap();
        assert!(p.l2_norm() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = std::env::temp_dir().join(format!("wakelab-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let shape = GridShape::new(4, 1.5, [1.0, 0.0, -2.0]).unwrap();
        let f = GridField::from_fn(shape, 3, |x, out| out.copy_from_slice(x));
        let prefix = dir.join("field");
        f.export_snapshot(&prefix).unwrap();
        assert_eq!(GridField::import_snapshot(&prefix).unwrap(), f);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn zero_amplitude_wake_is_zero() {
        let shape = GridShape::centered(8, 10.0).unwrap();
        let w = synthetic_wake_profile(&WakeParams::for_grid(0.0, &shape), &shape).unwrap();
        assert!(w.data.iter().all(|v| *v == 0.0));
    }
}
