//! Muckenhoupt `A_q` ratios of wake weights over balls and classification
//! of their growth in the radius.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{ball_integral, BallIntegralSpec};
use crate::weights::{Point, WeightSpec};

/// `(avg_B ρ)(avg_B ρ^{-1/(q-1)})^{q-1}` over the ball `B_radius(center)`.
///
/// Both averages are finite for every bounded ball, so the ratio is always a
/// number; it is at least one by Hölder's inequality.
pub fn aq_ratio(weight: &WeightSpec, q: f64, center: &Point, radius: f64) -> Result<f64> {
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::Input(format!("q = {q} must satisfy 1 < q < ∞")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Input(format!("radius {radius} must be positive and finite")));
    }
    let (a, b) = weight.effective();
    if a == 0.0 && b == 0.0 {
        return Ok(1.0);
    }
    let vol = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);
    let direct = BallIntegralSpec { gamma: a, delta: b, center: *center, radius };
    let dual = BallIntegralSpec { gamma: -a / (q - 1.0), delta: -b / (q - 1.0), center: *center, radius };
    let i1 = ball_integral(&direct)?.value().ok_or_else(|| Error::Divergent("weight average".into()))?;
    let i2 = ball_integral(&dual)?.value().ok_or_else(|| Error::Divergent("dual weight average".into()))?;
    Ok((i1 / vol) * (i2 / vol).powf(q - 1.0))
}

/// How ball centers are chosen for each radius of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CenterPlan {
    /// The origin plus `±d e₁` and `d e₂` for `d ∈ {r/4, r, 4r}`.
    #[default]
    Default,
    /// Only the origin.
    Origin,
    /// A fixed list of centers used for every radius.
    Fixed(Vec<Point>),
}

impl CenterPlan {
    /// Centers used at radius `r`.
    pub fn centers(&self, r: f64) -> Vec<Point> {
        match self {
            CenterPlan::Origin => vec![[0.0; 3]],
            CenterPlan::Fixed(list) => list.clone(),
            CenterPlan::Default => {
                let mut out = vec![[0.0; 3]];
                for d in [0.25 * r, r, 4.0 * r] {
                    out.push([d, 0.0, 0.0]);
                    out.push([-d, 0.0, 0.0]);
                    out.push([0.0, d, 0.0]);
                }
                out
            }
        }
    }
}

/// A scan of `A_q` ratios over a family of balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqScan {
    /// The weight under test.
    pub weight: WeightSpec,
    /// Muckenhoupt exponent.
    pub q: f64,
    /// Strictly increasing radii.
    pub radii: Vec<f64>,
    /// Center selection rule.
    #[serde(default)]
    pub centers: CenterPlan,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

impl AqScan {
    /// Default scan: 25 log-spaced radii from 1 to `rmax` and the default
    /// center plan.
    pub fn new(weight: WeightSpec, q: f64, rmax: f64) -> Self {
        Self { weight, q, radii: log_space(1.0, rmax, 25), centers: CenterPlan::Default }
    }
}

/// One evaluated ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqRow {
    /// Ball center.
    pub center: Point,
    /// Ball radius.
    pub radius: f64,
    /// `A_q` ratio of the ball.
    pub ratio: f64,
}

/// Growth class of the supremum of ratios as the radius increases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    /// Converges to a finite limit.
    Bounded,
    /// Grows like `log r`.
    Log,
    /// Grows like `r^p`.
    Power(f64),
}

impl Growth {
    /// Power exponent of the growth: `0` when bounded, `None` for log.
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Growth::Bounded => Some(0.0),
            Growth::Log => None,
            Growth::Power(p) => Some(*p),
        }
    }
}

impl std::fmt::Display for Growth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Growth::Bounded => write!(f, "bounded"),
            Growth::Log => write!(f, "log"),
            Growth::Power(p) => {
                let s = format!("{p:.2}");
                let s = s.trim_end_matches('0').trim_end_matches('.');
                write!(f, "power({s})")
            }
        }
    }
}

/// Fit of one growth model `y ≈ B + A·f(r)` in relative least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    /// Additive constant `B`.
    pub offset: f64,
    /// Amplitude `A`.
    pub amplitude: f64,
    /// Profiled exponent, when the model has one.
    pub exponent: Option<f64>,
    /// Akaike information criterion; lower is better.
    pub aic: f64,
}

/// Result of [`aq_scan_classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AqClassification {
    /// Growth class of the dominant center family.
    pub verdict: Growth,
    /// Plain log-log slope of the supremum over the fit window.
    pub slope: f64,
    /// Position, within each radius' center list, of the center family
    /// attaining the supremum at the largest radius; its curve is the one
    /// classified.
    pub dominant_center: usize,
    /// Constant or decaying-to-constant model.
    pub bounded_fit: ModelFit,
    /// Logarithmic model.
    pub log_fit: Option<ModelFit>,
    /// Power model with offset.
    pub power_fit: Option<ModelFit>,
    /// Supremum over centers for each radius.
    pub sup: Vec<(f64, f64)>,
    /// Fit window `(r_min, r_max)`.
    pub window: (f64, f64),
    /// Every evaluated ball.
    pub rows: Vec<AqRow>,
}

/// Least squares of `y ≈ Σ cⱼ·basisⱼ` with weights `1/y²`, by modified
/// Gram–Schmidt. Returns the coefficients and the weighted residual sum of
/// squares; numerically dependent columns receive a zero coefficient.
fn relative_lstsq(basis: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let n = y.len();
    let m = basis.len();
    let mut q: Vec<Vec<f64>> = basis.iter().map(|col| col.iter().zip(y).map(|(c, yi)| c / yi).collect()).collect();
    let rhs0: Vec<f64> = vec![1.0; n];
    let mut rmat = vec![vec![0.0; m]; m];
    let mut active = vec![false; m];
    for j in 0..m {
        let orig: f64 = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        for _ in 0..2 {
            for i in 0..j {
                if !active[i] {
                    continue;
                }
                let dot: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
                rmat[i][j] += dot;
                let qi = q[i].clone();
                for (v, u) in q[j].iter_mut().zip(&qi) {
                    *v -= dot * u;
                }
            }
        }
        let nj: f64 = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if nj > 1e-10 * orig && nj > 0.0 {
            active[j] = true;
            rmat[j][j] = nj;
            for v in q[j].iter_mut() {
                *v /= nj;
            }
        }
    }
    let mut qty = vec![0.0; m];
    let mut resid = rhs0;
    for j in 0..m {
        if active[j] {
            qty[j] = q[j].iter().zip(&resid).map(|(a, b)| a * b).sum();
            let qj = q[j].clone();
            for (v, u) in resid.iter_mut().zip(&qj) {
                *v -= qty[j] * u;
            }
        }
    }
    let mut coef = vec![0.0; m];
    for j in (0..m).rev() {
        if !active[j] {
            continue;
        }
        let mut acc = qty[j];
        for k in j + 1..m {
            acc -= rmat[j][k] * coef[k];
        }
        coef[j] = acc / rmat[j][j];
    }
    let rss = (0..n)
        .map(|i| {
            let fit: f64 = (0..m).map(|j| coef[j] * basis[j][i]).sum();
            ((y[i] - fit) / y[i]).powi(2)
        })
        .sum();
    (coef, rss)
}

fn aic(rss: f64, n: usize, k: usize) -> f64 {
    let n = n as f64;
    n * (rss / n).max(1e-20).ln() + 2.0 * k as f64
}

/// Profiles a basis family `make(e)` over `e ∈ [lo, hi]` and returns the
/// exponent, coefficients and residual of the best fit whose leading
/// coefficient passes `accept`.
fn profile<M, A>(lo: f64, hi: f64, y: &[f64], make: M, accept: A) -> Option<(f64, Vec<f64>, f64)>
where
    M: Fn(f64) -> Vec<Vec<f64>>,
    A: Fn(&[f64]) -> bool,
{
    let eval = |e: f64| {
        let (c, rss) = relative_lstsq(&make(e), y);
        let rss = if accept(&c) && rss.is_finite() { rss } else { f64::INFINITY };
        (c, rss)
    };
    let steps = ((hi - lo) / 0.025).round().max(1.0) as usize;
    let h = (hi - lo) / steps as f64;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..=steps {
        let rss = eval(lo + h * i as f64).1;
        if rss.is_finite() && best.is_none_or(|(_, b)| rss < b) {
            best = Some((i, rss));
        }
    }
    let (i, best_rss) = best?;
    let (mut a, mut b) = ((lo + h * (i as f64 - 1.0)).max(lo), (lo + h * (i as f64 + 1.0)).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c).1, eval(d).1);
    for _ in 0..50 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c).1;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d).1;
        }
    }
    let e = 0.5 * (a + b);
    let (coef, rss) = eval(e);
    if rss <= best_rss {
        Some((e, coef, rss))
    } else {
        let e = lo + h * i as f64;
        let (coef, rss) = eval(e);
        Some((e, coef, rss))
    }
}

/// Ordinary least-squares slope of `ln y` against `ln r`.
pub fn loglog_slope(r: &[f64], y: &[f64]) -> f64 {
    let n = r.len() as f64;
    let lx: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Classifies a growth curve `(r, y)` as bounded, logarithmic or power-like.
///
/// Each class is a four-parameter model carrying the leading correction of
/// the large-radius expansion of ball averages:
/// bounded `B + A r^{-κ} + C r^{-κ-1}` (or the constant `B`), logarithmic
/// `B + A ln r + (C ln r + D)/r` with `A > 0`, and power
/// `B + A r^p + C r^{p-1}` with `A > 0`. Fits use relative least squares and
/// the class with the lowest Akaike criterion wins.
pub fn classify_growth(r: &[f64], y: &[f64]) -> (Growth, ModelFit, Option<ModelFit>, Option<ModelFit>) {
    let n = r.len();
    let rmax = r.iter().copied().fold(f64::MIN, f64::max);
    let x: Vec<f64> = r.iter().map(|v| v / rmax).collect();
    let ones = vec![1.0; n];
    let (c0, rss0) = relative_lstsq(std::slice::from_ref(&ones), y);
    let mut bounded = ModelFit { offset: c0[0], amplitude: 0.0, exponent: None, aic: aic(rss0, n, 1) };
    let decay = |k: f64| {
        vec![
            ones.clone(),
            x.iter().map(|v| v.powf(-k)).collect(),
            x.iter().map(|v| v.powf(-k - 1.0)).collect(),
        ]
    };
    if let Some((k, c, rss)) = profile(0.05, 4.0, y, decay, |_| true) {
        let cand = ModelFit { offset: c[0], amplitude: c[1], exponent: Some(-k), aic: aic(rss, n, 4) };
        if cand.aic < bounded.aic {
            bounded = cand;
        }
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let log_basis = vec![
        ones.clone(),
        lx.clone(),
        lx.iter().zip(&x).map(|(l, v)| l / v).collect(),
        x.iter().map(|v| 1.0 / v).collect(),
    ];
    let (cl, rssl) = relative_lstsq(&log_basis, y);
    let log_fit = (cl[1] > 0.0).then(|| ModelFit { offset: cl[0], amplitude: cl[1], exponent: None, aic: aic(rssl, n, 4) });
    let grow = |p: f64| {
        vec![
            x.iter().map(|v| v.powf(p)).collect(),
            ones.clone(),
            x.iter().map(|v| v.powf(p - 1.0)).collect(),
        ]
    };
    let power_fit = profile(0.05, 8.0, y, grow, |c| c[0] > 0.0)
        .map(|(p, c, rss)| ModelFit { offset: c[1], amplitude: c[0], exponent: Some(p), aic: aic(rss, n, 4) });
    let mut verdict = Growth::Bounded;
    let mut best = bounded.aic;
    if let Some(l) = log_fit {
        if l.aic < best {
            best = l.aic;
            verdict = Growth::Log;
        }
    }
    if let Some(p) = power_fit {
        if p.aic < best {
            verdict = Growth::Power(p.exponent.unwrap_or(f64::NAN));
        }
    }
    (verdict, bounded, log_fit, power_fit)
}

/// Evaluates every ball of the scan and classifies the growth on the top two
/// decades of radii.
///
/// Each position in the center list is a self-similar family of balls. The
/// family attaining the supremum at the largest radius is classified, which
/// avoids spurious kinks where the supremum switches between families.
pub fn aq_scan_classify(scan: &AqScan) -> Result<AqClassification> {
    if !(scan.q.is_finite() && scan.q > 1.0) {
        return Err(Error::Input(format!("q = {} must satisfy 1 < q < ∞", scan.q)));
    }
    if scan.radii.len() < 8 {
        return Err(Error::Config("a scan needs at least 8 radii".into()));
    }
    if scan.radii.windows(2).any(|w| !(w[1] > w[0])) || !(scan.radii[0] > 0.0) {
        return Err(Error::Config("radii must be positive and strictly increasing".into()));
    }
    let (rmin, rmax) = (scan.radii[0], *scan.radii.last().expect("non-empty"));
    if rmax / rmin < 100.0 * (1.0 - 1e-9) {
        return Err(Error::Config(format!(
            "radii span {:.3} decades; at least 2 are required",
            (rmax / rmin).log10()
        )));
    }
    let jobs: Vec<(Point, f64)> = scan
        .radii
        .iter()
        .flat_map(|&r| scan.centers.centers(r).into_iter().map(move |c| (c, r)))
        .collect();
    let rows: Vec<AqRow> = jobs
        .par_iter()
        .map(|&(center, radius)| {
            aq_ratio(&scan.weight, scan.q, &center, radius).map(|ratio| AqRow { center, radius, ratio })
        })
        .collect::<Result<_>>()?;
    let per_radius: Vec<&[AqRow]> = {
        let mut out = Vec::new();
        let mut start = 0;
        for &r in &scan.radii {
            let len = scan.centers.centers(r).len();
            out.push(&rows[start..start + len]);
            start += len;
        }
        out
    };
    let sup: Vec<(f64, f64)> = scan
        .radii
        .iter()
        .zip(&per_radius)
        .map(|(&r, rs)| (r, rs.iter().map(|row| row.ratio).fold(f64::MIN, f64::max)))
        .collect();
    let last = per_radius.last().expect("non-empty");
    let dominant = (0..last.len()).max_by(|&i, &j| last[i].ratio.total_cmp(&last[j].ratio)).unwrap_or(0);
    let lo = rmax / 100.0 * (1.0 - 1e-9);
    let idx: Vec<usize> = (0..scan.radii.len()).filter(|&i| scan.radii[i] >= lo).collect();
    let wr: Vec<f64> = idx.iter().map(|&i| scan.radii[i]).collect();
    let wsup: Vec<f64> = idx.iter().map(|&i| sup[i].1).collect();
    let wdom: Vec<f64> = idx.iter().map(|&i| per_radius[i].get(dominant).map_or(f64::NAN, |row| row.ratio)).collect();
    if wdom.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("center plan must give the same number of centers at every radius".into()));
    }
    let slope = loglog_slope(&wr, &wsup);
    let (verdict, bounded_fit, log_fit, power_fit) = classify_growth(&wr, &wdom);
    Ok(AqClassification {
        verdict,
        slope,
        dominant_center: dominant,
        bounded_fit,
        log_fit,
        power_fit,
        sup,
        window: (wr[0], rmax),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_weight_ratio_is_one() {
        let r = aq_ratio(&WeightSpec::unweighted(), 3.0, &[1.0, 2.0, 3.0], 5.0).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn verdict_formatting() {
        assert_eq!(Growth::Power(0.2).to_string(), "power(0.2)");
        assert_eq!(Growth::Power(4.0).to_string(), "power(4)");
        assert_eq!(Growth::Power(0.456).to_string(), "power(0.46)");
        assert_eq!(Growth::Log.to_string(), "log");
    }

    #[test]
    fn short_span_is_config_error() {
        let scan = AqScan { radii: log_space(1.0, 50.0, 10), ..AqScan::new(WeightSpec::unweighted(), 2.0, 1e3) };
        assert!(matches!(aq_scan_classify(&scan), Err(Error::Config(_))));
    }

    #[test]
    fn classifier_on_synthetic_curves() {
        let r = log_space(10.0, 1000.0, 17);
        let log: Vec<f64> = r.iter().map(|v| 2.0 + 0.7 * v.ln()).collect();
        assert_eq!(classify_growth(&r, &log).0, Growth::Log);
        let pw: Vec<f64> = r.iter().map(|v| 3.0 * v.powf(0.2) - 1.0).collect();
        match classify_growth(&r, &pw).0 {
            Growth::Power(p) => assert!((p - 0.2).abs() < 1e-3),
            other => panic!("{other:?}"),
        }
        let bd: Vec<f64> = r.iter().map(|v| 4.0 - 2.0 / v.sqrt()).collect();
        assert_eq!(classify_growth(&r, &bd).0, Growth::Bounded);
    }
}
