//! Exact rational bookkeeping of the hypothesis sets and predicted decay
//! exponents of the weighted `L^q`-`L^r` estimates.
//!
//! Lebesgue exponents are stored through their reciprocals, so `r = ∞` is the
//! exact value `1/r = 0` and caps such as `r ≤ 3/(1-α)` become the linear
//! inequalities `1-α ≤ 3/r`, which stay meaningful when the cap is infinite.
//! Every family of estimates is a list of named inequalities evaluated in
//! `Ratio<i128>` arithmetic; no floating-point comparison decides anything.

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational number.
pub type Q = Ratio<i128>;

fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

fn qi(n: i128) -> Q {
    Q::from_integer(n)
}

/// Parses `"3"`, `"-2/5"` or a finite decimal such as `"0.4"` exactly.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Input(format!("malformed rational {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: i128 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(q(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 30 {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let v = q(n, 10i128.pow(frac.len() as u32));
    Ok(if neg { -v } else { v })
}

/// Formats a rational as `"n"` or `"n/d"`.
pub fn format_rational(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Closest `f64` to a rational.
pub fn to_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

struct RatVisitor;

impl Visitor<'_> for RatVisitor {
    type Value = String;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational as a string or number")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<String, E> {
        Ok(v.to_string())
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<String, E> {
        Ok(v.to_string())
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<String, E> {
        Ok(v.to_string())
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<String, E> {
        Ok(format!("{v}"))
    }
}

/// Serde adapter storing a [`Q`] as a string such as `"3/2"`.
pub mod rational_serde {
    use super::*;

    /// Serializes as `"n/d"`.
    pub fn serialize<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    /// Accepts strings and JSON numbers.
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        let s = d.deserialize_any(RatVisitor)?;
        parse_rational(&s).map_err(de::Error::custom)
    }
}

mod rational_vec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.iter().map(|s| parse_rational(s).map_err(de::Error::custom)).collect()
    }
}

mod rational_opt_serde {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&format_rational(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Q>, D::Error> {
        let v: Option<serde_json::Value> = Option::deserialize(d)?;
        match v {
            None | Some(serde_json::Value::Null) => Ok(None),
            Some(serde_json::Value::String(s)) => parse_rational(&s).map(Some).map_err(de::Error::custom),
            Some(serde_json::Value::Number(n)) => parse_rational(&n.to_string()).map(Some).map_err(de::Error::custom),
            Some(other) => Err(de::Error::custom(format!("expected a rational, got {other}"))),
        }
    }
}

/// A Lebesgue exponent in `(1, ∞]`, stored as its exact reciprocal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lebesgue {
    inv: Q,
}

impl Lebesgue {
    /// The finite exponent `p`.
    pub fn finite(p: Q) -> Result<Self> {
        if p <= Q::zero() {
            return Err(Error::Input(format!("Lebesgue exponent {} must be positive", format_rational(&p))));
        }
        Ok(Self { inv: p.recip() })
    }

    /// The exponent `∞`.
    pub fn infinite() -> Self {
        Self { inv: Q::zero() }
    }

    /// `p` given as an integer.
    pub fn int(p: i128) -> Self {
        Self { inv: q(1, p) }
    }

    /// Exact reciprocal `1/p`, zero for `p = ∞`.
    pub fn inv(&self) -> Q {
        self.inv
    }

    /// Whether `p = ∞`.
    pub fn is_infinite(&self) -> bool {
        self.inv.is_zero()
    }

    /// Exponent as `f64`, `INFINITY` for `∞`.
    pub fn to_f64(&self) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            to_f64(&self.inv.recip())
        }
    }

    /// Parses a rational or `inf`.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Self::infinite()),
            _ => Self::finite(parse_rational(s)?),
        }
    }
}

impl fmt::Display for Lebesgue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            f.write_str(&format_rational(&self.inv.recip()))
        }
    }
}

impl Serialize for Lebesgue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Lebesgue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = d.deserialize_any(RatVisitor)?;
        Lebesgue::parse(&s).map_err(de::Error::custom)
    }
}

/// Whole space or exterior domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    /// `R³` with the explicit semigroup `S_a(t)`.
    WholeSpace,
    /// Exterior domain with the semigroup `e^{-tA_a}`.
    Exterior,
}

/// Sign of the drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Drift {
    /// Oseen case `a > 0`.
    Positive,
    /// Stokes/heat case `a = 0`.
    Zero,
    /// Adjoint semigroup with drift `-a`, `a > 0`.
    Dual,
}

/// Time regime of an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Bounded times near the initial instant.
    SmallTime,
    /// Large times.
    LargeTime,
}

/// One Lebesgue exponent for every norm, or one per norm of the four-term
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QSpec {
    /// `q₁ = q₂ = q₃ = q₄`.
    Single(Lebesgue),
    /// `(q₁, q₂, q₃, q₄)`.
    Split([Lebesgue; 4]),
}

impl QSpec {
    /// The four exponents.
    pub fn all(&self) -> [Lebesgue; 4] {
        match *self {
            QSpec::Single(l) => [l; 4],
            QSpec::Split(ls) => ls,
        }
    }
}

/// A question "which estimates apply, and at what rate?".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateQuery {
    /// Whole space or exterior domain.
    pub setting: Setting,
    /// Drift sign.
    pub drift: Drift,
    /// Whether the weight is `(1+|x|)^{-α}(1+|x|-x₁)^{-β}`.
    #[serde(default)]
    pub dual_weight: bool,
    /// Number of spatial derivatives on the output, 0 or 1.
    #[serde(default)]
    pub deriv: u8,
    /// Whether the operator acts on `div F` instead of `f`.
    #[serde(default)]
    pub div_input: bool,
    /// Input exponent(s).
    pub q: QSpec,
    /// Output exponent.
    pub r: Lebesgue,
    /// Radial weight exponent, nonnegative.
    #[serde(with = "rational_serde")]
    pub alpha: Q,
    /// Wake weight exponent, nonnegative.
    #[serde(with = "rational_serde")]
    pub beta: Q,
    /// Time regime.
    pub regime: Regime,
    /// Loss `ε > 0` for the estimates that carry one.
    #[serde(default, with = "rational_opt_serde", skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Q>,
}

impl RateQuery {
    /// Large-time query with a single input exponent and no loss.
    pub fn new(setting: Setting, drift: Drift, deriv: u8, q: Lebesgue, r: Lebesgue, alpha: Q, beta: Q) -> Self {
        Self {
            setting,
            drift,
            dual_weight: false,
            deriv,
            div_input: false,
            q: QSpec::Single(q),
            r,
            alpha,
            beta,
            regime: Regime::LargeTime,
            epsilon: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.deriv > 1 {
            return Err(Error::Input(format!("deriv = {} must be 0 or 1", self.deriv)));
        }
        if self.div_input && self.deriv != 0 {
            return Err(Error::Input("div-form input carries its own derivative; use deriv = 0".into()));
        }
        if self.alpha.is_negative() || self.beta.is_negative() {
            return Err(Error::Input("alpha and beta must be nonnegative; use dual_weight for negative weights".into()));
        }
        if self.epsilon.is_some_and(|e| !e.is_positive()) {
            return Err(Error::Input("epsilon must be positive".into()));
        }
        let pr = self.r.inv();
        if pr >= qi(1) {
            return Err(Error::Input(format!("r = {} must exceed 1", self.r)));
        }
        for (i, qq) in self.q.all().iter().enumerate() {
            if qq.is_infinite() || qq.inv() >= qi(1) {
                return Err(Error::Input(format!("q{} = {qq} must satisfy 1 < q < ∞", i + 1)));
            }
            if qq.inv() < pr {
                return Err(Error::Input(format!("q{} = {qq} exceeds r = {}", i + 1, self.r)));
            }
        }
        Ok(())
    }
}

/// Loss exponents `η` with weight tuples `γ`, `δ` of the four-term estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaTable {
    /// `(η₁, η₂, η₃, η₄)`.
    #[serde(with = "rational_vec_serde")]
    pub eta: Vec<Q>,
    /// `(γ₁, γ₂, γ₃, γ₄) = (α, 0, α, 0)`.
    #[serde(with = "rational_vec_serde")]
    pub gamma: Vec<Q>,
    /// `(δ₁, δ₂, δ₃, δ₄) = (β, β, 0, 0)`.
    #[serde(with = "rational_vec_serde")]
    pub delta: Vec<Q>,
}

/// `η = (0, α, β/2, α+β/2)` for nonzero drift and `(0, α/2, β/2, α/2+β/2)`
/// without drift.
pub fn eta_table(alpha: Q, beta: Q, drift: Drift) -> Result<EtaTable> {
    if alpha.is_negative() || beta.is_negative() {
        return Err(Error::Input("alpha and beta must be nonnegative".into()));
    }
    let ea = match drift {
        Drift::Zero => alpha / 2,
        Drift::Positive | Drift::Dual => alpha,
    };
    let z = Q::zero();
    Ok(EtaTable {
        eta: vec![z, ea, beta / 2, ea + beta / 2],
        gamma: vec![alpha, z, alpha, z],
        delta: vec![beta, beta, z, z],
    })
}

/// Admissible output range of the weighted Stokes gradient estimate
/// without loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientRange {
    /// Exclusive lower bound on `q`.
    pub lower: Lebesgue,
    /// Inclusive upper bound on `r`.
    pub upper: Lebesgue,
    /// Whether exceeding `upper` is proven impossible.
    pub beyond_impossible: bool,
}

/// `3/(3-α) < q ≤ r ≤ 3/(1-α)` for the weight `(1+|x|)^α` and
/// `1 < q ≤ r ≤ 3/(1+α)` for `(1+|x|)^{-α}`.
pub fn optimal_gradient_range(alpha: Q, dual: bool) -> Result<GradientRange> {
    if alpha.is_negative() || alpha >= qi(1) {
        return Err(Error::Domain(format!("alpha = {} must lie in [0, 1)", format_rational(&alpha))));
    }
    let (lower, upper) = if dual {
        (Lebesgue::int(1), Lebesgue::finite(qi(3) / (qi(1) + alpha))?)
    } else {
        (Lebesgue::finite(qi(3) / (qi(3) - alpha))?, Lebesgue::finite(qi(3) / (qi(1) - alpha))?)
    };
    Ok(GradientRange { lower, upper, beyond_impossible: true })
}

/// Predicted exponent `-1/2 + 3/(2r) - 1/4 + ε + α + β/2` of the weighted
/// `L^r` norm of the starting-problem perturbation, `3 ≤ r ≤ ∞`,
/// `0 < α, β < 1/3`.
pub fn starting_problem_rate(alpha: Q, beta: Q, r: Lebesgue, epsilon: Q) -> Result<Q> {
    let third = q(1, 3);
    if !(alpha.is_positive() && alpha < third && beta.is_positive() && beta < third) {
        return Err(Error::Hypothesis("the starting problem needs 0 < alpha, beta < 1/3".into()));
    }
    if r.inv() > third {
        return Err(Error::Hypothesis(format!("r = {r} must be at least 3")));
    }
    if !epsilon.is_positive() {
        return Err(Error::Input("epsilon must be positive".into()));
    }
    Ok(q(-1, 2) + q(3, 2) * r.inv() - q(1, 4) + epsilon + alpha + beta / 2)
}

#[derive(Debug, Clone, Copy)]
struct Ctx {
    p: [Q; 4],
    pr: Q,
    al: Q,
    be: Q,
    eps: Q,
    k: u8,
    drift: Drift,
    regime: Regime,
}

impl Ctx {
    fn base(&self, i: usize) -> Q {
        q(-3, 2) * (self.p[i] - self.pr) - q(self.k as i128, 2)
    }

    fn eta(&self) -> [Q; 4] {
        let t = eta_table(self.al, self.be, self.drift).expect("validated exponents");
        [t.eta[0], t.eta[1], t.eta[2], t.eta[3]]
    }

    fn improved(&self) -> Q {
        self.al / 4 + (self.al / 4).max(self.be / 2) + self.eps
    }

    fn large(&self) -> bool {
        self.regime == Regime::LargeTime
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rel {
    Lt,
    Le,
    Eq,
}

/// One inequality `lhs rel rhs`, optionally guarded by a premise.
struct Ineq {
    text: &'static str,
    lhs: fn(&Ctx) -> Q,
    rel: Rel,
    rhs: fn(&Ctx) -> Q,
    when: Option<fn(&Ctx) -> bool>,
}

impl Ineq {
    fn holds(&self, c: &Ctx) -> bool {
        if self.when.is_some_and(|w| !w(c)) {
            return true;
        }
        let (l, r) = ((self.lhs)(c), (self.rhs)(c));
        match self.rel {
            Rel::Lt => l < r,
            Rel::Le => l <= r,
            Rel::Eq => l == r,
        }
    }
}

macro_rules! ineq {
    ($text:expr, $l:expr, $rel:ident, $r:expr) => {
        Ineq { text: $text, lhs: $l, rel: Rel::$rel, rhs: $r, when: None }
    };
    ($text:expr, $l:expr, $rel:ident, $r:expr, if $w:expr) => {
        Ineq { text: $text, lhs: $l, rel: Rel::$rel, rhs: $r, when: Some($w) }
    };
}

/// Structural scope and hypotheses of one family of estimates.
struct Family {
    id: &'static str,
    note: &'static str,
    setting: Setting,
    drifts: &'static [Drift],
    dual_weight: bool,
    derivs: &'static [u8],
    div_input: bool,
    regimes: &'static [Regime],
    needs_epsilon: bool,
    hyps: Vec<Ineq>,
    exponents: fn(&Ctx) -> Vec<Q>,
}

const BOTH: &[Regime] = &[Regime::SmallTime, Regime::LargeTime];
const LARGE: &[Regime] = &[Regime::LargeTime];
const SMALL: &[Regime] = &[Regime::SmallTime];
const D01: &[u8] = &[0, 1];
const D0: &[u8] = &[0];
const D1: &[u8] = &[1];
const POS_ZERO: &[Drift] = &[Drift::Positive, Drift::Zero];
const POS: &[Drift] = &[Drift::Positive];
const ZERO: &[Drift] = &[Drift::Zero];
const DUAL: &[Drift] = &[Drift::Dual];
const DUAL_ZERO: &[Drift] = &[Drift::Dual, Drift::Zero];
const ALL_DRIFTS: &[Drift] = &[Drift::Positive, Drift::Zero, Drift::Dual];

fn one(_: &Ctx) -> Q {
    qi(1)
}

fn zero(_: &Ctx) -> Q {
    Q::zero()
}

fn single_q() -> Ineq {
    ineq!("q_1 = q_2 = q_3 = q_4", |c| c.p[0], Eq, |c| (c.p[1] + c.p[2] + c.p[3]) / 3)
}

fn r_finite() -> Ineq {
    ineq!("r < inf", zero, Lt, |c| c.pr)
}

fn gap_third() -> Ineq {
    ineq!("1/q - 1/r < 1/3", |c| c.p[0] - c.pr, Lt, |_| q(1, 3))
}

fn beta_zero() -> Ineq {
    ineq!("beta = 0", |c| c.be, Eq, zero)
}

fn alpha_zero() -> Ineq {
    ineq!("alpha = 0", |c| c.al, Eq, zero)
}

fn families() -> Vec<Family> {
    use Setting::*;
    vec![
        Family {
            id: "whole-space-small-time",
            note: "C t^{-3/2(1/q-1/r)-|k|/2} for t <= 1",
            setting: WholeSpace,
            drifts: POS_ZERO,
            dual_weight: false,
            derivs: D01,
            div_input: false,
            regimes: SMALL,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                ineq!("beta < 1 - 1/q", |c| c.be, Lt, |c| qi(1) - c.p[0]),
                ineq!("alpha + beta < 3(1 - 1/q)", |c| c.al + c.be, Lt, |c| qi(3) * (qi(1) - c.p[0])),
            ],
            exponents: |c| vec![c.base(0)],
        },
        Family {
            id: "whole-space-four-term",
            note: "four norms with losses eta_i, t >= 1",
            setting: WholeSpace,
            drifts: POS_ZERO,
            dual_weight: false,
            derivs: D01,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: false,
            hyps: vec![
                ineq!("alpha < 3(1 - 1/q_3)", |c| c.al, Lt, |c| qi(3) * (qi(1) - c.p[2])),
                ineq!("beta < 1 - 1/q_1", |c| c.be, Lt, |c| qi(1) - c.p[0]),
                ineq!("beta < 1 - 1/q_2", |c| c.be, Lt, |c| qi(1) - c.p[1]),
                ineq!("alpha + beta < 3(1 - 1/q_1)", |c| c.al + c.be, Lt, |c| qi(3) * (qi(1) - c.p[0])),
            ],
            exponents: |c| {
                let eta = c.eta();
                (0..4).map(|i| c.base(i) + eta[i]).collect()
            },
        },
        Family {
            id: "whole-space-improved-drift-rate",
            note: "loss alpha/4 + max(alpha/4, beta/2) + eps, t >= 1",
            setting: WholeSpace,
            drifts: POS,
            dual_weight: false,
            derivs: D01,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: true,
            hyps: vec![
                single_q(),
                ineq!("alpha > 0", zero, Lt, |c| c.al),
                ineq!("beta > 0", zero, Lt, |c| c.be),
                ineq!("beta < 1 - 1/q", |c| c.be, Lt, |c| qi(1) - c.p[0]),
                ineq!("alpha + beta < 3(1 - 1/q)", |c| c.al + c.be, Lt, |c| qi(3) * (qi(1) - c.p[0])),
            ],
            exponents: |c| vec![c.base(0) + c.improved()],
        },
        Family {
            id: "whole-space-radial-drift-rate",
            note: "weight (1+|x|)^alpha, loss alpha/2, t >= 1",
            setting: WholeSpace,
            drifts: POS,
            dual_weight: false,
            derivs: D01,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                beta_zero(),
                ineq!("alpha < 3(1 - 1/q)", |c| c.al, Lt, |c| qi(3) * (qi(1) - c.p[0])),
            ],
            exponents: |c| vec![c.base(0) + c.al / 2],
        },
        Family {
            id: "whole-space-radial-heat",
            note: "weight (1+|x|)^alpha without loss, all t > 0",
            setting: WholeSpace,
            drifts: ZERO,
            dual_weight: false,
            derivs: D01,
            div_input: false,
            regimes: BOTH,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                beta_zero(),
                ineq!("alpha < 3(1 - 1/q)", |c| c.al, Lt, |c| qi(3) * (qi(1) - c.p[0])),
            ],
            exponents: |c| vec![c.base(0)],
        },
        Family {
            id: "whole-space-dual-weight",
            note: "negative weight, factor (1+t)^{eta_4}, all t > 0",
            setting: WholeSpace,
            drifts: DUAL_ZERO,
            dual_weight: true,
            derivs: D01,
            div_input: false,
            regimes: BOTH,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                ineq!("beta < 1/q", |c| c.be, Lt, |c| c.p[0]),
                ineq!("alpha + beta < 3/q", |c| c.al + c.be, Lt, |c| qi(3) * c.p[0]),
            ],
            exponents: |c| vec![c.base(0) + if c.large() { c.eta()[3] } else { Q::zero() }],
        },
        Family {
            id: "whole-space-dual-improved-rate",
            note: "negative weight, loss alpha/4 + max(alpha/4, beta/2) + eps, t >= 1",
            setting: WholeSpace,
            drifts: DUAL,
            dual_weight: true,
            derivs: D01,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: true,
            hyps: vec![
                single_q(),
                r_finite(),
                ineq!("alpha > 0", zero, Lt, |c| c.al),
                ineq!("beta > 0", zero, Lt, |c| c.be),
                ineq!("beta < 1/r", |c| c.be, Lt, |c| c.pr),
                ineq!("alpha + beta < 3/r", |c| c.al + c.be, Lt, |c| qi(3) * c.pr),
            ],
            exponents: |c| vec![c.base(0) + c.improved()],
        },
        Family {
            id: "whole-space-dual-radial-rate",
            note: "weight (1+|x|)^{-alpha}, loss alpha/2, t >= 1",
            setting: WholeSpace,
            drifts: DUAL,
            dual_weight: true,
            derivs: D01,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                r_finite(),
                beta_zero(),
                ineq!("alpha < 3/r", |c| c.al, Lt, |c| qi(3) * c.pr),
            ],
            exponents: |c| vec![c.base(0) + c.al / 2],
        },
        Family {
            id: "whole-space-dual-radial-heat",
            note: "weight (1+|x|)^{-alpha} without loss, all t > 0",
            setting: WholeSpace,
            drifts: ZERO,
            dual_weight: true,
            derivs: D01,
            div_input: false,
            regimes: BOTH,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                r_finite(),
                beta_zero(),
                ineq!("alpha < 3/r", |c| c.al, Lt, |c| qi(3) * c.pr),
            ],
            exponents: |c| vec![c.base(0)],
        },
        Family {
            id: "exterior-small-time",
            note: "smoothing estimate for t <= 3 in any A_q weight",
            setting: Exterior,
            drifts: ALL_DRIFTS,
            dual_weight: false,
            derivs: D01,
            div_input: false,
            regimes: SMALL,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                ineq!("beta < 1 - 1/q", |c| c.be, Lt, |c| qi(1) - c.p[0]),
                ineq!("alpha + beta < 3(1 - 1/q)", |c| c.al + c.be, Lt, |c| qi(3) * (qi(1) - c.p[0])),
            ],
            exponents: |c| vec![c.base(0)],
        },
        Family {
            id: "exterior-small-time-dual-weight",
            note: "smoothing estimate for t <= 3 in any A_q weight",
            setting: Exterior,
            drifts: ALL_DRIFTS,
            dual_weight: true,
            derivs: D01,
            div_input: false,
            regimes: SMALL,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                ineq!("-1/q < -beta", |c| -c.p[0], Lt, |c| -c.be),
                ineq!("-3/q < -(alpha + beta)", |c| -qi(3) * c.p[0], Lt, |c| -(c.al + c.be)),
            ],
            exponents: |c| vec![c.base(0)],
        },
        Family {
            id: "exterior-four-term",
            note: "four norms with losses eta_i, t >= 3",
            setting: Exterior,
            drifts: POS_ZERO,
            dual_weight: false,
            derivs: D0,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: false,
            hyps: four_term_hyps(),
            exponents: |c| {
                let eta = c.eta();
                (0..4).map(|i| c.base(i) + eta[i]).collect()
            },
        },
        Family {
            id: "exterior-four-term-gradient",
            note: "gradient, four norms with losses eta_i, t >= 3",
            setting: Exterior,
            drifts: POS_ZERO,
            dual_weight: false,
            derivs: D1,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: false,
            hyps: {
                let mut h = four_term_hyps();
                h.extend([
                    r_finite(),
                    ineq!("alpha > 0", zero, Lt, |c| c.al),
                    ineq!("beta > 0", zero, Lt, |c| c.be),
                    ineq!("r < 3/(1 - alpha - beta)", |c| qi(1) - c.al - c.be, Lt, |c| qi(3) * c.pr),
                    ineq!("r < 3/(1 - 3 alpha/2)", |c| qi(1) - q(3, 2) * c.al, Lt, |c| qi(3) * c.pr),
                ]);
                h
            },
            exponents: |c| {
                let eta = c.eta();
                (0..4).map(|i| c.base(i) + eta[i]).collect()
            },
        },
        Family {
            id: "exterior-wake-weight-gradient",
            note: "gradient in (1+|x|-x_1)^beta, two norms, t >= 3",
            setting: Exterior,
            drifts: POS_ZERO,
            dual_weight: false,
            derivs: D1,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: false,
            hyps: vec![
                alpha_zero(),
                ineq!("beta < 1 - 1/q_1", |c| c.be, Lt, |c| qi(1) - c.p[0]),
                ineq!("beta < 1/3", |c| c.be, Lt, |_| q(1, 3)),
                ineq!("q_2 <= q_1", |c| c.p[0], Le, |c| c.p[1]),
                ineq!("r <= 3", |_| qi(1), Le, |c| qi(3) * c.pr),
            ],
            exponents: |c| vec![c.base(0), c.base(1) + c.be / 2],
        },
        Family {
            id: "exterior-radial-weight-gradient",
            note: "gradient in (1+|x|)^alpha, two norms, t >= 3",
            setting: Exterior,
            drifts: POS_ZERO,
            dual_weight: false,
            derivs: D1,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: false,
            hyps: vec![
                beta_zero(),
                r_finite(),
                ineq!("alpha < 3(1 - 1/q_1)", |c| c.al, Lt, |c| qi(3) * (qi(1) - c.p[0])),
                ineq!("alpha < 1", |c| c.al, Lt, one),
                ineq!("q_2 <= q_1", |c| c.p[0], Le, |c| c.p[1]),
                ineq!("r <= 3/(1 - alpha)", |c| qi(1) - c.al, Le, |c| qi(3) * c.pr),
            ],
            exponents: |c| vec![c.base(0), c.base(1) + c.eta()[1]],
        },
        Family {
            id: "exterior-dual-gradient",
            note: "gradient of the adjoint semigroup, factor (1+t)^{alpha+beta/2}, all t > 0",
            setting: Exterior,
            drifts: DUAL,
            dual_weight: true,
            derivs: D1,
            div_input: false,
            regimes: BOTH,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                ineq!("r <= 3", |_| qi(1), Le, |c| qi(3) * c.pr),
                gap_third(),
                ineq!("beta < 1/q", |c| c.be, Lt, |c| c.p[0]),
                ineq!("alpha + beta < 3/q", |c| c.al + c.be, Lt, |c| qi(3) * c.p[0]),
            ],
            exponents: |c| vec![c.base(0) + if c.large() { c.al + c.be / 2 } else { Q::zero() }],
        },
        Family {
            id: "exterior-divergence-form",
            note: "operator on div F, factor (1+t)^{alpha+beta/2}, all t > 0",
            setting: Exterior,
            drifts: POS,
            dual_weight: false,
            derivs: D0,
            div_input: true,
            regimes: BOTH,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                r_finite(),
                ineq!("3/2 <= q", |c| c.p[0], Le, |_| q(2, 3)),
                gap_third(),
                ineq!("beta < 1 - 1/r", |c| c.be, Lt, |c| qi(1) - c.pr),
                ineq!("alpha + beta < 3(1 - 1/r)", |c| c.al + c.be, Lt, |c| qi(3) * (qi(1) - c.pr)),
            ],
            exponents: |c| vec![c.base(0) - q(1, 2) + if c.large() { c.al + c.be / 2 } else { Q::zero() }],
        },
        Family {
            id: "exterior-improved-drift-rate",
            note: "loss alpha/4 + max(alpha/4, beta/2) + eps, t >= 1",
            setting: Exterior,
            drifts: POS,
            dual_weight: false,
            derivs: D01,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: true,
            hyps: vec![
                single_q(),
                gap_third(),
                ineq!("alpha > 0", zero, Lt, |c| c.al),
                ineq!("beta > 0", zero, Lt, |c| c.be),
                ineq!("beta < 1 - 1/q", |c| c.be, Lt, |c| qi(1) - c.p[0]),
                ineq!("beta < 1/3", |c| c.be, Lt, |_| q(1, 3)),
                ineq!("alpha + beta < 3(1 - 1/q)", |c| c.al + c.be, Lt, |c| qi(3) * (qi(1) - c.p[0])),
                ineq!("alpha + beta < 1", |c| c.al + c.be, Lt, one),
                ineq!(
                    "eps < (1 - 2 alpha - beta)/2 when deriv = 1 and 2 alpha + beta < 1",
                    |c| c.eps,
                    Lt,
                    |c| (qi(1) - qi(2) * c.al - c.be) / 2,
                    if |c| c.k == 1 && qi(2) * c.al + c.be < qi(1)
                ),
                ineq!(
                    "r < 3/(1 - 2 alpha - beta - 2 eps) when deriv = 1 and 2 alpha + beta < 1",
                    |c| qi(1) - qi(2) * c.al - c.be - qi(2) * c.eps,
                    Lt,
                    |c| qi(3) * c.pr,
                    if |c| c.k == 1 && qi(2) * c.al + c.be < qi(1)
                ),
            ],
            exponents: |c| vec![c.base(0) + c.improved()],
        },
        Family {
            id: "exterior-radial-drift-rate",
            note: "weight (1+|x|)^alpha, loss alpha/2, t >= 1",
            setting: Exterior,
            drifts: POS,
            dual_weight: false,
            derivs: D01,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                beta_zero(),
                gap_third(),
                ineq!("alpha < 3(1 - 1/q)", |c| c.al, Lt, |c| qi(3) * (qi(1) - c.p[0])),
                ineq!("alpha < 1", |c| c.al, Lt, one),
                ineq!(
                    "r <= 3/(1 - 2 alpha) when deriv = 1 and alpha < 1/2",
                    |c| qi(1) - qi(2) * c.al,
                    Le,
                    |c| qi(3) * c.pr,
                    if |c| c.k == 1 && c.al < q(1, 2)
                ),
            ],
            exponents: |c| vec![c.base(0) + c.al / 2],
        },
        Family {
            id: "exterior-radial-stokes",
            note: "weight (1+|x|)^alpha without loss, all t > 0",
            setting: Exterior,
            drifts: ZERO,
            dual_weight: false,
            derivs: D01,
            div_input: false,
            regimes: BOTH,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                beta_zero(),
                ineq!("alpha < 3(1 - 1/q)", |c| c.al, Lt, |c| qi(3) * (qi(1) - c.p[0])),
                ineq!("alpha < 1", |c| c.al, Lt, one),
                ineq!("r <= 3/(1 - alpha) when deriv = 1", |c| qi(1) - c.al, Le, |c| qi(3) * c.pr, if |c| c.k == 1),
            ],
            exponents: |c| vec![c.base(0)],
        },
        Family {
            id: "exterior-dual-improved-rate",
            note: "adjoint gradient, loss alpha/4 + max(alpha/4, beta/2) + eps, t >= 1",
            setting: Exterior,
            drifts: DUAL,
            dual_weight: true,
            derivs: D1,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: true,
            hyps: vec![
                single_q(),
                r_finite(),
                gap_third(),
                ineq!("alpha > 0", zero, Lt, |c| c.al),
                ineq!("beta > 0", zero, Lt, |c| c.be),
                ineq!("beta < 1/r", |c| c.be, Lt, |c| c.pr),
                ineq!("alpha + beta < 1", |c| c.al + c.be, Lt, one),
                ineq!("alpha + beta < 3/r", |c| c.al + c.be, Lt, |c| qi(3) * c.pr),
                ineq!(
                    "r <= 3/(1 + alpha + min(alpha/2, beta) - 2 eps)",
                    |c| qi(1) + c.al + (c.al / 2).min(c.be) - qi(2) * c.eps,
                    Le,
                    |c| qi(3) * c.pr
                ),
            ],
            exponents: |c| vec![c.base(0) + c.improved()],
        },
        Family {
            id: "exterior-dual-radial-gradient",
            note: "adjoint gradient in (1+|x|)^{-alpha}, loss alpha/2, t >= 1",
            setting: Exterior,
            drifts: DUAL,
            dual_weight: true,
            derivs: D1,
            div_input: false,
            regimes: LARGE,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                r_finite(),
                beta_zero(),
                gap_third(),
                ineq!("alpha < 1", |c| c.al, Lt, one),
                ineq!("alpha < 3/r", |c| c.al, Lt, |c| qi(3) * c.pr),
                ineq!("r <= 3/(1 + alpha)", |c| qi(1) + c.al, Le, |c| qi(3) * c.pr),
            ],
            exponents: |c| vec![c.base(0) + c.al / 2],
        },
        Family {
            id: "exterior-dual-radial-stokes",
            note: "Stokes gradient in (1+|x|)^{-alpha} without loss, all t > 0",
            setting: Exterior,
            drifts: ZERO,
            dual_weight: true,
            derivs: D1,
            div_input: false,
            regimes: BOTH,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                r_finite(),
                beta_zero(),
                ineq!("alpha < 1", |c| c.al, Lt, one),
                ineq!("alpha < 3/r", |c| c.al, Lt, |c| qi(3) * c.pr),
                ineq!("r <= 3/(1 + alpha)", |c| qi(1) + c.al, Le, |c| qi(3) * c.pr),
            ],
            exponents: |c| vec![c.base(0)],
        },
        Family {
            id: "exterior-stokes-gradient",
            note: "unweighted Stokes gradient, all t > 0",
            setting: Exterior,
            drifts: ZERO,
            dual_weight: false,
            derivs: D1,
            div_input: false,
            regimes: BOTH,
            needs_epsilon: false,
            hyps: vec![single_q(), alpha_zero(), beta_zero(), ineq!("r <= 3", |_| qi(1), Le, |c| qi(3) * c.pr)],
            exponents: |c| vec![c.base(0)],
        },
        Family {
            id: "exterior-radial-stokes-critical",
            note: "Stokes gradient in (1+|x|)^alpha on the sharp range, all t > 0",
            setting: Exterior,
            drifts: ZERO,
            dual_weight: false,
            derivs: D1,
            div_input: false,
            regimes: BOTH,
            needs_epsilon: false,
            hyps: vec![
                single_q(),
                beta_zero(),
                ineq!("alpha < 1", |c| c.al, Lt, one),
                ineq!("3/(3 - alpha) < q", |c| c.p[0], Lt, |c| (qi(3) - c.al) / 3),
                ineq!("r <= 3/(1 - alpha)", |c| qi(1) - c.al, Le, |c| qi(3) * c.pr),
            ],
            exponents: |c| vec![c.base(0)],
        },
    ]
}

fn four_term_hyps() -> Vec<Ineq> {
    vec![
        ineq!("q_4 <= q_2", |c| c.p[1], Le, |c| c.p[3]),
        ineq!("q_4 <= q_3", |c| c.p[2], Le, |c| c.p[3]),
        ineq!("q_2 <= q_1", |c| c.p[0], Le, |c| c.p[1]),
        ineq!("q_3 <= q_1", |c| c.p[0], Le, |c| c.p[2]),
        ineq!("alpha < 3(1 - 1/q_3)", |c| c.al, Lt, |c| qi(3) * (qi(1) - c.p[2])),
        ineq!("alpha < 1", |c| c.al, Lt, one),
        ineq!("beta < 1 - 1/q_2", |c| c.be, Lt, |c| qi(1) - c.p[1]),
        ineq!("beta < 1/3", |c| c.be, Lt, |_| q(1, 3)),
        ineq!("alpha + beta < 3(1 - 1/q_1)", |c| c.al + c.be, Lt, |c| qi(3) * (qi(1) - c.p[0])),
        ineq!("alpha + beta < 1", |c| c.al + c.be, Lt, one),
    ]
}

/// Identifiers of every encoded family, in evaluation order.
pub fn family_ids() -> Vec<&'static str> {
    families().iter().map(|f| f.id).collect()
}

/// Hypothesis texts of one family.
pub fn family_hypotheses(id: &str) -> Option<Vec<&'static str>> {
    families().into_iter().find(|f| f.id == id).map(|f| f.hyps.iter().map(|h| h.text).collect())
}

/// One estimate whose hypotheses hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Applicable {
    /// Family identifier.
    pub id: String,
    /// Exponent of `t` in each term of the bound.
    #[serde(with = "rational_vec_serde")]
    pub exponents: Vec<Q>,
    /// Largest of the exponents, the rate that governs the bound.
    #[serde(with = "rational_serde")]
    pub leading: Q,
    /// Shape of the bound.
    pub note: String,
}

/// A family in scope whose hypotheses fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Family identifier.
    pub id: String,
    /// Each failed inequality.
    pub failed: Vec<String>,
}

/// Outcome of [`check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVerdict {
    /// Estimates that apply.
    pub applicable: Vec<Applicable>,
    /// Families in scope whose hypotheses fail.
    pub violated: Vec<Violation>,
    /// Set when the query lies beyond a range proven to be sharp.
    pub optimality_flag: bool,
    /// Explanation of the optimality flag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimality_note: Option<String>,
}

impl RateVerdict {
    /// Best (smallest) leading exponent among the applicable estimates.
    pub fn best_exponent(&self) -> Option<Q> {
        self.applicable.iter().map(|a| a.leading).min()
    }

    /// Identifiers of the applicable estimates.
    pub fn applicable_ids(&self) -> Vec<&str> {
        self.applicable.iter().map(|a| a.id.as_str()).collect()
    }
}

/// Evaluates every encoded family on `query`.
pub fn check(query: &RateQuery) -> Result<RateVerdict> {
    query.validate()?;
    let qs = query.q.all();
    let ctx = Ctx {
        p: [qs[0].inv(), qs[1].inv(), qs[2].inv(), qs[3].inv()],
        pr: query.r.inv(),
        al: query.alpha,
        be: query.beta,
        eps: query.epsilon.unwrap_or_else(Q::zero),
        k: query.deriv,
        drift: query.drift,
        regime: query.regime,
    };
    let mut applicable = Vec::new();
    let mut violated = Vec::new();
    for fam in families() {
        let in_scope = fam.setting == query.setting
            && fam.drifts.contains(&query.drift)
            && fam.dual_weight == query.dual_weight
            && fam.derivs.contains(&query.deriv)
            && fam.div_input == query.div_input
            && fam.regimes.contains(&query.regime);
        if !in_scope {
            continue;
        }
        let mut failed: Vec<String> = fam.hyps.iter().filter(|h| !h.holds(&ctx)).map(|h| h.text.to_string()).collect();
        if fam.needs_epsilon && query.epsilon.is_none() {
            failed.push("eps > 0 must be given".into());
        }
        if failed.is_empty() {
            let exponents = (fam.exponents)(&ctx);
            let leading = *exponents.iter().max().expect("at least one term");
            applicable.push(Applicable { id: fam.id.into(), exponents, leading, note: fam.note.into() });
        } else {
            violated.push(Violation { id: fam.id.into(), failed });
        }
    }
    let (optimality_flag, optimality_note) = optimality(query, &ctx);
    Ok(RateVerdict { applicable, violated, optimality_flag, optimality_note })
}

fn optimality(query: &RateQuery, c: &Ctx) -> (bool, Option<String>) {
    let scope = query.setting == Setting::Exterior
        && query.drift == Drift::Zero
        && query.deriv == 1
        && !query.div_input
        && c.be.is_zero()
        && c.al < qi(1);
    if !scope {
        return (false, None);
    }
    if query.dual_weight {
        if qi(1) + c.al > qi(3) * c.pr {
            let note = format!("r > 3/(1+alpha) = {}: the Stokes gradient estimate is impossible there", fmt_cap(qi(1) + c.al));
            return (true, Some(note));
        }
    } else if c.p[0] < (qi(3) - c.al) / 3 && qi(1) - c.al > qi(3) * c.pr {
        let note = format!("r > 3/(1-alpha) = {}: the Stokes gradient estimate is impossible there", fmt_cap(qi(1) - c.al));
        return (true, Some(note));
    }
    (false, None)
}

fn fmt_cap(den: Q) -> String {
    format_rational(&(qi(3) / den))
}
