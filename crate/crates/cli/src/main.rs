//! `wakelab`: command-line driver for the wake-weight and Oseen decay
//! experiments.
//!
//! Every command writes its CSV table, a JSON summary where applicable and a
//! run manifest into the output directory. Exit codes: `0` pass, `1`
//! quantitative failure, `2` configuration error, `3` no applicable estimate.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use wakelab::muckenhoupt::{aq_scan_classify, log_space, AqScan, CenterPlan, Growth};
use wakelab::quadrature::{ball_integral, ball_integral_mc, BallIntegral, BallIntegralSpec};
use wakelab::rates::{
    dual_plan, heat_sanity_plan, starting_problem, sweep, weighted_oseen_plan, ExperimentSpec, StartingForcing,
    StartingProblemConfig, SweepPlan, SweepSummary, TestData, SWEEP_CSV_HEADER,
};
use wakelab::regions::{self, parse_rational, Drift, Lebesgue, QSpec, RateQuery, Regime, Setting};
use wakelab::semigroup::{kernel_norm, KernelSpec, OseenParams};
use wakelab::weights::WeightSpec;
use wakelab::Error;

/// Environment variable holding the default output directory.
const OUT_ENV: &str = "WAKELAB_OUT";

#[derive(Parser, Debug)]
#[command(name = "wakelab", version, about = "Wake-weight, Muckenhoupt and Oseen decay experiments")]
struct Cli {
    /// Output directory for CSV tables, summaries and manifests.
    #[arg(long, env = OUT_ENV, default_value = "wakelab-out", global = true)]
    out: PathBuf,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed of randomized oracles.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Classifies the growth of A_q ratios of a wake weight.
    #[command(after_help = "CSV columns: center_x,center_y,center_z,radius,ratio")]
    Muckenhoupt(MuckArgs),
    /// Runs a decay sweep and compares slopes with predicted exponents.
    #[command(after_help = "CSV columns: label,a,alpha,beta,dual_weight,q,r,deriv,predicted,expected,tolerance,slope,stderr,r2,curved,max_guard,status,applicable,error")]
    Decay(DecayArgs),
    /// Checks a parameter set against every encoded decay estimate.
    #[command(after_help = "CSV columns: id,leading,exponents")]
    Region(RegionArgs),
    /// Evaluates the L^s norm of a majorant kernel.
    #[command(after_help = "CSV columns: i,k,axis,s,t,a,alpha,beta,value")]
    Kernel(KernelArgs),
    /// Integrates a wake weight over a ball.
    #[command(after_help = "CSV columns: gamma,delta,center_x,center_y,center_z,radius,value,error,mc_value,mc_stderr")]
    Ballint(BallArgs),
    /// Solves the starting problem with the synthetic wake and fits its decay.
    #[command(after_help = "CSV columns: t,norm,guard")]
    Duhamel(DuhamelArgs),
    /// Reruns the command recorded in a manifest.
    #[serde(skip)]
    Rerun {
        /// Manifest file.
        manifest: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Muckenhoupt(_) => "muckenhoupt",
            Command::Decay(_) => "decay",
            Command::Region(_) => "region",
            Command::Kernel(_) => "kernel",
            Command::Ballint(_) => "ballint",
            Command::Duhamel(_) => "duhamel",
            Command::Rerun { .. } => "rerun",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct MuckArgs {
    /// Exponent of (1+|x|).
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Exponent of (1+|x|-x1).
    #[arg(long, allow_hyphen_values = true)]
    beta: f64,
    /// Muckenhoupt exponent q > 1.
    #[arg(long)]
    q: f64,
    /// Largest ball radius.
    #[arg(long, default_value_t = 1000.0)]
    rmax: f64,
    /// Number of log-spaced radii from 1 to rmax.
    #[arg(long, default_value_t = 25)]
    radii: usize,
    /// Center plan.
    #[arg(long, value_enum, default_value_t = Centers::Default)]
    centers: Centers,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Centers {
    Default,
    Origin,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Preset {
    Heat,
    Oseen,
    Dual,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum DataArg {
    Solenoidal,
    Gaussian,
    Scaled,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct DecayArgs {
    /// Sweep plan JSON, either {"experiments": [...]} or a bare array.
    #[arg(long, conflicts_with = "preset")]
    plan: Option<PathBuf>,
    /// Built-in plan.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Drift; negative values run the dual semigroup.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a: f64,
    /// Weight exponent alpha (rational).
    #[arg(long, default_value = "0")]
    alpha: String,
    /// Weight exponent beta (rational).
    #[arg(long, default_value = "0")]
    beta: String,
    /// Measure with the reciprocal weight.
    #[arg(long)]
    dual_weight: bool,
    /// Input exponent (rational or inf).
    #[arg(long, default_value = "3")]
    q: String,
    /// Output exponent (rational or inf).
    #[arg(long, default_value = "3")]
    r: String,
    /// 0 for the field, 1 for its gradient.
    #[arg(long, default_value_t = 0)]
    deriv: u8,
    /// First sample time.
    #[arg(long, default_value_t = 2.0)]
    tmin: f64,
    /// Last sample time.
    #[arg(long, default_value_t = 32.0)]
    tmax: f64,
    /// Number of sample times.
    #[arg(long, default_value_t = 12)]
    n_times: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Box half-width; sized automatically when absent.
    #[arg(long)]
    half_width: Option<f64>,
    /// Initial data.
    #[arg(long, value_enum, default_value_t = DataArg::Solenoidal)]
    data: DataArg,
    /// Gaussian parameter, or sigma/t for scaled data.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Exponent tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Reference exponent the slope must match.
    #[arg(long, allow_hyphen_values = true)]
    expected: Option<f64>,
}

impl DecayArgs {
    fn plan(&self) -> anyhow::Result<Vec<ExperimentSpec>> {
        if let Some(path) = &self.plan {
            return Ok(SweepPlan::read(path)?.experiments);
        }
        if let Some(p) = self.preset {
            return Ok(match p {
                Preset::Heat => heat_sanity_plan(),
                Preset::Oseen => weighted_oseen_plan(),
                Preset::Dual => dual_plan(),
            });
        }
        let data = match self.data {
            DataArg::Solenoidal => TestData::Solenoidal,
            DataArg::Gaussian => TestData::Gaussian { sigma: self.sigma },
            DataArg::Scaled => TestData::ScaledGaussian { ratio: self.sigma },
        };
        Ok(vec![ExperimentSpec {
            label: "inline".into(),
            a: self.a,
            alpha: parse_rational(&self.alpha)?,
            beta: parse_rational(&self.beta)?,
            dual_weight: self.dual_weight,
            q: Lebesgue::parse(&self.q)?,
            r: Lebesgue::parse(&self.r)?,
            deriv: self.deriv,
            data,
            n: self.n,
            half_width: self.half_width,
            t_min: self.tmin,
            t_max: self.tmax,
            n_times: self.n_times,
            tolerance: self.tolerance,
            expected: self.expected,
        }])
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SettingArg {
    WholeSpace,
    Exterior,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum DriftArg {
    Positive,
    Zero,
    Dual,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum RegimeArg {
    SmallTime,
    LargeTime,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct RegionArgs {
    /// Domain.
    #[arg(long, value_enum, default_value_t = SettingArg::Exterior)]
    setting: SettingArg,
    /// Drift sign.
    #[arg(long = "a", value_enum, default_value_t = DriftArg::Positive)]
    drift: DriftArg,
    /// Reciprocal weight.
    #[arg(long)]
    dual_weight: bool,
    /// 0 or 1 derivatives.
    #[arg(long, default_value_t = 0)]
    deriv: u8,
    /// Input in divergence form.
    #[arg(long)]
    div_input: bool,
    /// Input exponent, or four comma-separated exponents.
    #[arg(long)]
    q: String,
    /// Output exponent.
    #[arg(long)]
    r: String,
    /// Weight exponent alpha.
    #[arg(long, default_value = "0")]
    alpha: String,
    /// Weight exponent beta.
    #[arg(long, default_value = "0")]
    beta: String,
    /// Time regime.
    #[arg(long, value_enum, default_value_t = RegimeArg::LargeTime)]
    regime: RegimeArg,
    /// Loss epsilon of improved-rate estimates.
    #[arg(long)]
    epsilon: Option<String>,
}

impl RegionArgs {
    fn query(&self) -> wakelab::Result<RateQuery> {
        let qs: Vec<Lebesgue> = self.q.split(',').map(Lebesgue::parse).collect::<wakelab::Result<_>>()?;
        let q = match qs.as_slice() {
            [one] => QSpec::Single(*one),
            [a, b, c, d] => QSpec::Split([*a, *b, *c, *d]),
            _ => return Err(Error::Input("q takes one or four exponents".into())),
        };
        Ok(RateQuery {
            setting: match self.setting {
                SettingArg::WholeSpace => Setting::WholeSpace,
                SettingArg::Exterior => Setting::Exterior,
            },
            drift: match self.drift {
                DriftArg::Positive => Drift::Positive,
                DriftArg::Zero => Drift::Zero,
                DriftArg::Dual => Drift::Dual,
            },
            dual_weight: self.dual_weight,
            deriv: self.deriv,
            div_input: self.div_input,
            q,
            r: Lebesgue::parse(&self.r)?,
            alpha: parse_rational(&self.alpha)?,
            beta: parse_rational(&self.beta)?,
            regime: match self.regime {
                RegimeArg::SmallTime => Regime::SmallTime,
                RegimeArg::LargeTime => Regime::LargeTime,
            },
            epsilon: self.epsilon.as_deref().map(parse_rational).transpose()?,
        })
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct KernelArgs {
    /// Kernel index 1..4.
    #[arg(long)]
    i: u8,
    /// Derivative order 0 or 1.
    #[arg(long, default_value_t = 0)]
    k: u8,
    /// Derivative axis when k = 1.
    #[arg(long, default_value_t = 0)]
    axis: usize,
    /// Lebesgue exponent.
    #[arg(long)]
    s: f64,
    /// Time.
    #[arg(long)]
    t: f64,
    /// Drift.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a: f64,
    /// Exponent of (1+|x|).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Exponent of (1+|x|-x1).
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct BallArgs {
    /// Exponent of (1+|y|).
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    /// Exponent of (1+|y|-y1).
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    /// Radius; inf for the whole space.
    #[arg(long)]
    r: f64,
    /// Center as x,y,z.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    center: String,
    /// Monte-Carlo samples of the oracle estimate; 0 disables it.
    #[arg(long, default_value_t = 0)]
    mc_samples: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ForcingArg {
    F1,
    F2,
    F1f2,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct DuhamelArgs {
    /// Forcing.
    #[arg(long, value_enum, default_value_t = ForcingArg::F1f2)]
    forcing: ForcingArg,
    /// Weight exponent alpha in (0, 1/3).
    #[arg(long, default_value = "1/5")]
    alpha: String,
    /// Weight exponent beta in (0, 1/3).
    #[arg(long, default_value = "1/5")]
    beta: String,
    /// Loss epsilon of the predicted rate.
    #[arg(long, default_value = "1/20")]
    epsilon: String,
    /// Drift.
    #[arg(long, default_value_t = 0.25)]
    a: f64,
    /// Wake amplitude.
    #[arg(long, default_value_t = 0.01)]
    u0: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Box half-width.
    #[arg(long, default_value_t = 100.0)]
    half_width: f64,
    /// Horizon.
    #[arg(long, default_value_t = 64.0)]
    tmax: f64,
    /// Positive time nodes.
    #[arg(long, default_value_t = 96)]
    nodes: usize,
    /// Start of the fit window.
    #[arg(long, default_value_t = 8.0)]
    fit_from: f64,
    /// Exponent tolerance.
    #[arg(long, default_value_t = 0.1)]
    tolerance: f64,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunManifest {
    command: String,
    params: BTreeMap<String, Value>,
    tool_version: String,
    seed: u64,
    timestamp: String,
}

impl RunManifest {
    fn new(cmd: &Command, seed: u64) -> anyhow::Result<Self> {
        let value = serde_json::to_value(cmd)?;
        let params = match value {
            Value::Object(map) => match map.into_iter().next() {
                Some((_, Value::Object(inner))) => inner.into_iter().collect(),
                _ => BTreeMap::new(),
            },
            _ => BTreeMap::new(),
        };
        Ok(Self {
            command: cmd.name().to_string(),
            params,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
        })
    }

    fn command(&self) -> anyhow::Result<Command> {
        let params: serde_json::Map<String, Value> = self.params.clone().into_iter().collect();
        let mut outer = serde_json::Map::new();
        outer.insert(self.command.clone(), Value::Object(params));
        Ok(serde_json::from_value(Value::Object(outer))?)
    }
}

/// Process outcome and its exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Pass = 0,
    Fail = 1,
    Config = 2,
    NotApplicable = 3,
}

fn error_outcome(err: &anyhow::Error) -> Outcome {
    match err.downcast_ref::<Error>() {
        Some(Error::Divergent(_) | Error::NoConvergence { .. }) => Outcome::Fail,
        _ => Outcome::Config,
    }
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn verdict_line(g: &Growth) -> String {
    match g {
        Growth::Bounded => "bounded".into(),
        Growth::Log => "log".into(),
        Growth::Power(p) => format!("power({})", (p * 10.0).round() / 10.0),
    }
}

fn cmd_muckenhoupt(args: &MuckArgs, out: &Path) -> anyhow::Result<Outcome> {
    if !(args.rmax > 1.0) || args.radii < 2 {
        return Err(Error::Config("rmax must exceed 1 and at least two radii are needed".into()).into());
    }
    let scan = AqScan {
        weight: WeightSpec::new(args.alpha, args.beta),
        q: args.q,
        radii: log_space(1.0, args.rmax, args.radii),
        centers: match args.centers {
            Centers::Default => CenterPlan::Default,
            Centers::Origin => CenterPlan::Origin,
        },
    };
    let c = aq_scan_classify(&scan)?;
    let rows: Vec<Vec<String>> = c
        .rows
        .iter()
        .map(|r| vec![r.center[0].to_string(), r.center[1].to_string(), r.center[2].to_string(), r.radius.to_string(), r.ratio.to_string()])
        .collect();
    write_csv(&out.join("muckenhoupt.csv"), &["center_x", "center_y", "center_z", "radius", "ratio"], &rows)?;
    let summary = serde_json::json!({
        "verdict": verdict_line(&c.verdict),
        "growth": c.verdict,
        "slope": c.slope,
        "dominant_center": c.dominant_center,
        "window": c.window,
        "bounded_fit": c.bounded_fit,
        "log_fit": c.log_fit,
        "power_fit": c.power_fit,
    });
    write_json(&out.join("muckenhoupt.summary.json"), &summary)?;
    println!("{}", verdict_line(&c.verdict));
    Ok(Outcome::Pass)
}

fn cmd_decay(args: &DecayArgs, out: &Path) -> anyhow::Result<Outcome> {
    let plan = args.plan()?;
    if plan.is_empty() {
        return Err(Error::Config("the plan has no experiments".into()).into());
    }
    let summary: SweepSummary = sweep(&plan);
    let rows: Vec<Vec<String>> = summary.rows.iter().map(|r| r.csv_fields()).collect();
    write_csv(&out.join("decay.csv"), &SWEEP_CSV_HEADER, &rows)?;
    write_json(&out.join("decay.summary.json"), &summary)?;
    let mut config_error = false;
    for r in &summary.rows {
        let slope = r.fit.map_or("-".to_string(), |f| format!("{:.4}", f.slope));
        let pred = r.predicted_exact.clone().unwrap_or_else(|| "-".into());
        let status = serde_json::to_value(r.status)?;
        println!("{}: slope {slope} predicted {pred} status {}", r.spec.label, status.as_str().unwrap_or(""));
        if let Some(e) = &r.error {
            config_error = true;
            println!("  error: {e}");
            if let Some(t) = r.max_safe_t {
                println!("  max safe t = {t}");
            }
        }
    }
    println!("pass {} fail {}", summary.pass_count, summary.fail_count);
    Ok(if config_error {
        Outcome::Config
    } else if summary.all_pass() {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

fn cmd_region(args: &RegionArgs, out: &Path) -> anyhow::Result<Outcome> {
    let query = args.query()?;
    let verdict = regions::check(&query)?;
    let rows: Vec<Vec<String>> = verdict
        .applicable
        .iter()
        .map(|a| {
            let exps: Vec<String> = a.exponents.iter().map(regions::format_rational).collect();
            vec![a.id.clone(), regions::format_rational(&a.leading), exps.join(" ")]
        })
        .collect();
    write_csv(&out.join("region.csv"), &["id", "leading", "exponents"], &rows)?;
    let status = if verdict.applicable.is_empty() { "not-applicable" } else { "applicable" };
    let report = serde_json::json!({
        "status": status,
        "query": query,
        "best_exponent": verdict.best_exponent().map(|b| regions::format_rational(&b)),
        "verdict": verdict,
    });
    write_json(&out.join("region.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if verdict.applicable.is_empty() { Outcome::NotApplicable } else { Outcome::Pass })
}

fn cmd_kernel(args: &KernelArgs, out: &Path) -> anyhow::Result<Outcome> {
    let params = match args.k {
        0 => OseenParams::new(args.a, args.t),
        1 => OseenParams::new(args.a, args.t).with_deriv(args.axis),
        k => return Err(Error::Input(format!("derivative order {k} must be 0 or 1")).into()),
    };
    let spec = KernelSpec { index: args.i, params, alpha: args.alpha, beta: args.beta, s: args.s };
    let value = kernel_norm(&spec)?;
    let row = vec![
        args.i.to_string(),
        args.k.to_string(),
        args.axis.to_string(),
        args.s.to_string(),
        args.t.to_string(),
        args.a.to_string(),
        args.alpha.to_string(),
        args.beta.to_string(),
        value.to_string(),
    ];
    write_csv(&out.join("kernel.csv"), &["i", "k", "axis", "s", "t", "a", "alpha", "beta", "value"], &[row])?;
    println!("{value}");
    Ok(Outcome::Pass)
}

fn parse_center(s: &str) -> wakelab::Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Input(format!("malformed coordinate {p:?}"))))
        .collect::<wakelab::Result<_>>()?;
    match parts.as_slice() {
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(Error::Input("center takes three coordinates".into())),
    }
}

fn cmd_ballint(args: &BallArgs, out: &Path, seed: u64) -> anyhow::Result<Outcome> {
    let spec = BallIntegralSpec { gamma: args.gamma, delta: args.delta, center: parse_center(&args.center)?, radius: args.r };
    let result = ball_integral(&spec)?;
    let mc = if args.mc_samples > 0 && args.r.is_finite() { Some(ball_integral_mc(&spec, args.mc_samples, seed)?) } else { None };
    let (value, error) = match &result {
        BallIntegral::Finite { value, error } => (value.to_string(), error.to_string()),
        BallIntegral::Divergent { .. } => ("inf".to_string(), String::new()),
    };
    let row = vec![
        args.gamma.to_string(),
        args.delta.to_string(),
        spec.center[0].to_string(),
        spec.center[1].to_string(),
        spec.center[2].to_string(),
        args.r.to_string(),
        value.clone(),
        error,
        mc.map(|m| m.0.to_string()).unwrap_or_default(),
        mc.map(|m| m.1.to_string()).unwrap_or_default(),
    ];
    write_csv(
        &out.join("ballint.csv"),
        &["gamma", "delta", "center_x", "center_y", "center_z", "radius", "value", "error", "mc_value", "mc_stderr"],
        &[row],
    )?;
    match result {
        BallIntegral::Finite { value, .. } => println!("{value}"),
        BallIntegral::Divergent { reason } => println!("divergent: {reason}"),
    }
    if let Some((v, se)) = mc {
        println!("monte-carlo {v} ± {se}");
    }
    Ok(Outcome::Pass)
}

fn cmd_duhamel(args: &DuhamelArgs, out: &Path) -> anyhow::Result<Outcome> {
    let mut cfg = StartingProblemConfig::default();
    cfg.forcing = match args.forcing {
        ForcingArg::F1 => StartingForcing::F1,
        ForcingArg::F2 => StartingForcing::F2,
        ForcingArg::F1f2 => StartingForcing::F1F2,
    };
    cfg.alpha = parse_rational(&args.alpha)?;
    cfg.beta = parse_rational(&args.beta)?;
    cfg.epsilon = parse_rational(&args.epsilon)?;
    cfg.a = args.a;
    cfg.wake.u0 = args.u0;
    cfg.n = args.n;
    cfg.half_width = args.half_width;
    cfg.t_max = args.tmax;
    cfg.nodes = args.nodes;
    cfg.fit_from = args.fit_from;
    cfg.tolerance = args.tolerance;
    let report = starting_problem(&cfg)?;
    let rows: Vec<Vec<String>> = report.rows.iter().map(|r| vec![r.t.to_string(), r.norms[0].to_string(), r.guard.to_string()]).collect();
    write_csv(&out.join("duhamel.csv"), &["t", "norm", "guard"], &rows)?;
    let summary = serde_json::json!({
        "label": report.label,
        "config": cfg,
        "fit": report.fit,
        "bound": report.bound_exact,
        "tolerance": report.tolerance,
        "pass": report.pass,
    });
    write_json(&out.join("duhamel.summary.json"), &summary)?;
    println!(
        "slope {:.4} vs bound {} + {} -> {} ({})",
        report.fit.slope,
        report.bound_exact,
        report.tolerance,
        if report.pass { "pass" } else { "fail" },
        report.label
    );
    Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
}

fn execute(cmd: &Command, out: &Path, seed: u64) -> anyhow::Result<Outcome> {
    if let Command::Rerun { manifest } = cmd {
        let text = fs::read_to_string(manifest).with_context(|| format!("cannot read {}", manifest.display()))?;
        let m: RunManifest = serde_json::from_str(&text)?;
        return execute(&m.command()?, out, m.seed);
    }
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_json(&out.join(format!("{}.manifest.json", cmd.name())), &RunManifest::new(cmd, seed)?)?;
    match cmd {
        Command::Muckenhoupt(a) => cmd_muckenhoupt(a, out),
        Command::Decay(a) => cmd_decay(a, out),
        Command::Region(a) => cmd_region(a, out),
        Command::Kernel(a) => cmd_kernel(a, out),
        Command::Ballint(a) => cmd_ballint(a, out, seed),
        Command::Duhamel(a) => cmd_duhamel(a, out),
        Command::Rerun { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(Outcome::Config as u8);
        }
    }
    let outcome = match execute(&cli.command, &cli.out, cli.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            error_outcome(&e)
        }
    };
    ExitCode::from(outcome as u8)
}
