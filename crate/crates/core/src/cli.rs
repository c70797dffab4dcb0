//! Experiment runner behind the `hh` binary.
//!
//! Each subcommand reads its parameters from flags, optionally layered over a
//! JSON config file, writes CSV/JSON artifacts into the output directory and
//! maps its verdict to an exit code. The effective configuration is embedded
//! in every JSON artifact; timings go to the sidecar `run.log` only.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::checks::{run_check, run_checks, CheckId, CheckParams, CheckReport, Verdict};
use crate::error::{Error, Result};
use crate::lattice::{HalfPlaneSet, SetSpec, Site};
use crate::measures::{
    constant_c, inharmonic, scaling_limit_report, stationary_hm, truncated_hm, truncated_hm_mc,
    Method,
};
use crate::montecarlo::{height_cap, mc_hit, RngSpec};
use crate::potential::{fit_c0, PotentialKernel};
use crate::report::{self, MeasureRow};

/// Exit code used for errors.
pub const EXIT_ERROR: i32 = 3;

/// Comma-separated integers and ranges, both ends included: `25,50,100`, `2..6`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntList(pub Vec<i64>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if let Some((a, b)) = part.split_once("..") {
                let b = b.trim_start_matches('=');
                let a: i64 = a
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad range start in {part:?}"))?;
                let b: i64 = b
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad range end in {part:?}"))?;
                if b < a {
                    return Err(format!("empty range {part:?}"));
                }
                out.extend(a..=b);
            } else {
                out.push(parse_count(part)? as i64);
            }
        }
        if out.is_empty() {
            return Err("empty list".into());
        }
        Ok(IntList(out))
    }
}

/// Comma-separated floats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let v = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad number {p:?}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(FloatList(v))
    }
}

/// A lattice site written `x1,x2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteArg(pub [i64; 2]);

impl SiteArg {
    pub fn site(self) -> Site {
        Site::new(self.0[0], self.0[1])
    }
}

impl FromStr for SiteArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("expected x1,x2, got {s:?}"))?;
        let p = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| format!("bad coordinate {t:?}"))
        };
        Ok(SiteArg([p(a)?, p(b)?]))
    }
}

/// A nonnegative count, also accepted in float notation such as `1e7`.
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.trim().parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.trim().parse().map_err(|_| format!("bad count {s:?}"))?;
    if !(f >= 0.0 && f.fract() == 0.0 && f < 1.8e19) {
        return Err(format!("{s:?} is not a nonnegative integer"));
    }
    Ok(f as u64)
}

fn parse_set(s: &str) -> std::result::Result<SetSpec, String> {
    SetSpec::parse(s).map_err(|e| e.to_string())
}

/// Numeric and geometric parameters shared by the subcommands.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Set specification as JSON, e.g. '{"kind":"L0_plus","sites":[[0,1]]}'.
    #[arg(long, value_parser = parse_set)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<SetSpec>,
    /// Site of the set whose measure is reported.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<SiteArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<SiteArg>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<SiteArg>,
    /// Scale values, e.g. 25,50,100 or 2..6.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<IntList>,
    /// Line heights.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<IntList>,
    #[arg(long = "delta")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<FloatList>,
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Step cap per walk.
    #[arg(long, value_parser = parse_count)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    /// Radius of the launching circle or of the kernel cache.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<i64>,
    /// `line-sum` or `visits-green`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Half-width of the line sum.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<i64>,
    /// Relative tolerance for pass/fail comparisons.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_factor: Option<f64>,
    /// Values of n used to estimate the constant c.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_n: Option<IntList>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        Params { $($f: $top.$f.clone().or_else(|| $base.$f.clone()),)* }
    };
}

impl Params {
    /// `self` with every unset field taken from `base`.
    pub fn over(&self, base: &Params) -> Params {
        overlay!(
            base, self, set, x, start, target, n, m, deltas, samples, cap, radius, method, width,
            tolerance, alpha, c0, m_factor, c_n
        )
    }

    fn set(&self) -> Result<HalfPlaneSet> {
        match &self.set {
            Some(s) => s.build(),
            None => HalfPlaneSet::with_sites([Site::new(0, 1)]),
        }
    }

    fn spec(&self) -> SetSpec {
        self.set.clone().unwrap_or(SetSpec::L0Plus {
            sites: vec![[0, 1]],
        })
    }

    fn site_x(&self, a: &HalfPlaneSet) -> Site {
        self.x.map(SiteArg::site).unwrap_or_else(|| {
            a.decoration()
                .iter()
                .copied()
                .max_by_key(|s| s.x2)
                .unwrap_or(Site::ORIGIN)
        })
    }

    fn ns(&self, default: &[i64]) -> Vec<i64> {
        self.n
            .clone()
            .map(|l| l.0)
            .unwrap_or_else(|| default.to_vec())
    }

    fn ms(&self, default: &[i64]) -> Vec<i64> {
        self.m
            .clone()
            .map(|l| l.0)
            .unwrap_or_else(|| default.to_vec())
    }

    fn check_params(&self) -> CheckParams {
        CheckParams {
            n: self.n.clone().map(|l| l.0),
            m: self.m.clone().map(|l| l.0),
            deltas: self.deltas.clone().map(|l| l.0),
            set: self.set.clone(),
            x: self.x.map(|s| s.0),
            alpha: self.alpha,
            m_factor: self.m_factor,
            c0: self.c0,
        }
    }
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelAction {
    /// Build the potential kernel and save it to a binary file.
    Build {
        #[arg(long, default_value_t = 512)]
        radius: i64,
        /// Output file, default `<out>/kernel.bin`.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Fit the additive constant of the kernel asymptotics over a distance band.
    FitC0 {
        #[arg(long, default_value_t = 256)]
        radius: i64,
        #[arg(long, default_value_t = 50.0)]
        lo: f64,
        #[arg(long, default_value_t = 200.0)]
        hi: f64,
    },
}

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Series n·H_{D_n}(0) and its extrapolated limit c.
    ConstantC(Params),
    /// C·n·H_{A_n}(x) against the stationary measure.
    ScalingLimit(Params),
    /// Stationary measure H̄_{A,m}(x).
    Stationary(Params),
    /// In-harmonic measure H̃_{A,n}(x).
    Inharmonic(Params),
    /// Harmonic measure from infinity of the truncation A_n, exactly and optionally by Monte Carlo.
    Truncated(Params),
    /// Monte Carlo hitting probability for the walk absorbed on A ∪ L0.
    Mc(Params),
    /// Run one property check, or all of them.
    Check {
        /// Check id or `all`.
        id: String,
        #[command(flatten)]
        params: Params,
    },
    /// Potential kernel utilities.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Central segment masses of D_n against the arcsine law.
    Segment(Params),
    /// Summarize check reports found in the output directory.
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ConstantC(_) => "constant-c",
            Command::ScalingLimit(_) => "scaling-limit",
            Command::Stationary(_) => "stationary",
            Command::Inharmonic(_) => "inharmonic",
            Command::Truncated(_) => "truncated",
            Command::Mc(_) => "mc",
            Command::Check { .. } => "check",
            Command::Kernel { .. } => "kernel",
            Command::Segment(_) => "segment",
            Command::Report => "report",
        }
    }

    fn params(&self) -> Option<&Params> {
        match self {
            Command::ConstantC(p)
            | Command::ScalingLimit(p)
            | Command::Stationary(p)
            | Command::Inharmonic(p)
            | Command::Truncated(p)
            | Command::Mc(p)
            | Command::Segment(p)
            | Command::Check { params: p, .. } => Some(p),
            Command::Kernel { .. } | Command::Report => None,
        }
    }
}

#[derive(Parser, Clone, Debug)]
#[command(
    name = "hh",
    version,
    about = "Discrete harmonic measure experiments on the upper half plane"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "hh-out")]
    pub out: PathBuf,
    /// Base seed for Monte Carlo streams.
    #[arg(long, global = true, env = "HH_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "HH_THREADS")]
    pub threads: Option<usize>,
    /// JSON file with defaults for the parameters and the seed.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Serializable description of a run, embedded verbatim in its outputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelAction>,
    pub params: Params,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Parse a config file; errors carry the line and column.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            Error::SetSpec(format!(
                "{}: line {} column {}: {e}",
                path.display(),
                e.line(),
                e.column()
            ))
        })
    }
}

/// Default Monte Carlo seed when neither flag, environment nor config sets one.
pub const DEFAULT_SEED: u64 = 1;

/// Effective configuration: flags over config file over defaults.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let file = match &cli.config {
        Some(p) => Some(ExperimentConfig::load(p)?),
        None => None,
    };
    let base = file.clone().unwrap_or_default();
    let params = cli
        .command
        .params()
        .map(|p| p.over(&base.params))
        .unwrap_or_else(|| base.params.clone());
    Ok(ExperimentConfig {
        command: cli.command.name().to_string(),
        check: match &cli.command {
            Command::Check { id, .. } => Some(id.clone()),
            _ => None,
        },
        kernel: match &cli.command {
            Command::Kernel { action } => Some(action.clone()),
            _ => None,
        },
        params,
        seed: cli.seed.or(file.map(|f| f.seed)).unwrap_or(DEFAULT_SEED),
        out: cli.out.clone(),
    })
}

/// What a subcommand produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.summary.trim_end())?;
        for a in &self.artifacts {
            write!(f, "\nwrote {}", a.display())?;
        }
        Ok(())
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl Run<'_> {
    fn config_json(&self) -> Value {
        serde_json::to_value(self.cfg).expect("config serializes")
    }

    fn json(&mut self, name: &str, result: &impl Serialize) -> Result<()> {
        let path = self.dir.join(format!("{name}.json"));
        report::write_json(
            &path,
            &json!({ "config": self.config_json(), "result": result }),
        )?;
        self.artifacts.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, rows: &[MeasureRow]) -> Result<()> {
        let path = self.dir.join(format!("{name}.csv"));
        report::write_measure_csv(&path, rows)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn finish(self, verdict: Verdict, summary: String) -> Outcome {
        Outcome {
            verdict,
            summary,
            artifacts: self.artifacts,
        }
    }
}

/// Execute a resolved configuration.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    report::ensure_dir(&cfg.out)?;
    let started = Instant::now();
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    report::append_log(&cfg.out, &format!("{stamp} start {}", cfg.command))?;
    let mut run = Run {
        cfg,
        dir: cfg.out.clone(),
        artifacts: Vec::new(),
    };
    let p = &cfg.params;
    let outcome = match cfg.command.as_str() {
        "constant-c" => {
            let ns = p.ns(&[25, 50, 100, 200, 400]);
            let k = constant_c(&ns)?;
            let rows: Vec<MeasureRow> = ns
                .iter()
                .zip(&k.series.values)
                .map(|(&n, v)| MeasureRow::from_value("n*H_Dn(0)", None, Some(Site::ORIGIN), n, v))
                .chain([
                    MeasureRow::scalar("c", 0, "aitken", k.c),
                    MeasureRow::scalar("C", 0, "aitken", k.big_c),
                ])
                .collect();
            run.csv("constant-c", &rows)?;
            run.json("constant-c", &k)?;
            let s = format!(
                "c = {:.8} (C = {:.8}); gaps decreasing: {}, limit consistent: {}",
                k.c, k.big_c, k.series.gaps_decreasing, k.series.limit_consistent
            );
            run.finish(Verdict::Pass, s)
        }
        "scaling-limit" => {
            let a = p.set()?;
            let x = p.site_x(&a);
            let ns = p.ns(&[50, 100, 200]);
            let k = constant_c(
                &p.c_n
                    .clone()
                    .map(|l| l.0)
                    .unwrap_or(vec![25, 50, 100, 200, 400]),
            )?;
            let r = scaling_limit_report(&a, x, &ns, &k, p.tolerance.unwrap_or(0.1))?;
            let spec = p.spec();
            let mut rows: Vec<MeasureRow> = ns
                .iter()
                .zip(&r.series.values)
                .map(|(&n, v)| MeasureRow::from_value("C*n*H_An(x)", Some(&spec), Some(x), n, v))
                .collect();
            rows.push(MeasureRow::from_value(
                "stationary",
                Some(&spec),
                Some(x),
                0,
                &r.reference,
            ));
            run.csv("scaling-limit", &rows)?;
            run.json("scaling-limit", &json!({ "constants": k, "report": r }))?;
            let s = format!(
                "reference {:.8}; relative gaps {:?}; pass {}",
                r.reference.value, r.relative_gaps, r.pass
            );
            run.finish(Verdict::from_bool(r.pass), s)
        }
        "stationary" => {
            let a = p.set()?;
            let x = p.site_x(&a);
            let method = match p.method.as_deref().unwrap_or("visits-green") {
                "visits-green" => Method::VisitsGreen,
                "line-sum" => Method::LineSum,
                other => {
                    return Err(Error::Precondition(format!(
                        "unknown stationary method {other:?}"
                    )))
                }
            };
            let spec = p.spec();
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for m in p.ms(&[4, 8]) {
                let v = stationary_hm(&a, x, m, method, p.width)?;
                rows.push(MeasureRow::from_value(
                    "stationary",
                    Some(&spec),
                    Some(x),
                    m,
                    &v,
                ));
                values.push(v);
            }
            run.csv("stationary", &rows)?;
            run.json("stationary", &values)?;
            let s = values
                .iter()
                .map(|v| {
                    format!(
                        "{:.12} [{:.12}, {:.12}]",
                        v.value, v.bracket.lo, v.bracket.hi
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            run.finish(Verdict::Pass, s)
        }
        "inharmonic" => {
            let a = p.set()?;
            let x = p.site_x(&a);
            let spec = p.spec();
            let values = p
                .ns(&[50, 100, 200])
                .into_iter()
                .map(|n| inharmonic(&a, n, x))
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<MeasureRow> = values
                .iter()
                .map(|v| {
                    let n = v.params.get("n").and_then(Value::as_i64).unwrap_or(0);
                    MeasureRow::from_value("inharmonic", Some(&spec), Some(x), n, v)
                })
                .collect();
            run.csv("inharmonic", &rows)?;
            run.json("inharmonic", &values)?;
            let s = values
                .iter()
                .map(|v| format!("{:.12}", v.value))
                .collect::<Vec<_>>()
                .join("\n");
            run.finish(Verdict::Pass, s)
        }
        "truncated" => {
            let a = p.set()?;
            let x = p.site_x(&a);
            let spec = p.spec();
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for n in p.ns(&[25, 50, 100]) {
                let v = truncated_hm(&a, n, x)?;
                rows.push(MeasureRow::from_value(
                    "truncated",
                    Some(&spec),
                    Some(x),
                    n,
                    &v,
                ));
                values.push(v);
                if let Some(samples) = p.samples {
                    let r = p.radius.unwrap_or(2 * n + 2);
                    let spec_rng = RngSpec::new(cfg.seed).substream(n as u64);
                    let mc = truncated_hm_mc(&a, n, x, r, samples, spec_rng)?;
                    rows.push(MeasureRow::from_value(
                        "truncated",
                        Some(&spec),
                        Some(x),
                        n,
                        &mc,
                    ));
                    values.push(mc);
                }
            }
            run.csv("truncated", &rows)?;
            run.json("truncated", &values)?;
            let s = values
                .iter()
                .map(|v| format!("{} {:.12e}", v.method.tag(), v.value))
                .collect::<Vec<_>>()
                .join("\n");
            run.finish(Verdict::Pass, s)
        }
        "mc" => {
            let a = p.set()?;
            let start = p
                .start
                .ok_or_else(|| Error::Precondition("mc needs --start".into()))?
                .site();
            let target = p
                .target
                .ok_or_else(|| Error::Precondition("mc needs --target".into()))?
                .site();
            let samples = p.samples.unwrap_or(100_000);
            let cap = p.cap.unwrap_or_else(|| height_cap(start.x2.abs().max(1)));
            let absorbing = |s: Site| a.contains(s);
            let est = mc_hit(
                start,
                &absorbing,
                target,
                samples,
                cap,
                RngSpec::new(cfg.seed),
            );
            let spec = p.spec();
            let row = MeasureRow {
                std_error: Some(est.std_error),
                lo: est.mean - 3.0 * est.std_error,
                hi: est.mean + 3.0 * est.std_error,
                ..MeasureRow::scalar("hit-probability", start.x2, "monte-carlo", est.mean)
            };
            let row = MeasureRow {
                spec_hash: report::spec_hash(&spec),
                x: Some(target),
                ..row
            };
            run.csv("mc", &[row])?;
            run.json(
                "mc",
                &json!({ "estimate": est, "cap": cap, "start": start, "target": target }),
            )?;
            let s = format!(
                "P = {:.8e} ± {:.2e} (timeouts {:.3e})",
                est.mean, est.std_error, est.timeout_fraction
            );
            run.finish(Verdict::Pass, s)
        }
        "check" => {
            let id = cfg.check.as_deref().unwrap_or("all");
            let ids: Vec<CheckId> = if id == "all" {
                CheckId::ALL.to_vec()
            } else {
                vec![id.parse()?]
            };
            let params = p.check_params();
            let results = if ids.len() == 1 {
                vec![run_check(ids[0], &params)]
            } else {
                run_checks(&ids, &params)
            };
            let mut reports: Vec<CheckReport> = results.into_iter().collect::<Result<_>>()?;
            run.dir = cfg.out.join("checks");
            let config = run.config_json();
            for r in &mut reports {
                run.artifacts
                    .push(report::write_check(&run.dir, r, &config)?);
            }
            let summary = cfg.out.join("checks").join("summary.csv");
            report::write_summary_csv(&summary, &reports)?;
            run.artifacts.push(summary);
            let verdict = Verdict::all(reports.iter().map(|r| r.verdict));
            run.finish(verdict, report::summary_table(&reports))
        }
        "kernel" => match cfg.kernel.clone() {
            Some(KernelAction::Build { radius, file }) => {
                let k = PotentialKernel::build(radius)?;
                let path = file.unwrap_or_else(|| cfg.out.join("kernel.bin"));
                k.save(&path)?;
                run.artifacts.push(path);
                let res = k.harmonicity_residual();
                run.json(
                    "kernel-build",
                    &json!({ "radius": radius, "harmonicity_residual": res }),
                )?;
                run.finish(
                    Verdict::Pass,
                    format!("radius {radius}, harmonicity residual {res:.3e}"),
                )
            }
            Some(KernelAction::FitC0 { radius, lo, hi }) => {
                let k = PotentialKernel::build(radius)?;
                let fit = fit_c0(&k, lo, hi)?;
                run.json("kernel-fit-c0", &fit)?;
                let s = format!(
                    "c0 = {:.12} (spread {:.3e} over {} sites)",
                    fit.mean, fit.spread, fit.sites
                );
                run.finish(Verdict::Pass, s)
            }
            None => return Err(Error::Precondition("kernel needs an action".into())),
        },
        "segment" => {
            let mut r = run_check(CheckId::Segment, &p.check_params())?;
            let config = run.config_json();
            run.artifacts
                .push(report::write_check(&cfg.out, &mut r, &config)?);
            let verdict = r.verdict;
            run.finish(verdict, report::summary_table(std::slice::from_ref(&r)))
        }
        "report" => {
            let reports = load_reports(&cfg.out.join("checks"))?;
            if reports.is_empty() {
                return Err(Error::Precondition(format!(
                    "no check reports under {}",
                    cfg.out.join("checks").display()
                )));
            }
            let path = cfg.out.join("summary.csv");
            report::write_summary_csv(&path, &reports)?;
            run.artifacts.push(path);
            let verdict = Verdict::all(reports.iter().map(|r| r.verdict));
            run.finish(verdict, report::summary_table(&reports))
        }
        other => return Err(Error::Precondition(format!("unknown command {other:?}"))),
    };
    report::append_log(
        &cfg.out,
        &format!(
            "{stamp} done {} in {:.3}s: {}",
            cfg.command,
            started.elapsed().as_secs_f64(),
            outcome.verdict
        ),
    )?;
    Ok(outcome)
}

/// Check reports written by earlier `check` runs, sorted by id.
pub fn load_reports(dir: &Path) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(Error::io(dir, e)),
    };
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let doc: Value = serde_json::from_str(&text)?;
        if let Some(r) = doc.get("report") {
            out.push(serde_json::from_value(r.clone())?);
        }
    }
    out.sort_by_key(|r: &CheckReport| r.id);
    Ok(out)
}

/// Parse nothing further: resolve and execute a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    execute(&resolve(cli)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_and_count_parsing() {
        assert_eq!("2..6".parse::<IntList>().unwrap().0, vec![2, 3, 4, 5, 6]);
        assert_eq!(
            "25, 50,100".parse::<IntList>().unwrap().0,
            vec![25, 50, 100]
        );
        assert_eq!("1..=2,8".parse::<IntList>().unwrap().0, vec![1, 2, 8]);
        assert!("6..2".parse::<IntList>().is_err());
        assert_eq!(parse_count("1e7").unwrap(), 10_000_000);
        assert_eq!(parse_count("4096").unwrap(), 4096);
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert_eq!("0,-4".parse::<SiteArg>().unwrap().site(), Site::new(0, -4));
        assert!("0".parse::<SiteArg>().is_err());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.json");
        std::fs::write(
            &cfg_path,
            r#"{"params": {"n": [3, 4], "samples": 10}, "seed": 9}"#,
        )
        .unwrap();
        let cli = Cli::try_parse_from([
            "hh",
            "inharmonic",
            "--n",
            "7",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .unwrap();
        let cfg = resolve(&cli).unwrap();
        assert_eq!(cfg.params.n, Some(IntList(vec![7])));
        assert_eq!(cfg.params.samples, Some(10));
        assert_eq!(cfg.command, "inharmonic");
        let cli = Cli::try_parse_from(["hh", "--seed", "5", "report"]).unwrap();
        assert_eq!(resolve(&cli).unwrap().seed, 5);
    }

    #[test]
    fn config_errors_point_at_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\n  \"params\": {\n    \"nn\": [1]\n  }\n}\n").unwrap();
        let msg = ExperimentConfig::load(&path).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(parse_set("{\"kind\": \"L0\",\n \"x\": }")
            .unwrap_err()
            .contains("line 2"));
    }

    #[test]
    fn reflection_check_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let cli = Cli::try_parse_from(["hh", "check", "reflection", "--n", "2..6", "--out", out])
            .unwrap();
        let o = run(&cli).unwrap();
        assert_eq!(o.exit_code(), 0);
        let report = Cli::try_parse_from(["hh", "report", "--out", out]).unwrap();
        let r = run(&report).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.summary.contains("reflection"));
    }

    #[test]
    fn outputs_do_not_depend_on_thread_count() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let mut seen = Vec::new();
        for threads in [1, 3] {
            let cli = Cli::try_parse_from([
                "hh",
                "mc",
                "--set",
                r#"{"kind":"L0"}"#,
                "--start",
                "0,3",
                "--target",
                "0,0",
                "--samples",
                "2e4",
                "--seed",
                "42",
                "--out",
                out,
            ])
            .unwrap();
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run(&cli)).unwrap();
            let csv = std::fs::read(dir.path().join("mc.csv")).unwrap();
            let json = std::fs::read(dir.path().join("mc.json")).unwrap();
            seen.push((csv, json));
        }
        assert_eq!(seen[0], seen[1]);
    }
}
