//! Parameter sweeps over one configuration field, emitting one CSV row per
//! (grid point, scheme, engine, system).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::analysis::{analytic_exposure, analytic_peak, asymptotic_peak};
use crate::error::{Error, Result};
use crate::link::outage_set;
use crate::model::{PeakAoiBreakdown, Scheme, System, SystemConfig};
use crate::par::{self, Execution};
use crate::sim::{simulate, Mode, SimSettings, DEFAULT_WARMUP};

pub const CSV_COLUMNS: [&str; 12] = [
    "param", "value", "scheme", "engine", "system", "e_w", "e_k", "e_y", "e_s", "avg_peak", "stderr", "seed",
];

/// Configuration fields that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    PPDbm,
    PSDbm,
    P,
    Q,
    IcOverN0,
    DSp,
    DPs,
}

impl Param {
    pub const ALL: [Param; 7] = [
        Param::PPDbm,
        Param::PSDbm,
        Param::P,
        Param::Q,
        Param::IcOverN0,
        Param::DSp,
        Param::DPs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::PPDbm => "p_p_dbm",
            Param::PSDbm => "p_s_dbm",
            Param::P => "p",
            Param::Q => "q",
            Param::IcOverN0 => "ic_over_n0",
            Param::DSp => "d_sp",
            Param::DPs => "d_ps",
        }
    }

    pub fn apply(self, cfg: &SystemConfig, v: f64) -> SystemConfig {
        let mut c = *cfg;
        match self {
            Param::PPDbm => c.p_p_dbm = v,
            Param::PSDbm => c.p_s_dbm = v,
            Param::P => c.p = v,
            Param::Q => c.q = v,
            Param::IcOverN0 => c.ic_over_n0 = v,
            Param::DSp => c.d_sp = v,
            Param::DPs => c.d_ps = v,
        }
        c
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = Param::ALL.iter().map(|p| p.name()).collect();
            Error::config(format!("cannot sweep `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

/// `param:min:max:steps`, evenly spaced and inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn new(param: Param, min: f64, max: f64, steps: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::config(format!("sweep needs min < max, got {min}..{max}")));
        }
        if steps < 2 {
            return Err(Error::config(format!("sweep needs at least 2 steps, got {steps}")));
        }
        Ok(SweepAxis { param, min, max, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                let t = i as f64 / n;
                self.min * (1.0 - t) + self.max * t
            })
            .collect()
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [param, min, max, steps] = parts[..] else {
            return Err(Error::config(format!("sweep `{s}` is not of the form param:min:max:steps")));
        };
        let num = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| Error::config(format!("sweep bound `{x}` is not a number")))
        };
        let steps = steps
            .parse::<usize>()
            .map_err(|_| Error::config(format!("sweep steps `{steps}` is not a positive integer")))?;
        SweepAxis::new(param.parse()?, num(min)?, num(max)?, steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Analytic,
    Asymptotic,
    Simulate,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Analytic, Engine::Asymptotic, Engine::Simulate];

    pub fn label(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Asymptotic => "asymptotic",
            Engine::Simulate => "simulate",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Parse `overlay|underlay|both`.
pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>> {
    match s {
        "both" => Ok(Scheme::BOTH.to_vec()),
        other => Ok(vec![other.parse()?]),
    }
}

/// Parse `analytic|asymptotic|simulate|all`.
pub fn parse_engines(s: &str) -> Result<Vec<Engine>> {
    match s {
        "all" => Ok(Engine::ALL.to_vec()),
        other => Engine::ALL
            .into_iter()
            .find(|e| e.label() == other)
            .map(|e| vec![e])
            .ok_or_else(|| Error::config(format!("unknown engine `{other}`"))),
    }
}

/// How simulation seeds are assigned to grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// Point `i` uses `seed + i`.
    #[default]
    PerPoint,
    /// Every point uses `seed`.
    Fixed,
}

impl FromStr for SeedPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-point" => Ok(SeedPolicy::PerPoint),
            "fixed" => Ok(SeedPolicy::Fixed),
            other => Err(Error::config(format!("unknown seed policy `{other}` (per-point|fixed)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub schemes: Vec<Scheme>,
    pub engines: Vec<Engine>,
    pub slots: u64,
    pub warmup: u64,
    pub seed: u64,
    pub seed_policy: SeedPolicy,
    pub mode: Mode,
    /// Append an `exposure` column.
    pub with_exposure: bool,
}

impl SweepSpec {
    pub fn new(base: SystemConfig, axis: SweepAxis) -> Self {
        SweepSpec {
            base,
            axis,
            schemes: Scheme::BOTH.to_vec(),
            engines: vec![Engine::Analytic],
            slots: 1_000_000,
            warmup: DEFAULT_WARMUP,
            seed: 1,
            seed_policy: SeedPolicy::PerPoint,
            mode: Mode::Fading,
            with_exposure: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() || self.engines.is_empty() {
            return Err(Error::config("sweep needs at least one scheme and one engine"));
        }
        if self.engines.contains(&Engine::Simulate) && self.slots <= self.warmup {
            return Err(Error::config(format!(
                "slots ({}) must exceed warm-up ({})",
                self.slots, self.warmup
            )));
        }
        for v in self.axis.values() {
            self.axis.param.apply(&self.base, v).validate()?;
        }
        Ok(())
    }

    fn point_seed(&self, index: usize) -> u64 {
        match self.seed_policy {
            SeedPolicy::PerPoint => self.seed.wrapping_add(index as u64),
            SeedPolicy::Fixed => self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: Param,
    pub value: f64,
    pub scheme: Scheme,
    pub engine: Engine,
    pub system: System,
    pub breakdown: PeakAoiBreakdown,
    pub stderr: Option<f64>,
    pub seed: Option<u64>,
    pub exposure: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    index: usize,
    value: f64,
    scheme: Scheme,
    engine: Engine,
}

fn run_job(spec: &SweepSpec, job: &Job) -> Result<Vec<SweepRow>> {
    let cfg = spec.axis.param.apply(&spec.base, job.value);
    let row = |system, breakdown, stderr, seed, exposure| SweepRow {
        param: spec.axis.param,
        value: job.value,
        scheme: job.scheme,
        engine: job.engine,
        system,
        breakdown,
        stderr,
        seed,
        exposure,
    };
    let exposure = |x: f64| spec.with_exposure.then_some(x);
    match job.engine {
        Engine::Analytic | Engine::Asymptotic => {
            let o = outage_set(&cfg)?;
            System::BOTH
                .into_iter()
                .map(|z| {
                    let b = if job.engine == Engine::Analytic {
                        analytic_peak(job.scheme, z, &cfg, &o)?
                    } else {
                        asymptotic_peak(job.scheme, z, &cfg, &o)?
                    };
                    let eta = match (spec.with_exposure, job.engine) {
                        (true, Engine::Analytic) => Some(analytic_exposure(job.scheme, z, &cfg, &o)?),
                        _ => None,
                    };
                    Ok(row(z, b, None, None, eta))
                })
                .collect()
        }
        Engine::Simulate => {
            let seed = spec.point_seed(job.index);
            let settings = SimSettings {
                scheme: job.scheme,
                mode: spec.mode,
                slots: spec.slots,
                warmup: spec.warmup,
                seed,
                record_log: false,
            };
            let r = simulate(&cfg, &settings)?;
            Ok(System::BOTH
                .into_iter()
                .map(|z| {
                    let s = r.system(z);
                    row(z, s.breakdown(), Some(s.peak.stderr), Some(seed), exposure(s.exposure()))
                })
                .collect())
        }
    }
}

/// Evaluate every (point, scheme, engine) combination. Rows come back
/// ordered by grid index, then scheme, engine and system, whatever order
/// the workers finish in.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for (index, value) in spec.axis.values().into_iter().enumerate() {
        for &scheme in &spec.schemes {
            for &engine in &spec.engines {
                jobs.push(Job { index, value, scheme, engine });
            }
        }
    }
    let results = par::map(&jobs, exec, |j| run_job(spec, j));
    let mut rows = Vec::with_capacity(jobs.len() * 2);
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Grid values are printed with at most 12 decimals so that accumulated
/// rounding in the grid does not leak into the file.
fn fmt_value(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], with_exposure: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    if with_exposure {
        header.push("exposure");
    }
    w.write_record(&header)?;
    for r in rows {
        let b = &r.breakdown;
        let mut rec = vec![
            r.param.name().to_string(),
            fmt_value(r.value),
            r.scheme.label().to_string(),
            r.engine.label().to_string(),
            r.system.label().to_string(),
            b.e_w.to_string(),
            b.e_k.to_string(),
            b.e_y.to_string(),
            b.e_s.to_string(),
            b.avg_peak.to_string(),
            fmt_opt(r.stderr),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
        ];
        if with_exposure {
            rec.push(fmt_opt(r.exposure));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One analytic-vs-simulated quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub scheme: Scheme,
    pub system: System,
    pub quantity: &'static str,
    pub analytic: f64,
    pub simulated: f64,
    pub stderr: f64,
    pub z: f64,
}

/// `(simulated - analytic) / stderr`, taking `0/0` as a perfect match.
pub fn z_score(simulated: f64, analytic: f64, stderr: f64) -> f64 {
    let diff = simulated - analytic;
    if stderr > 0.0 {
        diff / stderr
    } else if diff.abs() <= 1e-12 * analytic.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Side-by-side closed form vs simulation for both systems under one scheme.
pub fn compare(cfg: &SystemConfig, settings: &SimSettings) -> Result<Vec<CompareRow>> {
    let o = outage_set(cfg)?;
    let report = simulate(cfg, settings)?;
    let mut rows = Vec::new();
    for z in System::BOTH {
        let a = analytic_peak(settings.scheme, z, cfg, &o)?;
        let s = report.system(z);
        for (quantity, analytic, est) in [
            ("e_w", a.e_w, s.w),
            ("e_k", a.e_k, s.k),
            ("e_y", a.e_y, s.y),
            ("e_s", a.e_s, s.s),
            ("avg_peak", a.avg_peak, s.peak),
        ] {
            rows.push(CompareRow {
                scheme: settings.scheme,
                system: z,
                quantity,
                analytic,
                simulated: est.mean,
                stderr: est.stderr,
                z: z_score(est.mean, analytic, est.stderr),
            });
        }
    }
    Ok(rows)
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "system", "quantity", "analytic", "simulated", "stderr", "z"])?;
    for r in rows {
        w.write_record([
            r.scheme.label().to_string(),
            r.system.label().to_string(),
            r.quantity.to_string(),
            r.analytic.to_string(),
            r.simulated.to_string(),
            r.stderr.to_string(),
            format!("{:.3}", r.z),
        ])?;
    }
    w.flush()?;
    Ok(())
}
