use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aoi_cr::analysis::{analyze, analytic_exposure};
use aoi_cr::asymptotics::SchemeComparison;
use aoi_cr::config_file::{load_config, RunConfig};
use aoi_cr::par::Execution;
use aoi_cr::sim::{simulate, write_event_log, Mode, SimSettings, DEFAULT_WARMUP};
use aoi_cr::sweep::{
    compare, parse_engines, parse_schemes, run_sweep, write_compare_csv, write_csv, Engine, SeedPolicy, SweepAxis,
    SweepSpec,
};
use aoi_cr::{Error, Scheme, System};
use clap::{Args, Parser, Subcommand};

const DEFAULT_SLOTS: u64 = 1_000_000;
const DEFAULT_SEED: u64 = 1;

/// Average peak age of information for overlay and underlay spectrum sharing.
#[derive(Parser)]
#[command(name = "aoi-cr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and high-SNR results for one configuration.
    Analyze(Common),
    /// One simulation run per selected scheme.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Write the per-delivery event log here (CSV).
        #[arg(long, value_name = "PATH")]
        events: Option<PathBuf>,
    },
    /// Closed forms next to simulation, with z-scores.
    Compare(Common),
    /// Sweep one parameter and write one CSV row per point/scheme/engine/system.
    Sweep(Common),
    /// Critical primary generation rate separating the two schemes.
    CriticalRate(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// `param:min:max:steps`.
    #[arg(long, value_name = "SPEC")]
    sweep: Option<String>,
    /// overlay | underlay | both
    #[arg(long)]
    scheme: Option<String>,
    /// analytic | asymptotic | simulate | all
    #[arg(long)]
    engine: Option<String>,
    /// Simulated slots per run, warm-up included.
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// fading | abstract
    #[arg(long)]
    mode: Option<String>,
    /// per-point | fixed
    #[arg(long)]
    seed_policy: Option<String>,
    /// Append an `exposure` column to sweep output.
    #[arg(long)]
    with_exposure: bool,
    /// Run grid points on the calling thread only.
    #[arg(long)]
    sequential: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Command-line flags layered over the config file.
struct Resolved {
    rc: RunConfig,
    schemes: Vec<Scheme>,
    slots: u64,
    warmup: u64,
    seed: u64,
    mode: Mode,
    exec: Execution,
}

impl Common {
    fn resolve(&self) -> aoi_cr::Result<Resolved> {
        let mut rc = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.sweep {
            rc.sweep = Some(s.parse()?);
        }
        if let Some(s) = &self.engine {
            rc.engines = Some(parse_engines(s)?);
        }
        if let Some(s) = &self.seed_policy {
            rc.seed_policy = Some(s.parse()?);
        }
        if self.with_exposure {
            rc.with_exposure = Some(true);
        }
        let schemes = match &self.scheme {
            Some(s) => parse_schemes(s)?,
            None => rc.schemes.clone().unwrap_or_else(|| Scheme::BOTH.to_vec()),
        };
        let mode = match &self.mode {
            Some(m) => m.parse()?,
            None => rc.mode.unwrap_or(Mode::Fading),
        };
        let slots = self.slots.or(rc.slots).unwrap_or(DEFAULT_SLOTS);
        let warmup = self
            .warmup
            .or(rc.warmup)
            .unwrap_or_else(|| DEFAULT_WARMUP.min(slots / 2));
        let exec = if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        };
        Ok(Resolved {
            seed: self.seed.or(rc.seed).unwrap_or(DEFAULT_SEED),
            rc,
            schemes,
            slots,
            warmup,
            mode,
            exec,
        })
    }

    fn output(&self) -> aoi_cr::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(create(path)?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn create(path: &Path) -> aoi_cr::Result<File> {
    File::create(path).map_err(|e| Error::Io(format!("cannot create {}: {e}", path.display())))
}

impl Resolved {
    fn settings(&self, scheme: Scheme) -> SimSettings {
        SimSettings {
            scheme,
            mode: self.mode,
            slots: self.slots,
            warmup: self.warmup,
            seed: self.seed,
            record_log: false,
        }
    }
}

fn cmd_analyze(c: &Common) -> aoi_cr::Result<()> {
    let r = c.resolve()?;
    let cfg = &r.rc.system;
    let a = analyze(cfg)?;
    let mut out = c.output()?;
    let o = &a.outages;
    if c.out.is_none() {
        writeln!(
            out,
            "outages: phi_op={} phi_os={} phi_us={} phi_up_hat={} phi_us_hat={}",
            o.phi_op, o.phi_os, o.phi_us, o.phi_up_hat, o.phi_us_hat
        )?;
        writeln!(out, "underlay occupancy: {:?}", a.markov.pi)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scheme", "engine", "system", "e_w", "e_k", "e_y", "e_s", "avg_peak", "exposure"])?;
    for &scheme in &r.schemes {
        for (engine, table) in [(Engine::Analytic, &a.exact), (Engine::Asymptotic, &a.asymptotic)] {
            for z in System::BOTH {
                let b = table[scheme as usize][z as usize];
                let eta = match engine {
                    Engine::Analytic => analytic_exposure(scheme, z, cfg, o)?.to_string(),
                    _ => String::new(),
                };
                w.write_record([
                    scheme.label().to_string(),
                    engine.label().to_string(),
                    z.label().to_string(),
                    b.e_w.to_string(),
                    b.e_k.to_string(),
                    b.e_y.to_string(),
                    b.e_s.to_string(),
                    b.avg_peak.to_string(),
                    eta,
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_simulate(c: &Common, events: Option<&Path>) -> aoi_cr::Result<()> {
    let r = c.resolve()?;
    if events.is_some() && r.schemes.len() != 1 {
        return Err(Error::Config("--events needs a single --scheme".into()));
    }
    let mut w = csv::Writer::from_writer(c.output()?);
    w.write_record([
        "scheme", "mode", "system", "peaks", "e_w", "e_k", "e_y", "e_s", "avg_peak", "stderr", "exposure", "seed",
    ])?;
    for &scheme in &r.schemes {
        let settings = SimSettings {
            record_log: events.is_some(),
            ..r.settings(scheme)
        };
        let report = simulate(&r.rc.system, &settings)?;
        for z in System::BOTH {
            let s = report.system(z);
            let b = s.breakdown();
            w.write_record([
                scheme.label().to_string(),
                r.mode.label().to_string(),
                z.label().to_string(),
                s.peaks.to_string(),
                b.e_w.to_string(),
                b.e_k.to_string(),
                b.e_y.to_string(),
                b.e_s.to_string(),
                b.avg_peak.to_string(),
                s.peak.stderr.to_string(),
                s.exposure().to_string(),
                r.seed.to_string(),
            ])?;
        }
        if let Some(path) = events {
            write_event_log(&report.events, BufWriter::new(create(path)?))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_compare(c: &Common) -> aoi_cr::Result<()> {
    let r = c.resolve()?;
    let mut rows = Vec::new();
    for &scheme in &r.schemes {
        rows.extend(compare(&r.rc.system, &r.settings(scheme))?);
    }
    write_compare_csv(&rows, c.output()?)?;
    let worst = rows.iter().map(|row| row.z.abs()).fold(0.0, f64::max);
    log::info!("largest |z| = {worst:.3}");
    Ok(())
}

fn cmd_sweep(c: &Common) -> aoi_cr::Result<()> {
    let r = c.resolve()?;
    let axis: SweepAxis = r
        .rc
        .sweep
        .ok_or_else(|| Error::Config("no sweep given (use --sweep or a `sweep =` line)".into()))?;
    let spec = SweepSpec {
        base: r.rc.system,
        axis,
        schemes: r.schemes.clone(),
        engines: r.rc.engines.clone().unwrap_or_else(|| vec![Engine::Analytic]),
        slots: r.slots,
        warmup: r.warmup,
        seed: r.seed,
        seed_policy: r.rc.seed_policy.unwrap_or(SeedPolicy::PerPoint),
        mode: r.mode,
        with_exposure: r.rc.with_exposure.unwrap_or(false),
    };
    let rows = run_sweep(&spec, r.exec)?;
    write_csv(&rows, spec.with_exposure, c.output()?)
}

fn cmd_critical_rate(c: &Common) -> aoi_cr::Result<()> {
    let r = c.resolve()?;
    let cfg = &r.rc.system;
    let o = aoi_cr::link::outage_set(cfg)?;
    let cmp = SchemeComparison::at(cfg.p, cfg.q, o.phi_os, o.phi_us, o.phi_us_hat)?;
    let mut w = csv::Writer::from_writer(c.output()?);
    w.write_record(["p", "p_star", "recommended", "aoi_overlay", "aoi_underlay"])?;
    w.write_record([
        cfg.p.to_string(),
        cmp.p_star.to_string(),
        cmp.recommended.label().to_string(),
        cmp.aoi_overlay.to_string(),
        cmp.aoi_underlay.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(c) => cmd_analyze(c),
        Command::Simulate { common, events } => cmd_simulate(common, events.as_deref()),
        Command::Compare(c) => cmd_compare(c),
        Command::Sweep(c) => cmd_sweep(c),
        Command::CriticalRate(c) => cmd_critical_rate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
