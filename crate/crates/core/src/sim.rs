//! Slot-level Monte Carlo of the two-system network.
//!
//! Each slot runs generate -> access -> decode -> age update. Peaks are taken
//! from delivery events (the receiver's age in the delivery slot, before the
//! reset), so the per-delivery identities hold exactly on the event log.

use std::fmt;
use std::io::Write;

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::link::{outage_set_from_params, LinkParams, OutageSet};
use crate::model::{clamp_rate, PeakAoiBreakdown, Scheme, System, SystemConfig};
use crate::underlay::state_index;

pub const DEFAULT_WARMUP: u64 = 10_000;

/// Number of contiguous slot blocks used for batch-means standard errors.
const BATCHES: usize = 100;

/// Below this many recorded peaks the batch-means estimate is too coarse and
/// the i.i.d. formula is used instead.
const MIN_PEAKS_FOR_BATCHES: u64 = 2_000;

/// How decode outcomes are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Fresh Rayleigh gains every slot; success when SNR/SINR clears the threshold.
    Fading,
    /// Bernoulli success with the closed-form outage probabilities.
    Abstract,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Fading => "fading",
            Mode::Abstract => "abstract",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fading" => Ok(Mode::Fading),
            "abstract" => Ok(Mode::Abstract),
            other => Err(Error::config(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub scheme: Scheme,
    pub mode: Mode,
    /// Total slots, warm-up included.
    pub slots: u64,
    pub warmup: u64,
    pub seed: u64,
    /// Keep one record per delivered update.
    pub record_log: bool,
}

impl SimSettings {
    pub fn new(scheme: Scheme, mode: Mode, slots: u64, seed: u64) -> Self {
        SimSettings {
            scheme,
            mode,
            slots,
            warmup: DEFAULT_WARMUP.min(slots / 2),
            seed,
            record_log: false,
        }
    }

    fn check(&self) -> Result<()> {
        if self.slots <= self.warmup {
            return Err(Error::domain(format!(
                "slots ({}) must exceed warm-up ({})",
                self.slots, self.warmup
            )));
        }
        if self.slots > u64::MAX / 4 {
            return Err(Error::domain(format!("slot count {} is too large", self.slots)));
        }
        Ok(())
    }
}

/// One delivered update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeliveryEvent {
    pub system: System,
    /// Generation slot of the delivered update.
    pub g: u64,
    /// Delivery slot.
    pub d: u64,
    pub w: u64,
    pub k: u64,
    pub s: u64,
    pub y: u64,
    pub peak: u64,
    /// The other system was busy in the slot this update was generated.
    pub other_busy_at_gen: bool,
}

/// Receiver-side state for one system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotState {
    pub busy: bool,
    /// Generation slot of the update in service.
    pub gen_slot: u64,
    pub gen_other_busy: bool,
    /// First generation since the last delivery.
    pub first_gen: Option<u64>,
    pub last_delivery: Option<u64>,
    pub last_delivered_gen: u64,
    pub last_service: u64,
    /// Receiver age in the current slot; `None` before the first delivery.
    pub aoi: Option<u64>,
}

#[derive(Debug, Clone, Default)]
struct Batches {
    sum: Vec<f64>,
    count: Vec<u64>,
}

impl Batches {
    fn new() -> Self {
        Batches {
            sum: vec![0.0; BATCHES],
            count: vec![0; BATCHES],
        }
    }

    fn push(&mut self, block: usize, x: f64) {
        self.sum[block] += x;
        self.count[block] += 1;
    }

    fn total(&self) -> (f64, u64) {
        (self.sum.iter().sum(), self.count.iter().sum())
    }

    fn mean(&self) -> f64 {
        let (s, n) = self.total();
        if n == 0 {
            f64::NAN
        } else {
            s / n as f64
        }
    }

    /// Ratio-estimator batch-means standard error of [`Self::mean`].
    fn batch_stderr(&self) -> f64 {
        let (s, n) = self.total();
        let mean = s / n as f64;
        let b = BATCHES as f64;
        let n_bar = n as f64 / b;
        let ss: f64 = self
            .sum
            .iter()
            .zip(&self.count)
            .map(|(&sb, &nb)| (sb - mean * nb as f64).powi(2))
            .sum();
        (ss / (b * (b - 1.0))).sqrt() / n_bar
    }
}

/// Running sums for one scalar of the event log.
#[derive(Debug, Clone, Default)]
struct Metric {
    batches: Batches,
    sum: f64,
    sum_sq: f64,
    n: u64,
}

impl Metric {
    fn new() -> Self {
        Metric {
            batches: Batches::new(),
            ..Default::default()
        }
    }

    fn push(&mut self, block: usize, x: f64) {
        self.batches.push(block, x);
        self.sum += x;
        self.sum_sq += x * x;
        self.n += 1;
    }

    fn mean(&self) -> f64 {
        self.batches.mean()
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        if self.n >= MIN_PEAKS_FOR_BATCHES {
            return self.batches.batch_stderr();
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Mean and standard error of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    fn of(m: &Metric) -> Self {
        Estimate {
            mean: m.mean(),
            stderr: m.stderr(),
        }
    }

    /// `(mean - reference) / stderr`.
    pub fn z(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.stderr
    }
}

/// Per-system statistics over the measured window.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemStats {
    pub system: System,
    pub peaks: u64,
    pub peak: Estimate,
    pub w: Estimate,
    pub k: Estimate,
    pub y: Estimate,
    pub s: Estimate,
    /// Mean service time split by the other system's state at generation (idle, busy).
    pub s_idle: Estimate,
    pub s_busy: Estimate,
    pub delivered_idle: u64,
    pub delivered_busy: u64,
    /// Updates generated while the other was idle / busy, and how many of each got through.
    pub gen_idle: u64,
    pub gen_idle_delivered: u64,
    pub gen_busy: u64,
    pub gen_busy_delivered: u64,
    pub tx_slots: u64,
    pub busy_slots: u64,
    /// Transmitting slots in which the other system also transmitted.
    pub exposed_slots: u64,
}

impl SystemStats {
    /// Fraction of own transmitting slots shared with the other system.
    pub fn exposure(&self) -> f64 {
        ratio(self.exposed_slots, self.tx_slots)
    }

    pub fn breakdown(&self) -> PeakAoiBreakdown {
        PeakAoiBreakdown {
            e_w: self.w.mean,
            e_k: self.k.mean,
            e_y: self.y.mean,
            e_s: self.s.mean,
            avg_peak: self.peak.mean,
        }
    }

    /// Empirical delivery probability given the other was idle / busy at generation.
    pub fn delivered_fraction(&self) -> (f64, f64) {
        (
            ratio(self.gen_idle_delivered, self.gen_idle),
            ratio(self.gen_busy_delivered, self.gen_busy),
        )
    }

    /// Fraction of delivered updates generated while the other was idle.
    pub fn delivered_idle_fraction(&self) -> f64 {
        ratio(self.delivered_idle, self.delivered_idle + self.delivered_busy)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        f64::NAN
    } else {
        a as f64 / b as f64
    }
}

/// One-step joint-state counts, classified after generation and before decode.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionLog {
    pub counts: [[u64; 4]; 4],
    pub occupancy: [u64; 4],
    /// Per-block occupancy counts, for batch-means errors on the occupancy.
    pub occupancy_blocks: Vec<[u64; 4]>,
}

impl TransitionLog {
    fn new() -> Self {
        TransitionLog {
            counts: [[0; 4]; 4],
            occupancy: [0; 4],
            occupancy_blocks: vec![[0; 4]; BATCHES],
        }
    }

    /// Row-normalized transition frequencies.
    pub fn frequencies(&self) -> [[f64; 4]; 4] {
        let mut f = [[0.0; 4]; 4];
        for (i, row) in self.counts.iter().enumerate() {
            let n: u64 = row.iter().sum();
            for j in 0..4 {
                f[i][j] = ratio(row[j], n);
            }
        }
        f
    }

    /// Standard error of each transition frequency (multinomial per row).
    pub fn frequency_stderr(&self) -> [[f64; 4]; 4] {
        let f = self.frequencies();
        let mut se = [[0.0; 4]; 4];
        for i in 0..4 {
            let n: u64 = self.counts[i].iter().sum();
            for j in 0..4 {
                se[i][j] = (f[i][j] * (1.0 - f[i][j]) / n as f64).sqrt();
            }
        }
        se
    }

    pub fn occupancy_fraction(&self) -> [f64; 4] {
        let n: u64 = self.occupancy.iter().sum();
        self.occupancy.map(|c| ratio(c, n))
    }

    /// Batch-means standard error of each occupancy fraction.
    pub fn occupancy_stderr(&self) -> [f64; 4] {
        let mean = self.occupancy_fraction();
        let b = self.occupancy_blocks.len() as f64;
        let mut se = [0.0; 4];
        for (k, se_k) in se.iter_mut().enumerate() {
            let ss: f64 = self
                .occupancy_blocks
                .iter()
                .map(|blk| {
                    let n: u64 = blk.iter().sum();
                    (ratio(blk[k], n) - mean[k]).powi(2)
                })
                .sum();
            *se_k = (ss / (b * (b - 1.0))).sqrt();
        }
        se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub scheme: Scheme,
    pub mode: Mode,
    pub slots: u64,
    pub warmup: u64,
    pub seed: u64,
    pub systems: [SystemStats; 2],
    pub transitions: TransitionLog,
    pub events: Vec<DeliveryEvent>,
}

impl SimReport {
    pub fn system(&self, z: System) -> &SystemStats {
        &self.systems[z as usize]
    }
}

/// Independent random streams, one per stochastic source.
struct Streams {
    gen: [ChaCha8Rng; 2],
    link_pp: ChaCha8Rng,
    link_ss: ChaCha8Rng,
    link_sp: ChaCha8Rng,
    link_ps: ChaCha8Rng,
    decode: [ChaCha8Rng; 2],
}

impl Streams {
    fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k);
            r
        };
        Streams {
            gen: [stream(0), stream(1)],
            link_pp: stream(2),
            link_ss: stream(3),
            link_sp: stream(4),
            link_ps: stream(5),
            decode: [stream(6), stream(7)],
        }
    }
}

enum Channel {
    Fading(LinkParams),
    Abstract {
        /// Success draws indexed by `[system][other transmitting]`.
        success: [[Bernoulli; 2]; 2],
    },
}

impl Channel {
    fn abstract_from(scheme: Scheme, o: &OutageSet) -> Result<Self> {
        o.check()?;
        let b = |phi: f64| {
            Bernoulli::new(1.0 - phi).map_err(|e| Error::Numerical(format!("bad outage {phi}: {e}")))
        };
        let success = match scheme {
            // Overlay never has both transmitting; the second column is unused.
            Scheme::Overlay => [[b(o.phi_op)?, b(o.phi_op)?], [b(o.phi_os)?, b(o.phi_os)?]],
            Scheme::Underlay => [
                [b(o.phi_up)?, b(o.phi_up_hat)?],
                [b(o.phi_us)?, b(o.phi_us_hat)?],
            ],
        };
        Ok(Channel::Abstract { success })
    }
}

/// Run the fading or abstract simulation for a physical configuration.
pub fn simulate(cfg: &SystemConfig, settings: &SimSettings) -> Result<SimReport> {
    let params = LinkParams::from_config(cfg)?;
    let channel = match settings.mode {
        Mode::Fading => Channel::Fading(params),
        Mode::Abstract => Channel::abstract_from(settings.scheme, &outage_set_from_params(&params)?)?,
    };
    run(cfg.p, cfg.q, channel, settings)
}

/// Abstract-mode simulation driven directly by an outage set.
pub fn simulate_with_outages(p: f64, q: f64, outages: &OutageSet, settings: &SimSettings) -> Result<SimReport> {
    let settings = SimSettings {
        mode: Mode::Abstract,
        ..*settings
    };
    run(p, q, Channel::abstract_from(settings.scheme, outages)?, &settings)
}

struct Accum {
    peak: Metric,
    w: Metric,
    k: Metric,
    y: Metric,
    s: Metric,
    s_idle: Metric,
    s_busy: Metric,
    gen_idle: u64,
    gen_idle_delivered: u64,
    gen_busy: u64,
    gen_busy_delivered: u64,
    tx_slots: u64,
    busy_slots: u64,
    exposed_slots: u64,
}

impl Accum {
    fn new() -> Self {
        Accum {
            peak: Metric::new(),
            w: Metric::new(),
            k: Metric::new(),
            y: Metric::new(),
            s: Metric::new(),
            s_idle: Metric::new(),
            s_busy: Metric::new(),
            gen_idle: 0,
            gen_idle_delivered: 0,
            gen_busy: 0,
            gen_busy_delivered: 0,
            tx_slots: 0,
            busy_slots: 0,
            exposed_slots: 0,
        }
    }

    fn finish(self, system: System) -> SystemStats {
        SystemStats {
            system,
            peaks: self.peak.n,
            peak: Estimate::of(&self.peak),
            w: Estimate::of(&self.w),
            k: Estimate::of(&self.k),
            y: Estimate::of(&self.y),
            s: Estimate::of(&self.s),
            s_idle: Estimate::of(&self.s_idle),
            s_busy: Estimate::of(&self.s_busy),
            delivered_idle: self.s_idle.n,
            delivered_busy: self.s_busy.n,
            gen_idle: self.gen_idle,
            gen_idle_delivered: self.gen_idle_delivered,
            gen_busy: self.gen_busy,
            gen_busy_delivered: self.gen_busy_delivered,
            tx_slots: self.tx_slots,
            busy_slots: self.busy_slots,
            exposed_slots: self.exposed_slots,
        }
    }
}

fn run(p: f64, q: f64, channel: Channel, settings: &SimSettings) -> Result<SimReport> {
    settings.check()?;
    let rates = [clamp_rate("p", p)?, clamp_rate("q", q)?];
    let gen = [
        Bernoulli::new(rates[0]).map_err(|e| Error::domain(e.to_string()))?,
        Bernoulli::new(rates[1]).map_err(|e| Error::domain(e.to_string()))?,
    ];
    let mut rng = Streams::new(settings.seed);
    let mut st = [SlotState::default(); 2];
    let mut acc = [Accum::new(), Accum::new()];
    let mut log = TransitionLog::new();
    let mut events = Vec::new();
    let mut prev_state: Option<usize> = None;

    let warmup = settings.warmup;
    let measured = settings.slots - warmup;
    let block_of = |t: u64| (((t - warmup) as u128 * BATCHES as u128) / measured as u128) as usize;

    for t in 0..settings.slots {
        let measuring = t >= warmup;

        // Generation; a new update preempts the one in service.
        let mut fresh = [false; 2];
        for z in 0..2 {
            if gen[z].sample(&mut rng.gen[z]) {
                fresh[z] = true;
                let s = &mut st[z];
                if s.busy && s.gen_slot >= warmup {
                    // Preempted update: counted as generated, never delivered.
                    let a = &mut acc[z];
                    if s.gen_other_busy {
                        a.gen_busy += 1;
                    } else {
                        a.gen_idle += 1;
                    }
                }
                s.busy = true;
                s.gen_slot = t;
                if s.first_gen.is_none() {
                    s.first_gen = Some(t);
                }
            }
        }
        for z in 0..2 {
            if fresh[z] {
                st[z].gen_other_busy = st[1 - z].busy;
            }
        }

        let state = state_index(st[0].busy, st[1].busy);
        if measuring {
            if let Some(prev) = prev_state {
                log.counts[prev][state] += 1;
            }
            log.occupancy[state] += 1;
            log.occupancy_blocks[block_of(t)][state] += 1;
            for z in 0..2 {
                acc[z].busy_slots += st[z].busy as u64;
            }
        }
        prev_state = measuring.then_some(state);

        // Access.
        let tx_p = st[0].busy;
        let tx_s = match settings.scheme {
            Scheme::Overlay => st[1].busy && !tx_p,
            Scheme::Underlay => st[1].busy,
        };
        assert!(
            settings.scheme == Scheme::Underlay || !(tx_p && tx_s),
            "overlay access let both systems transmit in slot {t}"
        );
        let tx = [tx_p, tx_s];
        if measuring {
            for z in 0..2 {
                if tx[z] {
                    acc[z].tx_slots += 1;
                    acc[z].exposed_slots += tx[1 - z] as u64;
                }
            }
        }

        // Decode.
        let ok = match &channel {
            Channel::Abstract { success } => {
                let mut ok = [false; 2];
                for z in 0..2 {
                    if tx[z] {
                        ok[z] = success[z][tx[1 - z] as usize].sample(&mut rng.decode[z]);
                    }
                }
                ok
            }
            Channel::Fading(l) => decode_fading(l, settings.scheme, tx, &mut rng),
        };

        // Deliveries and age update.
        for z in 0..2 {
            let system = System::BOTH[z];
            let s = &mut st[z];
            if !ok[z] {
                if let Some(a) = s.aoi.as_mut() {
                    *a += 1;
                }
                continue;
            }
            let g = s.gen_slot;
            let first = s.first_gen.expect("delivery without a generation");
            if let (Some(d_prev), Some(current)) = (s.last_delivery, s.aoi) {
                let peak = t - s.last_delivered_gen;
                debug_assert_eq!(peak, current);
                let ev = DeliveryEvent {
                    system,
                    g,
                    d: t,
                    w: first - d_prev - 1,
                    k: t - first + 1,
                    s: t - g + 1,
                    y: t - d_prev,
                    peak,
                    other_busy_at_gen: s.gen_other_busy,
                };
                debug_assert_eq!(ev.y, ev.w + ev.k);
                debug_assert_eq!(ev.peak, s.last_service + ev.y - 1);
                if d_prev >= warmup {
                    let a = &mut acc[z];
                    let b = block_of(t);
                    a.peak.push(b, ev.peak as f64);
                    a.w.push(b, ev.w as f64);
                    a.k.push(b, ev.k as f64);
                    a.y.push(b, ev.y as f64);
                    a.s.push(b, ev.s as f64);
                    if ev.other_busy_at_gen {
                        a.s_busy.push(b, ev.s as f64);
                    } else {
                        a.s_idle.push(b, ev.s as f64);
                    }
                    if settings.record_log {
                        events.push(ev);
                    }
                }
            }
            if g >= warmup {
                let a = &mut acc[z];
                if s.gen_other_busy {
                    a.gen_busy += 1;
                    a.gen_busy_delivered += 1;
                } else {
                    a.gen_idle += 1;
                    a.gen_idle_delivered += 1;
                }
            }
            s.busy = false;
            s.first_gen = None;
            s.last_delivery = Some(t);
            s.last_delivered_gen = g;
            s.last_service = t - g + 1;
            s.aoi = Some(t + 1 - g);
        }
    }

    let [a_p, a_s] = acc;
    Ok(SimReport {
        scheme: settings.scheme,
        mode: settings.mode,
        slots: settings.slots,
        warmup,
        seed: settings.seed,
        systems: [a_p.finish(System::Primary), a_s.finish(System::Secondary)],
        transitions: log,
        events,
    })
}

fn exp(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e * mean
}

fn decode_fading(l: &LinkParams, scheme: Scheme, tx: [bool; 2], rng: &mut Streams) -> [bool; 2] {
    let g = &l.gains;
    let mut ok = [false; 2];
    let ps = match scheme {
        Scheme::Overlay => tx[1].then_some((l.p_s, 0.0)),
        Scheme::Underlay => tx[1].then(|| {
            let h_sp = exp(&mut rng.link_sp, g.omega_sp);
            let ps = l.underlay_secondary_power(h_sp);
            assert!(
                ps * h_sp <= l.ic * (1.0 + 1e-12),
                "interference {} exceeds the cap {}",
                ps * h_sp,
                l.ic
            );
            (ps, h_sp)
        }),
    };
    if tx[0] {
        let h_pp = exp(&mut rng.link_pp, g.omega_pp);
        let interference = ps.map_or(0.0, |(ps, h_sp)| ps * h_sp);
        ok[0] = l.p_p * h_pp >= l.sigma_p * (l.n0 + interference);
    }
    if let Some((ps, _)) = ps {
        let h_ss = exp(&mut rng.link_ss, g.omega_ss);
        let interference = if tx[0] {
            l.p_p * exp(&mut rng.link_ps, g.omega_ps)
        } else {
            0.0
        };
        ok[1] = ps * h_ss >= l.sigma_s * (l.n0 + interference);
    }
    ok
}

/// Joint-state transition counts from an underlay run.
pub fn empirical_transition_log(cfg: &SystemConfig, settings: &SimSettings) -> Result<TransitionLog> {
    if settings.scheme != Scheme::Underlay {
        return Err(Error::domain("transition log needs the underlay scheme"));
    }
    Ok(simulate(cfg, settings)?.transitions)
}

/// Fading vs abstract mean peak age for one system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAgreement {
    pub system: System,
    pub fading: Estimate,
    pub abstract_: Estimate,
}

impl ModeAgreement {
    /// Difference over the joint standard error.
    pub fn z(&self) -> f64 {
        (self.fading.mean - self.abstract_.mean)
            / (self.fading.stderr.powi(2) + self.abstract_.stderr.powi(2)).sqrt()
    }
}

/// Run both decode modes and compare their mean peak ages.
pub fn simulate_abstract_vs_fading(
    cfg: &SystemConfig,
    scheme: Scheme,
    slots: u64,
    seeds: (u64, u64),
) -> Result<[ModeAgreement; 2]> {
    let fading = simulate(cfg, &SimSettings::new(scheme, Mode::Fading, slots, seeds.0))?;
    let abs = simulate(cfg, &SimSettings::new(scheme, Mode::Abstract, slots, seeds.1))?;
    Ok(System::BOTH.map(|z| ModeAgreement {
        system: z,
        fading: fading.system(z).peak,
        abstract_: abs.system(z).peak,
    }))
}

/// Write delivery events as CSV: `system,g,d,W,K,S,Y,peak`.
pub fn write_event_log<W: Write>(events: &[DeliveryEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["system", "g", "d", "W", "K", "S", "Y", "peak"])?;
    for e in events {
        w.write_record([
            e.system.label().to_string(),
            e.g.to_string(),
            e.d.to_string(),
            e.w.to_string(),
            e.k.to_string(),
            e.s.to_string(),
            e.y.to_string(),
            e.peak.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
