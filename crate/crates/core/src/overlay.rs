//! Closed-form average peak age under overlay access.
//!
//! The primary is unaffected by the secondary. The secondary can only use
//! slots in which the primary is silent, so its busy interval and service
//! time depend on whether the primary is idle or busy in the first slot.
//! Each conditional pair is defined by a 2x2 fixed-point recursion; both the
//! recursion and its solved closed form are implemented and cross-checked.

use crate::error::{Error, Result};
use crate::linear::Linear2;
use crate::model::{assemble_peak_aoi, check_outage, clamp_rate, PeakAoiBreakdown};

/// Relative tolerance for the debug-build closed-form vs recursion check.
const CROSS_CHECK_RTOL: f64 = 1e-9;

fn cross_check(what: &str, closed: f64, solved: f64) {
    debug_assert!(
        (closed - solved).abs() <= CROSS_CHECK_RTOL * solved.abs().max(1.0),
        "{what}: closed form {closed} disagrees with recursion {solved}"
    );
}

fn open_rate(name: &str, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::domain(format!("{name} must lie in (0, 1), got {x}")));
    }
    Ok(x)
}

/// PMF of the waiting time: `(1-p)^k p`, `k >= 0`.
pub fn pmf_geometric_wait(p: f64, k: i64) -> Result<f64> {
    let p = open_rate("p", p)?;
    if k < 0 {
        return Err(Error::domain(format!("waiting time must be >= 0, got {k}")));
    }
    Ok((1.0 - p).powi(k as i32) * p)
}

/// PMF of the primary busy interval: `phi^(k-1) (1-phi)`, `k >= 1`.
pub fn pmf_busy_primary(phi: f64, k: i64) -> Result<f64> {
    let phi = check_outage("phi", phi)?;
    if k < 1 {
        return Err(Error::domain(format!("busy interval must be >= 1, got {k}")));
    }
    Ok(phi.powi((k - 1) as i32) * (1.0 - phi))
}

/// PMF of the delivered primary update's service time,
/// `(phi (1-p))^(k-1) (1 - phi + p phi)`, `k >= 1`.
pub fn pmf_service_primary(p: f64, phi: f64, k: i64) -> Result<f64> {
    let p = open_rate("p", p)?;
    let phi = check_outage("phi", phi)?;
    if k < 1 {
        return Err(Error::domain(format!("service time must be >= 1, got {k}")));
    }
    Ok((phi * (1.0 - p)).powi((k - 1) as i32) * (1.0 - phi + p * phi))
}

/// Average peak age of the primary under overlay access.
pub fn peak_aoi_overlay_primary(p: f64, phi_op: f64) -> Result<PeakAoiBreakdown> {
    let p = clamp_rate("p", p)?;
    let phi = check_outage("phi_op", phi_op)?;
    let e_w = (1.0 - p) / p;
    let e_k = 1.0 / (1.0 - phi);
    let e_s = 1.0 / (1.0 - phi + p * phi);
    let b = assemble_peak_aoi(e_s, e_w, e_k)?;
    cross_check(
        "overlay primary peak",
        (phi - p * phi) / (1.0 - phi + p * phi) + (1.0 - phi + p * phi) / (p - p * phi),
        b.avg_peak,
    );
    Ok(b)
}

#[derive(Debug, Clone, Copy)]
struct Inputs {
    p: f64,
    q: f64,
    phi_op: f64,
    phi_os: f64,
}

impl Inputs {
    fn new(p: f64, q: f64, phi_op: f64, phi_os: f64) -> Result<Self> {
        Ok(Inputs {
            p: clamp_rate("p", p)?,
            q: clamp_rate("q", q)?,
            phi_op: check_outage("phi_op", phi_op)?,
            phi_os: check_outage("phi_os", phi_os)?,
        })
    }
}

/// Probability that the first slot of the secondary busy interval finds the
/// primary idle / busy.
pub fn overlay_ks_probabilities(p: f64, q: f64, phi_op: f64) -> Result<(f64, f64)> {
    let x = Inputs::new(p, q, phi_op, 0.0)?;
    Ok(ks_probabilities(&x))
}

fn ks_probabilities(x: &Inputs) -> (f64, f64) {
    let idle_weight = (1.0 - x.p) * (1.0 - x.phi_op + x.phi_op * x.q);
    let den = idle_weight + x.p;
    (idle_weight / den, x.p / den)
}

/// Fixed-point recursion for `(E[K_S | idle start], E[K_S | busy start])`.
pub fn ks_system(p: f64, q: f64, phi_op: f64, phi_os: f64) -> Result<Linear2> {
    let x = Inputs::new(p, q, phi_op, phi_os)?;
    Ok(ks_system_inner(&x))
}

fn ks_system_inner(x: &Inputs) -> Linear2 {
    let Inputs { p, phi_op, phi_os, .. } = *x;
    let stay_busy = phi_op + (1.0 - phi_op) * p;
    Linear2::from_fixed_point(
        [1.0, 1.0],
        [
            [phi_os * (1.0 - p), phi_os * p],
            [(1.0 - phi_op) * (1.0 - p), stay_busy],
        ],
    )
}

/// `(E[K_S | idle start], E[K_S | busy start], E[K_S])`.
pub fn overlay_ks_expectations(p: f64, q: f64, phi_op: f64, phi_os: f64) -> Result<(f64, f64, f64)> {
    let x = Inputs::new(p, q, phi_op, phi_os)?;
    Ok(ks_expectations(&x))
}

fn ks_expectations(x: &Inputs) -> (f64, f64, f64) {
    let Inputs { p, phi_op, phi_os, .. } = *x;
    let den = (1.0 - phi_op) * (1.0 - phi_os) * (1.0 - p);
    let idle = ((1.0 - phi_op) * (1.0 - p) + phi_os * p) / den;
    let busy = ((1.0 - phi_op) * (1.0 - p) + 1.0 - phi_os + phi_os * p) / den;
    if cfg!(debug_assertions) {
        if let Ok(s) = ks_system_inner(x).solve() {
            cross_check("E[K_S|I]", idle, s[0]);
            cross_check("E[K_S|B]", busy, s[1]);
        }
    }
    let (pi, pb) = ks_probabilities(x);
    (idle, busy, pi * idle + pb * busy)
}

/// Expected secondary inter-delivery time under overlay access.
pub fn e_y_secondary_overlay(p: f64, q: f64, phi_op: f64, phi_os: f64) -> Result<f64> {
    let x = Inputs::new(p, q, phi_op, phi_os)?;
    Ok(e_y_secondary(&x))
}

fn e_y_secondary(x: &Inputs) -> f64 {
    let Inputs { p, q, phi_op, phi_os } = *x;
    let den = (1.0 - p) * (1.0 - phi_op + phi_op * q) + p;
    let third = (p - phi_op * phi_os * p * (1.0 - p) * (1.0 - q))
        / ((1.0 - phi_op) * (1.0 - phi_os) * (1.0 - p) * den);
    let e_y = (1.0 - q) / q + 1.0 / (1.0 - phi_os) + third;
    cross_check("E[Y_S]", e_y, (1.0 - q) / q + ks_expectations(x).2);
    e_y
}

/// Conditional quantities behind the secondary's overlay service time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlayConditionals {
    pub pr_iks: f64,
    pub pr_bks: f64,
    pub e_ks_idle: f64,
    pub e_ks_busy: f64,
    /// Probability a secondary update is generated while the primary is idle / busy.
    pub pr_is: f64,
    pub pr_bs: f64,
    /// Probability such an update is eventually delivered (not preempted).
    pub pr_phi_i: f64,
    pub pr_phi_b: f64,
    /// Probability a delivered update was generated while the primary was idle / busy.
    pub pr_iss: f64,
    pub pr_bss: f64,
    pub e_ss_idle: f64,
    pub e_ss_busy: f64,
}

/// Fixed-point recursion for `(Pr{delivered | idle gen}, Pr{delivered | busy gen})`.
pub fn phi_system(p: f64, q: f64, phi_op: f64, phi_os: f64) -> Result<Linear2> {
    let x = Inputs::new(p, q, phi_op, phi_os)?;
    Ok(phi_system_inner(&x))
}

fn phi_system_inner(x: &Inputs) -> Linear2 {
    let Inputs { p, q, phi_op, phi_os } = *x;
    Linear2::from_fixed_point(
        [1.0 - phi_os, 0.0],
        [
            [phi_os * (1.0 - p) * (1.0 - q), phi_os * p * (1.0 - q)],
            [
                (1.0 - phi_op) * (1.0 - p) * (1.0 - q),
                (phi_op + (1.0 - phi_op) * p) * (1.0 - q),
            ],
        ],
    )
}

fn phi_closed(x: &Inputs) -> (f64, f64) {
    let Inputs { p, q, phi_op, phi_os } = *x;
    let den = q / ((1.0 - phi_os) * (1.0 - p) * (1.0 - q)) + 1.0 - phi_op
        - q * phi_op * phi_os / (1.0 - phi_os);
    let idle = (q / ((1.0 - p) * (1.0 - q)) + 1.0 - phi_op) / den;
    let busy = (1.0 - phi_op) / den;
    if cfg!(debug_assertions) {
        if let Ok(s) = phi_system_inner(x).solve() {
            cross_check("Pr{Phi|I}", idle, s[0]);
            cross_check("Pr{Phi|B}", busy, s[1]);
        }
    }
    (idle, busy)
}

/// Fixed-point recursion for `(E[S_S | idle start], E[S_S | busy start])`
/// given the delivery probabilities `(pr_phi_i, pr_phi_b)`.
pub fn service_system(p: f64, q: f64, phi_op: f64, phi_os: f64) -> Result<Linear2> {
    let x = Inputs::new(p, q, phi_op, phi_os)?;
    Ok(service_system_inner(&x, phi_closed(&x)))
}

fn service_system_inner(x: &Inputs, (phi_i, phi_b): (f64, f64)) -> Linear2 {
    let Inputs { p, q, phi_op, phi_os } = *x;
    let m11 = phi_os * (1.0 - p) * (1.0 - q);
    let m12 = phi_os * p * (1.0 - q) * phi_b / phi_i;
    let m21 = (1.0 - phi_op) * (1.0 - p) * (1.0 - q) * phi_i / phi_b;
    let m22 = (phi_op + p - p * phi_op) * (1.0 - q);
    Linear2::from_fixed_point(
        [(1.0 - phi_os) / phi_i + m11 + m12, m21 + m22],
        [[m11, m12], [m21, m22]],
    )
}

fn conditionals(x: &Inputs) -> OverlayConditionals {
    let Inputs { p, q, phi_op, phi_os } = *x;
    let (pr_iks, pr_bks) = ks_probabilities(x);
    let (e_ks_idle, e_ks_busy, _) = ks_expectations(x);

    let pr_bs = p / (1.0 - phi_op + p * phi_op);
    let pr_is = 1.0 - pr_bs;
    let (pr_phi_i, pr_phi_b) = phi_closed(x);

    let d = q + (1.0 - phi_op) * (1.0 - p) * (1.0 - q);
    let pr_iss = d / (d + p - p * q);
    let pr_bss = (p - p * q) / (d + p - p * q);
    cross_check(
        "Pr{I_SS}",
        pr_iss,
        pr_is * pr_phi_i / (pr_is * pr_phi_i + pr_bs * pr_phi_b),
    );

    let ratio = pr_phi_b / pr_phi_i;
    let e_ss_idle = (1.0 + phi_os * p * (1.0 - q) * ratio / d)
        / (1.0 - phi_os * (1.0 - q) * (1.0 - p + p * ratio));
    let e_ss_busy = e_ss_idle + 1.0 / d;
    if cfg!(debug_assertions) {
        if let Ok(s) = service_system_inner(x, (pr_phi_i, pr_phi_b)).solve() {
            cross_check("E[S_S|I]", e_ss_idle, s[0]);
            cross_check("E[S_S|B]", e_ss_busy, s[1]);
        }
    }

    OverlayConditionals {
        pr_iks,
        pr_bks,
        e_ks_idle,
        e_ks_busy,
        pr_is,
        pr_bs,
        pr_phi_i,
        pr_phi_b,
        pr_iss,
        pr_bss,
        e_ss_idle,
        e_ss_busy,
    }
}

/// All conditional probabilities and expectations in one pass.
pub fn overlay_conditionals(p: f64, q: f64, phi_op: f64, phi_os: f64) -> Result<OverlayConditionals> {
    Ok(conditionals(&Inputs::new(p, q, phi_op, phi_os)?))
}

/// `(pr_phi_i, pr_phi_b, pr_is, pr_bs, pr_iss, pr_bss)`.
pub fn overlay_phi_conditionals(
    p: f64,
    q: f64,
    phi_op: f64,
    phi_os: f64,
) -> Result<(f64, f64, f64, f64, f64, f64)> {
    let c = overlay_conditionals(p, q, phi_op, phi_os)?;
    Ok((c.pr_phi_i, c.pr_phi_b, c.pr_is, c.pr_bs, c.pr_iss, c.pr_bss))
}

/// Expected service time of a delivered secondary update.
pub fn e_s_secondary_overlay(p: f64, q: f64, phi_op: f64, phi_os: f64) -> Result<f64> {
    let x = Inputs::new(p, q, phi_op, phi_os)?;
    Ok(e_s_secondary(&x))
}

fn e_s_secondary(x: &Inputs) -> f64 {
    let Inputs { p, q, phi_op, phi_os } = *x;
    let num = q / (1.0 - q)
        + (1.0 - phi_op) * (1.0 - p)
        + p * (1.0 - phi_op * phi_os * (1.0 - p) * (1.0 - q))
            / (1.0 - phi_op * (1.0 - p) * (1.0 - q));
    let den = q / (1.0 - q) + (1.0 - p) * (1.0 - phi_op - phi_os * (1.0 - phi_op + phi_op * q));
    let e_s = num / den;
    if cfg!(debug_assertions) {
        let c = conditionals(x);
        cross_check("E[S_S]", e_s, c.pr_iss * c.e_ss_idle + c.pr_bss * c.e_ss_busy);
    }
    e_s
}

/// Average peak age of the secondary under overlay access.
pub fn peak_aoi_overlay_secondary(p: f64, q: f64, phi_op: f64, phi_os: f64) -> Result<PeakAoiBreakdown> {
    let x = Inputs::new(p, q, phi_op, phi_os)?;
    let e_w = (1.0 - x.q) / x.q;
    let e_y = e_y_secondary(&x);
    assemble_peak_aoi(e_s_secondary(&x), e_w, e_y - e_w)
}
