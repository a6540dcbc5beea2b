//! Path-loss model and per-slot outage probabilities under Rayleigh fading.
//!
//! All channel power gains are exponential with the mean given by
//! [`avg_gain`]. A transmission at rate `R` fails when its SNR (or SINR) is
//! below `2^R - 1`.

use crate::error::{Error, Result};
use crate::expint::scaled_e1;
use crate::model::{dbm_to_linear, SystemConfig};

/// Average channel power gain at distance `d` metres: `1e-3 / (1 + d^omega)`.
///
/// The `1e-3` is a 30 dB loss at the 1 m reference distance.
pub fn avg_gain(d: f64, omega: f64) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(Error::domain(format!("distance must be positive, got {d}")));
    }
    Ok(1e-3 / (1.0 + d.powf(omega)))
}

/// Mean power gains of the four links. `sp` is SD -> PAP, `ps` is PD -> SAP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    pub omega_pp: f64,
    pub omega_ss: f64,
    pub omega_sp: f64,
    pub omega_ps: f64,
}

impl LinkGains {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        Ok(LinkGains {
            omega_pp: avg_gain(cfg.d_pp, cfg.omega)?,
            omega_ss: avg_gain(cfg.d_ss, cfg.omega)?,
            omega_sp: avg_gain(cfg.d_sp, cfg.omega)?,
            omega_ps: avg_gain(cfg.d_ps, cfg.omega)?,
        })
    }
}

/// Linear-domain view of a [`SystemConfig`]: powers in mW, SNR thresholds,
/// mean gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub p_p: f64,
    pub p_s: f64,
    pub n0: f64,
    /// Interference cap at the primary AP, mW.
    pub ic: f64,
    pub sigma_p: f64,
    pub sigma_s: f64,
    pub gains: LinkGains,
}

impl LinkParams {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let n0 = dbm_to_linear(cfg.n0_dbm);
        Ok(LinkParams {
            p_p: dbm_to_linear(cfg.p_p_dbm),
            p_s: dbm_to_linear(cfg.p_s_dbm),
            n0,
            ic: cfg.ic_over_n0 * n0,
            sigma_p: cfg.r_p.exp2() - 1.0,
            sigma_s: cfg.r_s.exp2() - 1.0,
            gains: LinkGains::from_config(cfg)?,
        })
    }

    /// Secondary transmit power under the underlay cap for a given SD->PAP gain.
    pub fn underlay_secondary_power(&self, h_sp: f64) -> f64 {
        (self.ic / h_sp).min(self.p_s)
    }
}

/// The six per-slot decode-failure probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageSet {
    pub phi_op: f64,
    pub phi_os: f64,
    pub phi_up: f64,
    pub phi_us: f64,
    /// Primary outage while the secondary transmits concurrently.
    pub phi_up_hat: f64,
    /// Secondary outage while the primary transmits concurrently.
    pub phi_us_hat: f64,
}

impl OutageSet {
    /// Build from raw probabilities, checking each lies in `[0, 1)`.
    pub fn new(
        phi_op: f64,
        phi_os: f64,
        phi_us: f64,
        phi_up_hat: f64,
        phi_us_hat: f64,
    ) -> Result<Self> {
        let set = OutageSet {
            phi_op,
            phi_os,
            phi_up: phi_op,
            phi_us,
            phi_up_hat,
            phi_us_hat,
        };
        set.check()?;
        Ok(set)
    }

    /// All six outages equal to zero (error-free links).
    pub fn zero() -> Self {
        OutageSet {
            phi_op: 0.0,
            phi_os: 0.0,
            phi_up: 0.0,
            phi_us: 0.0,
            phi_up_hat: 0.0,
            phi_us_hat: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("phi_op", self.phi_op),
            ("phi_os", self.phi_os),
            ("phi_up", self.phi_up),
            ("phi_us", self.phi_us),
            ("phi_up_hat", self.phi_up_hat),
            ("phi_us_hat", self.phi_us_hat),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Numerical(format!("{name} = {v} is not in [0, 1)")));
            }
        }
        Ok(())
    }
}

/// `1 - exp(-x)` without cancellation for small `x`.
fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Overlay outages `(phi_op, phi_os)`: full peak power, no interference.
pub fn outage_overlay(cfg: &SystemConfig) -> Result<(f64, f64)> {
    let l = LinkParams::from_config(cfg)?;
    Ok(overlay_from_params(&l))
}

fn overlay_from_params(l: &LinkParams) -> (f64, f64) {
    let phi_op = one_minus_exp_neg(l.n0 * l.sigma_p / (l.p_p * l.gains.omega_pp));
    let phi_os = one_minus_exp_neg(l.n0 * l.sigma_s / (l.p_s * l.gains.omega_ss));
    (phi_op, phi_os)
}

/// Underlay secondary outage without primary interference, with the transmit
/// power `min(I_C / H_sp, P_S)` averaged over `H_sp`.
pub fn outage_underlay_secondary(cfg: &SystemConfig) -> Result<f64> {
    Ok(underlay_secondary_from_params(&LinkParams::from_config(cfg)?))
}

fn underlay_secondary_from_params(l: &LinkParams) -> f64 {
    let g = &l.gains;
    let x_s = l.sigma_s * l.n0 / (l.p_s * g.omega_ss);
    let clip = (-l.ic / (l.p_s * g.omega_sp)).exp();
    let ratio = g.omega_ss * l.ic / (g.omega_sp * l.sigma_s * l.n0);
    // 1 - [1 - clip/(ratio+1)] e^{-x_s}
    one_minus_exp_neg(x_s) + (-x_s).exp() * clip / (ratio + 1.0)
}

/// Primary outage while the secondary transmits; the interference at the PAP
/// is `min(I_C, P_S H_sp)`.
pub fn outage_underlay_primary_interf(cfg: &SystemConfig) -> Result<f64> {
    Ok(underlay_primary_interf_from_params(&LinkParams::from_config(cfg)?))
}

fn underlay_primary_interf_from_params(l: &LinkParams) -> f64 {
    let g = &l.gains;
    let snr_scale = l.p_p * g.omega_pp;
    // No-clip exponent and fully-clipped exponent.
    let x0 = l.sigma_p * l.n0 / snr_scale;
    let x1 = l.ic / (l.p_s * g.omega_sp) + l.sigma_p * (l.ic + l.n0) / snr_scale;
    let r = l.sigma_p * l.p_s * g.omega_sp / snr_scale;
    (one_minus_exp_neg(x0) + r * one_minus_exp_neg(x1)) / (1.0 + r)
}

/// Secondary outage while the primary transmits: power-capped secondary,
/// SINR against the primary's signal at the SAP.
pub fn outage_underlay_secondary_interf(cfg: &SystemConfig) -> Result<f64> {
    underlay_secondary_interf_from_params(&LinkParams::from_config(cfg)?)
}

fn underlay_secondary_interf_from_params(l: &LinkParams) -> Result<f64> {
    let g = &l.gains;
    let phi_us = underlay_secondary_from_params(l);
    let x_s = l.sigma_s * l.n0 / (l.p_s * g.omega_ss);
    let clip_at = l.ic / l.p_s;
    let p_clip = (-clip_at / g.omega_sp).exp();
    // Rate of the exponential in H_sp after the cap binds, and the SINR
    // coefficient of the primary's interference term.
    let a = 1.0 / g.omega_sp + l.sigma_s * l.n0 / (l.ic * g.omega_ss);
    let b = l.sigma_s * l.p_p * g.omega_ps / (l.ic * g.omega_ss);
    let gamma = l.sigma_s * l.p_p * g.omega_ps / (l.p_s * g.omega_ss);
    let eta = (l.ic * g.omega_ss / g.omega_sp + l.sigma_s * l.n0)
        * (1.0 / (l.p_s * g.omega_ss) + 1.0 / (l.p_p * g.omega_ps * l.sigma_s));
    if !eta.is_finite() {
        return Err(Error::Numerical(format!("eta is not finite ({eta})")));
    }
    let scaled = scaled_e1(eta)?;
    // Loss relative to the interference-free case, split over the unclipped
    // and clipped power regions. Both pieces are nonnegative.
    let unclipped = (1.0 - p_clip) * gamma / (1.0 + gamma);
    let clipped = ((1.0 / a - scaled / b) / g.omega_sp).max(0.0);
    let phi = phi_us + (-x_s).exp() * (unclipped + p_clip * clipped);
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::Numerical(format!("secondary outage with interference = {phi}")));
    }
    Ok(phi.min(1.0 - f64::EPSILON))
}

/// Evaluate all six outages for a configuration.
pub fn outage_set(cfg: &SystemConfig) -> Result<OutageSet> {
    let l = LinkParams::from_config(cfg)?;
    outage_set_from_params(&l)
}

pub fn outage_set_from_params(l: &LinkParams) -> Result<OutageSet> {
    let (phi_op, phi_os) = overlay_from_params(l);
    let phi_us = underlay_secondary_from_params(l);
    let phi_up_hat = underlay_primary_interf_from_params(l);
    let phi_us_hat = underlay_secondary_interf_from_params(l)?;
    OutageSet::new(phi_op, phi_os, phi_us, phi_up_hat, phi_us_hat)
}
