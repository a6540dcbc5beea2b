//! High-SNR forms: the primary's outage is taken to zero, which decouples the
//! primary and leaves the secondary's age in closed form for both schemes.

use std::fmt;

use crate::error::{Error, Result};
use crate::link::OutageSet;
use crate::model::{assemble_peak_aoi, check_outage, clamp_rate, PeakAoiBreakdown, Scheme, System};

/// `|p - p*|` at or below this is reported as a tie.
pub const TIE_EPS: f64 = 1e-12;

/// Primary average peak age at high SNR: `1/p`.
pub fn asym_peak_primary(p: f64) -> Result<f64> {
    Ok(1.0 / clamp_rate("p", p)?)
}

/// Secondary average peak age under overlay access at high primary SNR.
pub fn asym_peak_secondary_overlay(p: f64, q: f64, phi_os: f64) -> Result<f64> {
    let p = clamp_rate("p", p)?;
    let q = clamp_rate("q", q)?;
    let phi = check_outage("phi_os", phi_os)?;
    Ok((1.0 - 2.0 * q) / q
        + 1.0 / ((1.0 - phi) * (1.0 - p))
        + 1.0 / (q + (1.0 - p) * (1.0 - q) * (1.0 - phi)))
}

/// Secondary average peak age under underlay access at high primary SNR.
pub fn asym_peak_secondary_underlay(p: f64, q: f64, phi_us: f64, phi_us_hat: f64) -> Result<f64> {
    let p = clamp_rate("p", p)?;
    let q = clamp_rate("q", q)?;
    let phi = check_outage("phi_us", phi_us)?;
    let phi_hat = check_outage("phi_us_hat", phi_us_hat)?;
    // Per-slot success probability blended over the primary's activity.
    let t = (1.0 - p) * (1.0 - phi) + p * (1.0 - phi_hat);
    Ok((1.0 - 2.0 * q) / q + 1.0 / t + 1.0 / (q + (1.0 - q) * t))
}

/// Interval breakdown behind the high-SNR forms. The primary is the same
/// under both schemes; the secondary's per-slot success is `1 - phi_os` under
/// overlay (but only in primary-idle slots) and the blended term under underlay.
pub fn asym_breakdown(scheme: Scheme, system: System, p: f64, q: f64, o: &OutageSet) -> Result<PeakAoiBreakdown> {
    let p = clamp_rate("p", p)?;
    let q = clamp_rate("q", q)?;
    o.check()?;
    let b = match (system, scheme) {
        (System::Primary, _) => assemble_peak_aoi(1.0, (1.0 - p) / p, 1.0)?,
        (System::Secondary, Scheme::Overlay) => {
            let succ = 1.0 - o.phi_os;
            assemble_peak_aoi(
                1.0 / (q + (1.0 - p) * (1.0 - q) * succ),
                (1.0 - q) / q,
                1.0 / (succ * (1.0 - p)),
            )?
        }
        (System::Secondary, Scheme::Underlay) => {
            let t = (1.0 - p) * (1.0 - o.phi_us) + p * (1.0 - o.phi_us_hat);
            assemble_peak_aoi(1.0 / (q + (1.0 - q) * t), (1.0 - q) / q, 1.0 / t)?
        }
    };
    Ok(b)
}

/// Primary rate at which both schemes give the secondary the same
/// high-SNR peak age.
pub fn critical_rate(phi_os: f64, phi_us: f64, phi_us_hat: f64) -> Result<f64> {
    let phi_os = check_outage("phi_os", phi_os)?;
    let phi_us = check_outage("phi_us", phi_us)?;
    let phi_us_hat = check_outage("phi_us_hat", phi_us_hat)?;
    if phi_os > phi_us {
        return Err(Error::domain(format!(
            "critical rate needs phi_os <= phi_us, got {phi_os} > {phi_us}"
        )));
    }
    let gap = phi_us - phi_os;
    Ok((gap / (1.0 - phi_us_hat + gap)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recommendation {
    Overlay,
    Underlay,
    Tie,
}

impl Recommendation {
    pub fn label(self) -> &'static str {
        match self {
            Recommendation::Overlay => "overlay",
            Recommendation::Underlay => "underlay",
            Recommendation::Tie => "tie",
        }
    }
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Overlay below the critical rate, underlay above it.
pub fn recommend_scheme(p: f64, p_star: f64) -> Recommendation {
    if (p - p_star).abs() <= TIE_EPS {
        Recommendation::Tie
    } else if p < p_star {
        Recommendation::Overlay
    } else {
        Recommendation::Underlay
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeComparison {
    pub p_star: f64,
    pub recommended: Recommendation,
    pub aoi_overlay: f64,
    pub aoi_underlay: f64,
}

impl SchemeComparison {
    pub fn at(p: f64, q: f64, phi_os: f64, phi_us: f64, phi_us_hat: f64) -> Result<Self> {
        let p_star = critical_rate(phi_os, phi_us, phi_us_hat)?;
        Ok(SchemeComparison {
            p_star,
            recommended: recommend_scheme(p, p_star),
            aoi_overlay: asym_peak_secondary_overlay(p, q, phi_os)?,
            aoi_underlay: asym_peak_secondary_underlay(p, q, phi_us, phi_us_hat)?,
        })
    }
}
