//! Evaluate every closed form for one configuration.

use crate::asymptotics::asym_breakdown;
use crate::error::Result;
use crate::link::{outage_set, OutageSet};
use crate::model::{PeakAoiBreakdown, Scheme, System, SystemConfig};
use crate::overlay::{peak_aoi_overlay_primary, peak_aoi_overlay_secondary};
use crate::underlay::{peak_aoi_underlay, MarkovModel};

/// Exact closed-form breakdown for one system under one scheme.
pub fn analytic_peak(scheme: Scheme, system: System, cfg: &SystemConfig, o: &OutageSet) -> Result<PeakAoiBreakdown> {
    match (scheme, system) {
        (Scheme::Overlay, System::Primary) => peak_aoi_overlay_primary(cfg.p, o.phi_op),
        (Scheme::Overlay, System::Secondary) => peak_aoi_overlay_secondary(cfg.p, cfg.q, o.phi_op, o.phi_os),
        (Scheme::Underlay, z) => peak_aoi_underlay(z, cfg, o),
    }
}

/// High-SNR breakdown for one system under one scheme.
pub fn asymptotic_peak(scheme: Scheme, system: System, cfg: &SystemConfig, o: &OutageSet) -> Result<PeakAoiBreakdown> {
    asym_breakdown(scheme, system, cfg.p, cfg.q, o)
}

/// Long-run fraction of a system's transmitting slots in which the other
/// system also transmits. Zero under overlay by construction.
pub fn analytic_exposure(scheme: Scheme, system: System, cfg: &SystemConfig, o: &OutageSet) -> Result<f64> {
    match scheme {
        Scheme::Overlay => Ok(0.0),
        Scheme::Underlay => {
            let m = MarkovModel::new(cfg.p, cfg.q, o)?;
            Ok(m.pi[3] / m.busy_fraction(system))
        }
    }
}

/// All exact and high-SNR results for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub outages: OutageSet,
    /// Indexed `[scheme][system]` in `Scheme::BOTH` / `System::BOTH` order.
    pub exact: [[PeakAoiBreakdown; 2]; 2],
    pub asymptotic: [[PeakAoiBreakdown; 2]; 2],
    pub markov: MarkovModel,
}

impl Analysis {
    pub fn exact(&self, scheme: Scheme, system: System) -> &PeakAoiBreakdown {
        &self.exact[scheme as usize][system as usize]
    }

    pub fn asymptotic(&self, scheme: Scheme, system: System) -> &PeakAoiBreakdown {
        &self.asymptotic[scheme as usize][system as usize]
    }
}

pub fn analyze(cfg: &SystemConfig) -> Result<Analysis> {
    let o = outage_set(cfg)?;
    let mut exact = [[None; 2]; 2];
    let mut asymptotic = [[None; 2]; 2];
    for scheme in Scheme::BOTH {
        for z in System::BOTH {
            exact[scheme as usize][z as usize] = Some(analytic_peak(scheme, z, cfg, &o)?);
            asymptotic[scheme as usize][z as usize] = Some(asymptotic_peak(scheme, z, cfg, &o)?);
        }
    }
    let unwrap = |a: [[Option<PeakAoiBreakdown>; 2]; 2]| a.map(|row| row.map(|b| b.expect("filled above")));
    Ok(Analysis {
        outages: o,
        exact: unwrap(exact),
        asymptotic: unwrap(asymptotic),
        markov: MarkovModel::new(cfg.p, cfg.q, &o)?,
    })
}
