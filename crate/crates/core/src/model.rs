//! Shared domain types: the physical/protocol configuration, the per-system
//! interval breakdown of the average peak age, and rate/probability guards.

use std::fmt;

use crate::error::{Error, Result};

/// Lower and upper clamp applied to generation rates at the API boundary.
pub const RATE_FLOOR: f64 = 1e-9;
pub const RATE_CEIL: f64 = 1.0 - 1e-9;

/// The two IoT systems sharing the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum System {
    Primary,
    Secondary,
}

impl System {
    pub const BOTH: [System; 2] = [System::Primary, System::Secondary];

    pub fn label(self) -> &'static str {
        match self {
            System::Primary => "P",
            System::Secondary => "S",
        }
    }

    pub fn other(self) -> System {
        match self {
            System::Primary => System::Secondary,
            System::Secondary => System::Primary,
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Spectrum access scheme used by the secondary system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Secondary transmits only in slots where the primary is silent.
    Overlay,
    /// Secondary may always transmit but caps its interference at the primary AP.
    Underlay,
}

impl Scheme {
    pub const BOTH: [Scheme; 2] = [Scheme::Overlay, Scheme::Underlay];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Overlay => "overlay",
            Scheme::Underlay => "underlay",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlay" => Ok(Scheme::Overlay),
            "underlay" => Ok(Scheme::Underlay),
            other => Err(Error::config(format!("unknown scheme `{other}`"))),
        }
    }
}

/// All physical and protocol parameters of the two-system network.
///
/// Powers are kept in dBm here; everything downstream works in linear
/// milliwatts (see [`crate::link::LinkParams`]). The interference cap is a
/// multiple of the noise power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub p_p_dbm: f64,
    pub p_s_dbm: f64,
    pub n0_dbm: f64,
    pub ic_over_n0: f64,
    pub r_p: f64,
    pub r_s: f64,
    pub d_pp: f64,
    pub d_ss: f64,
    pub d_sp: f64,
    pub d_ps: f64,
    pub omega: f64,
    pub p: f64,
    pub q: f64,
}

impl Default for SystemConfig {
    /// The common evaluation setting: 100 m desired links, path-loss exponent
    /// 3, -80 dBm noise, unit rates, 25 dBm peak powers and `I_C = 5 N0`.
    fn default() -> Self {
        SystemConfig {
            p_p_dbm: 25.0,
            p_s_dbm: 25.0,
            n0_dbm: -80.0,
            ic_over_n0: 5.0,
            r_p: 1.0,
            r_s: 1.0,
            d_pp: 100.0,
            d_ss: 100.0,
            d_sp: 80.0,
            d_ps: 150.0,
            omega: 3.0,
            p: 0.1,
            q: 0.1,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("p_p_dbm", self.p_p_dbm),
            ("p_s_dbm", self.p_s_dbm),
            ("n0_dbm", self.n0_dbm),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        for (name, v) in [
            ("d_pp", self.d_pp),
            ("d_ss", self.d_ss),
            ("d_sp", self.d_sp),
            ("d_ps", self.d_ps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a positive distance, got {v}")));
            }
        }
        if !(2.0..=5.0).contains(&self.omega) {
            return Err(Error::config(format!(
                "omega must lie in [2, 5], got {}",
                self.omega
            )));
        }
        for (name, v) in [("r_p", self.r_p), ("r_s", self.r_s), ("ic_over_n0", self.ic_over_n0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn rate(&self, system: System) -> f64 {
        match system {
            System::Primary => self.p,
            System::Secondary => self.q,
        }
    }
}

/// Expected interval lengths (in slots) and the resulting average peak age
/// for one system under one scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakAoiBreakdown {
    pub e_w: f64,
    pub e_k: f64,
    pub e_y: f64,
    pub e_s: f64,
    pub avg_peak: f64,
}

/// `dBm -> mW`.
pub fn dbm_to_linear(x_dbm: f64) -> f64 {
    10f64.powf(x_dbm / 10.0)
}

/// Combine expected service, waiting and busy intervals into the average
/// peak age `E[S] + E[W] + E[K] - 1`.
pub fn assemble_peak_aoi(e_s: f64, e_w: f64, e_k: f64) -> Result<PeakAoiBreakdown> {
    // Tolerate rounding just below the bounds; the closed forms are ratios.
    const SLACK: f64 = 1e-9;
    if !(e_s.is_finite() && e_w.is_finite() && e_k.is_finite()) {
        return Err(Error::domain(format!(
            "non-finite interval expectation (E[S]={e_s}, E[W]={e_w}, E[K]={e_k})"
        )));
    }
    if e_s < 1.0 - SLACK || e_w < -SLACK || e_k < 1.0 - SLACK {
        return Err(Error::domain(format!(
            "interval expectations out of range: E[S]={e_s} (>=1), E[W]={e_w} (>=0), E[K]={e_k} (>=1)"
        )));
    }
    let e_y = e_w + e_k;
    Ok(PeakAoiBreakdown {
        e_w,
        e_k,
        e_y,
        e_s,
        avg_peak: e_s + e_y - 1.0,
    })
}

/// Validate a generation rate and pull it into `[RATE_FLOOR, RATE_CEIL]`.
///
/// Values in `[0, 1]` are accepted; endpoints are clamped with a warning so
/// that limits such as `p -> 0` can be evaluated on the same formulas.
pub fn clamp_rate(name: &str, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("{name} must lie in [0, 1], got {x}")));
    }
    let c = x.clamp(RATE_FLOOR, RATE_CEIL);
    if c != x {
        log::warn!("{name}={x} clamped to {c}");
    }
    Ok(c)
}

/// Validate a per-slot outage probability (must be in `[0, 1)`).
pub fn check_outage(name: &str, x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::domain(format!("{name} must lie in [0, 1), got {x}")));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dbm_reference_points() {
        assert_eq!(dbm_to_linear(0.0), 1.0);
        assert!((dbm_to_linear(30.0) - 1000.0).abs() < 1e-9);
        assert!((dbm_to_linear(-80.0) - 1e-8).abs() < 1e-22);
    }

    #[test]
    fn assemble_trivial_cases() {
        let b = assemble_peak_aoi(1.0, 0.0, 1.0).unwrap();
        assert_eq!(b.avg_peak, 1.0);
        let b = assemble_peak_aoi(1.0, 9.0, 1.0).unwrap();
        assert_eq!(b.avg_peak, 10.0);
        assert_eq!(b.e_y, 10.0);
    }

    #[test]
    fn assemble_matches_direct_overlay_primary_formula() {
        // p = 0.1, phi = 0.2 evaluated two ways.
        let (p, phi) = (0.1, 0.2);
        let e_s = 1.0 / (1.0 - phi + p * phi);
        let e_w = (1.0 - p) / p;
        let e_k = 1.0 / (1.0 - phi);
        let b = assemble_peak_aoi(e_s, e_w, e_k).unwrap();
        let direct = (phi - p * phi) / (1.0 - phi + p * phi) + (1.0 - phi + p * phi) / (p - p * phi);
        assert!((b.avg_peak - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn assemble_rejects_bad_inputs() {
        assert!(assemble_peak_aoi(0.5, 0.0, 1.0).is_err());
        assert!(assemble_peak_aoi(1.0, -1.0, 1.0).is_err());
        assert!(assemble_peak_aoi(1.0, 0.0, 0.2).is_err());
        assert!(assemble_peak_aoi(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn default_config_is_valid_and_validation_catches_errors() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert!(SystemConfig { p: 1.0, ..cfg }.validate().is_err());
        assert!(SystemConfig { q: 0.0, ..cfg }.validate().is_err());
        assert!(SystemConfig { d_sp: 0.0, ..cfg }.validate().is_err());
        assert!(SystemConfig { omega: 6.0, ..cfg }.validate().is_err());
        assert!(SystemConfig { ic_over_n0: 0.0, ..cfg }.validate().is_err());
        assert!(SystemConfig { r_s: -1.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn rate_clamp() {
        assert_eq!(clamp_rate("p", 0.0).unwrap(), RATE_FLOOR);
        assert_eq!(clamp_rate("p", 1.0).unwrap(), RATE_CEIL);
        assert_eq!(clamp_rate("p", 0.3).unwrap(), 0.3);
        assert!(clamp_rate("p", 1.5).is_err());
        assert!(clamp_rate("p", f64::NAN).is_err());
        assert!(check_outage("phi", 1.0).is_err());
    }

    proptest! {
        #[test]
        fn assembled_identities_hold(e_s in 1.0f64..1e4, e_w in 0.0f64..1e4, e_k in 1.0f64..1e4) {
            let b = assemble_peak_aoi(e_s, e_w, e_k).unwrap();
            prop_assert!((b.e_y - (b.e_w + b.e_k)).abs() <= 1e-12 * b.e_y);
            prop_assert!((b.avg_peak - (b.e_s + b.e_y - 1.0)).abs() <= 1e-12 * b.avg_peak);
            prop_assert!(b.avg_peak >= 1.0);
        }

        #[test]
        fn dbm_decade_scaling(a in -120.0f64..60.0, d in 0.01f64..10.0) {
            let x = dbm_to_linear(a);
            prop_assert!((dbm_to_linear(a + 10.0) - 10.0 * x).abs() <= 1e-12 * 10.0 * x);
            prop_assert!(dbm_to_linear(a + d) > x);
        }
    }
}
