//! Closed-form average peak age under underlay access.
//!
//! Both systems transmit whenever they hold an update, so each one's outage
//! depends on whether the other is active in the same slot. The joint
//! (primary, secondary) idle/busy state is a 4-state Markov chain; the
//! per-system service time follows from a pair of 2x2 recursions over the
//! other system's state in the slot where the update was generated.

use crate::error::{Error, Result};
use crate::linear::{solve4, Linear2};
use crate::link::OutageSet;
use crate::model::{assemble_peak_aoi, check_outage, clamp_rate, PeakAoiBreakdown, System, SystemConfig};

const CROSS_CHECK_RTOL: f64 = 1e-9;

/// Joint state index. Order: both idle, primary-only busy, secondary-only busy, both busy.
pub const STATES: [&str; 4] = ["s1", "s2", "s3", "s4"];

/// State index for the given busy flags.
pub fn state_index(primary_busy: bool, secondary_busy: bool) -> usize {
    match (primary_busy, secondary_busy) {
        (false, false) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (true, true) => 3,
    }
}

/// Transition matrix and its stationary distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovModel {
    pub m: [[f64; 4]; 4],
    pub pi: [f64; 4],
}

impl MarkovModel {
    pub fn new(p: f64, q: f64, outages: &OutageSet) -> Result<Self> {
        let m = build_transition_matrix(p, q, outages)?;
        let pi = stationary_distribution(&m)?;
        Ok(MarkovModel { m, pi })
    }

    /// `max_j |(pi M)_j - pi_j|`.
    pub fn fixed_point_residual(&self) -> f64 {
        (0..4)
            .map(|j| ((0..4).map(|i| self.pi[i] * self.m[i][j]).sum::<f64>() - self.pi[j]).abs())
            .fold(0.0, f64::max)
    }

    /// Long-run fraction of slots in which the given system is busy.
    pub fn busy_fraction(&self, system: System) -> f64 {
        match system {
            System::Primary => self.pi[1] + self.pi[3],
            System::Secondary => self.pi[2] + self.pi[3],
        }
    }
}

/// One-slot transition matrix of the joint idle/busy state.
pub fn build_transition_matrix(p: f64, q: f64, o: &OutageSet) -> Result<[[f64; 4]; 4]> {
    let p = clamp_rate("p", p)?;
    let q = clamp_rate("q", q)?;
    o.check()?;

    // Probability a busy system becomes idle: decoded and nothing new arrives.
    let free_p = (1.0 - o.phi_up) * (1.0 - p);
    let free_s = (1.0 - o.phi_us) * (1.0 - q);
    let alpha = (1.0 - o.phi_up_hat) * (1.0 - p);
    let beta = (1.0 - o.phi_us_hat) * (1.0 - q);

    let row = |a: f64, b: f64| [a * b, (1.0 - a) * b, a * (1.0 - b), (1.0 - a) * (1.0 - b)];
    Ok([
        row(1.0 - p, 1.0 - q),
        row(free_p, 1.0 - q),
        row(1.0 - p, free_s),
        row(alpha, beta),
    ])
}

/// Stationary distribution from `(M^T - I + B) pi = 1`, `B` all ones.
pub fn stationary_distribution(m: &[[f64; 4]; 4]) -> Result<[f64; 4]> {
    for (i, row) in m.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::Numerical(format!("row {i} of the transition matrix is not stochastic")));
        }
    }
    let mut a = [[1.0; 4]; 4];
    for (i, a_row) in a.iter_mut().enumerate() {
        for (j, a_ij) in a_row.iter_mut().enumerate() {
            *a_ij += m[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    let pi = solve4(a, [1.0; 4])?;
    if pi.iter().any(|&x| !x.is_finite() || x <= 0.0) {
        return Err(Error::Numerical(format!("stationary distribution not positive: {pi:?}")));
    }
    Ok(pi)
}

/// Per-system view of the shared parameters: own rate `u`, other rate `v`,
/// own outage alone / under interference, and the other system's outages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnderlayRoleParams {
    pub u: f64,
    pub v: f64,
    pub xi: f64,
    pub xi_hat: f64,
    /// Other system's interference-free outage. Not needed by the solved forms.
    pub zeta: f64,
    pub zeta_hat: f64,
}

impl UnderlayRoleParams {
    pub fn for_system(system: System, p: f64, q: f64, o: &OutageSet) -> Result<Self> {
        let p = clamp_rate("p", p)?;
        let q = clamp_rate("q", q)?;
        o.check()?;
        Ok(match system {
            System::Primary => UnderlayRoleParams {
                u: p,
                v: q,
                xi: o.phi_up,
                xi_hat: o.phi_up_hat,
                zeta: o.phi_us,
                zeta_hat: o.phi_us_hat,
            },
            System::Secondary => UnderlayRoleParams {
                u: q,
                v: p,
                xi: o.phi_us,
                xi_hat: o.phi_us_hat,
                zeta: o.phi_up,
                zeta_hat: o.phi_up_hat,
            },
        })
    }

    fn check(&self) -> Result<()> {
        for (name, x) in [("u", self.u), ("v", self.v)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::domain(format!("{name} must lie in (0, 1), got {x}")));
            }
        }
        check_outage("xi", self.xi)?;
        check_outage("xi_hat", self.xi_hat)?;
        check_outage("zeta", self.zeta)?;
        check_outage("zeta_hat", self.zeta_hat)?;
        Ok(())
    }
}

/// `(e_w, e_k, e_y)` from the stationary distribution.
pub fn e_y_underlay(system: System, p: f64, q: f64, pi: &[f64; 4]) -> Result<(f64, f64, f64)> {
    let p = clamp_rate("p", p)?;
    let q = clamp_rate("q", q)?;
    let (rate, own_idle) = match system {
        System::Primary => (p, pi[0] + pi[2]),
        System::Secondary => (q, pi[0] + pi[1]),
    };
    if own_idle.is_nan() || own_idle <= 0.0 {
        return Err(Error::Numerical(format!("{system} idle probability is {own_idle}")));
    }
    let e_w = (1.0 - rate) / rate;
    let e_y = (1.0 - rate) / (rate * own_idle);
    Ok((e_w, e_y - e_w, e_y))
}

/// Recursion for `(Pr{delivered | other idle at generation}, Pr{delivered | other busy})`.
pub fn phi_system(r: &UnderlayRoleParams) -> Linear2 {
    let UnderlayRoleParams { u, v, xi, xi_hat, zeta_hat, .. } = *r;
    Linear2::from_fixed_point(
        [1.0 - xi, 1.0 - xi_hat],
        [
            [xi * (1.0 - u) * (1.0 - v), xi * (1.0 - u) * v],
            [
                xi_hat * (1.0 - zeta_hat) * (1.0 - u) * (1.0 - v),
                xi_hat * (1.0 - u) * (zeta_hat + (1.0 - zeta_hat) * v),
            ],
        ],
    )
}

/// Solved form of [`phi_system`].
pub fn underlay_phi_conditionals(r: &UnderlayRoleParams) -> Result<(f64, f64)> {
    r.check()?;
    Ok(phi_closed(r))
}

fn phi_closed(r: &UnderlayRoleParams) -> (f64, f64) {
    let UnderlayRoleParams { u, v, xi, xi_hat, zeta_hat, .. } = *r;
    let idle_stay = xi * (1.0 - u) * (1.0 - v);
    let den = (1.0 - idle_stay) * (1.0 - xi_hat * zeta_hat * (1.0 - u))
        - xi_hat * (1.0 - zeta_hat) * (1.0 - u) * v;
    let idle = ((1.0 - xi) * (1.0 - xi_hat * (1.0 - u) * (v + zeta_hat - v * zeta_hat))
        + xi * (1.0 - xi_hat) * (1.0 - u) * v)
        / den;
    let busy = ((1.0 - xi_hat) * (1.0 - idle_stay)
        + (1.0 - xi) * xi_hat * (1.0 - zeta_hat) * (1.0 - u) * (1.0 - v))
        / den;
    if cfg!(debug_assertions) {
        if let Ok(s) = phi_system(r).solve() {
            cross_check("Pr{Phi|I}", idle, s[0]);
            cross_check("Pr{Phi|B}", busy, s[1]);
        }
    }
    (idle, busy)
}

/// Recursion for `(E[S | idle start], E[S | busy start])` given the
/// delivery probabilities.
pub fn service_system(r: &UnderlayRoleParams, (phi_i, phi_b): (f64, f64)) -> Linear2 {
    let UnderlayRoleParams { u, v, xi, xi_hat, zeta_hat, .. } = *r;
    let m11 = xi * (1.0 - u) * (1.0 - v);
    let m12 = xi * (1.0 - u) * v * phi_b / phi_i;
    let m21 = xi_hat * (1.0 - zeta_hat) * (1.0 - u) * (1.0 - v) * phi_i / phi_b;
    let m22 = xi_hat * (1.0 - u) * (zeta_hat + (1.0 - zeta_hat) * v);
    Linear2::from_fixed_point(
        [(1.0 - xi) / phi_i + m11 + m12, (1.0 - xi_hat) / phi_b + m21 + m22],
        [[m11, m12], [m21, m22]],
    )
}

/// Conditional quantities behind one system's underlay service time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnderlayConditionals {
    /// Probability an update is generated while the other system is idle / busy.
    pub pr_i: f64,
    pub pr_b: f64,
    pub pr_phi_i: f64,
    pub pr_phi_b: f64,
    /// Probability a delivered update was generated while the other was idle / busy.
    pub pr_is: f64,
    pub pr_bs: f64,
    pub e_s_idle: f64,
    pub e_s_busy: f64,
}

impl UnderlayConditionals {
    pub fn e_s(&self) -> f64 {
        self.pr_is * self.e_s_idle + self.pr_bs * self.e_s_busy
    }
}

pub fn underlay_conditionals(system: System, r: &UnderlayRoleParams, pi: &[f64; 4]) -> Result<UnderlayConditionals> {
    r.check()?;
    let UnderlayRoleParams { u, v, xi, xi_hat, zeta_hat, .. } = *r;
    let pr_i = match system {
        System::Primary => pi[0] + pi[1],
        System::Secondary => pi[0] + pi[2],
    };
    let pr_b = 1.0 - pr_i;
    let (pr_phi_i, pr_phi_b) = phi_closed(r);
    let norm = pr_i * pr_phi_i + pr_b * pr_phi_b;
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::Numerical(format!("{system} delivery probability is {norm}")));
    }
    let pr_is = pr_i * pr_phi_i / norm;

    let mix = zeta_hat + v - v * zeta_hat;
    let d2 = 1.0
        - xi * (1.0 - u) * (1.0 - v)
        - xi_hat * (1.0 - u) * (mix - xi * zeta_hat * (1.0 - u) * (1.0 - v));
    let e_s_idle = (1.0 - xi_hat * (1.0 - u) * mix + xi * (1.0 - u) * v * pr_phi_b / pr_phi_i) / d2;
    let e_s_busy = (1.0 - xi * (1.0 - u) * (1.0 - v)
        + xi_hat * (1.0 - zeta_hat) * (1.0 - u) * (1.0 - v) * pr_phi_i / pr_phi_b)
        / d2;
    if cfg!(debug_assertions) {
        if let Ok(s) = service_system(r, (pr_phi_i, pr_phi_b)).solve() {
            cross_check("E[S|I]", e_s_idle, s[0]);
            cross_check("E[S|B]", e_s_busy, s[1]);
        }
    }
    Ok(UnderlayConditionals {
        pr_i,
        pr_b,
        pr_phi_i,
        pr_phi_b,
        pr_is,
        pr_bs: 1.0 - pr_is,
        e_s_idle,
        e_s_busy,
    })
}

/// Expected service time of a delivered update.
pub fn e_s_underlay(system: System, r: &UnderlayRoleParams, pi: &[f64; 4]) -> Result<f64> {
    Ok(underlay_conditionals(system, r, pi)?.e_s())
}

/// Average peak age of one system under underlay access, using the rates in `cfg`.
pub fn peak_aoi_underlay(system: System, cfg: &SystemConfig, outages: &OutageSet) -> Result<PeakAoiBreakdown> {
    peak_aoi_underlay_at(system, cfg.p, cfg.q, outages)
}

/// [`peak_aoi_underlay`] with explicit rates.
pub fn peak_aoi_underlay_at(system: System, p: f64, q: f64, outages: &OutageSet) -> Result<PeakAoiBreakdown> {
    let model = MarkovModel::new(p, q, outages)?;
    let role = UnderlayRoleParams::for_system(system, p, q, outages)?;
    let (e_w, e_k, _) = e_y_underlay(system, p, q, &model.pi)?;
    assemble_peak_aoi(e_s_underlay(system, &role, &model.pi)?, e_w, e_k)
}

fn cross_check(what: &str, closed: f64, solved: f64) {
    debug_assert!(
        (closed - solved).abs() <= CROSS_CHECK_RTOL * solved.abs().max(1.0),
        "{what}: closed form {closed} disagrees with recursion {solved}"
    );
}
