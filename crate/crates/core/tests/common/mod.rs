//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use aoi_cr::link::LinkParams;
use aoi_cr::SystemConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A configuration drawn from a range around the evaluation setting where
/// every outage stays comfortably below one.
pub fn random_config(rng: &mut ChaCha8Rng) -> SystemConfig {
    SystemConfig {
        p_p_dbm: rng.random_range(15.0..40.0),
        p_s_dbm: rng.random_range(15.0..35.0),
        ic_over_n0: 10f64.powf(rng.random_range(0.0..2.0)),
        d_sp: rng.random_range(40.0..200.0),
        d_ps: rng.random_range(60.0..300.0),
        p: rng.random_range(0.05..0.7),
        q: rng.random_range(0.05..0.7),
        ..SystemConfig::default()
    }
}

/// Monte Carlo estimate and standard error of each outage formula, in the
/// order `[phi_op, phi_os, phi_us, phi_up_hat, phi_us_hat]`, drawing the four
/// link gains directly and testing the SNR/SINR rule.
pub fn fading_outage_mc(cfg: &SystemConfig, draws: u64, seed: u64) -> [(f64, f64); 5] {
    let l = LinkParams::from_config(cfg).unwrap();
    let g = l.gains;
    let mut r = rng(seed);
    let mut fails = [0u64; 5];
    for _ in 0..draws {
        let e = |r: &mut ChaCha8Rng| -> f64 { Exp1.sample(r) };
        let hpp = e(&mut r) * g.omega_pp;
        let hss = e(&mut r) * g.omega_ss;
        let hsp = e(&mut r) * g.omega_sp;
        let hps = e(&mut r) * g.omega_ps;
        let ps = (l.ic / hsp).min(l.p_s);
        fails[0] += (l.p_p * hpp < l.sigma_p * l.n0) as u64;
        fails[1] += (l.p_s * hss < l.sigma_s * l.n0) as u64;
        fails[2] += (ps * hss < l.sigma_s * l.n0) as u64;
        fails[3] += (l.p_p * hpp < l.sigma_p * (ps * hsp + l.n0)) as u64;
        fails[4] += (ps * hss < l.sigma_s * (l.p_p * hps + l.n0)) as u64;
    }
    fails.map(|f| {
        let m = f as f64 / draws as f64;
        (m, (m * (1.0 - m) / draws as f64).sqrt().max(1.0 / draws as f64))
    })
}

/// Stationary row vector by repeated multiplication until the update stalls.
pub fn power_iteration(m: &[[f64; 4]; 4]) -> [f64; 4] {
    let mut x = [0.25; 4];
    for _ in 0..1_000_000 {
        let mut y = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                y[j] += x[i] * m[i][j];
            }
        }
        let delta = (0..4).map(|k| (y[k] - x[k]).abs()).fold(0.0, f64::max);
        x = y;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

/// Root of a continuous `f` with a sign change on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "no sign change on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Sum of a PMF on `start..` truncated once a geometric tail bound with
/// ratio `ratio` drops below `1e-13`.
pub fn pmf_total(pmf: impl Fn(i64) -> f64, start: i64, ratio: f64) -> f64 {
    let mut total = 0.0;
    let mut k = start;
    loop {
        let term = pmf(k);
        total += term;
        // Remaining mass is at most term * ratio / (1 - ratio).
        if term * ratio / (1.0 - ratio) < 1e-13 {
            return total;
        }
        k += 1;
    }
}

/// Relative difference `|a - b| / |b|`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
