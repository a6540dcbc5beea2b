//! Closed forms against the slot simulator, down to the conditional quantities.

use aoi_cr::link::{outage_set, OutageSet};
use aoi_cr::overlay::{overlay_conditionals, peak_aoi_overlay_primary, peak_aoi_overlay_secondary};
use aoi_cr::sim::{
    empirical_transition_log, simulate, simulate_abstract_vs_fading, simulate_with_outages, write_event_log, Mode,
    SimSettings, SystemStats,
};
use aoi_cr::underlay::{peak_aoi_underlay_at, underlay_conditionals, MarkovModel, UnderlayRoleParams};
use aoi_cr::{PeakAoiBreakdown, Scheme, System, SystemConfig};

const SLOTS: u64 = 2_000_000;
const GATE: f64 = 4.0;

fn outages() -> OutageSet {
    OutageSet::new(0.25, 0.15, 0.3, 0.45, 0.55).unwrap()
}

fn run(scheme: Scheme, p: f64, q: f64, o: &OutageSet, seed: u64) -> aoi_cr::sim::SimReport {
    simulate_with_outages(p, q, o, &SimSettings::new(scheme, Mode::Abstract, SLOTS, seed)).unwrap()
}

fn assert_breakdown(label: &str, s: &SystemStats, a: &PeakAoiBreakdown) {
    for (name, est, want) in [
        ("W", s.w, a.e_w),
        ("K", s.k, a.e_k),
        ("Y", s.y, a.e_y),
        ("S", s.s, a.e_s),
        ("peak", s.peak, a.avg_peak),
    ] {
        let z = est.z(want);
        assert!(z.abs() < GATE, "{label} {name}: sim {} vs {want} (z = {z:.2})", est.mean);
    }
}

/// z-score of an empirical proportion `k/n` against `want`.
fn prop_z(frac: f64, n: u64, want: f64) -> f64 {
    (frac - want) / (want * (1.0 - want) / n as f64).sqrt()
}

#[test]
fn overlay_breakdowns_match() {
    let o = outages();
    for (i, &(p, q)) in [(0.1, 0.1), (0.4, 0.3), (0.7, 0.5)].iter().enumerate() {
        let r = run(Scheme::Overlay, p, q, &o, 10 + i as u64);
        let prim = peak_aoi_overlay_primary(p, o.phi_op).unwrap();
        let sec = peak_aoi_overlay_secondary(p, q, o.phi_op, o.phi_os).unwrap();
        assert_breakdown(&format!("overlay P p={p}"), r.system(System::Primary), &prim);
        assert_breakdown(&format!("overlay S p={p}"), r.system(System::Secondary), &sec);
    }
}

#[test]
fn overlay_secondary_conditionals_match() {
    let o = outages();
    let (p, q) = (0.4, 0.3);
    let c = overlay_conditionals(p, q, o.phi_op, o.phi_os).unwrap();
    let r = run(Scheme::Overlay, p, q, &o, 20);
    let s = r.system(System::Secondary);

    let gens = s.gen_idle + s.gen_busy;
    let z = prop_z(s.gen_idle as f64 / gens as f64, gens, c.pr_is);
    assert!(z.abs() < GATE, "Pr{{I_S}} z = {z:.2}");

    let (phi_i, phi_b) = s.delivered_fraction();
    let z = prop_z(phi_i, s.gen_idle, c.pr_phi_i);
    assert!(z.abs() < GATE, "Pr{{delivered | idle}} {phi_i} vs {} (z = {z:.2})", c.pr_phi_i);
    let z = prop_z(phi_b, s.gen_busy, c.pr_phi_b);
    assert!(z.abs() < GATE, "Pr{{delivered | busy}} {phi_b} vs {} (z = {z:.2})", c.pr_phi_b);

    let delivered = s.delivered_idle + s.delivered_busy;
    let z = prop_z(s.delivered_idle_fraction(), delivered, c.pr_iss);
    assert!(z.abs() < GATE, "Pr{{I_SS}} z = {z:.2}");

    let z = s.s_idle.z(c.e_ss_idle);
    assert!(z.abs() < GATE, "E[S | idle] {} vs {} (z = {z:.2})", s.s_idle.mean, c.e_ss_idle);
    let z = s.s_busy.z(c.e_ss_busy);
    assert!(z.abs() < GATE, "E[S | busy] {} vs {} (z = {z:.2})", s.s_busy.mean, c.e_ss_busy);
}

#[test]
fn underlay_breakdowns_and_conditionals_match() {
    let o = outages();
    let (p, q) = (0.35, 0.45);
    let r = run(Scheme::Underlay, p, q, &o, 30);
    let model = MarkovModel::new(p, q, &o).unwrap();
    for z in System::BOTH {
        let a = peak_aoi_underlay_at(z, p, q, &o).unwrap();
        let s = r.system(z);
        assert_breakdown(&format!("underlay {z}"), s, &a);

        let role = UnderlayRoleParams::for_system(z, p, q, &o).unwrap();
        let c = underlay_conditionals(z, &role, &model.pi).unwrap();
        let gens = s.gen_idle + s.gen_busy;
        let zz = prop_z(s.gen_idle as f64 / gens as f64, gens, c.pr_i);
        assert!(zz.abs() < GATE, "{z} Pr{{I}} z = {zz:.2}");
        let (phi_i, phi_b) = s.delivered_fraction();
        let zz = prop_z(phi_i, s.gen_idle, c.pr_phi_i);
        assert!(zz.abs() < GATE, "{z} Pr{{delivered | idle}} z = {zz:.2}");
        let zz = prop_z(phi_b, s.gen_busy, c.pr_phi_b);
        assert!(zz.abs() < GATE, "{z} Pr{{delivered | busy}} z = {zz:.2}");
        let zz = s.s_idle.z(c.e_s_idle);
        assert!(zz.abs() < GATE, "{z} E[S | idle] z = {zz:.2}");
        let zz = s.s_busy.z(c.e_s_busy);
        assert!(zz.abs() < GATE, "{z} E[S | busy] z = {zz:.2}");

        // Exposure: fraction of own transmissions that overlap the other's.
        let own = if z == System::Primary { 1 } else { 2 };
        let want = model.pi[3] / (model.pi[own] + model.pi[3]);
        assert!((s.exposure() - want).abs() < 0.01, "{z} exposure {} vs {want}", s.exposure());
    }
}

#[test]
fn transition_log_matches_chain() {
    let cfg = SystemConfig { p: 0.3, q: 0.4, ..SystemConfig::default() };
    let settings = SimSettings::new(Scheme::Underlay, Mode::Abstract, SLOTS, 40);
    let log = empirical_transition_log(&cfg, &settings).unwrap();
    let o = outage_set(&cfg).unwrap();
    let model = MarkovModel::new(cfg.p, cfg.q, &o).unwrap();
    let (f, se) = (log.frequencies(), log.frequency_stderr());
    for i in 0..4 {
        for j in 0..4 {
            let z = (f[i][j] - model.m[i][j]) / se[i][j];
            assert!(z.abs() < GATE, "T[{i}][{j}] {} vs {} (z = {z:.2})", f[i][j], model.m[i][j]);
        }
    }
    let (occ, occ_se) = (log.occupancy_fraction(), log.occupancy_stderr());
    for k in 0..4 {
        let z = (occ[k] - model.pi[k]) / occ_se[k];
        assert!(z.abs() < GATE, "pi[{k}] {} vs {} (z = {z:.2})", occ[k], model.pi[k]);
    }
}

#[test]
fn error_free_links_give_one_over_rate() {
    let o = OutageSet::zero();
    let (p, q) = (0.2, 0.5);
    let r = run(Scheme::Underlay, p, q, &o, 50);
    for (z, rate) in [(System::Primary, p), (System::Secondary, q)] {
        let s = r.system(z);
        // Every update is delivered in its own slot.
        assert_eq!(s.s.mean, 1.0);
        assert!(s.peak.z(1.0 / rate).abs() < GATE);
        assert!(s.w.z((1.0 - rate) / rate).abs() < GATE);
    }
}

#[test]
fn overlay_never_transmits_together() {
    let r = simulate(&SystemConfig::default(), &SimSettings::new(Scheme::Overlay, Mode::Fading, SLOTS, 60)).unwrap();
    for z in System::BOTH {
        assert_eq!(r.system(z).exposed_slots, 0);
    }
}

#[test]
fn fading_and_abstract_agree_at_the_default_setting() {
    let cfg = SystemConfig::default();
    for scheme in Scheme::BOTH {
        for m in simulate_abstract_vs_fading(&cfg, scheme, SLOTS, (70, 71)).unwrap() {
            assert!(m.z().abs() < GATE, "{scheme} {}: z = {:.2}", m.system, m.z());
        }
    }
}

#[test]
fn runs_are_reproducible_per_seed() {
    let cfg = SystemConfig::default();
    let mut s = SimSettings::new(Scheme::Underlay, Mode::Fading, 200_000, 80);
    s.record_log = true;
    let a = simulate(&cfg, &s).unwrap();
    let b = simulate(&cfg, &s).unwrap();
    assert_eq!(a, b);
    s.seed = 81;
    let c = simulate(&cfg, &s).unwrap();
    assert_ne!(a.events, c.events);
}

#[test]
fn event_log_has_fixed_header_and_identities() {
    let mut s = SimSettings::new(Scheme::Overlay, Mode::Fading, 100_000, 90);
    s.record_log = true;
    let r = simulate(&SystemConfig::default(), &s).unwrap();
    let mut buf = Vec::new();
    write_event_log(&r.events, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("system,g,d,W,K,S,Y,peak"));
    let mut last_s = [None, None];
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let n: Vec<u64> = f[1..].iter().map(|x| x.parse().unwrap()).collect();
        let (g, d, w, k, sv, y, peak) = (n[0], n[1], n[2], n[3], n[4], n[5], n[6]);
        assert_eq!(sv, d - g + 1);
        assert_eq!(y, w + k);
        let z = usize::from(f[0] == "S");
        if let Some(prev) = last_s[z] {
            assert_eq!(peak, prev + y - 1);
        }
        last_s[z] = Some(sv);
    }
    assert!(last_s.iter().all(Option::is_some));
}
