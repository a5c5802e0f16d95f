use impactres::green;
use impactres::model::{Forcing, Oscillator};
use impactres::resonance::{analyze, find_resonance, AveragedField, TauGrid};
use impactres::simulator::{
    lock_report, observables, simulate, start_on_branch, LockCriteria, SimOptions, SimState,
};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn quiet() -> Forcing<f64> {
    Forcing::DistinctFrequencies {
        amp_a: 0.0,
        amp_b: 0.0,
        nu: 1.5,
        big_gamma: 1.0,
        theta: 0.0,
    }
}

fn canonical_forcing() -> Forcing<f64> {
    Forcing::CloseFrequencies {
        a1: 1.0,
        a2: 0.5,
        nu: 1.5,
        big_gamma: 1.0,
    }
}

fn impacts(n: usize) -> SimOptions {
    SimOptions {
        max_impacts: Some(n),
        ..Default::default()
    }
}

/// Post-impact state on the limiter with impulse `j`.
fn after_impact(delta: f64, j: f64) -> SimState {
    SimState {
        t: 0.0,
        x: delta,
        v: -0.5 * j,
    }
}

fn check_conservative_laws(delta: f64, j: f64, count: usize) -> Result<(), TestCaseError> {
    let cfg = Oscillator::new(1.0, delta, 0.1, 0.0).unwrap();
    let tr = simulate(&cfg, &quiet(), after_impact(delta, j), 1e6, &impacts(count)).unwrap();
    prop_assert_eq!(tr.events.len(), count);
    let period = TAU / green::omega0(j, &cfg).unwrap();
    let mut prev = 0.0;
    for e in &tr.events {
        prop_assert!(
            (e.t_alpha - prev - period).abs() <= 1e-8,
            "period {} vs {}",
            e.t_alpha - prev,
            period
        );
        prop_assert!(
            (e.j_alpha - j).abs() <= 1e-9,
            "impulse {} vs {}",
            e.j_alpha,
            j
        );
        prop_assert_eq!(e.j_alpha, 2.0 * e.v_minus);
        prop_assert!(e.v_minus > 0.0 && !e.grazing);
        prev = e.t_alpha;
    }
    Ok(())
}

#[test]
fn conservative_laws_three_limiters() {
    for delta in [1.0, -1.0, 0.0] {
        check_conservative_laws(delta, 2.0 * 3f64.sqrt(), 100).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conservative_period_law(delta in -1.5..1.5f64, j in 0.5..5.0f64) {
        check_conservative_laws(delta, j, 12)?;
    }

    #[test]
    fn action_constant_along_flight(delta in -1.5..1.5f64, j in 0.5..5.0f64) {
        let cfg = Oscillator::new(1.0, delta, 0.1, 0.0).unwrap();
        let opts = SimOptions { sample_stride: Some(1), max_impacts: Some(3), ..Default::default() };
        let tr = simulate(&cfg, &quiet(), after_impact(delta, j), 1e4, &opts).unwrap();
        for s in &tr.samples {
            prop_assert!(s.x <= delta + 1e-9);
            let a = green::action_of_state(s.x, s.v, &cfg).unwrap();
            prop_assert!((a - j).abs() <= 1e-9, "action {} vs {}", a, j);
        }
        for e in &tr.events {
            prop_assert!((e.j_alpha - j).abs() <= 1e-9);
        }
    }

    #[test]
    fn damping_only_impulse_decreases(delta in -1.0..1.0f64, j in 1.0..4.0f64, eps in 0.005..0.05f64) {
        let cfg = Oscillator::new(1.0, delta, 0.2, eps).unwrap();
        let tr = simulate(&cfg, &quiet(), after_impact(delta, j), 1e5, &impacts(20)).unwrap();
        prop_assert!(tr.events.len() >= 2);
        for w in tr.events.windows(2) {
            prop_assert!(w[1].j_alpha < w[0].j_alpha);
            prop_assert!(w[1].t_alpha > w[0].t_alpha);
        }
    }
}

#[test]
fn energy_conserved_between_impacts() {
    let cfg = Oscillator::new(1.0, 1.0, 0.1, 0.0).unwrap();
    let opts = SimOptions {
        sample_stride: Some(1),
        max_impacts: Some(10),
        ..Default::default()
    };
    let tr = simulate(
        &cfg,
        &quiet(),
        after_impact(1.0, 2.0 * 3f64.sqrt()),
        1e4,
        &opts,
    )
    .unwrap();
    let energy = |x: f64, v: f64| 0.5 * v * v + 0.5 * x * x;
    let e0 = energy(1.0, 3f64.sqrt());
    assert!(tr.samples.len() > 100);
    for s in &tr.samples {
        assert!((energy(s.x, s.v) - e0).abs() <= 1e-9);
    }
}

#[test]
fn energy_formula_oracle() {
    // from (x, v) = (0, 2) with Ω = Δ = 1 the impulse is 2√3
    let cfg = Oscillator::new(1.0, 1.0, 0.1, 0.0).unwrap();
    let start = SimState {
        t: 0.0,
        x: 0.0,
        v: 2.0,
    };
    let tr = simulate(&cfg, &quiet(), start, 100.0, &impacts(1)).unwrap();
    assert!((tr.events[0].j_alpha - 2.0 * 3f64.sqrt()).abs() <= 1e-9);
    assert!((green::action_of_state(0.0, 2.0, &cfg).unwrap() - tr.events[0].j_alpha).abs() <= 1e-9);
    // first contact at t = arcsin(1/2)
    assert!((tr.events[0].t_alpha - PI / 6.0).abs() <= 1e-10);
}

#[test]
fn deterministic_event_sequence() {
    let cfg = Oscillator::new(1.0, 1.0, 0.1, 0.005).unwrap();
    let start = after_impact(1.0, 3.4);
    let run = || simulate(&cfg, &canonical_forcing(), start, 1e5, &impacts(200)).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.events.len(), 200);
    for (x, y) in a.events.iter().zip(&b.events) {
        assert_eq!(x.t_alpha.to_bits(), y.t_alpha.to_bits());
        assert_eq!(x.v_minus.to_bits(), y.v_minus.to_bits());
    }
}

#[test]
fn forced_events_are_consistent() {
    let cfg = Oscillator::new(1.0, 1.0, 0.1, 0.05).unwrap();
    let opts = SimOptions {
        sample_stride: Some(1),
        max_impacts: Some(100),
        ..Default::default()
    };
    let tr = simulate(
        &cfg,
        &canonical_forcing(),
        after_impact(1.0, 3.4),
        1e5,
        &opts,
    )
    .unwrap();
    for w in tr.events.windows(2) {
        assert!(w[1].t_alpha > w[0].t_alpha);
    }
    for s in &tr.samples {
        assert!(s.x <= 1.0 + 1e-9);
    }
    for e in &tr.events {
        assert!(e.v_minus > 0.0);
        assert_eq!(e.j_alpha, 2.0 * e.v_minus);
    }
}

#[test]
fn observables_at_exact_resonance() {
    let cfg = Oscillator::new(1.0, 1.0, 0.1, 0.0).unwrap();
    let rp = find_resonance(&cfg, 1.5, 1, 1).unwrap();
    let tr = simulate(
        &cfg,
        &quiet(),
        after_impact(1.0, rp.j_pq),
        1e4,
        &impacts(50),
    )
    .unwrap();
    let obs = observables(&tr, &rp).unwrap();
    assert_eq!(obs.len(), 49);
    for o in &obs {
        assert!((o.period - 4.0 * PI / 3.0).abs() <= 1e-8);
        let d = (o.eta_hat - obs[0].eta_hat + PI).rem_euclid(TAU) - PI;
        assert!(d.abs() <= 1e-6);
    }
}

#[test]
fn observables_drift_off_resonance() {
    let cfg = Oscillator::new(1.0, 1.0, 0.1, 0.0).unwrap();
    let rp = find_resonance(&cfg, 1.5, 1, 1).unwrap();
    let tr = simulate(&cfg, &quiet(), after_impact(1.0, 3.0), 1e4, &impacts(20)).unwrap();
    let obs = observables(&tr, &rp).unwrap();
    let slot = TAU / rp.frame_rate();
    for w in obs.windows(2) {
        let advance = (w[1].eta_hat - w[0].eta_hat + PI).rem_euclid(TAU) - PI;
        let predicted = -rp.frame_rate() * (w[1].period - slot);
        assert!((advance - predicted).abs() <= 1e-9);
    }
    assert!(obs[1].period > slot);
}

#[test]
fn observables_need_two_events() {
    let cfg = Oscillator::new(1.0, 1.0, 0.1, 0.0).unwrap();
    let rp = find_resonance(&cfg, 1.5, 1, 1).unwrap();
    let tr = simulate(&cfg, &quiet(), after_impact(1.0, rp.j_pq), 1e4, &impacts(1)).unwrap();
    assert!(observables(&tr, &rp).is_err());
}

#[test]
fn conservative_lock_report_has_zero_spread() {
    let cfg = Oscillator::new(1.0, 1.0, 0.1, 0.0).unwrap();
    let f = canonical_forcing();
    let field = AveragedField::at_order(cfg, f, 1).unwrap();
    let branches: Vec<_> = analyze(&field, &TauGrid::for_forcing(&f))
        .unwrap()
        .into_iter()
        .map(|c| c.branch)
        .collect();
    let start = start_on_branch(&field, -1, 0, 0.0, 0.0).unwrap();
    let tr = simulate(&cfg, &f, start, 1e4, &impacts(40)).unwrap();
    let obs = observables(&tr, &field.rp).unwrap();
    let rep = lock_report(&obs, &field, &branches, 0.8, &LockCriteria::default()).unwrap();
    assert!(rep.circ_std < 1e-6);
    assert_eq!(rep.events_used, 31);
    assert!(lock_report(&obs, &field, &branches, 0.0, &LockCriteria::default()).is_err());
    assert!(lock_report(&[], &field, &branches, 0.5, &LockCriteria::default()).is_err());
}

#[test]
fn branch_start_lands_on_requested_phase() {
    let cfg = Oscillator::new(1.0, 1.0, 0.1, 0.005).unwrap();
    let field = AveragedField::at_order(cfg, canonical_forcing(), 1).unwrap();
    for (sign, offset) in [(1i8, 0.0), (-1, 0.0), (1, 1e-3)] {
        let s = start_on_branch(&field, sign, 0, offset, 100.0).unwrap();
        assert!(s.t >= 100.0 && s.x == 1.0 && s.v < 0.0);
        let eta_hat = (-field.rp.frame_rate() * s.t).rem_euclid(TAU);
        let eta0 = field.equilibrium_phase(sign, 0, cfg.epsilon * s.t).unwrap();
        let d = (eta_hat - eta0 - offset + PI).rem_euclid(TAU) - PI;
        assert!(d.abs() <= 1e-9);
        assert!((-2.0 * s.v - field.rp.j_pq).abs() < 5.0 * cfg.epsilon.sqrt());
    }
}
