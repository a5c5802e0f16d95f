//! Cross-check battery: closed forms against independent oracles.

use std::f64::consts::TAU;

use impactres::green::{self, fourier, Kernel, Side};
use impactres::model::{Forcing, Oscillator};
use impactres::quadrature::GaussLegendre;
use impactres::resonance::{equilibria, f0_eta};
use impactres::simulator::{simulate, SimOptions, SimState};
use serde::Serialize;

use super::{field, grid, CmdResult, Failure};
use crate::config::RunConfig;
use crate::format::num;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: Option<String>,
}

impl Check {
    fn new(name: &'static str, error: f64, tolerance: f64) -> Self {
        Self {
            name,
            error,
            tolerance,
            passed: error.is_finite() && error <= tolerance,
            detail: None,
        }
    }

    fn failed(name: &'static str, tolerance: f64, why: String) -> Self {
        Self {
            name,
            error: f64::NAN,
            tolerance,
            passed: false,
            detail: Some(why),
        }
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{status} {:<28} error={:<16} tol={}",
            self.name,
            num(self.error),
            num(self.tolerance)
        );
        if let Some(d) = &self.detail {
            s.push_str(&format!(" ({d})"));
        }
        s
    }
}

fn sup<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter()
        .fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) })
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
}

/// Limiter magnitudes used where both signs of `Δ` are checked.
fn deltas(cfg: &Oscillator<f64>) -> [f64; 2] {
    let d = if cfg.delta != 0.0 {
        cfg.delta.abs()
    } else {
        1.0
    };
    [d, -d]
}

fn impulse_for_checks(cfg: &RunConfig) -> f64 {
    field(cfg).map(|f| f.rp.j_pq).unwrap_or(2.0 * 3f64.sqrt())
}

fn fourier_checks(cfg: &RunConfig, scale: f64) -> Vec<Check> {
    let j = impulse_for_checks(cfg);
    let osc = cfg.oscillator;
    match Kernel::new(&osc, j) {
        Ok(k) => {
            let kappa = sup(linspace(0.1, TAU - 0.1, 200)
                .map(|p| (fourier::kappa_partial_sum(&k, p, 10_000) - k.kappa(p)).abs()));
            let kappa_psi = sup(linspace(0.5, TAU - 0.5, 200).map(|p| {
                (fourier::kappa_psi_fejer(&k, p, 10_000) - k.kappa_psi_side(p, Side::Right)).abs()
            }));
            vec![
                Check::new("kappa_fourier", kappa, 1e-3 * scale),
                Check::new("kappa_psi_fejer", kappa_psi, 1e-2 * scale),
            ]
        }
        Err(e) => vec![Check::failed("kappa_fourier", 1e-3 * scale, e.to_string())],
    }
}

fn identity_checks(cfg: &RunConfig, scale: f64) -> Vec<Check> {
    let (mut csc, mut boundary, mut deriv, mut round_trip) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for delta in deltas(&cfg.oscillator) {
        let osc = Oscillator {
            delta,
            ..cfg.oscillator
        };
        for j in linspace(0.1, 10.0, 50) {
            let k = match Kernel::new(&osc, j) {
                Ok(k) => k,
                Err(e) => return vec![Check::failed("csc_identity", 1e-10 * scale, e.to_string())],
            };
            let s = (std::f64::consts::PI * k.omega0_cap).sin();
            let rhs = 1.0 + 4.0 * osc.big_omega.powi(2) * delta * delta / (j * j);
            csc = csc.max((1.0 / (s * s) - rhs).abs() / rhs);
            boundary = boundary.max((-j * k.kappa(0.0) - delta).abs());

            let h = 1e-5 * j;
            let w = |jj: f64| green::omega0(jj, &osc).unwrap_or(f64::NAN);
            let fd = (w(j + h) - w(j - h)) / (2.0 * h);
            deriv = deriv.max((fd - k.omega0_prime).abs() / k.omega0_prime.abs().max(1e-300));
            let psi = 2.0;
            let kj = |jj: f64| {
                Kernel::new(&osc, jj)
                    .map(|kk| kk.kappa(psi))
                    .unwrap_or(f64::NAN)
            };
            let fd = (kj(j + h) - kj(j - h)) / (2.0 * h);
            deriv = deriv.max((fd - k.kappa_j(psi)).abs() / (1.0 + k.kappa_j(psi).abs()));

            let (x, v) = (k.position(psi), k.velocity(psi, Side::Right));
            let back = green::action_of_state(x, v, &osc).unwrap_or(f64::NAN);
            let phase = green::phase_of_state(x, v, j, &osc).unwrap_or(f64::NAN);
            round_trip = round_trip.max((back - j).abs()).max((phase - psi).abs());
        }
    }
    vec![
        Check::new("csc_identity", csc, 1e-10 * scale),
        Check::new("boundary_identity", boundary, 1e-10 * scale),
        Check::new("derivatives_fd", deriv, 1e-6 * scale),
        Check::new("action_phase_round_trip", round_trip, 1e-8 * scale),
    ]
}

fn mean_square_check(cfg: &RunConfig, scale: f64) -> Check {
    let j = impulse_for_checks(cfg);
    let osc = cfg.oscillator;
    let (Ok(k), Ok(closed)) = (Kernel::new(&osc, j), green::mean_kappa_psi_sq(j, &osc)) else {
        return Check::failed("mean_kappa_psi_sq", 1e-8 * scale, "kernel undefined".into());
    };
    let rule = GaussLegendre::new(64);
    let pieces = 16;
    let quad: f64 = (0..pieces)
        .map(|i| {
            let a = TAU * i as f64 / pieces as f64;
            let b = TAU * (i + 1) as f64 / pieces as f64;
            rule.integrate(a, b, |p| k.kappa_psi_side(p, Side::Right).powi(2))
        })
        .sum::<f64>()
        / TAU;
    Check::new("mean_kappa_psi_sq", (quad - closed).abs(), 1e-8 * scale)
}

fn averaged_checks(cfg: &RunConfig, scale: f64) -> Vec<Check> {
    let f = match field(cfg) {
        Ok(f) => f,
        Err(e) => return vec![Check::failed("f0_vs_numeric", 1e-6 * scale, e.to_string())],
    };
    let period = cfg.forcing.slow_period();
    let mut err = 0.0f64;
    for eta in linspace(0.0, TAU, 21).take(20) {
        for tau in linspace(0.0, period, 21).take(20) {
            let e = match f.f0_numeric(eta, tau) {
                Ok(v) => (v - f.f0(eta, tau)).abs(),
                Err(_) => f64::NAN,
            };
            err = if e.is_nan() { f64::NAN } else { err.max(e) };
        }
    }
    let mut out = vec![Check::new("f0_vs_numeric", err, 1e-6 * scale)];
    match equilibria(&f, &grid(cfg)) {
        Ok(branches) => {
            let residual = sup(branches
                .iter()
                .flat_map(|b| b.tau.iter().zip(&b.eta0).map(|(&t, &e)| f.f0(e, t).abs())));
            let a_fd = sup(branches.iter().flat_map(|b| {
                let f = &f;
                b.tau.iter().zip(&b.eta0).step_by(8).map(move |(&t, &e)| {
                    let h = 1e-5;
                    let fd = (f.f0(e + h, t) - f.f0(e - h, t)) / (2.0 * h);
                    (fd - f0_eta(b.sign, t, f)).abs()
                })
            }));
            out.push(Check::new("equilibrium_residual", residual, 1e-10 * scale));
            out.push(Check::new("a_vs_fd", a_fd, 1e-7 * scale));
        }
        Err(e) => out.push(Check {
            detail: Some(format!("skipped: {e}")),
            ..Check::new("equilibrium_residual", 0.0, 1e-10 * scale)
        }),
    }
    out
}

fn conservative_checks(cfg: &RunConfig, scale: f64) -> Vec<Check> {
    let quiet = Forcing::DistinctFrequencies {
        amp_a: 0.0,
        amp_b: 0.0,
        nu: cfg.forcing.nu(),
        big_gamma: 1.0,
        theta: 0.0,
    };
    let (mut period_err, mut impulse_err) = (0.0f64, 0.0f64);
    let d = deltas(&cfg.oscillator);
    for delta in [d[0], d[1], 0.0] {
        let osc = Oscillator {
            delta,
            epsilon: 0.0,
            ..cfg.oscillator
        };
        let j = 2.0 * 3f64.sqrt();
        let start = SimState {
            t: 0.0,
            x: delta,
            v: -0.5 * j,
        };
        let opts = SimOptions {
            max_impacts: Some(100),
            ..SimOptions::default()
        };
        let expected = match green::omega0(j, &osc) {
            Ok(w) => TAU / w,
            Err(e) => {
                return vec![Check::failed(
                    "eps0_period_law",
                    1e-8 * scale,
                    e.to_string(),
                )]
            }
        };
        match simulate(&osc, &quiet, start, 1e6, &opts) {
            Ok(tr) => {
                let mut prev = 0.0;
                for e in &tr.events {
                    period_err = period_err.max((e.t_alpha - prev - expected).abs());
                    impulse_err = impulse_err.max((e.j_alpha - j).abs());
                    prev = e.t_alpha;
                }
                if tr.events.len() < 100 {
                    period_err = f64::NAN;
                }
            }
            Err(e) => {
                return vec![Check::failed(
                    "eps0_period_law",
                    1e-8 * scale,
                    e.to_string(),
                )]
            }
        }
    }
    vec![
        Check::new("eps0_period_law", period_err, 1e-8 * scale),
        Check::new("eps0_impulse_invariance", impulse_err, 1e-9 * scale),
    ]
}

/// Runs every check; `inject_fault` tightens all tolerances 1000-fold.
pub fn run_checks(cfg: &RunConfig, inject_fault: bool) -> Vec<Check> {
    let scale = if inject_fault { 1e-3 } else { 1.0 };
    let mut checks = fourier_checks(cfg, scale);
    checks.extend(identity_checks(cfg, scale));
    checks.push(mean_square_check(cfg, scale));
    checks.extend(averaged_checks(cfg, scale));
    checks.extend(conservative_checks(cfg, scale));
    checks
}

pub fn cmd_verify(cfg: &RunConfig, inject_fault: bool) -> CmdResult {
    let checks = run_checks(cfg, inject_fault);
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        Err(Failure::Verify(failed))
    } else {
        Ok(())
    }
}
