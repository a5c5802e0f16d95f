//! Impact observables and phase-locking diagnostics.

use serde::Serialize;

use super::{SimState, Trajectory};
use crate::error::{Error, Result};
use crate::resonance::{AveragedField, EquilibriumBranch, ResonancePoint};

use std::f64::consts::{PI, TAU};

/// Per-impact observables in the resonance frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observable {
    pub t_alpha: f64,
    pub j_alpha: f64,
    /// Time since the previous impact.
    pub period: f64,
    /// `(−(q/p)ν t_α) mod 2π`.
    pub eta_hat: f64,
}

/// Observables for every impact after the first.
pub fn observables(traj: &Trajectory, rp: &ResonancePoint) -> Result<Vec<Observable>> {
    if traj.events.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 impacts, got {}",
            traj.events.len()
        )));
    }
    let rate = rp.frame_rate();
    Ok(traj
        .events
        .windows(2)
        .map(|w| Observable {
            t_alpha: w[1].t_alpha,
            j_alpha: w[1].j_alpha,
            period: w[1].t_alpha - w[0].t_alpha,
            eta_hat: (-rate * w[1].t_alpha).rem_euclid(TAU),
        })
        .collect())
}

/// Thresholds for calling a run locked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockCriteria {
    /// Upper bound on the circular std of `nη̂ − β` (rad).
    pub max_circ_std: f64,
    /// Impulse tolerance in units of `√ε`.
    pub impulse_band: f64,
}

impl Default for LockCriteria {
    fn default() -> Self {
        Self {
            max_circ_std: 0.15,
            impulse_band: 5.0,
        }
    }
}

/// Default fraction of trailing events used for analysis.
pub const DEFAULT_WINDOW: f64 = 0.8;

/// Circular mean and standard deviation of a set of angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircularStats {
    /// Mean direction in `(−π, π]`.
    pub mean: f64,
    /// `√(−2 ln R)` with `R` the mean resultant length.
    pub std: f64,
    pub resultant: f64,
}

pub fn circular_stats<I: IntoIterator<Item = f64>>(angles: I) -> Option<CircularStats> {
    let (mut s, mut c, mut k) = (0.0, 0.0, 0usize);
    for a in angles {
        s += a.sin();
        c += a.cos();
        k += 1;
    }
    if k == 0 {
        return None;
    }
    let (s, c) = (s / k as f64, c / k as f64);
    let r = s.hypot(c).min(1.0);
    let std = if r > 0.0 {
        (-2.0 * r.ln()).max(0.0).sqrt()
    } else {
        f64::INFINITY
    };
    Some(CircularStats {
        mean: s.atan2(c),
        std,
        resultant: r,
    })
}

/// Signed angle reduced to `(−π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Summary of the trailing window of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockReport {
    pub locked: bool,
    pub mean_impulse: f64,
    /// Circular std of `nη̂_α − β(εt_α)`.
    pub circ_std: f64,
    /// Id of the closest equilibrium branch, if any.
    pub matched_branch: Option<usize>,
    /// Circular mean of `nη̂_α − β(εt_α)`.
    pub phase_mean: f64,
    /// Circular distance from `η̂` to the matched branch (rad).
    pub branch_distance: Option<f64>,
    pub events_used: usize,
}

/// Lock diagnostics over the trailing `window` fraction of `obs`.
///
/// The matched branch minimises the circular mean of `η̂_α − η₀(εt_α)`, which
/// also separates the `n` branches sharing the same `nη₀ − β`.
pub fn lock_report(
    obs: &[Observable],
    field: &AveragedField,
    branches: &[EquilibriumBranch],
    window: f64,
    criteria: &LockCriteria,
) -> Result<LockReport> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window must be in (0, 1], got {window}"
        )));
    }
    let used = ((obs.len() as f64) * window).round() as usize;
    if used == 0 {
        return Err(Error::InsufficientData("empty analysis window".into()));
    }
    let tail = &obs[obs.len() - used..];
    let eps = field.config.epsilon;
    let n = field.n() as f64;

    let phase = circular_stats(tail.iter().map(|o| {
        let (_, beta) = field.harmonic(eps * o.t_alpha);
        n * o.eta_hat - beta
    }))
    .expect("non-empty window");
    let mean_impulse = tail.iter().map(|o| o.j_alpha).sum::<f64>() / used as f64;

    let mut best: Option<(usize, f64)> = None;
    for b in branches {
        let deviations: Option<Vec<f64>> = tail
            .iter()
            .map(|o| {
                field
                    .equilibrium_phase(b.sign, b.l, eps * o.t_alpha)
                    .map(|eta0| o.eta_hat - eta0)
            })
            .collect();
        let Some(dev) = deviations else { continue };
        let dist = circular_stats(dev).expect("non-empty window").mean.abs();
        if best.map_or(true, |(_, d)| dist < d) {
            best = Some((b.id, dist));
        }
    }

    let band = criteria.impulse_band * eps.sqrt();
    let locked = phase.std < criteria.max_circ_std && (mean_impulse - field.rp.j_pq).abs() <= band;
    Ok(LockReport {
        locked,
        mean_impulse,
        circ_std: phase.std,
        matched_branch: best.map(|b| b.0),
        phase_mean: phase.mean,
        branch_distance: best.map(|b| b.1),
        events_used: used,
    })
}

/// Post-impact state whose impact phase sits `offset` away from branch
/// `(sign, l)`. The impact time is the first solution of
/// `−(q/p)ν t ≡ η₀(εt) + offset` at or after `t_min`.
///
/// The impulse is not `J_pq` itself but the value that lets the phase follow
/// the slowly moving branch, `ω₀(J) = (q/p)ν + ε dη₀/dτ`. Starting at `J_pq`
/// would excite a slow oscillation about the branch of amplitude `O(√ε)`.
pub fn start_on_branch(
    field: &AveragedField,
    sign: i8,
    l: u32,
    offset: f64,
    t_min: f64,
) -> Result<SimState> {
    let eps = field.config.epsilon;
    let rate = field.rp.frame_rate();
    let slot = TAU / rate;
    let eta0 = |tau: f64| -> Result<f64> {
        field
            .equilibrium_phase(sign, l, tau)
            .ok_or(Error::NoUniformBranch {
                max_abs_a: field.a_n(tau).abs(),
            })
    };
    // t = (2πk − η₀(εt) − offset)/rate, solved by fixed-point iteration in t
    let target = |t: f64| eta0(eps * t).map(|e| e + offset);
    let k = ((rate * t_min + target(t_min)?) / TAU).ceil();
    let mut t = (TAU * k - target(t_min)?) / rate;
    for _ in 0..100 {
        let next = (TAU * k - target(t)?) / rate;
        let done = (next - t).abs() <= 1e-14 * next.abs().max(1.0);
        t = next;
        if done {
            break;
        }
    }
    if t < t_min {
        t += slot;
    }

    let mut j = field.rp.j_pq;
    if eps > 0.0 && field.config.delta != 0.0 {
        let tau = eps * t;
        let dt = 1e-5;
        let slope = wrap_pi(eta0(tau + dt)? - eta0(tau - dt)?) / (2.0 * dt);
        j = crate::green::impulse_of_frequency(rate + eps * slope, &field.config)?;
    }
    Ok(SimState {
        t,
        x: field.config.delta,
        v: -0.5 * j,
    })
}
