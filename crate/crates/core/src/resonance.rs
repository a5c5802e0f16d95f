//! Resonance points, the first-order averaged field and its equilibria, the
//! second-order coefficients, and the stability classification of the
//! resonant almost-periodic modes.
//!
//! Near a resonance `ω₀(J_pq) = (q/p)ν` the impulse and the resonant phase
//! `φ = ψ − (q/p)νt` evolve slowly. Averaging over the fast time gives
//!
//! ```text
//! ξ' = μ f₀(η, τ) + μ² f₁(η, τ) ξ,    η' = μ ω₀′(J_pq) ξ + μ² g₀(η, τ)
//! ```
//!
//! with `μ = √ε`. Forcing couples at first order only for `q = 1, p = n`, where
//! `f₀(η, τ) = C(τ) cos(nη − β(τ)) − D` with
//! `C(τ) = 2E(τ)ν² / (πn(Ω² − ν²))` and damping drain `D = 4γJω₀²⟨κ_ψ²⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::{self, Kernel, Side};
use crate::model::{Forcing, Oscillator};
use crate::quadrature::GaussLegendre;

/// Number of slow-time samples per modulation period.
pub const DEFAULT_TAU_SAMPLES: usize = 256;
/// Gauss–Legendre nodes per smooth piece of the averaging integrals.
pub const QUADRATURE_NODES: usize = 64;
/// Half-step of the centred η-difference used for `g₀_η`.
pub const ETA_STEP: f64 = 1e-5;
/// Dead band of `⟨b + e⟩` inside which the second-order test is inconclusive.
pub const GROWTH_TOL: f64 = 1e-8;

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Resonant impulse `J_pq` with `ω₀(J_pq) = (q/p)ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonancePoint {
    pub p: u32,
    pub q: u32,
    pub nu: f64,
    pub j_pq: f64,
    pub omega0: f64,
    pub omega0_prime: f64,
    /// `μ = √ε`.
    pub mu: f64,
}

impl ResonancePoint {
    /// Common period `2πp/ν` of the forcing (`2π/ν`) and of κ_ψ in the
    /// rotating frame (`2πp/(qν)`); equals `2πn/ν` for `q = 1, p = n`.
    pub fn averaging_period(&self) -> f64 {
        std::f64::consts::TAU * self.p as f64 / self.nu
    }

    /// Frequency ratio `(q/p)ν` of the rotating frame.
    pub fn frame_rate(&self) -> f64 {
        self.q as f64 * self.nu / self.p as f64
    }
}

/// Locates the resonance `ω₀(J) = (q/p)ν` by closed-form inversion.
pub fn find_resonance(cfg: &Oscillator<f64>, nu: f64, q: u32, p: u32) -> Result<ResonancePoint> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidParameter("p and q must be positive".into()));
    }
    if gcd(p, q) != 1 {
        return Err(Error::InvalidParameter(format!(
            "p = {p} and q = {q} are not coprime"
        )));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("nu must be > 0, got {nu}")));
    }
    let target = q as f64 * nu / p as f64;
    if cfg.delta == 0.0 {
        let two_omega = 2.0 * cfg.big_omega;
        return if (target - two_omega).abs() <= 1e-12 * two_omega {
            Err(Error::DegenerateResonance)
        } else {
            Err(Error::NoResonance(format!(
                "delta = 0 oscillates only at {two_omega}, target {target}"
            )))
        };
    }
    let j_pq = match green::impulse_of_frequency(target, cfg) {
        Ok(j) => j,
        Err(Error::Domain(msg)) => return Err(Error::NoResonance(msg)),
        Err(e) => return Err(e),
    };
    let omega0_prime = green::omega0_prime(j_pq, cfg)?;
    Ok(ResonancePoint {
        p,
        q,
        nu,
        j_pq,
        omega0: green::omega0(j_pq, cfg)?,
        omega0_prime,
        mu: cfg.epsilon.sqrt(),
    })
}

/// Uniform periodic grid over one slow modulation period.
#[derive(Debug, Clone, PartialEq)]
pub struct TauGrid {
    pub period: f64,
    pub points: Vec<f64>,
}

impl TauGrid {
    pub fn uniform(period: f64, samples: usize) -> Self {
        assert!(samples > 0 && period > 0.0);
        let step = period / samples as f64;
        Self {
            period,
            points: (0..samples).map(|i| i as f64 * step).collect(),
        }
    }

    /// The default 256-point grid over `[0, 2π/Γ)`.
    pub fn for_forcing(forcing: &Forcing<f64>) -> Self {
        Self::uniform(forcing.slow_period(), DEFAULT_TAU_SAMPLES)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.period / self.points.len() as f64
    }
}

/// The averaged system at one resonance point.
#[derive(Debug, Clone)]
pub struct AveragedField {
    pub config: Oscillator<f64>,
    pub forcing: Forcing<f64>,
    pub rp: ResonancePoint,
    kernel: Kernel<f64>,
    rule: GaussLegendre<f64>,
}

impl AveragedField {
    /// Field at an arbitrary resonance point.
    pub fn new(config: Oscillator<f64>, forcing: Forcing<f64>, rp: ResonancePoint) -> Result<Self> {
        config.validate()?;
        forcing.validate()?;
        if (rp.nu - forcing.nu()).abs() > 1e-12 * rp.nu {
            return Err(Error::InvalidParameter(format!(
                "resonance nu {} differs from forcing nu {}",
                rp.nu,
                forcing.nu()
            )));
        }
        let kernel = Kernel::new(&config, rp.j_pq)?;
        Ok(Self {
            config,
            forcing,
            rp,
            kernel,
            rule: GaussLegendre::new(QUADRATURE_NODES),
        })
    }

    /// Field at the forcing-coupled resonance `q = 1, p = n`.
    pub fn at_order(config: Oscillator<f64>, forcing: Forcing<f64>, n: u32) -> Result<Self> {
        let rp = find_resonance(&config, forcing.nu(), 1, n)?;
        Self::new(config, forcing, rp)
    }

    /// Order `n = p` of the resonance.
    pub fn n(&self) -> u32 {
        self.rp.p
    }

    /// Forcing enters the first-order field only for `q = 1`.
    pub fn is_coupled(&self) -> bool {
        self.rp.q == 1
    }

    pub fn kernel(&self) -> &Kernel<f64> {
        &self.kernel
    }

    /// `(E(τ), β(τ))` of the fast harmonic.
    pub fn harmonic(&self, tau: f64) -> (f64, f64) {
        let h = self.forcing.fast_harmonic(tau);
        (h.e_val, h.beta_val)
    }

    /// Damping drain `D = 4γJω₀²⟨κ_ψ²⟩ > 0`.
    pub fn damping_drain(&self) -> f64 {
        let k = &self.kernel;
        let mean = green::mean_kappa_psi_sq(k.j_val, &self.config).expect("valid kernel");
        4.0 * self.config.gamma * k.j_val * k.omega0 * k.omega0 * mean
    }

    /// Coefficient `C(τ) = 2E(τ)ν²/(πn(Ω² − ν²))` of `cos(nη − β)` in `f₀`.
    pub fn forcing_coefficient(&self, tau: f64) -> f64 {
        if !self.is_coupled() {
            return 0.0;
        }
        let (e, _) = self.harmonic(tau);
        let nu = self.rp.nu;
        let n = self.n() as f64;
        let w2 = self.config.big_omega * self.config.big_omega;
        2.0 * e * nu * nu / (std::f64::consts::PI * n * (w2 - nu * nu))
    }

    /// Closed-form averaged impulse drift `f₀(η, τ)`.
    pub fn f0(&self, eta: f64, tau: f64) -> f64 {
        let drain = self.damping_drain();
        if !self.is_coupled() {
            return -drain;
        }
        let (_, beta) = self.harmonic(tau);
        self.forcing_coefficient(tau) * (self.n() as f64 * eta - beta).cos() - drain
    }

    /// `A_n(τ) = D / C(τ)`: equilibria need `cos(nη − β) = A_n`.
    pub fn a_n(&self, tau: f64) -> f64 {
        let c = self.forcing_coefficient(tau);
        if c == 0.0 {
            return f64::INFINITY;
        }
        self.damping_drain() / c
    }

    /// Jump times of κ_ψ inside one averaging period for phase `η`.
    fn jump_times(&self, eta: f64) -> Vec<f64> {
        let rate = self.rp.frame_rate();
        let period = self.rp.averaging_period();
        let two_pi = std::f64::consts::TAU;
        let k_lo = (eta / two_pi).floor() as i64;
        let k_hi = ((eta + rate * period) / two_pi).ceil() as i64;
        (k_lo..=k_hi)
            .map(|k| (two_pi * k as f64 - eta) / rate)
            .filter(|&t| t > 0.0 && t < period)
            .collect()
    }

    /// Mean over the common period of `integrand(t, ψ)` with `ψ = η + (q/p)νt`,
    /// split at the impacts.
    fn time_average<F: FnMut(f64, f64) -> f64>(&self, eta: f64, mut integrand: F) -> Result<f64> {
        let period = self.rp.averaging_period();
        let rate = self.rp.frame_rate();
        let breaks = self.jump_times(eta);
        let total = self
            .rule
            .integrate_pieces(0.0, period, &breaks, |t| integrand(t, eta + rate * t));
        let mean = total / period;
        if mean.is_finite() {
            Ok(mean)
        } else {
            Err(Error::Numerical(format!(
                "non-finite average at eta = {eta}"
            )))
        }
    }

    /// Mean of `F₀` evaluated with the kernel at impulse `j` (phase frame fixed).
    fn average_f0_with(&self, kernel: &Kernel<f64>, eta: f64, tau: f64) -> Result<f64> {
        let gamma = self.config.gamma;
        let (j, w) = (kernel.j_val, kernel.omega0);
        self.time_average(eta, |t, psi| {
            let kp = kernel.kappa_psi_side(psi, Side::Right);
            -4.0 * w * (self.forcing.force(t, tau) + gamma * j * w * kp) * kp
        })
    }

    /// `f₀(η, τ)` by direct quadrature of `F₀` over the common period.
    pub fn f0_numeric(&self, eta: f64, tau: f64) -> Result<f64> {
        self.average_f0_with(&self.kernel, eta, tau)
    }

    /// `f₁(η, τ)`: mean of the J-derivative of `F₀`'s bracket at `J_pq`.
    pub fn f1(&self, eta: f64, tau: f64) -> Result<f64> {
        let k = &self.kernel;
        let gamma = self.config.gamma;
        let (j, w, wp) = (k.j_val, k.omega0, k.omega0_prime);
        self.time_average(eta, |t, psi| {
            let f = self.forcing.force(t, tau);
            let kp = k.kappa_psi_side(psi, Side::Right);
            let kpj = k.kappa_psi_j(psi, Side::Right);
            let bracket = f + gamma * j * w * kp;
            let d_bracket = gamma * (w * kp + j * wp * kp + j * w * kpj);
            -4.0 * (wp * bracket * kp + w * d_bracket * kp + w * bracket * kpj)
        })
    }

    /// `g₀(η, τ)`: mean of the second-order phase drift `G₀`.
    pub fn g0(&self, eta: f64, tau: f64) -> Result<f64> {
        let k = &self.kernel;
        let gamma = self.config.gamma;
        let (j, w) = (k.j_val, k.omega0);
        self.time_average(eta, |t, psi| {
            let f = self.forcing.force(t, tau);
            let kp = k.kappa_psi_side(psi, Side::Right);
            -4.0 * w / j * (f + gamma * j * w * kp) * (-k.kappa(psi) - j * k.kappa_j(psi))
        })
    }

    /// `g₀_η` by centred difference with half-step [`ETA_STEP`].
    pub fn g0_eta(&self, eta: f64, tau: f64) -> Result<f64> {
        let hi = self.g0(eta + ETA_STEP, tau)?;
        let lo = self.g0(eta - ETA_STEP, tau)?;
        Ok((hi - lo) / (2.0 * ETA_STEP))
    }

    /// Closed-form equilibrium phase of branch `(sign, l)` at slow time `τ`,
    /// reduced to `[0, 2π)`. `None` when `|A_n(τ)| ≥ 1`.
    pub fn equilibrium_phase(&self, sign: i8, l: u32, tau: f64) -> Option<f64> {
        let a = self.a_n(tau);
        if !(a.abs() < 1.0) || !self.is_coupled() {
            return None;
        }
        let (_, beta) = self.harmonic(tau);
        let n = self.n() as f64;
        let eta = (beta + sign as f64 * a.acos()) / n + std::f64::consts::TAU * l as f64 / n;
        let eta = eta.rem_euclid(std::f64::consts::TAU);
        Some(if eta >= std::f64::consts::TAU {
            0.0
        } else {
            eta
        })
    }

    /// Locked value of `nη − β(τ)` on branch `sign`, `± arccos A_n(τ)`.
    pub fn locked_offset(&self, sign: i8, tau: f64) -> Option<f64> {
        let a = self.a_n(tau);
        if !(a.abs() < 1.0) || !self.is_coupled() {
            return None;
        }
        Some(sign as f64 * a.acos())
    }

    /// `max_τ |A_n(τ)|` over the grid.
    pub fn max_abs_a_n(&self, grid: &TauGrid) -> f64 {
        grid.points
            .iter()
            .map(|&tau| self.a_n(tau).abs())
            .fold(0.0, f64::max)
    }
}

/// Stability label of an equilibrium branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    /// `ω₀′ f₀_η > 0` uniformly: saddle-type, unstable.
    UnstableThm1,
    /// `ω₀′ f₀_η < 0` uniformly and `⟨b + e⟩ < 0`.
    StableThm2,
    /// `ω₀′ f₀_η < 0` uniformly and `⟨b + e⟩ > 0`.
    UnstableThm2,
    Indeterminate,
}

impl Stability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stability::UnstableThm1 => "UnstableThm1",
            Stability::StableThm2 => "StableThm2",
            Stability::UnstableThm2 => "UnstableThm2",
            Stability::Indeterminate => "Indeterminate",
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::StableThm2)
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One equilibrium curve `η₀(τ)` sampled on a [`TauGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumBranch {
    pub id: usize,
    /// Sign in front of `arccos A_n`.
    pub sign: i8,
    pub l: u32,
    pub tau: Vec<f64>,
    pub eta0: Vec<f64>,
    pub a_n: Vec<f64>,
    pub stability: Option<Stability>,
}

/// All `2n` equilibrium branches of a coupled field on the grid.
pub fn equilibria(field: &AveragedField, grid: &TauGrid) -> Result<Vec<EquilibriumBranch>> {
    let max_abs_a = if field.is_coupled() {
        field.max_abs_a_n(grid)
    } else {
        f64::INFINITY
    };
    if !(max_abs_a < 1.0) {
        return Err(Error::NoUniformBranch { max_abs_a });
    }
    let a_n: Vec<f64> = grid.points.iter().map(|&tau| field.a_n(tau)).collect();
    let mut branches = Vec::with_capacity(2 * field.n() as usize);
    for sign in [1i8, -1] {
        for l in 0..field.n() {
            let eta0 = grid
                .points
                .iter()
                .map(|&tau| field.equilibrium_phase(sign, l, tau).expect("|A_n| < 1"))
                .collect();
            branches.push(EquilibriumBranch {
                id: branches.len(),
                sign,
                l,
                tau: grid.points.clone(),
                eta0,
                a_n: a_n.clone(),
                stability: None,
            });
        }
    }
    Ok(branches)
}

/// `a(τ) = f₀_η(η₀(τ), τ) = −C(τ) n sin(nη₀ − β) = −sign · C(τ) n √(1 − A_n²)`.
pub fn f0_eta(branch_sign: i8, tau: f64, field: &AveragedField) -> f64 {
    let a = field.a_n(tau);
    let n = field.n() as f64;
    -(branch_sign as f64) * field.forcing_coefficient(tau) * n * (1.0 - a * a).max(0.0).sqrt()
}

/// Second-order coefficients along one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub tau: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// `ω₀′(J_pq)`, constant in τ.
    pub d: f64,
    pub e: Vec<f64>,
    /// `√(−d/a)` where `a d < 0`.
    pub h: Vec<Option<f64>>,
    pub period: f64,
}

/// Evaluates `a, b, c, d, e, h` on the grid of `branch`.
pub fn coefficients(
    branch: &EquilibriumBranch,
    field: &AveragedField,
    grid: &TauGrid,
) -> Result<Coefficients> {
    let n = field.n() as f64;
    let d = field.rp.omega0_prime;
    let mut out = Coefficients {
        tau: grid.points.clone(),
        a: Vec::with_capacity(grid.len()),
        b: Vec::with_capacity(grid.len()),
        c: Vec::with_capacity(grid.len()),
        d,
        e: Vec::with_capacity(grid.len()),
        h: Vec::with_capacity(grid.len()),
        period: grid.period,
    };
    for (&tau, &eta) in grid.points.iter().zip(&branch.eta0) {
        let a = f0_eta(branch.sign, tau, field);
        let c = -0.5 * n * n * field.forcing_coefficient(tau) * field.a_n(tau);
        out.a.push(a);
        out.c.push(c);
        out.b.push(field.f1(eta, tau)?);
        out.e.push(field.g0_eta(eta, tau)?);
        out.h.push(if a * d < 0.0 {
            Some((-d / a).sqrt())
        } else {
            None
        });
    }
    Ok(out)
}

/// Slow-time means entering the second-order stability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    /// `⟨b + e⟩`.
    pub mean_b_plus_e: f64,
    /// `⟨h′/h⟩`, zero for periodic positive `h`.
    pub mean_log_rate_h: f64,
}

/// Means over one slow period of `b + e` and `h′/h`.
pub fn mean_growth(coeffs: &Coefficients) -> Result<Growth> {
    let m = coeffs.tau.len();
    if m == 0 {
        return Err(Error::InsufficientData("empty coefficient grid".into()));
    }
    let log_h: Vec<f64> = coeffs
        .h
        .iter()
        .map(|h| h.map(f64::ln))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Domain("h undefined: a d >= 0 somewhere on the grid".into()))?;
    // Periodic trapezoid rule: arithmetic mean on the uniform grid.
    let mean_b_plus_e = coeffs
        .b
        .iter()
        .zip(&coeffs.e)
        .map(|(b, e)| b + e)
        .sum::<f64>()
        / m as f64;
    let step = coeffs.period / m as f64;
    let mean_log_rate_h = (0..m)
        .map(|i| (log_h[(i + 1) % m] - log_h[(i + m - 1) % m]) / (2.0 * step))
        .sum::<f64>()
        / m as f64;
    if mean_log_rate_h.abs() > 1e-10 {
        return Err(Error::Numerical(format!(
            "mean of h'/h = {mean_log_rate_h:e} does not vanish"
        )));
    }
    Ok(Growth {
        mean_b_plus_e,
        mean_log_rate_h,
    })
}

/// Stability label from the uniform sign of `d a(τ)` and, for centres, `⟨b + e⟩`.
pub fn classify(coeffs: &Coefficients) -> Stability {
    let products = coeffs.a.iter().map(|a| a * coeffs.d);
    let min = products.clone().fold(f64::INFINITY, f64::min);
    let max = products.fold(f64::NEG_INFINITY, f64::max);
    if min > 0.0 {
        return Stability::UnstableThm1;
    }
    if max < 0.0 {
        return match mean_growth(coeffs) {
            Ok(g) if g.mean_b_plus_e < -GROWTH_TOL => Stability::StableThm2,
            Ok(g) if g.mean_b_plus_e > GROWTH_TOL => Stability::UnstableThm2,
            _ => Stability::Indeterminate,
        };
    }
    Stability::Indeterminate
}

/// Branch together with its coefficients and label.
#[derive(Debug, Clone)]
pub struct ClassifiedBranch {
    pub branch: EquilibriumBranch,
    pub coefficients: Coefficients,
    pub growth: Option<Growth>,
}

/// Equilibria, coefficients and labels for every branch of `field`.
pub fn analyze(field: &AveragedField, grid: &TauGrid) -> Result<Vec<ClassifiedBranch>> {
    equilibria(field, grid)?
        .into_iter()
        .map(|mut branch| {
            let coefficients = coefficients(&branch, field, grid)?;
            let stability = classify(&coefficients);
            branch.stability = Some(stability);
            let growth = mean_growth(&coefficients).ok();
            Ok(ClassifiedBranch {
                branch,
                coefficients,
                growth,
            })
        })
        .collect()
}
