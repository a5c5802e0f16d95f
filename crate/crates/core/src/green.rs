//! Conservative impact oscillator: frequency–impulse maps, the periodic
//! Green's function κ and its derivatives, and the impulse/phase coordinates
//! of a physical state.
//!
//! An impacting orbit of `x'' + Ω²x = 0` with limiter at `Δ` is written as
//! `x = −J κ(ψ, J)`, `x' = −J ω₀(J) κ_ψ(ψ, J)` where `ψ` advances by `2π`
//! per impact period and impacts happen at `ψ = 2lπ`. On `ψ ∈ [0, 2π)`
//!
//! ```text
//! κ(ψ, J) = cos[Ω₀(ψ − π)] / (2Ω sin πΩ₀),   Ω₀ = Ω / ω₀(J)
//! ```
//!
//! κ is continuous, κ_ψ jumps by `1/ω₀` at every impact.

use crate::error::{Error, Result};
use crate::model::Oscillator;
use crate::scalar::Scalar;

/// Half-width of the band around `ψ ≡ 0 (mod 2π)` treated as the jump point.
pub const JUMP_GUARD: f64 = 1e-12;

/// One-sided limit selector at the jump points `ψ = 2lπ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Limit from below (`ψ → 2π⁻`, pre-impact).
    Left,
    /// Limit from above (`ψ → 0⁺`, post-impact).
    Right,
}

fn sign_of_delta<T: Scalar>(cfg: &Oscillator<T>) -> i8 {
    if cfg.delta > T::zero() {
        1
    } else if cfg.delta < T::zero() {
        -1
    } else {
        0
    }
}

/// Frequency `ω₀(J)` of the impacting conservative oscillation.
pub fn omega0<T: Scalar>(j: T, cfg: &Oscillator<T>) -> Result<T> {
    if !(j >= T::zero()) {
        return Err(Error::Domain(format!("impulse must be >= 0, got {j}")));
    }
    let w = cfg.big_omega;
    let two = T::lit(2.0);
    match sign_of_delta(cfg) {
        0 => Ok(two * w),
        1 => {
            let u = j / (two * w * cfg.delta);
            Ok(T::PI() * w / (T::PI() - u.atan()))
        }
        _ => {
            if j == T::zero() {
                return Err(Error::Domain(
                    "zero impulse with negative limiter: frequency unbounded".into(),
                ));
            }
            let u = j / (two * w * cfg.delta);
            Ok(-T::PI() * w / u.atan())
        }
    }
}

/// Open band of impacting frequencies for the sign of `Δ`, `(lo, hi)`.
pub fn frequency_band<T: Scalar>(cfg: &Oscillator<T>) -> (T, T) {
    let w = cfg.big_omega;
    let two = T::lit(2.0);
    match sign_of_delta(cfg) {
        1 => (w, two * w),
        -1 => (two * w, T::infinity()),
        _ => (two * w, two * w),
    }
}

/// Inverse map `J(ω₀) = −2ΩΔ tan(πΩ/ω₀)`.
pub fn impulse_of_frequency<T: Scalar>(omega0: T, cfg: &Oscillator<T>) -> Result<T> {
    if sign_of_delta(cfg) == 0 {
        return Err(Error::Degenerate(
            "delta = 0: impulse is arbitrary at omega0 = 2 big_omega".into(),
        ));
    }
    let (lo, hi) = frequency_band(cfg);
    if !(omega0 > lo && omega0 < hi) {
        return Err(Error::Domain(format!(
            "omega0 = {omega0} outside impacting band ({lo}, {hi})"
        )));
    }
    let w = cfg.big_omega;
    let j = -T::lit(2.0) * w * cfg.delta * (T::PI() * w / omega0).tan();
    Ok(j.max(T::zero()))
}

/// `dω₀/dJ`; positive for `Δ > 0`, negative for `Δ < 0`.
pub fn omega0_prime<T: Scalar>(j: T, cfg: &Oscillator<T>) -> Result<T> {
    let sign = sign_of_delta(cfg);
    if sign == 0 {
        return Err(Error::Degenerate(
            "delta = 0: omega0 is constant in the impulse".into(),
        ));
    }
    // Domain checks shared with the forward map.
    omega0(j, cfg)?;
    let w = cfg.big_omega;
    let scale = T::lit(2.0) * w * cfg.delta;
    let u = j / scale;
    let denom_angle = if sign > 0 {
        T::PI() - u.atan()
    } else {
        u.atan()
    };
    Ok(T::PI() * w / (denom_angle * denom_angle * (T::one() + u * u) * scale))
}

/// `1/sin²(πΩ₀) = 1 + 4Ω²Δ²/J²`, valid on impacting orbits.
pub fn csc_sq_of_impulse<T: Scalar>(j: T, cfg: &Oscillator<T>) -> T {
    let r = T::lit(2.0) * cfg.big_omega * cfg.delta / j;
    T::one() + r * r
}

/// Mean of `κ_ψ²` over one period of ψ.
///
/// Exact value `(1 − sin 2πΩ₀ / (2πΩ₀)) / (8 ω₀² sin² πΩ₀)`. The bracket is
/// 1 only at `Ω₀ = 1/2` (`Δ = 0`).
pub fn mean_kappa_psi_sq<T: Scalar>(j: T, cfg: &Oscillator<T>) -> Result<T> {
    let k = Kernel::new(cfg, j)?;
    let two_pi_cap = T::TAU() * k.omega0_cap;
    let bracket = T::one() - two_pi_cap.sin() / two_pi_cap;
    let s = (T::PI() * k.omega0_cap).sin();
    Ok(bracket / (T::lit(8.0) * k.omega0 * k.omega0 * s * s))
}

/// Impulse of the conservative impacting orbit through `(x, v)`:
/// `J = 2 sqrt(v² + Ω²x² − Ω²Δ²)`.
pub fn action_of_state<T: Scalar>(x: T, v: T, cfg: &Oscillator<T>) -> Result<T> {
    let tol = T::lit(1e-9) * (T::one() + cfg.delta.abs());
    if x > cfg.delta + tol {
        return Err(Error::Domain(format!(
            "position {x} beyond limiter {}",
            cfg.delta
        )));
    }
    let w2 = cfg.big_omega * cfg.big_omega;
    let radicand = v * v + w2 * (x * x - cfg.delta * cfg.delta);
    if !(radicand > T::zero()) {
        return Err(Error::NonImpacting);
    }
    Ok(T::lit(2.0) * radicand.sqrt())
}

/// Phase `ψ ∈ [0, 2π)` of `(x, v)` on the orbit with impulse `J`.
///
/// Impact states (pre- or post-impact) map to `0`.
pub fn phase_of_state<T: Scalar>(x: T, v: T, j: T, cfg: &Oscillator<T>) -> Result<T> {
    if !(j > T::zero()) {
        return Err(Error::Domain(format!("impulse must be > 0, got {j}")));
    }
    let k = Kernel::new(cfg, j)?;
    let s = (T::PI() * k.omega0_cap).sin();
    let two = T::lit(2.0);
    let c = -two * cfg.big_omega * x * s / j;
    let sn = two * v * s / j;
    let resid = (c * c + sn * sn - T::one()).abs();
    let tol = T::lit(1e-8);
    if resid > tol {
        return Err(Error::InconsistentState(resid.to_f64_lossy()));
    }
    let angle = sn.atan2(c);
    // Reachable angles lie in [−πΩ₀, πΩ₀]; beyond that the point is past the limiter.
    let limit = T::PI() * k.omega0_cap;
    if angle.abs() > limit + T::lit(1e-8) {
        return Err(Error::InconsistentState(
            (angle.abs() - limit).to_f64_lossy(),
        ));
    }
    let psi = T::PI() + angle / k.omega0_cap;
    let psi = psi.max(T::zero());
    if psi >= T::TAU() - T::lit(JUMP_GUARD) {
        Ok(T::zero())
    } else {
        Ok(psi)
    }
}

/// Green's function of the conservative system evaluated at fixed impulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel<T> {
    pub big_omega: T,
    pub delta: T,
    /// Impulse `J`.
    pub j_val: T,
    /// `ω₀(J)`.
    pub omega0: T,
    /// `Ω₀ = Ω/ω₀`.
    pub omega0_cap: T,
    /// `T₀ = 2π/ω₀`.
    pub period: T,
    /// `ω₀′(J)`; zero for `Δ = 0`.
    pub omega0_prime: T,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(cfg: &Oscillator<T>, j: T) -> Result<Self> {
        if cfg.delta != T::zero() && !(j > T::zero()) {
            return Err(Error::Domain(format!(
                "impacting orbit needs impulse > 0, got {j}"
            )));
        }
        let omega0 = omega0(j, cfg)?;
        let omega0_prime = if cfg.delta == T::zero() {
            T::zero()
        } else {
            omega0_prime(j, cfg)?
        };
        Ok(Self {
            big_omega: cfg.big_omega,
            delta: cfg.delta,
            j_val: j,
            omega0,
            omega0_cap: cfg.big_omega / omega0,
            period: T::TAU() / omega0,
            omega0_prime,
        })
    }

    /// `ψ mod 2π`, and whether it sits on a jump point.
    fn reduce(&self, psi: T) -> (T, bool) {
        let s = psi.wrap_tau();
        let guard = T::lit(JUMP_GUARD);
        if s < guard || s > T::TAU() - guard {
            (T::zero(), true)
        } else {
            (s, false)
        }
    }

    /// `ψ − π` on the side selected at a jump.
    fn offset(&self, psi: T, side: Side) -> T {
        let (s, at_jump) = self.reduce(psi);
        if at_jump && side == Side::Left {
            T::PI()
        } else {
            s - T::PI()
        }
    }

    fn sin_pi_cap(&self) -> T {
        (T::PI() * self.omega0_cap).sin()
    }

    /// `dΩ₀/dJ = −Ω ω₀′ / ω₀²`.
    fn cap_rate(&self) -> T {
        -self.big_omega * self.omega0_prime / (self.omega0 * self.omega0)
    }

    /// κ(ψ, J).
    pub fn kappa(&self, psi: T) -> T {
        let w = self.offset(psi, Side::Right);
        (self.omega0_cap * w).cos() / (T::lit(2.0) * self.big_omega * self.sin_pi_cap())
    }

    /// κ_ψ(ψ, J); fails at the jump points, where only one-sided limits exist.
    pub fn kappa_psi(&self, psi: T) -> Result<T> {
        if self.reduce(psi).1 {
            return Err(Error::JumpPoint(psi.to_f64_lossy()));
        }
        Ok(self.kappa_psi_side(psi, Side::Right))
    }

    /// κ_ψ(ψ, J) with an explicit one-sided convention at jump points.
    ///
    /// At `ψ ≡ 0` the right limit is `+1/(2ω₀)` and the left limit `−1/(2ω₀)`.
    pub fn kappa_psi_side(&self, psi: T, side: Side) -> T {
        let w = self.offset(psi, side);
        -(self.omega0_cap * w).sin() / (T::lit(2.0) * self.omega0 * self.sin_pi_cap())
    }

    /// `∂κ/∂J` at fixed ψ (continuous in ψ).
    pub fn kappa_j(&self, psi: T) -> T {
        if self.omega0_prime == T::zero() {
            return T::zero();
        }
        let w = self.offset(psi, Side::Right);
        let s = self.sin_pi_cap();
        let c = (T::PI() * self.omega0_cap).cos();
        let a = self.omega0_cap * w;
        let d_cap =
            (-w * a.sin() * s - a.cos() * T::PI() * c) / (T::lit(2.0) * self.big_omega * s * s);
        d_cap * self.cap_rate()
    }

    /// `∂κ_ψ/∂J` at fixed ψ, one-sided at jump points.
    pub fn kappa_psi_j(&self, psi: T, side: Side) -> T {
        if self.omega0_prime == T::zero() {
            return T::zero();
        }
        let w = self.offset(psi, side);
        let s = self.sin_pi_cap();
        let c = (T::PI() * self.omega0_cap).cos();
        let a = self.omega0_cap * w;
        let num = (a.sin() + a * a.cos()) * s - self.omega0_cap * a.sin() * T::PI() * c;
        let d_cap = -num / (T::lit(2.0) * self.big_omega * s * s);
        d_cap * self.cap_rate()
    }

    /// Position `−J κ(ψ)` on the orbit.
    pub fn position(&self, psi: T) -> T {
        -self.j_val * self.kappa(psi)
    }

    /// Velocity `−J ω₀ κ_ψ(ψ)` on the orbit.
    pub fn velocity(&self, psi: T, side: Side) -> T {
        -self.j_val * self.omega0 * self.kappa_psi_side(psi, side)
    }
}

/// Fourier-series representations of κ and κ_ψ. These converge slowly and are
/// kept as independent cross-checks of the closed forms.
pub mod fourier {
    use super::Kernel;
    use crate::scalar::Scalar;

    /// Partial sum of κ with `terms` cosine terms.
    pub fn kappa_partial_sum<T: Scalar>(k: &Kernel<T>, psi: T, terms: usize) -> T {
        let cap2 = k.omega0_cap * k.omega0_cap;
        let mut acc = T::zero();
        // Smallest terms first.
        for n in (1..=terms).rev() {
            let kf = T::from_usize(n).unwrap();
            acc = acc + (kf * psi).cos() / (cap2 - kf * kf);
        }
        (T::one() / (T::TAU() * cap2) + acc / T::PI()) / k.omega0
    }

    /// Fejér (Cesàro) mean of the κ_ψ sine series.
    pub fn kappa_psi_fejer<T: Scalar>(k: &Kernel<T>, psi: T, terms: usize) -> T {
        let cap2 = k.omega0_cap * k.omega0_cap;
        let nf = T::from_usize(terms + 1).unwrap();
        let mut acc = T::zero();
        for n in (1..=terms).rev() {
            let kf = T::from_usize(n).unwrap();
            let weight = T::one() - kf / nf;
            acc = acc + weight * kf * (kf * psi).sin() / (cap2 - kf * kf);
        }
        -acc / (T::PI() * k.omega0)
    }
}
