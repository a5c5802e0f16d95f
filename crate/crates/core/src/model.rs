//! Physical parameters and the two biharmonic forcing laws.
//!
//! The oscillator is `x'' + Ω²x = ε[f(t, τ) − γx']` for `x < Δ`, with an
//! elastic reflection `x' → −x'` whenever the trajectory reaches the limiter
//! `x = Δ`. Slow time is always an explicit argument: callers pass `τ = εt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameters of the perturbed impact oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Oscillator<T> {
    /// Natural frequency Ω of the linear part.
    pub big_omega: T,
    /// Limiter position Δ; any sign.
    pub delta: T,
    /// Viscous damping γ.
    pub gamma: T,
    /// Perturbation scale ε.
    pub epsilon: T,
}

impl<T: Scalar> Oscillator<T> {
    /// Upper end of the small-parameter regime the averaging results address.
    pub const SMALL_EPSILON: f64 = 0.1;

    pub fn new(big_omega: T, delta: T, gamma: T, epsilon: T) -> Result<Self> {
        let cfg = Self {
            big_omega,
            delta,
            gamma,
            epsilon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the physical invariants. `ε = 0` is accepted so that the
    /// conservative system can be simulated with the same machinery.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.big_omega, self.delta, self.gamma, self.epsilon]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(
                "non-finite oscillator parameter".into(),
            ));
        }
        if self.big_omega <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "big_omega must be > 0, got {}",
                self.big_omega
            )));
        }
        if self.gamma < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if self.epsilon < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `false` when ε exceeds the soft small-parameter threshold.
    pub fn in_small_regime(&self) -> bool {
        self.epsilon <= T::lit(Self::SMALL_EPSILON)
    }

    /// Slow time `τ = εt`.
    #[inline]
    pub fn slow_time(&self, t: T) -> T {
        self.epsilon * t
    }
}

/// Biharmonic excitation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Forcing<T> {
    /// `a₁ sin νt + a₂ sin(νt + Γτ)`: two close frequencies beating on the slow scale.
    CloseFrequencies { a1: T, a2: T, nu: T, big_gamma: T },
    /// `A sin(νt + θ) + B sin Γτ`: one fast and one slow harmonic.
    DistinctFrequencies {
        amp_a: T,
        amp_b: T,
        nu: T,
        big_gamma: T,
        theta: T,
    },
}

impl<T: Scalar> Forcing<T> {
    pub fn validate(&self) -> Result<()> {
        let (nu, big_gamma) = (self.nu(), self.big_gamma());
        if !(nu.is_finite() && nu > T::zero()) {
            return Err(Error::InvalidParameter(format!("nu must be > 0, got {nu}")));
        }
        if !(big_gamma.is_finite() && big_gamma > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "big_gamma must be > 0, got {big_gamma}"
            )));
        }
        match *self {
            Forcing::CloseFrequencies { a1, a2, .. } => {
                if !(a1.is_finite() && a2.is_finite() && a1 > T::zero() && a2 > T::zero()) {
                    return Err(Error::InvalidParameter(format!(
                        "close-frequency amplitudes must be > 0, got a1={a1}, a2={a2}"
                    )));
                }
                // E(τ) vanishes at Γτ = π when a₁ = a₂.
                if a1 == a2 {
                    return Err(Error::InvalidParameter(
                        "a1 == a2 makes the beat envelope vanish".into(),
                    ));
                }
            }
            Forcing::DistinctFrequencies {
                amp_a,
                amp_b,
                theta,
                ..
            } => {
                if !(amp_a.is_finite() && amp_b.is_finite() && theta.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "non-finite distinct-frequency parameter".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn nu(&self) -> T {
        match *self {
            Forcing::CloseFrequencies { nu, .. } | Forcing::DistinctFrequencies { nu, .. } => nu,
        }
    }

    pub fn big_gamma(&self) -> T {
        match *self {
            Forcing::CloseFrequencies { big_gamma, .. }
            | Forcing::DistinctFrequencies { big_gamma, .. } => big_gamma,
        }
    }

    /// Period of the slow modulation, `2π/Γ`.
    pub fn slow_period(&self) -> T {
        T::TAU() / self.big_gamma()
    }

    /// Force value `f(t, τ)`.
    pub fn force(&self, t: T, tau: T) -> T {
        match *self {
            Forcing::CloseFrequencies {
                a1,
                a2,
                nu,
                big_gamma,
            } => a1 * (nu * t).sin() + a2 * (nu * t + big_gamma * tau).sin(),
            Forcing::DistinctFrequencies {
                amp_a,
                amp_b,
                nu,
                big_gamma,
                theta,
            } => amp_a * (nu * t + theta).sin() + amp_b * (big_gamma * tau).sin(),
        }
    }

    /// Beat envelope of the close-frequency variant.
    pub fn envelope(&self, tau: T) -> Result<Envelope<T>> {
        match *self {
            Forcing::CloseFrequencies {
                a1, a2, big_gamma, ..
            } => {
                let c = a1 + a2 * (big_gamma * tau).cos();
                let s = a2 * (big_gamma * tau).sin();
                Ok(Envelope {
                    e_val: c.hypot(s),
                    beta_val: s.atan2(c).wrap_tau(),
                })
            }
            Forcing::DistinctFrequencies { .. } => Err(Error::Variant(
                "envelope is defined for close frequencies only".into(),
            )),
        }
    }

    /// Amplitude and phase of the fast `sin(νt + ·)` component at slow time `τ`.
    ///
    /// For the distinct-frequency variant these are the constants `(|A|, θ)`
    /// (θ shifted by π when `A < 0`); the slow term `B sin Γτ` is not part of
    /// the fast harmonic.
    pub fn fast_harmonic(&self, tau: T) -> Envelope<T> {
        match *self {
            Forcing::CloseFrequencies { .. } => self.envelope(tau).expect("close variant"),
            Forcing::DistinctFrequencies { amp_a, theta, .. } => {
                let beta = if amp_a < T::zero() {
                    theta + T::PI()
                } else {
                    theta
                };
                Envelope {
                    e_val: amp_a.abs(),
                    beta_val: beta.wrap_tau(),
                }
            }
        }
    }

    /// `true` when the fast harmonic does not depend on slow time.
    pub fn is_tau_independent(&self) -> bool {
        matches!(self, Forcing::DistinctFrequencies { .. })
    }
}

/// `E(τ)` and `β(τ)` with `f(t, τ) = E(τ) sin(νt + β(τ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope<T> {
    pub e_val: T,
    /// Phase in `[0, 2π)`.
    pub beta_val: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close() -> Forcing<f64> {
        Forcing::CloseFrequencies {
            a1: 1.0,
            a2: 0.5,
            nu: 1.5,
            big_gamma: 1.0,
        }
    }

    #[test]
    fn envelope_in_phase_and_antiphase() {
        let e = close().envelope(0.0).unwrap();
        assert!((e.e_val - 1.5).abs() < 1e-15);
        assert_eq!(e.beta_val, 0.0);
        let e = close().envelope(PI).unwrap();
        assert!((e.e_val - 0.5).abs() < 1e-15);
        assert!(e.beta_val.abs() < 1e-15);
    }

    #[test]
    fn envelope_quadrature() {
        let f = close();
        let e = f.envelope(PI / 2.0).unwrap();
        assert!((e.e_val - 1.25f64.sqrt()).abs() < 1e-15);
        assert!((e.beta_val - 0.5f64.atan()).abs() < 1e-15);
        // a₁ sin νt + a₂ sin(νt + π/2) = E sin(νt + β) on a t-grid
        for k in 0..200 {
            let t = 0.05 * k as f64;
            let lhs = (1.5 * t).sin() + 0.5 * (1.5 * t + PI / 2.0).sin();
            let rhs = e.e_val * (1.5 * t + e.beta_val).sin();
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn envelope_rejects_distinct_variant() {
        let f = Forcing::DistinctFrequencies {
            amp_a: 1.0,
            amp_b: 2.0,
            nu: 1.5,
            big_gamma: 1.0,
            theta: 0.0,
        };
        assert!(matches!(f.envelope(0.0), Err(Error::Variant(_))));
        assert_eq!(f.force(0.0, 0.0), 0.0);
    }

    #[test]
    fn force_direct_substitution() {
        let v = close().force(1.0, 0.01);
        assert_eq!(v, (1.5f64).sin() + 0.5 * (1.51f64).sin());
    }

    #[test]
    fn equal_amplitudes_rejected() {
        let f = Forcing::CloseFrequencies {
            a1: 0.7,
            a2: 0.7,
            nu: 1.0,
            big_gamma: 1.0,
        };
        assert!(f.validate().is_err());
        assert!(close().validate().is_ok());
    }

    #[test]
    fn oscillator_validation() {
        assert!(Oscillator::new(1.0, -1.0, 0.1, 0.005).is_ok());
        assert!(Oscillator::new(0.0, 1.0, 0.1, 0.005).is_err());
        assert!(Oscillator::new(1.0, 1.0, -0.1, 0.005).is_err());
        assert!(Oscillator::new(1.0, 1.0, 0.1, f64::NAN).is_err());
        assert!(!Oscillator::new(1.0, 1.0, 0.1, 0.2)
            .unwrap()
            .in_small_regime());
    }

    #[test]
    fn generic_over_f32() {
        let f = Forcing::<f32>::CloseFrequencies {
            a1: 1.0,
            a2: 0.5,
            nu: 1.5,
            big_gamma: 1.0,
        };
        let e = f.envelope(0.0).unwrap();
        assert!((e.e_val - 1.5).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn envelope_identity(t in -50.0f64..50.0, tau in -20.0f64..20.0,
                             a1 in 0.1f64..3.0, a2 in 0.1f64..3.0) {
            let f = Forcing::CloseFrequencies { a1, a2, nu: 1.3, big_gamma: 0.7 };
            let e = f.envelope(tau).unwrap();
            prop_assert!((f.force(t, tau) - e.e_val * (1.3 * t + e.beta_val).sin()).abs() < 1e-12);
            prop_assert!(e.e_val >= (a1 - a2).abs() - 1e-12);
            prop_assert!((0.0..std::f64::consts::TAU).contains(&e.beta_val));
            let shifted = f.envelope(tau + std::f64::consts::TAU / 0.7).unwrap();
            prop_assert!((shifted.e_val - e.e_val).abs() < 1e-12);
        }
    }
}
