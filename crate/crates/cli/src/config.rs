//! Run configuration: strict JSON with canonical defaults.

use std::path::{Path, PathBuf};

use impactres::model::{Forcing, Oscillator};
use impactres::simulator::SimOptions;
use impactres::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub oscillator: Oscillator<f64>,
    pub forcing: Forcing<f64>,
    pub resonance: ResonanceRequest,
    pub simulation: SimulationBlock,
    pub output: OutputBlock,
    pub scan: Option<ScanBlock>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            oscillator: Oscillator {
                big_omega: 1.0,
                delta: 1.0,
                gamma: 0.1,
                epsilon: 0.005,
            },
            forcing: Forcing::CloseFrequencies {
                a1: 1.0,
                a2: 0.5,
                nu: 1.5,
                big_gamma: 1.0,
            },
            resonance: ResonanceRequest::default(),
            simulation: SimulationBlock::default(),
            output: OutputBlock::default(),
            scan: None,
        }
    }
}

/// Which resonance to analyse, plus the order range for `resonances`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceRequest {
    pub q: u32,
    pub p: u32,
    pub n_max: u32,
    /// Points on the slow-time grid.
    pub tau_samples: usize,
}

impl Default for ResonanceRequest {
    fn default() -> Self {
        Self {
            q: 1,
            p: 1,
            n_max: 3,
            tau_samples: impactres::resonance::DEFAULT_TAU_SAMPLES,
        }
    }
}

/// Starting state of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Impact on an equilibrium branch; `sign` absent picks the first stable one.
    Branch {
        #[serde(default)]
        sign: Option<i8>,
        #[serde(default)]
        l: u32,
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        t_min: f64,
    },
    State {
        t: f64,
        x: f64,
        v: f64,
    },
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self::Branch {
            sign: None,
            l: 0,
            offset: 0.0,
            t_min: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub graze_tol: f64,
    pub impact_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let o = SimOptions::default();
        Self {
            rtol: o.rtol,
            atol: o.atol,
            graze_tol: o.graze_tol,
            impact_tol: o.impact_tol,
        }
    }
}

const DEFAULT_IMPACTS: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationBlock {
    /// Time horizon; defaults to twice the time `max_impacts` resonant
    /// impacts take. The run also stops after `max_impacts`.
    pub horizon: Option<f64>,
    pub max_impacts: Option<usize>,
    pub initial: InitialCondition,
    pub tolerances: Tolerances,
    /// Leading fraction of events discarded before lock analysis.
    pub warmup: f64,
    pub samples_stride: Option<usize>,
}

impl Default for SimulationBlock {
    fn default() -> Self {
        Self {
            horizon: None,
            max_impacts: Some(DEFAULT_IMPACTS),
            initial: InitialCondition::default(),
            tolerances: Tolerances::default(),
            warmup: 0.2,
            samples_stride: None,
        }
    }
}

impl SimulationBlock {
    pub fn options(&self, frame_rate: Option<f64>) -> SimOptions {
        SimOptions {
            rtol: self.tolerances.rtol,
            atol: self.tolerances.atol,
            graze_tol: self.tolerances.graze_tol,
            impact_tol: self.tolerances.impact_tol,
            max_impacts: self.max_impacts,
            sample_stride: self.samples_stride,
            frame_rate,
            ..SimOptions::default()
        }
    }

    /// Explicit horizon, or room for twice `max_impacts` impacts of period `slot`.
    pub fn horizon_for(&self, slot: f64) -> f64 {
        self.horizon
            .unwrap_or_else(|| 2.0 * self.max_impacts.unwrap_or(DEFAULT_IMPACTS) as f64 * slot)
    }

    pub fn window(&self) -> f64 {
        1.0 - self.warmup
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Directory for CSV / JSON-lines files; stdout when absent.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    Nu,
    Gamma,
    Epsilon,
}

impl ScanAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanAxis::Nu => "nu",
            ScanAxis::Gamma => "gamma",
            ScanAxis::Epsilon => "epsilon",
        }
    }
}

/// Parameter grid: explicit `values`, or `count` points spanning `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub axis: ScanAxis,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    /// Run the lock-in simulation at each point.
    #[serde(default = "yes")]
    pub simulate: bool,
}

fn yes() -> bool {
    true
}

impl ScanBlock {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            if self.min.is_some() || self.max.is_some() || self.count.is_some() {
                return Err(Error::InvalidParameter(
                    "scan: give either values or min/max/count".into(),
                ));
            }
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(
                    "scan: values must be finite and non-empty".into(),
                ));
            }
            return Ok(v.clone());
        }
        match (self.min, self.max, self.count) {
            (Some(lo), Some(hi), Some(n)) if n >= 1 && lo.is_finite() && hi.is_finite() => {
                if n == 1 {
                    return Ok(vec![lo]);
                }
                let step = (hi - lo) / (n - 1) as f64;
                Ok((0..n).map(|i| lo + step * i as f64).collect())
            }
            _ => Err(Error::InvalidParameter(
                "scan: need values, or finite min, max and count >= 1".into(),
            )),
        }
    }
}

impl RunConfig {
    /// Parses and validates; empty input yields the canonical defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = if text.trim().is_empty() {
            RunConfig::default()
        } else {
            serde_json::from_str(text)
                .map_err(|e| Error::InvalidParameter(format!("config: {e}")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.oscillator.validate()?;
        self.forcing.validate()?;
        let r = &self.resonance;
        if r.q == 0 || r.p == 0 || r.n_max == 0 || r.tau_samples == 0 {
            return Err(Error::InvalidParameter(
                "resonance: q, p, n_max and tau_samples must be >= 1".into(),
            ));
        }
        let s = &self.simulation;
        if s.horizon.is_some_and(|h| !(h > 0.0)) {
            return Err(Error::InvalidParameter(
                "simulation.horizon must be > 0".into(),
            ));
        }
        if !(0.0..1.0).contains(&s.warmup) {
            return Err(Error::InvalidParameter(
                "simulation.warmup must be in [0, 1)".into(),
            ));
        }
        let t = &s.tolerances;
        if !(t.rtol > 0.0 && t.atol > 0.0 && t.graze_tol >= 0.0 && t.impact_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "simulation.tolerances must be positive".into(),
            ));
        }
        if s.samples_stride == Some(0) {
            return Err(Error::InvalidParameter(
                "samples_stride must be >= 1".into(),
            ));
        }
        if let Some(scan) = &self.scan {
            scan.grid()?;
        }
        Ok(())
    }

    /// Copy with one scanned parameter replaced.
    pub fn with_axis(&self, axis: ScanAxis, value: f64) -> Self {
        let mut out = self.clone();
        match axis {
            ScanAxis::Gamma => out.oscillator.gamma = value,
            ScanAxis::Epsilon => out.oscillator.epsilon = value,
            ScanAxis::Nu => match &mut out.forcing {
                Forcing::CloseFrequencies { nu, .. } | Forcing::DistinctFrequencies { nu, .. } => {
                    *nu = value
                }
            },
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_means_canonical() {
        assert_eq!(RunConfig::from_json("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"oscilator": {}}"#).is_err());
        assert!(RunConfig::from_json(
            r#"{"oscillator": {"big_omega": 1, "delta": 1, "gamma": 0.1, "epsilon": 0.01, "mass": 2}}"#
        )
        .is_err());
        assert!(RunConfig::from_json(r#"{"simulation": {"warm_up": 0.1}}"#).is_err());
    }

    #[test]
    fn invalid_physics_rejected() {
        assert!(RunConfig::from_json(
            r#"{"oscillator": {"big_omega": -1, "delta": 1, "gamma": 0.1, "epsilon": 0.01}}"#
        )
        .is_err());
        assert!(RunConfig::from_json(r#"{"simulation": {"warmup": 1.0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"scan": {"axis": "gamma"}}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let text = r#"{
            "forcing": {"kind": "distinct_frequencies", "amp_a": 1.5, "amp_b": 1, "nu": 1.5, "big_gamma": 1, "theta": 0.3},
            "resonance": {"q": 1, "p": 2},
            "simulation": {"initial": {"state": {"t": 0, "x": 1, "v": -1.7}}, "samples_stride": 10},
            "scan": {"axis": "epsilon", "values": [0.02, 0.01]}
        }"#;
        let a = RunConfig::from_json(text).unwrap();
        let b = RunConfig::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        let c = RunConfig::from_json(&RunConfig::default().to_json()).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn scan_grid() {
        let s = ScanBlock {
            axis: ScanAxis::Gamma,
            values: None,
            min: Some(0.0),
            max: Some(1.0),
            count: Some(5),
            simulate: false,
        };
        assert_eq!(s.grid().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
