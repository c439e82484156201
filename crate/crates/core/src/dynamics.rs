//! Load classes: quality-of-service envelopes, first-order storage dynamics
//! and the frequency weights every constraint is built from.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Quality-of-service parameters of one load class.
///
/// `c1` bounds the power deviation (kW), `c2` its increment over `delta`
/// hours (kW), `c3` the energy over any window of `horizon` hours (kWh) and
/// `c4` the storage variable (°C for thermal loads, kWh for batteries).
/// `eps[i]` is the tolerated violation probability of limit `i + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosEnvelope {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub delta: f64,
    pub horizon: f64,
    pub eps: [f64; 4],
}

impl QosEnvelope {
    pub fn new(c: [f64; 4], delta: f64, horizon: f64, eps: [f64; 4]) -> Result<Self> {
        if c.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "QoS limits must be positive, got {c:?}"
            )));
        }
        if !(delta > 0.0) || !(horizon > 0.0) || !delta.is_finite() || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ramp interval and energy window must be positive, got {delta}, {horizon}"
            )));
        }
        if eps.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "each eps must lie in (0, 1], got {eps:?}"
            )));
        }
        Ok(Self {
            c1: c[0],
            c2: c[1],
            c3: c[2],
            c4: c[3],
            delta,
            horizon,
            eps,
        })
    }

    /// Small commercial building: 4 kW, 0.8 kW per 10 s, 0.5 kWh per day,
    /// 1.11 °C, all ε = 0.05.
    pub fn small_building() -> Self {
        Self::new([4.0, 0.8, 0.5, 1.11], 1.0 / 360.0, 24.0, [0.05; 4]).expect("valid envelope")
    }

    /// Large commercial building: 40 kW, 8 kW per 10 s, 5 kWh per day,
    /// 1.11 °C, all ε = 0.05.
    pub fn large_building() -> Self {
        Self::new([40.0, 8.0, 5.0, 1.11], 1.0 / 360.0, 24.0, [0.05; 4]).expect("valid envelope")
    }

    pub fn with_eps(mut self, eps: [f64; 4]) -> Result<Self> {
        self.eps = eps;
        Self::new([self.c1, self.c2, self.c3, self.c4], self.delta, self.horizon, eps)
    }

    pub fn limits(&self) -> [f64; 4] {
        [self.c1, self.c2, self.c3, self.c4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    Thermal,
    Battery,
}

/// First-order storage dynamics `dθ/dt = −pole·θ + gain·P`, so
/// `H(s) = gain / (s + pole)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadDynamics {
    pub kind: LoadKind,
    pub pole: f64,
    pub gain: f64,
}

impl LoadDynamics {
    pub fn new(kind: LoadKind, pole: f64, gain: f64) -> Result<Self> {
        if !(pole > 0.0) || !pole.is_finite() {
            return Err(Error::InvalidParameter(format!("pole must be positive, got {pole}")));
        }
        if !(gain > 0.0) || !gain.is_finite() {
            return Err(Error::InvalidParameter(format!("gain must be positive, got {gain}")));
        }
        Ok(Self { kind, pole, gain })
    }

    /// Battery with leakage rate `alpha` (1/h); the stored energy is the
    /// storage variable, so the gain is 1.
    pub fn battery(alpha: f64) -> Result<Self> {
        Self::new(LoadKind::Battery, alpha, 1.0)
    }

    pub fn small_building() -> Self {
        Self::new(LoadKind::Thermal, 2.78, 0.3597).expect("valid dynamics")
    }

    pub fn large_building() -> Self {
        Self::new(LoadKind::Thermal, 177.6, 0.0450).expect("valid dynamics")
    }

    /// Steady-state storage deviation per kW of constant power deviation.
    pub fn dc_gain(&self) -> f64 {
        self.gain / self.pole
    }
}

/// RC thermal model of a building served by an HVAC unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    /// °C/kW
    pub r: f64,
    /// kWh/°C
    pub c: f64,
    pub eta_cop: f64,
    /// Setpoint, °C.
    pub theta_bar: f64,
}

impl ThermalParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("R", self.r), ("C", self.c), ("eta_cop", self.eta_cop)] {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.theta_bar.is_finite() {
            return Err(Error::InvalidParameter("setpoint must be finite".into()));
        }
        Ok(())
    }
}

/// Linearizes the RC model about its setpoint: pole `1/(RC)`, gain `η/C`.
pub fn derive_dynamics(tp: &ThermalParams) -> Result<LoadDynamics> {
    tp.validate()?;
    LoadDynamics::new(LoadKind::Thermal, 1.0 / (tp.r * tp.c), tp.eta_cop / tp.c)
}

/// Baseline power (kW) that holds the setpoint against ambient `theta0` and
/// internal gains `q_int`.
pub fn baseline_power(tp: &ThermalParams, theta0: f64, q_int: f64) -> Result<f64> {
    tp.validate()?;
    Ok(-(theta0 - tp.theta_bar) / (tp.eta_cop * tp.r) - q_int / tp.eta_cop)
}

/// |H(jω)|² = gain² / (ω² + pole²).
pub fn storage_gain_sq(dynamics: &LoadDynamics, omega: f64) -> f64 {
    dynamics.gain * dynamics.gain / (omega * omega + dynamics.pole * dynamics.pole)
}

/// |G(jω)|² of the moving energy window `G(s) = (1 − e^{−sT})/s`:
/// `2(1 − cos ωT)/ω²`, evaluated as `4·sin²(ωT/2)/ω²` for accuracy and as
/// `T²` at ω ≤ 10⁻⁶/T.
pub fn energy_window_gain_sq(horizon: f64, omega: f64) -> f64 {
    if omega <= 1e-6 / horizon {
        return horizon * horizon;
    }
    let s = (0.5 * omega * horizon).sin();
    4.0 * s * s / (omega * omega)
}

/// Spectral weight of the increment over `delta`: `2 − 2cos(ωδ)`.
pub fn ramp_weight(delta: f64, omega: f64) -> f64 {
    let s = (0.5 * omega * delta).sin();
    4.0 * s * s
}
